//! Native parser for the JVM class-file format, up to major version 52.

mod archive;
mod code;
mod descriptor;
mod pool;
mod reader;

use std::path::{Path, PathBuf};

use bitflags::bitflags;

pub use archive::{enumerate_archive_classes, ArchiveError, ArchiveScan, EntryError};
pub use code::{decode_method_body, normalize, opcode, CodeBody, CodeError, Instruction, Operands};
pub use descriptor::{parse_field_descriptor, parse_method_descriptor, DescriptorError, FieldType, MethodDescriptor};
pub use pool::{decode_modified_utf8, ConstantEntry, ConstantPool, ConstantTag, MemberRef};

use pool::ConstantTag as T;
use reader::Reader;

pub const MAGIC: u32 = 0xCAFE_BABE;
/// Highest accepted major version (Java 8).
pub const MAX_MAJOR_VERSION: u16 = 52;

bitflags! {
    /// Access flags shared by classes, fields and methods. Bits that mean
    /// different things per context (0x0020, 0x0040, 0x0080) carry both names.
    #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
    pub struct AccessFlags: u16 {
        const PUBLIC = 0x0001;
        const PRIVATE = 0x0002;
        const PROTECTED = 0x0004;
        const STATIC = 0x0008;
        const FINAL = 0x0010;
        const SUPER = 0x0020;
        const SYNCHRONIZED = 0x0020;
        const VOLATILE = 0x0040;
        const BRIDGE = 0x0040;
        const TRANSIENT = 0x0080;
        const VARARGS = 0x0080;
        const NATIVE = 0x0100;
        const INTERFACE = 0x0200;
        const ABSTRACT = 0x0400;
        const STRICT = 0x0800;
        const SYNTHETIC = 0x1000;
        const ANNOTATION = 0x2000;
        const ENUM = 0x4000;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("bad magic 0x{0:08x}")]
    BadMagic(u32),
    #[error("unsupported class-file version {0} (maximum is {MAX_MAJOR_VERSION})")]
    UnsupportedVersion(u16),
    #[error("truncated input at byte {offset}")]
    Truncated { offset: usize },
    #[error("malformed constant pool: {0}")]
    MalformedPool(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExceptionEntry {
    pub start_pc: u16,
    pub end_pc: u16,
    pub handler_pc: u16,
    /// 0 for `finally` / catch-all.
    pub catch_type: u16,
}

/// The raw Code attribute; see [`decode_method_body`] for instructions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeAttribute {
    pub max_stack: u16,
    pub max_locals: u16,
    pub code: Vec<u8>,
    pub exception_table: Vec<ExceptionEntry>,
    /// (start_pc, line) pairs in attribute order.
    pub line_numbers: Option<Vec<(u16, u16)>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemberInfo {
    pub access_flags: AccessFlags,
    pub name: String,
    pub descriptor: String,
    pub code: Option<CodeAttribute>,
    /// ConstantValue attribute (fields only).
    pub constant_value: Option<u16>,
    /// Exceptions attribute (methods only), internal names.
    pub exceptions: Vec<String>,
    /// Skipped attributes: (name, length).
    pub skipped: Vec<(String, u32)>,
}

impl MemberInfo {
    pub fn is_static(&self) -> bool {
        self.access_flags.contains(AccessFlags::STATIC)
    }

    pub fn method_descriptor(&self) -> Option<MethodDescriptor> {
        parse_method_descriptor(&self.descriptor).ok()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InnerClass {
    pub inner_class: u16,
    pub outer_class: u16,
    pub inner_name: u16,
    pub access_flags: AccessFlags,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BootstrapMethod {
    pub method_ref: u16,
    pub arguments: Vec<u16>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ClassAttribute {
    SourceFile(u16),
    InnerClasses(Vec<InnerClass>),
    BootstrapMethods(Vec<BootstrapMethod>),
    Skipped { name: String, length: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassFile {
    pub magic: u32,
    pub minor_version: u16,
    pub major_version: u16,
    pub constant_pool: ConstantPool,
    pub access_flags: AccessFlags,
    pub this_class: u16,
    pub super_class: u16,
    pub interfaces: Vec<u16>,
    pub fields: Vec<MemberInfo>,
    pub methods: Vec<MemberInfo>,
    pub attributes: Vec<ClassAttribute>,
    pub source_path: Option<PathBuf>,
}

impl ClassFile {
    /// Internal (slash-separated) name of this class.
    pub fn this_class_name(&self) -> &str {
        self.constant_pool.class_name(self.this_class).unwrap_or_default()
    }

    pub fn super_class_name(&self) -> Option<&str> {
        self.constant_pool.class_name(self.super_class)
    }

    pub fn interface_names(&self) -> Vec<&str> {
        self.interfaces.iter().filter_map(|&i| self.constant_pool.class_name(i)).collect()
    }

    pub fn source_file(&self) -> Option<&str> {
        self.attributes.iter().find_map(|a| match a {
            ClassAttribute::SourceFile(i) => self.constant_pool.utf8(*i),
            _ => None,
        })
    }

    pub fn bootstrap_methods(&self) -> &[BootstrapMethod] {
        self.attributes
            .iter()
            .find_map(|a| match a {
                ClassAttribute::BootstrapMethods(v) => Some(v.as_slice()),
                _ => None,
            })
            .unwrap_or(&[])
    }

    /// Class-level attributes that were length-skipped.
    pub fn opaque_attributes(&self) -> Vec<(String, u32)> {
        self.attributes
            .iter()
            .filter_map(|a| match a {
                ClassAttribute::Skipped { name, length } => Some((name.clone(), *length)),
                _ => None,
            })
            .collect()
    }

    pub fn method(&self, name: &str, descriptor: &str) -> Option<&MemberInfo> {
        self.methods.iter().find(|m| m.name == name && m.descriptor == descriptor)
    }

    pub fn field(&self, name: &str, descriptor: &str) -> Option<&MemberInfo> {
        self.fields.iter().find(|m| m.name == name && m.descriptor == descriptor)
    }
}

/// Dotted name of the class, taken from `this_class` only.
pub fn fully_qualified_name(class: &ClassFile) -> String {
    class.this_class_name().replace('/', ".")
}

/// Parses one class file. `origin` is recorded as `source_path`.
pub fn parse_class_file(bytes: &[u8], origin: impl AsRef<Path>) -> Result<ClassFile, ParseError> {
    let mut r = Reader::new(bytes);
    let magic = r.u32()?;
    if magic != MAGIC {
        return Err(ParseError::BadMagic(magic));
    }
    let minor_version = r.u16()?;
    let major_version = r.u16()?;
    if major_version > MAX_MAJOR_VERSION {
        return Err(ParseError::UnsupportedVersion(major_version));
    }
    let pool = ConstantPool::read(&mut r)?;
    let access_flags = AccessFlags::from_bits_retain(r.u16()?);
    let this_class = r.u16()?;
    pool.require(this_class, T::ClassRef, "this_class")?;
    if pool.class_name(this_class).is_none_or(str::is_empty) {
        return Err(ParseError::MalformedPool("this_class has an empty name".into()));
    }
    let super_class = r.u16()?;
    if super_class != 0 {
        pool.require(super_class, T::ClassRef, "super_class")?;
    }
    let n = r.u16()?;
    let mut interfaces = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let i = r.u16()?;
        pool.require(i, T::ClassRef, "interface")?;
        interfaces.push(i);
    }
    let fields = read_members(&mut r, &pool, false)?;
    let methods = read_members(&mut r, &pool, true)?;
    let attributes = read_class_attributes(&mut r, &pool)?;
    Ok(ClassFile {
        magic,
        minor_version,
        major_version,
        constant_pool: pool,
        access_flags,
        this_class,
        super_class,
        interfaces,
        fields,
        methods,
        attributes,
        source_path: Some(origin.as_ref().to_path_buf()),
    })
}

fn utf8_at<'p>(pool: &'p ConstantPool, idx: u16, what: &str) -> Result<&'p str, ParseError> {
    pool.utf8(idx)
        .ok_or_else(|| ParseError::MalformedPool(format!("{what}: #{idx} is not Utf8")))
}

fn read_members(r: &mut Reader<'_>, pool: &ConstantPool, methods: bool) -> Result<Vec<MemberInfo>, ParseError> {
    let n = r.u16()?;
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let access_flags = AccessFlags::from_bits_retain(r.u16()?);
        let name = utf8_at(pool, r.u16()?, "member name")?.to_string();
        let descriptor = utf8_at(pool, r.u16()?, "member descriptor")?.to_string();
        let ok = if methods {
            parse_method_descriptor(&descriptor).is_ok()
        } else {
            parse_field_descriptor(&descriptor).is_ok()
        };
        if !ok {
            return Err(ParseError::MalformedPool(format!("{name}: bad descriptor {descriptor:?}")));
        }
        let mut m = MemberInfo {
            access_flags,
            name,
            descriptor,
            code: None,
            constant_value: None,
            exceptions: Vec::new(),
            skipped: Vec::new(),
        };
        let count = r.u16()?;
        for _ in 0..count {
            let attr_name = utf8_at(pool, r.u16()?, "attribute name")?;
            let len = r.u32()?;
            let mut a = r.sub(len as usize)?;
            match (attr_name, methods) {
                ("Code", true) => m.code = Some(read_code(&mut a, pool)?),
                ("ConstantValue", false) => {
                    let idx = a.u16()?;
                    match pool.get(idx).map(ConstantEntry::tag) {
                        Some(T::Integer | T::Float | T::Long | T::Double | T::StringRef) => {}
                        _ => return Err(ParseError::MalformedPool(format!("ConstantValue #{idx}"))),
                    }
                    m.constant_value = Some(idx);
                }
                ("Exceptions", true) => {
                    let k = a.u16()?;
                    for _ in 0..k {
                        let i = a.u16()?;
                        let name = pool
                            .class_name(i)
                            .ok_or_else(|| ParseError::MalformedPool(format!("Exceptions #{i}")))?;
                        m.exceptions.push(name.to_string());
                    }
                }
                _ => m.skipped.push((attr_name.to_string(), len)),
            }
        }
        out.push(m);
    }
    Ok(out)
}

fn read_code(r: &mut Reader<'_>, pool: &ConstantPool) -> Result<CodeAttribute, ParseError> {
    let max_stack = r.u16()?;
    let max_locals = r.u16()?;
    let len = r.u32()?;
    let code = r.bytes(len as usize)?.to_vec();
    let n = r.u16()?;
    let mut exception_table = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let e = ExceptionEntry {
            start_pc: r.u16()?,
            end_pc: r.u16()?,
            handler_pc: r.u16()?,
            catch_type: r.u16()?,
        };
        if e.catch_type != 0 {
            pool.require(e.catch_type, T::ClassRef, "catch_type")?;
        }
        exception_table.push(e);
    }
    let mut line_numbers: Option<Vec<(u16, u16)>> = None;
    let count = r.u16()?;
    for _ in 0..count {
        let name = utf8_at(pool, r.u16()?, "attribute name")?;
        let len = r.u32()?;
        let mut a = r.sub(len as usize)?;
        if name == "LineNumberTable" {
            let k = a.u16()?;
            let lines = line_numbers.get_or_insert_with(Vec::new);
            for _ in 0..k {
                lines.push((a.u16()?, a.u16()?));
            }
        }
    }
    Ok(CodeAttribute { max_stack, max_locals, code, exception_table, line_numbers })
}

fn read_class_attributes(r: &mut Reader<'_>, pool: &ConstantPool) -> Result<Vec<ClassAttribute>, ParseError> {
    let count = r.u16()?;
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let name = utf8_at(pool, r.u16()?, "attribute name")?;
        let len = r.u32()?;
        let mut a = r.sub(len as usize)?;
        out.push(match name {
            "SourceFile" => {
                let i = a.u16()?;
                utf8_at(pool, i, "SourceFile")?;
                ClassAttribute::SourceFile(i)
            }
            "InnerClasses" => {
                let k = a.u16()?;
                let mut v = Vec::with_capacity(k as usize);
                for _ in 0..k {
                    let ic = InnerClass {
                        inner_class: a.u16()?,
                        outer_class: a.u16()?,
                        inner_name: a.u16()?,
                        access_flags: AccessFlags::from_bits_retain(a.u16()?),
                    };
                    pool.require(ic.inner_class, T::ClassRef, "inner_class")?;
                    if ic.outer_class != 0 {
                        pool.require(ic.outer_class, T::ClassRef, "outer_class")?;
                    }
                    if ic.inner_name != 0 {
                        pool.require(ic.inner_name, T::Utf8, "inner_name")?;
                    }
                    v.push(ic);
                }
                ClassAttribute::InnerClasses(v)
            }
            "BootstrapMethods" => {
                let k = a.u16()?;
                let mut v = Vec::with_capacity(k as usize);
                for _ in 0..k {
                    let method_ref = a.u16()?;
                    pool.require(method_ref, T::MethodHandle, "bootstrap method")?;
                    let nargs = a.u16()?;
                    let mut arguments = Vec::with_capacity(nargs as usize);
                    for _ in 0..nargs {
                        let arg = a.u16()?;
                        if pool.get(arg).is_none() {
                            return Err(ParseError::MalformedPool(format!("bootstrap argument #{arg}")));
                        }
                        arguments.push(arg);
                    }
                    v.push(BootstrapMethod { method_ref, arguments });
                }
                ClassAttribute::BootstrapMethods(v)
            }
            _ => ClassAttribute::Skipped { name: name.to_string(), length: len },
        });
    }
    Ok(out)
}
