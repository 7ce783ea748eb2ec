//! A small class-file assembler.
//!
//! Produces class files laid out the way `javac -source 8 -target 8` lays
//! them out (constant pool first-use order, `Code` with `LineNumberTable`,
//! trailing `SourceFile`). It shares no code with the analyzer it is used to
//! test: everything here is written from the class-file format itself.

pub mod corpus;
pub mod jar;
pub mod op;

use std::collections::HashMap;

pub const JAVA8: u16 = 52;

pub mod acc {
    pub const PUBLIC: u16 = 0x0001;
    pub const PRIVATE: u16 = 0x0002;
    pub const PROTECTED: u16 = 0x0004;
    pub const STATIC: u16 = 0x0008;
    pub const FINAL: u16 = 0x0010;
    pub const SUPER: u16 = 0x0020;
    pub const INTERFACE: u16 = 0x0200;
    pub const ABSTRACT: u16 = 0x0400;
}

/// Array type codes for `newarray`.
pub mod atype {
    pub const BOOLEAN: u8 = 4;
    pub const CHAR: u8 = 5;
    pub const FLOAT: u8 = 6;
    pub const DOUBLE: u8 = 7;
    pub const BYTE: u8 = 8;
    pub const SHORT: u8 = 9;
    pub const INT: u8 = 10;
    pub const LONG: u8 = 11;
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum PoolKey {
    Utf8(String),
    Int(i32),
    Float(u32),
    Long(i64),
    Double(u64),
    Class(u16),
    Str(u16),
    Field(u16, u16),
    Method(u16, u16),
    IMethod(u16, u16),
    Nat(u16, u16),
    Handle(u8, u16),
    MType(u16),
    Indy(u16, u16),
}

/// Constant pool under construction. Entries are deduplicated.
#[derive(Default)]
pub struct Pool {
    bytes: Vec<u8>,
    next: u16,
    index: HashMap<PoolKey, u16>,
}

impl Pool {
    fn new() -> Self {
        Pool {
            bytes: Vec::new(),
            next: 1,
            index: HashMap::new(),
        }
    }

    pub fn count(&self) -> u16 {
        self.next
    }

    fn intern(&mut self, key: PoolKey, encode: impl FnOnce(&mut Vec<u8>)) -> u16 {
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let wide = matches!(key, PoolKey::Long(_) | PoolKey::Double(_));
        let i = self.next;
        encode(&mut self.bytes);
        self.next += if wide { 2 } else { 1 };
        self.index.insert(key, i);
        i
    }

    pub fn utf8(&mut self, s: &str) -> u16 {
        let enc = modified_utf8(s);
        self.intern(PoolKey::Utf8(s.to_string()), |b| {
            b.push(1);
            b.extend_from_slice(&(enc.len() as u16).to_be_bytes());
            b.extend_from_slice(&enc);
        })
    }

    /// Appends a raw Utf8 entry whose bytes are not re-encoded. Never deduplicated.
    pub fn raw_utf8(&mut self, raw: &[u8]) -> u16 {
        let i = self.next;
        self.bytes.push(1);
        self.bytes.extend_from_slice(&(raw.len() as u16).to_be_bytes());
        self.bytes.extend_from_slice(raw);
        self.next += 1;
        i
    }

    pub fn int(&mut self, v: i32) -> u16 {
        self.intern(PoolKey::Int(v), |b| {
            b.push(3);
            b.extend_from_slice(&v.to_be_bytes());
        })
    }

    pub fn float(&mut self, v: f32) -> u16 {
        self.intern(PoolKey::Float(v.to_bits()), |b| {
            b.push(4);
            b.extend_from_slice(&v.to_bits().to_be_bytes());
        })
    }

    pub fn long(&mut self, v: i64) -> u16 {
        self.intern(PoolKey::Long(v), |b| {
            b.push(5);
            b.extend_from_slice(&v.to_be_bytes());
        })
    }

    pub fn double(&mut self, v: f64) -> u16 {
        self.intern(PoolKey::Double(v.to_bits()), |b| {
            b.push(6);
            b.extend_from_slice(&v.to_bits().to_be_bytes());
        })
    }

    pub fn class(&mut self, internal: &str) -> u16 {
        let n = self.utf8(internal);
        self.intern(PoolKey::Class(n), |b| {
            b.push(7);
            b.extend_from_slice(&n.to_be_bytes());
        })
    }

    pub fn string(&mut self, s: &str) -> u16 {
        let n = self.utf8(s);
        self.intern(PoolKey::Str(n), |b| {
            b.push(8);
            b.extend_from_slice(&n.to_be_bytes());
        })
    }

    pub fn name_and_type(&mut self, name: &str, desc: &str) -> u16 {
        let n = self.utf8(name);
        let d = self.utf8(desc);
        self.intern(PoolKey::Nat(n, d), |b| {
            b.push(12);
            b.extend_from_slice(&n.to_be_bytes());
            b.extend_from_slice(&d.to_be_bytes());
        })
    }

    fn member(&mut self, tag: u8, owner: &str, name: &str, desc: &str) -> u16 {
        let c = self.class(owner);
        let nt = self.name_and_type(name, desc);
        let key = match tag {
            9 => PoolKey::Field(c, nt),
            10 => PoolKey::Method(c, nt),
            _ => PoolKey::IMethod(c, nt),
        };
        self.intern(key, |b| {
            b.push(tag);
            b.extend_from_slice(&c.to_be_bytes());
            b.extend_from_slice(&nt.to_be_bytes());
        })
    }

    pub fn field_ref(&mut self, owner: &str, name: &str, desc: &str) -> u16 {
        self.member(9, owner, name, desc)
    }

    pub fn method_ref(&mut self, owner: &str, name: &str, desc: &str) -> u16 {
        self.member(10, owner, name, desc)
    }

    pub fn interface_method_ref(&mut self, owner: &str, name: &str, desc: &str) -> u16 {
        self.member(11, owner, name, desc)
    }

    pub fn method_handle(&mut self, kind: u8, reference: u16) -> u16 {
        self.intern(PoolKey::Handle(kind, reference), |b| {
            b.push(15);
            b.push(kind);
            b.extend_from_slice(&reference.to_be_bytes());
        })
    }

    pub fn method_type(&mut self, desc: &str) -> u16 {
        let d = self.utf8(desc);
        self.intern(PoolKey::MType(d), |b| {
            b.push(16);
            b.extend_from_slice(&d.to_be_bytes());
        })
    }

    pub fn invoke_dynamic(&mut self, bootstrap: u16, name: &str, desc: &str) -> u16 {
        let nt = self.name_and_type(name, desc);
        self.intern(PoolKey::Indy(bootstrap, nt), |b| {
            b.push(18);
            b.extend_from_slice(&bootstrap.to_be_bytes());
            b.extend_from_slice(&nt.to_be_bytes());
        })
    }
}

/// Encodes text in the class-file flavour of UTF-8: NUL as two bytes and
/// supplementary characters as surrogate pairs.
pub fn modified_utf8(s: &str) -> Vec<u8> {
    let mut out = Vec::with_capacity(s.len());
    for unit in s.encode_utf16() {
        match unit {
            0x0001..=0x007F => out.push(unit as u8),
            0x0000 | 0x0080..=0x07FF => {
                out.push(0xC0 | (unit >> 6) as u8);
                out.push(0x80 | (unit & 0x3F) as u8);
            }
            _ => {
                out.push(0xE0 | (unit >> 12) as u8);
                out.push(0x80 | ((unit >> 6) & 0x3F) as u8);
                out.push(0x80 | (unit & 0x3F) as u8);
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Label(usize);

enum Fixup {
    /// 16-bit branch offset at `at`, relative to `base`.
    Short { at: usize, base: usize, label: Label },
    /// 32-bit branch offset at `at`, relative to `base`.
    Wide { at: usize, base: usize, label: Label },
}

struct Handler {
    start: Label,
    end: Label,
    handler: Label,
    catch_type: u16,
}

/// Bytecode for one method body.
pub struct Code {
    pub bytes: Vec<u8>,
    pub max_stack: u16,
    pub max_locals: u16,
    labels: Vec<Option<usize>>,
    fixups: Vec<Fixup>,
    handlers: Vec<Handler>,
    lines: Vec<(u16, u16)>,
}

impl Code {
    pub fn new(max_stack: u16, max_locals: u16) -> Self {
        Code {
            bytes: Vec::new(),
            max_stack,
            max_locals,
            labels: Vec::new(),
            fixups: Vec::new(),
            handlers: Vec::new(),
            lines: Vec::new(),
        }
    }

    pub fn offset(&self) -> usize {
        self.bytes.len()
    }

    pub fn new_label(&mut self) -> Label {
        self.labels.push(None);
        Label(self.labels.len() - 1)
    }

    pub fn bind(&mut self, label: Label) -> &mut Self {
        self.labels[label.0] = Some(self.bytes.len());
        self
    }

    pub fn here(&mut self) -> Label {
        let l = self.new_label();
        self.bind(l);
        l
    }

    /// Records that the next instruction starts source line `line`.
    pub fn line(&mut self, line: u16) -> &mut Self {
        let pc = self.bytes.len() as u16;
        self.lines.push((pc, line));
        self
    }

    pub fn op(&mut self, opcode: u8) -> &mut Self {
        self.bytes.push(opcode);
        self
    }

    pub fn op_u8(&mut self, opcode: u8, operand: u8) -> &mut Self {
        self.bytes.push(opcode);
        self.bytes.push(operand);
        self
    }

    pub fn op_u16(&mut self, opcode: u8, operand: u16) -> &mut Self {
        self.bytes.push(opcode);
        self.bytes.extend_from_slice(&operand.to_be_bytes());
        self
    }

    pub fn raw(&mut self, bytes: &[u8]) -> &mut Self {
        self.bytes.extend_from_slice(bytes);
        self
    }

    /// Pushes an int constant using the shortest javac encoding.
    pub fn iconst(&mut self, pool: &mut Pool, v: i32) -> &mut Self {
        match v {
            -1..=5 => self.op((op::ICONST_0 as i32 + v) as u8),
            -128..=127 => self.op_u8(op::BIPUSH, v as i8 as u8),
            -32768..=32767 => self.op_u16(op::SIPUSH, v as i16 as u16),
            _ => {
                let i = pool.int(v);
                self.ldc_index(i)
            }
        }
    }

    pub fn lconst(&mut self, pool: &mut Pool, v: i64) -> &mut Self {
        match v {
            0 => self.op(op::LCONST_0),
            1 => self.op(op::LCONST_1),
            _ => {
                let i = pool.long(v);
                self.op_u16(op::LDC2_W, i)
            }
        }
    }

    pub fn ldc_index(&mut self, index: u16) -> &mut Self {
        if index <= 0xFF {
            self.op_u8(op::LDC, index as u8)
        } else {
            self.op_u16(op::LDC_W, index)
        }
    }

    pub fn ldc_string(&mut self, pool: &mut Pool, s: &str) -> &mut Self {
        let i = pool.string(s);
        self.ldc_index(i)
    }

    fn local(&mut self, short_base: u8, long_op: u8, slot: u16) -> &mut Self {
        if slot <= 3 {
            self.op(short_base + slot as u8)
        } else if slot <= 0xFF {
            self.op_u8(long_op, slot as u8)
        } else {
            self.op(op::WIDE);
            self.op_u16(long_op, slot)
        }
    }

    pub fn iload(&mut self, slot: u16) -> &mut Self {
        self.local(op::ILOAD_0, op::ILOAD, slot)
    }
    pub fn lload(&mut self, slot: u16) -> &mut Self {
        self.local(op::LLOAD_0, op::LLOAD, slot)
    }
    pub fn dload(&mut self, slot: u16) -> &mut Self {
        self.local(op::DLOAD_0, op::DLOAD, slot)
    }
    pub fn aload(&mut self, slot: u16) -> &mut Self {
        self.local(op::ALOAD_0, op::ALOAD, slot)
    }
    pub fn istore(&mut self, slot: u16) -> &mut Self {
        self.local(op::ISTORE_0, op::ISTORE, slot)
    }
    pub fn lstore(&mut self, slot: u16) -> &mut Self {
        self.local(op::LSTORE_0, op::LSTORE, slot)
    }
    pub fn dstore(&mut self, slot: u16) -> &mut Self {
        self.local(op::DSTORE_0, op::DSTORE, slot)
    }
    pub fn astore(&mut self, slot: u16) -> &mut Self {
        self.local(op::ASTORE_0, op::ASTORE, slot)
    }

    pub fn iinc(&mut self, slot: u16, delta: i16) -> &mut Self {
        if slot <= 0xFF && (-128..=127).contains(&delta) {
            self.op(op::IINC);
            self.bytes.push(slot as u8);
            self.bytes.push(delta as i8 as u8);
        } else {
            self.op(op::WIDE);
            self.op(op::IINC);
            self.bytes.extend_from_slice(&slot.to_be_bytes());
            self.bytes.extend_from_slice(&delta.to_be_bytes());
        }
        self
    }

    pub fn invokevirtual(&mut self, pool: &mut Pool, owner: &str, name: &str, desc: &str) -> &mut Self {
        let i = pool.method_ref(owner, name, desc);
        self.op_u16(op::INVOKEVIRTUAL, i)
    }

    pub fn invokespecial(&mut self, pool: &mut Pool, owner: &str, name: &str, desc: &str) -> &mut Self {
        let i = pool.method_ref(owner, name, desc);
        self.op_u16(op::INVOKESPECIAL, i)
    }

    pub fn invokestatic(&mut self, pool: &mut Pool, owner: &str, name: &str, desc: &str) -> &mut Self {
        let i = pool.method_ref(owner, name, desc);
        self.op_u16(op::INVOKESTATIC, i)
    }

    pub fn invokeinterface(&mut self, pool: &mut Pool, owner: &str, name: &str, desc: &str) -> &mut Self {
        let i = pool.interface_method_ref(owner, name, desc);
        self.op_u16(op::INVOKEINTERFACE, i);
        self.bytes.push(arg_slots(desc) + 1);
        self.bytes.push(0);
        self
    }

    pub fn invokedynamic(&mut self, index: u16) -> &mut Self {
        self.op_u16(op::INVOKEDYNAMIC, index);
        self.bytes.extend_from_slice(&[0, 0]);
        self
    }

    pub fn getstatic(&mut self, pool: &mut Pool, owner: &str, name: &str, desc: &str) -> &mut Self {
        let i = pool.field_ref(owner, name, desc);
        self.op_u16(op::GETSTATIC, i)
    }

    pub fn putstatic(&mut self, pool: &mut Pool, owner: &str, name: &str, desc: &str) -> &mut Self {
        let i = pool.field_ref(owner, name, desc);
        self.op_u16(op::PUTSTATIC, i)
    }

    pub fn getfield(&mut self, pool: &mut Pool, owner: &str, name: &str, desc: &str) -> &mut Self {
        let i = pool.field_ref(owner, name, desc);
        self.op_u16(op::GETFIELD, i)
    }

    pub fn putfield(&mut self, pool: &mut Pool, owner: &str, name: &str, desc: &str) -> &mut Self {
        let i = pool.field_ref(owner, name, desc);
        self.op_u16(op::PUTFIELD, i)
    }

    pub fn new_object(&mut self, pool: &mut Pool, class: &str) -> &mut Self {
        let i = pool.class(class);
        self.op_u16(op::NEW, i)
    }

    pub fn checkcast(&mut self, pool: &mut Pool, class: &str) -> &mut Self {
        let i = pool.class(class);
        self.op_u16(op::CHECKCAST, i)
    }

    pub fn anewarray(&mut self, pool: &mut Pool, class: &str) -> &mut Self {
        let i = pool.class(class);
        self.op_u16(op::ANEWARRAY, i)
    }

    pub fn newarray(&mut self, atype: u8) -> &mut Self {
        self.op_u8(op::NEWARRAY, atype)
    }

    /// `new byte[]{...}` exactly as javac emits an array initializer.
    pub fn byte_array(&mut self, pool: &mut Pool, values: &[i8]) -> &mut Self {
        self.iconst(pool, values.len() as i32);
        self.newarray(atype::BYTE);
        for (i, v) in values.iter().enumerate() {
            self.op(op::DUP);
            self.iconst(pool, i as i32);
            self.iconst(pool, *v as i32);
            self.op(op::BASTORE);
        }
        self
    }

    pub fn branch(&mut self, opcode: u8, target: Label) -> &mut Self {
        let base = self.bytes.len();
        self.bytes.push(opcode);
        self.fixups.push(Fixup::Short {
            at: self.bytes.len(),
            base,
            label: target,
        });
        self.bytes.extend_from_slice(&[0, 0]);
        self
    }

    pub fn goto_w(&mut self, target: Label) -> &mut Self {
        let base = self.bytes.len();
        self.bytes.push(op::GOTO_W);
        self.fixups.push(Fixup::Wide {
            at: self.bytes.len(),
            base,
            label: target,
        });
        self.bytes.extend_from_slice(&[0, 0, 0, 0]);
        self
    }

    fn pad_switch(&mut self) {
        while !self.bytes.len().is_multiple_of(4) {
            self.bytes.push(0);
        }
    }

    fn wide_ref(&mut self, base: usize, label: Label) {
        self.fixups.push(Fixup::Wide {
            at: self.bytes.len(),
            base,
            label,
        });
        self.bytes.extend_from_slice(&[0, 0, 0, 0]);
    }

    pub fn tableswitch(&mut self, low: i32, default: Label, targets: &[Label]) -> &mut Self {
        let base = self.bytes.len();
        self.bytes.push(op::TABLESWITCH);
        self.pad_switch();
        self.wide_ref(base, default);
        let high = low + targets.len() as i32 - 1;
        self.bytes.extend_from_slice(&low.to_be_bytes());
        self.bytes.extend_from_slice(&high.to_be_bytes());
        for t in targets {
            self.wide_ref(base, *t);
        }
        self
    }

    pub fn lookupswitch(&mut self, default: Label, pairs: &[(i32, Label)]) -> &mut Self {
        let base = self.bytes.len();
        self.bytes.push(op::LOOKUPSWITCH);
        self.pad_switch();
        self.wide_ref(base, default);
        self.bytes.extend_from_slice(&(pairs.len() as u32).to_be_bytes());
        let mut sorted = pairs.to_vec();
        sorted.sort_by_key(|(k, _)| *k);
        for (k, t) in sorted {
            self.bytes.extend_from_slice(&k.to_be_bytes());
            self.wide_ref(base, t);
        }
        self
    }

    pub fn try_catch(&mut self, start: Label, end: Label, handler: Label, catch_type: u16) -> &mut Self {
        self.handlers.push(Handler {
            start,
            end,
            handler,
            catch_type,
        });
        self
    }

    fn resolve(&self, label: Label) -> usize {
        self.labels[label.0].expect("unbound label")
    }

    /// Patches branch offsets and encodes the `Code` attribute body.
    pub fn finish(mut self, pool: &mut Pool) -> Vec<u8> {
        let fixups = std::mem::take(&mut self.fixups);
        for f in fixups {
            match f {
                Fixup::Short { at, base, label } => {
                    let rel = self.resolve(label) as i64 - base as i64;
                    self.bytes[at..at + 2].copy_from_slice(&(rel as i16).to_be_bytes());
                }
                Fixup::Wide { at, base, label } => {
                    let rel = self.resolve(label) as i64 - base as i64;
                    self.bytes[at..at + 4].copy_from_slice(&(rel as i32).to_be_bytes());
                }
            }
        }
        let mut out = Vec::new();
        out.extend_from_slice(&self.max_stack.to_be_bytes());
        out.extend_from_slice(&self.max_locals.to_be_bytes());
        out.extend_from_slice(&(self.bytes.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.bytes);
        out.extend_from_slice(&(self.handlers.len() as u16).to_be_bytes());
        for h in &self.handlers {
            for l in [h.start, h.end, h.handler] {
                out.extend_from_slice(&(self.resolve(l) as u16).to_be_bytes());
            }
            out.extend_from_slice(&h.catch_type.to_be_bytes());
        }
        if self.lines.is_empty() {
            out.extend_from_slice(&0u16.to_be_bytes());
        } else {
            out.extend_from_slice(&1u16.to_be_bytes());
            let name = pool.utf8("LineNumberTable");
            out.extend_from_slice(&name.to_be_bytes());
            out.extend_from_slice(&(2 + 4 * self.lines.len() as u32).to_be_bytes());
            out.extend_from_slice(&(self.lines.len() as u16).to_be_bytes());
            for (pc, line) in &self.lines {
                out.extend_from_slice(&pc.to_be_bytes());
                out.extend_from_slice(&line.to_be_bytes());
            }
        }
        out
    }
}

/// Number of argument slots a method descriptor consumes (longs and doubles count twice).
pub fn arg_slots(desc: &str) -> u8 {
    let bytes = desc.as_bytes();
    let mut i = 1;
    let mut slots = 0u8;
    while bytes[i] != b')' {
        let mut array = false;
        while bytes[i] == b'[' {
            array = true;
            i += 1;
        }
        if bytes[i] == b'L' {
            while bytes[i] != b';' {
                i += 1;
            }
        }
        slots += if !array && (bytes[i] == b'J' || bytes[i] == b'D') { 2 } else { 1 };
        i += 1;
    }
    slots
}

struct Member {
    access: u16,
    name: u16,
    desc: u16,
    attributes: Vec<(u16, Vec<u8>)>,
}

/// Builder for one class file.
pub struct ClassBuilder {
    pub pool: Pool,
    pub major: u16,
    pub minor: u16,
    access: u16,
    this_class: u16,
    super_class: u16,
    interfaces: Vec<u16>,
    fields: Vec<Member>,
    methods: Vec<Member>,
    attributes: Vec<(u16, Vec<u8>)>,
    internal_name: String,
    super_name: String,
}

impl ClassBuilder {
    /// A public class extending `java/lang/Object`.
    pub fn new(internal_name: &str) -> Self {
        Self::with_super(internal_name, "java/lang/Object", acc::PUBLIC | acc::SUPER)
    }

    pub fn with_super(internal_name: &str, super_name: &str, access: u16) -> Self {
        let mut pool = Pool::new();
        let this_class = pool.class(internal_name);
        let super_class = pool.class(super_name);
        ClassBuilder {
            pool,
            major: JAVA8,
            minor: 0,
            access,
            this_class,
            super_class,
            interfaces: Vec::new(),
            fields: Vec::new(),
            methods: Vec::new(),
            attributes: Vec::new(),
            internal_name: internal_name.to_string(),
            super_name: super_name.to_string(),
        }
    }

    pub fn internal_name(&self) -> &str {
        &self.internal_name
    }

    pub fn version(mut self, major: u16) -> Self {
        self.major = major;
        self
    }

    pub fn interface(&mut self, internal: &str) -> &mut Self {
        let c = self.pool.class(internal);
        self.interfaces.push(c);
        self
    }

    pub fn source_file(&mut self, name: &str) -> &mut Self {
        let attr = self.pool.utf8("SourceFile");
        let v = self.pool.utf8(name);
        self.attributes.push((attr, v.to_be_bytes().to_vec()));
        self
    }

    /// Adds an attribute the analyzer does not know about.
    pub fn opaque_attribute(&mut self, name: &str, payload: &[u8]) -> &mut Self {
        let n = self.pool.utf8(name);
        self.attributes.push((n, payload.to_vec()));
        self
    }

    pub fn field(&mut self, access: u16, name: &str, desc: &str) -> &mut Self {
        let name = self.pool.utf8(name);
        let desc = self.pool.utf8(desc);
        self.fields.push(Member {
            access,
            name,
            desc,
            attributes: Vec::new(),
        });
        self
    }

    /// A field carrying a `ConstantValue` attribute pointing at `value_index`.
    pub fn constant_field(&mut self, access: u16, name: &str, desc: &str, value_index: u16) -> &mut Self {
        let n = self.pool.utf8(name);
        let d = self.pool.utf8(desc);
        let attr = self.pool.utf8("ConstantValue");
        self.fields.push(Member {
            access,
            name: n,
            desc: d,
            attributes: vec![(attr, value_index.to_be_bytes().to_vec())],
        });
        self
    }

    pub fn method(&mut self, access: u16, name: &str, desc: &str, code: Code) -> &mut Self {
        let n = self.pool.utf8(name);
        let d = self.pool.utf8(desc);
        let attr = self.pool.utf8("Code");
        let body = code.finish(&mut self.pool);
        self.methods.push(Member {
            access,
            name: n,
            desc: d,
            attributes: vec![(attr, body)],
        });
        self
    }

    /// Adds an `Exceptions` attribute to the most recently added method.
    pub fn throws(&mut self, classes: &[&str]) -> &mut Self {
        let attr = self.pool.utf8("Exceptions");
        let mut body = (classes.len() as u16).to_be_bytes().to_vec();
        for c in classes {
            let i = self.pool.class(c);
            body.extend_from_slice(&i.to_be_bytes());
        }
        self.methods.last_mut().expect("no method").attributes.push((attr, body));
        self
    }

    /// Adds the `InnerClasses` entry javac writes for a static nested class.
    pub fn inner_class(&mut self, inner: &str, outer: &str, simple: &str, access: u16) -> &mut Self {
        let attr = self.pool.utf8("InnerClasses");
        let i = self.pool.class(inner);
        let o = self.pool.class(outer);
        let n = self.pool.utf8(simple);
        let mut body = 1u16.to_be_bytes().to_vec();
        for v in [i, o, n, access] {
            body.extend_from_slice(&v.to_be_bytes());
        }
        self.attributes.push((attr, body));
        self
    }

    /// Adds a `BootstrapMethods` attribute with the given `(handle, args)` entries.
    pub fn bootstrap_methods(&mut self, entries: &[(u16, Vec<u16>)]) -> &mut Self {
        let attr = self.pool.utf8("BootstrapMethods");
        let mut body = (entries.len() as u16).to_be_bytes().to_vec();
        for (handle, args) in entries {
            body.extend_from_slice(&handle.to_be_bytes());
            body.extend_from_slice(&(args.len() as u16).to_be_bytes());
            for a in args {
                body.extend_from_slice(&a.to_be_bytes());
            }
        }
        self.attributes.push((attr, body));
        self
    }

    pub fn abstract_method(&mut self, access: u16, name: &str, desc: &str) -> &mut Self {
        let n = self.pool.utf8(name);
        let d = self.pool.utf8(desc);
        self.methods.push(Member {
            access: access | acc::ABSTRACT,
            name: n,
            desc: d,
            attributes: Vec::new(),
        });
        self
    }

    /// The implicit `public <init>()V` javac emits for a class without constructors.
    pub fn default_constructor(&mut self, line: u16) -> &mut Self {
        let super_name = self.super_name.clone();
        let mut c = Code::new(1, 1);
        c.line(line);
        c.aload(0);
        c.invokespecial(&mut self.pool, &super_name, "<init>", "()V");
        c.op(op::RETURN);
        self.method(acc::PUBLIC, "<init>", "()V", c)
    }

    pub fn build(self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&0xCAFEBABEu32.to_be_bytes());
        out.extend_from_slice(&self.minor.to_be_bytes());
        out.extend_from_slice(&self.major.to_be_bytes());
        out.extend_from_slice(&self.pool.count().to_be_bytes());
        out.extend_from_slice(&self.pool.bytes);
        out.extend_from_slice(&self.access.to_be_bytes());
        out.extend_from_slice(&self.this_class.to_be_bytes());
        out.extend_from_slice(&self.super_class.to_be_bytes());
        out.extend_from_slice(&(self.interfaces.len() as u16).to_be_bytes());
        for i in &self.interfaces {
            out.extend_from_slice(&i.to_be_bytes());
        }
        for members in [&self.fields, &self.methods] {
            out.extend_from_slice(&(members.len() as u16).to_be_bytes());
            for m in members.iter() {
                out.extend_from_slice(&m.access.to_be_bytes());
                out.extend_from_slice(&m.name.to_be_bytes());
                out.extend_from_slice(&m.desc.to_be_bytes());
                write_attributes(&mut out, &m.attributes);
            }
        }
        write_attributes(&mut out, &self.attributes);
        out
    }
}

fn write_attributes(out: &mut Vec<u8>, attrs: &[(u16, Vec<u8>)]) {
    out.extend_from_slice(&(attrs.len() as u16).to_be_bytes());
    for (name, body) in attrs {
        out.extend_from_slice(&name.to_be_bytes());
        out.extend_from_slice(&(body.len() as u32).to_be_bytes());
        out.extend_from_slice(body);
    }
}
