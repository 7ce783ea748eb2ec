//! Def-use construction and backward slicing from catalogued call sites.

use std::fmt;

use crate::catalog::Catalog;
use crate::classfile::{decode_method_body, fully_qualified_name, opcode, ConstantEntry, ConstantPool, ConstantTag};
use crate::intake::ScanSet;

mod index;
mod ir;
mod resolve;

pub use index::{IrIndex, MethodId};
pub use ir::{build_method_ir, IrError, MethodIR, Source, Use, ValueSet};
pub use resolve::backward_slice;

pub const DEFAULT_MAX_DEPTH: u32 = 3;

/// A statically known value.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i32),
    Long(i64),
    Float(f32),
    Double(f64),
    Text(String),
    Bytes(Vec<u8>),
    /// UTF-16 code units.
    Chars(Vec<u16>),
    Null,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Long(v) => write!(f, "{v}L"),
            Value::Float(v) => write!(f, "{v}f"),
            Value::Double(v) => write!(f, "{v}d"),
            Value::Text(s) => write!(f, "{s:?}"),
            Value::Bytes(b) => {
                f.write_str("0x")?;
                b.iter().try_for_each(|x| write!(f, "{x:02x}"))
            }
            Value::Chars(c) => write!(f, "{:?}", String::from_utf16_lossy(c)),
            Value::Null => f.write_str("null"),
        }
    }
}

/// Why an argument could not be resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UnknownReason {
    DepthExceeded,
    DynamicValue,
    UnsupportedConstruct,
    ExternalInput,
}

impl UnknownReason {
    pub fn as_str(self) -> &'static str {
        match self {
            UnknownReason::DepthExceeded => "depth_exceeded",
            UnknownReason::DynamicValue => "dynamic_value",
            UnknownReason::UnsupportedConstruct => "unsupported_construct",
            UnknownReason::ExternalInput => "external_input",
        }
    }
}

impl fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Resolved {
    Constant(Value),
    /// Value of a static final field of a scanned class.
    FieldConstant { owner: String, name: String, value: Value },
    Unknown(UnknownReason),
}

impl Resolved {
    pub fn value(&self) -> Option<&Value> {
        match self {
            Resolved::Constant(v) | Resolved::FieldConstant { value: v, .. } => Some(v),
            Resolved::Unknown(_) => None,
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Resolved::Unknown(_))
    }
}

impl fmt::Display for Resolved {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolved::Constant(v) => v.fmt(f),
            Resolved::FieldConstant { owner, name, value } => write!(f, "{owner}.{name} = {value}"),
            Resolved::Unknown(r) => write!(f, "unknown ({r})"),
        }
    }
}

/// A catalogued method.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ApiTarget {
    /// Dotted class name.
    pub class: String,
    pub name: String,
    pub descriptor: String,
}

/// One call site of a catalogued API.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceCriterion {
    pub method: MethodId,
    pub class_fqn: String,
    pub method_name: String,
    pub method_descriptor: String,
    pub offset: u32,
    pub line: Option<u32>,
    pub target: ApiTarget,
    /// Declared-parameter positions, receiver excluded, ascending.
    pub watched: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Slice {
    pub criterion: SliceCriterion,
    /// One entry per watched index, in the criterion's order.
    pub resolved_args: Vec<(u8, Resolved)>,
    /// Most caller hops any argument needed.
    pub depth_reached: u32,
}

impl Slice {
    pub fn arg(&self, index: u8) -> Option<&Resolved> {
        self.resolved_args.iter().find(|(k, _)| *k == index).map(|(_, r)| r)
    }

    pub fn has_unknown(&self) -> bool {
        self.resolved_args.iter().any(|(_, r)| r.is_unknown())
    }
}

/// Every invoke of a catalogued API in the scan set, ordered by class,
/// method and offset. Methods whose code does not decode are skipped.
pub fn find_criteria(scan_set: &ScanSet, catalog: &Catalog) -> Vec<SliceCriterion> {
    let mut out = Vec::new();
    for (ci, class) in scan_set.classes.iter().enumerate() {
        let fqn = fully_qualified_name(class);
        for (mi, member) in class.methods.iter().enumerate() {
            if member.code.is_none() {
                continue;
            }
            let Ok(body) = decode_method_body(member) else { continue };
            for insn in &body.instructions {
                if !opcode::is_invoke(insn.opcode) || insn.opcode == opcode::INVOKEDYNAMIC {
                    continue;
                }
                let Some(target) = insn.pool_index().and_then(|i| class.constant_pool.member_ref(i)) else {
                    continue;
                };
                let mut watched: Vec<u8> = catalog
                    .lookup(&target.owner, &target.name, &target.descriptor)
                    .flat_map(|e| e.watched.iter().copied())
                    .collect();
                if watched.is_empty() {
                    continue;
                }
                watched.sort_unstable();
                watched.dedup();
                out.push(SliceCriterion {
                    method: MethodId { class: ci, method: mi },
                    class_fqn: fqn.clone(),
                    method_name: member.name.clone(),
                    method_descriptor: member.descriptor.clone(),
                    offset: insn.offset,
                    line: body.line_at(insn.offset),
                    target: ApiTarget {
                        class: target.owner.replace('/', "."),
                        name: target.name,
                        descriptor: target.descriptor,
                    },
                    watched,
                });
            }
        }
    }
    out.sort_by(|a, b| {
        (&a.class_fqn, &a.method_name, &a.method_descriptor, a.offset)
            .cmp(&(&b.class_fqn, &b.method_name, &b.method_descriptor, b.offset))
    });
    out
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConstantError {
    #[error("pool entry tagged {found:?} is not a loadable constant")]
    TagMismatch { found: ConstantTag },
    #[error("string constant points at a non-Utf8 entry")]
    DanglingString,
}

/// Decodes a literal pool entry. A StringRef follows one indirection.
pub fn resolve_constant(entry: &ConstantEntry, pool: &ConstantPool) -> Result<Value, ConstantError> {
    match entry {
        ConstantEntry::Utf8(s) => Ok(Value::Text(s.clone())),
        ConstantEntry::Integer(v) => Ok(Value::Int(*v)),
        ConstantEntry::Long(v) => Ok(Value::Long(*v)),
        ConstantEntry::Float(v) => Ok(Value::Float(*v)),
        ConstantEntry::Double(v) => Ok(Value::Double(*v)),
        ConstantEntry::StringRef { string_index } => {
            pool.utf8(*string_index).map(|s| Value::Text(s.to_string())).ok_or(ConstantError::DanglingString)
        }
        other => Err(ConstantError::TagMismatch { found: other.tag() }),
    }
}
