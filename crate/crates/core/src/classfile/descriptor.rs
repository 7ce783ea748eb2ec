use std::fmt;

/// A field type from a descriptor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FieldType {
    Byte,
    Char,
    Double,
    Float,
    Int,
    Long,
    Short,
    Boolean,
    Object(String),
    Array(Box<FieldType>),
}

impl FieldType {
    /// Stack and local-variable slots occupied by a value of this type.
    pub fn slots(&self) -> u16 {
        match self {
            FieldType::Long | FieldType::Double => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for FieldType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldType::Byte => f.write_str("byte"),
            FieldType::Char => f.write_str("char"),
            FieldType::Double => f.write_str("double"),
            FieldType::Float => f.write_str("float"),
            FieldType::Int => f.write_str("int"),
            FieldType::Long => f.write_str("long"),
            FieldType::Short => f.write_str("short"),
            FieldType::Boolean => f.write_str("boolean"),
            FieldType::Object(n) => f.write_str(&n.replace('/', ".")),
            FieldType::Array(t) => write!(f, "{t}[]"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MethodDescriptor {
    pub params: Vec<FieldType>,
    /// `None` for void.
    pub ret: Option<FieldType>,
}

impl MethodDescriptor {
    pub fn param_slots(&self) -> u16 {
        self.params.iter().map(FieldType::slots).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DescriptorError(pub String);

impl fmt::Display for DescriptorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid descriptor {:?}", self.0)
    }
}

fn field_at(s: &str, i: &mut usize) -> Option<FieldType> {
    let b = s.as_bytes();
    let c = *b.get(*i)?;
    *i += 1;
    Some(match c {
        b'B' => FieldType::Byte,
        b'C' => FieldType::Char,
        b'D' => FieldType::Double,
        b'F' => FieldType::Float,
        b'I' => FieldType::Int,
        b'J' => FieldType::Long,
        b'S' => FieldType::Short,
        b'Z' => FieldType::Boolean,
        b'L' => {
            let end = s[*i..].find(';')? + *i;
            let name = &s[*i..end];
            if name.is_empty() || name.contains(['.', '[']) {
                return None;
            }
            *i = end + 1;
            FieldType::Object(name.to_string())
        }
        b'[' => FieldType::Array(Box::new(field_at(s, i)?)),
        _ => return None,
    })
}

pub fn parse_field_descriptor(s: &str) -> Result<FieldType, DescriptorError> {
    let mut i = 0;
    match field_at(s, &mut i) {
        Some(t) if i == s.len() => Ok(t),
        _ => Err(DescriptorError(s.to_string())),
    }
}

pub fn parse_method_descriptor(s: &str) -> Result<MethodDescriptor, DescriptorError> {
    let err = || DescriptorError(s.to_string());
    if !s.starts_with('(') {
        return Err(err());
    }
    let mut i = 1;
    let mut params = Vec::new();
    while s.as_bytes().get(i) != Some(&b')') {
        params.push(field_at(s, &mut i).ok_or_else(err)?);
    }
    i += 1;
    let ret = if &s[i..] == "V" {
        None
    } else {
        let t = field_at(s, &mut i).ok_or_else(err)?;
        if i != s.len() {
            return Err(err());
        }
        Some(t)
    };
    Ok(MethodDescriptor { params, ret })
}
