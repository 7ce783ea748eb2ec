use super::reader::Reader;
use super::ParseError;

/// One constant-pool slot.
#[derive(Clone, Debug, PartialEq)]
pub enum ConstantEntry {
    Utf8(String),
    Integer(i32),
    Float(f32),
    Long(i64),
    Double(f64),
    ClassRef { name_index: u16 },
    StringRef { string_index: u16 },
    FieldRef { class_index: u16, name_and_type_index: u16 },
    MethodRef { class_index: u16, name_and_type_index: u16 },
    InterfaceMethodRef { class_index: u16, name_and_type_index: u16 },
    NameAndType { name_index: u16, descriptor_index: u16 },
    MethodHandle { kind: u8, reference_index: u16 },
    MethodType { descriptor_index: u16 },
    InvokeDynamic { bootstrap_index: u16, name_and_type_index: u16 },
    /// Slot 0 and the second slot of every Long/Double.
    Placeholder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstantTag {
    Utf8,
    Integer,
    Float,
    Long,
    Double,
    ClassRef,
    StringRef,
    FieldRef,
    MethodRef,
    InterfaceMethodRef,
    NameAndType,
    MethodHandle,
    MethodType,
    InvokeDynamic,
    Placeholder,
}

impl ConstantEntry {
    pub fn tag(&self) -> ConstantTag {
        match self {
            ConstantEntry::Utf8(_) => ConstantTag::Utf8,
            ConstantEntry::Integer(_) => ConstantTag::Integer,
            ConstantEntry::Float(_) => ConstantTag::Float,
            ConstantEntry::Long(_) => ConstantTag::Long,
            ConstantEntry::Double(_) => ConstantTag::Double,
            ConstantEntry::ClassRef { .. } => ConstantTag::ClassRef,
            ConstantEntry::StringRef { .. } => ConstantTag::StringRef,
            ConstantEntry::FieldRef { .. } => ConstantTag::FieldRef,
            ConstantEntry::MethodRef { .. } => ConstantTag::MethodRef,
            ConstantEntry::InterfaceMethodRef { .. } => ConstantTag::InterfaceMethodRef,
            ConstantEntry::NameAndType { .. } => ConstantTag::NameAndType,
            ConstantEntry::MethodHandle { .. } => ConstantTag::MethodHandle,
            ConstantEntry::MethodType { .. } => ConstantTag::MethodType,
            ConstantEntry::InvokeDynamic { .. } => ConstantTag::InvokeDynamic,
            ConstantEntry::Placeholder => ConstantTag::Placeholder,
        }
    }
}

/// A symbolic field or method reference, resolved to text.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MemberRef {
    pub owner: String,
    pub name: String,
    pub descriptor: String,
}

/// The 1-indexed constant pool. Index 0 holds a placeholder so indices
/// match the on-disk numbering.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstantPool {
    entries: Vec<ConstantEntry>,
}

impl ConstantPool {
    pub(crate) fn read(r: &mut Reader<'_>) -> Result<Self, ParseError> {
        let count = r.u16()?;
        if count == 0 {
            return Err(ParseError::MalformedPool("constant_pool_count is zero".into()));
        }
        let mut entries = Vec::with_capacity(count as usize);
        entries.push(ConstantEntry::Placeholder);
        while entries.len() < count as usize {
            let index = entries.len();
            let tag = r.u8()?;
            let entry = match tag {
                1 => {
                    let len = r.u16()? as usize;
                    let raw = r.bytes(len)?;
                    let s = decode_modified_utf8(raw)
                        .map_err(|e| ParseError::MalformedPool(format!("#{index}: {e}")))?;
                    ConstantEntry::Utf8(s)
                }
                3 => ConstantEntry::Integer(r.u32()? as i32),
                4 => ConstantEntry::Float(f32::from_bits(r.u32()?)),
                5 => ConstantEntry::Long(r.u64()? as i64),
                6 => ConstantEntry::Double(f64::from_bits(r.u64()?)),
                7 => ConstantEntry::ClassRef { name_index: r.u16()? },
                8 => ConstantEntry::StringRef { string_index: r.u16()? },
                9 => ConstantEntry::FieldRef { class_index: r.u16()?, name_and_type_index: r.u16()? },
                10 => ConstantEntry::MethodRef { class_index: r.u16()?, name_and_type_index: r.u16()? },
                11 => ConstantEntry::InterfaceMethodRef { class_index: r.u16()?, name_and_type_index: r.u16()? },
                12 => ConstantEntry::NameAndType { name_index: r.u16()?, descriptor_index: r.u16()? },
                15 => ConstantEntry::MethodHandle { kind: r.u8()?, reference_index: r.u16()? },
                16 => ConstantEntry::MethodType { descriptor_index: r.u16()? },
                18 => ConstantEntry::InvokeDynamic { bootstrap_index: r.u16()?, name_and_type_index: r.u16()? },
                t => return Err(ParseError::MalformedPool(format!("#{index}: unknown tag {t}"))),
            };
            let wide = matches!(entry, ConstantEntry::Long(_) | ConstantEntry::Double(_));
            entries.push(entry);
            if wide {
                if entries.len() >= count as usize {
                    return Err(ParseError::MalformedPool(format!("#{index}: wide constant in last slot")));
                }
                entries.push(ConstantEntry::Placeholder);
            }
        }
        let pool = ConstantPool { entries };
        pool.check_references()?;
        Ok(pool)
    }

    fn check_references(&self) -> Result<(), ParseError> {
        use ConstantTag as T;
        for (i, e) in self.entries.iter().enumerate() {
            let want = |idx: u16, tag: T| self.expect(i, idx, &[tag]);
            match *e {
                ConstantEntry::ClassRef { name_index } => want(name_index, T::Utf8)?,
                ConstantEntry::StringRef { string_index } => want(string_index, T::Utf8)?,
                ConstantEntry::FieldRef { class_index, name_and_type_index }
                | ConstantEntry::MethodRef { class_index, name_and_type_index }
                | ConstantEntry::InterfaceMethodRef { class_index, name_and_type_index } => {
                    want(class_index, T::ClassRef)?;
                    want(name_and_type_index, T::NameAndType)?;
                }
                ConstantEntry::NameAndType { name_index, descriptor_index } => {
                    want(name_index, T::Utf8)?;
                    want(descriptor_index, T::Utf8)?;
                }
                ConstantEntry::MethodHandle { kind, reference_index } => {
                    let allowed: &[T] = match kind {
                        1..=4 => &[T::FieldRef],
                        5 | 8 => &[T::MethodRef],
                        6 | 7 => &[T::MethodRef, T::InterfaceMethodRef],
                        9 => &[T::InterfaceMethodRef],
                        k => {
                            return Err(ParseError::MalformedPool(format!("#{i}: method handle kind {k}")));
                        }
                    };
                    self.expect(i, reference_index, allowed)?;
                }
                ConstantEntry::MethodType { descriptor_index } => want(descriptor_index, T::Utf8)?,
                ConstantEntry::InvokeDynamic { name_and_type_index, .. } => want(name_and_type_index, T::NameAndType)?,
                _ => {}
            }
        }
        Ok(())
    }

    fn expect(&self, from: usize, idx: u16, tags: &[ConstantTag]) -> Result<(), ParseError> {
        match self.get(idx) {
            Some(e) if tags.contains(&e.tag()) => Ok(()),
            Some(e) => Err(ParseError::MalformedPool(format!(
                "#{from} refers to #{idx} ({:?}), expected {:?}",
                e.tag(),
                tags
            ))),
            None => Err(ParseError::MalformedPool(format!("#{from} refers to missing #{idx}"))),
        }
    }

    pub(crate) fn require(&self, idx: u16, tag: ConstantTag, what: &str) -> Result<(), ParseError> {
        match self.get(idx) {
            Some(e) if e.tag() == tag => Ok(()),
            _ => Err(ParseError::MalformedPool(format!("{what}: #{idx} is not {tag:?}"))),
        }
    }

    /// Number of slots including slot 0, i.e. the on-disk `constant_pool_count`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.len() <= 1
    }

    pub fn get(&self, idx: u16) -> Option<&ConstantEntry> {
        if idx == 0 {
            return None;
        }
        self.entries.get(idx as usize)
    }

    pub fn entries(&self) -> impl Iterator<Item = (u16, &ConstantEntry)> {
        self.entries.iter().enumerate().skip(1).map(|(i, e)| (i as u16, e))
    }

    pub fn utf8(&self, idx: u16) -> Option<&str> {
        match self.get(idx)? {
            ConstantEntry::Utf8(s) => Some(s),
            _ => None,
        }
    }

    pub fn class_name(&self, idx: u16) -> Option<&str> {
        match self.get(idx)? {
            ConstantEntry::ClassRef { name_index } => self.utf8(*name_index),
            _ => None,
        }
    }

    pub fn string(&self, idx: u16) -> Option<&str> {
        match self.get(idx)? {
            ConstantEntry::StringRef { string_index } => self.utf8(*string_index),
            _ => None,
        }
    }

    pub fn name_and_type(&self, idx: u16) -> Option<(&str, &str)> {
        match self.get(idx)? {
            ConstantEntry::NameAndType { name_index, descriptor_index } => {
                Some((self.utf8(*name_index)?, self.utf8(*descriptor_index)?))
            }
            _ => None,
        }
    }

    /// Resolves a Field/Method/InterfaceMethod reference.
    pub fn member_ref(&self, idx: u16) -> Option<MemberRef> {
        let (class_index, nat) = match self.get(idx)? {
            ConstantEntry::FieldRef { class_index, name_and_type_index }
            | ConstantEntry::MethodRef { class_index, name_and_type_index }
            | ConstantEntry::InterfaceMethodRef { class_index, name_and_type_index } => {
                (*class_index, *name_and_type_index)
            }
            _ => return None,
        };
        let (name, descriptor) = self.name_and_type(nat)?;
        Some(MemberRef {
            owner: self.class_name(class_index)?.to_string(),
            name: name.to_string(),
            descriptor: descriptor.to_string(),
        })
    }

    /// Name and descriptor of an InvokeDynamic entry.
    pub fn invoke_dynamic(&self, idx: u16) -> Option<(u16, &str, &str)> {
        match self.get(idx)? {
            ConstantEntry::InvokeDynamic { bootstrap_index, name_and_type_index } => {
                let (n, d) = self.name_and_type(*name_and_type_index)?;
                Some((*bootstrap_index, n, d))
            }
            _ => None,
        }
    }
}

/// Decodes the class-file variant of UTF-8: NUL as `C0 80`, supplementary
/// characters as surrogate pairs, no 4-byte forms.
pub fn decode_modified_utf8(raw: &[u8]) -> Result<String, String> {
    let mut units: Vec<u16> = Vec::with_capacity(raw.len());
    let mut i = 0;
    let cont = |b: Option<&u8>| match b {
        Some(&b) if b & 0xC0 == 0x80 => Ok((b & 0x3F) as u16),
        _ => Err("bad continuation byte".to_string()),
    };
    while i < raw.len() {
        let b = raw[i];
        match b {
            0x01..=0x7F => {
                units.push(b as u16);
                i += 1;
            }
            0xC0..=0xDF => {
                let c = cont(raw.get(i + 1))?;
                let v = ((b as u16 & 0x1F) << 6) | c;
                if v != 0 && v < 0x80 {
                    return Err(format!("overlong encoding at byte {i}"));
                }
                units.push(v);
                i += 2;
            }
            0xE0..=0xEF => {
                let c1 = cont(raw.get(i + 1))?;
                let c2 = cont(raw.get(i + 2))?;
                let v = ((b as u16 & 0x0F) << 12) | (c1 << 6) | c2;
                if v < 0x800 {
                    return Err(format!("overlong encoding at byte {i}"));
                }
                units.push(v);
                i += 3;
            }
            _ => return Err(format!("invalid byte 0x{b:02x} at {i}")),
        }
    }
    String::from_utf16(&units).map_err(|_| "unpaired surrogate".to_string())
}
