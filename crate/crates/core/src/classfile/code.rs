use std::collections::BTreeMap;
use std::fmt;

use super::{CodeAttribute, ExceptionEntry, MemberInfo};

/// Opcode numbering and mnemonics for format levels up to 52.
pub mod opcode {
    macro_rules! opcodes {
        ($($name:ident = $v:expr, $text:expr;)*) => {
            $(pub const $name: u8 = $v;)*

            pub fn name(op: u8) -> Option<&'static str> {
                match op {
                    $($v => Some($text),)*
                    _ => None,
                }
            }
        };
    }

    opcodes! {
        NOP = 0x00, "nop"; ACONST_NULL = 0x01, "aconst_null";
        ICONST_M1 = 0x02, "iconst_m1"; ICONST_0 = 0x03, "iconst_0"; ICONST_1 = 0x04, "iconst_1";
        ICONST_2 = 0x05, "iconst_2"; ICONST_3 = 0x06, "iconst_3"; ICONST_4 = 0x07, "iconst_4";
        ICONST_5 = 0x08, "iconst_5"; LCONST_0 = 0x09, "lconst_0"; LCONST_1 = 0x0a, "lconst_1";
        FCONST_0 = 0x0b, "fconst_0"; FCONST_1 = 0x0c, "fconst_1"; FCONST_2 = 0x0d, "fconst_2";
        DCONST_0 = 0x0e, "dconst_0"; DCONST_1 = 0x0f, "dconst_1";
        BIPUSH = 0x10, "bipush"; SIPUSH = 0x11, "sipush";
        LDC = 0x12, "ldc"; LDC_W = 0x13, "ldc_w"; LDC2_W = 0x14, "ldc2_w";
        ILOAD = 0x15, "iload"; LLOAD = 0x16, "lload"; FLOAD = 0x17, "fload"; DLOAD = 0x18, "dload";
        ALOAD = 0x19, "aload";
        ILOAD_0 = 0x1a, "iload_0"; ILOAD_1 = 0x1b, "iload_1"; ILOAD_2 = 0x1c, "iload_2"; ILOAD_3 = 0x1d, "iload_3";
        LLOAD_0 = 0x1e, "lload_0"; LLOAD_1 = 0x1f, "lload_1"; LLOAD_2 = 0x20, "lload_2"; LLOAD_3 = 0x21, "lload_3";
        FLOAD_0 = 0x22, "fload_0"; FLOAD_1 = 0x23, "fload_1"; FLOAD_2 = 0x24, "fload_2"; FLOAD_3 = 0x25, "fload_3";
        DLOAD_0 = 0x26, "dload_0"; DLOAD_1 = 0x27, "dload_1"; DLOAD_2 = 0x28, "dload_2"; DLOAD_3 = 0x29, "dload_3";
        ALOAD_0 = 0x2a, "aload_0"; ALOAD_1 = 0x2b, "aload_1"; ALOAD_2 = 0x2c, "aload_2"; ALOAD_3 = 0x2d, "aload_3";
        IALOAD = 0x2e, "iaload"; LALOAD = 0x2f, "laload"; FALOAD = 0x30, "faload"; DALOAD = 0x31, "daload";
        AALOAD = 0x32, "aaload"; BALOAD = 0x33, "baload"; CALOAD = 0x34, "caload"; SALOAD = 0x35, "saload";
        ISTORE = 0x36, "istore"; LSTORE = 0x37, "lstore"; FSTORE = 0x38, "fstore"; DSTORE = 0x39, "dstore";
        ASTORE = 0x3a, "astore";
        ISTORE_0 = 0x3b, "istore_0"; ISTORE_1 = 0x3c, "istore_1"; ISTORE_2 = 0x3d, "istore_2"; ISTORE_3 = 0x3e, "istore_3";
        LSTORE_0 = 0x3f, "lstore_0"; LSTORE_1 = 0x40, "lstore_1"; LSTORE_2 = 0x41, "lstore_2"; LSTORE_3 = 0x42, "lstore_3";
        FSTORE_0 = 0x43, "fstore_0"; FSTORE_1 = 0x44, "fstore_1"; FSTORE_2 = 0x45, "fstore_2"; FSTORE_3 = 0x46, "fstore_3";
        DSTORE_0 = 0x47, "dstore_0"; DSTORE_1 = 0x48, "dstore_1"; DSTORE_2 = 0x49, "dstore_2"; DSTORE_3 = 0x4a, "dstore_3";
        ASTORE_0 = 0x4b, "astore_0"; ASTORE_1 = 0x4c, "astore_1"; ASTORE_2 = 0x4d, "astore_2"; ASTORE_3 = 0x4e, "astore_3";
        IASTORE = 0x4f, "iastore"; LASTORE = 0x50, "lastore"; FASTORE = 0x51, "fastore"; DASTORE = 0x52, "dastore";
        AASTORE = 0x53, "aastore"; BASTORE = 0x54, "bastore"; CASTORE = 0x55, "castore"; SASTORE = 0x56, "sastore";
        POP = 0x57, "pop"; POP2 = 0x58, "pop2"; DUP = 0x59, "dup"; DUP_X1 = 0x5a, "dup_x1"; DUP_X2 = 0x5b, "dup_x2";
        DUP2 = 0x5c, "dup2"; DUP2_X1 = 0x5d, "dup2_x1"; DUP2_X2 = 0x5e, "dup2_x2"; SWAP = 0x5f, "swap";
        IADD = 0x60, "iadd"; LADD = 0x61, "ladd"; FADD = 0x62, "fadd"; DADD = 0x63, "dadd";
        ISUB = 0x64, "isub"; LSUB = 0x65, "lsub"; FSUB = 0x66, "fsub"; DSUB = 0x67, "dsub";
        IMUL = 0x68, "imul"; LMUL = 0x69, "lmul"; FMUL = 0x6a, "fmul"; DMUL = 0x6b, "dmul";
        IDIV = 0x6c, "idiv"; LDIV = 0x6d, "ldiv"; FDIV = 0x6e, "fdiv"; DDIV = 0x6f, "ddiv";
        IREM = 0x70, "irem"; LREM = 0x71, "lrem"; FREM = 0x72, "frem"; DREM = 0x73, "drem";
        INEG = 0x74, "ineg"; LNEG = 0x75, "lneg"; FNEG = 0x76, "fneg"; DNEG = 0x77, "dneg";
        ISHL = 0x78, "ishl"; LSHL = 0x79, "lshl"; ISHR = 0x7a, "ishr"; LSHR = 0x7b, "lshr";
        IUSHR = 0x7c, "iushr"; LUSHR = 0x7d, "lushr"; IAND = 0x7e, "iand"; LAND = 0x7f, "land";
        IOR = 0x80, "ior"; LOR = 0x81, "lor"; IXOR = 0x82, "ixor"; LXOR = 0x83, "lxor"; IINC = 0x84, "iinc";
        I2L = 0x85, "i2l"; I2F = 0x86, "i2f"; I2D = 0x87, "i2d"; L2I = 0x88, "l2i"; L2F = 0x89, "l2f";
        L2D = 0x8a, "l2d"; F2I = 0x8b, "f2i"; F2L = 0x8c, "f2l"; F2D = 0x8d, "f2d"; D2I = 0x8e, "d2i";
        D2L = 0x8f, "d2l"; D2F = 0x90, "d2f"; I2B = 0x91, "i2b"; I2C = 0x92, "i2c"; I2S = 0x93, "i2s";
        LCMP = 0x94, "lcmp"; FCMPL = 0x95, "fcmpl"; FCMPG = 0x96, "fcmpg"; DCMPL = 0x97, "dcmpl"; DCMPG = 0x98, "dcmpg";
        IFEQ = 0x99, "ifeq"; IFNE = 0x9a, "ifne"; IFLT = 0x9b, "iflt"; IFGE = 0x9c, "ifge"; IFGT = 0x9d, "ifgt";
        IFLE = 0x9e, "ifle"; IF_ICMPEQ = 0x9f, "if_icmpeq"; IF_ICMPNE = 0xa0, "if_icmpne";
        IF_ICMPLT = 0xa1, "if_icmplt"; IF_ICMPGE = 0xa2, "if_icmpge"; IF_ICMPGT = 0xa3, "if_icmpgt";
        IF_ICMPLE = 0xa4, "if_icmple"; IF_ACMPEQ = 0xa5, "if_acmpeq"; IF_ACMPNE = 0xa6, "if_acmpne";
        GOTO = 0xa7, "goto"; JSR = 0xa8, "jsr"; RET = 0xa9, "ret";
        TABLESWITCH = 0xaa, "tableswitch"; LOOKUPSWITCH = 0xab, "lookupswitch";
        IRETURN = 0xac, "ireturn"; LRETURN = 0xad, "lreturn"; FRETURN = 0xae, "freturn";
        DRETURN = 0xaf, "dreturn"; ARETURN = 0xb0, "areturn"; RETURN = 0xb1, "return";
        GETSTATIC = 0xb2, "getstatic"; PUTSTATIC = 0xb3, "putstatic"; GETFIELD = 0xb4, "getfield";
        PUTFIELD = 0xb5, "putfield"; INVOKEVIRTUAL = 0xb6, "invokevirtual"; INVOKESPECIAL = 0xb7, "invokespecial";
        INVOKESTATIC = 0xb8, "invokestatic"; INVOKEINTERFACE = 0xb9, "invokeinterface";
        INVOKEDYNAMIC = 0xba, "invokedynamic"; NEW = 0xbb, "new"; NEWARRAY = 0xbc, "newarray";
        ANEWARRAY = 0xbd, "anewarray"; ARRAYLENGTH = 0xbe, "arraylength"; ATHROW = 0xbf, "athrow";
        CHECKCAST = 0xc0, "checkcast"; INSTANCEOF = 0xc1, "instanceof"; MONITORENTER = 0xc2, "monitorenter";
        MONITOREXIT = 0xc3, "monitorexit"; WIDE = 0xc4, "wide"; MULTIANEWARRAY = 0xc5, "multianewarray";
        IFNULL = 0xc6, "ifnull"; IFNONNULL = 0xc7, "ifnonnull"; GOTO_W = 0xc8, "goto_w"; JSR_W = 0xc9, "jsr_w";
    }

    pub fn is_invoke(op: u8) -> bool {
        (INVOKEVIRTUAL..=INVOKEDYNAMIC).contains(&op)
    }

    pub fn is_return(op: u8) -> bool {
        (IRETURN..=RETURN).contains(&op)
    }
}

/// Decoded operands. Branch targets are absolute offsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Operands {
    None,
    /// Local-variable slot of a load, store or `ret` (implicit `_n` forms included).
    Local(u16),
    Iinc { index: u16, delta: i16 },
    /// `bipush` / `sipush` immediate.
    Immediate(i32),
    /// Constant-pool index.
    Pool(u16),
    InvokeInterface { index: u16, count: u8 },
    Branch(u32),
    NewArray(u8),
    MultiANewArray { index: u16, dimensions: u8 },
    TableSwitch { default: u32, low: i32, targets: Vec<u32> },
    LookupSwitch { default: u32, pairs: Vec<(i32, u32)> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instruction {
    pub offset: u32,
    /// The effective opcode; a `wide` prefix is folded into the operands.
    pub opcode: u8,
    pub operands: Operands,
}

impl Instruction {
    pub fn branch_targets(&self) -> Vec<u32> {
        match &self.operands {
            Operands::Branch(t) => vec![*t],
            Operands::TableSwitch { default, targets, .. } => {
                let mut v = vec![*default];
                v.extend(targets);
                v
            }
            Operands::LookupSwitch { default, pairs } => {
                let mut v = vec![*default];
                v.extend(pairs.iter().map(|p| p.1));
                v
            }
            _ => Vec::new(),
        }
    }

    /// Constant-pool index carried by the instruction, if any.
    pub fn pool_index(&self) -> Option<u16> {
        match self.operands {
            Operands::Pool(i) | Operands::InvokeInterface { index: i, .. } | Operands::MultiANewArray { index: i, .. } => {
                Some(i)
            }
            _ => None,
        }
    }

    /// True when control never falls through to the next instruction.
    pub fn ends_flow(&self) -> bool {
        use opcode::*;
        matches!(
            self.opcode,
            GOTO | GOTO_W | TABLESWITCH | LOOKUPSWITCH | ATHROW | RET | JSR | JSR_W
        ) || is_return(self.opcode)
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>5}: {}", self.offset, opcode::name(self.opcode).unwrap_or("?"))?;
        match &self.operands {
            Operands::None => Ok(()),
            Operands::Local(i) => write!(f, " {i}"),
            Operands::Iinc { index, delta } => write!(f, " {index} {delta}"),
            Operands::Immediate(v) => write!(f, " {v}"),
            Operands::Pool(i) => write!(f, " #{i}"),
            Operands::InvokeInterface { index, count } => write!(f, " #{index} {count}"),
            Operands::Branch(t) => write!(f, " {t}"),
            Operands::NewArray(t) => write!(f, " {t}"),
            Operands::MultiANewArray { index, dimensions } => write!(f, " #{index} {dimensions}"),
            Operands::TableSwitch { default, low, targets } => {
                write!(f, " low={low} default={default} {targets:?}")
            }
            Operands::LookupSwitch { default, pairs } => write!(f, " default={default} {pairs:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeBody {
    pub max_stack: u16,
    pub max_locals: u16,
    pub instructions: Vec<Instruction>,
    pub exception_table: Vec<ExceptionEntry>,
    /// start_pc -> line, as recorded in LineNumberTable.
    pub line_table: Option<BTreeMap<u32, u32>>,
}

impl CodeBody {
    /// Source line for the instruction at `offset`.
    pub fn line_at(&self, offset: u32) -> Option<u32> {
        self.line_table.as_ref()?.range(..=offset).next_back().map(|(_, l)| *l)
    }

    /// Index into `instructions` of the instruction starting at `offset`.
    pub fn index_of(&self, offset: u32) -> Option<usize> {
        self.instructions.binary_search_by_key(&offset, |i| i.offset).ok()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CodeError {
    #[error("method has no Code attribute")]
    NoCode,
    #[error("unknown opcode 0x{opcode:02x} at offset {offset}")]
    UnknownOpcode { opcode: u8, offset: u32 },
    #[error("malformed code at offset {offset}: {reason}")]
    MalformedCode { offset: u32, reason: String },
}

struct Cursor<'a> {
    code: &'a [u8],
    pos: usize,
    at: u32,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], CodeError> {
        if self.code.len() - self.pos < n {
            return Err(CodeError::MalformedCode { offset: self.at, reason: "operand overruns code".into() });
        }
        let s = &self.code[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, CodeError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, CodeError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }
    fn i16(&mut self) -> Result<i16, CodeError> {
        Ok(self.u16()? as i16)
    }
    fn i32(&mut self) -> Result<i32, CodeError> {
        let b = self.take(4)?;
        Ok(i32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }
    fn target(&self, rel: i64) -> Result<u32, CodeError> {
        let t = self.at as i64 + rel;
        if t < 0 || t >= self.code.len() as i64 {
            return Err(CodeError::MalformedCode { offset: self.at, reason: format!("branch target {t} out of range") });
        }
        Ok(t as u32)
    }
}

/// Decodes the Code attribute of `member` into an instruction list.
pub fn decode_method_body(member: &MemberInfo) -> Result<CodeBody, CodeError> {
    let attr = member.code.as_ref().ok_or(CodeError::NoCode)?;
    decode_code(attr)
}

pub(crate) fn decode_code(attr: &CodeAttribute) -> Result<CodeBody, CodeError> {
    use opcode::*;
    let mut c = Cursor { code: &attr.code, pos: 0, at: 0 };
    let mut instructions = Vec::new();
    while c.pos < c.code.len() {
        c.at = c.pos as u32;
        let op = c.u8()?;
        let operands = match op {
            NOP..=DCONST_1 => Operands::None,
            BIPUSH => Operands::Immediate(c.u8()? as i8 as i32),
            SIPUSH => Operands::Immediate(c.i16()? as i32),
            LDC => Operands::Pool(c.u8()? as u16),
            LDC_W | LDC2_W => Operands::Pool(c.u16()?),
            ILOAD..=ALOAD | ISTORE..=ASTORE | RET => Operands::Local(c.u8()? as u16),
            ILOAD_0..=ALOAD_3 => Operands::Local(((op - ILOAD_0) % 4) as u16),
            ISTORE_0..=ASTORE_3 => Operands::Local(((op - ISTORE_0) % 4) as u16),
            IALOAD..=SALOAD | IASTORE..=LXOR => Operands::None,
            IINC => Operands::Iinc { index: c.u8()? as u16, delta: c.u8()? as i8 as i16 },
            I2L..=DCMPG => Operands::None,
            IFEQ..=JSR | IFNULL | IFNONNULL => {
                let rel = c.i16()? as i64;
                Operands::Branch(c.target(rel)?)
            }
            GOTO_W | JSR_W => {
                let rel = c.i32()? as i64;
                Operands::Branch(c.target(rel)?)
            }
            TABLESWITCH => {
                let pad = (4 - c.pos % 4) % 4;
                c.take(pad)?;
                let default = c.i32()? as i64;
                let low = c.i32()?;
                let high = c.i32()?;
                if high < low {
                    return Err(CodeError::MalformedCode { offset: c.at, reason: "tableswitch high < low".into() });
                }
                let n = (high as i64 - low as i64 + 1) as usize;
                if n > c.code.len() / 4 {
                    return Err(CodeError::MalformedCode { offset: c.at, reason: "tableswitch overruns code".into() });
                }
                let default = c.target(default)?;
                let mut targets = Vec::with_capacity(n);
                for _ in 0..n {
                    let rel = c.i32()? as i64;
                    targets.push(c.target(rel)?);
                }
                Operands::TableSwitch { default, low, targets }
            }
            LOOKUPSWITCH => {
                let pad = (4 - c.pos % 4) % 4;
                c.take(pad)?;
                let default = c.i32()? as i64;
                let n = c.i32()?;
                if n < 0 || n as usize > c.code.len() / 8 {
                    return Err(CodeError::MalformedCode { offset: c.at, reason: "bad lookupswitch count".into() });
                }
                let default = c.target(default)?;
                let mut pairs = Vec::with_capacity(n as usize);
                for _ in 0..n {
                    let key = c.i32()?;
                    let rel = c.i32()? as i64;
                    pairs.push((key, c.target(rel)?));
                }
                Operands::LookupSwitch { default, pairs }
            }
            IRETURN..=RETURN | ARRAYLENGTH | ATHROW | MONITORENTER | MONITOREXIT => Operands::None,
            GETSTATIC..=INVOKESTATIC | NEW | ANEWARRAY | CHECKCAST | INSTANCEOF => Operands::Pool(c.u16()?),
            INVOKEINTERFACE => {
                let index = c.u16()?;
                let count = c.u8()?;
                c.u8()?;
                Operands::InvokeInterface { index, count }
            }
            INVOKEDYNAMIC => {
                let index = c.u16()?;
                c.u16()?;
                Operands::Pool(index)
            }
            NEWARRAY => Operands::NewArray(c.u8()?),
            MULTIANEWARRAY => Operands::MultiANewArray { index: c.u16()?, dimensions: c.u8()? },
            WIDE => {
                let inner = c.u8()?;
                let index = c.u16()?;
                let operands = match inner {
                    ILOAD..=ALOAD | ISTORE..=ASTORE | RET => Operands::Local(index),
                    IINC => Operands::Iinc { index, delta: c.i16()? },
                    _ => {
                        return Err(CodeError::MalformedCode {
                            offset: c.at,
                            reason: format!("wide applied to 0x{inner:02x}"),
                        })
                    }
                };
                instructions.push(Instruction { offset: c.at, opcode: inner, operands });
                continue;
            }
            _ => return Err(CodeError::UnknownOpcode { opcode: op, offset: c.at }),
        };
        instructions.push(Instruction { offset: c.at, opcode: op, operands });
    }

    let starts: Vec<u32> = instructions.iter().map(|i| i.offset).collect();
    let boundary = |t: u32| starts.binary_search(&t).is_ok();
    for i in &instructions {
        for t in i.branch_targets() {
            if !boundary(t) {
                return Err(CodeError::MalformedCode {
                    offset: i.offset,
                    reason: format!("branch target {t} is not an instruction boundary"),
                });
            }
        }
    }
    let code_len = attr.code.len() as u32;
    for h in &attr.exception_table {
        let end_ok = h.end_pc as u32 == code_len || boundary(h.end_pc as u32);
        if !boundary(h.start_pc as u32) || !end_ok || !boundary(h.handler_pc as u32) || h.start_pc >= h.end_pc {
            return Err(CodeError::MalformedCode {
                offset: h.handler_pc as u32,
                reason: "exception range not on instruction boundaries".into(),
            });
        }
    }
    Ok(CodeBody {
        max_stack: attr.max_stack,
        max_locals: attr.max_locals,
        instructions,
        exception_table: attr.exception_table.clone(),
        line_table: attr
            .line_numbers
            .as_ref()
            .map(|v| v.iter().map(|&(pc, line)| (pc as u32, line as u32)).collect()),
    })
}

/// Canonical load/store opcode for a short form (`aload_0` -> `aload`).
pub fn normalize(op: u8) -> u8 {
    use opcode::*;
    match op {
        ILOAD_0..=ALOAD_3 => ILOAD + (op - ILOAD_0) / 4,
        ISTORE_0..=ASTORE_3 => ISTORE + (op - ISTORE_0) / 4,
        _ => op,
    }
}
