use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::classfile::{
    decode_method_body, fully_qualified_name, normalize, opcode::*, parse_field_descriptor, parse_method_descriptor,
    ClassFile, CodeBody, CodeError, ConstantEntry, FieldType, Instruction, MemberInfo, MemberRef, Operands,
};

/// Where a value on the stack or in a local came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    /// Produced by the instruction at this offset.
    Insn(u32),
    /// Declared parameter `k`, receiver excluded.
    Param(u8),
    This,
    /// The exception object entering the handler at this offset.
    Exception(u32),
}

pub type ValueSet = BTreeSet<Source>;

/// What an instruction consumes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Use {
    /// A local read, with the definitions that reach it.
    Local { slot: u16, reaching: Vec<Source> },
    /// A constant-pool literal.
    Constant(u16),
    Field(MemberRef),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum IrError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("stack underflow at offset {offset}")]
    StackUnderflow { offset: u32 },
    #[error("inconsistent stack shapes merge at offset {offset}")]
    StackMismatch { offset: u32 },
    #[error("local {slot} out of range at offset {offset}")]
    BadLocal { offset: u32, slot: u16 },
    #[error("unsupported instruction {opcode:#04x} at offset {offset}")]
    Unsupported { offset: u32, opcode: u8 },
    #[error("unresolvable constant-pool reference at offset {offset}")]
    BadReference { offset: u32 },
    #[error("invalid method descriptor {0}")]
    BadDescriptor(String),
}

/// Def-use facts for one method.
#[derive(Clone, Debug)]
pub struct MethodIR {
    pub owner_fqn: String,
    pub owner_internal: String,
    pub name: String,
    pub descriptor: String,
    pub is_static: bool,
    pub body: CodeBody,
    /// Local slot -> offsets of the stores and `iinc`s that define it.
    pub defs: BTreeMap<u16, Vec<u32>>,
    /// Instruction offset -> what it consumes.
    pub uses: BTreeMap<u32, Vec<Use>>,
    /// Popped operand sets per instruction index, bottom of stack first.
    operands: Vec<Vec<ValueSet>>,
    reachable: Vec<bool>,
    jump_targets: BTreeSet<u32>,
}

impl MethodIR {
    pub fn instruction(&self, offset: u32) -> Option<&Instruction> {
        self.body.index_of(offset).map(|i| &self.body.instructions[i])
    }

    /// Values popped by the instruction at `offset`, bottom of stack first.
    /// Empty for unreachable code.
    pub fn operands(&self, offset: u32) -> &[ValueSet] {
        match self.body.index_of(offset) {
            Some(i) => &self.operands[i],
            None => &[],
        }
    }

    /// Definitions of the local read by the load or `iinc` at `offset`.
    pub fn reaching(&self, offset: u32) -> Option<&[Source]> {
        self.uses.get(&offset)?.iter().find_map(|u| match u {
            Use::Local { reaching, .. } => Some(reaching.as_slice()),
            _ => None,
        })
    }

    pub fn is_reachable(&self, offset: u32) -> bool {
        self.body.index_of(offset).is_some_and(|i| self.reachable[i])
    }

    /// True when some branch, switch or handler lands on `offset`.
    pub fn is_jump_target(&self, offset: u32) -> bool {
        self.jump_targets.contains(&offset)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Entry {
    values: ValueSet,
    wide: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Frame {
    locals: Vec<ValueSet>,
    stack: Vec<Entry>,
}

impl Frame {
    /// Unions `other` into `self`; returns whether anything changed.
    fn merge(&mut self, other: &Frame, at: u32) -> Result<bool, IrError> {
        if self.stack.len() != other.stack.len()
            || self.stack.iter().zip(&other.stack).any(|(a, b)| a.wide != b.wide)
        {
            return Err(IrError::StackMismatch { offset: at });
        }
        let mut changed = false;
        for (a, b) in self.locals.iter_mut().zip(&other.locals) {
            changed |= union_into(a, b);
        }
        for (a, b) in self.stack.iter_mut().zip(&other.stack) {
            changed |= union_into(&mut a.values, &b.values);
        }
        Ok(changed)
    }
}

fn union_into(a: &mut ValueSet, b: &ValueSet) -> bool {
    let before = a.len();
    a.extend(b.iter().copied());
    a.len() != before
}

/// Builds def-use facts for `member` by a worklist fixpoint over stack
/// frames. Join points union their incoming sets.
pub fn build_method_ir(class: &ClassFile, member: &MemberInfo) -> Result<MethodIR, IrError> {
    let body = decode_method_body(member)?;
    let desc =
        parse_method_descriptor(&member.descriptor).map_err(|_| IrError::BadDescriptor(member.descriptor.clone()))?;
    let is_static = member.is_static();

    let n = body.instructions.len();
    let mut entry = Frame { locals: vec![ValueSet::new(); body.max_locals as usize], stack: Vec::new() };
    let mut slot = 0usize;
    if !is_static {
        if let Some(l) = entry.locals.get_mut(0) {
            l.insert(Source::This);
        }
        slot = 1;
    }
    for (k, p) in desc.params.iter().enumerate() {
        if let Some(l) = entry.locals.get_mut(slot) {
            l.insert(Source::Param(k as u8));
        }
        slot += p.slots() as usize;
    }

    let cx = Cx { class, body: &body };
    let mut frames: Vec<Option<Frame>> = vec![None; n];
    let mut queued = vec![false; n];
    let mut work = VecDeque::new();
    if n > 0 {
        frames[0] = Some(entry);
        work.push_back(0);
        queued[0] = true;
    }
    while let Some(i) = work.pop_front() {
        queued[i] = false;
        let insn = &body.instructions[i];
        let input = frames[i].clone().expect("queued frames exist");
        let step = cx.transfer(insn, input.clone())?;
        let mut succ: Vec<(usize, Frame)> = Vec::new();
        if let Some(out) = step.out {
            if !insn.ends_flow() {
                if i + 1 >= n {
                    return Err(CodeError::MalformedCode { offset: insn.offset, reason: "falls off the end of the code".into() }.into());
                }
                succ.push((i + 1, out.clone()));
            }
            for t in insn.branch_targets() {
                succ.push((cx.index(t, insn.offset)?, out.clone()));
            }
            for h in cx.handlers_covering(insn.offset) {
                let mut locals = input.locals.clone();
                for (a, b) in locals.iter_mut().zip(&out.locals) {
                    union_into(a, b);
                }
                let stack = vec![Entry { values: [Source::Exception(h)].into(), wide: false }];
                succ.push((cx.index(h, insn.offset)?, Frame { locals, stack }));
            }
        } else {
            for h in cx.handlers_covering(insn.offset) {
                let stack = vec![Entry { values: [Source::Exception(h)].into(), wide: false }];
                succ.push((cx.index(h, insn.offset)?, Frame { locals: input.locals.clone(), stack }));
            }
        }
        for (j, f) in succ {
            let changed = match &mut frames[j] {
                Some(existing) => existing.merge(&f, body.instructions[j].offset)?,
                slot @ None => {
                    *slot = Some(f);
                    true
                }
            };
            if changed && !queued[j] {
                queued[j] = true;
                work.push_back(j);
            }
        }
    }

    let mut operands = vec![Vec::new(); n];
    let mut reachable = vec![false; n];
    let mut defs: BTreeMap<u16, Vec<u32>> = BTreeMap::new();
    let mut uses: BTreeMap<u32, Vec<Use>> = BTreeMap::new();
    for (i, insn) in body.instructions.iter().enumerate() {
        let Some(frame) = frames[i].clone() else { continue };
        reachable[i] = true;
        let step = cx.transfer(insn, frame)?;
        operands[i] = step.popped;
        if let Some((slot, reaching)) = step.local_read {
            uses.entry(insn.offset).or_default().push(Use::Local { slot, reaching: reaching.into_iter().collect() });
        }
        if let Some(slot) = step.local_write {
            defs.entry(slot).or_default().push(insn.offset);
        }
        if let Some(u) = cx.static_use(insn) {
            uses.entry(insn.offset).or_default().push(u);
        }
    }

    let mut jump_targets: BTreeSet<u32> = body.instructions.iter().flat_map(Instruction::branch_targets).collect();
    jump_targets.extend(body.exception_table.iter().map(|e| e.handler_pc as u32));

    Ok(MethodIR {
        owner_fqn: fully_qualified_name(class),
        owner_internal: class.this_class_name().to_string(),
        name: member.name.clone(),
        descriptor: member.descriptor.clone(),
        is_static,
        body,
        defs,
        uses,
        operands,
        reachable,
        jump_targets,
    })
}

struct Step {
    /// `None` when control cannot continue (athrow, return).
    out: Option<Frame>,
    popped: Vec<ValueSet>,
    local_read: Option<(u16, ValueSet)>,
    local_write: Option<u16>,
}

struct Cx<'a> {
    class: &'a ClassFile,
    body: &'a CodeBody,
}

impl Cx<'_> {
    fn index(&self, offset: u32, from: u32) -> Result<usize, IrError> {
        self.body.index_of(offset).ok_or_else(|| {
            IrError::Code(CodeError::MalformedCode { offset: from, reason: format!("no instruction at {offset}") })
        })
    }

    fn handlers_covering(&self, offset: u32) -> impl Iterator<Item = u32> + '_ {
        self.body
            .exception_table
            .iter()
            .filter(move |e| (e.start_pc as u32..e.end_pc as u32).contains(&offset))
            .map(|e| e.handler_pc as u32)
    }

    fn static_use(&self, insn: &Instruction) -> Option<Use> {
        let pool = &self.class.constant_pool;
        match insn.opcode {
            LDC | LDC_W | LDC2_W => insn.pool_index().map(Use::Constant),
            GETSTATIC | PUTSTATIC | GETFIELD | PUTFIELD => {
                insn.pool_index().and_then(|i| pool.member_ref(i)).map(Use::Field)
            }
            _ => None,
        }
    }

    fn member_desc(&self, insn: &Instruction) -> Result<String, IrError> {
        let bad = || IrError::BadReference { offset: insn.offset };
        let idx = insn.pool_index().ok_or_else(bad)?;
        let pool = &self.class.constant_pool;
        if insn.opcode == INVOKEDYNAMIC {
            return pool.invoke_dynamic(idx).map(|(_, _, d)| d.to_string()).ok_or_else(bad);
        }
        pool.member_ref(idx).map(|m| m.descriptor).ok_or_else(bad)
    }

    fn transfer(&self, insn: &Instruction, mut f: Frame) -> Result<Step, IrError> {
        let at = insn.offset;
        let me = Source::Insn(at);
        let mut popped: Vec<ValueSet> = Vec::new();
        let mut local_read = None;
        let mut local_write = None;

        macro_rules! pop {
            ($n:expr) => {{
                let n: usize = $n;
                if f.stack.len() < n {
                    return Err(IrError::StackUnderflow { offset: at });
                }
                let start = f.stack.len() - n;
                popped.extend(f.stack.drain(start..).map(|e| e.values));
            }};
        }
        macro_rules! push {
            ($wide:expr) => {
                f.stack.push(Entry { values: [me].into(), wide: $wide })
            };
        }

        let op = normalize(insn.opcode);
        match op {
            NOP => {}
            ACONST_NULL..=ICONST_5 | FCONST_0..=FCONST_2 | BIPUSH | SIPUSH => push!(false),
            LCONST_0 | LCONST_1 | DCONST_0 | DCONST_1 => push!(true),
            LDC | LDC_W => push!(false),
            LDC2_W => push!(true),
            ILOAD..=ALOAD => {
                let slot = local_slot(insn);
                let v = f.locals.get(slot as usize).ok_or(IrError::BadLocal { offset: at, slot })?.clone();
                local_read = Some((slot, v));
                push!(op == LLOAD || op == DLOAD);
            }
            IALOAD..=SALOAD => {
                pop!(2);
                push!(op == LALOAD || op == DALOAD);
            }
            ISTORE..=ASTORE => {
                let slot = local_slot(insn);
                let wide = op == LSTORE || op == DSTORE;
                let last = slot as usize + wide as usize;
                if last >= f.locals.len() {
                    return Err(IrError::BadLocal { offset: at, slot });
                }
                pop!(1);
                f.locals[slot as usize] = [me].into();
                if wide {
                    f.locals[last].clear();
                }
                local_write = Some(slot);
            }
            IASTORE..=SASTORE => pop!(3),
            POP => pop_words(&mut f, 1, at, &mut popped)?,
            POP2 => pop_words(&mut f, 2, at, &mut popped)?,
            DUP => dup(&mut f, 1, 0, at)?,
            DUP_X1 => dup(&mut f, 1, 1, at)?,
            DUP_X2 => dup(&mut f, 1, 2, at)?,
            DUP2 => dup(&mut f, 2, 0, at)?,
            DUP2_X1 => dup(&mut f, 2, 1, at)?,
            DUP2_X2 => dup(&mut f, 2, 2, at)?,
            SWAP => {
                let len = f.stack.len();
                if len < 2 {
                    return Err(IrError::StackUnderflow { offset: at });
                }
                f.stack.swap(len - 1, len - 2);
            }
            IADD..=DREM => {
                pop!(2);
                push!(matches!((op - IADD) % 4, 1 | 3));
            }
            INEG..=DNEG => {
                pop!(1);
                push!(matches!((op - INEG) % 4, 1 | 3));
            }
            ISHL..=LXOR => {
                pop!(2);
                push!((op - ISHL) % 2 == 1);
            }
            IINC => {
                let Operands::Iinc { index, .. } = insn.operands else { unreachable!("decoder gives iinc operands") };
                let l = f.locals.get_mut(index as usize).ok_or(IrError::BadLocal { offset: at, slot: index })?;
                local_read = Some((index, std::mem::replace(l, [me].into())));
                local_write = Some(index);
            }
            I2L..=I2S => {
                pop!(1);
                push!(matches!(op, I2L | I2D | L2D | F2L | F2D | D2L));
            }
            LCMP..=DCMPG => {
                pop!(2);
                push!(false);
            }
            IFEQ..=IFLE | IFNULL | IFNONNULL | TABLESWITCH | LOOKUPSWITCH => pop!(1),
            IF_ICMPEQ..=IF_ACMPNE => pop!(2),
            GOTO | GOTO_W => {}
            JSR | JSR_W | RET => return Err(IrError::Unsupported { offset: at, opcode: op }),
            IRETURN..=ARETURN => {
                pop!(1);
                return Ok(Step { out: None, popped, local_read, local_write });
            }
            RETURN => return Ok(Step { out: None, popped, local_read, local_write }),
            ATHROW => {
                pop!(1);
                return Ok(Step { out: None, popped, local_read, local_write });
            }
            GETSTATIC | GETFIELD => {
                if op == GETFIELD {
                    pop!(1);
                }
                let d = self.member_desc(insn)?;
                let t = parse_field_descriptor(&d).map_err(|_| IrError::BadReference { offset: at })?;
                push!(t.slots() == 2);
            }
            PUTSTATIC => pop!(1),
            PUTFIELD => pop!(2),
            INVOKEVIRTUAL..=INVOKEDYNAMIC => {
                let d = self.member_desc(insn)?;
                let md = parse_method_descriptor(&d).map_err(|_| IrError::BadReference { offset: at })?;
                let receiver = usize::from(op != INVOKESTATIC && op != INVOKEDYNAMIC);
                pop!(md.params.len() + receiver);
                if let Some(ret) = md.ret {
                    push!(matches!(ret, FieldType::Long | FieldType::Double));
                }
            }
            NEW => push!(false),
            NEWARRAY | ANEWARRAY | ARRAYLENGTH | CHECKCAST | INSTANCEOF => {
                pop!(1);
                push!(false);
            }
            MONITORENTER | MONITOREXIT => pop!(1),
            MULTIANEWARRAY => {
                let Operands::MultiANewArray { dimensions, .. } = insn.operands else {
                    unreachable!("decoder gives multianewarray operands")
                };
                pop!(dimensions as usize);
                push!(false);
            }
            other => return Err(IrError::Unsupported { offset: at, opcode: other }),
        }
        Ok(Step { out: Some(f), popped, local_read, local_write })
    }
}

fn local_slot(insn: &Instruction) -> u16 {
    match insn.operands {
        Operands::Local(s) => s,
        _ => match insn.opcode {
            ILOAD_0..=ALOAD_3 => ((insn.opcode - ILOAD_0) % 4) as u16,
            ISTORE_0..=ASTORE_3 => ((insn.opcode - ISTORE_0) % 4) as u16,
            _ => 0,
        },
    }
}

/// Removes stack entries totalling exactly `words` slots.
fn take_words(f: &mut Frame, words: usize, at: u32) -> Result<Vec<Entry>, IrError> {
    let mut taken = Vec::new();
    let mut got = 0;
    while got < words {
        let e = f.stack.pop().ok_or(IrError::StackUnderflow { offset: at })?;
        got += if e.wide { 2 } else { 1 };
        taken.push(e);
    }
    if got != words {
        return Err(IrError::StackMismatch { offset: at });
    }
    taken.reverse();
    Ok(taken)
}

fn pop_words(f: &mut Frame, words: usize, at: u32, popped: &mut Vec<ValueSet>) -> Result<(), IrError> {
    popped.extend(take_words(f, words, at)?.into_iter().map(|e| e.values));
    Ok(())
}

/// The dup family: copy the top `words` slots below the next `skip` slots.
fn dup(f: &mut Frame, words: usize, skip: usize, at: u32) -> Result<(), IrError> {
    let top = take_words(f, words, at)?;
    let below = take_words(f, skip, at)?;
    f.stack.extend(top.iter().cloned());
    f.stack.extend(below);
    f.stack.extend(top);
    Ok(())
}

/// A pool constant loaded by `ldc`, `ldc_w` or `ldc2_w`.
pub(crate) fn ldc_entry<'a>(class: &'a ClassFile, insn: &Instruction) -> Option<&'a ConstantEntry> {
    insn.pool_index().and_then(|i| class.constant_pool.get(i))
}
