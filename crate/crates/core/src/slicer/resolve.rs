use std::collections::BTreeSet;
use std::sync::Arc;

use base64::Engine;

use super::index::{IrIndex, MethodId};
use super::ir::{ldc_entry, MethodIR, Source, ValueSet};
use super::{resolve_constant, Resolved, Slice, SliceCriterion, UnknownReason, Value};
use crate::classfile::{fully_qualified_name, normalize, opcode::*, AccessFlags, Instruction, Operands};

use UnknownReason::*;

/// Largest array the resolver will materialise.
const MAX_ARRAY_LEN: i32 = 1 << 16;

/// Resolves each watched argument of `criterion` by walking definitions
/// backwards, following parameters into callers up to `max_depth` hops.
pub fn backward_slice(criterion: &SliceCriterion, index: &IrIndex<'_>, max_depth: u32) -> Slice {
    let mut r = Resolver { index, max_depth, path: Vec::new(), depth_reached: 0 };
    let ir = index.ir(criterion.method);
    let resolved_args = criterion
        .watched
        .iter()
        .map(|&k| {
            let out = match &ir {
                Ok(ir) => r.call_arg(criterion.method, ir, criterion.offset, k, 0),
                Err(_) => R::Val(Resolved::Unknown(UnsupportedConstruct)),
            };
            (k, out.finish())
        })
        .collect();
    Slice { criterion: criterion.clone(), resolved_args, depth_reached: r.depth_reached }
}

/// A partial result. `Skip` marks a path that re-entered itself; it adds
/// nothing to a merge.
#[derive(Clone, Debug, PartialEq)]
enum R {
    Val(Resolved),
    Skip,
}

impl R {
    fn unknown(reason: UnknownReason) -> R {
        R::Val(Resolved::Unknown(reason))
    }

    fn finish(self) -> Resolved {
        match self {
            R::Val(v) => v,
            R::Skip => Resolved::Unknown(ExternalInput),
        }
    }

    fn merge(self, other: R) -> R {
        use Resolved::Unknown;
        match (self, other) {
            (R::Skip, x) | (x, R::Skip) => x,
            (R::Val(Unknown(a)), R::Val(Unknown(b))) => R::unknown(a.min(b)),
            (R::Val(Unknown(a)), _) | (_, R::Val(Unknown(a))) => R::unknown(a),
            (R::Val(a), R::Val(b)) => {
                if a.value() == b.value() {
                    R::Val(a)
                } else {
                    R::unknown(DynamicValue)
                }
            }
        }
    }

    /// The integer this result denotes, or the result to propagate instead.
    fn int(self) -> Result<i32, R> {
        match self {
            R::Val(Resolved::Unknown(r)) => Err(R::unknown(r)),
            R::Val(v) => match v.value() {
                Some(Value::Int(i)) => Ok(*i),
                _ => Err(R::unknown(UnsupportedConstruct)),
            },
            R::Skip => Err(R::Skip),
        }
    }

    fn map_value(self, f: impl FnOnce(&Value) -> R) -> R {
        match self {
            R::Val(Resolved::Unknown(r)) => R::unknown(r),
            R::Val(v) => f(v.value().expect("known results carry a value")),
            R::Skip => R::Skip,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Key {
    Insn(MethodId, u32),
    Param(MethodId, u8),
    Field(usize, usize),
}

struct Resolver<'i, 'a> {
    index: &'i IrIndex<'a>,
    max_depth: u32,
    path: Vec<Key>,
    depth_reached: u32,
}

impl Resolver<'_, '_> {
    fn guarded(&mut self, key: Key, f: impl FnOnce(&mut Self) -> R) -> R {
        if self.path.contains(&key) {
            return R::Skip;
        }
        self.path.push(key);
        let out = f(self);
        self.path.pop();
        out
    }

    /// Argument `k` (receiver excluded) of the invoke at `call`.
    fn call_arg(&mut self, m: MethodId, ir: &Arc<MethodIR>, call: u32, k: u8, hops: u32) -> R {
        let Some(insn) = ir.instruction(call) else { return R::unknown(UnsupportedConstruct) };
        if !ir.is_reachable(call) {
            return R::Skip;
        }
        let receiver = usize::from(insn.opcode != INVOKESTATIC);
        match ir.operands(call).get(k as usize + receiver) {
            Some(set) => self.set(m, ir, set, hops, call),
            None => R::unknown(UnsupportedConstruct),
        }
    }

    /// `anchor` is the instruction in `m` at which the value is observed.
    fn set(&mut self, m: MethodId, ir: &Arc<MethodIR>, set: &ValueSet, hops: u32, anchor: u32) -> R {
        if set.is_empty() {
            return R::unknown(UnsupportedConstruct);
        }
        let mut acc = R::Skip;
        for &s in set {
            let r = self.source(m, ir, s, hops, anchor);
            acc = acc.merge(r);
        }
        acc
    }

    fn source(&mut self, m: MethodId, ir: &Arc<MethodIR>, s: Source, hops: u32, anchor: u32) -> R {
        match s {
            Source::Insn(off) => self.guarded(Key::Insn(m, off), |r| r.insn(m, ir, off, hops, anchor)),
            Source::Param(k) => self.param(m, k, hops),
            Source::This | Source::Exception(_) => R::unknown(UnsupportedConstruct),
        }
    }

    fn param(&mut self, m: MethodId, k: u8, hops: u32) -> R {
        let key = Key::Param(m, k);
        if self.path.contains(&key) {
            return R::Skip;
        }
        if hops >= self.max_depth {
            return R::unknown(DepthExceeded);
        }
        let class = &self.index.classes()[m.class];
        let member = &class.methods[m.method];
        let target = crate::classfile::MemberRef {
            owner: class.this_class_name().to_string(),
            name: member.name.clone(),
            descriptor: member.descriptor.clone(),
        };
        let callers = self.index.callers_of(&target);
        if callers.is_empty() {
            return R::unknown(ExternalInput);
        }
        self.depth_reached = self.depth_reached.max(hops + 1);
        self.guarded(key, |r| {
            let mut acc = R::Skip;
            for &(cm, off) in callers {
                let out = match r.index.ir(cm) {
                    Ok(cir) => r.call_arg(cm, &cir, off, k, hops + 1),
                    Err(_) => R::unknown(UnsupportedConstruct),
                };
                acc = acc.merge(out);
            }
            acc
        })
    }

    fn insn(&mut self, m: MethodId, ir: &Arc<MethodIR>, off: u32, hops: u32, anchor: u32) -> R {
        let Some(insn) = ir.instruction(off) else { return R::unknown(UnsupportedConstruct) };
        let class = &self.index.classes()[m.class];
        let op = normalize(insn.opcode);
        let constant = |v: Value| R::Val(Resolved::Constant(v));
        match op {
            ACONST_NULL => constant(Value::Null),
            ICONST_M1..=ICONST_5 => constant(Value::Int(op as i32 - ICONST_0 as i32)),
            LCONST_0 | LCONST_1 => constant(Value::Long((op - LCONST_0) as i64)),
            FCONST_0..=FCONST_2 => constant(Value::Float((op - FCONST_0) as f32)),
            DCONST_0 | DCONST_1 => constant(Value::Double((op - DCONST_0) as f64)),
            BIPUSH | SIPUSH => match insn.operands {
                Operands::Immediate(v) => constant(Value::Int(v)),
                _ => R::unknown(UnsupportedConstruct),
            },
            LDC | LDC_W | LDC2_W => match ldc_entry(class, insn).map(|e| resolve_constant(e, &class.constant_pool)) {
                Some(Ok(v)) => constant(v),
                _ => R::unknown(UnsupportedConstruct),
            },
            ILOAD..=ALOAD => match ir.reaching(off) {
                Some(defs) => {
                    let defs: ValueSet = defs.iter().copied().collect();
                    self.set(m, ir, &defs, hops, anchor)
                }
                None => R::unknown(UnsupportedConstruct),
            },
            ISTORE..=ASTORE | CHECKCAST => match ir.operands(off).first() {
                Some(s) => self.set(m, ir, &s.clone(), hops, anchor),
                None => R::unknown(UnsupportedConstruct),
            },
            GETSTATIC => self.field(m, insn, hops),
            INVOKEVIRTUAL..=INVOKEINTERFACE => self.invoke(m, ir, insn, hops, anchor),
            NEWARRAY => self.array(m, ir, insn, hops, anchor),
            _ => R::unknown(UnsupportedConstruct),
        }
    }

    /// A `getstatic`: constant-value attributes, else the single
    /// unconditional assignment in the owner's static initializer.
    fn field(&mut self, m: MethodId, insn: &Instruction, hops: u32) -> R {
        let index = self.index;
        let class = &index.classes()[m.class];
        let Some(fref) = insn.pool_index().and_then(|i| class.constant_pool.member_ref(i)) else {
            return R::unknown(UnsupportedConstruct);
        };
        let Some(oi) = index.class_index(&fref.owner) else { return R::unknown(ExternalInput) };
        let owner = &index.classes()[oi];
        let Some(fi) = owner.fields.iter().position(|f| f.name == fref.name && f.descriptor == fref.descriptor) else {
            return R::unknown(ExternalInput);
        };
        let field = &owner.fields[fi];
        if !field.access_flags.contains(AccessFlags::STATIC | AccessFlags::FINAL) {
            return R::unknown(DynamicValue);
        }
        let owner_fqn = fully_qualified_name(owner);
        let wrap = |r: R| {
            r.map_value(|v| {
                R::Val(Resolved::FieldConstant { owner: owner_fqn.clone(), name: fref.name.clone(), value: v.clone() })
            })
        };
        if let Some(cv) = field.constant_value {
            return match owner.constant_pool.get(cv).map(|e| resolve_constant(e, &owner.constant_pool)) {
                Some(Ok(v)) => wrap(R::Val(Resolved::Constant(v))),
                _ => R::unknown(UnsupportedConstruct),
            };
        }
        let Some(clinit) = index.find_method(&fref.owner, "<clinit>", "()V") else {
            return R::unknown(UnsupportedConstruct);
        };
        let Ok(cir) = index.ir(clinit) else { return R::unknown(UnsupportedConstruct) };
        let puts: Vec<u32> = cir
            .body
            .instructions
            .iter()
            .filter(|i| i.opcode == PUTSTATIC && cir.is_reachable(i.offset))
            .filter(|i| i.pool_index().and_then(|p| owner.constant_pool.member_ref(p)).as_ref() == Some(&fref))
            .map(|i| i.offset)
            .collect();
        let [put] = puts[..] else { return R::unknown(DynamicValue) };
        if !straight_line(&cir, 0, put) {
            return R::unknown(DynamicValue);
        }
        let r = self.guarded(Key::Field(oi, fi), |r| match cir.operands(put).first() {
            Some(s) => r.set(clinit, &cir, &s.clone(), hops, put),
            None => R::unknown(UnsupportedConstruct),
        });
        wrap(r)
    }

    /// Results of the few library calls that are pure functions of
    /// constant input; any other call is a run-time value.
    fn invoke(&mut self, m: MethodId, ir: &Arc<MethodIR>, insn: &Instruction, hops: u32, anchor: u32) -> R {
        let class = &self.index.classes()[m.class];
        let Some(target) = insn.pool_index().and_then(|i| class.constant_pool.member_ref(i)) else {
            return R::unknown(UnsupportedConstruct);
        };
        let ops = ir.operands(insn.offset).to_vec();
        let arg = |r: &mut Self, i: usize| match ops.get(i) {
            Some(s) => r.set(m, ir, s, hops, anchor),
            None => R::unknown(UnsupportedConstruct),
        };
        match (target.owner.as_str(), target.name.as_str(), target.descriptor.as_str()) {
            ("java/lang/String", "getBytes", "()[B" | "(Ljava/lang/String;)[B" | "(Ljava/nio/charset/Charset;)[B") => {
                arg(self, 0).map_value(|v| match v {
                    Value::Text(s) => R::Val(Resolved::Constant(Value::Bytes(s.as_bytes().to_vec()))),
                    _ => R::unknown(UnsupportedConstruct),
                })
            }
            ("java/lang/String", "toCharArray", "()[C") => arg(self, 0).map_value(|v| match v {
                Value::Text(s) => R::Val(Resolved::Constant(Value::Chars(s.encode_utf16().collect()))),
                _ => R::unknown(UnsupportedConstruct),
            }),
            ("java/util/Base64$Decoder", "decode", "(Ljava/lang/String;)[B") => arg(self, 1).map_value(|v| match v {
                Value::Text(s) => match base64::engine::general_purpose::STANDARD.decode(s) {
                    Ok(b) => R::Val(Resolved::Constant(Value::Bytes(b))),
                    Err(_) => R::unknown(DynamicValue),
                },
                _ => R::unknown(UnsupportedConstruct),
            }),
            _ => R::unknown(DynamicValue),
        }
    }

    /// A byte or char array filled element by element with constants
    /// between its creation and `anchor`, in straight-line code, without
    /// being handed to anything that could write to it.
    fn array(&mut self, m: MethodId, ir: &Arc<MethodIR>, insn: &Instruction, hops: u32, anchor: u32) -> R {
        let Operands::NewArray(atype) = insn.operands else { return R::unknown(UnsupportedConstruct) };
        let chars = match atype {
            8 => false,
            5 => true,
            _ => return R::unknown(UnsupportedConstruct),
        };
        let start = insn.offset;
        let size = match ir.operands(start).first() {
            Some(s) => self.set(m, ir, &s.clone(), hops, anchor),
            None => return R::unknown(UnsupportedConstruct),
        };
        let len = match size.int() {
            Ok(n) if (0..=MAX_ARRAY_LEN).contains(&n) => n as usize,
            Ok(_) => return R::unknown(DynamicValue),
            Err(r) => return r,
        };
        if anchor <= start || !straight_line(ir, start, anchor) {
            return R::unknown(DynamicValue);
        }

        let region: Vec<&Instruction> =
            ir.body.instructions.iter().filter(|i| i.offset > start && i.offset < anchor).collect();
        let mut aliases: BTreeSet<Source> = [Source::Insn(start)].into();
        let hits = |set: &ValueSet, aliases: &BTreeSet<Source>| set.iter().any(|s| aliases.contains(s));
        for i in &region {
            let op = normalize(i.opcode);
            let flows = match op {
                ASTORE | CHECKCAST => ir.operands(i.offset).first().is_some_and(|s| hits(s, &aliases)),
                ALOAD => ir.reaching(i.offset).is_some_and(|d| d.iter().any(|s| aliases.contains(s))),
                _ => false,
            };
            if flows {
                aliases.insert(Source::Insn(i.offset));
            }
        }

        let catalog = self.index.catalog();
        let class = &self.index.classes()[m.class];
        let mut stores = Vec::new();
        for i in &region {
            let ops = ir.operands(i.offset);
            let touched: Vec<usize> = (0..ops.len()).filter(|&k| hits(&ops[k], &aliases)).collect();
            if touched.is_empty() {
                continue;
            }
            let only_array_operand = touched == [0];
            let op = normalize(i.opcode);
            let allowed = match op {
                BASTORE | CASTORE if only_array_operand => {
                    if !ops[0].iter().all(|s| aliases.contains(s)) {
                        return R::unknown(DynamicValue);
                    }
                    stores.push(i.offset);
                    true
                }
                BALOAD | CALOAD | ARRAYLENGTH => only_array_operand,
                ASTORE | CHECKCAST | POP | POP2 => true,
                INVOKEVIRTUAL..=INVOKEINTERFACE => i
                    .pool_index()
                    .and_then(|p| class.constant_pool.member_ref(p))
                    .is_some_and(|t| catalog.lookup(&t.owner, &t.name, &t.descriptor).next().is_some()),
                _ => false,
            };
            if !allowed {
                return R::unknown(DynamicValue);
            }
        }

        let mut elems = vec![0u16; len];
        for off in stores {
            let ops = ir.operands(off).to_vec();
            let idx = match self.set(m, ir, &ops[1], hops, anchor).int() {
                Ok(i) => i,
                Err(r) => return r,
            };
            let val = match self.set(m, ir, &ops[2], hops, anchor).int() {
                Ok(v) => v,
                Err(r) => return r,
            };
            match usize::try_from(idx).ok().and_then(|i| elems.get_mut(i)) {
                Some(e) => *e = if chars { val as u16 } else { val as u8 as u16 },
                None => return R::unknown(DynamicValue),
            }
        }
        let value = if chars { Value::Chars(elems) } else { Value::Bytes(elems.into_iter().map(|e| e as u8).collect()) };
        R::Val(Resolved::Constant(value))
    }
}

/// True when every instruction from `from` up to `to` runs exactly once
/// per execution of `from`: no branches out, no jumps in.
fn straight_line(ir: &MethodIR, from: u32, to: u32) -> bool {
    if !ir.is_reachable(to) {
        return false;
    }
    ir.body.instructions.iter().filter(|i| i.offset >= from && i.offset <= to).all(|i| {
        let inside_jump = (i.offset > from || from == 0) && ir.is_jump_target(i.offset);
        let leaves = i.offset < to && (i.ends_flow() || !i.branch_targets().is_empty());
        !inside_jump && !leaves
    })
}
