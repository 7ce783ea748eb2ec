use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use super::ir::{build_method_ir, IrError, MethodIR};
use crate::catalog::Catalog;
use crate::classfile::{decode_method_body, fully_qualified_name, opcode, ClassFile, MemberRef};

/// A method of the scan set: indices into the class list and its methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodId {
    pub class: usize,
    pub method: usize,
}

type Callers = HashMap<MemberRef, Vec<(MethodId, u32)>>;
type IrSlot = OnceLock<Result<Arc<MethodIR>, IrError>>;

/// Lazily built method IRs over a fixed class list. A method is only
/// analysed when a slice asks for it.
pub struct IrIndex<'a> {
    classes: &'a [ClassFile],
    catalog: &'a Catalog,
    by_name: HashMap<&'a str, usize>,
    irs: Vec<Vec<IrSlot>>,
    callers: OnceLock<Callers>,
}

impl<'a> IrIndex<'a> {
    pub fn new(classes: &'a [ClassFile], catalog: &'a Catalog) -> Self {
        let mut by_name = HashMap::new();
        for (i, c) in classes.iter().enumerate() {
            by_name.entry(c.this_class_name()).or_insert(i);
        }
        let irs = classes.iter().map(|c| c.methods.iter().map(|_| OnceLock::new()).collect()).collect();
        IrIndex { classes, catalog, by_name, irs, callers: OnceLock::new() }
    }

    pub fn classes(&self) -> &'a [ClassFile] {
        self.classes
    }

    pub fn catalog(&self) -> &'a Catalog {
        self.catalog
    }

    /// Index of the class with this internal name.
    pub fn class_index(&self, internal: &str) -> Option<usize> {
        self.by_name.get(internal).copied()
    }

    pub fn find_method(&self, owner_internal: &str, name: &str, descriptor: &str) -> Option<MethodId> {
        let class = self.class_index(owner_internal)?;
        let method = self.classes[class].methods.iter().position(|m| m.name == name && m.descriptor == descriptor)?;
        Some(MethodId { class, method })
    }

    pub fn ir(&self, id: MethodId) -> Result<Arc<MethodIR>, IrError> {
        self.irs[id.class][id.method]
            .get_or_init(|| {
                let class = &self.classes[id.class];
                build_method_ir(class, &class.methods[id.method]).map(Arc::new)
            })
            .clone()
    }

    /// Methods whose IR has been built so far: (class, name, descriptor).
    pub fn built_methods(&self) -> Vec<(String, String, String)> {
        let mut out = Vec::new();
        for (ci, methods) in self.irs.iter().enumerate() {
            for (mi, cell) in methods.iter().enumerate() {
                if cell.get().is_some() {
                    let c = &self.classes[ci];
                    let m = &c.methods[mi];
                    out.push((fully_qualified_name(c), m.name.clone(), m.descriptor.clone()));
                }
            }
        }
        out
    }

    /// Call sites in the scan set that invoke `target`.
    pub fn callers_of(&self, target: &MemberRef) -> &[(MethodId, u32)] {
        self.callers.get_or_init(|| self.collect_callers()).get(target).map_or(&[], Vec::as_slice)
    }

    fn collect_callers(&self) -> Callers {
        let mut map: Callers = HashMap::new();
        for (ci, class) in self.classes.iter().enumerate() {
            for (mi, member) in class.methods.iter().enumerate() {
                let Ok(body) = decode_method_body(member) else { continue };
                for insn in &body.instructions {
                    if !opcode::is_invoke(insn.opcode) || insn.opcode == opcode::INVOKEDYNAMIC {
                        continue;
                    }
                    if let Some(r) = insn.pool_index().and_then(|i| class.constant_pool.member_ref(i)) {
                        map.entry(r).or_default().push((MethodId { class: ci, method: mi }, insn.offset));
                    }
                }
            }
        }
        map
    }
}
