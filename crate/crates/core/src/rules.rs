//! Misuse rules over resolved slices.

use crate::catalog::{ApiEntry, Catalog, Predicate, RuleSpec, Severity};
use crate::slicer::{Resolved, Slice, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub id: String,
    pub title: String,
    pub severity: Severity,
    pub predicate: Predicate,
    pub message_template: String,
    pub api_targets: Vec<ApiEntry>,
}

impl Rule {
    fn from_spec(spec: &RuleSpec, catalog: &Catalog) -> Rule {
        Rule {
            id: spec.id.clone(),
            title: spec.title.clone(),
            severity: spec.severity,
            predicate: spec.predicate,
            message_template: spec.message.clone(),
            api_targets: catalog.targets_of(&spec.id).cloned().collect(),
        }
    }

    fn targets<'a>(&'a self, slice: &'a Slice) -> impl Iterator<Item = &'a ApiEntry> {
        let t = &slice.criterion.target;
        self.api_targets.iter().filter(move |a| a.class == t.class && a.method == t.name && a.descriptor == t.descriptor)
    }
}

/// One finding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BugInstance {
    pub id: u64,
    pub rule_id: String,
    pub class_fqn: String,
    pub method_name: String,
    pub method_descriptor: String,
    pub offset: u32,
    pub source_line: Option<u32>,
    pub message: String,
    pub severity: Severity,
    pub evidence: String,
}

impl BugInstance {
    /// `name(params)ret`.
    pub fn method_signature(&self) -> String {
        format!("{}{}", self.method_name, self.method_descriptor)
    }
}

/// The shipped rules, ordered by id.
pub fn rule_catalog() -> Vec<Rule> {
    rules_from(Catalog::shipped())
}

pub fn rules_from(catalog: &Catalog) -> Vec<Rule> {
    catalog.rules().iter().map(|r| Rule::from_spec(r, catalog)).collect()
}

/// At most one finding: the first watched argument (by index) whose
/// resolved value satisfies the rule. Unknown arguments never match.
/// The returned finding has id 0; [`run_rules`] numbers them.
pub fn evaluate(slice: &Slice, rule: &Rule) -> Vec<BugInstance> {
    let mut indices: Vec<u8> = rule.targets(slice).flat_map(|a| a.watched.iter().copied()).collect();
    indices.sort_unstable();
    indices.dedup();
    let Some(api) = rule.targets(slice).next() else { return Vec::new() };
    for k in indices {
        let Some(arg) = slice.arg(k) else { continue };
        let Some(value) = arg.value() else { continue };
        if !matches(rule.predicate, value) {
            continue;
        }
        let evidence = render_evidence(arg);
        let message = rule.message_template.replace("{api}", &api.short_name()).replace("{evidence}", &evidence);
        let c = &slice.criterion;
        return vec![BugInstance {
            id: 0,
            rule_id: rule.id.clone(),
            class_fqn: c.class_fqn.clone(),
            method_name: c.method_name.clone(),
            method_descriptor: c.method_descriptor.clone(),
            offset: c.offset,
            source_line: c.line,
            message,
            severity: rule.severity,
            evidence,
        }];
    }
    Vec::new()
}

fn render_evidence(arg: &Resolved) -> String {
    arg.to_string()
}

/// Evaluates every rule on every slice. Findings are ordered by class,
/// method, offset and rule id, and numbered from 0 in that order.
pub fn run_rules(rules: &[Rule], slices: &[Slice]) -> Vec<BugInstance> {
    let mut out: Vec<BugInstance> = slices.iter().flat_map(|s| rules.iter().flat_map(move |r| evaluate(s, r))).collect();
    out.sort_by(|a, b| site(a).cmp(&site(b)).then_with(|| (&a.evidence, &a.message).cmp(&(&b.evidence, &b.message))));
    out.dedup_by(|a, b| site(a) == site(b));
    for (i, f) in out.iter_mut().enumerate() {
        f.id = i as u64;
    }
    out
}

fn site(f: &BugInstance) -> (&str, &str, &str, u32, &str) {
    (&f.class_fqn, &f.method_name, &f.method_descriptor, f.offset, &f.rule_id)
}

/// Block ciphers for which a bare algorithm name means ECB.
const SYMMETRIC: [&str; 14] = [
    "AES", "DES", "DESEDE", "TRIPLEDES", "3DES", "BLOWFISH", "RC2", "RC5", "ARIA", "CAMELLIA", "SEED", "SM4",
    "TWOFISH", "IDEA",
];

const BROKEN_DIGESTS: [&str; 6] = ["MD2", "MD4", "MD5", "SHA-1", "SHA1", "SHA"];

fn matches(p: Predicate, v: &Value) -> bool {
    match p {
        Predicate::HardcodedBytes => matches!(v, Value::Bytes(_) | Value::Chars(_)),
        Predicate::HardcodedText => matches!(v, Value::Text(_) | Value::Bytes(_) | Value::Chars(_)),
        Predicate::EcbTransform => matches!(v, Value::Text(t) if is_ecb(t)),
        Predicate::BrokenDigest => {
            matches!(v, Value::Text(t) if BROKEN_DIGESTS.iter().any(|d| d.eq_ignore_ascii_case(t.trim())))
        }
        Predicate::ConstantSeed => !matches!(v, Value::Null),
        Predicate::CleartextUrl => {
            matches!(v, Value::Text(t) if t.trim_start().get(..7).is_some_and(|s| s.eq_ignore_ascii_case("http://")))
        }
    }
}

/// `ALG`, `ALG/ECB/...` for a symmetric block cipher. Key-size suffixes
/// such as `AES_256` are accepted.
fn is_ecb(transform: &str) -> bool {
    let mut parts = transform.trim().split('/');
    let alg = parts.next().unwrap_or("").to_ascii_uppercase();
    let family = alg.split('_').next().unwrap_or("");
    if !SYMMETRIC.contains(&family) {
        return false;
    }
    match parts.next() {
        None => true,
        Some(mode) => mode.trim().eq_ignore_ascii_case("ECB"),
    }
}
