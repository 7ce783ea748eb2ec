//! The rule and API catalog: which call sites are security relevant, which
//! of their arguments matter, and which rule judges them.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::classfile::parse_method_descriptor;

const SHIPPED: &str = include_str!("../catalog/default.catalog");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Low,
    Medium,
    High,
}

impl Severity {
    pub const ALL: [Severity; 3] = [Severity::High, Severity::Medium, Severity::Low];

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Low => "Low",
            Severity::Medium => "Medium",
            Severity::High => "High",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Severity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(Severity::Low),
            "medium" => Ok(Severity::Medium),
            "high" => Ok(Severity::High),
            _ => Err(format!("unknown severity {s:?} (expected high, medium or low)")),
        }
    }
}

/// The decision a rule applies to a resolved argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Predicate {
    /// A byte or char array built entirely from constants.
    HardcodedBytes,
    /// A string, char array or byte array fixed in the class file.
    HardcodedText,
    /// A cipher transformation that encrypts in ECB mode.
    EcbTransform,
    /// A digest algorithm name from the broken set.
    BrokenDigest,
    /// Any constant seed.
    ConstantSeed,
    /// A constant `http:` URL.
    CleartextUrl,
}

impl Predicate {
    pub fn name(self) -> &'static str {
        match self {
            Predicate::HardcodedBytes => "hardcoded_bytes",
            Predicate::HardcodedText => "hardcoded_text",
            Predicate::EcbTransform => "ecb_transform",
            Predicate::BrokenDigest => "broken_digest",
            Predicate::ConstantSeed => "constant_seed",
            Predicate::CleartextUrl => "cleartext_url",
        }
    }

    fn from_name(s: &str) -> Option<Predicate> {
        [
            Predicate::HardcodedBytes,
            Predicate::HardcodedText,
            Predicate::EcbTransform,
            Predicate::BrokenDigest,
            Predicate::ConstantSeed,
            Predicate::CleartextUrl,
        ]
        .into_iter()
        .find(|p| p.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleSpec {
    pub id: String,
    pub severity: Severity,
    pub predicate: Predicate,
    pub title: String,
    /// May contain `{api}` and `{evidence}`.
    pub message: String,
}

/// One security-relevant method and the arguments a rule watches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApiEntry {
    /// Dotted class name.
    pub class: String,
    pub method: String,
    pub descriptor: String,
    /// Declared-parameter positions, receiver excluded.
    pub watched: Vec<u8>,
    pub rule_id: String,
}

impl ApiEntry {
    pub fn internal_class(&self) -> String {
        self.class.replace('.', "/")
    }

    /// `Class.method` with the simple class name.
    pub fn short_name(&self) -> String {
        let simple = self.class.rsplit('.').next().unwrap_or(&self.class);
        if self.method == "<init>" {
            format!("new {simple}")
        } else {
            format!("{simple}.{}", self.method)
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("cannot read catalog {path}: {reason}")]
    Unreadable { path: String, reason: String },
    #[error("catalog line {line}: {reason}")]
    Invalid { line: usize, reason: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Catalog {
    rules: Vec<RuleSpec>,
    apis: Vec<ApiEntry>,
}

impl Catalog {
    /// The catalog compiled into the binary.
    pub fn shipped() -> &'static Catalog {
        static CAT: OnceLock<Catalog> = OnceLock::new();
        CAT.get_or_init(|| Catalog::parse(SHIPPED).expect("shipped catalog is valid"))
    }

    pub fn shipped_text() -> &'static str {
        SHIPPED
    }

    pub fn load(path: &Path) -> Result<Catalog, CatalogError> {
        let text = std::fs::read_to_string(path).map_err(|e| CatalogError::Unreadable {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Catalog::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Catalog, CatalogError> {
        let mut rules: Vec<RuleSpec> = Vec::new();
        let mut apis = Vec::new();
        let mut api_lines = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let bad = |reason: String| CatalogError::Invalid { line, reason };
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('|').map(str::trim).collect();
            match fields[0] {
                "rule" => {
                    if fields.len() != 6 {
                        return Err(bad(format!("a rule has 6 fields, found {}", fields.len())));
                    }
                    let id = fields[1];
                    if id.is_empty() {
                        return Err(bad("empty rule id".into()));
                    }
                    if rules.iter().any(|r| r.id == id) {
                        return Err(bad(format!("duplicate rule id {id}")));
                    }
                    let severity = fields[2].parse().map_err(bad)?;
                    let predicate = Predicate::from_name(fields[3])
                        .ok_or_else(|| bad(format!("unknown predicate {:?}", fields[3])))?;
                    rules.push(RuleSpec {
                        id: id.to_string(),
                        severity,
                        predicate,
                        title: fields[4].to_string(),
                        message: fields[5].to_string(),
                    });
                }
                "api" => {
                    if fields.len() != 6 {
                        return Err(bad(format!("an api entry has 6 fields, found {}", fields.len())));
                    }
                    let class = fields[1];
                    if class.is_empty() || class.contains('/') {
                        return Err(bad(format!("class must be a dotted name, found {class:?}")));
                    }
                    let desc = parse_method_descriptor(fields[3])
                        .map_err(|e| bad(format!("bad descriptor {:?}: {}", fields[3], e.0)))?;
                    let mut watched = Vec::new();
                    for part in fields[4].split(',').map(str::trim) {
                        let k: u8 = part.parse().map_err(|_| bad(format!("bad argument index {part:?}")))?;
                        if k as usize >= desc.params.len() {
                            return Err(bad(format!(
                                "argument index {k} out of range for {} parameters",
                                desc.params.len()
                            )));
                        }
                        if !watched.contains(&k) {
                            watched.push(k);
                        }
                    }
                    watched.sort_unstable();
                    apis.push(ApiEntry {
                        class: class.to_string(),
                        method: fields[2].to_string(),
                        descriptor: fields[3].to_string(),
                        watched,
                        rule_id: fields[5].to_string(),
                    });
                    api_lines.push(line);
                }
                other => return Err(bad(format!("unknown record kind {other:?}"))),
            }
        }
        let mut seen = BTreeSet::new();
        for (api, line) in apis.iter().zip(api_lines) {
            if !rules.iter().any(|r| r.id == api.rule_id) {
                return Err(CatalogError::Invalid { line, reason: format!("unknown rule id {}", api.rule_id) });
            }
            if !seen.insert((&api.class, &api.method, &api.descriptor, &api.rule_id)) {
                return Err(CatalogError::Invalid { line, reason: "duplicate api entry".into() });
            }
        }
        rules.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(Catalog { rules, apis })
    }

    /// Rules ordered by id.
    pub fn rules(&self) -> &[RuleSpec] {
        &self.rules
    }

    pub fn apis(&self) -> &[ApiEntry] {
        &self.apis
    }

    pub fn rule(&self, id: &str) -> Option<&RuleSpec> {
        self.rules.iter().find(|r| r.id == id)
    }

    /// Entries for a call target; `owner` may be internal or dotted.
    pub fn lookup<'a>(&'a self, owner: &str, name: &'a str, descriptor: &'a str) -> impl Iterator<Item = &'a ApiEntry> {
        let dotted = owner.replace('/', ".");
        self.apis
            .iter()
            .filter(move |a| a.class == dotted && a.method == name && a.descriptor == descriptor)
    }

    /// Entries owned by a rule.
    pub fn targets_of<'a>(&'a self, rule_id: &'a str) -> impl Iterator<Item = &'a ApiEntry> {
        self.apis.iter().filter(move |a| a.rule_id == rule_id)
    }
}
