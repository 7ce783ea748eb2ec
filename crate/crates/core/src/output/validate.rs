use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use roxmltree::{Document, Node};
use serde_json::Value;

use super::schema::Schema;
use super::FormatKind;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// `line:column` for XML, `line N` for the text formats.
    pub location: String,
    pub element: Option<String>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.element {
            Some(e) => write!(f, "{}: <{e}>: {}", self.location, self.message),
            None => write!(f, "{}: {}", self.location, self.message),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, location: impl Into<String>, element: Option<&str>, message: impl Into<String>) {
        self.violations.push(Violation {
            location: location.into(),
            element: element.map(str::to_string),
            message: message.into(),
        });
    }
}

/// Checks a report file. ScarfXml is checked against the shipped schema;
/// all formats are checked for empty values and for footer counts that
/// disagree with the body.
pub fn validate_document(path: &Path, kind: FormatKind) -> ValidationReport {
    match std::fs::read(path) {
        Ok(bytes) => match String::from_utf8(bytes) {
            Ok(text) => validate_str(&text, kind),
            Err(e) => {
                let mut r = ValidationReport::default();
                r.push(format!("byte {}", e.utf8_error().valid_up_to()), None, "not UTF-8");
                r
            }
        },
        Err(e) => {
            let mut r = ValidationReport::default();
            r.push(path.display().to_string(), None, format!("cannot read: {e}"));
            r
        }
    }
}

pub fn validate_str(text: &str, kind: FormatKind) -> ValidationReport {
    let mut r = ValidationReport::default();
    match kind {
        FormatKind::ScarfXml => xml(text, &mut r),
        FormatKind::Legacy => legacy(text, &mut r),
        FormatKind::Default => jsonl(text, &mut r),
    }
    r
}

// ---------------------------------------------------------------------------

fn xml(text: &str, r: &mut ValidationReport) {
    let doc = match Document::parse(text) {
        Ok(d) => d,
        Err(e) => {
            let p = e.pos();
            r.push(format!("{}:{}", p.row, p.col), None, format!("not well-formed: {e}"));
            return;
        }
    };
    for v in Schema::report().validate(&doc) {
        r.push(v.location, Some(&v.element), v.message);
    }
    for n in doc.descendants().filter(Node::is_element) {
        let empty = n.attributes().len() == 0
            && !n.children().any(|c| c.is_element() || (c.is_text() && c.text().is_some_and(|t| !t.is_empty())));
        if empty {
            r.push(pos(n), Some(n.tag_name().name()), "empty element");
        }
    }
    xml_counts(&doc, r);
}

fn pos(n: Node) -> String {
    let p = n.document().text_pos_at(n.range().start);
    format!("{}:{}", p.row, p.col)
}

fn child<'a, 'i>(n: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    n.children().find(|c| c.is_element() && c.tag_name().name() == name)
}

fn text_of(n: Option<Node>) -> Option<String> {
    n.map(|n| n.children().filter_map(|c| c.text()).collect::<String>().trim().to_string())
}

fn xml_counts(doc: &Document, r: &mut ValidationReport) {
    let root = doc.root_element();
    let Some(footer) = child(root, "Footer") else { return };
    let mut per_rule: BTreeMap<String, u64> = BTreeMap::new();
    let mut per_sev: BTreeMap<String, u64> = BTreeMap::new();
    let mut total = 0u64;
    if let Some(body) = child(root, "BugInstances") {
        for b in body.children().filter(|c| c.is_element() && c.tag_name().name() == "BugInstance") {
            total += 1;
            if let Some(rule) = text_of(child(b, "RuleId")) {
                *per_rule.entry(rule).or_default() += 1;
            }
            if let Some(s) = text_of(child(b, "Severity")) {
                *per_sev.entry(s).or_default() += 1;
            }
        }
    }
    let stated = text_of(child(footer, "Total")).and_then(|t| t.parse::<u64>().ok());
    if stated != Some(total) {
        r.push(pos(footer), Some("Total"), format!("footer total {stated:?} but body has {total} BugInstance elements"));
    }
    let counts = |list: &str, item: &str, attr: &str| -> BTreeMap<String, u64> {
        child(footer, list)
            .into_iter()
            .flat_map(|l| l.children().filter(move |c| c.is_element() && c.tag_name().name() == item))
            .filter_map(|c| Some((c.attribute(attr)?.to_string(), text_of(Some(c))?.parse().ok()?)))
            .collect()
    };
    if counts("RuleCounts", "RuleCount", "rule") != per_rule {
        r.push(pos(footer), Some("RuleCounts"), "per-rule counts differ from the body");
    }
    if counts("SeverityCounts", "SeverityCount", "severity") != per_sev {
        r.push(pos(footer), Some("SeverityCounts"), "per-severity counts differ from the body");
    }
}

// ---------------------------------------------------------------------------

fn legacy(text: &str, r: &mut ValidationReport) {
    let mut per_rule: BTreeMap<String, u64> = BTreeMap::new();
    let mut per_sev: BTreeMap<String, u64> = BTreeMap::new();
    let mut total = 0u64;
    let mut lines = text.lines().enumerate().peekable();
    let mut footer_at = None;
    for (i, line) in lines.by_ref() {
        let at = format!("line {}", i + 1);
        if line.starts_with("Findings: ") {
            footer_at = Some((i, line));
            break;
        }
        if line.is_empty() || line.starts_with("    ") {
            if line.starts_with("    ") && line.trim().is_empty() {
                r.push(at, None, "empty continuation line");
            }
            continue;
        }
        let Some(rest) = line.strip_prefix('[') else {
            r.push(at, None, format!("unexpected line {line:?}"));
            continue;
        };
        let Some((rule, rest)) = rest.split_once("] ") else {
            r.push(at, None, "finding line without rule id");
            continue;
        };
        let sev = rest.split(' ').next().unwrap_or("");
        if !matches!(sev, "High" | "Medium" | "Low") {
            r.push(at.clone(), None, format!("bad severity {sev:?}"));
        }
        if !rest.contains(" offset ") {
            r.push(at, None, "finding line without offset");
        }
        total += 1;
        *per_rule.entry(rule.to_string()).or_default() += 1;
        *per_sev.entry(sev.to_string()).or_default() += 1;
    }
    let Some((i, first)) = footer_at else {
        r.push(format!("line {}", text.lines().count() + 1), None, "missing summary (document truncated?)");
        return;
    };
    let mut stated_rules = BTreeMap::new();
    let mut stated_sev = BTreeMap::new();
    let mut saw_unknown = false;
    let stated_total = first["Findings: ".len()..].parse::<u64>().ok();
    if stated_total != Some(total) {
        r.push(format!("line {}", i + 1), None, format!("summary total {stated_total:?} but body has {total} findings"));
    }
    for (j, line) in lines {
        let at = format!("line {}", j + 1);
        let parsed = |s: &str| s.rsplit_once(": ").and_then(|(k, n)| Some((k.to_string(), n.parse::<u64>().ok()?)));
        if let Some(rest) = line.strip_prefix("Rule ") {
            match parsed(rest) {
                Some((k, n)) => drop(stated_rules.insert(k, n)),
                None => r.push(at, None, format!("bad rule count {line:?}")),
            }
        } else if let Some(rest) = line.strip_prefix("Severity ") {
            match parsed(rest) {
                Some((k, n)) => drop(stated_sev.insert(k, n)),
                None => r.push(at, None, format!("bad severity count {line:?}")),
            }
        } else if let Some(n) = line.strip_prefix("Unknown slices: ") {
            saw_unknown = n.parse::<u64>().is_ok();
        } else if !line.strip_prefix("Truncated: ").is_some_and(|s| !s.is_empty()) {
            r.push(at, None, format!("unexpected summary line {line:?}"));
        }
    }
    if !saw_unknown {
        r.push("summary", None, "missing unknown-slice count");
    }
    if stated_rules != per_rule {
        r.push("summary", None, "per-rule counts differ from the body");
    }
    if stated_sev != per_sev {
        r.push("summary", None, "per-severity counts differ from the body");
    }
}

// ---------------------------------------------------------------------------

fn jsonl(text: &str, r: &mut ValidationReport) {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let at = format!("line {}", i + 1);
        match serde_json::from_str::<Value>(line) {
            Ok(Value::Object(m)) => {
                for (k, v) in &m {
                    if v.as_str() == Some("") || v.as_array().is_some_and(Vec::is_empty) || v.as_object().is_some_and(|o| o.is_empty()) {
                        r.push(at.clone(), Some(k), "empty value");
                    }
                }
                records.push((at, m));
            }
            Ok(_) => r.push(at, None, "record is not an object"),
            Err(e) => r.push(at, None, format!("not JSON: {e}")),
        }
    }
    let kind = |m: &serde_json::Map<String, Value>| m.get("record").and_then(Value::as_str).unwrap_or("").to_string();
    if records.first().map(|(_, m)| kind(m)).as_deref() != Some("header") {
        r.push("line 1", None, "first record must be the header");
    }
    let Some((last_at, summary)) = records.last().filter(|(_, m)| kind(m) == "summary") else {
        r.push(format!("line {}", records.len() + 1), None, "missing summary record (document truncated?)");
        return;
    };
    let mut per_rule: BTreeMap<String, u64> = BTreeMap::new();
    let mut per_sev: BTreeMap<String, u64> = BTreeMap::new();
    let mut total = 0u64;
    for (at, m) in &records[1.min(records.len())..records.len() - 1] {
        if kind(m) != "finding" {
            r.push(at.clone(), None, format!("unexpected {:?} record", kind(m)));
            continue;
        }
        for field in ["id", "rule", "severity", "class", "method", "offset"] {
            if !m.contains_key(field) {
                r.push(at.clone(), Some(field), "missing field");
            }
        }
        total += 1;
        *per_rule.entry(m.get("rule").and_then(Value::as_str).unwrap_or("").to_string()).or_default() += 1;
        *per_sev.entry(m.get("severity").and_then(Value::as_str).unwrap_or("").to_string()).or_default() += 1;
    }
    let stated = summary.get("total").and_then(Value::as_u64);
    if stated != Some(total) {
        r.push(last_at.clone(), Some("total"), format!("summary total {stated:?} but body has {total} findings"));
    }
    let map = |k: &str| -> BTreeMap<String, u64> {
        summary
            .get(k)
            .and_then(Value::as_object)
            .map(|o| o.iter().filter_map(|(k, v)| Some((k.clone(), v.as_u64()?))).collect())
            .unwrap_or_default()
    };
    if map("rules") != per_rule {
        r.push(last_at.clone(), Some("rules"), "per-rule counts differ from the body");
    }
    if map("severities") != per_sev {
        r.push(last_at.clone(), Some("severities"), "per-severity counts differ from the body");
    }
    if summary.get("unknown_slices").and_then(Value::as_u64).is_none() {
        r.push(last_at.clone(), Some("unknown_slices"), "missing field");
    }
}
