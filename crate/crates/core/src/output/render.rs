use std::fmt::Write as _;

use serde::Serialize;

use super::{canonical_timestamp, FormatKind, Footer, Header};
use crate::catalog::Severity;
use crate::rules::BugInstance;

pub(super) fn open(kind: FormatKind, h: &Header, out: &mut String) {
    match kind {
        FormatKind::ScarfXml => xml_open(h, out),
        FormatKind::Legacy => {}
        FormatKind::Default => json_line(&HeaderRecord::from(h), out),
    }
}

pub(super) fn body_open(kind: FormatKind, out: &mut String) {
    if kind == FormatKind::ScarfXml {
        out.push_str("  <BugInstances>\n");
    }
}

pub(super) fn issue(kind: FormatKind, b: &BugInstance, out: &mut String) {
    match kind {
        FormatKind::ScarfXml => xml_issue(b, out),
        FormatKind::Legacy => legacy_issue(b, out),
        FormatKind::Default => json_line(&FindingRecord::from(b), out),
    }
}

pub(super) fn body_close(kind: FormatKind, out: &mut String) {
    if kind == FormatKind::ScarfXml {
        out.push_str("  </BugInstances>\n");
    }
}

pub(super) fn close(kind: FormatKind, f: &Footer, out: &mut String) {
    match kind {
        FormatKind::ScarfXml => xml_close(f, out),
        FormatKind::Legacy => legacy_footer(f, out),
        FormatKind::Default => json_line(&SummaryRecord::from(f), out),
    }
}

// ---------------------------------------------------------------------------
// ScarfXml
// ---------------------------------------------------------------------------

/// Escapes markup and replaces characters XML 1.0 cannot carry.
fn xml_escape(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\t' | '\n' | '\r' => {
                let _ = write!(out, "&#{};", c as u32);
            }
            '\u{0}'..='\u{1f}' | '\u{fffe}' | '\u{ffff}' => {
                let _ = write!(out, "\\u{{{:x}}}", c as u32);
            }
            c => out.push(c),
        }
    }
}

/// `<name>text</name>` on its own line, or nothing when `text` is empty.
fn xml_leaf(indent: usize, name: &str, text: &str, out: &mut String) {
    if text.is_empty() {
        return;
    }
    pad(indent, out);
    let _ = write!(out, "<{name}>");
    xml_escape(text, out);
    let _ = writeln!(out, "</{name}>");
}

fn pad(indent: usize, out: &mut String) {
    out.extend(std::iter::repeat_n(' ', indent));
}

fn xml_open(h: &Header, out: &mut String) {
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<AnalyzerReport>\n  <Header>\n");
    out.push_str("    <Tool name=\"");
    xml_escape(&h.tool_name, out);
    out.push_str("\" version=\"");
    xml_escape(&h.tool_version, out);
    out.push_str("\"/>\n");
    xml_leaf(4, "Started", &canonical_timestamp(&h.started), out);
    xml_leaf(4, "SourceType", h.source_type.name(), out);
    if h.inputs.iter().any(|i| !i.is_empty()) {
        out.push_str("    <Inputs>\n");
        for i in &h.inputs {
            xml_leaf(6, "Input", i, out);
        }
        out.push_str("    </Inputs>\n");
    }
    if h.flags.iter().any(|(n, _)| !n.is_empty()) {
        out.push_str("    <Flags>\n");
        for (name, value) in h.flags.iter().filter(|(n, _)| !n.is_empty()) {
            out.push_str("      <Flag name=\"");
            xml_escape(name, out);
            out.push('"');
            if let Some(v) = value.as_deref().filter(|v| !v.is_empty()) {
                out.push_str(" value=\"");
                xml_escape(v, out);
                out.push('"');
            }
            out.push_str("/>\n");
        }
        out.push_str("    </Flags>\n");
    }
    out.push_str("  </Header>\n");
}

fn xml_issue(b: &BugInstance, out: &mut String) {
    let _ = writeln!(out, "    <BugInstance id=\"{}\">", b.id);
    xml_leaf(6, "RuleId", &b.rule_id, out);
    xml_leaf(6, "Severity", b.severity.as_str(), out);
    out.push_str("      <Location>\n");
    xml_leaf(8, "Class", &b.class_fqn, out);
    xml_leaf(8, "Method", &b.method_signature(), out);
    xml_leaf(8, "Offset", &b.offset.to_string(), out);
    if let Some(line) = b.source_line {
        xml_leaf(8, "Line", &line.to_string(), out);
    }
    out.push_str("      </Location>\n");
    xml_leaf(6, "Message", &b.message, out);
    xml_leaf(6, "Evidence", &b.evidence, out);
    out.push_str("    </BugInstance>\n");
}

fn xml_close(f: &Footer, out: &mut String) {
    out.push_str("  <Footer>\n");
    xml_leaf(4, "Finished", &canonical_timestamp(&f.finished), out);
    xml_leaf(4, "Total", &f.total.to_string(), out);
    if !f.per_rule.is_empty() {
        out.push_str("    <RuleCounts>\n");
        for (rule, n) in &f.per_rule {
            out.push_str("      <RuleCount rule=\"");
            xml_escape(rule, out);
            let _ = writeln!(out, "\">{n}</RuleCount>");
        }
        out.push_str("    </RuleCounts>\n");
    }
    let severities = severities(f);
    if !severities.is_empty() {
        out.push_str("    <SeverityCounts>\n");
        for (s, n) in severities {
            let _ = writeln!(out, "      <SeverityCount severity=\"{s}\">{n}</SeverityCount>");
        }
        out.push_str("    </SeverityCounts>\n");
    }
    xml_leaf(4, "UnknownSlices", &f.unknown_slices.to_string(), out);
    if let Some(reason) = f.truncated.as_deref() {
        out.push_str("    <Truncated reason=\"");
        xml_escape(if reason.is_empty() { "unspecified" } else { reason }, out);
        out.push_str("\"/>\n");
    }
    out.push_str("  </Footer>\n</AnalyzerReport>\n");
}

/// Non-zero severity counts, most severe first.
fn severities(f: &Footer) -> Vec<(Severity, u64)> {
    Severity::ALL.iter().filter_map(|s| f.per_severity.get(s).filter(|n| **n > 0).map(|n| (*s, *n))).collect()
}

// ---------------------------------------------------------------------------
// Legacy
// ---------------------------------------------------------------------------

/// Control characters escaped so each field stays on one line.
fn one_line(s: &str, out: &mut String) {
    for c in s.chars() {
        if c.is_control() {
            let _ = write!(out, "\\u{{{:x}}}", c as u32);
        } else {
            out.push(c);
        }
    }
}

fn legacy_issue(b: &BugInstance, out: &mut String) {
    out.push('[');
    one_line(&b.rule_id, out);
    let _ = write!(out, "] {} ", b.severity);
    one_line(&b.class_fqn, out);
    out.push('.');
    one_line(&b.method_signature(), out);
    let _ = write!(out, " offset {}", b.offset);
    if let Some(line) = b.source_line {
        let _ = write!(out, " line {line}");
    }
    out.push('\n');
    if !b.message.is_empty() {
        out.push_str("    ");
        one_line(&b.message, out);
        out.push('\n');
    }
    if !b.evidence.is_empty() {
        out.push_str("    evidence: ");
        one_line(&b.evidence, out);
        out.push('\n');
    }
    out.push('\n');
}

fn legacy_footer(f: &Footer, out: &mut String) {
    let _ = writeln!(out, "Findings: {}", f.total);
    for (rule, n) in &f.per_rule {
        out.push_str("Rule ");
        one_line(rule, out);
        let _ = writeln!(out, ": {n}");
    }
    for (s, n) in severities(f) {
        let _ = writeln!(out, "Severity {s}: {n}");
    }
    let _ = writeln!(out, "Unknown slices: {}", f.unknown_slices);
    if let Some(reason) = f.truncated.as_deref() {
        out.push_str("Truncated: ");
        one_line(if reason.is_empty() { "unspecified" } else { reason }, out);
        out.push('\n');
    }
}

// ---------------------------------------------------------------------------
// Default (one JSON record per line)
// ---------------------------------------------------------------------------

fn json_line<T: Serialize>(record: &T, out: &mut String) {
    out.push_str(&serde_json::to_string(record).expect("records serialize"));
    out.push('\n');
}

fn non_empty(s: &str) -> Option<&str> {
    (!s.is_empty()).then_some(s)
}

#[derive(Serialize)]
struct HeaderRecord<'a> {
    record: &'static str,
    tool: &'a str,
    version: &'a str,
    started: String,
    source_type: &'static str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    inputs: Vec<&'a str>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    flags: Vec<FlagRecord<'a>>,
}

#[derive(Serialize)]
struct FlagRecord<'a> {
    name: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<&'a str>,
}

impl<'a> From<&'a Header> for HeaderRecord<'a> {
    fn from(h: &'a Header) -> Self {
        HeaderRecord {
            record: "header",
            tool: &h.tool_name,
            version: &h.tool_version,
            started: canonical_timestamp(&h.started),
            source_type: h.source_type.name(),
            inputs: h.inputs.iter().map(String::as_str).filter(|s| !s.is_empty()).collect(),
            flags: h
                .flags
                .iter()
                .filter(|(n, _)| !n.is_empty())
                .map(|(n, v)| FlagRecord { name: n, value: v.as_deref().and_then(non_empty) })
                .collect(),
        }
    }
}

#[derive(Serialize)]
struct FindingRecord<'a> {
    record: &'static str,
    id: u64,
    rule: &'a str,
    severity: &'static str,
    class: &'a str,
    method: String,
    offset: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    evidence: Option<&'a str>,
}

impl<'a> From<&'a BugInstance> for FindingRecord<'a> {
    fn from(b: &'a BugInstance) -> Self {
        FindingRecord {
            record: "finding",
            id: b.id,
            rule: &b.rule_id,
            severity: b.severity.as_str(),
            class: &b.class_fqn,
            method: b.method_signature(),
            offset: b.offset,
            line: b.source_line,
            message: non_empty(&b.message),
            evidence: non_empty(&b.evidence),
        }
    }
}

#[derive(Serialize)]
struct SummaryRecord<'a> {
    record: &'static str,
    finished: String,
    total: u64,
    #[serde(skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    rules: &'a std::collections::BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    severities: std::collections::BTreeMap<&'static str, u64>,
    unknown_slices: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    truncated: Option<&'a str>,
}

impl<'a> From<&'a Footer> for SummaryRecord<'a> {
    fn from(f: &'a Footer) -> Self {
        SummaryRecord {
            record: "summary",
            finished: canonical_timestamp(&f.finished),
            total: f.total,
            rules: &f.per_rule,
            severities: severities(f).into_iter().map(|(s, n)| (s.as_str(), n)).collect(),
            unknown_slices: f.unknown_slices,
            truncated: f.truncated.as_deref().map(|r| if r.is_empty() { "unspecified" } else { r }),
        }
    }
}
