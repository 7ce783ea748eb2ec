//! Helpers shared by the output and acceptance tests.
#![allow(dead_code)]

pub mod fixtures;

use chrono::{TimeZone, Utc};
use cryptoslice::catalog::Severity;
use cryptoslice::intake::SourceType;
use cryptoslice::output::{Header, ScanEnd};
use cryptoslice::rules::BugInstance;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn header() -> Header {
    let mut h = Header::new(Utc.with_ymd_and_hms(2026, 3, 1, 9, 30, 0).unwrap(), SourceType::Archive);
    h.inputs = vec!["HDRMARK-input/app.jar".into()];
    h.flags = vec![("format".into(), Some("scarf".into())), ("stream".into(), None)];
    h.tool_version = "HDRMARK-9.9".into();
    h
}

pub fn end() -> ScanEnd {
    ScanEnd::complete(Utc.with_ymd_and_hms(2026, 3, 1, 9, 31, 5).unwrap(), 2)
}

const RULES: [&str; 8] = ["CRY-01", "CRY-02", "CRY-03", "CRY-04", "CRY-05", "CRY-06", "CRY-07", "CRY-08"];
const AWKWARD: [&str; 8] = ["", "a<b", "x & y", "\"q\"", "tab\there", "line\nbreak", "\u{1}ctl", "ünïcødé ✓"];

fn word<R: Rng>(rng: &mut R, allow_empty: bool) -> String {
    if rng.gen_bool(0.2) {
        let w = *AWKWARD.choose(rng).unwrap();
        if !w.is_empty() || allow_empty {
            return w.to_string();
        }
    }
    let n = rng.gen_range(if allow_empty { 0 } else { 1 }..12);
    (0..n).map(|_| *b"abcdefghijklmnopqrstuvwxyzABCDEFGH0123456789_$".choose(rng).unwrap() as char).collect()
}

pub fn finding<R: Rng>(rng: &mut R, id: u64) -> BugInstance {
    BugInstance {
        id,
        rule_id: RULES.choose(rng).unwrap().to_string(),
        class_fqn: format!("com.{}.{}", word(rng, false), word(rng, false)),
        method_name: word(rng, false),
        method_descriptor: "(Ljava/lang/String;)V".into(),
        offset: rng.gen_range(0..70_000),
        source_line: rng.gen_bool(0.6).then(|| rng.gen_range(1..5_000)),
        message: word(rng, true),
        severity: *Severity::ALL.choose(rng).unwrap(),
        evidence: word(rng, true),
    }
}

pub fn findings<R: Rng>(rng: &mut R, max: usize) -> Vec<BugInstance> {
    let n = rng.gen_range(0..=max);
    (0..n as u64).map(|i| finding(rng, i)).collect()
}

/// A parsed XML tree with attributes sorted and whitespace-only text
/// dropped, for comparing documents regardless of layout.
#[derive(Debug, PartialEq, Eq)]
pub struct Canon {
    pub name: String,
    pub attrs: Vec<(String, String)>,
    pub text: String,
    pub children: Vec<Canon>,
}

pub fn canon_xml(text: &str) -> Canon {
    let doc = roxmltree::Document::parse(text).expect("well-formed");
    fn walk(n: roxmltree::Node) -> Canon {
        let mut attrs: Vec<(String, String)> =
            n.attributes().map(|a| (a.name().to_string(), a.value().to_string())).collect();
        attrs.sort();
        let text: String = n.children().filter(|c| c.is_text()).filter_map(|c| c.text()).collect();
        Canon {
            name: n.tag_name().name().to_string(),
            attrs,
            text: if text.trim().is_empty() { String::new() } else { text },
            children: n.children().filter(|c| c.is_element()).map(walk).collect(),
        }
    }
    walk(doc.root_element())
}

pub fn canon_jsonl(text: &str) -> Vec<serde_json::Value> {
    text.lines().map(|l| serde_json::from_str(l).expect("JSON line")).collect()
}

pub fn canon_legacy(text: &str) -> Vec<String> {
    text.lines().map(|l| l.trim_end().to_string()).filter(|l| !l.is_empty()).collect()
}

/// Elements with no attributes, no child elements and no text.
pub fn empty_elements(text: &str) -> Vec<String> {
    let doc = roxmltree::Document::parse(text).expect("well-formed");
    doc.descendants()
        .filter(|n| n.is_element())
        .filter(|n| {
            n.attributes().len() == 0
                && n.children().all(|c| !c.is_element() && c.text().is_none_or(str::is_empty))
        })
        .map(|n| n.tag_name().name().to_string())
        .collect()
}
