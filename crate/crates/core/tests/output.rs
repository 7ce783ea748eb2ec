mod common;

use std::io::{self, Write};

use chrono::{TimeZone, Utc};
use common::{canon_jsonl, canon_legacy, canon_xml, empty_elements, end, finding, findings, header};
use cryptoslice::catalog::Severity;
use cryptoslice::output::schema::Schema;
use cryptoslice::output::{
    canonical_timestamp, render_document, start_analyzing, validate_document, validate_str, FormatKind, OutputError,
    OutputFormat, ScanEnd, REPORT_SCHEMA,
};
use cryptoslice::rules::BugInstance;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fmt(kind: FormatKind, streaming: bool) -> OutputFormat {
    OutputFormat { kind, streaming }
}

fn issue(line: Option<u32>) -> BugInstance {
    BugInstance {
        id: 0,
        rule_id: "CRY-03".into(),
        class_fqn: "com.acme.vault.LegacyCipher".into(),
        method_name: "seal".into(),
        method_descriptor: "([B)[B".into(),
        offset: 12,
        source_line: line,
        message: "Cipher.getInstance selects ECB".into(),
        severity: Severity::High,
        evidence: "\"AES\"".into(),
    }
}

fn doc(kind: FormatKind, streaming: bool, issues: &[BugInstance]) -> String {
    String::from_utf8(render_document(fmt(kind, streaming), &header(), issues, end())).unwrap()
}

// ---------------------------------------------------------------------------
// session lifecycle
// ---------------------------------------------------------------------------

#[test]
fn streaming_xml_writes_header_at_start() {
    let s = start_analyzing(header(), fmt(FormatKind::ScarfXml, true), Vec::new()).unwrap();
    let text = String::from_utf8(s.sink().clone()).unwrap();
    assert!(text.starts_with("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<AnalyzerReport>"));
    assert!(text.trim_end().ends_with("</Header>"));
    assert!(!text.contains("BugInstance"));
}

#[test]
fn streaming_legacy_writes_nothing_at_start() {
    let s = start_analyzing(header(), fmt(FormatKind::Legacy, true), Vec::new()).unwrap();
    assert!(s.sink().is_empty());
}

#[test]
fn buffered_sessions_write_only_at_stop() {
    for kind in FormatKind::ALL {
        let mut s = start_analyzing(header(), fmt(kind, false), Vec::new()).unwrap();
        s.add_issue(&issue(Some(3))).unwrap();
        assert!(s.sink().is_empty(), "{kind}");
        s.stop_analyzing(end()).unwrap();
        assert!(!s.sink().is_empty());
    }
}

#[test]
fn streaming_flushes_each_issue() {
    for kind in FormatKind::ALL {
        let mut s = start_analyzing(header(), fmt(kind, true), Vec::new()).unwrap();
        let before = s.sink().len();
        s.add_issue(&issue(Some(3))).unwrap();
        let text = String::from_utf8(s.sink()[before..].to_vec()).unwrap();
        assert!(text.contains("LegacyCipher"), "{kind}: {text:?}");
    }
}

#[test]
fn stopped_session_rejects_further_calls() {
    let mut s = start_analyzing(header(), fmt(FormatKind::Default, true), Vec::new()).unwrap();
    s.stop_analyzing(end()).unwrap();
    assert!(s.is_closed());
    assert!(matches!(s.add_issue(&issue(None)), Err(OutputError::SessionClosed)));
    assert!(matches!(s.stop_analyzing(end()), Err(OutputError::SessionClosed)));
}

struct Broken;

impl Write for Broken {
    fn write(&mut self, _: &[u8]) -> io::Result<usize> {
        Err(io::Error::new(io::ErrorKind::PermissionDenied, "read-only"))
    }
    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

#[test]
fn unwritable_sink_is_reported() {
    let err = start_analyzing(header(), fmt(FormatKind::ScarfXml, true), Broken).err().unwrap();
    assert!(matches!(err, OutputError::SinkUnwritable(_)));
    let mut s = start_analyzing(header(), fmt(FormatKind::ScarfXml, false), Broken).unwrap();
    s.add_issue(&issue(None)).unwrap();
    assert!(matches!(s.stop_analyzing(end()), Err(OutputError::SinkUnwritable(_))));
}

// ---------------------------------------------------------------------------
// rendering
// ---------------------------------------------------------------------------

#[test]
fn missing_line_leaves_no_line_element() {
    let text = doc(FormatKind::ScarfXml, true, &[issue(None)]);
    assert!(!text.contains("<Line"));
    assert!(empty_elements(&text).is_empty());
    let json = doc(FormatKind::Default, true, &[issue(None)]);
    assert!(!json.contains("\"line\""));
}

#[test]
fn full_issue_has_every_sub_element() {
    let c = canon_xml(&doc(FormatKind::ScarfXml, true, &[issue(Some(41))]));
    let body = c.children.iter().find(|n| n.name == "BugInstances").unwrap();
    let b = &body.children[0];
    assert_eq!(b.attrs, vec![("id".to_string(), "0".to_string())]);
    let names: Vec<&str> = b.children.iter().map(|n| n.name.as_str()).collect();
    assert_eq!(names, ["RuleId", "Severity", "Location", "Message", "Evidence"]);
    let loc: Vec<(&str, &str)> = b.children[2].children.iter().map(|n| (n.name.as_str(), n.text.as_str())).collect();
    assert_eq!(
        loc,
        [("Class", "com.acme.vault.LegacyCipher"), ("Method", "seal([B)[B"), ("Offset", "12"), ("Line", "41")]
    );
}

#[test]
fn zero_issues_has_no_body_container() {
    let text = doc(FormatKind::ScarfXml, true, &[]);
    assert!(!text.contains("BugInstances"));
    let c = canon_xml(&text);
    let names: Vec<&str> = c.children.iter().map(|n| n.name.as_str()).collect();
    assert_eq!(names, ["Header", "Footer"]);
    assert!(validate_str(&text, FormatKind::ScarfXml).is_valid());
}

#[test]
fn footer_total_counts_issues() {
    let issues: Vec<BugInstance> = (0..3).map(|i| BugInstance { id: i, ..issue(Some(1)) }).collect();
    let c = canon_xml(&doc(FormatKind::ScarfXml, false, &issues));
    let footer = c.children.iter().find(|n| n.name == "Footer").unwrap();
    let total = footer.children.iter().find(|n| n.name == "Total").unwrap();
    assert_eq!(total.text, "3");
    assert!(doc(FormatKind::Legacy, false, &issues).contains("Findings: 3\n"));
    let summary = canon_jsonl(&doc(FormatKind::Default, false, &issues)).pop().unwrap();
    assert_eq!(summary["total"], 3);
    assert_eq!(summary["rules"]["CRY-03"], 3);
}

#[test]
fn truncation_is_marked_in_every_format() {
    let stop = ScanEnd { truncated: Some("timeout after 1 s".into()), ..end() };
    for kind in FormatKind::ALL {
        let text = String::from_utf8(render_document(fmt(kind, true), &header(), &[issue(None)], stop.clone())).unwrap();
        assert!(text.contains("timeout after 1 s"), "{kind}");
        assert!(validate_str(&text, kind).is_valid(), "{kind}: {:?}", validate_str(&text, kind));
    }
}

#[test]
fn timestamps_are_canonical() {
    let t = Utc.with_ymd_and_hms(2026, 3, 1, 9, 30, 0).unwrap();
    assert_eq!(canonical_timestamp(&t), "2026-03-01T09:30:00Z");
    assert!(doc(FormatKind::ScarfXml, false, &[]).contains("<Started>2026-03-01T09:30:00Z</Started>"));
}

#[test]
fn awkward_text_survives_escaping() {
    let mut b = issue(Some(1));
    b.class_fqn = "a<b>&\"c\"".into();
    b.message = "tab\there\nnext".into();
    b.evidence = "\u{1}\u{fffe}x".into();
    let text = doc(FormatKind::ScarfXml, true, &[b.clone()]);
    assert!(validate_str(&text, FormatKind::ScarfXml).is_valid());
    let c = canon_xml(&text);
    let inst = &c.children[1].children[0];
    assert_eq!(inst.children[2].children[0].text, b.class_fqn);
    assert_eq!(inst.children[3].text, b.message);
    let legacy = doc(FormatKind::Legacy, true, &[b.clone()]);
    assert!(validate_str(&legacy, FormatKind::Legacy).is_valid());
    assert_eq!(legacy.lines().count(), 3 + 1 + 4);
    let json = doc(FormatKind::Default, true, &[b.clone()]);
    assert_eq!(canon_jsonl(&json)[1]["message"], b.message.as_str());
}

#[test]
fn legacy_has_no_header_content() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let text = doc(FormatKind::Legacy, true, &findings(&mut rng, 20));
    for marker in ["HDRMARK", "2026-03-01T09:30:00Z", "cryptoslice", "Archive"] {
        assert!(!text.contains(marker), "{marker}");
    }
}

// ---------------------------------------------------------------------------
// validate_document
// ---------------------------------------------------------------------------

#[test]
fn shipped_schema_parses() {
    assert_eq!(Schema::parse(REPORT_SCHEMA).unwrap().root_name(), "AnalyzerReport");
    assert!(Schema::parse("<xs:schema xmlns:xs=\"http://www.w3.org/2001/XMLSchema\"><xs:group/></xs:schema>").is_err());
    assert!(Schema::parse(
        "<xs:schema xmlns:xs=\"http://www.w3.org/2001/XMLSchema\"><xs:element name=\"a\" type=\"Missing\"/></xs:schema>"
    )
    .is_err());
}

#[test]
fn injected_empty_element_is_named() {
    let good = doc(FormatKind::ScarfXml, true, &[issue(Some(4))]);
    let bad = good.replacen("<Line>4</Line>", "<Line></Line>", 1);
    let r = validate_str(&bad, FormatKind::ScarfXml);
    assert!(r.violations.iter().any(|v| v.element.as_deref() == Some("Line")), "{r:?}");
    let bad = good.replacen("</Location>", "</Location>\n      <Message/>", 1);
    let r = validate_str(&bad, FormatKind::ScarfXml);
    assert!(r.violations.iter().any(|v| v.element.as_deref() == Some("Message")), "{r:?}");
}

#[test]
fn schema_catches_structural_mutations() {
    let good = doc(FormatKind::ScarfXml, false, &[issue(Some(4))]);
    let cases = [
        good.replacen("<Severity>High</Severity>", "<Severity>Severe</Severity>", 1),
        good.replacen("<Offset>12</Offset>", "<Offset>-1</Offset>", 1),
        good.replacen("<RuleId>CRY-03</RuleId>\n", "", 1),
        good.replacen("<BugInstance id=\"0\">", "<BugInstance id=\"0\" extra=\"1\">", 1),
        good.replacen("<BugInstance id=\"0\">", "<BugInstance>", 1),
        good.replacen("</Footer>", "<Bogus>1</Bogus></Footer>", 1),
        good.replacen("<Total>1</Total>", "<Total>2</Total>", 1),
        good.replacen("<RuleCount rule=\"CRY-03\">1", "<RuleCount rule=\"CRY-04\">1", 1),
        good.replacen("<AnalyzerReport>", "<Report>", 1).replacen("</AnalyzerReport>", "</Report>", 1),
    ];
    for (i, bad) in cases.iter().enumerate() {
        assert_ne!(bad, &good, "case {i} did not mutate");
        assert!(!validate_str(bad, FormatKind::ScarfXml).is_valid(), "case {i}");
    }
}

#[test]
fn truncated_stream_is_not_well_formed() {
    let good = doc(FormatKind::ScarfXml, true, &[issue(Some(4)), issue(None)]);
    let cut = &good[..good.len() / 2];
    let r = validate_str(cut, FormatKind::ScarfXml);
    assert!(r.violations.iter().any(|v| v.message.contains("not well-formed")), "{r:?}");

    let legacy = doc(FormatKind::Legacy, true, &[issue(Some(4))]);
    let cut = legacy.split("Findings:").next().unwrap();
    assert!(validate_str(cut, FormatKind::Legacy).violations.iter().any(|v| v.message.contains("missing summary")));

    let json = doc(FormatKind::Default, true, &[issue(Some(4))]);
    let cut: String = json.lines().take(2).map(|l| format!("{l}\n")).collect();
    assert!(validate_str(&cut, FormatKind::Default).violations.iter().any(|v| v.message.contains("missing summary")));
}

#[test]
fn text_formats_catch_count_mismatch() {
    let legacy = doc(FormatKind::Legacy, true, &[issue(Some(4))]);
    assert!(!validate_str(&legacy.replace("Findings: 1", "Findings: 2"), FormatKind::Legacy).is_valid());
    let json = doc(FormatKind::Default, true, &[issue(Some(4))]);
    assert!(!validate_str(&json.replace("\"total\":1", "\"total\":0"), FormatKind::Default).is_valid());
    assert!(!validate_str(&json.replace("\"rule\":\"CRY-03\"", "\"rule\":\"\""), FormatKind::Default).is_valid());
}

#[test]
fn validate_document_reads_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.xml");
    std::fs::write(&path, doc(FormatKind::ScarfXml, true, &[issue(Some(4))])).unwrap();
    assert!(validate_document(&path, FormatKind::ScarfXml).is_valid());
    assert!(!validate_document(&dir.path().join("none.xml"), FormatKind::ScarfXml).is_valid());
}

// ---------------------------------------------------------------------------
// properties
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn streamed_and_buffered_documents_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let issues = findings(&mut rng, 60);
        let x = (doc(FormatKind::ScarfXml, true, &issues), doc(FormatKind::ScarfXml, false, &issues));
        prop_assert_eq!(canon_xml(&x.0), canon_xml(&x.1));
        let l = (doc(FormatKind::Legacy, true, &issues), doc(FormatKind::Legacy, false, &issues));
        prop_assert_eq!(canon_legacy(&l.0), canon_legacy(&l.1));
        let d = (doc(FormatKind::Default, true, &issues), doc(FormatKind::Default, false, &issues));
        prop_assert_eq!(canon_jsonl(&d.0), canon_jsonl(&d.1));
    }

    #[test]
    fn every_document_validates(seed in any::<u64>(), streaming in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let issues = findings(&mut rng, 40);
        for kind in FormatKind::ALL {
            let text = doc(kind, streaming, &issues);
            let r = validate_str(&text, kind);
            prop_assert!(r.is_valid(), "{}: {:?}", kind, r.violations);
        }
        let xml = doc(FormatKind::ScarfXml, streaming, &issues);
        prop_assert!(empty_elements(&xml).is_empty());
    }

    #[test]
    fn header_bytes_ignore_findings(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = doc(FormatKind::ScarfXml, true, &findings(&mut rng, 10));
        let b = doc(FormatKind::ScarfXml, true, &[finding(&mut rng, 0)]);
        let head = |s: &str| s[..s.find("</Header>").unwrap()].to_string();
        prop_assert_eq!(head(&a), head(&b));
        let ja = doc(FormatKind::Default, true, &findings(&mut rng, 10));
        let jb = doc(FormatKind::Default, true, &[]);
        prop_assert_eq!(ja.lines().next(), jb.lines().next());
    }
}

#[test]
fn streaming_buffer_does_not_grow_with_issue_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let one = finding(&mut rng, 0);
    let peak = |n: u64, streaming: bool| {
        let mut s = start_analyzing(header(), fmt(FormatKind::ScarfXml, streaming), io::sink()).unwrap();
        for i in 0..n {
            s.add_issue(&BugInstance { id: i, ..one.clone() }).unwrap();
        }
        s.stop_analyzing(end()).unwrap();
        s.peak_buffer_bytes()
    };
    let base = peak(1, true);
    assert!(peak(10_000, true) <= 2 * base, "{} vs {base}", peak(10_000, true));
    assert!(peak(1_000, false) > 100 * base / 2);
}
