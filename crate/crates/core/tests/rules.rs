use std::collections::BTreeSet;

use cryptoslice::catalog::{Catalog, CatalogError, Predicate, Severity};
use cryptoslice::classfile::{parse_class_file, ClassFile};
use cryptoslice::intake::ScanSet;
use cryptoslice::rules::{evaluate, rule_catalog, rules_from, run_rules, BugInstance, Rule};
use cryptoslice::slicer::{
    backward_slice, find_criteria, ApiTarget, IrIndex, MethodId, Resolved, Slice, SliceCriterion, UnknownReason,
    Value, DEFAULT_MAX_DEPTH,
};
use jvmgen::corpus::{self, SourceUnit, PLANTED};
use proptest::prelude::*;

fn classes_of(units: &[SourceUnit]) -> Vec<ClassFile> {
    units
        .iter()
        .flat_map(|u| &u.classes)
        .map(|c| parse_class_file(&c.bytes, "fixture.class").unwrap())
        .collect()
}

fn scan(units: &[SourceUnit]) -> Vec<BugInstance> {
    let classes = classes_of(units);
    let catalog = Catalog::shipped();
    let set = ScanSet::from_classes(classes.clone());
    let index = IrIndex::new(&classes, catalog);
    let slices: Vec<Slice> =
        find_criteria(&set, catalog).iter().map(|c| backward_slice(c, &index, DEFAULT_MAX_DEPTH)).collect();
    run_rules(&rule_catalog(), &slices)
}

fn rule(id: &str) -> Rule {
    rule_catalog().into_iter().find(|r| r.id == id).unwrap()
}

/// A slice at a call of `class.name desc` whose watched args resolve as given.
fn slice_at(class: &str, name: &str, desc: &str, args: Vec<(u8, Resolved)>) -> Slice {
    Slice {
        criterion: SliceCriterion {
            method: MethodId { class: 0, method: 0 },
            class_fqn: "app.Main".into(),
            method_name: "run".into(),
            method_descriptor: "()V".into(),
            offset: 7,
            line: Some(12),
            target: ApiTarget { class: class.into(), name: name.into(), descriptor: desc.into() },
            watched: args.iter().map(|(k, _)| *k).collect(),
        },
        resolved_args: args,
        depth_reached: 0,
    }
}

fn cipher(arg: Resolved) -> Slice {
    slice_at("javax.crypto.Cipher", "getInstance", "(Ljava/lang/String;)Ljavax/crypto/Cipher;", vec![(0, arg)])
}

fn digest(arg: Resolved) -> Slice {
    slice_at(
        "java.security.MessageDigest",
        "getInstance",
        "(Ljava/lang/String;)Ljava/security/MessageDigest;",
        vec![(0, arg)],
    )
}

fn text(s: &str) -> Resolved {
    Resolved::Constant(Value::Text(s.into()))
}

// ---------------------------------------------------------------------------
// catalog
// ---------------------------------------------------------------------------

#[test]
fn shipped_catalog_has_eight_rules_in_id_order() {
    let rules = rule_catalog();
    assert_eq!(rules.len(), 8);
    let ids: Vec<&str> = rules.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, ["CRY-01", "CRY-02", "CRY-03", "CRY-04", "CRY-05", "CRY-06", "CRY-07", "CRY-08"]);
    assert_eq!(rule_catalog(), rules);
}

#[test]
fn every_rule_watches_catalogued_apis() {
    let catalog = Catalog::shipped();
    for r in rule_catalog() {
        assert!(!r.api_targets.is_empty(), "{} has no targets", r.id);
        for a in &r.api_targets {
            assert!(catalog.apis().contains(a));
            assert_eq!(a.rule_id, r.id);
        }
    }
}

#[test]
fn rule_severities_and_predicates() {
    let expect = [
        ("CRY-01", Severity::High, Predicate::HardcodedBytes),
        ("CRY-02", Severity::High, Predicate::HardcodedText),
        ("CRY-03", Severity::High, Predicate::EcbTransform),
        ("CRY-04", Severity::Medium, Predicate::BrokenDigest),
        ("CRY-05", Severity::Medium, Predicate::ConstantSeed),
        ("CRY-06", Severity::Medium, Predicate::HardcodedBytes),
        ("CRY-07", Severity::Low, Predicate::HardcodedBytes),
        ("CRY-08", Severity::Low, Predicate::CleartextUrl),
    ];
    for (id, sev, pred) in expect {
        let r = rule(id);
        assert_eq!((r.severity, r.predicate), (sev, pred), "{id}");
        assert!(r.message_template.contains("{evidence}"));
    }
}

#[test]
fn catalog_text_round_trips_through_parse() {
    let reparsed = Catalog::parse(Catalog::shipped_text()).unwrap();
    assert_eq!(rules_from(&reparsed), rule_catalog());
}

#[test]
fn custom_catalog_adds_a_rule_without_code_change() {
    let source = "rule | X-1 | Low | broken_digest | Weak | {api} used {evidence}\n\
                api | com.example.Hasher | of | (Ljava/lang/String;)[B | 0 | X-1\n";
    let catalog = Catalog::parse(source).unwrap();
    let rules = rules_from(&catalog);
    assert_eq!(rules.len(), 1);
    let s = slice_at("com.example.Hasher", "of", "(Ljava/lang/String;)[B", vec![(0, text("md5"))]);
    let found = evaluate(&s, &rules[0]);
    assert_eq!(found.len(), 1);
    assert_eq!(found[0].message, "Hasher.of used \"md5\"");
}

#[test]
fn catalog_rejects_malformed_lines() {
    let cases = [
        ("rule | A | High | hardcoded_bytes | t\n", 1),
        ("rule | A | Severe | hardcoded_bytes | t | m\n", 1),
        ("rule | A | High | guesswork | t | m\n", 1),
        ("rule | A | High | hardcoded_bytes | t | m\nrule | A | Low | hardcoded_bytes | t | m\n", 2),
        ("rule | A | High | hardcoded_bytes | t | m\n\napi | x.Y | f | (I)V | 0 | B\n", 3),
        ("rule | A | High | hardcoded_bytes | t | m\napi | x.Y | f | (I)V | 1 | A\n", 2),
        ("rule | A | High | hardcoded_bytes | t | m\napi | x.Y | f | (I | 0 | A\n", 2),
        ("rule | A | High | hardcoded_bytes | t | m\napi | x/Y | f | (I)V | 0 | A\n", 2),
        ("rule | A | High | hardcoded_bytes | t | m\napi | x.Y | f | (I)V | 0 | A\napi | x.Y | f | (I)V | 0 | A\n", 3),
        ("entry | A\n", 1),
    ];
    for (text, line) in cases {
        match Catalog::parse(text) {
            Err(CatalogError::Invalid { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?} gave {other:?}"),
        }
    }
}

#[test]
fn catalog_load_reports_unreadable_path() {
    let err = Catalog::load(std::path::Path::new("/nonexistent/catalog.txt")).unwrap_err();
    assert!(matches!(err, CatalogError::Unreadable { .. }));
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

#[test]
fn ecb_transform_fires_high() {
    let found = evaluate(&cipher(text("AES/ECB/PKCS5Padding")), &rule("CRY-03"));
    assert_eq!(found.len(), 1);
    let f = &found[0];
    assert_eq!(f.severity, Severity::High);
    assert_eq!(f.rule_id, "CRY-03");
    assert_eq!(f.evidence, "\"AES/ECB/PKCS5Padding\"");
    assert_eq!((f.class_fqn.as_str(), f.offset, f.source_line), ("app.Main", 7, Some(12)));
    assert_eq!(f.method_signature(), "run()V");
    assert!(f.message.starts_with("Cipher.getInstance "));
}

#[test]
fn unknown_never_fires() {
    use UnknownReason::*;
    for reason in [DepthExceeded, DynamicValue, UnsupportedConstruct, ExternalInput] {
        for r in rule_catalog() {
            for a in &r.api_targets {
                let args = a.watched.iter().map(|&k| (k, Resolved::Unknown(reason))).collect();
                let s = slice_at(&a.class, &a.method, &a.descriptor, args);
                assert!(evaluate(&s, &r).is_empty(), "{} {:?}", r.id, reason);
            }
        }
    }
}

#[test]
fn admin_password_fires_credential_rule() {
    let s = slice_at(
        "java.sql.DriverManager",
        "getConnection",
        "(Ljava/lang/String;Ljava/lang/String;Ljava/lang/String;)Ljava/sql/Connection;",
        vec![(2, text("admin"))],
    );
    let found = evaluate(&s, &rule("CRY-02"));
    assert_eq!(found.len(), 1);
    assert_eq!(found[0].evidence, "\"admin\"");
    assert_eq!(found[0].message, "DriverManager.getConnection receives a password fixed in the class file: \"admin\"");
}

#[test]
fn rule_ignores_slices_of_other_apis() {
    assert!(evaluate(&cipher(text("MD5")), &rule("CRY-04")).is_empty());
    assert!(evaluate(&digest(text("AES")), &rule("CRY-03")).is_empty());
}

/// Independent reading of the JCA transformation defaults: a bare block
/// cipher name selects ECB; stream ciphers and asymmetric ciphers never do.
#[test]
fn ecb_transform_table() {
    let table = [
        ("AES", true),
        ("aes", true),
        ("DES", true),
        ("DESede", true),
        ("Blowfish", true),
        ("AES/ECB/PKCS5Padding", true),
        ("AES/ecb/NoPadding", true),
        ("DESede/ECB/NoPadding", true),
        ("AES_256/ECB/NoPadding", true),
        ("AES/CBC/PKCS5Padding", false),
        ("AES/GCM/NoPadding", false),
        ("AES/CTR/NoPadding", false),
        ("DES/CBC/PKCS5Padding", false),
        ("RSA", false),
        ("RSA/ECB/OAEPWithSHA-256AndMGF1Padding", false),
        ("RC4", false),
        ("ChaCha20-Poly1305", false),
        ("", false),
    ];
    let r = rule("CRY-03");
    for (t, expect) in table {
        assert_eq!(!evaluate(&cipher(text(t)), &r).is_empty(), expect, "{t:?}");
    }
}

#[test]
fn broken_digest_table() {
    let table = [
        ("MD5", true),
        ("md5", true),
        ("MD2", true),
        ("MD4", true),
        ("SHA-1", true),
        ("SHA1", true),
        ("SHA", true),
        ("SHA-256", false),
        ("SHA-512", false),
        ("SHA3-256", false),
        ("SHA-224", false),
    ];
    let r = rule("CRY-04");
    for (t, expect) in table {
        assert_eq!(!evaluate(&digest(text(t)), &r).is_empty(), expect, "{t:?}");
    }
}

#[test]
fn digest_through_field_reports_field_evidence() {
    let v = Resolved::FieldConstant {
        owner: "app.Const".into(),
        name: "ALG".into(),
        value: Value::Text("MD5".into()),
    };
    let found = evaluate(&digest(v), &rule("CRY-04"));
    assert_eq!(found.len(), 1);
    assert!(found[0].evidence.contains("app.Const.ALG"), "{}", found[0].evidence);
    assert!(found[0].evidence.contains("\"MD5\""));
}

#[test]
fn cleartext_url_table() {
    let r = rule("CRY-08");
    let table = [
        ("http://example.com/api", true),
        ("HTTP://EXAMPLE.COM", true),
        ("https://example.com", false),
        ("ftp://example.com", false),
        ("httpx://example.com", false),
        ("http:", false),
    ];
    for (u, expect) in table {
        let s = slice_at("java.net.URL", "<init>", "(Ljava/lang/String;)V", vec![(0, text(u))]);
        assert_eq!(!evaluate(&s, &r).is_empty(), expect, "{u:?}");
    }
}

#[test]
fn constant_seed_accepts_any_known_value() {
    let r = rule("CRY-05");
    let seed = |v| slice_at("java.util.Random", "<init>", "(J)V", vec![(0, Resolved::Constant(v))]);
    assert_eq!(evaluate(&seed(Value::Long(42)), &r).len(), 1);
    assert_eq!(evaluate(&seed(Value::Int(0)), &r).len(), 1);
    let bytes = slice_at(
        "java.security.SecureRandom",
        "<init>",
        "([B)V",
        vec![(0, Resolved::Constant(Value::Bytes(vec![1, 2])))],
    );
    assert_eq!(evaluate(&bytes, &r).len(), 1);
}

#[test]
fn hardcoded_bytes_need_an_array() {
    let r = rule("CRY-01");
    let key = |v| slice_at("javax.crypto.spec.DESKeySpec", "<init>", "([B)V", vec![(0, Resolved::Constant(v))]);
    assert_eq!(evaluate(&key(Value::Bytes(vec![0; 8])), &r).len(), 1);
    assert!(evaluate(&key(Value::Null), &r).is_empty());
}

#[test]
fn pbe_key_spec_splits_between_credential_and_salt_rules() {
    let desc = "([C[BI)V";
    let chars: Vec<u16> = "pw".encode_utf16().collect();
    let both = slice_at(
        "javax.crypto.spec.PBEKeySpec",
        "<init>",
        desc,
        vec![(0, Resolved::Constant(Value::Chars(chars))), (1, Resolved::Constant(Value::Bytes(vec![9; 8])))],
    );
    let cred = evaluate(&both, &rule("CRY-02"));
    let salt = evaluate(&both, &rule("CRY-07"));
    assert_eq!(cred.len(), 1);
    assert_eq!(salt.len(), 1);
    assert_eq!(salt[0].evidence, "0x0909090909090909");

    let only_salt = slice_at(
        "javax.crypto.spec.PBEKeySpec",
        "<init>",
        desc,
        vec![
            (0, Resolved::Unknown(UnknownReason::ExternalInput)),
            (1, Resolved::Constant(Value::Bytes(vec![9; 8]))),
        ],
    );
    assert!(evaluate(&only_salt, &rule("CRY-02")).is_empty());
    assert_eq!(evaluate(&only_salt, &rule("CRY-07")).len(), 1);
}

// ---------------------------------------------------------------------------
// run_rules
// ---------------------------------------------------------------------------

#[test]
fn empty_input_gives_no_findings() {
    assert!(run_rules(&rule_catalog(), &[]).is_empty());
}

#[test]
fn seeded_corpus_yields_exactly_the_planted_findings() {
    let found = scan(&corpus::seeded());
    let got: BTreeSet<(String, String, String)> =
        found.iter().map(|f| (f.rule_id.clone(), f.class_fqn.clone(), f.method_name.clone())).collect();
    let want: BTreeSet<(String, String, String)> =
        PLANTED.iter().map(|p| (p.rule_id.into(), p.class.into(), p.method.into())).collect();
    assert_eq!(found.len(), 8);
    assert_eq!(got, want);
    assert!(found.iter().all(|f| f.source_line.is_some()));
}

#[test]
fn clean_twin_yields_nothing() {
    assert_eq!(scan(&corpus::clean_twin()), Vec::new());
}

#[test]
fn findings_are_ordered_and_numbered() {
    let found = scan(&corpus::seeded());
    for (i, f) in found.iter().enumerate() {
        assert_eq!(f.id, i as u64);
    }
    for w in found.windows(2) {
        let k = |f: &BugInstance| (f.class_fqn.clone(), f.method_name.clone(), f.offset, f.rule_id.clone());
        assert!(k(&w[0]) < k(&w[1]));
    }
}

#[test]
fn two_runs_are_identical() {
    let a = scan(&corpus::seeded());
    let b = scan(&corpus::seeded());
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
}

fn arb_resolved() -> impl Strategy<Value = Resolved> {
    prop_oneof![
        "[A-Za-z0-9/_:-]{0,24}".prop_map(|s| Resolved::Constant(Value::Text(s))),
        prop::collection::vec(any::<u8>(), 0..8).prop_map(|b| Resolved::Constant(Value::Bytes(b))),
        any::<i64>().prop_map(|v| Resolved::Constant(Value::Long(v))),
        Just(Resolved::Constant(Value::Null)),
        Just(Resolved::Unknown(UnknownReason::DynamicValue)),
        Just(Resolved::Unknown(UnknownReason::ExternalInput)),
    ]
}

fn arb_slices() -> impl Strategy<Value = Vec<Slice>> {
    let apis: Vec<_> = Catalog::shipped().apis().to_vec();
    let n = apis.len();
    prop::collection::vec((0..n, prop::collection::vec(arb_resolved(), 2), 0u32..40, 0usize..3), 0..24).prop_map(
        move |items| {
            items
                .into_iter()
                .map(|(i, vals, off, cls)| {
                    let a = &apis[i];
                    let mut s = slice_at(&a.class, &a.method, &a.descriptor, Vec::new());
                    s.resolved_args = vec![(0, vals[0].clone()), (1, vals[1].clone())];
                    s.criterion.watched = vec![0, 1];
                    s.criterion.offset = off;
                    s.criterion.class_fqn = format!("app.C{cls}");
                    s
                })
                .collect()
        },
    )
}

proptest! {
    #[test]
    fn evaluate_is_pure_and_order_free(slices in arb_slices()) {
        let rules = rule_catalog();
        for s in &slices {
            for r in &rules {
                let once = evaluate(s, r);
                prop_assert!(once.len() <= 1);
                prop_assert_eq!(&once, &evaluate(&s.clone(), r));
            }
        }
        let forward = run_rules(&rules, &slices);
        let mut reversed = slices.clone();
        reversed.reverse();
        prop_assert_eq!(&forward, &run_rules(&rules, &reversed));
        let keys: BTreeSet<_> = forward
            .iter()
            .map(|f| (f.rule_id.clone(), f.class_fqn.clone(), f.method_signature(), f.offset))
            .collect();
        prop_assert_eq!(keys.len(), forward.len());
    }
}
