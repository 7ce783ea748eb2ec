use std::collections::BTreeSet;

use cryptoslice::catalog::Catalog;
use cryptoslice::classfile::{parse_class_file, ClassFile, ConstantEntry};
use cryptoslice::intake::ScanSet;
use cryptoslice::slicer::{
    backward_slice, build_method_ir, find_criteria, resolve_constant, IrError, IrIndex, Resolved, Slice, Source,
    UnknownReason, Use, Value, DEFAULT_MAX_DEPTH,
};
use jvmgen::corpus::{self, SourceUnit, IV_BYTES, KEY_BYTES};
use jvmgen::{acc, atype, op, ClassBuilder, Code};
use proptest::prelude::*;

const CIPHER: &str = "javax/crypto/Cipher";
const GET_CIPHER: &str = "(Ljava/lang/String;)Ljavax/crypto/Cipher;";

fn parse(bytes: &[u8]) -> ClassFile {
    parse_class_file(bytes, "fixture.class").unwrap()
}

fn classes_of(units: &[SourceUnit]) -> Vec<ClassFile> {
    units.iter().flat_map(|u| &u.classes).map(|c| parse(&c.bytes)).collect()
}

fn slice_all(classes: &[ClassFile], depth: u32) -> Vec<Slice> {
    let catalog = Catalog::shipped();
    let set = ScanSet::from_classes(classes.to_vec());
    let index = IrIndex::new(classes, catalog);
    find_criteria(&set, catalog).iter().map(|c| backward_slice(c, &index, depth)).collect()
}

/// One static method `m` with the given body in class `t/T`.
fn one_method(desc: &str, code: Code) -> ClassFile {
    let mut b = ClassBuilder::new("t/T");
    b.method(acc::PUBLIC | acc::STATIC, "m", desc, code);
    parse(&b.build())
}

fn ir_of(cf: &ClassFile, desc: &str) -> cryptoslice::slicer::MethodIR {
    build_method_ir(cf, cf.method("m", desc).unwrap()).unwrap()
}

fn text(s: &str) -> Resolved {
    Resolved::Constant(Value::Text(s.into()))
}

fn unknown(r: UnknownReason) -> Resolved {
    Resolved::Unknown(r)
}

// ---------------------------------------------------------------------------
// build_method_ir
// ---------------------------------------------------------------------------

#[test]
fn straight_line_store_reaches_load() {
    let mut c = Code::new(1, 2);
    c.op(op::ICONST_2); // 0
    c.op(op::ISTORE_0 + 1); // 1
    c.op(op::ILOAD_0 + 1); // 2
    c.op(op::IRETURN); // 3
    let cf = one_method("()I", c);
    let ir = ir_of(&cf, "()I");
    assert_eq!(ir.defs.get(&1), Some(&vec![1]));
    assert_eq!(ir.reaching(2), Some(&[Source::Insn(1)][..]));
    assert_eq!(ir.operands(1), &[BTreeSet::from([Source::Insn(0)])]);
}

#[test]
fn branch_arms_union_at_merge() {
    let mut c = Code::new(1, 2);
    let other = c.new_label();
    let join = c.new_label();
    c.op(op::ILOAD_0); // 0
    c.branch(op::IFEQ, other); // 1
    c.op(op::ICONST_1).op(op::ISTORE_0 + 1); // 4, 5
    c.branch(op::GOTO, join); // 6
    c.bind(other);
    c.op(op::ICONST_2).op(op::ISTORE_0 + 1); // 9, 10
    c.bind(join);
    c.op(op::ILOAD_0 + 1).op(op::IRETURN); // 11, 12
    let cf = one_method("(I)I", c);
    let ir = ir_of(&cf, "(I)I");
    assert_eq!(ir.reaching(11), Some(&[Source::Insn(5), Source::Insn(10)][..]));
    assert_eq!(ir.reaching(0), Some(&[Source::Param(0)][..]));
    assert_eq!(ir.defs.get(&1), Some(&vec![5, 10]));
}

// Enumerated by hand:
//   0 iconst_0   1 istore_1   2 iinc 1,1   5 iload_1   6 ifne 2   9 return
// iinc at 2 is reached by the store (entry edge) and by itself (back edge);
// the load at 5 sees only the iinc.
#[test]
fn loop_back_edge_reaches_head() {
    let mut c = Code::new(1, 2);
    c.op(op::ICONST_0).op(op::ISTORE_0 + 1);
    let head = c.here();
    c.iinc(1, 1);
    c.op(op::ILOAD_0 + 1);
    c.branch(op::IFNE, head);
    c.op(op::RETURN);
    let cf = one_method("()V", c);
    let ir = ir_of(&cf, "()V");
    assert_eq!(ir.body.instructions.iter().map(|i| i.offset).collect::<Vec<_>>(), vec![0, 1, 2, 5, 6, 9]);
    assert_eq!(ir.reaching(2), Some(&[Source::Insn(1), Source::Insn(2)][..]));
    assert_eq!(ir.reaching(5), Some(&[Source::Insn(2)][..]));
    assert_eq!(ir.defs.get(&1), Some(&vec![1, 2]));
}

#[test]
fn dup_x1_and_wide_values_keep_their_shape() {
    let mut c = Code::new(6, 5);
    c.op(op::ICONST_1).op(op::ICONST_2); // 0, 1
    c.op(op::DUP_X1); // 2: [2, 1, 2]
    c.op(op::ISTORE_0); // 3 <- 2
    c.op(op::ISTORE_0 + 1); // 4 <- 1
    c.op(op::ISTORE_0 + 2); // 5 <- 2
    c.op(op::LCONST_1); // 6
    c.op(op::DUP2); // 7: one wide value copied
    c.lstore(3).op(op::POP2); // 8, 9
    c.op(op::RETURN);
    let cf = one_method("()V", c);
    let ir = ir_of(&cf, "()V");
    let one = |o| BTreeSet::from([Source::Insn(o)]);
    assert_eq!(ir.operands(3), &[one(1)]);
    assert_eq!(ir.operands(4), &[one(0)]);
    assert_eq!(ir.operands(5), &[one(1)]);
    assert_eq!(ir.operands(8), &[one(6)]);
    assert_eq!(ir.operands(9), &[one(6)]);
}

#[test]
fn handler_sees_exception_and_locals_from_try_range() {
    let mut c = Code::new(1, 2);
    let start = c.here();
    c.op(op::ICONST_1).op(op::ISTORE_0 + 1); // 0, 1
    c.op(op::ICONST_2).op(op::ISTORE_0 + 1); // 2, 3
    let end = c.here();
    c.op(op::RETURN); // 4
    let handler = c.here();
    c.op(op::ASTORE_0); // 5
    c.op(op::ILOAD_0 + 1).op(op::IRETURN); // 6, 7
    c.try_catch(start, end, handler, 0);
    let cf = one_method("()I", c);
    let ir = ir_of(&cf, "()I");
    assert_eq!(ir.operands(5), &[BTreeSet::from([Source::Exception(5)])]);
    // Any of the stores may or may not have run when the handler starts.
    assert_eq!(ir.reaching(6), Some(&[Source::Insn(1), Source::Insn(3)][..]));
}

#[test]
fn stack_underflow_is_reported() {
    let mut c = Code::new(1, 0);
    c.op(op::POP).op(op::RETURN);
    let cf = one_method("()V", c);
    let err = build_method_ir(&cf, cf.method("m", "()V").unwrap()).unwrap_err();
    assert_eq!(err, IrError::StackUnderflow { offset: 0 });
}

#[test]
fn unreachable_code_has_no_operands() {
    let mut c = Code::new(1, 0);
    c.op(op::RETURN).op(op::ICONST_1).op(op::POP).op(op::RETURN);
    let cf = one_method("()V", c);
    let ir = ir_of(&cf, "()V");
    assert!(!ir.is_reachable(2));
    assert!(ir.operands(2).is_empty());
}

#[test]
fn every_local_use_has_a_known_origin_across_corpus() {
    let mut methods = 0;
    for cf in classes_of(&corpus::parser_corpus()).iter().chain(&classes_of(&corpus::seeded())) {
        for m in cf.methods.iter().filter(|m| m.code.is_some()) {
            let ir = build_method_ir(cf, m).unwrap_or_else(|e| panic!("{}.{}: {e}", cf.this_class_name(), m.name));
            methods += 1;
            for (off, uses) in &ir.uses {
                for u in uses {
                    let Use::Local { slot, reaching } = u else { continue };
                    assert!(!reaching.is_empty(), "{}.{} @{off}: load with no definition", ir.owner_fqn, ir.name);
                    for s in reaching {
                        match s {
                            Source::Insn(d) => assert!(ir.defs[slot].contains(d)),
                            Source::Param(_) | Source::This => {}
                            Source::Exception(_) => panic!("exception object reached a local directly"),
                        }
                    }
                }
            }
        }
    }
    assert!(methods > 250, "{methods}");
}

// ---------------------------------------------------------------------------
// resolve_constant
// ---------------------------------------------------------------------------

#[test]
fn resolve_constant_examples() {
    let mut b = ClassBuilder::new("t/K");
    let i = b.pool.int(0x10);
    let s = b.pool.string("admin");
    let l = b.pool.long(0x1_0000_0002);
    let d = b.pool.double(2.5);
    let cls = b.pool.class("t/Other");
    let cf = parse(&b.build());
    let pool = &cf.constant_pool;
    let get = |k| resolve_constant(pool.get(k).unwrap(), pool);
    assert_eq!(get(i), Ok(Value::Int(16)));
    assert_eq!(get(s), Ok(Value::Text("admin".into())));
    assert_eq!(get(l), Ok(Value::Long(0x1_0000_0002)));
    assert_eq!(pool.get(l + 1), Some(&ConstantEntry::Placeholder));
    assert_eq!(get(d), Ok(Value::Double(2.5)));
    assert!(get(cls).is_err());
}

// ---------------------------------------------------------------------------
// find_criteria
// ---------------------------------------------------------------------------

#[test]
fn criteria_counts_by_construction() {
    let catalog = Catalog::shipped();
    let seeded = ScanSet::from_classes(classes_of(&corpus::seeded()));
    let crit = find_criteria(&seeded, catalog);
    let count = |class: &str| crit.iter().filter(|c| c.class_fqn.ends_with(class)).count();
    assert_eq!(count(".LegacyCipher"), 1);
    assert_eq!(count(".PacketSealer"), 2);
    assert_eq!(count(".AccountStore"), 1);
    assert_eq!(crit.len(), 9);

    let plain = ScanSet::from_classes(classes_of(&corpus::parser_corpus()));
    assert!(find_criteria(&plain, catalog).is_empty());

    let bulk = ScanSet::from_classes(vec![parse(&corpus::bulk_class(0, 4).bytes)]);
    let crit = find_criteria(&bulk, catalog);
    let ciphers: Vec<u32> = crit.iter().filter(|c| c.target.name == "getInstance" && c.target.class == "javax.crypto.Cipher").map(|c| c.offset).collect();
    assert_eq!(ciphers.len(), 2);
    assert_ne!(ciphers[0], ciphers[1]);
}

#[test]
fn criteria_are_ordered_and_watch_the_union_of_entries() {
    let catalog = Catalog::shipped();
    let seeded = ScanSet::from_classes(classes_of(&corpus::seeded()));
    let crit = find_criteria(&seeded, catalog);
    let keys: Vec<_> = crit.iter().map(|c| (c.class_fqn.clone(), c.method_name.clone(), c.offset)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    let pbe = crit.iter().find(|c| c.target.class == "javax.crypto.spec.PBEKeySpec").unwrap();
    assert_eq!(pbe.watched, vec![0, 1]);
    assert!(pbe.line.is_some());
}

// ---------------------------------------------------------------------------
// backward_slice on the seeded corpus
// ---------------------------------------------------------------------------

/// (class simple name, API method, watched index, expected resolution),
/// written from the fixture sources.
fn seeded_expectations() -> Vec<(&'static str, &'static str, u8, Resolved)> {
    let bytes = |v: &[i8]| Resolved::Constant(Value::Bytes(v.iter().map(|&b| b as u8).collect()));
    vec![
        (
            "KeyMaterial",
            "<init>",
            0,
            Resolved::FieldConstant {
                owner: "com.acme.vault.KeyMaterial".into(),
                name: "KEY".into(),
                value: match bytes(&KEY_BYTES) {
                    Resolved::Constant(v) => v,
                    _ => unreachable!(),
                },
            },
        ),
        ("AccountStore", "getConnection", 2, text("admin")),
        ("LegacyCipher", "getInstance", 0, text("AES/ECB/PKCS5Padding")),
        (
            "Fingerprint",
            "getInstance",
            0,
            Resolved::FieldConstant {
                owner: "com.acme.vault.Fingerprint".into(),
                name: "ALGORITHM".into(),
                value: Value::Text("MD5".into()),
            },
        ),
        ("TokenGenerator", "setSeed", 0, Resolved::Constant(Value::Long(20240229))),
        ("PacketSealer", "<init>", 0, bytes(&IV_BYTES)),
        ("PacketSealer", "getInstance", 0, text("AES/CBC/PKCS5Padding")),
        ("PasswordHasher", "<init>", 1, Resolved::Constant(Value::Bytes(b"NaCl-pepper-2020".to_vec()))),
        ("PasswordHasher", "<init>", 0, unknown(UnknownReason::ExternalInput)),
        ("Telemetry", "<init>", 0, text("http://telemetry.acme.example/v1/collect")),
    ]
}

fn find<'a>(slices: &'a [Slice], class: &str, api: &str, k: u8) -> &'a Resolved {
    let s = slices
        .iter()
        .find(|s| s.criterion.class_fqn.ends_with(&format!(".{class}")) && s.criterion.target.name == api)
        .unwrap_or_else(|| panic!("no criterion {class} {api}"));
    s.arg(k).unwrap()
}

#[test]
fn seeded_constants_resolve_exactly() {
    let slices = slice_all(&classes_of(&corpus::seeded()), DEFAULT_MAX_DEPTH);
    for (class, api, k, want) in seeded_expectations() {
        assert_eq!(find(&slices, class, api, k), &want, "{class} {api} arg {k}");
    }
    for s in &slices {
        assert_eq!(s.resolved_args.len(), s.criterion.watched.len());
    }
    let account = slices.iter().find(|s| s.criterion.class_fqn.ends_with(".AccountStore")).unwrap();
    assert_eq!(account.depth_reached, 1);
}

#[test]
fn twin_planted_arguments_stay_unknown() {
    let slices = slice_all(&classes_of(&corpus::clean_twin()), DEFAULT_MAX_DEPTH);
    let planted = [
        ("KeyMaterial", "<init>", 0),
        ("AccountStore", "getConnection", 2),
        ("LegacyCipher", "getInstance", 0),
        ("Fingerprint", "getInstance", 0),
        ("TokenGenerator", "setSeed", 0),
        ("PacketSealer", "<init>", 0),
        ("PasswordHasher", "<init>", 1),
        ("Telemetry", "<init>", 0),
    ];
    for (class, api, k) in planted {
        assert_eq!(find(&slices, class, api, k), &unknown(UnknownReason::DynamicValue), "{class} {api}");
    }
}

#[test]
fn only_criterion_and_path_methods_are_built() {
    let mut classes = classes_of(&corpus::parser_corpus());
    classes.extend(classes_of(&corpus::seeded()));
    let catalog = Catalog::shipped();
    let set = ScanSet::from_classes(classes.clone());
    let index = IrIndex::new(&classes, catalog);
    for c in find_criteria(&set, catalog) {
        backward_slice(&c, &index, DEFAULT_MAX_DEPTH);
    }
    let built: BTreeSet<(String, String)> =
        index.built_methods().into_iter().map(|(c, m, _)| (c.trim_start_matches("com.acme.vault.").to_string(), m)).collect();
    let want: BTreeSet<(String, String)> = [
        ("KeyMaterial", "secretKey"),
        ("KeyMaterial", "<clinit>"),
        ("AccountStore", "connect"),
        ("AccountStore", "open"),
        ("LegacyCipher", "seal"),
        ("Fingerprint", "of"),
        ("Fingerprint", "<clinit>"),
        ("TokenGenerator", "<init>"),
        ("PacketSealer", "seal"),
        ("PasswordHasher", "hash"),
        ("Telemetry", "fetch"),
    ]
    .into_iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect();
    assert_eq!(built, want);
}

// ---------------------------------------------------------------------------
// Hand-built slicing fixtures
// ---------------------------------------------------------------------------

fn slices_of(classes: Vec<ClassFile>, depth: u32) -> Vec<Slice> {
    slice_all(&classes, depth)
}

#[test]
fn constant_value_attribute_gives_field_constant() {
    let mut b = ClassBuilder::new("t/Algo");
    let v = b.pool.string("SHA-1");
    b.constant_field(acc::STATIC | acc::FINAL, "NAME", "Ljava/lang/String;", v);
    let mut c = Code::new(1, 0);
    c.getstatic(&mut b.pool, "t/Algo", "NAME", "Ljava/lang/String;");
    c.invokestatic(&mut b.pool, "java/security/MessageDigest", "getInstance", "(Ljava/lang/String;)Ljava/security/MessageDigest;");
    c.op(op::ARETURN);
    b.method(acc::STATIC, "md", "()Ljava/security/MessageDigest;", c);
    let s = slices_of(vec![parse(&b.build())], 3);
    assert_eq!(
        s[0].arg(0),
        Some(&Resolved::FieldConstant { owner: "t.Algo".into(), name: "NAME".into(), value: Value::Text("SHA-1".into()) })
    );
}

fn cipher_with(build: impl FnOnce(&mut Code, &mut ClassBuilder)) -> Resolved {
    let mut b = ClassBuilder::new("t/C");
    b.field(acc::STATIC, "MUTABLE", "Ljava/lang/String;");
    let mut c = Code::new(6, 4);
    build(&mut c, &mut b);
    c.invokestatic(&mut b.pool, CIPHER, "getInstance", GET_CIPHER);
    c.op(op::ARETURN);
    b.method(acc::PUBLIC | acc::STATIC, "make", "(I)Ljavax/crypto/Cipher;", c);
    let s = slices_of(vec![parse(&b.build())], 3);
    s[0].arg(0).unwrap().clone()
}

#[test]
fn merge_of_equal_constants_is_that_constant() {
    let r = cipher_with(|c, b| {
        let other = c.new_label();
        let join = c.new_label();
        c.op(op::ILOAD_0).branch(op::IFEQ, other);
        c.ldc_string(&mut b.pool, "AES/ECB/NoPadding").astore(1).branch(op::GOTO, join);
        c.bind(other);
        c.ldc_string(&mut b.pool, "AES/ECB/NoPadding").astore(1);
        c.bind(join);
        c.aload(1);
    });
    assert_eq!(r, text("AES/ECB/NoPadding"));
}

#[test]
fn merge_of_conflicting_constants_is_dynamic() {
    let r = cipher_with(|c, b| {
        let other = c.new_label();
        let join = c.new_label();
        c.op(op::ILOAD_0).branch(op::IFEQ, other);
        c.ldc_string(&mut b.pool, "AES/ECB/NoPadding").astore(1).branch(op::GOTO, join);
        c.bind(other);
        c.ldc_string(&mut b.pool, "AES/GCM/NoPadding").astore(1);
        c.bind(join);
        c.aload(1);
    });
    assert_eq!(r, unknown(UnknownReason::DynamicValue));
}

#[test]
fn non_final_static_field_is_dynamic() {
    let r = cipher_with(|c, b| {
        c.getstatic(&mut b.pool, "t/C", "MUTABLE", "Ljava/lang/String;");
    });
    assert_eq!(r, unknown(UnknownReason::DynamicValue));
}

#[test]
fn field_of_unscanned_class_is_external() {
    let r = cipher_with(|c, b| {
        c.getstatic(&mut b.pool, "lib/Config", "MODE", "Ljava/lang/String;");
    });
    assert_eq!(r, unknown(UnknownReason::ExternalInput));
}

#[test]
fn instance_field_and_arithmetic_are_unsupported() {
    let r = cipher_with(|c, b| {
        c.new_object(&mut b.pool, "t/Holder").op(op::DUP);
        c.invokespecial(&mut b.pool, "t/Holder", "<init>", "()V");
        c.getfield(&mut b.pool, "t/Holder", "mode", "Ljava/lang/String;");
    });
    assert_eq!(r, unknown(UnknownReason::UnsupportedConstruct));
}

#[test]
fn string_helpers_fold_constants() {
    // new IvParameterSpec(Base64.getDecoder().decode("AAECAw=="))
    let mut b = ClassBuilder::new("t/Iv");
    let mut c = Code::new(4, 1);
    c.new_object(&mut b.pool, "javax/crypto/spec/IvParameterSpec").op(op::DUP);
    c.invokestatic(&mut b.pool, "java/util/Base64", "getDecoder", "()Ljava/util/Base64$Decoder;");
    c.ldc_string(&mut b.pool, "AAECAw==");
    c.invokevirtual(&mut b.pool, "java/util/Base64$Decoder", "decode", "(Ljava/lang/String;)[B");
    c.invokespecial(&mut b.pool, "javax/crypto/spec/IvParameterSpec", "<init>", "([B)V");
    c.op(op::ARETURN);
    b.method(acc::STATIC, "iv", "()Ljavax/crypto/spec/IvParameterSpec;", c);
    // new PBEKeySpec("hunter2".toCharArray())
    let mut c = Code::new(3, 1);
    c.new_object(&mut b.pool, "javax/crypto/spec/PBEKeySpec").op(op::DUP);
    c.ldc_string(&mut b.pool, "hunter2");
    c.invokevirtual(&mut b.pool, "java/lang/String", "toCharArray", "()[C");
    c.invokespecial(&mut b.pool, "javax/crypto/spec/PBEKeySpec", "<init>", "([C)V");
    c.op(op::ARETURN);
    b.method(acc::STATIC, "spec", "()Ljavax/crypto/spec/PBEKeySpec;", c);
    let s = slices_of(vec![parse(&b.build())], 3);
    let by = |name: &str| s.iter().find(|s| s.criterion.method_name == name).unwrap().arg(0).unwrap().clone();
    assert_eq!(by("iv"), Resolved::Constant(Value::Bytes(vec![0, 1, 2, 3])));
    assert_eq!(by("spec"), Resolved::Constant(Value::Chars("hunter2".encode_utf16().collect())));
}

/// `byte[] k = new byte[4]; k[i] = ...; [extra]; new SecretKeySpec(k, "AES")`
fn key_array(extra: impl FnOnce(&mut Code, &mut ClassBuilder)) -> Resolved {
    let mut b = ClassBuilder::new("t/Key");
    let mut c = Code::new(6, 3);
    c.op(op::ICONST_0 + 4).newarray(atype::BYTE).astore(1);
    for (i, v) in [7, 8, 9, 10].into_iter().enumerate() {
        c.aload(1).iconst(&mut b.pool, i as i32).iconst(&mut b.pool, v).op(op::BASTORE);
    }
    extra(&mut c, &mut b);
    c.new_object(&mut b.pool, "javax/crypto/spec/SecretKeySpec").op(op::DUP).aload(1);
    c.ldc_string(&mut b.pool, "AES");
    c.invokespecial(&mut b.pool, "javax/crypto/spec/SecretKeySpec", "<init>", "([BLjava/lang/String;)V");
    c.op(op::ARETURN);
    b.method(acc::STATIC, "key", "(I)Ljavax/crypto/spec/SecretKeySpec;", c);
    let s = slices_of(vec![parse(&b.build())], 3);
    s[0].arg(0).unwrap().clone()
}

#[test]
fn element_stores_build_constant_array() {
    assert_eq!(key_array(|_, _| {}), Resolved::Constant(Value::Bytes(vec![7, 8, 9, 10])));
}

#[test]
fn array_passed_to_unknown_call_escapes() {
    let r = key_array(|c, b| {
        c.new_object(&mut b.pool, "java/security/SecureRandom").op(op::DUP);
        c.invokespecial(&mut b.pool, "java/security/SecureRandom", "<init>", "()V");
        c.aload(1);
        c.invokevirtual(&mut b.pool, "java/security/SecureRandom", "nextBytes", "([B)V");
    });
    assert_eq!(r, unknown(UnknownReason::DynamicValue));
}

#[test]
fn array_store_with_runtime_index_is_unknown() {
    let r = key_array(|c, _| {
        c.aload(1).op(op::ILOAD_0).op(op::ICONST_1).op(op::BASTORE);
    });
    assert_eq!(r, unknown(UnknownReason::ExternalInput));
}

#[test]
fn array_filled_under_a_branch_is_dynamic() {
    let r = key_array(|c, _| {
        let skip = c.new_label();
        c.op(op::ILOAD_0).branch(op::IFEQ, skip);
        c.aload(1).op(op::ICONST_0).op(op::ICONST_1).op(op::BASTORE);
        c.bind(skip);
    });
    assert_eq!(r, unknown(UnknownReason::DynamicValue));
}

#[test]
fn array_read_and_length_do_not_escape() {
    let r = key_array(|c, _| {
        c.aload(1).op(op::ARRAYLENGTH).op(op::POP);
        c.aload(1).op(op::ICONST_0).op(op::BALOAD).op(op::POP);
    });
    assert_eq!(r, Resolved::Constant(Value::Bytes(vec![7, 8, 9, 10])));
}

// ---------------------------------------------------------------------------
// Inter-procedural depth, monotonicity, termination
// ---------------------------------------------------------------------------

/// `entry()` passes a value through `h0 .. h{len}`; `h{len}` calls
/// `Cipher.getInstance`. `back` adds calls `h{j} -> h{i}` for j > i.
fn chain(len: usize, constant: bool, back: &[(usize, usize)]) -> ClassFile {
    let mut b = ClassBuilder::new("t/Chain");
    let d = "(Ljava/lang/String;)V";
    let mut c = Code::new(2, 0);
    if constant {
        c.ldc_string(&mut b.pool, "DES/ECB/PKCS5Padding");
    } else {
        c.ldc_string(&mut b.pool, "CIPHER");
        c.invokestatic(&mut b.pool, "java/lang/System", "getenv", "(Ljava/lang/String;)Ljava/lang/String;");
    }
    c.invokestatic(&mut b.pool, "t/Chain", "h0", d).op(op::RETURN);
    b.method(acc::PUBLIC | acc::STATIC, "entry", "()V", c);
    for i in 0..=len {
        let mut c = Code::new(2, 1);
        for &(j, k) in back {
            if j == i {
                c.aload(0).invokestatic(&mut b.pool, "t/Chain", &format!("h{k}"), d);
            }
        }
        c.aload(0);
        if i == len {
            c.invokestatic(&mut b.pool, CIPHER, "getInstance", GET_CIPHER).op(op::POP);
        } else {
            c.invokestatic(&mut b.pool, "t/Chain", &format!("h{}", i + 1), d);
        }
        c.op(op::RETURN);
        b.method(acc::STATIC, &format!("h{i}"), d, c);
    }
    parse(&b.build())
}

#[test]
fn depth_bound_is_enforced() {
    let cf = chain(2, true, &[]);
    let at = |d| slices_of(vec![cf.clone()], d)[0].arg(0).unwrap().clone();
    assert_eq!(at(2), unknown(UnknownReason::DepthExceeded));
    assert_eq!(at(3), text("DES/ECB/PKCS5Padding"));
    let s = &slices_of(vec![cf.clone()], 3)[0];
    assert_eq!(s.depth_reached, 3);
    assert_eq!(at(0), unknown(UnknownReason::DepthExceeded));
}

#[test]
fn mutual_recursion_terminates() {
    // a(s) -> b(s) -> a(s), b also reaches the sink; nothing calls a.
    let mut b = ClassBuilder::new("t/Loop");
    let d = "(Ljava/lang/String;)V";
    let mut c = Code::new(1, 1);
    c.aload(0).invokestatic(&mut b.pool, "t/Loop", "b", d).op(op::RETURN);
    b.method(acc::PUBLIC | acc::STATIC, "a", d, c);
    let mut c = Code::new(1, 1);
    c.aload(0).invokestatic(&mut b.pool, "t/Loop", "a", d);
    c.aload(0).invokestatic(&mut b.pool, CIPHER, "getInstance", GET_CIPHER).op(op::POP).op(op::RETURN);
    b.method(acc::STATIC, "b", d, c);
    let cf = parse(&b.build());
    for depth in [0, 1, 3, 50] {
        let s = slices_of(vec![cf.clone()], depth);
        assert!(s[0].arg(0).unwrap().is_unknown());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn deeper_search_never_loses_a_constant(
        len in 0usize..6,
        constant in any::<bool>(),
        back in prop::collection::vec((0usize..6, 0usize..6), 0..4),
    ) {
        let back: Vec<(usize, usize)> =
            back.into_iter().filter(|&(j, i)| j <= len && i < j).collect();
        let cf = chain(len, constant, &back);
        let results: Vec<Resolved> =
            (0..10).map(|d| slices_of(vec![cf.clone()], d)[0].arg(0).unwrap().clone()).collect();
        for d in 0..results.len() {
            if let Resolved::Constant(_) = &results[d] {
                for later in &results[d..] {
                    prop_assert_eq!(later, &results[d]);
                }
            }
        }
        // Past the longest acyclic path every branch is resolved or cut.
        let settled = &results[9];
        if constant {
            prop_assert_eq!(settled, &text("DES/ECB/PKCS5Padding"));
        } else {
            prop_assert_eq!(settled, &unknown(UnknownReason::DynamicValue));
        }
        // The direct path alone needs len + 1 hops.
        prop_assert!(results[len].is_unknown());
    }
}
