//! Fixture corpora: Java sources paired with the class files javac emits
//! for them.
//!
//! * [`parser_corpus`]: 50 compilation units with assorted packages,
//!   nested classes, switches, loops, handlers, wide constants and lambdas.
//! * [`seeded`] / [`clean_twin`]: the same eight classes, one planted
//!   cryptographic misuse per class in the seeded flavour; in the twin every
//!   planted constant is replaced by a value only known at run time.

use std::fs;
use std::io;
use std::path::Path;

use crate::{acc, atype, op, ClassBuilder, Code};

/// One compiled class.
#[derive(Clone, Debug)]
pub struct ClassOutput {
    pub internal_name: String,
    pub bytes: Vec<u8>,
}

impl ClassOutput {
    pub fn fqn(&self) -> String {
        self.internal_name.replace('/', ".")
    }

    pub fn relative_path(&self) -> String {
        format!("{}.class", self.internal_name)
    }
}

/// A source file and every class compiled from it.
#[derive(Clone, Debug)]
pub struct SourceUnit {
    pub package: Option<String>,
    pub simple_name: String,
    pub source: String,
    pub classes: Vec<ClassOutput>,
}

impl SourceUnit {
    /// `<package>.<file stem>`, or the bare stem in the default package.
    pub fn expected_fqn(&self) -> String {
        match &self.package {
            Some(p) => format!("{p}.{}", self.simple_name),
            None => self.simple_name.clone(),
        }
    }

    pub fn source_path(&self) -> String {
        match &self.package {
            Some(p) => format!("{}/{}.java", p.replace('.', "/"), self.simple_name),
            None => format!("{}.java", self.simple_name),
        }
    }

    pub fn primary(&self) -> &ClassOutput {
        &self.classes[0]
    }
}

/// Writes sources and/or class files below `root`, mirroring package
/// directories.
pub fn write_tree(root: &Path, units: &[SourceUnit], sources: bool, classes: bool) -> io::Result<()> {
    for u in units {
        if sources {
            let p = root.join(u.source_path());
            fs::create_dir_all(p.parent().unwrap())?;
            fs::write(p, &u.source)?;
        }
        if classes {
            for c in &u.classes {
                let p = root.join(c.relative_path());
                fs::create_dir_all(p.parent().unwrap())?;
                fs::write(p, &c.bytes)?;
            }
        }
    }
    Ok(())
}

/// Jar entries (`path/Name.class`, bytes) for every class in `units`.
pub fn jar_entries(units: &[SourceUnit]) -> Vec<(String, Vec<u8>)> {
    units
        .iter()
        .flat_map(|u| u.classes.iter().map(|c| (c.relative_path(), c.bytes.clone())))
        .collect()
}

/// 1-based line of the first occurrence of `needle` in `source`.
pub fn line_of(source: &str, needle: &str) -> u16 {
    source
        .lines()
        .position(|l| l.contains(needle))
        .map(|i| i as u16 + 1)
        .unwrap_or_else(|| panic!("`{needle}` not in source"))
}

// ---------------------------------------------------------------------------
// Parser corpus
// ---------------------------------------------------------------------------

const LICENSE: &str = "/*\n * Copyright (c) Fixture Authors.\n * All rights reserved.\n */\n";

fn parser_package(i: usize) -> Option<String> {
    match i % 5 {
        0 => None,
        1 => Some(format!("fixture.p{}", i % 7)),
        2 => Some(format!("org.sample.m{}.sub{}", i % 3, i % 4)),
        3 => Some("com.example".to_string()),
        _ => Some(format!("net.deep.a{}.b.c.d", i % 2)),
    }
}

fn preamble(i: usize) -> String {
    match i % 4 {
        0 => String::new(),
        1 => LICENSE.to_string(),
        2 => "// Generated fixture\n\n// second line comment\n\n".to_string(),
        _ => "/** Javadoc-style block with package word: package fake.name; */\n\n".to_string(),
    }
}

fn label_for(i: usize) -> String {
    if i % 9 == 4 {
        format!("ünït-{i}-\u{0}-\u{1F600}")
    } else {
        format!("unit-{i}")
    }
}

/// Fifty compilation units exercising the class-file features the analyzer
/// must decode.
pub fn parser_corpus() -> Vec<SourceUnit> {
    (0..50).map(parser_unit).collect()
}

fn parser_unit(i: usize) -> SourceUnit {
    let package = parser_package(i);
    let simple = format!("Unit{i}");
    let internal = match &package {
        Some(p) => format!("{}/{simple}", p.replace('.', "/")),
        None => simple.clone(),
    };
    if i % 10 == 9 {
        return interface_unit(i, package, simple, internal);
    }
    let nested = i.is_multiple_of(6);
    let lambda = i % 8 == 5;
    let sparse = i % 2 == 1;
    let label = label_for(i);
    let limit = i as i32 + 3;
    let span = 7_000_000_000i64 + i as i64;
    let ratio = 0.5 + i as f64;

    let mut src = preamble(i);
    if let Some(p) = &package {
        src.push_str(&format!("package {p};\n\n"));
    }
    src.push_str("import java.util.List;\n\n");
    src.push_str(&format!("public class {simple} {{\n"));
    src.push_str(&format!("    static final int LIMIT = {limit};\n"));
    src.push_str(&format!("    static final long SPAN = {span}L;\n"));
    src.push_str(&format!("    static final double RATIO = {ratio:?};\n"));
    src.push_str(&format!("    static final String LABEL = {label:?};\n"));
    src.push_str("    private int counter;\n\n");
    src.push_str("    public int step(int x) {\n        int acc = 0;\n        for (int i = 0; i < x; i++) {\n            acc += i * LIMIT;\n        }\n        return acc;\n    }\n\n");
    let keys: [i32; 3] = if sparse { [0, 10, 100] } else { [0, 1, 2] };
    src.push_str("    public String describe(int k) {\n        switch (k) {\n");
    for (k, w) in keys.iter().zip(["zero", "one", "two"]) {
        src.push_str(&format!("            case {k}: return \"{w}\";\n"));
    }
    src.push_str("            default: return LABEL;\n        }\n    }\n\n");
    src.push_str("    public long widen(long a, double b) {\n        return a * SPAN + (long) (b * RATIO);\n    }\n\n");
    src.push_str("    public int guarded(String s) {\n        try {\n            return Integer.parseInt(s);\n        } catch (NumberFormatException e) {\n            return -1;\n        }\n    }\n\n");
    src.push_str("    public void bump() {\n        counter++;\n    }\n");
    if lambda {
        src.push_str("\n    public Runnable task() {\n        return () -> {};\n    }\n");
    }
    if nested {
        src.push_str("\n    public static class Helper {\n        static int twice(int v) {\n            return v * 2;\n        }\n    }\n");
    }
    src.push_str("}\n");

    let mut b = ClassBuilder::new(&internal);
    let cls_line = line_of(&src, "public class");
    let p = &mut b.pool;
    let limit_idx = p.int(limit);
    let span_idx = p.long(span);
    let ratio_idx = p.double(ratio);
    let label_idx = p.string(&label);
    b.constant_field(acc::STATIC | acc::FINAL, "LIMIT", "I", limit_idx);
    b.constant_field(acc::STATIC | acc::FINAL, "SPAN", "J", span_idx);
    b.constant_field(acc::STATIC | acc::FINAL, "RATIO", "D", ratio_idx);
    b.constant_field(acc::STATIC | acc::FINAL, "LABEL", "Ljava/lang/String;", label_idx);
    b.field(acc::PRIVATE, "counter", "I");
    b.default_constructor(cls_line);

    // step
    let mut c = Code::new(3, 4);
    let top = c.new_label();
    let end = c.new_label();
    c.line(line_of(&src, "int acc = 0")).op(op::ICONST_0).istore(2);
    c.line(line_of(&src, "for (int i")).op(op::ICONST_0).istore(3);
    c.bind(top).iload(3).iload(1).branch(op::IF_ICMPGE, end);
    c.line(line_of(&src, "acc += i")).iload(2).iload(3);
    c.iconst(&mut b.pool, limit);
    c.op(op::IMUL).op(op::IADD).istore(2);
    c.line(line_of(&src, "for (int i")).iinc(3, 1).branch(op::GOTO, top);
    c.bind(end).line(line_of(&src, "return acc")).iload(2).op(op::IRETURN);
    b.method(acc::PUBLIC, "step", "(I)I", c);

    // describe
    let mut c = Code::new(1, 2);
    let arms: Vec<_> = (0..3).map(|_| c.new_label()).collect();
    let dflt = c.new_label();
    c.line(line_of(&src, "switch (k)")).iload(1);
    if sparse {
        let pairs: Vec<_> = keys.iter().copied().zip(arms.iter().copied()).collect();
        c.lookupswitch(dflt, &pairs);
    } else {
        c.tableswitch(0, dflt, &arms);
    }
    for (arm, w) in arms.iter().zip(["zero", "one", "two"]) {
        c.bind(*arm).line(line_of(&src, &format!("\"{w}\"")));
        c.ldc_string(&mut b.pool, w).op(op::ARETURN);
    }
    c.bind(dflt).line(line_of(&src, "default:"));
    c.ldc_index(label_idx).op(op::ARETURN);
    b.method(acc::PUBLIC, "describe", "(I)Ljava/lang/String;", c);

    // widen
    let mut c = Code::new(6, 5);
    c.line(line_of(&src, "a * SPAN"));
    c.lload(1).op_u16(op::LDC2_W, span_idx).op(op::LMUL);
    c.dload(3).op_u16(op::LDC2_W, ratio_idx).op(op::DMUL).op(op::D2L);
    c.op(op::LADD).op(op::LRETURN);
    b.method(acc::PUBLIC, "widen", "(JD)J", c);

    // guarded
    let nfe = b.pool.class("java/lang/NumberFormatException");
    let mut c = Code::new(1, 3);
    let start = c.new_label();
    let stop = c.new_label();
    let handler = c.new_label();
    c.bind(start).line(line_of(&src, "Integer.parseInt"));
    c.aload(1);
    c.invokestatic(&mut b.pool, "java/lang/Integer", "parseInt", "(Ljava/lang/String;)I");
    c.op(op::IRETURN);
    c.bind(stop);
    c.bind(handler).line(line_of(&src, "catch (NumberFormatException"));
    c.astore(2);
    c.line(line_of(&src, "return -1")).op(op::ICONST_M1).op(op::IRETURN);
    c.try_catch(start, stop, handler, nfe);
    b.method(acc::PUBLIC, "guarded", "(Ljava/lang/String;)I", c);

    // bump
    let mut c = Code::new(3, 1);
    c.line(line_of(&src, "counter++")).aload(0).op(op::DUP);
    c.getfield(&mut b.pool, &internal, "counter", "I");
    c.op(op::ICONST_1).op(op::IADD);
    c.putfield(&mut b.pool, &internal, "counter", "I");
    c.line(line_of(&src, "counter++") + 1).op(op::RETURN);
    b.method(acc::PUBLIC, "bump", "()V", c);

    if lambda {
        let meta = b.pool.method_ref(
            "java/lang/invoke/LambdaMetafactory",
            "metafactory",
            "(Ljava/lang/invoke/MethodHandles$Lookup;Ljava/lang/String;Ljava/lang/invoke/MethodType;Ljava/lang/invoke/MethodType;Ljava/lang/invoke/MethodHandle;Ljava/lang/invoke/MethodType;)Ljava/lang/invoke/CallSite;",
        );
        let meta_handle = b.pool.method_handle(6, meta);
        let sam = b.pool.method_type("()V");
        let body_ref = b.pool.method_ref(&internal, "lambda$task$0", "()V");
        let body_handle = b.pool.method_handle(6, body_ref);
        let indy = b.pool.invoke_dynamic(0, "run", "()Ljava/lang/Runnable;");
        let mut c = Code::new(1, 1);
        c.line(line_of(&src, "return () ->")).invokedynamic(indy).op(op::ARETURN);
        b.method(acc::PUBLIC, "task", "()Ljava/lang/Runnable;", c);
        let mut c = Code::new(0, 0);
        c.line(line_of(&src, "return () ->")).op(op::RETURN);
        b.method(acc::PRIVATE | acc::STATIC | 0x1000, "lambda$task$0", "()V", c);
        b.bootstrap_methods(&[(meta_handle, vec![sam, body_handle, sam])]);
        b.inner_class(
            "java/lang/invoke/MethodHandles$Lookup",
            "java/lang/invoke/MethodHandles",
            "Lookup",
            acc::PUBLIC | acc::STATIC | acc::FINAL,
        );
    }

    let mut classes = Vec::new();
    let helper_internal = format!("{internal}$Helper");
    if nested {
        b.inner_class(&helper_internal, &internal, "Helper", acc::PUBLIC | acc::STATIC);
    }
    b.source_file(&format!("{simple}.java"));
    classes.push(ClassOutput {
        internal_name: internal.clone(),
        bytes: b.build(),
    });

    if nested {
        let mut h = ClassBuilder::new(&helper_internal);
        h.default_constructor(line_of(&src, "class Helper"));
        let mut c = Code::new(2, 1);
        c.line(line_of(&src, "return v * 2")).iload(0).op(op::ICONST_2).op(op::IMUL).op(op::IRETURN);
        h.method(acc::STATIC, "twice", "(I)I", c);
        h.inner_class(&helper_internal, &internal, "Helper", acc::PUBLIC | acc::STATIC);
        h.source_file(&format!("{simple}.java"));
        classes.push(ClassOutput {
            internal_name: helper_internal,
            bytes: h.build(),
        });
    }

    SourceUnit {
        package,
        simple_name: simple,
        source: src,
        classes,
    }
}

fn interface_unit(i: usize, package: Option<String>, simple: String, internal: String) -> SourceUnit {
    let mut src = preamble(i);
    if let Some(p) = &package {
        src.push_str(&format!("package {p};\n\n"));
    }
    src.push_str(&format!(
        "public interface {simple} {{\n    int SIDES = {};\n\n    double area();\n\n    default int sides() {{\n        return SIDES;\n    }}\n}}\n",
        i + 1
    ));
    let mut b = ClassBuilder::with_super(
        &internal,
        "java/lang/Object",
        acc::PUBLIC | acc::INTERFACE | acc::ABSTRACT,
    );
    let sides = b.pool.int(i as i32 + 1);
    b.constant_field(acc::PUBLIC | acc::STATIC | acc::FINAL, "SIDES", "I", sides);
    b.abstract_method(acc::PUBLIC, "area", "()D");
    let mut c = Code::new(1, 1);
    c.line(line_of(&src, "return SIDES"));
    c.iconst(&mut b.pool, i as i32 + 1).op(op::IRETURN);
    b.method(acc::PUBLIC, "sides", "()I", c);
    b.source_file(&format!("{simple}.java"));
    SourceUnit {
        package,
        simple_name: simple,
        source: src,
        classes: vec![ClassOutput {
            internal_name: internal,
            bytes: b.build(),
        }],
    }
}

// ---------------------------------------------------------------------------
// Seeded corpus and clean twin
// ---------------------------------------------------------------------------

pub const SEEDED_PACKAGE: &str = "com.acme.vault";

/// One planted misuse: rule id, class, method name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Planted {
    pub rule_id: &'static str,
    pub class: &'static str,
    pub method: &'static str,
}

/// Ground truth for [`seeded`]: exactly one planted misuse per rule.
pub const PLANTED: [Planted; 8] = [
    Planted { rule_id: "CRY-01", class: "com.acme.vault.KeyMaterial", method: "secretKey" },
    Planted { rule_id: "CRY-02", class: "com.acme.vault.AccountStore", method: "connect" },
    Planted { rule_id: "CRY-03", class: "com.acme.vault.LegacyCipher", method: "seal" },
    Planted { rule_id: "CRY-04", class: "com.acme.vault.Fingerprint", method: "of" },
    Planted { rule_id: "CRY-05", class: "com.acme.vault.TokenGenerator", method: "<init>" },
    Planted { rule_id: "CRY-06", class: "com.acme.vault.PacketSealer", method: "seal" },
    Planted { rule_id: "CRY-07", class: "com.acme.vault.PasswordHasher", method: "hash" },
    Planted { rule_id: "CRY-08", class: "com.acme.vault.Telemetry", method: "fetch" },
];

/// The corpus with one planted misuse per rule.
pub fn seeded() -> Vec<SourceUnit> {
    vault(true)
}

/// Structurally identical corpus with every planted constant replaced by a
/// run-time value.
pub fn clean_twin() -> Vec<SourceUnit> {
    vault(false)
}

fn vault(seeded: bool) -> Vec<SourceUnit> {
    vec![
        key_material(seeded),
        account_store(seeded),
        legacy_cipher(seeded),
        fingerprint(seeded),
        token_generator(seeded),
        packet_sealer(seeded),
        password_hasher(seeded),
        telemetry(seeded),
    ]
}

fn vault_internal(simple: &str) -> String {
    format!("{}/{simple}", SEEDED_PACKAGE.replace('.', "/"))
}

fn unit(simple: &str, source: String, b: ClassBuilder) -> SourceUnit {
    let internal = b.internal_name().to_string();
    let mut b = b;
    b.source_file(&format!("{simple}.java"));
    SourceUnit {
        package: Some(SEEDED_PACKAGE.to_string()),
        simple_name: simple.to_string(),
        source,
        classes: vec![ClassOutput {
            internal_name: internal,
            bytes: b.build(),
        }],
    }
}

pub const KEY_BYTES: [i8; 16] = [
    0x13, 0x37, 0x42, 0x24, 0x10, 0x20, 0x30, 0x40, 0x50, 0x60, 0x70, 0x11, 0x22, 0x33, 0x44, 0x55,
];

fn key_material(seeded: bool) -> SourceUnit {
    let init = if seeded {
        "{\n        0x13, 0x37, 0x42, 0x24, 0x10, 0x20, 0x30, 0x40,\n        0x50, 0x60, 0x70, 0x11, 0x22, 0x33, 0x44, 0x55 }"
    } else {
        "new SecureRandom().generateSeed(16)"
    };
    let src = format!(
        "package com.acme.vault;\n\nimport java.security.SecureRandom;\nimport javax.crypto.spec.SecretKeySpec;\n\npublic class KeyMaterial {{\n    private static final byte[] KEY = {init};\n\n    public SecretKeySpec secretKey() {{\n        return new SecretKeySpec(KEY, \"AES\");\n    }}\n}}\n"
    );
    let me = vault_internal("KeyMaterial");
    let mut b = ClassBuilder::new(&me);
    b.field(acc::PRIVATE | acc::STATIC | acc::FINAL, "KEY", "[B");
    b.default_constructor(line_of(&src, "public class"));

    let mut c = Code::new(4, 1);
    c.line(line_of(&src, "new SecretKeySpec"));
    c.new_object(&mut b.pool, "javax/crypto/spec/SecretKeySpec").op(op::DUP);
    c.getstatic(&mut b.pool, &me, "KEY", "[B");
    c.ldc_string(&mut b.pool, "AES");
    c.invokespecial(&mut b.pool, "javax/crypto/spec/SecretKeySpec", "<init>", "([BLjava/lang/String;)V");
    c.op(op::ARETURN);
    b.method(acc::PUBLIC, "secretKey", "()Ljavax/crypto/spec/SecretKeySpec;", c);

    let mut c = Code::new(4, 0);
    c.line(line_of(&src, "KEY ="));
    if seeded {
        c.byte_array(&mut b.pool, &KEY_BYTES);
    } else {
        c.new_object(&mut b.pool, "java/security/SecureRandom").op(op::DUP);
        c.invokespecial(&mut b.pool, "java/security/SecureRandom", "<init>", "()V");
        c.iconst(&mut b.pool, 16);
        c.invokevirtual(&mut b.pool, "java/security/SecureRandom", "generateSeed", "(I)[B");
    }
    c.putstatic(&mut b.pool, &me, "KEY", "[B").op(op::RETURN);
    b.method(acc::STATIC, "<clinit>", "()V", c);
    unit("KeyMaterial", src, b)
}

fn account_store(seeded: bool) -> SourceUnit {
    let pw = if seeded {
        "\"admin\""
    } else {
        "System.getenv(\"ACCOUNTS_DB_PASSWORD\")"
    };
    let src = format!(
        "package com.acme.vault;\n\nimport java.sql.Connection;\nimport java.sql.DriverManager;\nimport java.sql.SQLException;\n\npublic class AccountStore {{\n    private static final String URL = \"jdbc:postgresql://db.internal/accounts\";\n\n    public Connection open() throws SQLException {{\n        return connect(\"svc_accounts\", {pw});\n    }}\n\n    private Connection connect(String user, String password) throws SQLException {{\n        return DriverManager.getConnection(URL, user, password);\n    }}\n}}\n"
    );
    let me = vault_internal("AccountStore");
    let mut b = ClassBuilder::new(&me);
    let url = b.pool.string("jdbc:postgresql://db.internal/accounts");
    b.constant_field(acc::PRIVATE | acc::STATIC | acc::FINAL, "URL", "Ljava/lang/String;", url);
    b.default_constructor(line_of(&src, "public class"));

    let conn_desc = "(Ljava/lang/String;Ljava/lang/String;)Ljava/sql/Connection;";
    let mut c = Code::new(3, 1);
    c.line(line_of(&src, "return connect("));
    c.aload(0).ldc_string(&mut b.pool, "svc_accounts");
    if seeded {
        c.ldc_string(&mut b.pool, "admin");
    } else {
        c.ldc_string(&mut b.pool, "ACCOUNTS_DB_PASSWORD");
        c.invokestatic(&mut b.pool, "java/lang/System", "getenv", "(Ljava/lang/String;)Ljava/lang/String;");
    }
    c.invokespecial(&mut b.pool, &me, "connect", conn_desc);
    c.op(op::ARETURN);
    b.method(acc::PUBLIC, "open", "()Ljava/sql/Connection;", c);
    b.throws(&["java/sql/SQLException"]);

    let mut c = Code::new(3, 3);
    c.line(line_of(&src, "DriverManager.getConnection"));
    c.ldc_index(url).aload(1).aload(2);
    c.invokestatic(
        &mut b.pool,
        "java/sql/DriverManager",
        "getConnection",
        "(Ljava/lang/String;Ljava/lang/String;Ljava/lang/String;)Ljava/sql/Connection;",
    );
    c.op(op::ARETURN);
    b.method(acc::PRIVATE, "connect", conn_desc, c);
    b.throws(&["java/sql/SQLException"]);
    unit("AccountStore", src, b)
}

fn legacy_cipher(seeded: bool) -> SourceUnit {
    let transform = if seeded {
        "\"AES/ECB/PKCS5Padding\""
    } else {
        "System.getProperty(\"vault.transform\")"
    };
    let src = format!(
        "package com.acme.vault;\n\nimport java.security.GeneralSecurityException;\nimport java.security.Key;\nimport javax.crypto.Cipher;\n\npublic class LegacyCipher {{\n    public byte[] seal(Key key, byte[] data) throws GeneralSecurityException {{\n        Cipher cipher = Cipher.getInstance({transform});\n        cipher.init(Cipher.ENCRYPT_MODE, key);\n        return cipher.doFinal(data);\n    }}\n}}\n"
    );
    let me = vault_internal("LegacyCipher");
    let mut b = ClassBuilder::new(&me);
    b.default_constructor(line_of(&src, "public class"));
    let mut c = Code::new(3, 4);
    c.line(line_of(&src, "Cipher.getInstance"));
    if seeded {
        c.ldc_string(&mut b.pool, "AES/ECB/PKCS5Padding");
    } else {
        c.ldc_string(&mut b.pool, "vault.transform");
        c.invokestatic(&mut b.pool, "java/lang/System", "getProperty", "(Ljava/lang/String;)Ljava/lang/String;");
    }
    c.invokestatic(&mut b.pool, "javax/crypto/Cipher", "getInstance", "(Ljava/lang/String;)Ljavax/crypto/Cipher;");
    c.astore(3);
    c.line(line_of(&src, "cipher.init")).aload(3).op(op::ICONST_1).aload(1);
    c.invokevirtual(&mut b.pool, "javax/crypto/Cipher", "init", "(ILjava/security/Key;)V");
    c.line(line_of(&src, "doFinal")).aload(3).aload(2);
    c.invokevirtual(&mut b.pool, "javax/crypto/Cipher", "doFinal", "([B)[B");
    c.op(op::ARETURN);
    b.method(acc::PUBLIC, "seal", "(Ljava/security/Key;[B)[B", c);
    b.throws(&["java/security/GeneralSecurityException"]);
    unit("LegacyCipher", src, b)
}

fn fingerprint(seeded: bool) -> SourceUnit {
    let value = if seeded {
        "\"MD5\""
    } else {
        "System.getProperty(\"vault.digest\")"
    };
    let src = format!(
        "package com.acme.vault;\n\nimport java.security.MessageDigest;\nimport java.security.NoSuchAlgorithmException;\n\npublic class Fingerprint {{\n    private static final String ALGORITHM;\n\n    static {{\n        ALGORITHM = {value};\n    }}\n\n    public static byte[] of(byte[] data) throws NoSuchAlgorithmException {{\n        MessageDigest md = MessageDigest.getInstance(ALGORITHM);\n        return md.digest(data);\n    }}\n}}\n"
    );
    let me = vault_internal("Fingerprint");
    let mut b = ClassBuilder::new(&me);
    b.field(acc::PRIVATE | acc::STATIC | acc::FINAL, "ALGORITHM", "Ljava/lang/String;");
    b.default_constructor(line_of(&src, "public class"));

    let mut c = Code::new(2, 2);
    c.line(line_of(&src, "MessageDigest.getInstance"));
    c.getstatic(&mut b.pool, &me, "ALGORITHM", "Ljava/lang/String;");
    c.invokestatic(
        &mut b.pool,
        "java/security/MessageDigest",
        "getInstance",
        "(Ljava/lang/String;)Ljava/security/MessageDigest;",
    );
    c.astore(1);
    c.line(line_of(&src, "md.digest")).aload(1).aload(0);
    c.invokevirtual(&mut b.pool, "java/security/MessageDigest", "digest", "([B)[B");
    c.op(op::ARETURN);
    b.method(acc::PUBLIC | acc::STATIC, "of", "([B)[B", c);
    b.throws(&["java/security/NoSuchAlgorithmException"]);

    let mut c = Code::new(1, 0);
    c.line(line_of(&src, "ALGORITHM ="));
    if seeded {
        c.ldc_string(&mut b.pool, "MD5");
    } else {
        c.ldc_string(&mut b.pool, "vault.digest");
        c.invokestatic(&mut b.pool, "java/lang/System", "getProperty", "(Ljava/lang/String;)Ljava/lang/String;");
    }
    c.putstatic(&mut b.pool, &me, "ALGORITHM", "Ljava/lang/String;");
    c.line(line_of(&src, "ALGORITHM =") + 1).op(op::RETURN);
    b.method(acc::STATIC, "<clinit>", "()V", c);
    unit("Fingerprint", src, b)
}

fn token_generator(seeded: bool) -> SourceUnit {
    let seed = if seeded { "20240229L" } else { "System.nanoTime()" };
    let src = format!(
        "package com.acme.vault;\n\nimport java.security.SecureRandom;\n\npublic class TokenGenerator {{\n    private final SecureRandom random = new SecureRandom();\n\n    public TokenGenerator() {{\n        random.setSeed({seed});\n    }}\n\n    public long next() {{\n        return random.nextLong();\n    }}\n}}\n"
    );
    let me = vault_internal("TokenGenerator");
    let mut b = ClassBuilder::new(&me);
    b.field(acc::PRIVATE | acc::FINAL, "random", "Ljava/security/SecureRandom;");

    let mut c = Code::new(4, 1);
    c.line(line_of(&src, "public TokenGenerator()")).aload(0);
    c.invokespecial(&mut b.pool, "java/lang/Object", "<init>", "()V");
    c.line(line_of(&src, "new SecureRandom()")).aload(0);
    c.new_object(&mut b.pool, "java/security/SecureRandom").op(op::DUP);
    c.invokespecial(&mut b.pool, "java/security/SecureRandom", "<init>", "()V");
    c.putfield(&mut b.pool, &me, "random", "Ljava/security/SecureRandom;");
    c.line(line_of(&src, "random.setSeed")).aload(0);
    c.getfield(&mut b.pool, &me, "random", "Ljava/security/SecureRandom;");
    if seeded {
        c.lconst(&mut b.pool, 20240229);
    } else {
        c.invokestatic(&mut b.pool, "java/lang/System", "nanoTime", "()J");
    }
    c.invokevirtual(&mut b.pool, "java/security/SecureRandom", "setSeed", "(J)V");
    c.line(line_of(&src, "random.setSeed") + 1).op(op::RETURN);
    b.method(acc::PUBLIC, "<init>", "()V", c);

    let mut c = Code::new(2, 1);
    c.line(line_of(&src, "nextLong")).aload(0);
    c.getfield(&mut b.pool, &me, "random", "Ljava/security/SecureRandom;");
    c.invokevirtual(&mut b.pool, "java/security/SecureRandom", "nextLong", "()J");
    c.op(op::LRETURN);
    b.method(acc::PUBLIC, "next", "()J", c);
    unit("TokenGenerator", src, b)
}

/// `new byte[16]; new SecureRandom().nextBytes(buf);` stored into `slot`.
fn random_bytes(c: &mut Code, b: &mut ClassBuilder, slot: u16, src: &str, line_hint: &str) {
    c.line(line_of(src, line_hint));
    c.iconst(&mut b.pool, 16).newarray(atype::BYTE).astore(slot);
    c.line(line_of(src, "nextBytes"));
    c.new_object(&mut b.pool, "java/security/SecureRandom").op(op::DUP);
    c.invokespecial(&mut b.pool, "java/security/SecureRandom", "<init>", "()V");
    c.aload(slot);
    c.invokevirtual(&mut b.pool, "java/security/SecureRandom", "nextBytes", "([B)V");
}

pub const IV_BYTES: [i8; 16] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15];

fn packet_sealer(seeded: bool) -> SourceUnit {
    let iv = if seeded {
        "byte[] iv = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};"
    } else {
        "byte[] iv = new byte[16];\n        new SecureRandom().nextBytes(iv);"
    };
    let src = format!(
        "package com.acme.vault;\n\nimport java.security.GeneralSecurityException;\nimport java.security.SecureRandom;\nimport javax.crypto.Cipher;\nimport javax.crypto.SecretKey;\nimport javax.crypto.spec.IvParameterSpec;\n\npublic class PacketSealer {{\n    public byte[] seal(SecretKey key, byte[] payload) throws GeneralSecurityException {{\n        {iv}\n        IvParameterSpec spec = new IvParameterSpec(iv);\n        Cipher cipher = Cipher.getInstance(\"AES/CBC/PKCS5Padding\");\n        cipher.init(Cipher.ENCRYPT_MODE, key, spec);\n        return cipher.doFinal(payload);\n    }}\n}}\n"
    );
    let me = vault_internal("PacketSealer");
    let mut b = ClassBuilder::new(&me);
    b.default_constructor(line_of(&src, "public class"));
    let mut c = Code::new(4, 6);
    if seeded {
        c.line(line_of(&src, "byte[] iv"));
        c.byte_array(&mut b.pool, &IV_BYTES).astore(3);
    } else {
        random_bytes(&mut c, &mut b, 3, &src, "byte[] iv");
    }
    c.line(line_of(&src, "new IvParameterSpec"));
    c.new_object(&mut b.pool, "javax/crypto/spec/IvParameterSpec").op(op::DUP).aload(3);
    c.invokespecial(&mut b.pool, "javax/crypto/spec/IvParameterSpec", "<init>", "([B)V");
    c.astore(4);
    c.line(line_of(&src, "Cipher.getInstance"));
    c.ldc_string(&mut b.pool, "AES/CBC/PKCS5Padding");
    c.invokestatic(&mut b.pool, "javax/crypto/Cipher", "getInstance", "(Ljava/lang/String;)Ljavax/crypto/Cipher;");
    c.astore(5);
    c.line(line_of(&src, "cipher.init")).aload(5).op(op::ICONST_1).aload(1).aload(4);
    c.invokevirtual(
        &mut b.pool,
        "javax/crypto/Cipher",
        "init",
        "(ILjava/security/Key;Ljava/security/spec/AlgorithmParameterSpec;)V",
    );
    c.line(line_of(&src, "doFinal")).aload(5).aload(2);
    c.invokevirtual(&mut b.pool, "javax/crypto/Cipher", "doFinal", "([B)[B");
    c.op(op::ARETURN);
    b.method(acc::PUBLIC, "seal", "(Ljavax/crypto/SecretKey;[B)[B", c);
    b.throws(&["java/security/GeneralSecurityException"]);
    unit("PacketSealer", src, b)
}

fn password_hasher(seeded: bool) -> SourceUnit {
    let salt = if seeded {
        "byte[] salt = \"NaCl-pepper-2020\".getBytes(StandardCharsets.UTF_8);"
    } else {
        "byte[] salt = new byte[16];\n        new SecureRandom().nextBytes(salt);"
    };
    let src = format!(
        "package com.acme.vault;\n\nimport java.nio.charset.StandardCharsets;\nimport java.security.GeneralSecurityException;\nimport java.security.SecureRandom;\nimport javax.crypto.SecretKeyFactory;\nimport javax.crypto.spec.PBEKeySpec;\n\npublic class PasswordHasher {{\n    public byte[] hash(char[] password) throws GeneralSecurityException {{\n        {salt}\n        PBEKeySpec spec = new PBEKeySpec(password, salt, 65536, 256);\n        SecretKeyFactory factory = SecretKeyFactory.getInstance(\"PBKDF2WithHmacSHA256\");\n        return factory.generateSecret(spec).getEncoded();\n    }}\n}}\n"
    );
    let me = vault_internal("PasswordHasher");
    let mut b = ClassBuilder::new(&me);
    b.default_constructor(line_of(&src, "public class"));
    let mut c = Code::new(6, 5);
    if seeded {
        c.line(line_of(&src, "byte[] salt"));
        c.ldc_string(&mut b.pool, "NaCl-pepper-2020");
        c.getstatic(&mut b.pool, "java/nio/charset/StandardCharsets", "UTF_8", "Ljava/nio/charset/Charset;");
        c.invokevirtual(&mut b.pool, "java/lang/String", "getBytes", "(Ljava/nio/charset/Charset;)[B");
        c.astore(2);
    } else {
        random_bytes(&mut c, &mut b, 2, &src, "byte[] salt");
    }
    c.line(line_of(&src, "new PBEKeySpec"));
    c.new_object(&mut b.pool, "javax/crypto/spec/PBEKeySpec").op(op::DUP).aload(1).aload(2);
    c.iconst(&mut b.pool, 65536);
    c.iconst(&mut b.pool, 256);
    c.invokespecial(&mut b.pool, "javax/crypto/spec/PBEKeySpec", "<init>", "([C[BII)V");
    c.astore(3);
    c.line(line_of(&src, "SecretKeyFactory.getInstance"));
    c.ldc_string(&mut b.pool, "PBKDF2WithHmacSHA256");
    c.invokestatic(
        &mut b.pool,
        "javax/crypto/SecretKeyFactory",
        "getInstance",
        "(Ljava/lang/String;)Ljavax/crypto/SecretKeyFactory;",
    );
    c.astore(4);
    c.line(line_of(&src, "generateSecret")).aload(4).aload(3);
    c.invokevirtual(
        &mut b.pool,
        "javax/crypto/SecretKeyFactory",
        "generateSecret",
        "(Ljava/security/spec/KeySpec;)Ljavax/crypto/SecretKey;",
    );
    c.invokeinterface(&mut b.pool, "javax/crypto/SecretKey", "getEncoded", "()[B");
    c.op(op::ARETURN);
    b.method(acc::PUBLIC, "hash", "([C)[B", c);
    b.throws(&["java/security/GeneralSecurityException"]);
    unit("PasswordHasher", src, b)
}

fn telemetry(seeded: bool) -> SourceUnit {
    let endpoint = if seeded {
        "\"http://telemetry.acme.example/v1/collect\""
    } else {
        "System.getProperty(\"telemetry.endpoint\")"
    };
    let src = format!(
        "package com.acme.vault;\n\nimport java.io.IOException;\nimport java.io.InputStream;\nimport java.net.URL;\n\npublic class Telemetry {{\n    public InputStream fetch() throws IOException {{\n        URL endpoint = new URL({endpoint});\n        return endpoint.openStream();\n    }}\n}}\n"
    );
    let me = vault_internal("Telemetry");
    let mut b = ClassBuilder::new(&me);
    b.default_constructor(line_of(&src, "public class"));
    let mut c = Code::new(3, 2);
    c.line(line_of(&src, "new URL("));
    c.new_object(&mut b.pool, "java/net/URL").op(op::DUP);
    if seeded {
        c.ldc_string(&mut b.pool, "http://telemetry.acme.example/v1/collect");
    } else {
        c.ldc_string(&mut b.pool, "telemetry.endpoint");
        c.invokestatic(&mut b.pool, "java/lang/System", "getProperty", "(Ljava/lang/String;)Ljava/lang/String;");
    }
    c.invokespecial(&mut b.pool, "java/net/URL", "<init>", "(Ljava/lang/String;)V");
    c.astore(1);
    c.line(line_of(&src, "openStream")).aload(1);
    c.invokevirtual(&mut b.pool, "java/net/URL", "openStream", "()Ljava/io/InputStream;");
    c.op(op::ARETURN);
    b.method(acc::PUBLIC, "fetch", "()Ljava/io/InputStream;", c);
    b.throws(&["java/io/IOException"]);
    unit("Telemetry", src, b)
}

// ---------------------------------------------------------------------------
// Bulk classes
// ---------------------------------------------------------------------------

/// A class with `calls` catalogued call sites whose arguments flow through a
/// chain of wrapper methods, used to build slow-to-scan inputs.
pub fn bulk_class(index: usize, calls: usize) -> ClassOutput {
    let internal = format!("bulk/p{}/Bulk{index}", index % 16);
    let mut b = ClassBuilder::new(&internal);
    b.default_constructor(1);
    let mut c = Code::new(4, 2);
    for k in 0..calls {
        c.line(k as u16 + 2);
        c.ldc_string(&mut b.pool, if k % 2 == 0 { "AES/ECB/NoPadding" } else { "SHA-256" });
        c.invokestatic(&mut b.pool, &internal, "relay", "(Ljava/lang/String;)Ljava/lang/String;");
        if k % 2 == 0 {
            c.invokestatic(&mut b.pool, "javax/crypto/Cipher", "getInstance", "(Ljava/lang/String;)Ljavax/crypto/Cipher;");
        } else {
            c.invokestatic(
                &mut b.pool,
                "java/security/MessageDigest",
                "getInstance",
                "(Ljava/lang/String;)Ljava/security/MessageDigest;",
            );
        }
        c.op(op::POP);
    }
    c.op(op::RETURN);
    b.method(acc::PUBLIC | acc::STATIC, "run", "()V", c);
    let mut c = Code::new(1, 1);
    c.aload(0).op(op::ARETURN);
    b.method(acc::PRIVATE | acc::STATIC, "relay", "(Ljava/lang/String;)Ljava/lang/String;", c);
    ClassOutput {
        internal_name: internal,
        bytes: b.build(),
    }
}
