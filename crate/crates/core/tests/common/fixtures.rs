//! On-disk inputs and a runner for the built binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use jvmgen::corpus::{self, bulk_class};
use jvmgen::jar::{build_jar, manifest};

/// Classes and call sites per class in the stall jar. A full scan of this
/// takes several seconds even in an optimised build.
pub const STALL_CLASSES: usize = 8000;
pub const STALL_CALLS: usize = 60;

pub fn write_jar(dir: &Path, name: &str, units: &[corpus::SourceUnit]) -> PathBuf {
    let mut entries = vec![manifest()];
    entries.extend(corpus::jar_entries(units));
    let path = dir.join(name);
    std::fs::write(&path, build_jar(&entries)).unwrap();
    path
}

pub fn seeded_jar(dir: &Path) -> PathBuf {
    write_jar(dir, "seeded.jar", &corpus::seeded())
}

pub fn twin_jar(dir: &Path) -> PathBuf {
    write_jar(dir, "twin.jar", &corpus::clean_twin())
}

pub fn stall_jar(dir: &Path) -> PathBuf {
    let mut entries = vec![manifest()];
    entries.extend((0..STALL_CLASSES).map(|i| {
        let c = bulk_class(i, STALL_CALLS);
        (c.relative_path(), c.bytes)
    }));
    let path = dir.join("stall.jar");
    std::fs::write(&path, build_jar(&entries)).unwrap();
    path
}

/// The three required variables, all set.
pub const FULL_ENV: [(&str, &str); 3] =
    [("JAVA_HOME", "/opt/jdk8"), ("JAVA_VERSION", "8"), ("CRYPTOSLICE_HOME", "/opt/cryptoslice")];

pub struct Run {
    pub code: Option<i32>,
    pub stdout: String,
    pub stderr: String,
    pub elapsed: Duration,
}

/// Runs the binary with exactly `env` as its environment.
pub fn run(args: &[&str], env: &[(&str, &str)]) -> Run {
    let started = Instant::now();
    let out: Output = Command::new(env!("CARGO_BIN_EXE_cryptoslice"))
        .args(args)
        .env_clear()
        .envs(env.iter().copied())
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code(),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        elapsed: started.elapsed(),
    }
}
