//! Command-line front end: argument validation, environment checks,
//! listings and the scan driver.

mod args;
mod scan;

use std::fmt::{self, Write as _};
use std::str::FromStr;

pub use args::{
    help_text, parse_args, ArgError, Command, EnvOverrides, ScanConfig, DEFAULT_TIMEOUT_SECS, MAX_TIMEOUT_SECS,
    MAX_VERBOSITY,
};
pub use scan::{dispatch, run_scan, run_scan_with, ScanOutcome};

use crate::intake::{Env, SourceType};
use crate::output::FormatKind;

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExitStatus {
    Success,
    FindingsAboveThreshold,
    ArgumentError,
    EnvironmentError,
    Timeout,
    InternalError,
}

impl ExitStatus {
    pub const ALL: [ExitStatus; 6] = [
        ExitStatus::Success,
        ExitStatus::FindingsAboveThreshold,
        ExitStatus::ArgumentError,
        ExitStatus::EnvironmentError,
        ExitStatus::Timeout,
        ExitStatus::InternalError,
    ];

    pub fn code(self) -> u8 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::FindingsAboveThreshold => 1,
            ExitStatus::ArgumentError => 2,
            ExitStatus::EnvironmentError => 3,
            ExitStatus::Timeout => 4,
            ExitStatus::InternalError => 5,
        }
    }

    pub fn meaning(self) -> &'static str {
        match self {
            ExitStatus::Success => "scan completed (findings, if any, are below the --fail-on threshold)",
            ExitStatus::FindingsAboveThreshold => "scan completed with a finding at or above the --fail-on severity",
            ExitStatus::ArgumentError => "invalid arguments, inputs or catalog",
            ExitStatus::EnvironmentError => "a required environment variable is unset",
            ExitStatus::Timeout => "the scan exceeded --timeout; the report is marked truncated",
            ExitStatus::InternalError => "the scan failed (unreadable input, unwritable report, internal error)",
        }
    }
}

/// The listings printed by `--enum`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnumKind {
    SourceTypes,
    Formats,
    ExitCodes,
}

impl EnumKind {
    pub const ALL: [EnumKind; 3] = [EnumKind::SourceTypes, EnumKind::Formats, EnumKind::ExitCodes];

    pub fn flag_value(self) -> &'static str {
        match self {
            EnumKind::SourceTypes => "source-types",
            EnumKind::Formats => "formats",
            EnumKind::ExitCodes => "exit-codes",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown listing {0:?}; expected source-types, formats or exit-codes")]
pub struct UnknownKind(pub String);

impl FromStr for EnumKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EnumKind::ALL
            .into_iter()
            .find(|k| k.flag_value().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownKind(s.to_string()))
    }
}

/// One line per entry, in a fixed order.
pub fn enumerate_help(kind: EnumKind) -> String {
    let mut out = String::new();
    match kind {
        EnumKind::SourceTypes => {
            for t in SourceType::ALL {
                let ext = t.extension().unwrap_or("(directory)");
                let _ = writeln!(out, "{:<12} --in {:<6} {ext}", t.name(), t.flag_value());
            }
        }
        EnumKind::Formats => {
            for k in FormatKind::ALL {
                let _ = writeln!(out, "{:<9} --format {:<8} {}", k.name(), k.flag_value(), k.extension());
            }
        }
        EnumKind::ExitCodes => {
            for s in ExitStatus::ALL {
                let _ = writeln!(out, "{}  {}", s.code(), s.meaning());
            }
        }
    }
    out
}

/// The three variables a scan requires: name, what it holds, example value.
pub const REQUIRED_ENV: [(&str, &str, &str); 3] = [
    ("JAVA_HOME", "home directory of the JDK that built the scanned code", "/usr/lib/jvm/java-8-openjdk"),
    ("JAVA_VERSION", "Java runtime version of the scanned code", "8"),
    ("CRYPTOSLICE_HOME", "installation directory of this tool", "$HOME/.cryptoslice"),
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvEntry {
    pub name: &'static str,
    pub description: &'static str,
    /// None when unset or empty.
    pub value: Option<String>,
    /// Whether the value came from a command-line flag.
    pub from_flag: bool,
    /// A shell line that sets the variable.
    pub instruction: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvReport {
    pub entries: Vec<EnvEntry>,
}

impl EnvReport {
    pub fn ok(&self) -> bool {
        self.entries.iter().all(|e| e.value.is_some())
    }

    pub fn unset(&self) -> impl Iterator<Item = &EnvEntry> {
        self.entries.iter().filter(|e| e.value.is_none())
    }
}

impl fmt::Display for EnvReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            match &e.value {
                Some(v) if e.from_flag => writeln!(f, "{:<16} ok     {v} (from flag)", e.name)?,
                Some(v) => writeln!(f, "{:<16} ok     {v}", e.name)?,
                None => writeln!(f, "{:<16} unset  {}  # {}", e.name, e.instruction, e.description)?,
            }
        }
        if self.ok() {
            writeln!(f, "environment: ok")
        } else {
            writeln!(f, "environment: {} required variable(s) unset", self.unset().count())
        }
    }
}

/// Checks the three required variables; a flag value stands in for the
/// variable it names.
pub fn check_environment(env: &dyn Env, overrides: &EnvOverrides) -> EnvReport {
    let flags = [&overrides.java_home, &overrides.java_version, &overrides.tool_home];
    let entries = REQUIRED_ENV
        .iter()
        .zip(flags)
        .map(|(&(name, description, example), flag)| {
            let flag = flag.clone().filter(|v| !v.trim().is_empty());
            let from_flag = flag.is_some();
            let value = flag.or_else(|| env.var(name).filter(|v| !v.trim().is_empty()));
            EnvEntry { name, description, value, from_flag, instruction: format!("export {name}=\"{example}\"") }
        })
        .collect();
    EnvReport { entries }
}
