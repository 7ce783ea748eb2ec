use std::path::{Path, PathBuf};

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{CommandFactory, FromArgMatches, Parser};

use super::EnumKind;
use crate::catalog::Severity;
use crate::intake::SourceType;
use crate::output::{FormatKind, OutputFormat};

pub const DEFAULT_TIMEOUT_SECS: u64 = 600;
pub const MAX_TIMEOUT_SECS: u64 = 7 * 24 * 3600;
pub const MAX_VERBOSITY: u8 = 4;

/// Values for the three required environment variables given on the
/// command line instead.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EnvOverrides {
    pub java_home: Option<String>,
    pub java_version: Option<String>,
    pub tool_home: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanConfig {
    pub source_type: SourceType,
    pub inputs: Vec<PathBuf>,
    pub deps: Vec<PathBuf>,
    pub format: OutputFormat,
    /// Standard output when absent.
    pub output: Option<PathBuf>,
    pub timeout_secs: u64,
    pub no_exit: bool,
    pub verbosity: u8,
    pub catalog: Option<PathBuf>,
    pub env_override: bool,
    pub env: EnvOverrides,
    /// Exit with the findings code when a finding is at least this severe.
    pub fail_on: Option<Severity>,
    /// Replaces the default build output subtrees of a project directory.
    pub build_subdirs: Vec<PathBuf>,
    /// Validate and print the configuration without scanning.
    pub dry_run: bool,
}

impl ScanConfig {
    pub fn new(source_type: SourceType, inputs: Vec<PathBuf>) -> ScanConfig {
        ScanConfig {
            source_type,
            inputs,
            deps: Vec::new(),
            format: OutputFormat { kind: FormatKind::Default, streaming: false },
            output: None,
            timeout_secs: DEFAULT_TIMEOUT_SECS,
            no_exit: false,
            verbosity: 1,
            catalog: None,
            env_override: false,
            env: EnvOverrides::default(),
            fail_on: None,
            build_subdirs: Vec::new(),
            dry_run: false,
        }
    }

    /// The configured flags as (name, value), for report headers.
    pub fn flag_listing(&self) -> Vec<(String, Option<String>)> {
        let mut f: Vec<(String, Option<String>)> = vec![
            ("in".into(), Some(self.source_type.flag_value().into())),
            ("format".into(), Some(self.format.kind.flag_value().into())),
        ];
        if self.format.streaming {
            f.push(("stream".into(), None));
        }
        if let Some(o) = &self.output {
            f.push(("out".into(), Some(o.display().to_string())));
        }
        if !self.deps.is_empty() {
            let d: Vec<String> = self.deps.iter().map(|p| p.display().to_string()).collect();
            f.push(("deps".into(), Some(d.join(" "))));
        }
        f.push(("timeout".into(), Some(self.timeout_secs.to_string())));
        if let Some(c) = &self.catalog {
            f.push(("catalog".into(), Some(c.display().to_string())));
        }
        if let Some(s) = self.fail_on {
            f.push(("fail-on".into(), Some(s.to_string())));
        }
        if !self.build_subdirs.is_empty() {
            let d: Vec<String> = self.build_subdirs.iter().map(|p| p.display().to_string()).collect();
            f.push(("build-subdirs".into(), Some(d.join(" "))));
        }
        if self.no_exit {
            f.push(("noexit".into(), None));
        }
        if self.env_override {
            f.push(("env-override".into(), None));
        }
        f
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Scan(ScanConfig),
    Enumerate(EnumKind),
    CheckEnv(EnvOverrides),
    Help(String),
    Version(String),
}

/// An argument vector that does not describe a valid invocation.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ArgError {
    #[error("unknown flag {flag:?}")]
    UnknownFlag { flag: String },
    #[error("missing required flag {flag}: {chain}")]
    MissingRequired { flag: String, chain: String },
    #[error("{flag} {value:?} must end in {expected} ({reason})")]
    ExtensionMismatch { flag: String, value: String, expected: String, reason: String },
    #[error("{first} conflicts with {second}: {reason}")]
    ConflictingFlags { first: String, second: String, reason: String },
    #[error("invalid value {value:?} for {flag}: {reason}")]
    InvalidValue { flag: String, value: String, reason: String },
}

#[derive(Parser, Debug)]
#[command(
    name = "cryptoslice",
    version,
    about = "Detects cryptographic API misuse in JVM class files",
    disable_help_subcommand = true
)]
struct Raw {
    /// Input kind: jar, dir, class or java
    #[arg(long = "in", value_name = "TYPE")]
    source: Option<String>,
    /// Inputs to scan
    #[arg(long, value_name = "PATH", num_args = 1..)]
    paths: Vec<PathBuf>,
    /// Dependency directories (searched for compiled classes of .java inputs)
    #[arg(long, value_name = "PATH", num_args = 1..)]
    deps: Vec<PathBuf>,
    /// Report format: scarf, legacy or default
    #[arg(long, value_name = "KIND")]
    format: Option<String>,
    /// Write each finding as soon as it is known
    #[arg(long)]
    stream: bool,
    /// Report file; its extension must match the format
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Wall-clock limit in seconds
    #[arg(long, value_name = "SECONDS")]
    timeout: Option<String>,
    /// Return from main instead of calling process exit
    #[arg(long)]
    noexit: bool,
    /// Scan even if required environment variables are unset
    #[arg(long = "env-override")]
    env_override: bool,
    /// Rule and API catalog replacing the built-in one
    #[arg(long, value_name = "FILE")]
    catalog: Option<PathBuf>,
    /// List source-types, formats or exit-codes
    #[arg(long = "enum", value_name = "KIND")]
    enumerate: Option<String>,
    /// Report the required environment variables
    #[arg(long = "check-env")]
    check_env: bool,
    /// 0 (errors only) to 4 (trace)
    #[arg(long, value_name = "N")]
    verbosity: Option<String>,
    /// Exit with code 1 when a finding is at least this severe
    #[arg(long = "fail-on", value_name = "SEVERITY")]
    fail_on: Option<String>,
    /// Build output directories searched under a project directory
    #[arg(long = "build-subdirs", value_name = "DIR", num_args = 1..)]
    build_subdirs: Vec<PathBuf>,
    /// Value for JAVA_HOME
    #[arg(long = "java-home", value_name = "DIR")]
    java_home: Option<String>,
    /// Value for JAVA_VERSION
    #[arg(long = "java-version", value_name = "VERSION")]
    java_version: Option<String>,
    /// Value for CRYPTOSLICE_HOME
    #[arg(long = "tool-home", value_name = "DIR")]
    tool_home: Option<String>,
    /// Validate the arguments and print the configuration without scanning
    #[arg(long = "dry-run")]
    dry_run: bool,
}

/// Usage text.
pub fn help_text() -> String {
    Raw::command().render_help().to_string()
}

/// Parses a command line without the program name. Blank tokens are
/// dropped first.
pub fn parse_args<S: AsRef<str>>(argv: &[S]) -> Result<Command, ArgError> {
    let tokens = std::iter::once("cryptoslice").chain(argv.iter().map(AsRef::as_ref).filter(|t| !t.trim().is_empty()));
    let matches = Raw::command().try_get_matches_from(tokens).map_err(from_clap);
    let matches = match matches {
        Ok(m) => m,
        Err(Ok(cmd)) => return Ok(cmd),
        Err(Err(e)) => return Err(e),
    };
    let raw = Raw::from_arg_matches(&matches).map_err(|e| from_clap(e).err().unwrap_or_else(generic))?;
    validate(raw)
}

fn generic() -> ArgError {
    ArgError::InvalidValue { flag: "arguments".into(), value: String::new(), reason: "could not be parsed".into() }
}

fn context(e: &clap::Error, kind: ContextKind) -> String {
    match e.get(kind) {
        Some(ContextValue::String(s)) => s.clone(),
        Some(ContextValue::Strings(v)) => v.join(", "),
        Some(other) => other.to_string(),
        None => String::new(),
    }
}

/// Flag part of a clap argument rendering such as `--out <FILE>`.
fn flag_only(s: &str) -> String {
    s.split([' ', '=']).next().unwrap_or(s).to_string()
}

fn from_clap(e: clap::Error) -> Result<Command, ArgError> {
    let arg = flag_only(&context(&e, ContextKind::InvalidArg));
    Err(match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            return Ok(Command::Help(help_text()))
        }
        ErrorKind::DisplayVersion => return Ok(Command::Version(format!("cryptoslice {}", env!("CARGO_PKG_VERSION")))),
        ErrorKind::UnknownArgument | ErrorKind::InvalidSubcommand => ArgError::UnknownFlag { flag: arg },
        ErrorKind::ArgumentConflict => {
            let other = flag_only(&context(&e, ContextKind::PriorArg));
            ArgError::ConflictingFlags {
                second: if other.is_empty() { arg.clone() } else { other },
                first: arg,
                reason: "a flag may be given at most once".into(),
            }
        }
        ErrorKind::MissingRequiredArgument => ArgError::MissingRequired { flag: arg, chain: "always required".into() },
        _ => {
            let value = context(&e, ContextKind::InvalidValue);
            let reason = match e.kind() {
                ErrorKind::InvalidUtf8 => "not valid UTF-8",
                ErrorKind::TooFewValues | ErrorKind::WrongNumberOfValues | ErrorKind::TooManyValues => {
                    "wrong number of values"
                }
                ErrorKind::NoEquals => "a value must follow the flag",
                _ => "a value is required",
            };
            ArgError::InvalidValue {
                flag: if arg.is_empty() { "arguments".into() } else { arg },
                value,
                reason: reason.into(),
            }
        }
    })
}

fn invalid(flag: &str, value: &str, reason: impl Into<String>) -> ArgError {
    ArgError::InvalidValue { flag: flag.into(), value: value.into(), reason: reason.into() }
}

fn conflict(first: &str, second: &str, reason: &str) -> ArgError {
    ArgError::ConflictingFlags { first: first.into(), second: second.into(), reason: reason.into() }
}

/// Scan-only flags present in `raw`, in declaration order.
fn scan_flags(raw: &Raw) -> Vec<&'static str> {
    let mut v = Vec::new();
    let present = [
        ("--in", raw.source.is_some()),
        ("--paths", !raw.paths.is_empty()),
        ("--deps", !raw.deps.is_empty()),
        ("--format", raw.format.is_some()),
        ("--stream", raw.stream),
        ("--out", raw.out.is_some()),
        ("--timeout", raw.timeout.is_some()),
        ("--noexit", raw.noexit),
        ("--env-override", raw.env_override),
        ("--catalog", raw.catalog.is_some()),
        ("--fail-on", raw.fail_on.is_some()),
        ("--build-subdirs", !raw.build_subdirs.is_empty()),
        ("--dry-run", raw.dry_run),
    ];
    for (f, on) in present {
        if on {
            v.push(f);
        }
    }
    v
}

fn has_extension(p: &Path, dotted: &str) -> bool {
    p.extension().and_then(|e| e.to_str()).is_some_and(|e| format!(".{e}").eq_ignore_ascii_case(dotted))
}

fn validate(raw: Raw) -> Result<Command, ArgError> {
    let env = EnvOverrides {
        java_home: raw.java_home.clone(),
        java_version: raw.java_version.clone(),
        tool_home: raw.tool_home.clone(),
    };
    if let Some(v) = &raw.verbosity {
        parse_verbosity(v)?;
    }

    if let Some(kind) = &raw.enumerate {
        if raw.check_env {
            return Err(conflict("--enum", "--check-env", "only one listing can be printed"));
        }
        if let Some(f) = scan_flags(&raw).first() {
            return Err(conflict("--enum", f, "--enum prints a listing and does not scan"));
        }
        let k = kind.parse::<EnumKind>().map_err(|_| {
            invalid("--enum", kind, format!("expected one of {}", EnumKind::ALL.map(|k| k.flag_value()).join(", ")))
        })?;
        return Ok(Command::Enumerate(k));
    }
    if raw.check_env {
        if let Some(f) = scan_flags(&raw).first() {
            return Err(conflict("--check-env", f, "--check-env reports the environment and does not scan"));
        }
        return Ok(Command::CheckEnv(env));
    }

    let Some(source) = raw.source.as_deref() else {
        let chain = match scan_flags(&raw).first() {
            Some(f) => format!("a scan needs an input type (implied by {f})"),
            None => "a scan needs an input type; use --enum or --check-env for listings, --help for usage".into(),
        };
        return Err(ArgError::MissingRequired { flag: "--in".into(), chain });
    };
    let source_type = SourceType::from_flag_value(&source.to_ascii_lowercase()).ok_or_else(|| {
        let names: Vec<&str> = SourceType::ALL.iter().map(|t| t.flag_value()).collect();
        invalid("--in", source, format!("expected one of {}", names.join(", ")))
    })?;
    if raw.paths.is_empty() {
        return Err(ArgError::MissingRequired {
            flag: "--paths".into(),
            chain: format!("--in {} needs at least one input path", source_type.flag_value()),
        });
    }
    if let Some(ext) = source_type.extension() {
        if let Some(p) = raw.paths.iter().find(|p| !has_extension(p, ext)) {
            return Err(ArgError::ExtensionMismatch {
                flag: "--paths".into(),
                value: p.display().to_string(),
                expected: ext.into(),
                reason: format!("--in {} takes {ext} files", source_type.flag_value()),
            });
        }
    }
    if !raw.build_subdirs.is_empty() && source_type != SourceType::ProjectDir {
        return Err(conflict(
            "--build-subdirs",
            &format!("--in {}", source_type.flag_value()),
            "build output directories apply only to --in dir",
        ));
    }
    if let Some(p) = raw.build_subdirs.iter().find(|p| p.is_absolute()) {
        return Err(invalid("--build-subdirs", &p.display().to_string(), "must be relative to the project directory"));
    }

    let kind = match raw.format.as_deref() {
        None => FormatKind::Default,
        Some(f) => f.parse::<FormatKind>().map_err(|_| {
            let names: Vec<&str> = FormatKind::ALL.iter().map(|k| k.flag_value()).collect();
            invalid("--format", f, format!("expected one of {}", names.join(", ")))
        })?,
    };
    if raw.stream && raw.out.is_none() {
        return Err(ArgError::MissingRequired {
            flag: "--out".into(),
            chain: "--stream writes to a report file, so --stream requires --out".into(),
        });
    }
    if let Some(out) = &raw.out {
        if out.as_os_str().is_empty() || out.file_name().is_none() {
            return Err(invalid("--out", &out.display().to_string(), "must name a file"));
        }
        if !has_extension(out, kind.extension()) {
            return Err(ArgError::ExtensionMismatch {
                flag: "--out".into(),
                value: out.display().to_string(),
                expected: kind.extension().into(),
                reason: format!("--format {} writes {} files", kind.flag_value(), kind.extension()),
            });
        }
    }

    let timeout_secs = match raw.timeout.as_deref() {
        None => DEFAULT_TIMEOUT_SECS,
        Some(t) => match t.trim().parse::<u64>() {
            Ok(n) if (1..=MAX_TIMEOUT_SECS).contains(&n) => n,
            _ => return Err(invalid("--timeout", t, format!("expected whole seconds from 1 to {MAX_TIMEOUT_SECS}"))),
        },
    };
    let fail_on = match raw.fail_on.as_deref() {
        None => None,
        Some(s) => Some(s.parse::<Severity>().map_err(|_| invalid("--fail-on", s, "expected high, medium or low"))?),
    };
    let verbosity = raw.verbosity.as_deref().map(parse_verbosity).transpose()?.unwrap_or(1);

    Ok(Command::Scan(ScanConfig {
        source_type,
        inputs: raw.paths,
        deps: raw.deps,
        format: OutputFormat { kind, streaming: raw.stream },
        output: raw.out,
        timeout_secs,
        no_exit: raw.noexit,
        verbosity,
        catalog: raw.catalog,
        env_override: raw.env_override,
        env,
        fail_on,
        build_subdirs: raw.build_subdirs,
        dry_run: raw.dry_run,
    }))
}

fn parse_verbosity(v: &str) -> Result<u8, ArgError> {
    match v.trim().parse::<u8>() {
        Ok(n) if n <= MAX_VERBOSITY => Ok(n),
        _ => Err(invalid("--verbosity", v, format!("expected a level from 0 to {MAX_VERBOSITY}"))),
    }
}
