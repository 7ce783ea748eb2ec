use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use chrono::Utc;
use rayon::prelude::*;

use super::{check_environment, enumerate_help, Command, ExitStatus, ScanConfig};
use crate::catalog::Catalog;
use crate::intake::{assemble_scan_set_with, resolve_dependency_dirs, Env, IntakeError, IntakeOptions, SourceType};
use crate::output::{start_analyzing, Header, OutputSession, ScanEnd};
use crate::rules::{rules_from, run_rules, BugInstance};
use crate::slicer::{backward_slice, find_criteria, IrIndex, Slice, DEFAULT_MAX_DEPTH};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanOutcome {
    pub status: ExitStatus,
    pub findings: usize,
    pub unknown_slices: u64,
    /// Set when the report was cut short.
    pub truncated: Option<String>,
}

impl ScanOutcome {
    fn early(status: ExitStatus) -> ScanOutcome {
        ScanOutcome { status, findings: 0, unknown_slices: 0, truncated: None }
    }
}

/// Runs a parsed command; text for the user goes to `stdout`, problems to
/// `stderr`.
pub fn dispatch(cmd: Command, env: &dyn Env, stdout: &mut dyn Write, stderr: &mut dyn Write) -> ExitStatus {
    match cmd {
        Command::Help(text) | Command::Version(text) => {
            let _ = writeln!(stdout, "{}", text.trim_end());
            ExitStatus::Success
        }
        Command::Enumerate(kind) => {
            let _ = write!(stdout, "{}", enumerate_help(kind));
            ExitStatus::Success
        }
        Command::CheckEnv(overrides) => {
            let report = check_environment(env, &overrides);
            let _ = write!(stdout, "{report}");
            if report.ok() {
                ExitStatus::Success
            } else {
                ExitStatus::EnvironmentError
            }
        }
        Command::Scan(cfg) if cfg.dry_run => {
            let _ = writeln!(stdout, "inputs: {}", join(&cfg.inputs));
            for (k, v) in cfg.flag_listing() {
                let _ = writeln!(stdout, "{k}: {}", v.as_deref().unwrap_or("on"));
            }
            ExitStatus::Success
        }
        Command::Scan(cfg) => run_scan_with(&cfg, env, stderr).status,
    }
}

fn join(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(" ")
}

/// [`run_scan_with`] over the process environment, reporting to stderr.
pub fn run_scan(config: &ScanConfig) -> ScanOutcome {
    run_scan_with(config, &crate::intake::SystemEnv, &mut io::stderr())
}

/// Intake, slicing, rules and report, under the configured wall-clock
/// limit. On timeout the worker is told to stop and abandoned; the report
/// is closed with a truncation marker.
pub fn run_scan_with(config: &ScanConfig, env: &dyn Env, diag: &mut dyn Write) -> ScanOutcome {
    let started = Instant::now();
    let deadline = started + Duration::from_secs(config.timeout_secs);

    let report = check_environment(env, &config.env);
    if !report.ok() {
        let unset: Vec<&str> = report.unset().map(|e| e.name).collect();
        if !config.env_override {
            let _ = writeln!(diag, "cryptoslice: required environment variable(s) unset: {}", unset.join(", "));
            for e in report.unset() {
                let _ = writeln!(diag, "  {}   # {}", e.instruction, e.description);
            }
            let _ = writeln!(diag, "  (or pass --env-override to scan anyway)");
            return ScanOutcome::early(ExitStatus::EnvironmentError);
        }
        let _ = writeln!(diag, "cryptoslice: warning: scanning with {} unset (--env-override)", unset.join(", "));
    }

    let catalog = match &config.catalog {
        None => Catalog::shipped().clone(),
        Some(path) => match Catalog::load(path) {
            Ok(c) => c,
            Err(e) => {
                let _ = writeln!(diag, "cryptoslice: --catalog {}: {e}", path.display());
                return ScanOutcome::early(ExitStatus::ArgumentError);
            }
        },
    };

    let sink: Box<dyn Write + Send> = match &config.output {
        None => Box::new(io::stdout()),
        Some(path) => match File::create(path) {
            Ok(f) => Box::new(BufWriter::new(f)),
            Err(e) => {
                let _ = writeln!(diag, "cryptoslice: cannot create report {}: {e}", path.display());
                return ScanOutcome::early(ExitStatus::InternalError);
            }
        },
    };
    let mut header = Header::new(Utc::now(), config.source_type);
    header.inputs = config.inputs.iter().map(|p| p.display().to_string()).collect();
    header.flags = config.flag_listing();
    let mut session = match start_analyzing(header, config.format, sink) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(diag, "cryptoslice: {e}");
            return ScanOutcome::early(ExitStatus::InternalError);
        }
    };

    let cancel = Arc::new(AtomicBool::new(false));
    let (tx, rx) = mpsc::channel();
    let job = Job {
        kind: config.source_type,
        inputs: config.inputs.clone(),
        deps: dependency_dirs(config, env),
        build_subdirs: config.build_subdirs.clone(),
        catalog,
        cancel: cancel.clone(),
    };
    let spawned = std::thread::Builder::new().name("scan".into()).spawn(move || {
        let _ = tx.send(job.run());
    });
    if let Err(e) = spawned {
        let _ = writeln!(diag, "cryptoslice: cannot start scan: {e}");
        return finish(&mut session, Vec::new(), 0, Some("internal error".into()), ExitStatus::InternalError, diag);
    }

    let remaining = deadline.saturating_duration_since(Instant::now());
    match rx.recv_timeout(remaining) {
        Ok(Ok(work)) => {
            let status = match config.fail_on {
                Some(t) if work.findings.iter().any(|f| f.severity >= t) => ExitStatus::FindingsAboveThreshold,
                _ => ExitStatus::Success,
            };
            log::info!(
                "{} finding(s), {} slice(s) with unresolved arguments, {:.2?}",
                work.findings.len(),
                work.unknown_slices,
                started.elapsed()
            );
            finish(&mut session, work.findings, work.unknown_slices, None, status, diag)
        }
        Ok(Err(failure)) => {
            let _ = writeln!(diag, "cryptoslice: {failure}");
            let status = match failure {
                IntakeError::NotFound(_)
                | IntakeError::MixedInputKinds { .. }
                | IntakeError::ExtensionMismatch { .. }
                | IntakeError::EmptyScanSet
                | IntakeError::MissingCompiledClass { .. } => ExitStatus::ArgumentError,
                _ => ExitStatus::InternalError,
            };
            finish(&mut session, Vec::new(), 0, Some(format!("scan failed: {failure}")), status, diag)
        }
        Err(mpsc::RecvTimeoutError::Timeout) => {
            cancel.store(true, Ordering::Relaxed);
            let reason = format!("timeout after {} s", config.timeout_secs);
            let _ = writeln!(diag, "cryptoslice: {reason}; report truncated");
            finish(&mut session, Vec::new(), 0, Some(reason), ExitStatus::Timeout, diag)
        }
        Err(mpsc::RecvTimeoutError::Disconnected) => {
            let _ = writeln!(diag, "cryptoslice: the scan stopped unexpectedly");
            finish(&mut session, Vec::new(), 0, Some("internal error".into()), ExitStatus::InternalError, diag)
        }
    }
}

fn finish<W: Write>(
    session: &mut OutputSession<W>,
    findings: Vec<BugInstance>,
    unknown_slices: u64,
    truncated: Option<String>,
    status: ExitStatus,
    diag: &mut dyn Write,
) -> ScanOutcome {
    let n = findings.len();
    let mut result = findings.iter().try_for_each(|f| session.add_issue(f));
    if result.is_ok() {
        let end = ScanEnd { finished: Utc::now(), unknown_slices, truncated: truncated.clone() };
        result = session.stop_analyzing(end);
    }
    match result {
        Ok(()) => ScanOutcome { status, findings: n, unknown_slices, truncated },
        Err(e) => {
            let _ = writeln!(diag, "cryptoslice: {e}");
            ScanOutcome { status: ExitStatus::InternalError, findings: n, unknown_slices, truncated }
        }
    }
}

/// `--deps`, plus the build tools' dependency caches for project scans.
fn dependency_dirs(config: &ScanConfig, env: &dyn Env) -> Vec<PathBuf> {
    let mut deps = config.deps.clone();
    if config.source_type == SourceType::ProjectDir {
        for d in resolve_dependency_dirs(None, env) {
            if !deps.contains(&d) {
                deps.push(d);
            }
        }
    }
    deps
}

struct Job {
    kind: SourceType,
    inputs: Vec<PathBuf>,
    deps: Vec<PathBuf>,
    build_subdirs: Vec<PathBuf>,
    catalog: Catalog,
    cancel: Arc<AtomicBool>,
}

struct Work {
    findings: Vec<BugInstance>,
    unknown_slices: u64,
}

impl Job {
    fn run(self) -> Result<Work, IntakeError> {
        let opts = IntakeOptions { build_subdirs: self.build_subdirs.clone(), cancel: Some(self.cancel.clone()) };
        let set = assemble_scan_set_with(self.kind, &self.inputs, &self.deps, &opts)?;
        for e in &set.entry_errors {
            log::warn!("skipped {}: {}", e.entry, e.error);
        }
        log::info!("{} class(es) in scan set", set.classes.len());
        let index = IrIndex::new(&set.classes, &self.catalog);
        let criteria = find_criteria(&set, &self.catalog);
        log::info!("{} call site(s) to slice", criteria.len());
        let slices: Option<Vec<Slice>> = criteria
            .par_iter()
            .map(|c| {
                if self.cancel.load(Ordering::Relaxed) {
                    None
                } else {
                    Some(backward_slice(c, &index, DEFAULT_MAX_DEPTH))
                }
            })
            .collect();
        let slices = slices.ok_or(IntakeError::Cancelled)?;
        let unknown_slices = slices.iter().filter(|s| s.has_unknown()).count() as u64;
        let findings = run_rules(&rules_from(&self.catalog), &slices);
        Ok(Work { findings, unknown_slices })
    }
}
