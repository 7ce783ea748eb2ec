//! Report rendering: a header/body/footer document written through
//! `start_analyzing`, `add_issue` and `stop_analyzing`, either streamed or
//! buffered until the end.

mod render;
pub mod schema;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use chrono::{DateTime, Utc};

use crate::catalog::Severity;
use crate::intake::SourceType;
use crate::rules::BugInstance;

pub use validate::{validate_document, validate_str, ValidationReport, Violation};

pub const TOOL_NAME: &str = "cryptoslice";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Schema for ScarfXml documents, as shipped in `schema/report.xsd`.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.xsd");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FormatKind {
    ScarfXml,
    Legacy,
    Default,
}

impl FormatKind {
    pub const ALL: [FormatKind; 3] = [FormatKind::ScarfXml, FormatKind::Legacy, FormatKind::Default];

    pub fn name(self) -> &'static str {
        match self {
            FormatKind::ScarfXml => "ScarfXml",
            FormatKind::Legacy => "Legacy",
            FormatKind::Default => "Default",
        }
    }

    /// Value accepted by `--format`.
    pub fn flag_value(self) -> &'static str {
        match self {
            FormatKind::ScarfXml => "scarf",
            FormatKind::Legacy => "legacy",
            FormatKind::Default => "default",
        }
    }

    /// Extension of the output file, with the dot.
    pub fn extension(self) -> &'static str {
        match self {
            FormatKind::ScarfXml => ".xml",
            FormatKind::Legacy => ".txt",
            FormatKind::Default => ".jsonl",
        }
    }
}

impl fmt::Display for FormatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FormatKind {
    type Err = String;

    /// Accepts the flag value or the name, in any case.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FormatKind::ALL
            .into_iter()
            .find(|k| k.flag_value().eq_ignore_ascii_case(s) || k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown format {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OutputFormat {
    pub kind: FormatKind,
    pub streaming: bool,
}

/// Everything known before scanning starts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Header {
    pub tool_name: String,
    pub tool_version: String,
    pub started: DateTime<Utc>,
    pub source_type: SourceType,
    pub inputs: Vec<String>,
    /// Configured flags as (name, value); switches have no value.
    pub flags: Vec<(String, Option<String>)>,
}

impl Header {
    pub fn new(started: DateTime<Utc>, source_type: SourceType) -> Header {
        Header {
            tool_name: TOOL_NAME.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            started,
            source_type,
            inputs: Vec::new(),
            flags: Vec::new(),
        }
    }
}

/// Supplied by the caller when the scan ends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanEnd {
    pub finished: DateTime<Utc>,
    /// Slices with at least one unresolved watched argument.
    pub unknown_slices: u64,
    /// Why the scan stopped early, if it did.
    pub truncated: Option<String>,
}

impl ScanEnd {
    pub fn complete(finished: DateTime<Utc>, unknown_slices: u64) -> ScanEnd {
        ScanEnd { finished, unknown_slices, truncated: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Footer {
    pub finished: DateTime<Utc>,
    pub total: u64,
    pub per_rule: BTreeMap<String, u64>,
    pub per_severity: BTreeMap<Severity, u64>,
    pub unknown_slices: u64,
    pub truncated: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("cannot write report: {0}")]
    SinkUnwritable(#[source] io::Error),
    #[error("output session already stopped")]
    SessionClosed,
}

/// Timestamps as `YYYY-MM-DDTHH:MM:SSZ`.
pub fn canonical_timestamp(t: &DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// One report being written to `sink`. Calls must be serialized by the
/// caller.
pub struct OutputSession<W: Write> {
    format: OutputFormat,
    sink: W,
    header: Header,
    closed: bool,
    body_open: bool,
    pending: Vec<BugInstance>,
    total: u64,
    per_rule: BTreeMap<String, u64>,
    per_severity: BTreeMap<Severity, u64>,
    scratch: String,
    peak: usize,
}

/// Opens a report. Streaming sessions write the header at once.
pub fn start_analyzing<W: Write>(header: Header, format: OutputFormat, sink: W) -> Result<OutputSession<W>, OutputError> {
    let mut s = OutputSession {
        format,
        sink,
        header,
        closed: false,
        body_open: false,
        pending: Vec::new(),
        total: 0,
        per_rule: BTreeMap::new(),
        per_severity: BTreeMap::new(),
        scratch: String::new(),
        peak: 0,
    };
    if format.streaming {
        render::open(format.kind, &s.header, &mut s.scratch);
        s.emit()?;
    }
    Ok(s)
}

impl<W: Write> OutputSession<W> {
    pub fn format(&self) -> OutputFormat {
        self.format
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Findings submitted so far.
    pub fn issue_count(&self) -> u64 {
        self.total
    }

    /// Largest size reached by the session's document buffer: the render
    /// scratch for streaming sessions, the whole document otherwise.
    pub fn peak_buffer_bytes(&self) -> usize {
        self.peak
    }

    pub fn add_issue(&mut self, issue: &BugInstance) -> Result<(), OutputError> {
        if self.closed {
            return Err(OutputError::SessionClosed);
        }
        self.total += 1;
        *self.per_rule.entry(issue.rule_id.clone()).or_default() += 1;
        *self.per_severity.entry(issue.severity).or_default() += 1;
        if !self.format.streaming {
            self.pending.push(issue.clone());
            return Ok(());
        }
        if !self.body_open {
            render::body_open(self.format.kind, &mut self.scratch);
            self.body_open = true;
        }
        render::issue(self.format.kind, issue, &mut self.scratch);
        self.emit()
    }

    /// Writes the footer and closes the document. The session is unusable
    /// afterwards.
    pub fn stop_analyzing(&mut self, end: ScanEnd) -> Result<(), OutputError> {
        if self.closed {
            return Err(OutputError::SessionClosed);
        }
        self.closed = true;
        let footer = Footer {
            finished: end.finished,
            total: self.total,
            per_rule: std::mem::take(&mut self.per_rule),
            per_severity: std::mem::take(&mut self.per_severity),
            unknown_slices: end.unknown_slices,
            truncated: end.truncated,
        };
        let kind = self.format.kind;
        if !self.format.streaming {
            render::open(kind, &self.header, &mut self.scratch);
            if !self.pending.is_empty() {
                render::body_open(kind, &mut self.scratch);
                self.body_open = true;
            }
            for issue in std::mem::take(&mut self.pending) {
                render::issue(kind, &issue, &mut self.scratch);
            }
        }
        if self.body_open {
            render::body_close(kind, &mut self.scratch);
        }
        render::close(kind, &footer, &mut self.scratch);
        self.emit()
    }

    pub fn sink(&self) -> &W {
        &self.sink
    }

    pub fn into_sink(self) -> W {
        self.sink
    }

    fn emit(&mut self) -> Result<(), OutputError> {
        self.peak = self.peak.max(self.scratch.len());
        let r = self.sink.write_all(self.scratch.as_bytes()).and_then(|_| self.sink.flush());
        self.scratch.clear();
        r.map_err(OutputError::SinkUnwritable)
    }
}

/// Renders a whole document in one call.
pub fn render_document(format: OutputFormat, header: &Header, issues: &[BugInstance], end: ScanEnd) -> Vec<u8> {
    let mut s = start_analyzing(header.clone(), format, Vec::new()).expect("Vec sink");
    for i in issues {
        s.add_issue(i).expect("open session");
    }
    s.stop_analyzing(end).expect("open session");
    s.into_sink()
}
