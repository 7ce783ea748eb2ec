//! Turns the four supported input kinds into an explicit scan set.

mod env;
mod lexer;

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rayon::prelude::*;

use crate::classfile::{
    enumerate_archive_classes, fully_qualified_name, parse_class_file, ArchiveError, ClassFile, EntryError, ParseError,
};

pub use env::{resolve_dependency_dirs, BuildTool, Env, MapEnv, SystemEnv, CACHE_LOCATIONS};

/// Output directories searched below a project root when none are given.
pub const DEFAULT_BUILD_SUBDIRS: [&str; 2] = ["target/classes", "build/classes/java/main"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SourceType {
    Archive,
    ProjectDir,
    ClassFiles,
    SourceFiles,
}

impl SourceType {
    pub const ALL: [SourceType; 4] =
        [SourceType::Archive, SourceType::ProjectDir, SourceType::ClassFiles, SourceType::SourceFiles];

    /// Value accepted by `--in`.
    pub fn flag_value(self) -> &'static str {
        match self {
            SourceType::Archive => "jar",
            SourceType::ProjectDir => "dir",
            SourceType::ClassFiles => "class",
            SourceType::SourceFiles => "java",
        }
    }

    pub fn from_flag_value(s: &str) -> Option<SourceType> {
        SourceType::ALL.into_iter().find(|t| t.flag_value() == s)
    }

    /// Required file extension of each input, with the dot.
    pub fn extension(self) -> Option<&'static str> {
        match self {
            SourceType::Archive => Some(".jar"),
            SourceType::ProjectDir => None,
            SourceType::ClassFiles => Some(".class"),
            SourceType::SourceFiles => Some(".java"),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SourceType::Archive => "Archive",
            SourceType::ProjectDir => "ProjectDir",
            SourceType::ClassFiles => "ClassFiles",
            SourceType::SourceFiles => "SourceFiles",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FqnError {
    #[error("cannot read {path}: {reason}")]
    Unreadable { path: PathBuf, reason: String },
    #[error("not a .java source file: {0}")]
    NotASourceFile(PathBuf),
    #[error("malformed package declaration in {path}: {reason}")]
    MalformedPackageDecl { path: PathBuf, reason: String },
}

/// Fully qualified name of the type declared by a source file: its package
/// clause plus the file stem. Reads nothing past the clause's `;`.
pub fn fqn_from_source(path: &Path) -> Result<String, FqnError> {
    if path.extension().and_then(|e| e.to_str()) != Some("java") {
        return Err(FqnError::NotASourceFile(path.to_path_buf()));
    }
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| FqnError::NotASourceFile(path.to_path_buf()))?;
    let file = File::open(path).map_err(|e| FqnError::Unreadable { path: path.to_path_buf(), reason: e.to_string() })?;
    fqn_at(BufReader::with_capacity(512, file), stem, path)
}

/// As [`fqn_from_source`], over any reader; `basename` is the file stem.
pub fn fqn_from_reader<R: Read>(reader: R, basename: &str) -> Result<String, FqnError> {
    fqn_at(reader, basename, Path::new(basename))
}

fn fqn_at<R: Read>(reader: R, basename: &str, path: &Path) -> Result<String, FqnError> {
    match lexer::package_of(reader) {
        Ok(Some(pkg)) => Ok(format!("{pkg}.{basename}")),
        Ok(None) => Ok(basename.to_string()),
        Err(lexer::LexError::Io(e)) => Err(FqnError::Unreadable { path: path.to_path_buf(), reason: e.to_string() }),
        Err(lexer::LexError::Encoding(at)) => Err(FqnError::Unreadable {
            path: path.to_path_buf(),
            reason: format!("invalid UTF-8 at byte {at}"),
        }),
        Err(lexer::LexError::Malformed(reason)) => {
            Err(FqnError::MalformedPackageDecl { path: path.to_path_buf(), reason })
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ScanSet {
    pub classes: Vec<ClassFile>,
    /// Loose sources and their derived names.
    pub sources: Vec<(PathBuf, String)>,
    /// Fully qualified names of exactly the classes taken from the inputs.
    pub class_path_entries: Vec<String>,
    pub dependency_dirs: Vec<PathBuf>,
    /// Inputs that failed to parse without failing the scan.
    pub entry_errors: Vec<EntryError>,
}

impl ScanSet {
    pub fn from_classes(classes: Vec<ClassFile>) -> ScanSet {
        let class_path_entries = classes.iter().map(fully_qualified_name).collect();
        ScanSet { classes, class_path_entries, ..Default::default() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IntakeError {
    #[error("input does not exist: {0}")]
    NotFound(PathBuf),
    #[error("{path}: a {found} cannot be mixed into a {kind} scan")]
    MixedInputKinds { path: PathBuf, kind: &'static str, found: &'static str },
    #[error("{path}: expected a {expected} file")]
    ExtensionMismatch { path: PathBuf, expected: &'static str },
    #[error("no classes to scan")]
    EmptyScanSet,
    #[error("{path}: {error}")]
    Parse { path: PathBuf, error: ParseError },
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error(transparent)]
    Fqn(#[from] FqnError),
    #[error("{source_file}: no compiled class for {fqn}")]
    MissingCompiledClass { source_file: PathBuf, fqn: String },
    #[error("cannot read {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("cancelled")]
    Cancelled,
}

#[derive(Clone, Debug, Default)]
pub struct IntakeOptions {
    /// Replaces [`DEFAULT_BUILD_SUBDIRS`] when non-empty.
    pub build_subdirs: Vec<PathBuf>,
    /// Polled between files.
    pub cancel: Option<Arc<AtomicBool>>,
}

impl IntakeOptions {
    fn cancelled(&self) -> bool {
        self.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed))
    }

    fn subdirs(&self) -> Vec<PathBuf> {
        if self.build_subdirs.is_empty() {
            DEFAULT_BUILD_SUBDIRS.iter().map(PathBuf::from).collect()
        } else {
            self.build_subdirs.clone()
        }
    }
}

pub fn assemble_scan_set(kind: SourceType, inputs: &[PathBuf], deps: &[PathBuf]) -> Result<ScanSet, IntakeError> {
    assemble_scan_set_with(kind, inputs, deps, &IntakeOptions::default())
}

pub fn assemble_scan_set_with(
    kind: SourceType,
    inputs: &[PathBuf],
    deps: &[PathBuf],
    opts: &IntakeOptions,
) -> Result<ScanSet, IntakeError> {
    if inputs.is_empty() {
        return Err(IntakeError::EmptyScanSet);
    }
    validate_inputs(kind, inputs)?;

    let mut set = match kind {
        SourceType::Archive => {
            let mut set = ScanSet::default();
            for a in inputs {
                if opts.cancelled() {
                    return Err(IntakeError::Cancelled);
                }
                let scan = enumerate_archive_classes(a)?;
                set.classes.extend(scan.classes);
                set.entry_errors.extend(scan.errors);
            }
            set
        }
        SourceType::ClassFiles => parse_loose(inputs, opts)?,
        SourceType::ProjectDir => {
            let mut files = Vec::new();
            for root in inputs {
                for sub in opts.subdirs() {
                    let dir = root.join(sub);
                    if dir.is_dir() {
                        files.extend(class_files_under(&dir)?);
                    }
                }
            }
            parse_loose(&files, opts)?
        }
        SourceType::SourceFiles => {
            let mut sources = Vec::new();
            let mut class_paths = Vec::new();
            for src in inputs {
                let fqn = fqn_from_source(src)?;
                let found = compiled_for(src, &fqn, deps)?;
                if found.is_empty() {
                    return Err(IntakeError::MissingCompiledClass { source_file: src.clone(), fqn });
                }
                class_paths.extend(found);
                sources.push((src.clone(), fqn));
            }
            let mut set = parse_loose(&class_paths, opts)?;
            for (src, fqn) in &sources {
                if !set.classes.iter().any(|c| &fully_qualified_name(c) == fqn) {
                    return Err(IntakeError::MissingCompiledClass { source_file: src.clone(), fqn: fqn.clone() });
                }
            }
            set.sources = sources;
            set
        }
    };
    if set.classes.is_empty() {
        return Err(IntakeError::EmptyScanSet);
    }
    set.class_path_entries = set.classes.iter().map(fully_qualified_name).collect();
    set.dependency_dirs = deps.to_vec();
    Ok(set)
}

fn validate_inputs(kind: SourceType, inputs: &[PathBuf]) -> Result<(), IntakeError> {
    for p in inputs {
        let meta = std::fs::metadata(p).map_err(|_| IntakeError::NotFound(p.clone()))?;
        match kind.extension() {
            None => {
                if !meta.is_dir() {
                    return Err(IntakeError::MixedInputKinds { path: p.clone(), kind: kind.name(), found: "file" });
                }
            }
            Some(ext) => {
                if meta.is_dir() {
                    return Err(IntakeError::MixedInputKinds { path: p.clone(), kind: kind.name(), found: "directory" });
                }
                let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
                if !name.ends_with(ext) || name.len() == ext.len() {
                    return Err(IntakeError::ExtensionMismatch { path: p.clone(), expected: ext });
                }
            }
        }
    }
    Ok(())
}

fn parse_loose(paths: &[PathBuf], opts: &IntakeOptions) -> Result<ScanSet, IntakeError> {
    let results: Vec<_> = paths
        .par_iter()
        .map(|p| {
            if opts.cancelled() {
                return Err(IntakeError::Cancelled);
            }
            let bytes = std::fs::read(p).map_err(|e| IntakeError::Io(p.clone(), e))?;
            Ok((p, parse_class_file(&bytes, p)))
        })
        .collect::<Result<_, _>>()?;
    let mut set = ScanSet::default();
    let mut first_error = None;
    for (p, r) in results {
        match r {
            Ok(c) => set.classes.push(c),
            Err(error) => {
                first_error.get_or_insert_with(|| (p.clone(), error.clone()));
                set.entry_errors.push(EntryError { entry: p.display().to_string(), error });
            }
        }
    }
    if set.classes.is_empty() {
        if let Some((path, error)) = first_error {
            return Err(IntakeError::Parse { path, error });
        }
    }
    Ok(set)
}

fn class_files_under(dir: &Path) -> Result<Vec<PathBuf>, IntakeError> {
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| IntakeError::Io(dir.to_path_buf(), e.into()))?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|e| e == "class") {
            out.push(entry.into_path());
        }
    }
    Ok(out)
}

/// Compiled classes for a source: `Name.class` and `Name$*.class` next to the
/// source, else under each dependency directory at the package path.
fn compiled_for(src: &Path, fqn: &str, deps: &[PathBuf]) -> Result<Vec<PathBuf>, IntakeError> {
    let simple = fqn.rsplit('.').next().unwrap_or(fqn);
    let rel: PathBuf = fqn.split('.').collect();
    let mut dirs = vec![src.parent().map(Path::to_path_buf).unwrap_or_default()];
    dirs.extend(deps.iter().map(|d| d.join(&rel).parent().map(Path::to_path_buf).unwrap_or_default()));
    for dir in dirs {
        let primary = dir.join(format!("{simple}.class"));
        if !primary.is_file() {
            continue;
        }
        let mut found = vec![primary];
        let prefix = format!("{simple}$");
        let mut nested: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(|e| IntakeError::Io(dir.clone(), e))?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with(&prefix) && n.ends_with(".class"))
            })
            .collect();
        nested.sort();
        found.extend(nested);
        return Ok(found);
    }
    Ok(Vec::new())
}
