use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{parse_class_file, ClassFile, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum ArchiveError {
    #[error("cannot read {0}: {1}")]
    Unreadable(PathBuf, std::io::Error),
    #[error("not a zip archive: {0}")]
    NotAnArchive(PathBuf),
    #[error("every class entry failed to parse ({} entries)", .0.len())]
    AllEntriesFailed(Vec<EntryError>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntryError {
    pub entry: String,
    pub error: ParseError,
}

#[derive(Clone, Debug, Default)]
pub struct ArchiveScan {
    pub classes: Vec<ClassFile>,
    pub errors: Vec<EntryError>,
}

/// Parses every `.class` entry of a zip archive, ordered by entry name.
/// A corrupt entry is recorded, not fatal, unless no entry parses.
pub fn enumerate_archive_classes(archive: &Path) -> Result<ArchiveScan, ArchiveError> {
    let file = File::open(archive).map_err(|e| ArchiveError::Unreadable(archive.to_path_buf(), e))?;
    let mut zip = zip::ZipArchive::new(file).map_err(|_| ArchiveError::NotAnArchive(archive.to_path_buf()))?;

    let mut names: Vec<String> = zip
        .file_names()
        .filter(|n| n.ends_with(".class") && !n.ends_with('/'))
        .map(str::to_string)
        .collect();
    names.sort();

    let mut raw = Vec::with_capacity(names.len());
    let mut errors = Vec::new();
    for name in names {
        let mut bytes = Vec::new();
        let read = zip.by_name(&name).map(|mut f| f.read_to_end(&mut bytes));
        match read {
            Ok(Ok(_)) => raw.push((name, bytes)),
            _ => errors.push(EntryError { entry: name, error: ParseError::Truncated { offset: bytes.len() } }),
        }
    }

    let parsed: Vec<_> = raw
        .into_par_iter()
        .map(|(name, bytes)| {
            let origin = format!("{}!/{}", archive.display(), name);
            (name, parse_class_file(&bytes, origin))
        })
        .collect();

    let total = parsed.len() + errors.len();
    let mut classes = Vec::with_capacity(parsed.len());
    for (entry, result) in parsed {
        match result {
            Ok(c) => classes.push(c),
            Err(error) => errors.push(EntryError { entry, error }),
        }
    }
    errors.sort_by(|a, b| a.entry.cmp(&b.entry));
    if total > 0 && classes.is_empty() {
        return Err(ArchiveError::AllEntriesFailed(errors));
    }
    Ok(ArchiveScan { classes, errors })
}
