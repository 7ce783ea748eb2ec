//! Writes fixture archives.

use std::io::{Cursor, Write};

use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, ZipWriter};

/// Builds an in-memory zip archive from `(entry name, bytes)` pairs, in the
/// order given.
pub fn build_jar(entries: &[(String, Vec<u8>)]) -> Vec<u8> {
    build_jar_with(entries, CompressionMethod::Deflated)
}

pub fn build_jar_with(entries: &[(String, Vec<u8>)], method: CompressionMethod) -> Vec<u8> {
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    let opts = SimpleFileOptions::default().compression_method(method);
    for (name, bytes) in entries {
        zip.start_file(name.as_str(), opts).expect("zip entry");
        zip.write_all(bytes).expect("zip write");
    }
    zip.finish().expect("zip finish").into_inner()
}

pub fn manifest() -> (String, Vec<u8>) {
    (
        "META-INF/MANIFEST.MF".to_string(),
        b"Manifest-Version: 1.0\r\nCreated-By: jvmgen\r\n\r\n".to_vec(),
    )
}
