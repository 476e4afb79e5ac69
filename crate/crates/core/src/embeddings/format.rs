//! On-disk formats for [`EmbeddingSet`]: the `EMB1` binary container and CSV.
//!
//! `EMB1` layout:
//!
//! ```text
//! {"magic":"EMB1","dim":512,"count":2,"role":"document",
//!  "identity_ids":["a","b"],"image_ids":["a_doc","b_doc"]}\n
//! <count * dim little-endian f32, row-major>
//! ```
//!
//! The header is a single JSON line so any language can parse it without a
//! schema, and the payload offset is simply `header_line_len + 1`, which keeps
//! the payload mmap-friendly at 15k × 512 scale.
//!
//! CSV carries the header `identity_id,image_id,v0..v{dim-1}` and one row per
//! entry. Components are written with the shortest representation that
//! round-trips the exact `f32`, so CSV round-trips are value-exact too.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EmbeddingEntry, EmbeddingSet, Role};
use crate::error::{Error, Result};

const MAGIC: &str = "EMB1";

/// File format selector for load/save.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Binary,
    Csv,
}

impl FileFormat {
    /// Pick a format from a path's extension: `.csv` → CSV, anything else →
    /// binary.
    pub fn from_path(path: &Path) -> FileFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => FileFormat::Csv,
            _ => FileFormat::Binary,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct BinaryHeader {
    magic: String,
    dim: usize,
    count: usize,
    role: Role,
    identity_ids: Vec<String>,
    image_ids: Vec<String>,
}

/// Load an embedding set, validating and normalizing every vector.
pub fn load_embeddings(path: &Path, format: FileFormat) -> Result<EmbeddingSet> {
    match format {
        FileFormat::Binary => load_binary(path),
        FileFormat::Csv => load_csv(path),
    }
}

/// Save an embedding set. Output is byte-stable: the same set always produces
/// the same file.
pub fn save_embeddings(set: &EmbeddingSet, path: &Path, format: FileFormat) -> Result<()> {
    match format {
        FileFormat::Binary => save_binary(set, path),
        FileFormat::Csv => save_csv(set, path),
    }
}

fn load_binary(path: &Path) -> Result<EmbeddingSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);

    let mut header_line = String::new();
    reader
        .read_line(&mut header_line)
        .map_err(|e| Error::io(path, e))?;
    let header: BinaryHeader = serde_json::from_str(header_line.trim_end())
        .map_err(|e| Error::json(format!("{} header", path.display()), e))?;

    if header.magic != MAGIC {
        return Err(Error::InvalidData(format!(
            "{}: bad magic {:?}, expected {MAGIC:?}",
            path.display(),
            header.magic
        )));
    }
    if header.identity_ids.len() != header.count || header.image_ids.len() != header.count {
        return Err(Error::InvalidData(format!(
            "{}: header claims count {} but carries {} identity ids and {} image ids",
            path.display(),
            header.count,
            header.identity_ids.len(),
            header.image_ids.len()
        )));
    }
    if header.dim == 0 {
        return Err(Error::InvalidData(format!(
            "{}: header dim must be positive",
            path.display()
        )));
    }

    let payload_len = header
        .count
        .checked_mul(header.dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| {
            Error::InvalidData(format!("{}: count × dim overflows", path.display()))
        })?;
    let mut payload = vec![0u8; payload_len];
    reader
        .read_exact(&mut payload)
        .map_err(|e| Error::io(path, e))?;
    let mut trailing = [0u8; 1];
    if reader.read(&mut trailing).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::InvalidData(format!(
            "{}: trailing bytes after {} × {} payload",
            path.display(),
            header.count,
            header.dim
        )));
    }

    let mut set = EmbeddingSet::new(header.dim, header.role)?;
    for (i, (identity_id, image_id)) in header
        .identity_ids
        .into_iter()
        .zip(header.image_ids)
        .enumerate()
    {
        let mut vector = Vec::with_capacity(header.dim);
        let base = i * header.dim * 4;
        for c in 0..header.dim {
            let off = base + c * 4;
            vector.push(f32::from_le_bytes(
                payload[off..off + 4].try_into().expect("4-byte slice"),
            ));
        }
        set.push(EmbeddingEntry {
            identity_id,
            image_id,
            vector,
        })
        .map_err(|e| Error::InvalidData(format!("{} entry {i}: {e}", path.display())))?;
    }
    Ok(set)
}

fn save_binary(set: &EmbeddingSet, path: &Path) -> Result<()> {
    let header = BinaryHeader {
        magic: MAGIC.to_string(),
        dim: set.dim(),
        count: set.len(),
        role: set.role(),
        identity_ids: set.entries().iter().map(|e| e.identity_id.clone()).collect(),
        image_ids: set.entries().iter().map(|e| e.image_id.clone()).collect(),
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer(&mut writer, &header)
        .map_err(|e| Error::json(format!("{} header", path.display()), e))?;
    writer.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    for entry in set.entries() {
        for &x in &entry.vector {
            writer
                .write_all(&x.to_le_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn load_csv(path: &Path) -> Result<EmbeddingSet> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path.display().to_string(), e))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::csv(path.display().to_string(), e))?
        .clone();
    if headers.len() < 3 || &headers[0] != "identity_id" || &headers[1] != "image_id" {
        return Err(Error::InvalidData(format!(
            "{}: expected header identity_id,image_id,v0.., got {:?}",
            path.display(),
            headers.iter().take(3).collect::<Vec<_>>()
        )));
    }
    let dim = headers.len() - 2;
    for (c, name) in headers.iter().skip(2).enumerate() {
        let expected = format!("v{c}");
        if name != expected {
            return Err(Error::InvalidData(format!(
                "{}: component column {} is named {name:?}, expected {expected:?}",
                path.display(),
                c + 2
            )));
        }
    }

    // Role is not part of the CSV; tag as external (caller may re-wrap).
    let mut set = EmbeddingSet::new(dim, Role::External)?;
    for (row_index, record) in reader.records().enumerate() {
        let row = row_index + 2; // 1-based, counting the header line
        let record = record.map_err(|e| Error::csv(format!("{} row {row}", path.display()), e))?;
        if record.len() != headers.len() {
            return Err(Error::InvalidData(format!(
                "{} row {row}: {} fields, expected {}",
                path.display(),
                record.len(),
                headers.len()
            )));
        }
        let mut vector = Vec::with_capacity(dim);
        for c in 0..dim {
            let raw = &record[c + 2];
            let value: f32 = raw.parse().map_err(|_| {
                Error::InvalidData(format!(
                    "{} row {row}: component v{c} is not a number: {raw:?}",
                    path.display()
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::InvalidData(format!(
                    "{} row {row}: non-finite component v{c} = {raw}",
                    path.display()
                )));
            }
            vector.push(value);
        }
        set.push(EmbeddingEntry {
            identity_id: record[0].to_string(),
            image_id: record[1].to_string(),
            vector,
        })
        .map_err(|e| Error::InvalidData(format!("{} row {row}: {e}", path.display())))?;
    }
    Ok(set)
}

fn save_csv(set: &EmbeddingSet, path: &Path) -> Result<()> {
    let mut writer =
        csv::Writer::from_path(path).map_err(|e| Error::csv(path.display().to_string(), e))?;
    let mut header = Vec::with_capacity(set.dim() + 2);
    header.push("identity_id".to_string());
    header.push("image_id".to_string());
    for c in 0..set.dim() {
        header.push(format!("v{c}"));
    }
    writer
        .write_record(&header)
        .map_err(|e| Error::csv(path.display().to_string(), e))?;
    let mut row = Vec::with_capacity(set.dim() + 2);
    for entry in set.entries() {
        row.clear();
        row.push(entry.identity_id.clone());
        row.push(entry.image_id.clone());
        for &x in &entry.vector {
            // `{}` on f32 prints the shortest string that parses back to the
            // same bits, so the CSV round-trip is exact.
            row.push(format!("{x}"));
        }
        writer
            .write_record(&row)
            .map_err(|e| Error::csv(path.display().to_string(), e))?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(path, e))
}
