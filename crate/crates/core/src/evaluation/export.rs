//! Embedding export for external projection tools (t-SNE, UMAP, …).
//!
//! One CSV holds any number of labeled sets:
//! `dataset_label,identity_id,v0..v{dim-1}`. The label column lets the
//! projection tool color datasets; everything else is the raw vectors.

use std::path::Path;

use crate::embeddings::EmbeddingSet;
use crate::error::{Error, Result};

/// Write labeled embedding sets into a single projection CSV.
pub fn export_for_projection(sets: &[(&str, &EmbeddingSet)], path: &Path) -> Result<()> {
    if sets.is_empty() {
        return Err(Error::InvalidArgument(
            "projection export needs at least one set".into(),
        ));
    }
    let dim = sets[0].1.dim();
    for (label, set) in sets {
        if set.dim() != dim {
            return Err(Error::InvalidArgument(format!(
                "projection export dim mismatch: set {label:?} has dim {}, expected {dim}",
                set.dim()
            )));
        }
    }

    let mut writer =
        csv::Writer::from_path(path).map_err(|e| Error::csv(path.display().to_string(), e))?;
    let mut header = Vec::with_capacity(dim + 2);
    header.push("dataset_label".to_string());
    header.push("identity_id".to_string());
    for c in 0..dim {
        header.push(format!("v{c}"));
    }
    writer
        .write_record(&header)
        .map_err(|e| Error::csv(path.display().to_string(), e))?;

    let mut row = Vec::with_capacity(dim + 2);
    for (label, set) in sets {
        for entry in set.entries() {
            row.clear();
            row.push(label.to_string());
            row.push(entry.identity_id.clone());
            for &x in &entry.vector {
                row.push(format!("{x}"));
            }
            writer
                .write_record(&row)
                .map_err(|e| Error::csv(path.display().to_string(), e))?;
        }
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Read a projection CSV back as (label, identity_id, vector) rows.
pub fn load_projection_csv(path: &Path) -> Result<Vec<(String, String, Vec<f32>)>> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| Error::csv(path.display().to_string(), e))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::csv(path.display().to_string(), e))?
        .clone();
    if headers.len() < 3 || &headers[0] != "dataset_label" || &headers[1] != "identity_id" {
        return Err(Error::InvalidData(format!(
            "{}: expected header dataset_label,identity_id,v0..",
            path.display()
        )));
    }
    let dim = headers.len() - 2;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::csv(format!("{} row {row}", path.display()), e))?;
        let mut vector = Vec::with_capacity(dim);
        for c in 0..dim {
            let value: f32 = record[c + 2].parse().map_err(|_| {
                Error::InvalidData(format!(
                    "{} row {row}: component v{c} is not a number",
                    path.display()
                ))
            })?;
            vector.push(value);
        }
        rows.push((record[0].to_string(), record[1].to_string(), vector));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::{EmbeddingEntry, Role};

    fn set(n: usize, offset: f32) -> EmbeddingSet {
        let entries = (0..n).map(|i| EmbeddingEntry {
            identity_id: format!("{i:06}"),
            image_id: format!("{i:06}_doc"),
            vector: vec![0.6 + offset, 0.8 - offset, 0.01 * i as f32],
        });
        EmbeddingSet::from_entries(3, Role::Document, entries).unwrap()
    }

    #[test]
    fn two_sets_export_and_round_trip() {
        let before = set(2, 0.0);
        let after = set(2, 0.1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("projection.csv");
        export_for_projection(&[("before", &before), ("after", &after)], &path).unwrap();

        let rows = load_projection_csv(&path).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].0, "before");
        assert_eq!(rows[3].0, "after");
        // Vectors reload exactly (shortest-round-trip float formatting).
        assert_eq!(rows[0].2, before.entries()[0].vector);
        assert_eq!(rows[3].2, after.entries()[1].vector);
    }

    #[test]
    fn labels_survive_verbatim_even_with_commas() {
        let s = set(1, 0.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("projection.csv");
        export_for_projection(&[("retained, v2", &s)], &path).unwrap();
        let rows = load_projection_csv(&path).unwrap();
        assert_eq!(rows[0].0, "retained, v2");
    }

    #[test]
    fn dim_mismatch_is_rejected() {
        let a = set(1, 0.0);
        let entries = [EmbeddingEntry {
            identity_id: "x".into(),
            image_id: "x_doc".into(),
            vector: vec![1.0, 0.0],
        }];
        let b = EmbeddingSet::from_entries(2, Role::Document, entries).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("projection.csv");
        assert!(export_for_projection(&[("a", &a), ("b", &b)], &path).is_err());
        assert!(export_for_projection(&[], &path).is_err());
    }
}
