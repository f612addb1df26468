//! Output files: CSV series and raw snapshots, written atomically
//! (temp file + rename) so no partially written primary output survives a
//! crash.

use std::io::Write;
use std::path::Path;

use euler2d::{GridConstraint, GridField};
use serde::Serialize;

use crate::Failure;

/// 17 significant digits: round-trip exact for f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub enum Cell {
    Int(i64),
    Uint(u64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> Result<String, Failure> {
        match self {
            Cell::Int(i) => Ok(i.to_string()),
            Cell::Uint(u) => Ok(u.to_string()),
            Cell::Float(v) => {
                if !v.is_finite() {
                    return Err(Failure::Io(format!("refusing to serialize non-finite value {v}")));
                }
                Ok(fmt_f64(*v))
            }
            Cell::Text(s) => Ok(s.clone()),
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| Failure::Io(format!("cannot create temp file in {}: {e}", dir.display())))?;
    tmp.write_all(bytes)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| Failure::Io(format!("cannot rename into {}: {e}", path.display())))?;
    Ok(())
}

/// CSV with a header row and fixed column order; floats carry 17 significant
/// digits. Non-finite numbers are refused.
pub fn write_timeseries(
    path: &Path,
    header: &[&str],
    rows: &[Vec<Cell>],
) -> Result<(), Failure> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        if row.len() != header.len() {
            return Err(Failure::Io(format!(
                "row width {} does not match header width {}",
                row.len(),
                header.len()
            )));
        }
        let rendered: Result<Vec<String>, Failure> = row.iter().map(Cell::render).collect();
        text.push_str(&rendered?.join(","));
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

#[derive(Serialize)]
pub struct SnapshotMeta<'a> {
    pub n: usize,
    pub t: f64,
    pub step: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub constraint: &'a GridConstraintMeta,
}

/// Constraint description for the sidecar, mirroring the config schema.
#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridConstraintMeta {
    None,
    Box { psi_max: f64 },
    Pinning { rows: Vec<usize>, cols: Vec<usize> },
}

impl From<&GridConstraint> for GridConstraintMeta {
    fn from(c: &GridConstraint) -> Self {
        match c {
            GridConstraint::None => Self::None,
            GridConstraint::Box { psi_max } => Self::Box { psi_max: *psi_max },
            GridConstraint::Pinning { rows, cols } => {
                Self::Pinning { rows: rows.clone(), cols: cols.clone() }
            }
        }
    }
}

/// Raw little-endian f64 array (row-major) plus a JSON sidecar at
/// `<path>.json`.
pub fn write_snapshot(field: &GridField, meta: &SnapshotMeta, path: &Path) -> Result<(), Failure> {
    if !field.is_finite() {
        return Err(Failure::Io("refusing to serialize non-finite snapshot".into()));
    }
    let mut bytes = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path, &bytes)?;
    let sidecar = serde_json::to_vec_pretty(meta)
        .map_err(|e| Failure::Io(format!("cannot serialize snapshot metadata: {e}")))?;
    write_atomic(&path.with_extension("json"), &sidecar)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read_snapshot(path: &Path) -> Result<Vec<f64>, Failure> {
        let bytes = std::fs::read(path)
            .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    #[test]
    fn csv_has_header_plus_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.csv");
        let rows = vec![
            vec![Cell::Float(0.0), Cell::Float(1.5)],
            vec![Cell::Float(0.1), Cell::Float(1.25)],
            vec![Cell::Float(0.2), Cell::Float(1.0)],
        ];
        write_timeseries(&path, &["t", "energy"], &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("t,energy\n"));
    }

    #[test]
    fn floats_roundtrip_exactly() {
        let v = std::f64::consts::PI * 1e-7;
        let parsed: f64 = fmt_f64(v).parse().unwrap();
        assert_eq!(parsed.to_bits(), v.to_bits());
    }

    #[test]
    fn non_finite_values_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let rows = vec![vec![Cell::Float(f64::NAN)]];
        let err = write_timeseries(&path, &["x"], &rows).unwrap_err();
        assert!(matches!(err, Failure::Io(_)));
        assert!(!path.exists(), "no partial file may remain");
    }

    #[test]
    fn snapshot_roundtrips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap_000001.f64");
        let field = GridField::from_fn(8, |x1, x2| (x1 * 13.7).sin() + x2);
        let meta = SnapshotMeta {
            n: 8,
            t: 0.5,
            step: 1,
            seed: 42,
            epsilon: 0.25,
            constraint: &GridConstraintMeta::None,
        };
        write_snapshot(&field, &meta, &path).unwrap();
        let back = read_snapshot(&path).unwrap();
        assert_eq!(back.len(), field.values().len());
        for (a, b) in back.iter().zip(field.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let sidecar = std::fs::read_to_string(path.with_extension("json")).unwrap();
        assert!(sidecar.contains("\"seed\": 42"));
    }
}
