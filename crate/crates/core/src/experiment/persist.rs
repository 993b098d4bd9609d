//! CSV tables and their JSON sidecars.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DecayFit, EstimateRow};
use crate::error::{Error, Result};

pub const TABLE_HEADER: [&str; 4] = ["separation", "mean", "stderr", "count"];

pub fn write_table_csv(path: &Path, rows: &[EstimateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    // Rows serialize with the field names as header.
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(TABLE_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table_csv(path: &Path) -> Result<Vec<EstimateRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != TABLE_HEADER {
        return Err(Error::Config(format!(
            "{}: expected header {}, found {}",
            path.display(),
            TABLE_HEADER.join(","),
            header.join(",")
        )));
    }
    let rows: Vec<EstimateRow> = r.deserialize().collect::<std::result::Result<_, _>>()?;
    Ok(rows)
}

/// Metadata written next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub version: String,
    pub subcommand: String,
    /// Canonical configuration with every field explicit.
    pub config_text: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub realizations: u64,
    pub resamples: u64,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<DecayFit>,
}

impl Sidecar {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = vec![
            EstimateRow {
                separation: 0,
                mean: 1.0,
                stderr: 0.0,
                count: 3,
            },
            EstimateRow {
                separation: 2,
                mean: 1.25e-30,
                stderr: 3.5e-31,
                count: 6,
            },
        ];
        write_table_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "separation,mean,stderr,count");
        assert_eq!(read_table_csv(&path).unwrap(), rows);
    }

    #[test]
    fn wrong_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "r,mean,err,n\n0,1,0,1\n").unwrap();
        assert!(read_table_csv(&path).is_err());
    }
}
