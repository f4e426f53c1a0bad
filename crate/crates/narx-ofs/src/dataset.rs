//! Paired input/output records with an estimation/validation split.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SeedRecord;
use crate::term::ModelSpec;

/// An input/output dataset. The first `split_index` samples are the
/// estimation partition; the rest are held out for validation.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    u: Vec<f64>,
    y: Vec<f64>,
    split_index: usize,
    seed: Option<SeedRecord>,
}

impl Dataset {
    pub fn new(u: Vec<f64>, y: Vec<f64>, split_index: usize) -> Result<Self> {
        if u.len() != y.len() {
            return Err(Error::InvalidSpec(format!(
                "input length {} != output length {}",
                u.len(),
                y.len()
            )));
        }
        if split_index == 0 || split_index >= u.len() {
            return Err(Error::InvalidSpec(format!(
                "split index {split_index} outside (0, {})",
                u.len()
            )));
        }
        Ok(Dataset { u, y, split_index, seed: None })
    }

    pub fn with_seed(mut self, seed: SeedRecord) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// First validation sample index (0-based).
    pub fn split_index(&self) -> usize {
        self.split_index
    }

    /// Number of validation samples.
    pub fn validation_len(&self) -> usize {
        self.len() - self.split_index
    }

    pub fn seed(&self) -> Option<&SeedRecord> {
        self.seed.as_ref()
    }
}

/// Sidecar metadata persisted next to a dataset CSV.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub system: Option<String>,
    pub seed: Option<SeedRecord>,
    pub split_index: usize,
    pub n: usize,
    pub model_spec: Option<ModelSpec>,
}

/// Writes `<path>` as CSV (`k,u,y`, 1-based k, 17 significant digits so
/// values round-trip bit-exactly) and `<path with .json>` as metadata.
pub fn write_dataset(dataset: &Dataset, path: &Path, meta: &DatasetMeta) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["k", "u", "y"])?;
    for k in 0..dataset.len() {
        writer.write_record([
            (k + 1).to_string(),
            format!("{:.16e}", dataset.u[k]),
            format!("{:.16e}", dataset.y[k]),
        ])?;
    }
    writer.flush()?;
    let meta_path = path.with_extension("json");
    let file = std::fs::File::create(meta_path)?;
    serde_json::to_writer_pretty(file, meta)?;
    Ok(())
}

/// Reads a dataset CSV and its sidecar metadata. The sidecar is required
/// for the split index; a missing sidecar is a format error.
pub fn read_dataset(path: &Path) -> Result<(Dataset, DatasetMeta)> {
    let meta_path = path.with_extension("json");
    let meta: DatasetMeta = serde_json::from_reader(std::fs::File::open(&meta_path).map_err(
        |e| Error::Format(format!("missing dataset sidecar {}: {e}", meta_path.display())),
    )?)?;

    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["k", "u", "y"] {
        return Err(Error::Format(format!(
            "unexpected dataset header {:?}, expected k,u,y",
            headers
        )));
    }
    let mut u = Vec::new();
    let mut y = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 3 {
            return Err(Error::Format(format!("dataset row with {} fields", record.len())));
        }
        u.push(parse_float(record.get(1).unwrap())?);
        y.push(parse_float(record.get(2).unwrap())?);
    }
    let mut dataset = Dataset::new(u, y, meta.split_index)?;
    if let Some(seed) = meta.seed.clone() {
        dataset = dataset.with_seed(seed);
    }
    Ok((dataset, meta))
}

fn parse_float(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Format(format!("bad float `{s}`: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_bounds_are_enforced() {
        assert!(Dataset::new(vec![0.0; 10], vec![0.0; 10], 0).is_err());
        assert!(Dataset::new(vec![0.0; 10], vec![0.0; 10], 10).is_err());
        assert!(Dataset::new(vec![0.0; 10], vec![0.0; 9], 5).is_err());
        let d = Dataset::new(vec![0.0; 10], vec![0.0; 10], 7).unwrap();
        assert_eq!(d.validation_len(), 3);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let u: Vec<f64> = (0..50).map(|i| (i as f64 * 0.377).sin() / 3.0).collect();
        let y: Vec<f64> = (0..50).map(|i| (i as f64 * 1.13).cos() * 1e-7).collect();
        let dataset = Dataset::new(u, y, 30).unwrap().with_seed(SeedRecord::new(9));
        let meta = DatasetMeta {
            system: Some("S1".into()),
            seed: dataset.seed().cloned(),
            split_index: 30,
            n: 50,
            model_spec: Some(ModelSpec::new(4, 4, 3).unwrap()),
        };
        write_dataset(&dataset, &path, &meta).unwrap();
        let (back, meta_back) = read_dataset(&path).unwrap();
        assert_eq!(back, dataset);
        assert_eq!(meta_back.system.as_deref(), Some("S1"));
    }
}
