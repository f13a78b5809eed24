use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 7] = [
    "experiment",
    "N",
    "metric",
    "value",
    "ci_lo",
    "ci_hi",
    "seeds",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: ExperimentKind,
    #[serde(rename = "N")]
    pub n: usize,
    pub metric: String,
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    /// Hex SHA-256 of the compact JSON form of `config`.
    pub config_hash: String,
    pub code_version: String,
    pub base_seed: u64,
    /// Hex SHA-256 of the CSV bytes.
    pub rows_hash: String,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub base_seed: u64,
    rows: Vec<ResultRow>,
}

pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let bytes = serde_json::to_vec(cfg)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl ExperimentResult {
    /// Rows are put in `(N, metric)` order, whatever order they were produced in.
    pub fn new(
        config: ExperimentConfig,
        base_seed: u64,
        mut rows: Vec<ResultRow>,
    ) -> ExperimentResult {
        rows.sort_by(|a, b| a.n.cmp(&b.n).then_with(|| a.metric.cmp(&b.metric)));
        ExperimentResult {
            config,
            base_seed,
            rows,
        }
    }

    pub fn rows(&self) -> &[ResultRow] {
        &self.rows
    }

    pub fn find(&self, n: usize, metric: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.n == n && r.metric == metric)
    }

    /// Rows for `metric`, in increasing `N`.
    pub fn series(&self, metric: &str) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.metric == metric).collect()
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut out = csv::Writer::from_writer(Vec::new());
        out.write_record(CSV_HEADER)?;
        for r in &self.rows {
            out.write_record([
                r.experiment.as_str().to_string(),
                r.n.to_string(),
                r.metric.clone(),
                r.value.to_string(),
                r.ci_lo.to_string(),
                r.ci_hi.to_string(),
                r.seeds.to_string(),
            ])?;
        }
        out.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn provenance(&self) -> Result<Provenance> {
        Ok(Provenance {
            config_hash: config_hash(&self.config)?,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            base_seed: self.base_seed,
            rows_hash: hex::encode(Sha256::digest(self.to_csv_bytes()?)),
            config: self.config.clone(),
        })
    }

    pub fn sidecar_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.provenance()?)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `csv_path` and its JSON sidecar.
    pub fn write(&self, csv_path: &Path, sidecar_path: &Path) -> Result<()> {
        fs::write(csv_path, self.to_csv_bytes()?)?;
        fs::write(sidecar_path, self.sidecar_json()?)?;
        Ok(())
    }

    /// Reads a result back, rejecting it unless both recorded hashes match.
    pub fn load(csv_path: &Path, sidecar_path: &Path) -> Result<ExperimentResult> {
        let prov: Provenance = serde_json::from_slice(&fs::read(sidecar_path)?)?;
        if config_hash(&prov.config)? != prov.config_hash {
            return Err(Error::Config(
                "sidecar config hash does not match its config".into(),
            ));
        }
        let bytes = fs::read(csv_path)?;
        if hex::encode(Sha256::digest(&bytes)) != prov.rows_hash {
            return Err(Error::Config(
                "result rows do not match the sidecar hash".into(),
            ));
        }
        let rows = read_rows(&bytes[..])?;
        Ok(ExperimentResult::new(prov.config, prov.base_seed, rows))
    }
}

/// Parses result CSV; the header must be exactly [`CSV_HEADER`].
pub fn read_rows<R: std::io::Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Config(format!(
            "unexpected result columns {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}
