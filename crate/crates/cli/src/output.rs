use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use ttlcache_core::{policy_code_params, CachingPolicy, LoadBreakdown, Scenario, SolverStatus};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileCode {
    pub file: usize,
    /// Quantized fractions per slot as `n/d`.
    pub fractions: Vec<String>,
    pub k: u64,
    pub n: u64,
    pub per_slot_counts: Vec<u64>,
    pub packet_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverInfo {
    #[serde(flatten)]
    pub status: SolverStatus,
    pub objective: f64,
    pub nodes: usize,
}

/// Contents of `policy.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub tool_version: String,
    pub scenario_hash: String,
    /// Requested mode; `greedy` stores a stepwise policy.
    pub mode: String,
    pub policy: CachingPolicy,
    pub loads: LoadBreakdown,
    pub solver: SolverInfo,
    pub code_params: Vec<FileCode>,
}

pub fn code_table(policy: &CachingPolicy, scenario: &Scenario, sizes: &[f64]) -> Result<Vec<FileCode>> {
    let n_sbs = scenario.coverage.n_sbs as u64;
    let rows = policy_code_params(policy, n_sbs, sizes, scenario.solver.max_denominator)?;
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, (q, p))| FileCode {
            file: i + 1,
            fractions: q.iter().map(|r| r.to_string()).collect(),
            k: p.k,
            n: p.n,
            per_slot_counts: p.per_slot_counts,
            packet_size: p.packet_size,
        })
        .collect())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_policy(path: &Path) -> Result<PolicyFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// `#`-prefixed metadata lines followed by RFC 4180 records.
pub struct CsvOut {
    header: Vec<(String, String)>,
    writer: csv::Writer<Vec<u8>>,
}

impl CsvOut {
    pub fn new(scenario: &Scenario, seeds: &str, mode: &str) -> Self {
        let header = vec![
            ("tool".to_string(), format!("ttlcache {VERSION}")),
            ("scenario_hash".to_string(), scenario.hash()),
            ("seeds".to_string(), seeds.to_string()),
            ("mode".to_string(), mode.to_string()),
        ];
        Self {
            header,
            writer: csv::Writer::from_writer(Vec::new()),
        }
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.header.push((key.to_string(), value.into()));
    }

    pub fn record<I, T>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn write_to(self, path: &Path) -> Result<()> {
        let body = self.writer.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        let mut file = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
        for (k, v) in &self.header {
            writeln!(file, "# {k}: {v}")?;
        }
        file.write_all(&body)?;
        Ok(())
    }
}

pub fn num(x: f64) -> String {
    x.to_string()
}
