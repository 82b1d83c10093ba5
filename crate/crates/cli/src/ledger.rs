//! Append-only record of every likelihood evaluation, so the picture of the
//! likelihood surface accumulates across runs.

use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use pompkit_core::{ParamVector, Result};

use crate::csvio::fmt_f64;

#[derive(Debug, Clone)]
pub struct LedgerRecord {
    /// ISO-8601 UTC; the one non-deterministic output field.
    pub timestamp: String,
    pub model: String,
    pub workflow: String,
    pub seed: u64,
    pub particles: usize,
    pub replicates: usize,
    pub mean_loglik: f64,
    pub se: f64,
    pub params: ParamVector,
}

impl LedgerRecord {
    pub fn now(
        model: &str,
        workflow: &str,
        seed: u64,
        particles: usize,
        replicates: usize,
        mean_loglik: f64,
        se: f64,
        params: ParamVector,
    ) -> Self {
        Self {
            timestamp: chrono::Utc::now().to_rfc3339(),
            model: model.to_string(),
            workflow: workflow.to_string(),
            seed,
            particles,
            replicates,
            mean_loglik,
            se,
            params,
        }
    }
}

static LEDGER_LOCK: Mutex<()> = Mutex::new(());

/// Appends one record; creates the file with a header first. The whole row
/// is written under a lock with a single write call, so rows from parallel
/// workers never interleave.
pub fn ledger_append(record: &LedgerRecord, path: &Path) -> Result<()> {
    let names: Vec<String> = record
        .params
        .space()
        .defs()
        .iter()
        .map(|d| format!("param_{}", d.name))
        .collect();
    let header = format!(
        "timestamp,model,workflow,seed,particles,replicates,mean_loglik,se,{}\n",
        names.join(",")
    );
    let mut row = format!(
        "{},{},{},{},{},{},{},{}",
        record.timestamp,
        record.model,
        record.workflow,
        record.seed,
        record.particles,
        record.replicates,
        fmt_f64(record.mean_loglik),
        fmt_f64(record.se),
    );
    for v in record.params.values() {
        row.push(',');
        row.push_str(&fmt_f64(*v));
    }
    row.push('\n');

    let _guard = LEDGER_LOCK.lock().expect("ledger lock");
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let fresh = !path.exists();
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    let mut buf = String::new();
    if fresh {
        buf.push_str(&header);
    }
    buf.push_str(&row);
    file.write_all(buf.as_bytes())?;
    file.flush()?;
    Ok(())
}
