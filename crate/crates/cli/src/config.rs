use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use bhlab_core::algorithms::{AdvisedTables, AlgorithmKind};
use bhlab_core::{Error, ProblemSpec};
use serde::Deserialize;

/// Optional `"experiment"` stanza of a config file. Every field can be
/// overridden by the matching command-line flag.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub alg: Option<String>,
    pub method: Option<String>,
    pub eps: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub input: Option<String>,
    pub v_max: Option<usize>,
    pub branch_limit: Option<u64>,
    pub table: Option<String>,
    pub states: Option<usize>,
    pub b: Option<usize>,
}

pub struct Config {
    pub spec: ProblemSpec,
    pub experiment: Experiment,
}

pub fn load(path: &Path) -> Result<Config> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Config> {
    let mut value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(format!("config is not JSON: {e}")))?;
    let experiment = match value.as_object_mut().and_then(|o| o.remove("experiment")) {
        Some(stanza) => serde_json::from_value(stanza)
            .map_err(|e| Error::InvalidSpec(format!("bad experiment stanza: {e}")))?,
        None => Experiment::default(),
    };
    let spec = ProblemSpec::from_json(&value.to_string())?;
    Ok(Config { spec, experiment })
}

/// Seed precedence: flag, then config file, then `BHLAB_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag.or(file) {
        return Ok(seed);
    }
    match std::env::var("BHLAB_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("BHLAB_SEED={s:?} is not an unsigned integer")).into()),
        Err(_) => Ok(0),
    }
}

pub fn algorithm(id: &str, eps: Option<f64>, table: Option<&str>) -> Result<AlgorithmKind> {
    Ok(match id {
        "qalg-a" => AlgorithmKind::QalgA,
        "qalg-b" => AlgorithmKind::QalgB,
        "ibh" => AlgorithmKind::Ibh,
        "ralg-a" => {
            let epsilon = eps.ok_or_else(|| Error::InvalidArgument("ralg-a needs --eps".into()))?;
            AlgorithmKind::RalgA { epsilon }
        }
        "table" => {
            let path = table.ok_or_else(|| Error::InvalidArgument("table needs --table FILE".into()))?;
            let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            AlgorithmKind::Table(AdvisedTables::from_json(&text)?)
        }
        other => bail!(Error::InvalidArgument(format!(
            "unknown algorithm {other:?} (expected qalg-a, qalg-b, ralg-a, ibh or table)"
        ))),
    })
}
