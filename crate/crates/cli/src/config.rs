use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

/// Everything a run depends on. Written verbatim into each JSON output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub experiment: Option<String>,
    pub k_min: u32,
    pub k_max: u32,
    pub grid: Option<usize>,
    pub cluster_width: f64,
    pub out: PathBuf,
    pub seed: u64,
    pub backend: String,
    pub workers: usize,
    pub potential: Option<String>,
    pub coefficients: Option<Vec<f64>>,
    pub range: String,
}

/// Values from the config file or the command line; later layers override
/// earlier ones key by key.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub experiment: Option<String>,
    pub k: Option<(u32, u32)>,
    pub grid: Option<usize>,
    pub cluster_width: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub backend: Option<String>,
    pub workers: Option<usize>,
    pub potential: Option<String>,
    pub coefficients: Option<Vec<f64>>,
    pub range: Option<String>,
}

impl Overrides {
    pub fn then(self, later: Overrides) -> Overrides {
        Overrides {
            experiment: later.experiment.or(self.experiment),
            k: later.k.or(self.k),
            grid: later.grid.or(self.grid),
            cluster_width: later.cluster_width.or(self.cluster_width),
            out: later.out.or(self.out),
            seed: later.seed.or(self.seed),
            backend: later.backend.or(self.backend),
            workers: later.workers.or(self.workers),
            potential: later.potential.or(self.potential),
            coefficients: later.coefficients.or(self.coefficients),
            range: later.range.or(self.range),
        }
    }
}

/// `MIN..MAX` or a single `K`.
pub fn parse_k_range(s: &str) -> Result<(u32, u32), String> {
    let parse = |t: &str| t.trim().parse::<u32>().map_err(|_| format!("invalid k value `{t}`"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let k = parse(s)?;
            (k, k)
        }
    };
    if lo > hi {
        return Err(format!("empty k range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

pub fn parse_coefficients(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| format!("invalid coefficient `{t}`"))).collect()
}

/// Flat `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Overrides> {
    let mut o = Overrides::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected `key = value`", n + 1))?;
        let (key, value) = (key.trim().replace('-', "_"), value.trim().to_string());
        let bad = |e: String| anyhow!("line {}: {e}", n + 1);
        match key.as_str() {
            "experiment" => o.experiment = Some(value),
            "k" => o.k = Some(parse_k_range(&value).map_err(bad)?),
            "grid" => o.grid = Some(value.parse().map_err(|_| bad(format!("invalid grid `{value}`")))?),
            "cluster_width" => o.cluster_width = Some(value.parse().map_err(|_| bad(format!("invalid cluster width `{value}`")))?),
            "out" => o.out = Some(PathBuf::from(value)),
            "seed" => o.seed = Some(value.parse().map_err(|_| bad(format!("invalid seed `{value}`")))?),
            "backend" => o.backend = Some(value),
            "workers" => o.workers = Some(value.parse().map_err(|_| bad(format!("invalid worker count `{value}`")))?),
            "potential" => o.potential = Some(value),
            "coefficients" => o.coefficients = Some(parse_coefficients(&value).map_err(bad)?),
            "range" => o.range = Some(value),
            other => bail!("line {}: unknown key `{other}`", n + 1),
        }
    }
    Ok(o)
}

pub fn read_config_file(path: &Path) -> Result<Overrides> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config_text(&text)
}

pub fn default_workers() -> usize {
    if std::env::var("QLAB_DETERMINISTIC").is_ok_and(|v| v == "1") {
        return 1;
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl RunConfig {
    pub fn resolve(command: &str, default_k: (u32, u32), o: Overrides) -> RunConfig {
        let (k_min, k_max) = o.k.unwrap_or(default_k);
        let mut workers = o.workers.unwrap_or_else(default_workers).max(1);
        if std::env::var("QLAB_DETERMINISTIC").is_ok_and(|v| v == "1") {
            workers = 1;
        }
        RunConfig {
            command: command.to_string(),
            experiment: o.experiment,
            k_min,
            k_max,
            grid: o.grid,
            cluster_width: o.cluster_width.unwrap_or(1.0),
            out: o.out.unwrap_or_else(|| PathBuf::from("qlab-out")),
            seed: o.seed.unwrap_or(0),
            backend: o.backend.unwrap_or_else(|| "spectral".to_string()),
            workers,
            potential: o.potential,
            coefficients: o.coefficients,
            range: o.range.unwrap_or_else(|| "full".to_string()),
        }
    }

    pub fn h_values(&self) -> Vec<f64> {
        qlab_core::sweep::dyadic_h_values(self.k_min, self.k_max)
    }
}
