//! On-disk cache of solved metric data, one JSON file per spec hash.
//!
//! Floats are stored as shortest round-trip decimal strings, so a cache hit
//! rebuilds bit-identical metrics.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hypboundary::metric::{GreenSolve, GrowthData};
use hypboundary::{Alphabet, Metric, MetricSpec, Result};

pub const CACHE_ENV: &str = "HYPBOUNDARY_CACHE_DIR";

#[derive(Serialize, Deserialize)]
struct Entry {
    spec: MetricSpec,
    lengths: Vec<String>,
    theta: String,
    omega: String,
    eps: String,
    dimension: String,
    perron_right: Vec<String>,
    perron_left: Vec<String>,
    spectral_radius: String,
    green: Option<GreenEntry>,
}

#[derive(Serialize, Deserialize)]
struct GreenEntry {
    first_passage: Vec<String>,
    convergence: Vec<String>,
    iterations: usize,
}

fn enc(x: f64) -> String {
    format!("{x:?}")
}

fn encv(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| enc(*x)).collect()
}

fn dec(s: &str) -> Option<f64> {
    s.parse().ok()
}

fn decv(v: &[String]) -> Option<Vec<f64>> {
    v.iter().map(|s| dec(s)).collect()
}

impl Entry {
    fn from_metric(m: &Metric) -> Self {
        let g = m.growth();
        Entry {
            spec: m.spec().clone(),
            lengths: encv(m.letter_lengths()),
            theta: enc(g.theta),
            omega: enc(g.omega),
            eps: enc(g.eps),
            dimension: enc(g.dimension),
            perron_right: encv(&g.perron_right),
            perron_left: encv(&g.perron_left),
            spectral_radius: enc(g.spectral_radius),
            green: m.green().map(|gs| GreenEntry {
                first_passage: encv(&gs.first_passage),
                convergence: encv(&gs.convergence),
                iterations: gs.iterations,
            }),
        }
    }

    fn into_metric(self) -> Option<Metric> {
        let alphabet = Alphabet::new(self.spec.rank).ok()?;
        let growth = GrowthData {
            theta: dec(&self.theta)?,
            omega: dec(&self.omega)?,
            eps: dec(&self.eps)?,
            dimension: dec(&self.dimension)?,
            perron_right: decv(&self.perron_right)?,
            perron_left: decv(&self.perron_left)?,
            spectral_radius: dec(&self.spectral_radius)?,
        };
        let green = match self.green {
            Some(g) => Some(GreenSolve {
                first_passage: decv(&g.first_passage)?,
                convergence: decv(&g.convergence)?,
                iterations: g.iterations,
            }),
            None => None,
        };
        let lengths = decv(&self.lengths)?;
        if lengths.len() != alphabet.size() {
            return None;
        }
        Some(Metric::from_parts(self.spec, alphabet, lengths, growth, green))
    }
}

/// Where cache files live: `$HYPBOUNDARY_CACHE_DIR`, else `<out>/cache`.
pub fn cache_dir(out: &Path) -> PathBuf {
    std::env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| out.join("cache"))
}

pub fn cache_path(dir: &Path, spec: &MetricSpec) -> PathBuf {
    dir.join(format!("{}.json", spec.canonical_hash()))
}

/// Loads the metric for `spec` from the cache, solving and storing it on a
/// miss. Unreadable or mismatched entries are recomputed with a warning.
pub fn load_metric(dir: &Path, spec: &MetricSpec) -> Result<Metric> {
    let path = cache_path(dir, spec);
    if let Ok(text) = fs::read_to_string(&path) {
        match serde_json::from_str::<Entry>(&text) {
            Ok(e) if e.spec == *spec => {
                if let Some(m) = e.into_metric() {
                    return Ok(m);
                }
                eprintln!("warning: cache entry {} is malformed, recomputing", path.display());
            }
            _ => eprintln!("warning: cache entry {} is corrupt, recomputing", path.display()),
        }
    }
    let metric = Metric::new(spec.clone())?;
    let stored = fs::create_dir_all(dir).and_then(|_| {
        let text = serde_json::to_string_pretty(&Entry::from_metric(&metric)).expect("cache entry serializes");
        fs::write(&path, text + "\n")
    });
    if let Err(e) = stored {
        eprintln!("warning: could not write cache entry {}: {e}", path.display());
    }
    Ok(metric)
}
