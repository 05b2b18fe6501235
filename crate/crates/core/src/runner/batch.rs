//! Running scenario sets and comparing their ranges.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{create_dir, write_json};

use super::run::{run_scenario, RunSummary};
use super::scenario::{Scenario, SCHEMA_VERSION};

/// Run every scenario, each into `out/<name>` when `out` is given, and write
/// `out/index.json`. The first failure aborts the set.
pub fn run_set(scenarios: &[Scenario], out: Option<&Path>, threads: usize) -> Result<Vec<RunSummary>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(format!("worker pool: {e}")))?;
    let summaries: Vec<RunSummary> = pool.install(|| {
        scenarios
            .par_iter()
            .map(|s| run_scenario(s, out.map(|d| d.join(&s.name)).as_deref()).map(|o| o.summary))
            .collect::<Result<_>>()
    })?;
    if let Some(dir) = out {
        create_dir(dir)?;
        write_json(&dir.join("index.json"), &index(&summaries))?;
        if let Some(c) = Fig3Comparison::from_summaries(&summaries) {
            write_json(&dir.join("comparison.json"), &c)?;
        }
    }
    Ok(summaries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub name: String,
    pub ld_m: Option<f64>,
    pub z_reached: f64,
    pub initial_width: f64,
    pub main_lobe_current: f64,
    pub lobe_count: usize,
}

fn index(summaries: &[RunSummary]) -> serde_json::Value {
    let runs: Vec<IndexEntry> = summaries
        .iter()
        .map(|s| IndexEntry {
            name: s.name.clone(),
            ld_m: s.ld_m,
            z_reached: s.z_reached,
            initial_width: s.initial_width,
            main_lobe_current: s.main_lobe_current,
            lobe_count: s.lobe_count,
        })
        .collect();
    serde_json::json!({ "schema_version": SCHEMA_VERSION, "runs": runs })
}

/// Ranges of the comparison set in the expected order
/// (Gaussian multi, Gaussian single, Bessel multi, shape-preserving, Bessel
/// single) with the checks made on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig3Comparison {
    pub schema_version: u32,
    pub names: Vec<String>,
    /// m; `None` where the range was not reached.
    pub ld_m: Vec<Option<f64>>,
    pub ordering_holds: bool,
    /// Shape-preserving over multi-electron Bessel range.
    pub headline_ratio: Option<f64>,
    /// Relative range change of the noisy run, when present.
    pub noise_change: Option<f64>,
}

impl Fig3Comparison {
    const ORDER: [&'static str; 5] = [
        "fig3c-gaussian-multi",
        "fig3a-gaussian-single",
        "fig3d-bessel-multi",
        "fig3e-shape-preserving",
        "fig3b-bessel-single",
    ];

    /// `None` unless all five noiseless runs are present.
    pub fn from_summaries(summaries: &[RunSummary]) -> Option<Self> {
        let find = |name: &str| summaries.iter().find(|s| s.name == name);
        let runs: Vec<&RunSummary> = Self::ORDER.iter().map(|n| find(n)).collect::<Option<_>>()?;
        let ld: Vec<Option<f64>> = runs.iter().map(|s| s.ld_m).collect();
        // an unreached range ranks above every reached one
        let key = |v: Option<f64>| v.unwrap_or(f64::INFINITY);
        let ordering_holds = ld.windows(2).all(|w| key(w[0]) < key(w[1])) && ld[..4].iter().all(Option::is_some);
        let headline_ratio = match (ld[3], ld[2]) {
            (Some(sp), Some(bm)) => Some(sp / bm),
            _ => None,
        };
        let noise_change = find("fig3f-shape-preserving-noise").and_then(|n| Some(n.ld_m? / ld[3]? - 1.0));
        Some(Self {
            schema_version: SCHEMA_VERSION,
            names: Self::ORDER.iter().map(|s| s.to_string()).collect(),
            ld_m: ld,
            ordering_holds,
            headline_ratio,
            noise_change,
        })
    }
}
