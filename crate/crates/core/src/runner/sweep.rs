//! Width sweeps over beam families, run in a worker pool.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{create_dir, format_number, write_json};
use crate::params::bohr_to_meters;

use super::beam::maximal_width;
use super::run::run_scenario;
use super::scenario::{InitialKind, Scenario, SweepAxis, SCHEMA_VERSION};

/// Grid points across the launch width required of every sweep point.
pub const MIN_POINTS_PER_WIDTH: f64 = 2.5;
/// Relative range gap below which two families count as merged.
pub const MERGE_GAP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub family: InitialKind,
    /// Requested width (m); the maximal width for the flat solution.
    pub width: f64,
    pub initial_width: Option<f64>,
    pub ld_m: Option<f64>,
    pub ld_reached: bool,
    pub z_reached: Option<f64>,
    /// A
    pub main_lobe_current: Option<f64>,
    pub lobe_count: Option<usize>,
    /// 1/m
    pub kt: Option<f64>,
    pub grid_n: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub schema_version: u32,
    pub name: String,
    pub points: Vec<SweepPoint>,
    /// m; widest shape-preserving beam (the `k_T = 0` solution).
    pub maximal_width: f64,
    /// m; where the shape-preserving and Bessel ranges separate by
    /// [`MERGE_GAP`], when both families were swept and they do.
    pub critical_width: Option<f64>,
    pub scenario: Scenario,
}

impl SweepResult {
    /// Successful points of one family, ordered by width.
    pub fn family(&self, kind: InitialKind) -> Vec<&SweepPoint> {
        let mut v: Vec<&SweepPoint> = self.points.iter().filter(|p| p.family == kind && p.error.is_none()).collect();
        v.sort_by(|a, b| a.width.total_cmp(&b.width));
        v
    }
}

/// Smallest power-of-two grid, at least `base`, resolving `width` with
/// [`MIN_POINTS_PER_WIDTH`] samples.
pub fn grid_for_width(base: usize, box_factor: f64, aperture_m: f64, width_m: f64) -> usize {
    let side = box_factor * aperture_m;
    let need = (MIN_POINTS_PER_WIDTH * side / width_m).ceil() as usize;
    need.next_power_of_two().max(base)
}

/// Scenario of one sweep point.
pub fn point_scenario(base: &Scenario, family: InitialKind, width: Option<f64>) -> Scenario {
    let mut s = base.clone();
    s.sweep = None;
    s.initial.kind = family;
    s.initial.kt = None;
    s.initial.match_to = None;
    s.initial.width = width;
    let label = width.map_or("max".to_string(), |w| format!("{:.3}nm", w * 1e9));
    s.name = format!("{}-{}-{label}", base.name, family.label());
    let w = width.unwrap_or(s.beam.aperture_radius);
    s.grid.n = grid_for_width(base.grid.n, base.grid.box_factor, base.beam.aperture_radius, w);
    s
}

/// Run every (family, width) point, plus the `k_T = 0` point when the
/// shape-preserving family is swept. Failed points are kept with their error.
/// `threads = 0` uses rayon's default.
pub fn run_sweep(s: &Scenario, out: Option<&Path>, threads: usize) -> Result<SweepResult> {
    s.validate()?;
    let spec = s
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config(format!("scenario {} has no sweep section", s.name)))?;
    match spec.axis {
        SweepAxis::Width => {}
    }
    let mut jobs: Vec<Scenario> = Vec::new();
    for &family in &spec.families {
        for &w in &spec.values {
            jobs.push(point_scenario(s, family, Some(w)));
        }
        if family == InitialKind::ShapePreserving {
            jobs.push(point_scenario(s, InitialKind::ShapePreservingFlat, None));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(format!("worker pool: {e}")))?;
    let points: Vec<SweepPoint> = pool.install(|| jobs.par_iter().map(run_point).collect());

    let params = s.beam.params()?;
    let maximal = bohr_to_meters(maximal_width(params.derived()?.gamma, params.aperture_bohr())?);
    let mut result = SweepResult {
        schema_version: SCHEMA_VERSION,
        name: s.name.clone(),
        points,
        maximal_width: maximal,
        critical_width: None,
        scenario: s.clone(),
    };
    result.critical_width = critical_width(&result);
    if let Some(dir) = out {
        create_dir(dir)?;
        write_sweep_csv(&dir.join("sweep.csv"), &result)?;
        write_json(&dir.join("sweep_summary.json"), &result)?;
    }
    Ok(result)
}

fn run_point(s: &Scenario) -> SweepPoint {
    // the flat point belongs to the shape-preserving curve
    let family = match s.initial.kind {
        InitialKind::ShapePreservingFlat => InitialKind::ShapePreserving,
        k => k,
    };
    let mut point = SweepPoint {
        family,
        width: s.initial.width.unwrap_or(f64::NAN),
        initial_width: None,
        ld_m: None,
        ld_reached: false,
        z_reached: None,
        main_lobe_current: None,
        lobe_count: None,
        kt: None,
        grid_n: s.grid.n,
        error: None,
    };
    match run_scenario(s, None) {
        Ok(o) => {
            let m = o.summary;
            if s.initial.width.is_none() {
                point.width = m.target_width;
            }
            point.initial_width = Some(m.initial_width);
            point.ld_m = m.ld_m;
            point.ld_reached = m.ld_reached;
            point.z_reached = Some(m.z_reached);
            point.main_lobe_current = Some(m.main_lobe_current);
            point.lobe_count = Some(m.lobe_count);
            point.kt = Some(m.kt);
        }
        Err(e) => point.error = Some(e.to_string()),
    }
    point
}

/// First width, scanning upward, where `(L_sp − L_b)/L_b` rises through
/// [`MERGE_GAP`], interpolated linearly. `None` unless the gap starts below
/// the threshold and later exceeds it.
pub fn critical_width(r: &SweepResult) -> Option<f64> {
    let sp = r.family(InitialKind::ShapePreserving);
    let b = r.family(InitialKind::Bessel);
    let gaps: Vec<(f64, f64)> = sp
        .iter()
        .filter_map(|p| {
            let q = b.iter().find(|q| (q.width - p.width).abs() <= 1e-6 * p.width)?;
            let (lp, lq) = (p.ld_m?, q.ld_m?);
            Some((p.width, (lp - lq) / lq))
        })
        .collect();
    if gaps.first()?.1 >= MERGE_GAP {
        return None;
    }
    gaps.windows(2).find(|w| w[1].1 >= MERGE_GAP).map(|w| {
        let ((w0, g0), (w1, g1)) = (w[0], w[1]);
        w0 + (MERGE_GAP - g0) * (w1 - w0) / (g1 - g0)
    })
}

fn write_sweep_csv(path: &Path, r: &SweepResult) -> Result<()> {
    let opt = |v: Option<f64>| v.map_or("nan".to_string(), format_number);
    let mut text = String::from(
        "family,width[m],initial_width[m],L_d[m],L_d_reached,z_reached[m],main_lobe_current[A],lobe_count,kT[1/m],grid_n,error\n",
    );
    let mut points: Vec<&SweepPoint> = r.points.iter().collect();
    points.sort_by(|a, b| a.family.cmp(&b.family).then(a.width.total_cmp(&b.width)));
    for p in points {
        let err = p.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        writeln!(
            text,
            "{},{},{},{},{},{},{},{},{},{},{}",
            p.family.label(),
            format_number(p.width),
            opt(p.initial_width),
            opt(p.ld_m),
            p.ld_reached,
            opt(p.z_reached),
            opt(p.main_lobe_current),
            p.lobe_count.map_or("nan".to_string(), |c| c.to_string()),
            opt(p.kt),
            p.grid_n,
            err
        )
        .expect("write to String");
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
