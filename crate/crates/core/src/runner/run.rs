//! Single-scenario propagation and its output bundle.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::field::{add_noise, winding_number, Field2D};
use crate::io::{create_dir, format_number, write_csv, write_json, write_pgm};
use crate::metrics::{azimuthal_average, main_lobe_current, nondiffraction_range, LobeTracker, PropagationTrace};
use crate::params::{bohr_to_meters, constants_table, z_to_zeta, zeta_to_z, BOHR_RADIUS};
use crate::propagator::{dz_for_dzeta, Absorber, Control, Propagator, PropagatorConfig, StepCheck};

use super::beam::build_launch;
use super::scenario::{InitialKind, Scenario, SCHEMA_VERSION};

/// Default step in ζ before the potential-phase check.
const DEFAULT_DZETA: f64 = 40.0;
/// Bound on the default step relative to `w0²`, for very narrow beams.
const DZETA_PER_WIDTH2: f64 = 0.1;
/// Largest potential phase per step accepted for automatic steps.
const AUTO_POTENTIAL_PHASE: f64 = 0.05;
/// Default range in ζ is this multiple of `R·w0`.
const RANGE_FACTOR: f64 = 8.0;
/// Radial density rows kept in the bundle.
const MAX_RADIAL_ROWS: usize = 400;
/// Radial profiles extend to this multiple of the aperture.
const RADIAL_EXTENT: f64 = 1.25;

/// Numbers describing one finished run. Lengths in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub name: String,
    pub kind: InitialKind,
    pub l: u32,
    /// `None` when the width never reached `√2·w0`.
    pub ld_m: Option<f64>,
    pub ld_reached: bool,
    pub ld_zeta: Option<f64>,
    pub z_reached: f64,
    pub steps: usize,
    pub initial_width: f64,
    pub target_width: f64,
    pub main_lobe_fraction: f64,
    /// A
    pub main_lobe_current: f64,
    pub lobe_count: usize,
    /// 1/m; zero for Gaussian beams.
    pub kt: f64,
    pub winding_launch: i64,
    /// At the record nearest `L_d/2`, or the last record.
    pub winding_mid: i64,
    pub gamma_beam: f64,
    pub gamma_propagation: f64,
    /// 1/m
    pub wavenumber: f64,
    /// electrons per meter
    pub line_density: f64,
    pub grid_n: usize,
    pub dx: f64,
    pub dz: f64,
    pub dzeta: f64,
    pub z_max: f64,
    pub noise_ratio: f64,
    pub noise_seed: u64,
    pub step_check: StepCheck,
    pub constants: Value,
    pub scenario: Scenario,
}

/// Result of [`run_scenario`]: the summary plus the full trace and the
/// launch and final fields.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub trace: PropagationTrace,
    pub launch: Field2D,
    pub last: Field2D,
}

/// Propagator settings and the launch field resolved from a scenario.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub launch: super::beam::Launch,
    /// Launch after noise, the state actually propagated.
    pub field: Field2D,
    pub config: PropagatorConfig,
    pub gamma_beam: f64,
    pub initial_width: f64,
    pub step_check: StepCheck,
}

/// Resolve grid, launch, noise and step for a scenario.
pub fn prepare(s: &Scenario) -> Result<Prepared> {
    s.validate()?;
    let params = s.beam.params()?;
    let derived = params.derived()?;
    let rho_max = params.aperture_bohr();
    let n = s.grid.n;
    let dx = s.grid.box_factor * rho_max / n as f64;

    let launch = build_launch(s, derived.gamma, n, dx)?;
    let field = add_noise(&launch.field, s.noise.ratio, s.noise.seed)?;
    let w0 = LobeTracker::default().measure(&field)?.width;

    let p = &s.propagation;
    let gamma = if p.nonlinear { derived.gamma * (1.0 + s.noise.ratio) } else { 0.0 };
    let k = derived.wavenumber;
    let mut dzeta = p.dzeta.unwrap_or(DEFAULT_DZETA.min(DZETA_PER_WIDTH2 * w0 * w0));
    let z_max = p.z_max.unwrap_or_else(|| zeta_to_z(RANGE_FACTOR * rho_max * w0, k));
    let mut config = PropagatorConfig {
        dz: dz_for_dzeta(dzeta, k),
        z_max,
        record_stride: p.record_stride,
        gamma,
        k,
        absorber: p.absorber.then(Absorber::default),
        stop_factor: p.stop_factor,
        potential_offset: 0.0,
    };
    config.validate()?;
    let mut check = Propagator::new(n, dx, &config)?.check_step(&field)?;
    if p.dzeta.is_none() && check.potential_phase > AUTO_POTENTIAL_PHASE {
        dzeta *= AUTO_POTENTIAL_PHASE / check.potential_phase;
        config.dz = dz_for_dzeta(dzeta, k);
        check = Propagator::new(n, dx, &config)?.check_step(&field)?;
    }
    Ok(Prepared { launch, field, config, gamma_beam: derived.gamma, initial_width: w0, step_check: check })
}

/// Run one scenario. When `out` is given the bundle is written there:
/// `trace.csv`, `radial_density.csv`, `radial_density.pgm`,
/// `density_start.pgm`, `density_end.pgm`, `field_end.c64` and `summary.json`.
pub fn run_scenario(s: &Scenario, out: Option<&Path>) -> Result<RunOutcome> {
    run_inner(s, out).map_err(|e| e.context(format!("scenario {}", s.name)))
}

fn run_inner(s: &Scenario, out: Option<&Path>) -> Result<RunOutcome> {
    let prep = prepare(s)?;
    let params = s.beam.params()?;
    let derived = params.derived()?;
    let rho_max = params.aperture_bohr();
    let n = s.grid.n;
    let dx = prep.field.dx;
    let winding_radius = prep.initial_width;

    let mut propagator = Propagator::new(n, dx, &prep.config)?;
    let mut radial_rows: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut radii = Vec::new();
    let mut windings: Vec<(f64, i64)> = Vec::new();
    let mut last = prep.field.clone();
    let mut steps = 0;
    let trace = propagator.propagate(&prep.field, &prep.config, |rec| {
        let (r, avg) = azimuthal_average(rec.field);
        let keep = r.iter().take_while(|&&x| x <= RADIAL_EXTENT * rho_max).count();
        if radii.is_empty() {
            radii = r[..keep].to_vec();
        }
        radial_rows.push((rec.z, avg[..keep].to_vec()));
        windings.push((rec.z, winding_number(rec.field, winding_radius)));
        last.amps.copy_from_slice(&rec.field.amps);
        steps = rec.step;
        Ok(Control::Continue)
    })?;

    let ld = nondiffraction_range(&trace)?;
    let ld_reached = ld.is_finite();
    let mid_z = if ld_reached { 0.5 * ld } else { trace.z_max };
    let winding_mid = windings
        .iter()
        .min_by(|a, b| (a.0 - mid_z).abs().total_cmp(&(b.0 - mid_z).abs()))
        .map_or(0, |w| w.1);
    let lobe_fraction = trace.lobe_fraction[0];

    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        name: s.name.clone(),
        kind: s.initial.kind,
        l: s.beam.l,
        ld_m: ld_reached.then_some(ld),
        ld_reached,
        ld_zeta: ld_reached.then(|| z_to_zeta(ld, derived.wavenumber)),
        z_reached: trace.z_max,
        steps,
        initial_width: bohr_to_meters(prep.initial_width),
        target_width: bohr_to_meters(prep.launch.target_width),
        main_lobe_fraction: lobe_fraction,
        main_lobe_current: main_lobe_current(&prep.field, s.beam.current)?,
        lobe_count: prep.launch.lobe_count,
        kt: prep.launch.kt / BOHR_RADIUS,
        winding_launch: windings.first().map_or(0, |w| w.1),
        winding_mid,
        gamma_beam: prep.gamma_beam,
        gamma_propagation: prep.config.gamma,
        wavenumber: derived.wavenumber,
        line_density: derived.line_density,
        grid_n: n,
        dx: bohr_to_meters(dx),
        dz: prep.config.dz,
        dzeta: prep.config.dzeta(),
        z_max: prep.config.z_max,
        noise_ratio: s.noise.ratio,
        noise_seed: s.noise.seed,
        step_check: prep.step_check,
        constants: serde_json::to_value(constants_table())?,
        scenario: s.clone(),
    };

    if let Some(dir) = out {
        create_dir(dir)?;
        trace.write_csv(&dir.join("trace.csv"))?;
        write_radial(dir, &radii, &radial_rows)?;
        prep.field.write_density_pgm(&dir.join("density_start.pgm"))?;
        last.write_density_pgm(&dir.join("density_end.pgm"))?;
        last.write_raw(&dir.join("field_end.c64"), serde_json::json!({ "z_m": trace.z_max, "scenario": s.name }))?;
        write_json(&dir.join("summary.json"), &summary)?;
    }
    Ok(RunOutcome { summary, trace, launch: prep.field, last })
}

/// Azimuthally averaged density against z, as a CSV matrix (first column z,
/// one column per radius) and a 16-bit PGM with z along the rows.
fn write_radial(dir: &Path, radii: &[f64], rows: &[(f64, Vec<f64>)]) -> Result<()> {
    if rows.is_empty() || radii.is_empty() {
        return Err(Error::domain("no radial samples recorded"));
    }
    let stride = rows.len().div_ceil(MAX_RADIAL_ROWS);
    let mut kept: Vec<&(f64, Vec<f64>)> = rows.iter().step_by(stride).collect();
    let end = rows.last().expect("non-empty");
    if !std::ptr::eq(*kept.last().expect("non-empty"), end) {
        kept.push(end);
    }
    let to_si = 1.0 / (BOHR_RADIUS * BOHR_RADIUS);
    let width = radii.len();
    let mut header = vec!["z[m]".to_string()];
    header.extend(radii.iter().map(|r| format!("r={}", format_number(bohr_to_meters(*r)))));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv_rows = Vec::with_capacity(kept.len());
    let mut pixels = Vec::with_capacity(kept.len() * width);
    for (z, avg) in kept {
        let mut row = vec![*z];
        for i in 0..width {
            let d = avg.get(i).copied().unwrap_or(0.0);
            row.push(d * to_si);
            pixels.push(d);
        }
        csv_rows.push(row);
    }
    write_csv(&dir.join("radial_density.csv"), &header_refs, &csv_rows)?;
    write_pgm(&dir.join("radial_density.pgm"), width, csv_rows.len(), &pixels, 16)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::scenario::Scenario;

    fn small(kind: &str, nonlinear: bool) -> Scenario {
        Scenario::from_toml(&format!(
            r#"
name = "small-{kind}"
[beam]
voltage = 300.0
current = 1e-6
aperture_radius = 5e-9
[initial]
kind = "{kind}"
width = 1e-9
[grid]
n = 64
[propagation]
nonlinear = {nonlinear}
"#
        ))
        .unwrap()
    }

    #[test]
    fn gaussian_run_writes_a_complete_bundle() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_scenario(&small("gaussian", false), Some(dir.path())).unwrap();
        for f in [
            "trace.csv",
            "radial_density.csv",
            "radial_density.pgm",
            "density_start.pgm",
            "density_end.pgm",
            "field_end.c64",
            "field_end.c64.json",
            "summary.json",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let text = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
        let back: RunSummary = serde_json::from_str(&text).unwrap();
        assert_eq!(back.name, out.summary.name);
        assert!(out.summary.ld_reached);
        assert!((out.summary.initial_width - 1e-9).abs() < 0.05e-9, "{}", out.summary.initial_width);
    }

    #[test]
    fn runs_are_deterministic() {
        let mut s = small("bessel", true);
        s.noise.ratio = 0.5;
        s.noise.seed = 7;
        let a = run_scenario(&s, None).unwrap();
        let b = run_scenario(&s, None).unwrap();
        assert_eq!(a.summary, b.summary);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn linear_gaussian_range_matches_free_spreading() {
        // w(ζ)² = w0² + (2ζ/w0)² in these units, so √2 growth at ζ = w0²/2
        let s = small("gaussian", false);
        let out = run_scenario(&s, None).unwrap();
        let w0 = crate::params::meters_to_bohr(out.summary.initial_width);
        let expect = 0.5 * w0 * w0;
        let got = out.summary.ld_zeta.unwrap();
        assert!((got - expect).abs() < 0.05 * expect, "{got} vs {expect}");
    }

    #[test]
    fn errors_name_the_scenario() {
        let mut s = small("gaussian", false);
        s.grid.n = 48;
        let msg = run_scenario(&s, None).unwrap_err().to_string();
        assert!(msg.contains("small-gaussian"), "{msg}");
    }
}
