//! Radial profile sets and the mask pipeline.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{create_dir, write_csv, write_json, write_pgm};
use crate::mask::{best_threshold, evaluate, Hologram, MaskReport, MaskSpec, Threshold};
use crate::numerics::interp;
use crate::params::{bohr_to_meters, meters_to_bohr, PhysParams, BOHR_RADIUS};
use crate::radial::{solve_radial, solve_radial_flat, RadialProfile, Residuals};

use super::beam::{solve_kt_for_width, PROFILE_TOL};
use super::presets::{self, Profile};
use super::scenario::SCHEMA_VERSION;

/// Samples per profile in the combined CSV.
const PROFILE_SAMPLES: usize = 2000;

/// Profiles of several charges sharing the kT of a charge-zero beam of
/// width `width`, optionally with the flat solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSetSpec {
    pub voltage: f64,
    pub current: f64,
    /// m
    pub aperture_radius: f64,
    /// m
    pub width: f64,
    pub charges: Vec<u32>,
    pub include_flat: bool,
}

impl ProfileSetSpec {
    pub fn preset() -> Self {
        Self {
            voltage: presets::VOLTAGE,
            current: presets::CURRENT,
            aperture_radius: presets::APERTURE,
            width: presets::WIDTH,
            charges: presets::PROFILE_CHARGES.to_vec(),
            include_flat: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    /// `"l0"`, `"l1"`, ... or `"flat"`.
    pub label: String,
    pub l: u32,
    /// 1/m
    pub kt: f64,
    /// m
    pub main_lobe_width: f64,
    pub main_lobe_fraction: f64,
    pub lobe_count: usize,
    /// m
    pub zeros: Vec<f64>,
    pub residuals: Residuals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSetSummary {
    pub schema_version: u32,
    pub spec: ProfileSetSpec,
    pub gamma: f64,
    pub profiles: Vec<ProfileEntry>,
}

/// Solve every profile of the set. With `out`, writes one text file per
/// profile, `profiles.csv` on a shared radius grid and `profiles.json`.
pub fn solve_profiles(spec: &ProfileSetSpec, out: Option<&Path>) -> Result<(ProfileSetSummary, Vec<RadialProfile>)> {
    let params = PhysParams::new(spec.voltage, spec.current, 0, spec.aperture_radius)?;
    let gamma = params.derived()?.gamma;
    let rho_max = params.aperture_bohr();
    let (kt, _) = solve_kt_for_width(0, gamma, rho_max, meters_to_bohr(spec.width))?;
    let mut labelled = Vec::new();
    for &l in &spec.charges {
        labelled.push((format!("l{l}"), solve_radial(kt, l, gamma, rho_max, PROFILE_TOL)?));
    }
    if spec.include_flat {
        labelled.push(("flat".to_string(), solve_radial_flat(gamma, rho_max, PROFILE_TOL)?));
    }
    let entries = labelled
        .iter()
        .map(|(label, p)| ProfileEntry {
            label: label.clone(),
            l: p.l,
            kt: p.kt / BOHR_RADIUS,
            main_lobe_width: bohr_to_meters(p.main_lobe_width()),
            main_lobe_fraction: p.main_lobe_fraction(),
            lobe_count: p.lobe_count,
            zeros: p.zeros.iter().map(|z| bohr_to_meters(*z)).collect(),
            residuals: p.residuals,
        })
        .collect();
    let summary = ProfileSetSummary { schema_version: SCHEMA_VERSION, spec: spec.clone(), gamma, profiles: entries };

    if let Some(dir) = out {
        create_dir(dir)?;
        for (label, p) in &labelled {
            p.write_text(&dir.join(format!("profile_{label}.txt")))?;
        }
        let mut header = vec!["rho[m]".to_string()];
        for (label, _) in &labelled {
            header.push(format!("phi_{label}"));
            header.push(format!("U_{label}"));
        }
        let refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows: Vec<Vec<f64>> = (0..PROFILE_SAMPLES)
            .map(|i| {
                let rho = rho_max * i as f64 / (PROFILE_SAMPLES - 1) as f64;
                let mut row = vec![bohr_to_meters(rho)];
                for (_, p) in &labelled {
                    row.push(interp(&p.rho, &p.phi, rho));
                    row.push(interp(&p.rho, &p.u, rho));
                }
                row
            })
            .collect();
        write_csv(&dir.join("profiles.csv"), &refs, &rows)?;
        write_json(&dir.join("profiles.json"), &summary)?;
    }
    Ok((summary, labelled.into_iter().map(|(_, p)| p).collect()))
}

/// Mask of a shape-preserving profile of charge `l` at the kT of the
/// charge-zero beam of width `width`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskJob {
    pub voltage: f64,
    pub current: f64,
    /// m
    pub aperture_radius: f64,
    /// m
    pub width: f64,
    pub l: u32,
    pub n: usize,
    /// Carrier in units of the target radius; the default when absent.
    pub carrier_ratio: Option<f64>,
}

impl MaskJob {
    pub fn preset(l: u32, profile: Profile) -> Self {
        Self {
            voltage: presets::VOLTAGE,
            current: presets::CURRENT,
            aperture_radius: presets::APERTURE,
            width: presets::WIDTH,
            l,
            n: 4 * profile.grid(),
            carrier_ratio: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskPipelineReport {
    pub schema_version: u32,
    pub job: MaskJob,
    /// 1/m
    pub kt: f64,
    /// Mask binarized at the median of `T`.
    pub median: MaskReport,
    /// Mask binarized at the best quantile of the scan; the one written out.
    pub optimized: MaskReport,
}

/// Synthesize, diffract and score a mask. With `out`, writes `mask.pbm` and
/// `mask.json` (optimized threshold), `mask_median.pbm`, `far_field.pgm`
/// (log scale), `order_plus.pgm`, `target.pgm` and `report.json`.
pub fn run_mask_pipeline(job: &MaskJob, out: Option<&Path>) -> Result<MaskPipelineReport> {
    let params = PhysParams::new(job.voltage, job.current, job.l, job.aperture_radius)?;
    let gamma = params.derived()?.gamma;
    let rho_max = params.aperture_bohr();
    let (kt, _) = solve_kt_for_width(0, gamma, rho_max, meters_to_bohr(job.width))?;
    let profile = solve_radial(kt, job.l, gamma, rho_max, PROFILE_TOL)?;
    let mut spec = MaskSpec::for_profile(&profile, job.l, job.n);
    if let Some(ratio) = job.carrier_ratio {
        if !(ratio > 0.0) {
            return Err(Error::config(format!("carrier ratio must be positive, got {ratio}")));
        }
        spec.kh = Some(ratio * rho_max);
    }
    let hologram = Hologram::new(&profile, &spec)?;

    let median_mask = hologram.binarize(Threshold::Median)?;
    let (mut median, _, _, _) = evaluate(&median_mask, &hologram.target, rho_max)?;
    median.threshold_quantile = Some(0.5);
    let (q, mask, _) = best_threshold(&hologram, rho_max)?;
    let (mut optimized, far, plus, _) = evaluate(&mask, &hologram.target, rho_max)?;
    optimized.threshold_quantile = Some(q);

    let report =
        MaskPipelineReport { schema_version: SCHEMA_VERSION, job: job.clone(), kt: kt / BOHR_RADIUS, median, optimized };
    if let Some(dir) = out {
        create_dir(dir)?;
        mask.write(dir, "mask")?;
        median_mask.write(dir, "mask_median")?;
        let n = far.n;
        let power: Vec<f64> = far.density();
        let peak = power.iter().copied().fold(0.0, f64::max);
        // six decades below the peak map to black
        let floor = peak * 1e-6;
        let log: Vec<f64> = power.iter().map(|p| (p.max(floor) / floor).log10()).collect();
        write_pgm(&dir.join("far_field.pgm"), n, n, &log, 16)?;
        plus.write_density_pgm(&dir.join("order_plus.pgm"))?;
        hologram.target.write_density_pgm(&dir.join("target.pgm"))?;
        write_json(&dir.join("report.json"), &report)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_set() -> ProfileSetSpec {
        ProfileSetSpec {
            voltage: 300.0,
            current: 1e-6,
            aperture_radius: 5e-9,
            width: 1e-9,
            charges: vec![0, 1],
            include_flat: true,
        }
    }

    #[test]
    fn profile_set_shares_kt_and_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let (summary, profiles) = solve_profiles(&small_set(), Some(dir.path())).unwrap();
        assert_eq!(profiles.len(), 3);
        assert_eq!(summary.profiles[0].kt, summary.profiles[1].kt);
        assert_eq!(summary.profiles[2].kt, 0.0);
        assert!((summary.profiles[0].main_lobe_width - 1e-9).abs() < 1e-6 * 1e-9);
        for f in ["profile_l0.txt", "profile_l1.txt", "profile_flat.txt", "profiles.csv", "profiles.json"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let csv = std::fs::read_to_string(dir.path().join("profiles.csv")).unwrap();
        assert_eq!(csv.lines().next().unwrap().split(',').count(), 7);
        assert_eq!(csv.lines().count(), PROFILE_SAMPLES + 1);
    }

    #[test]
    fn slow_carrier_is_a_hard_error_with_no_output() {
        let mut job = MaskJob::preset(1, Profile::Fast);
        job.n = 256;
        job.carrier_ratio = Some(1.5);
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("mask");
        assert!(matches!(run_mask_pipeline(&job, Some(&target)), Err(Error::Config(_))));
        assert!(!target.exists());
    }
}
