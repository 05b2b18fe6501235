//! Launch fields for each beam family, matched to a target effective width.

use crate::bessel::bessel_zero;
use crate::error::{Error, Result};
use crate::field::{apply_aperture, bessel, from_radial_in_aperture, gaussian, Field2D};
use crate::numerics::bisect;
use crate::radial::{bessel_width_factor, solve_radial, solve_radial_flat, RadialProfile};

use super::scenario::{InitialKind, Scenario};

/// Tolerance handed to the radial solver for launch profiles.
pub const PROFILE_TOL: f64 = 1e-8;

/// A prepared launch state. Lengths in a₀.
#[derive(Debug, Clone)]
pub struct Launch {
    pub field: Field2D,
    pub kind: InitialKind,
    /// a₀⁻¹; zero for Gaussian beams and the flat solution.
    pub kt: f64,
    pub lobe_count: usize,
    /// Width the beam was built for (the radial profile width for
    /// shape-preserving beams).
    pub target_width: f64,
    pub profile: Option<RadialProfile>,
}

/// Main-lobe width of the `k_T = 0` solution, the widest the family allows.
pub fn maximal_width(gamma: f64, rho_max: f64) -> Result<f64> {
    Ok(solve_radial_flat(gamma, rho_max, PROFILE_TOL)?.main_lobe_width())
}

/// kT at which the shape-preserving profile of charge `l` has main-lobe
/// width `width`, with that profile.
pub fn solve_kt_for_width(l: u32, gamma: f64, rho_max: f64, width: f64) -> Result<(f64, RadialProfile)> {
    if !(width > 0.0) {
        return Err(Error::domain(format!("width must be positive, got {width}")));
    }
    let width_at = |kt: f64| -> Result<f64> { Ok(solve_radial(kt, l, gamma, rho_max, PROFILE_TOL)?.main_lobe_width()) };
    let mut hi = bessel_width_factor(l) / width;
    let mut guard = 0;
    while width_at(hi)? > width {
        hi *= 2.0;
        guard += 1;
        if guard > 40 {
            return Err(Error::domain(format!("no kT gives width {width} a0")));
        }
    }
    let mut lo = 0.5 * hi;
    guard = 0;
    while width_at(lo)? < width {
        lo *= 0.5;
        guard += 1;
        // below this the profile has converged to the flat solution
        if guard > 40 || lo * rho_max < 1e-3 {
            let widest = if l == 0 { maximal_width(gamma, rho_max)? } else { width_at(lo)? };
            return Err(Error::domain(format!(
                "width {width} a0 exceeds the maximal shape-preserving width {widest} a0"
            )));
        }
    }
    // width is decreasing in kT; bisect in log kT
    let mut failure = None;
    let g = |t: f64| match width_at(t.exp()) {
        Ok(w) => w - width,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let root = bisect(g, lo.ln(), hi.ln(), 1e-12, 200);
    if let Some(e) = failure {
        return Err(e);
    }
    let kt = root
        .ok_or_else(|| Error::Convergence { what: "kT for width", iterations: 200, residual: f64::NAN })?
        .exp();
    Ok((kt, solve_radial(kt, l, gamma, rho_max, PROFILE_TOL)?))
}

/// Zeros of `J_l(kT ρ)` inside the aperture, plus one.
pub fn bessel_lobe_count(l: u32, kt: f64, rho_max: f64) -> usize {
    let mut s = 1;
    while bessel_zero(l, s) < kt * rho_max {
        s += 1;
    }
    s
}

/// Build the launch field for a scenario on an `n x n` grid of spacing `dx`.
/// `gamma` is the beam's nonlinear coefficient, used by the profile solve.
pub fn build_launch(s: &Scenario, gamma: f64, n: usize, dx: f64) -> Result<Launch> {
    let l = s.beam.l;
    let rho_max = s.beam.params()?.aperture_bohr();
    let init = &s.initial;
    let to_bohr = crate::params::meters_to_bohr;
    let width = init.width.map(to_bohr);
    let kt = init.kt.map(|k| 1.0 / to_bohr(1.0 / k));

    // kT and width implied by a shape-preserving reference
    let matched = match init.match_to {
        Some(m) => {
            let (kt, _) = solve_kt_for_width(m.l, gamma, rho_max, to_bohr(m.width))?;
            let own = solve_radial(kt, l, gamma, rho_max, PROFILE_TOL)?;
            Some((kt, own))
        }
        None => None,
    };
    let need_width = || -> Result<f64> {
        width
            .or_else(|| matched.as_ref().map(|(_, p)| p.main_lobe_width()))
            .ok_or_else(|| Error::config(format!("scenario {} needs initial.width", s.name)))
    };

    let launch = match init.kind {
        InitialKind::Gaussian | InitialKind::LaguerreGauss => {
            let w = need_width()?;
            let sigma = w / ((l + 1) as f64).sqrt();
            let field = apply_aperture(&gaussian(sigma, l, n, dx)?, rho_max)?;
            Launch { field, kind: init.kind, kt: 0.0, lobe_count: 1, target_width: w, profile: None }
        }
        InitialKind::Bessel => {
            let (kb, w) = match (kt, width, &matched) {
                (Some(k), _, _) => (k, bessel_width_factor(l) / k),
                (None, Some(w), _) => (bessel_width_factor(l) / w, w),
                (None, None, Some((_, p))) => {
                    let w = p.main_lobe_width();
                    (bessel_width_factor(l) / w, w)
                }
                _ => return Err(Error::config(format!("scenario {} needs initial.width or kt", s.name))),
            };
            let field = apply_aperture(&bessel(kb, l, n, dx)?, rho_max)?;
            Launch {
                field,
                kind: init.kind,
                kt: kb,
                lobe_count: bessel_lobe_count(l, kb, rho_max),
                target_width: w,
                profile: None,
            }
        }
        InitialKind::ShapePreserving => {
            let (k, profile) = match (kt, width, matched) {
                (Some(k), _, _) => (k, solve_radial(k, l, gamma, rho_max, PROFILE_TOL)?),
                (None, Some(w), _) => solve_kt_for_width(l, gamma, rho_max, w)?,
                (None, None, Some(found)) => found,
                _ => return Err(Error::config(format!("scenario {} needs initial.width or kt", s.name))),
            };
            let field = from_radial_in_aperture(&profile, l, n, dx)?;
            Launch {
                field,
                kind: init.kind,
                kt: k,
                lobe_count: profile.lobe_count,
                target_width: profile.main_lobe_width(),
                profile: Some(profile),
            }
        }
        InitialKind::ShapePreservingFlat => {
            let profile = solve_radial_flat(gamma, rho_max, PROFILE_TOL)?;
            let field = from_radial_in_aperture(&profile, 0, n, dx)?;
            Launch {
                field,
                kind: init.kind,
                kt: 0.0,
                lobe_count: profile.lobe_count,
                target_width: profile.main_lobe_width(),
                profile: Some(profile),
            }
        }
    };
    Ok(launch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_j;

    #[test]
    fn kt_inversion_reproduces_the_width() {
        let (gamma, rho_max) = (0.05, 400.0);
        let base = solve_radial(0.05, 0, gamma, rho_max, PROFILE_TOL).unwrap();
        let w = base.main_lobe_width();
        let (kt, p) = solve_kt_for_width(0, gamma, rho_max, w).unwrap();
        assert!((kt - 0.05).abs() < 1e-8, "{kt}");
        assert!((p.main_lobe_width() - w).abs() < 1e-8 * w);
    }

    #[test]
    fn linear_limit_inverts_to_the_bessel_factor() {
        let w = 20.0;
        let (kt, _) = solve_kt_for_width(1, 0.0, 800.0, w).unwrap();
        assert!((kt * w - bessel_width_factor(1)).abs() < 1e-6, "{}", kt * w);
    }

    #[test]
    fn widths_beyond_the_flat_solution_are_rejected() {
        let (gamma, rho_max) = (0.05, 400.0);
        let widest = maximal_width(gamma, rho_max).unwrap();
        assert!(solve_kt_for_width(0, gamma, rho_max, 1.05 * widest).is_err());
        assert!(solve_kt_for_width(0, gamma, rho_max, 0.9 * widest).is_ok());
    }

    #[test]
    fn bessel_lobes_count_zeros_inside_the_aperture() {
        let (kt, r) = (0.1, 100.0);
        let mut sign_changes = 0;
        let mut prev = bessel_j(0, 1e-9);
        for i in 1..=100_000 {
            let v = bessel_j(0, kt * r * i as f64 / 100_000.0);
            if v.signum() != prev.signum() {
                sign_changes += 1;
            }
            prev = v;
        }
        assert_eq!(bessel_lobe_count(0, kt, r), sign_changes + 1);
    }
}
