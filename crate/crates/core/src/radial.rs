//! Shape-invariant radial profiles of the coupled Schrödinger-Poisson system
//!
//! ```text
//! φ'' + φ'/ρ − (l²/ρ² + U) φ = 0
//! U'' + U'/ρ = −γ φ²
//! ```
//!
//! in Bohr-radius units, with `U(0) = −kT²`, `U'(0) = 0` and the
//! normalization `2π ∫₀^ρmax φ² ρ dρ = 1`.
//!
//! The system is integrated outward as the first-order state
//! `(φ, φ', W = ρU', U)` with classical RK4 on a deterministic grid that is
//! geometrically graded near the axis and capped at a fixed number of points
//! per local wavelength `2π/√(−U)`. The amplitude `α` multiplying the
//! small-ρ series is found by bisection on the normalization integral.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_j, bessel_j_prime, bessel_zero};
use crate::error::{Error, Result};
use crate::numerics::{bisect, cumulative_integral, derivative, integral};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Tolerance on the normalization integral.
    pub tol: f64,
    pub max_iter: usize,
    pub points_per_wavelength: usize,
    pub min_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            points_per_wavelength: 256,
            min_steps: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `|2π∫φ²ρdρ − 1|`.
    pub norm_error: f64,
    /// Max interior residual of the φ equation, relative to its largest term.
    pub ode_residual: f64,
    /// Max difference between the integrated U and the one rebuilt from φ by
    /// quadrature, relative to max |U|.
    pub potential_mismatch: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    /// Sample radii in a₀, starting at 0 and ending at `rho_max`.
    pub rho: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub u: Vec<f64>,
    /// Transverse wavenumber in 1/a₀.
    pub kt: f64,
    pub l: u32,
    pub gamma: f64,
    pub alpha: f64,
    pub rho_max: f64,
    pub zeros: Vec<f64>,
    pub lobe_count: usize,
    pub residuals: Residuals,
}

/// Solve for the profile with transverse wavenumber `kt`.
pub fn solve_radial(kt: f64, l: u32, gamma: f64, rho_max: f64, tol: f64) -> Result<RadialProfile> {
    let opts = SolverOptions {
        tol,
        ..SolverOptions::default()
    };
    solve_radial_with(kt, l, gamma, rho_max, &opts)
}

/// The `kT = 0` profile, which only exists for `l = 0` and `γ > 0`.
pub fn solve_radial_flat(gamma: f64, rho_max: f64, tol: f64) -> Result<RadialProfile> {
    if !(gamma > 0.0) {
        return Err(Error::domain(
            "the kT = 0 profile needs gamma > 0; the linear limit is a plane wave",
        ));
    }
    solve_radial(0.0, 0, gamma, rho_max, tol)
}

pub fn solve_radial_with(kt: f64, l: u32, gamma: f64, rho_max: f64, opts: &SolverOptions) -> Result<RadialProfile> {
    if !(kt >= 0.0 && kt.is_finite()) {
        return Err(Error::domain(format!("kT must be finite and >= 0, got {kt}")));
    }
    if !(rho_max > 0.0 && rho_max.is_finite()) {
        return Err(Error::domain(format!("rho_max must be positive, got {rho_max}")));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::domain(format!("gamma must be >= 0, got {gamma}")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    if kt == 0.0 && l > 0 {
        return Err(Error::domain("kT = 0 does not admit orbital angular momentum"));
    }
    if kt == 0.0 && gamma == 0.0 {
        return Err(Error::domain("kT = 0 with gamma = 0 has no localized profile"));
    }

    let shooter = Shooter { kt, l, gamma, eps: start_offset(kt, l, rho_max) };
    let mut kmax = kt.max(2.0 * PI / rho_max);
    for _ in 0..8 {
        let grid = shooter.grid(rho_max, kmax, opts);
        let alpha = shooter.find_alpha(&grid, opts)?;
        let state = shooter.integrate(&grid, alpha);
        let u_end = *state.u.last().unwrap();
        let k_end = (-u_end).max(kt * kt).sqrt();
        if k_end <= kmax * (1.0 + 1e-9) {
            return Ok(shooter.assemble(grid, state, alpha, rho_max));
        }
        kmax = k_end * 1.05;
    }
    Err(Error::Convergence {
        what: "radial grid refinement",
        iterations: 8,
        residual: f64::NAN,
    })
}

fn start_offset(kt: f64, l: u32, rho_max: f64) -> f64 {
    if kt > 0.0 {
        (1e-3 * bessel_zero(l, 1) / kt).min(1e-3 * rho_max)
    } else {
        1e-3 * rho_max
    }
}

#[derive(Clone, Copy)]
struct Shooter {
    kt: f64,
    l: u32,
    gamma: f64,
    eps: f64,
}

struct State {
    phi: Vec<f64>,
    dphi: Vec<f64>,
    w: Vec<f64>,
    u: Vec<f64>,
}

impl Shooter {
    /// Grid from `eps` to `rho_max`: steps grow geometrically near the axis
    /// until they reach the wavelength-resolving cap.
    fn grid(&self, rho_max: f64, kmax: f64, opts: &SolverOptions) -> Vec<f64> {
        let h_cap = ((rho_max - self.eps) / opts.min_steps as f64)
            .min(2.0 * PI / (opts.points_per_wavelength as f64 * kmax));
        let grade = 0.02 / (1.0 + self.l as f64);
        let mut grid = vec![self.eps];
        let mut r = self.eps;
        while r < rho_max {
            let h = (grade * r).min(h_cap);
            r = if rho_max - (r + h) < 0.25 * h { rho_max } else { r + h };
            grid.push(r);
        }
        grid
    }

    fn initial(&self, alpha: f64) -> [f64; 4] {
        let (e, g, l) = (self.eps, self.gamma, self.l);
        if self.kt > 0.0 {
            let phi = alpha * bessel_j(l, self.kt * e);
            let dphi = alpha * self.kt * bessel_j_prime(l, self.kt * e);
            let m = 2.0 * l as f64 + 2.0;
            let w = -g * phi * phi * e * e / m;
            let u = -self.kt * self.kt - g * phi * phi * e * e / (m * m);
            [phi, dphi, w, u]
        } else {
            let a2 = alpha * alpha;
            let phi = alpha * (1.0 - g * a2 * e.powi(4) / 64.0);
            let dphi = -g * a2 * alpha * e.powi(3) / 16.0;
            let w = -g * a2 * e * e / 2.0;
            let u = -g * a2 * e * e / 4.0;
            [phi, dphi, w, u]
        }
    }

    fn rhs(&self, r: f64, y: &[f64; 4]) -> [f64; 4] {
        let l2 = (self.l * self.l) as f64;
        [
            y[1],
            -y[1] / r + (l2 / (r * r) + y[3]) * y[0],
            -self.gamma * r * y[0] * y[0],
            y[2] / r,
        ]
    }

    fn integrate(&self, grid: &[f64], alpha: f64) -> State {
        let n = grid.len();
        let mut s = State {
            phi: Vec::with_capacity(n),
            dphi: Vec::with_capacity(n),
            w: Vec::with_capacity(n),
            u: Vec::with_capacity(n),
        };
        let mut y = self.initial(alpha);
        let push = |s: &mut State, y: &[f64; 4]| {
            s.phi.push(y[0]);
            s.dphi.push(y[1]);
            s.w.push(y[2]);
            s.u.push(y[3]);
        };
        push(&mut s, &y);
        for win in grid.windows(2) {
            let (r, h) = (win[0], win[1] - win[0]);
            let k1 = self.rhs(r, &y);
            let k2 = self.rhs(r + 0.5 * h, &axpy(&y, 0.5 * h, &k1));
            let k3 = self.rhs(r + 0.5 * h, &axpy(&y, 0.5 * h, &k2));
            let k4 = self.rhs(r + h, &axpy(&y, h, &k3));
            for i in 0..4 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            push(&mut s, &y);
        }
        s
    }

    fn axis_values(&self, alpha: f64) -> (f64, f64) {
        let phi0 = if self.l == 0 { alpha } else { 0.0 };
        let dphi0 = if self.l == 1 { 0.5 * alpha * self.kt } else { 0.0 };
        (phi0, dphi0)
    }

    fn norm(&self, grid: &[f64], alpha: f64) -> f64 {
        let s = self.integrate(grid, alpha);
        let mut x = Vec::with_capacity(grid.len() + 1);
        let mut f = Vec::with_capacity(grid.len() + 1);
        x.push(0.0);
        f.push(0.0);
        for (r, p) in grid.iter().zip(&s.phi) {
            x.push(*r);
            f.push(p * p * r);
        }
        let n = 2.0 * PI * integral(&x, &f);
        if n.is_finite() {
            n
        } else {
            f64::INFINITY
        }
    }

    fn find_alpha(&self, grid: &[f64], opts: &SolverOptions) -> Result<f64> {
        let linear = 1.0 / self.linear_norm(grid).sqrt();
        if self.gamma == 0.0 {
            return Ok(linear);
        }
        let residual = |a: f64| self.norm(grid, a) - 1.0;

        // Scan amplitudes geometrically around the linear guess and collect
        // every sign change of the normalization defect.
        let h_cap = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        let mut brackets = Vec::new();
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..=64 {
            let a = linear * 2f64.powf((k as f64 - 32.0) / 4.0);
            let state = self.integrate(grid, a);
            let k_end = (-state.u.last().unwrap()).max(0.0).sqrt();
            if !(k_end * h_cap < 2.0 * PI / 32.0) {
                break;
            }
            let f = residual(a);
            if let Some((pa, pf)) = prev {
                if pf.signum() != f.signum() {
                    brackets.push((pa, a));
                }
            }
            prev = Some((a, f));
        }
        match brackets.len() {
            0 => Err(Error::Convergence {
                what: "normalization bracket search",
                iterations: 65,
                residual: prev.map_or(f64::NAN, |p| p.1),
            }),
            1 => {
                let (lo, hi) = brackets[0];
                let mut a = lo;
                let mut f = f64::INFINITY;
                let (mut lo, mut hi) = (lo, hi);
                let mut flo = residual(lo);
                for _ in 0..opts.max_iter {
                    a = 0.5 * (lo + hi);
                    f = residual(a);
                    if f.abs() < opts.tol || hi - lo <= 1e-15 * hi {
                        break;
                    }
                    if f.signum() == flo.signum() {
                        lo = a;
                        flo = f;
                    } else {
                        hi = a;
                    }
                }
                if f.abs() < opts.tol {
                    Ok(a)
                } else {
                    Err(Error::Convergence {
                        what: "normalization amplitude",
                        iterations: opts.max_iter,
                        residual: f.abs(),
                    })
                }
            }
            count => Err(Error::AmbiguousNormalization { count, brackets }),
        }
    }

    fn linear_norm(&self, grid: &[f64]) -> f64 {
        if self.kt == 0.0 {
            // uniform disk
            let r = *grid.last().unwrap();
            return PI * r * r;
        }
        let linear = Shooter { gamma: 0.0, ..*self };
        linear.norm(grid, 1.0)
    }

    fn assemble(&self, grid: Vec<f64>, s: State, alpha: f64, rho_max: f64) -> RadialProfile {
        let (phi0, dphi0) = self.axis_values(alpha);
        let u0 = -self.kt * self.kt;
        let mut rho = Vec::with_capacity(grid.len() + 1);
        rho.push(0.0);
        rho.extend(grid);
        let mut phi = vec![phi0];
        phi.extend(s.phi);
        let mut dphi = vec![dphi0];
        dphi.extend(s.dphi);
        let mut u = vec![u0];
        u.extend(s.u);

        let zeros = find_zeros_sampled(&rho, &phi, &dphi);
        let mut profile = RadialProfile {
            lobe_count: zeros.len() + 1,
            rho,
            phi,
            dphi,
            u,
            kt: self.kt,
            l: self.l,
            gamma: self.gamma,
            alpha,
            rho_max,
            zeros,
            residuals: Residuals::default(),
        };
        profile.residuals = profile.compute_residuals();
        profile
    }
}

fn axpy(y: &[f64; 4], h: f64, k: &[f64; 4]) -> [f64; 4] {
    [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3]]
}

/// `U(ρ) = u0 − γ ∫₀^ρ (1/s) ∫₀^s φ(t)² t dt ds` by nested fourth-order quadrature.
pub fn radial_potential_from_density(rho: &[f64], phi: &[f64], gamma: f64, u0: f64) -> Vec<f64> {
    let inner: Vec<f64> = rho.iter().zip(phi).map(|(r, p)| p * p * r).collect();
    let enclosed = cumulative_integral(rho, &inner);
    let ratio: Vec<f64> = rho
        .iter()
        .zip(&enclosed)
        .map(|(r, c)| if *r > 0.0 { c / r } else { 0.0 })
        .collect();
    cumulative_integral(rho, &ratio)
        .into_iter()
        .map(|v| u0 - gamma * v)
        .collect()
}

/// Sign changes of φ, located by bisection on the cubic Hermite interpolant.
pub fn find_zeros(profile: &RadialProfile) -> Vec<f64> {
    find_zeros_sampled(&profile.rho, &profile.phi, &profile.dphi)
}

/// Lobes inside the aperture: one more than the number of interior zeros.
pub fn count_lobes(profile: &RadialProfile) -> usize {
    find_zeros(profile).len() + 1
}

fn find_zeros_sampled(rho: &[f64], phi: &[f64], dphi: &[f64]) -> Vec<f64> {
    let mut zeros = Vec::new();
    for i in 1..rho.len() - 1 {
        let (a, b) = (phi[i], phi[i + 1]);
        if a == 0.0 || a.signum() == b.signum() {
            continue;
        }
        if b == 0.0 {
            if i + 1 < rho.len() - 1 {
                zeros.push(rho[i + 1]);
            }
            continue;
        }
        let (x0, x1) = (rho[i], rho[i + 1]);
        let h = x1 - x0;
        let hermite = |x: f64| {
            let t = (x - x0) / h;
            let t2 = t * t;
            let t3 = t2 * t;
            (2.0 * t3 - 3.0 * t2 + 1.0) * a
                + (t3 - 2.0 * t2 + t) * h * dphi[i]
                + (-2.0 * t3 + 3.0 * t2) * b
                + (t3 - t2) * h * dphi[i + 1]
        };
        if let Some(z) = bisect(hermite, x0, x1, 1e-13 * x1, 200) {
            zeros.push(z);
        }
    }
    zeros
}

impl RadialProfile {
    /// Linear-limit reference profile `J_l(kT ρ)` sampled on this grid and
    /// normalized the same way.
    pub fn bessel_reference(&self) -> Vec<f64> {
        let raw: Vec<f64> = self.rho.iter().map(|r| bessel_j(self.l, self.kt * r)).collect();
        let dens: Vec<f64> = raw.iter().zip(&self.rho).map(|(p, r)| p * p * r).collect();
        let norm = (2.0 * PI * integral(&self.rho, &dens)).sqrt();
        raw.into_iter().map(|p| p / norm).collect()
    }

    /// `2π ∫ φ² ρ dρ` over the whole sampled range.
    pub fn norm(&self) -> f64 {
        let dens: Vec<f64> = self.phi.iter().zip(&self.rho).map(|(p, r)| p * p * r).collect();
        2.0 * PI * integral(&self.rho, &dens)
    }

    /// Radius of the first zero, or `rho_max` when φ has none.
    pub fn main_lobe_radius(&self) -> f64 {
        self.zeros.first().copied().unwrap_or(self.rho_max)
    }

    /// Second-moment width `√(∫φ²ρ³/∫φ²ρ)` restricted to the main lobe, in a₀.
    pub fn main_lobe_width(&self) -> f64 {
        let (m0, m2) = self.lobe_moments();
        (m2 / m0).sqrt()
    }

    /// Fraction of the normalized density inside the main lobe.
    pub fn main_lobe_fraction(&self) -> f64 {
        let (m0, _) = self.lobe_moments();
        2.0 * PI * m0 / self.norm()
    }

    fn lobe_moments(&self) -> (f64, f64) {
        let edge = self.main_lobe_radius();
        let cut = self.rho.partition_point(|&r| r <= edge);
        let x = &self.rho[..cut];
        let f0: Vec<f64> = x.iter().zip(&self.phi).map(|(r, p)| p * p * r).collect();
        let f2: Vec<f64> = x.iter().zip(&f0).map(|(r, f)| f * r * r).collect();
        let mut m0 = integral(x, &f0);
        let mut m2 = integral(x, &f2);
        if cut < self.rho.len() && edge > x[cut - 1] {
            // remaining sliver up to the zero, Simpson with a linear midpoint
            let (a, b) = (x[cut - 1], edge);
            let mid = 0.5 * (a + b);
            let pm = self.phi[cut - 1] * (b - mid) / (b - a);
            let fm = pm * pm * mid;
            let h = (b - a) / 6.0;
            m0 += h * (f0[cut - 1] + 4.0 * fm);
            m2 += h * (f2[cut - 1] + 4.0 * fm * mid * mid);
        }
        (m0, m2)
    }

    fn compute_residuals(&self) -> Residuals {
        let norm_error = (self.norm() - 1.0).abs();

        let d2 = derivative(&self.rho, &self.dphi);
        let l2 = (self.l * self.l) as f64;
        let n = self.rho.len();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 3..n.saturating_sub(3) {
            let r = self.rho[i];
            let drift = self.dphi[i] / r;
            let pot = (l2 / (r * r) + self.u[i]) * self.phi[i];
            worst = worst.max((d2[i] + drift - pot).abs());
            scale = scale.max(d2[i].abs()).max(drift.abs()).max(pot.abs());
        }
        let ode_residual = if scale > 0.0 { worst / scale } else { 0.0 };

        let rebuilt = radial_potential_from_density(&self.rho, &self.phi, self.gamma, -self.kt * self.kt);
        let umax = self.u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mismatch = rebuilt
            .iter()
            .zip(&self.u)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        Residuals {
            norm_error,
            ode_residual,
            potential_mismatch: if umax > 0.0 { mismatch / umax } else { mismatch },
        }
    }

    pub fn header(&self) -> ProfileHeader {
        ProfileHeader {
            kt: self.kt,
            l: self.l,
            gamma: self.gamma,
            alpha: self.alpha,
            rho_max: self.rho_max,
            samples: self.rho.len(),
            lobe_count: self.lobe_count,
            zeros: self.zeros.clone(),
            residuals: self.residuals,
        }
    }

    /// Columnar text: one `# {json header}` line, then `rho phi U` rows.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let header = serde_json::to_string(&self.header()).expect("header serializes");
        let _ = writeln!(out, "# {header}");
        let _ = writeln!(out, "# rho[a0] phi U");
        for i in 0..self.rho.len() {
            let _ = writeln!(out, "{:.17e} {:.17e} {:.17e}", self.rho[i], self.phi[i], self.u[i]);
        }
        out
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Parse the format written by [`RadialProfile::to_text`]. φ' is rebuilt
    /// by finite differences.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let first = lines.next().ok_or_else(|| Error::Parse("empty profile".into()))?;
        let json = first
            .strip_prefix("# ")
            .ok_or_else(|| Error::Parse("missing JSON header line".into()))?;
        let header: ProfileHeader = serde_json::from_str(json)?;
        let (mut rho, mut phi, mut u) = (Vec::new(), Vec::new(), Vec::new());
        for line in lines.filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
            let cols: Vec<f64> = line
                .split_whitespace()
                .map(|c| c.parse::<f64>().map_err(|e| Error::Parse(format!("{e} in {line:?}"))))
                .collect::<Result<_>>()?;
            if cols.len() != 3 {
                return Err(Error::Parse(format!("expected 3 columns in {line:?}")));
            }
            rho.push(cols[0]);
            phi.push(cols[1]);
            u.push(cols[2]);
        }
        if rho.len() < 5 {
            return Err(Error::Parse("profile needs at least 5 samples".into()));
        }
        let dphi = derivative(&rho, &phi);
        Ok(RadialProfile {
            rho,
            phi,
            dphi,
            u,
            kt: header.kt,
            l: header.l,
            gamma: header.gamma,
            alpha: header.alpha,
            rho_max: header.rho_max,
            zeros: header.zeros,
            lobe_count: header.lobe_count,
            residuals: header.residuals,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileHeader {
    pub kt: f64,
    pub l: u32,
    pub gamma: f64,
    pub alpha: f64,
    pub rho_max: f64,
    pub samples: usize,
    pub lobe_count: usize,
    pub zeros: Vec<f64>,
    pub residuals: Residuals,
}

/// Main-lobe second-moment width of `J_l(ρ)` (unit kT), so that a Bessel
/// beam of width `w` has `kT = bessel_width_factor(l) / w`.
pub fn bessel_width_factor(l: u32) -> f64 {
    let z = bessel_zero(l, 1);
    let n = 4001;
    let x: Vec<f64> = (0..n).map(|i| z * i as f64 / (n - 1) as f64).collect();
    let f0: Vec<f64> = x.iter().map(|r| bessel_j(l, *r).powi(2) * r).collect();
    let f2: Vec<f64> = x.iter().zip(&f0).map(|(r, f)| f * r * r).collect();
    (integral(&x, &f2) / integral(&x, &f0)).sqrt()
}
