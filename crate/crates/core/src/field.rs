//! Complex transverse wavefunctions on a square grid and the initial
//! conditions used by the experiments.
//!
//! Sample `(i, j)` sits at `x = (i − n/2)·dx`, `y = (j − n/2)·dx`, stored
//! row-major. All constructors return fields with `∬|ψ|² dx dy = 1`.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bessel::bessel_j;
use crate::error::{Error, Result};
use crate::io::write_pgm;
use crate::numerics::interp;
use crate::radial::RadialProfile;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    /// Constructor or transformation chain, e.g. `"bessel+aperture"`.
    pub kind: String,
    pub params: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub n: usize,
    /// Grid spacing in a₀.
    pub dx: f64,
    pub amps: Vec<Complex64>,
    pub meta: FieldMeta,
}

impl Field2D {
    pub fn zeros(n: usize, dx: f64) -> Self {
        Self {
            n,
            dx,
            amps: vec![Complex64::new(0.0, 0.0); n * n],
            meta: FieldMeta::default(),
        }
    }

    /// Build from a function of `(x, y)`, then normalize.
    pub fn from_fn(n: usize, dx: f64, meta: FieldMeta, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        check_grid(n, dx)?;
        let mut amps = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                amps.push(f(coord(i, n, dx), coord(j, n, dx)));
            }
        }
        let mut field = Self { n, dx, amps, meta };
        field.normalize()?;
        Ok(field)
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.dx * self.dx
    }

    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::domain(format!("cannot normalize a field with norm {norm}")));
        }
        let s = 1.0 / norm.sqrt();
        for a in &mut self.amps {
            *a *= s;
        }
        Ok(())
    }

    pub fn density(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Coordinate of index `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        coord(i, self.n, self.dx)
    }

    /// Complex amplitude at `(x, y)` by bilinear interpolation; zero outside.
    pub fn sample(&self, x: f64, y: f64) -> Complex64 {
        let c = self.n as f64 / 2.0;
        let (u, v) = (x / self.dx + c, y / self.dx + c);
        let (i0, j0) = (u.floor(), v.floor());
        if i0 < 0.0 || j0 < 0.0 || i0 + 1.0 >= self.n as f64 || j0 + 1.0 >= self.n as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let (fu, fv) = (u - i0, v - j0);
        let (i, j) = (i0 as usize, j0 as usize);
        let at = |a: usize, b: usize| self.amps[a * self.n + b];
        at(i, j) * ((1.0 - fu) * (1.0 - fv))
            + at(i + 1, j) * (fu * (1.0 - fv))
            + at(i, j + 1) * ((1.0 - fu) * fv)
            + at(i + 1, j + 1) * (fu * fv)
    }

    fn push_kind(&mut self, step: &str, params: Value) {
        self.meta.kind = if self.meta.kind.is_empty() {
            step.to_string()
        } else {
            format!("{}+{step}", self.meta.kind)
        };
        if let (Value::Object(dst), Value::Object(src)) = (&mut self.meta.params, params) {
            dst.extend(src);
        }
    }

    /// Write amplitudes as little-endian complex64 (two f32 per sample) plus
    /// a `<path>.json` sidecar with the grid and provenance.
    pub fn write_raw(&self, path: &Path, extra: Value) -> Result<()> {
        let mut bytes = Vec::with_capacity(self.amps.len() * 8);
        for a in &self.amps {
            bytes.extend_from_slice(&(a.re as f32).to_le_bytes());
            bytes.extend_from_slice(&(a.im as f32).to_le_bytes());
        }
        fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
        let sidecar = RawSidecar {
            n: self.n,
            dx: self.dx,
            dtype: "complex64".into(),
            byte_order: "little".into(),
            meta: self.meta.clone(),
            extra,
        };
        crate::io::write_json(&sidecar_path(path), &sidecar)
    }

    pub fn read_raw(path: &Path) -> Result<Self> {
        let side = sidecar_path(path);
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let sidecar: RawSidecar = serde_json::from_str(&text)?;
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() != sidecar.n * sidecar.n * 8 {
            return Err(Error::Parse(format!(
                "{} bytes for a {}x{} complex64 grid",
                bytes.len(),
                sidecar.n,
                sidecar.n
            )));
        }
        let amps = bytes
            .chunks_exact(8)
            .map(|c| {
                let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
                Complex64::new(re as f64, im as f64)
            })
            .collect();
        Ok(Self {
            n: sidecar.n,
            dx: sidecar.dx,
            amps,
            meta: sidecar.meta,
        })
    }

    /// 16-bit PGM of the density, peak mapped to white.
    pub fn write_density_pgm(&self, path: &Path) -> Result<()> {
        write_pgm(path, self.n, self.n, &self.density(), 16)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawSidecar {
    n: usize,
    dx: f64,
    dtype: String,
    byte_order: String,
    meta: FieldMeta,
    #[serde(default)]
    extra: Value,
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

fn coord(i: usize, n: usize, dx: f64) -> f64 {
    (i as f64 - (n / 2) as f64) * dx
}

fn check_grid(n: usize, dx: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("grid needs at least 2 samples per side, got {n}")));
    }
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(Error::domain(format!("grid spacing must be positive, got {dx}")));
    }
    Ok(())
}

fn vortex(l: u32, x: f64, y: f64) -> Complex64 {
    if l == 0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::from_polar(1.0, l as f64 * y.atan2(x))
    }
}

/// `φ(ρ) e^{ilθ}` from a radial profile that covers the whole grid.
pub fn from_radial(profile: &RadialProfile, l: u32, n: usize, dx: f64) -> Result<Field2D> {
    let half_diagonal = (n / 2) as f64 * dx * 2f64.sqrt();
    if profile.rho_max < half_diagonal {
        return Err(Error::domain(format!(
            "profile ends at {} a0 but the grid reaches {half_diagonal} a0",
            profile.rho_max
        )));
    }
    radial_field(profile, l, n, dx, "radial")
}

/// `φ(ρ) e^{ilθ}` inside the profile's aperture `ρ ≤ rho_max`, zero outside.
pub fn from_radial_in_aperture(profile: &RadialProfile, l: u32, n: usize, dx: f64) -> Result<Field2D> {
    radial_field(profile, l, n, dx, "radial-aperture")
}

fn radial_field(profile: &RadialProfile, l: u32, n: usize, dx: f64, kind: &str) -> Result<Field2D> {
    let meta = FieldMeta {
        kind: kind.into(),
        params: json!({ "kt": profile.kt, "l": l, "gamma": profile.gamma, "rho_max": profile.rho_max }),
    };
    let edge = profile.rho_max;
    Field2D::from_fn(n, dx, meta, |x, y| {
        let r = x.hypot(y);
        if r > edge {
            return Complex64::new(0.0, 0.0);
        }
        vortex(l, x, y) * interp(&profile.rho, &profile.phi, r)
    })
}

/// Gaussian with density `e^{−r²/σ²}` for `l = 0`; for `l > 0` the
/// Laguerre-Gauss mode `ρ^l e^{−ρ²/(2σ²)} e^{ilθ}`.
pub fn gaussian(sigma: f64, l: u32, n: usize, dx: f64) -> Result<Field2D> {
    if !(sigma > 0.0) {
        return Err(Error::domain(format!("Gaussian width must be positive, got {sigma}")));
    }
    let meta = FieldMeta {
        kind: if l == 0 { "gaussian" } else { "laguerre-gauss" }.into(),
        params: json!({ "sigma": sigma, "l": l }),
    };
    Field2D::from_fn(n, dx, meta, |x, y| {
        let r2 = x * x + y * y;
        let radial = (r2.sqrt() / sigma).powi(l as i32) * (-r2 / (2.0 * sigma * sigma)).exp();
        vortex(l, x, y) * radial
    })
}

/// `J_l(kT ρ) e^{ilθ}` over the whole grid.
pub fn bessel(kt: f64, l: u32, n: usize, dx: f64) -> Result<Field2D> {
    if !(kt > 0.0) {
        return Err(Error::domain(format!("Bessel kT must be positive, got {kt}")));
    }
    let meta = FieldMeta {
        kind: "bessel".into(),
        params: json!({ "kt": kt, "l": l }),
    };
    Field2D::from_fn(n, dx, meta, |x, y| vortex(l, x, y) * bessel_j(l, kt * x.hypot(y)))
}

/// Hard circular cutoff at `radius`, then renormalize.
///
/// Radii at or beyond the half-diagonal leave the field unchanged; radii
/// beyond the full grid side are rejected as a configuration mistake.
pub fn apply_aperture(field: &Field2D, radius: f64) -> Result<Field2D> {
    let side = field.n as f64 * field.dx;
    if !(radius > 0.0) || radius > side {
        return Err(Error::domain(format!(
            "aperture radius {radius} a0 outside (0, {side}] for this grid"
        )));
    }
    let mut out = field.clone();
    let r2max = radius * radius;
    for i in 0..field.n {
        let x = field.coord(i);
        for j in 0..field.n {
            let y = field.coord(j);
            if x * x + y * y > r2max {
                out.amps[i * field.n + j] = Complex64::new(0.0, 0.0);
            }
        }
    }
    out.normalize()?;
    out.push_kind("aperture", json!({ "aperture_radius": radius }));
    Ok(out)
}

/// Circular complex Gaussian samples whose expected total power
/// `Σ|η|² dx²` equals `power`.
pub fn noise_sample(n: usize, dx: f64, power: f64, seed: u64) -> Vec<Complex64> {
    let sigma = (power / (n * n) as f64).sqrt() / dx;
    let per_quadrature = sigma / 2f64.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n * n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im) * per_quadrature
        })
        .collect()
}

/// Add uniform complex Gaussian noise carrying `ratio` times the field
/// power, then renormalize.
pub fn add_noise(field: &Field2D, ratio: f64, seed: u64) -> Result<Field2D> {
    if !(ratio >= 0.0 && ratio.is_finite()) {
        return Err(Error::domain(format!("noise ratio must be >= 0, got {ratio}")));
    }
    if ratio == 0.0 {
        return Ok(field.clone());
    }
    let noise = noise_sample(field.n, field.dx, ratio * field.norm(), seed);
    let mut out = field.clone();
    for (a, e) in out.amps.iter_mut().zip(noise) {
        *a += e;
    }
    out.normalize()?;
    out.push_kind("noise", json!({ "noise_ratio": ratio, "noise_seed": seed }));
    Ok(out)
}

/// Phase winding around the grid center along a circle of `radius`.
pub fn winding_number(field: &Field2D, radius: f64) -> i64 {
    let m = 720;
    let mut total = 0.0;
    let mut prev = field.sample(radius, 0.0).arg();
    for k in 1..=m {
        let t = 2.0 * PI * k as f64 / m as f64;
        let a = field.sample(radius * t.cos(), radius * t.sin()).arg();
        let mut d = a - prev;
        while d > PI {
            d -= 2.0 * PI;
        }
        while d < -PI {
            d += 2.0 * PI;
        }
        total += d;
        prev = a;
    }
    (total / (2.0 * PI)).round() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_zero;
    use crate::radial::solve_radial;

    fn second_moment(f: &Field2D) -> f64 {
        let mut m = 0.0;
        for i in 0..f.n {
            for j in 0..f.n {
                let (x, y) = (f.coord(i), f.coord(j));
                m += f.amps[i * f.n + j].norm_sqr() * (x * x + y * y);
            }
        }
        (m * f.dx * f.dx).sqrt()
    }

    #[test]
    fn constructors_are_normalized() {
        let p = solve_radial(0.05, 2, 0.0, 200.0, 1e-10).unwrap();
        let fields = [
            gaussian(3.0, 0, 64, 0.5).unwrap(),
            gaussian(3.0, 2, 64, 0.5).unwrap(),
            bessel(0.8, 1, 64, 0.5).unwrap(),
            from_radial(&p, 2, 64, 0.5).unwrap(),
            from_radial_in_aperture(&p, 2, 64, 0.5).unwrap(),
        ];
        for f in &fields {
            assert!((f.norm() - 1.0).abs() < 1e-12, "{}", f.meta.kind);
        }
    }

    #[test]
    fn gaussian_second_moment_is_sigma() {
        let f = gaussian(3.0, 0, 128, 0.25).unwrap();
        assert!((second_moment(&f) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn laguerre_gauss_has_dark_axis_and_unit_charge() {
        let f = gaussian(4.0, 1, 64, 0.5).unwrap();
        assert_eq!(f.amps[32 * 64 + 32].norm(), 0.0);
        assert_eq!(winding_number(&f, 3.0), 1);
    }

    #[test]
    fn real_profile_gives_real_field() {
        let p = solve_radial(0.05, 0, 1e-3, 200.0, 1e-8).unwrap();
        let f = from_radial(&p, 0, 64, 0.5).unwrap();
        assert!(f.amps.iter().all(|a| a.im.abs() < 1e-12));
    }

    #[test]
    fn from_radial_rejects_short_profile() {
        let p = solve_radial(0.05, 0, 0.0, 10.0, 1e-8).unwrap();
        assert!(from_radial(&p, 0, 64, 0.5).is_err());
    }

    #[test]
    fn vortex_charges() {
        for l in [1, 3] {
            let p = solve_radial(0.1, l, 0.0, 100.0, 1e-8).unwrap();
            let f = from_radial(&p, l, 64, 0.5).unwrap();
            assert_eq!(winding_number(&f, 8.0), l as i64);
            if l == 1 {
                assert!(f.amps[32 * 64 + 32].norm() < 1e-12);
            }
        }
        let b = bessel(0.5, 3, 64, 0.5).unwrap();
        assert_eq!(winding_number(&b, 6.0), 3);
    }

    #[test]
    fn bessel_first_zero() {
        let kt = 0.3;
        let f = bessel(kt, 0, 256, 0.1).unwrap();
        // scan along +x for the first density minimum
        let c = 128;
        let d: Vec<f64> = (c..256).map(|i| f.amps[i * 256 + c].norm_sqr()).collect();
        let i = (1..d.len() - 1).find(|&i| d[i] <= d[i - 1] && d[i] <= d[i + 1]).unwrap();
        assert!((i as f64 * 0.1 - bessel_zero(0, 1) / kt).abs() <= 0.1);
    }

    #[test]
    fn aperture_rules() {
        let f = gaussian(5.0, 0, 64, 0.5).unwrap();
        assert!(apply_aperture(&f, 33.0).is_err());
        let same = apply_aperture(&f, 16.0 * 2f64.sqrt() + 0.01).unwrap();
        for (a, b) in same.amps.iter().zip(&f.amps) {
            assert!((a - b).norm() < 1e-15);
        }
        let once = apply_aperture(&f, 6.0).unwrap();
        let twice = apply_aperture(&once, 6.0).unwrap();
        for (a, b) in once.amps.iter().zip(&twice.amps) {
            assert!((a - b).norm() < 1e-15);
        }
        assert_eq!(once.meta.kind, "gaussian+aperture");
    }

    #[test]
    fn uniform_disk_width() {
        let disk = Field2D::from_fn(512, 0.05, FieldMeta::default(), |_, _| Complex64::new(1.0, 0.0)).unwrap();
        let cut = apply_aperture(&disk, 10.0).unwrap();
        assert!((second_moment(&cut) - 10.0 / 2f64.sqrt()).abs() < 0.01);
    }

    #[test]
    fn bessel_aperture_at_tenth_zero_keeps_ten_lobes() {
        let kt = 0.5;
        let radius = bessel_zero(0, 10) / kt + 0.01;
        let f = apply_aperture(&bessel(kt, 0, 256, 0.5).unwrap(), radius).unwrap();
        // count sign changes of the real amplitude along +x inside the aperture
        let c = 128;
        let row: Vec<f64> = (c..256).map(|i| f.amps[i * 256 + c].re).filter(|v| *v != 0.0).collect();
        let changes = row.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
        assert_eq!(changes + 1, 10);
    }

    #[test]
    fn noise_power_and_determinism() {
        let f = gaussian(3.0, 0, 256, 0.25).unwrap();
        let eta = noise_sample(256, 0.25, 1.0, 11);
        let power: f64 = eta.iter().map(|e| e.norm_sqr()).sum::<f64>() * 0.25 * 0.25;
        assert!((power - 1.0).abs() < 0.01, "{power}");
        assert_eq!(add_noise(&f, 0.0, 3).unwrap(), f);
        let a = add_noise(&f, 1.0, 5).unwrap();
        let b = add_noise(&f, 1.0, 5).unwrap();
        assert_eq!(a.amps, b.amps);
        assert!((a.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn raw_round_trip() {
        let f = bessel(0.5, 1, 16, 0.5).unwrap();
        let dir = std::env::temp_dir().join(format!("ebeam-raw-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.c64");
        f.write_raw(&path, json!({ "note": "test" })).unwrap();
        let g = Field2D::read_raw(&path).unwrap();
        assert_eq!(g.n, 16);
        assert_eq!(g.meta, f.meta);
        for (a, b) in f.amps.iter().zip(&g.amps) {
            assert!((a - b).norm() < 1e-6 * f.amps.iter().fold(0.0_f64, |m, v| m.max(v.norm())));
        }
        fs::remove_dir_all(dir).unwrap();
    }
}
