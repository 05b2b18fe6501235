//! Binary holographic masks and their simulated far field.
//!
//! The mask is written in the Fourier plane of the wanted output: the
//! hologram records `T = |F{t} + e^{i kh u_x}|²`, where `t = φ(ρ)e^{ilθ}` is the
//! target and `u` the mask-plane coordinate in spatial-frequency units (a₀⁻¹).
//! Transforming the binarized `T` gives a diffraction plane with the zeroth
//! order at the center and the ±1 orders displaced by `∓kh` (a₀) along x. The
//! +1 order carries the point-reflected target `t(−x)`, the −1 order its
//! mirror conjugate `t*(x)`.
//!
//! Grids are `n x n` with reconstruction-plane spacing `dx`; one mask pixel is
//! a spatial-frequency step `du = 2π/(n dx)`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::fft::{fftshift, is_power_of_two, Fft2};
use crate::field::{from_radial_in_aperture, winding_number, Field2D, FieldMeta};
use crate::io::{write_json, write_pbm};
use crate::params::bohr_to_meters;
use crate::radial::RadialProfile;

/// Smallest carrier offset in units of the target radius. The zeroth order
/// spans twice the target radius, the first orders one radius.
pub const MIN_CARRIER_RATIO: f64 = 3.0;
pub const DEFAULT_CARRIER_RATIO: f64 = 4.0;
/// Circles whose mean fringe amplitude is below this fraction of the best
/// circle are not counted.
const MIN_CIRCLE_LEVEL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "value")]
pub enum Threshold {
    /// Median of `T` over the mask aperture.
    Median,
    /// Quantile of `T` over the mask aperture, in `[0, 1)`.
    Quantile(f64),
    /// Absolute level of `T` (reference amplitude 1, `max|F{t}| = 1`).
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskSpec {
    pub l: u32,
    pub n: usize,
    /// Reconstruction-plane spacing in a₀.
    pub dx: f64,
    /// Carrier in a₀; defaults to [`DEFAULT_CARRIER_RATIO`] target radii.
    pub kh: Option<f64>,
    pub threshold: Threshold,
    /// Mask aperture in a₀⁻¹; defaults to [`spectral_support`].
    pub rho_max: Option<f64>,
}

impl MaskSpec {
    /// Target radius at one twentieth of the grid side.
    pub fn for_profile(profile: &RadialProfile, l: u32, n: usize) -> Self {
        Self {
            l,
            n,
            dx: 20.0 * profile.rho_max / n as f64,
            kh: None,
            threshold: Threshold::Median,
            rho_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskBitmap {
    pub n: usize,
    pub dx: f64,
    /// Carrier in a₀, snapped to a whole number of reconstruction pixels.
    pub kh: f64,
    /// Binarization level of `T`.
    pub threshold: f64,
    /// Aperture radius in a₀⁻¹.
    pub rho_max: f64,
    pub l: u32,
    /// Row-major, `true` = transmitting.
    pub bits: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskManifest {
    pub n: usize,
    pub l: u32,
    pub dx_nm: f64,
    pub kh_nm: f64,
    pub carrier_pixels: usize,
    pub threshold: f64,
    pub rho_max_per_nm: f64,
    pub rho_max_pixels: f64,
    pub open_fraction: f64,
}

impl MaskBitmap {
    pub fn du(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.dx)
    }

    pub fn carrier_pixels(&self) -> usize {
        (self.kh / self.dx).round() as usize
    }

    pub fn open_fraction(&self) -> f64 {
        self.bits.iter().filter(|b| **b).count() as f64 / self.bits.len() as f64
    }

    pub fn manifest(&self) -> MaskManifest {
        let nm = |a0: f64| bohr_to_meters(a0) * 1e9;
        MaskManifest {
            n: self.n,
            l: self.l,
            dx_nm: nm(self.dx),
            kh_nm: nm(self.kh),
            carrier_pixels: self.carrier_pixels(),
            threshold: self.threshold,
            rho_max_per_nm: 1.0 / nm(1.0 / self.rho_max),
            rho_max_pixels: self.rho_max / self.du(),
            open_fraction: self.open_fraction(),
        }
    }

    /// `<stem>.pbm` plus the `<stem>.json` manifest.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        write_pbm(&dir.join(format!("{stem}.pbm")), self.n, self.n, &self.bits)?;
        write_json(&dir.join(format!("{stem}.json")), &self.manifest())
    }
}

/// Largest transverse wavenumber the profile reaches, `√(−U)` at its edge.
pub fn spectral_support(profile: &RadialProfile) -> f64 {
    profile.u.last().map_or(0.0, |u| (-u).max(0.0).sqrt())
}

/// The continuous hologram `T` on the mask grid, kept for re-binarization.
pub struct Hologram {
    spec_l: u32,
    n: usize,
    dx: f64,
    kh: f64,
    rho_max: f64,
    /// Target on the reconstruction grid (unit norm).
    pub target: Field2D,
    intensity: Vec<f64>,
    inside: Vec<bool>,
    sorted: Vec<f64>,
}

impl Hologram {
    pub fn new(profile: &RadialProfile, spec: &MaskSpec) -> Result<Self> {
        let (n, dx) = (spec.n, spec.dx);
        if !is_power_of_two(n) || !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::domain(format!("invalid mask grid n = {n}, dx = {dx}")));
        }
        let radius = profile.rho_max;
        let half = (n / 2) as f64 * dx;
        let kh_req = spec.kh.unwrap_or(DEFAULT_CARRIER_RATIO * radius);
        let pixels = (kh_req / dx).round();
        let kh = pixels * dx;
        if !(kh >= MIN_CARRIER_RATIO * radius) {
            return Err(Error::config(format!(
                "carrier kh = {kh_req} a0 lets the first orders overlap the zeroth order \
                 (need at least {} a0 for target radius {radius} a0)",
                MIN_CARRIER_RATIO * radius
            )));
        }
        if kh + radius >= half {
            return Err(Error::config(format!(
                "first orders at {kh} a0 with radius {radius} a0 leave the {half} a0 half-grid"
            )));
        }
        let du = 2.0 * PI / (n as f64 * dx);
        let rho_max = spec.rho_max.unwrap_or_else(|| spectral_support(profile));
        if !(rho_max > 0.0) {
            return Err(Error::config(format!("mask aperture must be positive, got {rho_max} a0^-1")));
        }

        let target = from_radial_in_aperture(profile, spec.l, n, dx)?;
        let mut spectrum = target.amps.clone();
        centered_forward(&mut spectrum, n);
        let peak = spectrum.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let c = n as f64 / 2.0;
        let mut intensity = Vec::with_capacity(n * n);
        let mut inside = Vec::with_capacity(n * n);
        for i in 0..n {
            let reference = Complex64::from_polar(1.0, 2.0 * PI * (i as f64 - c) * pixels / n as f64);
            for j in 0..n {
                let f = spectrum[i * n + j] / peak;
                intensity.push((f + reference).norm_sqr());
                let r = (i as f64 - c).hypot(j as f64 - c) * du;
                inside.push(r < rho_max);
            }
        }
        let mut sorted: Vec<f64> = intensity.iter().zip(&inside).filter(|(_, m)| **m).map(|(t, _)| *t).collect();
        sorted.sort_by(f64::total_cmp);
        if sorted.is_empty() {
            return Err(Error::config("mask aperture contains no pixels"));
        }
        Ok(Self { spec_l: spec.l, n, dx, kh, rho_max, target, intensity, inside, sorted })
    }

    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }

    /// Lower quantile of `T` over the aperture.
    pub fn quantile(&self, q: f64) -> f64 {
        let idx = (q.clamp(0.0, 1.0) * (self.sorted.len() - 1) as f64).floor() as usize;
        self.sorted[idx]
    }

    pub fn level(&self, threshold: Threshold) -> Result<f64> {
        match threshold {
            Threshold::Median => Ok(self.quantile(0.5)),
            Threshold::Quantile(q) if (0.0..1.0).contains(&q) => Ok(self.quantile(q)),
            Threshold::Quantile(q) => Err(Error::domain(format!("threshold quantile {q} outside [0, 1)"))),
            Threshold::Value(v) if v.is_finite() => Ok(v),
            Threshold::Value(v) => Err(Error::domain(format!("threshold {v} is not finite"))),
        }
    }

    pub fn binarize(&self, threshold: Threshold) -> Result<MaskBitmap> {
        let level = self.level(threshold)?;
        let bits = self.intensity.iter().zip(&self.inside).map(|(t, m)| *m && *t > level).collect();
        Ok(MaskBitmap {
            n: self.n,
            dx: self.dx,
            kh: self.kh,
            threshold: level,
            rho_max: self.rho_max,
            l: self.spec_l,
            bits,
        })
    }
}

fn centered_forward(data: &mut [Complex64], n: usize) {
    fftshift(data, n);
    Fft2::new(n).forward(data);
    fftshift(data, n);
}

pub fn synthesize_mask(profile: &RadialProfile, spec: &MaskSpec) -> Result<MaskBitmap> {
    Hologram::new(profile, spec)?.binarize(spec.threshold)
}

/// Diffraction plane of the mask under plane-wave illumination, normalized
/// to unit power on the reconstruction grid.
pub fn far_field(mask: &MaskBitmap) -> Result<Field2D> {
    let n = mask.n;
    let mut amps: Vec<Complex64> = mask.bits.iter().map(|b| Complex64::new(if *b { 1.0 } else { 0.0 }, 0.0)).collect();
    centered_forward(&mut amps, n);
    let mut field = Field2D {
        n,
        dx: mask.dx,
        amps,
        meta: FieldMeta {
            kind: "far-field".into(),
            params: json!({ "kh": mask.kh, "l": mask.l, "threshold": mask.threshold }),
        },
    };
    field.normalize()?;
    Ok(field)
}

/// Cut a disk of `radius` around the `which` = ±1 order and move it to the
/// grid center. Everything outside the disk is zero.
pub fn extract_order(far: &Field2D, which: i32, kh: f64, radius: f64) -> Result<Field2D> {
    if which != 1 && which != -1 {
        return Err(Error::domain(format!("order must be +1 or -1, got {which}")));
    }
    let (n, dx) = (far.n, far.dx);
    let shift = (kh / dx).round() as i64;
    let r_px = radius / dx;
    if !(r_px > 0.0) || shift as f64 <= r_px {
        return Err(Error::config(format!(
            "order windows of radius {radius} a0 overlap at carrier {kh} a0"
        )));
    }
    let c = (n / 2) as i64;
    if shift as f64 + r_px >= c as f64 {
        return Err(Error::config("order window leaves the diffraction plane"));
    }
    // +1 sits at −kh along x
    let offset = -(which as i64) * shift;
    let mut out = Field2D::zeros(n, dx);
    out.meta = FieldMeta {
        kind: "diffraction-order".into(),
        params: json!({ "order": which, "kh": kh, "radius": radius }),
    };
    let r2 = r_px * r_px;
    for i in 0..n as i64 {
        for j in 0..n as i64 {
            let (di, dj) = ((i - c) as f64, (j - c) as f64);
            if di * di + dj * dj <= r2 {
                let src = ((i + offset) as usize) * n + j as usize;
                out.amps[(i as usize) * n + j as usize] = far.amps[src];
            }
        }
    }
    Ok(out)
}

/// Normalized cross-correlation of `|order(x)|` with `|target(−x)|` over a
/// disk of `radius`; 1 for a perfect amplitude match up to scale.
pub fn fidelity(order: &Field2D, target: &Field2D, radius: f64) -> Result<f64> {
    let n = order.n;
    if target.n != n || (target.dx - order.dx).abs() > 1e-12 * order.dx {
        return Err(Error::domain("order and target grids differ"));
    }
    let r2 = (radius / order.dx).powi(2);
    let c = (n / 2) as f64;
    let (mut cross, mut ee, mut tt) = (0.0, 0.0, 0.0);
    for i in 1..n {
        for j in 1..n {
            if (i as f64 - c).powi(2) + (j as f64 - c).powi(2) > r2 {
                continue;
            }
            let e = order.amps[i * n + j].norm();
            let t = target.amps[(n - i) * n + (n - j)].norm();
            cross += e * t;
            ee += e * e;
            tt += t * t;
        }
    }
    if ee == 0.0 || tt == 0.0 {
        return Ok(0.0);
    }
    Ok(cross / (ee * tt).sqrt())
}

/// Fringe field of the mask: the +1 order cut from the diffraction plane and
/// transformed back, on the mask pixel grid (`dx` = 1 pixel). Its phase is
/// the fringe phase less the carrier, so fork dislocations appear as phase
/// windings about the mask center.
pub fn fringe_field(mask: &MaskBitmap) -> Result<Field2D> {
    let far = far_field(mask)?;
    let half = (mask.n / 2) as f64 * mask.dx;
    let window = (mask.kh / MIN_CARRIER_RATIO).min(half - mask.kh - 2.0 * mask.dx);
    let order = extract_order(&far, 1, mask.kh, window)?;
    let mut amps = order.amps;
    fftshift(&mut amps, mask.n);
    Fft2::new(mask.n).inverse(&mut amps);
    fftshift(&mut amps, mask.n);
    Ok(Field2D { n: mask.n, dx: 1.0, amps, meta: FieldMeta { kind: "fringe-field".into(), params: json!({}) } })
}

/// Charge of the fork in the mask fringes: the most common winding of the
/// fringe field over circles from 25% to 95% of the mask aperture. Circles
/// where the field is weaker than `MIN_CIRCLE_LEVEL` of the best circle
/// carry no fringes and are skipped.
pub fn fork_charge(mask: &MaskBitmap) -> Result<i64> {
    let g = fringe_field(mask)?;
    let aperture_px = (mask.rho_max / mask.du()).min((mask.n / 2) as f64 - 2.0);
    let mut circles: Vec<(i64, f64)> = Vec::new();
    for k in 10..=38 {
        let r = aperture_px * k as f64 / 40.0;
        if r < 1.0 {
            continue;
        }
        let m = 360;
        let level = (0..m)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / m as f64;
                g.sample(r * t.cos(), r * t.sin()).norm()
            })
            .sum::<f64>()
            / m as f64;
        circles.push((winding_number(&g, r), level));
    }
    let best_level = circles.iter().map(|c| c.1).fold(0.0, f64::max);
    if !(best_level > 0.0) {
        return Err(Error::domain("mask has no fringes inside its aperture"));
    }
    let mut counts: Vec<i64> =
        circles.iter().filter(|c| c.1 >= MIN_CIRCLE_LEVEL * best_level).map(|c| c.0).collect();
    counts.sort_unstable();
    let mut best = (counts[0], 0);
    let mut k = 0;
    while k < counts.len() {
        let run = counts[k..].iter().take_while(|c| **c == counts[k]).count();
        if run > best.1 {
            best = (counts[k], run);
        }
        k += run;
    }
    Ok(best.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskReport {
    pub threshold: f64,
    pub threshold_quantile: Option<f64>,
    pub fidelity_plus: f64,
    pub fidelity_minus: f64,
    /// Largest `|E₋₁(x) − E₊₁*(−x)|` relative to the peak of the +1 order.
    pub mirror_mismatch: f64,
    pub winding_plus: i64,
    pub fork_charge: i64,
    pub zero_order_power: f64,
    pub first_order_power: f64,
}

/// Evaluate a mask against its target: both first orders, mirror symmetry,
/// winding and fork count.
pub fn evaluate(mask: &MaskBitmap, target: &Field2D, radius: f64) -> Result<(MaskReport, Field2D, Field2D, Field2D)> {
    let far = far_field(mask)?;
    let plus = extract_order(&far, 1, mask.kh, radius)?;
    let minus = extract_order(&far, -1, mask.kh, radius)?;
    let n = mask.n;
    let peak = plus.amps.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let mut mismatch: f64 = 0.0;
    for i in 1..n {
        for j in 1..n {
            let mirrored = plus.amps[(n - i) * n + (n - j)].conj();
            mismatch = mismatch.max((minus.amps[i * n + j] - mirrored).norm());
        }
    }
    let zero = extract_centered_power(&far, 2.0 * radius);
    let first = plus.norm();
    let report = MaskReport {
        threshold: mask.threshold,
        threshold_quantile: None,
        fidelity_plus: fidelity(&plus, target, radius)?,
        fidelity_minus: fidelity_conjugate(&minus, target, radius)?,
        mirror_mismatch: if peak > 0.0 { mismatch / peak } else { f64::INFINITY },
        winding_plus: winding_number(&plus, winding_radius(target)?),
        fork_charge: fork_charge(mask)?,
        zero_order_power: zero,
        first_order_power: first,
    };
    Ok((report, far, plus, minus))
}

/// Half the main-lobe radius of the target: inside the lobe for `l = 0`
/// and on its bright ring otherwise.
fn winding_radius(target: &Field2D) -> Result<f64> {
    let r = crate::metrics::main_lobe_radius(target)?;
    Ok(if r.is_finite() { 0.5 * r } else { 0.25 * target.n as f64 * target.dx })
}

fn fidelity_conjugate(minus: &Field2D, target: &Field2D, radius: f64) -> Result<f64> {
    // |t*(x)| = |t(−(−x))|: compare against the reflected target
    let mut reflected = target.clone();
    let n = target.n;
    for i in 1..n {
        for j in 1..n {
            reflected.amps[i * n + j] = target.amps[(n - i) * n + (n - j)];
        }
    }
    fidelity(minus, &reflected, radius)
}

fn extract_centered_power(far: &Field2D, radius: f64) -> f64 {
    let n = far.n;
    let c = (n / 2) as f64;
    let r2 = (radius / far.dx).powi(2);
    let mut p = 0.0;
    for i in 0..n {
        for j in 0..n {
            if (i as f64 - c).powi(2) + (j as f64 - c).powi(2) <= r2 {
                p += far.amps[i * n + j].norm_sqr();
            }
        }
    }
    p * far.dx * far.dx
}

/// Scan threshold quantiles from 0.5 to 0.95 and keep the one whose +1 order
/// best matches the target amplitude.
pub fn best_threshold(hologram: &Hologram, radius: f64) -> Result<(f64, MaskBitmap, f64)> {
    let mut best: Option<(f64, MaskBitmap, f64)> = None;
    for k in 0..=18 {
        let q = 0.5 + 0.025 * k as f64;
        let mask = hologram.binarize(Threshold::Quantile(q))?;
        let far = far_field(&mask)?;
        let plus = extract_order(&far, 1, mask.kh, radius)?;
        let score = fidelity(&plus, &hologram.target, radius)?;
        if best.as_ref().is_none_or(|b| score > b.2) {
            best = Some((q, mask, score));
        }
    }
    Ok(best.expect("non-empty scan"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::solve_radial;

    fn grating(n: usize, period: usize) -> MaskBitmap {
        let bits = (0..n * n).map(|k| (k / n) % period < period / 2).collect();
        MaskBitmap { n, dx: 1.0, kh: 0.0, threshold: 0.0, rho_max: 1.0, l: 0, bits }
    }

    fn small_profile(l: u32) -> RadialProfile {
        solve_radial(0.3, l, 0.5, 30.0, 1e-10).unwrap()
    }

    #[test]
    fn synthetic_fork_gratings_report_their_charge() {
        let (n, pixels) = (256usize, 40.0);
        let c = (n / 2) as f64;
        for q in [-2i64, 0, 1, 3] {
            let bits = (0..n * n)
                .map(|k| {
                    let (x, y) = ((k / n) as f64 - c, (k % n) as f64 - c);
                    (2.0 * PI * x * pixels / n as f64 - q as f64 * y.atan2(x)).cos() > 0.0
                })
                .collect();
            let du = 2.0 * PI / n as f64;
            let mask = MaskBitmap { n, dx: 1.0, kh: pixels, threshold: 0.0, rho_max: 100.0 * du, l: 0, bits };
            assert_eq!(fork_charge(&mask).unwrap(), q);
        }
    }

    #[test]
    fn all_ones_mask_gives_a_single_spot() {
        let n = 32;
        let mut mask = grating(n, 2);
        mask.bits = vec![true; n * n];
        let far = far_field(&mask).unwrap();
        let c = n / 2;
        let center = far.amps[c * n + c].norm_sqr() * far.dx * far.dx;
        assert!((center - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_grating_has_odd_orders_falling_as_one_over_m() {
        let (n, period) = (256, 64);
        let far = far_field(&grating(n, period)).unwrap();
        let c = n / 2;
        let step = n / period;
        let amp = |m: i64| far.amps[((c as i64 + m * step as i64) as usize) * n + c].norm();
        let first = amp(1);
        for m in [2, 4, 6] {
            assert!(amp(m) < 1e-12 * first, "order {m}");
        }
        // discrete grating: |sin(πm/2) / sin(πm/P)| relative to m = 1
        let p = period as f64;
        for m in [3, 5, 7] {
            let mf = m as f64;
            let oracle = ((PI * mf / 2.0).sin() / (PI * mf / p).sin()).abs() / (1.0 / (PI / p).sin());
            assert!((amp(m) / first - oracle).abs() < 1e-12, "order {m}");
            assert!((amp(m) / first - 1.0 / mf).abs() < 0.03 / mf);
        }
        for k in 0..n {
            if k % step != 0 {
                assert!(far.amps[k * n + c].norm() < 1e-12 * first);
            }
        }
    }

    #[test]
    fn point_target_gives_straight_fringes_and_a_point_order() {
        // a profile narrower than one pixel acts as a delta, so T = 2 + 2cos
        // along x; the level 2.5 keeps one row per four-pixel fringe
        let p = small_profile(0);
        let spec = MaskSpec { l: 0, n: 64, dx: 40.0, kh: Some(16.0 * 40.0), threshold: Threshold::Value(2.5), rho_max: Some(1e9) };
        let mask = synthesize_mask(&p, &spec).unwrap();
        let n = spec.n;
        for i in 0..n {
            let row = &mask.bits[i * n..(i + 1) * n];
            assert!(row.iter().all(|b| *b == row[0]), "row {i} not uniform");
        }
        for i in 0..n {
            assert_eq!(mask.bits[i * n], i % 4 == 0, "row {i}");
        }
        let far = far_field(&mask).unwrap();
        let plus = extract_order(&far, 1, mask.kh, 2.0 * spec.dx).unwrap();
        let c = n / 2;
        let center = plus.amps[c * n + c].norm_sqr();
        let rest: f64 = plus.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() - center;
        assert!(rest < 1e-24 * center);
    }

    #[test]
    fn bits_are_closed_outside_the_aperture() {
        let p = small_profile(1);
        let mut spec = MaskSpec::for_profile(&p, 1, 128);
        spec.rho_max = Some(0.5 * 2.0 * PI / spec.dx);
        let mask = synthesize_mask(&p, &spec).unwrap();
        let du = mask.du();
        let c = 64.0;
        for i in 0..128 {
            for j in 0..128 {
                if (i as f64 - c).hypot(j as f64 - c) * du >= mask.rho_max {
                    assert!(!mask.bits[i * 128 + j]);
                }
            }
        }
        assert!(mask.open_fraction() > 0.0);
    }

    #[test]
    fn slow_carrier_is_a_configuration_error() {
        let p = small_profile(0);
        let mut spec = MaskSpec::for_profile(&p, 0, 128);
        spec.kh = Some(2.5 * p.rho_max);
        assert!(matches!(synthesize_mask(&p, &spec), Err(Error::Config(_))));
        spec.kh = Some(9.5 * p.rho_max);
        assert!(matches!(synthesize_mask(&p, &spec), Err(Error::Config(_))));
    }

    #[test]
    fn overlapping_windows_are_rejected() {
        let far = Field2D::zeros(64, 1.0);
        assert!(extract_order(&far, 1, 5.0, 6.0).is_err());
        assert!(extract_order(&far, 2, 20.0, 6.0).is_err());
        assert!(extract_order(&far, 1, 28.0, 6.0).is_err());
        assert!(extract_order(&far, -1, 20.0, 6.0).is_ok());
    }

    #[test]
    fn far_field_is_hermitian_and_orders_are_mirror_conjugates() {
        let p = small_profile(1);
        let spec = MaskSpec::for_profile(&p, 1, 256);
        let mask = synthesize_mask(&p, &spec).unwrap();
        let far = far_field(&mask).unwrap();
        let n = far.n;
        for i in 1..n {
            for j in 1..n {
                let d = far.amps[i * n + j] - far.amps[(n - i) * n + (n - j)].conj();
                assert!(d.norm() < 1e-12);
            }
        }
        let hologram = Hologram::new(&p, &spec).unwrap();
        let (report, ..) = evaluate(&mask, &hologram.target, p.rho_max).unwrap();
        assert!(report.mirror_mismatch < 1e-12);
        assert!((report.fidelity_plus - report.fidelity_minus).abs() < 1e-12);
    }

    #[test]
    fn vortex_masks_transfer_their_charge() {
        for l in [0u32, 1, 3] {
            let p = small_profile(l);
            let spec = MaskSpec::for_profile(&p, l, 512);
            let mask = synthesize_mask(&p, &spec).unwrap();
            let hologram = Hologram::new(&p, &spec).unwrap();
            let (report, ..) = evaluate(&mask, &hologram.target, p.rho_max).unwrap();
            assert_eq!(report.fork_charge, l as i64, "fork count for l = {l}");
            assert_eq!(report.winding_plus, l as i64, "winding for l = {l}");
            assert!(report.fidelity_plus > 0.8, "{l}: {}", report.fidelity_plus);
            let (_, best, _) = best_threshold(&hologram, p.rho_max).unwrap();
            let (report, ..) = evaluate(&best, &hologram.target, p.rho_max).unwrap();
            assert_eq!(report.fork_charge, l as i64, "optimized fork count for l = {l}");
        }
    }

    #[test]
    fn quantile_threshold_brackets_the_median() {
        let p = small_profile(0);
        let h = Hologram::new(&p, &MaskSpec::for_profile(&p, 0, 64)).unwrap();
        let (a, b, c) = (h.quantile(0.25), h.quantile(0.5), h.quantile(0.75));
        assert!(a <= b && b <= c);
        assert_eq!(h.level(Threshold::Median).unwrap(), b);
        assert!(h.level(Threshold::Quantile(1.5)).is_err());
        let open = h.binarize(Threshold::Median).unwrap().open_fraction();
        let tight = h.binarize(Threshold::Quantile(0.75)).unwrap().open_fraction();
        assert!(tight < open);
    }

    #[test]
    fn manifest_reports_physical_units() {
        let p = small_profile(0);
        let mask = synthesize_mask(&p, &MaskSpec::for_profile(&p, 0, 64)).unwrap();
        let m = mask.manifest();
        assert!((m.dx_nm - bohr_to_meters(mask.dx) * 1e9).abs() < 1e-15);
        assert_eq!(m.carrier_pixels, (mask.kh / mask.dx).round() as usize);
        assert!((m.rho_max_pixels * mask.du() - mask.rho_max).abs() < 1e-9 * mask.rho_max);
    }
}
