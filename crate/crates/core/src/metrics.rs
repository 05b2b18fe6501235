//! Figures of merit: main-lobe radius, second-moment width, non-diffraction
//! range and main-lobe current.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field2D;
use crate::io::{format_number, write_csv};

/// Minimum depth of a lobe-separating minimum, relative to the peak.
pub const MIN_PROMINENCE: f64 = 0.01;
/// A separating minimum must also drop to at most this fraction of the peak.
pub const MAX_MINIMUM_LEVEL: f64 = 0.5;

/// Azimuthal average of the density in bins of width `dx` centered on the
/// axis. Returns `(radius, mean density)` for every non-empty bin.
pub fn azimuthal_average(field: &Field2D) -> (Vec<f64>, Vec<f64>) {
    let n = field.n;
    let nbins = (n as f64 * std::f64::consts::FRAC_1_SQRT_2).ceil() as usize + 2;
    let mut sum = vec![0.0; nbins];
    let mut count = vec![0usize; nbins];
    for i in 0..n {
        let x = field.coord(i) / field.dx;
        for j in 0..n {
            let y = field.coord(j) / field.dx;
            let b = (x.hypot(y) + 0.5) as usize;
            sum[b] += field.amps[i * n + j].norm_sqr();
            count[b] += 1;
        }
    }
    let mut r = Vec::new();
    let mut avg = Vec::new();
    for b in 0..nbins {
        if count[b] > 0 {
            r.push(b as f64 * field.dx);
            avg.push(sum[b] / count[b] as f64);
        }
    }
    (r, avg)
}

/// First qualifying local minimum of a radial density beyond its global
/// maximum, or `None`.
pub fn first_lobe_minimum(r: &[f64], avg: &[f64]) -> Option<f64> {
    let (imax, peak) = avg
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    if !(peak > 0.0) {
        return None;
    }
    let len = avg.len();
    for j in imax + 1..len.saturating_sub(1) {
        if !(avg[j] <= avg[j - 1] && avg[j] < avg[j + 1]) {
            continue;
        }
        let mut k = j + 1;
        while k + 1 < len && avg[k + 1] >= avg[k] {
            k += 1;
        }
        let prominence = peak.min(avg[k]) - avg[j];
        if prominence >= MIN_PROMINENCE * peak && avg[j] <= MAX_MINIMUM_LEVEL * peak {
            return Some(r[j]);
        }
    }
    None
}

/// Main-lobe radius in a₀; `+∞` for profiles without a separating minimum.
pub fn main_lobe_radius(field: &Field2D) -> Result<f64> {
    let (r, avg) = azimuthal_average(field);
    if avg.iter().all(|v| *v == 0.0) {
        return Err(Error::domain("main lobe of an empty field"));
    }
    Ok(first_lobe_minimum(&r, &avg).unwrap_or(f64::INFINITY))
}

/// Second-moment width about the axis over `r ≤ radius` (whole grid for
/// infinite radius), in a₀.
pub fn width_within(field: &Field2D, radius: f64) -> Result<f64> {
    let (m0, m2) = moments_within(field, radius);
    if !(m0 > 0.0) {
        return Err(Error::domain("zero density inside the main lobe"));
    }
    Ok((m2 / m0).sqrt())
}

/// Effective width over the main lobe, in a₀.
pub fn effective_width(field: &Field2D) -> Result<f64> {
    width_within(field, main_lobe_radius(field)?)
}

/// Fraction of the field's power inside `r ≤ radius`.
pub fn fraction_within(field: &Field2D, radius: f64) -> f64 {
    let (m0, _) = moments_within(field, radius);
    let total: f64 = field.amps.iter().map(|a| a.norm_sqr()).sum();
    if total > 0.0 {
        m0 / total
    } else {
        0.0
    }
}

/// Current carried inside the main lobe.
pub fn main_lobe_current(field: &Field2D, total_current: f64) -> Result<f64> {
    if !(total_current >= 0.0) {
        return Err(Error::domain(format!("current must be >= 0, got {total_current}")));
    }
    Ok(total_current * fraction_within(field, main_lobe_radius(field)?))
}

fn moments_within(field: &Field2D, radius: f64) -> (f64, f64) {
    let n = field.n;
    let r2max = radius * radius;
    let (mut m0, mut m2) = (0.0, 0.0);
    for i in 0..n {
        let x = field.coord(i);
        for j in 0..n {
            let y = field.coord(j);
            let r2 = x * x + y * y;
            if r2 <= r2max {
                let d = field.amps[i * n + j].norm_sqr();
                m0 += d;
                m2 += d * r2;
            }
        }
    }
    (m0, m2)
}

/// Tracks the main-lobe radius along a propagation. When no qualifying
/// minimum exists the previous radius is reused.
#[derive(Debug, Clone, Default)]
pub struct LobeTracker {
    previous: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    /// All lengths in a₀.
    pub lobe_radius: f64,
    pub width: f64,
    pub lobe_fraction: f64,
    pub peak_density: f64,
}

impl LobeTracker {
    pub fn measure(&mut self, field: &Field2D) -> Result<Snapshot> {
        let (r, avg) = azimuthal_average(field);
        if avg.iter().all(|v| *v == 0.0) {
            return Err(Error::domain("metrics of an empty field"));
        }
        let radius = match first_lobe_minimum(&r, &avg) {
            Some(found) => found,
            None => self.previous.unwrap_or(f64::INFINITY),
        };
        self.previous = Some(radius);
        let width = width_within(field, radius)?;
        let peak_density = field.amps.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
        Ok(Snapshot {
            lobe_radius: radius,
            width,
            lobe_fraction: fraction_within(field, radius),
            peak_density,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PropagationTrace {
    /// Propagation distance in meters.
    pub z: Vec<f64>,
    /// Effective width in meters.
    pub width: Vec<f64>,
    pub lobe_fraction: Vec<f64>,
    /// Main-lobe radius in meters (`inf` for lobe-free beams).
    pub lobe_radius: Vec<f64>,
    /// Peak of `|ψ|²` in m⁻² for a unit-norm beam.
    pub peak_density: Vec<f64>,
    pub initial_width: f64,
    /// Last distance reached, in meters.
    pub z_max: f64,
}

impl PropagationTrace {
    pub fn push(&mut self, z: f64, width: f64, lobe_fraction: f64, lobe_radius: f64, peak_density: f64) {
        if self.z.is_empty() {
            self.initial_width = width;
        }
        self.z.push(z);
        self.width.push(width);
        self.lobe_fraction.push(lobe_fraction);
        self.lobe_radius.push(lobe_radius);
        self.peak_density.push(peak_density);
        self.z_max = z;
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<f64>> = (0..self.len())
            .map(|i| {
                vec![
                    self.z[i],
                    self.width[i],
                    self.lobe_fraction[i],
                    self.peak_density[i],
                    self.lobe_radius[i],
                ]
            })
            .collect();
        write_csv(
            path,
            &["z[m]", "effective_width[m]", "main_lobe_current_fraction", "peak_density[1/m^2]", "main_lobe_radius[m]"],
            &rows,
        )
    }

    /// Parse the CSV written by [`PropagationTrace::write_csv`].
    pub fn read_csv(text: &str) -> Result<Self> {
        let mut trace = PropagationTrace::default();
        for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            let cols: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{e} in {line:?}"))))
                .collect::<Result<_>>()?;
            if cols.len() < 4 {
                return Err(Error::Parse(format!("trace row needs 4 columns: {line:?}")));
            }
            let radius = cols.get(4).copied().unwrap_or(f64::NAN);
            trace.push(cols[0], cols[1], cols[2], radius, cols[3]);
        }
        Ok(trace)
    }
}

/// First distance at which the width reaches `√2` times its initial value,
/// linearly interpolated; `+∞` when the trace never gets there.
pub fn nondiffraction_range(trace: &PropagationTrace) -> Result<f64> {
    if trace.len() < 2 {
        return Err(Error::domain("a trace needs at least two samples"));
    }
    if trace.z.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("trace distances must increase strictly"));
    }
    let target = std::f64::consts::SQRT_2 * trace.width[0];
    for i in 1..trace.len() {
        if trace.width[i] >= target {
            let (z0, z1) = (trace.z[i - 1], trace.z[i]);
            let (w0, w1) = (trace.width[i - 1], trace.width[i]);
            return Ok(z0 + (target - w0) * (z1 - z0) / (w1 - w0));
        }
    }
    Ok(f64::INFINITY)
}

/// `"> z_max"` style text for an L_d that was not reached.
pub fn describe_range(ld: f64, z_max: f64) -> String {
    if ld.is_finite() {
        format_number(ld)
    } else {
        format!("> {}", format_number(z_max))
    }
}
