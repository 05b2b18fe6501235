//! Symmetric split-step propagation of `i ∂ψ/∂ζ = −∇²ψ + Uψ` with the
//! potential re-solved from `|ψ|²` at every step.
//!
//! One step is `K(dζ/2) · A·P(dζ) · K(dζ/2)` where `K` is the exact free
//! propagator in Fourier space, `P = exp(−i U dζ)` and `A` the optional
//! boundary absorber. Consecutive half kinetic steps are merged, so a step
//! costs four 2D FFTs; the state is brought back to a whole step only when
//! it is recorded.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{is_power_of_two, k_squared, Fft2};
use crate::field::Field2D;
use crate::metrics::{LobeTracker, PropagationTrace, Snapshot};
use crate::params::{bohr_to_meters, z_to_zeta, zeta_to_z, BOHR_RADIUS};
use crate::poisson::PoissonSolver;

/// Potential phase per step above which the configuration is rejected.
pub const MAX_POTENTIAL_PHASE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Absorber {
    /// Thickness of the absorbing frame as a fraction of the grid side.
    pub width_fraction: f64,
    /// Exponent of the raised-cosine mask applied once per step.
    pub strength: f64,
}

impl Default for Absorber {
    fn default() -> Self {
        Self {
            width_fraction: 0.1,
            strength: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    /// Step in meters.
    pub dz: f64,
    pub z_max: f64,
    pub record_stride: usize,
    pub gamma: f64,
    /// de Broglie wavenumber in 1/m.
    pub k: f64,
    pub absorber: Option<Absorber>,
    /// Stop once the width exceeds this multiple of `√2·w(0)`.
    #[serde(default)]
    pub stop_factor: Option<f64>,
    /// Constant added to U every step; only shifts the global phase.
    #[serde(default)]
    pub potential_offset: f64,
}

impl PropagatorConfig {
    pub fn dzeta(&self) -> f64 {
        z_to_zeta(self.dz, self.k)
    }

    pub fn steps(&self) -> usize {
        (self.z_max / self.dz).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.dz > 0.0 && self.dz.is_finite()) {
            bad.push(format!("dz = {}", self.dz));
        }
        if !(self.z_max >= self.dz) {
            bad.push(format!("z_max = {}", self.z_max));
        }
        if self.record_stride == 0 {
            bad.push("record_stride = 0".into());
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            bad.push(format!("gamma = {}", self.gamma));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            bad.push(format!("k = {}", self.k));
        }
        if let Some(a) = self.absorber {
            if !(a.width_fraction > 0.0 && a.width_fraction < 0.5 && a.strength > 0.0) {
                bad.push(format!("absorber = {a:?}"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::config(format!("invalid propagator settings: {}", bad.join(", "))))
        }
    }
}

/// Diagnostics of the step size for a given initial field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepCheck {
    /// `(max U − min U)·dζ`, the potential phase spread per step.
    pub potential_phase: f64,
    /// `|k_Nyquist|²·dζ`; informational, the kinetic factor is exact.
    pub nyquist_kinetic_phase: f64,
    /// Share of spectral power in the outer third of the band.
    pub spectral_tail: f64,
}

/// Owns the transforms and per-step phase factors for one grid.
pub struct Propagator {
    n: usize,
    dx: f64,
    dzeta: f64,
    gamma: f64,
    offset: f64,
    fft: Fft2,
    poisson: PoissonSolver,
    k2: Vec<f64>,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    absorber: Option<Vec<f64>>,
    u: Vec<f64>,
    spectrum: Vec<Complex64>,
    work: Vec<Complex64>,
}

/// What the per-record hook asks the propagation to do next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// A recorded state handed to hooks.
pub struct Record<'a> {
    pub step: usize,
    /// Distance in meters.
    pub z: f64,
    pub field: &'a Field2D,
    pub snapshot: Snapshot,
}

impl Propagator {
    pub fn new(n: usize, dx: f64, config: &PropagatorConfig) -> Result<Self> {
        config.validate()?;
        if !is_power_of_two(n) {
            return Err(Error::domain(format!("grid size must be a power of two, got {n}")));
        }
        let dzeta = config.dzeta();
        let k2 = k_squared(n, dx);
        let half = k2.iter().map(|k| Complex64::from_polar(1.0, -k * 0.5 * dzeta)).collect();
        let full = k2.iter().map(|k| Complex64::from_polar(1.0, -k * dzeta)).collect();
        let absorber = config.absorber.map(|a| absorber_mask(n, a));
        Ok(Self {
            n,
            dx,
            dzeta,
            gamma: config.gamma,
            offset: config.potential_offset,
            fft: Fft2::new(n),
            poisson: PoissonSolver::new(n, dx)?,
            k2,
            half,
            full,
            absorber,
            u: vec![0.0; n * n],
            spectrum: vec![Complex64::new(0.0, 0.0); n * n],
            work: vec![Complex64::new(0.0, 0.0); n * n],
        })
    }

    pub fn dzeta(&self) -> f64 {
        self.dzeta
    }

    fn check_grid(&self, field: &Field2D) -> Result<()> {
        if field.n != self.n || (field.dx - self.dx).abs() > 1e-12 * self.dx {
            return Err(Error::domain(format!(
                "field grid {}x{} dx={} does not match propagator grid {}x{} dx={}",
                field.n, field.n, field.dx, self.n, self.n, self.dx
            )));
        }
        Ok(())
    }

    pub fn check_step(&mut self, field: &Field2D) -> Result<StepCheck> {
        self.check_grid(field)?;
        self.poisson.solve_field_into(&field.amps, self.gamma, &mut self.u);
        let (lo, hi) = self
            .u
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let kmax = std::f64::consts::PI / self.dx;
        self.work.copy_from_slice(&field.amps);
        self.fft.forward(&mut self.work);
        let cut = (2.0 * kmax / 3.0).powi(2);
        let (mut tail, mut total) = (0.0, 0.0);
        for (s, k) in self.work.iter().zip(&self.k2) {
            let p = s.norm_sqr();
            total += p;
            if *k > cut {
                tail += p;
            }
        }
        Ok(StepCheck {
            potential_phase: (hi - lo) * self.dzeta,
            nyquist_kinetic_phase: kmax * kmax * self.dzeta,
            spectral_tail: if total > 0.0 { tail / total } else { 0.0 },
        })
    }

    /// One full symmetric step in real space.
    pub fn step(&mut self, field: &mut Field2D) -> Result<()> {
        self.check_grid(field)?;
        self.half_kinetic(&mut field.amps);
        self.potential(&mut field.amps, 0)?;
        self.half_kinetic(&mut field.amps);
        Ok(())
    }

    fn half_kinetic(&mut self, amps: &mut [Complex64]) {
        self.fft.forward(amps);
        for (a, p) in amps.iter_mut().zip(&self.half) {
            *a *= p;
        }
        self.fft.inverse(amps);
    }

    /// Potential (and absorber) stage; returns an error on non-finite values.
    fn potential(&mut self, amps: &mut [Complex64], step: usize) -> Result<()> {
        self.poisson.solve_field_into(amps, self.gamma, &mut self.u);
        let dzeta = self.dzeta;
        let offset = self.offset;
        let mut finite = true;
        match &self.absorber {
            Some(mask) => {
                for ((a, u), m) in amps.iter_mut().zip(&self.u).zip(mask) {
                    *a *= Complex64::from_polar(*m, -(u + offset) * dzeta);
                    finite &= a.re.is_finite() && a.im.is_finite();
                }
            }
            None => {
                for (a, u) in amps.iter_mut().zip(&self.u) {
                    *a *= Complex64::from_polar(1.0, -(u + offset) * dzeta);
                    finite &= a.re.is_finite() && a.im.is_finite();
                }
            }
        }
        if finite {
            Ok(())
        } else {
            Err(Error::NumericBlowup { step, z_m: f64::NAN })
        }
    }

    /// Propagate to `config.z_max`, measuring the beam every `record_stride`
    /// steps (and at the start and end). `hook` sees each recorded state.
    pub fn propagate(
        &mut self,
        initial: &Field2D,
        config: &PropagatorConfig,
        mut hook: impl FnMut(&Record) -> Result<Control>,
    ) -> Result<PropagationTrace> {
        self.check_grid(initial)?;
        let check = self.check_step(initial)?;
        if check.potential_phase > MAX_POTENTIAL_PHASE {
            return Err(Error::config(format!(
                "step too large: potential phase {:.3} rad per step exceeds {MAX_POTENTIAL_PHASE}",
                check.potential_phase
            )));
        }
        let steps = config.steps();
        let mut tracker = LobeTracker::default();
        let mut trace = PropagationTrace::default();
        let mut field = initial.clone();

        let first = tracker.measure(&field)?;
        record(&mut trace, 0.0, &first);
        let limit = config.stop_factor.map(|f| f * std::f64::consts::SQRT_2 * first.width);
        if hook(&Record { step: 0, z: 0.0, field: &field, snapshot: first })? == Control::Stop {
            return Ok(trace);
        }

        self.spectrum.copy_from_slice(&field.amps);
        self.fft.forward(&mut self.spectrum);
        for (s, h) in self.spectrum.iter_mut().zip(&self.half) {
            *s *= h;
        }
        for step in 1..=steps {
            let mut state = std::mem::take(&mut self.spectrum);
            self.fft.inverse(&mut state);
            let z = zeta_to_z(step as f64 * self.dzeta, config.k);
            self.potential(&mut state, step).map_err(|e| match e {
                Error::NumericBlowup { step, .. } => Error::NumericBlowup { step, z_m: z },
                other => other,
            })?;
            self.fft.forward(&mut state);
            self.spectrum = state;

            if step % config.record_stride == 0 || step == steps {
                for ((w, s), h) in self.work.iter_mut().zip(&self.spectrum).zip(&self.half) {
                    *w = s * h;
                }
                self.fft.inverse(&mut self.work);
                field.amps.copy_from_slice(&self.work);
                let snap = tracker
                    .measure(&field)
                    .map_err(|e| e.context(format!("metrics at z = {z:e} m")))?;
                record(&mut trace, z, &snap);
                let control = hook(&Record { step, z, field: &field, snapshot: snap })?;
                if control == Control::Stop || limit.is_some_and(|w| snap.width >= w) {
                    break;
                }
            }
            for (s, f) in self.spectrum.iter_mut().zip(&self.full) {
                *s *= f;
            }
        }
        Ok(trace)
    }

    /// Kinetic energy `∬|∇ψ|²` plus half the Hartree term `∬U|ψ|²`.
    pub fn energy(&mut self, field: &Field2D) -> Result<f64> {
        self.check_grid(field)?;
        self.work.copy_from_slice(&field.amps);
        self.fft.forward(&mut self.work);
        let scale = self.dx * self.dx / (self.n * self.n) as f64;
        let kinetic: f64 = self.work.iter().zip(&self.k2).map(|(s, k)| s.norm_sqr() * k).sum::<f64>() * scale;
        self.poisson.solve_field_into(&field.amps, self.gamma, &mut self.u);
        let hartree: f64 = field.amps.iter().zip(&self.u).map(|(a, u)| a.norm_sqr() * u).sum::<f64>()
            * self.dx
            * self.dx;
        Ok(kinetic + 0.5 * hartree)
    }
}

fn record(trace: &mut PropagationTrace, z: f64, snap: &Snapshot) {
    trace.push(
        z,
        bohr_to_meters(snap.width),
        snap.lobe_fraction,
        bohr_to_meters(snap.lobe_radius),
        snap.peak_density / (BOHR_RADIUS * BOHR_RADIUS),
    );
}

/// Raised-cosine frame over the outer `width_fraction` of each side.
fn absorber_mask(n: usize, a: Absorber) -> Vec<f64> {
    let half = n as f64 / 2.0;
    let inner = half - a.width_fraction * n as f64;
    let thickness = a.width_fraction * n as f64;
    let mut mask = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let edge = (i as f64 - half).abs().max((j as f64 - half).abs());
            let s = ((edge - inner) / thickness).clamp(0.0, 1.0);
            mask.push((0.5 * std::f64::consts::PI * s).cos().powf(a.strength));
        }
    }
    mask
}

/// Single-shot energy of a field without building a full config.
pub fn energy_functional(field: &Field2D, gamma: f64) -> Result<f64> {
    let config = PropagatorConfig {
        dz: 1.0,
        z_max: 1.0,
        record_stride: 1,
        gamma,
        k: 1.0,
        absorber: None,
        stop_factor: None,
        potential_offset: 0.0,
    };
    Propagator::new(field.n, field.dx, &config)?.energy(field)
}

/// Convenience wrapper: build a propagator for the field's grid and run it.
pub fn propagate(
    initial: &Field2D,
    config: &PropagatorConfig,
    hook: impl FnMut(&Record) -> Result<Control>,
) -> Result<PropagationTrace> {
    Propagator::new(initial.n, initial.dx, config)?.propagate(initial, config, hook)
}

/// Step `dz` in meters corresponding to `dzeta`.
pub fn dz_for_dzeta(dzeta: f64, k: f64) -> f64 {
    zeta_to_z(dzeta, k)
}
