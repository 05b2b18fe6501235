//! Periodic spectral solve of `∇²U = −γ ρ` on the square transverse grid.
//!
//! The zero mode is dropped, which fixes the gauge `mean(U) = 0` and removes
//! the uniform part of the source that a periodic cell cannot carry.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{is_power_of_two, k_squared, Fft2};

#[derive(Debug, Clone, PartialEq)]
pub struct Potential2D {
    pub n: usize,
    /// Grid spacing in a₀.
    pub dx: f64,
    /// Row-major values in a₀⁻².
    pub values: Vec<f64>,
}

impl Potential2D {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Reusable transform workspace for one grid size. Not shared across threads.
pub struct PoissonSolver {
    n: usize,
    dx: f64,
    fft: Fft2,
    inv_k2: Vec<f64>,
    buf: Vec<Complex64>,
}

impl PoissonSolver {
    pub fn new(n: usize, dx: f64) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::domain(format!("grid spacing must be positive, got {dx}")));
        }
        if !is_power_of_two(n) {
            return Err(Error::domain(format!("grid size must be a power of two, got {n}")));
        }
        let inv_k2 = k_squared(n, dx)
            .into_iter()
            .map(|k2| if k2 > 0.0 { 1.0 / k2 } else { 0.0 })
            .collect();
        Ok(Self {
            n,
            dx,
            fft: Fft2::new(n),
            inv_k2,
            buf: vec![Complex64::new(0.0, 0.0); n * n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Write the potential of `gamma * density` into `out`.
    pub fn solve_into(&mut self, density: &[f64], gamma: f64, out: &mut [f64]) {
        for (b, d) in self.buf.iter_mut().zip(density) {
            *b = Complex64::new(*d, 0.0);
        }
        self.solve_buffer(gamma, out);
    }

    /// Same as [`PoissonSolver::solve_into`] with the density `|ψ|²` taken
    /// from a complex field.
    pub fn solve_field_into(&mut self, psi: &[Complex64], gamma: f64, out: &mut [f64]) {
        for (b, p) in self.buf.iter_mut().zip(psi) {
            *b = Complex64::new(p.norm_sqr(), 0.0);
        }
        self.solve_buffer(gamma, out);
    }

    fn solve_buffer(&mut self, gamma: f64, out: &mut [f64]) {
        self.fft.forward(&mut self.buf);
        for (b, w) in self.buf.iter_mut().zip(&self.inv_k2) {
            *b *= gamma * w;
        }
        self.fft.inverse(&mut self.buf);
        for (o, b) in out.iter_mut().zip(&self.buf) {
            *o = b.re;
        }
    }

    pub fn solve(&mut self, density: &[f64], gamma: f64) -> Result<Potential2D> {
        if density.len() != self.n * self.n {
            return Err(Error::domain(format!(
                "density has {} samples, expected {}",
                density.len(),
                self.n * self.n
            )));
        }
        let mut values = vec![0.0; density.len()];
        self.solve_into(density, gamma, &mut values);
        Ok(Potential2D { n: self.n, dx: self.dx, values })
    }
}

pub fn solve_poisson(density: &[f64], n: usize, gamma: f64, dx: f64) -> Result<Potential2D> {
    PoissonSolver::new(n, dx)?.solve(density, gamma)
}

/// Max-norm of `∇²U + γ ρ` with both sides taken without their mean, using
/// the same spectral Laplacian the solver inverts.
pub fn laplacian_residual(u: &Potential2D, density: &[f64], gamma: f64) -> Result<f64> {
    let n = u.n;
    if density.len() != n * n || u.values.len() != n * n {
        return Err(Error::domain("potential and density grids differ"));
    }
    let k2 = k_squared(n, u.dx);
    let mut fft = Fft2::new(n);
    let mut buf: Vec<Complex64> = u.values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fft.forward(&mut buf);
    for (b, k) in buf.iter_mut().zip(&k2) {
        *b *= -k;
    }
    fft.inverse(&mut buf);
    let mean = density.iter().sum::<f64>() / density.len() as f64;
    Ok(buf
        .iter()
        .zip(density)
        .map(|(lap, d)| (lap.re + gamma * (d - mean)).abs())
        .fold(0.0, f64::max))
}
