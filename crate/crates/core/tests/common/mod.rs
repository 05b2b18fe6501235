//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// `J_n(x)` from `(1/π)∫₀^π cos(nτ − x sin τ) dτ` by the trapezoid rule,
/// which converges geometrically for this periodic integrand.
pub fn bessel_j_integral(n: u32, x: f64) -> f64 {
    let m = 4000 + 4 * x.abs().ceil() as usize;
    let h = PI / m as f64;
    let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
    let mut sum = 0.5 * (f(0.0) + f(PI));
    for k in 1..m {
        sum += f(k as f64 * h);
    }
    sum * h / PI
}

/// Periodic Green's function of `−∇²` on an `n x n` lattice of spacing `dx`,
/// summed mode by mode over the grid band without the zero mode.
pub fn lattice_green(n: usize, dx: f64) -> Vec<f64> {
    let span = n as f64 * dx;
    let modes: Vec<i64> = (-(n as i64) / 2..(n as i64) / 2).collect();
    let mut g = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            let (x, y) = (a as f64 * dx, b as f64 * dx);
            let mut sum = 0.0;
            for &p in &modes {
                for &q in &modes {
                    if p == 0 && q == 0 {
                        continue;
                    }
                    let (kx, ky) = (2.0 * PI * p as f64 / span, 2.0 * PI * q as f64 / span);
                    sum += (kx * x + ky * y).cos() / (kx * kx + ky * ky);
                }
            }
            g[a * n + b] = sum / (span * span);
        }
    }
    g
}

/// `U = γ G * ρ` by direct periodic convolution.
pub fn green_potential(density: &[f64], n: usize, dx: f64, gamma: f64) -> Vec<f64> {
    let g = lattice_green(n, dx);
    let mut u = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    acc += g[((i + n - a) % n) * n + (j + n - b) % n] * density[a * n + b];
                }
            }
            u[i * n + j] = gamma * acc * dx * dx;
        }
    }
    u
}

/// Relative L² distance after removing each vector's mean.
pub fn relative_error_up_to_constant(a: &[f64], b: &[f64]) -> f64 {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let num: f64 = a.iter().zip(b).map(|(x, y)| ((x - ma) - (y - mb)).powi(2)).sum();
    let den: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    (num / den).sqrt()
}

/// Second-moment width of a free Gaussian launched as `e^{−r²/2σ²}` under
/// `i∂ψ/∂ζ = −∇²ψ`: `σ√(1 + 4ζ²/σ⁴)`.
pub fn free_gaussian_width(sigma: f64, zeta: f64) -> f64 {
    sigma * (1.0 + 4.0 * zeta * zeta / sigma.powi(4)).sqrt()
}
