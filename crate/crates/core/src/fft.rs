//! Square 2D FFTs on row-major buffers.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Planned forward/inverse transforms for an `n x n` grid plus scratch space.
///
/// The inverse is normalized so that `inverse(forward(a)) == a`.
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n * self.n);
        let plan = Arc::clone(&self.forward);
        self.apply(&*plan, data);
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n * self.n);
        let plan = Arc::clone(&self.inverse);
        self.apply(&*plan, data);
        let scale = 1.0 / (self.n * self.n) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn apply(&mut self, plan: &dyn Fft<f64>, data: &mut [Complex64]) {
        plan.process_with_scratch(data, &mut self.scratch);
        transpose(data, self.n);
        plan.process_with_scratch(data, &mut self.scratch);
        transpose(data, self.n);
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    const BLOCK: usize = 32;
    for ib in (0..n).step_by(BLOCK) {
        for jb in (ib..n).step_by(BLOCK) {
            for i in ib..(ib + BLOCK).min(n) {
                let jstart = if ib == jb { i + 1 } else { jb };
                for j in jstart..(jb + BLOCK).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Angular wavenumbers `2 pi * fftfreq(n, dx)` in standard FFT order.
pub fn wavenumbers(n: usize, dx: f64) -> Vec<f64> {
    let span = n as f64 * dx;
    (0..n)
        .map(|i| {
            let m = if i < n.div_ceil(2) { i as isize } else { i as isize - n as isize };
            2.0 * PI * m as f64 / span
        })
        .collect()
}

/// `|k|^2` for every mode of an `n x n` grid, row-major.
pub fn k_squared(n: usize, dx: f64) -> Vec<f64> {
    let k = wavenumbers(n, dx);
    let mut out = Vec::with_capacity(n * n);
    for kx in &k {
        for ky in &k {
            out.push(kx * kx + ky * ky);
        }
    }
    out
}

/// Swap quadrants so the zero-frequency sample moves to index `n/2` (even `n`).
pub fn fftshift(data: &mut [Complex64], n: usize) {
    let h = n / 2;
    for i in 0..n {
        let si = (i + h) % n;
        if si < i {
            continue;
        }
        for j in 0..n {
            let sj = (j + h) % n;
            if si == i && sj <= j {
                continue;
            }
            data.swap(i * n + j, si * n + sj);
        }
    }
}

pub fn is_power_of_two(n: usize) -> bool {
    n >= 2 && n.is_power_of_two()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(data: &[Complex64], n: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for p in 0..n {
            for q in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        let phase = -2.0 * PI * ((p * i + q * j) % n) as f64 / n as f64;
                        acc += data[i * n + j] * Complex64::from_polar(1.0, phase);
                    }
                }
                out[p * n + q] = acc;
            }
        }
        out
    }

    #[test]
    fn forward_matches_naive_and_inverse_round_trips() {
        let n = 8;
        let data: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut fft = Fft2::new(n);
        let mut buf = data.clone();
        fft.forward(&mut buf);
        let reference = naive_dft(&data, n);
        for (a, b) in buf.iter().zip(&reference) {
            assert!((a - b).norm() < 1e-12);
        }
        fft.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&data) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn shift_moves_dc_to_center_and_is_involution() {
        let n = 6;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        data[0] = Complex64::new(1.0, 0.0);
        let original = data.clone();
        fftshift(&mut data, n);
        assert_eq!(data[(n / 2) * n + n / 2], Complex64::new(1.0, 0.0));
        fftshift(&mut data, n);
        assert_eq!(data, original);
    }

    #[test]
    fn wavenumber_layout() {
        let k = wavenumbers(4, 0.5);
        let d = 2.0 * PI / 2.0;
        assert_eq!(k, vec![0.0, d, -2.0 * d, -d]);
    }
}
