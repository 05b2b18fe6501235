//! Small numerical kernels shared by the solvers: nonuniform quadrature,
//! finite-difference weights and scalar root finding.

/// Cumulative integral of samples `f` on the sorted grid `x`, with
/// `out[0] = 0`. Each interval uses the cubic through its four nearest nodes
/// (clamped at the ends), integrated exactly by two-point Gauss-Legendre, so
/// the rule is fourth-order on smooth data even on graded grids.
pub fn cumulative_integral(x: &[f64], f: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), f.len());
    let n = x.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n < 4 {
        for i in 1..n {
            out[i] = out[i - 1] + 0.5 * (f[i] + f[i - 1]) * (x[i] - x[i - 1]);
        }
        return out;
    }
    let g = 0.5 / 3.0_f64.sqrt();
    for i in 0..n - 1 {
        let start = i.saturating_sub(1).min(n - 4);
        let nodes = &x[start..start + 4];
        let vals = &f[start..start + 4];
        let (a, b) = (x[i], x[i + 1]);
        let mid = 0.5 * (a + b);
        let half = b - a;
        let q = 0.5 * half * (lagrange4(nodes, vals, mid - g * half) + lagrange4(nodes, vals, mid + g * half));
        out[i + 1] = out[i] + q;
    }
    out
}

/// Total of [`cumulative_integral`].
pub fn integral(x: &[f64], f: &[f64]) -> f64 {
    cumulative_integral(x, f).last().copied().unwrap_or(0.0)
}

fn lagrange4(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..4 {
        let mut w = 1.0;
        for m in 0..4 {
            if m != j {
                w *= (t - xs[m]) / (xs[j] - xs[m]);
            }
        }
        acc += w * ys[j];
    }
    acc
}

/// Fornberg weights for the `order`-th derivative at `x0` from the nodes `xs`.
pub fn fd_weights(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Derivative of sampled data using a five-point stencil (one-sided at the ends).
pub fn derivative(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert!(n >= 5, "need at least five samples");
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(2).min(n - 5);
            let w = fd_weights(x[i], &x[start..start + 5], 1);
            w.iter().zip(&f[start..start + 5]).map(|(a, b)| a * b).sum()
        })
        .collect()
}

/// Root of `f` in `[lo, hi]` by bisection; the bracket must change sign.
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return None;
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= xtol || mid <= lo.min(hi) || mid >= lo.max(hi) {
            return Some(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Linear interpolation on a sorted grid; clamps outside the range.
pub fn interp(x: &[f64], y: &[f64], t: f64) -> f64 {
    let n = x.len();
    if t <= x[0] {
        return y[0];
    }
    if t >= x[n - 1] {
        return y[n - 1];
    }
    let i = x.partition_point(|&v| v <= t) - 1;
    let s = (t - x[i]) / (x[i + 1] - x[i]);
    y[i] + s * (y[i + 1] - y[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn graded_grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| (i as f64 / (n - 1) as f64).powf(1.7) * 3.0).collect()
    }

    #[test]
    fn cumulative_integral_is_fourth_order() {
        let err = |n: usize| {
            let x = graded_grid(n);
            let f: Vec<f64> = x.iter().map(|v| v.sin()).collect();
            let c = cumulative_integral(&x, &f);
            x.iter()
                .zip(&c)
                .map(|(v, q)| (1.0 - v.cos() - q).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(41), err(81));
        assert!(e2 < 1e-6);
        assert!(e1 / e2 > 12.0, "observed ratio {}", e1 / e2);
    }

    #[test]
    fn cubic_integrated_exactly() {
        let x = graded_grid(9);
        let f: Vec<f64> = x.iter().map(|v| 1.0 - 2.0 * v + v * v * v).collect();
        let exact = |v: f64| v - v * v + v.powi(4) / 4.0;
        let c = cumulative_integral(&x, &f);
        for (v, q) in x.iter().zip(&c) {
            assert!((exact(*v) - q).abs() < 1e-12);
        }
    }

    #[test]
    fn fornberg_central_weights() {
        let w = fd_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let expect = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        let w2 = fd_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w2[0] - 1.0).abs() < 1e-14 && (w2[1] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_on_graded_grid() {
        let x = graded_grid(200);
        let f: Vec<f64> = x.iter().map(|v| (2.0 * v).sin()).collect();
        let d = derivative(&x, &f);
        for (v, dv) in x.iter().zip(&d) {
            assert!((2.0 * (2.0 * v).cos() - dv).abs() < 1e-5);
        }
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2.0_f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-14, 200).is_none());
    }

    proptest! {
        #[test]
        fn integral_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64) {
            let x = graded_grid(30);
            let f: Vec<f64> = x.iter().map(|v| v.exp()).collect();
            let g: Vec<f64> = x.iter().map(|v| v.cos()).collect();
            let h: Vec<f64> = f.iter().zip(&g).map(|(p, q)| a * p + b * q).collect();
            let lhs = integral(&x, &h);
            let rhs = a * integral(&x, &f) + b * integral(&x, &g);
            prop_assert!((lhs - rhs).abs() < 1e-11 * (1.0 + lhs.abs()));
        }
    }
}
