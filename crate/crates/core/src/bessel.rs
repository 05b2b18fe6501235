//! Integer-order Bessel functions of the first kind.
//!
//! `J_n` is evaluated with Miller's backward recurrence normalized by
//! `J_0 + 2 sum J_2k = 1`, which is accurate to a few ulps of 1 for every
//! argument used here (|x| up to a few thousand).

/// `J_n(x)` for integer order `n >= 0`.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    if x < 0.0 {
        let v = bessel_j(n, -x);
        return if n % 2 == 1 { -v } else { v };
    }
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x < 1e-8 {
        // leading term (x/2)^n / n!
        let mut term = 1.0;
        for k in 1..=n {
            term *= 0.5 * x / k as f64;
        }
        return term;
    }

    let big = (n as f64).max(x);
    let mut m = (big + 20.0 * big.cbrt() + 40.0) as usize;
    m += m % 2;

    const RESCALE: f64 = 1e250;
    let mut above = 0.0_f64; // J_{k+1}
    let mut current = 1e-30_f64; // J_k, k = m
    let mut norm = 0.0_f64;
    let mut ans = 0.0_f64;
    for k in (1..=m).rev() {
        let below = 2.0 * k as f64 / x * current - above;
        above = current;
        current = below;
        let order = k - 1;
        if current.abs() > RESCALE {
            current /= RESCALE;
            above /= RESCALE;
            norm /= RESCALE;
            ans /= RESCALE;
        }
        if order == n as usize {
            ans = current;
        }
        if order % 2 == 0 {
            norm += if order == 0 { current } else { 2.0 * current };
        }
    }
    ans / norm
}

/// `J_n'(x)`.
pub fn bessel_j_prime(n: u32, x: f64) -> f64 {
    if n == 0 {
        -bessel_j(1, x)
    } else {
        0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))
    }
}

/// The `s`-th positive zero (1-based) of `J_n`.
pub fn bessel_zero(n: u32, s: usize) -> f64 {
    assert!(s >= 1, "zeros are counted from 1");
    let step = 0.05;
    let mut found = 0;
    let mut a = if n == 0 { step } else { n as f64 * 0.5 + step };
    let mut fa = bessel_j(n, a);
    loop {
        let b = a + step;
        let fb = bessel_j(n, b);
        if fa == 0.0 || fa.signum() != fb.signum() {
            found += 1;
            if found == s {
                return bisect_root(|x| bessel_j(n, x), a, b);
            }
        }
        a = b;
        fa = fb;
    }
}

fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
