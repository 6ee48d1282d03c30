//! First-order Bessel function of the first kind.
//!
//! Three regimes: the ascending power series up to |v| = 12, Miller's backward
//! recurrence (normalized by `J0 + 2 Σ J_2k = 1`) up to |v| = 100, and the
//! Hankel asymptotic expansion beyond.

use std::f64::consts::{FRAC_2_PI, PI};

/// First positive zero of `J1`.
pub const J1_FIRST_ZERO: f64 = 3.831_705_970_207_512_5;

const SERIES_LIMIT: f64 = 12.0;
const RECURRENCE_LIMIT: f64 = 100.0;

/// `J1(v)`; odd in `v`, total over finite inputs.
pub fn bessel_j1(v: f64) -> f64 {
    let x = v.abs();
    let value = if x <= SERIES_LIMIT {
        x * j1_over_x_series(x)
    } else if x <= RECURRENCE_LIMIT {
        j1_miller(x)
    } else {
        j1_hankel(x)
    };
    if v < 0.0 {
        -value
    } else {
        value
    }
}

/// `2 J1(v) / v` with the removable singularity at 0 filled in (value 1).
pub fn airy_amplitude(v: f64) -> f64 {
    let x = v.abs();
    if x <= SERIES_LIMIT {
        2.0 * j1_over_x_series(x)
    } else {
        2.0 * bessel_j1(x) / x
    }
}

/// `J1(x)/x = Σ (−1)^m (x/2)^{2m} / (2 m! (m+1)!)`.
fn j1_over_x_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 0.5;
    let mut sum = term;
    let mut m = 0.0;
    loop {
        term *= q / ((m + 1.0) * (m + 2.0));
        sum += term;
        m += 1.0;
        if term.abs() <= f64::EPSILON * 1e-3 * sum.abs().max(1e-300) && m > 2.0 {
            return sum;
        }
        if m > 200.0 {
            return sum;
        }
    }
}

fn j1_miller(x: f64) -> f64 {
    // start order comfortably past the turning point so J_start/J_1 is negligible
    let mut start = (x + 40.0 + 12.0 * x.cbrt()).ceil() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let two_over_x = 2.0 / x;
    let mut j_next = 0.0; // J_{n+1}
    let mut j_curr = 1e-300; // J_n
    let mut even_sum = 0.0; // Σ J_{2k}, k ≥ 1
    let mut j1 = 0.0;
    for n in (1..=start).rev() {
        let j_prev = n as f64 * two_over_x * j_curr - j_next; // J_{n-1}
        j_next = j_curr;
        j_curr = j_prev;
        if j_curr.abs() > 1e250 {
            j_curr *= 1e-250;
            j_next *= 1e-250;
            even_sum *= 1e-250;
            j1 *= 1e-250;
        }
        let order = n - 1;
        if order == 1 {
            j1 = j_curr;
        }
        if order >= 2 && order % 2 == 0 {
            even_sum += j_curr;
        }
    }
    // j_curr now holds J0
    j1 / (j_curr + 2.0 * even_sum)
}

fn j1_hankel(x: f64) -> f64 {
    const MU: f64 = 4.0;
    let chi = x - 0.75 * PI;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0; // a_k(1) / x^k
    let mut last = f64::INFINITY;
    for k in 1..60usize {
        let odd = (2 * k - 1) as f64;
        a *= (MU - odd * odd) / (k as f64 * 8.0 * x);
        if a.abs() > last {
            break;
        }
        last = a.abs();
        // signs: P = 1 − a2 + a4 − …, Q = a1 − a3 + …
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
        if a.abs() < 1e-18 {
            break;
        }
    }
    (FRAC_2_PI / x).sqrt() * (p * chi.cos() - q * chi.sin())
}
