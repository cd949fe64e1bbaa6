//! Zeroth-order Bessel function of the first kind.

use std::f64::consts::FRAC_PI_4;

// power series below this, Hankel asymptotic expansion above
const SERIES_LIMIT: f64 = 12.0;

/// `J₀(x)`, absolute error below 1e-10 for `|x| ≤ 50`.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= SERIES_LIMIT {
        series(x)
    } else {
        asymptotic(x)
    }
}

fn series(x: f64) -> f64 {
    // Σ (−x²/4)^k / (k!)²
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * kf);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && kf * kf > -q {
            break;
        }
    }
    sum
}

fn asymptotic(x: f64) -> f64 {
    // J₀(x) = √(2/πx) (P cos χ − Q sin χ), χ = x − π/4
    let mu = 0.0f64; // 4ν² for ν = 0
    let z8 = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * z8);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        if k % 2 == 1 {
            // Q = a₁ − a₃ + a₅ − …, P = 1 − a₂ + a₄ − …
            q += if k % 4 == 1 { term } else { -term };
        } else {
            p += if k % 4 == 2 { -term } else { term };
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - FRAC_PI_4;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Root of `J₀` in `[lo, hi]` by bisection; the bracket must change sign.
pub fn bessel_j0_root(lo: f64, hi: f64) -> Option<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (bessel_j0(a), bessel_j0(b));
    if fa * fb > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = bessel_j0(m);
        if fm == 0.0 || (b - a) < 4.0 * f64::EPSILON * m {
            return Some(m);
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Some(0.5 * (a + b))
}
