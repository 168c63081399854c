//! Modified Bessel functions of the first kind, integer order.
//!
//! Small arguments use the ascending power series. Larger arguments use
//! Miller's backward recurrence normalised with `e^κ = I_0 + 2 Σ_{k≥1} I_k`,
//! which yields the exponentially scaled values `e^{-κ} I_p(κ)` directly.

use crate::{Error, Result};

/// Largest argument accepted by the unscaled functions.
pub const KAPPA_MAX: f64 = 700.0;

const SERIES_LIMIT: f64 = 15.0;

fn check_kappa(kappa: f64) -> Result<()> {
    if !kappa.is_finite() || kappa < 0.0 || kappa > KAPPA_MAX {
        return Err(Error::Domain(format!(
            "bessel argument must lie in [0, {KAPPA_MAX}], got {kappa}"
        )));
    }
    Ok(())
}

fn ln_factorial(p: u32) -> f64 {
    (1..=p).map(|k| (k as f64).ln()).sum()
}

/// Ascending series for `I_p(κ)`, unscaled.
fn series(p: u32, kappa: f64) -> f64 {
    if kappa == 0.0 {
        return if p == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * kappa;
    let q = half * half;
    let mut term = (p as f64 * half.ln() - ln_factorial(p)).exp();
    if term == 0.0 {
        return 0.0;
    }
    let mut sum = term;
    let mut m = 0.0;
    loop {
        m += 1.0;
        term *= q / (m * (m + p as f64));
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Miller's backward recurrence for `e^{-κ} I_p(κ)`.
fn miller_scaled(p: u32, kappa: f64) -> f64 {
    let start = p as usize + 20 + (10.0 * kappa.sqrt()).ceil() as usize;
    let two_over = 2.0 / kappa;
    let mut next = 0.0; // y_{k+1}
    let mut cur = 1e-30; // y_k
    let mut total = 0.0;
    let mut at_p = if start == p as usize { cur } else { 0.0 };
    for k in (1..=start).rev() {
        total += 2.0 * cur;
        let prev = k as f64 * two_over * cur + next;
        next = cur;
        cur = prev;
        if k - 1 == p as usize {
            at_p = cur;
        }
        if cur > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            total *= 1e-250;
            at_p *= 1e-250;
        }
    }
    total += cur;
    at_p / total
}

/// Exponentially scaled `e^{-κ} I_p(κ)`; accepts any finite `κ ≥ 0`.
pub fn bessel_i_scaled(p: u32, kappa: f64) -> Result<f64> {
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::Domain(format!(
            "bessel argument must be finite and non-negative, got {kappa}"
        )));
    }
    if kappa <= SERIES_LIMIT {
        Ok(series(p, kappa) * (-kappa).exp())
    } else {
        Ok(miller_scaled(p, kappa))
    }
}

/// `I_p(κ)` for `0 ≤ κ ≤ 700`.
pub fn bessel_i(p: u32, kappa: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if kappa <= SERIES_LIMIT {
        Ok(series(p, kappa))
    } else {
        Ok(miller_scaled(p, kappa) * kappa.exp())
    }
}

/// `I_p(κ)` for a signed order, using `I_{-p} = I_p`.
pub fn bessel_i_signed(p: i32, kappa: f64) -> Result<f64> {
    bessel_i(p.unsigned_abs(), kappa)
}

/// `ln I_0(κ)` through the scaled path, so it stays finite for large κ.
pub fn ln_bessel_i0(kappa: f64) -> Result<f64> {
    check_kappa(kappa)?;
    Ok(bessel_i_scaled(0, kappa)?.ln() + kappa)
}

/// `A(κ) = I_1(κ)/I_0(κ)`.
pub fn ratio_a(kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) || kappa > KAPPA_MAX {
        return Err(Error::Domain(format!(
            "A(kappa) requires 0 < kappa <= {KAPPA_MAX}, got {kappa}"
        )));
    }
    Ok(bessel_i_scaled(1, kappa)? / bessel_i_scaled(0, kappa)?)
}

/// `A'(κ) = 1 - A/κ - A²`.
pub fn ratio_a_prime(kappa: f64) -> Result<f64> {
    let a = ratio_a(kappa)?;
    Ok(1.0 - a / kappa - a * a)
}

/// Inverse of `A` on `[0, 1)` by bisection in `κ`.
///
/// Returns 0 for `r ≤ 0` and saturates at [`KAPPA_MAX`].
pub fn ratio_a_inverse(r: f64, steps: usize) -> f64 {
    if !(r > 0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0_f64, KAPPA_MAX);
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        match ratio_a(mid.max(1e-300)) {
            Ok(a) if a < r => lo = mid,
            _ => hi = mid,
        }
    }
    0.5 * (lo + hi)
}
