//! Pearson chi-squared and one-sample Kolmogorov–Smirnov tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::circular::{Density, TWO_PI};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::{wrap_angle, Error, Result};

/// Default number of equal-width bins.
pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Bins remaining after merging sparse ones.
    pub bins: usize,
}

/// Pearson test over `bins` equal-width bins on `[0, 2π)`. Adjacent bins are
/// merged until every group expects at least one observation; the degrees
/// of freedom are `groups - 1 - fitted_dim`.
pub fn chi_squared_gof<D: Density + ?Sized>(
    data: &[f64],
    fitted: &D,
    fitted_dim: usize,
    bins: usize,
) -> Result<GofResult> {
    if bins < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 bins, got {bins}")));
    }
    let n = data.len();
    if n < 5 * bins {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {bins} bins; need at least {}",
            5 * bins
        )));
    }
    let width = TWO_PI / bins as f64;
    let mut observed = vec![0.0; bins];
    for &t in data {
        let j = ((wrap_angle(t) / width) as usize).min(bins - 1);
        observed[j] += 1.0;
    }
    let q = QuadratureSpec { panels: 64, abs_tol: 1e-13 };
    let probs: Vec<f64> = (0..bins)
        .map(|j| {
            let a = j as f64 * width;
            integrate(|t| fitted.density(t), a, a + width, &q).value
        })
        .collect();
    let total: f64 = probs.iter().sum();
    let expected: Vec<f64> = probs.iter().map(|p| n as f64 * p / total).collect();

    let mut groups: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for j in 0..bins {
        o += observed[j];
        e += expected[j];
        if e >= 1.0 {
            groups.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match groups.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => groups.push((o, e)),
        }
    }
    let k = groups.len();
    if k < fitted_dim + 2 {
        return Err(Error::InsufficientData(format!(
            "{k} bins after merging leave no degrees of freedom"
        )));
    }
    let dof = k - 1 - fitted_dim;
    let statistic: f64 = groups.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dist = ChiSquared::new(dof as f64)
        .map_err(|e| Error::Numerical(format!("chi-squared distribution: {e}")))?;
    Ok(GofResult {
        statistic,
        dof,
        p_value: dist.sf(statistic).clamp(0.0, 1.0),
        bins: k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Survival function of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let y = (-std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda)).exp();
        let s = y + y.powi(9) + y.powi(25) + y.powi(49);
        (1.0 - (TWO_PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let x = (-2.0 * lambda * lambda).exp();
        let s = x - x.powi(4) + x.powi(9) - x.powi(16);
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// Two-sided one-sample KS test with the asymptotic p-value, using the
/// small-sample correction `λ = (√n + 0.12 + 0.11/√n) D`.
pub fn ks_test<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> Result<KsResult> {
    let n = data.len();
    if n < 20 {
        return Err(Error::InsufficientData(format!(
            "KS test needs at least 20 observations, got {n}"
        )));
    }
    let mut x = data.to_vec();
    x.sort_by(|a, b| a.total_cmp(b));
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i as f64 + 1.0) / nf - f).max(f - i as f64 / nf);
    }
    let sq = nf.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    Ok(KsResult {
        statistic: d.clamp(0.0, 1.0),
        p_value: kolmogorov_sf(lambda),
        n,
    })
}
