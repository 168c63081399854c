//! Composite Simpson quadrature with panel doubling.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hard cap on the number of Simpson panels.
pub const MAX_PANELS: usize = 1 << 16;

/// Quadrature settings shared by every normaliser, CDF and expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub panels: usize,
    pub abs_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            panels: 4096,
            abs_tol: 1e-10,
        }
    }
}

impl QuadratureSpec {
    pub fn new(panels: usize, abs_tol: f64) -> Result<Self> {
        let q = Self { panels, abs_tol };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.panels < 64 || self.panels % 2 != 0 || self.panels > MAX_PANELS {
            return Err(Error::InvalidParameter(format!(
                "quadrature panels must be even and in [64, {MAX_PANELS}], got {}",
                self.panels
            )));
        }
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "quadrature tolerance must be positive, got {}",
                self.abs_tol
            )));
        }
        Ok(())
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub panels: usize,
    pub converged: bool,
}

/// Fixed composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    debug_assert!(n % 2 == 0 && n > 0);
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for j in 1..n {
        let v = f(a + j as f64 * h);
        if j % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    (f(a) + f(b) + 4.0 * odd + 2.0 * even) * h / 3.0
}

/// Simpson's rule doubling the panel count from `q.panels` until two
/// successive estimates differ by less than `q.abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, q: &QuadratureSpec) -> Integral {
    if a == b {
        return Integral {
            value: 0.0,
            panels: 0,
            converged: true,
        };
    }
    let mut n = q.panels.clamp(2, MAX_PANELS);
    let mut prev = simpson(&f, a, b, n);
    while n < MAX_PANELS {
        n *= 2;
        let cur = simpson(&f, a, b, n);
        if (cur - prev).abs() < q.abs_tol {
            return Integral {
                value: cur,
                panels: n,
                converged: true,
            };
        }
        prev = cur;
    }
    Integral {
        value: prev,
        panels: n,
        converged: false,
    }
}
