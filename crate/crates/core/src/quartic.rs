//! Real roots of polynomials up to degree four.
//!
//! Quartics go through Ferrari's resolvent-cubic factorisation. Leading
//! coefficients that are negligible relative to the largest one are dropped,
//! so the same entry point handles cubic, quadratic and linear cases. Near a
//! zero discriminant the roots come from the eigenvalues of the companion
//! matrix instead.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative size below which a leading coefficient is treated as zero.
pub const DEGREE_DROP: f64 = 1e-12;

/// Relative discriminant size below which Ferrari is considered ill-conditioned.
pub const ILL_CONDITIONED: f64 = 1e-10;

/// Coefficients of `d4 x⁴ + d3 x³ + d2 x² + d1 x + d0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticCoeffs {
    pub d4: f64,
    pub d3: f64,
    pub d2: f64,
    pub d1: f64,
    pub d0: f64,
}

impl QuarticCoeffs {
    pub fn new(d4: f64, d3: f64, d2: f64, d1: f64, d0: f64) -> Self {
        Self { d4, d3, d2, d1, d0 }
    }

    /// Coefficients from the highest power down.
    pub fn as_array(&self) -> [f64; 5] {
        [self.d4, self.d3, self.d2, self.d1, self.d0]
    }

    pub fn max_abs(&self) -> f64 {
        self.as_array().iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: f64) -> f64 {
        (((self.d4 * x + self.d3) * x + self.d2) * x + self.d1) * x + self.d0
    }

    fn deriv(&self, x: f64) -> f64 {
        ((4.0 * self.d4 * x + 3.0 * self.d3) * x + 2.0 * self.d2) * x + self.d1
    }

    /// `Σ |d_i| |x|^i`, the natural scale for the residual at `x`.
    fn magnitude(&self, x: f64) -> f64 {
        let ax = x.abs();
        (((self.d4.abs() * ax + self.d3.abs()) * ax + self.d2.abs()) * ax + self.d1.abs()) * ax
            + self.d0.abs()
    }

    /// `|p(x)|` relative to [`Self::magnitude`].
    pub fn relative_residual(&self, x: f64) -> f64 {
        let m = self.magnitude(x);
        if m == 0.0 {
            0.0
        } else {
            self.eval(x).abs() / m
        }
    }

    /// Effective degree after dropping negligible leading coefficients.
    pub fn degree(&self) -> usize {
        let scale = self.max_abs();
        let c = self.as_array();
        for (i, v) in c.iter().enumerate() {
            if v.abs() > DEGREE_DROP * scale {
                return 4 - i;
            }
        }
        0
    }

    /// Discriminant of the polynomial at its effective degree.
    pub fn discriminant(&self) -> f64 {
        match self.degree() {
            4 => discriminant4(self.d4, self.d3, self.d2, self.d1, self.d0),
            3 => discriminant3(self.d3, self.d2, self.d1, self.d0),
            2 => self.d1 * self.d1 - 4.0 * self.d2 * self.d0,
            _ => 0.0,
        }
    }
}

/// Discriminant of `a x⁴ + b x³ + c x² + d x + e`.
pub fn discriminant4(a: f64, b: f64, c: f64, d: f64, e: f64) -> f64 {
    256.0 * a * a * a * e * e * e - 192.0 * a * a * b * d * e * e - 128.0 * a * a * c * c * e * e
        + 144.0 * a * a * c * d * d * e
        - 27.0 * a * a * d * d * d * d
        + 144.0 * a * b * b * c * e * e
        - 6.0 * a * b * b * d * d * e
        - 80.0 * a * b * c * c * d * e
        + 18.0 * a * b * c * d * d * d
        + 16.0 * a * c * c * c * c * e
        - 4.0 * a * c * c * c * d * d
        - 27.0 * b * b * b * b * e * e
        + 18.0 * b * b * b * c * d * e
        - 4.0 * b * b * b * d * d * d
        - 4.0 * b * b * c * c * c * e
        + b * b * c * c * d * d
}

/// Discriminant of `a x³ + b x² + c x + d`.
pub fn discriminant3(a: f64, b: f64, c: f64, d: f64) -> f64 {
    b * b * c * c - 4.0 * a * c * c * c - 4.0 * b * b * b * d - 27.0 * a * a * d * d
        + 18.0 * a * b * c * d
}

fn quadratic(a: f64, b: f64, c: f64) -> Vec<f64> {
    // a x² + b x + c with a ≠ 0
    let disc = b * b - 4.0 * a * c;
    let tol = 1e-14 * (b * b + (4.0 * a * c).abs());
    if disc < -tol {
        return Vec::new();
    }
    let sq = disc.max(0.0).sqrt();
    if sq == 0.0 {
        let x = -b / (2.0 * a);
        return vec![x, x];
    }
    let q = -0.5 * (b + b.signum() * sq);
    if q == 0.0 {
        return vec![0.0, 0.0];
    }
    vec![q / a, c / q]
}

fn cubic(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let (b, c, d) = (b / a, c / a, d / a);
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let half_q = 0.5 * q;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;
    if disc > 0.0 {
        let s = disc.sqrt();
        let u = (-half_q + if half_q > 0.0 { -s } else { s }).cbrt();
        let t = if u == 0.0 { 0.0 } else { u - third_p / u };
        vec![t - shift]
    } else if third_p == 0.0 {
        vec![-shift; 3]
    } else {
        let r = (-third_p).sqrt();
        let arg = (-half_q / (r * r * r)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| {
                2.0 * r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift
            })
            .collect()
    }
}

fn ferrari(c: &[f64; 5]) -> Vec<f64> {
    let (a, b, cc, d) = (c[1] / c[0], c[2] / c[0], c[3] / c[0], c[4] / c[0]);
    let shift = a / 4.0;
    let a2 = a * a;
    let p = b - 3.0 * a2 / 8.0;
    let q = cc - a * b / 2.0 + a2 * a / 8.0;
    let r = d - a * cc / 4.0 + a2 * b / 16.0 - 3.0 * a2 * a2 / 256.0;
    let scale = 1.0 + p.abs() + q.abs().sqrt() + r.abs().sqrt();
    let ys: Vec<f64> = if q.abs() <= 1e-14 * scale * scale * scale {
        quadratic(1.0, p, r)
            .into_iter()
            .filter(|z| *z >= -1e-14 * scale * scale)
            .flat_map(|z| {
                let s = z.max(0.0).sqrt();
                [s, -s]
            })
            .collect()
    } else {
        let m = cubic(8.0, 8.0 * p, 2.0 * p * p - 8.0 * r, -q * q)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        if !(m > 0.0) {
            return Vec::new();
        }
        let s = (2.0 * m).sqrt();
        let mut ys = quadratic(1.0, -s, p / 2.0 + m + q / (2.0 * s));
        ys.extend(quadratic(1.0, s, p / 2.0 + m - q / (2.0 * s)));
        ys
    };
    ys.into_iter().map(|y| y - shift).collect()
}

/// Real eigenvalues of the companion matrix of `c[0] xⁿ + ... + c[n]`.
pub fn companion_real_roots(c: &[f64]) -> Vec<f64> {
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i == 0 {
            -c[j + 1] / c[0]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    m.complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-7 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect()
}

fn polish(p: &QuarticCoeffs, mut x: f64) -> f64 {
    for _ in 0..3 {
        let f = p.eval(x);
        let df = p.deriv(x);
        if df == 0.0 || !df.is_finite() {
            break;
        }
        let nx = x - f / df;
        if !nx.is_finite() || p.eval(nx).abs() > f.abs() {
            break;
        }
        x = nx;
    }
    x
}

/// All real roots, with multiplicity, in ascending order.
///
/// Each root is polished by Newton steps on the full polynomial.
pub fn solve_quartic(p: &QuarticCoeffs) -> Result<Vec<f64>> {
    let scale = p.max_abs();
    if !(scale >= 1e-300) || !scale.is_finite() {
        return Err(Error::Numerical(
            "polynomial coefficients are all zero or not finite".into(),
        ));
    }
    let c: Vec<f64> = p.as_array().iter().map(|v| v / scale).collect();
    let deg = p.degree();
    let lead = 4 - deg;
    let raw = match deg {
        0 => Vec::new(),
        1 => vec![-c[4] / c[3]],
        2 => quadratic(c[2], c[3], c[4]),
        3 => cubic(c[1], c[2], c[3], c[4]),
        _ => {
            let arr = [c[0], c[1], c[2], c[3], c[4]];
            let disc = discriminant4(arr[0], arr[1], arr[2], arr[3], arr[4]);
            let roots = ferrari(&arr);
            if disc.abs() < ILL_CONDITIONED || roots.iter().any(|r| !r.is_finite()) {
                companion_real_roots(&arr)
            } else {
                roots
            }
        }
    };
    let fallback_needed = deg == 3 && raw.is_empty();
    let raw = if fallback_needed {
        companion_real_roots(&c[lead..])
    } else {
        raw
    };
    let mut roots: Vec<f64> = raw.into_iter().map(|x| polish(p, x)).collect();
    roots.sort_by(|a, b| a.total_cmp(b));
    Ok(roots)
}
