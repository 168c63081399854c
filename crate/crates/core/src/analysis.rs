//! Closed-form analysis of the voncos family `e^{κ cos(θ-μ)}(1 + ν cos θ)/C`.
//!
//! Critical points of the density solve `κ sin(θ-μ)(1 + ν cos θ) + ν sin θ = 0`.
//! With `x = tan(θ/2)` this becomes the quartic
//! `d₄x⁴ + d₃x³ + d₂x² + d₁x + d₀ = 0` where, writing `b₁ = cos μ`,
//! `b₂ = sin μ` and `b₃ = ν/κ`,
//!
//! ```text
//! d₄ = b₂(1-ν)   d₃ = 2b₃ + 2b₁(1-ν)   d₂ = 2b₂ν
//! d₁ = 2b₃ + 2b₁(1+ν)                  d₀ = -b₂(1+ν)
//! ```
//!
//! The substitution misses `θ = π`, which is checked separately.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circular::{wrap_angle, CircularDensity, TWO_PI};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::quartic::{solve_quartic, QuarticCoeffs};
use crate::special::bessel_i_scaled;
use crate::torus::VonCosParams;
use crate::{Error, Result};

/// Largest trigonometric moment order accepted.
pub const MAX_MOMENT_ORDER: i32 = 50;

/// Relative discriminant size treated as a modality boundary.
pub const DEGENERATE_DISCRIMINANT: f64 = 1e-10;

/// Densities below this are clipped out of entropy and KL integrands.
const CLIP: f64 = 1e-300;

fn scaled_i(p: i32, kappa: f64) -> Result<f64> {
    bessel_i_scaled(p.unsigned_abs(), kappa)
}

/// `Φ_p = E[e^{ipθ}]` in closed form.
pub fn trig_moment(p: i32, params: &VonCosParams) -> Result<Complex64> {
    if p.abs() > MAX_MOMENT_ORDER {
        return Err(Error::Domain(format!(
            "moment order must satisfy |p| <= {MAX_MOMENT_ORDER}, got {p}"
        )));
    }
    if p == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let VonCosParams { mu, kappa, nu } = *params;
    let i0 = scaled_i(0, kappa)?;
    let i1 = scaled_i(1, kappa)?;
    let pf = p as f64;
    let num = Complex64::from_polar(nu * scaled_i(p - 1, kappa)?, (pf - 1.0) * mu)
        + Complex64::from_polar(2.0 * scaled_i(p, kappa)?, pf * mu)
        + Complex64::from_polar(nu * scaled_i(p + 1, kappa)?, (pf + 1.0) * mu);
    Ok(num / (2.0 * (i0 + nu * mu.cos() * i1)))
}

/// Mean resultant length, mean direction and circular variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircularSummary {
    pub rho1: f64,
    pub mu1: f64,
    pub variance: f64,
}

fn require_symmetric(params: &VonCosParams) -> Result<()> {
    let m = params.mu.min(TWO_PI - params.mu);
    if m > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "symmetric summaries need mu = 0, got {}",
            params.mu
        )));
    }
    Ok(())
}

/// Summary of the symmetric (`μ = 0`) case.
pub fn circular_summary(params: &VonCosParams) -> Result<CircularSummary> {
    require_symmetric(params)?;
    let VonCosParams { kappa, nu, .. } = *params;
    let (i0, i1, i2) = (scaled_i(0, kappa)?, scaled_i(1, kappa)?, scaled_i(2, kappa)?);
    let rho1 = (nu * i0 + 2.0 * i1 + nu * i2) / (2.0 * (i0 + nu * i1));
    Ok(CircularSummary {
        rho1,
        mu1: 0.0,
        variance: 1.0 - rho1,
    })
}

/// Summary for any `μ`, from the modulus and argument of `Φ₁`.
pub fn circular_summary_general(params: &VonCosParams) -> Result<CircularSummary> {
    let phi1 = trig_moment(1, params)?;
    let rho1 = phi1.norm();
    Ok(CircularSummary {
        rho1,
        mu1: wrap_angle(phi1.arg()),
        variance: 1.0 - rho1,
    })
}

/// Quartic whose real roots are `tan(θ/2)` at the critical angles. Needs `κ > 0`.
pub fn quartic_coeffs(params: &VonCosParams) -> Result<QuarticCoeffs> {
    let VonCosParams { mu, kappa, nu } = *params;
    if !(kappa > 0.0) {
        return Err(Error::Domain("the critical-point quartic needs kappa > 0".into()));
    }
    let (b1, b2, b3) = (mu.cos(), mu.sin(), nu / kappa);
    Ok(QuarticCoeffs::new(
        b2 * (1.0 - nu),
        2.0 * b3 + 2.0 * b1 * (1.0 - nu),
        2.0 * b2 * nu,
        2.0 * b3 + 2.0 * b1 * (1.0 + nu),
        -b2 * (1.0 + nu),
    ))
}

/// Derivative of the log density.
pub fn log_density_slope(params: &VonCosParams, theta: f64) -> f64 {
    let VonCosParams { mu, kappa, nu } = *params;
    -kappa * (theta - mu).sin() - nu * theta.sin() / (1.0 + nu * theta.cos())
}

/// Second derivative of the log density.
pub fn log_density_curvature(params: &VonCosParams, theta: f64) -> f64 {
    let VonCosParams { mu, kappa, nu } = *params;
    let w = 1.0 + nu * theta.cos();
    -kappa * (theta - mu).cos() - nu * (theta.cos() + nu) / (w * w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalKind {
    Mode,
    Antimode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalAngle {
    pub theta: f64,
    pub kind: CriticalKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Unimodal,
    Bimodal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityReport {
    pub classification: Modality,
    pub discriminant: f64,
    /// Set when `|Δ|` is below [`DEGENERATE_DISCRIMINANT`] relative to the
    /// coefficient scale; the classification is then reported as unimodal.
    pub degenerate: bool,
    pub coefficients: Option<QuarticCoeffs>,
    pub critical_angles: Vec<CriticalAngle>,
}

fn classify(params: &VonCosParams, theta: f64) -> CriticalKind {
    if log_density_curvature(params, theta) < 0.0 {
        CriticalKind::Mode
    } else {
        CriticalKind::Antimode
    }
}

/// Critical angles in `[0, 2π)`, ascending, each labelled mode or antimode.
pub fn critical_points(params: &VonCosParams) -> Result<Vec<CriticalAngle>> {
    if params.kappa == 0.0 {
        return Ok(vec![
            CriticalAngle { theta: 0.0, kind: CriticalKind::Mode },
            CriticalAngle { theta: PI, kind: CriticalKind::Antimode },
        ]);
    }
    let coeffs = quartic_coeffs(params)?;
    let mut angles: Vec<f64> = solve_quartic(&coeffs)?
        .into_iter()
        .map(|x| 2.0 * x.atan())
        .collect();
    let scale = params.kappa + params.nu;
    if log_density_slope(params, PI).abs() <= 1e-10 * scale {
        angles.push(PI);
    }
    let mut polished: Vec<f64> = angles
        .into_iter()
        .map(|mut t| {
            for _ in 0..3 {
                let c = log_density_curvature(params, t);
                if c == 0.0 {
                    break;
                }
                let step = log_density_slope(params, t) / c;
                if !step.is_finite() || step.abs() > 1e-3 {
                    break;
                }
                t -= step;
            }
            wrap_angle(t)
        })
        .collect();
    polished.sort_by(|a, b| a.total_cmp(b));
    polished.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if polished.len() > 1 {
        let first = polished[0];
        let last = *polished.last().expect("non-empty");
        if first + TWO_PI - last < 1e-9 {
            polished.pop();
        }
    }
    Ok(polished
        .into_iter()
        .map(|theta| CriticalAngle { theta, kind: classify(params, theta) })
        .collect())
}

/// Unimodal/bimodal classification from the sign of the discriminant of the
/// critical-point polynomial at its effective degree.
pub fn modality(params: &VonCosParams) -> Result<ModalityReport> {
    let critical_angles = critical_points(params)?;
    if params.kappa == 0.0 {
        return Ok(ModalityReport {
            classification: Modality::Unimodal,
            discriminant: -64.0 * params.nu.powi(4),
            degenerate: false,
            coefficients: None,
            critical_angles,
        });
    }
    let coeffs = quartic_coeffs(params)?;
    let disc = coeffs.discriminant();
    let deg = coeffs.degree() as i32;
    let scale = coeffs.max_abs().powi((2 * deg - 2).max(0));
    let degenerate = disc.abs() < DEGENERATE_DISCRIMINANT * scale;
    let classification = if !degenerate && disc > 0.0 {
        Modality::Bimodal
    } else {
        Modality::Unimodal
    };
    Ok(ModalityReport {
        classification,
        discriminant: disc,
        degenerate,
        coefficients: Some(coeffs),
        critical_angles,
    })
}

/// `KL(f_c ‖ h)` from the cardioid `f_c(θ) = (1 + ν cos θ)/2π` to the voncos
/// density `h`: `ln(I₀(κ) + ν cos μ I₁(κ)) - νκ cos μ / 2`.
pub fn kl_from_cardioid(params: &VonCosParams) -> Result<f64> {
    let VonCosParams { mu, kappa, nu } = *params;
    let c = mu.cos();
    let inner = scaled_i(0, kappa)? + nu * c * scaled_i(1, kappa)?;
    Ok(inner.ln() + kappa - 0.5 * nu * kappa * c)
}

/// `(2 + 3ν - ν²)/(1 + ν)` for `ν ∈ (0, 1)`.
pub fn kl_kappa_slope_symmetric(nu: f64) -> Result<f64> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::Domain(format!("nu must lie in (0, 1), got {nu}")));
    }
    Ok((2.0 + 3.0 * nu - nu * nu) / (1.0 + nu))
}

/// Exact `∂/∂κ` of [`kl_from_cardioid`]:
/// `(A + ν cos μ (1 - A/κ)) / (1 + ν cos μ A) - ν cos μ / 2`, which tends to
/// `1 - ν cos μ / 2` as `κ → ∞` and to `0` as `κ → 0`.
pub fn kl_kappa_derivative(params: &VonCosParams) -> Result<f64> {
    let VonCosParams { mu, kappa, nu } = *params;
    let c = nu * mu.cos();
    if kappa == 0.0 {
        return Ok(0.0);
    }
    let a = crate::special::ratio_a(kappa)?;
    Ok((a + c * (1.0 - a / kappa)) / (1.0 + c * a) - 0.5 * c)
}

fn expect_log<F: Fn(f64) -> f64>(q: &CircularDensity, g: F, spec: &QuadratureSpec) -> f64 {
    integrate(
        |t| {
            let f = q.density(t);
            if f < CLIP {
                0.0
            } else {
                f * g(t)
            }
        },
        0.0,
        TWO_PI,
        spec,
    )
    .value
}

/// Differential entropy `-∫ q ln q`.
pub fn entropy_quadrature(q: &CircularDensity, spec: &QuadratureSpec) -> f64 {
    -expect_log(q, |t| q.log_density(t), spec)
}

/// Cross entropy `-∫ q ln h`.
pub fn cross_entropy_quadrature(q: &CircularDensity, target: &CircularDensity, spec: &QuadratureSpec) -> f64 {
    -expect_log(q, |t| target.log_density(t), spec)
}

/// `KL(q ‖ h) = ∫ q ln(q/h)`; `+∞` if `h` vanishes where `q` does not.
pub fn kl_quadrature(q: &CircularDensity, target: &CircularDensity, spec: &QuadratureSpec) -> f64 {
    expect_log(q, |t| q.log_density(t) - target.log_density(t), spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeAntimode {
    pub mode_height: f64,
    pub antimode_height: f64,
}

/// Density at the mode `θ = 0` and antimode `θ = π` of the symmetric case.
pub fn mode_antimode_values(params: &VonCosParams) -> Result<ModeAntimode> {
    require_symmetric(params)?;
    let VonCosParams { kappa, nu, .. } = *params;
    let denom = TWO_PI * (scaled_i(0, kappa)? + nu * scaled_i(1, kappa)?);
    Ok(ModeAntimode {
        mode_height: (1.0 + nu) / denom,
        antimode_height: (-2.0 * kappa).exp() * (1.0 - nu) / denom,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub p: i32,
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    pub arg: f64,
}

/// Everything the `analyze` command reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub params: VonCosParams,
    pub moments: Vec<MomentEntry>,
    pub modality: ModalityReport,
    pub kl_cardioid: f64,
    pub summary: CircularSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode_antimode: Option<ModeAntimode>,
}

/// Moments `1..=max_p`, modality, KL from the cardioid and summaries.
pub fn analyze(params: &VonCosParams, max_p: i32) -> Result<AnalysisReport> {
    let moments = (1..=max_p)
        .map(|p| {
            trig_moment(p, params).map(|z| MomentEntry {
                p,
                re: z.re,
                im: z.im,
                modulus: z.norm(),
                arg: z.arg(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let symmetric = require_symmetric(params).is_ok();
    let summary = if symmetric {
        circular_summary(params)?
    } else {
        circular_summary_general(params)?
    };
    Ok(AnalysisReport {
        params: *params,
        moments,
        modality: modality(params)?,
        kl_cardioid: kl_from_cardioid(params)?,
        summary,
        mode_antimode: if symmetric { Some(mode_antimode_values(params)?) } else { None },
    })
}
