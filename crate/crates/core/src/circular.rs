//! Circular densities on `[0, 2π)`.
//!
//! [`DistParams`] is the serialisable parameter record; [`CircularDensity`]
//! validates it once and caches every derived constant (normalisers and the
//! Kato–Jones location/scale quantities) so evaluation is cheap and pure.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::quadrature::{integrate, QuadratureSpec};
use crate::special::{bessel_i_scaled, KAPPA_MAX};
use crate::torus::{weighted_norm_const, VonCosParams};
use crate::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

const LN_TWO_PI: f64 = 1.837_877_066_409_345_5;

/// Reduce an angle into `[0, 2π)` by floored modular reduction.
#[inline]
pub fn wrap_angle(theta: f64) -> f64 {
    if (0.0..TWO_PI).contains(&theta) {
        return theta;
    }
    let t = theta.rem_euclid(TWO_PI);
    if t >= TWO_PI {
        0.0
    } else {
        t
    }
}

/// Anything that can be evaluated as a (not necessarily normalised) density.
pub trait Density {
    fn density(&self, theta: f64) -> f64;
}

impl<F: Fn(f64) -> f64> Density for F {
    fn density(&self, theta: f64) -> f64 {
        self(theta)
    }
}

/// Parameters of a circular density. Serialised with a lowercase `dist` tag,
/// e.g. `{"dist":"vonmises","mu":0.0,"kappa":1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "lowercase")]
pub enum DistParams {
    Uniform,
    VonMises {
        mu: f64,
        kappa: f64,
    },
    /// Cardioid with its location fixed at 0.
    Cardioid {
        nu: f64,
    },
    WrappedCauchy {
        mu: f64,
        rho: f64,
    },
    KatoJones {
        mu: f64,
        nu1: f64,
        rho: f64,
        kappa: f64,
    },
    /// Von Mises weighted by `1 + ν cos θ`, with a closed-form normaliser.
    VonCos {
        mu: f64,
        kappa: f64,
        nu: f64,
    },
    /// Any base density weighted by `1 + ν cos θ`.
    AreaWeighted {
        base: Box<DistParams>,
        nu: f64,
    },
}

impl DistParams {
    pub fn vonmises(mu: f64, kappa: f64) -> Self {
        Self::VonMises { mu, kappa }
    }

    pub fn voncos(mu: f64, kappa: f64, nu: f64) -> Self {
        Self::VonCos { mu, kappa, nu }
    }

    pub fn katojones(mu: f64, nu1: f64, rho: f64, kappa: f64) -> Self {
        Self::KatoJones { mu, nu1, rho, kappa }
    }

    pub fn wrapped_cauchy(mu: f64, rho: f64) -> Self {
        Self::WrappedCauchy { mu, rho }
    }

    pub fn area_weighted(base: DistParams, nu: f64) -> Self {
        Self::AreaWeighted {
            base: Box::new(base),
            nu,
        }
    }

    /// Lowercase family tag as used in JSON.
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::VonMises { .. } => "vonmises",
            Self::Cardioid { .. } => "cardioid",
            Self::WrappedCauchy { .. } => "wrappedcauchy",
            Self::KatoJones { .. } => "katojones",
            Self::VonCos { .. } => "voncos",
            Self::AreaWeighted { .. } => "areaweighted",
        }
    }
}

impl fmt::Display for DistParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform => write!(f, "uniform"),
            Self::VonMises { mu, kappa } => write!(f, "vonmises:mu={mu},kappa={kappa}"),
            Self::Cardioid { nu } => write!(f, "cardioid:nu={nu}"),
            Self::WrappedCauchy { mu, rho } => write!(f, "wrappedcauchy:mu={mu},rho={rho}"),
            Self::KatoJones { mu, nu1, rho, kappa } => {
                write!(f, "katojones:mu={mu},nu1={nu1},rho={rho},kappa={kappa}")
            }
            Self::VonCos { mu, kappa, nu } => write!(f, "voncos:mu={mu},kappa={kappa},nu={nu}"),
            Self::AreaWeighted { base, nu } => write!(f, "areaweighted[{base}]:nu={nu}"),
        }
    }
}

/// Parses either a JSON record or the shorthand `family:key=value,...`,
/// for example `vonmises:mu=0,kappa=3` or `wc:mu=0,rho=0.5`.
impl FromStr for DistParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return Ok(serde_json::from_str(s)?);
        }
        let (family, rest) = match s.split_once(':') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (s, ""),
        };
        let mut kv = std::collections::BTreeMap::new();
        for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{part}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number '{}' for {}", v.trim(), k.trim())))?;
            kv.insert(k.trim().to_ascii_lowercase(), v);
        }
        let get = |k: &str| {
            kv.get(k)
                .copied()
                .ok_or_else(|| Error::Parse(format!("missing parameter '{k}' for {family}")))
        };
        let params = match family.to_ascii_lowercase().as_str() {
            "uniform" => Self::Uniform,
            "vonmises" | "vm" => Self::VonMises {
                mu: get("mu")?,
                kappa: get("kappa")?,
            },
            "cardioid" => Self::Cardioid { nu: get("nu")? },
            "wrappedcauchy" | "wc" => Self::WrappedCauchy {
                mu: get("mu")?,
                rho: get("rho")?,
            },
            "katojones" | "kj" => Self::KatoJones {
                mu: get("mu")?,
                nu1: get("nu1")?,
                rho: get("rho")?,
                kappa: get("kappa")?,
            },
            "voncos" => Self::VonCos {
                mu: get("mu")?,
                kappa: get("kappa")?,
                nu: get("nu")?,
            },
            other => return Err(Error::Parse(format!("unknown distribution '{other}'"))),
        };
        Ok(params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KatoJonesConsts {
    pub gamma: f64,
    pub xi: f64,
    pub eta: f64,
    ln_norm: f64,
    offset: f64,
}

#[derive(Debug, Clone)]
enum Model {
    Uniform,
    VonMises {
        mu: f64,
        kappa: f64,
        ln_norm: f64,
    },
    Cardioid {
        nu: f64,
    },
    WrappedCauchy {
        mu: f64,
        rho: f64,
    },
    KatoJones {
        rho: f64,
        kappa: f64,
        c: KatoJonesConsts,
    },
    VonCos {
        p: VonCosParams,
        ln_norm: f64,
    },
    Weighted {
        base: Box<CircularDensity>,
        nu: f64,
        ln_c: f64,
    },
}

/// A validated circular density with cached constants.
#[derive(Debug, Clone)]
pub struct CircularDensity {
    params: DistParams,
    model: Model,
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

fn check_kappa(v: f64) -> Result<()> {
    if !(v >= 0.0) || v > KAPPA_MAX {
        return Err(Error::InvalidParameter(format!(
            "kappa must lie in [0, {KAPPA_MAX}], got {v}"
        )));
    }
    Ok(())
}

fn check_rho(v: f64) -> Result<()> {
    if !(0.0..1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!("rho must lie in [0, 1), got {v}")));
    }
    Ok(())
}

pub(crate) fn check_nu(v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::InvalidParameter(format!("nu must lie in (0, 1), got {v}")));
    }
    Ok(())
}

/// `ln(2π I_0(κ))` minus `κ`, i.e. the log normaliser of the von Mises
/// density written as `exp(κ(cos(θ-μ) - 1) - ln_norm)`.
fn vm_scaled_ln_norm(kappa: f64) -> Result<f64> {
    Ok(LN_TWO_PI + bessel_i_scaled(0, kappa)?.ln())
}

impl KatoJonesConsts {
    /// Derived location and concentration quantities of the Kato–Jones family.
    pub fn new(mu: f64, nu1: f64, rho: f64, kappa: f64) -> Result<Self> {
        let r2 = rho * rho;
        let c2 = (2.0 * nu1).cos();
        let s2 = (2.0 * nu1).sin();
        let gamma = mu + nu1;
        let xi = (r2 * r2 + 2.0 * r2 * c2 + 1.0).sqrt();
        let eta = mu + (r2 * s2).atan2(r2 * c2 + 1.0);
        let ln_norm = (1.0 - r2).ln() - LN_TWO_PI - bessel_i_scaled(0, kappa)?.ln() - kappa;
        Ok(Self {
            gamma,
            xi,
            eta,
            ln_norm,
            offset: 2.0 * rho * nu1.cos(),
        })
    }
}

impl CircularDensity {
    pub fn new(params: DistParams) -> Result<Self> {
        let model = match &params {
            DistParams::Uniform => Model::Uniform,
            DistParams::VonMises { mu, kappa } => {
                check_finite("mu", *mu)?;
                check_kappa(*kappa)?;
                Model::VonMises {
                    mu: wrap_angle(*mu),
                    kappa: *kappa,
                    ln_norm: vm_scaled_ln_norm(*kappa)?,
                }
            }
            DistParams::Cardioid { nu } => {
                check_nu(*nu)?;
                Model::Cardioid { nu: *nu }
            }
            DistParams::WrappedCauchy { mu, rho } => {
                check_finite("mu", *mu)?;
                check_rho(*rho)?;
                Model::WrappedCauchy {
                    mu: wrap_angle(*mu),
                    rho: *rho,
                }
            }
            DistParams::KatoJones { mu, nu1, rho, kappa } => {
                check_finite("mu", *mu)?;
                check_finite("nu1", *nu1)?;
                check_rho(*rho)?;
                check_kappa(*kappa)?;
                Model::KatoJones {
                    rho: *rho,
                    kappa: *kappa,
                    c: KatoJonesConsts::new(*mu, *nu1, *rho, *kappa)?,
                }
            }
            DistParams::VonCos { mu, kappa, nu } => Self::voncos_model(*mu, *kappa, *nu)?,
            DistParams::AreaWeighted { base, nu } => match base.as_ref() {
                DistParams::VonMises { mu, kappa } => Self::voncos_model(*mu, *kappa, *nu)?,
                DistParams::AreaWeighted { .. } => {
                    return Err(Error::InvalidParameter(
                        "nested area weighting is not supported".into(),
                    ))
                }
                other => {
                    check_nu(*nu)?;
                    let base = CircularDensity::new(other.clone())?;
                    let c = weighted_norm_const(&base, *nu, &QuadratureSpec::default())?;
                    Model::Weighted {
                        base: Box::new(base),
                        nu: *nu,
                        ln_c: c.ln(),
                    }
                }
            },
        };
        Ok(Self { params, model })
    }

    fn voncos_model(mu: f64, kappa: f64, nu: f64) -> Result<Model> {
        let p = VonCosParams::new(mu, kappa, nu)?;
        let i0 = bessel_i_scaled(0, kappa)?;
        let i1 = bessel_i_scaled(1, kappa)?;
        let ln_norm = LN_TWO_PI + (i0 + nu * p.mu.cos() * i1).ln();
        Ok(Model::VonCos { p, ln_norm })
    }

    pub fn params(&self) -> &DistParams {
        &self.params
    }

    /// Kato–Jones derived constants, when this is a Kato–Jones density.
    pub fn katojones_consts(&self) -> Option<KatoJonesConsts> {
        match &self.model {
            Model::KatoJones { c, .. } => Some(*c),
            _ => None,
        }
    }

    /// Voncos parameters, for `VonCos` and `AreaWeighted{VonMises}`.
    pub fn voncos_params(&self) -> Option<VonCosParams> {
        match &self.model {
            Model::VonCos { p, .. } => Some(*p),
            _ => None,
        }
    }

    /// Density at `theta` (wrapped into `[0, 2π)` first).
    pub fn density(&self, theta: f64) -> f64 {
        let t = wrap_angle(theta);
        match &self.model {
            Model::Uniform => 1.0 / TWO_PI,
            Model::Cardioid { nu } => (1.0 + nu * t.cos()) / TWO_PI,
            Model::WrappedCauchy { mu, rho } => {
                (1.0 - rho * rho) / (TWO_PI * (1.0 + rho * rho - 2.0 * rho * (t - mu).cos()))
            }
            _ => self.log_density(t).exp(),
        }
    }

    /// Log density at `theta`, evaluated without forming `e^{κ cos}` directly.
    pub fn log_density(&self, theta: f64) -> f64 {
        let t = wrap_angle(theta);
        match &self.model {
            Model::Uniform => -LN_TWO_PI,
            Model::VonMises { mu, kappa, ln_norm } => kappa * ((t - mu).cos() - 1.0) - ln_norm,
            Model::Cardioid { nu } => (1.0 + nu * t.cos()).ln() - LN_TWO_PI,
            Model::WrappedCauchy { mu, rho } => {
                (1.0 - rho * rho).ln()
                    - LN_TWO_PI
                    - (1.0 + rho * rho - 2.0 * rho * (t - mu).cos()).ln()
            }
            Model::KatoJones { rho, kappa, c } => {
                let d = 1.0 + rho * rho - 2.0 * rho * (t - c.gamma).cos();
                c.ln_norm - d.ln() + kappa * (c.xi * (t - c.eta).cos() - c.offset) / d
            }
            Model::VonCos { p, ln_norm } => {
                p.kappa * ((t - p.mu).cos() - 1.0) + (1.0 + p.nu * t.cos()).ln() - ln_norm
            }
            Model::Weighted { base, nu, ln_c } => {
                base.log_density(t) + (1.0 + nu * t.cos()).ln() - ln_c
            }
        }
    }

    /// Angles where the density derivative vanishes, ascending in `[0, 2π)`.
    ///
    /// Kato–Jones and generic area-weighted densities return an empty list,
    /// meaning "unknown"; the envelope builder then uses midpoint heights.
    pub fn stationary_points(&self) -> Vec<f64> {
        let mut pts = match &self.model {
            Model::Uniform | Model::KatoJones { .. } => Vec::new(),
            Model::VonMises { mu, kappa, .. } => {
                if *kappa == 0.0 {
                    Vec::new()
                } else {
                    vec![*mu, wrap_angle(mu + PI)]
                }
            }
            Model::Cardioid { .. } => vec![0.0, PI],
            Model::WrappedCauchy { mu, rho } => {
                if *rho == 0.0 {
                    Vec::new()
                } else {
                    vec![*mu, wrap_angle(mu + PI)]
                }
            }
            Model::VonCos { p, .. } => analysis::critical_points(p)
                .map(|v| v.into_iter().map(|c| c.theta).collect())
                .unwrap_or_default(),
            Model::Weighted { base, .. } => match base.model {
                Model::Uniform => vec![0.0, PI],
                _ => Vec::new(),
            },
        };
        pts.sort_by(|a, b| a.total_cmp(b));
        pts
    }

    /// Whether [`stationary_points`](Self::stationary_points) is complete.
    /// An empty list from a density where this is false means "unknown".
    pub fn stationary_points_known(&self) -> bool {
        match &self.model {
            Model::KatoJones { .. } => false,
            Model::Weighted { base, .. } => matches!(base.model, Model::Uniform),
            _ => true,
        }
    }
}

impl Density for CircularDensity {
    fn density(&self, theta: f64) -> f64 {
        CircularDensity::density(self, theta)
    }
}

/// `∫_0^θ f` by adaptive Simpson quadrature, clamped to `[0, 1]`.
pub fn cdf_quadrature(d: &CircularDensity, theta: f64, q: &QuadratureSpec) -> Result<f64> {
    q.validate()?;
    if !(0.0..=TWO_PI).contains(&theta) {
        return Err(Error::Domain(format!("cdf argument must lie in [0, 2π], got {theta}")));
    }
    let v = integrate(|t| d.density(t), 0.0, theta, q).value;
    Ok(v.clamp(0.0, 1.0))
}

/// Normalising integral `∫_0^{2π} f` by quadrature.
pub fn total_mass<D: Density + ?Sized>(d: &D, q: &QuadratureSpec) -> f64 {
    integrate(|t| d.density(t), 0.0, TWO_PI, q).value
}

/// Tabulated CDF on a uniform grid with cubic Hermite interpolation, used
/// when many CDF evaluations are needed (goodness-of-fit tests).
#[derive(Debug, Clone)]
pub struct CdfTable {
    h: f64,
    cum: Vec<f64>,
    pdf: Vec<f64>,
}

impl CdfTable {
    pub fn new<D: Density + ?Sized>(d: &D, panels: usize) -> Self {
        let panels = panels.max(16);
        let h = TWO_PI / panels as f64;
        let pdf: Vec<f64> = (0..=panels).map(|j| d.density(j as f64 * h)).collect();
        let mut cum = Vec::with_capacity(panels + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for j in 0..panels {
            let mid = d.density((j as f64 + 0.5) * h);
            acc += h / 6.0 * (pdf[j] + 4.0 * mid + pdf[j + 1]);
            cum.push(acc);
        }
        Self { h, cum, pdf }
    }

    /// CDF at `theta`, which is clamped to `[0, 2π]`.
    pub fn cdf(&self, theta: f64) -> f64 {
        let t = theta.clamp(0.0, TWO_PI);
        let n = self.cum.len() - 1;
        let j = ((t / self.h) as usize).min(n - 1);
        let s = (t - j as f64 * self.h) / self.h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let v = h00 * self.cum[j]
            + h10 * self.h * self.pdf[j]
            + h01 * self.cum[j + 1]
            + h11 * self.h * self.pdf[j + 1];
        v.clamp(0.0, 1.0)
    }

    /// Total mass of the tabulated density.
    pub fn total(&self) -> f64 {
        *self.cum.last().unwrap_or(&0.0)
    }
}
