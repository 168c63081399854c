//! Maximum-likelihood inference for the voncos family and its submodels.
//!
//! The log-likelihood of the full model is
//!
//! ```text
//! l = κ Σ cos(θᵢ-μ) + Σ ln(1 + ν cos θᵢ) - n ln 2π - n ln(I₀(κ) + ν cos μ I₁(κ))
//! ```
//!
//! With `A = A(κ)`, `A' = 1 - A/κ - A²`, `c = cos μ`, `s = sin μ` and
//! `g = 1 + ν c A`, the score and the observed information below are derived
//! directly from this expression and cross-checked against finite
//! differences in the tests.

mod gof;
pub mod optimize;

pub use gof::{chi_squared_gof, kolmogorov_sf, ks_test, GofResult, KsResult, DEFAULT_BINS};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::circular::{wrap_angle, CircularDensity, DistParams, TWO_PI};
use crate::envelope::RngStream;
use crate::quadrature::{integrate, QuadratureSpec};
use crate::special::{bessel_i_scaled, ratio_a, ratio_a_inverse, KAPPA_MAX};
use crate::{Error, Result};

const LN_TWO_PI: f64 = 1.837_877_066_409_345_5;

/// Smallest sample size accepted by [`fit_mle`].
pub const MIN_FIT_N: usize = 10;

/// Score norm (per observation) below which a fit counts as converged.
pub const SCORE_TOL: f64 = 1e-5;

/// Model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelSpec {
    /// `(μ, κ, ν)`.
    #[serde(rename = "voncos3")]
    VonCos3,
    /// `(κ, ν)` with `μ ≡ 0`.
    #[serde(rename = "voncos2")]
    VonCosSym2,
    /// `(μ, κ)`: the plain von Mises distribution.
    #[serde(rename = "vonmises")]
    VonMises2,
}

impl ModelSpec {
    pub fn dim(self) -> usize {
        match self {
            ModelSpec::VonCos3 => 3,
            ModelSpec::VonCosSym2 | ModelSpec::VonMises2 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelSpec::VonCos3 => "voncos3",
            ModelSpec::VonCosSym2 => "voncos2",
            ModelSpec::VonMises2 => "vonmises",
        }
    }

    /// Names of the free parameters, in the order used by [`score`] and the
    /// information matrices.
    pub fn free_names(self) -> &'static [&'static str] {
        match self {
            ModelSpec::VonCos3 => &["mu", "kappa", "nu"],
            ModelSpec::VonCosSym2 => &["kappa", "nu"],
            ModelSpec::VonMises2 => &["mu", "kappa"],
        }
    }
}

impl std::str::FromStr for ModelSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "voncos3" => Ok(ModelSpec::VonCos3),
            "voncos2" | "voncossym2" => Ok(ModelSpec::VonCosSym2),
            "vonmises" | "vonmises2" => Ok(ModelSpec::VonMises2),
            other => Err(Error::Parse(format!("unknown model '{other}'"))),
        }
    }
}

/// Parameter record. Fixed components are ignored by the family
/// (`mu` for [`ModelSpec::VonCosSym2`], `nu` for [`ModelSpec::VonMises2`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub mu: f64,
    pub kappa: f64,
    pub nu: f64,
}

impl Params {
    pub fn new(mu: f64, kappa: f64, nu: f64) -> Self {
        Self { mu, kappa, nu }
    }
}

/// Standard errors; `None` for parameters the family fixes or when the
/// information matrix is singular.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StdErrors {
    pub mu: Option<f64>,
    pub kappa: Option<f64>,
    pub nu: Option<f64>,
}

/// Sufficient statistics of an angle sample.
#[derive(Debug, Clone)]
struct Prepared {
    n: f64,
    sum_cos: f64,
    sum_sin: f64,
    cos: Vec<f64>,
}

impl Prepared {
    fn new(data: &[f64]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InsufficientData("empty data".into()));
        }
        if let Some(bad) = data.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite angle {bad}")));
        }
        let cos: Vec<f64> = data.iter().map(|t| t.cos()).collect();
        Ok(Self {
            n: data.len() as f64,
            sum_cos: cos.iter().sum(),
            sum_sin: data.iter().map(|t| t.sin()).sum(),
            cos,
        })
    }
}

/// Effective `(μ, κ, ν)` of a family with its fixed components applied.
fn effective(m: ModelSpec, p: &Params) -> Result<(f64, f64, f64)> {
    let (mu, nu) = match m {
        ModelSpec::VonCos3 => (p.mu, p.nu),
        ModelSpec::VonCosSym2 => (0.0, p.nu),
        ModelSpec::VonMises2 => (p.mu, 0.0),
    };
    if !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("mu must be finite, got {mu}")));
    }
    if !(p.kappa >= 0.0) || p.kappa >= KAPPA_MAX {
        return Err(Error::InvalidParameter(format!(
            "kappa must lie in [0, {KAPPA_MAX}), got {}",
            p.kappa
        )));
    }
    if m != ModelSpec::VonMises2 && !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidParameter(format!("nu must lie in (0, 1), got {nu}")));
    }
    Ok((mu, p.kappa, nu))
}

/// Pieces shared by the score and information formulas.
struct Terms {
    c: f64,
    s: f64,
    a: f64,
    a_prime: f64,
    g: f64,
    /// `Σ cos(θᵢ - μ)`
    sc: f64,
    /// `Σ sin(θᵢ - μ)`
    ss: f64,
}

fn terms(d: &Prepared, mu: f64, kappa: f64, nu: f64) -> Result<Terms> {
    let (s, c) = mu.sin_cos();
    let a = ratio_a(kappa)?;
    let a_prime = 1.0 - a / kappa - a * a;
    Ok(Terms {
        c,
        s,
        a,
        a_prime,
        g: 1.0 + nu * c * a,
        sc: c * d.sum_cos + s * d.sum_sin,
        ss: c * d.sum_sin - s * d.sum_cos,
    })
}

fn loglik_prepared(d: &Prepared, mu: f64, kappa: f64, nu: f64) -> Result<f64> {
    let (s, c) = mu.sin_cos();
    let mut weight = 0.0;
    if nu != 0.0 {
        for &ct in &d.cos {
            let w = 1.0 + nu * ct;
            if w <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            weight += w.ln();
        }
    }
    let inner = bessel_i_scaled(0, kappa)? + nu * c * bessel_i_scaled(1, kappa)?;
    let sc = c * d.sum_cos + s * d.sum_sin;
    Ok(kappa * sc + weight - d.n * LN_TWO_PI - d.n * (kappa + inner.ln()))
}

/// Log-likelihood of `data` (radians).
pub fn log_likelihood(m: ModelSpec, params: &Params, data: &[f64]) -> Result<f64> {
    let d = Prepared::new(data)?;
    let (mu, kappa, nu) = effective(m, params)?;
    loglik_prepared(&d, mu, kappa, nu)
}

fn score_prepared(m: ModelSpec, d: &Prepared, mu: f64, kappa: f64, nu: f64) -> Result<Vec<f64>> {
    let t = terms(d, mu, kappa, nu)?;
    let n = d.n;
    let d_mu = kappa * t.ss + n * nu * t.s * t.a / t.g;
    let d_kappa = t.sc - n * (t.a + nu * t.c * (1.0 - t.a / kappa)) / t.g;
    let d_nu = || d.cos.iter().map(|ct| ct / (1.0 + nu * ct)).sum::<f64>() - n * t.c * t.a / t.g;
    Ok(match m {
        ModelSpec::VonCos3 => vec![d_mu, d_kappa, d_nu()],
        ModelSpec::VonCosSym2 => vec![d_kappa, d_nu()],
        ModelSpec::VonMises2 => vec![d_mu, d_kappa],
    })
}

/// Analytic gradient of the log-likelihood over the family's free
/// parameters (see [`ModelSpec::free_names`]).
pub fn score(m: ModelSpec, params: &Params, data: &[f64]) -> Result<Vec<f64>> {
    let d = Prepared::new(data)?;
    let (mu, kappa, nu) = effective(m, params)?;
    if kappa == 0.0 {
        return Err(Error::Domain("the score needs kappa > 0".into()));
    }
    score_prepared(m, &d, mu, kappa, nu)
}

fn info_prepared(m: ModelSpec, d: &Prepared, mu: f64, kappa: f64, nu: f64) -> Result<DMatrix<f64>> {
    let t = terms(d, mu, kappa, nu)?;
    let n = d.n;
    let g2 = t.g * t.g;
    let (c, s, a, ap) = (t.c, t.s, t.a, t.a_prime);
    let j_mumu = kappa * t.sc - n * nu * a * (c + nu * a) / g2;
    let j_mukappa = -t.ss - n * nu * s * ap / g2;
    let j_munu = -n * s * a / g2;
    let nk = a + nu * c * (1.0 - a / kappa);
    let nk_prime = ap - nu * c * (kappa * ap - a) / (kappa * kappa);
    let j_kappakappa = n * (nk_prime * t.g - nk * nu * c * ap) / g2;
    let j_kappanu = n * c * ap / g2;
    let j_nunu = || {
        d.cos
            .iter()
            .map(|ct| {
                let w = 1.0 + nu * ct;
                ct * ct / (w * w)
            })
            .sum::<f64>()
            - n * c * c * a * a / g2
    };
    Ok(match m {
        ModelSpec::VonCos3 => {
            let jnn = j_nunu();
            DMatrix::from_row_slice(
                3,
                3,
                &[
                    j_mumu, j_mukappa, j_munu, //
                    j_mukappa, j_kappakappa, j_kappanu, //
                    j_munu, j_kappanu, jnn,
                ],
            )
        }
        ModelSpec::VonCosSym2 => {
            let jnn = j_nunu();
            DMatrix::from_row_slice(2, 2, &[j_kappakappa, j_kappanu, j_kappanu, jnn])
        }
        ModelSpec::VonMises2 => DMatrix::from_row_slice(
            2,
            2,
            &[kappa * t.sc, -t.ss, -t.ss, n * ap],
        ),
    })
}

/// Observed information `-∂²l` over the free parameters.
pub fn observed_information(m: ModelSpec, params: &Params, data: &[f64]) -> Result<DMatrix<f64>> {
    let d = Prepared::new(data)?;
    let (mu, kappa, nu) = effective(m, params)?;
    if kappa == 0.0 {
        return Err(Error::Domain("the information needs kappa > 0".into()));
    }
    info_prepared(m, &d, mu, kappa, nu)
}

/// Per-observation expected information, each entry integrated against the
/// model density by quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedInformation {
    pub matrix: DMatrix<f64>,
    pub converged: bool,
}

pub fn expected_information(
    m: ModelSpec,
    params: &Params,
    q: &QuadratureSpec,
) -> Result<ExpectedInformation> {
    q.validate()?;
    let (mu, kappa, nu) = effective(m, params)?;
    if kappa == 0.0 {
        return Err(Error::Domain("the information needs kappa > 0".into()));
    }
    let density = model_density(m, params)?;
    let k = m.dim();
    let mut matrix = DMatrix::zeros(k, k);
    let mut converged = true;
    for i in 0..k {
        for j in i..k {
            let r = integrate(
                |t| {
                    let d = Prepared::new(&[t]).expect("finite angle");
                    let h = info_prepared(m, &d, mu, kappa, nu).expect("validated parameters");
                    h[(i, j)] * density.density(t)
                },
                0.0,
                TWO_PI,
                q,
            );
            converged &= r.converged;
            matrix[(i, j)] = r.value;
            matrix[(j, i)] = r.value;
        }
    }
    Ok(ExpectedInformation { matrix, converged })
}

/// The fitted density of a family at `params`.
pub fn model_density(m: ModelSpec, params: &Params) -> Result<CircularDensity> {
    let (mu, kappa, nu) = effective(m, params)?;
    match m {
        ModelSpec::VonMises2 => CircularDensity::new(DistParams::vonmises(mu, kappa)),
        _ => CircularDensity::new(DistParams::voncos(mu, kappa, nu)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Seed for the jittered restarts.
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 4,
            tol: 1e-9,
            max_iter: 500,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ModelSpec,
    pub n: usize,
    pub estimates: Params,
    pub std_errors: StdErrors,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub converged: bool,
    pub singular_information: bool,
    pub n_restarts_used: usize,
    /// `‖score‖∞ / n` at the optimum.
    pub score_norm: f64,
    pub iterations: usize,
}

impl FitResult {
    pub fn density(&self) -> Result<CircularDensity> {
        model_density(self.model, &self.estimates)
    }
}

pub fn aic(loglik: f64, dim: usize) -> f64 {
    2.0 * dim as f64 - 2.0 * loglik
}

pub fn bic(loglik: f64, dim: usize, n: usize) -> f64 {
    dim as f64 * (n as f64).ln() - 2.0 * loglik
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Map from the unconstrained optimisation space to `(μ, κ, ν)`.
fn from_free(m: ModelSpec, z: &[f64]) -> (f64, f64, f64) {
    match m {
        ModelSpec::VonCos3 => (z[0], z[1].exp(), logistic(z[2])),
        ModelSpec::VonCosSym2 => (0.0, z[0].exp(), logistic(z[1])),
        ModelSpec::VonMises2 => (z[0], z[1].exp(), 0.0),
    }
}

fn to_free(m: ModelSpec, mu: f64, kappa: f64, nu: f64) -> Vec<f64> {
    match m {
        ModelSpec::VonCos3 => vec![mu, kappa.ln(), logit(nu)],
        ModelSpec::VonCosSym2 => vec![kappa.ln(), logit(nu)],
        ModelSpec::VonMises2 => vec![mu, kappa.ln()],
    }
}

/// Negative mean log-likelihood and its gradient in the unconstrained space.
fn objective(m: ModelSpec, d: &Prepared, z: &[f64]) -> (f64, Vec<f64>) {
    let (mu, kappa, nu) = from_free(m, z);
    let bad = (f64::INFINITY, vec![0.0; z.len()]);
    if !(kappa > 1e-12 && kappa < KAPPA_MAX) || !(nu > 0.0 && nu < 1.0 || m == ModelSpec::VonMises2)
    {
        return bad;
    }
    let Ok(l) = loglik_prepared(d, mu, kappa, nu) else {
        return bad;
    };
    let Ok(sc) = score_prepared(m, d, mu, kappa, nu) else {
        return bad;
    };
    let jac: Vec<f64> = match m {
        ModelSpec::VonCos3 => vec![1.0, kappa, nu * (1.0 - nu)],
        ModelSpec::VonCosSym2 => vec![kappa, nu * (1.0 - nu)],
        ModelSpec::VonMises2 => vec![1.0, kappa],
    };
    let g = sc.iter().zip(&jac).map(|(s, j)| -s * j / d.n).collect();
    (-l / d.n, g)
}

/// Moment-based start: mean direction and `κ = A⁻¹(R̄)`.
fn moment_start(d: &Prepared) -> (f64, f64) {
    let mu0 = wrap_angle(d.sum_sin.atan2(d.sum_cos));
    let rbar = d.sum_cos.hypot(d.sum_sin) / d.n;
    let kappa0 = ratio_a_inverse(rbar, 20).clamp(0.05, 500.0);
    (mu0, kappa0)
}

fn starting_points(m: ModelSpec, d: &Prepared, opts: &FitOptions) -> Vec<(f64, f64, f64)> {
    let (mu0, k0) = moment_start(d);
    let mut starts = vec![(mu0, k0, 0.5)];
    match m {
        ModelSpec::VonCos3 => {
            starts.push((mu0, k0, 0.01));
            starts.push((0.0, k0, 0.5));
        }
        ModelSpec::VonCosSym2 => starts.push((0.0, k0, 0.01)),
        ModelSpec::VonMises2 => {}
    }
    let mut rng = RngStream::new(opts.seed, 0);
    for _ in 0..opts.restarts {
        let mu = wrap_angle(mu0 + 0.5 * rng.normal());
        let kappa = (k0 * (0.5 * rng.normal()).exp()).clamp(0.02, 500.0);
        let nu = 0.05 + 0.9 * rng.uniform();
        starts.push((mu, kappa, nu));
    }
    starts
}

/// Maximum-likelihood fit with multistart.
///
/// Each start is optimised by BFGS over `(μ, ln κ, logit ν)` (the family's
/// free subset), with a simplex fallback on line-search failure. The best
/// start passing the score check is returned; if none passes, the best
/// overall is returned with `converged = false`.
pub fn fit_mle(m: ModelSpec, data: &[f64], opts: &FitOptions) -> Result<FitResult> {
    if data.len() < MIN_FIT_N {
        return Err(Error::InsufficientData(format!(
            "fitting needs at least {MIN_FIT_N} observations, got {}",
            data.len()
        )));
    }
    let wrapped: Vec<f64> = data.iter().map(|t| wrap_angle(*t)).collect();
    let d = Prepared::new(&wrapped)?;
    let fg = |z: &[f64]| objective(m, &d, z);

    struct Candidate {
        mu: f64,
        kappa: f64,
        nu: f64,
        loglik: f64,
        score_norm: f64,
        iterations: usize,
    }
    let starts = starting_points(m, &d, opts);
    let n_restarts_used = starts.len();
    let mut candidates = Vec::new();
    for (mu, kappa, nu) in starts {
        let z0 = to_free(m, mu, kappa, nu);
        let min = optimize::minimize(&fg, &z0, opts.tol, opts.max_iter);
        if !min.f.is_finite() {
            continue;
        }
        let (mu, kappa, nu) = from_free(m, &min.x);
        let mu = wrap_angle(mu);
        let loglik = loglik_prepared(&d, mu, kappa, nu)?;
        let sc = score_prepared(m, &d, mu, kappa, nu)?;
        let score_norm = sc.iter().fold(0.0_f64, |a, v| a.max(v.abs())) / d.n;
        candidates.push(Candidate { mu, kappa, nu, loglik, score_norm, iterations: min.iterations });
    }
    let pick = |only_ok: bool| {
        candidates
            .iter()
            .filter(|c| !only_ok || c.score_norm < SCORE_TOL)
            .max_by(|a, b| a.loglik.total_cmp(&b.loglik))
    };
    let (best, converged) = match pick(true) {
        Some(c) => (c, true),
        None => (
            pick(false).ok_or_else(|| Error::Numerical("every start failed to evaluate".into()))?,
            false,
        ),
    };
    let estimates = Params::new(best.mu, best.kappa, best.nu);
    let info = info_prepared(m, &d, best.mu, best.kappa, best.nu)?;
    let (std_errors, singular) = match info.clone().cholesky() {
        Some(ch) => {
            let inv = ch.inverse();
            let se: Vec<Option<f64>> = (0..m.dim()).map(|i| Some(inv[(i, i)].sqrt())).collect();
            let se = match m {
                ModelSpec::VonCos3 => StdErrors { mu: se[0], kappa: se[1], nu: se[2] },
                ModelSpec::VonCosSym2 => StdErrors { mu: None, kappa: se[0], nu: se[1] },
                ModelSpec::VonMises2 => StdErrors { mu: se[0], kappa: se[1], nu: None },
            };
            (se, false)
        }
        None => (StdErrors::default(), true),
    };
    let n = data.len();
    Ok(FitResult {
        model: m,
        n,
        estimates: match m {
            ModelSpec::VonCosSym2 => Params::new(0.0, best.kappa, best.nu),
            ModelSpec::VonMises2 => Params::new(best.mu, best.kappa, 0.0),
            ModelSpec::VonCos3 => estimates,
        },
        std_errors,
        loglik: best.loglik,
        aic: aic(best.loglik, m.dim()),
        bic: bic(best.loglik, m.dim(), n),
        converged,
        singular_information: singular,
        n_restarts_used,
        score_norm: best.score_norm,
        iterations: best.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::Envelope;
    use crate::special::{bessel_i, ratio_a_prime};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn simulate(p: DistParams, n: usize, seed: u64) -> Vec<f64> {
        let d = CircularDensity::new(p).unwrap();
        let e = Envelope::for_density(&d, 250).unwrap();
        e.sample(&d, n, &mut RngStream::new(seed, 0)).unwrap().0
    }

    fn set_free(m: ModelSpec, p: &Params, i: usize, v: f64) -> Params {
        let mut q = *p;
        let name = m.free_names()[i];
        match name {
            "mu" => q.mu = v,
            "kappa" => q.kappa = v,
            _ => q.nu = v,
        }
        q
    }

    fn get_free(m: ModelSpec, p: &Params, i: usize) -> f64 {
        match m.free_names()[i] {
            "mu" => p.mu,
            "kappa" => p.kappa,
            _ => p.nu,
        }
    }

    const MODELS: [ModelSpec; 3] = [ModelSpec::VonCos3, ModelSpec::VonCosSym2, ModelSpec::VonMises2];

    #[test]
    fn loglik_examples() {
        let k = 2.3;
        let l = log_likelihood(ModelSpec::VonCos3, &Params::new(1.0, k, 1e-13), &[1.0]).unwrap();
        let expect = k - (TWO_PI * bessel_i(0, k).unwrap()).ln();
        assert!((l - expect).abs() < 1e-10);
        let data = [0.1, 2.0, 4.0, 5.5];
        let l = log_likelihood(ModelSpec::VonCos3, &Params::new(0.3, 1e-12, 1e-12), &data).unwrap();
        assert!((l + 4.0 * TWO_PI.ln()).abs() < 1e-10);
        assert!(log_likelihood(ModelSpec::VonCos3, &Params::new(0.0, 1.0, 1.0), &data).is_err());
        assert!(log_likelihood(ModelSpec::VonCos3, &Params::new(0.0, 1.0, 0.5), &[]).is_err());
    }

    #[test]
    fn loglik_matches_log_density_sum() {
        let data = simulate(DistParams::voncos(2.0, 3.0, 0.6), 300, 1);
        let p = Params::new(1.7, 2.5, 0.4);
        let d = CircularDensity::new(DistParams::voncos(1.7, 2.5, 0.4)).unwrap();
        let direct: f64 = data.iter().map(|t| d.log_density(*t)).sum();
        let l = log_likelihood(ModelSpec::VonCos3, &p, &data).unwrap();
        assert_relative_eq!(l, direct, max_relative = 1e-12);
        let v = CircularDensity::new(DistParams::vonmises(1.7, 2.5)).unwrap();
        let direct: f64 = data.iter().map(|t| v.log_density(*t)).sum();
        let l = log_likelihood(ModelSpec::VonMises2, &p, &data).unwrap();
        assert_relative_eq!(l, direct, max_relative = 1e-12);
    }

    #[test]
    fn score_matches_finite_differences() {
        let mut rng = RngStream::new(77, 0);
        for trial in 0..20 {
            let data = simulate(DistParams::voncos(rng.uniform() * TWO_PI, 0.5 + 5.0 * rng.uniform(), 0.1 + 0.8 * rng.uniform()), 200, trial);
            let p = Params::new(rng.uniform() * TWO_PI, 0.3 + 6.0 * rng.uniform(), 0.05 + 0.9 * rng.uniform());
            for m in MODELS {
                let s = score(m, &p, &data).unwrap();
                for i in 0..m.dim() {
                    let x = get_free(m, &p, i);
                    let h = 1e-6 * (1.0 + x.abs());
                    let up = log_likelihood(m, &set_free(m, &p, i, x + h), &data).unwrap();
                    let dn = log_likelihood(m, &set_free(m, &p, i, x - h), &data).unwrap();
                    let fd = (up - dn) / (2.0 * h);
                    assert!(
                        (s[i] - fd).abs() <= 1e-5 * fd.abs().max(1.0),
                        "{m:?} {i}: {} vs {fd}",
                        s[i]
                    );
                }
            }
        }
    }

    #[test]
    fn symmetric_kappa_score_uses_resultant() {
        let data = [0.3, 1.0, 6.0, 2.5, 5.0];
        let p = Params::new(0.0, 1.5, 0.4);
        let s = score(ModelSpec::VonCosSym2, &p, &data).unwrap();
        let r: f64 = data.iter().map(|t| t.cos()).sum();
        let a = ratio_a(1.5).unwrap();
        let expect = r - 5.0 * (a + 0.4 * (1.0 - a / 1.5)) / (1.0 + 0.4 * a);
        assert_relative_eq!(s[0], expect, max_relative = 1e-13);
    }

    #[test]
    fn information_matches_finite_difference_hessian() {
        let mut rng = RngStream::new(78, 0);
        for trial in 0..20 {
            let data = simulate(DistParams::voncos(rng.uniform() * TWO_PI, 0.5 + 5.0 * rng.uniform(), 0.1 + 0.8 * rng.uniform()), 200, 100 + trial);
            let p = Params::new(rng.uniform() * TWO_PI, 0.3 + 6.0 * rng.uniform(), 0.05 + 0.9 * rng.uniform());
            for m in MODELS {
                let j = observed_information(m, &p, &data).unwrap();
                for c in 0..m.dim() {
                    let x = get_free(m, &p, c);
                    let h = 1e-5 * (1.0 + x.abs());
                    let up = score(m, &set_free(m, &p, c, x + h), &data).unwrap();
                    let dn = score(m, &set_free(m, &p, c, x - h), &data).unwrap();
                    for r in 0..m.dim() {
                        let fd = -(up[r] - dn[r]) / (2.0 * h);
                        assert!(
                            (j[(r, c)] - fd).abs() <= 1e-4 * fd.abs().max(1.0),
                            "{m:?} ({r},{c}): {} vs {fd}",
                            j[(r, c)]
                        );
                    }
                }
                assert_eq!(j, j.transpose());
            }
        }
    }

    #[test]
    fn information_doubles_with_duplicated_data() {
        let data = simulate(DistParams::voncos(1.0, 2.0, 0.5), 100, 5);
        let twice: Vec<f64> = data.iter().chain(data.iter()).copied().collect();
        let p = Params::new(1.1, 2.2, 0.4);
        for m in MODELS {
            let a = observed_information(m, &p, &data).unwrap();
            let b = observed_information(m, &p, &twice).unwrap();
            for (x, y) in a.iter().zip(b.iter()) {
                assert_relative_eq!(2.0 * x, *y, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn expected_information_properties() {
        let q = QuadratureSpec::default();
        let e = expected_information(ModelSpec::VonCos3, &Params::new(1.0, 2.0, 0.5), &q).unwrap();
        assert!(e.converged);
        assert_eq!(e.matrix[(0, 1)], e.matrix[(1, 0)]);
        assert!(e.matrix.clone().cholesky().is_some());
        let e = expected_information(ModelSpec::VonCos3, &Params::new(1.0, 2.0, 1e-10), &q).unwrap();
        assert!((e.matrix[(1, 1)] - ratio_a_prime(2.0).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn fit_recovers_voncos() {
        let data = simulate(DistParams::voncos(3.09, 3.47, 0.66), 2000, 11);
        let f = fit_mle(ModelSpec::VonCos3, &data, &FitOptions::default()).unwrap();
        assert!(f.converged && !f.singular_information);
        let se = f.std_errors;
        assert!((f.estimates.mu - 3.09).abs() < 3.0 * se.mu.unwrap());
        assert!((f.estimates.kappa - 3.47).abs() < 3.0 * se.kappa.unwrap());
        assert!((f.estimates.nu - 0.66).abs() < 3.0 * se.nu.unwrap());
        let s = score(ModelSpec::VonCos3, &f.estimates, &data).unwrap();
        assert!(s.iter().all(|v| v.abs() < 1e-5 * data.len() as f64));
        assert_relative_eq!(f.aic, 6.0 - 2.0 * f.loglik);
        assert_relative_eq!(f.bic, 3.0 * (2000f64).ln() - 2.0 * f.loglik);
    }

    #[test]
    fn nesting_of_maxima() {
        for (seed, p) in [
            (21, DistParams::voncos(2.0, 1.5, 0.7)),
            (22, DistParams::vonmises(0.5, 3.0)),
            (23, DistParams::voncos(0.0, 2.0, 0.4)),
        ] {
            let data = simulate(p, 600, seed);
            let opts = FitOptions::default();
            let full = fit_mle(ModelSpec::VonCos3, &data, &opts).unwrap();
            let sym = fit_mle(ModelSpec::VonCosSym2, &data, &opts).unwrap();
            let vm = fit_mle(ModelSpec::VonMises2, &data, &opts).unwrap();
            assert!(full.loglik >= sym.loglik - 1e-6);
            assert!(full.loglik >= vm.loglik - 1e-6);
        }
    }

    #[test]
    fn vonmises_fit_is_rotation_equivariant() {
        let data = simulate(DistParams::vonmises(1.0, 2.5), 500, 31);
        let delta = 0.8;
        let rotated: Vec<f64> = data.iter().map(|t| wrap_angle(t + delta)).collect();
        let a = fit_mle(ModelSpec::VonMises2, &data, &FitOptions::default()).unwrap();
        let b = fit_mle(ModelSpec::VonMises2, &rotated, &FitOptions::default()).unwrap();
        let dmu = wrap_angle(b.estimates.mu - a.estimates.mu - delta);
        assert!(dmu.min(TWO_PI - dmu) < 1e-6);
        assert!((a.estimates.kappa - b.estimates.kappa).abs() < 1e-6);
        assert!((a.loglik - b.loglik).abs() < 1e-6);
    }

    #[test]
    fn voncos_fit_is_reflection_equivariant() {
        // The weight 1 + ν cos θ is anchored at θ = 0, so rotations change the
        // model, but θ → -θ maps μ → -μ and leaves κ, ν and the likelihood.
        let data = simulate(DistParams::voncos(1.0, 2.5, 0.5), 800, 32);
        let reflected: Vec<f64> = data.iter().map(|t| wrap_angle(-t)).collect();
        let a = fit_mle(ModelSpec::VonCos3, &data, &FitOptions::default()).unwrap();
        let b = fit_mle(ModelSpec::VonCos3, &reflected, &FitOptions::default()).unwrap();
        let dmu = wrap_angle(a.estimates.mu + b.estimates.mu);
        assert!(dmu.min(TWO_PI - dmu) < 1e-6);
        assert!((a.estimates.kappa - b.estimates.kappa).abs() < 1e-6);
        assert!((a.estimates.nu - b.estimates.nu).abs() < 1e-6);
        assert!((a.loglik - b.loglik).abs() < 1e-6);
    }

    #[test]
    fn small_samples_rejected() {
        let e = fit_mle(ModelSpec::VonCos3, &[0.1; 9], &FitOptions::default());
        assert!(matches!(e, Err(Error::InsufficientData(_))));
    }

    #[test]
    fn fit_result_serialises() {
        let data = simulate(DistParams::vonmises(PI, 2.0), 200, 3);
        let f = fit_mle(ModelSpec::VonMises2, &data, &FitOptions::default()).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains(r#""model":"vonmises""#));
        assert!(s.contains(r#""nu":null"#));
        assert_eq!(f.estimates.nu, 0.0);
    }

    #[test]
    fn model_names_parse() {
        for m in MODELS {
            assert_eq!(m.name().parse::<ModelSpec>().unwrap(), m);
        }
        assert!("gauss".parse::<ModelSpec>().is_err());
    }
}
