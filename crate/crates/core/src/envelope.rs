//! Piecewise-constant upper-Riemann envelope sampler and the Best–Fisher
//! wrapped-Cauchy baseline for the von Mises distribution.
//!
//! The support `[a, b)` is cut into `k` equal cells of width `B`. A cell is
//! chosen with probability proportional to its height `H_i`, a point `y` is
//! proposed uniformly inside it and accepted with probability
//! `min(1, f(y)/H_i)`. When the heights dominate `f` the accepted points are
//! exact draws from `f` and the expected acceptance is `1/(B ΣH_i)`.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circular::{CircularDensity, Density, TWO_PI};
use crate::{Error, Result};

/// Default number of cells.
pub const DEFAULT_CELLS: usize = 250;

/// Slack allowed on `f/H` under [`ClampPolicy::Strict`] before it is an error.
pub const STRICT_SLACK: f64 = 1e-12;

/// How per-cell heights are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeightRule {
    /// Maximum of the density at both cell endpoints and at every supplied
    /// stationary point inside the cell. Dominates any density that is
    /// monotone between consecutive stationary points.
    Supremum,
    /// Density at the cell midpoint. Does not dominate; ratios above one are
    /// clamped and counted.
    Midpoint,
    /// Density at the left endpoint of each cell, i.e. at the partition
    /// grid points. Does not dominate; ratios above one are clamped and
    /// counted.
    GridPoint,
}

impl HeightRule {
    pub fn default_clamp_policy(self) -> ClampPolicy {
        match self {
            HeightRule::Supremum => ClampPolicy::Strict,
            HeightRule::Midpoint | HeightRule::GridPoint => ClampPolicy::ClampAndCount,
        }
    }
}

/// What to do when a proposal has `f(y)/H_i > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClampPolicy {
    /// Treat it as an error (beyond [`STRICT_SLACK`]).
    Strict,
    /// Accept the proposal and count the event.
    ClampAndCount,
}

/// Seeded random stream. The pair `(seed, stream)` selects an independent
/// ChaCha8 stream; identical pairs reproduce identical sequences.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform draw on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Standard normal draw (Box–Muller, one value per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (TWO_PI * u2).cos()
    }
}

/// Proposal, acceptance and clamp counters for one sampling run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub proposed: u64,
    pub accepted: u64,
    pub clamped: u64,
    pub elapsed: Duration,
}

impl SampleStats {
    pub fn acceptance_pct(&self) -> f64 {
        if self.proposed == 0 {
            return f64::NAN;
        }
        100.0 * self.accepted as f64 / self.proposed as f64
    }

    pub fn clamp_pct(&self) -> f64 {
        if self.proposed == 0 {
            return 0.0;
        }
        100.0 * self.clamped as f64 / self.proposed as f64
    }

    pub fn elapsed_ns(&self) -> u128 {
        self.elapsed.as_nanos()
    }

    /// Adds counters; elapsed times are summed.
    pub fn merge(&mut self, other: &SampleStats) {
        self.proposed += other.proposed;
        self.accepted += other.accepted;
        self.clamped += other.clamped;
        self.elapsed += other.elapsed;
    }
}

/// Piecewise-constant envelope over `[a, b)`.
#[derive(Debug, Clone)]
pub struct Envelope {
    a: f64,
    b: f64,
    width: f64,
    heights: Vec<f64>,
    prefix: Vec<f64>,
    /// `guide[j]` is the first cell whose prefix exceeds `j / k`, so a
    /// lookup starts at most a few cells before its answer.
    guide: Vec<u32>,
    rule: HeightRule,
    clamp_policy: ClampPolicy,
}

impl Envelope {
    /// Builds an envelope with an explicit height rule. `hints` are only
    /// consulted by [`HeightRule::Supremum`].
    pub fn build<D: Density + ?Sized>(
        f: &D,
        support: (f64, f64),
        k: usize,
        rule: HeightRule,
        hints: &[f64],
    ) -> Result<Self> {
        let (a, b) = support;
        if k < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 cells, got {k}")));
        }
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidParameter(format!("bad support [{a}, {b})")));
        }
        let width = (b - a) / k as f64;
        let edge = |i: usize| if i == k { b } else { a + i as f64 * width };
        let eval = |x: f64| -> Result<f64> {
            let v = f.density(x);
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Envelope(format!("density is {v} at {x}")));
            }
            Ok(v)
        };
        let mut sorted_hints: Vec<f64> = hints.iter().copied().filter(|h| h.is_finite()).collect();
        sorted_hints.sort_by(|x, y| x.total_cmp(y));

        let mut heights = Vec::with_capacity(k);
        let mut left = eval(a)?;
        let mut hint_idx = 0;
        for i in 0..k {
            let (lo, hi) = (edge(i), edge(i + 1));
            let right = eval(hi)?;
            let h = match rule {
                HeightRule::Supremum => {
                    let mut h = left.max(right);
                    while hint_idx < sorted_hints.len() && sorted_hints[hint_idx] < lo {
                        hint_idx += 1;
                    }
                    let mut j = hint_idx;
                    while j < sorted_hints.len() && sorted_hints[j] <= hi {
                        h = h.max(eval(sorted_hints[j])?);
                        j += 1;
                    }
                    h
                }
                HeightRule::Midpoint => eval(0.5 * (lo + hi))?,
                HeightRule::GridPoint => left,
            };
            if h <= 0.0 {
                let probe = left.max(right).max(eval(0.5 * (lo + hi))?);
                if probe > 0.0 {
                    return Err(Error::Envelope(format!(
                        "cell {i} has zero height but the density is positive there"
                    )));
                }
            }
            heights.push(h);
            left = right;
        }
        let total: f64 = heights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Envelope(format!("envelope heights sum to {total}")));
        }
        let mut acc = 0.0;
        let mut prefix: Vec<f64> = heights
            .iter()
            .map(|h| {
                acc += h;
                acc / total
            })
            .collect();
        *prefix.last_mut().expect("k >= 2") = 1.0;
        let mut guide = Vec::with_capacity(k);
        let mut i = 0;
        for j in 0..k {
            let t = j as f64 / k as f64;
            while i < k - 1 && prefix[i] <= t {
                i += 1;
            }
            guide.push(i as u32);
        }
        Ok(Self {
            a,
            b,
            width,
            heights,
            prefix,
            guide,
            rule,
            clamp_policy: rule.default_clamp_policy(),
        })
    }

    /// Envelope for a circular density on `[0, 2π)`: supremum heights when
    /// the stationary points are known, midpoint heights otherwise.
    pub fn for_density(d: &CircularDensity, k: usize) -> Result<Self> {
        build_envelope(d, (0.0, TWO_PI), k, &d.stationary_points())
    }

    /// Envelope for a circular density with a forced height rule. Supremum
    /// heights are refused when the density's stationary points are unknown,
    /// since endpoint maxima alone need not dominate.
    pub fn for_density_with_rule(d: &CircularDensity, k: usize, rule: HeightRule) -> Result<Self> {
        if rule == HeightRule::Supremum && !d.stationary_points_known() {
            return Err(Error::InvalidParameter(format!(
                "supremum heights need stationary points, which are unknown for {}",
                d.params().tag()
            )));
        }
        Self::build(d, (0.0, TWO_PI), k, rule, &d.stationary_points())
    }

    pub fn with_clamp_policy(mut self, policy: ClampPolicy) -> Self {
        self.clamp_policy = policy;
        self
    }

    pub fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn cells(&self) -> usize {
        self.heights.len()
    }

    pub fn cell_width(&self) -> f64 {
        self.width
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    pub fn rule(&self) -> HeightRule {
        self.rule
    }

    pub fn clamp_policy(&self) -> ClampPolicy {
        self.clamp_policy
    }

    /// Envelope mass `B ΣH_i`.
    pub fn mass(&self) -> f64 {
        self.width * self.heights.iter().sum::<f64>()
    }

    /// `1/(B ΣH_i)`: the acceptance probability for a dominating envelope of
    /// a normalised density.
    pub fn expected_acceptance(&self) -> f64 {
        1.0 / self.mass()
    }

    /// Cell index for a uniform draw `u`: the first cell whose prefix sum
    /// exceeds `u`, located through the guide table.
    #[inline]
    pub fn select_cell(&self, u: f64) -> usize {
        let k = self.heights.len();
        let j = ((u * k as f64) as usize).min(k - 1);
        let mut i = self.guide[j] as usize;
        while i < k - 1 && self.prefix[i] <= u {
            i += 1;
        }
        i
    }

    /// Draws exactly `n` accepted values from `f`.
    pub fn sample<D: Density + ?Sized>(
        &self,
        f: &D,
        n: usize,
        rng: &mut RngStream,
    ) -> Result<(Vec<f64>, SampleStats)> {
        let mut out = Vec::with_capacity(n);
        let mut stats = SampleStats::default();
        let start = Instant::now();
        while out.len() < n {
            // The cell draw is uniform on [P_{i-1}, P_i) given the cell, so
            // rescaling it yields the position inside the cell.
            let u = rng.uniform();
            let i = self.select_cell(u);
            let lo = if i == 0 { 0.0 } else { self.prefix[i - 1] };
            let v = ((u - lo) / (self.prefix[i] - lo)).clamp(0.0, 1.0);
            let mut y = self.a + (i as f64 + v) * self.width;
            if y >= self.b {
                y = self.b - self.width * f64::EPSILON;
            }
            stats.proposed += 1;
            let fy = f.density(y);
            if !(fy >= 0.0) {
                return Err(Error::Envelope(format!("density is {fy} at {y}")));
            }
            let ratio = fy / self.heights[i];
            if ratio > 1.0 {
                match self.clamp_policy {
                    ClampPolicy::Strict if ratio > 1.0 + STRICT_SLACK => {
                        return Err(Error::EnvelopeViolation { theta: y, ratio });
                    }
                    ClampPolicy::Strict => {}
                    ClampPolicy::ClampAndCount => stats.clamped += 1,
                }
            }
            if rng.uniform() < ratio {
                out.push(y);
                stats.accepted += 1;
            }
        }
        stats.elapsed = start.elapsed();
        Ok((out, stats))
    }

    /// Splits `n` over `threads` independent streams `(seed, 0..threads)` and
    /// concatenates the results in stream order. Stream `i` produces
    /// `n / threads` values, plus one for `i < n % threads`.
    pub fn sample_parallel<D: Density + Sync + ?Sized>(
        &self,
        f: &D,
        n: usize,
        seed: u64,
        threads: usize,
    ) -> Result<(Vec<f64>, SampleStats)> {
        let threads = threads.max(1);
        let sizes: Vec<usize> = (0..threads)
            .map(|i| n / threads + usize::from(i < n % threads))
            .collect();
        let start = Instant::now();
        let parts: Vec<Result<(Vec<f64>, SampleStats)>> = std::thread::scope(|s| {
            let handles: Vec<_> = sizes
                .iter()
                .enumerate()
                .map(|(i, &m)| {
                    s.spawn(move || {
                        let mut rng = RngStream::new(seed, i as u64);
                        self.sample(f, m, &mut rng)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sampling thread panicked"))
                .collect()
        });
        let mut out = Vec::with_capacity(n);
        let mut stats = SampleStats::default();
        for part in parts {
            let (v, st) = part?;
            out.extend(v);
            stats.merge(&st);
        }
        stats.elapsed = start.elapsed();
        Ok((out, stats))
    }
}

/// Builds an envelope from stationary-point hints: supremum heights when
/// `hints` is non-empty, midpoint heights (with clamping) otherwise.
pub fn build_envelope<D: Density + ?Sized>(
    f: &D,
    support: (f64, f64),
    k: usize,
    hints: &[f64],
) -> Result<Envelope> {
    let rule = if hints.is_empty() {
        HeightRule::Midpoint
    } else {
        HeightRule::Supremum
    };
    Envelope::build(f, support, k, rule, hints)
}

/// Best–Fisher von Mises sampler with a wrapped-Cauchy envelope.
pub fn sample_vmbfr(
    mu: f64,
    kappa: f64,
    n: usize,
    rng: &mut RngStream,
) -> Result<(Vec<f64>, SampleStats)> {
    if !(kappa > 0.0) || !kappa.is_finite() || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Best-Fisher sampler needs finite mu and kappa > 0, got mu = {mu}, kappa = {kappa}"
        )));
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    let mut out = Vec::with_capacity(n);
    let mut stats = SampleStats::default();
    let start = Instant::now();
    while out.len() < n {
        let u1 = rng.uniform();
        let u2 = rng.uniform();
        let u3 = rng.uniform();
        stats.proposed += 1;
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let sign = if u3 > 0.5 { 1.0 } else { -1.0 };
            out.push(crate::wrap_angle(mu + sign * f.clamp(-1.0, 1.0).acos()));
            stats.accepted += 1;
        }
    }
    stats.elapsed = start.elapsed();
    Ok((out, stats))
}
