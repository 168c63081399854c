//! Curved-torus geometry and toroidal distributions.
//!
//! A point `(φ, θ)` sits at `((R + r cos θ) cos φ, (R + r cos θ) sin φ, r sin θ)`.
//! The area element is `r (R + r cos θ) dφ dθ`, so a density that is uniform
//! with respect to surface area weights the vertical angle by `1 + ν cos θ`
//! with `ν = r/R`.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::circular::{check_nu, wrap_angle, CircularDensity, DistParams, TWO_PI};
use crate::envelope::{Envelope, RngStream};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::special::{bessel_i, bessel_i_scaled, ratio_a, KAPPA_MAX};
use crate::{Error, Result};

/// Tolerance for the geometry/density `ν` cross-check in [`sample_torus`].
pub const NU_MATCH_TOL: f64 = 1e-12;

/// Horizontal radius `R` and vertical radius `r`, with `0 < r ≤ R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGeometry {
    pub big_r: f64,
    pub small_r: f64,
}

impl TorusGeometry {
    pub fn new(big_r: f64, small_r: f64) -> Result<Self> {
        if !(big_r > 0.0 && big_r.is_finite()) || !(small_r > 0.0) || small_r > big_r {
            return Err(Error::InvalidParameter(format!(
                "torus radii need 0 < r <= R, got R = {big_r}, r = {small_r}"
            )));
        }
        Ok(Self { big_r, small_r })
    }

    /// Geometry with `r = ν R`.
    pub fn from_nu(big_r: f64, nu: f64) -> Result<Self> {
        Self::new(big_r, nu * big_r)
    }

    pub fn nu(&self) -> f64 {
        self.small_r / self.big_r
    }

    pub fn area(&self) -> f64 {
        4.0 * PI * PI * self.small_r * self.big_r
    }

    /// `r (R + r cos θ)`; independent of `φ`.
    pub fn area_element(&self, theta: f64) -> f64 {
        self.small_r * (self.big_r + self.small_r * theta.cos())
    }

    pub fn embed(&self, phi: f64, theta: f64) -> [f64; 3] {
        let w = self.big_r + self.small_r * theta.cos();
        [w * phi.cos(), w * phi.sin(), self.small_r * theta.sin()]
    }

    /// Analytic partial derivatives `[∂/∂φ, ∂/∂θ]` of the embedding.
    pub fn tangents(&self, phi: f64, theta: f64) -> ([f64; 3], [f64; 3]) {
        let w = self.big_r + self.small_r * theta.cos();
        let d_phi = [-w * phi.sin(), w * phi.cos(), 0.0];
        let d_theta = [
            -self.small_r * theta.sin() * phi.cos(),
            -self.small_r * theta.sin() * phi.sin(),
            self.small_r * theta.cos(),
        ];
        (d_phi, d_theta)
    }

    /// `(sqrt(x² + y²) - R)² + z² - r²`, zero on the surface.
    pub fn implicit_residual(&self, p: [f64; 3]) -> f64 {
        let rho = p[0].hypot(p[1]) - self.big_r;
        rho * rho + p[2] * p[2] - self.small_r * self.small_r
    }
}

/// Parameters of the voncos density `e^{κ cos(θ-μ)} (1 + ν cos θ) / C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VonCosParams {
    pub mu: f64,
    pub kappa: f64,
    pub nu: f64,
}

impl VonCosParams {
    /// `μ` is wrapped into `[0, 2π)`. `κ = 0` is allowed and gives the cardioid.
    pub fn new(mu: f64, kappa: f64, nu: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be finite, got {mu}")));
        }
        if !(kappa >= 0.0) || kappa > KAPPA_MAX {
            return Err(Error::InvalidParameter(format!(
                "kappa must lie in [0, {KAPPA_MAX}], got {kappa}"
            )));
        }
        check_nu(nu)?;
        Ok(Self {
            mu: wrap_angle(mu),
            kappa,
            nu,
        })
    }
}

/// `C = 2π (I_0(κ) + ν cos μ I_1(κ))`.
pub fn voncos_norm_const(p: &VonCosParams) -> Result<f64> {
    Ok(TWO_PI * (bessel_i(0, p.kappa)? + p.nu * p.mu.cos() * bessel_i(1, p.kappa)?))
}

/// Voncos density at `theta`, evaluated in log space.
pub fn voncos_density(p: &VonCosParams, theta: f64) -> Result<f64> {
    let i0 = bessel_i_scaled(0, p.kappa)?;
    let i1 = bessel_i_scaled(1, p.kappa)?;
    let scaled_c = TWO_PI * (i0 + p.nu * p.mu.cos() * i1);
    Ok((p.kappa * ((theta - p.mu).cos() - 1.0)).exp() * (1.0 + p.nu * theta.cos()) / scaled_c)
}

/// `∫ f(θ)(1 + ν cos θ) dθ = 1 + ν E_f[cos θ]` by quadrature.
pub fn weighted_norm_const(base: &CircularDensity, nu: f64, q: &QuadratureSpec) -> Result<f64> {
    check_nu(nu)?;
    q.validate()?;
    let r = integrate(|t| base.density(t) * (1.0 + nu * t.cos()), 0.0, TWO_PI, q);
    if !r.converged {
        return Err(Error::Numerical("weighted normaliser quadrature did not converge".into()));
    }
    Ok(r.value)
}

/// Product density `h*(φ, θ) = h₁(φ) h₂(θ) (1 + ν cos θ) / C` on the torus.
#[derive(Debug, Clone)]
pub struct ToroidalDensity {
    horizontal: CircularDensity,
    vertical_base: CircularDensity,
    vertical: CircularDensity,
    nu: f64,
    norm_const: f64,
}

impl ToroidalDensity {
    pub fn new(horizontal: DistParams, vertical_base: DistParams, nu: f64) -> Result<Self> {
        check_nu(nu)?;
        if matches!(vertical_base, DistParams::AreaWeighted { .. } | DistParams::VonCos { .. }) {
            return Err(Error::InvalidParameter(
                "the vertical base density must not already be area weighted".into(),
            ));
        }
        let h1 = CircularDensity::new(horizontal)?;
        let h2 = CircularDensity::new(vertical_base.clone())?;
        let norm_const = match vertical_base {
            DistParams::VonMises { mu, kappa } if kappa > 0.0 => {
                1.0 + nu * mu.cos() * ratio_a(kappa)?
            }
            _ => weighted_norm_const(&h2, nu, &QuadratureSpec::default())?,
        };
        let vertical = CircularDensity::new(DistParams::area_weighted(vertical_base, nu))?;
        Ok(Self {
            horizontal: h1,
            vertical_base: h2,
            vertical,
            nu,
            norm_const,
        })
    }

    pub fn horizontal(&self) -> &CircularDensity {
        &self.horizontal
    }

    pub fn vertical_base(&self) -> &CircularDensity {
        &self.vertical_base
    }

    /// The area-weighted marginal of `θ`.
    pub fn vertical(&self) -> &CircularDensity {
        &self.vertical
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    pub fn joint_density(&self, phi: f64, theta: f64) -> f64 {
        self.horizontal.density(phi) * self.vertical_base.density(theta)
            * (1.0 + self.nu * theta.cos())
            / self.norm_const
    }
}

/// A sampled torus point: angles plus embedded coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub phi: f64,
    pub theta: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Draws `n` points: `φ` from stream 0 and `θ` from stream 1 of `seed`, each
/// with its own envelope of `cells` cells.
pub fn sample_torus(
    t: &ToroidalDensity,
    g: &TorusGeometry,
    n: usize,
    seed: u64,
    cells: usize,
) -> Result<Vec<TorusPoint>> {
    if (g.nu() - t.nu()).abs() > NU_MATCH_TOL {
        return Err(Error::InvalidParameter(format!(
            "geometry ratio r/R = {} does not match the density's nu = {}",
            g.nu(),
            t.nu()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let e1 = Envelope::for_density(t.horizontal(), cells)?;
    let e2 = Envelope::for_density(t.vertical(), cells)?;
    let (phis, _) = e1.sample(t.horizontal(), n, &mut RngStream::new(seed, 0))?;
    let (thetas, _) = e2.sample(t.vertical(), n, &mut RngStream::new(seed, 1))?;
    Ok(phis
        .into_iter()
        .zip(thetas)
        .map(|(phi, theta)| {
            let [x, y, z] = g.embed(phi, theta);
            TorusPoint { phi, theta, x, y, z }
        })
        .collect())
}

/// CSV with header `phi,theta,x,y,z` and LF line endings.
pub fn write_points_csv<W: Write>(points: &[TorusPoint], mut w: W) -> Result<()> {
    writeln!(w, "phi,theta,x,y,z")?;
    for p in points {
        writeln!(w, "{},{},{},{},{}", p.phi, p.theta, p.x, p.y, p.z)?;
    }
    Ok(())
}

/// JSON array of point objects.
pub fn write_points_json<W: Write>(points: &[TorusPoint], mut w: W) -> Result<()> {
    serde_json::to_writer(&mut w, points)?;
    writeln!(w)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circular::CdfTable;
    use crate::inference::ks_test;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn trapezoid<F: Fn(f64) -> f64>(f: F, m: usize) -> f64 {
        let h = TWO_PI / m as f64;
        (0..m).map(|j| f(j as f64 * h)).sum::<f64>() * h
    }

    #[test]
    fn area_element_examples() {
        let g = TorusGeometry::new(1.0, 1.0).unwrap();
        assert!(g.area_element(PI).abs() < 1e-15);
        let g = TorusGeometry::new(2.0, 1.0).unwrap();
        assert_eq!(g.area_element(0.0), 3.0);
        let area = TWO_PI * trapezoid(|t| g.area_element(t), 256);
        assert!((area - g.area()).abs() < 1e-9);
    }

    #[test]
    fn embed_examples() {
        let g = TorusGeometry::new(2.0, 1.0).unwrap();
        assert_eq!(g.embed(0.0, 0.0), [3.0, 0.0, 0.0]);
        let p = g.embed(FRAC_PI_2, FRAC_PI_2);
        assert!(p[0].abs() < 1e-15);
        assert_relative_eq!(p[1], 2.0, epsilon = 1e-15);
        assert_relative_eq!(p[2], 1.0);
    }

    #[test]
    fn geometry_validation() {
        assert!(TorusGeometry::new(1.0, 1.5).is_err());
        assert!(TorusGeometry::new(0.0, 0.0).is_err());
        assert!(TorusGeometry::new(1.0, 1.0).is_ok());
        assert_relative_eq!(TorusGeometry::from_nu(4.0, 0.25).unwrap().small_r, 1.0);
    }

    #[test]
    fn jacobian_matches_numeric_derivative() {
        let g = TorusGeometry::new(3.0, 1.2).unwrap();
        let h = 1e-6;
        for i in 0..16 {
            for j in 0..16 {
                let (phi, th) = (i as f64 * TWO_PI / 16.0, j as f64 * TWO_PI / 16.0);
                let dp: Vec<f64> = (0..3)
                    .map(|c| (g.embed(phi + h, th)[c] - g.embed(phi - h, th)[c]) / (2.0 * h))
                    .collect();
                let dt: Vec<f64> = (0..3)
                    .map(|c| (g.embed(phi, th + h)[c] - g.embed(phi, th - h)[c]) / (2.0 * h))
                    .collect();
                let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                let det = dot(&dp, &dp) * dot(&dt, &dt) - dot(&dp, &dt).powi(2);
                let ae = g.area_element(th);
                assert_relative_eq!(det, ae * ae, max_relative = 1e-6);
                let (tp, tt) = g.tangents(phi, th);
                for c in 0..3 {
                    assert!((tp[c] - dp[c]).abs() < 1e-6);
                    assert!((tt[c] - dt[c]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn norm_const_examples() {
        let p = VonCosParams::new(0.3, 1e-12, 0.4).unwrap();
        assert_relative_eq!(voncos_norm_const(&p).unwrap(), TWO_PI, max_relative = 1e-10);
        let p = VonCosParams::new(FRAC_PI_2, 2.5, 0.7).unwrap();
        assert_relative_eq!(
            voncos_norm_const(&p).unwrap(),
            TWO_PI * bessel_i(0, 2.5).unwrap(),
            max_relative = 1e-14
        );
        let p = VonCosParams::new(PI / 3.0, 1.0, 0.5).unwrap();
        let q = trapezoid(|t| ((t - p.mu).cos()).exp() * (1.0 + 0.5 * t.cos()), 4096);
        assert_relative_eq!(voncos_norm_const(&p).unwrap(), q, max_relative = 1e-10);
    }

    #[test]
    fn norm_const_is_even_in_mu() {
        for &mu in &[0.1, 1.0, 2.5, 3.0] {
            let a = voncos_norm_const(&VonCosParams::new(mu, 2.0, 0.6).unwrap()).unwrap();
            let b = voncos_norm_const(&VonCosParams::new(TWO_PI - mu, 2.0, 0.6).unwrap()).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-15);
        }
    }

    #[test]
    fn density_examples() {
        let p = VonCosParams::new(0.0, 0.0, 0.5).unwrap();
        assert_relative_eq!(voncos_density(&p, 0.0).unwrap(), 1.5 / TWO_PI, max_relative = 1e-15);
        for &(mu, k, t) in &[(0.4, 2.0, 1.0), (3.0, 0.5, 5.0), (1.0, 40.0, 1.1)] {
            let p = VonCosParams::new(mu, k, 1e-12).unwrap();
            let vm = CircularDensity::new(DistParams::vonmises(mu, k)).unwrap();
            assert!((voncos_density(&p, t).unwrap() - vm.density(t)).abs() < 1e-9);
        }
        let p = VonCosParams::new(PI / 3.0, 1.0, 0.5).unwrap();
        let m = trapezoid(|t| voncos_density(&p, t).unwrap(), 4096);
        assert!((m - 1.0).abs() < 1e-9);
        assert!(VonCosParams::new(0.0, 1.0, 1.0).is_err());
        assert!(VonCosParams::new(0.0, -1.0, 0.5).is_err());
    }

    #[test]
    fn weighted_norm_examples() {
        let q = QuadratureSpec::default();
        let u = CircularDensity::new(DistParams::Uniform).unwrap();
        assert!((weighted_norm_const(&u, 0.7, &q).unwrap() - 1.0).abs() < 1e-12);
        let vm = CircularDensity::new(DistParams::vonmises(0.8, 2.0)).unwrap();
        let quad = weighted_norm_const(&vm, 0.6, &q).unwrap();
        let closed = voncos_norm_const(&VonCosParams::new(0.8, 2.0, 0.6).unwrap()).unwrap()
            / (TWO_PI * bessel_i(0, 2.0).unwrap());
        assert_relative_eq!(quad, closed, max_relative = 1e-10);
        let wc = CircularDensity::new(DistParams::wrapped_cauchy(0.0, 0.5)).unwrap();
        let c = weighted_norm_const(&wc, 0.5, &q).unwrap();
        assert!(c > 0.5 && c < 1.5);
        // E cos θ = ρ for the wrapped Cauchy
        assert_relative_eq!(c, 1.25, max_relative = 1e-10);
    }

    #[test]
    fn joint_density_integrates_to_one() {
        let cases = [
            (DistParams::vonmises(0.0, 3.0), DistParams::vonmises(PI / 4.0, 0.5), 0.95),
            (DistParams::wrapped_cauchy(1.0, 0.4), DistParams::wrapped_cauchy(0.0, 0.5), 0.5),
            (
                DistParams::katojones(FRAC_PI_2, PI, 0.5, 2.0),
                DistParams::katojones(FRAC_PI_2, PI, 0.5, 2.0),
                0.5,
            ),
        ];
        for (h1, h2, nu) in cases {
            let t = ToroidalDensity::new(h1, h2, nu).unwrap();
            let m = 512;
            let h = TWO_PI / m as f64;
            let mut s = 0.0;
            for i in 0..m {
                for j in 0..m {
                    s += t.joint_density(i as f64 * h, j as f64 * h);
                }
            }
            assert!((s * h * h - 1.0).abs() < 1e-7, "mass {}", s * h * h);
        }
    }

    #[test]
    fn closed_and_quadrature_normalisers_agree() {
        let t = ToroidalDensity::new(DistParams::Uniform, DistParams::vonmises(1.0, 3.0), 0.4)
            .unwrap();
        let base = CircularDensity::new(DistParams::vonmises(1.0, 3.0)).unwrap();
        let q = weighted_norm_const(&base, 0.4, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(t.norm_const(), q, max_relative = 1e-10);
    }

    #[test]
    fn uniform_product_gives_cardioid_marginal() {
        let t = ToroidalDensity::new(DistParams::Uniform, DistParams::Uniform, 0.5).unwrap();
        let g = TorusGeometry::from_nu(2.0, 0.5).unwrap();
        let pts = sample_torus(&t, &g, 10_000, 17, 250).unwrap();
        let card = CircularDensity::new(DistParams::Cardioid { nu: 0.5 }).unwrap();
        let table = CdfTable::new(&card, 4096);
        let thetas: Vec<f64> = pts.iter().map(|p| p.theta).collect();
        assert!(ks_test(&thetas, |x| table.cdf(x)).unwrap().p_value > 0.01);
        for p in &pts {
            assert!(g.implicit_residual([p.x, p.y, p.z]).abs() < 1e-9);
        }
    }

    #[test]
    fn sample_torus_edge_cases() {
        let t = ToroidalDensity::new(DistParams::Uniform, DistParams::Uniform, 0.5).unwrap();
        let g = TorusGeometry::from_nu(2.0, 0.5).unwrap();
        assert!(sample_torus(&t, &g, 0, 0, 250).unwrap().is_empty());
        let g2 = TorusGeometry::from_nu(2.0, 0.6).unwrap();
        assert!(sample_torus(&t, &g2, 5, 0, 250).is_err());
    }

    #[test]
    fn export_formats() {
        let g = TorusGeometry::new(2.0, 1.0).unwrap();
        let [x, y, z] = g.embed(0.5, 1.5);
        let pts = vec![TorusPoint { phi: 0.5, theta: 1.5, x, y, z }];
        let mut buf = Vec::new();
        write_points_csv(&pts, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("phi,theta,x,y,z\n0.5,1.5,"));
        assert!(!s.contains('\r'));
        let mut buf = Vec::new();
        write_points_json(&pts, &mut buf).unwrap();
        let back: Vec<TorusPoint> = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, pts);
        let mut buf = Vec::new();
        write_points_csv(&[], &mut buf).unwrap();
        assert_eq!(buf, b"phi,theta,x,y,z\n");
    }
}
