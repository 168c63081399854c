use circtorus::circular::CdfTable;
use circtorus::envelope::{sample_vmbfr, DEFAULT_CELLS};
use circtorus::inference::ks_test;
use circtorus::{CircularDensity, DistParams, Envelope, HeightRule, RngStream, TWO_PI};

/// Targets whose stationary points are known.
fn targets() -> Vec<DistParams> {
    vec![
        DistParams::Uniform,
        DistParams::vonmises(0.0, 0.5),
        DistParams::vonmises(2.0, 40.0),
        DistParams::Cardioid { nu: 0.3 },
        DistParams::wrapped_cauchy(1.0, 0.8),
        DistParams::voncos(3.0, 2.5, 0.9),
        DistParams::voncos(1.0472, 1.0, 0.5),
        DistParams::area_weighted(DistParams::Uniform, 0.5),
    ]
}

fn unhinted() -> Vec<DistParams> {
    vec![
        DistParams::katojones(1.0, 1.6, 0.5, 3.0),
        DistParams::area_weighted(DistParams::katojones(1.6, 3.1, 0.6, 1.0), 0.5),
    ]
}

/// Dense per-cell check that supremum heights dominate the density.
#[test]
fn supremum_heights_dominate_on_dense_grid() {
    for p in targets() {
        let d = CircularDensity::new(p.clone()).unwrap();
        let env = Envelope::for_density_with_rule(&d, 64, HeightRule::Supremum).unwrap();
        let w = env.cell_width();
        for (i, h) in env.heights().iter().enumerate() {
            for j in 0..=10_000 {
                let theta = (i as f64 + j as f64 / 10_000.0) * w;
                let f = d.density(theta.min(TWO_PI));
                assert!(f <= h * (1.0 + 1e-12), "{p}: cell {i}, f = {f} > H = {h}");
            }
        }
    }
}

#[test]
fn envelope_samples_pass_ks() {
    for (s, p) in targets().into_iter().enumerate() {
        let d = CircularDensity::new(p.clone()).unwrap();
        let env = Envelope::for_density_with_rule(&d, DEFAULT_CELLS, HeightRule::Supremum).unwrap();
        let (x, st) = env.sample(&d, 10_000, &mut RngStream::new(7, s as u64)).unwrap();
        assert_eq!(st.clamped, 0);
        let table = CdfTable::new(&d, 20_000);
        let ks = ks_test(&x, |t| table.cdf(t) / table.total()).unwrap();
        assert!(ks.p_value > 0.001, "{p}: KS p = {}", ks.p_value);
    }
}

#[test]
fn supremum_rule_is_refused_without_stationary_points() {
    for p in unhinted() {
        let d = CircularDensity::new(p.clone()).unwrap();
        assert!(Envelope::for_density_with_rule(&d, DEFAULT_CELLS, HeightRule::Supremum).is_err());
        let env = Envelope::for_density(&d, DEFAULT_CELLS).unwrap();
        assert_eq!(env.rule(), HeightRule::Midpoint, "{p}");
    }
}

#[test]
fn midpoint_samples_pass_ks_for_unhinted_targets() {
    for (s, p) in unhinted().into_iter().enumerate() {
        let d = CircularDensity::new(p.clone()).unwrap();
        let env = Envelope::for_density(&d, DEFAULT_CELLS).unwrap();
        let (x, _) = env.sample(&d, 10_000, &mut RngStream::new(8, s as u64)).unwrap();
        let table = CdfTable::new(&d, 20_000);
        let ks = ks_test(&x, |t| table.cdf(t) / table.total()).unwrap();
        assert!(ks.p_value > 0.001, "{p}: KS p = {}", ks.p_value);
    }
}

#[test]
fn best_fisher_samples_pass_ks() {
    for (s, kappa) in [0.2, 1.0, 10.0].into_iter().enumerate() {
        let d = CircularDensity::new(DistParams::vonmises(0.5, kappa)).unwrap();
        let (x, _) = sample_vmbfr(0.5, kappa, 10_000, &mut RngStream::new(3, s as u64)).unwrap();
        let table = CdfTable::new(&d, 20_000);
        let ks = ks_test(&x, |t| table.cdf(t) / table.total()).unwrap();
        assert!(ks.p_value > 0.001, "kappa {kappa}: KS p = {}", ks.p_value);
    }
}

#[test]
fn parallel_sampling_is_reproducible_and_ordered() {
    let d = CircularDensity::new(DistParams::vonmises(0.0, 2.0)).unwrap();
    let env = Envelope::for_density(&d, DEFAULT_CELLS).unwrap();
    let (a, _) = env.sample_parallel(&d, 1001, 9, 4).unwrap();
    let (b, _) = env.sample_parallel(&d, 1001, 9, 4).unwrap();
    assert_eq!(a, b);
    let (first, _) = env.sample(&d, 251, &mut RngStream::new(9, 0)).unwrap();
    assert_eq!(&a[..251], &first[..]);
}

#[test]
fn empirical_acceptance_matches_envelope_mass() {
    let d = CircularDensity::new(DistParams::voncos(1.0, 5.0, 0.5)).unwrap();
    let env = Envelope::for_density(&d, DEFAULT_CELLS).unwrap();
    let (_, st) = env.sample(&d, 200_000, &mut RngStream::new(1, 0)).unwrap();
    let expected = 100.0 * env.expected_acceptance();
    assert!((st.acceptance_pct() - expected).abs() < 0.1, "{} vs {expected}", st.acceptance_pct());
}
