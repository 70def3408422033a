use hyperorbit_core::distributions::DistributionSpec;
use hyperorbit_core::dynamics::{hit_from_scratch, mixing_correlation, visit_frequency, TargetBall};
use hyperorbit_core::random_vectors::{sample_vector, CertificateGate, UFamily};
use hyperorbit_core::shift::{PolynomialSpec, WeightRule, WeightSequence};
use hyperorbit_core::{SpaceSpec, TruncatedVector};
use proptest::prelude::*;

fn rolewicz() -> UFamily {
    UFamily::unilateral(WeightSequence::constant(2.0).unwrap(), CertificateGate::Waived).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn proxy_within_running_range(seed in any::<u64>(), radius in 0.2f64..3.0, c0 in -2.0f64..2.0) {
        let space = SpaceSpec::lp(2.0).unwrap();
        let s = sample_vector(&space, &rolewicz(), &DistributionSpec::standard_gaussian(), 300, None, seed).unwrap();
        let ball = TargetBall::new(TruncatedVector::from_real(0, &[c0]).unwrap(), radius).unwrap();
        let r = visit_frequency(&space, &rolewicz(), &s, &ball, 250).unwrap();
        let max = r.running.iter().copied().fold(0.0, f64::max);
        prop_assert!(r.liminf_proxy >= 0.0 && r.liminf_proxy <= max);
        prop_assert_eq!(r.hit_count, r.hits.iter().filter(|h| **h).count());
        prop_assert_eq!(r.running.len(), 251);
    }
}

#[test]
fn structurally_independent_differences_are_binomial() {
    let space = SpaceSpec::lp(2.0).unwrap();
    let w = WeightSequence::new(WeightRule::Split { upper: 2.0, lower: 0.5 }, true).unwrap();
    let family = UFamily::bilateral(w, CertificateGate::Waived).unwrap();
    let ball = TargetBall::new(TruncatedVector::zeros(0, 0), 1.2).unwrap();
    let within = (0..20u64)
        .filter(|seed| {
            let rows = mixing_correlation(&space, &family, &DistributionSpec::standard_gaussian(), &ball, &ball, &[25], 4000, 10, *seed)
                .unwrap();
            assert!(rows[0].structurally_independent);
            rows[0].difference.abs() <= 4.0 * rows[0].stderr
        })
        .count();
    assert!(within >= 19, "{within}/20 seeds within 4 stderr");
}

#[test]
fn polynomial_family_streamed_hits_match_fresh_orbits() {
    let space = SpaceSpec::lp(2.0).unwrap();
    let poly = PolynomialSpec::new(vec![2.0, 1.0]).unwrap();
    let family = UFamily::polynomial(WeightSequence::constant(1.0).unwrap(), poly, 40, CertificateGate::Waived).unwrap();
    let dist = DistributionSpec::standard_gaussian();
    let ball = TargetBall::new(TruncatedVector::unit(0), 1.0).unwrap();
    let s = sample_vector(&space, &family, &dist, 40, None, 8).unwrap();
    let r = visit_frequency(&space, &family, &s, &ball, 30).unwrap();
    for m in [0, 3, 11, 30] {
        assert_eq!(r.hits[m as usize], hit_from_scratch(&space, &family, &dist, 40, 8, &ball, m).unwrap());
    }
}
