//! Property tests for the distribution layer and chart recursions.

use proptest::prelude::*;
use steinchart::chart::{ChartDesign, LimitSpec, WeightFunction};
use steinchart::dist::{CountDistribution, FamilyKind};
use steinchart::stats::KahanSum;

fn arbitrary_dist() -> impl Strategy<Value = CountDistribution> {
    prop_oneof![
        (0.05f64..20.0).prop_map(|mu| CountDistribution::poisson(mu).unwrap()),
        ((0.2f64..20.0), (0.05f64..0.95))
            .prop_map(|(nu, pi)| CountDistribution::neg_binomial(nu, pi).unwrap()),
        ((1u64..40), (0.01f64..0.99)).prop_map(|(n, p)| CountDistribution::binomial(n, p).unwrap()),
        ((0.0f64..0.9), (0.1f64..15.0))
            .prop_map(|(omega, lambda)| CountDistribution::zi_poisson(omega, lambda).unwrap()),
        ((0.0f64..0.9), (2u64..30), (0.05f64..0.95))
            .prop_map(|(omega, n, p)| CountDistribution::zi_binomial(omega, n, p).unwrap()),
        ((2u64..30), (0.2f64..20.0), (0.2f64..20.0))
            .prop_map(|(n, a, b)| CountDistribution::beta_binomial(n, a, b).unwrap()),
        ((0.05f64..0.9), (-1.5f64..12.0)).prop_map(|(q, s)| CountDistribution::good(q, s).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// PMFs are nonnegative and sum to one over the truncated support.
    #[test]
    fn pmf_normalizes(d in arbitrary_dist()) {
        let x_max = d.support_truncation(1e-12);
        let mut sum = KahanSum::new();
        for x in 0..=x_max {
            let p = d.pmf(x);
            prop_assert!(p >= 0.0 && p.is_finite());
            sum.add(p);
        }
        let total = sum.value();
        prop_assert!((total - 1.0).abs() <= 1e-11, "total {total}");
    }

    /// Closed-form moments agree with truncated-sum evaluation.
    #[test]
    fn moments_match_summation(d in arbitrary_dist()) {
        let x_max = d.support_truncation(1e-14);
        let mut m1 = KahanSum::new();
        let mut m2 = KahanSum::new();
        for x in 0..=x_max {
            let p = d.pmf(x);
            m1.add(x as f64 * p);
            m2.add((x as f64) * (x as f64) * p);
        }
        let mean = m1.value();
        let var = m2.value() - mean * mean;
        let m = d.moments();
        prop_assert!((m.mean - mean).abs() <= 1e-10 * mean.abs().max(1e-6),
            "mean {} vs summed {mean}", m.mean);
        prop_assert!((m.variance - var).abs() <= 1e-9 * var.abs().max(1e-6),
            "variance {} vs summed {var}", m.variance);
    }

    /// Sampling stays inside a bounded support.
    #[test]
    fn samples_respect_bounds(d in arbitrary_dist(), seed in 0u64..1000) {
        if let Some(n) = d.bound() {
            let mut rng = steinchart::rng::replication_stream(seed, 0);
            for _ in 0..64 {
                prop_assert!(d.sample(&mut rng) <= n);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Mean/dispersion construction round-trips through `moments`.
    #[test]
    fn mean_dispersion_round_trip(
        pick in 0usize..6,
        mean_frac in 0.15f64..0.85,
        index_frac in 0.05f64..0.95,
    ) {
        let n = 10u64;
        let (kind, mean, index, nopt) = match pick {
            0 => (FamilyKind::Poisson, 0.5 + mean_frac * 8.0, 1.0, None),
            1 => (FamilyKind::NegBinomial, 0.5 + mean_frac * 8.0, 1.0 + index_frac * 3.0, None),
            2 => (FamilyKind::ZiPoisson, 0.5 + mean_frac * 8.0, 1.0 + index_frac * 3.0, None),
            3 => (FamilyKind::ZiBinomial, mean_frac * 10.0, 1.0 + index_frac * 5.0, Some(n)),
            4 => (FamilyKind::BetaBinomial, mean_frac * 10.0, 1.0 + 1e-3 + index_frac * 5.0, Some(n)),
            _ => (FamilyKind::Good, 0.5 + mean_frac * 5.0, 0.4 + index_frac * 2.0, None),
        };
        let d = CountDistribution::from_mean_dispersion(kind, mean, index, nopt).unwrap();
        let m = d.moments();
        prop_assert!((m.mean - mean).abs() <= 1e-8 * mean.max(1.0),
            "{kind:?}: mean {} vs target {mean}", m.mean);
        prop_assert!((m.dispersion_index - index).abs() <= 1e-8 * index.max(1.0),
            "{kind:?}: index {} vs target {index}", m.dispersion_index);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// EWMA statistics stay inside the convex hull of the center line and
    /// the observed counts.
    #[test]
    fn ewma_convexity_bound(
        mu in 0.5f64..8.0,
        lambda in 0.01f64..1.0,
        xs in prop::collection::vec(0u64..30, 1..60),
    ) {
        let design = ChartDesign::ewma(
            CountDistribution::poisson(mu).unwrap(),
            lambda,
            LimitSpec::Explicit { lcl: f64::NEG_INFINITY, ucl: f64::INFINITY },
        ).unwrap();
        let mut state = design.init_state();
        let mut lo = mu;
        let mut hi = mu;
        for &x in &xs {
            lo = lo.min(x as f64);
            hi = hi.max(x as f64);
            let step = design.update(&state, x).unwrap();
            state = step.state;
            prop_assert!(step.z >= lo - 1e-12 && step.z <= hi + 1e-12,
                "z {} left [{lo}, {hi}]", step.z);
        }
    }

    /// The smoothed B and C statistics of a Stein chart stay positive for
    /// every input sequence.
    #[test]
    fn stein_b_and_c_stay_positive(
        lambda in 0.01f64..0.99,
        xs in prop::collection::vec(0u64..25, 1..80),
        weight_pick in 0usize..4,
    ) {
        let ic = CountDistribution::poisson(2.0).unwrap();
        let weight = match weight_pick {
            0 => WeightFunction::Linear,
            1 => WeightFunction::Root,
            2 => WeightFunction::Inverse,
            _ => WeightFunction::shifted_pmf(ic.clone()),
        };
        let design = ChartDesign::stein(
            ic,
            weight,
            lambda,
            LimitSpec::Explicit { lcl: f64::NEG_INFINITY, ucl: f64::INFINITY },
        ).unwrap();
        let mut state = design.init_state();
        for &x in &xs {
            let step = design.update(&state, x).unwrap();
            state = step.state;
            prop_assert!(state.b > 0.0 && state.c > 0.0,
                "B {} or C {} lost positivity", state.b, state.c);
        }
    }
}
