//! Stationary-law checks for the AR(1) count chains on long paths.

use steinchart::dist::FamilyKind;
use steinchart::process::ProcessModel;
use steinchart::rng::replication_stream;
use steinchart::stats::{
    sample_autocorrelation, sample_dispersion_bounded, sample_dispersion_unbounded, sample_mean,
};

const PATH_LEN: usize = 1_000_000;

fn path(model: &ProcessModel, seed: u64) -> Vec<f64> {
    let mut rng = replication_stream(seed, 0);
    let mut x = model.init_stationary(&mut rng);
    let mut xs = Vec::with_capacity(PATH_LEN);
    for _ in 0..PATH_LEN {
        x = model.step(x, &mut rng);
        xs.push(x as f64);
    }
    xs
}

fn check(name: &str, model: &ProcessModel, mu: f64, index: f64, n: Option<u64>, rho: f64) {
    let xs = path(model, 4242);
    let mean = sample_mean(&xs);
    let disp = match n {
        Some(n) => sample_dispersion_bounded(&xs, n),
        None => sample_dispersion_unbounded(&xs),
    };
    let acf1 = sample_autocorrelation(&xs, 1);
    let acf2 = sample_autocorrelation(&xs, 2);
    assert!((mean - mu).abs() / mu < 0.01, "{name}: mean {mean:.4}");
    assert!(
        (disp - index).abs() / index < 0.02,
        "{name}: dispersion {disp:.4}"
    );
    assert!((acf1 - rho).abs() < 0.02, "{name}: lag-1 ACF {acf1:.4}");
    assert!(
        (acf2 - rho * rho).abs() < 0.03,
        "{name}: lag-2 ACF {acf2:.4}"
    );
}

#[test]
fn stationary_marginals_across_the_parameter_grid() {
    for &mu in &[2.0, 5.0] {
        for &rho in &[0.25, 0.5] {
            check(
                &format!("Poi-INAR(1) mu={mu} rho={rho}"),
                &ProcessModel::poi_inar1(mu, rho).unwrap(),
                mu,
                1.0,
                None,
                rho,
            );
            check(
                &format!("NB-IINAR(1) mu={mu} rho={rho}"),
                &ProcessModel::nb_iinar1(mu, 1.5 * mu, rho).unwrap(),
                mu,
                5.0 / 3.0,
                None,
                rho,
            );
            check(
                &format!("BinAR(1) mu={mu} rho={rho}"),
                &ProcessModel::bin_ar1(10, mu, rho).unwrap(),
                mu,
                1.0,
                Some(10),
                rho,
            );
        }
    }
}

#[test]
fn matched_out_of_control_constructions_hit_their_marginals() {
    // BB/ZIB thinning chains and ZIP/Good-innovation chains are built by
    // moment matching; their stationary mean and dispersion must land on the
    // requested values.
    check(
        "BB-AR(1) mu=2 I=5/3",
        &ProcessModel::bb_ar1(10, 2.0, 5.0 / 3.0, 0.5).unwrap(),
        2.0,
        5.0 / 3.0,
        Some(10),
        0.5,
    );
    check(
        "ZIB-AR(1) mu=2 I=5/3",
        &ProcessModel::zib_ar1(10, 2.0, 5.0 / 3.0, 0.5).unwrap(),
        2.0,
        5.0 / 3.0,
        Some(10),
        0.5,
    );
    check(
        "ZIP-INAR(1) mu=2 I=5/3",
        &ProcessModel::from_marginal(FamilyKind::ZiPoisson, 2.0, 5.0 / 3.0, None, 0.5).unwrap(),
        2.0,
        5.0 / 3.0,
        None,
        0.5,
    );
    check(
        "Good-INAR(1) mu=2 I=1/2",
        &ProcessModel::from_marginal(FamilyKind::Good, 2.0, 0.5, None, 0.5).unwrap(),
        2.0,
        0.5,
        None,
        0.5,
    );
}
