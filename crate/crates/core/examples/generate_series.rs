//! Simulates a count series and prints it as `t,count` CSV, ready for
//! `steinchart monitor`.
//!
//!     cargo run --example generate_series -- [seed] [length] [mu] [rho]
//!
//! Defaults simulate one day of 5-minute interval counts (192 values) from
//! the Poi-INAR(1) model with mean 2.1 and dependence 0.78.

use steinchart::process::{ProcessModel, ScenarioDgp};
use steinchart::rng::replication_stream;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed: u64 = args.first().map_or(1, |a| a.parse().expect("seed"));
    let len: usize = args.get(1).map_or(192, |a| a.parse().expect("length"));
    let mu: f64 = args.get(2).map_or(2.1, |a| a.parse().expect("mu"));
    let rho: f64 = args.get(3).map_or(0.78, |a| a.parse().expect("rho"));

    let model = if rho == 0.0 {
        ProcessModel::iid(steinchart::dist::CountDistribution::poisson(mu).expect("mu"))
    } else {
        ProcessModel::poi_inar1(mu, rho).expect("model")
    };
    let mut rng = replication_stream(seed, 0);
    let series = ScenarioDgp::in_control(model).generate(len, &mut rng);
    println!("t,count");
    for (i, x) in series.iter().enumerate() {
        println!("{},{}", i + 1, x);
    }
}
