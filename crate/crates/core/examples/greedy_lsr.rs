//! Greedy label synthesis against plain SGD on a least-squares learner.
//!
//! `cargo run --release --example greedy_lsr`

use anyhow::Result;
use labelsynth::harness::{aggregate, prepare, run_teaching, Config, ExperimentConfig};

fn mean_dist(kind: &str) -> Result<Vec<f64>> {
    let mut c = Config::default();
    c.apply_overrides(&[format!("teacher.kind={kind}"), "run.seeds=0..10".into(), "run.timing=false".into()])?;
    let cfg = ExperimentConfig::from_config(&c)?;
    let exp = prepare(&cfg)?;
    let runs: Vec<Vec<f64>> = run_teaching(&cfg, &exp)?.iter().map(|t| t.dist()).collect();
    Ok(aggregate(&runs)?.mean)
}

fn main() -> Result<()> {
    let kinds = ["sgd", "last_nc", "last"];
    let curves = kinds.iter().map(|k| mean_dist(k)).collect::<Result<Vec<_>>>()?;
    println!("{:>6} {:>12} {:>12} {:>12}", "t", kinds[0], kinds[1], "last (r=1)");
    for t in [0, 1, 10, 100, 500, 1000] {
        println!("{t:>6} {:>12.4e} {:>12.4e} {:>12.4e}", curves[0][t], curves[1][t], curves[2][t]);
    }
    Ok(())
}
