//! Label synthesis for a two-layer network: one-hot, simplex and
//! unconstrained labels against SGD.
//!
//! `cargo run --release --example mlp_labels`

use anyhow::Result;
use labelsynth::harness::{aggregate, prepare, run_teaching, Config, ExperimentConfig};

fn main() -> Result<()> {
    for (kind, constraint) in [("sgd", "none"), ("last", "onehot"), ("last", "simplex"), ("last_nc", "none")] {
        let mut c = Config::default();
        c.apply_overrides(&[
            "dataset.kind=clusters".to_string(),
            "dataset.n_per_class=100".into(),
            "dataset.d=4".into(),
            "dataset.offset=1".into(),
            "learner.kind=mlp".into(),
            "learner.hidden=8".into(),
            "learner.lambda=1e-3".into(),
            "learner.eta=0.05".into(),
            "learner.init=around_target".into(),
            "learner.init_sd=0.5".into(),
            "run.iterations=300".into(),
            "run.seeds=0..5".into(),
            format!("teacher.kind={kind}"),
            format!("teacher.constraint={constraint}"),
        ])?;
        let cfg = ExperimentConfig::from_config(&c)?;
        let exp = prepare(&cfg)?;
        let runs: Vec<Vec<f64>> = run_teaching(&cfg, &exp)?.iter().map(|t| t.dist()).collect();
        let m = aggregate(&runs)?.mean;
        println!("{kind:>8}/{constraint:<8} distance {:.4} -> {:.4}", m[0], m.last().unwrap());
    }
    Ok(())
}
