//! Logistic regression on half moons: SGD, example selection, label synthesis
//! under several constraints, and mixed teaching.
//!
//! `cargo run --release --example classifier_teachers`

use anyhow::Result;
use labelsynth::harness::{aggregate, prepare, run_teaching, Config, ExperimentConfig};

fn main() -> Result<()> {
    let runs = [
        ("sgd", "none"),
        ("imt", "none"),
        ("last_nc", "none"),
        ("last", "magnitude"),
        ("mixed", "none"),
    ];
    println!("{:<18} {:>14} {:>10}", "teacher", "final dist", "accuracy");
    for (kind, constraint) in runs {
        let mut c = Config::default();
        c.apply_overrides(&[
            "dataset.kind=moons".to_string(),
            "dataset.n_per_class=200".into(),
            "dataset.noise_sd=0.1".into(),
            "dataset.add_bias=true".into(),
            "learner.kind=lr".into(),
            "learner.lambda=1e-3".into(),
            "learner.eta=0.05".into(),
            "run.iterations=500".into(),
            "run.seeds=0..5".into(),
            format!("teacher.kind={kind}"),
            format!("teacher.constraint={constraint}"),
        ])?;
        let cfg = ExperimentConfig::from_config(&c)?;
        let exp = prepare(&cfg)?;
        let traces = run_teaching(&cfg, &exp)?;
        let dist = aggregate(&traces.iter().map(|t| t.dist()).collect::<Vec<_>>())?;
        let acc = aggregate(&traces.iter().map(|t| t.column(|r| r.acc)).collect::<Vec<_>>())?;
        println!("{:<18} {:>14.4e} {:>10.3}", format!("{kind}/{constraint}"), dist.mean.last().unwrap(), acc.mean.last().unwrap());
    }
    Ok(())
}
