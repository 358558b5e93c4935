//! Teachers without access to the target: the unrolled one minimizes a
//! hold-out loss, the policy-gradient one picks a smoothing weight per example.
//!
//! `cargo run --release --example black_box`

use std::path::Path;

use anyhow::Result;
use labelsynth::harness::param_run::{eval_teacher, new_teacher_net, train_teacher};
use labelsynth::harness::{prepare, Config, ExperimentConfig};

fn run(kind: &str, extra: &[&str]) -> Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let mut c = Config::default();
    let mut over = vec![
        "dataset.kind=mnist".to_string(),
        format!("dataset.images={}", data.join("mnist-3-5-images-idx3-ubyte").display()),
        format!("dataset.labels={}", data.join("mnist-3-5-labels-idx1-ubyte").display()),
        "dataset.val_fraction=0.2".into(),
        "dataset.test_fraction=0.2".into(),
        "learner.kind=multiclass".into(),
        "learner.eta=1e-3".into(),
        "run.batch=20".into(),
        "run.seeds=0".into(),
        format!("teacher.kind={kind}"),
    ];
    over.extend(extra.iter().map(|s| s.to_string()));
    c.apply_overrides(&over)?;
    let cfg = ExperimentConfig::from_config(&c)?;
    let exp = prepare(&cfg)?;
    let mut net = new_teacher_net(&cfg, &exp)?;
    train_teacher(&cfg, &exp, &mut net)?;
    let (teacher, sgd) = eval_teacher(&cfg, &exp, &net)?;
    let below = teacher.val_loss.iter().zip(&sgd.val_loss).filter(|(a, b)| a < b).count();
    println!(
        "{kind}: test loss teacher {:.5} vs sgd {:.5}; teacher lower at {below}/{} iterations",
        teacher.final_val_loss().unwrap(),
        sgd.final_val_loss().unwrap(),
        teacher.val_loss.len()
    );
    Ok(())
}

fn main() -> Result<()> {
    run("blast_unrolled", &[])?;
    run("blast_pg", &["teacher.episodes=100", "teacher.horizon=50", "teacher.baseline=batch_mean"])
}
