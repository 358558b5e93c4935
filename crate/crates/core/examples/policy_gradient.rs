//! REINFORCE teacher choosing among discrete labels for a two-class learner.
//!
//! `cargo run --release --example policy_gradient`

use anyhow::Result;
use labelsynth::harness::param_run::{eval_teacher, new_teacher_net, train_teacher};
use labelsynth::harness::{prepare, Config, ExperimentConfig};

fn main() -> Result<()> {
    let mut c = Config::default();
    c.apply_overrides(&[
        "dataset.kind=clusters",
        "dataset.n_per_class=100",
        "dataset.offset=0.5",
        "learner.kind=multiclass",
        "learner.eta=0.05",
        "teacher.kind=pg",
        "teacher.episodes=200",
        "teacher.horizon=30",
        "teacher.baseline=batch_mean",
        "teacher.lr=1e-2",
        "run.eval_steps=100",
        "run.seeds=0",
    ])?;
    let cfg = ExperimentConfig::from_config(&c)?;
    let exp = prepare(&cfg)?;
    let mut net = new_teacher_net(&cfg, &exp)?;
    let log = train_teacher(&cfg, &exp, &mut net)?;
    let first = log.episodes.first().map_or(f64::NAN, |e| e.objective);
    let last = log.episodes.last().map_or(f64::NAN, |e| e.objective);
    println!("mean return: first episode {first:.4e}, last episode {last:.4e}");
    let (teacher, sgd) = eval_teacher(&cfg, &exp, &net)?;
    println!("final distance: teacher {:.4e}, sgd {:.4e}", teacher.final_dist().unwrap(), sgd.final_dist().unwrap());
    Ok(())
}
