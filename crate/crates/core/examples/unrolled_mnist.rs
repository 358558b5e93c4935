//! Trains an omniscient teacher by unrolling 20 learner steps on projected
//! MNIST 3/5 and compares it with SGD under the frozen evaluation protocol.
//!
//! `cargo run --release --example unrolled_mnist`

use std::path::Path;

use anyhow::Result;
use labelsynth::harness::param_run::{eval_teacher, new_teacher_net, train_teacher};
use labelsynth::harness::{prepare, Config, ExperimentConfig};

fn main() -> Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let mut c = Config::default();
    c.apply_overrides(&[
        "dataset.kind=mnist".to_string(),
        format!("dataset.images={}", data.join("mnist-3-5-images-idx3-ubyte").display()),
        format!("dataset.labels={}", data.join("mnist-3-5-labels-idx1-ubyte").display()),
        "learner.kind=multiclass".into(),
        "learner.eta=5e-4".into(),
        "teacher.kind=unrolled".into(),
        "run.seeds=0".into(),
    ])?;
    let cfg = ExperimentConfig::from_config(&c)?;
    let exp = prepare(&cfg)?;
    let mut net = new_teacher_net(&cfg, &exp)?;
    let log = train_teacher(&cfg, &exp, &mut net)?;
    println!("training: eval {:.5} -> {:.5} over {} episodes", log.initial_eval, log.final_eval, log.episodes.len());
    for batch in [1, 128] {
        let mut cfg = cfg.clone();
        cfg.run.eval_batch = batch;
        let (teacher, sgd) = eval_teacher(&cfg, &exp, &net)?;
        println!("eval batch {batch:>3}: final distance teacher {:.5}, sgd {:.5}", teacher.final_dist().unwrap(), sgd.final_dist().unwrap());
    }
    Ok(())
}
