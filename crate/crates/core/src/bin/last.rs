//! `last`: command-line front end for the teaching harness.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use labelsynth::data::save_pool;
use labelsynth::harness::config::parse_seeds;
use labelsynth::harness::output::{read_columns_csv, write_columns_csv};
use labelsynth::harness::param_run::{eval_teacher, new_teacher_net, train_teacher};
use labelsynth::harness::setup::build_pool;
use labelsynth::harness::{
    aggregate, prepare, run_teaching, theorem_suite, write_svg_chart, write_trace_csv, ChartConfig, Config, ConvergenceTrace, ExperimentConfig, Series, TheoremKind,
    TheoremSettings,
};
use labelsynth::param::{load_checkpoint, save_checkpoint, write_training_log, Head};
use labelsynth::Error;

const OUT_ENV: &str = "LAST_OUT_DIR";
const DEFAULT_OUT: &str = "last-out";

#[derive(Parser)]
#[command(name = "last", version, about = "Label synthesis teaching experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override a config key; repeatable, the last one wins.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Run a single seed (replaces run.seeds).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory [env: LAST_OUT_DIR, default: last-out].
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured dataset and write it as a pool file.
    GenData,
    /// Run a greedy or theory teacher and write per-seed traces, a mean curve and a chart.
    Teach,
    /// Train a learnable teacher and write its checkpoint and training log.
    TrainTeacher,
    /// Evaluate a trained teacher against SGD under the frozen protocol.
    EvalTeacher {
        /// Checkpoint to load (defaults to teacher.checkpoint, then <out>/teacher.ckpt).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Check a convergence guarantee empirically.
    TheoremSuite {
        /// et, armijo, super_et or monotonicity.
        #[arg(long)]
        kind: TheoremKind,
    },
    /// Draw columns of CSV files as an SVG line chart.
    Plot {
        /// CSV files whose first column is the x axis.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Column to draw from each file.
        #[arg(long, default_value = "dist")]
        column: String,
        #[arg(long)]
        log_y: bool,
        #[arg(long, default_value = "")]
        title: String,
        /// Output file name inside the output directory.
        #[arg(long, default_value = "plot.svg")]
        name: String,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

fn invalid(e: Error) -> Failure {
    Failure::Validation(e.to_string())
}

fn runtime(e: Error) -> Failure {
    Failure::Runtime(e.to_string())
}

type Out<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn resolve(common: &Common) -> Out<Config> {
    let mut cfg = match &common.config {
        Some(p) => Config::load(p).map_err(invalid)?,
        None => Config::default(),
    };
    cfg.apply_overrides(&common.overrides).map_err(invalid)?;
    if let Some(s) = common.seed {
        cfg.set("run.seeds", &s.to_string()).map_err(invalid)?;
    }
    Ok(cfg)
}

fn out_dir(common: &Common) -> Out<PathBuf> {
    let dir = common.out.clone().or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(|| DEFAULT_OUT.into());
    std::fs::create_dir_all(&dir).map_err(|e| runtime(Error::Io { path: dir.clone(), source: e }))?;
    Ok(dir)
}

fn banner(cfg: &Config) -> Out<()> {
    let seeds = parse_seeds(cfg.get("run.seeds")).map_err(invalid)?;
    println!("# resolved config");
    print!("{}", cfg.render());
    println!("# seeds: {seeds:?}");
    Ok(())
}

fn experiment(raw: &Config) -> Out<ExperimentConfig> {
    ExperimentConfig::from_config(raw).map_err(invalid)
}

fn run(cli: Cli) -> Out<()> {
    let raw = resolve(&cli.common)?;
    match cli.cmd {
        Command::GenData => {
            banner(&raw)?;
            let cfg = experiment(&raw)?;
            let out = out_dir(&cli.common)?;
            let pool = build_pool(&cfg).map_err(runtime)?;
            let path = out.join("pool.txt");
            save_pool(&pool, &path).map_err(runtime)?;
            println!("wrote {} examples to {}", pool.len(), path.display());
        }
        Command::Teach => {
            banner(&raw)?;
            let cfg = experiment(&raw)?;
            if cfg.teacher.kind.is_parameterized() {
                return Err(Failure::Validation(format!("teacher {} is learnable; use train-teacher and eval-teacher", cfg.teacher.kind)));
            }
            let out = out_dir(&cli.common)?;
            let exp = prepare(&cfg).map_err(runtime)?;
            let traces = run_teaching(&cfg, &exp).map_err(runtime)?;
            teach_outputs(&cfg, &traces, &out)?;
        }
        Command::TrainTeacher => {
            banner(&raw)?;
            let cfg = experiment(&raw)?;
            if !cfg.teacher.kind.is_parameterized() {
                return Err(Failure::Validation(format!("teacher {} has nothing to train; use teach", cfg.teacher.kind)));
            }
            let out = out_dir(&cli.common)?;
            let exp = prepare(&cfg).map_err(runtime)?;
            let mut net = match &cfg.param.checkpoint {
                Some(p) => load_checkpoint(p).map_err(runtime)?.0,
                None => new_teacher_net(&cfg, &exp).map_err(runtime)?,
            };
            let log = train_teacher(&cfg, &exp, &mut net).map_err(runtime)?;
            let ckpt = out.join("teacher.ckpt");
            save_checkpoint(&ckpt, &net, None).map_err(runtime)?;
            write_training_log(out.join("training_log.csv"), &log).map_err(runtime)?;
            println!("eval before training: {:.6e}", log.initial_eval);
            println!("eval after training: {:.6e}", log.final_eval);
            println!("wrote {}", ckpt.display());
        }
        Command::EvalTeacher { checkpoint } => {
            banner(&raw)?;
            let cfg = experiment(&raw)?;
            let out = out_dir(&cli.common)?;
            let path = checkpoint.or_else(|| cfg.param.checkpoint.clone()).unwrap_or_else(|| out.join("teacher.ckpt"));
            let exp = prepare(&cfg).map_err(runtime)?;
            let (mut net, _) = load_checkpoint(&path).map_err(runtime)?;
            if cfg.teacher.kind == labelsynth::harness::TeacherKind::BlastUnrolled {
                net.set_head(Head::Residual { alpha: cfg.param.residual_alpha }).map_err(runtime)?;
            }
            let (teacher, sgd) = eval_teacher(&cfg, &exp, &net).map_err(runtime)?;
            eval_outputs(&teacher, &sgd, &out)?;
        }
        Command::TheoremSuite { kind } => {
            banner(&raw)?;
            let mut settings = TheoremSettings { teaching: raw.clone(), ..TheoremSettings::default() };
            if let Some(s) = cli.common.seed {
                settings.seed = s;
            }
            let report = theorem_suite(kind, &settings).map_err(runtime)?;
            print!("{report}");
            if !report.passed {
                return Err(Failure::Runtime(format!("suite {kind} failed")));
            }
        }
        Command::Plot { inputs, column, log_y, title, name } => {
            let out = out_dir(&cli.common)?;
            let mut series = Vec::new();
            for p in &inputs {
                let (header, cols) = read_columns_csv(p).map_err(runtime)?;
                let j = header
                    .iter()
                    .position(|h| *h == column)
                    .ok_or_else(|| Failure::Validation(format!("{}: no column {column:?} (have {})", p.display(), header.join(", "))))?;
                series.push(Series { name: stem(p), x: cols[0].clone(), y: cols[j].clone() });
            }
            let chart = ChartConfig { title, x_label: "iteration".into(), y_label: column, log_y, ..ChartConfig::default() };
            let path = out.join(name);
            write_svg_chart(&series, &path, &chart).map_err(runtime)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn teach_outputs(cfg: &ExperimentConfig, traces: &[ConvergenceTrace], out: &Path) -> Out<()> {
    for tr in traces {
        write_trace_csv(tr, out.join(format!("trace_seed{}.csv", tr.seed))).map_err(runtime)?;
    }
    // Runs stopped early by the distance threshold are cut to the shortest one.
    let len = traces.iter().map(|t| t.records.len()).min().unwrap_or(0);
    let cut = |f: fn(&labelsynth::harness::TraceRecord) -> f64| -> Vec<Vec<f64>> { traces.iter().map(|t| t.records[..len].iter().map(f).collect()).collect() };
    let dist = aggregate(&cut(|r| r.dist)).map_err(runtime)?;
    let obj = aggregate(&cut(|r| r.objective)).map_err(runtime)?;
    let acc = aggregate(&cut(|r| r.acc)).map_err(runtime)?;
    let micros = aggregate(&cut(|r| r.micros)).map_err(runtime)?;
    let t: Vec<f64> = traces[0].records[..len].iter().map(|r| r.t as f64).collect();
    let mean = out.join("mean.csv");
    write_columns_csv(
        &mean,
        &["t", "dist", "dist_se", "objective", "objective_se", "acc", "micros"],
        &[&t, &dist.mean, &dist.stderr, &obj.mean, &obj.stderr, &acc.mean, &micros.mean],
    )
    .map_err(runtime)?;
    let name = cfg.teacher.kind.to_string();
    let chart = ChartConfig { title: format!("{name} ({} seeds)", traces.len()), y_label: "distance to target".into(), log_y: true, ..ChartConfig::default() };
    write_svg_chart(&[Series { name, x: t, y: dist.mean.clone() }], out.join("dist.svg"), &chart).map_err(runtime)?;
    println!("final mean distance: {:.6e}", dist.mean.last().copied().unwrap_or(f64::NAN));
    println!("wrote {} traces, {} and dist.svg to {}", traces.len(), mean.display(), out.display());
    Ok(())
}

fn eval_outputs(teacher: &labelsynth::param::EvalTrace, sgd: &labelsynth::param::EvalTrace, out: &Path) -> Out<()> {
    let t: Vec<f64> = teacher.t.iter().map(|v| *v as f64).collect();
    let pad = |v: &[f64]| if v.is_empty() { vec![f64::NAN; t.len()] } else { v.to_vec() };
    let cols = [pad(&teacher.dist), pad(&sgd.dist), pad(&teacher.val_loss), pad(&sgd.val_loss), pad(&teacher.val_acc), pad(&sgd.val_acc)];
    let refs: Vec<&[f64]> = std::iter::once(t.as_slice()).chain(cols.iter().map(Vec::as_slice)).collect();
    let path = out.join("eval.csv");
    write_columns_csv(&path, &["t", "teacher_dist", "sgd_dist", "teacher_val_loss", "sgd_val_loss", "teacher_val_acc", "sgd_val_acc"], &refs).map_err(runtime)?;
    let series = [Series { name: "teacher".into(), x: t.clone(), y: cols[0].clone() }, Series { name: "sgd".into(), x: t.clone(), y: cols[1].clone() }];
    let chart = ChartConfig { title: "evaluation".into(), y_label: "distance to target".into(), log_y: true, ..ChartConfig::default() };
    write_svg_chart(&series, out.join("eval_dist.svg"), &chart).map_err(runtime)?;
    println!("final distance: teacher {:.6e}, sgd {:.6e}", cols[0].last().unwrap_or(&f64::NAN), cols[1].last().unwrap_or(&f64::NAN));
    if !teacher.val_loss.is_empty() {
        println!("final validation loss: teacher {:.6e}, sgd {:.6e}", cols[2].last().unwrap_or(&f64::NAN), cols[3].last().unwrap_or(&f64::NAN));
    }
    println!("wrote {}", path.display());
    Ok(())
}
