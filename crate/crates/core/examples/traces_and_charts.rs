//! Writes per-seed trace CSVs, reads one back, and draws an SVG chart.
//!
//! `cargo run --release --example traces_and_charts -- [out_dir]`

use std::path::PathBuf;

use anyhow::Result;
use labelsynth::harness::{prepare, read_trace_csv, run_teaching, write_svg_chart, write_trace_csv, ChartConfig, Config, ExperimentConfig, Series};

fn main() -> Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("labelsynth-traces"));
    std::fs::create_dir_all(&out)?;
    let mut series = Vec::new();
    for kind in ["sgd", "imt", "last_nc", "mixed"] {
        let mut c = Config::default();
        c.apply_overrides(&[format!("teacher.kind={kind}"), "run.seeds=0".into(), "run.iterations=300".into()])?;
        let cfg = ExperimentConfig::from_config(&c)?;
        let exp = prepare(&cfg)?;
        let trace = &run_teaching(&cfg, &exp)?[0];
        let path = out.join(format!("{kind}.csv"));
        write_trace_csv(trace, &path)?;
        let back = read_trace_csv(&path, trace.seed)?;
        assert_eq!(back.records.len(), trace.records.len());
        series.push(Series { name: kind.into(), x: trace.ts().iter().map(|&t| t as f64).collect(), y: trace.dist() });
    }
    let chart = ChartConfig { title: "distance to target".into(), y_label: "||w - w*||".into(), log_y: true, ..ChartConfig::default() };
    write_svg_chart(&series, out.join("dist.svg"), &chart)?;
    println!("wrote 4 traces and dist.svg to {}", out.display());
    Ok(())
}
