//! Per-iteration teacher time as the pool grows: example selection scans the
//! pool, label synthesis does not.
//!
//! `cargo run --release --example cost_scaling`

use anyhow::Result;
use labelsynth::harness::{cost_scaling, CostSettings};

fn main() -> Result<()> {
    let r = cost_scaling(&CostSettings::default())?;
    println!("{:>8} {:>12} {:>12}", "pool", "imt us", "last us");
    for i in 0..r.sizes.len() {
        println!("{:>8} {:>12.3} {:>12.3}", r.sizes[i], r.imt_micros[i], r.last_micros[i]);
    }
    println!("imt: slope {:.3e} us/example, R^2 {:.3} (linear: {})", r.imt_fit.slope, r.imt_fit.r2, r.imt_linear());
    println!("last: slope {:.3e} +- {:.1e} (flat: {})", r.last_fit.slope, r.last_fit.slope_se, r.last_flat());
    Ok(())
}
