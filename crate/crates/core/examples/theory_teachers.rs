//! The gain, line-search and Newton teachers, and the monotonicity check,
//! each with its measured constants.
//!
//! `cargo run --release --example theory_teachers`

use anyhow::Result;
use labelsynth::harness::{theorem_suite, TheoremKind, TheoremSettings};

fn main() -> Result<()> {
    let settings = TheoremSettings::default();
    for kind in [TheoremKind::SuperEt, TheoremKind::Et, TheoremKind::Armijo, TheoremKind::Monotonicity] {
        print!("{}", theorem_suite(kind, &settings)?);
    }
    Ok(())
}
