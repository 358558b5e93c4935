//! Omniscient per-step teachers.
//!
//! The greedy teacher picks, for a given example, the label minimizing
//! `G(x,y|w) = ‖w − η∇ℓ(x,y|w) − w*‖²`. Example selection (the classic
//! pool-scanning teacher), mixed teaching and the gradient-rescaling teachers
//! live here as well.

mod discrepancy;
mod select;
mod synth;
mod theory;

pub use discrepancy::{discrepancy_direct, discrepancy_g, Discrepancy};
pub use select::{imt_select, mixed_teach_step};
pub use synth::{
    default_label_bracket, mlp_objective, synth_label, synth_label_lr, synth_label_lsr, synth_label_mlp, synth_label_vector,
    SIMPLEX_ITERS, SIMPLEX_STEP_FRACTION,
};
pub use theory::{
    armijo_teacher, et_gain_teacher, g_scalar, lsr_label_for_gain, lsr_normal_equations, newton_last_step, newton_last_teacher,
    ArmijoConfig, ArmijoStep, TheoryConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PNorm {
    L1,
    L2,
    Inf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    /// Centre the ball on the learner's current prediction.
    Prediction,
    /// Centre the ball on the ground-truth label.
    GroundTruth,
}

/// Admissible label set of the teacher.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LabelConstraint {
    #[default]
    None,
    OneHot,
    Simplex,
    Magnitude { p: PNorm, radius: f64, anchor: Anchor },
}
