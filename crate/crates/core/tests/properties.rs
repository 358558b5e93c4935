//! Randomized invariants.

use proptest::prelude::*;

use labelsynth::data::{gen_linreg, Example, LabelKind, Pool};
use labelsynth::greedy::{
    discrepancy_direct, discrepancy_g, g_scalar, imt_select, mixed_teach_step, synth_label, synth_label_lsr, Anchor, LabelConstraint, PNorm,
};
use labelsynth::harness::{aggregate, paired, Config};
use labelsynth::learners::{Activation, Learner, LearnerKind};
use labelsynth::numerics::{project_simplex, SeededRng};
use labelsynth::param::{read_checkpoint, write_checkpoint, Head, TeacherNet};

fn vec_of(len: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, len)
}

/// `(x, w, w*)` of a common dimension.
fn lsr_instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..6).prop_flat_map(|d| (vec_of(d, -2.0, 2.0), vec_of(d, -2.0, 2.0), vec_of(d, -2.0, 2.0)))
}

fn lsr(d: usize, lambda: f64) -> Learner {
    Learner::new(LearnerKind::Lsr, d, lambda, false).unwrap()
}

fn one_hot(c: usize, k: usize) -> Vec<f64> {
    (0..k).map(|j| (j == c) as u8 as f64).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn same_seed_same_draws(seed in any::<u64>(), stream in any::<u64>()) {
        let mut a = SeededRng::new(seed).child(stream);
        let mut b = SeededRng::new(seed).child(stream);
        for _ in 0..20 {
            prop_assert_eq!(a.normal().to_bits(), b.normal().to_bits());
            prop_assert_eq!(a.below(17), b.below(17));
        }
    }

    #[test]
    fn simplex_projection_is_feasible_idempotent_and_nearest(v in vec_of(4, -3.0, 3.0), q in vec_of(4, 0.0, 1.0)) {
        let p = project_simplex(&v).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|x| *x >= 0.0));
        let again = project_simplex(&p).unwrap();
        for (a, b) in p.iter().zip(&again) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let s: f64 = q.iter().sum::<f64>().max(1e-12);
        let other: Vec<f64> = q.iter().map(|x| x / s).collect();
        let d = |u: &[f64]| u.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        prop_assert!(d(&p) <= d(&other) + 1e-12);
    }

    #[test]
    fn closed_form_label_beats_every_other_label((x, w, ws) in lsr_instance(), eta in 0.01f64..1.0, y in -50.0f64..50.0) {
        let l = lsr(x.len(), 0.0);
        let best = synth_label_lsr(&x, &w, &ws, eta).unwrap();
        let g_best = discrepancy_direct(&l, &x, &[best], &w, &ws, eta).unwrap();
        let g_other = discrepancy_direct(&l, &x, &[y], &w, &ws, eta).unwrap();
        prop_assert!(g_best <= g_other + 1e-9 * (1.0 + g_other));
    }

    #[test]
    fn decomposition_matches_explicit_step((x, w, ws) in lsr_instance(), eta in 0.01f64..1.0, y in -5.0f64..5.0, lambda in 0.0f64..0.5) {
        let l = lsr(x.len(), lambda);
        let a = discrepancy_g(&l, &x, &[y], &w, &ws, eta).unwrap().g;
        let b = discrepancy_direct(&l, &x, &[y], &w, &ws, eta).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
    }

    #[test]
    fn label_rescales_the_true_gradient((x, w, _ws) in lsr_instance(), y in -5.0f64..5.0, y_true in -5.0f64..5.0) {
        let l = lsr(x.len(), 0.0);
        let z: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
        prop_assume!((z - y_true).abs() > 1e-3);
        let g = g_scalar(&l, y, &x, y_true, &w).unwrap();
        let gy = l.grad(&w, &x, &[y]).unwrap();
        let gt = l.grad(&w, &x, &[y_true]).unwrap();
        for (a, b) in gy.iter().zip(&gt) {
            prop_assert!((a - g * b).abs() < 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn magnitude_labels_stay_in_the_ball((x, w, ws) in lsr_instance(), eta in 0.01f64..1.0, y_true in -3.0f64..3.0, radius in 0.0f64..2.0) {
        let l = lsr(x.len(), 0.0);
        let c = LabelConstraint::Magnitude { p: PNorm::L2, radius, anchor: Anchor::GroundTruth };
        let y = synth_label(&l, &x, &[y_true], &w, &ws, eta, &c).unwrap()[0];
        prop_assert!((y - y_true).abs() <= radius + 1e-9);
        let g = |v: f64| discrepancy_direct(&l, &x, &[v], &w, &ws, eta).unwrap();
        prop_assert!(g(y) <= g(y_true) + 1e-9 * (1.0 + g(y_true)));
    }

    #[test]
    fn class_constrained_labels_dominate_the_truth(seed in any::<u64>(), k in 2usize..5, mlp in any::<bool>()) {
        let mut r = SeededRng::new(seed);
        let d = 3;
        let kind = if mlp {
            LearnerKind::Mlp { hidden: 3, classes: k, activation: Activation::LeakyRelu(0.01) }
        } else {
            LearnerKind::Multiclass { classes: k }
        };
        let l = Learner::new(kind, d, 0.01, false).unwrap();
        let w = r.normal_vec(l.param_len(), 0.5);
        let ws = r.normal_vec(l.param_len(), 0.5);
        let x = r.normal_vec(d, 1.0);
        let truth = one_hot(r.below(k), k);
        let g = |y: &[f64]| discrepancy_direct(&l, &x, y, &w, &ws, 0.3).unwrap();
        let oh = synth_label(&l, &x, &truth, &w, &ws, 0.3, &LabelConstraint::OneHot).unwrap();
        prop_assert_eq!(oh.iter().filter(|v| **v == 1.0).count(), 1);
        prop_assert_eq!(oh.iter().filter(|v| **v == 0.0).count(), k - 1);
        prop_assert!(g(&oh) <= g(&truth) + 1e-12);
        let s = synth_label(&l, &x, &truth, &w, &ws, 0.3, &LabelConstraint::Simplex).unwrap();
        prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        prop_assert!(s.iter().all(|v| *v >= -1e-12));
        prop_assert!(g(&s) <= g(&truth) + 1e-10);
    }

    #[test]
    fn mixed_step_is_no_worse_than_selection_alone(seed in 0u64..1000, eta in 0.01f64..0.5) {
        let mut r = SeededRng::new(seed);
        let ws = r.normal_vec(3, 1.0);
        let pool = gen_linreg(25, 3, &ws, 0.0, 0.1, seed).unwrap();
        let l = lsr(3, 0.0);
        let w = r.normal_vec(3, 1.0);
        let (i, g_imt) = imt_select(&l, &pool, &w, &ws, eta, None).unwrap();
        let (j, y) = mixed_teach_step(&l, &pool, &w, &ws, eta, &LabelConstraint::None, None).unwrap();
        prop_assert_eq!(i, j);
        let g_mixed = discrepancy_direct(&l, &pool.get(j).x, &y, &w, &ws, eta).unwrap();
        prop_assert!(g_mixed <= g_imt + 1e-10 * (1.0 + g_imt));
    }

    #[test]
    fn aggregate_mean_lies_between_extremes(runs in prop::collection::vec(vec_of(6, -10.0, 10.0), 1..8)) {
        let c = aggregate(&runs).unwrap();
        for t in 0..6 {
            let lo = runs.iter().map(|r| r[t]).fold(f64::INFINITY, f64::min);
            let hi = runs.iter().map(|r| r[t]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(c.mean[t] >= lo - 1e-12 && c.mean[t] <= hi + 1e-12);
            prop_assert!(c.stderr[t] >= 0.0);
        }
    }

    #[test]
    fn paired_counts_partition_the_pairs(a in vec_of(10, 0.0, 1.0), b in vec_of(10, 0.0, 1.0)) {
        let p = paired(&a, &b).unwrap();
        prop_assert_eq!(p.a_wins + p.b_wins + p.ties, p.n);
        prop_assert!((0.0..=1.0).contains(&p.p_value));
    }

    #[test]
    fn checkpoints_round_trip_bit_exactly(seed in any::<u64>(), hidden in 1usize..6) {
        let net = TeacherNet::new(&[4, hidden, 2], Activation::LeakyRelu(0.01), Head::Softmax, &mut SeededRng::new(seed)).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &net, None).unwrap();
        let (back, adam) = read_checkpoint(&mut buf.as_slice()).unwrap();
        prop_assert!(adam.is_none());
        prop_assert_eq!(back.sizes(), net.sizes());
        let same = back.params().iter().zip(net.params()).all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same);
    }

    #[test]
    fn rendered_config_parses_back(eta in 1e-5f64..1.0, seed in 0u64..100) {
        let mut c = Config::default();
        c.set("learner.eta", &eta.to_string()).unwrap();
        c.set("run.seeds", &seed.to_string()).unwrap();
        let back = Config::parse(&c.render(), "rendered").unwrap();
        prop_assert_eq!(back.render(), c.render());
    }
}

#[test]
fn pool_rejects_nonfinite_features() {
    let bad = vec![Example { id: 0, x: vec![f64::NAN], y: vec![0.0] }];
    assert!(Pool::new(bad, LabelKind::Regression, 0).is_err());
}
