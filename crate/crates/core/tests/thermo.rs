use std::f64::consts::LN_2;

use horolab_core::sampling::rng_for;
use horolab_core::stats::variance;
use horolab_core::thermo::{
    legendre_h, pressure, pressure_root, rpf_eigendata, transfer_adjoint, transfer_apply,
    PressureCurve, ShiftDef, ShiftModel, Suspension, UGrid, BUILTIN_MODELS,
};
use proptest::prelude::*;

#[test]
fn pressure_is_stable_in_cylinder_depth() {
    for name in BUILTIN_MODELS {
        let def = ShiftDef::builtin(name).unwrap();
        let k = def.depth;
        let coarse = ShiftModel::raw(def.clone()).unwrap();
        let fine = ShiftModel::raw(def.with_depth(k + 1)).unwrap();
        let d = coarse.d;
        let zero = vec![0.0; d];
        let lam = |m: &ShiftModel| pressure(m, &m.weight(1.0, &zero)).unwrap();
        assert!((lam(&coarse) - lam(&fine)).abs() < 1e-4, "{name}");
        for u in [-0.5, 0.3, 0.8] {
            let u = vec![u; d];
            let a = pressure_root(&coarse, &u).unwrap();
            let b = pressure_root(&fine, &u).unwrap();
            assert!((a - b).abs() < 1e-4, "{name} at {u:?}: {a} vs {b}");
        }
    }
}

#[test]
fn suspension_variance_matches_covariance() {
    // Cov = 1 / ln 2 for the cosh model; the roof is ln 2, so roof time 8
    // holds floor(8 / ln 2) = 11 unit jumps.
    let s = Suspension::new(ShiftModel::builtin("full2-cosh").unwrap()).unwrap();
    let t_star = 8.0;
    let xs: Vec<f64> = (0..20_000)
        .map(|i| s.sample(t_star, &mut rng_for(21, i)).xi[0] as f64)
        .collect();
    let ratio = variance(&xs) / t_star * LN_2;
    assert!((ratio - 1.0).abs() < 0.1, "{ratio}");
}

#[test]
fn golden_mean_dual_peaks_at_the_drift() {
    // Its jumps do not average to zero, so H attains 1 at ∇P(0) instead of 0.
    let m = ShiftModel::builtin("golden-mean").unwrap();
    let pc = PressureCurve::compute(&m, &UGrid::new(-1.0, 1.0, 0.05).unwrap()).unwrap();
    let h = 1e-4;
    let drift = (pressure_root(&m, &[h]).unwrap() - pressure_root(&m, &[-h]).unwrap()) / (2.0 * h);
    assert!(drift.abs() > 1e-3);
    assert!((legendre_h(&pc, &[drift]).unwrap() - 1.0).abs() < 1e-6);
    let hs: Vec<f64> = (-4..=4)
        .map(|k| legendre_h(&pc, &[drift + 0.05 * k as f64]).unwrap())
        .collect();
    assert!(hs.iter().all(|&v| v <= 1.0 + 1e-9));
    for w in hs.windows(3) {
        assert!(w[0] - 2.0 * w[1] + w[2] <= 1e-6);
    }
}

fn model_name() -> impl Strategy<Value = &'static str> {
    prop::sample::select(BUILTIN_MODELS.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transfer_duality(name in model_name(), seed in 0u64..1000, beta in 0.5..1.5f64) {
        let m = ShiftModel::builtin(name).unwrap();
        let w = m.weight(beta, &vec![0.0; m.d]);
        let rpf = rpf_eigendata(&m, &w).unwrap();
        let mut rng = rng_for(seed, 0);
        let phi: Vec<f64> = (0..m.size()).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
        let lhs: f64 = transfer_apply(&m, &w, &phi).iter().zip(&rpf.nu).map(|(a, b)| a * b).sum();
        let rhs: f64 = rpf.lambda * phi.iter().zip(&rpf.nu).map(|(a, b)| a * b).sum::<f64>();
        prop_assert!((lhs - rhs).abs() < 1e-8);
        let adj = transfer_adjoint(&m, &w, &rpf.nu);
        let res = adj.iter().zip(&rpf.nu).map(|(a, b)| (a - rpf.lambda * b).abs()).fold(0.0, f64::max);
        prop_assert!(res < 1e-8);
    }

    #[test]
    fn pressure_root_is_convex(name in model_name(), u in -1.5..1.5f64, h in 0.05..0.5f64) {
        let m = ShiftModel::builtin(name).unwrap();
        let p = |x: f64| pressure_root(&m, &vec![x; m.d]).unwrap();
        prop_assert!(p(u - h) - 2.0 * p(u) + p(u + h) >= -1e-8);
    }

    #[test]
    fn suspension_time_is_conserved(seed in 0u64..10_000, t in 0.0..50.0f64) {
        let s = Suspension::new(ShiftModel::builtin("golden-mean").unwrap()).unwrap();
        let run = s.sample(t, &mut rng_for(seed, 0));
        let m = &s.model;
        let mut y = m.code(&run.word[..m.depth]);
        let mut spent = 0.0;
        for &b in &run.word[m.depth..] {
            spent += m.tau[y];
            y = m.append(y, b);
        }
        prop_assert!((spent + run.leftover - t).abs() < 1e-9 * (1.0 + t));
        prop_assert!(run.leftover >= -1e-12 && run.leftover < m.tau[y] + 1e-12);
    }
}
