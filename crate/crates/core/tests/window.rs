use horolab_core::flows::HOROCYCLE_STEP;
use horolab_core::surface::{Character, FuchsianSpec};
use horolab_core::thermo::{PressureCurve, ShiftModel, Suspension, UGrid, BUILTIN_MODELS};
use horolab_core::window::{
    key_lemma_rhs, verify_key_lemma, verify_window_I, verify_window_II, EventSpec, GeometricWindow,
    SymbolicLeaf, SymbolicWindow, DEFAULT_NODES,
};

fn leaf(name: &str) -> SymbolicLeaf {
    let m = ShiftModel::builtin(name).unwrap();
    SymbolicLeaf::new(Suspension::new(m).unwrap(), DEFAULT_NODES).unwrap()
}

fn log_grid(lo: f64, hi: f64) -> Vec<f64> {
    let n = ((hi - lo) / 0.5).round() as usize;
    (0..=n).map(|k| (lo + 0.5 * k as f64).exp()).collect()
}

#[test]
fn rhs_matches_plug_in_arithmetic() {
    let v = key_lemma_rhs(1.0, 1.0, 1, 4f64.exp(), &[0.0], |_| Ok(1.0)).unwrap();
    let oracle = 4f64.exp() / (8.0 * std::f64::consts::PI).sqrt();
    assert!((v - oracle).abs() < 1e-12);
    assert!((v - 10.89).abs() < 0.01);
}

#[test]
fn window_one_r_grows_with_eta() {
    let leaf = leaf("full2-cosh");
    let event = EventSpec::unit_box(1);
    let src = SymbolicWindow {
        leaf: &leaf,
        event: &event,
    };
    let grid = log_grid(4.0, 8.0);
    let rs: Vec<f64> = [0.25, 0.5, 0.75]
        .iter()
        .map(|&eta| {
            verify_window_I(&src, eta, 200, &grid, 7)
                .unwrap()
                .r
                .unwrap()
        })
        .collect();
    assert!(rs.windows(2).all(|w| w[1] >= w[0]), "{rs:?}");
    assert!(rs[1] > 0.0 && rs[1] < 1.0);
}

#[test]
fn geometric_and_symbolic_window_one_agree() {
    let spec = FuchsianSpec::octagon();
    let phi = Character::default_z(&spec);
    let geo = GeometricWindow {
        spec: &spec,
        phi: &phi,
        dt: HOROCYCLE_STEP,
    };
    let rg = verify_window_I(&geo, 0.5, 200, &log_grid(100f64.ln(), 1e4f64.ln()), 7).unwrap();
    let leaf = leaf("full2-cosh");
    let event = EventSpec::unit_box(1);
    let sym = SymbolicWindow {
        leaf: &leaf,
        event: &event,
    };
    let rs = verify_window_I(&sym, 0.5, 200, &log_grid(4.0, 8.0), 7).unwrap();
    assert!(rg.pass && rs.pass);
    assert!((rg.r.unwrap() - rs.r.unwrap()).abs() <= 0.05 + 1e-9);
}

#[test]
fn window_two_constant_below_quarter_on_builtins() {
    for name in BUILTIN_MODELS {
        let leaf = leaf(name);
        let event = EventSpec::unit_box(leaf.susp.model.d);
        let src = SymbolicWindow {
            leaf: &leaf,
            event: &event,
        };
        let rep = verify_window_II(&src, 0.05, 200, &log_grid(4.0, 8.0), 7).unwrap();
        assert!(rep.pass && !rep.degenerate, "{name}: {:?}", rep.c);
    }
}

#[test]
fn whole_space_event_is_exact() {
    let leaf = leaf("golden-mean");
    let m = leaf.susp.model.clone();
    let pc = PressureCurve::compute(&m, &UGrid::new(-0.5, 0.5, 0.1).unwrap()).unwrap();
    let rep = verify_key_lemma(
        &leaf,
        &pc,
        &EventSpec::whole_space(),
        &[50.0],
        20,
        f64::INFINITY,
        3,
    )
    .unwrap();
    let e = &rep.entries[0];
    assert_eq!(e.in_box, 20);
    assert!(e.median_abs_log_ratio.unwrap() < 1e-9);
}

#[test]
fn smaller_box_gives_tighter_ratios() {
    let leaf = leaf("full2-cosh");
    let m = leaf.susp.model.clone();
    let pc = PressureCurve::compute(&m, &UGrid::new(-1.0, 1.0, 0.02).unwrap()).unwrap();
    let event = EventSpec::unit_box(1);
    let t = 8f64.exp();
    // At T* = 8 these radii admit |ξ| ≤ 0, 1 and 2.
    let spread: Vec<f64> = [0.1, 0.2, 0.3]
        .iter()
        .map(|&b| {
            let rep = verify_key_lemma(&leaf, &pc, &event, &[t], 1000, b, 8).unwrap();
            let q = rep.entries[0].log_ratio_quantiles.unwrap();
            q.q75 - q.q25
        })
        .collect();
    assert!(spread.windows(2).all(|w| w[0] < w[1]), "{spread:?}");
}
