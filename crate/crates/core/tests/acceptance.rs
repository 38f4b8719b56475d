//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Each criterion also has a wall-clock budget.

use std::f64::consts::LN_2;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use horolab_core::cells::{CellPartition, RadialSpacing, VOLUME_SEED};
use horolab_core::flows::{
    default_target, smallest_thick_k, Flow, GEODESIC_STEP, HOROCYCLE_STEP, K_GRID,
};
use horolab_core::psl2::{
    change_of_time, conjugate_by_u, flow, FlowKind, GroupElement, PreciseElement,
};
use horolab_core::rigidity::joining::{projection_test, JoiningModel, JoiningSampler};
use horolab_core::rigidity::orbit::{orbit_density, DEFAULT_MAX_WORDS};
use horolab_core::rigidity::poly::{c_alpha_good_check, random_good_instance};
use horolab_core::rigidity::subgroup::{
    coset_counts_bruteforce, index_from_counts, intersection_index, SubgroupSpec,
};
use horolab_core::sampling::{haar_cover_point, haar_in_domain, rng_for};
use horolab_core::stats::{linear_fit, mean, variance};
use horolab_core::surface::{character_value, reduce_precise, Character, FuchsianSpec};
use horolab_core::thermo::{
    covariance_sigma, legendre_h, pressure_root, rpf_eigendata, PressureCurve, ShiftModel,
    Suspension, UGrid, BUILTIN_MODELS,
};
use horolab_core::window::{
    verify_key_lemma, verify_window_I, verify_window_II, EventSpec, SymbolicLeaf, SymbolicWindow,
    DEFAULT_NODES,
};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> Result<Outcome, String>;

fn outcome(pass: bool, detail: String) -> Result<Outcome, String> {
    Ok(Outcome { pass, detail })
}

fn max_entry_diff(a: &GroupElement, b: &GroupElement) -> f64 {
    // Elements are sign-normalized, but compare against both lifts anyway.
    let (x, y) = (a.entries(), b.entries());
    let same = x
        .iter()
        .zip(&y)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    let flip = x
        .iter()
        .zip(&y)
        .map(|(p, q)| (p + q).abs())
        .fold(0.0, f64::max);
    same.min(flip)
}

fn identities() -> Result<Outcome, String> {
    let mut rng = rng_for(1, 0);
    let (mut worst_time, mut worst_conj) = (0.0f64, 0.0f64);
    let mut n = 0;
    while n < 10_000 {
        let s = rng.gen_range(-2.0..2.0);
        let r = rng.gen_range(-1.0..1.0);
        let t = rng.gen_range(-1.0..1.0);
        if (1.0 - (-s as f64).exp() * r * t).abs() < 0.1 {
            continue;
        }
        n += 1;
        let tc = change_of_time(s, r, t).map_err(|e| e.to_string())?;
        let lhs = flow(FlowKind::Uplus, -(-s as f64).exp() * r) * flow(FlowKind::U, t);
        let rhs = flow(FlowKind::U, tc.beta) * tc.gee;
        worst_time = worst_time.max(max_entry_diff(&lhs, &rhs));

        let g = haar_in_domain(&FuchsianSpec::octagon(), &mut rng);
        let direct = flow(FlowKind::U, -t) * g * flow(FlowKind::U, t);
        worst_conj = worst_conj.max(max_entry_diff(&conjugate_by_u(&g, t), &direct));
    }
    outcome(
        worst_time < 1e-12 && worst_conj < 1e-12,
        format!("change-of-time residual {worst_time:.1e}, conjugation residual {worst_conj:.1e}"),
    )
}

fn octagon() -> Result<Outcome, String> {
    let spec = FuchsianSpec::octagon();
    let phi = Character::default_z2(&spec);
    let residual = spec.relation_residual();
    let mut rng = rng_for(2, 0);
    let mut ok = 0;
    for _ in 0..200 {
        let len = rng.gen_range(0..=12);
        let mut word: Vec<usize> = Vec::new();
        while word.len() < len {
            let k = rng.gen_range(0..spec.len());
            if word.last().map_or(true, |&l| spec.inverse_index(l) != k) {
                word.push(k);
            }
        }
        let h = haar_in_domain(&spec, &mut rng);
        // Double-double product: f64 loses ~e^{|γ|} ulps on long words.
        let mut g = PreciseElement::from(h);
        for &k in word.iter().rev() {
            g = g.left_mul(&spec.generators()[k]);
        }
        let p = reduce_precise(&spec, &g, &phi).map_err(|e| e.to_string())?;
        if p.xi == character_value(&word, &phi).map_err(|e| e.to_string())? && p.rep.dist(&h) < 1e-8
        {
            ok += 1;
        }
    }
    outcome(
        residual < 1e-9 && ok == 200,
        format!("relation residual {residual:.1e}, round trips {ok}/200"),
    )
}

fn golden_values() -> Result<Outcome, String> {
    let m = ShiftModel::builtin("full2-cosh").map_err(|e| e.to_string())?;
    let p0 = pressure_root(&m, &[0.0]).map_err(|e| e.to_string())?;
    let p1 = pressure_root(&m, &[1.0]).map_err(|e| e.to_string())?;
    let p1_exact = (2.0 * 1f64.cosh()).ln() / LN_2;
    let grid = UGrid::new(-1.0, 1.0, 0.02).map_err(|e| e.to_string())?;
    let pc = PressureCurve::compute(&m, &grid).map_err(|e| e.to_string())?;
    let (cov, _) = covariance_sigma(&pc).map_err(|e| e.to_string())?;
    let h = |x: f64| legendre_h(&pc, &[x]).map_err(|e| e.to_string());
    let h0 = h(0.0)?;
    let step = 0.05;
    let hpp = (h(step)? - 2.0 * h0 + h(-step)?) / (step * step);
    let pass = (p0 - 1.0).abs() < 1e-6
        && (p1 - p1_exact).abs() < 1e-6
        && (cov[0][0] * LN_2 - 1.0).abs() < 0.01
        && (h0 - 1.0).abs() < 1e-6
        && (hpp / -LN_2 - 1.0).abs() < 0.02;
    outcome(
        pass,
        format!(
            "P(0) = {p0:.9}, P(1) - exact = {:.1e}, Cov log2 = {:.5}, H(0) = {h0:.9}, H''(0) / -log2 = {:.4}",
            p1 - p1_exact,
            cov[0][0] * LN_2,
            hpp / -LN_2
        ),
    )
}

fn rpf() -> Result<Outcome, String> {
    let mut worst_res = 0.0f64;
    let mut worst_norm = 0.0f64;
    for name in BUILTIN_MODELS {
        let m = ShiftModel::builtin(name).map_err(|e| e.to_string())?;
        let rpf = rpf_eigendata(&m, &m.weight(1.0, &vec![0.0; m.d])).map_err(|e| e.to_string())?;
        let pairing: f64 = rpf.psi.iter().zip(&rpf.nu).map(|(a, b)| a * b).sum();
        worst_res = worst_res.max(rpf.residual);
        worst_norm = worst_norm.max((pairing - 1.0).abs());
    }
    outcome(
        worst_res < 1e-8 && worst_norm < 1e-10,
        format!(
            "{} models, max residual {worst_res:.1e}, max |∫ψ dν - 1| {worst_norm:.1e}",
            BUILTIN_MODELS.len()
        ),
    )
}

fn clt() -> Result<Outcome, String> {
    use rayon::prelude::*;
    let spec = FuchsianSpec::octagon();
    let phi = Character::default_z(&spec);
    let fl = Flow::new(&spec, &phi);
    let t_max = 2000.0;
    let paths: Vec<Vec<i64>> = (0..500u64)
        .into_par_iter()
        .map(|i| {
            let p = haar_cover_point(&spec, &phi, &mut rng_for(5, i));
            fl.xi_path(&p, t_max, GEODESIC_STEP)
                .map(|path| path.into_iter().map(|x| x[0]).collect())
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let times: Vec<f64> = (1..=20).map(|k| 100.0 * k as f64).collect();
    let vars: Vec<f64> = times
        .iter()
        .map(|&t| {
            let k = (t / GEODESIC_STEP).round() as usize;
            variance(&paths.iter().map(|p| p[k] as f64).collect::<Vec<_>>())
        })
        .collect();
    let fit = linear_fit(&times, &vars);
    let last: Vec<f64> = paths.iter().map(|p| p[p.len() - 1] as f64).collect();
    let drift = mean(&last).abs() / t_max;
    outcome(
        fit.r2 > 0.98 && drift < 0.05,
        format!(
            "R² {:.4}, slope {:.4}, |mean ξ_T| / T {drift:.4}",
            fit.r2, fit.slope
        ),
    )
}

fn symbolic_leaf() -> Result<(SymbolicLeaf, PressureCurve), String> {
    let m = ShiftModel::builtin("full2-cosh").map_err(|e| e.to_string())?;
    let grid = UGrid::new(-1.0, 1.0, 0.02).map_err(|e| e.to_string())?;
    let pc = PressureCurve::compute(&m, &grid).map_err(|e| e.to_string())?;
    let susp = Suspension::new(m).map_err(|e| e.to_string())?;
    let leaf = SymbolicLeaf::new(susp, DEFAULT_NODES).map_err(|e| e.to_string())?;
    Ok((leaf, pc))
}

fn log_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| (lo + k as f64 * step).exp()).collect()
}

fn key_lemma() -> Result<Outcome, String> {
    let (leaf, pc) = symbolic_leaf()?;
    let event = EventSpec::unit_box(1);
    let t = 6f64.exp();
    let rep =
        verify_key_lemma(&leaf, &pc, &event, &[t], 1000, 0.1, 6).map_err(|e| e.to_string())?;
    let e = &rep.entries[0];
    let med = e.median_abs_log_ratio;
    outcome(
        !e.underpowered && med.is_some_and(|m| m < 0.5),
        format!(
            "T = e^6, {} of {} samples in box, median |log ratio| {}",
            e.in_box,
            e.samples,
            med.map_or("n/a".into(), |m| format!("{m:.3}"))
        ),
    )
}

fn window_one() -> Result<Outcome, String> {
    let (leaf, _) = symbolic_leaf()?;
    let event = EventSpec::unit_box(1);
    let src = SymbolicWindow {
        leaf: &leaf,
        event: &event,
    };
    let grid = log_grid(4.0, 8.0, 0.5);
    let mut rs = Vec::new();
    let mut main_ok = false;
    let mut rate = 0.0;
    for eta in [0.25, 0.5, 0.75] {
        let rep = verify_window_I(&src, eta, 200, &grid, 7).map_err(|e| e.to_string())?;
        let r = rep.r.unwrap_or(0.0);
        if eta == 0.5 {
            main_ok = rep.pass && !rep.degenerate && rep.pass_rate >= 0.9;
            rate = rep.pass_rate;
        }
        rs.push(r);
    }
    let monotone = rs.windows(2).all(|w| w[1] >= w[0]);
    outcome(
        main_ok && monotone,
        format!(
            "T up to e^8, r(η=0.5) = {:.2} at pass rate {rate:.3}, r over η = {rs:?}",
            rs[1]
        ),
    )
}

fn window_two() -> Result<Outcome, String> {
    let (leaf, _) = symbolic_leaf()?;
    let event = EventSpec::unit_box(1);
    let src = SymbolicWindow {
        leaf: &leaf,
        event: &event,
    };
    let grid = log_grid(4.0, 8.0, 0.5);
    let rep = verify_window_II(&src, 0.05, 200, &grid, 7).map_err(|e| e.to_string())?;
    outcome(
        rep.pass && !rep.degenerate && rep.pass_rate >= 0.9,
        format!(
            "δ = 0.05, c = {}, pass rate {:.3}",
            rep.c.map_or("none".into(), |c| format!("{c:.2}")),
            rep.pass_rate
        ),
    )
}

fn good() -> Result<Outcome, String> {
    let mut rng = rng_for(9, 0);
    let mut violations = 0;
    for _ in 0..10_000 {
        let (p, j, eps) = random_good_instance(&mut rng);
        if !c_alpha_good_check(&p, j, eps)
            .map_err(|e| e.to_string())?
            .pass
        {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("{violations} violations in 10000"))
}

fn thickness() -> Result<Outcome, String> {
    use rayon::prelude::*;
    let spec = FuchsianSpec::octagon();
    let phi = Character::default_z(&spec);
    let fl = Flow::new(&spec, &phi);
    let ks: Vec<Option<f64>> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let p = haar_cover_point(&spec, &phi, &mut rng_for(10, i));
            let rs = fl.return_set(&p, default_target, 1e3, HOROCYCLE_STEP)?;
            smallest_thick_k(&rs, &K_GRID)
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let passed = ks.iter().filter(|k| k.is_some()).count();
    let worst = ks.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    outcome(
        passed >= 90,
        format!("{passed}/100 return sets K-thick, largest K needed {worst}"),
    )
}

fn joinings() -> Result<Outcome, String> {
    let sub = |n: &str| SubgroupSpec::builtin(n).map_err(|e| e.to_string());
    let k = sub("kerphi")?;
    let g0 = k.base.parse_word("a1 b1").map_err(|e| e.to_string())?;
    let g0_inv = k.base.invert_word(&g0);
    let cases = [
        (k.clone(), k.clone(), Vec::new()),
        (k.clone(), sub("kerphi_psi2")?, g0.clone()),
        (k.clone(), sub("kerphi_b")?, Vec::new()),
    ];
    let mut oracle_ok = true;
    let mut indices = Vec::new();
    for (s1, s2, w) in &cases {
        let by_image = intersection_index(s1, s2, w).map_err(|e| e.to_string())?;
        let w_inv = if w.is_empty() {
            Vec::new()
        } else {
            g0_inv.clone()
        };
        let first = coset_counts_bruteforce(s1, s2, w, 8).map_err(|e| e.to_string())?;
        let second = coset_counts_bruteforce(s2, s1, &w_inv, 8).map_err(|e| e.to_string())?;
        let by_words = (index_from_counts(&first), index_from_counts(&second));
        oracle_ok &= by_image == by_words;
        indices.push(by_image);
    }

    let model = JoiningModel::new(k.clone(), k.clone(), Vec::new()).map_err(|e| e.to_string())?;
    let sampler = JoiningSampler::new(&model);
    let mut cells = CellPartition::with_total(&k.base, 64, RadialSpacing::Distance)
        .map_err(|e| e.to_string())?;
    cells.estimate_volumes(&k.base, 1_000_000, VOLUME_SEED);
    let mut medians = Vec::new();
    for t in [1e3, 1e4, 1e5] {
        let rep = projection_test(&sampler, &cells, t, 16, 11).map_err(|e| e.to_string())?;
        medians.push(rep.tv1_median.max(rep.tv2_median));
    }
    let trend = medians.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        oracle_ok && trend && medians[2] < 0.15,
        format!(
            "indices {indices:?} (enumeration agrees: {oracle_ok}), TV medians {}",
            medians
                .iter()
                .map(|m| format!("{m:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn orbit() -> Result<Outcome, String> {
    let s = SubgroupSpec::builtin("kerphi").map_err(|e| e.to_string())?;
    let x = haar_in_domain(&s.base, &mut rng_for(12, 0));
    // 128^3 cells: 64 cells saturate before L = 8.
    let cells = CellPartition::with_total(&s.base, 128 * 128 * 128, RadialSpacing::Area)
        .map_err(|e| e.to_string())?;
    let control = orbit_density(&s, &x, 0, &cells, DEFAULT_MAX_WORDS)
        .map_err(|e| e.to_string())?
        .cells_hit;
    let mut cov = Vec::new();
    for l in [4, 6, 8, 10] {
        let r = orbit_density(&s, &x, l, &cells, DEFAULT_MAX_WORDS).map_err(|e| e.to_string())?;
        cov.push(r.coverage);
    }
    let increasing = cov.windows(2).all(|w| w[1] > w[0]);
    outcome(
        control == 1 && increasing,
        format!(
            "L = 0 hits {control} cell, coverage over L = 4, 6, 8, 10: {}",
            cov.iter()
                .map(|c| format!("{c:.5}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Check, u64); 12] = [
        ("algebraic identities", identities, 1),
        ("octagon group", octagon, 10),
        ("thermodynamic golden values", golden_values, 5),
        ("RPF eigendata", rpf, 5),
        ("CLT direction", clt, 600),
        ("key lemma formula", key_lemma, 300),
        ("window I", window_one, 600),
        ("window II", window_two, 600),
        ("(C, alpha)-good", good, 5),
        ("K-thickness", thickness, 600),
        ("joinings", joinings, 900),
        ("orbit density", orbit, 600),
    ];
    let mut failures = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_budget = elapsed <= Duration::from_secs(*budget);
        let (pass, detail) = match result {
            Ok(o) => (o.pass && in_budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.2}s of {budget}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    if failures == 0 {
        println!("all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("{failures} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}
