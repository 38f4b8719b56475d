use rayon::prelude::*;
use serde_json::{json, Value};

use horolab_core::cells::{CellPartition, RadialSpacing, VOLUME_SEED};
use horolab_core::flows::{lil_statistic, Flow, GEODESIC_STEP, HOROCYCLE_STEP};
use horolab_core::rigidity::joining::{fmt_index, projection_test, JoiningModel, JoiningSampler};
use horolab_core::rigidity::orbit::orbit_density;
use horolab_core::rigidity::poly::{c_alpha_good_check, random_good_instance};
use horolab_core::rigidity::subgroup::{intersection_index, SubgroupSpec};
use horolab_core::sampling::{haar_cover_point, haar_in_domain, rng_for};
use horolab_core::stats::{linear_fit, mean, median, variance, Quantiles};
use horolab_core::surface::{Character, FuchsianSpec};
use horolab_core::thermo::{
    covariance_sigma, legendre_h, pressure_root, PressureCurve, ShiftDef, ShiftModel, Suspension,
    UGrid,
};
use horolab_core::window::{
    verify_key_lemma, verify_window_I, verify_window_II, EventSpec, GeometricWindow, ProfileSource,
    SymbolicLeaf, SymbolicWindow, WindowReport, DEFAULT_NODES,
};

use crate::output::{indexed, write_report, CsvSink};
use crate::{Command, Common, Cover, Failure, Spacing, WindowArgs};

/// Samples processed per batch, so CSV rows stream out in bounded memory.
const BATCH: u64 = 1024;

/// Runs one subcommand; `Ok(false)` means its check failed.
pub fn run(command: Command) -> Result<bool, Failure> {
    match command {
        Command::Flow {
            cover,
            t,
            dt,
            samples,
            common,
        } => flow(cover, t, dt, samples, &common),
        Command::Clt {
            cover,
            t,
            points,
            samples,
            common,
        } => clt(cover, t, points, samples, &common),
        Command::Window1 { model, eta, window } => window_cmd(&model, Window::One(eta), &window),
        Command::Window2 {
            model,
            delta,
            window,
        } => window_cmd(&model, Window::Two(delta), &window),
        Command::Keylemma {
            model,
            log_t,
            samples,
            box_radius,
            common,
        } => keylemma(&model, &log_t, samples, box_radius, &common),
        Command::Pressure {
            model,
            u_grid,
            common,
        } => pressure(&model, &u_grid, &common),
        Command::Good { trials, common } => good(trials, &common),
        Command::Joining {
            spec1,
            spec2,
            g0,
            t0,
            t,
            starts,
            cells,
            volume_samples,
            common,
        } => joining(
            &spec1,
            &spec2,
            &g0,
            t0,
            t,
            starts,
            cells,
            volume_samples,
            &common,
        ),
        Command::Orbit {
            spec,
            l,
            cells,
            spacing,
            max_words,
            common,
        } => orbit(&spec, l, cells, spacing, max_words, &common),
    }
}

fn character(spec: &FuchsianSpec, cover: Cover) -> Character {
    match cover {
        Cover::Z => Character::default_z(spec),
        Cover::Z2 => Character::default_z2(spec),
    }
}

fn load_model(name: &str) -> Result<ShiftModel, Failure> {
    Ok(ShiftModel::new(ShiftDef::load(name)?)?)
}

fn to_strings<T: ToString>(xs: &[T]) -> Vec<String> {
    xs.iter().map(ToString::to_string).collect()
}

fn flow(cover: Cover, t: f64, dt: f64, samples: usize, common: &Common) -> Result<bool, Failure> {
    let spec = FuchsianSpec::octagon();
    let phi = character(&spec, cover);
    let d = phi.d();
    let fl = Flow::new(&spec, &phi);
    let mut header = vec!["sample_id".to_string(), "T".to_string()];
    header.extend(indexed("xi", d));
    header.push("birkhoff".into());
    let mut sink = CsvSink::open(common, &header)?;
    let mut xi_all: Vec<Vec<f64>> = vec![Vec::with_capacity(samples); d];
    let mut birkhoff = Vec::with_capacity(samples);
    let total = samples as u64;
    for lo in (0..total).step_by(BATCH as usize) {
        let rows: Vec<(Vec<i64>, f64)> = (lo..(lo + BATCH).min(total))
            .into_par_iter()
            .map(|i| {
                let p = haar_cover_point(&spec, &phi, &mut rng_for(common.seed, i));
                let xi = fl.xi_t(&p, t)?;
                let b = fl.birkhoff_integral(&p, GeometricWindow::bump, t, dt)?;
                Ok((xi.to_vec(), b))
            })
            .collect::<horolab_core::error::Result<_>>()?;
        for (k, (xi, b)) in rows.into_iter().enumerate() {
            let mut row = vec![(lo + k as u64).to_string(), t.to_string()];
            row.extend(to_strings(&xi));
            row.push(b.to_string());
            sink.row(&row)?;
            for (acc, x) in xi_all.iter_mut().zip(&xi) {
                acc.push(*x as f64);
            }
            birkhoff.push(b);
        }
    }
    sink.finish()?;
    let means: Vec<f64> = xi_all.iter().map(|x| mean(x)).collect();
    let vars: Vec<f64> = xi_all.iter().map(|x| variance(x)).collect();
    let report = json!({
        "command": "flow",
        "cover": format!("{cover:?}"),
        "T": t,
        "dt": dt,
        "samples": samples,
        "seed": common.seed,
        "xi_mean": means,
        "xi_variance": vars,
        "birkhoff_mean": mean(&birkhoff),
    });
    write_report(common, &report)?;
    eprintln!(
        "flow: T = {t}, {samples} samples, Var(xi_T) = {vars:?}, mean Birkhoff integral {:.4}",
        mean(&birkhoff)
    );
    Ok(true)
}

fn clt(
    cover: Cover,
    t: f64,
    points: usize,
    samples: usize,
    common: &Common,
) -> Result<bool, Failure> {
    if points < 2 || samples < 2 || !(t > 0.0) {
        return Err(Failure::from(horolab_core::error::HoroError::InvalidInput(
            "need T > 0, at least 2 points and 2 samples".into(),
        )));
    }
    let spec = FuchsianSpec::octagon();
    let phi = character(&spec, cover);
    let d = phi.d();
    let fl = Flow::new(&spec, &phi);
    let times: Vec<f64> = (1..=points).map(|k| t * k as f64 / points as f64).collect();
    let index = |s: f64| (s / GEODESIC_STEP).round() as usize;
    let mut header = vec!["sample_id".to_string(), "T".to_string()];
    header.extend(indexed("xi", d));
    let mut sink = CsvSink::open(common, &header)?;
    // values[j][c][i]: time j, component c, sample i
    let mut values = vec![vec![Vec::with_capacity(samples); d]; points];
    let mut lil = Vec::with_capacity(samples);
    let total = samples as u64;
    for lo in (0..total).step_by(BATCH as usize) {
        let rows: Vec<(Vec<Vec<i64>>, f64)> = (lo..(lo + BATCH).min(total))
            .into_par_iter()
            .map(|i| {
                let p = haar_cover_point(&spec, &phi, &mut rng_for(common.seed, i));
                let path = fl.xi_path(&p, t, GEODESIC_STEP)?;
                let at: Vec<Vec<i64>> = times
                    .iter()
                    .map(|&s| path[index(s).min(path.len() - 1)].to_vec())
                    .collect();
                Ok((at, lil_statistic(&path, GEODESIC_STEP, t / 10.0)))
            })
            .collect::<horolab_core::error::Result<_>>()?;
        for (k, (at, l)) in rows.into_iter().enumerate() {
            for (j, xi) in at.iter().enumerate() {
                let mut row = vec![(lo + k as u64).to_string(), times[j].to_string()];
                row.extend(to_strings(xi));
                sink.row(&row)?;
                for (c, x) in xi.iter().enumerate() {
                    values[j][c].push(*x as f64);
                }
            }
            lil.push(l);
        }
    }
    sink.finish()?;
    let mut fits = Vec::new();
    for c in 0..d {
        let vars: Vec<f64> = values.iter().map(|v| variance(&v[c])).collect();
        let fit = linear_fit(&times, &vars);
        fits.push(json!({
            "component": c,
            "variance": vars,
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r2": fit.r2,
        }));
    }
    let drift: Vec<f64> = values[points - 1]
        .iter()
        .map(|v| mean(v).abs() / t)
        .collect();
    let r2: Vec<f64> = fits
        .iter()
        .map(|f| f["r2"].as_f64().unwrap_or(0.0))
        .collect();
    let report = json!({
        "command": "clt",
        "cover": format!("{cover:?}"),
        "T_grid": times,
        "samples": samples,
        "seed": common.seed,
        "fits": fits,
        "drift": drift,
        "lil_statistic": Quantiles::of(&lil),
    });
    write_report(common, &report)?;
    eprintln!("clt: R^2 = {r2:?}, |mean xi_T| / T = {drift:?}");
    Ok(true)
}

#[derive(Clone, Copy)]
enum Window {
    One(f64),
    Two(f64),
}

fn log_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if !(step > 0.0) || !(hi >= lo) {
        return Err(Failure::from(horolab_core::error::HoroError::InvalidInput(
            format!("log grid {lo}..{hi} by {step} is empty"),
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| (lo + k as f64 * step).exp()).collect())
}

fn run_window<S: ProfileSource>(
    source: &S,
    which: Window,
    samples: usize,
    grid: &[f64],
    seed: u64,
) -> horolab_core::error::Result<WindowReport> {
    match which {
        Window::One(eta) => verify_window_I(source, eta, samples, grid, seed),
        Window::Two(delta) => verify_window_II(source, delta, samples, grid, seed),
    }
}

fn window_cmd(model: &str, which: Window, args: &WindowArgs) -> Result<bool, Failure> {
    let common = &args.common;
    let geometric = model == "geometric";
    let (lo, hi) = if geometric {
        (100f64.ln(), 1e4f64.ln())
    } else {
        (4.0, 8.0)
    };
    let grid = log_grid(
        args.log_t_min.unwrap_or(lo),
        args.log_t_max.unwrap_or(hi),
        args.log_t_step,
    )?;
    let report = if geometric {
        let spec = FuchsianSpec::octagon();
        let phi = Character::default_z(&spec);
        let src = GeometricWindow {
            spec: &spec,
            phi: &phi,
            dt: HOROCYCLE_STEP,
        };
        run_window(&src, which, args.samples, &grid, common.seed)?
    } else {
        let m = load_model(model)?;
        let event = EventSpec::unit_box(m.d);
        let leaf = SymbolicLeaf::new(Suspension::new(m)?, DEFAULT_NODES)?;
        let src = SymbolicWindow {
            leaf: &leaf,
            event: &event,
        };
        run_window(&src, which, args.samples, &grid, common.seed)?
    };
    let mut sink = CsvSink::open(common, &["sample".to_string(), "ratio".to_string()])?;
    for (i, r) in report.ratios.iter().enumerate() {
        sink.row(&[i.to_string(), r.to_string()])?;
    }
    sink.finish()?;
    let mut value = serde_json::to_value(&report).map_err(|e| Failure::config(e.to_string()))?;
    if let Value::Object(map) = &mut value {
        map.insert("model".into(), json!(model));
        map.insert("seed".into(), json!(common.seed));
        map.remove("ratios");
    }
    write_report(common, &value)?;
    match which {
        Window::One(eta) => eprintln!(
            "window1: eta = {eta}, r = {:?}, pass rate {:.3}, {}",
            report.r,
            report.pass_rate,
            if report.pass { "pass" } else { "FAIL" }
        ),
        Window::Two(delta) => eprintln!(
            "window2: delta = {delta}, c = {:?}, pass rate {:.3}, {}",
            report.c,
            report.pass_rate,
            if report.pass { "pass" } else { "FAIL" }
        ),
    }
    Ok(report.pass)
}

fn keylemma(
    model: &str,
    log_t: &[f64],
    samples: usize,
    box_radius: f64,
    common: &Common,
) -> Result<bool, Failure> {
    let m = load_model(model)?;
    let d = m.d;
    let step = if d == 1 { 0.02 } else { 0.05 };
    let pc = PressureCurve::compute(&m, &UGrid::new(-1.0, 1.0, step)?)?;
    let event = EventSpec::unit_box(d);
    let leaf = SymbolicLeaf::new(Suspension::new(m)?, DEFAULT_NODES)?;
    let mut grid: Vec<f64> = log_t.iter().map(|x| x.exp()).collect();
    grid.sort_by(f64::total_cmp);
    let mut report = verify_key_lemma(&leaf, &pc, &event, &grid, samples, box_radius, common.seed)?;
    let mut header = vec!["T".to_string()];
    header.extend(indexed("xi", d));
    header.extend(["empirical", "formula", "log_ratio"].map(String::from));
    let mut sink = CsvSink::open(common, &header)?;
    for e in &report.entries {
        for s in &e.in_box_samples {
            let mut row = vec![e.t.to_string()];
            row.extend(to_strings(&s.xi));
            row.extend([s.empirical, s.formula, s.log_ratio].map(|x| x.to_string()));
            sink.row(&row)?;
        }
    }
    sink.finish()?;
    for e in &mut report.entries {
        e.in_box_samples.clear();
    }
    let mut value = serde_json::to_value(&report).map_err(|e| Failure::config(e.to_string()))?;
    if let Value::Object(map) = &mut value {
        map.insert("model".into(), json!(model));
        map.insert("seed".into(), json!(common.seed));
    }
    write_report(common, &value)?;
    for e in &report.entries {
        eprintln!(
            "keylemma: T = {:.1}, {}/{} in box, median |log ratio| {}",
            e.t,
            e.in_box,
            e.samples,
            e.median_abs_log_ratio
                .map_or("n/a".to_string(), |m| format!("{m:.3}"))
        );
    }
    Ok(true)
}

fn pressure(model: &str, u_grid: &str, common: &Common) -> Result<bool, Failure> {
    let m = load_model(model)?;
    let grid = UGrid::parse(u_grid)?;
    let zero = vec![0.0; m.d];
    let p0 = pressure_root(&m, &zero)?;
    let pc = PressureCurve::compute(&m, &grid)?;
    let (cov, sigma) = covariance_sigma(&pc)?;
    let h0 = legendre_h(&pc, &zero)?;
    let mut header = indexed("u", m.d);
    header.push("P".into());
    let mut sink = CsvSink::open(common, &header)?;
    for (u, p) in pc.grid.iter().zip(&pc.values) {
        let mut row = to_strings(u);
        row.push(p.to_string());
        sink.row(&row)?;
    }
    sink.finish()?;
    let points: Vec<Value> = pc
        .grid
        .iter()
        .zip(&pc.values)
        .map(|(u, p)| json!({"u": u, "P": p}))
        .collect();
    let report = json!({
        "command": "pressure",
        "model": model,
        "u_grid": u_grid,
        "roof_scale": pc.roof_scale,
        "P0": p0,
        "covariance": cov,
        "sigma": sigma,
        "H0": h0,
        "curve": points,
    });
    write_report(common, &report)?;
    eprintln!("pressure: P(0) = {p0:.9}, sigma = {sigma:.6}, H(0) = {h0:.9}");
    Ok(true)
}

fn good(trials: usize, common: &Common) -> Result<bool, Failure> {
    let mut rng = rng_for(common.seed, 0);
    let header = ["trial", "degree", "a", "b", "eps", "lhs", "rhs", "pass"].map(String::from);
    let mut sink = CsvSink::open(common, &header)?;
    let mut passed = 0;
    let mut worst: f64 = 0.0;
    for i in 0..trials {
        let (p, (a, b), eps) = random_good_instance(&mut rng);
        let check = c_alpha_good_check(&p, (a, b), eps)?;
        passed += usize::from(check.pass);
        worst = worst.max(check.lhs / check.rhs);
        sink.row(&[
            i.to_string(),
            p.degree().to_string(),
            a.to_string(),
            b.to_string(),
            eps.to_string(),
            check.lhs.to_string(),
            check.rhs.to_string(),
            check.pass.to_string(),
        ])?;
    }
    sink.finish()?;
    let report = json!({
        "command": "good",
        "trials": trials,
        "seed": common.seed,
        "pass_count": passed,
        "max_lhs_over_rhs": worst,
    });
    write_report(common, &report)?;
    eprintln!("good: {passed}/{trials} within the bound, max lhs/rhs {worst:.4}");
    Ok(passed == trials)
}

#[allow(clippy::too_many_arguments)]
fn joining(
    spec1: &str,
    spec2: &str,
    g0: &str,
    t0: f64,
    t: f64,
    starts: usize,
    cells: usize,
    volume_samples: usize,
    common: &Common,
) -> Result<bool, Failure> {
    let s1 = SubgroupSpec::load(spec1)?;
    let s2 = SubgroupSpec::load(spec2)?;
    let word = s1.base.parse_word(g0)?;
    let (i1, i2) = intersection_index(&s1, &s2, &word)?;
    let mut report = json!({
        "command": "joining",
        "spec1": spec1,
        "spec2": spec2,
        "g0": g0,
        "t0": t0,
        "index1": fmt_index(i1),
        "index2": fmt_index(i2),
        "commensurable": i1.is_some() && i2.is_some(),
    });
    if i1.is_none() || i2.is_none() {
        write_report(common, &report)?;
        eprintln!(
            "joining: not commensurable (indices {}, {}); no finite cover joining",
            fmt_index(i1),
            fmt_index(i2)
        );
        return Ok(true);
    }
    let base = s1.base.clone();
    let model = JoiningModel::new(s1, s2, word)?.with_translation(t0);
    let sampler = JoiningSampler::new(&model);
    let mut partition = CellPartition::with_total(&base, cells, RadialSpacing::Distance)?;
    partition.estimate_volumes(&base, volume_samples, VOLUME_SEED);
    let proj = projection_test(&sampler, &partition, t, starts, common.seed)?;
    let mut sink = CsvSink::open(common, &["start", "T", "tv1", "tv2"].map(String::from))?;
    for (i, (a, b)) in proj.tv1.iter().zip(&proj.tv2).enumerate() {
        sink.row(&[i.to_string(), t.to_string(), a.to_string(), b.to_string()])?;
    }
    sink.finish()?;
    if let Value::Object(map) = &mut report {
        map.insert("T".into(), json!(t));
        map.insert("cells".into(), json!(partition.len()));
        map.insert("starts".into(), json!(starts));
        map.insert("seed".into(), json!(common.seed));
        map.insert("tv1_median".into(), json!(proj.tv1_median));
        map.insert("tv2_median".into(), json!(proj.tv2_median));
        map.insert(
            "tv1_max".into(),
            json!(proj.tv1.iter().fold(0.0f64, |a, &b| a.max(b))),
        );
        map.insert(
            "tv2_max".into(),
            json!(proj.tv2.iter().fold(0.0f64, |a, &b| a.max(b))),
        );
    }
    write_report(common, &report)?;
    eprintln!(
        "joining: indices ({}, {}), T = {t}, median TV {:.4} / {:.4}",
        fmt_index(i1),
        fmt_index(i2),
        median(&proj.tv1),
        median(&proj.tv2)
    );
    Ok(true)
}

fn orbit(
    spec: &str,
    l: usize,
    cells: usize,
    spacing: Spacing,
    max_words: u64,
    common: &Common,
) -> Result<bool, Failure> {
    let s = SubgroupSpec::load(spec)?;
    let spacing = match spacing {
        Spacing::Distance => RadialSpacing::Distance,
        Spacing::Area => RadialSpacing::Area,
    };
    let partition = CellPartition::with_total(&s.base, cells, spacing)?;
    let x = haar_in_domain(&s.base, &mut rng_for(common.seed, 0));
    let r = orbit_density(&s, &x, l, &partition, max_words)?;
    let mut value = serde_json::to_value(&r).map_err(|e| Failure::config(e.to_string()))?;
    if let Value::Object(map) = &mut value {
        map.insert("command".into(), json!("orbit"));
        map.insert("spec".into(), json!(spec));
        map.insert("seed".into(), json!(common.seed));
    }
    write_report(common, &value)?;
    eprintln!(
        "orbit: L = {l}, {} words, {}/{} cells hit (coverage {:.4})",
        r.words, r.cells_hit, r.cells, r.coverage
    );
    Ok(true)
}
