//! Occupation-time asymptotics along horocycle arcs and the two window
//! inequalities, checked on the geometric cover and on symbolic
//! suspensions.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HoroError, Result};
use crate::flows::Flow;
use crate::sampling::{haar_cover_point, rng_for};
use crate::stats::{median, Quantiles};
use crate::surface::{Character, CoverPoint, FuchsianSpec};
use crate::thermo::{legendre_h, PressureCurve, Suspension};

/// Samples must pass at this rate for a fitted parameter to count.
pub const PASS_FRACTION: f64 = 0.9;
/// Burn-in: a sample is tested from the first grid time whose integral
/// exceeds this multiple of `sup ψ`.
pub const BURN_IN_FACTOR: f64 = 10.0;
/// Default number of quadrature nodes on a symbolic arc.
pub const DEFAULT_NODES: usize = 20_000;
/// Fewer in-box samples than this marks a key-lemma run as under-powered.
pub const MIN_IN_BOX: usize = 20;

const GRID_TOL: f64 = 1e-9;

/// `r` values tried by Window I: `0.05, 0.10, .., 0.95`.
pub fn r_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 / 20.0).collect()
}

/// `c` values tried by Window II: `0.01, 0.02, .., 1.00`.
pub fn c_grid() -> Vec<f64> {
    (1..=100).map(|k| k as f64 / 100.0).collect()
}

/// Central value of the occupation asymptotic
/// `m(E) T / (2π σ T*)^{d/2} · exp(T* (H(ξ/T*) - 1))` with `T* = ln T`.
pub fn key_lemma_rhs<H>(m_e: f64, sigma: f64, d: usize, t: f64, xi: &[f64], h: H) -> Result<f64>
where
    H: Fn(&[f64]) -> Result<f64>,
{
    if !(t > std::f64::consts::E) {
        return Err(HoroError::InvalidInput(format!(
            "time {t} must exceed e so that ln T > 1"
        )));
    }
    if xi.len() != d {
        return Err(HoroError::InvalidInput(format!(
            "xi has dimension {}, expected {d}",
            xi.len()
        )));
    }
    if !(sigma > 0.0) {
        return Err(HoroError::InvalidInput(format!(
            "sigma {sigma} must be positive"
        )));
    }
    let ts = t.ln();
    let scaled: Vec<f64> = xi.iter().map(|x| x / ts).collect();
    let hv = h(&scaled)?;
    Ok(m_e * t / (2.0 * PI * sigma * ts).powf(d as f64 / 2.0) * (ts * (hv - 1.0)).exp())
}

/// Running integral `I(k h)` of an observable along one arc.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cumulative {
    pub step: f64,
    pub values: Vec<f64>,
}

impl Cumulative {
    /// Exact running integral of a function sampled at cell midpoints.
    pub fn from_midpoints(step: f64, samples: &[f64]) -> Cumulative {
        let mut acc = 0.0;
        let mut values = Vec::with_capacity(samples.len() + 1);
        values.push(0.0);
        for s in samples {
            acc += step * s;
            values.push(acc);
        }
        Cumulative { step, values }
    }

    pub fn horizon(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    /// `I(t)` by linear interpolation, clamped to `[0, horizon]`.
    pub fn at(&self, t: f64) -> f64 {
        let n = self.values.len() - 1;
        if n == 0 || t <= 0.0 {
            return 0.0;
        }
        let x = t / self.step;
        if x >= n as f64 {
            return self.values[n];
        }
        let k = x.floor() as usize;
        let frac = x - k as f64;
        self.values[k] + frac * (self.values[k + 1] - self.values[k])
    }

    /// Index of the first grid time past the burn-in, if any.
    fn burn_in(&self, t_grid: &[f64], threshold: f64) -> Option<usize> {
        t_grid.iter().position(|&t| self.at(t) > threshold)
    }
}

/// Source of per-sample running integrals.
pub trait ProfileSource: Sync {
    /// Running integral over `[0, t_max]` for sample `index`.
    fn profile(&self, seed: u64, index: u64, t_max: f64) -> Result<Cumulative>;
    /// Supremum of the observable, used for the burn-in rule.
    fn sup_psi(&self) -> f64;
}

/// Draws `samples` profiles in parallel with per-index seeding.
pub fn collect_profiles<S: ProfileSource + ?Sized>(
    source: &S,
    samples: usize,
    t_max: f64,
    seed: u64,
) -> Result<Vec<Cumulative>> {
    (0..samples as u64)
        .into_par_iter()
        .map(|i| source.profile(seed, i, t_max))
        .collect()
}

/// Result of a window harness run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WindowReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Fitted `r` (Window I); 0 when no grid value passes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Fitted `c` (Window II); absent when no grid value passes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub pass_rate: f64,
    pub pass: bool,
    #[serde(rename = "T_grid")]
    pub t_grid: Vec<f64>,
    /// Worst ratio over the tested times, per burned-in sample.
    pub ratios: Vec<f64>,
    pub quantiles: Option<Quantiles>,
    pub samples: usize,
    pub burned_in: usize,
    /// No sample ever exceeded the burn-in threshold.
    pub degenerate: bool,
    /// Fitted parameter under burn-in factors 5, 10 and 20.
    pub burn_in_sensitivity: Vec<(f64, Option<f64>)>,
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(HoroError::InvalidInput(
            "time grid must be non-empty and positive".into(),
        ));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HoroError::InvalidInput(
            "time grid must be increasing".into(),
        ));
    }
    Ok(())
}

fn window_one_ratio(p: &Cumulative, r: f64, eta: f64, t_grid: &[f64], from: usize) -> (bool, f64) {
    let mut ok = true;
    let mut worst = 0.0f64;
    for &t in &t_grid[from..] {
        let full = p.at(t);
        let head = p.at(r * t);
        ok &= head <= eta * full;
        worst = worst.max(head / full);
    }
    (ok, worst)
}

fn fit_r(
    profiles: &[Cumulative],
    eta: f64,
    t_grid: &[f64],
    threshold: f64,
) -> (Option<f64>, f64, Vec<f64>, usize) {
    let active: Vec<(&Cumulative, usize)> = profiles
        .iter()
        .filter_map(|p| p.burn_in(t_grid, threshold).map(|k| (p, k)))
        .collect();
    if active.is_empty() {
        return (None, 1.0, Vec::new(), 0);
    }
    let mut first = None;
    let mut best = None;
    for r in r_grid() {
        let results: Vec<(bool, f64)> = active
            .iter()
            .map(|(p, k)| window_one_ratio(p, r, eta, t_grid, *k))
            .collect();
        let rate = results.iter().filter(|x| x.0).count() as f64 / active.len() as f64;
        let ratios: Vec<f64> = results.into_iter().map(|x| x.1).collect();
        if first.is_none() {
            first = Some((rate, ratios.clone()));
        }
        // I(rT) is nondecreasing in r, so passing sets shrink as r grows.
        if rate < PASS_FRACTION {
            break;
        }
        best = Some((r, rate, ratios));
    }
    match best {
        Some((r, rate, ratios)) => (Some(r), rate, ratios, active.len()),
        None => {
            let (rate, ratios) = first.expect("r grid is non-empty");
            (Some(0.0), rate, ratios, active.len())
        }
    }
}

/// Window I on precomputed profiles: the largest `r` on [`r_grid`] with
/// `I(rT) ≤ η I(T)` at every grid `T` past burn-in for at least
/// [`PASS_FRACTION`] of the samples.
pub fn window_one_report(
    profiles: &[Cumulative],
    eta: f64,
    t_grid: &[f64],
    sup_psi: f64,
) -> Result<WindowReport> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(HoroError::InvalidInput(format!(
            "eta {eta} must lie in (0, 1]"
        )));
    }
    check_grid(t_grid)?;
    let (fit, rate, ratios, burned) = fit_r(profiles, eta, t_grid, BURN_IN_FACTOR * sup_psi);
    let degenerate = burned == 0;
    let r = if degenerate { Some(0.95) } else { fit };
    let sensitivity = [5.0, 10.0, 20.0]
        .iter()
        .map(|&f| (f, fit_r(profiles, eta, t_grid, f * sup_psi).0))
        .collect();
    let r = r.unwrap_or(0.0);
    Ok(WindowReport {
        eta: Some(eta),
        delta: None,
        r: Some(r),
        c: None,
        pass_rate: rate,
        pass: r > 0.0 && r < 1.0,
        t_grid: t_grid.to_vec(),
        quantiles: (!ratios.is_empty()).then(|| Quantiles::of(&ratios)),
        ratios,
        samples: profiles.len(),
        burned_in: burned,
        degenerate,
        burn_in_sensitivity: sensitivity,
    })
}

fn window_two_ratios(
    profiles: &[Cumulative],
    delta: f64,
    t_grid: &[f64],
    threshold: f64,
) -> Vec<f64> {
    profiles
        .iter()
        .filter_map(|p| {
            let k = p.burn_in(t_grid, threshold)?;
            Some(t_grid[k..].iter().fold(0.0f64, |w, &t| {
                let base = p.at(t);
                w.max((p.at((1.0 + delta) * t) - base) / base)
            }))
        })
        .collect()
}

fn fit_c(ratios: &[f64]) -> (Option<f64>, f64) {
    if ratios.is_empty() {
        return (None, 1.0);
    }
    let n = ratios.len() as f64;
    let mut last = 0.0;
    for c in c_grid() {
        let rate = ratios.iter().filter(|&&x| x <= c + GRID_TOL).count() as f64 / n;
        last = rate;
        if rate >= PASS_FRACTION {
            return (Some(c), rate);
        }
    }
    (None, last)
}

/// Window II on precomputed profiles: the smallest `c` on [`c_grid`] with
/// `I((1+δ)T) - I(T) ≤ c I(T)` at every grid `T` past burn-in for at least
/// [`PASS_FRACTION`] of the samples.
///
/// Profiles must reach `(1 + δ) max T`.
pub fn window_two_report(
    profiles: &[Cumulative],
    delta: f64,
    t_grid: &[f64],
    sup_psi: f64,
) -> Result<WindowReport> {
    if !(0.0..=0.5).contains(&delta) {
        return Err(HoroError::InvalidInput(format!(
            "delta {delta} must lie in [0, 0.5]"
        )));
    }
    check_grid(t_grid)?;
    let needed = (1.0 + delta) * t_grid[t_grid.len() - 1];
    if let Some(p) = profiles
        .iter()
        .find(|p| p.horizon() < needed * (1.0 - 1e-12))
    {
        return Err(HoroError::InvalidInput(format!(
            "profile horizon {} is shorter than (1 + delta) T = {needed}",
            p.horizon()
        )));
    }
    let ratios = window_two_ratios(profiles, delta, t_grid, BURN_IN_FACTOR * sup_psi);
    let degenerate = ratios.is_empty();
    let (c, rate) = if degenerate {
        (Some(c_grid()[0]), 1.0)
    } else {
        fit_c(&ratios)
    };
    let sensitivity = [5.0, 10.0, 20.0]
        .iter()
        .map(|&f| {
            (
                f,
                fit_c(&window_two_ratios(profiles, delta, t_grid, f * sup_psi)).0,
            )
        })
        .collect();
    Ok(WindowReport {
        eta: None,
        delta: Some(delta),
        r: None,
        c,
        pass_rate: rate,
        pass: c.is_some_and(|c| c > 0.0 && c < 0.25),
        t_grid: t_grid.to_vec(),
        quantiles: (!ratios.is_empty()).then(|| Quantiles::of(&ratios)),
        samples: profiles.len(),
        burned_in: ratios.len(),
        ratios,
        degenerate,
        burn_in_sensitivity: sensitivity,
    })
}

/// Samples profiles up to `max T` and runs [`window_one_report`].
#[allow(non_snake_case)]
pub fn verify_window_I<S: ProfileSource + ?Sized>(
    source: &S,
    eta: f64,
    samples: usize,
    t_grid: &[f64],
    seed: u64,
) -> Result<WindowReport> {
    check_grid(t_grid)?;
    let profiles = collect_profiles(source, samples, t_grid[t_grid.len() - 1], seed)?;
    window_one_report(&profiles, eta, t_grid, source.sup_psi())
}

/// Samples profiles up to `(1 + δ) max T` and runs [`window_two_report`].
#[allow(non_snake_case)]
pub fn verify_window_II<S: ProfileSource + ?Sized>(
    source: &S,
    delta: f64,
    samples: usize,
    t_grid: &[f64],
    seed: u64,
) -> Result<WindowReport> {
    check_grid(t_grid)?;
    let t_max = (1.0 + delta) * t_grid[t_grid.len() - 1];
    let profiles = collect_profiles(source, samples, t_max, seed)?;
    window_two_report(&profiles, delta, t_grid, source.sup_psi())
}

/// Bump `max(0, 1 - d(o, i))` on the sheet `ξ = 0` of a geometric cover,
/// integrated along horocycles from Haar points of that sheet.
pub struct GeometricWindow<'a> {
    pub spec: &'a FuchsianSpec,
    pub phi: &'a Character,
    pub dt: f64,
}

impl GeometricWindow<'_> {
    pub fn bump(p: &CoverPoint) -> f64 {
        if p.xi.iter().any(|&x| x != 0) {
            return 0.0;
        }
        (1.0 - p.rep.dist_to_i()).max(0.0)
    }
}

impl ProfileSource for GeometricWindow<'_> {
    fn profile(&self, seed: u64, index: u64, t_max: f64) -> Result<Cumulative> {
        let mut rng = rng_for(seed, index);
        let start = haar_cover_point(self.spec, self.phi, &mut rng);
        let flow = Flow::new(self.spec, self.phi);
        let values = flow.cumulative_birkhoff(&start, Self::bump, t_max, self.dt)?;
        let n = values.len() - 1;
        Ok(Cumulative {
            step: if n == 0 { 0.0 } else { t_max / n as f64 },
            values,
        })
    }

    fn sup_psi(&self) -> f64 {
        1.0
    }
}

/// Target set of the symbolic harness: a cylinder with full roof fibres,
/// optionally restricted to a box of sheets.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EventSpec {
    /// Leading symbols of the future; empty means every cylinder.
    pub cylinder: Vec<usize>,
    /// Inclusive sheet box `lo ≤ ξ ≤ hi`; `None` means every sheet.
    pub xi_box: Option<(Vec<i64>, Vec<i64>)>,
}

impl EventSpec {
    /// The sheets `{0, 1}^d` with every cylinder.
    ///
    /// Two sheets per axis absorb the parity of lattice-valued jumps.
    pub fn unit_box(d: usize) -> EventSpec {
        EventSpec {
            cylinder: Vec::new(),
            xi_box: Some((vec![0; d], vec![1; d])),
        }
    }

    pub fn whole_space() -> EventSpec {
        EventSpec {
            cylinder: Vec::new(),
            xi_box: None,
        }
    }

    fn validate(&self, s: &Suspension) -> Result<()> {
        let m = &s.model;
        if self.cylinder.len() > m.depth || self.cylinder.iter().any(|&a| a >= m.n) {
            return Err(HoroError::InvalidInput(format!(
                "cylinder {:?} is not a word of length ≤ {} over {} symbols",
                self.cylinder, m.depth, m.n
            )));
        }
        if let Some((lo, hi)) = &self.xi_box {
            if lo.len() != m.d || hi.len() != m.d || lo.iter().zip(hi).any(|(a, b)| a > b) {
                return Err(HoroError::InvalidInput(format!(
                    "sheet box {lo:?}..{hi:?} does not fit dimension {}",
                    m.d
                )));
            }
        }
        Ok(())
    }

    fn in_cylinder(&self, s: &Suspension, code: usize) -> bool {
        let m = &s.model;
        let scale = m.n.pow((m.depth - self.cylinder.len()) as u32);
        let prefix = code / scale;
        let want = self.cylinder.iter().fold(0, |acc, &a| acc * m.n + a);
        prefix == want
    }

    pub fn contains(&self, s: &Suspension, point: &LeafPoint) -> bool {
        if !self.in_cylinder(s, point.cylinder) {
            return false;
        }
        match &self.xi_box {
            None => true,
            Some((lo, hi)) => point
                .xi
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(x, (a, b))| a <= x && x <= b),
        }
    }

    /// Number of sheets in the box.
    pub fn tiles(&self) -> f64 {
        match &self.xi_box {
            None => 1.0,
            Some((lo, hi)) => lo.iter().zip(hi).map(|(a, b)| (b - a + 1) as f64).product(),
        }
    }

    /// Centre of the box (the origin without a box).
    pub fn centre(&self, d: usize) -> Vec<f64> {
        match &self.xi_box {
            None => vec![0.0; d],
            Some((lo, hi)) => lo
                .iter()
                .zip(hi)
                .map(|(a, b)| 0.5 * (a + b) as f64)
                .collect(),
        }
    }

    /// Flow-invariant mass with each sheet normalized to 1.
    pub fn measure(&self, s: &Suspension) -> f64 {
        let m = &s.model;
        let inside: f64 = (0..m.size())
            .filter(|&c| m.admissible[c] && self.in_cylinder(s, c))
            .map(|c| m.tau[c] * s.mu[c])
            .sum();
        self.tiles() * inside / s.mean_roof
    }
}

/// A point of the suspension lifted to the cover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafPoint {
    pub cylinder: usize,
    pub height: f64,
    pub xi: Vec<i64>,
}

/// One horocycle arc of the symbolic model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LeafArc {
    pub t_max: f64,
    /// Start of the arc, at sheet 0.
    pub start: LeafPoint,
    /// Roof crossing times of the forward geodesic run from the start and
    /// the sheet reached at each.
    pub crossings: Vec<(f64, Vec<i64>)>,
    /// Arc points at the midpoints of `nodes` equal cells.
    pub points: Vec<LeafPoint>,
}

impl LeafArc {
    /// `ξ(g a_s) - ξ(g)`.
    pub fn xi_at(&self, s: f64) -> Vec<i64> {
        let k = self.crossings.partition_point(|c| c.0 <= s);
        if k == 0 {
            vec![0; self.start.xi.len()]
        } else {
            self.crossings[k - 1].1.clone()
        }
    }

    /// Arc length per node.
    pub fn step(&self) -> f64 {
        self.t_max / self.points.len() as f64
    }
}

/// Horocycles of a normalized suspension realized as strong stable leaves.
///
/// The local leaf over a cylinder `y` has length `ψ(y)`; it splits into
/// the images of the leaves over its predecessors `a y`, in symbol order,
/// with length fractions `e^{-τ(ay)} ψ(ay) / ψ(y)`. A horocycle arc of
/// length `T` from `g` is the unit arc from `g a_{ln T}` pushed back by
/// `a_{-ln T}`.
pub struct SymbolicLeaf {
    pub susp: Suspension,
    pub nodes: usize,
    cum_prev: Vec<Vec<f64>>,
}

impl SymbolicLeaf {
    pub fn new(susp: Suspension, nodes: usize) -> Result<SymbolicLeaf> {
        if nodes == 0 {
            return Err(HoroError::InvalidInput("need at least one node".into()));
        }
        let cum_prev = susp
            .prev_prob
            .iter()
            .map(|p| {
                let mut acc = 0.0;
                p.iter()
                    .map(|x| {
                        let before = acc;
                        acc += x;
                        before
                    })
                    .collect()
            })
            .collect();
        Ok(SymbolicLeaf {
            susp,
            nodes,
            cum_prev,
        })
    }

    fn add(xi: &mut [i64], f: &[i64], sign: i64) {
        for (a, b) in xi.iter_mut().zip(f) {
            *a += sign * b;
        }
    }

    /// Arc of length `t_max > 1` from a flow-invariant random start.
    pub fn arc<R: Rng + ?Sized>(&self, t_max: f64, rng: &mut R) -> Result<LeafArc> {
        if !(t_max > 1.0) {
            return Err(HoroError::InvalidInput(format!(
                "arc length {t_max} must exceed 1"
            )));
        }
        let m = &self.susp.model;
        let psi = &self.susp.rpf.psi;
        let ts = t_max.ln();
        let (c0, h0) = self.susp.draw_flow_point(rng);
        let start = LeafPoint {
            cylinder: c0,
            height: h0,
            xi: vec![0; m.d],
        };

        // Forward run to z = g a_{T*}, tracking g's leaf position as a
        // fraction of the current base leaf.
        let mut cur = c0;
        let mut base = -h0;
        let mut xi = vec![0i64; m.d];
        let mut q: f64 = rng.gen();
        let mut crossings = Vec::new();
        while base + m.tau[cur] <= ts {
            base += m.tau[cur];
            Self::add(&mut xi, &m.f[cur], 1);
            crossings.push((base, xi.clone()));
            let next = m.append(cur, self.susp.draw_next(cur, rng));
            let a = m.first(cur);
            q = self.cum_prev[next][a] + self.susp.prev_prob[next][a] * q;
            cur = next;
        }
        // The unit arc at z spans e^{h_z} of the intrinsic base leaf.
        let mut len = (ts - base).exp() / psi[cur];
        while q + len > 1.0 {
            base += m.tau[cur];
            Self::add(&mut xi, &m.f[cur], 1);
            let next = m.append(cur, self.susp.draw_next(cur, rng));
            let a = m.first(cur);
            let w = self.susp.prev_prob[next][a];
            q = self.cum_prev[next][a] + w * q;
            len *= w;
            cur = next;
        }

        let points = (0..self.nodes)
            .map(|j| {
                let s = (j as f64 + 0.5) / self.nodes as f64;
                self.descend(cur, base, &xi, q + s * len)
            })
            .collect();
        Ok(LeafArc {
            t_max,
            start,
            crossings,
            points,
        })
    }

    /// Follows predecessors from the base leaf of `top` down to time 0.
    fn descend(&self, top: usize, base: f64, xi: &[i64], frac: f64) -> LeafPoint {
        let m = &self.susp.model;
        let mut cur = top;
        let mut base = base;
        let mut q = frac;
        let mut xi = xi.to_vec();
        while base > 0.0 {
            let probs = &self.susp.prev_prob[cur];
            let cums = &self.cum_prev[cur];
            // Last admissible predecessor whose piece starts at or before q.
            let mut a = None;
            for b in 0..m.n {
                if probs[b] > 0.0 && cums[b] <= q {
                    a = Some(b);
                }
            }
            let a = a.unwrap_or_else(|| probs.iter().position(|&p| p > 0.0).unwrap_or(0));
            q = ((q - cums[a]) / probs[a]).clamp(0.0, 1.0);
            cur = m.prepend(a, cur);
            base -= m.tau[cur];
            Self::add(&mut xi, &m.f[cur], -1);
        }
        LeafPoint {
            cylinder: cur,
            height: -base,
            xi,
        }
    }
}

/// Window source on a symbolic model with observable `χ_E`.
pub struct SymbolicWindow<'a> {
    pub leaf: &'a SymbolicLeaf,
    pub event: &'a EventSpec,
}

impl ProfileSource for SymbolicWindow<'_> {
    fn profile(&self, seed: u64, index: u64, t_max: f64) -> Result<Cumulative> {
        self.event.validate(&self.leaf.susp)?;
        let arc = self.leaf.arc(t_max, &mut rng_for(seed, index))?;
        let hits: Vec<f64> = arc
            .points
            .iter()
            .map(|p| f64::from(u8::from(self.event.contains(&self.leaf.susp, p))))
            .collect();
        Ok(Cumulative::from_midpoints(arc.step(), &hits))
    }

    fn sup_psi(&self) -> f64 {
        1.0
    }
}

/// One in-box sample of the key-lemma comparison.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KeyLemmaSample {
    pub xi: Vec<i64>,
    pub empirical: f64,
    pub formula: f64,
    pub log_ratio: f64,
}

/// Key-lemma comparison at one time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KeyLemmaEntry {
    #[serde(rename = "T")]
    pub t: f64,
    pub box_radius: f64,
    pub samples: usize,
    pub in_box: usize,
    pub underpowered: bool,
    pub median_abs_log_ratio: Option<f64>,
    pub log_ratio_quantiles: Option<Quantiles>,
    pub in_box_samples: Vec<KeyLemmaSample>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KeyLemmaReport {
    pub m_e: f64,
    pub sigma: f64,
    pub d: usize,
    pub entries: Vec<KeyLemmaEntry>,
}

/// Compares occupation times of `E` along symbolic arcs with
/// [`key_lemma_rhs`] for samples whose `‖ξ_{T*}/T*‖∞ ≤ box_radius`.
///
/// The formula is evaluated at `ξ_{T*}` minus the centre of the sheet box.
/// Without a sheet box the expected occupation is `m(E) T`.
pub fn verify_key_lemma(
    leaf: &SymbolicLeaf,
    curve: &PressureCurve,
    event: &EventSpec,
    t_grid: &[f64],
    samples: usize,
    box_radius: f64,
    seed: u64,
) -> Result<KeyLemmaReport> {
    check_grid(t_grid)?;
    event.validate(&leaf.susp)?;
    let d = leaf.susp.model.d;
    let m_e = event.measure(&leaf.susp);
    let sigma = curve.sigma;
    let t_max = t_grid[t_grid.len() - 1];
    let arcs: Vec<LeafArc> = (0..samples as u64)
        .into_par_iter()
        .map(|i| leaf.arc(t_max, &mut rng_for(seed, i)))
        .collect::<Result<_>>()?;
    let centre = event.centre(d);
    let mut entries = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let ts = t.ln();
        let mut rows = Vec::new();
        for arc in &arcs {
            let xi = arc.xi_at(ts);
            if xi.iter().any(|&x| (x as f64 / ts).abs() > box_radius) {
                continue;
            }
            let cells = ((t / t_max) * arc.points.len() as f64).round() as usize;
            let count = arc.points[..cells]
                .iter()
                .filter(|p| event.contains(&leaf.susp, p))
                .count();
            let empirical = count as f64 * arc.step();
            let formula = if event.xi_box.is_none() {
                m_e * t
            } else {
                let shifted: Vec<f64> =
                    xi.iter().zip(&centre).map(|(&x, c)| x as f64 - c).collect();
                key_lemma_rhs(m_e, sigma, d, t, &shifted, |x| legendre_h(curve, x))?
            };
            rows.push(KeyLemmaSample {
                xi,
                empirical,
                formula,
                log_ratio: (empirical / formula).ln(),
            });
        }
        let finite: Vec<f64> = rows
            .iter()
            .map(|r| r.log_ratio)
            .filter(|x| x.is_finite())
            .collect();
        let abs: Vec<f64> = rows.iter().map(|r| r.log_ratio.abs()).collect();
        entries.push(KeyLemmaEntry {
            t,
            box_radius,
            samples,
            in_box: rows.len(),
            underpowered: rows.len() < MIN_IN_BOX,
            median_abs_log_ratio: (!abs.is_empty()).then(|| median(&abs)),
            log_ratio_quantiles: (!finite.is_empty()).then(|| Quantiles::of(&finite)),
            in_box_samples: rows,
        });
    }
    Ok(KeyLemmaReport {
        m_e,
        sigma,
        d,
        entries,
    })
}
