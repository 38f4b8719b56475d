//! Geodesic and horocycle flows on the cover, with deck tracking,
//! Birkhoff integrals along horocycle orbits and return-time sets.

use serde::{Deserialize, Serialize};

use crate::error::{HoroError, Result};
use crate::psl2::{flow, FlowKind};
use crate::surface::{reduce_in_place, Character, CoverPoint, FuchsianSpec, Xi};

pub const GEODESIC_STEP: f64 = 0.1;
pub const HOROCYCLE_STEP: f64 = 0.05;

/// Default flow-time quantum for a one-parameter subgroup.
pub fn default_step(kind: FlowKind) -> f64 {
    match kind {
        FlowKind::A => GEODESIC_STEP,
        FlowKind::U | FlowKind::Uplus => HOROCYCLE_STEP,
    }
}

/// The flows act on the right and the lattice on the left, so a
/// trajectory is a state plus repeated right multiplication followed by
/// reduction.
#[derive(Clone, Copy)]
pub struct Flow<'a> {
    pub spec: &'a FuchsianSpec,
    pub phi: &'a Character,
}

impl<'a> Flow<'a> {
    pub fn new(spec: &'a FuchsianSpec, phi: &'a Character) -> Flow<'a> {
        Flow { spec, phi }
    }

    /// One right multiplication by `flow(kind, t)` followed by reduction.
    #[inline]
    pub fn step_in_place(&self, p: &mut CoverPoint, kind: FlowKind, t: f64) -> Result<()> {
        p.rep = p.rep * flow(kind, t);
        reduce_in_place(self.spec, self.phi, &mut p.rep, &mut p.xi)?;
        Ok(())
    }

    /// Flows `p` for time `t`, split into steps no longer than the default.
    pub fn evolve(&self, p: &CoverPoint, kind: FlowKind, t: f64) -> Result<CoverPoint> {
        if !t.is_finite() {
            return Err(HoroError::InvalidInput(format!(
                "flow time {t} is not finite"
            )));
        }
        let mut q = p.clone();
        if t == 0.0 {
            return Ok(q);
        }
        let n = step_count(t.abs(), default_step(kind)).max(1);
        let h = t / n as f64;
        for _ in 0..n {
            self.step_in_place(&mut q, kind, h)?;
        }
        Ok(q)
    }

    /// Deck coordinate after geodesic time `t`.
    pub fn xi_t(&self, p: &CoverPoint, t: f64) -> Result<Xi> {
        Ok(self.evolve(p, FlowKind::A, t)?.xi)
    }

    /// Deck coordinates at geodesic times `0, dt, 2 dt, ...` up to `t`.
    pub fn xi_path(&self, p: &CoverPoint, t: f64, dt: f64) -> Result<Vec<Xi>> {
        check_step(dt)?;
        let n = (t / dt).round() as usize;
        let mut q = p.clone();
        let mut out = Vec::with_capacity(n + 1);
        out.push(q.xi.clone());
        for _ in 0..n {
            self.step_in_place(&mut q, FlowKind::A, dt)?;
            out.push(q.xi.clone());
        }
        Ok(out)
    }

    /// Samples at times `0, step, ..., n step` with `n = round(t / step)`.
    pub fn trajectory(
        &self,
        start: &CoverPoint,
        kind: FlowKind,
        t: f64,
        step: f64,
    ) -> Result<Trajectory> {
        check_step(step)?;
        let n = (t.abs() / step).round() as usize;
        let h = step.copysign(t);
        let mut q = start.clone();
        let mut samples = Vec::with_capacity(n + 1);
        samples.push((0.0, q.clone()));
        for k in 1..=n {
            self.step_in_place(&mut q, kind, h)?;
            samples.push((k as f64 * h, q.clone()));
        }
        Ok(Trajectory {
            start: start.clone(),
            kind,
            step,
            samples,
        })
    }

    /// Composite-midpoint integral of `psi` over the horocycle orbit on `[0, t]`.
    pub fn birkhoff_integral<F>(&self, p: &CoverPoint, psi: F, t: f64, dt: f64) -> Result<f64>
    where
        F: Fn(&CoverPoint) -> f64,
    {
        Ok(self
            .cumulative_birkhoff(p, psi, t, dt)?
            .last()
            .copied()
            .unwrap_or(0.0))
    }

    /// Running midpoint integrals `I(k h)`, `k = 0..=n`, with `h = t / n`
    /// the largest step not exceeding `dt`.
    pub fn cumulative_birkhoff<F>(
        &self,
        p: &CoverPoint,
        psi: F,
        t: f64,
        dt: f64,
    ) -> Result<Vec<f64>>
    where
        F: Fn(&CoverPoint) -> f64,
    {
        check_step(dt)?;
        if !(t >= 0.0) {
            return Err(HoroError::InvalidInput(format!(
                "integration time {t} is negative"
            )));
        }
        let n = step_count(t, dt);
        let mut out = Vec::with_capacity(n + 1);
        out.push(0.0);
        if n == 0 {
            return Ok(out);
        }
        let h = t / n as f64;
        let mut q = p.clone();
        self.step_in_place(&mut q, FlowKind::U, 0.5 * h)?;
        let mut acc = 0.0;
        for k in 0..n {
            acc += h * psi(&q);
            out.push(acc);
            if k + 1 < n {
                self.step_in_place(&mut q, FlowKind::U, h)?;
            }
        }
        Ok(out)
    }

    /// Horocycle times in `[-tmax, tmax]` at which `target` holds, sampled
    /// every `dt` and merged into intervals.
    pub fn return_set<F>(&self, p: &CoverPoint, target: F, tmax: f64, dt: f64) -> Result<ReturnSet>
    where
        F: Fn(&CoverPoint) -> bool,
    {
        check_step(dt)?;
        let n = (tmax / dt).round() as i64;
        let mut hits = vec![false; (2 * n + 1) as usize];
        hits[n as usize] = target(p);
        for dir in [1.0, -1.0] {
            let mut q = p.clone();
            for k in 1..=n {
                self.step_in_place(&mut q, FlowKind::U, dir * dt)?;
                let idx = if dir > 0.0 { n + k } else { n - k };
                hits[idx as usize] = target(&q);
            }
        }
        let mut intervals = Vec::new();
        let mut run: Option<i64> = None;
        for (i, &h) in hits.iter().enumerate() {
            let k = i as i64 - n;
            match (h, run) {
                (true, None) => run = Some(k),
                (false, Some(s)) => {
                    intervals.push(grid_interval(s, k - 1, dt, tmax));
                    run = None;
                }
                _ => {}
            }
        }
        if let Some(s) = run {
            intervals.push(grid_interval(s, n, dt, tmax));
        }
        Ok(ReturnSet {
            tmax,
            dt,
            intervals,
        })
    }
}

fn grid_interval(first: i64, last: i64, dt: f64, tmax: f64) -> (f64, f64) {
    let a = (first as f64 - 0.5) * dt;
    let b = (last as f64 + 0.5) * dt;
    (a.max(-tmax), b.min(tmax))
}

/// Fewest steps of length at most `dt` covering `t`, ignoring rounding
/// noise so that `k * dt` takes exactly `k` steps.
fn step_count(t: f64, dt: f64) -> usize {
    (t / dt * (1.0 - 1e-12)).ceil() as usize
}

fn check_step(dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(HoroError::InvalidInput(format!(
            "step {dt} must be positive"
        )));
    }
    Ok(())
}

/// Samples of an orbit at equally spaced times.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: CoverPoint,
    pub kind: FlowKind,
    pub step: f64,
    pub samples: Vec<(f64, CoverPoint)>,
}

/// `sup |xi_t| / sqrt(t ln ln t)` over sampled `t >= t0` (component-wise max).
///
/// Reported as a diagnostic only.
pub fn lil_statistic(path: &[Xi], dt: f64, t0: f64) -> f64 {
    path.iter()
        .enumerate()
        .filter_map(|(k, xi)| {
            let t = k as f64 * dt;
            if t < t0.max(3.0) {
                return None;
            }
            let m = xi.iter().map(|x| x.abs()).max().unwrap_or(0) as f64;
            Some(m / (t * t.ln().ln()).sqrt())
        })
        .fold(0.0, f64::max)
}

/// Times in `[-tmax, tmax]` at which an orbit is in a target set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnSet {
    pub tmax: f64,
    pub dt: f64,
    /// Disjoint, sorted closed intervals.
    pub intervals: Vec<(f64, f64)>,
}

impl ReturnSet {
    pub fn from_intervals(tmax: f64, dt: f64, mut intervals: Vec<(f64, f64)>) -> ReturnSet {
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        ReturnSet {
            tmax,
            dt,
            intervals,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }
}

/// Outcome of a thickness scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thickness {
    pub k: f64,
    pub pass: bool,
    pub first_failure: Option<f64>,
}

/// Checks that `[-Kt, -t] u [t, Kt]` meets the set for `t = dt, 2 dt, ...`
/// up to `tmax / K`.
///
/// The window `[t, Kt]` meets `[a, b]` (with `0 < a`) exactly when
/// `a / K <= t <= b`, so each grid point is tested exactly.
pub fn k_thick_check(rs: &ReturnSet, k: f64) -> Result<Thickness> {
    if !(k > 1.0) {
        return Err(HoroError::InvalidInput(format!("K = {k} must exceed 1")));
    }
    let mut good: Vec<(f64, f64)> = Vec::new();
    for &(a, b) in &rs.intervals {
        for (lo, hi) in [(a, b), (-b, -a)] {
            if hi <= 0.0 {
                continue;
            }
            let lo = lo.max(0.0);
            good.push((lo / k, hi));
        }
    }
    good.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in good {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    let n = (rs.tmax / k / rs.dt + 1e-9).floor() as usize;
    let tol = 1e-12 * rs.tmax.max(1.0);
    let mut j = 0;
    for i in 1..=n {
        let t = i as f64 * rs.dt;
        while j < merged.len() && merged[j].1 < t - tol {
            j += 1;
        }
        let covered = j < merged.len() && merged[j].0 <= t + tol;
        if !covered {
            return Ok(Thickness {
                k,
                pass: false,
                first_failure: Some(t),
            });
        }
    }
    Ok(Thickness {
        k,
        pass: true,
        first_failure: None,
    })
}

/// Candidate thickness constants, smallest first.
pub const K_GRID: [f64; 7] = [2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 100.0];

/// Smallest `K` in `grid` for which the set is `K`-thick on the window.
pub fn smallest_thick_k(rs: &ReturnSet, grid: &[f64]) -> Result<Option<f64>> {
    for &k in grid {
        if k_thick_check(rs, k)?.pass {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// Default compact target: deck coordinates with sup norm at most 1.
pub fn default_target(p: &CoverPoint) -> bool {
    p.xi.iter().all(|x| x.abs() <= 1)
}
