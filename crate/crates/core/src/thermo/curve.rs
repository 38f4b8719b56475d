//! The implicit pressure function `P(u)`, its Hessian at the origin and
//! its concave Legendre dual `H`.

use serde::{Deserialize, Serialize};

use crate::error::{HoroError, Result};
use crate::thermo::shift::ShiftModel;
use crate::thermo::transfer::pressure;

pub const ROOT_TOL: f64 = 1e-10;
pub const HESSIAN_STEP: f64 = 1e-3;

/// The `β` solving `P_top(-β τ + <u, f>) = 0`.
///
/// The left side is strictly decreasing in `β` because `τ > 0`, so the root
/// is unique. It is bracketed from `[0, 4]` by geometric expansion and
/// found by secant steps guarded with bisection.
pub fn pressure_root(m: &ShiftModel, u: &[f64]) -> Result<f64> {
    if u.len() != m.d {
        return Err(HoroError::InvalidInput(format!(
            "u has dimension {}, model has {}",
            u.len(),
            m.d
        )));
    }
    let p = |beta: f64| pressure(m, &m.weight(beta, u));
    let (mut lo, mut hi) = (0.0f64, 4.0f64);
    let (mut p_lo, mut p_hi) = (p(lo)?, p(hi)?);
    let mut expansions = 0;
    while p_lo < 0.0 || p_hi > 0.0 {
        expansions += 1;
        if expansions > 60 {
            return Err(HoroError::Bracket { lo, hi, p_lo, p_hi });
        }
        let width = hi - lo;
        if p_hi > 0.0 {
            lo = hi;
            p_lo = p_hi;
            hi += 2.0 * width;
            p_hi = p(hi)?;
        } else {
            hi = lo;
            p_hi = p_lo;
            lo -= 2.0 * width;
            p_lo = p(lo)?;
        }
    }
    for _ in 0..200 {
        if hi - lo <= ROOT_TOL * hi.abs().max(1.0) * 1e-3 {
            break;
        }
        let secant = lo + (hi - lo) * p_lo / (p_lo - p_hi);
        let mid = 0.5 * (lo + hi);
        // fall back to bisection when the secant point hugs an endpoint
        let guard = 0.05 * (hi - lo);
        let margin = if hi - lo < 1e-6 { 0.0 } else { guard };
        let x = if secant.is_finite() && secant > lo + margin && secant < hi - margin {
            secant
        } else {
            mid
        };
        let px = p(x)?;
        if px == 0.0 {
            return Ok(x);
        }
        if px > 0.0 {
            lo = x;
            p_lo = px;
        } else {
            hi = x;
            p_hi = px;
        }
        if (px.abs()) < 1e-15 {
            return Ok(x);
        }
    }
    Ok(lo + (hi - lo) * p_lo / (p_lo - p_hi))
}

/// Symmetric grid of `u` values: `-a..=a` with the given step in every
/// coordinate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl UGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<UGrid> {
        if !(step > 0.0) || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(HoroError::InvalidInput(format!(
                "bad grid {lo}:{hi}:{step}"
            )));
        }
        Ok(UGrid { lo, hi, step })
    }

    /// Parses `lo:hi:step`.
    pub fn parse(text: &str) -> Result<UGrid> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(HoroError::InvalidInput(format!(
                "grid `{text}` is not of the form lo:hi:step"
            )));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| HoroError::InvalidInput(format!("bad number `{s}` in grid")))
        };
        Self::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

/// Sampled pressure function with its second-order data at the origin.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PressureCurve {
    pub d: usize,
    /// Axis values; the grid is their `d`-fold product.
    pub axis: Vec<f64>,
    /// Points of the product grid, first coordinate slowest.
    pub grid: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub hessian0: Vec<Vec<f64>>,
    pub sigma: f64,
    pub roof_scale: f64,
}

impl PressureCurve {
    pub fn compute(m: &ShiftModel, grid: &UGrid) -> Result<PressureCurve> {
        let axis = grid.points();
        let d = m.d;
        let total = axis.len().pow(d as u32);
        let mut points = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rest = idx;
            let mut u = vec![0.0; d];
            for slot in u.iter_mut().rev() {
                *slot = axis[rest % axis.len()];
                rest /= axis.len();
            }
            points.push(u);
        }
        let values = points
            .iter()
            .map(|u| pressure_root(m, u))
            .collect::<Result<Vec<_>>>()?;
        let hessian0 = hessian_at_zero(m)?;
        let sigma = determinant(&hessian0).abs().powf(1.0 / d as f64);
        Ok(PressureCurve {
            d,
            axis,
            grid: points,
            values,
            hessian0,
            sigma,
            roof_scale: m.roof_scale,
        })
    }

    fn at(&self, idx: &[usize]) -> f64 {
        let k = idx.iter().fold(0, |acc, &i| acc * self.axis.len() + i);
        self.values[k]
    }
}

/// Central second differences of `P` at 0 with one Richardson level.
fn hessian_at_zero(m: &ShiftModel) -> Result<Vec<Vec<f64>>> {
    let d = m.d;
    let p = |u: &[f64]| pressure_root(m, u);
    let p0 = p(&vec![0.0; d])?;
    let mut hess = vec![vec![0.0; d]; d];
    let e = |i: usize, h: f64| {
        let mut v = vec![0.0; d];
        v[i] = h;
        v
    };
    for i in 0..d {
        let diff =
            |h: f64| -> Result<f64> { Ok((p(&e(i, h))? - 2.0 * p0 + p(&e(i, -h))?) / (h * h)) };
        let (a, b) = (diff(HESSIAN_STEP)?, diff(HESSIAN_STEP / 2.0)?);
        hess[i][i] = (4.0 * b - a) / 3.0;
        for j in 0..i {
            let mixed = |h: f64| -> Result<f64> {
                let at = |si: f64, sj: f64| {
                    let mut v = vec![0.0; d];
                    v[i] = si * h;
                    v[j] = sj * h;
                    p(&v)
                };
                Ok(
                    (at(1.0, 1.0)? - at(1.0, -1.0)? - at(-1.0, 1.0)? + at(-1.0, -1.0)?)
                        / (4.0 * h * h),
                )
            };
            let (a, b) = (mixed(HESSIAN_STEP)?, mixed(HESSIAN_STEP / 2.0)?);
            let v = (4.0 * b - a) / 3.0;
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    Ok(hess)
}

fn determinant(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut det = 1.0;
    for c in 0..n {
        let Some(p) = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())) else {
            return 0.0;
        };
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    det
}

/// Leading principal minors all positive.
fn is_positive_definite(a: &[Vec<f64>], tol: f64) -> bool {
    (1..=a.len()).all(|k| {
        let sub: Vec<Vec<f64>> = a[..k].iter().map(|r| r[..k].to_vec()).collect();
        determinant(&sub) > tol
    })
}

/// Hessian of `P` at 0 (the covariance) and `σ = |det|^{1/d}`.
pub fn covariance_sigma(pc: &PressureCurve) -> Result<(Vec<Vec<f64>>, f64)> {
    if !is_positive_definite(&pc.hessian0, 1e-8) {
        return Err(HoroError::NotPositiveDefinite {
            det: determinant(&pc.hessian0),
        });
    }
    Ok((pc.hessian0.clone(), pc.sigma))
}

/// `H(x) = inf_u (P(u) - <u, x>)` over the grid, refined by fitting a
/// quadratic to the grid neighbourhood of the minimizer.
pub fn legendre_h(pc: &PressureCurve, x: &[f64]) -> Result<f64> {
    if x.len() != pc.d {
        return Err(HoroError::InvalidInput(format!(
            "x has dimension {}, curve has {}",
            x.len(),
            pc.d
        )));
    }
    let n = pc.axis.len();
    if n < 3 {
        return Err(HoroError::InvalidInput(
            "grid needs at least 3 points per axis".into(),
        ));
    }
    let g = |idx: &[usize]| {
        let dot: f64 = idx.iter().zip(x).map(|(&i, xi)| pc.axis[i] * xi).sum();
        pc.at(idx) - dot
    };
    let total = n.pow(pc.d as u32);
    let mut best = f64::INFINITY;
    let mut best_idx = vec![0; pc.d];
    let mut idx = vec![0; pc.d];
    for k in 0..total {
        let mut rest = k;
        for slot in idx.iter_mut().rev() {
            *slot = rest % n;
            rest /= n;
        }
        let v = g(&idx);
        if v < best {
            best = v;
            best_idx.clone_from(&idx);
        }
    }
    if best_idx.iter().any(|&i| i == 0 || i == n - 1) {
        return Err(HoroError::OutOfDomain(format!("{x:?}")));
    }
    // Quadratic model g(c + s h) ~ g0 + b.s + s^T A s / 2 from central differences.
    let d = pc.d;
    let shifted = |moves: &[(usize, i64)]| {
        let mut j = best_idx.clone();
        for &(axis, step) in moves {
            j[axis] = (j[axis] as i64 + step) as usize;
        }
        g(&j)
    };
    let mut grad = vec![0.0; d];
    let mut a = vec![vec![0.0; d]; d];
    for i in 0..d {
        let (gp, gm) = (shifted(&[(i, 1)]), shifted(&[(i, -1)]));
        grad[i] = 0.5 * (gp - gm);
        a[i][i] = gp - 2.0 * best + gm;
        for j in 0..i {
            let v = 0.25
                * (shifted(&[(i, 1), (j, 1)])
                    - shifted(&[(i, 1), (j, -1)])
                    - shifted(&[(i, -1), (j, 1)])
                    + shifted(&[(i, -1), (j, -1)]));
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    match solve(&a, &grad) {
        Some(s) if s.iter().all(|v| v.abs() <= 1.0) => {
            let drop: f64 = 0.5 * s.iter().zip(&grad).map(|(si, gi)| si * gi).sum::<f64>();
            Ok(best - drop)
        }
        _ => Ok(best),
    }
}

/// Solves `A s = b` by Gaussian elimination (small systems only).
fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(r, &v)| {
            let mut row = r.clone();
            row.push(v);
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-300 {
            return None;
        }
        m.swap(p, c);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..=n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}
