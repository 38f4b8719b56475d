//! Ruelle transfer operators on cylinder functions and their leading
//! eigendata.

use serde::{Deserialize, Serialize};

use crate::error::{HoroError, Result};
use crate::thermo::shift::ShiftModel;

pub const MAX_POWER_ITERATIONS: usize = 100_000;
pub const POWER_TOL: f64 = 1e-12;

/// `(L_w φ)(x) = sum over admissible a of e^{w(ax)} φ(ax)`.
pub fn transfer_apply(m: &ShiftModel, weight: &[f64], phi: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.size()];
    for x in 0..m.size() {
        if !m.admissible[x] {
            continue;
        }
        let x0 = m.first(x);
        let mut acc = 0.0;
        for a in 0..m.n {
            if m.transitions[a][x0] {
                let y = m.prepend(a, x);
                acc += weight[y].exp() * phi[y];
            }
        }
        out[x] = acc;
    }
    out
}

/// `(L*_w ν)(y) = e^{w(y)} sum over admissible b of ν(y1 .. y_{k-1} b)`.
pub fn transfer_adjoint(m: &ShiftModel, weight: &[f64], nu: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.size()];
    for y in 0..m.size() {
        if !m.admissible[y] {
            continue;
        }
        let last = m.last(y);
        let mut acc = 0.0;
        for b in 0..m.n {
            if m.transitions[last][b] {
                acc += nu[m.append(y, b)];
            }
        }
        out[y] = weight[y].exp() * acc;
    }
    out
}

/// Leading eigenvalue with right eigenfunction and left eigenmeasure,
/// normalized so that `sum ν = 1` and `sum ψ ν = 1`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RpfData {
    pub lambda: f64,
    pub psi: Vec<f64>,
    pub nu: Vec<f64>,
    /// `max |L ψ - λ ψ|`.
    pub residual: f64,
    pub iterations: usize,
}

impl RpfData {
    /// Equilibrium weights `ψ ν` on cylinders.
    pub fn equilibrium(&self) -> Vec<f64> {
        self.psi.iter().zip(&self.nu).map(|(a, b)| a * b).collect()
    }
}

fn power_iterate<F>(m: &ShiftModel, apply: F) -> Result<(f64, Vec<f64>, usize)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut v: Vec<f64> = m
        .admissible
        .iter()
        .map(|&a| f64::from(u8::from(a)))
        .collect();
    let mut lambda = 0.0;
    for it in 1..=MAX_POWER_ITERATIONS {
        let w = apply(&v);
        let norm = w.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(HoroError::NoConvergence {
                iterations: it,
                residual: norm,
            });
        }
        let w: Vec<f64> = w.iter().map(|x| x / norm).collect();
        let change = v
            .iter()
            .zip(&w)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        let lambda_change = (norm - lambda).abs() / norm;
        v = w;
        lambda = norm;
        if change < POWER_TOL && lambda_change < POWER_TOL {
            return Ok((lambda, v, it));
        }
    }
    let w = apply(&v);
    let residual = v
        .iter()
        .zip(&w)
        .fold(0.0f64, |a, (x, y)| a.max((y - lambda * x).abs()));
    Err(HoroError::NoConvergence {
        iterations: MAX_POWER_ITERATIONS,
        residual,
    })
}

pub fn rpf_eigendata(m: &ShiftModel, weight: &[f64]) -> Result<RpfData> {
    if weight.len() != m.size() {
        return Err(HoroError::InvalidInput(format!(
            "weight has {} entries for {} cylinders",
            weight.len(),
            m.size()
        )));
    }
    let (lambda, mut psi, it1) = power_iterate(m, |v| transfer_apply(m, weight, v))?;
    let (_, mut nu, it2) = power_iterate(m, |v| transfer_adjoint(m, weight, v))?;
    let total: f64 = nu.iter().sum();
    nu.iter_mut().for_each(|x| *x /= total);
    let pairing: f64 = psi.iter().zip(&nu).map(|(a, b)| a * b).sum();
    psi.iter_mut().for_each(|x| *x /= pairing);
    let lpsi = transfer_apply(m, weight, &psi);
    let residual = psi
        .iter()
        .zip(&lpsi)
        .fold(0.0f64, |a, (x, y)| a.max((y - lambda * x).abs()));
    Ok(RpfData {
        lambda,
        psi,
        nu,
        residual,
        iterations: it1.max(it2),
    })
}

/// Topological pressure `log λ` of a cylinder weight.
pub fn pressure(m: &ShiftModel, weight: &[f64]) -> Result<f64> {
    Ok(power_iterate(m, |v| transfer_apply(m, weight, v))?.0.ln())
}
