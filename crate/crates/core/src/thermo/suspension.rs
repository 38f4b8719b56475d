//! Suspension flows over a shift model with `Z^d` jumps, sampled from the
//! equilibrium state of the normalized roof.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HoroError, Result};
use crate::thermo::shift::ShiftModel;
use crate::thermo::transfer::{rpf_eigendata, RpfData};

/// Lemma-style length of a local strong stable leaf: `e^{-s} ψ`.
pub fn local_stable_length(s: f64, psi_val: f64) -> Result<f64> {
    if !(psi_val > 0.0) {
        return Err(HoroError::InvalidInput(format!(
            "eigenfunction value {psi_val} must be positive"
        )));
    }
    Ok((-s).exp() * psi_val)
}

/// Sampling tables for the suspension of a model with roof `τ`.
///
/// Symbols are generated by the order-`(k-1)` Markov chain whose `k`-block
/// marginals are the equilibrium weights `ψ ν`; predecessors are drawn with
/// probabilities `e^{-τ(ay)} ψ(ay) / ψ(y)`.
#[derive(Clone, Debug)]
pub struct Suspension {
    pub model: ShiftModel,
    pub rpf: RpfData,
    /// Equilibrium weight of each cylinder.
    pub mu: Vec<f64>,
    /// Cumulative distribution of cylinders under `μ`.
    start_cdf: Vec<f64>,
    /// Cumulative distribution of cylinders under `τ μ`.
    flow_cdf: Vec<f64>,
    /// `∫ τ dμ`.
    pub mean_roof: f64,
    /// Per cylinder, cumulative probabilities of the next symbol.
    next_cdf: Vec<Vec<f64>>,
    /// Per cylinder, probabilities of each predecessor symbol.
    pub prev_prob: Vec<Vec<f64>>,
}

/// End state of a forward run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuspensionSample {
    /// Symbols visited, starting with the initial cylinder.
    pub word: Vec<usize>,
    pub xi: Vec<i64>,
    /// Time spent above the last base point.
    pub leftover: f64,
    pub shifts: usize,
}

impl Suspension {
    pub fn new(model: ShiftModel) -> Result<Suspension> {
        let weight = model.weight(1.0, &vec![0.0; model.d]);
        let rpf = rpf_eigendata(&model, &weight)?;
        Self::with_rpf(model, rpf)
    }

    pub fn with_rpf(model: ShiftModel, rpf: RpfData) -> Result<Suspension> {
        if (rpf.lambda - 1.0).abs() > 1e-6 {
            return Err(HoroError::InvalidInput(format!(
                "eigendata has λ = {}; the roof is not normalized",
                rpf.lambda
            )));
        }
        let mu = rpf.equilibrium();
        let start_cdf = cumulative(&mu);
        let weighted: Vec<f64> = mu.iter().zip(&model.tau).map(|(a, b)| a * b).collect();
        let mean_roof = weighted.iter().sum();
        let flow_cdf = cumulative(&weighted);
        let n = model.n;
        let mut next_cdf = vec![Vec::new(); model.size()];
        let mut prev_prob = vec![Vec::new(); model.size()];
        for y in 0..model.size() {
            if !model.admissible[y] {
                continue;
            }
            let last = model.last(y);
            let next: Vec<f64> = (0..n)
                .map(|b| {
                    if model.transitions[last][b] {
                        mu[model.append(y, b)]
                    } else {
                        0.0
                    }
                })
                .collect();
            next_cdf[y] = cumulative(&next);
            let first = model.first(y);
            let prev: Vec<f64> = (0..n)
                .map(|a| {
                    if model.transitions[a][first] {
                        let ay = model.prepend(a, y);
                        (-model.tau[ay]).exp() * rpf.psi[ay]
                    } else {
                        0.0
                    }
                })
                .collect();
            let total: f64 = prev.iter().sum();
            prev_prob[y] = prev.iter().map(|p| p / total).collect();
        }
        Ok(Suspension {
            model,
            rpf,
            mu,
            start_cdf,
            flow_cdf,
            mean_roof,
            next_cdf,
            prev_prob,
        })
    }

    /// Cylinder drawn from `μ`.
    pub fn draw_cylinder<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        pick(&self.start_cdf, rng.gen())
    }

    /// Point of the suspension drawn from the flow-invariant measure: a
    /// cylinder with probability `∝ τ μ` and a uniform height under the roof.
    pub fn draw_flow_point<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let c = pick(&self.flow_cdf, rng.gen());
        (c, rng.gen::<f64>() * self.model.tau[c])
    }

    /// Next symbol after the window `y`.
    #[inline]
    pub fn draw_next<R: Rng + ?Sized>(&self, y: usize, rng: &mut R) -> usize {
        pick(&self.next_cdf[y], rng.gen())
    }

    /// Flows forward from `(cylinder, height)` for time `t`.
    ///
    /// Returns the word of visited symbols (the full initial cylinder, then
    /// one symbol per crossing), the jump sum and the final height.
    pub fn run_from<R: Rng + ?Sized>(
        &self,
        cylinder: usize,
        height: f64,
        t: f64,
        rng: &mut R,
    ) -> SuspensionSample {
        let m = &self.model;
        let mut word = m.word(cylinder);
        let mut y = cylinder;
        let mut xi = vec![0i64; m.d];
        let target = height + t;
        let slack = 1e-12 * (1.0 + target.abs());
        let mut acc = 0.0;
        let mut shifts = 0;
        while acc + m.tau[y] <= target + slack {
            acc += m.tau[y];
            for (a, v) in xi.iter_mut().zip(&m.f[y]) {
                *a += v;
            }
            let b = self.draw_next(y, rng);
            word.push(b);
            y = m.append(y, b);
            shifts += 1;
        }
        SuspensionSample {
            word,
            xi,
            leftover: target - acc,
            shifts,
        }
    }

    /// A `μ`-distributed base point flowed for time `t`.
    pub fn sample<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> SuspensionSample {
        let c = self.draw_cylinder(rng);
        self.run_from(c, 0.0, t, rng)
    }
}

/// Runs the suspension of `m` with eigendata `rpf` for roof time `t`.
pub fn suspension_sample<R: Rng + ?Sized>(
    m: &ShiftModel,
    rpf: &RpfData,
    t: f64,
    rng: &mut R,
) -> Result<SuspensionSample> {
    if !(t >= 0.0) {
        return Err(HoroError::InvalidInput(format!("time {t} is negative")));
    }
    Ok(Suspension::with_rpf(m.clone(), rpf.clone())?.sample(t, rng))
}

fn cumulative(w: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    let mut acc = 0.0;
    w.iter()
        .map(|x| {
            acc += x / total;
            acc
        })
        .collect()
}

#[inline]
fn pick(cdf: &[f64], u: f64) -> usize {
    let i = cdf.partition_point(|&c| c <= u);
    if i < cdf.len() {
        return i;
    }
    // u above the rounded total: last slot with positive mass
    (1..cdf.len())
        .rev()
        .find(|&j| cdf[j] > cdf[j - 1])
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng_for;
    use crate::stats::variance;

    #[test]
    fn stable_length() {
        assert_eq!(local_stable_length(0.0, 0.7).unwrap(), 0.7);
        assert!((local_stable_length(std::f64::consts::LN_2, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let (s, p) = (0.8, 1.7);
        let lhs = local_stable_length(2.0 * s, p).unwrap() * p;
        let rhs = local_stable_length(s, p).unwrap().powi(2);
        assert!((lhs - rhs).abs() < 1e-14);
        assert!(local_stable_length(1.0, 0.0).is_err());
    }

    #[test]
    fn constant_roof_shift_counts() {
        let s = Suspension::new(ShiftModel::builtin("full2-cosh").unwrap()).unwrap();
        let c = s.model.tau[0];
        let mut rng = rng_for(9, 0);
        let z = s.sample(0.0, &mut rng);
        assert_eq!(z.shifts, 0);
        assert_eq!(z.xi, vec![0]);
        for n in [1usize, 5, 17] {
            for t in [n as f64 * c, (n as f64 + 0.5) * c] {
                assert_eq!(s.sample(t, &mut rng).shifts, n);
            }
        }
    }

    #[test]
    fn random_walk_variance() {
        let s = Suspension::new(ShiftModel::builtin("full2-cosh").unwrap()).unwrap();
        let c = s.model.tau[0];
        let n = 40;
        let xs: Vec<f64> = (0..10_000)
            .map(|i| s.sample(n as f64 * c, &mut rng_for(10, i)).xi[0] as f64)
            .collect();
        let v = variance(&xs);
        assert!((v / n as f64 - 1.0).abs() < 0.05, "{v}");
    }

    #[test]
    fn chain_reproduces_block_marginals() {
        let s = Suspension::new(ShiftModel::builtin("golden-mean").unwrap()).unwrap();
        let m = &s.model;
        let mut counts = vec![0.0; m.size()];
        let mut rng = rng_for(11, 0);
        let runs = 4000;
        for _ in 0..runs {
            let z = s.sample(20.0, &mut rng);
            let c = m.code(&z.word[5..5 + m.depth]);
            counts[c] += 1.0 / runs as f64;
        }
        for c in 0..m.size() {
            assert!((counts[c] - s.mu[c]).abs() < 0.03);
        }
        for y in 0..m.size() {
            if m.admissible[y] {
                let total: f64 = s.prev_prob[y].iter().sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }
}
