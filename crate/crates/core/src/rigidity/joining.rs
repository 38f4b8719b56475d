//! Finite cover self-joinings `[g] ↦ ([g], [g₀ g u_{t₀}])` and their
//! projection statistics.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cells::{total_variation, CellPartition};
use crate::error::{HoroError, Result};
use crate::flows::{default_step, Flow};
use crate::psl2::{flow, FlowKind, GroupElement};
use crate::rigidity::subgroup::{intersection_index, Class, SubgroupSpec};
use crate::sampling::{haar_in_domain, rng_for};
use crate::stats::median;
use crate::surface::{reduce, Character, CoverPoint};

/// Two subgroups of one base group, a base-group word `g₀` and an
/// optional horocycle translation `t₀` of the second factor.
#[derive(Clone, Debug)]
pub struct JoiningModel {
    pub s1: SubgroupSpec,
    pub s2: SubgroupSpec,
    pub g0_word: Vec<usize>,
    pub g0: GroupElement,
    /// `[Γ₁ : Γ₁ ∩ g₀⁻¹Γ₂g₀]`, the number of points over each first coordinate.
    pub l: u128,
    /// `[g₀⁻¹Γ₂g₀ : Γ₁ ∩ g₀⁻¹Γ₂g₀]`.
    pub l2: u128,
    pub t0: f64,
}

impl JoiningModel {
    /// Refuses pairs that are not commensurable.
    pub fn new(s1: SubgroupSpec, s2: SubgroupSpec, g0_word: Vec<usize>) -> Result<JoiningModel> {
        let (i1, i2) = intersection_index(&s1, &s2, &g0_word)?;
        let (Some(l), Some(l2)) = (i1, i2) else {
            return Err(HoroError::InfiniteIndex(format!(
                "indices ({}, {}) are not both finite",
                fmt_index(i1),
                fmt_index(i2)
            )));
        };
        let g0 = s1.base.evaluate(&g0_word)?;
        Ok(JoiningModel {
            s1,
            s2,
            g0_word,
            g0,
            l,
            l2,
            t0: 0.0,
        })
    }

    pub fn with_translation(mut self, t0: f64) -> JoiningModel {
        self.t0 = t0;
        self
    }
}

/// Index as text, `inf` when infinite.
pub fn fmt_index(i: Option<u128>) -> String {
    i.map_or_else(|| "inf".to_string(), |v| v.to_string())
}

/// A point of the joining: both factors as domain representatives with
/// coordinates in the abelianization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JoinPoint {
    pub first: CoverPoint,
    pub second: CoverPoint,
}

/// Samples the joining along diagonal horocycle orbits.
pub struct JoiningSampler<'a> {
    pub model: &'a JoiningModel,
    universal: Character,
}

impl<'a> JoiningSampler<'a> {
    pub fn new(model: &'a JoiningModel) -> JoiningSampler<'a> {
        JoiningSampler {
            universal: Character::universal(&model.s1.base),
            model,
        }
    }

    /// The point over `γ h`, for a base-group word `γ` and any `h`.
    pub fn point_over(&self, lift: &[usize], h: &GroupElement) -> Result<JoinPoint> {
        let spec = &self.model.s1.base;
        let g = spec.evaluate(lift)? * *h;
        let first = reduce(spec, &g, &self.universal)?;
        let second = reduce(
            spec,
            &(self.model.g0 * g * flow(FlowKind::U, self.model.t0)),
            &self.universal,
        )?;
        Ok(JoinPoint { first, second })
    }

    /// Haar-random point of the common cover.
    pub fn start<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<JoinPoint> {
        self.point_over(&[], &haar_in_domain(&self.model.s1.base, rng))
    }

    /// Coset of `Γ₁` (resp. `Γ₂`) carrying each factor.
    pub fn classes(&self, p: &JoinPoint) -> (Class, Class) {
        (
            self.model.s1.class(&p.first.xi),
            self.model.s2.class(&p.second.xi),
        )
    }

    /// Flows both factors by `u_t`.
    pub fn step(&self, p: &mut JoinPoint, t: f64) -> Result<()> {
        let f = Flow::new(&self.model.s1.base, &self.universal);
        f.step_in_place(&mut p.first, FlowKind::U, t)?;
        f.step_in_place(&mut p.second, FlowKind::U, t)?;
        Ok(())
    }

    /// Cells visited by each factor along `[0, t]` at spacing `dt`.
    pub fn orbit_cells(
        &self,
        start: &JoinPoint,
        t: f64,
        dt: f64,
        cells: &CellPartition,
    ) -> Result<(Vec<usize>, Vec<usize>)> {
        if !(dt > 0.0) || !(t >= 0.0) {
            return Err(HoroError::InvalidInput(format!(
                "need t ≥ 0 and dt > 0, got t = {t}, dt = {dt}"
            )));
        }
        let n = (t / dt).round() as usize;
        let mut p = start.clone();
        let mut c1 = Vec::with_capacity(n);
        let mut c2 = Vec::with_capacity(n);
        for _ in 0..n {
            self.step(&mut p, dt)?;
            c1.push(cells.cell_of(&p.first.rep));
            c2.push(cells.cell_of(&p.second.rep));
        }
        Ok((c1, c2))
    }

    /// Second factors over the first factor of `h`, one per lift `γ ∈ Γ₁`.
    pub fn fiber(&self, h: &GroupElement, lifts: &[Vec<usize>]) -> Result<BTreeSet<Class>> {
        let zero = self
            .model
            .s1
            .class(&vec![0; self.model.s1.base.abelian_rank()]);
        let mut out = BTreeSet::new();
        for w in lifts {
            let p = self.point_over(w, h)?;
            let (c1, c2) = self.classes(&p);
            if c1 != zero {
                return Err(HoroError::InvalidInput(format!(
                    "lift {w:?} is not in the first subgroup"
                )));
            }
            out.insert(c2);
        }
        Ok(out)
    }
}

/// Random words of the first subgroup, by rejection from reduced words of
/// length `1..=max_len`.
pub fn random_subgroup_words<R: Rng + ?Sized>(
    s: &SubgroupSpec,
    count: usize,
    max_len: usize,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let spec = &s.base;
    let rank = spec.abelian_rank();
    let zero = s.class(&vec![0; rank]);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let len = rng.gen_range(1..=max_len.max(1));
        let mut w: Vec<usize> = Vec::with_capacity(len);
        while w.len() < len {
            let k = rng.gen_range(0..spec.len());
            if w.last().is_some_and(|&l| spec.inverse_index(l) == k) {
                continue;
            }
            w.push(k);
        }
        if s.class(&crate::rigidity::subgroup::abelian_image(spec, &w)) == zero {
            out.push(w);
        }
    }
    out
}

/// Distances of the two projections from the Haar cell volumes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProjectionReport {
    #[serde(rename = "T")]
    pub t: f64,
    pub cells: usize,
    pub starts: usize,
    pub tv1: Vec<f64>,
    pub tv2: Vec<f64>,
    pub tv1_median: f64,
    pub tv2_median: f64,
}

/// Cell histograms of each factor along `starts` orbits of length `t`
/// against the stored volumes of `cells`.
pub fn projection_test(
    sampler: &JoiningSampler,
    cells: &CellPartition,
    t: f64,
    starts: usize,
    seed: u64,
) -> Result<ProjectionReport> {
    let volumes = cells
        .volumes
        .as_ref()
        .ok_or_else(|| HoroError::InvalidInput("cell volumes not estimated".into()))?;
    if starts == 0 {
        return Err(HoroError::InvalidInput("need at least one start".into()));
    }
    let dt = default_step(FlowKind::U);
    let pairs: Vec<(f64, f64)> = (0..starts as u64)
        .into_par_iter()
        .map(|i| {
            let start = sampler.start(&mut rng_for(seed, i))?;
            let (c1, c2) = sampler.orbit_cells(&start, t, dt, cells)?;
            Ok((
                total_variation(&cells.histogram(c1), volumes),
                total_variation(&cells.histogram(c2), volumes),
            ))
        })
        .collect::<Result<_>>()?;
    let tv1: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let tv2: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(ProjectionReport {
        t,
        cells: cells.len(),
        starts,
        tv1_median: median(&tv1),
        tv2_median: median(&tv2),
        tv1,
        tv2,
    })
}

/// Copy of `cells` with its volumes permuted (a negative control).
pub fn with_shuffled_volumes(cells: &CellPartition, seed: u64) -> Result<CellPartition> {
    let mut out = cells.clone();
    let v = out
        .volumes
        .as_mut()
        .ok_or_else(|| HoroError::InvalidInput("cell volumes not estimated".into()))?;
    v.shuffle(&mut rng_for(seed, 0));
    Ok(out)
}
