//! Cell coverage of subgroup orbits in the compact quotient.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cells::CellPartition;
use crate::error::{HoroError, Result};
use crate::psl2::GroupElement;
use crate::rigidity::subgroup::{abelian_image, SubgroupSpec};
use crate::surface::{reduce_in_place, Character};

/// Default cap on the number of subgroup words acted on.
pub const DEFAULT_MAX_WORDS: u64 = 100_000_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitDensity {
    #[serde(rename = "L")]
    pub l: usize,
    /// Subgroup words of length at most `L` applied to the point.
    pub words: u64,
    pub cells: usize,
    pub cells_hit: usize,
    pub coverage: f64,
}

struct Walker<'a> {
    s: &'a SubgroupSpec,
    cells: &'a CellPartition,
    trivial: Character,
    letters: Vec<Vec<i64>>,
    /// Per free component, the largest change one letter can make.
    reach: Vec<(Vec<i64>, i64)>,
    modular: Vec<(Vec<i64>, i64)>,
    max_len: usize,
    words: AtomicU64,
    max_words: u64,
}

impl Walker<'_> {
    fn in_subgroup(&self, v: &[i64]) -> bool {
        let dot = |row: &[i64]| row.iter().zip(v).map(|(a, b)| a * b).sum::<i64>();
        self.reach.iter().all(|(row, _)| dot(row) == 0)
            && self
                .modular
                .iter()
                .all(|(row, m)| dot(row).rem_euclid(*m) == 0)
    }

    fn reachable(&self, v: &[i64], remaining: usize) -> bool {
        self.reach.iter().all(|(row, step)| {
            let x: i64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
            x.abs() <= step * remaining as i64
        })
    }

    fn visit(&self, rep: &GroupElement, v: &[i64], hits: &mut [u64]) -> Result<()> {
        if self.in_subgroup(v) {
            if self.words.fetch_add(1, Ordering::Relaxed) >= self.max_words {
                return Err(HoroError::TooManyWords {
                    limit: self.max_words,
                });
            }
            let c = self.cells.cell_of(rep);
            hits[c / 64] |= 1 << (c % 64);
        }
        Ok(())
    }

    fn walk(
        &self,
        rep: GroupElement,
        v: Vec<i64>,
        last: Option<usize>,
        depth: usize,
        hits: &mut [u64],
    ) -> Result<()> {
        self.visit(&rep, &v, hits)?;
        if depth == self.max_len {
            return Ok(());
        }
        let spec = &self.s.base;
        for k in 0..spec.len() {
            if last.is_some_and(|l| spec.inverse_index(l) == k) {
                continue;
            }
            let w: Vec<i64> = v.iter().zip(&self.letters[k]).map(|(a, b)| a + b).collect();
            if !self.reachable(&w, self.max_len - depth - 1) {
                continue;
            }
            // Right multiplication commutes with the left reduction, so the
            // running product can be kept reduced.
            let mut next = rep * spec.generators()[k];
            let mut xi = self.trivial.zero();
            reduce_in_place(spec, &self.trivial, &mut next, &mut xi)?;
            self.walk(next, w, Some(k), depth + 1, hits)?;
        }
        Ok(())
    }
}

/// Fraction of `cells` hit by `x γ` over reduced words `γ` of length at most
/// `l` lying in `s` (the quotient is by the whole base group).
///
/// Branches are pruned once a free character value can no longer return
/// to zero. Fails with [`HoroError::TooManyWords`] when more than
/// `max_words` subgroup words are needed.
pub fn orbit_density(
    s: &SubgroupSpec,
    x: &GroupElement,
    l: usize,
    cells: &CellPartition,
    max_words: u64,
) -> Result<OrbitDensity> {
    let spec = &s.base;
    let rank = spec.abelian_rank();
    let mut reach = Vec::new();
    let mut modular = Vec::new();
    for (ch, m) in &s.characters {
        for j in 0..ch.d() {
            let row: Vec<i64> = (0..rank).map(|k| ch.value(k)[j]).collect();
            if *m == 0 {
                let step = row.iter().map(|a| a.abs()).max().unwrap_or(0);
                reach.push((row, step));
            } else {
                modular.push((row, *m as i64));
            }
        }
    }
    let walker = Walker {
        s,
        cells,
        trivial: Character::trivial(spec, 1),
        letters: (0..spec.len()).map(|k| abelian_image(spec, &[k])).collect(),
        reach,
        modular,
        max_len: l,
        words: AtomicU64::new(0),
        max_words,
    };
    let mut start = *x;
    let mut xi = walker.trivial.zero();
    reduce_in_place(spec, &walker.trivial, &mut start, &mut xi)?;
    let blocks = cells.len().div_ceil(64);

    // The empty word, then one parallel branch per first letter.
    let mut hits = vec![0u64; blocks];
    walker.visit(&start, &vec![0; rank], &mut hits)?;
    if l > 0 {
        let branches: Vec<Vec<u64>> = (0..spec.len())
            .into_par_iter()
            .map(|k| {
                let mut h = vec![0u64; blocks];
                let v = walker.letters[k].clone();
                if walker.reachable(&v, l - 1) {
                    let mut next = start * spec.generators()[k];
                    let mut xi = walker.trivial.zero();
                    reduce_in_place(spec, &walker.trivial, &mut next, &mut xi)?;
                    walker.walk(next, v, Some(k), 1, &mut h)?;
                }
                Ok(h)
            })
            .collect::<Result<_>>()?;
        for h in branches {
            for (a, b) in hits.iter_mut().zip(h) {
                *a |= b;
            }
        }
    }
    let words = walker.words.load(Ordering::Relaxed);
    let hit = hits.iter().map(|b| b.count_ones() as usize).sum();
    Ok(OrbitDensity {
        l,
        words,
        cells: cells.len(),
        cells_hit: hit,
        coverage: hit as f64 / cells.len() as f64,
    })
}
