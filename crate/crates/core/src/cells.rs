//! Product partitions of the fundamental domain times the frame circle,
//! with Monte Carlo Haar volumes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{HoroError, Result};
use crate::psl2::GroupElement;
use crate::sampling::{haar_in_domain, rng_for};
use crate::surface::{polar_coordinates, FuchsianSpec};

/// Seed used for the stored Haar volume estimates.
pub const VOLUME_SEED: u64 = 0x5eed_ce11;

/// How radial bin edges are placed on `[0, R]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RadialSpacing {
    /// Equal steps in the distance `rho`.
    Distance,
    /// Equal steps in `cosh rho`, i.e. equal disc area.
    Area,
}

/// Partition by distance to the centre, polar angle of the base point and
/// frame angle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellPartition {
    pub radial: usize,
    pub angular: usize,
    pub frame: usize,
    pub spacing: RadialSpacing,
    cosh_r: f64,
    /// Normalized Haar volume per cell, if estimated.
    pub volumes: Option<Vec<f64>>,
}

impl CellPartition {
    pub fn new(
        spec: &FuchsianSpec,
        radial: usize,
        angular: usize,
        frame: usize,
        spacing: RadialSpacing,
    ) -> Result<CellPartition> {
        if radial == 0 || angular == 0 || frame == 0 {
            return Err(HoroError::InvalidInput(
                "cell counts must be positive".into(),
            ));
        }
        Ok(CellPartition {
            radial,
            angular,
            frame,
            spacing,
            cosh_r: spec.cosh_circumradius(),
            volumes: None,
        })
    }

    /// Splits `n` cells into a near-cubic `radial x angular x frame` grid.
    pub fn with_total(
        spec: &FuchsianSpec,
        n: usize,
        spacing: RadialSpacing,
    ) -> Result<CellPartition> {
        if n == 0 {
            return Err(HoroError::InvalidInput(
                "cell count must be positive".into(),
            ));
        }
        let mut dims = [1usize; 3];
        let mut rest = n;
        let mut p = 2;
        let mut factors = Vec::new();
        while rest > 1 {
            while rest % p == 0 {
                factors.push(p);
                rest /= p;
            }
            p += 1;
        }
        for f in factors.into_iter().rev() {
            let i = (0..3).min_by_key(|&i| dims[i]).unwrap_or(0);
            dims[i] *= f;
        }
        dims.sort_unstable_by(|a, b| b.cmp(a));
        Self::new(spec, dims[0], dims[1], dims[2], spacing)
    }

    pub fn len(&self) -> usize {
        self.radial * self.angular * self.frame
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell containing the domain representative `g`.
    pub fn cell_of(&self, g: &GroupElement) -> usize {
        let (rho, theta) = polar_coordinates(g);
        let radial_frac = match self.spacing {
            RadialSpacing::Distance => rho / self.cosh_r.acosh(),
            RadialSpacing::Area => (rho.cosh() - 1.0) / (self.cosh_r - 1.0),
        };
        let r = bin(radial_frac, self.radial);
        let a = bin(theta / (2.0 * PI), self.angular);
        let f = bin(g.frame_angle() / PI, self.frame);
        (r * self.angular + a) * self.frame + f
    }

    /// Estimates normalized Haar volumes from `n` domain samples.
    pub fn estimate_volumes(&mut self, spec: &FuchsianSpec, n: usize, seed: u64) {
        let mut counts = vec![0u64; self.len()];
        let mut rng = rng_for(seed, 0);
        for _ in 0..n {
            counts[self.cell_of(&haar_in_domain(spec, &mut rng))] += 1;
        }
        self.volumes = Some(counts.iter().map(|&c| c as f64 / n as f64).collect());
    }

    /// Normalized histogram of cell indices.
    pub fn histogram<I: IntoIterator<Item = usize>>(&self, cells: I) -> Vec<f64> {
        let mut h = vec![0.0; self.len()];
        let mut n = 0.0;
        for c in cells {
            h[c] += 1.0;
            n += 1.0;
        }
        if n > 0.0 {
            h.iter_mut().for_each(|x| *x /= n);
        }
        h
    }
}

#[inline]
fn bin(frac: f64, n: usize) -> usize {
    ((frac * n as f64).floor().max(0.0) as usize).min(n - 1)
}

/// Total-variation distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
