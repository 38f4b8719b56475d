//! Cocompact lattices given by side pairings of a Dirichlet domain centred
//! at `i`, characters to `Z^d`, and the deck coordinate of a point of the
//! corresponding `Z^d`-cover.
//!
//! A point `g` of the cover is written `g = γ·rep` with `rep·i` in the
//! Dirichlet domain and `γ` a word in the lattice; the cover only remembers
//! `φ(γ)`. Reduction moves `rep` back into the domain by greedy descent on
//! the distance to the centre and accumulates the character of the letters
//! it strips off.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{HoroError, Result};
use crate::psl2::{GroupElement, PreciseElement};

/// Deck coordinate in `Z^d`.
pub type Xi = SmallVec<[i64; 4]>;

/// Iteration cap for a single reduction.
pub const MAX_REDUCTION_STEPS: usize = 100_000;

/// A finitely presented cocompact lattice with a Dirichlet domain at `i`.
#[derive(Clone, Debug)]
pub struct FuchsianSpec {
    generators: Vec<GroupElement>,
    names: Vec<String>,
    inverse: Vec<usize>,
    /// Number of leading generators that are free in the abelianization.
    primary: usize,
    relation: Vec<usize>,
    cosh_circumradius: f64,
}

impl FuchsianSpec {
    /// The genus-two group pairing opposite sides of the regular hyperbolic
    /// octagon with interior angles `pi/4`.
    ///
    /// Generator `k` is `R(k pi/4)·T·R(-k pi/4)` where `T = a_{2r}` and `r`
    /// is the inradius, `cosh r = cot(pi/8) = 1 + sqrt 2`. Generators
    /// `k` and `k + 4` are mutually inverse.
    pub fn octagon() -> FuchsianSpec {
        let inradius = (1.0 + 2f64.sqrt()).acosh();
        let t = crate::psl2::flow(crate::psl2::FlowKind::A, 2.0 * inradius);
        let mut generators: Vec<GroupElement> = (0..4)
            .map(|k| {
                let th = k as f64 * PI / 4.0;
                GroupElement::rotation(th) * t * GroupElement::rotation(-th)
            })
            .collect();
        // exact adjugates keep products of a letter and its inverse at +-I
        for k in 0..4 {
            generators.push(generators[k].inverse());
        }
        let names = ["a1", "b1", "a2", "b2", "a1^-1", "b1^-1", "a2^-1", "b2^-1"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let inverse = (0..8).map(|k| (k + 4) % 8).collect();
        // cosh R = cot(pi/8)^2 for the circumradius
        let cot = 1.0 + 2f64.sqrt();
        FuchsianSpec {
            generators,
            names,
            inverse,
            primary: 4,
            relation: vec![0, 3, 6, 1, 4, 7, 2, 5],
            cosh_circumradius: cot * cot,
        }
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn inverse_index(&self, k: usize) -> usize {
        self.inverse[k]
    }

    pub fn relation(&self) -> &[usize] {
        &self.relation
    }

    /// Rank of the abelianization, assuming the relation has zero exponent sums.
    pub fn abelian_rank(&self) -> usize {
        self.primary
    }

    pub fn circumradius(&self) -> f64 {
        self.cosh_circumradius.acosh()
    }

    pub fn cosh_circumradius(&self) -> f64 {
        self.cosh_circumradius
    }

    /// Shortest translation length among the generators.
    pub fn systole(&self) -> f64 {
        self.generators
            .iter()
            .map(|g| 2.0 * (0.5 * g.trace().abs()).max(1.0).acosh())
            .fold(f64::INFINITY, f64::min)
    }

    /// Product of the generators along `word`.
    pub fn evaluate(&self, word: &[usize]) -> Result<GroupElement> {
        let mut g = GroupElement::IDENTITY;
        for &k in word {
            let h = self.generators.get(k).ok_or_else(|| {
                HoroError::InvalidInput(format!("generator index {k} out of range"))
            })?;
            g = g * *h;
        }
        Ok(g)
    }

    /// Frobenius distance of the relation word from `±I`.
    pub fn relation_residual(&self) -> f64 {
        self.evaluate(&self.relation)
            .map(|g| g.dist_id())
            .unwrap_or(f64::INFINITY)
    }

    /// Inverse of a word, letter by letter.
    pub fn invert_word(&self, word: &[usize]) -> Vec<usize> {
        word.iter().rev().map(|&k| self.inverse[k]).collect()
    }

    /// Parses a whitespace-separated word of generator names or indices.
    ///
    /// `a1^-1` and the upper-case form `A1` both denote the inverse of `a1`.
    pub fn parse_word(&self, text: &str) -> Result<Vec<usize>> {
        text.split_whitespace()
            .map(|tok| self.letter_index(tok))
            .collect()
    }

    fn letter_index(&self, tok: &str) -> Result<usize> {
        if let Some(k) = self.names.iter().position(|n| n == tok) {
            return Ok(k);
        }
        if let Some(base) = tok.strip_suffix("^-1") {
            if let Ok(k) = self.letter_index(base) {
                return Ok(self.inverse[k]);
            }
        }
        if tok.chars().any(|c| c.is_ascii_uppercase()) {
            let lower = tok.to_ascii_lowercase();
            if let Some(k) = self.names.iter().position(|n| *n == lower) {
                return Ok(self.inverse[k]);
            }
        }
        if let Ok(k) = tok.parse::<usize>() {
            if k < self.len() {
                return Ok(k);
            }
        }
        Err(HoroError::InvalidInput(format!(
            "unknown generator `{tok}`"
        )))
    }

    /// Whether `g·i` lies in the closed Dirichlet domain.
    pub fn in_domain(&self, g: &GroupElement) -> bool {
        let q = g.cosh_dist_to_i();
        self.generators
            .iter()
            .all(|h| cosh_of_product(h, g) >= q * (1.0 - 1e-12))
    }

    /// Loads a lattice from the JSON group-spec format.
    pub fn from_json_str(text: &str) -> Result<(FuchsianSpec, BTreeMap<String, Character>)> {
        let file: GroupSpecFile = serde_json::from_str(text)?;
        file.build()
    }

    pub fn from_json_file(path: &Path) -> Result<(FuchsianSpec, BTreeMap<String, Character>)> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Serializable description of this lattice (all generators listed).
    pub fn to_spec_file(&self, characters: &BTreeMap<String, Character>) -> GroupSpecFile {
        GroupSpecFile {
            generators: self.generators.iter().map(|g| g.entries()).collect(),
            names: self.names.clone(),
            relation: self.relation.clone(),
            characters: characters
                .iter()
                .map(|(name, ch)| {
                    let vals = (0..self.primary)
                        .map(|k| (self.names[k].clone(), ch.values[k].to_vec()))
                        .collect();
                    (name.clone(), vals)
                })
                .collect(),
            circumradius: Some(self.circumradius()),
        }
    }
}

#[inline]
fn cosh_of_product(h: &GroupElement, g: &GroupElement) -> f64 {
    let a = h.a() * g.a() + h.b() * g.c();
    let b = h.a() * g.b() + h.b() * g.d();
    let c = h.c() * g.a() + h.d() * g.c();
    let d = h.c() * g.b() + h.d() * g.d();
    0.5 * (a * a + b * b + c * c + d * d)
}

/// On-disk form of a user-supplied lattice.
///
/// `relation` indexes into `generators`. Generators whose inverse is not
/// listed get it appended; characters are given on the listed generators
/// (by name or index) and extended to inverses by negation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupSpecFile {
    pub generators: Vec<[f64; 4]>,
    #[serde(default)]
    pub names: Vec<String>,
    pub relation: Vec<usize>,
    #[serde(default)]
    pub characters: BTreeMap<String, BTreeMap<String, Vec<i64>>>,
    #[serde(default)]
    pub circumradius: Option<f64>,
}

impl GroupSpecFile {
    pub fn build(&self) -> Result<(FuchsianSpec, BTreeMap<String, Character>)> {
        if self.generators.is_empty() {
            return Err(HoroError::Config("group spec lists no generators".into()));
        }
        let mut generators = Vec::with_capacity(2 * self.generators.len());
        for m in &self.generators {
            generators.push(GroupElement::try_from(*m)?);
        }
        let listed = generators.len();
        let mut names: Vec<String> = if self.names.is_empty() {
            (0..listed).map(|k| format!("g{k}")).collect()
        } else if self.names.len() == listed {
            self.names.clone()
        } else {
            return Err(HoroError::Config(format!(
                "{} names for {} generators",
                self.names.len(),
                listed
            )));
        };
        let mut inverse = vec![usize::MAX; listed];
        let mut primary_flags = vec![true; listed];
        for k in 0..listed {
            if inverse[k] != usize::MAX {
                continue;
            }
            let inv = generators[k].inverse();
            let found = (k + 1..listed)
                .find(|&j| inverse[j] == usize::MAX && generators[j].approx_eq(&inv, 1e-9));
            match found {
                Some(j) => {
                    inverse[k] = j;
                    inverse[j] = k;
                    primary_flags[j] = false;
                }
                None => {
                    let j = generators.len();
                    generators.push(inv);
                    names.push(format!("{}^-1", names[k]));
                    inverse[k] = j;
                    inverse.push(k);
                    primary_flags.push(false);
                }
            }
        }
        // Put primary generators first so abelian coordinates are 0..primary.
        let order: Vec<usize> = (0..generators.len())
            .filter(|&k| primary_flags[k])
            .chain((0..generators.len()).filter(|&k| !primary_flags[k]))
            .collect();
        let mut position = vec![0; generators.len()];
        for (new, &old) in order.iter().enumerate() {
            position[old] = new;
        }
        let primary = primary_flags.iter().filter(|&&p| p).count();
        let relation = self
            .relation
            .iter()
            .map(|&k| {
                if k < listed {
                    Ok(position[k])
                } else {
                    Err(HoroError::Config(format!(
                        "relation index {k} out of range"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let spec_generators: Vec<GroupElement> = order.iter().map(|&k| generators[k]).collect();
        let cosh_circumradius = match self.circumradius {
            Some(r) if r > 0.0 => r.cosh(),
            _ => spec_generators
                .iter()
                .map(|g| g.cosh_dist_to_i())
                .fold(1.0, f64::max),
        };
        let spec = FuchsianSpec {
            generators: spec_generators,
            names: order.iter().map(|&k| names[k].clone()).collect(),
            inverse: order.iter().map(|&k| position[inverse[k]]).collect(),
            primary,
            relation,
            cosh_circumradius,
        };
        if spec.relation_residual() > 1e-9 {
            return Err(HoroError::Config(format!(
                "relation does not evaluate to the identity (residual {:e})",
                spec.relation_residual()
            )));
        }
        let mut characters = BTreeMap::new();
        for (name, vals) in &self.characters {
            let ch = Character::from_named_values(&spec, vals)?;
            characters.insert(name.clone(), ch);
        }
        Ok((spec, characters))
    }
}

/// A homomorphism from the lattice to `Z^d`, stored per generator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Character {
    d: usize,
    values: Vec<Xi>,
}

impl Character {
    /// Builds a character from values on some generators; every other
    /// primary generator maps to zero and inverses map to negatives.
    pub fn from_named_values(
        spec: &FuchsianSpec,
        vals: &BTreeMap<String, Vec<i64>>,
    ) -> Result<Character> {
        let d = vals.values().map(|v| v.len()).max().unwrap_or(1).max(1);
        let mut values: Vec<Option<Xi>> = vec![None; spec.len()];
        for (gen, v) in vals {
            if v.len() != d {
                return Err(HoroError::Config(format!(
                    "character value for `{gen}` has length {}, expected {d}",
                    v.len()
                )));
            }
            let k = spec.letter_index(gen)?;
            let v: Xi = v.iter().copied().collect();
            let neg: Xi = v.iter().map(|x| -x).collect();
            let inv = spec.inverse[k];
            for (idx, val) in [(k, v), (inv, neg)] {
                match &values[idx] {
                    Some(existing) if *existing != val => {
                        return Err(HoroError::Config(format!(
                            "inconsistent character data on generator `{}`",
                            spec.names[idx]
                        )))
                    }
                    _ => values[idx] = Some(val),
                }
            }
        }
        let zero: Xi = SmallVec::from_elem(0, d);
        let ch = Character {
            d,
            values: values
                .into_iter()
                .map(|v| v.unwrap_or_else(|| zero.clone()))
                .collect(),
        };
        ch.check(spec)?;
        Ok(ch)
    }

    /// Character sending generator `k` (and `-1` times its inverse) to `v[k]`
    /// for the primary generators `k < rank`.
    pub fn from_primary(spec: &FuchsianSpec, primary_values: &[Vec<i64>]) -> Result<Character> {
        if primary_values.len() != spec.abelian_rank() {
            return Err(HoroError::InvalidInput(format!(
                "expected values for {} generators, got {}",
                spec.abelian_rank(),
                primary_values.len()
            )));
        }
        let map = primary_values
            .iter()
            .enumerate()
            .map(|(k, v)| (spec.names[k].clone(), v.clone()))
            .collect();
        Self::from_named_values(spec, &map)
    }

    /// `a1 -> 1`, everything else `0`.
    pub fn default_z(spec: &FuchsianSpec) -> Character {
        let mut vals = vec![vec![0]; spec.abelian_rank()];
        vals[0] = vec![1];
        Self::from_primary(spec, &vals).expect("built-in character")
    }

    /// `a1 -> (1,0)`, `a2 -> (0,1)`, everything else `0`.
    pub fn default_z2(spec: &FuchsianSpec) -> Character {
        let mut vals = vec![vec![0, 0]; spec.abelian_rank()];
        vals[0] = vec![1, 0];
        let second = 2.min(vals.len() - 1);
        vals[second] = vec![0, 1];
        Self::from_primary(spec, &vals).expect("built-in character")
    }

    /// The zero character to `Z^d`.
    pub fn trivial(spec: &FuchsianSpec, d: usize) -> Character {
        Character {
            d,
            values: vec![SmallVec::from_elem(0, d); spec.len()],
        }
    }

    /// Coordinates in the abelianization `Z^rank`.
    pub fn universal(spec: &FuchsianSpec) -> Character {
        let n = spec.abelian_rank();
        let vals: Vec<Vec<i64>> = (0..n)
            .map(|k| (0..n).map(|j| i64::from(j == k)).collect())
            .collect();
        Self::from_primary(spec, &vals).expect("built-in character")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn value(&self, generator: usize) -> &[i64] {
        &self.values[generator]
    }

    pub fn zero(&self) -> Xi {
        SmallVec::from_elem(0, self.d)
    }

    fn check(&self, spec: &FuchsianSpec) -> Result<()> {
        let rel = character_value(spec.relation(), self)?;
        if rel.iter().any(|&x| x != 0) {
            return Err(HoroError::Config(format!(
                "character does not vanish on the relation (value {:?})",
                rel.as_slice()
            )));
        }
        Ok(())
    }

    /// Whether the values on the generators span `Z^d` (gcd of maximal minors is 1).
    pub fn is_surjective(&self) -> bool {
        let rows: Vec<Vec<i64>> = self.values.iter().map(|v| v.to_vec()).collect();
        crate::rigidity::lattice::Lattice::from_generators(self.d, &rows).index() == Some(1)
    }
}

/// Sum of the character over a word of generator indices.
pub fn character_value(word: &[usize], phi: &Character) -> Result<Xi> {
    let mut acc = phi.zero();
    for &k in word {
        let v = phi
            .values
            .get(k)
            .ok_or_else(|| HoroError::InvalidInput(format!("generator index {k} out of range")))?;
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    }
    Ok(acc)
}

/// A point of the `Z^d`-cover: a domain representative and a deck coordinate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverPoint {
    pub rep: GroupElement,
    pub xi: Xi,
}

impl CoverPoint {
    pub fn new(rep: GroupElement, xi: Xi) -> CoverPoint {
        CoverPoint { rep, xi }
    }

    /// Same deck coordinate and representatives within `tol`.
    pub fn same_point(&self, other: &CoverPoint, tol: f64) -> bool {
        self.xi == other.xi && self.rep.approx_eq(&other.rep, tol)
    }

    /// Applies the deck transformation by `n`.
    pub fn deck_shift(&self, n: &[i64]) -> CoverPoint {
        let mut p = self.clone();
        for (x, s) in p.xi.iter_mut().zip(n) {
            *x += s;
        }
        p
    }
}

/// Moves `rep` into the Dirichlet domain by left multiplication with
/// generators, subtracting their character values from `xi`.
///
/// Each step applies the generator giving the smallest distance to the
/// centre (lowest index on ties) and stops once no generator decreases
/// the distance by more than a relative `1e-12`. Returns the step count.
pub fn reduce_in_place(
    spec: &FuchsianSpec,
    phi: &Character,
    rep: &mut GroupElement,
    xi: &mut Xi,
) -> Result<usize> {
    for step in 0..MAX_REDUCTION_STEPS {
        let q = rep.cosh_dist_to_i();
        let mut best = q * (1.0 - 1e-12);
        let mut best_k = usize::MAX;
        for (k, h) in spec.generators.iter().enumerate() {
            let c = cosh_of_product(h, rep);
            if c < best {
                best = c;
                best_k = k;
            }
        }
        if best_k == usize::MAX {
            return Ok(step);
        }
        *rep = spec.generators[best_k] * *rep;
        for (x, v) in xi.iter_mut().zip(&phi.values[best_k]) {
            *x -= v;
        }
    }
    Err(HoroError::ReductionStalled {
        iterations: MAX_REDUCTION_STEPS,
        cosh_dist: rep.cosh_dist_to_i(),
    })
}

/// [`reduce_in_place`] carried out in double-double arithmetic.
///
/// Use this when `g` is known exactly as a long product, where the f64
/// version would return a representative off by `e^{d} * 1e-16`.
pub fn reduce_precise(
    spec: &FuchsianSpec,
    g: &PreciseElement,
    phi: &Character,
) -> Result<CoverPoint> {
    let mut rep = *g;
    let mut xi = phi.zero();
    let precise: Vec<PreciseElement> = spec.generators.iter().map(|&h| h.into()).collect();
    for _ in 0..MAX_REDUCTION_STEPS {
        let q = rep.frobenius_half();
        let mut best = q * (1.0 - 1e-12);
        let mut best_k = usize::MAX;
        let mut best_rep = rep;
        for (k, h) in precise.iter().enumerate() {
            let cand = h.mul(&rep);
            let c = cand.frobenius_half();
            if c < best {
                best = c;
                best_k = k;
                best_rep = cand;
            }
        }
        if best_k == usize::MAX {
            return Ok(CoverPoint {
                rep: rep.to_element(),
                xi,
            });
        }
        rep = best_rep;
        for (x, v) in xi.iter_mut().zip(&phi.values[best_k]) {
            *x -= v;
        }
    }
    Err(HoroError::ReductionStalled {
        iterations: MAX_REDUCTION_STEPS,
        cosh_dist: f64::from(rep.frobenius_half()),
    })
}

/// Deck coordinate and domain representative of `g`.
pub fn reduce(spec: &FuchsianSpec, g: &GroupElement, phi: &Character) -> Result<CoverPoint> {
    let mut rep = *g;
    let mut xi = phi.zero();
    reduce_in_place(spec, phi, &mut rep, &mut xi)?;
    Ok(CoverPoint { rep, xi })
}

/// Disk-model polar coordinates `(rho, theta)` of `g·i` about `i`.
pub fn polar_coordinates(g: &GroupElement) -> (f64, f64) {
    let (x, y) = g.base_point();
    // w = (z - i)/(z + i)
    let den = x * x + (y + 1.0) * (y + 1.0);
    let wr = (x * x + y * y - 1.0) / den;
    let wi = -2.0 * x / den;
    let theta = wi.atan2(wr).rem_euclid(2.0 * PI);
    (g.dist_to_i(), theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psl2::{flow, FlowKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn octagon_relation_and_generators() {
        let spec = FuchsianSpec::octagon();
        assert!(spec.relation_residual() < 1e-9);
        for (k, g) in spec.generators().iter().enumerate() {
            assert!(g.trace().abs() > 2.0);
            let inv = spec.generators()[spec.inverse_index(k)];
            assert!((*g * inv).approx_eq(&GroupElement::IDENTITY, 1e-12));
        }
        assert!((spec.systole() - 2.0 * (1.0 + 2f64.sqrt()).acosh()).abs() < 1e-12);
    }

    #[test]
    fn character_values() {
        let spec = FuchsianSpec::octagon();
        let phi = Character::default_z(&spec);
        assert_eq!(character_value(&[], &phi).unwrap().as_slice(), &[0]);
        assert_eq!(
            character_value(spec.relation(), &phi).unwrap().as_slice(),
            &[0]
        );
        let w = spec.parse_word("a1 b1 a1").unwrap();
        assert_eq!(character_value(&w, &phi).unwrap().as_slice(), &[2]);
        assert_eq!(spec.parse_word("A1 a1^-1 4").unwrap(), vec![4, 4, 4]);
        assert!(spec.parse_word("c3").is_err());
        assert!(phi.is_surjective());
        assert!(Character::default_z2(&spec).is_surjective());
        assert!(!Character::trivial(&spec, 1).is_surjective());
    }

    #[test]
    fn interior_points_reduce_to_themselves() {
        let spec = FuchsianSpec::octagon();
        let phi = Character::default_z(&spec);
        let h = GroupElement::from_point_and_angle(0.2, 1.3, 0.4).unwrap();
        assert!(spec.in_domain(&h));
        let p = reduce(&spec, &h, &phi).unwrap();
        assert_eq!(p.xi.as_slice(), &[0]);
        assert!(p.rep.approx_eq(&h, 0.0));
    }

    #[test]
    fn reduction_recovers_word_character() {
        let spec = FuchsianSpec::octagon();
        let phi = Character::default_z2(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let h = GroupElement::rotation(rng.gen_range(0.0..2.0 * PI))
                * flow(FlowKind::A, rng.gen_range(0.0..1.2))
                * GroupElement::rotation(rng.gen_range(0.0..2.0 * PI));
            let len = rng.gen_range(0..=12);
            let mut word: Vec<usize> = Vec::new();
            while word.len() < len {
                let k = rng.gen_range(0..8);
                if word.last().map_or(true, |&l| spec.inverse_index(l) != k) {
                    word.push(k);
                }
            }
            let g = spec.evaluate(&word).unwrap() * h;
            let p = reduce(&spec, &g, &phi).unwrap();
            assert_eq!(p.xi, character_value(&word, &phi).unwrap());
            let mut exact = PreciseElement::from(h);
            for &k in word.iter().rev() {
                exact = exact.left_mul(&spec.generators()[k]);
            }
            let p = reduce_precise(&spec, &exact, &phi).unwrap();
            assert_eq!(p.xi, character_value(&word, &phi).unwrap());
            let (x1, y1) = p.rep.base_point();
            let (x2, y2) = h.base_point();
            let d = crate::psl2::hyperbolic_distance(
                num_complex::Complex64::new(x1, y1),
                num_complex::Complex64::new(x2, y2),
            );
            assert!(d < 1e-8, "{} vs {}", p.rep, h);
            // idempotent
            let q = reduce(&spec, &p.rep, &phi).unwrap();
            assert!(q.xi.iter().all(|&x| x == 0));
        }
    }

    #[test]
    fn deck_equivariance() {
        let spec = FuchsianSpec::octagon();
        let phi = Character::default_z(&spec);
        let g = GroupElement::from_point_and_angle(3.0, 0.2, 0.3).unwrap();
        let base = reduce(&spec, &g, &phi).unwrap();
        let d = spec.parse_word("a1 b2 a1").unwrap();
        let shifted = reduce(&spec, &(spec.evaluate(&d).unwrap() * g), &phi).unwrap();
        assert_eq!(shifted.xi[0], base.xi[0] + 2);
    }

    #[test]
    fn json_round_trip_and_inconsistent_characters() {
        let spec = FuchsianSpec::octagon();
        let mut chars = BTreeMap::new();
        chars.insert("phi".to_string(), Character::default_z(&spec));
        let file = spec.to_spec_file(&chars);
        let text = serde_json::to_string(&file).unwrap();
        let (back, back_chars) = FuchsianSpec::from_json_str(&text).unwrap();
        assert_eq!(back.len(), 8);
        assert_eq!(back.abelian_rank(), 4);
        assert!(back.relation_residual() < 1e-9);
        assert_eq!(back_chars["phi"], chars["phi"]);

        let bad = r#"{"generators": [[2,1,1,1]], "relation": [0, 0]}"#;
        assert!(FuchsianSpec::from_json_str(bad).is_err());

        let mut file2 = file.clone();
        let mut vals = BTreeMap::new();
        vals.insert("a1".to_string(), vec![1]);
        vals.insert("a1^-1".to_string(), vec![1]);
        file2.characters.insert("bad".into(), vals);
        assert!(file2.build().is_err());
    }

    #[test]
    fn polar_coordinates_of_generators() {
        let spec = FuchsianSpec::octagon();
        for k in 0..8 {
            let (rho, theta) = polar_coordinates(&spec.generators()[k]);
            assert!((rho - 2.0 * (1.0 + 2f64.sqrt()).acosh()).abs() < 1e-9);
            let expected = (k as f64 * PI / 4.0).rem_euclid(2.0 * PI);
            let diff = (theta - expected).abs();
            let alt = (theta - (2.0 * PI - expected).rem_euclid(2.0 * PI)).abs();
            assert!(diff < 1e-9 || alt < 1e-9 || (2.0 * PI - diff) < 1e-9);
        }
    }
}
