//! Subgroups given as joint kernels of characters with optional moduli, and
//! their commensurability indices.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HoroError, Result};
use crate::rigidity::lattice::{integer_kernel, Lattice};
use crate::surface::{Character, FuchsianSpec, GroupSpecFile};

/// Names accepted by [`SubgroupSpec::builtin`].
pub const BUILTIN_SUBGROUPS: [&str; 4] = ["gamma0", "kerphi", "kerphi_psi2", "kerphi_b"];

/// `{γ : χ_j(γ) ≡ 0 mod m_j for all j}`, with `m_j = 0` meaning equality
/// in `Z`.
#[derive(Clone, Debug)]
pub struct SubgroupSpec {
    pub base: FuchsianSpec,
    pub characters: Vec<(Character, u64)>,
}

/// One character of a subgroup file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelEntry {
    pub values: BTreeMap<String, Vec<i64>>,
    #[serde(default)]
    pub modulus: u64,
}

/// On-disk subgroup description; the base group defaults to the octagon.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubgroupFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupSpecFile>,
    pub kernel_of: Vec<KernelEntry>,
}

/// Image of the abelianization under all characters of a subgroup: free
/// coordinates first, then residues.
pub type Class = Vec<i64>;

impl SubgroupSpec {
    pub fn new(base: FuchsianSpec, characters: Vec<(Character, u64)>) -> SubgroupSpec {
        SubgroupSpec { base, characters }
    }

    /// The whole group.
    pub fn whole(base: FuchsianSpec) -> SubgroupSpec {
        SubgroupSpec::new(base, Vec::new())
    }

    fn named(base: &FuchsianSpec, entries: &[(&str, i64, u64)]) -> Result<SubgroupSpec> {
        let characters = entries
            .iter()
            .map(|&(gen, v, m)| {
                let vals = BTreeMap::from([(gen.to_string(), vec![v])]);
                Ok((Character::from_named_values(base, &vals)?, m))
            })
            .collect::<Result<_>>()?;
        Ok(SubgroupSpec::new(base.clone(), characters))
    }

    /// Built-in subgroups of the octagon group: `gamma0` (everything),
    /// `kerphi` (`a1 ↦ 1`), `kerphi_psi2` (additionally `b1 ↦ 1 mod 2`)
    /// and `kerphi_b` (`b1 ↦ 1`).
    pub fn builtin(name: &str) -> Result<SubgroupSpec> {
        let base = FuchsianSpec::octagon();
        match name {
            "gamma0" => Ok(SubgroupSpec::whole(base)),
            "kerphi" => Self::named(&base, &[("a1", 1, 0)]),
            "kerphi_psi2" => Self::named(&base, &[("a1", 1, 0), ("b1", 1, 2)]),
            "kerphi_b" => Self::named(&base, &[("b1", 1, 0)]),
            _ => Err(HoroError::Config(format!(
                "unknown subgroup `{name}` (built-ins: {})",
                BUILTIN_SUBGROUPS.join(", ")
            ))),
        }
    }

    pub fn from_file(file: &SubgroupFile) -> Result<SubgroupSpec> {
        let base = match &file.group {
            Some(g) => g.build()?.0,
            None => FuchsianSpec::octagon(),
        };
        let characters = file
            .kernel_of
            .iter()
            .map(|e| Ok((Character::from_named_values(&base, &e.values)?, e.modulus)))
            .collect::<Result<_>>()?;
        Ok(SubgroupSpec::new(base, characters))
    }

    pub fn from_json_str(text: &str) -> Result<SubgroupSpec> {
        let file: SubgroupFile = serde_json::from_str(text)
            .map_err(|e| HoroError::Config(format!("subgroup file: {e}")))?;
        Self::from_file(&file)
    }

    /// A built-in name or a path to a subgroup file.
    pub fn load(name_or_path: &str) -> Result<SubgroupSpec> {
        if BUILTIN_SUBGROUPS.contains(&name_or_path) {
            return Self::builtin(name_or_path);
        }
        let path = Path::new(name_or_path);
        let text = std::fs::read_to_string(path).map_err(|e| {
            HoroError::Config(format!(
                "`{name_or_path}` is not one of {BUILTIN_SUBGROUPS:?} and cannot be read: {e}"
            ))
        })?;
        Self::from_json_str(&text)
    }

    /// Rows over the primary generators, each with its modulus.
    fn components(&self) -> Vec<(Vec<i64>, u64)> {
        let rank = self.base.abelian_rank();
        self.characters
            .iter()
            .flat_map(|(ch, m)| {
                (0..ch.d()).map(move |j| ((0..rank).map(|k| ch.value(k)[j]).collect(), *m))
            })
            .collect()
    }

    /// Class of an element of the abelianization `Z^rank`.
    pub fn class(&self, v: &[i64]) -> Class {
        class_with(&self.components(), v)
    }

    /// Image of the subgroup in the abelianization, as a lattice.
    pub fn lattice(&self) -> Lattice {
        let rank = self.base.abelian_rank();
        let comps = self.components();
        if comps.is_empty() {
            return Lattice::full(rank);
        }
        let mods: Vec<u64> = comps.iter().filter(|c| c.1 != 0).map(|c| c.1).collect();
        let extra = mods.len();
        // [A_free 0; A_mod -diag(m)] acting on (v, t).
        let mut matrix = Vec::new();
        let mut slot = 0;
        for (row, m) in &comps {
            let mut r = row.clone();
            r.extend(std::iter::repeat(0).take(extra));
            if *m != 0 {
                r[rank + slot] = -(*m as i64);
                slot += 1;
            }
            matrix.push(r);
        }
        let kernel = integer_kernel(&matrix, rank + extra);
        let gens: Vec<Vec<i64>> = kernel.into_iter().map(|v| v[..rank].to_vec()).collect();
        Lattice::from_generators(rank, &gens)
    }

    /// `[Γ₀ : Γ]`, `None` when infinite.
    pub fn index_in_base(&self) -> Option<u128> {
        self.lattice().index()
    }

    /// Order of the image of the subgroup `l` under this subgroup's
    /// characters, i.e. `[L : L ∩ ker]`; `None` when infinite.
    fn image_order(&self, l: &Lattice) -> Option<u128> {
        let comps = self.components();
        let basis = l.basis();
        let mut residue_images = Vec::new();
        let mods: Vec<u64> = comps.iter().filter(|c| c.1 != 0).map(|c| c.1).collect();
        for v in &basis {
            let class = self.class(v);
            let n_free = comps.len() - mods.len();
            if class[..n_free].iter().any(|&x| x != 0) {
                return None;
            }
            residue_images.push(class[n_free..].to_vec());
        }
        if mods.is_empty() {
            return Some(1);
        }
        for (j, &m) in mods.iter().enumerate() {
            let mut e = vec![0; mods.len()];
            e[j] = m as i64;
            residue_images.push(e);
        }
        let span = Lattice::from_generators(mods.len(), &residue_images);
        let total: u128 = mods.iter().map(|&m| m as u128).product();
        Some(total / span.index().expect("moduli give full rank"))
    }

    fn check_compatible(&self, other: &SubgroupSpec) -> Result<()> {
        if self.base.len() != other.base.len()
            || self.base.abelian_rank() != other.base.abelian_rank()
            || self
                .base
                .generators()
                .iter()
                .zip(other.base.generators())
                .any(|(a, b)| !a.approx_eq(b, 1e-12))
        {
            return Err(HoroError::InvalidInput(
                "subgroups live in different base groups".into(),
            ));
        }
        Ok(())
    }
}

fn class_with(comps: &[(Vec<i64>, u64)], v: &[i64]) -> Class {
    let mut free = Vec::new();
    let mut residues = Vec::new();
    for (row, m) in comps {
        let x: i64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
        if *m == 0 {
            free.push(x);
        } else {
            residues.push(x.rem_euclid(*m as i64));
        }
    }
    free.extend(residues);
    free
}

/// `([Γ₁ : Γ₁ ∩ Γ₂'], [Γ₂' : Γ₁ ∩ Γ₂'])` with `Γ₂' = g₀⁻¹ Γ₂ g₀`.
///
/// Both subgroups contain the commutator subgroup, so conjugation by a
/// word of the base group fixes `Γ₂` and the indices reduce to lattice
/// arithmetic in the abelianization.
pub fn intersection_index(
    s1: &SubgroupSpec,
    s2: &SubgroupSpec,
    g0: &[usize],
) -> Result<(Option<u128>, Option<u128>)> {
    s1.check_compatible(s2)?;
    if let Some(&k) = g0.iter().find(|&&k| k >= s1.base.len()) {
        return Err(HoroError::InvalidInput(format!(
            "g0 uses unknown generator {k}"
        )));
    }
    let l1 = s1.lattice();
    let l2 = s2.lattice();
    Ok((s2.image_order(&l1), s1.image_order(&l2)))
}

/// Abelian image of a word.
pub fn abelian_image(spec: &FuchsianSpec, word: &[usize]) -> Vec<i64> {
    let rank = spec.abelian_rank();
    let mut v = vec![0; rank];
    for &k in word {
        let (base, sign) = if k < rank {
            (k, 1)
        } else {
            (spec.inverse_index(k), -1)
        };
        if base < rank {
            v[base] += sign;
        }
    }
    v
}

/// Coset count of `Γ₁ ∩ Γ₂'` in `Γ₁` seen among reduced words of length at
/// most `max_len`, by enumeration.
///
/// Returns the count for each length bound `0..=max_len`. A sequence that
/// has stopped growing suggests a finite index; steady growth an infinite
/// one.
pub fn coset_counts_bruteforce(
    s1: &SubgroupSpec,
    s2: &SubgroupSpec,
    g0: &[usize],
    max_len: usize,
) -> Result<Vec<usize>> {
    s1.check_compatible(s2)?;
    let spec = &s1.base;
    let rank = spec.abelian_rank();
    let g0_inv = spec.invert_word(g0);
    let mut per_len: Vec<HashSet<Class>> = vec![HashSet::new(); max_len + 1];
    let (c1, c2) = (s1.components(), s2.components());
    let zero1 = class_with(&c1, &vec![0; rank]);
    // The conjugate g0 γ g0^-1 has abelian image a(g0) + a(γ) + a(g0^-1).
    let outer: Vec<i64> = abelian_image(spec, g0)
        .iter()
        .zip(abelian_image(spec, &g0_inv))
        .map(|(a, b)| a + b)
        .collect();
    let letters: Vec<Vec<i64>> = (0..spec.len()).map(|k| abelian_image(spec, &[k])).collect();
    // DFS over reduced words with a running abelian image; each word in Γ₁
    // contributes the coset Γ₂' γ, read off from the class of g₀ γ g₀⁻¹.
    let mut stack: Vec<(usize, Option<usize>, Vec<i64>)> = vec![(0, None, vec![0; rank])];
    while let Some((len, last, v)) = stack.pop() {
        if class_with(&c1, &v) == zero1 {
            let conj: Vec<i64> = v.iter().zip(&outer).map(|(a, b)| a + b).collect();
            per_len[len].insert(class_with(&c2, &conj));
        }
        if len == max_len {
            continue;
        }
        for k in 0..spec.len() {
            if last.is_some_and(|l| spec.inverse_index(l) == k) {
                continue;
            }
            let w: Vec<i64> = v.iter().zip(&letters[k]).map(|(a, b)| a + b).collect();
            stack.push((len + 1, Some(k), w));
        }
    }
    let mut seen: HashSet<Class> = HashSet::new();
    Ok(per_len
        .into_iter()
        .map(|set| {
            seen.extend(set);
            seen.len()
        })
        .collect())
}

/// Reads an index off enumeration counts: finite when the last two even
/// length bounds agree.
pub fn index_from_counts(counts: &[usize]) -> Option<u128> {
    let n = counts.len();
    if n < 3 {
        return None;
    }
    (counts[n - 1] == counts[n - 3]).then(|| counts[n - 1] as u128)
}
