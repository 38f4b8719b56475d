//! Subshifts of finite type with roof and jump potentials, discretized on
//! cylinders of a fixed depth.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HoroError, Result};

pub const DEFAULT_DEPTH: usize = 6;

/// State set given either as a count or as labels.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum States {
    Count(usize),
    Labels(Vec<String>),
}

/// A real potential on one-sided sequences.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Potential {
    Value(f64),
    Constant {
        constant: f64,
    },
    /// `base + sum_j weights[x_j] decay^j`; coordinates beyond the cylinder
    /// depth contribute their mean weight.
    Geometric {
        base: f64,
        weights: Vec<f64>,
        decay: f64,
    },
    /// Values on cylinders; a word takes the value of its longest listed prefix.
    Table(BTreeMap<String, f64>),
}

/// On-disk description of a shift model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShiftDef {
    pub states: States,
    pub transitions: Vec<Vec<u8>>,
    #[serde(default = "default_depth")]
    pub depth: usize,
    pub tau: Potential,
    /// Jump on edges `(x0, x1)`; missing edges jump by zero.
    #[serde(default)]
    pub f: BTreeMap<String, Vec<i64>>,
}

fn default_depth() -> usize {
    DEFAULT_DEPTH
}

/// Names of the models available without a file.
pub const BUILTIN_MODELS: [&str; 3] = ["full2-cosh", "golden-mean", "product2d"];

impl ShiftDef {
    /// Full 2-shift, roof `log 2`, jump `+1` from state 1 and `-1` from state 0.
    pub fn full2_cosh() -> ShiftDef {
        let mut f = BTreeMap::new();
        for (e, v) in [("00", -1), ("01", -1), ("10", 1), ("11", 1)] {
            f.insert(e.to_string(), vec![v]);
        }
        ShiftDef {
            states: States::Count(2),
            transitions: vec![vec![1, 1], vec![1, 1]],
            depth: DEFAULT_DEPTH,
            tau: Potential::Constant {
                constant: std::f64::consts::LN_2,
            },
            f,
        }
    }

    /// Golden-mean shift (no `11`) with a non-constant Hölder roof.
    pub fn golden_mean() -> ShiftDef {
        let mut f = BTreeMap::new();
        for (e, v) in [("00", 1), ("01", -1), ("10", -1)] {
            f.insert(e.to_string(), vec![v]);
        }
        ShiftDef {
            states: States::Count(2),
            transitions: vec![vec![1, 1], vec![1, 0]],
            depth: DEFAULT_DEPTH,
            tau: Potential::Geometric {
                base: 0.5,
                weights: vec![0.0, 0.4],
                decay: 0.2,
            },
            f,
        }
    }

    /// Two independent copies of the cosh model as a full 4-shift with
    /// jumps in `Z^2`. State `s` encodes the pair `(s / 2, s % 2)`.
    pub fn product2d() -> ShiftDef {
        let mut f = BTreeMap::new();
        for a in 0..4 {
            for b in 0..4 {
                let sign = |bit: usize| if bit == 1 { 1 } else { -1 };
                f.insert(format!("{a}{b}"), vec![sign(a / 2), sign(a % 2)]);
            }
        }
        ShiftDef {
            states: States::Count(4),
            transitions: vec![vec![1; 4]; 4],
            depth: DEFAULT_DEPTH,
            tau: Potential::Constant {
                constant: std::f64::consts::LN_2,
            },
            f,
        }
    }

    pub fn builtin(name: &str) -> Result<ShiftDef> {
        match name {
            "full2-cosh" => Ok(Self::full2_cosh()),
            "golden-mean" => Ok(Self::golden_mean()),
            "product2d" => Ok(Self::product2d()),
            _ => Err(HoroError::Config(format!(
                "unknown model `{name}` (built-ins: {})",
                BUILTIN_MODELS.join(", ")
            ))),
        }
    }

    pub fn from_json_str(text: &str) -> Result<ShiftDef> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_json_file(path: &Path) -> Result<ShiftDef> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Built-in name or path to a JSON file.
    pub fn load(name_or_path: &str) -> Result<ShiftDef> {
        if BUILTIN_MODELS.contains(&name_or_path) {
            Self::builtin(name_or_path)
        } else {
            let path = Path::new(name_or_path);
            let text = std::fs::read_to_string(path).map_err(|e| {
                HoroError::Config(format!(
                    "`{name_or_path}` is not one of {BUILTIN_MODELS:?} and cannot be read: {e}"
                ))
            })?;
            Self::from_json_str(&text)
                .map_err(|e| HoroError::Config(format!("model file `{name_or_path}`: {e}")))
        }
    }

    pub fn with_depth(mut self, depth: usize) -> ShiftDef {
        self.depth = depth;
        self
    }

    fn state_count(&self) -> usize {
        match &self.states {
            States::Count(n) => *n,
            States::Labels(l) => l.len(),
        }
    }

    fn parse_word(&self, key: &str) -> Result<Vec<usize>> {
        let n = self.state_count();
        let bad = || HoroError::Config(format!("cannot parse cylinder `{key}`"));
        let word: Vec<usize> = match &self.states {
            States::Labels(labels) if key.contains(',') || labels.iter().any(|l| l == key) => key
                .split(',')
                .map(|s| labels.iter().position(|l| l == s.trim()).ok_or_else(bad))
                .collect::<Result<_>>()?,
            _ if key.contains(',') => key
                .split(',')
                .map(|s| s.trim().parse::<usize>().map_err(|_| bad()))
                .collect::<Result<_>>()?,
            _ => key
                .chars()
                .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(bad))
                .collect::<Result<_>>()?,
        };
        if word.iter().any(|&s| s >= n) {
            return Err(bad());
        }
        Ok(word)
    }
}

/// A shift model evaluated on depth-`k` cylinders.
///
/// Cylinder `x0 .. x_{k-1}` has code `sum x_j n^{k-1-j}`; inadmissible
/// codes are kept with `admissible = false` so preimage codes are simple
/// arithmetic.
#[derive(Clone, Debug)]
pub struct ShiftModel {
    pub def: ShiftDef,
    pub n: usize,
    pub depth: usize,
    pub d: usize,
    pub transitions: Vec<Vec<bool>>,
    pub admissible: Vec<bool>,
    /// Roof on cylinders, after normalization.
    pub tau: Vec<f64>,
    /// Jump `f(x0, x1)` on cylinders.
    pub f: Vec<Vec<i64>>,
    /// Factor applied to the supplied roof so the pressure root at 0 is 1.
    pub roof_scale: f64,
}

impl ShiftModel {
    /// Evaluates the definition at its depth and normalizes the roof.
    pub fn new(def: ShiftDef) -> Result<ShiftModel> {
        let mut m = Self::raw(def)?;
        let beta0 = crate::thermo::pressure_root(&m, &vec![0.0; m.d])?;
        m.tau.iter_mut().for_each(|t| *t *= beta0);
        m.roof_scale = beta0;
        Ok(m)
    }

    pub fn builtin(name: &str) -> Result<ShiftModel> {
        Self::new(ShiftDef::builtin(name)?)
    }

    /// Evaluates without normalizing the roof.
    pub fn raw(def: ShiftDef) -> Result<ShiftModel> {
        let n = def.state_count();
        let k = def.depth;
        if n == 0 {
            return Err(HoroError::Config("shift has no states".into()));
        }
        if k < 2 || k > 16 {
            return Err(HoroError::Config(format!(
                "cylinder depth {k} must lie in 2..=16"
            )));
        }
        if (n as f64).powi(k as i32) > 4.0e6 {
            return Err(HoroError::Config(format!(
                "{n}^{k} cylinders is too many for a dense discretization"
            )));
        }
        if def.transitions.len() != n || def.transitions.iter().any(|r| r.len() != n) {
            return Err(HoroError::Config(format!(
                "transition matrix must be {n}x{n}"
            )));
        }
        let transitions: Vec<Vec<bool>> = def
            .transitions
            .iter()
            .map(|r| r.iter().map(|&x| x != 0).collect())
            .collect();
        if !is_primitive(&transitions) {
            return Err(HoroError::Config(
                "transition matrix is not irreducible and aperiodic".into(),
            ));
        }
        let size = n.pow(k as u32);
        let mut admissible = vec![false; size];
        let mut word = vec![0usize; k];
        for (code, adm) in admissible.iter_mut().enumerate() {
            decode(code, n, &mut word);
            *adm = word.windows(2).all(|w| transitions[w[0]][w[1]]);
        }

        let table: Option<Vec<(Vec<usize>, f64)>> = match &def.tau {
            Potential::Table(t) => Some(
                t.iter()
                    .map(|(key, &v)| Ok((def.parse_word(key)?, v)))
                    .collect::<Result<_>>()?,
            ),
            _ => None,
        };
        let mut tau = vec![0.0; size];
        for (code, t) in tau.iter_mut().enumerate() {
            if !admissible[code] {
                continue;
            }
            decode(code, n, &mut word);
            *t = match &def.tau {
                Potential::Value(c) | Potential::Constant { constant: c } => *c,
                Potential::Geometric {
                    base,
                    weights,
                    decay,
                } => {
                    if weights.len() != n || !(0.0..1.0).contains(decay) {
                        return Err(HoroError::Config(
                            "geometric roof needs one weight per state and decay in [0,1)".into(),
                        ));
                    }
                    let mean = weights.iter().sum::<f64>() / n as f64;
                    let head: f64 = word
                        .iter()
                        .enumerate()
                        .map(|(j, &s)| weights[s] * decay.powi(j as i32))
                        .sum();
                    base + head + mean * decay.powi(k as i32) / (1.0 - decay)
                }
                Potential::Table(_) => table
                    .as_ref()
                    .and_then(|entries| {
                        entries
                            .iter()
                            .filter(|(key, _)| key.len() <= k && word.starts_with(key))
                            .max_by_key(|(key, _)| key.len())
                            .map(|(_, v)| *v)
                    })
                    .ok_or_else(|| {
                        HoroError::Config(format!("roof table has no entry for cylinder {word:?}"))
                    })?,
            };
            if !(t.is_finite() && *t > 0.0) {
                return Err(HoroError::Config(format!(
                    "roof must be positive and finite, got {t} on {word:?}"
                )));
            }
        }

        let mut edges: BTreeMap<(usize, usize), Vec<i64>> = BTreeMap::new();
        let mut d = 0;
        for (key, v) in &def.f {
            let w = def.parse_word(key)?;
            if w.len() != 2 {
                return Err(HoroError::Config(format!(
                    "jump key `{key}` is not an edge"
                )));
            }
            if d != 0 && v.len() != d {
                return Err(HoroError::Config("jump vectors have mixed lengths".into()));
            }
            d = v.len();
            edges.insert((w[0], w[1]), v.clone());
        }
        let d = d.max(1);
        let zero = vec![0i64; d];
        let f = (0..size)
            .map(|code| {
                decode(code, n, &mut word);
                edges.get(&(word[0], word[1])).unwrap_or(&zero).clone()
            })
            .collect();
        Ok(ShiftModel {
            n,
            depth: k,
            d,
            transitions,
            admissible,
            tau,
            f,
            roof_scale: 1.0,
            def,
        })
    }

    pub fn size(&self) -> usize {
        self.admissible.len()
    }

    /// Code of the cylinder `(a, x0, ..., x_{k-2})`.
    #[inline]
    pub fn prepend(&self, a: usize, code: usize) -> usize {
        a * self.n.pow(self.depth as u32 - 1) + code / self.n
    }

    /// Code of the cylinder `(x1, ..., x_{k-1}, b)`.
    #[inline]
    pub fn append(&self, code: usize, b: usize) -> usize {
        (code % self.n.pow(self.depth as u32 - 1)) * self.n + b
    }

    #[inline]
    pub fn first(&self, code: usize) -> usize {
        code / self.n.pow(self.depth as u32 - 1)
    }

    #[inline]
    pub fn last(&self, code: usize) -> usize {
        code % self.n
    }

    pub fn word(&self, code: usize) -> Vec<usize> {
        let mut w = vec![0; self.depth];
        decode(code, self.n, &mut w);
        w
    }

    pub fn code(&self, word: &[usize]) -> usize {
        word.iter().fold(0, |acc, &s| acc * self.n + s)
    }

    /// Weight `-beta tau + <u, f>` on every cylinder.
    pub fn weight(&self, beta: f64, u: &[f64]) -> Vec<f64> {
        (0..self.size())
            .map(|c| {
                let jump: f64 = self.f[c].iter().zip(u).map(|(&a, b)| a as f64 * b).sum();
                -beta * self.tau[c] + jump
            })
            .collect()
    }
}

fn decode(mut code: usize, n: usize, word: &mut [usize]) {
    for slot in word.iter_mut().rev() {
        *slot = code % n;
        code /= n;
    }
}

/// Irreducible and aperiodic, i.e. some power is strictly positive.
fn is_primitive(a: &[Vec<bool>]) -> bool {
    let n = a.len();
    let mut p: Vec<Vec<bool>> = a.to_vec();
    // Wielandt bound on the primitivity exponent.
    let bound = (n - 1) * (n - 1) + 1;
    for _ in 1..bound.max(1) {
        if p.iter().all(|r| r.iter().all(|&x| x)) {
            return true;
        }
        p = (0..n)
            .map(|i| (0..n).map(|j| (0..n).any(|k| p[i][k] && a[k][j])).collect())
            .collect();
    }
    p.iter().all(|r| r.iter().all(|&x| x))
}

/// `F + F∘σ + ... + F∘σ^{n-1}` along a finite word, `F` read on
/// windows of length `depth`.
pub fn birkhoff_sum<F>(f: F, depth: usize, x: &[usize], n: usize) -> Result<f64>
where
    F: Fn(&[usize]) -> f64,
{
    if x.len() < n + depth {
        return Err(HoroError::WordTooShort {
            needed: n + depth,
            got: x.len(),
        });
    }
    Ok((0..n).map(|j| f(&x[j..j + depth])).sum())
}

/// Sum of the jump along the first `n` edges of `x`.
pub fn jump_sum(m: &ShiftModel, x: &[usize], n: usize) -> Result<Vec<i64>> {
    if x.len() < n + m.depth {
        return Err(HoroError::WordTooShort {
            needed: n + m.depth,
            got: x.len(),
        });
    }
    let mut acc = vec![0; m.d];
    for j in 0..n {
        let c = m.code(&x[j..j + m.depth]);
        for (a, v) in acc.iter_mut().zip(&m.f[c]) {
            *a += v;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn birkhoff_sum_examples() {
        let x: Vec<usize> = (0..12).map(|i| (i + 1) % 2).collect();
        let first = |w: &[usize]| w[0] as f64;
        assert_eq!(birkhoff_sum(first, 2, &x, 4).unwrap(), 2.0);
        assert_eq!(birkhoff_sum(|_| 3.0, 2, &x, 5).unwrap(), 15.0);
        assert_eq!(birkhoff_sum(first, 2, &x, 0).unwrap(), 0.0);
        assert!(matches!(
            birkhoff_sum(first, 6, &x, 10),
            Err(HoroError::WordTooShort { .. })
        ));
    }

    #[test]
    fn codes_round_trip() {
        let m = ShiftModel::raw(ShiftDef::product2d()).unwrap();
        let w = vec![3, 1, 0, 2, 2, 1];
        let c = m.code(&w);
        assert_eq!(m.word(c), w);
        assert_eq!(m.word(m.prepend(2, c)), vec![2, 3, 1, 0, 2, 2]);
        assert_eq!(m.word(m.append(c, 3)), vec![1, 0, 2, 2, 1, 3]);
        assert_eq!(m.first(c), 3);
        assert_eq!(m.last(c), 1);
        assert_eq!(m.d, 2);
    }

    #[test]
    fn admissibility_and_validation() {
        let m = ShiftModel::raw(ShiftDef::golden_mean()).unwrap();
        let count = m.admissible.iter().filter(|&&a| a).count();
        // golden-mean words of length 6: Fibonacci F(8) = 21
        assert_eq!(count, 21);
        let mut bad = ShiftDef::full2_cosh();
        bad.transitions = vec![vec![0, 1], vec![1, 0]];
        assert!(ShiftModel::raw(bad).is_err());
        let mut bad = ShiftDef::full2_cosh();
        bad.tau = Potential::Value(-1.0);
        assert!(ShiftModel::raw(bad).is_err());
    }

    #[test]
    fn json_forms() {
        let text = r#"{"states": ["a", "b"], "transitions": [[1,1],[1,1]], "depth": 3,
            "tau": {"a": 1.0, "b,a": 2.0, "b": 1.5}, "f": {"a,b": [1], "b,a": [-1]}}"#;
        let m = ShiftModel::raw(ShiftDef::from_json_str(text).unwrap()).unwrap();
        assert_eq!(m.tau[m.code(&[1, 0, 0])], 2.0);
        assert_eq!(m.tau[m.code(&[1, 1, 0])], 1.5);
        assert_eq!(m.f[m.code(&[0, 1, 1])], vec![1]);
        assert_eq!(m.f[m.code(&[0, 0, 1])], vec![0]);
        let text = r#"{"states": 2, "transitions": [[1,1],[1,1]], "tau": {"constant": 0.5}}"#;
        let def = ShiftDef::from_json_str(text).unwrap();
        assert_eq!(def.depth, DEFAULT_DEPTH);
        assert!(matches!(def.tau, Potential::Constant { .. }));
    }
}
