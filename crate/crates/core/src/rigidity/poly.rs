//! Real polynomials of degree at most three and the sublevel-set bound
//! `|{x ∈ J : |p(x)| < ε}| ≤ C (ε / sup_J |p|)^α |J|` with
//! `C = k (k+1)^{1/k}`, `α = 1/k`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HoroError, Result};
use crate::flows::Flow;
use crate::surface::CoverPoint;

pub const MAX_DEGREE: usize = 3;

/// Polynomial `c0 + c1 x + ...` with nonzero leading coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Poly {
    type Error = HoroError;
    fn try_from(v: Vec<f64>) -> Result<Poly> {
        Poly::new(v)
    }
}

impl From<Poly> for Vec<f64> {
    fn from(p: Poly) -> Vec<f64> {
        p.coeffs
    }
}

impl Poly {
    /// Trailing zeros are dropped; the zero polynomial has no coefficients.
    pub fn new(mut coeffs: Vec<f64>) -> Result<Poly> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(HoroError::InvalidInput("non-finite coefficient".into()));
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.len() > MAX_DEGREE + 1 {
            return Err(HoroError::InvalidInput(format!(
                "degree {} exceeds {MAX_DEGREE}",
                coeffs.len() - 1
            )));
        }
        Ok(Poly { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree, with 0 for constants including zero.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| i as f64 * c)
            .collect();
        Poly::new(coeffs).expect("derivative of a valid polynomial")
    }

    /// Real roots of the derivative strictly inside `(a, b)`, sorted.
    fn critical_points(&self, a: f64, b: f64) -> Vec<f64> {
        let d = self.derivative();
        let mut roots = match d.coeffs.as_slice() {
            [c0, c1] => vec![-c0 / c1],
            [c0, c1, c2] => quadratic_roots(*c2, *c1, *c0),
            _ => Vec::new(),
        };
        roots.retain(|x| *x > a && *x < b);
        roots.sort_by(f64::total_cmp);
        roots
    }

    /// `sup_{[a, b]} |p|`, attained at an endpoint or a critical point.
    pub fn sup_abs(&self, a: f64, b: f64) -> f64 {
        self.critical_points(a, b)
            .into_iter()
            .chain([a, b])
            .map(|x| self.eval(x).abs())
            .fold(0.0, f64::max)
    }

    /// Lebesgue measure of `{x ∈ [a, b] : |p(x)| < eps}`.
    ///
    /// Splits `[a, b]` at the critical points; on each monotone piece the
    /// sublevel set is an interval whose ends are found by bisection.
    pub fn sublevel_measure(&self, a: f64, b: f64, eps: f64) -> f64 {
        let mut cuts = vec![a];
        cuts.extend(self.critical_points(a, b));
        cuts.push(b);
        cuts.windows(2)
            .map(|w| {
                let (l, r) = (w[0], w[1]);
                let sign = if self.eval(r) >= self.eval(l) {
                    1.0
                } else {
                    -1.0
                };
                let g = |x: f64| sign * self.eval(x);
                let lo = crossing(&g, l, r, -eps);
                let hi = crossing(&g, l, r, eps);
                (hi - lo).max(0.0)
            })
            .sum()
    }
}

/// Real roots of `a x^2 + b x + c`, `a != 0`, by the cancellation-free formula.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

/// Smallest `x` in `[l, r]` with `g(x) ≥ level` for nondecreasing `g`.
fn crossing<G: Fn(f64) -> f64>(g: &G, l: f64, r: f64, level: f64) -> f64 {
    if g(l) >= level {
        return l;
    }
    if g(r) < level {
        return r;
    }
    let (mut lo, mut hi) = (l, r);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return hi;
        }
        if g(mid) >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// Constants `(C, α) = (k (k+1)^{1/k}, 1/k)` for degree at most `k ≥ 1`.
pub fn good_constants(k: usize) -> (f64, f64) {
    let k = k.max(1) as f64;
    (k * (k + 1.0).powf(1.0 / k), 1.0 / k)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GoodCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub c: f64,
    pub alpha: f64,
    pub sup: f64,
    pub pass: bool,
}

/// Sublevel-set measure against the `(C, α)` bound for `k = max(1, deg p)`.
pub fn c_alpha_good_check(p: &Poly, j: (f64, f64), eps: f64) -> Result<GoodCheck> {
    let (a, b) = j;
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(HoroError::InvalidInput(format!(
            "interval [{a}, {b}] must have positive length"
        )));
    }
    if !(eps > 0.0) {
        return Err(HoroError::InvalidInput(format!(
            "eps {eps} must be positive"
        )));
    }
    let sup = p.sup_abs(a, b);
    if p.is_zero() || sup == 0.0 {
        return Err(HoroError::Degenerate(
            "polynomial vanishes identically on the interval".into(),
        ));
    }
    let (c, alpha) = good_constants(p.degree());
    let lhs = p.sublevel_measure(a, b, eps);
    let rhs = c * (eps / sup).powf(alpha) * (b - a);
    Ok(GoodCheck {
        lhs,
        rhs,
        c,
        alpha,
        sup,
        pass: lhs <= rhs,
    })
}

/// Random instance: degree uniform in `0..=3`, coefficients uniform in
/// `[-1, 1]`, an interval inside `[-10, 10]` and `eps` uniform in `(0, sup)`.
pub fn random_good_instance<R: Rng + ?Sized>(rng: &mut R) -> (Poly, (f64, f64), f64) {
    loop {
        let deg = rng.gen_range(0..=MAX_DEGREE);
        let mut coeffs: Vec<f64> = (0..=deg).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if coeffs[deg] == 0.0 {
            coeffs[deg] = 1.0;
        }
        let p = Poly::new(coeffs).expect("finite coefficients");
        let x: f64 = rng.gen_range(-10.0..10.0);
        let y: f64 = rng.gen_range(-10.0..10.0);
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        if b - a < 1e-9 {
            continue;
        }
        let sup = p.sup_abs(a, b);
        if !(sup > 0.0) {
            continue;
        }
        let eps = sup * rng.gen::<f64>();
        if eps > 0.0 {
            return (p, (a, b), eps);
        }
    }
}

/// Empirical form of `∫ χ_K |Θ| ≥ C ∫ χ_K · sup |Θ|` over `[0, T]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeakGood {
    pub lhs: f64,
    /// `∫ χ_K`.
    pub return_mass: f64,
    pub sup: f64,
    pub rhs_unit: f64,
    /// `lhs / (return_mass · sup)`; `None` when nothing returned to `K`.
    pub c_est: Option<f64>,
    pub underpowered: bool,
}

/// Midpoint quadrature on `n` cells of `[0, t]` given `χ_K` at the midpoints.
pub fn weak_good_from_indicator(indicator: &[bool], theta: &Poly, t: f64) -> Result<WeakGood> {
    if !(t > 0.0) || indicator.is_empty() {
        return Err(HoroError::InvalidInput(
            "need a positive horizon and at least one cell".into(),
        ));
    }
    let h = t / indicator.len() as f64;
    let mut lhs = 0.0;
    let mut mass = 0.0;
    for (k, &inside) in indicator.iter().enumerate() {
        if inside {
            let x = (k as f64 + 0.5) * h;
            lhs += h * theta.eval(x).abs();
            mass += h;
        }
    }
    let sup = theta.sup_abs(0.0, t);
    let rhs_unit = mass * sup;
    let c_est = (rhs_unit > 0.0).then(|| lhs / rhs_unit);
    Ok(WeakGood {
        lhs,
        return_mass: mass,
        sup,
        rhs_unit,
        c_est,
        underpowered: mass == 0.0,
    })
}

/// [`weak_good_from_indicator`] along the horocycle orbit of `p`.
pub fn weak_good_empirical<K>(
    flow: &Flow,
    p: &CoverPoint,
    k: K,
    theta: &Poly,
    t: f64,
    dt: f64,
) -> Result<WeakGood>
where
    K: Fn(&CoverPoint) -> bool,
{
    let cum = flow.cumulative_birkhoff(p, |q| f64::from(u8::from(k(q))), t, dt)?;
    let indicator: Vec<bool> = cum.windows(2).map(|w| w[1] > w[0]).collect();
    weak_good_from_indicator(&indicator, theta, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng_for;

    fn poly(c: &[f64]) -> Poly {
        Poly::new(c.to_vec()).unwrap()
    }

    #[test]
    fn degree_follows_trailing_coefficient() {
        assert_eq!(poly(&[1.0, 2.0, 0.0, 0.0]).degree(), 1);
        assert!(poly(&[0.0]).is_zero());
        assert!(Poly::new(vec![1.0, 0.0, 0.0, 0.0, 2.0]).is_err());
    }

    #[test]
    fn good_check_examples() {
        let r = c_alpha_good_check(&poly(&[0.0, 1.0]), (0.0, 1.0), 0.1).unwrap();
        assert!((r.lhs - 0.1).abs() < 1e-14);
        assert!((r.rhs - 0.2).abs() < 1e-14);
        assert!(r.pass);
        let r = c_alpha_good_check(&poly(&[3.0]), (-1.0, 2.0), 2.0).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.pass);
        let r = c_alpha_good_check(&poly(&[0.0, 0.0, 1.0]), (-1.0, 1.0), 0.01).unwrap();
        assert!((r.lhs - 0.2).abs() < 1e-14);
        assert!((r.rhs - 2.0 * 3f64.sqrt() * 0.1 * 2.0).abs() < 1e-12);
        assert!(r.pass);
        assert!(matches!(
            c_alpha_good_check(&poly(&[]), (0.0, 1.0), 0.1),
            Err(HoroError::Degenerate(_))
        ));
        assert!(c_alpha_good_check(&poly(&[1.0]), (1.0, 1.0), 0.1).is_err());
    }

    #[test]
    fn sublevel_matches_grid_count() {
        // x^3 - x on [-2, 2] with eps 0.3: compare with a fine grid.
        let p = poly(&[0.0, -1.0, 0.0, 1.0]);
        let exact = p.sublevel_measure(-2.0, 2.0, 0.3);
        let n = 2_000_000;
        let h = 4.0 / n as f64;
        let grid = (0..n)
            .filter(|&k| p.eval(-2.0 + (k as f64 + 0.5) * h).abs() < 0.3)
            .count() as f64
            * h;
        assert!((exact - grid).abs() < 1e-5, "{exact} vs {grid}");
        assert!((p.sup_abs(-2.0, 2.0) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn weak_good_closed_forms() {
        let one = poly(&[1.0]);
        let r = weak_good_from_indicator(&[true, false, true, true], &one, 2.0).unwrap();
        assert_eq!(r.c_est, Some(1.0));
        let lin = poly(&[0.0, 1.0]);
        let r = weak_good_from_indicator(&vec![true; 1000], &lin, 7.0).unwrap();
        assert!((r.c_est.unwrap() - 0.5).abs() < 1e-12);
        let r = weak_good_from_indicator(&[false; 4], &lin, 1.0).unwrap();
        assert!(r.underpowered && r.c_est.is_none());
    }

    #[test]
    fn random_instances_respect_the_bound() {
        let mut rng = rng_for(2, 0);
        for _ in 0..2000 {
            let (p, j, eps) = random_good_instance(&mut rng);
            let r = c_alpha_good_check(&p, j, eps).unwrap();
            assert!(r.pass, "{p:?} {j:?} {eps} {r:?}");
        }
    }
}
