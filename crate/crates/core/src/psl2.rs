//! Exact algebra of PSL(2,R): one-parameter subgroups, products, a metric
//! to the identity, the Möbius action on the upper half-plane and the two
//! matrix identities used when comparing nearby horocycle orbits.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{HoroError, Result};

/// Determinant tolerance every constructed element satisfies.
pub const DET_TOL: f64 = 1e-12;

/// A real unimodular 2x2 matrix taken modulo sign.
///
/// Entries are stored with `ad - bc = 1` and the first nonzero entry of
/// `(a, b, c, d)` positive, so two representatives of the same PSL class
/// carry identical entries up to rounding.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", try_from = "[f64; 4]")]
pub struct GroupElement {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

/// The three one-parameter subgroups used throughout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowKind {
    /// Contracting horocycle flow `u_t = (1 t; 0 1)`.
    U,
    /// Expanding horocycle flow `u+_t = (1 0; t 1)`.
    Uplus,
    /// Geodesic flow `a_s = diag(e^{s/2}, e^{-s/2})`.
    A,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    /// Builds an element from any matrix with positive finite determinant,
    /// rescaling it to determinant one.
    pub fn from_matrix(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if ![a, b, c, d].iter().all(|x| x.is_finite()) {
            return Err(HoroError::InvalidInput(format!(
                "non-finite matrix entry in [{a}, {b}, {c}, {d}]"
            )));
        }
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return Err(HoroError::InvalidInput(format!(
                "matrix [{a}, {b}, {c}, {d}] has non-positive determinant {det}"
            )));
        }
        Ok(Self::normalized(a, b, c, d))
    }

    /// Rescale to det 1 and fix the sign. Caller guarantees `ad - bc > 0`.
    #[inline]
    fn normalized(a: f64, b: f64, c: f64, d: f64) -> Self {
        let det = a * d - b * c;
        let s = if (det - 1.0).abs() < 1e-15 {
            1.0
        } else {
            1.0 / det.sqrt()
        };
        Self::with_canonical_sign(a * s, b * s, c * s, d * s)
    }

    #[inline]
    fn with_canonical_sign(a: f64, b: f64, c: f64, d: f64) -> Self {
        let lead = if a != 0.0 {
            a
        } else if b != 0.0 {
            b
        } else if c != 0.0 {
            c
        } else {
            d
        };
        if lead < 0.0 {
            GroupElement {
                a: -a,
                b: -b,
                c: -c,
                d: -d,
            }
        } else {
            GroupElement { a, b, c, d }
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// Matrix product followed by determinant renormalization.
    #[inline]
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        let a = self.a * other.a + self.b * other.c;
        let b = self.a * other.b + self.b * other.d;
        let c = self.c * other.a + self.d * other.c;
        let d = self.c * other.b + self.d * other.d;
        Self::normalized(a, b, c, d)
    }

    /// The adjugate, so `g·g.inverse()` is exactly proportional to `I`.
    pub fn inverse(&self) -> GroupElement {
        Self::with_canonical_sign(self.d, -self.b, -self.c, self.a)
    }

    /// Frobenius distance to the nearer of `I` and `-I`.
    pub fn dist_id(&self) -> f64 {
        let off = self.b * self.b + self.c * self.c;
        let plus = (self.a - 1.0).powi(2) + (self.d - 1.0).powi(2) + off;
        let minus = (self.a + 1.0).powi(2) + (self.d + 1.0).powi(2) + off;
        plus.min(minus).sqrt()
    }

    /// Frobenius distance between two classes, minimized over the sign.
    pub fn dist(&self, other: &GroupElement) -> f64 {
        let p = (self.a - other.a).powi(2)
            + (self.b - other.b).powi(2)
            + (self.c - other.c).powi(2)
            + (self.d - other.d).powi(2);
        let m = (self.a + other.a).powi(2)
            + (self.b + other.b).powi(2)
            + (self.c + other.c).powi(2)
            + (self.d + other.d).powi(2);
        p.min(m).sqrt()
    }

    /// Equality in PSL(2,R) up to `tol` in every entry.
    pub fn approx_eq(&self, other: &GroupElement, tol: f64) -> bool {
        let same = (self.a - other.a).abs() <= tol
            && (self.b - other.b).abs() <= tol
            && (self.c - other.c).abs() <= tol
            && (self.d - other.d).abs() <= tol;
        let flipped = (self.a + other.a).abs() <= tol
            && (self.b + other.b).abs() <= tol
            && (self.c + other.c).abs() <= tol
            && (self.d + other.d).abs() <= tol;
        same || flipped
    }

    /// `cosh` of the hyperbolic distance from `g·i` to `i`.
    ///
    /// Equals half the squared Frobenius norm, which is how the surface
    /// reduction compares candidate translates without any square roots.
    #[inline]
    pub fn cosh_dist_to_i(&self) -> f64 {
        0.5 * (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d)
    }

    /// Hyperbolic distance from `g·i` to `i`.
    pub fn dist_to_i(&self) -> f64 {
        self.cosh_dist_to_i().max(1.0).acosh()
    }

    /// The base point `g·i` as `(x, y)` with `y > 0`.
    pub fn base_point(&self) -> (f64, f64) {
        let n = self.c * self.c + self.d * self.d;
        ((self.a * self.c + self.b * self.d) / n, 1.0 / n)
    }

    /// Angle `phi` in `[0, pi)` of the rotation part in `g = n(x,y)·k(phi)`.
    pub fn frame_angle(&self) -> f64 {
        let phi = (-self.c).atan2(self.d);
        phi.rem_euclid(std::f64::consts::PI)
    }

    /// Rotation about `i` by hyperbolic angle `theta` (the matrix `k(theta/2)`).
    pub fn rotation(theta: f64) -> GroupElement {
        let (s, c) = (0.5 * theta).sin_cos();
        Self::normalized(c, s, -s, c)
    }

    /// The element `n(x, y)·k(phi)` sending `i` to `x + iy` with frame angle `phi`.
    pub fn from_point_and_angle(x: f64, y: f64, phi: f64) -> Result<GroupElement> {
        if !(y > 0.0) || !x.is_finite() || !phi.is_finite() {
            return Err(HoroError::InvalidInput(format!(
                "point ({x}, {y}) is not in the upper half-plane"
            )));
        }
        let sy = y.sqrt();
        let n = GroupElement {
            a: sy,
            b: x / sy,
            c: 0.0,
            d: 1.0 / sy,
        };
        let (s, c) = phi.sin_cos();
        Ok(n.compose(&Self::normalized(c, s, -s, c)))
    }
}

impl Default for GroupElement {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: GroupElement) -> GroupElement {
        self.compose(&rhs)
    }
}

impl<'a> Mul<&'a GroupElement> for &'a GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: &'a GroupElement) -> GroupElement {
        self.compose(rhs)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

impl From<GroupElement> for [f64; 4] {
    fn from(g: GroupElement) -> Self {
        g.entries()
    }
}

impl TryFrom<[f64; 4]> for GroupElement {
    type Error = HoroError;
    fn try_from(m: [f64; 4]) -> Result<Self> {
        GroupElement::from_matrix(m[0], m[1], m[2], m[3])
    }
}

/// A matrix with double-double entries, kept unnormalized.
///
/// Long products of lattice generators have entries near `e^{d/2}` at
/// distance `d`, and recovering a bounded factor from such a product in
/// f64 loses about `e^d` ulps. This type carries roughly 32 digits.
#[derive(Clone, Copy, Debug)]
pub struct PreciseElement {
    m: [TwoFloat; 4],
}

impl PreciseElement {
    pub fn mul(&self, other: &PreciseElement) -> PreciseElement {
        let [a, b, c, d] = self.m;
        let [e, f, g, h] = other.m;
        PreciseElement {
            m: [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h],
        }
    }

    /// `h·self` for an f64 element `h`.
    #[inline]
    pub fn left_mul(&self, h: &GroupElement) -> PreciseElement {
        PreciseElement::from(*h).mul(self)
    }

    pub fn det(&self) -> TwoFloat {
        self.m[0] * self.m[3] - self.m[1] * self.m[2]
    }

    /// `cosh d(g·i, i)` scaled by `det`.
    pub fn frobenius_half(&self) -> TwoFloat {
        (self.m[0] * self.m[0]
            + self.m[1] * self.m[1]
            + self.m[2] * self.m[2]
            + self.m[3] * self.m[3])
            / 2.0
    }

    /// Rounds to the nearest unimodular f64 element.
    pub fn to_element(&self) -> GroupElement {
        let s = self.det().sqrt();
        let e: Vec<f64> = self.m.iter().map(|&x| f64::from(x / s)).collect();
        GroupElement::normalized(e[0], e[1], e[2], e[3])
    }
}

impl From<GroupElement> for PreciseElement {
    fn from(g: GroupElement) -> Self {
        PreciseElement {
            m: [g.a, g.b, g.c, g.d].map(TwoFloat::from),
        }
    }
}

/// Element of a one-parameter subgroup, without input validation.
#[inline]
pub fn flow(kind: FlowKind, t: f64) -> GroupElement {
    match kind {
        FlowKind::U => GroupElement {
            a: 1.0,
            b: t,
            c: 0.0,
            d: 1.0,
        },
        FlowKind::Uplus => GroupElement {
            a: 1.0,
            b: 0.0,
            c: t,
            d: 1.0,
        },
        FlowKind::A => {
            let e = (0.5 * t).exp();
            GroupElement {
                a: e,
                b: 0.0,
                c: 0.0,
                d: 1.0 / e,
            }
        }
    }
}

/// `u_t`, `u+_t` or `a_t` for finite `t`.
pub fn make_flow(kind: FlowKind, t: f64) -> Result<GroupElement> {
    if !t.is_finite() {
        return Err(HoroError::InvalidInput(format!(
            "flow time {t} is not finite"
        )));
    }
    Ok(flow(kind, t))
}

/// Product `g·h`.
pub fn compose(g: &GroupElement, h: &GroupElement) -> GroupElement {
    g.compose(h)
}

pub fn dist_id(g: &GroupElement) -> f64 {
    g.dist_id()
}

/// Reparametrized time and correction from `u+_{-e^{-s} r} u_t = u_{beta} g_t`.
#[derive(Clone, Copy, Debug)]
pub struct TimeChange {
    pub beta: f64,
    pub gee: GroupElement,
}

/// Solves `u+_{-e^{-s} r}·u_t = u_{beta(t)}·g_t` in closed form.
///
/// `beta(t) = t / (1 - e^{-s} r t)` and
/// `g_t = ((1 - e^{-s} r t)^{-1}, 0; -e^{-s} r, 1 - e^{-s} r t)`.
pub fn change_of_time(s: f64, r: f64, t: f64) -> Result<TimeChange> {
    if !(s.is_finite() && r.is_finite() && t.is_finite()) {
        return Err(HoroError::InvalidInput(format!(
            "non-finite time change arguments s={s}, r={r}, t={t}"
        )));
    }
    let k = (-s).exp() * r;
    let den = 1.0 - k * t;
    if den.abs() <= 1e-9 {
        return Err(HoroError::SingularTime { denominator: den });
    }
    let gee = GroupElement::from_matrix(1.0 / den, 0.0, -k, den)?;
    Ok(TimeChange { beta: t / den, gee })
}

/// `u_{-t}·g·u_t`, evaluated from the closed form
/// `(x - tz, y + t(x - w) - t^2 z; z, w + tz)`.
pub fn conjugate_by_u(g: &GroupElement, t: f64) -> GroupElement {
    let (x, y, z, w) = (g.a, g.b, g.c, g.d);
    GroupElement::normalized(x - t * z, y + t * (x - w) - t * t * z, z, w + t * z)
}

/// Möbius action `(az + b)/(cz + d)` on the upper half-plane.
pub fn mobius_act(g: &GroupElement, z: Complex64) -> Result<Complex64> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(HoroError::InvalidInput(format!(
            "point {z} is not in the upper half-plane"
        )));
    }
    let num = Complex64::new(g.a, 0.0) * z + g.b;
    let den = Complex64::new(g.c, 0.0) * z + g.d;
    Ok(num / den)
}

/// Hyperbolic distance between two points of the upper half-plane.
pub fn hyperbolic_distance(z: Complex64, w: Complex64) -> f64 {
    let ch = 1.0 + (z - w).norm_sqr() / (2.0 * z.im * w.im);
    ch.max(1.0).acosh()
}
