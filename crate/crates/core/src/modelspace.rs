//! Constant-curvature comparison geometry.
//!
//! `sin_K` solves the Jacobi equation `f'' + K f = 0` with `f(0) = 0`,
//! `f'(0) = 1`; `cot_K = sin_K' / sin_K`. Everything here is a pure function
//! of its arguments.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;

/// Below this value of `r * sqrt(|K|)` the comparison functions switch to
/// their Taylor series.
const SERIES_SWITCH: f64 = 1e-4;

/// A radius bound that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Radius<T> {
    Finite(T),
    Unbounded,
}

impl<T: Scalar> Radius<T> {
    pub fn min(self, other: Self) -> Self {
        match (self, other) {
            (Radius::Finite(a), Radius::Finite(b)) => Radius::Finite(a.min(b)),
            (Radius::Finite(a), Radius::Unbounded) | (Radius::Unbounded, Radius::Finite(a)) => Radius::Finite(a),
            (Radius::Unbounded, Radius::Unbounded) => Radius::Unbounded,
        }
    }

    pub fn finite(self) -> Option<T> {
        match self {
            Radius::Finite(r) => Some(r),
            Radius::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Radius::Unbounded)
    }

    /// Strict containment `r < R`.
    pub fn exceeds(self, r: T) -> bool {
        match self {
            Radius::Finite(bound) => r < bound,
            Radius::Unbounded => r.is_finite(),
        }
    }

    pub fn scale(self, factor: T) -> Self {
        match self {
            Radius::Finite(r) => Radius::Finite(r * factor),
            Radius::Unbounded => Radius::Unbounded,
        }
    }

    /// Finite radius, or `fallback` when unbounded.
    pub fn or(self, fallback: T) -> T {
        self.finite().unwrap_or(fallback)
    }
}

/// `π / (2 sqrt(K⁺))`, unbounded for `K <= 0`.
pub fn convexity_radius<T: Scalar>(k: T) -> Radius<T> {
    let kp = k.max(T::zero());
    if kp > T::zero() {
        Radius::Finite(T::FRAC_PI_2() / kp.sqrt())
    } else {
        Radius::Unbounded
    }
}

/// Simply connected model space of dimension `n` and constant curvature `k`,
/// with an injectivity radius that may be lowered (e.g. for quotients or
/// products).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpace<T> {
    n: usize,
    k: T,
    inj: Radius<T>,
}

impl<T: Scalar> ModelSpace<T> {
    pub fn new(n: usize, k: T) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid(format!("dimension must be at least 2, got {n}")));
        }
        if !k.is_finite() {
            return Err(domain("curvature must be finite"));
        }
        let inj = if k > T::zero() { Radius::Finite(T::PI() / k.sqrt()) } else { Radius::Unbounded };
        Ok(Self { n, k, inj })
    }

    /// Overrides the injectivity radius. It may only shrink.
    pub fn with_injectivity(mut self, inj: Radius<T>) -> Result<Self> {
        if let Radius::Finite(r) = inj {
            if !(r > T::zero()) {
                return Err(domain("injectivity radius must be positive"));
            }
        }
        self.inj = self.inj.min(inj);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn curvature(&self) -> T {
        self.k
    }

    pub fn injectivity(&self) -> Radius<T> {
        self.inj
    }

    pub fn admissible_radius(&self) -> Radius<T> {
        admissible_radius(self)
    }

    pub fn sin_k(&self, r: T) -> Result<T> {
        sin_k(self.k, r)
    }

    pub fn cot_k(&self, r: T) -> Result<T> {
        cot_k(self.k, r)
    }
}

/// Curvature bracket `kappa <= K` used by the comparison inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonPair<T> {
    kappa: T,
    k: T,
}

impl<T: Scalar> ComparisonPair<T> {
    pub fn new(kappa: T, k: T) -> Result<Self> {
        if !(kappa <= k) {
            return Err(Error::Invalid(format!("comparison pair needs kappa <= K, got {kappa} > {k}")));
        }
        Ok(Self { kappa, k })
    }

    /// The degenerate bracket `kappa = K`.
    pub fn exact(k: T) -> Self {
        Self { kappa: k, k }
    }

    pub fn lower(&self) -> T {
        self.kappa
    }

    pub fn upper(&self) -> T {
        self.k
    }

    pub fn upper_positive_part(&self) -> T {
        self.k.max(T::zero())
    }

    /// Errors unless `kappa <= model <= K`.
    pub fn check_brackets(&self, model: T) -> Result<()> {
        if self.kappa <= model && model <= self.k {
            Ok(())
        } else {
            Err(Error::Bracket {
                kappa: self.kappa.to_f64_lossy(),
                model: model.to_f64_lossy(),
                upper: self.k.to_f64_lossy(),
            })
        }
    }
}

fn check_radius<T: Scalar>(k: T, r: T) -> Result<()> {
    if !(r >= T::zero()) || !r.is_finite() {
        return Err(domain(format!("radius must be finite and nonnegative, got {r}")));
    }
    if k > T::zero() && r * k.sqrt() >= T::PI() {
        return Err(domain(format!("r sqrt(K) = {} reaches the first conjugate point", r * k.sqrt())));
    }
    Ok(())
}

fn use_series<T: Scalar>(k: T, r: T) -> bool {
    r * k.abs().sqrt() < T::lit(SERIES_SWITCH)
}

/// `sin_K(r)`: `sin(r√K)/√K`, `r`, or `sinh(r√-K)/√-K`.
pub fn sin_k<T: Scalar>(k: T, r: T) -> Result<T> {
    check_radius(k, r)?;
    Ok(sin_k_unchecked(k, r))
}

pub(crate) fn sin_k_unchecked<T: Scalar>(k: T, r: T) -> T {
    if k == T::zero() {
        return r;
    }
    if use_series(k, r) {
        let x = k * r * r;
        return r * (T::one() - x / T::lit(6.0) + x * x / T::lit(120.0) - x * x * x / T::lit(5040.0));
    }
    if k > T::zero() {
        let s = k.sqrt();
        (r * s).sin() / s
    } else {
        let s = (-k).sqrt();
        (r * s).sinh() / s
    }
}

/// `sin_K'(r)`: `cos(r√K)`, `1`, or `cosh(r√-K)`.
pub fn cos_k<T: Scalar>(k: T, r: T) -> Result<T> {
    check_radius(k, r)?;
    Ok(cos_k_unchecked(k, r))
}

pub(crate) fn cos_k_unchecked<T: Scalar>(k: T, r: T) -> T {
    if k == T::zero() {
        T::one()
    } else if k > T::zero() {
        (r * k.sqrt()).cos()
    } else {
        (r * (-k).sqrt()).cosh()
    }
}

/// `cot_K(r) = sin_K'(r) / sin_K(r)`.
pub fn cot_k<T: Scalar>(k: T, r: T) -> Result<T> {
    check_radius(k, r)?;
    if r == T::zero() {
        return Err(domain("cot_K is singular at r = 0"));
    }
    Ok(cot_k_unchecked(k, r))
}

pub(crate) fn cot_k_unchecked<T: Scalar>(k: T, r: T) -> T {
    if k == T::zero() {
        return r.recip();
    }
    if use_series(k, r) {
        return (T::one() + rcot_minus_one_series(k * r * r)) / r;
    }
    if k > T::zero() {
        let s = k.sqrt();
        s / (r * s).tan()
    } else {
        let s = (-k).sqrt();
        s / (r * s).tanh()
    }
}

/// `r cot_K(r) - 1 = -x/3 - x²/45 - 2x³/945 - ...` with `x = K r²`.
fn rcot_minus_one_series<T: Scalar>(x: T) -> T {
    -x * (T::lit(1.0 / 3.0) + x * (T::lit(1.0 / 45.0) + x * T::lit(2.0 / 945.0)))
}

/// `r cot_K(r) - 1`, accurate as `r -> 0`.
pub(crate) fn rcot_minus_one<T: Scalar>(k: T, r: T) -> T {
    let x = k * r * r;
    if k == T::zero() {
        T::zero()
    } else if x.abs() < T::lit(1e-3) {
        rcot_minus_one_series(x) - x * x * x * x * (T::lit(1.0 / 4725.0) + x * T::lit(2.0 / 93555.0))
    } else {
        r * cot_k_unchecked(k, r) - T::one()
    }
}

/// `(r / sin_K r)² - 1`, accurate as `r -> 0`.
pub(crate) fn rcsc2_minus_one<T: Scalar>(k: T, r: T) -> T {
    let x = k * r * r;
    if k == T::zero() {
        T::zero()
    } else if x.abs() < T::lit(1e-3) {
        x * (T::lit(1.0 / 3.0)
            + x * (T::lit(1.0 / 15.0)
                + x * (T::lit(2.0 / 189.0) + x * (T::lit(1.0 / 675.0) + x * T::lit(2.0 / 10395.0)))))
    } else {
        let s = sin_k_unchecked(k, r);
        (r / s) * (r / s) - T::one()
    }
}

/// `R = min(inj, π / (2 sqrt(K⁺)))`.
pub fn admissible_radius<T: Scalar>(space: &ModelSpace<T>) -> Radius<T> {
    space.injectivity().min(convexity_radius(space.curvature()))
}

/// Radial Laplacian defect `Δr - (n-1) cot_{K_ref} r` of a constant
/// curvature space measured against the reference curvature `k_ref`.
pub fn gamma_k<T: Scalar>(space: &ModelSpace<T>, k_ref: T, r: T) -> Result<T> {
    let bound = space.injectivity().min(convexity_radius(space.curvature().max(k_ref)));
    if !(r > T::zero()) || !bound.exceeds(r) {
        return Err(domain(format!("gamma_K needs 0 < r < {bound:?}, got {r}")));
    }
    let n1 = T::from_count(space.dim() - 1);
    Ok(n1 * (cot_k(space.curvature(), r)? - cot_k(k_ref, r)?))
}

/// The four elementary functions whose derivatives are bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lemma54Part {
    /// `(√x cot √x)' ∈ [-1/3, 0]` on `[0, (π/2)²)`.
    CotSqrt,
    /// `(√x coth √x)' ∈ [0, 1/3]` on `[0, ∞)`.
    CothSqrt,
    /// `(x cot² √x)' ∈ [-1, 0]` on `[0, (π/2)²)`.
    XCotSq,
    /// `(x coth² √x)' ∈ [0, 1]` on `[0, ∞)`.
    XCothSq,
}

impl Lemma54Part {
    pub const ALL: [Lemma54Part; 4] =
        [Lemma54Part::CotSqrt, Lemma54Part::CothSqrt, Lemma54Part::XCotSq, Lemma54Part::XCothSq];

    /// Closed interval the derivative must stay in.
    pub fn bounds<T: Scalar>(self) -> (T, T) {
        match self {
            Lemma54Part::CotSqrt => (T::lit(-1.0 / 3.0), T::zero()),
            Lemma54Part::CothSqrt => (T::zero(), T::lit(1.0 / 3.0)),
            Lemma54Part::XCotSq => (-T::one(), T::zero()),
            Lemma54Part::XCothSq => (T::zero(), T::one()),
        }
    }

    /// Exclusive upper end of the domain, `None` for `[0, ∞)`.
    pub fn domain_end<T: Scalar>(self) -> Option<T> {
        match self {
            Lemma54Part::CotSqrt | Lemma54Part::XCotSq => Some(T::FRAC_PI_2() * T::FRAC_PI_2()),
            _ => None,
        }
    }

    /// Derivative at `x = 0` from the Taylor series.
    pub fn limit_at_zero<T: Scalar>(self) -> T {
        match self {
            Lemma54Part::CotSqrt => T::lit(-1.0 / 3.0),
            Lemma54Part::CothSqrt => T::lit(1.0 / 3.0),
            Lemma54Part::XCotSq => T::lit(-2.0 / 3.0),
            Lemma54Part::XCothSq => T::lit(2.0 / 3.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Lemma54Part::CotSqrt => "sqrt_x_cot_sqrt_x",
            Lemma54Part::CothSqrt => "sqrt_x_coth_sqrt_x",
            Lemma54Part::XCotSq => "x_cot2_sqrt_x",
            Lemma54Part::XCothSq => "x_coth2_sqrt_x",
        }
    }

    fn value<T: Scalar>(self, x: T) -> T {
        match self {
            Lemma54Part::CotSqrt => ycot(x),
            Lemma54Part::CothSqrt => ycoth(x),
            Lemma54Part::XCotSq => ycot(x) * ycot(x),
            Lemma54Part::XCothSq => ycoth(x) * ycoth(x),
        }
    }
}

/// `√x cot √x`, with `1 - x/3 - x²/45 - 2x³/945 - x⁴/4725` near zero.
fn ycot<T: Scalar>(x: T) -> T {
    if x < T::lit(1e-6) {
        T::one() + rcot_minus_one_series(x) - x * x * x * x * T::lit(1.0 / 4725.0)
    } else {
        let y = x.sqrt();
        y / y.tan()
    }
}

/// `√x coth √x`, the same series with `x -> -x`.
fn ycoth<T: Scalar>(x: T) -> T {
    if x < T::lit(1e-6) {
        T::one() + rcot_minus_one_series(-x) - x * x * x * x * T::lit(1.0 / 4725.0)
    } else {
        let y = x.sqrt();
        y / y.tanh()
    }
}

/// Derivative of one of the four functions by a five-point stencil with
/// step `max(1e-5, 1e-5 x)`; one-sided near `x = 0`, series limit at 0.
pub fn lemma54_derivative<T: Scalar>(part: Lemma54Part, x: T) -> Result<T> {
    if !(x >= T::zero()) || !x.is_finite() {
        return Err(domain(format!("x must be finite and nonnegative, got {x}")));
    }
    if let Some(end) = part.domain_end::<T>() {
        if x >= end {
            return Err(domain(format!("{} is defined for x < (π/2)², got {x}", part.name())));
        }
    }
    if x == T::zero() {
        return Ok(part.limit_at_zero());
    }
    let h = T::lit(1e-5).max(T::lit(1e-5) * x);
    let f = |t: T| part.value(t);
    let two = T::lit(2.0);
    if x >= two * h {
        Ok((f(x - two * h) - T::lit(8.0) * f(x - h) + T::lit(8.0) * f(x + h) - f(x + two * h)) / (T::lit(12.0) * h))
    } else {
        Ok((T::lit(-25.0) * f(x) + T::lit(48.0) * f(x + h) - T::lit(36.0) * f(x + two * h)
            + T::lit(16.0) * f(x + T::lit(3.0) * h)
            - T::lit(3.0) * f(x + T::lit(4.0) * h))
            / (T::lit(12.0) * h))
    }
}

/// The four derivatives at `x`. Parts defined only below `(π/2)²` are `None`
/// past that point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma54Residuals<T> {
    pub cot_sqrt: Option<T>,
    pub coth_sqrt: T,
    pub x_cot_sq: Option<T>,
    pub x_coth_sq: T,
}

pub fn lemma54_residuals<T: Scalar>(x: T) -> Result<Lemma54Residuals<T>> {
    let bounded = |part| match lemma54_derivative(part, x) {
        Ok(v) => Ok(Some(v)),
        Err(Error::Domain(_)) if x >= T::zero() => Ok(None),
        Err(e) => Err(e),
    };
    Ok(Lemma54Residuals {
        cot_sqrt: bounded(Lemma54Part::CotSqrt)?,
        coth_sqrt: lemma54_derivative(Lemma54Part::CothSqrt, x)?,
        x_cot_sq: bounded(Lemma54Part::XCotSq)?,
        x_coth_sq: lemma54_derivative(Lemma54Part::XCothSq, x)?,
    })
}

/// Signed distance of a derivative value to its admissible interval
/// (nonnegative inside).
pub fn lemma54_slack<T: Scalar>(part: Lemma54Part, value: T) -> T {
    let (lo, hi) = part.bounds::<T>();
    (value - lo).min(hi - value)
}
