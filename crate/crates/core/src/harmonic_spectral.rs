//! Harmonic functions on model spaces as spherical-harmonic expansions
//! `u = Σ c_{l,μ} u_l(r) Y_{l,μ}(θ)` and the growth functional
//! `q(r) = ∫_{S(r)} u²` with its log-derivatives.
//!
//! Radial factors are integrated in the variables `g = r u'/u - l` and
//! `h = log(u / r^l)`, which are smooth at the origin and exact (`g = h = 0`)
//! in flat space.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::modelspace::{cot_k, rcot_minus_one, rcsc2_minus_one, sin_k, ComparisonPair, ModelSpace, Radius};
use crate::ode::{integrate, Stats, Tolerance};
use crate::quadrature::PointwiseField;
use crate::scalar::{pairwise_sum, Scalar};
use crate::spharm::{basis_values, degree_offset, multiplicity, SpherePoint, SphericalMode};

/// Number of Frobenius coefficients used to seed the radial integration.
pub const FROBENIUS_TERMS: usize = 6;

/// Coefficients `a_k` of the regular solution `u = Σ a_k r^{l+2k}`, `a_0 = 1`.
pub fn frobenius_coefficients<T: Scalar>(n: usize, k: T, l: usize) -> [T; FROBENIUS_TERMS] {
    let c = [
        T::one(),
        -k / T::lit(3.0),
        -k * k / T::lit(45.0),
        -T::lit(2.0) * k * k * k / T::lit(945.0),
        -k.powi(4) / T::lit(4725.0),
        -T::lit(2.0) * k.powi(5) / T::lit(93555.0),
    ];
    let s = [
        T::one(),
        k / T::lit(3.0),
        k * k / T::lit(15.0),
        T::lit(2.0) * k * k * k / T::lit(189.0),
        k.powi(4) / T::lit(675.0),
        T::lit(2.0) * k.powi(5) / T::lit(10395.0),
    ];
    let nf = T::from_count(n);
    let lf = T::from_count(l);
    let big_l = lf * (lf + nf - T::lit(2.0));
    let mut a = [T::zero(); FROBENIUS_TERMS];
    a[0] = T::one();
    for m in 1..FROBENIUS_TERMS {
        let mut acc = T::zero();
        for j in 1..=m {
            let p = lf + T::from_count(2 * (m - j));
            acc = acc + a[m - j] * ((nf - T::one()) * c[j] * p - big_l * s[j]);
        }
        let mf = T::from_count(m);
        a[m] = -acc / (T::lit(2.0) * mf * (T::lit(2.0) * lf + T::lit(2.0) * mf + nf - T::lit(2.0)));
    }
    a
}

/// Radial factor at one radius in log-derivative form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialState<T> {
    pub r: T,
    pub l: usize,
    /// `r u'/u - l`.
    pub g: T,
    /// `log(u / r^l)`.
    pub h: T,
    /// `dg/dr`.
    pub dg: T,
}

impl<T: Scalar> RadialState<T> {
    pub fn u(&self) -> T {
        (T::from_count(self.l) * self.r.ln() + self.h).exp()
    }

    pub fn u_r(&self) -> T {
        self.u() * self.log_u_r()
    }

    /// `u'/u`.
    pub fn log_u_r(&self) -> T {
        (T::from_count(self.l) + self.g) / self.r
    }

    /// `(log u)''`.
    pub fn log_u_rr(&self) -> T {
        (self.dg * self.r - self.g - T::from_count(self.l)) / (self.r * self.r)
    }

    /// `log u`.
    pub fn log_u(&self) -> T {
        T::from_count(self.l) * self.r.ln() + self.h
    }
}

#[derive(Debug, Clone, Copy)]
struct RadialOde<T> {
    nm1: T,
    two_l_n2: T,
    lf: T,
    big_l: T,
    k: T,
}

impl<T: Scalar> RadialOde<T> {
    fn new(n: usize, k: T, l: usize) -> Self {
        let nf = T::from_count(n);
        let lf = T::from_count(l);
        Self {
            nm1: nf - T::one(),
            two_l_n2: T::lit(2.0) * lf + nf - T::lit(2.0),
            lf,
            big_l: lf * (lf + nf - T::lit(2.0)),
            k,
        }
    }

    fn dg(&self, r: T, g: T) -> T {
        let c = rcot_minus_one(self.k, r);
        let s = rcsc2_minus_one(self.k, r);
        (-self.two_l_n2 * g - g * g - self.nm1 * (self.lf + g) * c + self.big_l * s) / r
    }

    fn rhs(&self, r: T, y: &[T; 2]) -> [T; 2] {
        [self.dg(r, y[0]), y[0] / r]
    }
}

/// Regular solution of `u'' + (n-1) cot_K r u' - l(l+n-2)/sin_K² r u = 0`,
/// normalized so that `u(r) ~ r^l` at the origin, sampled on a grid.
#[derive(Debug, Clone)]
pub struct RadialProfile<T> {
    space: ModelSpace<T>,
    l: usize,
    grid: Vec<T>,
    w: Vec<T>,
    w_r: Vec<T>,
    w_shift: T,
    seed_r: T,
    seed: [T; 2],
    states: Vec<[T; 2]>,
    tol: Tolerance<T>,
}

fn default_tolerance<T: Scalar>() -> Tolerance<T> {
    let floor = T::epsilon() * T::lit(64.0);
    Tolerance::new(T::lit(1e-12).max(floor), T::lit(1e-14).max(floor * T::lit(0.01)))
}

fn check_grid<T: Scalar>(space: &ModelSpace<T>, grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Invalid("radius grid is empty".into()));
    }
    if !(grid[0] > T::zero()) {
        return Err(domain(format!("grid radii must be positive, got {}", grid[0])));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Invalid("radius grid must be strictly increasing".into()));
    }
    let last = *grid.last().expect("nonempty grid");
    if !last.is_finite() {
        return Err(domain("grid radius is not finite"));
    }
    if let Radius::Finite(big_r) = space.admissible_radius() {
        if last >= T::lit(0.999) * big_r {
            return Err(domain(format!("grid radius {last} reaches 0.999 R = {}", T::lit(0.999) * big_r)));
        }
    }
    Ok(())
}

/// Computes the radial profile of degree `l` on `grid`.
pub fn radial_profile<T: Scalar>(space: &ModelSpace<T>, l: usize, grid: &[T]) -> Result<RadialProfile<T>> {
    RadialProfile::new(space, l, grid)
}

impl<T: Scalar> RadialProfile<T> {
    pub fn new(space: &ModelSpace<T>, l: usize, grid: &[T]) -> Result<Self> {
        check_grid(space, grid)?;
        let n = space.dim();
        let k = space.curvature();
        let scale = space.admissible_radius().or(*grid.last().expect("nonempty grid"));
        let seed_r = (grid[0] / T::lit(4.0)).max(T::lit(1e-6) * scale);
        let seed = series_state(n, k, l, seed_r);
        let tol = default_tolerance();
        let ode = RadialOde::new(n, k, l);
        let f = |r: T, y: &[T; 2]| ode.rhs(r, y);
        let mut stats = Stats::default();
        let mut states = Vec::with_capacity(grid.len());
        let (mut r_prev, mut y, mut h) = (seed_r, seed, T::zero());
        for &r in grid {
            if r > r_prev {
                let (y_new, h_new) = integrate(&f, r_prev, y, r, h, tol, &mut stats)?;
                y = y_new;
                h = h_new;
                r_prev = r;
            } else {
                y = series_state(n, k, l, r);
            }
            states.push(y);
        }
        let mut profile = Self {
            space: *space,
            l,
            grid: grid.to_vec(),
            w: Vec::new(),
            w_r: Vec::new(),
            w_shift: (T::from_count(n) - T::lit(2.0)) / T::lit(2.0),
            seed_r,
            seed,
            states,
            tol,
        };
        let (w, w_r) = (0..grid.len())
            .map(|i| {
                let s = profile.node_state(i);
                (s.u(), s.u_r())
            })
            .unzip();
        profile.w = w;
        profile.w_r = w_r;
        Ok(profile)
    }

    pub fn space(&self) -> &ModelSpace<T> {
        &self.space
    }

    pub fn degree(&self) -> usize {
        self.l
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    /// `u` at the grid radii.
    pub fn w(&self) -> &[T] {
        &self.w
    }

    /// `u'` at the grid radii.
    pub fn w_r(&self) -> &[T] {
        &self.w_r
    }

    /// Exponent `(n-2)/2` of the substitution `w = sin_K(r)^{(n-2)/2} u`.
    pub fn w_shift(&self) -> T {
        self.w_shift
    }

    /// `sin_K(r)^{(n-2)/2} u(r)` at the grid radii.
    pub fn shifted_values(&self) -> Result<Vec<T>> {
        self.grid
            .iter()
            .zip(&self.w)
            .map(|(&r, &u)| Ok(sin_k(self.space.curvature(), r)?.powf(self.w_shift) * u))
            .collect()
    }

    pub fn seed_radius(&self) -> T {
        self.seed_r
    }

    fn ode(&self) -> RadialOde<T> {
        RadialOde::new(self.space.dim(), self.space.curvature(), self.l)
    }

    fn node_state(&self, i: usize) -> RadialState<T> {
        let r = self.grid[i];
        let [g, h] = self.states[i];
        RadialState { r, l: self.l, g, h, dg: self.ode().dg(r, g) }
    }

    /// Whether `r` lies in `(0, max grid]`.
    pub fn covers(&self, r: T) -> bool {
        r > T::zero() && r <= *self.grid.last().expect("nonempty grid")
    }

    /// Radial state at any `r` in `(0, max grid]`: stored at grid nodes,
    /// otherwise re-integrated from the nearest lower node.
    pub fn state(&self, r: T) -> Result<RadialState<T>> {
        if !self.covers(r) {
            return Err(domain(format!("degree-{} profile does not cover r = {r}", self.l)));
        }
        let idx = self.grid.partition_point(|&x| x <= r);
        if idx > 0 && self.grid[idx - 1] == r {
            return Ok(self.node_state(idx - 1));
        }
        let (r0, y0) = if idx > 0 { (self.grid[idx - 1], self.states[idx - 1]) } else { (self.seed_r, self.seed) };
        let (n, k) = (self.space.dim(), self.space.curvature());
        let [g, h] = if r <= r0 {
            series_state(n, k, self.l, r)
        } else {
            let ode = self.ode();
            let f = |t: T, y: &[T; 2]| ode.rhs(t, y);
            integrate(&f, r0, y0, r, T::zero(), self.tol, &mut Stats::default())?.0
        };
        Ok(RadialState { r, l: self.l, g, h, dg: self.ode().dg(r, g) })
    }

    /// `u(r)`; a table lookup at grid radii.
    pub fn value(&self, r: T) -> Result<T> {
        let idx = self.grid.partition_point(|&x| x < r);
        if idx < self.grid.len() && self.grid[idx] == r {
            return Ok(self.w[idx]);
        }
        Ok(self.state(r)?.u())
    }

    /// `(u(r), u'(r))`.
    pub fn eval(&self, r: T) -> Result<(T, T)> {
        let s = self.state(r)?;
        Ok((s.u(), s.u_r()))
    }

    /// Per-node integration defect: each interval is re-integrated at a
    /// hundredth of the working tolerance and the mismatch in `(u, u')` is
    /// scaled by `1 + |u| + |u'|`.
    pub fn ode_residuals(&self) -> Result<Vec<T>> {
        let ode = self.ode();
        let f = |t: T, y: &[T; 2]| ode.rhs(t, y);
        let floor = T::epsilon() * T::lit(4.0);
        let fine = Tolerance::new((self.tol.rtol * T::lit(0.01)).max(floor), (self.tol.atol * T::lit(0.01)).max(floor));
        (0..self.grid.len())
            .map(|i| {
                let (r0, y0) = if i == 0 { (self.seed_r, self.seed) } else { (self.grid[i - 1], self.states[i - 1]) };
                let r = self.grid[i];
                let [g, h] = if r > r0 {
                    integrate(&f, r0, y0, r, T::zero(), fine, &mut Stats::default())?.0
                } else {
                    series_state(self.space.dim(), self.space.curvature(), self.l, r)
                };
                let reference = RadialState { r, l: self.l, g, h, dg: ode.dg(r, g) };
                let (u, du) = (self.w[i], self.w_r[i]);
                let mismatch = (reference.u() - u).abs() + (reference.u_r() - du).abs();
                Ok(mismatch / (T::one() + u.abs() + du.abs()))
            })
            .collect()
    }
}

fn series_state<T: Scalar>(n: usize, k: T, l: usize, r: T) -> [T; 2] {
    let a = frobenius_coefficients(n, k, l);
    let x = r * r;
    let (mut sum, mut dsum, mut p) = (T::zero(), T::zero(), T::one());
    for (i, &ai) in a.iter().enumerate() {
        sum = sum + ai * p;
        dsum = dsum + T::lit(2.0) * T::from_count(i) * ai * p;
        p = p * x;
    }
    [dsum / sum, sum.ln()]
}

/// Radial profiles for every degree `0..=lmax` on a shared grid.
#[derive(Debug, Clone)]
pub struct ProfileSet<T> {
    space: ModelSpace<T>,
    profiles: BTreeMap<usize, RadialProfile<T>>,
}

impl<T: Scalar> ProfileSet<T> {
    /// Builds all degrees `0..=lmax`; degrees are integrated in parallel.
    pub fn new(space: &ModelSpace<T>, lmax: usize, grid: &[T]) -> Result<Self> {
        Self::for_degrees(space, 0..=lmax, grid)
    }

    pub fn for_degrees(space: &ModelSpace<T>, degrees: impl IntoIterator<Item = usize>, grid: &[T]) -> Result<Self> {
        check_grid(space, grid)?;
        let degrees: Vec<usize> = degrees.into_iter().collect();
        let built = degrees
            .par_iter()
            .map(|&l| RadialProfile::new(space, l, grid).map(|p| (l, p)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { space: *space, profiles: built.into_iter().collect() })
    }

    pub fn space(&self) -> &ModelSpace<T> {
        &self.space
    }

    pub fn get(&self, l: usize) -> Result<&RadialProfile<T>> {
        self.profiles.get(&l).ok_or(Error::MissingProfile(l))
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.profiles.keys().copied()
    }

    pub fn grid(&self) -> &[T] {
        self.profiles.values().next().map(|p| p.grid()).unwrap_or(&[])
    }
}

/// Convention for the angular factors of a [`HarmonicField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// Unit L² norm on the unit sphere.
    Orthonormal,
    /// Plane `cos(lθ)`, `sin(lθ)` and the constant `1` (n = 2 only).
    Trigonometric,
}

/// Harmonic function on a ball of a model space given by its spherical
/// harmonic coefficients (stored in the orthonormal convention).
#[derive(Debug, Clone)]
pub struct HarmonicField<T> {
    space: ModelSpace<T>,
    modes: Vec<(SphericalMode, T)>,
    lmax: usize,
    seed: Option<u64>,
}

impl<T: Scalar> HarmonicField<T> {
    pub fn new(space: &ModelSpace<T>, modes: Vec<(SphericalMode, T)>, normalization: Normalization) -> Result<Self> {
        let n = space.dim();
        if n < 2 || n > 4 {
            return Err(Error::Invalid(format!("expansions are supported for n in 2..=4, got {n}")));
        }
        if normalization == Normalization::Trigonometric && n != 2 {
            return Err(Error::Invalid("the trigonometric convention exists only for n = 2".into()));
        }
        let mut merged: BTreeMap<SphericalMode, T> = BTreeMap::new();
        for (mode, c) in modes {
            let check = SphericalMode::new(n, mode.l, mode.mu)?;
            if check != mode {
                return Err(Error::Invalid(format!("mode {mode:?} does not belong to dimension {n}")));
            }
            if !c.is_finite() {
                return Err(Error::Invalid(format!("coefficient for {mode:?} is not finite")));
            }
            let c = match normalization {
                Normalization::Orthonormal => c,
                Normalization::Trigonometric if mode.l == 0 => c * (T::lit(2.0) * T::PI()).sqrt(),
                Normalization::Trigonometric => c * T::PI().sqrt(),
            };
            let entry = merged.entry(mode).or_insert(T::zero());
            *entry = *entry + c;
        }
        let modes: Vec<_> = merged.into_iter().filter(|(_, c)| *c != T::zero()).collect();
        if modes.is_empty() {
            return Err(Error::Invalid("a harmonic field needs at least one nonzero coefficient".into()));
        }
        let lmax = modes.iter().map(|(m, _)| m.l).max().unwrap_or(0);
        Ok(Self { space: *space, modes, lmax, seed: None })
    }

    /// Single mode `(l, mu)` with coefficient `c`.
    pub fn single(space: &ModelSpace<T>, l: usize, mu: usize, c: T, normalization: Normalization) -> Result<Self> {
        Self::new(space, vec![(SphericalMode::new(space.dim(), l, mu)?, c)], normalization)
    }

    /// Random field with i.i.d. `N(0, 1) / (l + 1)` coefficients on every
    /// mode of degree `<= lmax`, drawn from a ChaCha stream seeded by `seed`.
    pub fn random(space: &ModelSpace<T>, lmax: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = space.dim();
        let mut modes = Vec::new();
        for l in 0..=lmax {
            for mu in 0..multiplicity(n, l) {
                let z: f64 = StandardNormal.sample(&mut rng);
                modes.push((SphericalMode::new(n, l, mu)?, T::lit(z / (l as f64 + 1.0))));
            }
        }
        let mut field = Self::new(space, modes, Normalization::Orthonormal)?;
        field.seed = Some(seed);
        Ok(field)
    }

    pub fn space(&self) -> &ModelSpace<T> {
        &self.space
    }

    pub fn modes(&self) -> &[(SphericalMode, T)] {
        &self.modes
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Sum of two fields on the same space.
    pub fn superpose(&self, other: &Self) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::Invalid("fields live on different spaces".into()));
        }
        let modes = self.modes.iter().chain(&other.modes).copied().collect();
        Self::new(&self.space, modes, Normalization::Orthonormal)
    }

    /// `m_l = Σ_μ c_{l,μ}²` for each degree present.
    pub fn degree_masses(&self) -> BTreeMap<usize, T> {
        let mut out = BTreeMap::new();
        for (mode, c) in &self.modes {
            let e = out.entry(mode.l).or_insert(T::zero());
            *e = *e + *c * *c;
        }
        out
    }

    /// Pointwise value `u(r, θ)`.
    pub fn eval(&self, profiles: &ProfileSet<T>, r: T, dir: &SpherePoint<T>) -> Result<T> {
        let n = self.space.dim();
        let basis = basis_values(n, self.lmax, dir)?;
        let mut terms = Vec::with_capacity(self.modes.len());
        let (mut current, mut u, mut offset) = (usize::MAX, T::zero(), 0);
        for (mode, c) in &self.modes {
            if mode.l != current {
                current = mode.l;
                offset = degree_offset(n, current);
                u = if r == T::zero() {
                    if current == 0 {
                        T::one()
                    } else {
                        T::zero()
                    }
                } else {
                    profiles.get(current)?.value(r)?
                };
            }
            terms.push(*c * u * basis[offset + mode.mu]);
        }
        Ok(pairwise_sum(&terms))
    }

    /// The field as a black-box evaluator for the quadrature oracle.
    pub fn pointwise<'a>(&'a self, profiles: &'a ProfileSet<T>) -> PointwiseField<'a, T> {
        PointwiseField::new(&self.space, move |r, dir| self.eval(profiles, r, dir))
    }
}

/// `q` and its first two derivatives at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QValues<T> {
    pub r: T,
    pub q: T,
    pub dq: T,
    pub d2q: T,
    pub dlogq: T,
    pub d2logq: T,
    /// `(sin_K r)^{n-1} Σ 2 m_l u_l u_l'`, the boundary Dirichlet term.
    pub dirichlet: T,
}

/// `q(r) = (sin_K r)^{n-1} Σ_l m_l u_l(r)²` with `q'` and `q''` assembled
/// from the radial equation.
pub fn q_eval<T: Scalar>(field: &HarmonicField<T>, profiles: &ProfileSet<T>, r: T) -> Result<QValues<T>> {
    let space = field.space();
    if profiles.space() != space {
        return Err(Error::Invalid("profiles were built for a different space".into()));
    }
    if !(r > T::zero()) {
        return Err(domain(format!("q needs r > 0, got {r}")));
    }
    let nm1 = T::from_count(space.dim() - 1);
    let k = space.curvature();
    let sin = sin_k(k, r)?;
    let cot = cot_k(k, r)?;
    let mut parts = Vec::new();
    for (&l, &m) in &field.degree_masses() {
        let st = profiles.get(l)?.state(r)?;
        parts.push((m.ln() + T::lit(2.0) * st.log_u(), st));
    }
    let top = parts.iter().map(|p| p.0).fold(T::neg_infinity(), T::max);
    let weights: Vec<T> = parts.iter().map(|p| (p.0 - top).exp()).collect();
    let total = pairwise_sum(&weights);
    let mean = |f: &dyn Fn(&RadialState<T>) -> T| -> T {
        let v: Vec<T> = weights.iter().zip(&parts).map(|(&w, p)| w * f(&p.1)).collect();
        pairwise_sum(&v) / total
    };
    let a_bar = mean(&|s| s.log_u_r());
    let var = mean(&|s| (s.log_u_r() - a_bar).powi(2));
    let log_rr = mean(&|s| s.log_u_rr());
    let dlog_p = T::lit(2.0) * a_bar;
    let d2log_p = T::lit(2.0) * log_rr + T::lit(4.0) * var;
    let q = sin.powi(space.dim() as i32 - 1) * top.exp() * total;
    let dlogq = nm1 * cot + dlog_p;
    let d2logq = -nm1 / (sin * sin) + d2log_p;
    Ok(QValues { r, q, dq: q * dlogq, d2q: q * (d2logq + dlogq * dlogq), dlogq, d2logq, dirichlet: q * dlog_p })
}

/// Run parameters echoed into a [`GrowthReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub n: usize,
    pub model_curvature: f64,
    pub kappa: f64,
    pub upper_curvature: f64,
    pub lmax: usize,
    pub tolerance: f64,
}

/// Convexity residuals of one field along a radius grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub r: Vec<f64>,
    pub q: Vec<f64>,
    pub dlogq: Vec<f64>,
    pub d2logq: Vec<f64>,
    pub residual_i: Vec<f64>,
    pub residual_ii: Vec<f64>,
    /// Part (ii) restated for `q / sin_K^{n-1}`; reported, not part of `pass`.
    pub residual_ii_tilde: Vec<f64>,
    pub worst_margin: f64,
    pub pass: bool,
    pub seed: Option<u64>,
    pub params: ReportParams,
}

impl GrowthReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn min_f64(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Residuals of the two log-convexity inequalities,
/// `residual_i = (log q)' - (n-1) cot_K r` and
/// `residual_ii = (log q)'' + cot_K (log q)' + (n+1)(cot_κ - cot_K)(log q)'
///  + K + (n-2)K⁺ + (2n-3)(K-κ)`, on `r_grid`.
pub fn convexity_residuals<T: Scalar>(
    field: &HarmonicField<T>,
    profiles: &ProfileSet<T>,
    r_grid: &[T],
    pair: &ComparisonPair<T>,
    tolerance: T,
) -> Result<GrowthReport> {
    let space = field.space();
    pair.check_brackets(space.curvature())?;
    let (kappa, k) = (pair.lower(), pair.upper());
    let n = space.dim();
    let (nf, nm1) = (T::from_count(n), T::from_count(n - 1));
    let bound = space.admissible_radius().min(crate::modelspace::convexity_radius(k));
    let k_plus = k.max(T::zero());
    let k_minus = (-k).max(T::zero());
    let slack = T::lit(2.0) * nf - T::lit(3.0);
    let mut rep = GrowthReport {
        r: Vec::new(),
        q: Vec::new(),
        dlogq: Vec::new(),
        d2logq: Vec::new(),
        residual_i: Vec::new(),
        residual_ii: Vec::new(),
        residual_ii_tilde: Vec::new(),
        worst_margin: f64::INFINITY,
        pass: false,
        seed: field.seed(),
        params: ReportParams {
            n,
            model_curvature: space.curvature().to_f64_lossy(),
            kappa: kappa.to_f64_lossy(),
            upper_curvature: k.to_f64_lossy(),
            lmax: field.lmax(),
            tolerance: tolerance.to_f64_lossy(),
        },
    };
    for &r in r_grid {
        if !bound.exceeds(r) {
            return Err(domain(format!("r = {r} is outside the admissible radius")));
        }
        let qv = q_eval(field, profiles, r)?;
        let cot_big = cot_k(k, r)?;
        let cot_small = cot_k(kappa, r)?;
        let cot_model = cot_k(space.curvature(), r)?;
        let res_i = qv.dlogq - nm1 * cot_big;
        let cross = (nf + T::one()) * (cot_small - cot_big);
        let res_ii =
            qv.d2logq + cot_big * qv.dlogq + cross * qv.dlogq + k + (nf - T::lit(2.0)) * k_plus + slack * (k - kappa);
        let sin = sin_k(space.curvature(), r)?;
        let dlt = qv.dlogq - nm1 * cot_model;
        let d2lt = qv.d2logq + nm1 / (sin * sin);
        let res_tilde = d2lt + cot_big * dlt + cross * dlt + (nf - T::lit(2.0)) * k_minus + slack * (k - kappa);
        if !(qv.q > T::zero()) {
            return Err(domain(format!("q is not positive at r = {r}")));
        }
        rep.r.push(r.to_f64_lossy());
        rep.q.push(qv.q.to_f64_lossy());
        rep.dlogq.push(qv.dlogq.to_f64_lossy());
        rep.d2logq.push(qv.d2logq.to_f64_lossy());
        rep.residual_i.push(res_i.to_f64_lossy());
        rep.residual_ii.push(res_ii.to_f64_lossy());
        rep.residual_ii_tilde.push(res_tilde.to_f64_lossy());
    }
    rep.worst_margin = min_f64(&rep.residual_i).min(min_f64(&rep.residual_ii));
    rep.pass = rep.worst_margin >= -tolerance.to_f64_lossy();
    Ok(rep)
}

/// `(1 + 32 n r² K) log(q(2s)/q(s)) - log(q(2r)/q(r))` for `K > 0`,
/// `r <= s < 1/(4 sqrt(nK))` and `|space.K| <= K`.
pub fn doubling_check<T: Scalar>(field: &HarmonicField<T>, profiles: &ProfileSet<T>, r: T, s: T, k: T) -> Result<T> {
    let space = field.space();
    let n = T::from_count(space.dim());
    if !(k > T::zero()) {
        return Err(domain(format!("doubling needs a positive curvature bound, got {k}")));
    }
    if space.curvature().abs() > k {
        return Err(Error::Bracket {
            kappa: (-k).to_f64_lossy(),
            model: space.curvature().to_f64_lossy(),
            upper: k.to_f64_lossy(),
        });
    }
    let limit = (T::lit(4.0) * (n * k).sqrt()).recip();
    if !(r > T::zero() && r <= s) {
        return Err(domain(format!("doubling needs 0 < r <= s, got r = {r}, s = {s}")));
    }
    if s >= limit {
        return Err(domain(format!("s = {s} reaches 1/(4 sqrt(nK)) = {limit}")));
    }
    let two = T::lit(2.0);
    let log_q = |x: T| q_eval(field, profiles, x).map(|v| v.q.ln());
    let big = log_q(two * s)? - log_q(s)?;
    let small = log_q(two * r)? - log_q(r)?;
    Ok((T::one() + T::lit(32.0) * n * r * r * k) * big - small)
}

/// `(sin_K r)^{n-1} Σ 2 m_l u_l u_l'`, the boundary Dirichlet integral.
pub fn dirichlet_positivity<T: Scalar>(field: &HarmonicField<T>, profiles: &ProfileSet<T>, r: T) -> Result<T> {
    Ok(q_eval(field, profiles, r)?.dirichlet)
}

/// Outcome of a sampled monotonicity test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityCheck {
    pub values: Vec<f64>,
    /// Smallest forward difference divided by `max(1, |value|)`.
    pub worst: f64,
    pub pass: bool,
}

/// Forward differences of `r ↦ e^{6 n r² K} r q'/q` on `r_grid`, for a
/// curvature bound `|space.K| <= K`.
pub fn garofalo_lin_monotonicity<T: Scalar>(
    field: &HarmonicField<T>,
    profiles: &ProfileSet<T>,
    r_grid: &[T],
    k: T,
    tolerance: T,
) -> Result<MonotonicityCheck> {
    let space = field.space();
    if space.curvature().abs() > k {
        return Err(Error::Bracket {
            kappa: (-k).to_f64_lossy(),
            model: space.curvature().to_f64_lossy(),
            upper: k.to_f64_lossy(),
        });
    }
    let six_n = T::lit(6.0) * T::from_count(space.dim());
    let values = r_grid
        .iter()
        .map(|&r| q_eval(field, profiles, r).map(|v| (six_n * r * r * k).exp() * r * v.dlogq))
        .collect::<Result<Vec<T>>>()?;
    let worst = values.windows(2).map(|w| (w[1] - w[0]) / w[0].abs().max(T::one())).fold(T::infinity(), T::min);
    Ok(MonotonicityCheck {
        values: values.iter().map(|v| v.to_f64_lossy()).collect(),
        worst: worst.to_f64_lossy(),
        pass: !(worst < -tolerance),
    })
}

/// `count` logarithmically spaced radii from `r_min` to `r_max`.
pub fn log_grid<T: Scalar>(r_min: T, r_max: T, count: usize) -> Vec<T> {
    if count <= 1 {
        return vec![r_min];
    }
    let (a, b) = (r_min.ln(), r_max.ln());
    (0..count)
        .map(|i| match i {
            0 => r_min,
            _ if i + 1 == count => r_max,
            _ => (a + (b - a) * T::from_count(i) / T::from_count(count - 1)).exp(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn grid() -> Vec<f64> {
        log_grid(0.05, 1.4, 40)
    }

    #[test]
    fn frobenius_flat_is_monomial() {
        let a = frobenius_coefficients::<f64>(3, 0.0, 4);
        assert_eq!(a, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        // n = 2, K = 1, l = 1: tan(r/2)·2 = r + r³/12 + r⁵/120 + ...
        let a = frobenius_coefficients::<f64>(2, 1.0, 1);
        assert_relative_eq!(a[1], 1.0 / 12.0, epsilon = 1e-15);
        assert_relative_eq!(a[2], 1.0 / 120.0, epsilon = 1e-15);
    }

    #[test]
    fn profile_examples() {
        let flat = ModelSpace::new(2, 0.0).unwrap();
        let p = radial_profile(&flat, 3, &grid()).unwrap();
        for (&r, &u) in p.grid().iter().zip(p.w()) {
            assert_relative_eq!(u, r.powi(3), max_relative = 1e-10);
        }
        let sphere = ModelSpace::new(2, 1.0).unwrap();
        let p = radial_profile(&sphere, 2, &grid()).unwrap();
        for (&r, &u) in p.grid().iter().zip(p.w()) {
            assert_relative_eq!(u / 4.0, (r / 2.0).tan().powi(2), max_relative = 1e-8);
        }
        let hyp = ModelSpace::new(2, -1.0).unwrap();
        let p = radial_profile(&hyp, 1, &grid()).unwrap();
        for ((&r, &u), &du) in p.grid().iter().zip(p.w()).zip(p.w_r()) {
            assert_relative_eq!(u / 2.0, (r / 2.0).tanh(), max_relative = 1e-8);
            assert_relative_eq!(du, 1.0 / (r / 2.0).cosh().powi(2), max_relative = 1e-8);
        }
    }

    #[test]
    fn profile_off_grid_and_errors() {
        let sphere = ModelSpace::new(2, 1.0).unwrap();
        let p = radial_profile(&sphere, 2, &grid()).unwrap();
        for r in [0.001, 0.03, 0.333, 1.2345] {
            let (u, _) = p.eval(r).unwrap();
            assert_relative_eq!(u / 4.0, (r / 2.0).tan().powi(2), max_relative = 1e-8);
        }
        assert!(p.eval(1.5).is_err());
        assert!(radial_profile(&sphere, 2, &[0.5, 1.57]).is_err());
        assert!(radial_profile(&sphere, 2, &[0.5, 0.4]).is_err());
    }

    #[test]
    fn ode_defect_is_small() {
        for k in [-1.0, 0.0, 1.0] {
            let space = ModelSpace::new(4, k).unwrap();
            let p = radial_profile(&space, 7, &grid()).unwrap();
            let worst = p.ode_residuals().unwrap().into_iter().fold(0.0, f64::max);
            assert!(worst <= 1e-9, "K = {k}: {worst}");
        }
    }

    #[test]
    fn q_examples() {
        let flat2 = ModelSpace::new(2, 0.0).unwrap();
        let set = ProfileSet::new(&flat2, 3, &grid()).unwrap();
        let f = HarmonicField::single(&flat2, 1, 0, PI.sqrt(), Normalization::Orthonormal).unwrap();
        let v = q_eval(&f, &set, 0.7).unwrap();
        assert_relative_eq!(v.q, PI * 0.7f64.powi(3), max_relative = 1e-12);
        assert_relative_eq!(v.dlogq, 3.0 / 0.7, max_relative = 1e-12);
        assert_relative_eq!(v.d2logq, -3.0 / 0.49, max_relative = 1e-10);

        let flat3 = ModelSpace::new(3, 0.0).unwrap();
        let set = ProfileSet::new(&flat3, 2, &grid()).unwrap();
        let f = HarmonicField::single(&flat3, 2, 1, 1.0, Normalization::Orthonormal).unwrap();
        let v = q_eval(&f, &set, 0.9).unwrap();
        assert_relative_eq!(v.q, 0.9f64.powi(6), max_relative = 1e-12);
        assert_relative_eq!(v.dlogq, 6.0 / 0.9, max_relative = 1e-12);

        let sphere = ModelSpace::new(2, 1.0).unwrap();
        let set = ProfileSet::new(&sphere, 1, &grid()).unwrap();
        let f = HarmonicField::single(&sphere, 1, 0, 0.5, Normalization::Orthonormal).unwrap();
        let r = 1.0f64;
        let v = q_eval(&f, &set, r).unwrap();
        assert_relative_eq!(v.q, (r / 2.0).tan().powi(2) * r.sin(), max_relative = 1e-9);
        assert_relative_eq!(v.dlogq, 2.0 / r.sin() + 1.0 / r.tan(), max_relative = 1e-9);
    }

    #[test]
    fn trigonometric_convention() {
        let flat = ModelSpace::new(2, 0.0).unwrap();
        let set = ProfileSet::new(&flat, 2, &grid()).unwrap();
        let f = HarmonicField::single(&flat, 2, 0, 1.0, Normalization::Trigonometric).unwrap();
        assert_relative_eq!(q_eval(&f, &set, 0.5).unwrap().q, PI * 0.5f64.powi(5), max_relative = 1e-12);
        let c = HarmonicField::single(&flat, 0, 0, 1.0, Normalization::Trigonometric).unwrap();
        assert_relative_eq!(q_eval(&c, &set, 0.5).unwrap().q, PI, max_relative = 1e-12);
        let space3 = ModelSpace::new(3, 0.0).unwrap();
        assert!(HarmonicField::single(&space3, 1, 0, 1.0, Normalization::Trigonometric).is_err());
    }

    #[test]
    fn field_validation() {
        let flat = ModelSpace::new(2, 0.0).unwrap();
        assert!(HarmonicField::<f64>::new(&flat, vec![], Normalization::Orthonormal).is_err());
        let m = SphericalMode::new(2, 1, 0).unwrap();
        assert!(HarmonicField::new(&flat, vec![(m, 0.0)], Normalization::Orthonormal).is_err());
        let wrong = SphericalMode::new(3, 1, 2).unwrap();
        assert!(HarmonicField::new(&flat, vec![(wrong, 1.0)], Normalization::Orthonormal).is_err());
        let set = ProfileSet::new(&flat, 1, &grid()).unwrap();
        let f = HarmonicField::single(&flat, 2, 0, 1.0, Normalization::Orthonormal).unwrap();
        assert_eq!(q_eval(&f, &set, 0.5).unwrap_err(), Error::MissingProfile(2));
    }

    #[test]
    fn residual_examples() {
        let flat = ModelSpace::new(2, 0.0).unwrap();
        let set = ProfileSet::new(&flat, 4, &grid()).unwrap();
        let f = HarmonicField::single(&flat, 4, 1, 1.0, Normalization::Orthonormal).unwrap();
        let rs = log_grid(0.1, 1.0, 10);
        let rep = convexity_residuals(&f, &set, &rs, &ComparisonPair::exact(0.0), 1e-8).unwrap();
        for (r, res) in rep.r.iter().zip(&rep.residual_i) {
            assert_relative_eq!(*res, 8.0 / r, max_relative = 1e-10);
        }
        assert!(rep.pass);
        for k in [1.0, -1.0] {
            let space = ModelSpace::new(2, k).unwrap();
            let set = ProfileSet::new(&space, 5, &grid()).unwrap();
            for l in 0..=5 {
                let f = HarmonicField::single(&space, l, 0, 1.0, Normalization::Orthonormal).unwrap();
                let rep = convexity_residuals(&f, &set, &rs, &ComparisonPair::exact(k), 1e-6).unwrap();
                let worst = rep.residual_ii.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                assert!(worst <= 1e-8, "K = {k}, l = {l}: {worst}");
            }
        }
        let sphere = ModelSpace::new(2, 1.0).unwrap();
        let set = ProfileSet::new(&sphere, 1, &grid()).unwrap();
        let f = HarmonicField::single(&sphere, 1, 0, 1.0, Normalization::Orthonormal).unwrap();
        let bad = ComparisonPair::new(1.5, 2.0).unwrap();
        assert!(matches!(convexity_residuals(&f, &set, &rs, &bad, 1e-6), Err(Error::Bracket { .. })));
    }

    #[test]
    fn doubling_examples() {
        let flat = ModelSpace::new(2, 0.0).unwrap();
        let set = ProfileSet::new(&flat, 3, &grid()).unwrap();
        let f = HarmonicField::single(&flat, 3, 0, 1.0, Normalization::Orthonormal).unwrap();
        let (r, s, k) = (0.05, 0.1, 1e-9);
        let m = doubling_check(&f, &set, r, s, k).unwrap();
        let expected = 32.0 * 2.0 * r * r * k * (7.0 * 2f64.ln());
        assert_relative_eq!(m, expected, max_relative = 1e-4);
        let sphere = ModelSpace::new(2, 1.0).unwrap();
        let set = ProfileSet::new(&sphere, 3, &grid()).unwrap();
        let f = HarmonicField::single(&sphere, 3, 1, 1.0, Normalization::Orthonormal).unwrap();
        assert!(doubling_check(&f, &set, 0.05, 0.1, 1.0).unwrap() >= 0.0);
        assert!(doubling_check(&f, &set, 0.1, 0.1, 1.0).unwrap() >= 0.0);
        assert!(doubling_check(&f, &set, 0.1, 0.2, 1.0).is_err());
    }

    #[test]
    fn dirichlet_examples() {
        let flat = ModelSpace::new(3, 0.0).unwrap();
        let set = ProfileSet::new(&flat, 2, &grid()).unwrap();
        let f = HarmonicField::single(&flat, 2, 0, 1.0, Normalization::Orthonormal).unwrap();
        let r: f64 = 0.8;
        assert_relative_eq!(dirichlet_positivity(&f, &set, r).unwrap(), 4.0 * r.powi(5), max_relative = 1e-12);
        let c = HarmonicField::single(&flat, 0, 0, 1.0, Normalization::Orthonormal).unwrap();
        assert_eq!(dirichlet_positivity(&c, &set, r).unwrap(), 0.0);
        let sphere = ModelSpace::new(2, 1.0).unwrap();
        let set = ProfileSet::new(&sphere, 1, &grid()).unwrap();
        let f = HarmonicField::single(&sphere, 1, 0, 0.5, Normalization::Orthonormal).unwrap();
        let expected = 2.0 * 0.5f64.tan() / 0.5f64.cos().powi(2) / 2.0 * 1f64.sin();
        assert_relative_eq!(dirichlet_positivity(&f, &set, 1.0).unwrap(), expected, max_relative = 1e-9);
    }

    #[test]
    fn frequency_examples() {
        let flat = ModelSpace::new(2, 0.0).unwrap();
        let set = ProfileSet::new(&flat, 5, &grid()).unwrap();
        let f = HarmonicField::single(&flat, 5, 0, 1.0, Normalization::Orthonormal).unwrap();
        let rs = log_grid(0.1, 1.3, 30);
        let m = garofalo_lin_monotonicity(&f, &set, &rs, 0.0, 1e-6).unwrap();
        assert!(m.values.iter().all(|v| (v - 11.0).abs() < 1e-10));
        let modes = vec![(SphericalMode::new(2, 1, 0).unwrap(), 1.0), (SphericalMode::new(2, 5, 0).unwrap(), 1.0)];
        let f = HarmonicField::new(&flat, modes, Normalization::Trigonometric).unwrap();
        let m = garofalo_lin_monotonicity(&f, &set, &rs, 0.0, 1e-6).unwrap();
        assert!(m.pass && m.worst > 0.0);
        let hyp = ModelSpace::new(2, -1.0).unwrap();
        let hset = ProfileSet::new(&hyp, 1, &rs).unwrap();
        let h = HarmonicField::single(&hyp, 1, 0, 1.0, Normalization::Orthonormal).unwrap();
        assert!(matches!(garofalo_lin_monotonicity(&h, &hset, &rs, 0.0, 1e-6), Err(Error::Bracket { .. })));
        assert!(garofalo_lin_monotonicity(&h, &hset, &rs, 1.0, 1e-6).unwrap().pass);
        for (&r, &v) in rs.iter().zip(&m.values) {
            let expected = (3.0 * r.powi(3) + 11.0 * r.powi(11)) / (r.powi(3) + r.powi(11));
            assert_relative_eq!(v, expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn report_json_keys() {
        let space = ModelSpace::new(3, 1.0).unwrap();
        let set = ProfileSet::new(&space, 3, &grid()).unwrap();
        let f = HarmonicField::random(&space, 3, 11).unwrap();
        let rep = convexity_residuals(&f, &set, &log_grid(0.1, 1.0, 5), &ComparisonPair::exact(1.0), 1e-6).unwrap();
        let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        for key in ["r", "q", "dlogq", "d2logq", "residual_i", "residual_ii", "worst_margin", "seed", "params"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["seed"], 11);
    }
}
