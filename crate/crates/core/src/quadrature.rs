//! Direct numerical integration over geodesic spheres and balls.
//!
//! This module is the independent oracle for the spectral formulas: fields
//! are treated as black-box evaluators in geodesic polar coordinates, and
//! `q(r)` is recomputed from product cubature on the unit sphere.

use crate::error::{domain, Error, Result};
use crate::modelspace::{sin_k, ModelSpace};
use crate::scalar::{pairwise_sum, Scalar};
use crate::spharm::SpherePoint;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre<T: Scalar>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let fnn = T::from_count(n);
    for i in 0..n.div_ceil(2) {
        let mut x = (T::PI() * (T::from_count(i) + T::lit(0.75)) / (fnn + T::lit(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (mut p0, mut p1) = (T::one(), x);
            for k in 2..=n {
                let fk = T::from_count(k);
                let p2 = ((T::lit(2.0) * fk - T::one()) * x * p1 - (fk - T::one()) * p0) / fk;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = T::one();
                p1 = x;
            }
            dp = fnn * (x * p1 - p0) / (x * x - T::one());
            let dx = p1 / dp;
            x = x - dx;
            if dx.abs() <= T::epsilon() * T::lit(4.0) {
                break;
            }
        }
        // recompute derivative at the converged node
        let (mut p0, mut p1) = (T::one(), x);
        for k in 2..=n {
            let fk = T::from_count(k);
            let p2 = ((T::lit(2.0) * fk - T::one()) * x * p1 - (fk - T::one()) * p0) / fk;
            p0 = p1;
            p1 = p2;
        }
        if n > 1 {
            dp = fnn * (x * p1 - p0) / (x * x - T::one());
        }
        let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    (nodes, weights)
}

/// Gauss rule for `∫_{-1}^{1} f(t) sqrt(1 - t²) dt` (Chebyshev, second kind).
pub fn gauss_chebyshev_u<T: Scalar>(n: usize) -> (Vec<T>, Vec<T>) {
    let step = T::PI() / T::from_count(n + 1);
    (1..=n)
        .map(|i| {
            let a = step * T::from_count(i);
            (a.cos(), step * a.sin() * a.sin())
        })
        .unzip()
}

/// Product cubature on the unit sphere `S^d`, `d` in 0..=3, exact for
/// polynomial integrands up to `exactness` total degree.
#[derive(Debug, Clone)]
pub struct SphereRule<T> {
    dim: usize,
    exactness: usize,
    nodes: Vec<SpherePoint<T>>,
    weights: Vec<T>,
}

impl<T: Scalar> SphereRule<T> {
    /// Rule for `S^dim` exact to degree `exactness`. S¹ uses the trapezoid
    /// rule with `4 lmax + 16` nodes (`lmax = ceil(exactness / 2)`); S² is
    /// Gauss–Legendre in `cos θ` times the same trapezoid; S³ adds a
    /// Gauss–Chebyshev rule in `cos χ`.
    pub fn new(dim: usize, exactness: usize) -> Result<Self> {
        let lmax = exactness.div_ceil(2);
        let n_phi = 4 * lmax + 16;
        let n_gauss = exactness / 2 + 1;
        let two_pi = T::lit(2.0) * T::PI();
        let phis: Vec<T> = (0..n_phi).map(|j| two_pi * T::from_count(j) / T::from_count(n_phi)).collect();
        let w_phi = two_pi / T::from_count(n_phi);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        match dim {
            0 => {
                nodes.push(SpherePoint::S0 { positive: true });
                nodes.push(SpherePoint::S0 { positive: false });
                weights.extend([T::one(), T::one()]);
            }
            1 => {
                for &phi in &phis {
                    nodes.push(SpherePoint::S1 { phi });
                    weights.push(w_phi);
                }
            }
            2 => {
                let (ts, ws) = gauss_legendre::<T>(n_gauss);
                for (&t, &w) in ts.iter().zip(&ws) {
                    let theta = t.acos();
                    for &phi in &phis {
                        nodes.push(SpherePoint::S2 { theta, phi });
                        weights.push(w * w_phi);
                    }
                }
            }
            3 => {
                let (cs, wc) = gauss_chebyshev_u::<T>(n_gauss);
                let (ts, wt) = gauss_legendre::<T>(n_gauss);
                for (&c, &w1) in cs.iter().zip(&wc) {
                    let chi = c.acos();
                    for (&t, &w2) in ts.iter().zip(&wt) {
                        let theta = t.acos();
                        for &phi in &phis {
                            nodes.push(SpherePoint::S3 { chi, theta, phi });
                            weights.push(w1 * w2 * w_phi);
                        }
                    }
                }
            }
            d => return Err(Error::Invalid(format!("no sphere rule for S^{d}"))),
        }
        Ok(Self { dim, exactness, nodes, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn exactness(&self) -> usize {
        self.exactness
    }

    pub fn nodes(&self) -> &[SpherePoint<T>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_{S^d} f`.
    pub fn integrate<F>(&self, mut f: F) -> Result<T>
    where
        F: FnMut(&SpherePoint<T>) -> Result<T>,
    {
        let terms =
            self.nodes.iter().zip(&self.weights).map(|(p, &w)| f(p).map(|v| w * v)).collect::<Result<Vec<T>>>()?;
        Ok(pairwise_sum(&terms))
    }
}

pub type Evaluator<'a, T> = Box<dyn Fn(T, &SpherePoint<T>) -> Result<T> + Send + Sync + 'a>;

/// A scalar field given pointwise in geodesic polar coordinates
/// `(r, direction)` about a pole of a constant-curvature chart of dimension
/// `dim` (`dim = 1` is a geodesic line or circle through the pole).
pub struct PointwiseField<'a, T> {
    dim: usize,
    k: T,
    eval: Evaluator<'a, T>,
}

impl<'a, T: Scalar> PointwiseField<'a, T> {
    pub fn new<F>(space: &ModelSpace<T>, f: F) -> Self
    where
        F: Fn(T, &SpherePoint<T>) -> Result<T> + Send + Sync + 'a,
    {
        Self { dim: space.dim(), k: space.curvature(), eval: Box::new(f) }
    }

    /// Field on a chart of arbitrary dimension `dim >= 1` with curvature `k`.
    pub fn with_chart<F>(dim: usize, k: T, f: F) -> Result<Self>
    where
        F: Fn(T, &SpherePoint<T>) -> Result<T> + Send + Sync + 'a,
    {
        if dim == 0 || dim > 4 {
            return Err(Error::Invalid(format!("unsupported chart dimension {dim}")));
        }
        Ok(Self { dim, k, eval: Box::new(f) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn curvature(&self) -> T {
        self.k
    }

    pub fn eval(&self, r: T, dir: &SpherePoint<T>) -> Result<T> {
        let v = (self.eval)(r, dir)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(domain(format!("field is not finite at r = {r}")))
        }
    }

    fn area_factor(&self, r: T) -> Result<T> {
        Ok(sin_k(self.k, r)?.powi(self.dim as i32 - 1))
    }
}

/// `q(r) = (sin_K r)^{n-1} Σ_j w_j u(r, node_j)²`.
pub fn q_quadrature<T: Scalar>(field: &PointwiseField<'_, T>, r: T, rule: &SphereRule<T>) -> Result<T> {
    if rule.dim() + 1 != field.dim() {
        return Err(Error::Invalid(format!(
            "rule on S^{} does not match a field of dimension {}",
            rule.dim(),
            field.dim()
        )));
    }
    if !(r > T::zero()) {
        return Err(domain(format!("q needs r > 0, got {r}")));
    }
    let area = field.area_factor(r)?;
    let sum = rule.integrate(|p| {
        let u = field.eval(r, p)?;
        Ok(u * u)
    })?;
    Ok(area * sum)
}

/// `∫_{B(r)} u² dVol` by Gauss–Legendre in the radius over
/// [`q_quadrature`] shells.
pub fn ball_integral<T: Scalar>(
    field: &PointwiseField<'_, T>,
    r: T,
    rule: &SphereRule<T>,
    radial_nodes: usize,
) -> Result<T> {
    if !(r > T::zero()) {
        return Err(domain(format!("ball radius must be positive, got {r}")));
    }
    let (xs, ws) = gauss_legendre::<T>(radial_nodes.max(1));
    let half = r / T::lit(2.0);
    let terms = xs
        .iter()
        .zip(&ws)
        .map(|(&x, &w)| q_quadrature(field, half * (x + T::one()), rule).map(|q| w * half * q))
        .collect::<Result<Vec<T>>>()?;
    Ok(pairwise_sum(&terms))
}

#[derive(Debug, Clone, Copy)]
struct Sample<T> {
    value: T,
    rho: T,
    dir: SpherePoint<T>,
}

fn ring_directions<T: Scalar>(dim: usize, k: T, rho: T, density: T) -> Result<Vec<SpherePoint<T>>> {
    let circ = if rho > T::zero() { sin_k(k, rho)? } else { T::zero() };
    let count = |len: T| -> usize { (len * density).ceil().to_usize().unwrap_or(1).max(1) };
    let two_pi = T::lit(2.0) * T::PI();
    Ok(match dim {
        1 => vec![SpherePoint::S0 { positive: true }, SpherePoint::S0 { positive: false }],
        2 => {
            let n = count(two_pi * circ);
            (0..n).map(|j| SpherePoint::S1 { phi: two_pi * T::from_count(j) / T::from_count(n) }).collect()
        }
        3 => {
            let nt = count(T::PI() * circ);
            let mut dirs = Vec::new();
            for i in 0..=nt {
                let theta = T::PI() * T::from_count(i) / T::from_count(nt);
                let np = count(two_pi * circ * theta.sin());
                for j in 0..np {
                    dirs.push(SpherePoint::S2 { theta, phi: two_pi * T::from_count(j) / T::from_count(np) });
                }
            }
            dirs
        }
        d => return Err(Error::Invalid(format!("sup-norm sampling not supported in dimension {d}"))),
    })
}

fn refine_directions<T: Scalar>(
    dim: usize,
    k: T,
    rho: T,
    density: T,
    center: &SpherePoint<T>,
) -> Result<Vec<SpherePoint<T>>> {
    const SUB: usize = 8;
    let circ = if rho > T::zero() { sin_k(k, rho)? } else { T::zero() };
    let offsets = |half: T| -> Vec<T> {
        (0..=2 * SUB).map(|i| half * (T::from_count(i) - T::from_count(SUB)) / T::from_count(SUB)).collect()
    };
    let two_pi = T::lit(2.0) * T::PI();
    Ok(match (dim, *center) {
        (1, c) => vec![c],
        (2, SpherePoint::S1 { phi }) => {
            let n = (two_pi * circ * density).ceil().max(T::one());
            offsets(two_pi / n).into_iter().map(|d| SpherePoint::S1 { phi: phi + d }).collect()
        }
        (3, SpherePoint::S2 { theta, phi }) => {
            let nt = (T::PI() * circ * density).ceil().max(T::one());
            let np = (two_pi * circ * theta.sin() * density).ceil().max(T::one());
            let mut dirs = Vec::new();
            for dt in offsets(T::PI() / nt) {
                let th = (theta + dt).max(T::zero()).min(T::PI());
                for dp in offsets(two_pi / np) {
                    dirs.push(SpherePoint::S2 { theta: th, phi: phi + dp });
                }
            }
            dirs
        }
        _ => return Err(Error::Invalid("refinement direction does not match the chart".into())),
    })
}

fn sample_ring<T: Scalar>(
    field: &PointwiseField<'_, T>,
    rho: T,
    dirs: &[SpherePoint<T>],
    best: &mut Option<Sample<T>>,
) -> Result<()> {
    for dir in dirs {
        let v = field.eval(rho, dir)?.abs();
        if best.as_ref().is_none_or(|b| v > b.value) {
            *best = Some(Sample { value: v, rho, dir: *dir });
        }
    }
    Ok(())
}

fn refine<T: Scalar>(field: &PointwiseField<'_, T>, coarse: &Sample<T>, r: T, density: T) -> Result<T> {
    const SUB: usize = 8;
    let step = density.recip();
    let mut best = Some(*coarse);
    for i in 0..=2 * SUB {
        let rho = coarse.rho + step * (T::from_count(i) - T::from_count(SUB)) / T::from_count(SUB);
        if rho < T::zero() || rho > r {
            continue;
        }
        let dirs = refine_directions(field.dim(), field.curvature(), coarse.rho, density, &coarse.dir)?;
        sample_ring(field, rho, &dirs, &mut best)?;
    }
    Ok(best.map(|b| b.value).unwrap_or_else(T::zero))
}

fn check_ball<T: Scalar>(field: &PointwiseField<'_, T>, r: T, density: T) -> Result<()> {
    if !(r >= T::zero()) || !r.is_finite() {
        return Err(domain(format!("ball radius must be finite and nonnegative, got {r}")));
    }
    if density < T::lit(8.0) {
        return Err(domain(format!("sampling density must be at least 8 per unit arc, got {density}")));
    }
    let k = field.curvature();
    if field.dim() > 1 && k > T::zero() && r * k.sqrt() >= T::PI() {
        return Err(domain("ball radius reaches the injectivity radius"));
    }
    Ok(())
}

/// Sampled `max_{B(r)} |u|`: rings every `1/density` in radius plus the
/// boundary sphere, directions at `density` per unit arc, then one pass at 8×
/// density around the coarse argmax. A lower bound on the true maximum.
pub fn sup_norm_ball<T: Scalar>(field: &PointwiseField<'_, T>, r: T, density: T) -> Result<T> {
    Ok(sup_norm_profile(field, &[r], density)?[0])
}

/// [`sup_norm_ball`] for an ascending list of radii on nested grids. The
/// returned values are nondecreasing.
pub fn sup_norm_profile<T: Scalar>(field: &PointwiseField<'_, T>, radii: &[T], density: T) -> Result<Vec<T>> {
    if radii.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Invalid("radii must be ascending".into()));
    }
    if let Some(&last) = radii.last() {
        check_ball(field, last, density)?;
    }
    let step = density.recip();
    let mut coarse: Option<Sample<T>> = None;
    let mut running = T::zero();
    let mut next_ring = 0usize;
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        check_ball(field, r, density)?;
        loop {
            let rho = step * T::from_count(next_ring);
            if rho >= r {
                break;
            }
            let dirs = ring_directions(field.dim(), field.curvature(), rho, density)?;
            sample_ring(field, rho, &dirs, &mut coarse)?;
            next_ring += 1;
        }
        let dirs = ring_directions(field.dim(), field.curvature(), r, density)?;
        sample_ring(field, r, &dirs, &mut coarse)?;
        if let Some(best) = coarse.as_ref() {
            running = running.max(best.value).max(refine(field, best, r, density)?);
        }
        out.push(running);
    }
    Ok(out)
}
