//! Laplace eigenfunctions on round compact bases, their harmonic extension
//! `H(x, t) = u(x) cosh(√λ t)` to `M × ℝ`, and the growth estimates built on
//! it: the sphere/ball sandwich, local growth of ball maxima, the
//! chain-of-balls lower bound and the global doubling bound.
//!
//! Points of the base are unit vectors in `ℝ^{m+1}`; the circle is the unit
//! circle in `ℝ²`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::{gauss_legendre, sup_norm_ball, PointwiseField, SphereRule};
use crate::scalar::pairwise_sum;
use crate::spharm::{gegenbauer, multiplicity, normalized_legendre, s2_degree_values, SpherePoint};

use std::f64::consts::PI;

/// Compact base manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Base {
    /// Unit circle, `λ = l²`.
    Circle,
    /// Round unit sphere `S^m`, `λ = l(l+m-1)`.
    Sphere { m: usize },
}

impl Base {
    pub fn dim(self) -> usize {
        match self {
            Base::Circle => 1,
            Base::Sphere { m } => m,
        }
    }

    /// Sectional curvature bound (zero for the circle).
    pub fn curvature(self) -> f64 {
        match self {
            Base::Circle => 0.0,
            Base::Sphere { .. } => 1.0,
        }
    }

    pub fn diameter(self) -> f64 {
        PI
    }

    pub fn injectivity(self) -> f64 {
        PI
    }

    pub fn tag(self) -> String {
        match self {
            Base::Circle => "S1".into(),
            Base::Sphere { m } => format!("S{m}"),
        }
    }

    fn ambient(self) -> usize {
        self.dim() + 1
    }

    pub fn eigenvalue(self, l: usize) -> f64 {
        (l * (l + self.dim() - 1)) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    /// `a cos lθ + b sin lθ`.
    Circle { a: f64, b: f64 },
    /// `Σ c_μ Y_{l,μ}(R x)` with orthonormal real harmonics.
    Sphere2 { coeffs: Vec<f64>, rotation: [[f64; 3]; 3] },
    /// `C_l^{((m-1)/2)}(x_m) / C_l^{((m-1)/2)}(1)` about the last axis.
    Zonal,
}

/// A λ-eigenfunction `Δu + λu = 0` on a [`Base`], given in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenfunction {
    base: Base,
    l: usize,
    lambda: f64,
    scale: f64,
    kind: Kind,
}

const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Rotation by `angle` about the unit vector along `axis` (Rodrigues).
pub fn rotation_matrix(axis: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [x, y, z] = [axis[0] / n, axis[1] / n, axis[2] / n];
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
        [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
        [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
    ]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> Result<()> {
    let n = dot(v, v).sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Invalid("cannot normalize a zero vector".into()));
    }
    v.iter_mut().for_each(|x| *x /= n);
    Ok(())
}

/// Geodesic distance between unit vectors.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0).acos()
}

/// Orthonormal basis of the tangent space at the unit vector `c`.
pub fn tangent_frame(c: &[f64]) -> Vec<Vec<f64>> {
    let d = c.len();
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(d - 1);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| c[i].abs().total_cmp(&c[j].abs()));
    for &j in &order {
        if frame.len() + 1 == d {
            break;
        }
        let mut v = vec![0.0; d];
        v[j] = 1.0;
        for basis in std::iter::once(c).chain(frame.iter().map(|f| f.as_slice())) {
            let p = dot(&v, basis);
            v.iter_mut().zip(basis).for_each(|(x, b)| *x -= p * b);
        }
        if normalize(&mut v).is_ok() && dot(&v, &v) > 0.5 {
            frame.push(v);
        }
    }
    frame
}

/// `exp_c(ρ v)` for a tangent direction given in frame coordinates.
pub fn exp_map(c: &[f64], frame: &[Vec<f64>], rho: f64, v: &[f64]) -> Vec<f64> {
    let (s, co) = rho.sin_cos();
    let mut out: Vec<f64> = c.iter().map(|x| co * x).collect();
    for (e, &vi) in frame.iter().zip(v) {
        out.iter_mut().zip(e).for_each(|(o, ei)| *o += s * vi * ei);
    }
    out
}

/// Uniform random point on the base, from a seeded stream.
pub fn random_point(base: Base, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..base.ambient()).map(|_| StandardNormal.sample(rng)).collect();
        if normalize(&mut v).is_ok() {
            return v;
        }
    }
}

/// Point of `S²` from polar angles.
pub fn sphere_point(theta: f64, phi: f64) -> Vec<f64> {
    vec![theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// North pole `e_{m+1}` (or `(1, 0)` on the circle).
pub fn north_pole(base: Base) -> Vec<f64> {
    let mut v = vec![0.0; base.ambient()];
    match base {
        Base::Circle => v[0] = 1.0,
        Base::Sphere { m } => v[m] = 1.0,
    }
    v
}

impl Eigenfunction {
    /// `a cos lθ + b sin lθ` on the circle.
    pub fn circle(l: usize, a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || (a == 0.0 && (b == 0.0 || l == 0)) {
            return Err(Error::Invalid("circle mode needs a nonzero amplitude".into()));
        }
        Ok(Self { base: Base::Circle, l, lambda: (l * l) as f64, scale: 1.0, kind: Kind::Circle { a, b } })
    }

    /// Zonal harmonic of degree `l` on `S^m`, equal to 1 at the north pole.
    pub fn zonal(m: usize, l: usize) -> Result<Self> {
        if !(2..=4).contains(&m) {
            return Err(Error::Invalid(format!("zonal harmonics are supported on S^2..S^4, got S^{m}")));
        }
        let base = Base::Sphere { m };
        Ok(Self { base, l, lambda: base.eigenvalue(l), scale: 1.0, kind: Kind::Zonal })
    }

    /// Combination `Σ c_μ Y_{l,μ}` of orthonormal real harmonics on `S²`,
    /// ordered `m = 0`, then `cos mφ`, `sin mφ` for `m = 1..=l`.
    pub fn sphere2(l: usize, coeffs: Vec<f64>) -> Result<Self> {
        Self::sphere2_rotated(l, coeffs, IDENTITY)
    }

    /// `x ↦ Σ c_μ Y_{l,μ}(R x)`.
    pub fn sphere2_rotated(l: usize, coeffs: Vec<f64>, rotation: [[f64; 3]; 3]) -> Result<Self> {
        if coeffs.len() != multiplicity(3, l) {
            return Err(Error::Invalid(format!("degree {l} needs {} coefficients", 2 * l + 1)));
        }
        if coeffs.iter().any(|c| !c.is_finite()) || coeffs.iter().all(|&c| c == 0.0) {
            return Err(Error::Invalid("coefficients must be finite and not all zero".into()));
        }
        let base = Base::Sphere { m: 2 };
        Ok(Self { base, l, lambda: base.eigenvalue(l), scale: 1.0, kind: Kind::Sphere2 { coeffs, rotation } })
    }

    /// Real part of `Y_l^l`, proportional to `sin^l θ cos lφ`.
    pub fn sectoral(l: usize) -> Result<Self> {
        let mut c = vec![0.0; 2 * l + 1];
        c[if l == 0 { 0 } else { 2 * l - 1 }] = 1.0;
        Self::sphere2(l, c)
    }

    /// Degree-`l` harmonic on `S²` with i.i.d. standard normal coefficients.
    pub fn random_sphere2(l: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = (0..2 * l + 1).map(|_| StandardNormal.sample(&mut rng)).collect();
        Self::sphere2(l, c)
    }

    /// Same function composed with a rotation `x ↦ R x` (only for `S²`).
    pub fn rotated(&self, rotation: [[f64; 3]; 3]) -> Result<Self> {
        match &self.kind {
            Kind::Sphere2 { coeffs, rotation: r0 } => {
                let mut r = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        r[i][j] = (0..3).map(|k| r0[i][k] * rotation[k][j]).sum();
                    }
                }
                let mut out = Self::sphere2_rotated(self.l, coeffs.clone(), r)?;
                out.scale = self.scale;
                Ok(out)
            }
            Kind::Zonal if self.base == (Base::Sphere { m: 2 }) => {
                let mut c = vec![0.0; 2 * self.l + 1];
                c[0] = 1.0 / zonal_s2_peak(self.l);
                let mut out = Self::sphere2_rotated(self.l, c, rotation)?;
                out.scale = self.scale;
                Ok(out)
            }
            _ => Err(Error::Invalid("rotation is only supported on S^2".into())),
        }
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn degree(&self) -> usize {
        self.l
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Value at a unit vector of `ℝ^{m+1}`.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        let l = self.l;
        let v = match &self.kind {
            Kind::Circle { a, b } => {
                let t = x[1].atan2(x[0]) * l as f64;
                a * t.cos() + b * t.sin()
            }
            Kind::Zonal => {
                let m = self.base.dim();
                let alpha = (m as f64 - 1.0) / 2.0;
                let t = x[m].clamp(-1.0, 1.0);
                gegenbauer(l, alpha, t)[l] / gegenbauer(l, alpha, 1.0)[l]
            }
            Kind::Sphere2 { coeffs, rotation } => {
                let y: Vec<f64> = (0..3).map(|i| dot(&rotation[i], x)).collect();
                let theta = y[2].clamp(-1.0, 1.0).acos();
                let phi = y[1].atan2(y[0]);
                dot(coeffs, &s2_degree_values(l, theta, phi))
            }
        };
        self.scale * v
    }

    /// Value at `exp_c(ρ·dir)`.
    pub fn eval_polar(&self, c: &[f64], frame: &[Vec<f64>], rho: f64, dir: &SpherePoint<f64>) -> f64 {
        self.value_at(&exp_map(c, frame, rho, &dir.to_cartesian()))
    }

    /// `|Δu + λu|` at `x` from a sixth-order central difference along the
    /// geodesics through `x`.
    pub fn laplacian_defect(&self, x: &[f64]) -> f64 {
        let h = 0.03 / self.lambda.max(1.0).sqrt();
        let frame = tangent_frame(x);
        let lap: f64 = frame
            .iter()
            .map(|e| second_difference(h, |s| self.value_at(&exp_map(x, std::slice::from_ref(e), s, &[1.0]))))
            .sum();
        (lap + self.lambda * self.value_at(x)).abs()
    }

    /// Sampled `max_M |u|` and a point attaining it.
    pub fn global_max(&self) -> (f64, Vec<f64>) {
        match &self.kind {
            Kind::Circle { a, b } => {
                if self.l == 0 {
                    return ((self.scale * a).abs(), vec![1.0, 0.0]);
                }
                let t = b.atan2(*a) / self.l as f64;
                (self.scale.abs() * a.hypot(*b), vec![t.cos(), t.sin()])
            }
            Kind::Zonal => (self.scale.abs(), north_pole(self.base)),
            Kind::Sphere2 { .. } => {
                let nt = 8 * self.l + 32;
                let mut best = (-1.0, 0.0, 0.0);
                for i in 0..=nt {
                    let theta = PI * i as f64 / nt as f64;
                    for j in 0..2 * nt {
                        let phi = PI * j as f64 / nt as f64;
                        let v = self.value_at(&sphere_point(theta, phi)).abs();
                        if v > best.0 {
                            best = (v, theta, phi);
                        }
                    }
                }
                let mut step = PI / nt as f64;
                for _ in 0..40 {
                    let mut improved = false;
                    for (dt, dp) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                        let (t, p) = (best.1 + dt, best.2 + dp);
                        let v = self.value_at(&sphere_point(t, p)).abs();
                        if v > best.0 {
                            best = (v, t, p);
                            improved = true;
                        }
                    }
                    if !improved {
                        step *= 0.5;
                    }
                }
                (best.0, sphere_point(best.1, best.2))
            }
        }
    }

    /// Rescaled copy with sampled `max_M |u| = 1`.
    pub fn normalized(&self) -> Self {
        let (m, _) = self.global_max();
        let mut out = self.clone();
        out.scale /= m;
        out
    }

    /// `u` in geodesic polar coordinates about `center`, for the
    /// quadrature oracle.
    pub fn pointwise_at(&self, center: &[f64]) -> Result<PointwiseField<'_, f64>> {
        self.check_point(center)?;
        let c = center.to_vec();
        let frame = tangent_frame(center);
        PointwiseField::with_chart(self.base.dim(), self.base.curvature(), move |rho, dir| {
            Ok(self.eval_polar(&c, &frame, rho, dir))
        })
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.base.ambient() || (dot(x, x) - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("point is not on {}", self.base.tag())));
        }
        Ok(())
    }

    /// Sampling density per unit arc used for ball maxima.
    pub fn density(&self) -> f64 {
        (6.0 * self.lambda.sqrt()).max(12.0)
    }

    /// `M_r(u) = max_{B(c, r)} |u|`; radii at or past the diameter are the
    /// whole base.
    pub fn ball_max(&self, center: &[f64], r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(domain(format!("ball radius must be nonnegative, got {r}")));
        }
        let cap = match self.base {
            Base::Circle => PI,
            Base::Sphere { .. } => PI * (1.0 - 1e-9),
        };
        let field = self.pointwise_at(center)?;
        sup_norm_ball(&field, r.min(cap), self.density())
    }
}

fn zonal_s2_peak(l: usize) -> f64 {
    normalized_legendre(l, 1.0, 0.0)[l * (l + 1) / 2]
}

fn second_difference(h: f64, f: impl Fn(f64) -> f64) -> f64 {
    const W: [f64; 4] = [-490.0, 270.0, -27.0, 2.0];
    let mut acc = W[0] * f(0.0);
    for (k, w) in W.iter().enumerate().skip(1) {
        let s = h * k as f64;
        acc += w * (f(s) + f(-s));
    }
    acc / (180.0 * h * h)
}

/// `H(x, t) = u(x) cosh(√λ t)` on `N = M × ℝ`, harmonic for the product
/// metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedField {
    base: Eigenfunction,
    pole: Vec<f64>,
}

impl ExtendedField {
    /// Extension with geodesic polar coordinates about `(pole, 0)`.
    pub fn new(base: Eigenfunction, pole: Vec<f64>) -> Result<Self> {
        base.check_point(&pole)?;
        Ok(Self { base, pole })
    }

    pub fn base(&self) -> &Eigenfunction {
        &self.base
    }

    pub fn pole(&self) -> &[f64] {
        &self.pole
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        self.base.value_at(x) * (self.base.lambda.sqrt() * t).cosh()
    }

    /// `|Δ_M H + ∂²_t H|` by sixth-order central differences.
    pub fn laplacian_defect(&self, x: &[f64], t: f64) -> f64 {
        let h = 0.03 / self.base.lambda.max(1.0).sqrt();
        let frame = tangent_frame(x);
        let lap_m: f64 = frame
            .iter()
            .map(|e| second_difference(h, |s| self.eval(&exp_map(x, std::slice::from_ref(e), s, &[1.0]), t)))
            .sum();
        let lap_t = second_difference(h, |s| self.eval(x, t + s));
        (lap_m + lap_t).abs()
    }
}

/// `q(r)` of `H` on the geodesic sphere of radius `r` about `(pole, 0)`:
/// `2r ∫_0^{π/2} ∫_{S^{m-1}} u(exp(r sin ψ · θ))² cosh²(√λ r cos ψ)
/// sin_K(r sin ψ)^{m-1} dθ dψ`.
pub fn product_q(ext: &ExtendedField, r: f64, psi_nodes: usize) -> Result<f64> {
    let base = ext.base.base();
    if !(r > 0.0) || r >= base.injectivity() {
        return Err(domain(format!("product_q needs 0 < r < {}, got {r}", base.injectivity())));
    }
    let m = base.dim();
    let rule = SphereRule::<f64>::new(m - 1, 2 * ext.base.degree())?;
    let frame = tangent_frame(&ext.pole);
    let (xs, ws) = gauss_legendre::<f64>(psi_nodes.max(2));
    let sqrt_lambda = ext.base.lambda.sqrt();
    let half = PI / 4.0;
    let terms: Vec<f64> = xs
        .par_iter()
        .zip(ws.par_iter())
        .map(|(&x, &w)| {
            let psi = half * (x + 1.0);
            let rho = r * psi.sin();
            let area = match base {
                Base::Circle => 1.0,
                Base::Sphere { .. } => rho.sin().powi(m as i32 - 1),
            };
            let ch = (sqrt_lambda * r * psi.cos()).cosh();
            let shell = rule
                .integrate(|dir| {
                    let u = ext.base.eval_polar(&ext.pole, &frame, rho, dir);
                    Ok(u * u)
                })
                .expect("infallible integrand");
            w * half * shell * ch * ch * area
        })
        .collect();
    Ok(2.0 * r * pairwise_sum(&terms))
}

/// Default number of `ψ` nodes for [`product_q`].
pub fn default_psi_nodes(ext: &ExtendedField, r: f64) -> usize {
    32 + 4 * (ext.base.lambda.sqrt() * r).ceil() as usize + 2 * ext.base.degree()
}

/// One row of a sweep, shared by every check in this module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub base: String,
    pub l: usize,
    pub lambda: f64,
    pub r: f64,
    pub s: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub fitted_c1: f64,
    pub fitted_c2: f64,
}

/// CSV with header `base,l,lambda,r,s,lhs,rhs,margin,fitted_C1,fitted_C2`.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("base,l,lambda,r,s,lhs,rhs,margin,fitted_C1,fitted_C2\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.base, r.l, r.lambda, r.r, r.s, r.lhs, r.rhs, r.margin, r.fitted_c1, r.fitted_c2
        ));
    }
    out
}

/// Lower and upper ratios of the sphere/ball sandwich at one `(u, r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub base: String,
    pub l: usize,
    pub lambda: f64,
    pub r: f64,
    pub q: f64,
    pub m_alpha_r: f64,
    pub m_r: f64,
    /// `q (1 + r√λ)^{m+ε} / (r^m M_{αr}²)`.
    pub lower: f64,
    /// `q / (r^m e^{2r√λ} M_r²)`.
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub alpha: f64,
    pub eps: f64,
    pub rows: Vec<SandwichRow>,
    pub lower_min: f64,
    pub lower_max: f64,
    pub upper_min: f64,
    pub upper_max: f64,
    pub positive_finite: bool,
    pub max_variation: f64,
    /// `lower_max / lower_min ≤ max_variation`.
    pub lower_bounded: bool,
    /// `upper_max / upper_min ≤ max_variation`.
    pub upper_bounded: bool,
    /// Lower ratios bounded below by `lower_min > 0`, upper ratios bounded
    /// above within `max_variation` of their minimum.
    pub pass: bool,
}

impl SandwichReport {
    pub fn lower_variation(&self) -> f64 {
        self.lower_max / self.lower_min
    }

    pub fn upper_variation(&self) -> f64 {
        self.upper_max / self.upper_min
    }

    pub fn to_rows(&self) -> Vec<SweepRow> {
        self.rows
            .iter()
            .map(|r| SweepRow {
                base: r.base.clone(),
                l: r.l,
                lambda: r.lambda,
                r: r.r,
                s: r.r,
                lhs: r.lower,
                rhs: r.upper,
                margin: (self.upper_max / r.upper).min(r.lower / self.lower_min).ln(),
                fitted_c1: self.lower_min,
                fitted_c2: self.upper_max,
            })
            .collect()
    }
}

/// Sandwich ratios for each extension and radius. The check passes when
/// every ratio is positive and finite and each family of ratios varies by at
/// most `max_variation`.
pub fn sandwich_check(
    fields: &[ExtendedField],
    radii: &[f64],
    alpha: f64,
    eps: f64,
    max_variation: f64,
) -> Result<SandwichReport> {
    if !(alpha > 0.0 && alpha < 1.0) || !(eps > 0.0) {
        return Err(domain(format!("sandwich needs 0 < alpha < 1 and eps > 0, got {alpha}, {eps}")));
    }
    let jobs: Vec<(&ExtendedField, f64)> = fields.iter().flat_map(|f| radii.iter().map(move |&r| (f, r))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(ext, r)| {
            let u = ext.base();
            let m = u.base().dim() as f64;
            let sl = u.lambda().sqrt();
            let q = product_q(ext, r, default_psi_nodes(ext, r))?;
            let m_alpha = u.ball_max(ext.pole(), alpha * r)?;
            let m_r = u.ball_max(ext.pole(), r)?;
            Ok(SandwichRow {
                base: u.base().tag(),
                l: u.degree(),
                lambda: u.lambda(),
                r,
                q,
                m_alpha_r: m_alpha,
                m_r,
                lower: q * (1.0 + r * sl).powf(m + eps) / (r.powf(m) * m_alpha * m_alpha),
                upper: q / (r.powf(m) * (2.0 * r * sl).exp() * m_r * m_r),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fold = |f: fn(&SandwichRow) -> f64| {
        rows.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (lower_min, lower_max) = fold(|r| r.lower);
    let (upper_min, upper_max) = fold(|r| r.upper);
    let positive_finite =
        rows.iter().all(|r| r.lower.is_finite() && r.upper.is_finite() && r.lower > 0.0 && r.upper > 0.0);
    let lower_bounded = positive_finite && lower_max / lower_min <= max_variation;
    let upper_bounded = positive_finite && upper_max / upper_min <= max_variation;
    Ok(SandwichReport {
        alpha,
        eps,
        rows,
        lower_min,
        lower_max,
        upper_min,
        upper_max,
        positive_finite,
        max_variation,
        lower_bounded,
        upper_bounded,
        pass: positive_finite && upper_bounded,
    })
}

/// Radius multipliers of the local growth estimate:
/// `M_{βr}/M_{r·small} ≤ C₁ e^{C₂ s√λ} (M_{γs}/M_{s·inner})^{1 + C₃ r²K}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthRadii {
    pub big: f64,
    pub small: f64,
    pub outer: f64,
    pub inner: f64,
}

impl GrowthRadii {
    /// `3r, 2r, 8s, 3s`.
    pub const STANDARD: Self = Self { big: 3.0, small: 2.0, outer: 8.0, inner: 3.0 };
    /// `βr, r, γs, s` with `β = 1.5`, `γ = 3`.
    pub const REMARK: Self = Self { big: 1.5, small: 1.0, outer: 3.0, inner: 1.0 };
}

/// Both sides of the local growth estimate for one eigenfunction and ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSample {
    pub base: String,
    pub l: usize,
    pub lambda: f64,
    pub r: f64,
    pub s: f64,
    /// `log(M_{βr} / M_{r})`.
    pub lhs: f64,
    /// `(1 + C₃ r² K) log(M_{γs} / M_{s})`.
    pub power_term: f64,
    /// `s √λ`.
    pub x: f64,
}

impl GrowthSample {
    /// Quantity that `log C₁ + C₂ x` must dominate.
    pub fn y(&self) -> f64 {
        self.lhs - self.power_term
    }
}

/// `C₃ = 32 n` with `n = m + 1`.
pub fn growth_c3(base: Base) -> f64 {
    32.0 * (base.dim() + 1) as f64
}

/// Measures one [`GrowthSample`] at `center`.
pub fn local_growth_sample(
    u: &Eigenfunction,
    center: &[f64],
    r: f64,
    s: f64,
    radii: GrowthRadii,
) -> Result<GrowthSample> {
    let base = u.base();
    let k = base.curvature();
    let n = (base.dim() + 1) as f64;
    if !(r > 0.0 && r <= s) {
        return Err(domain(format!("local growth needs 0 < r <= s, got r = {r}, s = {s}")));
    }
    if k > 0.0 && s >= 1.0 / (4.0 * (n * k).sqrt()) {
        return Err(domain(format!("s = {s} reaches 1/(4 sqrt(nK))")));
    }
    if radii.outer * s >= base.diameter() {
        return Err(domain(format!("outer ball radius {} reaches the diameter", radii.outer * s)));
    }
    let m = |rad: f64| u.ball_max(center, rad);
    let lhs = (m(radii.big * r)? / m(radii.small * r)?).ln();
    let outer = (m(radii.outer * s)? / m(radii.inner * s)?).ln();
    Ok(GrowthSample {
        base: base.tag(),
        l: u.degree(),
        lambda: u.lambda(),
        r,
        s,
        lhs,
        power_term: (1.0 + growth_c3(base) * r * r * k) * outer,
        x: s * u.lambda().sqrt(),
    })
}

/// Constants of a fitted bound `y ≤ log C₁ + C₂ x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub c1: f64,
    pub c2: f64,
}

impl GrowthFit {
    pub fn log_bound(&self, x: f64) -> f64 {
        self.c1.ln() + self.c2 * x
    }
}

/// Smallest bound `y ≤ log C₁ + C₂ x` over `(x, y)` points: among the
/// supporting lines with `C₂ >= 0` the one with least mean gap is chosen,
/// then `C₁ = exp(max(y - C₂ x))`, and `C₁ >= 1`.
pub fn fit_bound(points: &[(f64, f64)]) -> Result<GrowthFit> {
    if points.is_empty() {
        return Err(Error::InsufficientRange("no samples to fit".into()));
    }
    let mut slopes = vec![0.0];
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            if (b.0 - a.0).abs() > 1e-12 {
                let s = (b.1 - a.1) / (b.0 - a.0);
                if s > 0.0 {
                    slopes.push(s);
                }
            }
        }
    }
    let intercept = |c2: f64| points.iter().map(|p| p.1 - c2 * p.0).fold(f64::NEG_INFINITY, f64::max);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for &c2 in &slopes {
        let b = intercept(c2);
        let gap = points.iter().map(|p| b + c2 * p.0 - p.1).sum::<f64>() / points.len() as f64;
        if gap < best.0 - 1e-12 || (gap <= best.0 + 1e-12 && c2 < best.1) {
            best = (gap, c2, b);
        }
    }
    Ok(GrowthFit { c1: best.2.max(0.0).exp(), c2: best.1 })
}

/// `C₁ = exp(max(y - C₂ x))` with `C₂` held fixed.
pub fn refit_c1(points: &[(f64, f64)], c2: f64) -> f64 {
    points.iter().map(|p| p.1 - c2 * p.0).fold(0.0f64, f64::max).exp()
}

/// Local growth over a degree sweep, fitted on the lower half of the
/// degrees and re-checked on the full range with `C₂` frozen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalGrowthReport {
    pub samples: Vec<GrowthSample>,
    pub fit_small: GrowthFit,
    pub fit_full: GrowthFit,
    /// `C₁` refitted on the full range with `C₂ = fit_small.c2`.
    pub c1_frozen: f64,
    pub c1_ratio: f64,
    pub stability_factor: f64,
    pub pass: bool,
}

impl LocalGrowthReport {
    pub fn to_rows(&self) -> Vec<SweepRow> {
        let fit = GrowthFit { c1: self.c1_frozen, c2: self.fit_small.c2 };
        self.samples
            .iter()
            .map(|s| {
                let rhs = fit.log_bound(s.x) + s.power_term;
                SweepRow {
                    base: s.base.clone(),
                    l: s.l,
                    lambda: s.lambda,
                    r: s.r,
                    s: s.s,
                    lhs: s.lhs,
                    rhs,
                    margin: rhs - s.lhs,
                    fitted_c1: fit.c1,
                    fitted_c2: fit.c2,
                }
            })
            .collect()
    }
}

/// Measures every `(degree, center, (r, s))` combination and fits the
/// growth constants. Degrees `<= split` form the small range.
pub fn local_growth_sweep(
    family: &(dyn Fn(usize) -> Result<Eigenfunction> + Sync),
    degrees: &[usize],
    split: usize,
    centers: &[Vec<f64>],
    pairs: &[(f64, f64)],
    radii: GrowthRadii,
    stability_factor: f64,
) -> Result<LocalGrowthReport> {
    let jobs: Vec<(usize, usize, (f64, f64))> = degrees
        .iter()
        .flat_map(|&l| (0..centers.len()).flat_map(move |c| pairs.iter().map(move |&p| (l, c, p))))
        .collect();
    let samples = jobs
        .par_iter()
        .map(|&(l, c, (r, s))| local_growth_sample(&family(l)?, &centers[c], r, s, radii))
        .collect::<Result<Vec<_>>>()?;
    let pts = |pred: &dyn Fn(&GrowthSample) -> bool| -> Vec<(f64, f64)> {
        samples.iter().filter(|s| pred(s)).map(|s| (s.x, s.y())).collect()
    };
    let small = pts(&|s| s.l <= split);
    let full = pts(&|_| true);
    let fit_small = fit_bound(&small)?;
    let fit_full = fit_bound(&full)?;
    let c1_frozen = refit_c1(&full, fit_small.c2);
    let c1_ratio = c1_frozen / fit_small.c1;
    Ok(LocalGrowthReport {
        samples,
        fit_small,
        fit_full,
        c1_frozen,
        c1_ratio,
        stability_factor,
        pass: c1_ratio <= stability_factor && c1_ratio.is_finite(),
    })
}

/// Fits the one-step chain inequality
/// `M_{3r₀}(x)³ ≤ C₁ e^{C₂ r₀ √λ} M_{2r₀}(x)` over `centers`.
pub fn fit_chain_constants(fields: &[Eigenfunction], centers: &[Vec<f64>], r0: f64) -> Result<GrowthFit> {
    let jobs: Vec<(usize, usize)> = (0..fields.len()).flat_map(|i| (0..centers.len()).map(move |c| (i, c))).collect();
    let pts = jobs
        .par_iter()
        .map(|&(i, c)| {
            let u = &fields[i];
            let y = 3.0 * u.ball_max(&centers[c], 3.0 * r0)?.ln() - u.ball_max(&centers[c], 2.0 * r0)?.ln();
            Ok((r0 * u.lambda().sqrt(), y))
        })
        .collect::<Result<Vec<_>>>()?;
    fit_bound(&pts)
}

/// One link of a [`BallChain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub point: Vec<f64>,
    /// `log max_{B(x_k, 2r₀)} |u|`, measured.
    pub measured_log: f64,
    /// Certified lower bound for `measured_log`.
    pub certified_log: f64,
    /// `measured_log_k - (3 measured_log_{k-1} - log C₁ - C₂ r₀ √λ)`.
    pub step_margin: f64,
}

/// Chain of balls from the global maximum to a target point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallChain {
    pub base: String,
    pub l: usize,
    pub lambda: f64,
    pub r0: f64,
    pub fit: GrowthFit,
    pub steps: Vec<ChainStep>,
    /// Number of links `N`.
    pub links: usize,
    /// Exponent `N' = (3^N - 1)/2` carried by `C₁ e^{C₂ r₀ √λ}`.
    pub exponent: f64,
    pub log_bound: f64,
    pub bound: f64,
    pub measured: f64,
    pub sound: bool,
}

impl BallChain {
    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.steps.iter().map(|s| s.point.as_slice())
    }
}

/// Points `x_0 = from, ..., x_N = to` along a minimizing geodesic with
/// `N = floor(d / r₀) + 1` equal steps (none when `d = 0`).
pub fn chain_points(from: &[f64], to: &[f64], r0: f64) -> Result<Vec<Vec<f64>>> {
    if !(r0 > 0.0) {
        return Err(Error::Chain(format!("step radius must be positive, got {r0}")));
    }
    let d = distance(from, to);
    if d == 0.0 {
        return Ok(vec![from.to_vec()]);
    }
    let links = (d / r0).floor() as usize + 1;
    let budget = (PI / (r0 / 2.0)).ceil() as usize + 1;
    if links > budget {
        return Err(Error::Chain(format!("{links} links exceed the budget of {budget}")));
    }
    let mut dir: Vec<f64> = to.iter().zip(from).map(|(t, f)| t - dot(from, to) * f).collect();
    if normalize(&mut dir).is_err() {
        dir = tangent_frame(from).swap_remove(0);
    }
    Ok((0..=links)
        .map(|k| {
            let t = d * k as f64 / links as f64;
            if k == links {
                to.to_vec()
            } else {
                from.iter().zip(&dir).map(|(f, e)| t.cos() * f + t.sin() * e).collect()
            }
        })
        .collect())
}

/// Certified lower bound for `max_{B(target, 2r₀)} |u|` by chaining the
/// one-step inequality from the global maximum, in log space:
/// `b_k = 3 b_{k-1} - log C₁ - C₂ r₀ √λ`, `b_0 = 0`.
pub fn chain_lower_bound(u: &Eigenfunction, target: &[f64], r0: f64, fit: GrowthFit) -> Result<BallChain> {
    u.check_point(target)?;
    let (peak, x0) = u.global_max();
    if (peak - 1.0).abs() > 1e-6 {
        return Err(Error::Invalid(format!("chain needs max |u| = 1, got {peak}")));
    }
    let pts = chain_points(&x0, target, r0)?;
    let a = fit.log_bound(r0 * u.lambda().sqrt());
    let measured: Vec<f64> =
        pts.par_iter().map(|p| u.ball_max(p, 2.0 * r0).map(|m| m.min(1.0).ln())).collect::<Result<Vec<_>>>()?;
    let mut steps = Vec::with_capacity(pts.len());
    let mut cert = 0.0;
    for (k, p) in pts.into_iter().enumerate() {
        let step_margin = if k == 0 { measured[0] } else { measured[k] - (3.0 * measured[k - 1] - a) };
        if k > 0 {
            cert = 3.0 * cert - a;
        }
        steps.push(ChainStep { point: p, measured_log: measured[k], certified_log: cert, step_margin });
    }
    let links = steps.len() - 1;
    let last = steps.last().expect("chain has a start");
    let log_bound = last.certified_log;
    let measured_last = last.measured_log.exp();
    Ok(BallChain {
        base: u.base().tag(),
        l: u.degree(),
        lambda: u.lambda(),
        r0,
        fit,
        links,
        exponent: (3f64.powi(links as i32) - 1.0) / 2.0,
        log_bound,
        bound: log_bound.exp(),
        measured: measured_last,
        sound: steps.iter().all(|s| s.certified_log <= s.measured_log + 1e-12),
        steps,
    })
}

/// `log(M_{3r}/M_{2r}) / √λ` at one center; zero when `2r` reaches the
/// diameter, where both balls are the whole base.
pub fn df_ratio(u: &Eigenfunction, center: &[f64], r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(domain(format!("df check needs r > 0, got {r}")));
    }
    if u.lambda() == 0.0 {
        return Err(domain("df ratio is undefined for λ = 0"));
    }
    if 2.0 * r >= u.base().diameter() {
        return Ok(0.0);
    }
    let ratio = u.ball_max(center, 3.0 * r)? / u.ball_max(center, 2.0 * r)?;
    Ok(ratio.ln() / u.lambda().sqrt())
}

/// Supremum of [`df_ratio`] over centers and two nested degree ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfReport {
    pub base: String,
    pub r: f64,
    pub rows: Vec<(usize, f64)>,
    pub sup_small: f64,
    pub sup_full: f64,
    pub ratio: f64,
    pub stability_factor: f64,
    pub pass: bool,
}

impl DfReport {
    pub fn to_rows(&self) -> Vec<SweepRow> {
        self.rows
            .iter()
            .map(|&(l, v)| SweepRow {
                base: self.base.clone(),
                l,
                lambda: l as f64,
                r: self.r,
                s: self.r,
                lhs: v,
                rhs: self.sup_full,
                margin: self.sup_full - v,
                fitted_c1: self.sup_small,
                fitted_c2: self.sup_full,
            })
            .collect()
    }
}

/// DF bound over `degrees` (all `>= 1`) and `centers`; degrees `<= split`
/// form the small range. Rows hold the per-degree supremum.
pub fn df_bound_check(
    family: &(dyn Fn(usize) -> Result<Eigenfunction> + Sync),
    degrees: &[usize],
    split: usize,
    centers: &[Vec<f64>],
    r: f64,
    stability_factor: f64,
) -> Result<DfReport> {
    let per_degree = degrees
        .par_iter()
        .map(|&l| {
            let u = family(l)?;
            let mut sup = f64::NEG_INFINITY;
            for c in centers {
                sup = sup.max(df_ratio(&u, c, r)?);
            }
            Ok((l, sup, u.base().tag()))
        })
        .collect::<Result<Vec<_>>>()?;
    let sup_where = |pred: &dyn Fn(usize) -> bool| {
        per_degree.iter().filter(|p| pred(p.0)).map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
    };
    let sup_small = sup_where(&|l| l <= split);
    let sup_full = sup_where(&|_| true);
    let ratio = if sup_small > 0.0 {
        sup_full / sup_small
    } else if sup_full <= 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    Ok(DfReport {
        base: per_degree.first().map(|p| p.2.clone()).unwrap_or_default(),
        r,
        rows: per_degree.iter().map(|p| (p.0, p.1)).collect(),
        sup_small,
        sup_full,
        ratio,
        stability_factor,
        pass: ratio <= stability_factor,
    })
}

/// Least-squares line `y = a + b x` with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

pub fn linear_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if points.len() < 2 || !(sxx > 0.0) {
        return Err(Error::InsufficientRange("regression needs at least two distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(LinearFit { intercept: my - slope * mx, slope, r_squared })
}
