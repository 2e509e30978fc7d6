//! Real, unit-L²-normalized spherical harmonics on S¹, S² and S³, plus the
//! Legendre and Gegenbauer recurrences behind them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A point on a low-dimensional unit sphere in polar angles. `S0` is one of
/// the two points of the zero-sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpherePoint<T> {
    S0 { positive: bool },
    S1 { phi: T },
    S2 { theta: T, phi: T },
    S3 { chi: T, theta: T, phi: T },
}

impl<T: Scalar> SpherePoint<T> {
    pub fn sphere_dim(&self) -> usize {
        match self {
            SpherePoint::S0 { .. } => 0,
            SpherePoint::S1 { .. } => 1,
            SpherePoint::S2 { .. } => 2,
            SpherePoint::S3 { .. } => 3,
        }
    }

    /// Unit vector in `R^{d+1}`. For S³ the last coordinate is `cos χ`.
    pub fn to_cartesian(&self) -> Vec<T> {
        match *self {
            SpherePoint::S0 { positive } => vec![if positive { T::one() } else { -T::one() }],
            SpherePoint::S1 { phi } => vec![phi.cos(), phi.sin()],
            SpherePoint::S2 { theta, phi } => {
                let s = theta.sin();
                vec![s * phi.cos(), s * phi.sin(), theta.cos()]
            }
            SpherePoint::S3 { chi, theta, phi } => {
                let sc = chi.sin();
                let st = theta.sin();
                vec![sc * st * phi.cos(), sc * st * phi.sin(), sc * theta.cos(), chi.cos()]
            }
        }
    }

    /// Inverse of [`to_cartesian`](Self::to_cartesian); the input is normalized first.
    pub fn from_cartesian(v: &[T]) -> Result<Self> {
        let norm = v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
        if !(norm > T::zero()) {
            return Err(Error::Invalid("cannot project the zero vector to a sphere".into()));
        }
        let u: Vec<T> = v.iter().map(|&x| x / norm).collect();
        let clamp = |x: T| x.max(-T::one()).min(T::one());
        match u.len() {
            1 => Ok(SpherePoint::S0 { positive: u[0] > T::zero() }),
            2 => Ok(SpherePoint::S1 { phi: u[1].atan2(u[0]) }),
            3 => Ok(SpherePoint::S2 { theta: clamp(u[2]).acos(), phi: u[1].atan2(u[0]) }),
            4 => {
                let chi = clamp(u[3]).acos();
                let rest = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
                let theta = if rest > T::zero() { clamp(u[2] / rest).acos() } else { T::zero() };
                Ok(SpherePoint::S3 { chi, theta, phi: u[1].atan2(u[0]) })
            }
            d => Err(Error::Invalid(format!("unsupported sphere dimension {}", d - 1))),
        }
    }
}

/// Number of linearly independent degree-`l` harmonics on `S^{n-1}`.
pub fn multiplicity(n: usize, l: usize) -> usize {
    match n {
        0 | 1 => 0,
        2 => {
            if l == 0 {
                1
            } else {
                2
            }
        }
        _ => binomial(l + n - 1, n - 1) - if l >= 2 { binomial(l + n - 3, n - 1) } else { 0 },
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Degree `l`, multiplicity index `mu`, and eigenvalue `l(l+n-2)` of `-Δ_S`
/// on `S^{n-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SphericalMode {
    pub l: usize,
    pub mu: usize,
    pub eig: u64,
}

impl SphericalMode {
    pub fn new(n: usize, l: usize, mu: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid(format!("dimension must be at least 2, got {n}")));
        }
        let m = multiplicity(n, l);
        if mu >= m {
            return Err(Error::Invalid(format!("mode index {mu} out of range for degree {l} (multiplicity {m})")));
        }
        Ok(Self { l, mu, eig: (l as u64) * ((l + n - 2) as u64) })
    }
}

/// Offset of the first degree-`l` function in [`basis_values`] output.
pub fn degree_offset(n: usize, l: usize) -> usize {
    (0..l).map(|d| multiplicity(n, d)).sum()
}

/// Fully normalized associated Legendre table `Ŷ_l^m(θ)` (without the
/// azimuthal factor) for `0 <= m <= l <= lmax`, stored at `l(l+1)/2 + m`.
/// `∫_{S²} (Ŷ_l^m(θ) e^{imφ})² = 1`.
pub fn normalized_legendre<T: Scalar>(lmax: usize, cos_t: T, sin_t: T) -> Vec<T> {
    let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut p = vec![T::zero(); idx(lmax, lmax) + 1];
    p[0] = (T::lit(4.0) * T::PI()).sqrt().recip();
    for m in 1..=lmax {
        let fm = T::from_count(m);
        p[idx(m, m)] = ((T::lit(2.0) * fm + T::one()) / (T::lit(2.0) * fm)).sqrt() * sin_t * p[idx(m - 1, m - 1)];
    }
    for m in 0..lmax {
        p[idx(m + 1, m)] = (T::lit(2.0) * T::from_count(m) + T::lit(3.0)).sqrt() * cos_t * p[idx(m, m)];
    }
    for m in 0..=lmax {
        let fm = T::from_count(m);
        for l in (m + 2)..=lmax {
            let fl = T::from_count(l);
            let a = ((T::lit(4.0) * fl * fl - T::one()) / (fl * fl - fm * fm)).sqrt();
            let fl1 = fl - T::one();
            let b = ((fl1 * fl1 - fm * fm) / (T::lit(4.0) * fl1 * fl1 - T::one())).sqrt();
            p[idx(l, m)] = a * (cos_t * p[idx(l - 1, m)] - b * p[idx(l - 2, m)]);
        }
    }
    p
}

/// `C_k^{(α)}(t)` for `k = 0..=kmax`.
pub fn gegenbauer<T: Scalar>(kmax: usize, alpha: T, t: T) -> Vec<T> {
    let mut c = Vec::with_capacity(kmax + 1);
    c.push(T::one());
    if kmax >= 1 {
        c.push(T::lit(2.0) * alpha * t);
    }
    for k in 2..=kmax {
        let fk = T::from_count(k);
        let v = (T::lit(2.0) * t * (fk + alpha - T::one()) * c[k - 1]
            - (fk + T::lit(2.0) * alpha - T::lit(2.0)) * c[k - 2])
            / fk;
        c.push(v);
    }
    c
}

/// Real orthonormal S² harmonics of one degree, ordered `m = 0`, then
/// `cos mφ`, `sin mφ` for `m = 1..=l`.
pub fn s2_degree_values<T: Scalar>(l: usize, theta: T, phi: T) -> Vec<T> {
    let p = normalized_legendre(l, theta.cos(), theta.sin());
    let base = l * (l + 1) / 2;
    let sqrt2 = T::SQRT_2();
    let mut out = Vec::with_capacity(2 * l + 1);
    out.push(p[base]);
    for m in 1..=l {
        let fm = T::from_count(m);
        out.push(sqrt2 * p[base + m] * (fm * phi).cos());
        out.push(sqrt2 * p[base + m] * (fm * phi).sin());
    }
    out
}

fn s2_all_values<T: Scalar>(lmax: usize, theta: T, phi: T, out: &mut Vec<T>) {
    let p = normalized_legendre(lmax, theta.cos(), theta.sin());
    let sqrt2 = T::SQRT_2();
    let trig: Vec<(T, T)> = (0..=lmax)
        .map(|m| {
            let a = T::from_count(m) * phi;
            (a.cos(), a.sin())
        })
        .collect();
    for l in 0..=lmax {
        let base = l * (l + 1) / 2;
        out.push(p[base]);
        for (m, &(c, s)) in trig.iter().enumerate().take(l + 1).skip(1) {
            out.push(sqrt2 * p[base + m] * c);
            out.push(sqrt2 * p[base + m] * s);
        }
    }
}

/// `1 / sqrt(∫_0^π sin^{2j+2}χ C_{l-j}^{(j+1)}(cos χ)² dχ)`.
fn s3_radial_norm<T: Scalar>(l: usize, j: usize) -> T {
    // π 2^{-2j-1} (l+j+1)! / ((l-j)! (l+1) (j!)²)
    let mut ratio = T::one();
    for i in (l - j + 1)..=(l + j + 1) {
        ratio = ratio * T::from_count(i);
    }
    for i in 1..=j {
        let fi = T::from_count(i);
        ratio = ratio / (fi * fi);
    }
    let two_pow = T::lit(2.0).powi(-(2 * j as i32) - 1);
    (T::PI() * two_pow * ratio / T::from_count(l + 1)).sqrt().recip()
}

/// All orthonormal harmonics of degree `<= lmax` on `S^{n-1}` at `point`,
/// ordered by degree and then by multiplicity index. Supports `n` in 2..=4.
pub fn basis_values<T: Scalar>(n: usize, lmax: usize, point: &SpherePoint<T>) -> Result<Vec<T>> {
    if point.sphere_dim() + 1 != n {
        return Err(Error::Invalid(format!("point on S^{} cannot be used in dimension {n}", point.sphere_dim())));
    }
    let mut out = Vec::with_capacity(degree_offset(n, lmax + 1));
    match *point {
        SpherePoint::S1 { phi } => {
            let two_pi = T::lit(2.0) * T::PI();
            out.push(two_pi.sqrt().recip());
            let inv = T::PI().sqrt().recip();
            for l in 1..=lmax {
                let a = T::from_count(l) * phi;
                out.push(a.cos() * inv);
                out.push(a.sin() * inv);
            }
        }
        SpherePoint::S2 { theta, phi } => s2_all_values(lmax, theta, phi, &mut out),
        SpherePoint::S3 { chi, theta, phi } => {
            let mut s2 = Vec::new();
            s2_all_values(lmax, theta, phi, &mut s2);
            let (t, sc) = (chi.cos(), chi.sin());
            let geg: Vec<Vec<T>> = (0..=lmax).map(|j| gegenbauer(lmax - j, T::from_count(j + 1), t)).collect();
            for l in 0..=lmax {
                let mut sin_pow = T::one();
                for (j, g) in geg.iter().enumerate().take(l + 1) {
                    let radial = s3_radial_norm::<T>(l, j) * sin_pow * g[l - j];
                    let off = j * j;
                    for v in &s2[off..off + 2 * j + 1] {
                        out.push(radial * *v);
                    }
                    sin_pow = sin_pow * sc;
                }
            }
        }
        SpherePoint::S0 { .. } => {
            return Err(Error::Invalid("no harmonic basis on the zero-sphere".into()));
        }
    }
    Ok(out)
}
