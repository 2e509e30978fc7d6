//! Nodal lines of spherical harmonics on `S²` by marching squares on a
//! latitude-longitude grid, and the length-versus-`√λ` scaling fit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigenextend::{distance, linear_fit, sphere_point, Base, Eigenfunction};
use crate::error::{domain, Error, Result};

use std::f64::consts::PI;

/// Traced zero set of one eigenfunction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalTrace {
    pub l: usize,
    pub lambda: f64,
    /// Cells per great circle (longitude); latitude uses half as many.
    pub resolution: usize,
    pub segments: Vec<([f64; 3], [f64; 3])>,
    pub length: f64,
}

/// Smallest resolution accepted for degree `l`.
pub fn nyquist_resolution(l: usize) -> usize {
    8 * l
}

/// Resolution used when none is given.
pub fn default_resolution(l: usize) -> usize {
    (16 * l).max(16)
}

fn crossing(a: (f64, f64, f64), b: (f64, f64, f64)) -> (f64, f64) {
    let t = a.2 / (a.2 - b.2);
    (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
}

fn to_point(p: (f64, f64)) -> [f64; 3] {
    let v = sphere_point(p.0, p.1);
    [v[0], v[1], v[2]]
}

/// Marching squares on `resolution` longitude cells (offset by half a cell)
/// and `resolution / 2` latitude cells, poles included. Zero counts as
/// positive; saddle cells are split by the sign at the cell centre.
pub fn trace_nodal(u: &Eigenfunction, resolution: usize) -> Result<NodalTrace> {
    if u.base() != (Base::Sphere { m: 2 }) {
        return Err(Error::Invalid(format!("nodal tracing needs S^2, got {}", u.base().tag())));
    }
    let l = u.degree();
    let required = nyquist_resolution(l).max(4);
    if resolution < required {
        return Err(Error::Resolution { resolution, required });
    }
    let n_lon = resolution;
    let n_lat = resolution / 2;
    let theta = |i: usize| PI * i as f64 / n_lat as f64;
    let phi = |j: usize| 2.0 * PI * (j as f64 + 0.5) / n_lon as f64;
    let values: Vec<Vec<f64>> = (0..=n_lat)
        .into_par_iter()
        .map(|i| (0..n_lon).map(|j| u.value_at(&sphere_point(theta(i), phi(j)))).collect())
        .collect();
    let positive = |v: f64| v >= 0.0;
    let rows: Vec<Vec<([f64; 3], [f64; 3])>> = (0..n_lat)
        .into_par_iter()
        .map(|i| {
            let mut segs = Vec::new();
            for j in 0..n_lon {
                let j1 = (j + 1) % n_lon;
                let (p0, p1) = (phi(j), phi(j) + 2.0 * PI / n_lon as f64);
                let c = [
                    (theta(i), p0, values[i][j]),
                    (theta(i), p1, values[i][j1]),
                    (theta(i + 1), p1, values[i + 1][j1]),
                    (theta(i + 1), p0, values[i + 1][j]),
                ];
                let cut: Vec<Option<(f64, f64)>> = (0..4)
                    .map(|e| {
                        let (a, b) = (c[e], c[(e + 1) % 4]);
                        (positive(a.2) != positive(b.2)).then(|| crossing(a, b))
                    })
                    .collect();
                let hits: Vec<usize> = (0..4).filter(|&e| cut[e].is_some()).collect();
                let pairs: Vec<(usize, usize)> = match hits.len() {
                    2 => vec![(hits[0], hits[1])],
                    4 => {
                        let mid = u.value_at(&sphere_point((theta(i) + theta(i + 1)) / 2.0, (p0 + p1) / 2.0));
                        if positive(mid) == positive(c[0].2) {
                            vec![(0, 1), (2, 3)]
                        } else {
                            vec![(3, 0), (1, 2)]
                        }
                    }
                    _ => Vec::new(),
                };
                for (a, b) in pairs {
                    let (pa, pb) = (cut[a].expect("edge crossed"), cut[b].expect("edge crossed"));
                    segs.push((to_point(pa), to_point(pb)));
                }
            }
            segs
        })
        .collect();
    let segments: Vec<_> = rows.into_iter().flatten().collect();
    let length = segments.iter().map(|(a, b)| distance(a, b)).sum();
    Ok(NodalTrace { l, lambda: u.lambda(), resolution, segments, length })
}

impl NodalTrace {
    pub fn length_over_sqrt_lambda(&self) -> f64 {
        self.length / self.lambda.sqrt()
    }

    /// Equirectangular SVG of the traced segments.
    pub fn to_svg(&self) -> String {
        let (w, h) = (720.0, 360.0);
        let project = |p: &[f64; 3]| {
            let theta = p[2].clamp(-1.0, 1.0).acos();
            let phi = p[1].atan2(p[0]).rem_euclid(2.0 * PI);
            (phi / (2.0 * PI) * w, theta / PI * h)
        };
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"{w}\" height=\"{h}\" fill=\"white\" stroke=\"black\"/>\n"
        );
        for (a, b) in &self.segments {
            let (pa, pb) = (project(a), project(b));
            if (pa.0 - pb.0).abs() > w / 2.0 {
                continue;
            }
            out.push_str(&format!(
                "<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"black\" stroke-width=\"0.6\"/>\n",
                pa.0, pa.1, pb.0, pb.1
            ));
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Regression of `log length` against `log √λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YauFit {
    pub rows: Vec<NodalRow>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `min length / √λ` over the samples.
    pub c1: f64,
    /// `max length / √λ` over the samples.
    pub c2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalRow {
    pub l: usize,
    pub lambda: f64,
    pub length: f64,
    pub length_over_sqrt_lambda: f64,
}

impl From<&NodalTrace> for NodalRow {
    fn from(t: &NodalTrace) -> Self {
        Self { l: t.l, lambda: t.lambda, length: t.length, length_over_sqrt_lambda: t.length_over_sqrt_lambda() }
    }
}

/// CSV with header `l,lambda,length,length_over_sqrt_lambda`.
pub fn nodal_rows_to_csv(rows: &[NodalRow]) -> String {
    let mut out = String::from("l,lambda,length,length_over_sqrt_lambda\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.l, r.lambda, r.length, r.length_over_sqrt_lambda));
    }
    out
}

/// Traces `family(l, k)` for `k < samples` at each degree (default
/// resolution) and fits the scaling law.
pub fn yau_scaling_fit(
    degrees: &[usize],
    samples: usize,
    family: &(dyn Fn(usize, usize) -> Result<Eigenfunction> + Sync),
) -> Result<YauFit> {
    if let Some(&l) = degrees.iter().find(|&&l| !(2..=40).contains(&l)) {
        return Err(domain(format!("degree {l} is outside 2..=40")));
    }
    let mut distinct = degrees.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 || samples == 0 {
        return Err(Error::InsufficientRange("scaling fit needs at least two distinct degrees".into()));
    }
    let jobs: Vec<(usize, usize)> = degrees.iter().flat_map(|&l| (0..samples).map(move |k| (l, k))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(l, k)| trace_nodal(&family(l, k)?, default_resolution(l)).map(|t| NodalRow::from(&t)))
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.lambda.sqrt().ln(), r.length.ln())).collect();
    let fit = linear_fit(&pts)?;
    let ratios = rows.iter().map(|r| r.length_over_sqrt_lambda);
    let c1 = ratios.clone().fold(f64::INFINITY, f64::min);
    let c2 = ratios.fold(f64::NEG_INFINITY, f64::max);
    Ok(YauFit { rows, slope: fit.slope, intercept: fit.intercept, r_squared: fit.r_squared, c1, c2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn equator_and_meridians() {
        let z = Eigenfunction::zonal(2, 1).unwrap();
        let t = trace_nodal(&z, 32).unwrap();
        assert_relative_eq!(t.length, 2.0 * PI, max_relative = 1e-2);
        let x = Eigenfunction::sphere2(1, vec![0.0, 1.0, 0.0]).unwrap();
        assert_relative_eq!(trace_nodal(&x, 16).unwrap().length, 2.0 * PI, max_relative = 1e-9);
        let s = Eigenfunction::sectoral(4).unwrap();
        assert_relative_eq!(trace_nodal(&s, 64).unwrap().length, 8.0 * PI, max_relative = 1e-9);
    }

    #[test]
    fn guards() {
        let s = Eigenfunction::sectoral(4).unwrap();
        assert_eq!(trace_nodal(&s, 31).unwrap_err(), Error::Resolution { resolution: 31, required: 32 });
        let c = Eigenfunction::circle(2, 1.0, 0.0).unwrap();
        assert!(trace_nodal(&c, 64).is_err());
        let constant = Eigenfunction::zonal(2, 0).unwrap();
        assert_eq!(trace_nodal(&constant, 16).unwrap().length, 0.0);
        let fam = |l: usize, _k: usize| Eigenfunction::sectoral(l);
        assert!(matches!(yau_scaling_fit(&[4, 4], 1, &fam), Err(Error::InsufficientRange(_))));
    }

    #[test]
    fn csv_and_svg() {
        let t = trace_nodal(&Eigenfunction::sectoral(2).unwrap(), 32).unwrap();
        let csv = nodal_rows_to_csv(&[NodalRow::from(&t)]);
        assert!(csv.starts_with("l,lambda,length,length_over_sqrt_lambda\n2,6,"));
        assert!(t.to_svg().contains("<line"));
    }
}
