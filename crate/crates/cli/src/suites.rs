//! Suite drivers. Each returns its envelope and the files to write.

use std::f64::consts::PI;

use curvelab_core::eigenextend::{
    chain_lower_bound, df_bound_check, fit_chain_constants, linear_fit, local_growth_sweep, rows_to_csv,
    sandwich_check, sphere_point, BallChain, DfReport, Eigenfunction, ExtendedField, GrowthFit, GrowthRadii, LinearFit,
    LocalGrowthReport, SandwichReport, SweepRow,
};
use curvelab_core::harmonic_spectral::{
    convexity_residuals, doubling_check, garofalo_lin_monotonicity, log_grid, GrowthReport, HarmonicField,
    MonotonicityCheck, ProfileSet,
};
use curvelab_core::modelspace::{lemma54_derivative, lemma54_slack, ComparisonPair, Lemma54Part, ModelSpace};
use curvelab_core::nodal2d::{default_resolution, nodal_rows_to_csv, trace_nodal, yau_scaling_fit, NodalRow, YauFit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Suite};
use crate::error::CliError;
use crate::plot::{chart, Series};
use crate::report::{to_json, Envelope};

/// Result of one suite: the envelope and `(file name, contents)` pairs.
pub struct Outcome {
    pub envelope: Envelope,
    pub files: Vec<(String, String)>,
}

pub fn run_suite(cfg: &ExperimentConfig, plots: bool) -> Result<Outcome, CliError> {
    match cfg.suite {
        Suite::Convexity => convexity(cfg, plots),
        Suite::Doubling => doubling(cfg),
        Suite::Sandwich => sandwich(cfg),
        Suite::Growth => growth(cfg, plots),
        Suite::Chain => chain(cfg, plots),
        Suite::Df => df(cfg),
        Suite::Nodal => nodal(cfg, plots),
        Suite::Lemma54 => lemma54(cfg),
    }
}

fn finish<D: Serialize>(
    cfg: &ExperimentConfig,
    cases: usize,
    worst: f64,
    tolerance: f64,
    details: &D,
    mut files: Vec<(String, String)>,
) -> Outcome {
    let envelope = Envelope::new(cfg.suite.name(), cfg.seed, cases, worst, tolerance, cfg.raw.clone());
    files.insert(0, (format!("{}.json", cfg.suite), to_json(&envelope, details)));
    Outcome { envelope, files }
}

fn min_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::INFINITY, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.min(b) })
}

/// `ln(bound / value)`, nonnegative iff `value <= bound`.
fn log_margin(bound: f64, value: f64) -> f64 {
    if value.is_nan() {
        f64::NAN
    } else {
        bound.ln() - value.ln()
    }
}

fn degrees_or(cfg: &ExperimentConfig, default: std::ops::RangeInclusive<usize>) -> Vec<usize> {
    cfg.degrees.clone().unwrap_or_else(|| default.collect())
}

fn split_of(degrees: &[usize]) -> usize {
    degrees.iter().copied().max().unwrap_or(0) / 2
}

fn zonal_s2(l: usize) -> curvelab_core::Result<Eigenfunction> {
    Eigenfunction::zonal(2, l)
}

#[derive(Serialize)]
struct ConvexityCase {
    n: usize,
    curvature: f64,
    field_seed: u64,
    lmax: usize,
    growth: GrowthReport,
    monotonicity: MonotonicityCheck,
}

fn convexity(cfg: &ExperimentConfig, plots: bool) -> Result<Outcome, CliError> {
    let dims = cfg.dims.clone().unwrap_or(vec![2]);
    let curvatures = cfg.curvatures.clone().unwrap_or(vec![0.0]);
    let degrees = degrees_or(cfg, 1..=12);
    let samples = cfg.samples.unwrap_or(20);
    let tol = cfg.tolerance.unwrap_or(1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lmax = degrees.iter().copied().max().expect("degrees are nonempty");
    let mut cases = Vec::new();
    for &n in &dims {
        for &k in &curvatures {
            let space = ModelSpace::new(n, k)?;
            let big_r = space.admissible_radius().finite();
            let radii = match &cfg.radii {
                Some(g) => g.values(),
                None => log_grid(0.05, big_r.map_or(2.0, |r| 0.9 * r), 64),
            };
            if let Some(rr) = big_r {
                if let Some(&bad) = radii.iter().find(|&&r| r >= rr) {
                    return Err(CliError::Config(format!(
                        "radius {bad} exceeds the admissible radius {rr} at n = {n}, K = {k}"
                    )));
                }
            }
            let profiles = ProfileSet::new(&space, lmax, &radii)?;
            let jobs: Vec<(usize, u64)> =
                (0..samples).map(|_| (degrees[rng.random_range(0..degrees.len())], rng.random::<u64>())).collect();
            let pair = ComparisonPair::exact(k);
            let done = jobs
                .par_iter()
                .map(|&(l, field_seed)| {
                    let field = HarmonicField::random(&space, l, field_seed)?;
                    let growth = convexity_residuals(&field, &profiles, &radii, &pair, tol)?;
                    let monotonicity = garofalo_lin_monotonicity(&field, &profiles, &radii, k.abs(), tol)?;
                    Ok(ConvexityCase { n, curvature: k, field_seed, lmax: l, growth, monotonicity })
                })
                .collect::<curvelab_core::Result<Vec<_>>>()?;
            cases.extend(done);
        }
    }
    let worst = min_of(cases.iter().flat_map(|c| [c.growth.worst_margin, c.monotonicity.worst]));
    let mut csv =
        String::from("n,curvature,field_seed,lmax,r,q,dlogq,d2logq,residual_i,residual_ii,residual_ii_tilde\n");
    for c in &cases {
        let g = &c.growth;
        for i in 0..g.r.len() {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                c.n,
                c.curvature,
                c.field_seed,
                c.lmax,
                g.r[i],
                g.q[i],
                g.dlogq[i],
                g.d2logq[i],
                g.residual_i[i],
                g.residual_ii[i],
                g.residual_ii_tilde[i]
            ));
        }
    }
    let mut files = vec![("convexity.csv".to_string(), csv)];
    if plots {
        let label = |c: &ConvexityCase| format!("n={} K={} lmax={}", c.n, c.curvature, c.lmax);
        let zip = |a: &[f64], b: &[f64]| a.iter().copied().zip(b.iter().copied()).collect::<Vec<_>>();
        let q: Vec<Series> =
            cases.iter().take(8).map(|c| Series::line(label(c), zip(&c.growth.r, &c.growth.q))).collect();
        files.push(("convexity_q.svg".into(), chart("q(r)", "r", "q", &q, true, true)));
        let res: Vec<Series> = cases
            .iter()
            .take(4)
            .flat_map(|c| {
                [
                    Series::line(format!("(i) {}", label(c)), zip(&c.growth.r, &c.growth.residual_i)),
                    Series::line(format!("(ii) {}", label(c)), zip(&c.growth.r, &c.growth.residual_ii)),
                ]
            })
            .collect();
        files
            .push(("convexity_residuals.svg".into(), chart("convexity residuals", "r", "residual", &res, true, false)));
    }
    Ok(finish(cfg, cases.len(), worst, tol, &cases, files))
}

#[derive(Serialize)]
struct DoublingCase {
    n: usize,
    curvature: f64,
    field_seed: u64,
    lmax: usize,
    r: f64,
    s: f64,
    margin: f64,
}

fn doubling(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let dims = cfg.dims.clone().unwrap_or(vec![2, 3]);
    let curvatures = cfg.curvatures.clone().unwrap_or(vec![1.0]);
    if curvatures.contains(&0.0) {
        return Err(CliError::Config("doubling needs nonzero curvatures".into()));
    }
    let degrees = degrees_or(cfg, 1..=12);
    let samples = cfg.samples.unwrap_or(100);
    let tol = cfg.tolerance.unwrap_or(1e-8);
    let lmax = degrees.iter().copied().max().expect("degrees are nonempty");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cases = Vec::new();
    for &n in &dims {
        for &k in &curvatures {
            let space = ModelSpace::new(n, k)?;
            let bound = k.abs();
            let limit = 1.0 / (4.0 * (n as f64 * bound).sqrt());
            let grid = log_grid(0.01 * limit, 2.0 * limit, 48);
            let profiles = ProfileSet::new(&space, lmax, &grid)?;
            let jobs: Vec<(usize, u64, f64, f64)> = (0..samples)
                .map(|_| {
                    let s = limit * rng.random_range(0.1..0.99);
                    let r = s * rng.random_range(0.1..1.0);
                    (degrees[rng.random_range(0..degrees.len())], rng.random::<u64>(), r, s)
                })
                .collect();
            let done = jobs
                .par_iter()
                .map(|&(l, field_seed, r, s)| {
                    let field = HarmonicField::random(&space, l, field_seed)?;
                    let margin = doubling_check(&field, &profiles, r, s, bound)?;
                    Ok(DoublingCase { n, curvature: k, field_seed, lmax: l, r, s, margin })
                })
                .collect::<curvelab_core::Result<Vec<_>>>()?;
            cases.extend(done);
        }
    }
    let worst = min_of(cases.iter().map(|c| c.margin));
    let mut csv = String::from("n,curvature,field_seed,lmax,r,s,margin\n");
    for c in &cases {
        csv.push_str(&format!("{},{},{},{},{},{},{}\n", c.n, c.curvature, c.field_seed, c.lmax, c.r, c.s, c.margin));
    }
    Ok(finish(cfg, cases.len(), worst, tol, &cases, vec![("doubling.csv".into(), csv)]))
}

fn sandwich(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let degrees = degrees_or(cfg, 0..=20);
    let radii = cfg
        .radii
        .clone()
        .map_or_else(|| crate::config::RadiusGrid::Lin { min: 0.05, max: 0.5, count: 10 }.values(), |g| g.values());
    if let Some(&bad) = radii.iter().find(|&&r| r >= PI) {
        return Err(CliError::Config(format!("radius {bad} reaches the injectivity radius π")));
    }
    let factor = cfg.factor.unwrap_or(1e3);
    let tol = cfg.tolerance.unwrap_or(1e-9);
    let mut fields = Vec::new();
    for &l in &degrees {
        fields.push(ExtendedField::new(Eigenfunction::circle(l, 1.0, 0.0)?, vec![1.0, 0.0])?);
    }
    for &l in &degrees {
        fields.push(ExtendedField::new(zonal_s2(l)?, vec![0.0, 0.0, 1.0])?);
    }
    let report: SandwichReport =
        sandwich_check(&fields, &radii, cfg.alpha.unwrap_or(0.5), cfg.eps.unwrap_or(0.1), factor)?;
    let worst = if report.positive_finite { log_margin(factor, report.upper_variation()) } else { f64::NEG_INFINITY };
    let csv = rows_to_csv(&report.to_rows());
    Ok(finish(cfg, report.rows.len(), worst, tol, &report, vec![("sandwich.csv".into(), csv)]))
}

#[derive(Serialize)]
struct GrowthDetails {
    standard: LocalGrowthReport,
    remark: LocalGrowthReport,
}

fn growth(cfg: &ExperimentConfig, plots: bool) -> Result<Outcome, CliError> {
    let degrees = degrees_or(cfg, 2..=20);
    let factor = cfg.factor.unwrap_or(4.0);
    let tol = cfg.tolerance.unwrap_or(1e-9);
    let split = split_of(&degrees);
    let centers: Vec<Vec<f64>> = [0.0, 0.3, 0.7, 1.2, PI / 2.0].iter().map(|&t| sphere_point(t, 0.0)).collect();
    let pairs = [(0.05, 0.1), (0.1, 0.1), (0.08, 0.12)];
    let sweep = |radii| local_growth_sweep(&zonal_s2, &degrees, split, &centers, &pairs, radii, factor);
    let details = GrowthDetails { standard: sweep(GrowthRadii::STANDARD)?, remark: sweep(GrowthRadii::REMARK)? };
    let worst = min_of([details.standard.c1_ratio, details.remark.c1_ratio].map(|v| log_margin(factor, v)));
    let cases = details.standard.samples.len() + details.remark.samples.len();
    let mut files = vec![
        ("growth_standard.csv".to_string(), rows_to_csv(&details.standard.to_rows())),
        ("growth_remark.csv".to_string(), rows_to_csv(&details.remark.to_rows())),
    ];
    if plots {
        let rep = &details.standard;
        let pts: Vec<(f64, f64)> = rep.samples.iter().map(|s| (s.x, s.y())).collect();
        let xmax = pts.iter().map(|p| p.0).fold(0.0, f64::max);
        let line = |fit: GrowthFit| (0..=32).map(|i| xmax * i as f64 / 32.0).map(|x| (x, fit.log_bound(x))).collect();
        let series = [
            Series::scatter("samples", pts),
            Series::line("fit, small range", line(rep.fit_small)),
            Series::line("fit, full range", line(rep.fit_full)),
        ];
        files.push((
            "growth_fit.svg".into(),
            chart("local growth", "s sqrt(lambda)", "log ratio", &series, false, false),
        ));
    }
    Ok(finish(cfg, cases, worst, tol, &details, files))
}

#[derive(Serialize)]
struct ChainDetails {
    r0: f64,
    fit: GrowthFit,
    chains: Vec<BallChain>,
    /// `log(1/bound)` against `√λ`.
    scaling: LinearFit,
}

fn chain(cfg: &ExperimentConfig, plots: bool) -> Result<Outcome, CliError> {
    let degrees = degrees_or(cfg, 2..=14);
    let tol = cfg.tolerance.unwrap_or(1e-9);
    let r0 = match cfg.radii.as_ref().map(|g| g.values()) {
        None => 0.4,
        Some(v) if v.len() == 1 => v[0],
        Some(_) => return Err(CliError::Config("chain takes a single radius r0".into())),
    };
    let fields = degrees.iter().map(|&l| zonal_s2(l)).collect::<curvelab_core::Result<Vec<_>>>()?;
    let centers: Vec<Vec<f64>> = (0..49).map(|i| sphere_point(PI * i as f64 / 48.0, 0.0)).collect();
    let fit = fit_chain_constants(&fields, &centers, r0)?;
    let target = sphere_point(PI, 0.0);
    let chains =
        fields.iter().map(|u| chain_lower_bound(u, &target, r0, fit)).collect::<curvelab_core::Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = chains.iter().map(|c| (c.lambda.sqrt(), -c.log_bound)).collect();
    let scaling = linear_fit(&pts)?;
    let margins = chains.iter().map(|c| if c.sound { c.measured.ln() - c.log_bound } else { f64::NEG_INFINITY });
    let worst = min_of(margins);
    let rows: Vec<SweepRow> = chains
        .iter()
        .map(|c| SweepRow {
            base: c.base.clone(),
            l: c.l,
            lambda: c.lambda,
            r: r0,
            s: r0,
            lhs: c.measured.ln(),
            rhs: c.log_bound,
            margin: c.measured.ln() - c.log_bound,
            fitted_c1: fit.c1,
            fitted_c2: fit.c2,
        })
        .collect();
    let mut files = vec![("chain.csv".to_string(), rows_to_csv(&rows))];
    if plots {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let line = xs.iter().map(|&x| (x, scaling.intercept + scaling.slope * x)).collect();
        let series = [Series::scatter("log(1/bound)", pts.clone()), Series::line("linear fit", line)];
        files.push((
            "chain_scaling.svg".into(),
            chart("chain certificate", "sqrt(lambda)", "log(1/bound)", &series, false, false),
        ));
    }
    let details = ChainDetails { r0, fit, chains, scaling };
    Ok(finish(cfg, details.chains.len(), worst, tol, &details, files))
}

fn df(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let degrees = degrees_or(cfg, 1..=20);
    if degrees.contains(&0) {
        return Err(CliError::Config("df needs degrees >= 1".into()));
    }
    let radii = cfg.radii.clone().map_or(vec![0.1, 0.2, 0.3], |g| g.values());
    let factor = cfg.factor.unwrap_or(2.0);
    let tol = cfg.tolerance.unwrap_or(1e-9);
    let split = split_of(&degrees);
    let centers: Vec<Vec<f64>> = (0..13).map(|i| sphere_point(PI * i as f64 / 12.0, 0.0)).collect();
    let reports = radii
        .iter()
        .map(|&r| df_bound_check(&zonal_s2, &degrees, split, &centers, r, factor))
        .collect::<curvelab_core::Result<Vec<DfReport>>>()?;
    let worst = min_of(reports.iter().map(|r| log_margin(factor, r.ratio)));
    let rows: Vec<SweepRow> = reports.iter().flat_map(|r| r.to_rows()).collect();
    let cases = reports.iter().map(|r| r.rows.len()).sum();
    Ok(finish(cfg, cases, worst, tol, &reports, vec![("df.csv".into(), rows_to_csv(&rows))]))
}

#[derive(Serialize)]
struct NodalDetails {
    sectoral: Vec<NodalRow>,
    sectoral_worst_relative_error: f64,
    scaling: YauFit,
}

fn nodal(cfg: &ExperimentConfig, plots: bool) -> Result<Outcome, CliError> {
    let degrees = degrees_or(cfg, 4..=24);
    let samples = cfg.samples.unwrap_or(2);
    let tol = cfg.tolerance.unwrap_or(1e-9);
    let sectoral = [1usize, 2, 4, 8, 16]
        .par_iter()
        .map(|&l| trace_nodal(&Eigenfunction::sectoral(l)?, default_resolution(l)).map(|t| NodalRow::from(&t)))
        .collect::<curvelab_core::Result<Vec<_>>>()?;
    let err = min_of(sectoral.iter().map(|r| -(r.length / (2.0 * PI * r.l as f64) - 1.0).abs()));
    let seed = cfg.seed;
    let family = move |l: usize, k: usize| {
        Eigenfunction::random_sphere2(l, seed.wrapping_add(1000 * l as u64).wrapping_add(k as u64))
    };
    let scaling = yau_scaling_fit(&degrees, samples, &family)?;
    let worst = min_of([0.01 + err, scaling.slope - 0.85, 1.15 - scaling.slope]);
    let mut files = vec![("nodal.csv".to_string(), nodal_rows_to_csv(&scaling.rows))];
    if plots {
        let pts: Vec<(f64, f64)> = scaling.rows.iter().map(|r| (r.lambda.sqrt().ln(), r.length.ln())).collect();
        let line = pts.iter().map(|&(x, _)| (x, scaling.intercept + scaling.slope * x)).collect();
        let series = [Series::scatter("traced length", pts), Series::line(format!("slope {:.4}", scaling.slope), line)];
        files.push((
            "nodal_scaling.svg".into(),
            chart("nodal length", "log sqrt(lambda)", "log length", &series, false, false),
        ));
        let lmax = degrees.iter().copied().max().expect("degrees are nonempty");
        let trace = trace_nodal(&family(lmax, 0)?, default_resolution(lmax))?;
        files.push(("nodal_trace.svg".into(), trace.to_svg()));
    }
    let details = NodalDetails { sectoral, sectoral_worst_relative_error: -err, scaling };
    let cases = details.sectoral.len() + details.scaling.rows.len();
    Ok(finish(cfg, cases, worst, tol, &details, files))
}

#[derive(Serialize)]
struct Lemma54Arrays {
    part: &'static str,
    lower: f64,
    upper: f64,
    limit_at_zero: f64,
    /// `|f'(1e-7) - limit|` from the one-sided stencil.
    limit_error: f64,
    min: f64,
    max: f64,
    worst_slack: f64,
    x: Vec<f64>,
    derivative: Vec<f64>,
}

/// Grid end for the parts defined on all of `[0, ∞)`.
const UNBOUNDED_END: f64 = 25.0;

fn lemma54(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let samples = cfg.samples.unwrap_or(10_000);
    let tol = cfg.tolerance.unwrap_or(1e-9);
    let parts = Lemma54Part::ALL
        .iter()
        .map(|&part| {
            let end = part.domain_end::<f64>().unwrap_or(UNBOUNDED_END);
            let x: Vec<f64> = (0..samples).map(|i| end * i as f64 / samples as f64).collect();
            let derivative =
                x.iter().map(|&v| lemma54_derivative(part, v)).collect::<curvelab_core::Result<Vec<_>>>()?;
            let (lower, upper) = part.bounds::<f64>();
            let limit = part.limit_at_zero::<f64>();
            Ok(Lemma54Arrays {
                part: part.name(),
                lower,
                upper,
                limit_at_zero: limit,
                limit_error: (lemma54_derivative(part, 1e-7)? - limit).abs(),
                min: min_of(derivative.iter().copied()),
                max: derivative.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                worst_slack: min_of(derivative.iter().map(|&d| lemma54_slack(part, d))),
                x,
                derivative,
            })
        })
        .collect::<curvelab_core::Result<Vec<_>>>()?;
    let worst = min_of(parts.iter().flat_map(|p| [p.worst_slack, 1e-6 - p.limit_error]));
    let mut csv = String::from("part,x,derivative\n");
    for p in &parts {
        for (x, d) in p.x.iter().zip(&p.derivative) {
            csv.push_str(&format!("{},{x},{d}\n", p.part));
        }
    }
    let cases = parts.iter().map(|p| p.x.len()).sum();
    Ok(finish(cfg, cases, worst, tol, &parts, vec![("lemma54.csv".into(), csv)]))
}
