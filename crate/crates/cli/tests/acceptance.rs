//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria 7 and 9 are expected to fail (see `EXPECTED_RED`); the run
//! errors if any other criterion fails or if an expected failure passes.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use curvelab_core::eigenextend::{
    chain_lower_bound, df_bound_check, fit_chain_constants, linear_fit, local_growth_sweep, sandwich_check,
    sphere_point, Eigenfunction, ExtendedField, GrowthRadii,
};
use curvelab_core::harmonic_spectral::{
    convexity_residuals, doubling_check, garofalo_lin_monotonicity, log_grid, q_eval, HarmonicField, Normalization,
    ProfileSet,
};
use curvelab_core::modelspace::{lemma54_derivative, lemma54_slack, ComparisonPair, Lemma54Part, ModelSpace};
use curvelab_core::nodal2d::{default_resolution, trace_nodal, yau_scaling_fit};
use curvelab_core::quadrature::{q_quadrature, SphereRule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXPECTED_RED: [u32; 2] = [7, 9];

struct Outcome {
    id: u32,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn timed(id: u32, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = f();
    Outcome { id, pass, detail, elapsed: start.elapsed() }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn criterion_1() -> (bool, String) {
    let space = ModelSpace::new(2, 0.0).unwrap();
    let radii: Vec<f64> = (1..=20).map(|i| 0.1 * i as f64).collect();
    let set = ProfileSet::new(&space, 8, &radii).unwrap();
    let mut worst = 0.0f64;
    for l in 0..=8 {
        let u = HarmonicField::single(&space, l, 0, 1.0, Normalization::Trigonometric).unwrap();
        let rule = SphereRule::new(1, 2 * l + 2).unwrap();
        let pw = u.pointwise(&set);
        for &r in &radii {
            let exact = if l == 0 { 2.0 * PI * r } else { PI * r.powi(2 * l as i32 + 1) };
            worst = worst.max(rel(q_eval(&u, &set, r).unwrap().q, exact));
            worst = worst.max(rel(q_quadrature(&pw, r, &rule).unwrap(), exact));
        }
    }
    (worst <= 1e-10, format!("worst relative error {worst:.2e}"))
}

/// Random corpus shared by criteria 2, 3, 4 and 6.
struct CorpusResult {
    cross: f64,
    res_i: f64,
    res_ii: f64,
    res_ii_slack: f64,
    gl: f64,
    gl_pass: bool,
    fields: usize,
}

fn corpus() -> CorpusResult {
    let mut out = CorpusResult {
        cross: 0.0,
        res_i: f64::INFINITY,
        res_ii: f64::INFINITY,
        res_ii_slack: f64::INFINITY,
        gl: f64::INFINITY,
        gl_pass: true,
        fields: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(20240607);
    for n in 2..=4 {
        let rules: Vec<SphereRule<f64>> = (0..=12).map(|l| SphereRule::new(n - 1, 2 * l).unwrap()).collect();
        for k in [-1.0, 0.0, 1.0] {
            let space = ModelSpace::new(n, k).unwrap();
            let r_max = space.admissible_radius().finite().map_or(2.0, |r| 0.9 * r);
            let grid = log_grid(0.05, r_max, 16);
            let set = ProfileSet::new(&space, 12, &grid).unwrap();
            let slack = ComparisonPair::new(k - 0.5, k + 0.5).unwrap();
            let slack_limit = if k + 0.5 > 0.0 { PI / (2.0 * (k + 0.5f64).sqrt()) } else { f64::INFINITY };
            let slack_grid: Vec<f64> = grid.iter().copied().filter(|&r| r < 0.999 * slack_limit).collect();
            for _ in 0..100 {
                let lmax = rng.random_range(1..=12usize);
                let field = HarmonicField::random(&space, lmax, rng.random()).unwrap();
                let pw = field.pointwise(&set);
                for _ in 0..2 {
                    let r = grid[rng.random_range(0..grid.len())];
                    let a = q_eval(&field, &set, r).unwrap().q;
                    let b = q_quadrature(&pw, r, &rules[lmax]).unwrap();
                    out.cross = out.cross.max(rel(b, a));
                }
                let rep = convexity_residuals(&field, &set, &grid, &ComparisonPair::exact(k), 1e-6).unwrap();
                out.res_i = out.res_i.min(rep.residual_i.iter().copied().fold(f64::INFINITY, f64::min));
                out.res_ii = out.res_ii.min(rep.residual_ii.iter().copied().fold(f64::INFINITY, f64::min));
                let rep = convexity_residuals(&field, &set, &slack_grid, &slack, 1e-6).unwrap();
                out.res_ii_slack = out.res_ii_slack.min(rep.residual_ii.iter().copied().fold(f64::INFINITY, f64::min));
                let gl = garofalo_lin_monotonicity(&field, &set, &grid, k.abs(), 1e-6).unwrap();
                out.gl = out.gl.min(gl.worst);
                out.gl_pass &= gl.pass;
                out.fields += 1;
            }
        }
    }
    out
}

fn sharpness() -> f64 {
    let mut worst = 0.0f64;
    let rs = log_grid(0.05, 1.4, 24);
    for k in [1.0, -1.0] {
        let space = ModelSpace::new(2, k).unwrap();
        let set = ProfileSet::new(&space, 8, &rs).unwrap();
        for l in 0..=8 {
            for mu in 0..if l == 0 { 1 } else { 2 } {
                let f = HarmonicField::single(&space, l, mu, 1.0, Normalization::Orthonormal).unwrap();
                let rep = convexity_residuals(&f, &set, &rs, &ComparisonPair::exact(k), 1e-6).unwrap();
                worst = rep.residual_ii.iter().fold(worst, |a, b| a.max(b.abs()));
            }
        }
    }
    worst
}

fn criterion_5() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for n in [2usize, 3] {
        let space = ModelSpace::new(n, 1.0).unwrap();
        let limit = 1.0 / (4.0 * (n as f64).sqrt());
        let set = ProfileSet::new(&space, 12, &log_grid(0.01 * limit, 2.0 * limit, 48)).unwrap();
        for _ in 0..250 {
            let field = HarmonicField::random(&space, rng.random_range(1..=12usize), rng.random()).unwrap();
            let s = limit * rng.random_range(0.05..0.999);
            let r = s * rng.random_range(0.2..1.0);
            worst = worst.min(doubling_check(&field, &set, r, s, 1.0).unwrap());
            count += 1;
        }
    }
    (worst >= -1e-8, format!("{count} triples, worst margin {worst:.3e}"))
}

fn criterion_7() -> (bool, String) {
    let radii: Vec<f64> = (0..10).map(|i| 0.05 + 0.05 * i as f64).collect();
    let mut fields = Vec::new();
    for l in 0..=20 {
        fields.push(ExtendedField::new(Eigenfunction::circle(l, 1.0, 0.0).unwrap(), vec![1.0, 0.0]).unwrap());
        fields.push(ExtendedField::new(Eigenfunction::zonal(2, l).unwrap(), vec![0.0, 0.0, 1.0]).unwrap());
    }
    let rep = sandwich_check(&fields, &radii, 0.5, 0.1, 1e3).unwrap();
    let pass = rep.positive_finite && rep.lower_bounded && rep.upper_bounded;
    (
        pass,
        format!(
            "lower ratio in [{:.3e}, {:.3e}] (variation {:.2e}), upper ratio in [{:.3e}, {:.3e}] (variation {:.2e})",
            rep.lower_min,
            rep.lower_max,
            rep.lower_variation(),
            rep.upper_min,
            rep.upper_max,
            rep.upper_variation()
        ),
    )
}

fn criterion_8() -> (bool, String) {
    let zonal = |l: usize| Eigenfunction::zonal(2, l);
    let degrees: Vec<usize> = (2..=20).collect();
    let centers: Vec<Vec<f64>> = [0.0, 0.3, 0.7, 1.2, PI / 2.0].iter().map(|&t| sphere_point(t, 0.0)).collect();
    let pairs = [(0.05, 0.1), (0.1, 0.1), (0.08, 0.12)];
    let std = local_growth_sweep(&zonal, &degrees, 10, &centers, &pairs, GrowthRadii::STANDARD, 4.0).unwrap();
    let remark = local_growth_sweep(&zonal, &degrees, 10, &centers, &pairs, GrowthRadii::REMARK, 4.0).unwrap();

    let df_degrees: Vec<usize> = (1..=20).collect();
    let df_centers: Vec<Vec<f64>> = (0..13).map(|i| sphere_point(PI * i as f64 / 12.0, 0.0)).collect();
    let df: Vec<_> = [0.1, 0.2, 0.3]
        .iter()
        .map(|&r| df_bound_check(&zonal, &df_degrees, 10, &df_centers, r, 2.0).unwrap())
        .collect();
    let df_worst = df.iter().map(|d| d.ratio).fold(0.0, f64::max);

    let fields: Vec<Eigenfunction> = (2..=14).map(|l| zonal(l).unwrap()).collect();
    let fit_centers: Vec<Vec<f64>> = (0..49).map(|i| sphere_point(PI * i as f64 / 48.0, 0.0)).collect();
    let fit = fit_chain_constants(&fields, &fit_centers, 0.4).unwrap();
    let target = sphere_point(PI, 0.0);
    let chains: Vec<_> = fields.iter().map(|u| chain_lower_bound(u, &target, 0.4, fit).unwrap()).collect();
    let sound = chains.iter().all(|c| c.sound && c.bound <= c.measured);
    let scaling = linear_fit(&chains.iter().map(|c| (c.lambda.sqrt(), -c.log_bound)).collect::<Vec<_>>()).unwrap();

    let pass = std.pass && remark.pass && df.iter().all(|d| d.pass) && sound && scaling.slope.is_finite();
    (
        pass,
        format!(
            "growth C1 ratio {:.3}/{:.3} (<= 4), DF ratio {:.3} (<= 2), chains sound {sound}, log(1/bound) slope {:.3e} R^2 {:.6}",
            std.c1_ratio, remark.c1_ratio, df_worst, scaling.slope, scaling.r_squared
        ),
    )
}

fn criterion_9() -> (bool, String) {
    let mut worst = f64::INFINITY;
    let mut failing = Vec::new();
    for part in Lemma54Part::ALL {
        let end = part.domain_end::<f64>().unwrap_or(25.0);
        let mut part_worst = f64::INFINITY;
        for i in 0..10_000 {
            let x = end * i as f64 / 10_000.0;
            part_worst = part_worst.min(lemma54_slack(part, lemma54_derivative(part, x).unwrap()));
        }
        if part_worst < -1e-9 {
            failing.push(format!("{} ({part_worst:.4})", part.name()));
        }
        worst = worst.min(part_worst);
    }
    let limits: [(Lemma54Part, f64); 2] = [(Lemma54Part::CotSqrt, -1.0 / 3.0), (Lemma54Part::CothSqrt, 1.0 / 3.0)];
    let limit_err = limits
        .iter()
        .map(|&(p, v)| {
            (lemma54_derivative(p, 0.0).unwrap() - v).abs().max((lemma54_derivative(p, 1e-7).unwrap() - v).abs())
        })
        .fold(0.0, f64::max);
    let pass = worst >= -1e-9 && limit_err <= 1e-6;
    (pass, format!("worst slack {worst:.4e}, limit error {limit_err:.1e}, violated: [{}]", failing.join(", ")))
}

fn criterion_10() -> (bool, String) {
    let mut sect = 0.0f64;
    for l in [1usize, 2, 4, 8, 16] {
        let t = trace_nodal(&Eigenfunction::sectoral(l).unwrap(), default_resolution(l)).unwrap();
        sect = sect.max(rel(t.length, 2.0 * PI * l as f64));
    }
    let family = |l: usize, k: usize| Eigenfunction::random_sphere2(l, 2024 + 1000 * l as u64 + k as u64);
    let degrees: Vec<usize> = (4..=24).collect();
    let fit = yau_scaling_fit(&degrees, 2, &family).unwrap();
    let pass = sect <= 0.01 && (0.85..=1.15).contains(&fit.slope);
    (pass, format!("sectoral error {sect:.2e}, slope {:.4}, R^2 {:.4}", fit.slope, fit.r_squared))
}

fn criterion_11() -> (bool, String) {
    let exe = env!("CARGO_BIN_EXE_curvelab");
    let tmp = tempfile::tempdir().unwrap();
    let mut compared = 0;
    let mut mismatched = Vec::new();
    for suite in ["convexity", "doubling", "sandwich", "growth", "chain", "df", "nodal", "lemma54"] {
        let cfg = tmp.path().join(format!("{suite}.cfg"));
        std::fs::write(&cfg, format!("suite = {suite}\nseed = 11\n")).unwrap();
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let dir = tmp.path().join(format!("{suite}-{rep}"));
            let status = Command::new(exe)
                .args(["run", "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(&dir)
                .stdout(Stdio::null())
                .status()
                .unwrap();
            assert!(matches!(status.code(), Some(0 | 1)), "{suite} exited with {status}");
            outputs.push(dir);
        }
        for entry in std::fs::read_dir(&outputs[0]).unwrap() {
            let name = entry.unwrap().file_name();
            let a = std::fs::read(outputs[0].join(&name)).unwrap();
            let b = std::fs::read(Path::new(&outputs[1]).join(&name)).unwrap_or_default();
            compared += 1;
            if a != b {
                mismatched.push(name.to_string_lossy().into_owned());
            }
        }
    }
    (mismatched.is_empty(), format!("{compared} report files compared, mismatched: {mismatched:?}"))
}

fn main() {
    let mut results = vec![timed(1, criterion_1)];

    let start = Instant::now();
    let c = corpus();
    let corpus_time = start.elapsed();
    let n = c.fields;
    results.push(Outcome {
        id: 2,
        pass: c.cross <= 1e-8 && corpus_time < Duration::from_secs(60),
        detail: format!("{n} fields, worst relative gap {:.2e}", c.cross),
        elapsed: corpus_time,
    });
    results.push(Outcome {
        id: 3,
        pass: c.res_i >= -1e-8,
        detail: format!("worst residual_i {:.3e} on the criterion 2 corpus", c.res_i),
        elapsed: Duration::ZERO,
    });
    let start = Instant::now();
    let sharp = sharpness();
    results.push(Outcome {
        id: 4,
        pass: c.res_ii >= -1e-6 && c.res_ii_slack >= -1e-6 && sharp <= 1e-6,
        detail: format!(
            "worst residual_ii {:.3e} exact, {:.3e} slack; single-mode |residual_ii| {sharp:.2e}",
            c.res_ii, c.res_ii_slack
        ),
        elapsed: start.elapsed(),
    });
    results.push(timed(5, criterion_5));
    results.push(Outcome {
        id: 6,
        pass: c.gl_pass && c.gl >= -1e-6,
        detail: format!("worst scaled forward difference {:.3e} on the criterion 2 corpus", c.gl),
        elapsed: Duration::ZERO,
    });
    results.push(timed(7, criterion_7));
    results.push(timed(8, criterion_8));
    results.push(timed(9, criterion_9));
    results.push(timed(10, criterion_10));
    results.push(timed(11, criterion_11));

    let limits = [(1, 1.0), (7, 300.0), (9, 1.0), (10, 180.0)];
    let mut unexpected = Vec::new();
    for r in &mut results {
        if let Some(&(_, secs)) = limits.iter().find(|l| l.0 == r.id) {
            if r.elapsed > Duration::from_secs_f64(secs) {
                r.pass = false;
                r.detail.push_str(&format!(" (over the {secs} s budget)"));
            }
        }
        let tag = if r.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2}: {tag}  [{:.2} s] {}", r.id, r.elapsed.as_secs_f64(), r.detail);
        if r.pass == EXPECTED_RED.contains(&r.id) {
            unexpected.push(r.id);
        }
    }
    let passed = results.iter().filter(|r| r.pass).count();
    println!("{passed}/{} criteria pass; expected failures: {EXPECTED_RED:?}", results.len());
    if !unexpected.is_empty() {
        eprintln!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
