use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn curvelab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_curvelab"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    curvelab().args(["run", "--config"]).arg(cfg).arg("--out").arg(out).args(extra).output().unwrap()
}

fn report(out: &Path, suite: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join(format!("{suite}.json"))).unwrap()).unwrap()
}

#[test]
fn flat_convexity_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.cfg", "suite = convexity\nn = 2\ncurvatures = 0\nseed = 7\n");
    let out = tmp.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = report(&out, "convexity");
    assert!(v["pass"].as_bool().unwrap());
    assert!(v["worst_margin"].as_f64().unwrap() >= -1e-8);
    assert_eq!(v["seed"], 7);
    let residual = v["details"][0]["growth"]["residual_i"].as_array().unwrap();
    assert_eq!(residual.len(), 64);
    let csv = fs::read_to_string(out.join("convexity.csv")).unwrap();
    assert!(csv.starts_with("n,curvature,field_seed,lmax,r,q,"));
    assert!(!csv.contains('\r'));
}

#[test]
fn radius_past_admissible_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.cfg", "suite = convexity\ncurvatures = 1\nradii = lin:0.1:1.6:8\nseed = 1\n");
    let o = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn bad_configs_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    for (i, text) in
        ["suite = convexity\n", "suite = convexity\nseed = 1\ntolerance = -1e-8\n", "suite = bogus\nseed = 1\n"]
            .iter()
            .enumerate()
    {
        let cfg = write_config(tmp.path(), &format!("{i}.cfg"), text);
        assert_eq!(run(&cfg, &tmp.path().join("out"), &[]).status.code(), Some(2), "{text}");
    }
    let missing = curvelab().args(["run", "--config", "/nonexistent/file.cfg"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn margin_violation_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "df.cfg", "suite = df\ndegrees = 1..6\nradii = 0.2\nfactor = 0.5\nseed = 3\n");
    let out = tmp.path().join("out");
    assert_eq!(run(&cfg, &out, &[]).status.code(), Some(1));
    assert!(!report(&out, "df")["pass"].as_bool().unwrap());
}

#[test]
fn lemma54_reports_all_four_parts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "l.cfg", "suite = lemma54\nseed = 0\nsamples = 1000\n");
    let out = tmp.path().join("out");
    // (√x cot √x)' runs from -1/3 down to -1/2, below the stated lower bound
    assert_eq!(run(&cfg, &out, &[]).status.code(), Some(1));
    let v = report(&out, "lemma54");
    let parts = v["details"].as_array().unwrap();
    assert_eq!(parts.len(), 4);
    for p in parts {
        assert_eq!(p["derivative"].as_array().unwrap().len(), 1000);
        let slack = p["worst_slack"].as_f64().unwrap();
        if p["part"] == "sqrt_x_cot_sqrt_x" {
            assert!(slack < -0.16 && p["min"].as_f64().unwrap() > -0.5);
        } else {
            assert!(slack >= -1e-9, "{}", p["part"]);
        }
    }
}

#[test]
fn summary_rows_and_empty_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(curvelab().arg("summary").arg(&empty).output().unwrap().status.code(), Some(2));

    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "d.cfg", "suite = doubling\nsamples = 10\nseed = 5\n");
    assert_eq!(run(&cfg, &out, &[]).status.code(), Some(0));
    let o = curvelab().arg("summary").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("doubling"));
}

#[test]
fn full_run_summary_has_eight_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let configs = [
        "suite = sandwich\ndegrees = 0..6\nradii = lin:0.05:0.5:4\nseed = 1",
        "suite = nodal\ndegrees = 4..8\nsamples = 1\nseed = 1",
        "suite = chain\ndegrees = 2..6\nseed = 1",
        "suite = convexity\nn = 3\ncurvatures = -1, 1\nsamples = 4\nseed = 1",
        "suite = df\ndegrees = 1..8\nradii = 0.2\nseed = 1",
        "suite = doubling\nsamples = 8\nseed = 1",
        "suite = growth\ndegrees = 2..8\nseed = 1",
        "suite = lemma54\nsamples = 100\nseed = 1",
    ];
    for (i, text) in configs.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("{i}.cfg"), text);
        let code = run(&cfg, &out, &[]).status.code();
        assert!(matches!(code, Some(0 | 1)), "{text}: {code:?}");
    }
    let o = curvelab().arg("summary").arg(&out).output().unwrap();
    let text = String::from_utf8(o.stdout).unwrap();
    let names: Vec<&str> = text.lines().skip(1).map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(names, ["chain", "convexity", "df", "doubling", "growth", "lemma54", "nodal", "sandwich"]);
    let failing: Vec<&str> = text.lines().skip(1).filter(|l| l.ends_with("FAIL")).collect();
    assert_eq!(failing.len(), 1);
    assert!(failing[0].starts_with("lemma54"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn plots_and_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n.cfg", "suite = nodal\ndegrees = 4, 6\nsamples = 1\nseed = 9\n");
    let out = tmp.path().join("out");
    let o = curvelab()
        .env("CURVELAB_THREADS", "1")
        .args(["run", "--plots", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(out.join("nodal_scaling.svg")).unwrap().starts_with("<svg"));
    assert!(out.join("nodal_trace.svg").exists());
    let bad = curvelab().env("CURVELAB_THREADS", "0").args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn same_seed_same_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.cfg", "suite = convexity\nn = 2,4\ncurvatures = 1\nsamples = 3\nseed = 42\n");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&cfg, &a, &[]).status.code(), Some(0));
    assert_eq!(
        curvelab()
            .env("CURVELAB_THREADS", "2")
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&b)
            .status()
            .unwrap()
            .code(),
        Some(0)
    );
    for name in ["convexity.json", "convexity.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let other =
        write_config(tmp.path(), "d.cfg", "suite = convexity\nn = 2,4\ncurvatures = 1\nsamples = 3\nseed = 43\n");
    let c = tmp.path().join("c");
    assert_eq!(run(&other, &c, &[]).status.code(), Some(0));
    assert_ne!(fs::read(a.join("convexity.csv")).unwrap(), fs::read(c.join("convexity.csv")).unwrap());
}
