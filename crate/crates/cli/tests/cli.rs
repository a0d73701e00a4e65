use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pfnet::interval::{LowerEnd, UpperEnd};
use pfnet::oracle::OracleVerdict;
use pfnet::report::{self, Report, ReportBody};
use pfnet::train::reproduce::ARTIFACTS;
use pfnet::{AsymptoticMap, Verdict};
use tempfile::TempDir;

fn pfnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfnet"))
        .args(args)
        .env_remove("PFNET_SEED")
        .output()
        .expect("binary runs")
}

fn report_of(out: &Output) -> Report {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let r = report::parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
    // Re-serializing gives the same document.
    assert_eq!(report::parse(&report::to_json(&r)).unwrap(), r);
    r
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn layer(n: usize, weights: &[f64], bias: &[f64], act: &str) -> String {
    let acts = vec![format!(r#"{{"kind":"{act}"}}"#); n].join(",");
    format!(r#"{{"inputs":{n},"outputs":{n},"weights":{weights:?},"bias":{bias:?},"activations":[{acts}]}}"#)
}

fn model(layers: &[String]) -> String {
    format!(
        r#"{{"format":"pfnet-model","version":1,"layers":[{}]}}"#,
        layers.join(",")
    )
}

fn tanh_model() -> String {
    model(&[
        layer(2, &[0.5, 0.2, 0.1, 0.4], &[0.3, 0.1], "tanh"),
        layer(2, &[1.0, 0.5, 0.2, 1.5], &[0.1, 0.2], "relu"),
    ])
}

fn identity_model() -> String {
    model(&[layer(2, &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0], "relu")])
}

fn negative_model() -> String {
    model(&[layer(2, &[0.5, -0.2, 0.1, 0.4], &[0.3, 0.1], "relu")])
}

#[test]
fn certify_tanh_model_is_decisive() {
    let dir = TempDir::new().unwrap();
    let m = write(dir.path(), "tanh.json", &tanh_model());
    let out_path = dir.path().join("cert.json");
    let out = pfnet(&["certify", m.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report_of(&out);
    assert_eq!(r.command, "certify");
    let ReportBody::Certificate(c) = &r.body else {
        panic!("wrong kind")
    };
    assert_eq!(c.asymptotic, AsymptoticMap::Zero);
    assert_eq!(c.spectral_radius, 0.0);
    assert_eq!(c.verdict, Verdict::UniquePositiveFixedPoint);
    assert_eq!(report::parse(&fs::read_to_string(&out_path).unwrap()).unwrap(), r);
}

#[test]
fn certify_identity_is_inconclusive() {
    let dir = TempDir::new().unwrap();
    let m = write(dir.path(), "id.json", &identity_model());
    let out = pfnet(&["certify", m.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let ReportBody::Certificate(c) = report_of(&out).body else {
        panic!("wrong kind")
    };
    assert_eq!(c.verdict, Verdict::Inconclusive);
}

#[test]
fn certify_rejects_negative_weight() {
    let dir = TempDir::new().unwrap();
    let m = write(dir.path(), "neg.json", &negative_model());
    let out = pfnet(&["certify", m.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nonnegativity invariant"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn error_paths_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(pfnet(&["certify", missing.to_str().unwrap()]).status.code(), Some(1));
    let garbage = write(dir.path(), "g.json", "{not json");
    assert_eq!(pfnet(&["fixpoint", garbage.to_str().unwrap()]).status.code(), Some(1));
    // A 2 -> 3 network is not a self-map.
    let wide = model(&[r#"{"inputs":2,"outputs":3,"weights":[1,0,0,1,1,1],"bias":[0,0,0],"activations":[{"kind":"relu"},{"kind":"relu"},{"kind":"relu"}]}"#.to_string()]);
    let wide = write(dir.path(), "wide.json", &wide);
    let out = pfnet(&["certify", wide.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("self-map"));
    // Anchor that is not a fixed point.
    let m = write(dir.path(), "tanh.json", &tanh_model());
    let anchor = write(dir.path(), "u.json", "[5.0, 5.0]");
    let out = pfnet(&["scan", m.to_str().unwrap(), "--anchor", anchor.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("not a fixed point"));
}

#[test]
fn fixpoint_from_zero_and_random_starts_agree() {
    let dir = TempDir::new().unwrap();
    let m = write(dir.path(), "tanh.json", &tanh_model());
    let run = |extra: &[&str]| {
        let mut args = vec!["fixpoint", m.to_str().unwrap()];
        args.extend_from_slice(extra);
        let out = pfnet(&args);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        match report_of(&out).body {
            ReportBody::FixedPoint(f) => f,
            _ => panic!("wrong kind"),
        }
    };
    let zero = run(&[]);
    assert!(zero.run.converged && zero.run.residual < 1e-9);
    assert_eq!(zero.x0, vec![0.0, 0.0]);
    for seed in ["1", "2", "3"] {
        let r = run(&["--x0", "random", "--seed", seed]);
        assert!(r.run.converged);
        assert!(r.x0.iter().any(|&v| v > 0.0));
        let d = r
            .run
            .x
            .iter()
            .zip(&zero.run.x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(d < 1e-6, "seed {seed}: distance {d}");
    }
    let file = write(dir.path(), "x0.json", "[1.5, 0.25]");
    assert_eq!(run(&["--x0", file.to_str().unwrap()]).x0, vec![1.5, 0.25]);
    let none = run(&["--max-iter", "0", "--x0", file.to_str().unwrap()]);
    assert!(!none.run.converged);
    assert_eq!(none.run.x, vec![1.5, 0.25]);
}

#[test]
fn scan_builtins() {
    let out = pfnet(&["scan", "--builtin", "capped"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let ReportBody::Interval(r) = report_of(&out).body else {
        panic!("wrong kind")
    };
    assert_eq!(r.estimate.s0, LowerEnd::ZeroLimit);
    assert!((r.estimate.t0.value().unwrap() - 2.0).abs() < 1e-6);

    let out = pfnet(&["scan", "--builtin", "gauss-agm"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let ReportBody::Interval(r) = report_of(&out).body else {
        panic!("wrong kind")
    };
    assert!(r.estimate.whole_ray_fixed());
    assert_eq!(r.estimate.t0, UpperEnd::Unbounded);

    assert_eq!(pfnet(&["scan", "--builtin", "nope"]).status.code(), Some(1));
    assert_eq!(pfnet(&["certify"]).status.code(), Some(1));
    assert_eq!(pfnet(&["--help"]).status.code(), Some(0));
}

#[test]
fn scan_unique_model_collapses_to_anchor() {
    let dir = TempDir::new().unwrap();
    let m = write(dir.path(), "tanh.json", &tanh_model());
    let out = pfnet(&["scan", m.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let ReportBody::Interval(r) = report_of(&out).body else {
        panic!("wrong kind")
    };
    assert!((r.estimate.s0.value().unwrap() - 1.0).abs() < 1e-6);
    assert!((r.estimate.t0.value().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn audit_passes_valid_model_and_flags_negative_weight() {
    let dir = TempDir::new().unwrap();
    let good = write(dir.path(), "tanh.json", &tanh_model());
    let out = pfnet(&["audit", good.to_str().unwrap(), "--trials", "300"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let ReportBody::Audit(a) = report_of(&out).body else {
        panic!("wrong kind")
    };
    assert_eq!(a.rows.len(), 5);
    for row in a.rows.iter().filter(|r| r.declared) {
        assert!(row.verdict.passed(), "{:?}", row);
    }
    assert!(a.rows.iter().any(|r| r.declared));

    let bad = write(dir.path(), "neg.json", &negative_model());
    let out = pfnet(&["audit", bad.to_str().unwrap(), "--trials", "300"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let ReportBody::Audit(a) = report_of(&out).body else {
        panic!("wrong kind")
    };
    let monotone = &a.rows[0];
    assert_eq!(monotone.property.name(), "monotonic");
    assert!(matches!(monotone.verdict, OracleVerdict::Counterexample(_)));
    assert!(stderr(&out).contains("counterexample"));
}

#[test]
fn audit_is_deterministic_under_seed() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "neg.json", &negative_model());
    let a = pfnet(&["audit", bad.to_str().unwrap(), "--trials", "200", "--seed", "5"]);
    let b = Command::new(env!("CARGO_BIN_EXE_pfnet"))
        .args(["audit", bad.to_str().unwrap(), "--trials", "200"])
        .env("PFNET_SEED", "5")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
    let c = pfnet(&["audit", bad.to_str().unwrap(), "--trials", "200", "--seed", "6"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn gen_data_train_and_certify() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("data.json");
    let out = pfnet(&[
        "gen-data",
        "--dim",
        "12",
        "--samples",
        "64",
        "--out",
        data.to_str().unwrap(),
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let ReportBody::Dataset(d) = report_of(&out).body else {
        panic!("wrong kind")
    };
    assert_eq!((d.dim, d.samples, d.seed), (12, 64, 3));
    assert_eq!(pfnet::train::Dataset::load(&data).unwrap().samples.len(), 64);

    let model = dir.path().join("model.json");
    let out = pfnet(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--epochs",
        "3",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let ReportBody::Training(t) = report_of(&out).body else {
        panic!("wrong kind")
    };
    assert_eq!(t.loss_history.len(), 3);
    assert_eq!(t.config.input_dim, 12);

    let out = pfnet(&["certify", model.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let ReportBody::Certificate(c) = report_of(&out).body else {
        panic!("wrong kind")
    };
    assert_eq!(c.spectral_radius, 0.0);
}

#[test]
fn reproduce_writes_artifacts_deterministically() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let outdir = dir.path().join(name);
        let out = pfnet(&[
            "reproduce",
            "--epochs",
            "4",
            "--samples",
            "300",
            "--seed",
            "11",
            "--outdir",
            outdir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let ReportBody::Reproduce(s) = report_of(&out).body else {
            panic!("wrong kind")
        };
        assert_eq!(s.config.seed, 11);
        outdir
    };
    let a = run("a");
    let b = run("b");
    for name in ARTIFACTS {
        let text = fs::read(a.join(name)).unwrap();
        assert_eq!(text, fs::read(b.join(name)).unwrap(), "{name} differs between runs");
        let text = String::from_utf8(text).unwrap();
        if name.ends_with(".csv") {
            report::parse_series_csv(&text).unwrap();
        } else if name != "model.json" {
            report::parse(&text).unwrap();
        } else {
            pfnet::model_io::from_json(&text).unwrap();
        }
    }
}
