mod common;

use std::path::Path;

use common::{run, write_inputs};
use serde_json::Value;
use sgabor::io::read_signal;
use sgabor::quadham::{hamilton_matrix, random_normal, singular_space};
use sgabor::symplectic::{RMatrix, Subspace};
use sgabor::Complex64;

fn workdir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    dir
}

fn json(dir: &Path, args: &[&str]) -> Value {
    let (code, stdout, stderr) = run(dir, args);
    assert_eq!(code, 0, "{args:?}: {stderr}");
    serde_json::from_str(&stdout).unwrap()
}

fn vectors(v: &Value) -> Vec<Vec<f64>> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|d| d.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
        .collect()
}

fn angle(a: &[f64], b: &[f64]) -> f64 {
    sgabor::directions::angle_between(a, b)
}

fn threshold_at(out: &Value, s: f64) -> Vec<Vec<f64>> {
    let set = out["sets"].as_array().unwrap().iter().find(|x| x["s"].as_f64() == Some(s)).unwrap();
    vectors(&set["threshold"])
}

#[test]
fn analyze_examples() {
    let dir = workdir();
    let d = dir.path();

    let delta = json(d, &["analyze", "delta.json"]);
    let step = delta["angular_step"].as_f64().unwrap();
    let set = threshold_at(&delta, 1.0);
    assert_eq!(set.len(), 2, "{set:?}");
    for target in [[0.0, 1.0], [0.0, -1.0]] {
        assert!(set.iter().any(|v| angle(v, &target) < 1e-12));
    }

    let gauss = json(d, &["analyze", "gaussian.json", "--orders", "0,1,4"]);
    for s in [0.0, 1.0, 4.0] {
        assert!(threshold_at(&gauss, s).is_empty());
    }

    let chirp = json(d, &["analyze", "chirp.json"]);
    let set = threshold_at(&chirp, 1.0);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    assert!(!set.is_empty());
    for v in &set {
        let a = angle(v, &[r, r]).min(angle(v, &[-r, -r]));
        assert!(a <= step * (1.0 + 1e-9), "{v:?}");
    }
    for target in [[r, r], [-r, -r]] {
        assert!(set.iter().any(|v| angle(v, &target) <= step));
    }
}

#[test]
fn analyze_writes_spectrogram_csv() {
    let dir = workdir();
    let d = dir.path();
    let (code, _, err) = run(d, &["analyze", "delta256.json", "--spectrogram", "spec.csv", "--stride", "32"]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(d.join("spec.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,xi,re,im,abs"));
    assert_eq!(lines.count(), 8 * 8);
}

#[test]
fn singular_space_examples() {
    let dir = workdir();
    let d = dir.path();

    let heat = json(d, &["singular-space", "heat.json"]);
    let basis = vectors(&heat["singular_space"]);
    assert_eq!(basis.len(), 1);
    assert!((basis[0][0].abs() - 1.0).abs() < 1e-12 && basis[0][1].abs() < 1e-12);
    assert_eq!(heat["normal"], Value::Bool(true));
    assert!(heat["applicable_rules"].as_array().unwrap().contains(&Value::from("equal")));

    let harm = json(d, &["singular-space", "harmonic.json"]);
    assert_eq!(vectors(&harm["singular_space"]).len(), 2);
    assert_eq!(harm["default_rule"], Value::from("exact"));
    assert_eq!(harm["real_part_zero"], Value::Bool(true));

    let random = json(d, &["singular-space", "--random-normal", "--dim", "2", "--seed", "11"]);
    let rows = vectors(&random["singular_space"]);
    let h = hamilton_matrix(&random_normal(2, 11).unwrap());
    let lib = singular_space(&h, 1e-9);
    assert_eq!(rows.len(), lib.dim());
    if !rows.is_empty() {
        let cols = RMatrix::from_fn(4, rows.len(), |i, j| rows[j][i]);
        let cli = Subspace::span(&cols, 2, 1e-9).unwrap();
        assert!(cli.same_span(&lib, 1e-12));
    }

    std::fs::write(d.join("bad.json"), r#"{"d": 1, "Q_re": [[-1, 0], [0, 0]], "Q_im": [[0, 0], [0, 0]]}"#).unwrap();
    let (code, _, err) = run(d, &["singular-space", "bad.json"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn propagate_heat_matches_the_kernel() {
    let dir = workdir();
    let d = dir.path();
    let (code, _, err) = run(d, &["propagate", "delta256.json", "heat.json", "--time", "1", "-o", "out.json"]);
    assert_eq!(code, 0, "{err}");
    let (v, header) = read_signal(&d.join("out.json")).unwrap();
    assert_eq!(header.history.len(), 1);
    assert_eq!(header.history[0].propagator.label(), "fourier_multiplier");
    let g = *v.grid();
    let worst = v
        .values()
        .iter()
        .enumerate()
        .map(|(j, z)| {
            let x = g.node(j);
            let k = (-x * x / 4.0).exp() / (4.0 * std::f64::consts::PI).sqrt();
            (z - Complex64::new(k, 0.0)).norm()
        })
        .fold(0.0, f64::max);
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn propagate_zero_time_keeps_the_payload() {
    let dir = workdir();
    let d = dir.path();
    let (code, _, err) = run(d, &["propagate", "hermite2.json", "heat.json", "--time", "0.3", "-o", "a.json"]);
    assert_eq!(code, 0, "{err}");
    let (code, _, err) = run(d, &["propagate", "a.json", "heat.json", "--time", "0", "-o", "b.json"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(std::fs::read(d.join("a.bin")).unwrap(), std::fs::read(d.join("b.bin")).unwrap());
    let (_, header) = read_signal(&d.join("b.json")).unwrap();
    assert_eq!(header.history.len(), 2);
}

#[test]
fn harmonic_half_period_fixes_an_even_hermite_function() {
    let dir = workdir();
    let d = dir.path();
    let t = std::f64::consts::FRAC_PI_2.to_string();
    let (code, _, err) = run(d, &["propagate", "hermite2.json", "harmonic.json", "--time", &t, "-o", "h.json"]);
    assert_eq!(code, 0, "{err}");
    let (v, _) = read_signal(&d.join("h.json")).unwrap();
    let (u, _) = read_signal(&d.join("hermite2.json")).unwrap();
    let inner: Complex64 = u.values().iter().zip(v.values()).map(|(a, b)| a.conj() * b).sum();
    let c = inner / u.values().iter().map(|a| a.norm_sqr()).sum::<f64>();
    assert!((c.norm() - 1.0).abs() < 1e-10, "{c}");
    let err = u.values().iter().zip(v.values()).map(|(a, b)| (b - c * a).norm()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err:e}");
}

#[test]
fn unsupported_and_malformed_inputs() {
    let dir = workdir();
    let d = dir.path();
    let (code, _, _) = run(d, &["propagate", "delta.json", "coupled.json", "--time", "1", "-o", "c.json"]);
    assert_eq!(code, 4);

    std::fs::write(d.join("broken.json"), "{\"preset\": \"heat\",\n \"times\": [0.5,\n}").unwrap();
    let (code, _, err) = run(d, &["verify", "broken.json"]);
    assert_eq!(code, 2);
    assert!(err.contains("line"), "{err}");

    let (code, _, _) = run(d, &["verify", "missing.json"]);
    assert_eq!(code, 2);
}

#[test]
fn verify_writes_margins_and_help_exits_cleanly() {
    let dir = workdir();
    let d = dir.path();
    let (code, stdout, err) = run(d, &["verify", "exp_heat.json", "--margins", "m.csv"]);
    assert_eq!(code, 0, "{err}");
    let report: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["verdict"], Value::from("pass"));
    let csv = std::fs::read_to_string(d.join("m.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,s,w0,w1,angle,margin"));
    assert!(csv.lines().count() > 1);

    let (code, stdout, _) = run(d, &["--help"]);
    assert_eq!(code, 0);
    for sub in ["analyze", "propagate", "predict", "singular-space", "verify"] {
        assert!(stdout.contains(sub));
    }
}
