#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sgabor")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

/// Input files shared by the CLI cases.
pub const INPUTS: &[(&str, &str)] = &[
    ("delta.json", r#"{"d": 1, "N": 4096, "builtin": {"name": "delta"}}"#),
    ("constant.json", r#"{"d": 1, "N": 4096, "builtin": {"name": "constant"}}"#),
    ("chirp.json", r#"{"d": 1, "N": 4096, "builtin": {"name": "chirp", "a": 1.0}}"#),
    ("gaussian.json", r#"{"d": 1, "N": 4096, "builtin": {"name": "gaussian"}}"#),
    ("dpc.json", r#"{"d": 1, "N": 4096, "builtin": {"name": "delta_plus_constant"}}"#),
    ("delta256.json", r#"{"d": 1, "N": 256, "builtin": {"name": "delta"}}"#),
    ("hermite2.json", r#"{"d": 1, "N": 256, "builtin": {"name": "hermite", "k": 2}}"#),
    ("heat.json", r#"{"d": 1, "Q_re": [[0, 0], [0, 1]], "Q_im": [[0, 0], [0, 0]]}"#),
    ("harmonic.json", r#"{"d": 1, "Q_re": [[0, 0], [0, 0]], "Q_im": [[1, 0], [0, 1]]}"#),
    ("heat2.json", r#"{"d": 2, "Q_re": [[0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], "Q_im": [[0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]}"#),
    ("coupled.json", r#"{"d": 1, "Q_re": [[0, 0], [0, 0]], "Q_im": [[0, 1], [1, 0]]}"#),
    ("exp_heat.json", r#"{"preset": "heat"}"#),
    ("exp_harmonic.json", r#"{"preset": "harmonic"}"#),
    ("exp_free.json", r#"{"preset": "free_schrodinger"}"#),
    ("exp_damping.json", r#"{"preset": "damping", "A": [[1]]}"#),
    ("exp_stub.json", r#"{"preset": "heat", "times": [0.5], "stub_empty_prediction": true}"#),
    ("exp_small.json", r#"{"preset": "heat", "grid_n": 64}"#),
];

pub fn write_inputs(dir: &Path) {
    for (name, text) in INPUTS {
        std::fs::write(dir.join(name), text).unwrap();
    }
}

/// A golden CLI invocation: `args` may contain `{out}` for the output path.
pub struct Case {
    pub name: &'static str,
    pub args: &'static [&'static str],
    pub exit: i32,
    /// Extra output files compared byte for byte besides `{out}`.
    pub extra: &'static [&'static str],
}

pub const CASES: &[Case] = &[
    Case { name: "analyze_delta", args: &["analyze", "delta.json", "--orders", "1,-0.5"], exit: 0, extra: &[] },
    Case { name: "analyze_constant", args: &["analyze", "constant.json"], exit: 0, extra: &[] },
    Case { name: "analyze_chirp", args: &["analyze", "chirp.json"], exit: 0, extra: &[] },
    Case { name: "analyze_gaussian", args: &["analyze", "gaussian.json", "--orders=-1,0,1,2,4"], exit: 0, extra: &[] },
    Case { name: "singular_space_heat", args: &["singular-space", "heat.json"], exit: 0, extra: &[] },
    Case { name: "singular_space_heat2", args: &["singular-space", "heat2.json"], exit: 0, extra: &[] },
    Case { name: "singular_space_harmonic", args: &["singular-space", "harmonic.json"], exit: 0, extra: &[] },
    Case {
        name: "singular_space_random",
        args: &["singular-space", "--random-normal", "--dim", "2", "--seed", "7"],
        exit: 0,
        extra: &[],
    },
    Case {
        name: "predict_heat",
        args: &["predict", "heat.json", "--signal", "dpc.json", "--time", "0.5", "--order", "1"],
        exit: 0,
        extra: &[],
    },
    Case {
        name: "propagate_heat",
        args: &["propagate", "delta256.json", "heat.json", "--time", "1"],
        exit: 0,
        extra: &["bin"],
    },
    Case { name: "verify_heat", args: &["verify", "exp_heat.json"], exit: 0, extra: &[] },
    Case { name: "verify_harmonic", args: &["verify", "exp_harmonic.json"], exit: 0, extra: &[] },
    Case { name: "verify_free", args: &["verify", "exp_free.json"], exit: 0, extra: &[] },
    Case { name: "verify_damping", args: &["verify", "exp_damping.json"], exit: 0, extra: &[] },
    Case { name: "verify_stub", args: &["verify", "exp_stub.json"], exit: 1, extra: &[] },
    Case { name: "verify_small", args: &["verify", "exp_small.json"], exit: 5, extra: &[] },
];

pub struct Outcome {
    pub code: i32,
    pub stderr: String,
    /// (suffix, bytes) of every compared output.
    pub outputs: Vec<(String, Vec<u8>)>,
}

pub fn run_case(dir: &Path, case: &Case) -> Outcome {
    let out = dir.join(format!("{}.json", case.name));
    let mut cmd = Command::new(bin());
    cmd.current_dir(dir).args(case.args).arg("--output").arg(&out);
    let res = cmd.output().expect("binary runs");
    let mut outputs = vec![("json".to_string(), std::fs::read(&out).unwrap_or_default())];
    for ext in case.extra {
        outputs.push((ext.to_string(), std::fs::read(out.with_extension(ext)).unwrap_or_default()));
    }
    Outcome { code: res.status.code().unwrap_or(-1), stderr: String::from_utf8_lossy(&res.stderr).into_owned(), outputs }
}

/// Compares against `tests/golden/<name>.<ext>`; `UPDATE_GOLDEN=1` rewrites them.
pub fn check_golden(name: &str, outputs: &[(String, Vec<u8>)]) -> Result<(), String> {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for (ext, bytes) in outputs {
        let path = golden_dir().join(format!("{name}.{ext}"));
        if update {
            std::fs::create_dir_all(golden_dir()).unwrap();
            std::fs::write(&path, bytes).unwrap();
            continue;
        }
        let want = std::fs::read(&path).map_err(|_| format!("missing golden file {}", path.display()))?;
        if &want != bytes {
            return Err(format!("{name}.{ext} differs from the golden file"));
        }
    }
    Ok(())
}

pub fn run(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let res = Command::new(bin()).current_dir(dir).args(args).output().expect("binary runs");
    (
        res.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&res.stdout).into_owned(),
        String::from_utf8_lossy(&res.stderr).into_owned(),
    )
}
