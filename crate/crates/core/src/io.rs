//! File formats: canonical JSON, signal headers with raw payloads, and
//! plot-ready CSV.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::propagators::PropagatorPath;
use crate::quadham::HamiltonianFile;
use crate::tfa::signal::{Builtin, GridSpec, SampledSignal};
use crate::tfa::stft::Spectrogram;

/// Pretty JSON with sorted keys and every float written as `{:.16e}`
/// (17 significant digits). Non-finite floats become `null`.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat_n(' ', 2 * n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else {
                write!(out, "{:.16e}", n.as_f64().unwrap_or(f64::NAN)).unwrap();
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // short numeric rows stay on one line
            if items.len() <= 8 && items.iter().all(|x| x.is_number()) {
                out.push('[');
                for (k, x) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, indent);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, x) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, x, indent + 1);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&serde_json::to_string(key).expect("strings serialize"));
                out.push_str(": ");
                write_value(out, &map[key.as_str()], indent + 1);
                out.push_str(if k + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

pub fn write_canonical_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_canonical_json(value)?)?;
    Ok(())
}

/// One propagation step recorded in a signal header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryStep {
    pub t: f64,
    pub propagator: PropagatorPath,
    pub hamiltonian: HamiltonianFile,
}

/// `{"d", "N", "L", "builtin" | "data_file", "history"}`. A missing `L`
/// means the self-dual extent `sqrt(pi N / 2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalHeader {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<Builtin>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_file: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<HistoryStep>,
}

impl SignalHeader {
    pub fn grid(&self) -> Result<GridSpec> {
        match self.l {
            Some(l) => GridSpec::new(self.d, self.n, l),
            None => GridSpec::self_dual(self.d, self.n),
        }
    }
}

pub fn parse_signal_header(text: &str) -> Result<SignalHeader> {
    Ok(serde_json::from_str(text)?)
}

/// Loads a header and its payload (`data_file` is relative to the header).
pub fn read_signal(path: &Path) -> Result<(SampledSignal, SignalHeader)> {
    let text = std::fs::read_to_string(path)?;
    let header = parse_signal_header(&text)?;
    let grid = header.grid()?;
    let signal = match (&header.builtin, &header.data_file) {
        (Some(b), None) => SampledSignal::builtin(grid, b)?,
        (None, Some(f)) => {
            let data_path = path.parent().unwrap_or(Path::new(".")).join(f);
            let bytes = std::fs::read(&data_path)?;
            SampledSignal::new(grid, decode_payload(&bytes, grid.len())?)?
        }
        _ => {
            return Err(Error::InvalidInput(
                "signal header needs exactly one of 'builtin' and 'data_file'".into(),
            ))
        }
    };
    Ok((signal, header))
}

/// Writes `path` (header) and `path` with extension `bin` (payload).
pub fn write_signal(path: &Path, signal: &SampledSignal, history: Vec<HistoryStep>) -> Result<PathBuf> {
    let grid = signal.grid();
    let data_path = path.with_extension("bin");
    let data_name = data_path
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::InvalidInput(format!("bad output path {}", path.display())))?
        .to_string();
    std::fs::write(&data_path, encode_payload(signal.values()))?;
    let header = SignalHeader {
        d: grid.dim_d,
        n: grid.n,
        l: Some(grid.half_extent),
        builtin: None,
        data_file: Some(data_name),
        history,
    };
    write_canonical_json(path, &header)?;
    Ok(data_path)
}

/// Interleaved little-endian `(re, im)` float64 pairs.
pub fn encode_payload(values: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 * values.len());
    for z in values {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn decode_payload(bytes: &[u8], expected: usize) -> Result<Vec<Complex64>> {
    if bytes.len() != 16 * expected {
        return Err(Error::InvalidInput(format!(
            "payload has {} bytes, expected {} ({} complex samples)",
            bytes.len(),
            16 * expected,
            expected
        )));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect())
}

/// Columns `x, xi, re, im, abs` (`x0, x1, xi0, xi1, ...` for `d = 2`).
pub fn spectrogram_csv(s: &Spectrogram) -> String {
    let mut out = String::new();
    if s.dim_d == 1 {
        out.push_str("x,xi,re,im,abs\n");
    } else {
        out.push_str("x0,x1,xi0,xi1,re,im,abs\n");
    }
    let nxi = s.xis.len();
    for (i, x) in s.xs.iter().enumerate() {
        for (k, xi) in s.xis.iter().enumerate() {
            let z = s.values[i * nxi + k];
            for c in x.iter().chain(xi) {
                write!(out, "{c:.16e},").unwrap();
            }
            writeln!(out, "{:.16e},{:.16e},{:.16e}", z.re, z.im, z.norm()).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_json_sorts_and_formats() {
        let v = serde_json::json!({"b": 1.5, "a": [1, 2.0], "c": {"z": null, "y": "s"}});
        let s = to_canonical_json(&v).unwrap();
        assert_eq!(
            s,
            "{\n  \"a\": [1, 2.0000000000000000e0],\n  \"b\": 1.5000000000000000e0,\n  \"c\": {\n    \"y\": \"s\",\n    \"z\": null\n  }\n}\n"
        );
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"], 1.5);
    }

    #[test]
    fn canonical_floats_roundtrip_exactly() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, std::f64::consts::PI] {
            let s = to_canonical_json(&x).unwrap();
            let back: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(back, x);
        }
    }

    #[test]
    fn payload_roundtrip_and_length_check() {
        let v = vec![Complex64::new(1.0, -2.0), Complex64::new(0.25, 1e-300)];
        assert_eq!(decode_payload(&encode_payload(&v), 2).unwrap(), v);
        assert!(decode_payload(&encode_payload(&v), 3).is_err());
    }

    #[test]
    fn signal_file_roundtrip() {
        let dir = std::env::temp_dir().join(format!("sgabor-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let g = GridSpec::self_dual(1, 64).unwrap();
        let u = SampledSignal::builtin(g, &Builtin::Chirp { a: 0.5 }).unwrap();
        let p = dir.join("u.json");
        write_signal(&p, &u, vec![]).unwrap();
        let (back, header) = read_signal(&p).unwrap();
        assert_eq!(back, u);
        assert_eq!(header.data_file.as_deref(), Some("u.bin"));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn header_errors_carry_positions() {
        let err = parse_signal_header("{\"d\": 1,\n \"N\": }").unwrap_err();
        assert!(matches!(err, Error::Parse(ref m) if m.contains("line 2")), "{err}");
        let both = r#"{"d": 1, "N": 64, "builtin": {"name": "delta"}, "data_file": "x.bin"}"#;
        let dir = std::env::temp_dir().join(format!("sgabor-io-h-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("h.json");
        std::fs::write(&p, both).unwrap();
        assert!(read_signal(&p).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
