//! Output directory handling. CSV follows RFC 4180 with a mandatory header
//! and floats in shortest round-trip form; JSON is pretty-printed with sorted
//! object keys so identical runs give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use kdv_core::integrator::Trajectory;
use kdv_core::C64;
use serde_json::{json, Value};

use crate::error::{LabError, Result};

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:?}")
    }
}

/// JSON number, or `null` for non-finite values.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

pub fn complex(z: C64) -> Value {
    json!([num(z.re), num(z.im)])
}

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| LabError::io(root, e))?;
        Ok(OutputDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Names of the artifacts written so far, in order.
    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<()> {
        let path = self.path(name);
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| LabError::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> Result<()> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value).expect("JSON value serializes");
        fs::write(&path, text + "\n").map_err(|e| LabError::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_field(&mut self, name: &str, u: &kdv_core::FourierField) -> Result<()> {
        crate::field::write_field(&self.path(name), u)?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Long-format trajectory table, `time,k,re,im`, with the energy ledger
    /// columns appended when the trajectory carries them.
    pub fn write_trajectory(&mut self, name: &str, tr: &Trajectory) -> Result<()> {
        let with_energies = tr.ledger.iter().all(|e| e.energies.is_some()) && !tr.ledger.is_empty();
        let mut header = vec!["time", "k", "re", "im"];
        if with_energies {
            header.extend(["E2", "E3", "E4", "Lambda3_M3", "Lambda4_M4", "Lambda5_M5"]);
        }
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        let mut rows = Vec::new();
        for ((t, u), entry) in tr.times.iter().zip(&tr.states).zip(&tr.ledger) {
            for (i, c) in u.coeffs().iter().enumerate() {
                let mut row = vec![fmt_f64(*t), (i + 1).to_string(), fmt_f64(c.re), fmt_f64(c.im)];
                if let Some(e) = entry.energies.as_ref().filter(|_| with_energies) {
                    row.extend([
                        fmt_f64(e.e2),
                        fmt_f64(e.e3),
                        fmt_f64(e.e4),
                        opt(e.lambda3_m3),
                        opt(e.lambda4_m4),
                        opt(e.lambda5_m5),
                    ]);
                }
                rows.push(row);
            }
        }
        self.write_csv(name, &header, rows)
    }
}

/// Invariant ledger of a trajectory as JSON.
pub fn ledger_json(tr: &Trajectory) -> Value {
    let entries: Vec<Value> = tr
        .ledger
        .iter()
        .map(|e| {
            let mut v = json!({ "time": num(e.time), "mean": num(e.mean), "l2": num(e.l2) });
            if let Some(h) = e.hamiltonian {
                v["hamiltonian"] = num(h);
            }
            if let Some(en) = &e.energies {
                let opt = |x: Option<f64>| x.map(num).unwrap_or(Value::Null);
                v["energies"] = json!({
                    "E2": num(en.e2),
                    "E3": num(en.e3),
                    "E4": num(en.e4),
                    "Lambda3_M3": opt(en.lambda3_m3),
                    "Lambda4_M4": opt(en.lambda4_m4),
                    "Lambda5_M5": opt(en.lambda5_m5),
                    "imag_residue": num(en.imag_residue),
                });
            }
            v
        })
        .collect();
    json!({
        "steps": tr.steps,
        "l2_drift": num(tr.l2_drift()),
        "hamiltonian_drift": tr.hamiltonian_drift().map(num).unwrap_or(Value::Null),
        "entries": entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_roundtrip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 5e-324, -2.5e17, 0.0, -0.0, 123456789.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn csv_has_header_and_quotes() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write_csv("t.csv", &["a", "b"], [vec!["1".into(), "x,y".into()]]).unwrap();
        let text = fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(text, "a,b\r\n1,\"x,y\"\r\n");
        assert_eq!(out.written(), ["t.csv"]);
    }
}
