//! Report envelopes, CSV formatting and artifact files.

use serde_json::{json, Value};
use std::path::Path;
use yamabe_core::geometry::calibrate_sigma;

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Wraps a command result with the resolved config, tool version and `σ`.
pub fn envelope(command: &str, config: Value, result: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "tool": "yamabe",
        "version": env!("CARGO_PKG_VERSION"),
        "sigma": calibrate_sigma(),
        "command": command,
        "config": config,
        "result": result,
    })
}

/// Pretty JSON. Keys of `Value` maps are sorted and floats print in shortest
/// round-trip form, so equal inputs give equal bytes.
pub fn to_json(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("values built from json! always serialize")
}

/// `r,w,wprime` rows with 17 significant digits.
pub fn trajectory_csv(rows: impl Iterator<Item = (f64, f64, f64)>) -> String {
    let mut s = String::from("r,w,wprime\n");
    for (r, w, wp) in rows {
        s.push_str(&format!("{r:.16e},{w:.16e},{wp:.16e}\n"));
    }
    s
}

/// Files written under `--out`.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in &self.files {
            std::fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows_round_trip() {
        let x = 0.1 + 0.2;
        let csv = trajectory_csv([(x, -1.0 / 3.0, 1e-300)].into_iter());
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("r,w,wprime"));
        let vals: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(vals, vec![x, -1.0 / 3.0, 1e-300]);
    }

    #[test]
    fn envelope_fields() {
        let v = envelope("solve", json!({ "a": 1.0 }), json!(null));
        assert_eq!(v["schema_version"], json!(SCHEMA_VERSION));
        assert_eq!(v["sigma"], json!(1.0));
        assert_eq!(v["config"]["a"], json!(1.0));
    }
}
