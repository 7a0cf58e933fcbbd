use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const TOOL: &str = "xitree";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Identifies the producing tool, the configuration and the seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Header {
    /// Hashes the canonical JSON of `config` (keys sorted).
    pub fn new(config: &BTreeMap<String, Value>, seed: u64) -> Self {
        let text = serde_json::to_string(config).expect("serialisable config");
        let digest = Sha256::digest(text.as_bytes());
        let config_hash = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        Header {
            tool: TOOL.into(),
            version: VERSION.into(),
            config_hash,
            seed,
        }
    }

    /// Comment lines for tabular artifacts.
    pub fn lines(&self) -> Vec<String> {
        vec![format!(
            "{} {} config={} seed={}",
            self.tool, self.version, self.config_hash, self.seed
        )]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub se: f64,
    pub replicates: usize,
}

/// A single declared pass/fail condition with its threshold written out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: String,
    pub passed: bool,
    pub rule: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub header: Header,
    pub name: String,
    pub parameters: BTreeMap<String, Value>,
    pub estimates: Vec<Estimate>,
    pub p_values: BTreeMap<String, f64>,
    pub conditions: Vec<Condition>,
    pub passed: bool,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(name: &str, parameters: BTreeMap<String, Value>, seed: u64) -> Self {
        let mut config = parameters.clone();
        config.insert("check".into(), Value::String(name.into()));
        ExperimentReport {
            header: Header::new(&config, seed),
            name: name.into(),
            parameters,
            estimates: Vec::new(),
            p_values: BTreeMap::new(),
            conditions: Vec::new(),
            passed: true,
            notes: vec!["tolerances are harness choices, not quantitative claims of the model".into()],
        }
    }

    pub fn estimate(&mut self, name: impl Into<String>, value: f64, se: f64, replicates: usize) {
        self.estimates.push(Estimate {
            name: name.into(),
            value,
            se,
            replicates,
        });
    }

    pub fn p_value(&mut self, name: impl Into<String>, p: f64) {
        self.p_values.insert(name.into(), p);
    }

    pub fn condition(&mut self, name: impl Into<String>, passed: bool, rule: impl Into<String>) {
        self.passed &= passed;
        self.conditions.push(Condition {
            name: name.into(),
            passed,
            rule: rule.into(),
        });
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serialisable report") + "\n"
    }

    /// One row per estimate, after a `#` header line.
    pub fn write_estimates_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for line in self.header.lines() {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| crate::Error::Io(std::io::Error::other(e.to_string()));
        w.write_record(["name", "value", "se", "replicates"]).map_err(io)?;
        for e in &self.estimates {
            w.write_record([
                e.name.clone(),
                format!("{:?}", e.value),
                format!("{:?}", e.se),
                e.replicates.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// `name: PASS|FAIL` and one line per condition.
    pub fn summary(&self) -> String {
        let mut s = format!("{}: {}\n", self.name, if self.passed { "PASS" } else { "FAIL" });
        for c in &self.conditions {
            s.push_str(&format!(
                "  [{}] {} ({})\n",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.rule
            ));
        }
        s
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_comes_first_and_is_deterministic() {
        let mut p = BTreeMap::new();
        p.insert("n".into(), Value::from(3));
        let mut a = ExperimentReport::new("rates", p.clone(), 5);
        a.estimate("x", 1.0, 0.1, 10);
        a.condition("x near 1", true, "|x - 1| <= 3 se");
        let b = {
            let mut b = ExperimentReport::new("rates", p, 5);
            b.estimate("x", 1.0, 0.1, 10);
            b.condition("x near 1", true, "|x - 1| <= 3 se");
            b
        };
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.to_json().trim_start_matches("{\n").trim_start().starts_with("\"header\""));
        let mut buf = Vec::new();
        a.write_estimates_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# xitree "));
        assert!(text.contains("x,1.0,0.1,10"));
    }

    #[test]
    fn failing_condition_fails_report() {
        let mut r = ExperimentReport::new("x", BTreeMap::new(), 0);
        r.condition("a", true, "");
        r.condition("b", false, "");
        assert!(!r.passed);
        assert!(r.summary().starts_with("x: FAIL"));
    }

    #[test]
    fn mean_and_median() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(median(&[3.0, 1.0, 2.0, 10.0]), 2.5);
    }
}
