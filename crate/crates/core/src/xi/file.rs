//! XiSpec text format:
//!
//! ```text
//! kingman_mass: 0.0
//! atoms:
//!   - {weight: 1.0, x: [0.5]}
//! ```

use std::path::Path;

use serde_yaml::Value;

use super::{Atom, XiSpec};
use crate::error::{Error, Result};
use crate::partitions::SimplexPoint;

fn number(v: &Value, field: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::config(field, "expected a finite number"))
}

pub fn parse_xi(text: &str) -> Result<XiSpec<f64>> {
    let doc: Value =
        serde_yaml::from_str(text).map_err(|e| Error::config("document", e.to_string()))?;
    let map = doc
        .as_mapping()
        .ok_or_else(|| Error::config("document", "expected a mapping of fields"))?;
    for key in map.keys() {
        match key.as_str() {
            Some("kingman_mass" | "atoms") => {}
            other => {
                return Err(Error::config(
                    other.unwrap_or("<key>"),
                    "unknown field (expected kingman_mass, atoms)",
                ))
            }
        }
    }
    let kingman = match map.get("kingman_mass") {
        Some(v) => number(v, "kingman_mass")?,
        None => 0.0,
    };
    if kingman < 0.0 {
        return Err(Error::config("kingman_mass", "must be nonnegative"));
    }
    let mut atoms = Vec::new();
    if let Some(list) = map.get("atoms") {
        let list = match list {
            Value::Null => &Vec::new(),
            Value::Sequence(s) => s,
            _ => return Err(Error::config("atoms", "expected a list")),
        };
        for (k, item) in list.iter().enumerate() {
            let at = |f: &str| format!("atoms[{k}].{f}");
            let entry = item
                .as_mapping()
                .ok_or_else(|| Error::config(format!("atoms[{k}]"), "expected {weight, x}"))?;
            let weight = number(
                entry
                    .get("weight")
                    .ok_or_else(|| Error::config(at("weight"), "missing"))?,
                &at("weight"),
            )?;
            if weight <= 0.0 {
                return Err(Error::config(at("weight"), "must be positive"));
            }
            let xs = entry
                .get("x")
                .ok_or_else(|| Error::config(at("x"), "missing"))?
                .as_sequence()
                .ok_or_else(|| Error::config(at("x"), "expected a list of numbers"))?;
            let x = xs
                .iter()
                .enumerate()
                .map(|(i, v)| number(v, &format!("atoms[{k}].x[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            let point = SimplexPoint::new(x).map_err(|e| Error::config(at("x"), e.to_string()))?;
            atoms.push(Atom { weight, point });
        }
    }
    XiSpec::new(kingman, atoms)
}

pub fn load_xi(path: &Path) -> Result<XiSpec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
    parse_xi(&text)
}

pub fn write_xi(xi: &XiSpec<f64>) -> String {
    let mut out = format!("kingman_mass: {:?}\natoms:", xi.kingman_mass());
    if xi.atoms().is_empty() {
        out.push_str(" []\n");
        return out;
    }
    out.push('\n');
    for a in xi.atoms() {
        let xs: Vec<String> = a.point.coords().iter().map(|c| format!("{c:?}")).collect();
        out.push_str(&format!("  - {{weight: {:?}, x: [{}]}}\n", a.weight, xs.join(", ")));
    }
    out
}
