//! Settings merged from defaults, a `key=value` file and command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use halfspec::radial_operator::Params;
use halfspec::shooting::ShootConfig;

use crate::Failure;

/// Keys accepted in a config file, with the aliases that map to them.
fn canonical(key: &str) -> Option<&'static str> {
    Some(match key {
        "alpha" => "alpha",
        "a" | "lower" => "a",
        "A" | "upper" => "A",
        "dim" | "N" => "dim",
        "sign" => "sign",
        "zeros" | "k" => "zeros",
        "rho" => "rho",
        "tol-ode" | "tol_ode" => "tol-ode",
        "tol-picard" | "tol_picard" => "tol-picard",
        "out" => "out",
        "format" => "format",
        "jobs" => "jobs",
        "growth" => "growth",
        "continuity" => "continuity",
        "fd-nodes" | "fd_nodes" => "fd-nodes",
        _ => return None,
    })
}

pub fn read_file(path: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::Input(format!("{}:{}: expected key=value", path.display(), no + 1)))?;
        let key = canonical(k.trim())
            .ok_or_else(|| Failure::Input(format!("{}:{}: unknown key '{}'", path.display(), no + 1, k.trim())))?;
        map.insert(key.to_string(), v.trim().to_string());
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signs {
    Plus,
    Minus,
    Both,
}

/// Inclusive grid `lo:hi:step`, or a single value.
pub fn parse_grid(key: &str, s: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Input(format!("--{key}: cannot parse '{s}' as a value or lo:hi:step grid"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [x] => Ok(vec![x.trim().parse().map_err(|_| bad())?]),
        [lo, hi, step] => {
            let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
            let step: f64 = step.trim().parse().map_err(|_| bad())?;
            if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(Failure::Input(format!("--{key}: grid bounds must be ordered with a positive step")));
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            if n > 100_000 {
                return Err(Failure::Input(format!("--{key}: grid has too many nodes")));
            }
            Ok((0..=n).map(|i| lo + i as f64 * step).collect())
        }
        _ => Err(bad()),
    }
}

/// Comma separated list.
pub fn parse_list(key: &str, s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| Failure::Input(format!("--{key}: cannot parse '{x}'"))))
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct Settings {
    map: BTreeMap<String, String>,
}

impl Settings {
    /// File values first, then flags on top.
    pub fn merge(file: Option<BTreeMap<String, String>>, flags: Vec<(&'static str, String)>) -> Self {
        let mut map = file.unwrap_or_default();
        for (k, v) in flags {
            map.insert(k.to_string(), v);
        }
        Settings { map }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, Failure> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| Failure::Input(format!("--{key}: '{s}' is not a number"))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, Failure> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| Failure::Input(format!("--{key}: '{s}' is not a non-negative integer"))),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, Failure> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(s) => Err(Failure::Input(format!("--{key}: '{s}' is not a boolean"))),
        }
    }

    pub fn params(&self) -> Result<Params, Failure> {
        let dim = self.usize_or("dim", 3)?;
        let p = Params {
            alpha: self.f64_or("alpha", 0.0)?,
            lower: self.f64_or("a", 1.0)?,
            upper: self.f64_or("A", 1.0)?,
            dim: u32::try_from(dim).map_err(|_| Failure::Input("--dim is too large".into()))?,
        };
        p.validate().map_err(|e| Failure::Input(e.to_string()))?;
        Ok(p)
    }

    pub fn solver(&self) -> Result<ShootConfig, Failure> {
        let mut cfg = ShootConfig::default();
        let ode = self.f64_or("tol-ode", cfg.rtol)?;
        let picard = self.f64_or("tol-picard", cfg.picard.tol)?;
        if !(ode > 0.0 && ode < 1.0) || !(picard > 0.0 && picard < 1.0) {
            return Err(Failure::Input("tolerances must lie in (0, 1)".into()));
        }
        cfg.rtol = ode;
        cfg.atol = ode * 1e-2;
        cfg.picard.tol = picard;
        Ok(cfg)
    }

    pub fn signs(&self, default: Signs) -> Result<Signs, Failure> {
        match self.raw("sign") {
            None => Ok(default),
            Some("plus" | "+") => Ok(Signs::Plus),
            Some("minus" | "-") => Ok(Signs::Minus),
            Some("both") => Ok(Signs::Both),
            Some(s) => Err(Failure::Input(format!("--sign: expected plus, minus or both, got '{s}'"))),
        }
    }

    pub fn out(&self) -> Option<PathBuf> {
        self.raw("out").map(PathBuf::from)
    }

    /// Explicit `--format`, else from the output extension, else JSON.
    pub fn format(&self) -> Result<Format, Failure> {
        match self.raw("format") {
            Some("json") => Ok(Format::Json),
            Some("csv") => Ok(Format::Csv),
            Some(s) => Err(Failure::Input(format!("--format: expected json or csv, got '{s}'"))),
            None => Ok(match self.out().as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
                Some("csv") => Format::Csv,
                _ => Format::Json,
            }),
        }
    }

    pub fn zeros(&self, default: usize) -> Result<usize, Failure> {
        let k = self.usize_or("zeros", default)?;
        if k == 0 {
            return Err(Failure::Input("--zeros must be at least 1".into()));
        }
        Ok(k)
    }
}
