//! Experiment configuration: a TOML document with fixed keys. Unknown keys and bad values are
//! reported with the dotted path of the offending key.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radon_duality::DualityMeasure;
use crate::scaling_experiments::{RhoDataKind, StrichartzVariant, DEFAULT_DELTAS, DEFAULT_KS};
use crate::symbol_library::parse_symbol;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Subcommand to run when none is given on the command line.
    pub command: Option<String>,
    pub seed: u64,
    /// Multiplier in the symbol grammar, e.g. "dplus:0.25*dminus:0.25".
    pub symbol: String,
    pub exponents: Exponents,
    pub grid: Grid,
    pub measure: Measure,
    pub scales: Scales,
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Exponents {
    pub d: usize,
    pub q: f64,
    pub r: f64,
    pub kappa: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grid {
    /// Points per axis (space and time); a power of two >= 8, or 0 for the command's default.
    pub n: usize,
    /// Period of the Strichartz probe's time window.
    pub t_span: f64,
    /// Velocity nodes; 0 picks the command's default.
    pub velocity_nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureChoice {
    Sphere,
    Ball,
}

impl From<MeasureChoice> for DualityMeasure {
    fn from(m: MeasureChoice) -> Self {
        match m {
            MeasureChoice::Sphere => DualityMeasure::Sphere,
            MeasureChoice::Ball => DualityMeasure::Ball,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Measure {
    pub kind: MeasureChoice,
    pub data: RhoDataKind,
    pub variant: StrichartzVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scales {
    pub deltas: Vec<f64>,
    pub ks: Vec<i32>,
    pub sizes: Vec<usize>,
    pub modes: Vec<usize>,
    pub seeds: u64,
    /// q = r lattice "lo:hi:step" for the threshold table.
    pub grid_qr: String,
    pub points: usize,
    pub criteria: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub dir: PathBuf,
    /// Omit timestamps and timings so identical inputs give identical reports.
    pub deterministic: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            seed: 1,
            symbol: "one".into(),
            exponents: Exponents::default(),
            grid: Grid::default(),
            measure: Measure::default(),
            scales: Scales::default(),
            output: Output::default(),
        }
    }
}

impl Default for Exponents {
    fn default() -> Self {
        Self { d: 2, q: 2.0, r: 2.0, kappa: -1.0, beta_plus: 0.25, beta_minus: 0.25, alpha: 0.0 }
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self { n: 0, t_span: 8.0, velocity_nodes: 0 }
    }
}

impl Default for Measure {
    fn default() -> Self {
        Self { kind: MeasureChoice::Sphere, data: RhoDataKind::Generic, variant: StrichartzVariant::General }
    }
}

impl Default for Scales {
    fn default() -> Self {
        Self {
            deltas: DEFAULT_DELTAS.to_vec(),
            ks: DEFAULT_KS.to_vec(),
            sizes: vec![128, 256, 512],
            modes: vec![0, 1, 2],
            seeds: 1,
            grid_qr: "2:8:0.5".into(),
            points: 200,
            criteria: crate::acceptance::CRITERIA.to_vec(),
        }
    }
}

impl Default for Output {
    fn default() -> Self {
        Self { dir: PathBuf::from("kinsmooth-out"), deterministic: false }
    }
}

fn cfg_err<T>(path: &str, msg: impl Into<String>) -> Result<T> {
    Err(Error::Config { path: path.into(), msg: msg.into() })
}

impl ExperimentConfig {
    pub fn from_toml(src: &str) -> Result<Self> {
        let de = toml::Deserializer::new(src);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let msg = e.into_inner().message().trim().to_string();
            Error::Config { path, msg }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    /// Range checks that the type system does not carry.
    pub fn validate(&self) -> Result<()> {
        let e = &self.exponents;
        if !(2..=3).contains(&e.d) {
            return cfg_err("exponents.d", format!("need 2 or 3, got {}", e.d));
        }
        for (name, v) in [("exponents.q", e.q), ("exponents.r", e.r)] {
            if !(v >= 1.0 && v.is_finite()) {
                return cfg_err(name, format!("need a finite exponent >= 1, got {v}"));
            }
        }
        if !(-1.0..=0.0).contains(&e.kappa) {
            return cfg_err("exponents.kappa", format!("need -1 <= kappa <= 0, got {}", e.kappa));
        }
        for (name, v) in [("exponents.beta_plus", e.beta_plus), ("exponents.beta_minus", e.beta_minus), ("exponents.alpha", e.alpha)] {
            if !v.is_finite() {
                return cfg_err(name, "not a finite number");
            }
        }
        let g = &self.grid;
        if g.n != 0 && (g.n < 8 || !g.n.is_power_of_two()) {
            return cfg_err("grid.n", format!("need 0 or a power of two >= 8, got {}", g.n));
        }
        if !(g.t_span > 0.0 && g.t_span.is_finite()) {
            return cfg_err("grid.t_span", format!("need a positive span, got {}", g.t_span));
        }
        if let Err(err) = parse_symbol(&self.symbol) {
            return cfg_err("symbol", err.to_string());
        }
        let s = &self.scales;
        if s.deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return cfg_err("scales.deltas", "every delta must be positive");
        }
        if s.sizes.iter().any(|n| *n < 8 || !n.is_power_of_two()) {
            return cfg_err("scales.sizes", "every size must be a power of two >= 8");
        }
        if s.seeds == 0 {
            return cfg_err("scales.seeds", "need at least one seed");
        }
        if s.points == 0 {
            return cfg_err("scales.points", "need at least one point");
        }
        if s.modes.iter().any(|&k| k > 64) {
            return cfg_err("scales.modes", "harmonic degree above 64");
        }
        if let Some(&c) = s.criteria.iter().find(|c| !crate::acceptance::CRITERIA.contains(c)) {
            return cfg_err("scales.criteria", format!("no criterion {c}"));
        }
        parse_range(&s.grid_qr).map_err(|m| Error::Config { path: "scales.grid_qr".into(), msg: m })?;
        Ok(())
    }
}

/// "lo:hi:step" with 1 <= lo <= hi and step > 0; at most 10^4 values.
pub fn parse_range(s: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected lo:hi:step, got {s:?}"));
    }
    let num = |p: &str| p.trim().parse::<f64>().map_err(|_| format!("not a number: {p:?}"));
    let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if !(lo >= 1.0 && hi >= lo && hi.is_finite() && step > 0.0) {
        return Err(format!("need 1 <= lo <= hi and step > 0, got {s:?}"));
    }
    let n = ((hi - lo) / step + 1e-9).floor();
    if n > 1e4 {
        return Err("more than 10^4 lattice values".into());
    }
    Ok((0..=n as usize).map(|i| lo + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        assert!(c.validate().is_ok());
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), c);
    }

    #[test]
    fn unknown_key_reports_path() {
        let e = ExperimentConfig::from_toml("[grid]\nn = 64\nwidth = 3\n").unwrap_err();
        match e {
            Error::Config { path, msg } => {
                assert_eq!(path, "grid.width");
                assert!(msg.contains("unknown field"), "{msg}");
            }
            e => panic!("{e}"),
        }
        let e = ExperimentConfig::from_toml("[exponents]\nd = \"two\"\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path == "exponents.d"), "{e}");
        let e = ExperimentConfig::from_toml("[measure]\nkind = \"cube\"\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path == "measure.kind"), "{e}");
    }

    #[test]
    fn range_checks_report_path() {
        for (src, path) in [
            ("[grid]\nn = 48\n", "grid.n"),
            ("[exponents]\nd = 4\n", "exponents.d"),
            ("[exponents]\nkappa = 0.5\n", "exponents.kappa"),
            ("symbol = \"dplus:\"\n", "symbol"),
            ("[scales]\ngrid_qr = \"2:1:0.5\"\n", "scales.grid_qr"),
            ("[scales]\ncriteria = [12]\n", "scales.criteria"),
        ] {
            match ExperimentConfig::from_toml(src) {
                Err(Error::Config { path: p, .. }) => assert_eq!(p, path, "{src}"),
                r => panic!("{src}: {r:?}"),
            }
        }
    }

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("2:3:0.5").unwrap(), vec![2.0, 2.5, 3.0]);
        assert_eq!(parse_range("2:8:0.5").unwrap().len(), 13);
        assert!(parse_range("0:3:1").is_err());
        assert!(parse_range("2:3").is_err());
        assert!(parse_range("2:3:0").is_err());
        assert!(parse_range("1:1e9:1e-3").is_err());
    }
}
