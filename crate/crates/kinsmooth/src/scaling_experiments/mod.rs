//! Test-function families (Knapp plates, bumps, cap and harmonic data), norm-ratio
//! measurements over dyadic scales, and power-law fits against predicted exponents.

mod knapp;
mod probes;
mod rho_scan;

use serde::Serialize;

use crate::error::{invalid, Error, Result};

pub use knapp::{
    dyadic_scan, dyadic_scan_with, knapp_family, knapp_scan, knapp_scan_with, KnappParams, KnappPlate, PlateSupport,
    DUAL_BOX_SIZE,
};
pub use probes::{
    bump_cone_norm_sq, bump_cone_norm_sq_exact, bump_family, smoothing_probe, strichartz_probe, StrichartzProbe,
    StrichartzVariant,
};
pub use rho_scan::{rho_dyadic_scan, rho_dyadic_scan_with, RhoDataKind, RhoScanQuadrature};

/// Default thickness sweep 2^-3 .. 2^-7.
pub const DEFAULT_DELTAS: [f64; 5] = [0.125, 0.0625, 0.03125, 0.015625, 0.0078125];
/// Default shell sweep.
pub const DEFAULT_KS: [i32; 6] = [3, 4, 5, 6, 7, 8];
/// Slope tolerance for necessity fits and sufficiency envelopes.
pub const SLOPE_TOLERANCE: f64 = 0.1;
/// Minimum number of scales in a fit.
pub const MIN_SCALES: usize = 4;

/// Claim identifiers embedded in reports.
pub mod claims {
    pub const KNAPP_NECESSITY: &str = "cone-multiplier.knapp-necessity";
    pub const BUMP_NECESSITY: &str = "cone-multiplier.alpha-above-minus-half";
    pub const DYADIC_ENVELOPE: &str = "cone-multiplier.dyadic-piece-bound";
    pub const RHO_GENERIC_ENVELOPE: &str = "velocity-average.dyadic-shell-l2";
    pub const RHO_RADIAL_ENVELOPE: &str = "velocity-average.dyadic-shell-l2-radial";
    pub const SMOOTHING: &str = "velocity-average.global-smoothing";
    pub const STRICHARTZ: &str = "wave.strichartz";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// |slope - predicted| <= tolerance.
    TwoSided,
    /// slope <= predicted + tolerance.
    UpperEnvelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanVerdict {
    Pass,
    Fail,
    /// At an exact threshold the theory leaves open; reported without a verdict.
    Descriptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleRow {
    pub scale: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub log2_ratio: f64,
}

impl ScaleRow {
    pub fn new(scale: f64, lhs: f64, rhs: f64) -> Self {
        let ratio = lhs / rhs;
        Self { scale, lhs, rhs, ratio, log2_ratio: ratio.log2() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub experiment: String,
    pub claim: String,
    pub params: serde_json::Value,
    /// What the scale column holds (delta, 2^k, ...).
    pub scale_meaning: String,
    pub rows: Vec<ScaleRow>,
    pub slope: f64,
    pub fit_residual: f64,
    pub predicted_slope: f64,
    pub fit: FitKind,
    pub tolerance: f64,
    pub verdict: ScanVerdict,
    pub grid: serde_json::Value,
    pub seed: Option<u64>,
}

impl ScalingReport {
    /// Fits log2 ratio against log2 scale and applies the verdict rule.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        experiment: &str,
        claim: &str,
        params: serde_json::Value,
        scale_meaning: &str,
        rows: Vec<ScaleRow>,
        predicted_slope: f64,
        fit: FitKind,
        grid: serde_json::Value,
    ) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.scale, r.ratio)).collect();
        let (slope, fit_residual) = powerlaw_fit(&pairs)?;
        let tolerance = SLOPE_TOLERANCE;
        let ok = match fit {
            FitKind::TwoSided => (slope - predicted_slope).abs() <= tolerance,
            FitKind::UpperEnvelope => slope <= predicted_slope + tolerance,
        };
        Ok(Self {
            experiment: experiment.into(),
            claim: claim.into(),
            params,
            scale_meaning: scale_meaning.into(),
            rows,
            slope,
            fit_residual,
            predicted_slope,
            fit,
            tolerance,
            verdict: if ok { ScanVerdict::Pass } else { ScanVerdict::Fail },
            grid,
            seed: None,
        })
    }

    pub fn passed(&self) -> bool {
        self.verdict != ScanVerdict::Fail
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// One row per scale: scale, lhs, rhs, ratio, log2_ratio.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::Invalid(format!("csv: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Invalid(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Invalid(format!("csv: {e}")))
    }

    /// gnuplot-friendly whitespace table.
    pub fn to_dat(&self) -> String {
        let mut s = String::from("# scale lhs rhs ratio log2_ratio\n");
        for r in &self.rows {
            s.push_str(&format!("{} {} {} {} {}\n", r.scale, r.lhs, r.rhs, r.ratio, r.log2_ratio));
        }
        s
    }
}

/// Ordinary least squares of log2 value on log2 scale; returns (slope, max abs residual).
pub fn powerlaw_fit(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    if pairs.len() < MIN_SCALES {
        return invalid(format!("power-law fit needs at least {MIN_SCALES} pairs, got {}", pairs.len()));
    }
    if let Some(p) = pairs.iter().find(|(s, v)| !(*s > 0.0 && *v > 0.0 && s.is_finite() && v.is_finite())) {
        return Err(Error::OutOfRange { what: "power-law pair (need positive finite values)", value: format!("({}, {})", p.0, p.1) });
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.log2()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.log2()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("power-law fit needs at least two distinct scales");
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let resid = xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).abs()).fold(0.0, f64::max);
    Ok((slope, resid))
}

#[cfg(test)]
mod tests;
