//! ||C_k rho f||_2 / ||f||_2 over dyadic shells for the surface measure, by polar quadrature
//! on the frequency side with rho^f taken from the slice formula.
//!
//! Generic data are velocity caps around -xi/|xi| of angular size 2^{-k/2}, so that rho^f
//! lands in the k-th shell; radial-in-x data are fixed low-degree velocity harmonics.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{claims, FitKind, ScaleRow, ScalingReport, MIN_SCALES};
use crate::error::{invalid, out_of_range, Error, Result};
use crate::exponent_calculus::sphere_area;
use crate::quadrature::gauss_legendre;
use crate::spectral_grid::{eta, C64};
use crate::symbol_library::dyadic_cone_symbol;
use crate::velocity_average::{real_spherical_harmonic, rho_hat_slice_fn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoDataKind {
    Generic,
    RadialX,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhoScanQuadrature {
    /// Gauss-Legendre nodes in |xi| over [1/2, 2].
    pub n_r: usize,
    /// Equispaced azimuthal nodes for xi/|xi|.
    pub n_angle: usize,
    /// Gauss-Legendre nodes in the polar cosine (d = 3).
    pub n_polar: usize,
    /// Gauss-Legendre nodes across the shell and across velocity caps.
    pub n_s: usize,
}

impl Default for RhoScanQuadrature {
    fn default() -> Self {
        Self { n_r: 24, n_angle: 32, n_polar: 12, n_s: 24 }
    }
}

/// Harmonic content of the radial-in-x data: degrees 0, 1, 2.
const RADIAL_DEGREES: [usize; 3] = [0, 1, 2];

fn harmonic_sum(d: usize, v: &[f64; 3]) -> C64 {
    RADIAL_DEGREES
        .iter()
        .map(|&l| {
            if d == 2 {
                C64::from_polar(1.0, l as f64 * v[1].atan2(v[0]))
            } else {
                C64::new(real_spherical_harmonic(l, 0, v), 0.0)
            }
        })
        .sum()
}

struct Data {
    d: usize,
    kind: RhoDataKind,
    k: i32,
}

impl Data {
    fn fhat(&self, xi: &[f64; 3], r: f64, v: &[f64; 3]) -> C64 {
        let a = eta(r);
        if a == 0.0 {
            return C64::new(0.0, 0.0);
        }
        match self.kind {
            RhoDataKind::Generic => {
                let c = (xi[0] * v[0] + xi[1] * v[1] + xi[2] * v[2]) / r;
                C64::new(a * eta(2f64.powi(self.k) * (1.0 + c)), 0.0)
            }
            RhoDataKind::RadialX => harmonic_sum(self.d, v) * a,
        }
    }

    /// int |f^(xi, v)|^2 dsigma(v) / eta(|xi|)^2, independent of xi for both kinds.
    fn velocity_mass(&self, quad: &RhoScanQuadrature) -> f64 {
        let d = self.d;
        match self.kind {
            RhoDataKind::Generic => {
                // zonal: |S^{d-2}| int eta(2^k s)^2 (s (2 - s))^{(d-3)/2} ds, s = 1 + v.xi'
                let (lo, hi) = (2f64.powi(-self.k - 1), 2f64.powi(-self.k + 1));
                let s: f64 = gauss_legendre(quad.n_s)
                    .mapped(lo, hi)
                    .map(|(s, w)| w * eta(2f64.powi(self.k) * s).powi(2) * (s * (2.0 - s)).powf((d as f64 - 3.0) / 2.0))
                    .sum();
                sphere_area(d as u32 - 2) * s
            }
            RhoDataKind::RadialX => sphere_points(d, quad).iter().map(|(v, w)| w * harmonic_sum(d, v).norm_sqr()).sum(),
        }
    }
}

/// Quadrature on S^{d-1}: equispaced circle (d = 2), Gauss x equispaced (d = 3).
fn sphere_points(d: usize, quad: &RhoScanQuadrature) -> Vec<([f64; 3], f64)> {
    let na = quad.n_angle;
    let ha = 2.0 * PI / na as f64;
    if d == 2 {
        return (0..na).map(|j| j as f64 * ha).map(|a| ([a.cos(), a.sin(), 0.0], ha)).collect();
    }
    let gl = gauss_legendre(quad.n_polar);
    let mut out = Vec::with_capacity(quad.n_polar * na);
    for (&c, &w) in gl.nodes.iter().zip(&gl.weights) {
        let s = (1.0 - c * c).sqrt();
        for j in 0..na {
            let a = j as f64 * ha;
            out.push(([s * a.cos(), s * a.sin(), c], w * ha));
        }
    }
    out
}

fn shell_ratio(data: &Data, quad: &RhoScanQuadrature) -> Result<(f64, f64)> {
    let d = data.d;
    let k = data.k;
    let ck = dyadic_cone_symbol(k)?;
    let dirs = sphere_points(d, quad);
    let radial = gauss_legendre(quad.n_r);
    let shell = gauss_legendre(quad.n_s);
    let (lo, hi) = (2f64.powi(-k - 1), 2f64.powi(-k + 1));
    let mut lhs = 0.0;
    let mut rad_mass = 0.0;
    for (r, wr) in radial.mapped(0.5, 2.0) {
        let jac = r.powi(d as i32 - 1);
        rad_mass += wr * jac * eta(r).powi(2);
        for (u, wu) in dirs.iter() {
            let xi = [r * u[0], r * u[1], r * u[2]];
            for (s, ws) in shell.mapped(lo, hi) {
                let tau = r - s;
                let m = ck.eval(r, tau);
                if m == 0.0 {
                    continue;
                }
                let rho = rho_hat_slice_fn(d, &xi, tau, |v| data.fhat(&xi, r, v))?;
                lhs += wr * jac * wu * ws * m * m * rho.norm_sqr();
            }
        }
    }
    let lhs = lhs / (2.0 * PI).powi(d as i32 + 1);
    let rhs = rad_mass * sphere_area(d as u32 - 1) * data.velocity_mass(quad) / (2.0 * PI).powi(d as i32);
    Ok((lhs.sqrt(), rhs.sqrt()))
}

pub fn rho_dyadic_scan(d: usize, kind: RhoDataKind, ks: &[i32]) -> Result<ScalingReport> {
    rho_dyadic_scan_with(d, kind, ks, RhoScanQuadrature::default())
}

/// Predicted envelope (3 - d)/4 for generic data and (2 - d)/2 for data radial in x.
pub fn rho_dyadic_scan_with(d: usize, kind: RhoDataKind, ks: &[i32], quad: RhoScanQuadrature) -> Result<ScalingReport> {
    if !(2..=3).contains(&d) {
        return out_of_range("dimension (need 2 or 3)", d);
    }
    if ks.len() < MIN_SCALES {
        return invalid(format!("need at least {MIN_SCALES} shells, got {}", ks.len()));
    }
    if ks.iter().enumerate().any(|(i, a)| ks[..i].contains(a)) {
        return invalid("shells must be distinct");
    }
    if quad.n_r == 0 || quad.n_angle == 0 || quad.n_polar == 0 || quad.n_s == 0 {
        return invalid("quadrature sizes must be positive");
    }
    let rows: Result<Vec<ScaleRow>> = ks
        .par_iter()
        .map(|&k| {
            let (lhs, rhs) = shell_ratio(&Data { d, kind, k }, &quad)?;
            if lhs == 0.0 || rhs == 0.0 {
                return Err(Error::Degenerate(format!("no frequency mass of rho f in shell k = {k}")));
            }
            Ok(ScaleRow::new(2f64.powi(k), lhs, rhs))
        })
        .collect();
    let (predicted, claim) = match kind {
        RhoDataKind::Generic => ((3.0 - d as f64) / 4.0, claims::RHO_GENERIC_ENVELOPE),
        RhoDataKind::RadialX => ((2.0 - d as f64) / 2.0, claims::RHO_RADIAL_ENVELOPE),
    };
    ScalingReport::assemble(
        "rho_dyadic_scan",
        claim,
        json!({ "d": d, "data": kind }),
        "2^k",
        rows?,
        predicted,
        FitKind::UpperEnvelope,
        json!({ "frame": "polar-quadrature", "quadrature": quad }),
    )
}
