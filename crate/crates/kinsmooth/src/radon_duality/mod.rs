//! Radon transforms of radial weights, the measure-adapted multiplier m_mu, the duality
//! identity as a numerical residual, and the sharp-constant machinery.

mod duality;
mod extremiser;

use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{invalid, out_of_range, Error, Result};
use crate::exponent_calculus::{sharp_constant_general, sharp_profile_m, sphere_area};
use crate::quadrature::{golden_section_max, tanh_sinh};
use crate::symbol_library::Symbol;
use crate::velocity_average::VelocityMeasure;

pub use duality::{
    duality_grid, duality_measure, duality_residual, duality_residual_with, duality_residuals, random_band_limited_g, DualityMeasure,
    DualityResidual, DUALITY_TAU_NODES,
};
pub use extremiser::{
    attainment_ratio, attainment_sequence, build_extremiser, extremiser_grid, extremiser_nodes, sharp_constant_radial_check,
    AttainmentPoint, RadialCheck,
};

/// One verification record, as emitted by the checks and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check_id: String,
    pub params: serde_json::Value,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub resolution: String,
    pub pass: bool,
}

/// |S^{d-2}| Gamma((d-1)/2) / (2 Gamma((d+1)/2 + kappa)).
pub fn radon_kappa_constant(d: u32, kappa: f64) -> f64 {
    let df = d as f64;
    sphere_area(d - 2) * gamma((df - 1.0) / 2.0) / (2.0 * gamma((df + 1.0) / 2.0 + kappa))
}

pub(crate) fn radon_kappa_closed_unchecked(d: u32, kappa: f64, r: f64) -> f64 {
    let e = kappa + (d as f64 - 1.0) / 2.0;
    let b = 1.0 - r * r;
    if b < 0.0 || (b == 0.0 && e > 0.0) {
        return 0.0;
    }
    let v = if e == 0.0 { 1.0 } else { b.powf(e) };
    radon_kappa_constant(d, kappa) * v
}

fn check_kappa_d(d: u32, kappa: f64) -> Result<()> {
    if !(-1.0..=0.0).contains(&kappa) {
        return out_of_range("kappa (need -1 <= kappa <= 0)", kappa);
    }
    if !(2..=3).contains(&d) {
        return out_of_range("dimension d", d);
    }
    Ok(())
}

/// Closed form of the Radon transform of w_kappa(v) = (1-|v|^2)_+^kappa / Gamma(1+kappa).
/// At kappa = -1 this is the transform of half the surface measure.
pub fn radon_kappa_closed(d: u32, kappa: f64, r: f64) -> Result<f64> {
    check_kappa_d(d, kappa)?;
    Ok(radon_kappa_closed_unchecked(d, kappa, r))
}

/// Radial profile of w_kappa, given s and 1 - s.
fn w_kappa(kappa: f64, s: f64, one_minus: f64) -> f64 {
    if kappa == 0.0 {
        return 1.0;
    }
    (one_minus * (1.0 + s)).powf(kappa) / gamma(1.0 + kappa)
}

/// Power-law exponent of f at an endpoint, from two probes at distance e1 > e2.
fn local_exponent(f: impl Fn(f64) -> f64, e1: f64, e2: f64) -> Option<f64> {
    let (a, b) = (f(e1).abs(), f(e2).abs());
    (a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()).then(|| (b / a).ln() / (e2 / e1).ln())
}

fn radon_radial_impl(d: u32, w: &dyn Fn(f64, f64) -> f64, r: f64) -> Result<f64> {
    if !(2..=3).contains(&d) {
        return out_of_range("dimension d", d);
    }
    let a = r.abs();
    if !(a < 1.0) {
        return Ok(0.0);
    }
    let e = (d as f64 - 3.0) / 2.0;
    // (1 - r^2/s^2) = (s - |r|)(s + |r|)/s^2 with s - |r| passed in exactly
    let integrand = |s: f64, ds: f64, one_minus: f64| -> f64 {
        let k = if e == 0.0 { 1.0 } else { (ds * (s + a) / (s * s)).powf(e) };
        w(s, one_minus) * s.powi(d as i32 - 2) * k
    };
    for (name, probe) in [
        ("1", Box::new(|eps: f64| integrand(1.0 - eps, 1.0 - eps - a, eps)) as Box<dyn Fn(f64) -> f64>),
        ("|r|", Box::new(|eps: f64| integrand(a + eps, eps, 1.0 - a - eps))),
    ] {
        if let Some(p) = local_exponent(probe, 1e-7, 1e-10) {
            if p <= -1.0 + 1e-3 {
                return Err(Error::Degenerate(format!("weight not integrable near s = {name} (local exponent {p:.3})")));
            }
        }
    }
    let v = tanh_sinh(integrand, a, 1.0, 1e-12);
    if !v.is_finite() {
        return Err(Error::Degenerate("weight not integrable".into()));
    }
    Ok(sphere_area(d - 2) * v)
}

/// Radon transform at signed distance r of the radial weight w(v) = w_tilde(|v|) on the unit ball:
/// |S^{d-2}| int_{|r|}^1 w_tilde(s) s^{d-2} (1 - r^2/s^2)^{(d-3)/2} ds.
pub fn radon_radial(d: u32, w_tilde: impl Fn(f64) -> f64, r: f64) -> Result<f64> {
    radon_radial_impl(d, &|s, _| w_tilde(s), r)
}

/// The kappa-weight Radon profile in closed and quadrature form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadonProfile {
    pub d: u32,
    pub kappa: f64,
    pub constant: f64,
}

impl RadonProfile {
    pub fn new(d: u32, kappa: f64) -> Result<Self> {
        check_kappa_d(d, kappa)?;
        Ok(Self { d, kappa, constant: radon_kappa_constant(d, kappa) })
    }

    pub fn closed_form(&self, r: f64) -> f64 {
        radon_kappa_closed_unchecked(self.d, self.kappa, r)
    }

    /// Polar-coordinate quadrature; at kappa = -1 (half surface measure) the co-area integral
    /// over the slice sphere of radius rho = sqrt(1 - r^2), with surface gradient rho.
    pub fn quadrature_form(&self, r: f64) -> Result<f64> {
        if self.kappa > -1.0 {
            let k = self.kappa;
            // with exponent 0 the profile jumps at |r| = 1; take the one-sided limit there
            let flat = k + (self.d as f64 - 1.0) / 2.0 == 0.0;
            let r = if flat && r.abs() == 1.0 { r * (1.0 - 1e-12) } else { r };
            return radon_radial_impl(self.d, &|s, om| w_kappa(k, s, om), r);
        }
        if r.abs() >= 1.0 {
            return Ok(self.closed_form(r));
        }
        let rho = (1.0 - r * r).sqrt();
        let v = if self.d == 2 {
            2.0 / rho
        } else {
            let n = 64;
            (0..n).map(|_| (2.0 * PI / n as f64) * rho / rho).sum()
        };
        Ok(0.5 * v)
    }
}

/// m_mu = m * ((1/|xi|) R w(-tau/|xi|))^{1/2} for a radial measure.
pub fn build_m_mu(m: &Symbol, measure: &VelocityMeasure) -> Result<Symbol> {
    if !measure.is_radial() {
        return invalid("m_mu needs a radial velocity measure");
    }
    let (kappa, scale) = measure.radon_parameters();
    Ok(Symbol::product(vec![m.clone(), Symbol::RadonRoot { d: measure.d as u32, kappa, scale }]))
}

/// Result of the 1-D maximisation of M over [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpSearch {
    pub d: u32,
    pub beta_minus: f64,
    /// 4 pi sup M.
    pub value: f64,
    pub argmax: f64,
    /// Zero of (log M)' when it lies in (0, 1).
    pub stationary: Option<f64>,
    pub closed_form: f64,
}

/// Golden-section search for 4 pi sup M, cross-checked against the analytic stationary point.
pub fn sharp_constant_search(d: u32, beta_minus: f64) -> Result<SharpSearch> {
    let closed_form = sharp_constant_general(d, beta_minus)?.value;
    let df = d as f64;
    let a = (df - 1.0) / 2.0 - 2.0 * beta_minus;
    let b = 2.0 * beta_minus + (df - 3.0) / 2.0;
    let m = |l: f64| sharp_profile_m(d, beta_minus, l);
    let (argmax, max) = golden_section_max(m, 0.0, 1.0, 1e-12);
    let stationary = (a + b > 0.0).then(|| (a - b) / (a + b)).filter(|l| *l > 0.0 && *l < 1.0);
    let mut best = max;
    if let Some(s) = stationary {
        let ms = m(s);
        if (argmax - s).abs() > 1e-5 && ms > max * (1.0 + 1e-12) {
            return Err(Error::Unresolvable(format!("golden section stopped at {argmax}, stationary point {s} is higher")));
        }
        best = best.max(ms);
    }
    Ok(SharpSearch { d, beta_minus, value: 4.0 * PI * best, argmax, stationary, closed_form })
}

/// 4 pi sup_{[0,1]} M by direct search.
pub fn sharp_constant_numeric(d: u32, beta_minus: f64) -> Result<f64> {
    Ok(sharp_constant_search(d, beta_minus)?.value)
}

/// Fraction of an n-point lattice on [0, 1] where M exceeds (1 - tol) sup M. Shrinks to zero
/// with tol when the maximiser is a single point; stays 1 when M is constant.
pub fn maximizer_set_measure(d: u32, beta_minus: f64, n: usize, tol: f64) -> Result<f64> {
    let sup = sharp_constant_numeric(d, beta_minus)? / (4.0 * PI);
    let hits = (0..=n).filter(|&i| sharp_profile_m(d, beta_minus, i as f64 / n as f64) >= (1.0 - tol) * sup).count();
    Ok(hits as f64 / (n + 1) as f64)
}

#[cfg(test)]
mod tests;
