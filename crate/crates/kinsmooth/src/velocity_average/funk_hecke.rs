//! Data radial in x expanded in velocity harmonics, and the Funk-Hecke assembly of rho^f.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{PhaseSpaceData, VelocityMeasure};
use crate::error::{invalid, out_of_range, Result};
use crate::exponent_calculus::special::{legendre_all, legendre_unchecked};
use crate::exponent_calculus::sphere_area;
use crate::quadrature::tanh_sinh;
use crate::spectral_grid::{norm3, Domain, GridSpec, SpaceTimeField, C64};

/// Samples in the radial profile grid (geometric over [1/2, 2]).
pub const RADIAL_SAMPLES: usize = 128;
const R_MIN: f64 = 0.5;
const R_MAX: f64 = 2.0;

/// One term a(r) Y_{k,m}(v) of the expansion f^(xi, v) = sum_k Y_k^{|xi|}(v).
/// Harmonics: e^{i m theta} with m = +-k (d = 2); real orthonormal Y_{k,m}, |m| <= k (d = 3).
#[derive(Debug, Clone, PartialEq)]
pub struct RadialModeData {
    pub d: usize,
    pub k: usize,
    pub m: i64,
    pub radii: Vec<f64>,
    pub values: Vec<C64>,
}

impl RadialModeData {
    pub fn from_fn(d: usize, k: usize, m: i64, profile: impl Fn(f64) -> C64) -> Result<Self> {
        match d {
            2 if m.unsigned_abs() as usize == k => {}
            3 if m.unsigned_abs() as usize <= k => {}
            2 | 3 => return invalid(format!("harmonic index m = {m} invalid for degree {k} in d = {d}")),
            _ => return out_of_range("dimension (need 2 or 3)", d),
        }
        let q = (R_MAX / R_MIN).ln() / (RADIAL_SAMPLES - 1) as f64;
        let radii: Vec<f64> = (0..RADIAL_SAMPLES).map(|i| R_MIN * (q * i as f64).exp()).collect();
        let values = radii.iter().map(|&r| profile(r)).collect();
        Ok(Self { d, k, m, radii, values })
    }

    /// Cubic Lagrange interpolation in log r; zero outside the sampled window.
    pub fn profile(&self, r: f64) -> C64 {
        let n = self.radii.len();
        if n == 0 || r < self.radii[0] || r > self.radii[n - 1] {
            return C64::new(0.0, 0.0);
        }
        let lr = r.ln();
        let l0 = self.radii[0].ln();
        let h = (self.radii[n - 1].ln() - l0) / (n - 1) as f64;
        let s = (lr - l0) / h;
        let i = (s.floor() as usize).min(n - 2);
        let lo = i.saturating_sub(1).min(n.saturating_sub(4));
        let idx: Vec<usize> = (lo..(lo + 4).min(n)).collect();
        let mut acc = C64::new(0.0, 0.0);
        for &a in &idx {
            let mut w = 1.0;
            for &b in &idx {
                if a != b {
                    w *= (s - b as f64) / (a as f64 - b as f64);
                }
            }
            acc += self.values[a] * w;
        }
        acc
    }

    pub fn harmonic(&self, v: &[f64; 3]) -> C64 {
        if self.d == 2 {
            C64::from_polar(1.0, self.m as f64 * v[1].atan2(v[0]))
        } else {
            C64::new(real_spherical_harmonic(self.k, self.m, v), 0.0)
        }
    }

    /// int |a(r)|^2 r^{d-1} dr over the sampled window (trapezoid in log r).
    pub fn norm_sq(&self) -> f64 {
        let n = self.radii.len();
        if n < 2 {
            return 0.0;
        }
        let h = (self.radii[n - 1] / self.radii[0]).ln() / (n - 1) as f64;
        let f = |i: usize| self.values[i].norm_sqr() * self.radii[i].powi(self.d as i32);
        h * ((1..n - 1).map(f).sum::<f64>() + 0.5 * (f(0) + f(n - 1)))
    }

    /// ||Y_k^r||^2 in L^2(dsigma) is |a(r)|^2 |S^1| for d = 2 and |a(r)|^2 for d = 3.
    pub fn harmonic_norm_sq(&self) -> f64 {
        if self.d == 2 {
            2.0 * PI
        } else {
            1.0
        }
    }
}

/// Real orthonormal spherical harmonic on S^2 (cos for m > 0, sin for m < 0).
pub fn real_spherical_harmonic(l: usize, m: i64, v: &[f64; 3]) -> f64 {
    let ma = m.unsigned_abs() as usize;
    if ma > l {
        return 0.0;
    }
    let r = norm3(v);
    let x = if r > 0.0 { (v[2] / r).clamp(-1.0, 1.0) } else { 1.0 };
    let phi = v[1].atan2(v[0]);
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0;
    for i in 0..ma {
        pmm *= (2 * i + 1) as f64 * s;
    }
    let plm = if l == ma {
        pmm
    } else {
        let mut p0 = pmm;
        let mut p1 = x * (2 * ma + 1) as f64 * pmm;
        for ll in (ma + 2)..=l {
            let p2 = ((2 * ll - 1) as f64 * x * p1 - (ll + ma - 1) as f64 * p0) / (ll - ma) as f64;
            p0 = p1;
            p1 = p2;
        }
        p1
    };
    let mut ratio = 1.0;
    for i in (l - ma + 1)..=(l + ma) {
        ratio /= i as f64;
    }
    let n = ((2 * l + 1) as f64 / (4.0 * PI) * ratio).sqrt();
    match m.signum() {
        0 => n * plm,
        1 => std::f64::consts::SQRT_2 * n * plm * (ma as f64 * phi).cos(),
        _ => std::f64::consts::SQRT_2 * n * plm * (ma as f64 * phi).sin(),
    }
}

fn check_modes(grid: &GridSpec, modes: &[RadialModeData]) -> Result<()> {
    if let Some(m) = modes.iter().find(|m| m.d != grid.d) {
        return invalid(format!("mode in d = {} on a d = {} grid", m.d, grid.d));
    }
    Ok(())
}

/// rho^f from the series (2 pi |S^{d-2}| / |xi|)(1 - c^2)_+^{(d-3)/2} sum_k p_{d,k}(c) Y_k^{|xi|}(xi').
/// For d = 2 the cone points themselves are stored as 0.
pub fn funk_hecke_average(grid: &GridSpec, modes: &[RadialModeData]) -> Result<SpaceTimeField> {
    grid.validate()?;
    check_modes(grid, modes)?;
    let d = grid.d as u32;
    let ns = grid.n_space();
    let kmax = modes.iter().map(|m| m.k).max().unwrap_or(0);
    let pref = 2.0 * PI * sphere_area(d - 2);
    let cols: Vec<Vec<C64>> = (0..ns)
        .into_par_iter()
        .map(|ix| {
            let xi = grid.xi(ix);
            let r = norm3(&xi);
            let mut col = vec![C64::new(0.0, 0.0); grid.n_t];
            if r == 0.0 || modes.is_empty() {
                return col;
            }
            let unit = [xi[0] / r, xi[1] / r, xi[2] / r];
            let mut h = vec![C64::new(0.0, 0.0); kmax + 1];
            for m in modes {
                h[m.k] += m.profile(r) * m.harmonic(&unit);
            }
            if h.iter().all(|z| z.norm_sqr() == 0.0) {
                return col;
            }
            let mut p = vec![0.0; kmax + 1];
            for (it, z) in col.iter_mut().enumerate() {
                let tau = grid.tau(it);
                if tau.abs() > r || (d == 2 && tau.abs() == r) {
                    continue;
                }
                let c = -tau / r;
                legendre_all(d, c, &mut p);
                let w = (1.0 - c * c).powf((d as f64 - 3.0) / 2.0);
                *z = h.iter().zip(&p).map(|(a, b)| a * b).sum::<C64>() * (pref / r * w);
            }
            col
        })
        .collect();
    let mut out = SpaceTimeField::zeros(*grid, Domain::Frequency);
    for (ix, col) in cols.into_iter().enumerate() {
        for (it, z) in col.into_iter().enumerate() {
            out.samples[it * ns + ix] = z;
        }
    }
    Ok(out)
}

/// The same data as phase-space samples f^(xi, v_j) = sum a(|xi|) Y(v_j).
pub fn phase_space_from_modes(grid: GridSpec, measure: VelocityMeasure, modes: &[RadialModeData]) -> Result<PhaseSpaceData> {
    check_modes(&grid, modes)?;
    PhaseSpaceData::from_frequency_fn(grid, measure, |xi, v| {
        let r = norm3(xi);
        modes.iter().map(|m| m.profile(r) * m.harmonic(v)).sum()
    })
}

/// zeta_k = |S^{d-2}| int_{-1}^1 F(l) p_{d,k}(l) (1 - l^2)^{(d-3)/2} dl.
pub fn funk_hecke_coefficient(d: u32, k: u32, f: impl Fn(f64) -> f64) -> Result<f64> {
    if !(2..=3).contains(&d) {
        return out_of_range("dimension (need 2 or 3)", d);
    }
    let e = (d as f64 - 3.0) / 2.0;
    let v = tanh_sinh(
        |l, da, db| {
            let w = if e == 0.0 { 1.0 } else { (da * db).powf(e) };
            f(l) * legendre_unchecked(d, k, l.clamp(-1.0, 1.0)) * w
        },
        -1.0,
        1.0,
        1e-12,
    );
    if !v.is_finite() {
        return invalid("integrand not integrable against the Funk-Hecke weight");
    }
    Ok(sphere_area(d - 2) * v)
}
