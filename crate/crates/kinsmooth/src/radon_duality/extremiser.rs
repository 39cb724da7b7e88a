//! The v-independent d = 2 extremiser family and the radial sharp-constant series check.

use std::collections::HashSet;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, out_of_range, Error, Result};
use crate::exponent_calculus::special::legendre_all;
use crate::exponent_calculus::{i_k_integral, sharp_constant_radial, sphere_area};
use crate::quadrature::gauss_jacobi;
use crate::spectral_grid::{norm3, GridSpec, LineFft, C64};
use crate::symbol_library::{d_minus_symbol, d_plus_symbol, Symbol};
use crate::velocity_average::{
    funk_hecke_average, DeltaRealization, PhaseSpaceData, RadialModeData, RhoSpectrum, VelocityMeasure, XiKernel,
};

/// d = 2, dx = dt = pi/8, n^2 x n.
pub fn extremiser_grid(n: usize) -> Result<GridSpec> {
    let len = n as f64 * PI / 8.0;
    GridSpec::new(2, n, len, n, len)
}

/// Circle nodes for the transport sum: n (a multiple of 8, at least 64) resolves
/// e^{-i t xi.v} for |xi| <= 2 over the whole time window.
pub fn extremiser_nodes(n: usize) -> usize {
    n.max(64).div_ceil(8) * 8
}

/// f^(xi, v) = (|xi|^2 - |xi.v|^2)^{1/4} g^(xi, -xi.v) with g^(xi, tau) = (|xi|^2 - tau^2)^{-1/4} g0(|xi|).
/// The two factors cancel away from v = +-xi/|xi|, so the result is stored v-independent.
pub fn build_extremiser(g0: &(dyn Fn(f64) -> f64 + Sync), grid: GridSpec, n_nodes: usize) -> Result<PhaseSpaceData> {
    if grid.d != 2 {
        return out_of_range("dimension (the extremiser family lives in d = 2)", grid.d);
    }
    grid.validate()?;
    let rmax = grid.nyquist_xi() * 2f64.sqrt();
    for i in 0..=4096 {
        let r = rmax * i as f64 / 4096.0;
        if !(0.5..=2.0).contains(&r) && g0(r) != 0.0 {
            return invalid(format!("g0 must be supported in [1/2, 2]; g0({r}) != 0"));
        }
    }
    let measure = VelocityMeasure::sphere(2, n_nodes)?;
    let ns = grid.n_space();
    let mut bad = None;
    for ix in 0..ns {
        let xi = grid.xi(ix);
        let r = norm3(&xi);
        if g0(r) == 0.0 {
            continue;
        }
        for v in &measure.nodes {
            let s = xi[0] * v[0] + xi[1] * v[1];
            let q = r * r - s * s;
            if q <= 0.0 {
                continue;
            }
            let c = q.powf(0.25) * q.powf(-0.25);
            if (c - 1.0).abs() > 1e-12 {
                bad = Some(c);
            }
        }
    }
    if let Some(c) = bad {
        return Err(Error::Unresolvable(format!("extremiser factors fail to cancel: {c}")));
    }
    let f = PhaseSpaceData::broadcast_frequency(grid, measure, |xi| C64::new(g0(norm3(xi)), 0.0))?;
    if f.samples.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(Error::Degenerate("g0 vanishes on every lattice frequency".into()));
    }
    Ok(f)
}

/// ||D_+^{1/4} D_-^{1/4} rho f||^2 / ||f||^2 on the lattice, with rho realised band-limited
/// (transport sum over the time window, then a transform in t), streamed one xi at a time.
pub fn attainment_ratio(f: &PhaseSpaceData) -> Result<f64> {
    let grid = f.grid;
    let norm = f.l2_norm_sq();
    if norm == 0.0 {
        return Err(Error::Degenerate("zero data".into()));
    }
    let dd = Symbol::product(vec![d_plus_symbol(0.25), d_minus_symbol(0.25)]);
    let spec = RhoSpectrum::new(f, DeltaRealization::BandLimited)?;
    let line = LineFft::new(&grid, false);
    let per_xi: Vec<f64> = (0..grid.n_space())
        .into_par_iter()
        .map(|ix| match spec.kernel(ix) {
            XiKernel::Series { r, vals, .. } => {
                let mut col = vals;
                line.process(&mut col);
                col.iter()
                    .enumerate()
                    .map(|(it, z)| {
                        let tau = grid.tau(it);
                        if tau.abs() > r {
                            0.0
                        } else {
                            dd.eval(r, tau).powi(2) * z.norm_sqr()
                        }
                    })
                    .sum()
            }
            _ => 0.0,
        })
        .collect();
    let total = per_xi.iter().sum::<f64>() * grid.dtau() * (grid.dxi() / (2.0 * PI)).powi(2) / (2.0 * PI);
    Ok(total / norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttainmentPoint {
    pub n: usize,
    pub velocity_nodes: usize,
    pub ratio: f64,
    /// ratio / (4 pi).
    pub fraction: f64,
}

/// Attainment ratio of the extremiser built from g0 on extremiser_grid(n) for each n.
pub fn attainment_sequence(g0: &(dyn Fn(f64) -> f64 + Sync), sizes: &[usize]) -> Result<Vec<AttainmentPoint>> {
    sizes
        .iter()
        .map(|&n| {
            let nv = extremiser_nodes(n);
            let f = build_extremiser(g0, extremiser_grid(n)?, nv)?;
            let ratio = attainment_ratio(&f)?;
            Ok(AttainmentPoint { n, velocity_nodes: nv, ratio, fraction: ratio / (4.0 * PI) })
        })
        .collect()
}

/// Both sides of ||D_+^{b+} D_-^{b-} rho f||^2 = (2|S^{d-2}|^2/(2 pi)^{d-1}) sum_k I_k int ||Y_k^r||^2 r^{d-1} dr.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialCheck {
    pub d: usize,
    pub beta_plus: f64,
    pub beta_minus: f64,
    /// Lattice norm of the Funk-Hecke field (cone lattice points excluded).
    pub lhs_grid: f64,
    /// Lattice in xi, Gauss-Jacobi in tau.
    pub lhs_tau: f64,
    pub rhs_series: f64,
    pub norm_sq: f64,
    /// lhs_grid / rhs_series.
    pub ratio: f64,
    pub ratio_tau: f64,
    pub c0: f64,
    /// rhs_series / (C0 ||f||^2); 1 exactly for k = 0 data, below 1 otherwise.
    pub ratio_to_c0: f64,
}

pub fn sharp_constant_radial_check(
    grid: &GridSpec,
    beta_plus: f64,
    beta_minus: f64,
    modes: &[RadialModeData],
) -> Result<RadialCheck> {
    let d = grid.d;
    let du = d as u32;
    if modes.is_empty() {
        return invalid("at least one radial mode is required");
    }
    let c0 = sharp_constant_radial(du, beta_plus, beta_minus)?.value;
    let mut seen = HashSet::new();
    for m in modes {
        if m.d != d {
            return invalid(format!("mode in d = {} on a d = {d} grid", m.d));
        }
        if !seen.insert((m.k, m.m)) {
            return invalid(format!("duplicate mode (k, m) = ({}, {})", m.k, m.m));
        }
    }
    // series side
    let mut rhs = 0.0;
    let mut nrm = 0.0;
    for m in modes {
        let w = m.norm_sq() * m.harmonic_norm_sq();
        rhs += i_k_integral(du, m.k as u32, beta_plus, beta_minus)? * w;
        nrm += w;
    }
    let rhs_series = 2.0 * sphere_area(du - 2).powi(2) / (2.0 * PI).powi(d as i32 - 1) * rhs;
    let norm_sq = sphere_area(du - 1) / (2.0 * PI).powi(d as i32) * nrm;

    // lattice side
    let dd = Symbol::product(vec![d_plus_symbol(beta_plus), d_minus_symbol(beta_minus)]);
    let field = funk_hecke_average(grid, modes)?;
    let ns = grid.n_space();
    let vol = (grid.dxi() / (2.0 * PI)).powi(d as i32) / (2.0 * PI);
    let grid_sum: f64 = (0..ns)
        .map(|ix| {
            let r = norm3(&grid.xi(ix));
            (0..grid.n_t)
                .map(|it| {
                    let z = field.samples[it * ns + ix];
                    if z.norm_sqr() == 0.0 {
                        return 0.0;
                    }
                    let m = dd.eval(r, grid.tau(it));
                    if m.is_finite() {
                        m * m * z.norm_sqr()
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
        })
        .sum();
    let lhs_grid = grid_sum * vol * grid.dtau();

    // tau-exact side: int |D|^2 |rho^|^2 dtau = pref^2 sum_{+-} int_0^1 (1+u)^{2b+ + d-3} (1-u)^{2b- + d-3} |S(+-u)|^2 du
    let a = 2.0 * beta_minus + d as f64 - 3.0;
    let b = 2.0 * beta_plus + d as f64 - 3.0;
    let rule = gauss_jacobi(64, a, 0.0);
    let kmax = modes.iter().map(|m| m.k).max().unwrap_or(0);
    let pref = 2.0 * PI * sphere_area(du - 2);
    let tau_sum: f64 = (0..ns)
        .map(|ix| {
            let xi = grid.xi(ix);
            let r = norm3(&xi);
            if r == 0.0 {
                return 0.0;
            }
            let unit = [xi[0] / r, xi[1] / r, xi[2] / r];
            let mut h = vec![C64::new(0.0, 0.0); kmax + 1];
            for m in modes {
                h[m.k] += m.profile(r) * m.harmonic(&unit);
            }
            if h.iter().all(|z| z.norm_sqr() == 0.0) {
                return 0.0;
            }
            let mut p = vec![0.0; kmax + 1];
            let mut acc = 0.0;
            for sign in [1.0, -1.0] {
                for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                    let u = 0.5 * (1.0 + x);
                    legendre_all(du, sign * u, &mut p);
                    let s: C64 = h.iter().zip(&p).map(|(a, b)| a * b).sum();
                    acc += w * (1.0 + u).powf(b) * s.norm_sqr();
                }
            }
            // (1-u)^a = 2^{-a} (1-x)^a, du = dx/2
            pref * pref * 0.5 * 2f64.powf(-a) * acc
        })
        .sum();
    let lhs_tau = tau_sum * vol;
    Ok(RadialCheck {
        d,
        beta_plus,
        beta_minus,
        lhs_grid,
        lhs_tau,
        rhs_series,
        norm_sq,
        ratio: lhs_grid / rhs_series,
        ratio_tau: lhs_tau / rhs_series,
        c0,
        ratio_to_c0: rhs_series / (c0 * norm_sq),
    })
}
