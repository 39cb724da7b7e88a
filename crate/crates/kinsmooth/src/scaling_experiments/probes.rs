//! Tensor bumps for the alpha > -1/2 probe, the global smoothing ratio, and the wave
//! Strichartz ratio.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, out_of_range, Error, Result};
use crate::exponent_calculus::{beta_fn, q_from_f64, scaling_total, sphere_area, to_f64, wave_admissible};
use crate::quadrature::gauss_legendre;
use crate::spectral_grid::{
    annulus_plateau, apply_symbol_with, eta, inverse_transform, low_plateau, mixed_norm, norm3, Domain, GridSpec,
    MixedNormAccumulator, Regularization, SpaceTimeField, SpatialField, C64,
};
use crate::symbol_library::{cone_symbol, d_minus_symbol, d_plus_symbol, half_wave, Symbol};
use crate::velocity_average::{average_rho_with, DeltaRealization, PhaseSpaceData};

/// g^(xi, tau) = A(|xi|) L(tau): one on {1/2 <= |xi| <= 2} x {|tau| <= 2}, real and even, so g is real.
pub fn bump_family(grid: GridSpec) -> Result<SpaceTimeField> {
    grid.validate()?;
    if grid.nyquist_xi() < 4.0 || grid.nyquist_tau() < 4.0 {
        return Err(Error::Unresolvable(format!(
            "bump support needs Nyquist >= 4, have ({}, {})",
            grid.nyquist_xi(),
            grid.nyquist_tau()
        )));
    }
    Ok(SpaceTimeField::from_frequency_fn(grid, |xi, tau| C64::new(annulus_plateau(norm3(xi)) * low_plateau(tau), 0.0)))
}

/// ||C^alpha g||_2^2 as a lattice sum over frequency samples. Lattice points exactly on the
/// cone (infinite symbol for alpha < 0) are skipped.
pub fn bump_cone_norm_sq(g: &SpaceTimeField, alpha: f64) -> Result<f64> {
    g.expect(Domain::Frequency)?;
    let c = cone_symbol(alpha)?;
    let gr = g.grid;
    let ns = gr.n_space();
    let mut s = 0.0;
    for (i, z) in g.samples.iter().enumerate() {
        if z.norm_sqr() == 0.0 {
            continue;
        }
        let m = c.eval(norm3(&gr.xi(i % ns)), gr.tau(i / ns));
        if m.is_finite() {
            s += m * m * z.norm_sqr();
        }
    }
    Ok(s * gr.freq_cell_volume() / (2.0 * PI).powi(gr.d as i32 + 1))
}

/// Continuum value for the bump: |S^{d-1}| int phi(r)^2 r^d dr B(1/2, 2 alpha + 1) / (2 pi)^{d+1};
/// infinite for alpha <= -1/2.
pub fn bump_cone_norm_sq_exact(d: usize, alpha: f64) -> Result<f64> {
    if !(2..=3).contains(&d) {
        return out_of_range("dimension (need 2 or 3)", d);
    }
    cone_symbol(alpha)?;
    if alpha <= -0.5 {
        return Ok(f64::INFINITY);
    }
    let radial: f64 = gauss_legendre(64).mapped(0.5, 2.0).map(|(r, w)| w * eta(r).powi(2) * r.powi(d as i32)).sum();
    Ok(sphere_area(d as u32 - 1) * radial * beta_fn(0.5, 2.0 * alpha + 1.0) / (2.0 * PI).powi(d as i32 + 1))
}

/// ||D_+^{b+} D_-^{b-} rho f||_{L^q_t L^r_x} / ||f||_2 on the lattice, with the collar clamp
/// near the cone. rho is the band-limited transport sum, so the ratio is that of an actual
/// grid function and stays a lower bound for the operator norm.
pub fn smoothing_probe(d: usize, q: f64, r: f64, beta_plus: f64, beta_minus: f64, f: &PhaseSpaceData) -> Result<f64> {
    if f.grid.d != d {
        return invalid(format!("data live in d = {}, probe asked for d = {d}", f.grid.d));
    }
    let total = to_f64(scaling_total(d as u32, q_from_f64(q)?, q_from_f64(r)?, q_from_f64(2.0)?, q_from_f64(0.0)?)?);
    if ((beta_plus + beta_minus) - total).abs() > 1e-12 {
        return invalid(format!("beta_+ + beta_- = {} but scaling requires {total}", beta_plus + beta_minus));
    }
    let norm = f.l2_norm_sq();
    if norm == 0.0 {
        return Err(Error::Degenerate("zero data".into()));
    }
    let (rho, _) = average_rho_with(f, DeltaRealization::BandLimited)?;
    let m = Symbol::product(vec![d_plus_symbol(beta_plus), d_minus_symbol(beta_minus)]);
    let (smoothed, _) = apply_symbol_with(&rho, &m, Regularization::Collar)?;
    let phys = inverse_transform(&smoothed)?;
    Ok(mixed_norm(&phys, q, r)? / norm.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrichartzVariant {
    General,
    /// h^ radially symmetric: the wider radial-admissible range applies.
    Radial,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrichartzProbe {
    pub ratio: f64,
    pub time_slices: usize,
    /// Set when (q, r) lies outside the range where the estimate is known.
    pub flag: Option<String>,
}

/// Largest |h^| off the annulus {1/2 <= |xi| <= 2} allowed, relative to the peak.
const SUPPORT_TOL: f64 = 1e-12;

/// ||U(t) h||_{L^q_t L^r_x} / ||h||_2 over t in [-t_span/2, t_span/2) sampled with
/// h.grid.n_t slices. U carries no (2 pi)^{-d}.
pub fn strichartz_probe(d: usize, q: f64, r: f64, h: &SpatialField, t_span: f64, variant: StrichartzVariant) -> Result<StrichartzProbe> {
    let g = h.grid;
    if g.d != d {
        return invalid(format!("data live in d = {}, probe asked for d = {d}", g.d));
    }
    if !(t_span > 0.0 && t_span.is_finite()) {
        return out_of_range("time span", t_span);
    }
    let hf = match h.domain {
        Domain::Physical => h.forward()?,
        Domain::Frequency => h.clone(),
    };
    let peak = hf.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::Degenerate("zero data".into()));
    }
    if let Some(i) = (0..g.n_space()).find(|&i| {
        let k = norm3(&g.xi(i));
        !(0.5..=2.0).contains(&k) && hf.samples[i].norm() > SUPPORT_TOL * peak
    }) {
        return invalid(format!("h^ is not supported in the annulus 1/2 <= |xi| <= 2 (|xi| = {})", norm3(&g.xi(i))));
    }
    let (qq, rq) = (q_from_f64(q)?, q_from_f64(r)?);
    let admissible = match variant {
        StrichartzVariant::General => wave_admissible(d as u32, qq, rq)?,
        StrichartzVariant::Radial => 1.0 / q < (d as f64 - 1.0) * (0.5 - 1.0 / r),
    };
    let flag = (!admissible).then(|| match variant {
        StrichartzVariant::General => "outside the wave-admissible range".to_string(),
        StrichartzVariant::Radial => "outside the radial-admissible range".to_string(),
    });
    let mut acc = MixedNormAccumulator::new(q, r)?;
    let n_t = g.n_t;
    let dt = t_span / n_t as f64;
    let vol = g.dx().powi(d as i32);
    for it in 0..n_t {
        let t = -0.5 * t_span + it as f64 * dt;
        let u = half_wave(&hf, t)?;
        acc.push(&u.samples, vol, dt);
    }
    let hn = hf.inverse()?.l2_norm();
    Ok(StrichartzProbe { ratio: acc.finish() / hn, time_slices: n_t, flag })
}
