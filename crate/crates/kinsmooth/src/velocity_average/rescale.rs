//! Dyadic rescaling of the smoothed average: with f_j(x, v) = 2^{-jd} f(2^{-j} x, v),
//!
//! D_+^{b+} D_-^{b-} rho(P_j f)(x, t) = 2^{j(b+ + b- + d)} D_+^{b+} D_-^{b-} rho(P_0 f_j)(2^j x, 2^j t).
//!
//! The right side lives on the grid dilated by 2^j with the same point counts, so the two
//! sides are compared sample by sample.

use serde::Serialize;

use super::{average_rho, PhaseSpaceData};
use crate::error::{out_of_range, Result};
use crate::spectral_grid::{
    apply_symbol_with, eta, inverse_transform, norm3, Domain, GridSpec, Regularization, SpaceTimeField,
};
use crate::symbol_library::{d_minus_symbol, d_plus_symbol, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RescalingCheck {
    pub j: i32,
    pub factor: f64,
    /// max |lhs|, the normaliser of the residual.
    pub scale: f64,
    pub residual: f64,
}

fn smoothed(f: &PhaseSpaceData, j: i32, m: &Symbol) -> Result<SpaceTimeField> {
    let (lo, hi) = f.grid.lp_range();
    if j < lo || j > hi {
        return out_of_range("Littlewood-Paley index", format!("{j} (resolvable {lo}..={hi})"));
    }
    let mut p = f.frequency().into_owned();
    let g = p.grid;
    let ns = g.n_space();
    let s = 2f64.powi(-j);
    for (i, z) in p.samples.iter_mut().enumerate() {
        *z *= eta(s * norm3(&g.xi(i % ns)));
    }
    let rho = average_rho(&p)?;
    let (out, _) = apply_symbol_with(&rho, m, Regularization::Collar)?;
    inverse_transform(&out)
}

pub fn rescaling_check(f: &PhaseSpaceData, j: i32, beta_plus: f64, beta_minus: f64) -> Result<RescalingCheck> {
    if !(-8..=8).contains(&j) {
        return out_of_range("dilation index", j);
    }
    let m = Symbol::product(vec![d_plus_symbol(beta_plus), d_minus_symbol(beta_minus)]);
    let lhs = smoothed(f, j, &m)?;

    let g = f.grid;
    let c = 2f64.powi(j);
    let gj = GridSpec::new(g.d, g.n_x, c * g.len_x, g.n_t, c * g.len_t)?;
    let mut fj = f.physical().into_owned();
    fj.grid = gj;
    let amp = c.powi(-(g.d as i32));
    for z in fj.samples.iter_mut() {
        *z *= amp;
    }
    debug_assert_eq!(fj.domain, Domain::Physical);
    let rhs = smoothed(&fj, 0, &m)?;

    let factor = c.powf(beta_plus + beta_minus + g.d as f64);
    let scale = lhs.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let diff = lhs.samples.iter().zip(&rhs.samples).map(|(a, b)| (a - b * factor).norm()).fold(0.0, f64::max);
    let residual = if scale > 0.0 { diff / scale } else { diff };
    Ok(RescalingCheck { j, factor, scale, residual })
}
