//! ||rho* F^{-1}(m g^)||^2_{L^2(dx dmu)} against 2 pi ||F^{-1}(m_mu g^)||^2_{L^2}.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::build_m_mu;
use crate::error::{invalid, Error, Result};
use crate::quadrature::gauss_jacobi;
use crate::spectral_grid::{
    active_time_range, dtft, eta, forward_transform, norm3, temporal_fft, to_mixed, Domain, GridSpec, SpaceTimeField, C64,
};
use crate::spectral_grid::Multiplier;
use crate::symbol_library::Symbol;
use crate::velocity_average::{dual_rho_star_norms_sq, VelocityMeasure};

/// Gauss-Jacobi nodes per half-line in tau.
pub const DUALITY_TAU_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualityMeasure {
    Sphere,
    /// kappa = 0 ball.
    Ball,
}

/// d = 2, dx = dt = pi/4, n^2 x n.
pub fn duality_grid(n: usize) -> Result<GridSpec> {
    let len = n as f64 * PI / 4.0;
    GridSpec::new(2, n, len, n, len)
}

/// Velocity rule tied to the grid size: n/2 angles, n/16 radii for the ball.
pub fn duality_measure(kind: DualityMeasure, n: usize) -> Result<VelocityMeasure> {
    match kind {
        DualityMeasure::Sphere => VelocityMeasure::sphere(2, (n / 2).max(4)),
        DualityMeasure::Ball => VelocityMeasure::kappa_ball(2, 0.0, (n / 16).max(2), (n / 2).max(4)),
    }
}

/// g with g^_x(xi, t) = a(xi) b(t): a a random low-order polynomial times eta(|xi|) and a
/// random translation, b compactly supported in |t| <= min(3 pi, 0.4 len_t).
pub fn random_band_limited_g(grid: &GridSpec, seed: u64) -> Result<SpaceTimeField> {
    grid.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let poly: Vec<C64> = (0..5).map(|_| c()).collect();
    let amps: Vec<C64> = (0..3).map(|_| c()).collect();
    let freqs: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let shift: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let big_t = (3.0 * PI).min(0.4 * grid.len_t);
    let ns = grid.n_space();
    let a: Vec<C64> = (0..ns)
        .map(|ix| {
            let xi = grid.xi(ix);
            let e = eta(norm3(&xi));
            if e == 0.0 {
                return C64::new(0.0, 0.0);
            }
            let p = poly[0] + poly[1] * xi[0] + poly[2] * xi[1] + poly[3] * xi[0] * xi[1] + poly[4] * xi[2];
            let ph = -(0..grid.d).map(|i| xi[i] * shift[i]).sum::<f64>();
            p * e * C64::from_polar(1.0, ph)
        })
        .collect();
    let mut s = vec![C64::new(0.0, 0.0); grid.n_total()];
    for it in 0..grid.n_t {
        let t = grid.time(it);
        let env = (1.0 - (t / big_t).powi(2)).max(0.0).powi(4);
        if env == 0.0 {
            continue;
        }
        let b: C64 = amps.iter().zip(&freqs).map(|(a, w)| a * C64::from_polar(env, w * t)).sum();
        for (z, av) in s[it * ns..(it + 1) * ns].iter_mut().zip(&a) {
            *z = av * b;
        }
    }
    temporal_fft(grid, &mut s, false);
    Ok(SpaceTimeField { grid: *grid, samples: s, domain: Domain::Frequency })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityResidual {
    /// ||rho* F^{-1}(m g^)||^2 from the velocity node sum.
    pub lhs: f64,
    /// 2 pi ||F^{-1}(m_mu g^)||^2 from Gauss-Jacobi in tau.
    pub rhs: f64,
    pub residual: f64,
    pub velocity_nodes: usize,
    pub tau_nodes: usize,
}

pub fn duality_residual(g: &SpaceTimeField, m: &Symbol, measure: &VelocityMeasure) -> Result<DualityResidual> {
    duality_residual_with(g, m, measure, DUALITY_TAU_NODES)
}

pub fn duality_residual_with(g: &SpaceTimeField, m: &Symbol, measure: &VelocityMeasure, n_tau: usize) -> Result<DualityResidual> {
    Ok(duality_residuals(g, std::slice::from_ref(m), measure, n_tau)?.remove(0))
}

/// Residuals for several multipliers against one g; the velocity-side sum is shared.
pub fn duality_residuals(g: &SpaceTimeField, ms: &[Symbol], measure: &VelocityMeasure, n_tau: usize) -> Result<Vec<DualityResidual>> {
    let grid = g.grid;
    if grid.d != measure.d {
        return invalid("field and velocity measure differ in dimension");
    }
    if ms.is_empty() {
        return invalid("no multipliers given");
    }
    let gf = match g.domain {
        Domain::Frequency => std::borrow::Cow::Borrowed(g),
        Domain::Physical => std::borrow::Cow::Owned(forward_transform(g)?),
    };
    let ns = grid.n_space();
    let max = gf.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let outside = (0..ns)
        .filter(|&ix| !(0.5..=2.0).contains(&norm3(&grid.xi(ix))))
        .any(|ix| (0..grid.n_t).any(|it| gf.samples[it * ns + ix].norm() > 1e-12 * max));
    if outside {
        return invalid("g^ must be supported in the annulus 1/2 <= |xi| <= 2");
    }
    let mut mus = Vec::with_capacity(ms.len());
    for m in ms {
        let mm = build_m_mu(m, measure)?;
        let e = 2.0 * mm.cone_exponent();
        if !(e > -1.0) {
            return invalid(format!("m_mu^2 not integrable at the cone (exponent {e})"));
        }
        mus.push((mm, e));
    }
    let dyn_ms: Vec<&dyn Multiplier> = ms.iter().map(|m| m as &dyn Multiplier).collect();
    let (lhs_all, rep) = dual_rho_star_norms_sq(&gf, measure, &dyn_ms)?;
    if rep.out_of_band > 0 {
        return Err(Error::Unresolvable(format!("{} (xi, v) pairs outside the tau band", rep.out_of_band)));
    }

    let mixed = to_mixed(&gf);
    let (lo, hi) = active_time_range(&grid, &mixed);
    let live: Vec<usize> = (0..ns)
        .filter(|&ix| norm3(&grid.xi(ix)) > 0.0 && (lo..hi).any(|it| mixed[it * ns + ix].norm_sqr() != 0.0))
        .collect();
    let vol = (grid.dxi() / (2.0 * PI)).powi(grid.d as i32);
    let mut out = Vec::with_capacity(ms.len());
    for ((mm, e), lhs) in mus.iter().zip(lhs_all) {
        let rule = gauss_jacobi(n_tau, *e, 0.0);
        let per_xi: Vec<f64> = live
            .par_iter()
            .map(|&ix| {
                let r = norm3(&grid.xi(ix));
                let mut acc = 0.0;
                for sign in [1.0, -1.0] {
                    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                        let tau = sign * r * 0.5 * (1.0 + x);
                        let mv = mm.eval(r, tau);
                        if mv == 0.0 {
                            continue;
                        }
                        let gv = dtft(&grid, (lo..hi).map(|it| (it, mixed[it * ns + ix])), tau);
                        acc += w * mv * mv * gv.norm_sqr() / (1.0 - x).powf(*e);
                    }
                }
                0.5 * r * acc
            })
            .collect();
        // 2 pi (2 pi)^{-d-1} dxi^d sum
        let rhs = per_xi.iter().sum::<f64>() * vol;
        let top = lhs.max(rhs);
        let residual = if lhs == 0.0 && rhs == 0.0 {
            0.0
        } else if top < 1e-290 {
            return Err(Error::Degenerate("both sides of the duality identity are below the floating-point floor".into()));
        } else {
            (lhs - rhs).abs() / top
        };
        out.push(DualityResidual { lhs, rhs, residual, velocity_nodes: measure.len(), tau_nodes: n_tau });
    }
    Ok(out)
}
