//! Knapp plates. The axis-aligned construction lives on an ordinary grid; the scans use a
//! plate-adapted frame in which the plate is a fixed unit box at every thickness.
//!
//! Frame: xi_j = T sqrt(delta) (c + a_j) for j < d, xi_d - tau = delta (c + u),
//! xi_d + tau = L (c + w), with (a, u) the spatial and w the temporal coordinates of a local
//! lattice and c = 5/4 the centre of the bump support. L = 2 puts xi_d in [1/2, 2], where the
//! cutoff phi(|xi|) lives; T = 1/2 keeps |xi| - xi_d well below delta. Dually,
//! X_j = T sqrt(delta) x_j, P = delta (x_d - t)/2 and S = L (x_d + t)/2, so g(x, t) = J G(X, P, S)
//! with J = T^{d-1} L delta^{(d+1)/2} / 2 and G the local inverse transform (the shift by c
//! only contributes a unimodular factor).

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{claims, FitKind, ScaleRow, ScalingReport, ScanVerdict, MIN_SCALES};
use crate::error::{invalid, out_of_range, Error, Result};
use crate::exponent_calculus::{alpha_knapp, alpha_star, q_from_f64, to_f64, wave_admissible};
use crate::spectral_grid::{eta, norm3, spatial_fft, temporal_fft, GridSpec, Multiplier, SpaceTimeField, C64};
use crate::symbol_library::{cone_symbol, dyadic_cone_symbol};

/// Centre of the bump support [1/2, 2].
const CENTRE: f64 = 1.25;
const HALF_WIDTH: f64 = 0.75;
/// Longitudinal and transverse frame constants L and T.
const LONG: f64 = 2.0;
const TRANS: f64 = 0.5;
/// Side of the dual box in plate units: |x_j| <= c delta^{-1/2}, |x_d + t| <= c, |x_d - t| <= c / delta.
pub const DUAL_BOX_SIZE: f64 = 8.0;

fn plate_value(d: usize, delta: f64, xi: &[f64; 3], tau: f64) -> f64 {
    let xd = xi[d - 1];
    let sd = delta.sqrt();
    let mut v = eta((xd - tau) / delta) * eta(xd + tau);
    for x in xi.iter().take(d - 1) {
        if v == 0.0 {
            break;
        }
        v *= eta(x / sd);
    }
    v
}

/// The plate of the adapted frame as a function of (xi, tau), for lattice cross-checks.
#[cfg(test)]
pub(crate) fn adapted_plate_value(d: usize, delta: f64, xi: &[f64; 3], tau: f64) -> f64 {
    let xd = xi[d - 1];
    let sd = TRANS * delta.sqrt();
    let mut v = eta((xd - tau) / delta) * eta((xd + tau) / LONG);
    for x in xi.iter().take(d - 1) {
        v *= eta(x / sd);
    }
    v
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 0.125) {
        return out_of_range("plate thickness delta (need 0 < delta <= 1/8)", delta);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KnappParams {
    pub delta: f64,
    pub grid: GridSpec,
}

impl KnappParams {
    pub fn new(delta: f64, grid: GridSpec) -> Result<Self> {
        check_delta(delta)?;
        grid.validate()?;
        Ok(Self { delta, grid })
    }

    /// sqrt(delta) spans at least 4 spatial frequency cells, the thickness delta at least 2
    /// cells on both axes, and the support fits below the Nyquist frequencies.
    pub fn resolvable(&self) -> bool {
        let g = &self.grid;
        let sd = self.delta.sqrt();
        sd >= 4.0 * g.dxi()
            && self.delta >= 2.0 * g.dxi().max(g.dtau())
            && g.nyquist_xi() > 1.0 + self.delta
            && g.nyquist_xi() > 2.0 * sd
            && g.nyquist_tau() > 1.0
    }
}

/// g_delta on the lattice of `params.grid`, as frequency samples.
pub fn knapp_family(params: &KnappParams) -> Result<SpaceTimeField> {
    check_delta(params.delta)?;
    if !params.resolvable() {
        return Err(Error::Unresolvable(format!(
            "plate of thickness {} on a lattice with steps ({}, {})",
            params.delta,
            params.grid.dxi(),
            params.grid.dtau()
        )));
    }
    let (d, delta) = (params.grid.d, params.delta);
    Ok(SpaceTimeField::from_frequency_fn(params.grid, |xi, tau| C64::new(plate_value(d, delta, xi, tau), 0.0)))
}

/// Ranges over the support of a plate of the quantities that should be comparable to
/// sqrt(delta), 1 and delta. Normalised entries are divided by their nominal size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlateSupport {
    pub delta: f64,
    pub points: usize,
    /// |xi_j| / sqrt(delta), j < d.
    pub transverse: (f64, f64),
    /// (xi_d - tau) / delta.
    pub thickness: (f64, f64),
    /// (|xi| - tau) / delta.
    pub gap: (f64, f64),
    pub tau: (f64, f64),
    pub xi_norm: (f64, f64),
    /// |xi/|xi| - e_d| / sqrt(delta).
    pub angle: (f64, f64),
}

fn widen(r: &mut (f64, f64), v: f64) {
    r.0 = r.0.min(v);
    r.1 = r.1.max(v);
}

impl PlateSupport {
    pub fn from_points(d: usize, delta: f64, pts: impl Iterator<Item = ([f64; 3], f64)>) -> Self {
        let e = (f64::INFINITY, f64::NEG_INFINITY);
        let mut s = Self { delta, points: 0, transverse: e, thickness: e, gap: e, tau: e, xi_norm: e, angle: e };
        let sd = delta.sqrt();
        for (xi, tau) in pts {
            s.points += 1;
            for x in xi.iter().take(d - 1) {
                widen(&mut s.transverse, x.abs() / sd);
            }
            let r = norm3(&xi);
            widen(&mut s.thickness, (xi[d - 1] - tau) / delta);
            widen(&mut s.gap, (r - tau) / delta);
            widen(&mut s.tau, tau);
            widen(&mut s.xi_norm, r);
            let mut a = 0.0;
            for (j, x) in xi.iter().take(d).enumerate() {
                let e = if j == d - 1 { 1.0 } else { 0.0 };
                a += (x / r - e).powi(2);
            }
            widen(&mut s.angle, a.sqrt() / sd);
        }
        s
    }

    /// Support of frequency samples of a field built by `knapp_family`.
    pub fn of_field(field: &SpaceTimeField, delta: f64) -> Result<Self> {
        field.expect(crate::spectral_grid::Domain::Frequency)?;
        let g = field.grid;
        let ns = g.n_space();
        let pts = field
            .samples
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm_sqr() > 0.0)
            .map(|(i, _)| (g.xi(i % ns), g.tau(i / ns)));
        Ok(Self::from_points(g.d, delta, pts))
    }

    /// Every normalised range lies in [1/c, c].
    pub fn comparable(&self, c: f64) -> bool {
        let inside = |r: (f64, f64)| r.0 >= 1.0 / c && r.1 <= c;
        self.points > 0
            && [self.transverse, self.thickness, self.gap, self.tau, self.xi_norm, self.angle].into_iter().all(inside)
    }
}

/// A plate (or any function of it) sampled on the plate-adapted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct KnappPlate {
    pub d: usize,
    pub delta: f64,
    /// Local lattice: spatial axes (a_1, .., a_{d-1}, u), time axis w.
    pub local: GridSpec,
    /// Local frequency samples, layout it * n_space + ix.
    pub samples: Vec<C64>,
}

impl KnappPlate {
    /// 64^2 x 64 over a 48-periodic box for d = 2, 32^3 x 32 over 32 for d = 3.
    pub fn default_local(d: usize) -> Result<GridSpec> {
        match d {
            2 => GridSpec::cube(2, 64, 48.0),
            3 => GridSpec::cube(3, 32, 32.0),
            _ => out_of_range("dimension (need 2 or 3)", d),
        }
    }

    pub fn new(d: usize, delta: f64, local: GridSpec) -> Result<Self> {
        check_delta(delta)?;
        local.validate()?;
        if local.d != d {
            return invalid(format!("local lattice has d = {}, plate d = {d}", local.d));
        }
        let fits = |step: f64, n: usize| 2.0 * HALF_WIDTH >= 4.0 * step && (n / 2 - 1) as f64 * step >= HALF_WIDTH;
        if !fits(local.dxi(), local.n_x) || !fits(local.dtau(), local.n_t) {
            return Err(Error::Unresolvable("local lattice does not resolve the unit plate".into()));
        }
        let ns = local.n_space();
        let mut samples = vec![C64::new(0.0, 0.0); local.n_total()];
        let spatial: Vec<f64> = (0..ns).map(|ix| local.xi(ix).iter().take(d).map(|a| eta(CENTRE + a)).product()).collect();
        for it in 0..local.n_t {
            let w = eta(CENTRE + local.tau(it));
            if w == 0.0 {
                continue;
            }
            for (z, s) in samples[it * ns..(it + 1) * ns].iter_mut().zip(&spatial) {
                *z = C64::new(w * s, 0.0);
            }
        }
        Ok(Self { d, delta, local, samples })
    }

    pub fn actual(&self, ix: usize, it: usize) -> ([f64; 3], f64) {
        let (d, delta) = (self.d, self.delta);
        let loc = self.local.xi(ix);
        let sd = TRANS * delta.sqrt();
        let mut xi = [0.0; 3];
        for j in 0..d - 1 {
            xi[j] = sd * (CENTRE + loc[j]);
        }
        let u = CENTRE + loc[d - 1];
        let w = LONG * (CENTRE + self.local.tau(it));
        xi[d - 1] = 0.5 * (delta * u + w);
        (xi, 0.5 * (w - delta * u))
    }

    /// d xi d tau = J da du dw.
    pub fn jacobian(&self) -> f64 {
        TRANS.powi(self.d as i32 - 1) * LONG * self.delta.powf((self.d as f64 + 1.0) / 2.0) / 2.0
    }

    /// Multiplies by m evaluated at the true (xi, tau).
    pub fn apply(&self, m: &dyn Multiplier) -> Self {
        let ns = self.local.n_space();
        let samples = self
            .samples
            .par_iter()
            .enumerate()
            .map(|(i, z)| {
                if z.norm_sqr() == 0.0 {
                    return *z;
                }
                let (xi, tau) = self.actual(i % ns, i / ns);
                z * m.value(&xi, tau)
            })
            .collect();
        Self { samples, ..self.clone() }
    }

    /// ||g||_2^2 through Plancherel.
    pub fn l2_norm_sq(&self) -> f64 {
        let s: f64 = self.samples.iter().map(|z| z.norm_sqr()).sum();
        s * self.local.freq_cell_volume() * self.jacobian() / (2.0 * PI).powi(self.d as i32 + 1)
    }

    pub fn support(&self) -> PlateSupport {
        let ns = self.local.n_space();
        let pts = self
            .samples
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm_sqr() > 0.0)
            .map(|(i, _)| self.actual(i % ns, i / ns));
        PlateSupport::from_points(self.d, self.delta, pts)
    }

    /// ||g||_{L^q_t L^r_x} for any q, r >= 1 (dual exponents included).
    pub fn mixed_norm(&self, q: f64, r: f64) -> Result<f64> {
        self.mixed_norm_in(q, r, None)
    }

    /// Share of the mixed norm carried by the dual box of side `c`: ||g 1_box|| / ||g||.
    pub fn dual_box_fraction(&self, q: f64, r: f64, c: f64) -> Result<f64> {
        if !(c > 0.0) {
            return out_of_range("dual box size", c);
        }
        let full = self.mixed_norm_in(q, r, None)?;
        if full == 0.0 {
            return Err(Error::Degenerate("zero field has no dual-box mass".into()));
        }
        Ok(self.mixed_norm_in(q, r, Some(c))? / full)
    }

    /// At fixed t the slice {x_d free} is the line P = delta (S/L - t); choosing t = -P_k / delta
    /// makes it P = P_k + delta S / L, reached by a per-S shift in P applied as a phase in u.
    fn mixed_norm_in(&self, q: f64, r: f64, bx: Option<f64>) -> Result<f64> {
        if !(q.is_finite() && r.is_finite() && q >= 1.0 && r >= 1.0) {
            return invalid(format!("mixed norm exponents must be finite and >= 1, got ({q}, {r})"));
        }
        let (d, delta) = (self.d, self.delta);
        let g = self.local;
        let ns = g.n_space();
        let n = g.n_x;
        let mut s = self.samples.clone();
        temporal_fft(&g, &mut s, true);
        s.par_chunks_mut(ns).enumerate().for_each(|(it, chunk)| {
            let shift = delta * g.time(it) / LONG;
            for (ix, z) in chunk.iter_mut().enumerate() {
                *z *= C64::from_polar(1.0, shift * g.xi(ix)[d - 1]);
            }
            spatial_fft(&g, chunk, true);
        });
        let pow = |z: &C64| if r == 2.0 { z.norm_sqr() } else { z.norm().powf(r) };
        // inner sums indexed by the P slot k, i.e. by t = -P_k / delta
        let mut inner = vec![0.0; n];
        for it in 0..g.n_t {
            let sv = g.time(it);
            if let Some(c) = bx {
                if sv.abs() > c * LONG / 2.0 {
                    continue;
                }
            }
            for (ix, z) in s[it * ns..(it + 1) * ns].iter().enumerate() {
                let m = g.multi(ix);
                let k = m[d - 1];
                if let Some(c) = bx {
                    let p = g.coord(k) + delta * sv / LONG;
                    if p.abs() > c / 2.0 || (0..d - 1).any(|j| g.coord(m[j]).abs() > c * TRANS) {
                        continue;
                    }
                }
                inner[k] += pow(z);
            }
        }
        let vol_inner = g.dx().powi(d as i32 - 1) * g.dt() * (2.0 / LONG) * (TRANS * delta.sqrt()).powi(-(d as i32 - 1));
        let dt = g.dx() / delta;
        let outer: f64 = inner.iter().map(|a| (a * vol_inner).powf(q / r)).sum::<f64>() * dt;
        Ok(self.jacobian() * outer.powf(1.0 / q))
    }
}

fn dual(p: f64) -> f64 {
    p / (p - 1.0)
}

fn check_qr(q: f64, r: f64) -> Result<()> {
    if !(q.is_finite() && r.is_finite() && q >= 2.0 && r >= 2.0) {
        return invalid(format!("exponents must be finite and >= 2, got ({q}, {r})"));
    }
    Ok(())
}

fn check_scales<T: PartialEq>(xs: &[T]) -> Result<()> {
    if xs.len() < MIN_SCALES {
        return invalid(format!("need at least {MIN_SCALES} scales, got {}", xs.len()));
    }
    if xs.iter().enumerate().any(|(i, a)| xs[..i].contains(a)) {
        return invalid("scales must be distinct");
    }
    Ok(())
}

fn frame_meta(local: &GridSpec) -> serde_json::Value {
    json!({ "frame": "plate", "local": local, "centre": CENTRE })
}

pub fn knapp_scan(d: usize, q: f64, r: f64, alpha: f64, deltas: &[f64]) -> Result<ScalingReport> {
    knapp_scan_with(d, q, r, alpha, deltas, KnappPlate::default_local(d)?)
}

/// ratio_delta = ||C^alpha g_delta||_2 / ||g_delta||_{L^{q'}_t L^{r'}_x}, fitted against delta;
/// predicted slope alpha - alpha_nec.
pub fn knapp_scan_with(d: usize, q: f64, r: f64, alpha: f64, deltas: &[f64], local: GridSpec) -> Result<ScalingReport> {
    check_qr(q, r)?;
    check_scales(deltas)?;
    for &dl in deltas {
        check_delta(dl)?;
    }
    let (qq, rq) = (q_from_f64(q)?, q_from_f64(r)?);
    let nec = to_f64(alpha_knapp(d as u32, qq, rq)?);
    let cone = cone_symbol(alpha)?;
    let rows: Result<Vec<ScaleRow>> = deltas
        .par_iter()
        .map(|&delta| {
            let plate = KnappPlate::new(d, delta, local)?;
            let lhs = plate.apply(&cone).l2_norm_sq().sqrt();
            let rhs = plate.mixed_norm(dual(q), dual(r))?;
            Ok(ScaleRow::new(delta, lhs, rhs))
        })
        .collect();
    let mut rep = ScalingReport::assemble(
        "knapp_scan",
        claims::KNAPP_NECESSITY,
        json!({ "d": d, "q": q, "r": r, "alpha": alpha, "alpha_nec": nec }),
        "delta",
        rows?,
        alpha - nec,
        FitKind::TwoSided,
        frame_meta(&local),
    )?;
    // the exact threshold outside the wave-admissible range is left open; (2, 2) is Plancherel
    let astar = alpha_star(d as u32, qq, rq)?.f64();
    let l2 = q == 2.0 && r == 2.0;
    if alpha == astar && !l2 && !wave_admissible(d as u32, qq, rq)? {
        rep.verdict = ScanVerdict::Descriptive;
    }
    Ok(rep)
}

pub fn dyadic_scan(d: usize, q: f64, r: f64, ks: &[i32]) -> Result<ScalingReport> {
    dyadic_scan_with(d, q, r, ks, KnappPlate::default_local(d)?)
}

/// ||C_k g||_{L^q_t L^r_x} / ||g||_2 for the plate of thickness 2^-k, fitted against 2^k;
/// alpha*(q, r) is an upper envelope for the slope.
pub fn dyadic_scan_with(d: usize, q: f64, r: f64, ks: &[i32], local: GridSpec) -> Result<ScalingReport> {
    check_qr(q, r)?;
    check_scales(ks)?;
    let (qq, rq) = (q_from_f64(q)?, q_from_f64(r)?);
    if !(wave_admissible(d as u32, qq, rq)? || (q == 2.0 && r == 2.0)) {
        return invalid(format!("(q, r) = ({q}, {r}) is neither wave-admissible nor (2, 2)"));
    }
    let astar = alpha_star(d as u32, qq, rq)?.f64();
    let rows: Result<Vec<ScaleRow>> = ks
        .par_iter()
        .map(|&k| {
            if k < 3 {
                return Err(Error::Unresolvable(format!("shell k = {k} is thicker than the plate family allows (k >= 3)")));
            }
            let plate = KnappPlate::new(d, 2f64.powi(-k), local)?;
            let lhs = plate.apply(&dyadic_cone_symbol(k)?).mixed_norm(q, r)?;
            let rhs = plate.l2_norm_sq().sqrt();
            Ok(ScaleRow::new(2f64.powi(k), lhs, rhs))
        })
        .collect();
    ScalingReport::assemble(
        "dyadic_scan",
        claims::DYADIC_ENVELOPE,
        json!({ "d": d, "q": q, "r": r, "alpha_star": astar }),
        "2^k",
        rows?,
        astar,
        FitKind::UpperEnvelope,
        frame_meta(&local),
    )
}
