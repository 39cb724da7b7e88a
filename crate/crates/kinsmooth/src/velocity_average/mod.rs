//! The velocity average rho f(x, t) = int f(x - t v, v) dmu(v), its dual, and the Funk-Hecke
//! series path, for the sphere and the kappa-weighted ball measures in d = 2, 3.
//!
//! On the surface measure rho f is evaluated on the exact slice
//! {v : v.xi + tau = 0}; writing c = -tau/|xi| and xi' = xi/|xi|,
//!
//! rho^f(xi, tau) = (2 pi |S^{d-2}| / |xi|) (1 - c^2)^{(d-3)/2} sum_l G_l(xi) p_{d,l}(c),
//!
//! where G_l(xi) = N_l sum_j w_j f^(xi, v_j) p_{d,l}(v_j . xi') is the zonal projection of the
//! velocity interpolant (trigonometric in d = 2, spherical harmonics in d = 3) and N_l the
//! dimension of the degree-l harmonics over |S^{d-1}|. Ball measures use a band-limited delta:
//! the transport sum in time followed by a transform in t.

pub mod funk_hecke;
mod measure;
mod rescale;

use std::borrow::Cow;
use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{invalid, out_of_range, Error, Result};
use crate::exponent_calculus::special::legendre_all;
use crate::exponent_calculus::sphere_area;
use crate::spectral_grid::container::{decode, encode, Kind, RawContainer, BROADCAST_FLAG};
use crate::spectral_grid::{
    active_time_range, dtft, norm3, spatial_fft, to_mixed, Domain, GridSpec, LineFft, Multiplier,
    SpaceTimeField, C64,
};

pub use funk_hecke::{
    funk_hecke_average, funk_hecke_coefficient, phase_space_from_modes, real_spherical_harmonic, RadialModeData,
};
pub use measure::{MeasureKind, NodeRule, VelocityMeasure};
pub use rescale::{rescaling_check, RescalingCheck};

/// Highest harmonic degree used for d = 3 velocity interpolation.
pub const SH_MAX_DEGREE: usize = 16;
/// Nodes on the d = 3 slice circle for the direct slice evaluation.
pub const SLICE_CIRCLE_NODES: usize = 64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// f(x, v) sampled on the spatial lattice at each velocity node.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceData {
    pub grid: GridSpec,
    pub measure: VelocityMeasure,
    pub domain: Domain,
    /// Node-major, `j * n_space + ix`; a single spatial slice when `broadcast`.
    pub samples: Vec<C64>,
    /// The data does not depend on v.
    pub broadcast: bool,
}

fn check_pair(grid: &GridSpec, measure: &VelocityMeasure) -> Result<()> {
    grid.validate()?;
    if grid.d != measure.d {
        return invalid(format!("grid dimension {} does not match measure dimension {}", grid.d, measure.d));
    }
    Ok(())
}

impl PhaseSpaceData {
    pub fn zeros(grid: GridSpec, measure: VelocityMeasure, domain: Domain) -> Result<Self> {
        check_pair(&grid, &measure)?;
        let n = grid.n_space() * measure.len();
        Ok(Self { grid, measure, domain, samples: vec![ZERO; n], broadcast: false })
    }

    pub fn from_physical_fn(
        grid: GridSpec,
        measure: VelocityMeasure,
        f: impl Fn(&[f64; 3], &[f64; 3]) -> C64 + Sync,
    ) -> Result<Self> {
        Self::from_fn(grid, measure, Domain::Physical, f)
    }

    pub fn from_frequency_fn(
        grid: GridSpec,
        measure: VelocityMeasure,
        f: impl Fn(&[f64; 3], &[f64; 3]) -> C64 + Sync,
    ) -> Result<Self> {
        Self::from_fn(grid, measure, Domain::Frequency, f)
    }

    fn from_fn(
        grid: GridSpec,
        measure: VelocityMeasure,
        domain: Domain,
        f: impl Fn(&[f64; 3], &[f64; 3]) -> C64 + Sync,
    ) -> Result<Self> {
        check_pair(&grid, &measure)?;
        let ns = grid.n_space();
        let mut samples = vec![ZERO; ns * measure.len()];
        samples.par_chunks_mut(ns).zip(measure.nodes.par_iter()).for_each(|(chunk, v)| {
            for (ix, z) in chunk.iter_mut().enumerate() {
                let p = if domain == Domain::Physical { grid.x(ix) } else { grid.xi(ix) };
                *z = f(&p, v);
            }
        });
        Ok(Self { grid, measure, domain, samples, broadcast: false })
    }

    /// Velocity-independent data given by its spatial transform.
    pub fn broadcast_frequency(grid: GridSpec, measure: VelocityMeasure, f: impl Fn(&[f64; 3]) -> C64) -> Result<Self> {
        check_pair(&grid, &measure)?;
        let samples = (0..grid.n_space()).map(|ix| f(&grid.xi(ix))).collect();
        Ok(Self { grid, measure, domain: Domain::Frequency, samples, broadcast: true })
    }

    pub fn n_nodes(&self) -> usize {
        self.measure.len()
    }

    /// Spatial slice at node j.
    pub fn node(&self, j: usize) -> &[C64] {
        let ns = self.grid.n_space();
        if self.broadcast {
            &self.samples
        } else {
            &self.samples[j * ns..(j + 1) * ns]
        }
    }

    #[inline]
    pub fn at(&self, j: usize, ix: usize) -> C64 {
        if self.broadcast {
            self.samples[ix]
        } else {
            self.samples[j * self.grid.n_space() + ix]
        }
    }

    fn transformed(&self, inverse: bool) -> Self {
        let mut s = self.samples.clone();
        let g = self.grid;
        s.par_chunks_mut(g.n_space()).for_each(|c| spatial_fft(&g, c, inverse));
        let domain = if inverse { Domain::Physical } else { Domain::Frequency };
        Self { samples: s, domain, ..self.clone() }
    }

    /// Spatial transform at every node (borrowed when already in frequency).
    pub fn frequency(&self) -> Cow<'_, Self> {
        match self.domain {
            Domain::Frequency => Cow::Borrowed(self),
            Domain::Physical => Cow::Owned(self.transformed(false)),
        }
    }

    pub fn physical(&self) -> Cow<'_, Self> {
        match self.domain {
            Domain::Physical => Cow::Borrowed(self),
            Domain::Frequency => Cow::Owned(self.transformed(true)),
        }
    }

    /// Per-node storage.
    pub fn expand(&self) -> Self {
        if !self.broadcast {
            return self.clone();
        }
        let samples = self.samples.iter().copied().cycle().take(self.samples.len() * self.n_nodes()).collect();
        Self { samples, broadcast: false, ..self.clone() }
    }

    /// ||f||^2 in L^2(dx dmu), computed in the data's own domain.
    pub fn l2_norm_sq(&self) -> f64 {
        let g = &self.grid;
        let vol = match self.domain {
            Domain::Physical => g.dx().powi(g.d as i32),
            Domain::Frequency => (g.dxi() / (2.0 * PI)).powi(g.d as i32),
        };
        let per_node = |j: usize| self.node(j).iter().map(|z| z.norm_sqr()).sum::<f64>();
        let s: f64 = if self.broadcast {
            per_node(0) * self.measure.total_mass()
        } else {
            (0..self.n_nodes()).map(|j| self.measure.weights[j] * per_node(j)).sum()
        };
        s * vol
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (measure_kind, kappa) = match self.measure.kind {
            MeasureKind::Sphere => (1, 0.0),
            MeasureKind::KappaBall { kappa } => (2, kappa),
        };
        let mut layout = self.measure.rule.layout();
        if self.broadcast {
            layout[0] |= BROADCAST_FLAG;
        }
        let d = self.grid.d;
        let mut nodes = Vec::with_capacity(self.n_nodes() * (d + 1));
        for (v, w) in self.measure.nodes.iter().zip(&self.measure.weights) {
            nodes.extend_from_slice(&v[..d]);
            nodes.push(*w);
        }
        encode(&RawContainer {
            kind: Kind::PhaseSpace,
            domain: self.domain,
            grid: self.grid,
            measure_kind,
            kappa,
            layout,
            n_nodes: self.n_nodes(),
            payload: self.samples.clone(),
            nodes,
        })
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let raw = decode(buf)?;
        let cerr = |m: String| Error::Container(m);
        if raw.kind != Kind::PhaseSpace {
            return Err(cerr("not phase-space data".into()));
        }
        let kind = match raw.measure_kind {
            1 => MeasureKind::Sphere,
            _ => MeasureKind::KappaBall { kappa: raw.kappa },
        };
        let broadcast = raw.layout[0] & BROADCAST_FLAG != 0;
        let mut layout = raw.layout;
        layout[0] &= !BROADCAST_FLAG;
        let rule = NodeRule::from_layout(layout).map_err(|e| cerr(e.to_string()))?;
        let d = raw.grid.d;
        let (nodes, weights) = raw
            .nodes
            .chunks(d + 1)
            .map(|c| {
                let mut v = [0.0; 3];
                v[..d].copy_from_slice(&c[..d]);
                (v, c[d])
            })
            .unzip();
        let measure = VelocityMeasure::from_parts(d, kind, rule, nodes, weights).map_err(|e| cerr(e.to_string()))?;
        Ok(Self { grid: raw.grid, measure, domain: raw.domain, samples: raw.payload, broadcast })
    }
}

/// How the delta on the slice {v.xi + tau = 0} is realised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DeltaRealization {
    /// Exact slice of the velocity interpolant (surface-type node rules only).
    Slice,
    /// Transport sum on the time lattice followed by a transform in t: the delta is replaced by
    /// its band-limited version, which makes rho the exact grid adjoint of `dual_rho_star`.
    BandLimited,
    /// Node sum restricted to |v.xi + tau| <= eps with weight 1/(2 eps).
    Slab { eps: f64 },
}

/// rho^f(xi, .) at one spatial frequency.
#[derive(Debug, Clone)]
pub enum XiKernel {
    Zero,
    /// Zonal series: value = (2 pi |S^{d-2}| / r)(1 - c^2)^{(d-3)/2} sum_l g_l p_{d,l}(c).
    Zonal { d: u32, r: f64, g: Vec<C64> },
    /// Transport sum on the time lattice, slots lo.. .
    Series { r: f64, lo: usize, vals: Vec<C64> },
    Slab { r: f64, eps: f64, terms: Vec<(f64, C64)> },
}

impl XiKernel {
    pub fn radius(&self) -> f64 {
        match *self {
            XiKernel::Zero => 0.0,
            XiKernel::Zonal { r, .. } | XiKernel::Series { r, .. } | XiKernel::Slab { r, .. } => r,
        }
    }

    fn zonal_sum(d: u32, g: &[C64], c: f64) -> C64 {
        let mut p = vec![0.0; g.len()];
        legendre_all(d, c, &mut p);
        g.iter().zip(&p).map(|(a, b)| a * b).sum()
    }

    /// rho^f(xi, tau); zero outside the cone. For d = 2 slices the cone itself (where the
    /// value is infinite) is reported as zero.
    pub fn eval(&self, grid: &GridSpec, tau: f64) -> C64 {
        match self {
            XiKernel::Zero => ZERO,
            &XiKernel::Zonal { d, r, ref g } => {
                if tau.abs() > r || (d == 2 && tau.abs() == r) {
                    return ZERO;
                }
                let c = -tau / r;
                let w = if d == 2 { (1.0 - c * c).sqrt().recip() } else { 1.0 };
                Self::zonal_sum(d, g, c) * (2.0 * PI * sphere_area(d - 2) / r * w)
            }
            &XiKernel::Series { r, lo, ref vals } => {
                if tau.abs() > r {
                    return ZERO;
                }
                dtft(grid, vals.iter().enumerate().map(|(m, &u)| (lo + m, u)), tau)
            }
            &XiKernel::Slab { r, eps, ref terms } => {
                if tau.abs() > r {
                    return ZERO;
                }
                let s: C64 = terms.iter().filter(|(p, _)| (p + tau).abs() <= eps).map(|(_, u)| u).sum();
                s * (PI / eps)
            }
        }
    }
}

/// Per-frequency evaluator of rho^f.
pub struct RhoSpectrum<'a> {
    f: Cow<'a, PhaseSpaceData>,
    pub realization: DeltaRealization,
    degree: usize,
}

fn sphere_degree(rule: &NodeRule) -> Option<usize> {
    match *rule {
        NodeRule::Circle { n } => Some(n / 2),
        NodeRule::SphereGl { n_polar, n_azimuth } => {
            Some(SH_MAX_DEGREE.min(n_polar.saturating_sub(1)).min(n_azimuth.saturating_sub(1) / 2))
        }
        _ => None,
    }
}

impl<'a> RhoSpectrum<'a> {
    pub fn new(f: &'a PhaseSpaceData, realization: DeltaRealization) -> Result<Self> {
        let degree = match realization {
            DeltaRealization::Slice => match sphere_degree(&f.measure.rule) {
                Some(l) if f.measure.on_sphere() => l,
                _ => return invalid("slice evaluation needs a sphere node rule"),
            },
            DeltaRealization::Slab { eps } if !(eps > 0.0 && eps.is_finite()) => {
                return out_of_range("slab half-width", eps);
            }
            _ => 0,
        };
        Ok(Self { f: f.frequency(), realization, degree })
    }

    /// Slice for sphere-type rules, band-limited otherwise.
    pub fn default_realization(measure: &VelocityMeasure) -> DeltaRealization {
        if measure.on_sphere() {
            DeltaRealization::Slice
        } else {
            DeltaRealization::BandLimited
        }
    }

    pub fn data(&self) -> &PhaseSpaceData {
        &self.f
    }

    /// Harmonic degree of the velocity interpolant (slice mode).
    pub fn degree(&self) -> usize {
        self.degree
    }

    fn values(&self, ix: usize) -> Option<Vec<C64>> {
        let f = &*self.f;
        let vals: Vec<C64> = (0..f.n_nodes()).map(|j| f.at(j, ix)).collect();
        vals.iter().any(|z| z.norm_sqr() != 0.0).then_some(vals)
    }

    pub fn kernel(&self, ix: usize) -> XiKernel {
        let f = &*self.f;
        let g = &f.grid;
        let xi = g.xi(ix);
        let r = norm3(&xi);
        if r == 0.0 {
            return XiKernel::Zero;
        }
        let Some(vals) = self.values(ix) else {
            return XiKernel::Zero;
        };
        let m = &f.measure;
        match self.realization {
            DeltaRealization::Slice => {
                let unit = [xi[0] / r, xi[1] / r, xi[2] / r];
                let g = if g.d == 2 { circle_zonal(m, &vals, &unit) } else { sphere_zonal(m, &vals, &unit, self.degree) };
                XiKernel::Zonal { d: f.grid.d as u32, r, g }
            }
            DeltaRealization::BandLimited => {
                let dt = g.dt();
                let mut out = vec![ZERO; g.n_t];
                for ((v, w), u) in m.nodes.iter().zip(&m.weights).zip(&vals) {
                    let s = dot(&xi, v);
                    let step = C64::from_polar(1.0, -s * dt);
                    let mut ph = C64::from_polar(*w, -s * g.time(0));
                    for o in out.iter_mut() {
                        *o += u * ph;
                        ph *= step;
                    }
                }
                XiKernel::Series { r, lo: 0, vals: out }
            }
            DeltaRealization::Slab { eps } => {
                let terms = m.nodes.iter().zip(&m.weights).zip(&vals).map(|((v, w), u)| (dot(&xi, v), u * *w)).collect();
                XiKernel::Slab { r, eps, terms }
            }
        }
    }

    /// int rho^f(xi, tau) h(tau) dtau over the cone, with n-point Gauss-Jacobi in c = -tau/|xi|
    /// absorbing the (1 - c^2)^{(d-3)/2} endpoint weight (slice mode).
    pub fn integrate(&self, ix: usize, n: usize, mut h: impl FnMut(f64) -> C64) -> Result<C64> {
        match self.kernel(ix) {
            XiKernel::Zero => Ok(ZERO),
            XiKernel::Zonal { d, r, g } => {
                let e = (d as f64 - 3.0) / 2.0;
                let rule = crate::quadrature::gauss_jacobi(n, e, e);
                let mut acc = ZERO;
                for (&c, &w) in rule.nodes.iter().zip(&rule.weights) {
                    acc += XiKernel::zonal_sum(d, &g, c) * h(-r * c) * w;
                }
                Ok(acc * (2.0 * PI * sphere_area(d - 2)))
            }
            _ => invalid("continuous tau integration needs slice mode; pair on the lattice instead"),
        }
    }
}

/// Zonal coefficients of the trigonometric interpolant on the circle rule.
fn circle_zonal(m: &VelocityMeasure, vals: &[C64], unit: &[f64; 3]) -> Vec<C64> {
    let n = vals.len();
    let mut buf = vals.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let w = m.weights[0] / (2.0 * PI);
    let theta = unit[1].atan2(unit[0]);
    let half = n / 2;
    let b = |k: i64| buf[k.rem_euclid(n as i64) as usize] * w * C64::from_polar(1.0, k as f64 * theta);
    let mut g = Vec::with_capacity(half + 1);
    g.push(b(0));
    for l in 1..=half {
        let l = l as i64;
        if n % 2 == 0 && l as usize == half {
            g.push(buf[half] * w * (l as f64 * theta).cos());
        } else {
            g.push(b(l) + b(-l));
        }
    }
    trim(g)
}

/// G_l = (2l+1)/(4 pi) sum_j w_j F_j P_l(v_j . xi').
fn sphere_zonal(m: &VelocityMeasure, vals: &[C64], unit: &[f64; 3], degree: usize) -> Vec<C64> {
    let mut g = vec![ZERO; degree + 1];
    let mut p = vec![0.0; degree + 1];
    for ((v, w), u) in m.nodes.iter().zip(&m.weights).zip(vals) {
        legendre_all(3, dot(v, unit).clamp(-1.0, 1.0), &mut p);
        let wu = u * *w;
        for (gl, pl) in g.iter_mut().zip(&p) {
            *gl += wu * *pl;
        }
    }
    for (l, gl) in g.iter_mut().enumerate() {
        *gl *= (2 * l + 1) as f64 / (4.0 * PI);
    }
    trim(g)
}

fn trim(mut g: Vec<C64>) -> Vec<C64> {
    let max = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
    while g.len() > 1 && g.last().unwrap().norm() <= 1e-16 * max {
        g.pop();
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoReport {
    pub realization: DeltaRealization,
    /// d = 2 slice points with |tau| = |xi| exactly (value infinite, stored as 0).
    pub cone_points_excluded: usize,
    pub velocity_degree: usize,
}

/// rho^f on the frequency lattice with the measure's default realization.
pub fn average_rho(f: &PhaseSpaceData) -> Result<SpaceTimeField> {
    Ok(average_rho_with(f, RhoSpectrum::default_realization(&f.measure))?.0)
}

pub fn average_rho_with(f: &PhaseSpaceData, realization: DeltaRealization) -> Result<(SpaceTimeField, RhoReport)> {
    let spec = RhoSpectrum::new(f, realization)?;
    let g = f.grid;
    let ns = g.n_space();
    let line = LineFft::new(&g, false);
    let columns: Vec<(Vec<C64>, usize)> = (0..ns)
        .into_par_iter()
        .map(|ix| {
            let k = spec.kernel(ix);
            let r = k.radius();
            let mut col = vec![ZERO; g.n_t];
            let mut excluded = 0;
            match k {
                XiKernel::Zero => {}
                XiKernel::Series { vals, .. } => {
                    col.copy_from_slice(&vals);
                    line.process(&mut col);
                    for (it, z) in col.iter_mut().enumerate() {
                        if g.tau(it).abs() > r {
                            *z = ZERO;
                        }
                    }
                }
                k => {
                    for (it, z) in col.iter_mut().enumerate() {
                        let tau = g.tau(it);
                        if g.d == 2 && tau.abs() == r && matches!(k, XiKernel::Zonal { .. }) {
                            excluded += 1;
                        }
                        *z = k.eval(&g, tau);
                    }
                }
            }
            (col, excluded)
        })
        .collect();
    let mut out = SpaceTimeField::zeros(g, Domain::Frequency);
    let mut excluded = 0;
    for (ix, (col, e)) in columns.into_iter().enumerate() {
        excluded += e;
        for (it, z) in col.into_iter().enumerate() {
            out.samples[it * ns + ix] = z;
        }
    }
    let report = RhoReport { realization, cone_points_excluded: excluded, velocity_degree: spec.degree() };
    Ok((out, report))
}

/// Physical-space oracle: sum_j w_j f(x - t v_j, v_j) with trigonometric interpolation in x.
pub fn average_rho_direct(f: &PhaseSpaceData, x: &[f64; 3], t: f64) -> C64 {
    let ff = f.frequency();
    let g = &f.grid;
    let c = (g.dxi() / (2.0 * PI)).powi(g.d as i32);
    let ns = g.n_space();
    let xis: Vec<[f64; 3]> = (0..ns).map(|ix| g.xi(ix)).collect();
    let per_node = |j: usize| -> C64 {
        let v = &f.measure.nodes[j];
        let y = [x[0] - t * v[0], x[1] - t * v[1], x[2] - t * v[2]];
        let slice = ff.node(j);
        let s: C64 = slice
            .iter()
            .zip(&xis)
            .filter(|(u, _)| u.norm_sqr() != 0.0)
            .map(|(u, xi)| u * C64::from_polar(1.0, dot(xi, &y)))
            .sum();
        s * f.measure.weights[j]
    };
    let s: C64 = (0..f.n_nodes()).into_par_iter().map(per_node).collect::<Vec<_>>().into_iter().sum();
    s * c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualReport {
    /// (xi, v) pairs with |xi.v| beyond the resolvable tau band (value set to 0).
    pub out_of_band: usize,
}

/// rho* g (xi, v) = g^(xi, -xi.v) by band-limited interpolation in tau.
pub fn dual_rho_star(g: &SpaceTimeField, measure: &VelocityMeasure) -> Result<PhaseSpaceData> {
    Ok(dual_rho_star_with(g, measure, None)?.0)
}

/// As `dual_rho_star`, for the field F^{-1}(m g^) with m evaluated exactly at (xi, -xi.v).
pub fn dual_rho_star_with(
    g: &SpaceTimeField,
    measure: &VelocityMeasure,
    m: Option<&dyn Multiplier>,
) -> Result<(PhaseSpaceData, DualReport)> {
    let kernel = DualKernel::new(g, measure, m)?;
    let mut out = PhaseSpaceData::zeros(g.grid, measure.clone(), Domain::Frequency)?;
    let flagged: usize = out
        .samples
        .par_chunks_mut(kernel.ns)
        .enumerate()
        .map(|(j, chunk)| kernel.fill(j, |ix, val| chunk[ix] = val))
        .sum();
    Ok((out, DualReport { out_of_band: flagged }))
}

/// ||rho^* (m(D) g)||^2 in L^2(dx dmu) for each m, without materialising the phase-space
/// field; the band-limited values of g^ are shared between the multipliers.
pub fn dual_rho_star_norms_sq(
    g: &SpaceTimeField,
    measure: &VelocityMeasure,
    ms: &[&dyn Multiplier],
) -> Result<(Vec<f64>, DualReport)> {
    let kernel = DualKernel::new(g, measure, None)?;
    let k = ms.len();
    let per_node: Vec<(Vec<f64>, usize)> = (0..measure.len())
        .into_par_iter()
        .map(|j| {
            let v = &measure.nodes[j];
            let mut acc = vec![0.0; k];
            let flagged = kernel.fill(j, |ix, val| {
                let a = val.norm_sqr();
                if a == 0.0 {
                    return;
                }
                let xi = kernel.grid.xi(ix);
                let tau = -dot(&xi, v);
                for (s, m) in acc.iter_mut().zip(ms) {
                    let mv = m.value(&xi, tau);
                    *s += a * mv * mv;
                }
            });
            (acc.into_iter().map(|a| a * measure.weights[j]).collect(), flagged)
        })
        .collect();
    let vol = (g.grid.dxi() / (2.0 * PI)).powi(g.grid.d as i32);
    // ordered reduction over nodes keeps the sum deterministic
    let mut sums = vec![0.0; k];
    for (acc, _) in &per_node {
        for (s, a) in sums.iter_mut().zip(acc) {
            *s += a;
        }
    }
    let flagged = per_node.iter().map(|p| p.1).sum();
    Ok((sums.into_iter().map(|s| s * vol).collect(), DualReport { out_of_band: flagged }))
}

struct DualKernel<'a> {
    grid: GridSpec,
    measure: &'a VelocityMeasure,
    m: Option<&'a dyn Multiplier>,
    mixed: Vec<C64>,
    lo: usize,
    hi: usize,
    ns: usize,
    live: Vec<bool>,
}

impl<'a> DualKernel<'a> {
    fn new(g: &SpaceTimeField, measure: &'a VelocityMeasure, m: Option<&'a dyn Multiplier>) -> Result<Self> {
        let grid = g.grid;
        check_pair(&grid, measure)?;
        let mixed = to_mixed(g);
        let (lo, hi) = active_time_range(&grid, &mixed);
        let ns = grid.n_space();
        let live = (0..ns).map(|ix| (lo..hi).any(|it| mixed[it * ns + ix].norm_sqr() != 0.0)).collect();
        Ok(Self { grid, measure, m, mixed, lo, hi, ns, live })
    }

    /// Visits the nonzero samples of node j; returns the number of out-of-band pairs.
    fn fill(&self, j: usize, mut put: impl FnMut(usize, C64)) -> usize {
        let grid = &self.grid;
        let v = &self.measure.nodes[j];
        let nyq = grid.nyquist_tau();
        let mut flagged = 0;
        for ix in 0..self.ns {
            if !self.live[ix] {
                continue;
            }
            let xi = grid.xi(ix);
            let tau = -dot(&xi, v);
            if tau.abs() >= nyq {
                flagged += 1;
                continue;
            }
            let mut val = dtft(grid, (self.lo..self.hi).map(|it| (it, self.mixed[it * self.ns + ix])), tau);
            if let Some(m) = self.m {
                if val.norm_sqr() != 0.0 {
                    val *= m.value(&xi, tau);
                }
            }
            put(ix, val);
        }
        flagged
    }
}

/// <f, h> in L^2(dx dmu), from frequency samples.
pub fn phase_pairing(f: &PhaseSpaceData, h: &PhaseSpaceData) -> Result<C64> {
    if f.grid != h.grid || f.measure.len() != h.measure.len() {
        return invalid("phase-space data on different grids");
    }
    let (ff, hf) = (f.frequency(), h.frequency());
    let g = &f.grid;
    let s: C64 = (0..f.n_nodes())
        .map(|j| {
            let a: C64 = ff.node(j).iter().zip(hf.node(j)).map(|(x, y)| x * y.conj()).sum();
            a * f.measure.weights[j]
        })
        .sum();
    Ok(s * (g.dxi() / (2.0 * PI)).powi(g.d as i32))
}

/// <rho f, g> in L^2(dx dt). Slice mode integrates tau exactly on each slice against the
/// band-limited interpolant of g^; the other modes pair on the lattice.
pub fn rho_pairing(f: &PhaseSpaceData, g: &SpaceTimeField, realization: DeltaRealization, n_tau: usize) -> Result<C64> {
    if f.grid != g.grid {
        return invalid("fields on different grids");
    }
    let grid = g.grid;
    let ns = grid.n_space();
    let vol = (grid.dxi() / (2.0 * PI)).powi(grid.d as i32) / (2.0 * PI);
    if realization != DeltaRealization::Slice {
        let (rho, _) = average_rho_with(f, realization)?;
        let gf = match g.domain {
            Domain::Frequency => Cow::Borrowed(g),
            Domain::Physical => Cow::Owned(crate::spectral_grid::forward_transform(g)?),
        };
        let s: C64 = rho.samples.iter().zip(&gf.samples).map(|(a, b)| a * b.conj()).sum();
        return Ok(s * vol * grid.dtau());
    }
    let spec = RhoSpectrum::new(f, realization)?;
    let mixed = to_mixed(g);
    let (lo, hi) = active_time_range(&grid, &mixed);
    let parts: Result<Vec<C64>> = (0..ns)
        .into_par_iter()
        .map(|ix| spec.integrate(ix, n_tau, |tau| dtft(&grid, (lo..hi).map(|it| (it, mixed[it * ns + ix])), tau).conj()))
        .collect();
    Ok(parts?.into_iter().sum::<C64>() * vol)
}

/// Values of the velocity interpolant on the slice {v.xi' = c}: the two points (d = 2) or
/// SLICE_CIRCLE_NODES equispaced points of the circle (d = 3).
pub fn slice_values(f: &PhaseSpaceData, ix: usize, tau: f64) -> Result<Vec<C64>> {
    let ff = f.frequency();
    let g = &f.grid;
    let xi = g.xi(ix);
    let r = norm3(&xi);
    if !(r > 0.0 && tau.abs() < r) {
        return out_of_range("slice (need |tau| < |xi|)", tau);
    }
    let m = &f.measure;
    let degree = match sphere_degree(&m.rule) {
        Some(l) if m.on_sphere() => l,
        _ => return invalid("slice evaluation needs a sphere node rule"),
    };
    let vals: Vec<C64> = (0..f.n_nodes()).map(|j| ff.at(j, ix)).collect();
    let total = m.total_mass();
    let sphere_mass = sphere_area(g.d as u32 - 1);
    let (points, _) = slice_points(g.d, &xi, tau)?;
    // Reproducing kernel of the interpolation space; dividing by the measure's mass ratio
    // turns the mu-weights back into surface weights.
    let scale = sphere_mass / total;
    let mut kern = vec![0.0; degree + 1];
    let n = f.n_nodes();
    let norms: Vec<f64> = (0..=degree)
        .map(|l| {
            if g.d == 3 {
                (2 * l + 1) as f64 / (4.0 * PI)
            } else if l == 0 || (n % 2 == 0 && l == n / 2) {
                1.0 / (2.0 * PI)
            } else {
                1.0 / PI
            }
        })
        .collect();
    Ok(points
        .iter()
        .map(|p| {
            let mut acc = ZERO;
            for ((v, w), u) in m.nodes.iter().zip(&m.weights).zip(&vals) {
                let t = dot(v, p).clamp(-1.0, 1.0);
                legendre_all(g.d as u32, t, &mut kern);
                let k: f64 = kern.iter().zip(&norms).map(|(a, b)| a * b).sum();
                acc += u * (w * scale * k);
            }
            acc
        })
        .collect())
}

/// Quadrature points on the slice {v in S^{d-1} : v.xi + tau = 0} and the common weight
/// turning a point sum into int delta(v.xi + tau) F dsigma.
pub fn slice_points(d: usize, xi: &[f64; 3], tau: f64) -> Result<(Vec<[f64; 3]>, f64)> {
    let r = norm3(xi);
    if !(r > 0.0 && tau.abs() < r) {
        return out_of_range("slice (need |tau| < |xi|)", tau);
    }
    let c = -tau / r;
    let s = (1.0 - c * c).sqrt();
    let unit = [xi[0] / r, xi[1] / r, xi[2] / r];
    match d {
        2 => {
            let th = unit[1].atan2(unit[0]);
            let ph = c.acos();
            let pts = [th + ph, th - ph].iter().map(|a| [a.cos(), a.sin(), 0.0]).collect();
            Ok((pts, 1.0 / (r * s)))
        }
        3 => {
            // orthonormal frame (unit, e1, e2)
            let a = if unit[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let dd = dot(&a, &unit);
            let mut e1 = [a[0] - dd * unit[0], a[1] - dd * unit[1], a[2] - dd * unit[2]];
            let n1 = norm3(&e1);
            e1.iter_mut().for_each(|x| *x /= n1);
            let e2 = [
                unit[1] * e1[2] - unit[2] * e1[1],
                unit[2] * e1[0] - unit[0] * e1[2],
                unit[0] * e1[1] - unit[1] * e1[0],
            ];
            let pts = (0..SLICE_CIRCLE_NODES)
                .map(|k| {
                    let w = 2.0 * PI * k as f64 / SLICE_CIRCLE_NODES as f64;
                    let (cw, sw) = (w.cos(), w.sin());
                    [0, 1, 2].map(|i| c * unit[i] + s * (cw * e1[i] + sw * e2[i]))
                })
                .collect();
            Ok((pts, 2.0 * PI / (SLICE_CIRCLE_NODES as f64 * r)))
        }
        _ => out_of_range("dimension (need 2 or 3)", d),
    }
}

/// rho^f(xi, tau) = 2 pi int delta(v.xi + tau) f^(xi, v) dsigma(v) for the surface measure,
/// with f^(xi, .) given as a function on the sphere.
pub fn rho_hat_slice_fn(d: usize, xi: &[f64; 3], tau: f64, f: impl Fn(&[f64; 3]) -> C64) -> Result<C64> {
    let (pts, w) = slice_points(d, xi, tau)?;
    Ok(pts.iter().map(&f).sum::<C64>() * (2.0 * PI * w))
}

/// Cauchy-Schwarz on a slice: |rho^f|^2 <= C(xi, tau) int delta(v.xi + tau)|f^|^2 dsigma with
/// C = (2 pi)^2 |S^{d-2}| (1 - c^2)^{(d-3)/2} / |xi|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceBound {
    pub lhs: f64,
    pub slice_l2: f64,
    pub constant: f64,
}

impl SliceBound {
    pub fn rhs(&self) -> f64 {
        self.constant * self.slice_l2
    }
}

pub fn slice_bound(f: &PhaseSpaceData, ix: usize, tau: f64) -> Result<SliceBound> {
    let pts = slice_values(f, ix, tau)?;
    let g = &f.grid;
    let r = norm3(&g.xi(ix));
    let c = -tau / r;
    let d = g.d as i32;
    let mass_ratio = f.measure.total_mass() / sphere_area(d as u32 - 1);
    // slice measure: counting / (r sqrt(1-c^2)) for d = 2, (1/r) d omega for d = 3
    let (sum, sq, jac) = if d == 2 {
        let j = 1.0 / (r * (1.0 - c * c).sqrt());
        (pts.iter().sum::<C64>(), pts.iter().map(|z| z.norm_sqr()).sum::<f64>(), j)
    } else {
        let j = 2.0 * PI / (SLICE_CIRCLE_NODES as f64 * r);
        (pts.iter().sum::<C64>(), pts.iter().map(|z| z.norm_sqr()).sum::<f64>(), j)
    };
    let rho = sum * (2.0 * PI * jac * mass_ratio);
    let constant = (2.0 * PI).powi(2) * sphere_area(d as u32 - 2) * (1.0 - c * c).powf((d as f64 - 3.0) / 2.0) / r
        * mass_ratio
        * mass_ratio;
    Ok(SliceBound { lhs: rho.norm_sqr(), slice_l2: sq * jac, constant })
}
