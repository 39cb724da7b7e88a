//! Uniform space-time grids, the continuum Fourier convention
//! f^(xi) = int f(x) e^{-i x.xi} dx, mixed norms and Littlewood-Paley projections.
//!
//! Physical coordinates are centred: x_i = (i - n/2) dx. Frequencies are stored in FFT
//! order with signed index k in [-n/2, n/2).

pub mod bump;
pub mod container;

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, out_of_range, Error, Result};
pub use bump::{annulus_plateau, eta, low_plateau, raw_bump, BumpProfile};

pub type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    pub n_x: usize,
    pub len_x: f64,
    pub n_t: usize,
    pub len_t: f64,
}

fn pow2_at_least_8(n: usize) -> bool {
    n >= 8 && n.is_power_of_two()
}

impl GridSpec {
    pub fn new(d: usize, n_x: usize, len_x: f64, n_t: usize, len_t: f64) -> Result<Self> {
        let g = Self { d, n_x, len_x, n_t, len_t };
        g.validate()?;
        Ok(g)
    }

    /// Square grid with the same point count and period in space and time.
    pub fn cube(d: usize, n: usize, len: f64) -> Result<Self> {
        Self::new(d, n, len, n, len)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.d) {
            return out_of_range("grid dimension (need 2 or 3)", self.d);
        }
        if !pow2_at_least_8(self.n_x) || !pow2_at_least_8(self.n_t) {
            return out_of_range("grid points (need powers of two >= 8)", format!("{}x{}", self.n_x, self.n_t));
        }
        if !(self.len_x.is_finite() && self.len_x > 0.0 && self.len_t.is_finite() && self.len_t > 0.0) {
            return out_of_range("grid period", format!("{} / {}", self.len_x, self.len_t));
        }
        if self.n_x.checked_pow(self.d as u32).and_then(|s| s.checked_mul(self.n_t)).is_none() {
            return out_of_range("grid size", "overflow");
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.len_x / self.n_x as f64
    }
    pub fn dt(&self) -> f64 {
        self.len_t / self.n_t as f64
    }
    /// Spatial frequency lattice step.
    pub fn dxi(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.len_x
    }
    pub fn dtau(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.len_t
    }
    pub fn n_space(&self) -> usize {
        self.n_x.pow(self.d as u32)
    }
    pub fn n_total(&self) -> usize {
        self.n_space() * self.n_t
    }
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.d as i32) * self.dt()
    }
    pub fn freq_cell_volume(&self) -> f64 {
        self.dxi().powi(self.d as i32) * self.dtau()
    }
    pub fn nyquist_xi(&self) -> f64 {
        std::f64::consts::PI / self.dx()
    }
    pub fn nyquist_tau(&self) -> f64 {
        std::f64::consts::PI / self.dt()
    }

    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n_x / 2) as f64) * self.dx()
    }
    pub fn time(&self, i: usize) -> f64 {
        (i as f64 - (self.n_t / 2) as f64) * self.dt()
    }

    /// Signed frequency index of FFT slot i for an axis of length n.
    pub fn signed(i: usize, n: usize) -> i64 {
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    pub fn tau(&self, i: usize) -> f64 {
        Self::signed(i, self.n_t) as f64 * self.dtau()
    }

    /// Multi-index (x_1 slowest, x_d fastest) of a flat spatial index.
    pub fn multi(&self, mut idx: usize) -> [usize; 3] {
        let mut m = [0; 3];
        for a in (0..self.d).rev() {
            m[a] = idx % self.n_x;
            idx /= self.n_x;
        }
        m
    }

    pub fn flat(&self, m: &[usize]) -> usize {
        m.iter().take(self.d).fold(0, |acc, &i| acc * self.n_x + i)
    }

    /// Spatial frequency vector at a flat index (trailing entries zero for d = 2).
    pub fn xi(&self, idx: usize) -> [f64; 3] {
        let m = self.multi(idx);
        let mut out = [0.0; 3];
        for a in 0..self.d {
            out[a] = Self::signed(m[a], self.n_x) as f64 * self.dxi();
        }
        out
    }

    pub fn x(&self, idx: usize) -> [f64; 3] {
        let m = self.multi(idx);
        let mut out = [0.0; 3];
        for a in 0..self.d {
            out[a] = self.coord(m[a]);
        }
        out
    }

    /// Flat index of the lattice frequency with the given signed indices.
    pub fn freq_flat(&self, k: &[i64]) -> usize {
        let n = self.n_x as i64;
        k.iter().take(self.d).fold(0, |acc, &ki| acc * self.n_x + ki.rem_euclid(n) as usize)
    }

    /// Range of j whose annulus (2^{j-1}, 2^{j+1}) contains a nonzero lattice frequency.
    pub fn lp_range(&self) -> (i32, i32) {
        let lo = (self.dxi().log2() - 1.0).floor() as i32 + 1;
        let corner = self.nyquist_xi() * (self.d as f64).sqrt();
        let hi = (corner.log2() + 1.0).ceil() as i32 - 1;
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Physical,
    Frequency,
}

impl Domain {
    pub fn name(&self) -> &'static str {
        match self {
            Domain::Physical => "physical",
            Domain::Frequency => "frequency",
        }
    }
}

/// Samples on the (t, x) lattice, flat index `it * n_space + ix`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub grid: GridSpec,
    pub samples: Vec<C64>,
    pub domain: Domain,
}

/// Samples on the spatial lattice only.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialField {
    pub grid: GridSpec,
    pub samples: Vec<C64>,
    pub domain: Domain,
}

impl SpaceTimeField {
    pub fn zeros(grid: GridSpec, domain: Domain) -> Self {
        Self { grid, samples: vec![C64::new(0.0, 0.0); grid.n_total()], domain }
    }

    pub fn from_physical_fn(grid: GridSpec, f: impl Fn(&[f64; 3], f64) -> C64) -> Self {
        let mut out = Self::zeros(grid, Domain::Physical);
        let ns = grid.n_space();
        for it in 0..grid.n_t {
            let t = grid.time(it);
            for ix in 0..ns {
                out.samples[it * ns + ix] = f(&grid.x(ix), t);
            }
        }
        out
    }

    pub fn from_frequency_fn(grid: GridSpec, f: impl Fn(&[f64; 3], f64) -> C64) -> Self {
        let mut out = Self::zeros(grid, Domain::Frequency);
        let ns = grid.n_space();
        for it in 0..grid.n_t {
            let tau = grid.tau(it);
            for ix in 0..ns {
                out.samples[it * ns + ix] = f(&grid.xi(ix), tau);
            }
        }
        out
    }

    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.grid.n_t];
        s.extend(std::iter::repeat_n(self.grid.n_x, self.grid.d));
        s
    }

    pub(crate) fn expect(&self, d: Domain) -> Result<()> {
        if self.domain != d {
            return Err(Error::Domain { expected: d.name(), found: self.domain.name() });
        }
        Ok(())
    }

    /// Plain L^2 norm of the samples under the field's own measure.
    pub fn l2_norm(&self) -> f64 {
        let vol = match self.domain {
            Domain::Physical => self.grid.cell_volume(),
            Domain::Frequency => self.grid.freq_cell_volume(),
        };
        (self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * vol).sqrt()
    }

    pub fn scale(&mut self, c: f64) {
        self.samples.iter_mut().for_each(|z| *z *= c);
    }
}

impl SpatialField {
    pub fn zeros(grid: GridSpec, domain: Domain) -> Self {
        Self { grid, samples: vec![C64::new(0.0, 0.0); grid.n_space()], domain }
    }

    pub fn from_physical_fn(grid: GridSpec, f: impl Fn(&[f64; 3]) -> C64) -> Self {
        let samples = (0..grid.n_space()).map(|i| f(&grid.x(i))).collect();
        Self { grid, samples, domain: Domain::Physical }
    }

    pub fn from_frequency_fn(grid: GridSpec, f: impl Fn(&[f64; 3]) -> C64) -> Self {
        let samples = (0..grid.n_space()).map(|i| f(&grid.xi(i))).collect();
        Self { grid, samples, domain: Domain::Frequency }
    }

    pub fn forward(&self) -> Result<Self> {
        if self.domain != Domain::Physical {
            return Err(Error::Domain { expected: "physical", found: self.domain.name() });
        }
        let mut s = self.samples.clone();
        spatial_fft(&self.grid, &mut s, false);
        Ok(Self { grid: self.grid, samples: s, domain: Domain::Frequency })
    }

    pub fn inverse(&self) -> Result<Self> {
        if self.domain != Domain::Frequency {
            return Err(Error::Domain { expected: "frequency", found: self.domain.name() });
        }
        let mut s = self.samples.clone();
        spatial_fft(&self.grid, &mut s, true);
        Ok(Self { grid: self.grid, samples: s, domain: Domain::Physical })
    }

    /// L^r norm of a physical spatial field (Riemann sum).
    pub fn lr_norm(&self, r: f64) -> f64 {
        let vol = self.grid.dx().powi(self.grid.d as i32);
        lr_sum(&self.samples, r, vol).powf(1.0 / r)
    }

    pub fn l2_norm(&self) -> f64 {
        let vol = match self.domain {
            Domain::Physical => self.grid.dx().powi(self.grid.d as i32),
            Domain::Frequency => self.grid.dxi().powi(self.grid.d as i32),
        };
        (self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * vol).sqrt()
    }
}

/// sum |u|^r * vol.
pub(crate) fn lr_sum(u: &[C64], r: f64, vol: f64) -> f64 {
    let s: f64 = if r == 2.0 {
        u.iter().map(|z| z.norm_sqr()).sum()
    } else {
        u.iter().map(|z| z.norm().powf(r)).sum()
    };
    s * vol
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut p = FftPlanner::new();
    if inverse {
        p.plan_fft_inverse(n)
    } else {
        p.plan_fft_forward(n)
    }
}

/// In-place transform along `axis` of a row-major array; applies the centred-coordinate sign
/// (-1)^k and the continuum scaling `scale`.
fn fft_axis(data: &mut [C64], shape: &[usize], axis: usize, inverse: bool, scale: f64) {
    let n = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let fft = plan(n, inverse);
    let sign = |k: usize| if k % 2 == 0 { scale } else { -scale };
    if stride == 1 {
        if inverse {
            for line in data.chunks_mut(n) {
                for (k, z) in line.iter_mut().enumerate() {
                    *z *= sign(k);
                }
            }
            fft.process(data);
        } else {
            fft.process(data);
            for line in data.chunks_mut(n) {
                for (k, z) in line.iter_mut().enumerate() {
                    *z *= sign(k);
                }
            }
        }
        return;
    }
    let batch = stride.min(64);
    let mut buf = vec![C64::new(0.0, 0.0); n * batch];
    for o in 0..outer {
        let base = o * n * stride;
        let mut s0 = 0;
        while s0 < stride {
            let bs = batch.min(stride - s0);
            for b in 0..bs {
                for k in 0..n {
                    let mut z = data[base + k * stride + s0 + b];
                    if inverse {
                        z *= sign(k);
                    }
                    buf[b * n + k] = z;
                }
            }
            fft.process(&mut buf[..bs * n]);
            for b in 0..bs {
                for k in 0..n {
                    let mut z = buf[b * n + k];
                    if !inverse {
                        z *= sign(k);
                    }
                    data[base + k * stride + s0 + b] = z;
                }
            }
            s0 += bs;
        }
    }
}

/// Spatial transform of one spatial slice (length n_space).
pub fn spatial_fft(grid: &GridSpec, data: &mut [C64], inverse: bool) {
    let shape = vec![grid.n_x; grid.d];
    let scale = if inverse { 1.0 / (grid.n_x as f64 * grid.dx()) } else { grid.dx() };
    for a in 0..grid.d {
        fft_axis(data, &shape, a, inverse, scale);
    }
}

/// Transform along time only, for each spatial point.
pub fn temporal_fft(grid: &GridSpec, data: &mut [C64], inverse: bool) {
    let shape = [grid.n_t, grid.n_space()];
    let scale = if inverse { 1.0 / (grid.n_t as f64 * grid.dt()) } else { grid.dt() };
    fft_axis(data, &shape, 0, inverse, scale);
}

/// Reusable continuum-normalised transform of single time lines (length n_t).
pub struct LineFft {
    fft: Arc<dyn Fft<f64>>,
    inverse: bool,
    scale: f64,
}

impl LineFft {
    pub fn new(grid: &GridSpec, inverse: bool) -> Self {
        let scale = if inverse { 1.0 / (grid.n_t as f64 * grid.dt()) } else { grid.dt() };
        Self { fft: plan(grid.n_t, inverse), inverse, scale }
    }

    pub fn process(&self, line: &mut [C64]) {
        let sign = |k: usize| if k % 2 == 0 { self.scale } else { -self.scale };
        if self.inverse {
            line.iter_mut().enumerate().for_each(|(k, z)| *z *= sign(k));
            self.fft.process(line);
        } else {
            self.fft.process(line);
            line.iter_mut().enumerate().for_each(|(k, z)| *z *= sign(k));
        }
    }
}

/// Mixed representation g(xi, t): spatial frequency, physical time. Same flat layout.
pub fn to_mixed(field: &SpaceTimeField) -> Vec<C64> {
    let g = field.grid;
    let mut s = field.samples.clone();
    match field.domain {
        Domain::Physical => s.chunks_mut(g.n_space()).for_each(|c| spatial_fft(&g, c, false)),
        Domain::Frequency => temporal_fft(&g, &mut s, true),
    }
    s
}

/// Leading and trailing time slots below this fraction of the peak modulus count as empty;
/// it only strips the roundoff a temporal FFT leaves behind compactly supported data.
pub const TIME_TRIM_REL: f64 = 1e-15;

/// Time slots [lo, hi) outside which the mixed data vanishes to roundoff.
pub fn active_time_range(grid: &GridSpec, mixed: &[C64]) -> (usize, usize) {
    let ns = grid.n_space();
    let peak = mixed.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let floor = peak * TIME_TRIM_REL * TIME_TRIM_REL;
    let nz = |it: &usize| mixed[it * ns..(it + 1) * ns].iter().any(|z| z.norm_sqr() > floor);
    let lo = (0..grid.n_t).find(nz).unwrap_or(0);
    let hi = (0..grid.n_t).rev().find(nz).map_or(0, |h| h + 1);
    (lo, hi.max(lo))
}

/// Band-limited (DTFT) value at tau of a time series sampled at t_m = t(m), m in [lo, hi):
/// dt * sum_m u_m e^{-i tau t_m}.
pub fn dtft(grid: &GridSpec, series: impl Iterator<Item = (usize, C64)>, tau: f64) -> C64 {
    let step = C64::from_polar(1.0, -tau * grid.dt());
    let mut acc = C64::new(0.0, 0.0);
    let mut cur: Option<(usize, C64)> = None;
    for (m, u) in series {
        let ph = match cur {
            None => C64::from_polar(1.0, -tau * grid.time(m)),
            Some((pm, mut p)) => {
                for _ in pm..m {
                    p *= step;
                }
                p
            }
        };
        cur = Some((m, ph));
        acc += u * ph;
    }
    acc * grid.dt()
}

/// Continuum-normalised forward transform over all d + 1 axes.
pub fn forward_transform(field: &SpaceTimeField) -> Result<SpaceTimeField> {
    field.expect(Domain::Physical)?;
    let mut s = field.samples.clone();
    let g = field.grid;
    for chunk in s.chunks_mut(g.n_space()) {
        spatial_fft(&g, chunk, false);
    }
    temporal_fft(&g, &mut s, false);
    Ok(SpaceTimeField { grid: g, samples: s, domain: Domain::Frequency })
}

pub fn inverse_transform(field: &SpaceTimeField) -> Result<SpaceTimeField> {
    field.expect(Domain::Frequency)?;
    let mut s = field.samples.clone();
    let g = field.grid;
    temporal_fft(&g, &mut s, true);
    for chunk in s.chunks_mut(g.n_space()) {
        spatial_fft(&g, chunk, true);
    }
    Ok(SpaceTimeField { grid: g, samples: s, domain: Domain::Physical })
}

fn check_norm_exponents(q: f64, r: f64) -> Result<()> {
    if !(q.is_finite() && r.is_finite() && q >= 2.0 && r >= 2.0) {
        return invalid(format!("mixed norm exponents must be finite and >= 2, got ({q}, {r})"));
    }
    Ok(())
}

/// (sum_t dt (sum_x dx^d |u|^r)^{q/r})^{1/q}.
pub fn mixed_norm(field: &SpaceTimeField, q: f64, r: f64) -> Result<f64> {
    field.expect(Domain::Physical)?;
    check_norm_exponents(q, r)?;
    let g = field.grid;
    let vol = g.dx().powi(g.d as i32);
    let s: f64 = field
        .samples
        .chunks(g.n_space())
        .map(|slice| lr_sum(slice, r, vol).powf(q / r))
        .sum::<f64>()
        * g.dt();
    Ok(s.powf(1.0 / q))
}

/// Accumulates a mixed norm one time slice at a time.
#[derive(Debug, Clone)]
pub struct MixedNormAccumulator {
    q: f64,
    r: f64,
    sum: f64,
}

impl MixedNormAccumulator {
    pub fn new(q: f64, r: f64) -> Result<Self> {
        check_norm_exponents(q, r)?;
        Ok(Self { q, r, sum: 0.0 })
    }

    /// Adds dt * (sum |u|^r vol)^{q/r}.
    pub fn push(&mut self, slice: &[C64], vol: f64, dt: f64) {
        self.sum += lr_sum(slice, self.r, vol).powf(self.q / self.r) * dt;
    }

    pub fn finish(&self) -> f64 {
        self.sum.powf(1.0 / self.q)
    }
}

/// Real-valued Fourier multiplier evaluable on the frequency lattice.
pub trait Multiplier: Sync {
    fn value(&self, xi: &[f64; 3], tau: f64) -> f64;
    /// True when the multiplier blows up on the cone |tau| = |xi|.
    fn cone_singular(&self) -> bool {
        false
    }
}

impl<F: Fn(&[f64; 3], f64) -> f64 + Sync> Multiplier for F {
    fn value(&self, xi: &[f64; 3], tau: f64) -> f64 {
        self(xi, tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularization {
    None,
    /// Zero the lattice points within one cell of the cone for cone-singular multipliers.
    Collar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollarReport {
    pub excluded_points: usize,
    pub width: f64,
}

pub fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// F^{-1}(m F field), returned in the input's domain.
pub fn apply_symbol(field: &SpaceTimeField, m: &dyn Multiplier) -> Result<SpaceTimeField> {
    Ok(apply_symbol_with(field, m, Regularization::None)?.0)
}

pub fn apply_symbol_with(
    field: &SpaceTimeField,
    m: &dyn Multiplier,
    reg: Regularization,
) -> Result<(SpaceTimeField, CollarReport)> {
    let physical = field.domain == Domain::Physical;
    let mut f = if physical { forward_transform(field)? } else { field.clone() };
    let g = f.grid;
    let ns = g.n_space();
    let width = g.dxi().max(g.dtau());
    let clamp = reg == Regularization::Collar && m.cone_singular();
    let mut excluded = 0;
    for it in 0..g.n_t {
        let tau = g.tau(it);
        for ix in 0..ns {
            let xi = g.xi(ix);
            let z = &mut f.samples[it * ns + ix];
            if clamp && (norm3(&xi) - tau.abs()).abs() < width {
                *z = C64::new(0.0, 0.0);
                excluded += 1;
                continue;
            }
            let v = m.value(&xi, tau);
            if !v.is_finite() {
                if z.norm_sqr() == 0.0 {
                    *z = C64::new(0.0, 0.0);
                    continue;
                }
                return Err(Error::Singular(format!("xi = {xi:?}, tau = {tau}")));
            }
            *z *= v;
        }
    }
    let out = if physical { inverse_transform(&f)? } else { f };
    Ok((out, CollarReport { excluded_points: excluded, width }))
}

/// Littlewood-Paley projection with the partition eta(2^{-j}|xi|), in the input's domain.
pub fn lp_project(field: &SpaceTimeField, j: i32) -> Result<SpaceTimeField> {
    let (lo, hi) = field.grid.lp_range();
    if j < lo || j > hi {
        return out_of_range("Littlewood-Paley index", format!("{j} (resolvable {lo}..={hi})"));
    }
    let s = 2f64.powi(-j);
    apply_symbol(field, &move |xi: &[f64; 3], _tau: f64| eta(s * norm3(xi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn small(d: usize) -> GridSpec {
        GridSpec::new(d, 16, 8.0 * PI, 8, 4.0 * PI).unwrap()
    }

    fn random_field(g: GridSpec, seed: u64) -> SpaceTimeField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SpaceTimeField::zeros(g, Domain::Physical);
        for z in &mut f.samples {
            *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        f
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(2, 12, 1.0, 8, 1.0).is_err());
        assert!(GridSpec::new(4, 8, 1.0, 8, 1.0).is_err());
        assert!(GridSpec::new(2, 8, 0.0, 8, 1.0).is_err());
        assert!(GridSpec::new(2, 4, 1.0, 8, 1.0).is_err());
        let g = small(3);
        for i in [0, 5, 4095] {
            assert_eq!(g.flat(&g.multi(i)), i);
        }
    }

    #[test]
    fn constant_transforms_to_zero_mode() {
        let g = small(2);
        let c = C64::new(1.5, -0.5);
        let f = SpaceTimeField::from_physical_fn(g, |_, _| c);
        let h = forward_transform(&f).unwrap();
        let vol = g.len_x * g.len_x * g.len_t;
        assert!((h.samples[0] - c * vol).norm() < 1e-10 * vol);
        assert!(h.samples[1..].iter().all(|z| z.norm() < 1e-10 * vol));
        assert!(forward_transform(&h).is_err());
    }

    #[test]
    fn gaussian_matches_closed_form() {
        // int e^{-|x|^2/2 - t^2/2} e^{-i(x xi + t tau)} = (2 pi)^{3/2} e^{-(|xi|^2 + tau^2)/2}
        let g = GridSpec::new(2, 128, 16.0 * PI, 128, 16.0 * PI).unwrap();
        let f = SpaceTimeField::from_physical_fn(g, |x, t| {
            C64::new((-(x[0] * x[0] + x[1] * x[1] + t * t) / 2.0).exp(), 0.0)
        });
        let h = forward_transform(&f).unwrap();
        let ns = g.n_space();
        let mut err: f64 = 0.0;
        for it in 0..g.n_t {
            for ix in 0..ns {
                let xi = g.xi(ix);
                let tau = g.tau(it);
                let e = (2.0 * PI).powf(1.5) * (-(xi[0] * xi[0] + xi[1] * xi[1] + tau * tau) / 2.0).exp();
                err = err.max((h.samples[it * ns + ix] - e).norm());
            }
        }
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn round_trip_and_plancherel() {
        for d in [2, 3] {
            let g = small(d);
            let f = random_field(g, 7);
            let h = forward_transform(&f).unwrap();
            let back = inverse_transform(&h).unwrap();
            let err = f.samples.iter().zip(&back.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12);
            let lhs = h.l2_norm().powi(2);
            let rhs = (2.0 * PI).powi(d as i32 + 1) * f.l2_norm().powi(2);
            assert!((lhs / rhs - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_norm_examples() {
        let g = small(2);
        let mut f = SpaceTimeField::zeros(g, Domain::Physical);
        f.samples[37] = C64::new(1.0, 0.0);
        let v = mixed_norm(&f, 2.0, 2.0).unwrap();
        assert!((v - g.cell_volume().sqrt()).abs() < 1e-15);
        let f = random_field(g, 3);
        let flat = (f.samples.iter().map(|z| z.norm().powi(4)).sum::<f64>() * g.cell_volume()).powf(0.25);
        assert!((mixed_norm(&f, 4.0, 4.0).unwrap() / flat - 1.0).abs() < 1e-13);
        let mut f2 = f.clone();
        f2.scale(2.0);
        let (a, b) = (mixed_norm(&f, 3.0, 5.0).unwrap(), mixed_norm(&f2, 3.0, 5.0).unwrap());
        assert!((b / a - 2.0).abs() < 1e-13);
        assert!(mixed_norm(&f, 1.0, 2.0).is_err());
    }

    #[test]
    fn mixed_norm_triangle_inequality() {
        let g = small(2);
        for s in 0..5 {
            let (a, b) = (random_field(g, 10 + s), random_field(g, 20 + s));
            let mut c = a.clone();
            c.samples.iter_mut().zip(&b.samples).for_each(|(x, y)| *x += y);
            for &(q, r) in &[(2.0, 2.0), (3.0, 6.0), (4.0, 2.5)] {
                let lhs = mixed_norm(&c, q, r).unwrap();
                let rhs = mixed_norm(&a, q, r).unwrap() + mixed_norm(&b, q, r).unwrap();
                assert!(lhs <= rhs * (1.0 + 1e-14));
            }
        }
    }

    fn band_limited(g: GridSpec, lo: f64, hi: f64, seed: u64) -> SpaceTimeField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SpaceTimeField::zeros(g, Domain::Frequency);
        let ns = g.n_space();
        for it in 0..g.n_t {
            for ix in 0..ns {
                let r = norm3(&g.xi(ix));
                if r > lo && r < hi {
                    f.samples[it * ns + ix] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
        }
        inverse_transform(&f).unwrap()
    }

    #[test]
    fn lp_examples() {
        let g = GridSpec::new(2, 64, 16.0 * PI, 8, 4.0 * PI).unwrap();
        let f = band_limited(g, 1.0, 2.0, 1);
        let p = lp_project(&f, 0).unwrap();
        // eta(|xi|) = 1 only at |xi| = 1, so compare on the full partition instead.
        let mut sum = SpaceTimeField::zeros(g, Domain::Physical);
        for j in -2..=2 {
            let pj = lp_project(&f, j).unwrap();
            sum.samples.iter_mut().zip(&pj.samples).for_each(|(a, b)| *a += b);
        }
        let err = sum.samples.iter().zip(&f.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let scale = f.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-10 * scale);
        assert!(p.l2_norm() <= f.l2_norm());
        let h = forward_transform(&p).unwrap();
        let ns = g.n_space();
        for it in 0..g.n_t {
            for ix in 0..ns {
                let r = norm3(&g.xi(ix));
                if r <= 0.5 || r >= 2.0 {
                    assert!(h.samples[it * ns + ix].norm() < 1e-10);
                }
            }
        }
        let (lo, hi) = g.lp_range();
        assert!(lp_project(&f, hi + 1).is_err() && lp_project(&f, lo - 1).is_err());
    }

    #[test]
    fn lp_reconstructs_over_full_range() {
        let g = GridSpec::new(2, 32, 8.0 * PI, 8, 4.0 * PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut f = SpaceTimeField::zeros(g, Domain::Frequency);
        for (i, z) in f.samples.iter_mut().enumerate() {
            if i % g.n_space() != 0 {
                *z = C64::new(rng.gen_range(-1.0..1.0), 0.0);
            }
        }
        let (lo, hi) = g.lp_range();
        let mut sum = SpaceTimeField::zeros(g, Domain::Frequency);
        for j in lo..=hi {
            let pj = lp_project(&f, j).unwrap();
            sum.samples.iter_mut().zip(&pj.samples).for_each(|(a, b)| *a += b);
        }
        // Every nonzero lattice frequency lies in a covered annulus.
        let err = sum.samples.iter().zip(&f.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn square_function_comparable() {
        let g = GridSpec::new(2, 64, 16.0 * PI, 8, 4.0 * PI).unwrap();
        for s in 0..4 {
            let f = band_limited(g, 0.3, 3.5, 100 + s);
            let mut sq = vec![0.0; g.n_total()];
            for j in -2..=2 {
                let pj = lp_project(&f, j).unwrap();
                sq.iter_mut().zip(&pj.samples).for_each(|(a, b)| *a += b.norm_sqr());
            }
            for r in [2.0, 4.0, 6.0] {
                let sf: Vec<C64> = sq.iter().map(|v| C64::new(v.sqrt(), 0.0)).collect();
                let a = lr_sum(&sf, r, 1.0).powf(1.0 / r);
                let b = lr_sum(&f.samples, r, 1.0).powf(1.0 / r);
                assert!(a / b > 0.1 && a / b < 10.0);
            }
        }
    }

    #[test]
    fn apply_symbol_identities() {
        let g = small(2);
        let f = random_field(g, 9);
        let id = apply_symbol(&f, &|_: &[f64; 3], _: f64| 1.0).unwrap();
        let err = id.samples.iter().zip(&f.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
        let cone = |xi: &[f64; 3], tau: f64| if tau.abs() <= norm3(xi) { 1.0 } else { 0.0 };
        let once = apply_symbol(&f, &cone).unwrap();
        let twice = apply_symbol(&once, &cone).unwrap();
        let err = once.samples.iter().zip(&twice.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
        let m1 = |xi: &[f64; 3], tau: f64| 1.0 + norm3(xi) + tau * tau;
        let m2 = |xi: &[f64; 3], _tau: f64| (-norm3(xi)).exp();
        let a = apply_symbol(&apply_symbol(&f, &m1).unwrap(), &m2).unwrap();
        let b = apply_symbol(&f, &|xi: &[f64; 3], tau: f64| m1(xi, tau) * m2(xi, tau)).unwrap();
        let err = a.samples.iter().zip(&b.samples).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
        // Output support is contained in the multiplier support.
        let h = forward_transform(&once).unwrap();
        let ns = g.n_space();
        for it in 0..g.n_t {
            for ix in 0..ns {
                if g.tau(it).abs() > norm3(&g.xi(ix)) {
                    assert!(h.samples[it * ns + ix].norm() < 1e-12);
                }
            }
        }
    }

    struct Sing;
    impl Multiplier for Sing {
        fn value(&self, xi: &[f64; 3], tau: f64) -> f64 {
            (norm3(xi) - tau.abs()).abs().powf(-0.5)
        }
        fn cone_singular(&self) -> bool {
            true
        }
    }

    #[test]
    fn singular_points_need_collar() {
        let g = small(2);
        let f = random_field(g, 11);
        assert!(matches!(apply_symbol(&f, &Sing), Err(Error::Singular(_))));
        let (out, rep) = apply_symbol_with(&f, &Sing, Regularization::Collar).unwrap();
        assert!(rep.excluded_points > 0);
        assert!(out.samples.iter().all(|z| z.is_finite()));
    }
}
