//! The acceptance criteria as runnable checks. Each criterion returns a pass flag, a one-line
//! detail and its wall time; a criterion passes only if every sub-check holds and it ran
//! within its time budget.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::exponent_calculus::{
    alpha_star, i_k_integral, legendre_bound_margin, q_from_f64, sharp_constant_general, sharp_constant_radial, to_f64,
};
use crate::radon_duality::{
    attainment_sequence, build_m_mu, duality_grid, duality_measure, duality_residuals, radon_kappa_closed, radon_radial,
    random_band_limited_g, sharp_constant_search, DualityMeasure, DUALITY_TAU_NODES,
};
use crate::scaling_experiments::{
    dyadic_scan, knapp_scan, rho_dyadic_scan, RhoDataKind, ScanVerdict, DEFAULT_DELTAS, DEFAULT_KS,
};
use crate::spectral_grid::{
    eta, forward_transform, inverse_transform, lp_project, norm3, temporal_fft, Domain, GridSpec, SpaceTimeField, C64,
};
use crate::symbol_library::{d_minus_symbol, d_plus_symbol, m_kappa_symbol, Symbol};
use crate::velocity_average::{
    average_rho, average_rho_with, dual_rho_star, funk_hecke_average, phase_pairing, phase_space_from_modes,
    rescaling_check, rho_pairing, DeltaRealization, PhaseSpaceData, RadialModeData, VelocityMeasure,
};

pub const CRITERIA: [u8; 11] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];
/// Wall-clock limit for the whole suite.
pub const SUITE_BUDGET_S: f64 = 3600.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed_s: f64,
    pub budget_s: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:>2} {:<28} {:>8.2}s / {:>5.0}s  {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed_s,
            self.budget_s,
            self.detail
        )
    }
}

/// Collects sub-checks; the first failure is kept for the detail line.
struct Checks {
    notes: Vec<String>,
    failed: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self { notes: Vec::new(), failed: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let w = what.into();
        if ok {
            self.notes.push(w);
        } else {
            self.failed.push(w);
        }
    }

    fn finish(self) -> (bool, String) {
        if self.failed.is_empty() {
            (true, self.notes.join("; "))
        } else {
            (false, format!("failed: {}", self.failed.join("; ")))
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn meta(id: u8) -> Option<(&'static str, f64)> {
    Some(match id {
        1 => ("sharp constant d=2", 1.0),
        2 => ("sharp constant sweep", 5.0),
        3 => ("radial sharp constant", 5.0),
        4 => ("duality identity", 600.0),
        5 => ("m_mu equals m_kappa", 10.0),
        6 => ("radon closed form", 10.0),
        7 => ("funk-hecke path", 120.0),
        8 => ("knapp necessity slopes", 600.0),
        9 => ("dyadic envelopes", 900.0),
        10 => ("extremiser attainment", 1200.0),
        11 => ("structural invariants", 600.0),
        _ => return None,
    })
}

pub fn criterion_name(id: u8) -> Option<&'static str> {
    meta(id).map(|m| m.0)
}

pub fn run_criterion(id: u8) -> Option<CriterionOutcome> {
    let (name, budget_s) = meta(id)?;
    let t0 = Instant::now();
    let res = match id {
        1 => c1(),
        2 => c2(),
        3 => c3(),
        4 => c4(),
        5 => c5(),
        6 => c6(),
        7 => c7(),
        8 => c8(),
        9 => c9(),
        10 => c10(),
        _ => c11(),
    };
    let elapsed_s = t0.elapsed().as_secs_f64();
    let (mut pass, mut detail) = match res {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    if elapsed_s > budget_s {
        pass = false;
        detail = format!("over time budget; {detail}");
    }
    Some(CriterionOutcome { id, name, pass, detail, elapsed_s, budget_s })
}

/// Runs the selected criteria in order, calling `report` after each.
pub fn run_selected(ids: &[u8], mut report: impl FnMut(&CriterionOutcome)) -> Vec<CriterionOutcome> {
    ids.iter()
        .filter_map(|&id| run_criterion(id))
        .inspect(|o| report(o))
        .collect()
}

type Outcome = Result<(bool, String)>;

fn c1() -> Outcome {
    let mut c = Checks::new();
    let closed = sharp_constant_general(2, 0.25)?;
    let search = sharp_constant_search(2, 0.25)?;
    let target = 4.0 * PI;
    c.check(rel(closed.value, target) <= 1e-10, format!("closed {} ({}) rel {:.1e}", closed.value, closed.branch, rel(closed.value, target)));
    c.check(rel(search.value, target) <= 1e-10, format!("1-D max rel {:.1e}", rel(search.value, target)));
    Ok(c.finish())
}

fn c2() -> Outcome {
    let mut worst: f64 = 0.0;
    for d in 2..=3u32 {
        let lo = (3.0 - d as f64) / 4.0;
        for i in 0..10 {
            let bm = lo + (0.5 - lo) * i as f64 / 9.0;
            let s = sharp_constant_search(d, bm)?;
            worst = worst.max(rel(s.value, s.closed_form));
        }
    }
    let mut c = Checks::new();
    c.check(worst <= 1e-8, format!("20 points, worst rel {worst:.1e}"));
    Ok(c.finish())
}

fn c3() -> Outcome {
    let mut c = Checks::new();
    let c0 = sharp_constant_radial(2, 0.25, 0.25)?;
    c.check(rel(c0.value, 4.0 * PI) <= 1e-10, format!("C0 {} ({}) rel {:.1e}", c0.value, c0.branch, rel(c0.value, 4.0 * PI)));
    c.check(c0.branch == "beta", "incomplete-beta branch");
    let i0 = i_k_integral(2, 0, 0.25, 0.25)?;
    let i1 = i_k_integral(2, 1, 0.25, 0.25)?;
    c.check(i1 < i0, format!("I_1 = {i1:.6} < I_0 = {i0:.6}"));
    Ok(c.finish())
}

pub const DUALITY_SEEDS: u64 = 20;
pub const DUALITY_N: usize = 256;
pub const DUALITY_REFINEMENTS: [usize; 3] = [64, 128, 256];
/// Residuals below this are roundoff; the refinement sequence need not decrease there.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;

fn duality_symbols() -> Vec<Symbol> {
    vec![Symbol::One, Symbol::product(vec![d_plus_symbol(0.25), d_minus_symbol(0.25)])]
}

fn c4() -> Outcome {
    let ms = duality_symbols();
    let grid = duality_grid(DUALITY_N)?;
    let kinds = [DualityMeasure::Sphere, DualityMeasure::Ball];
    let measures: Vec<_> = kinds.iter().map(|&k| duality_measure(k, DUALITY_N)).collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    // residuals of seed 1 at the finest grid, reused for the refinement sequence
    let mut finest = Vec::new();
    for seed in 1..=DUALITY_SEEDS {
        let g = random_band_limited_g(&grid, seed)?;
        for m in &measures {
            let rs = duality_residuals(&g, &ms, m, DUALITY_TAU_NODES)?;
            worst = rs.iter().map(|r| r.residual).fold(worst, f64::max);
            if seed == 1 {
                finest.push(rs.iter().map(|r| r.residual).collect::<Vec<_>>());
            }
        }
    }
    let mut c = Checks::new();
    c.check(worst <= 1e-3, format!("{} runs, worst residual {worst:.1e}", DUALITY_SEEDS as usize * 4));
    for (ki, &kind) in kinds.iter().enumerate() {
        // seq[symbol][level]
        let mut seq = vec![Vec::new(); ms.len()];
        for &n in &DUALITY_REFINEMENTS[..DUALITY_REFINEMENTS.len() - 1] {
            let g = random_band_limited_g(&duality_grid(n)?, 1)?;
            let rs = duality_residuals(&g, &ms, &duality_measure(kind, n)?, DUALITY_TAU_NODES)?;
            for (s, r) in seq.iter_mut().zip(rs) {
                s.push(r.residual);
            }
        }
        for (s, &r) in seq.iter_mut().zip(&finest[ki]) {
            s.push(r);
        }
        for (si, s) in seq.iter().enumerate() {
            let ok = s.windows(2).all(|w| w[1] < w[0] || w[1] <= ROUNDOFF_FLOOR);
            let txt: Vec<String> = s.iter().map(|r| format!("{r:.1e}")).collect();
            c.check(ok, format!("{kind:?}/m{si} refinement {}", txt.join(">")));
        }
    }
    Ok(c.finish())
}

fn c5() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut points = 0usize;
    let dd = Symbol::product(vec![d_plus_symbol(0.25), d_minus_symbol(0.25)]);
    for d in 2..=3usize {
        for &k in &[-1.0, -0.5, 0.0] {
            let meas = VelocityMeasure::kappa_ball(d, k, 2, 4)?;
            let a = build_m_mu(&dd, &meas)?;
            let b = m_kappa_symbol(d as u32, k, 0.25, 0.25)?;
            for i in 0..100 {
                for j in 0..100 {
                    let r = 0.05 + 2.0 * i as f64 / 100.0;
                    let tau = r * (-1.2 + 2.4 * j as f64 / 99.0);
                    let (x, y) = (a.eval(r, tau), b.eval(r, tau));
                    points += 1;
                    if x.is_finite() || y.is_finite() {
                        worst = worst.max((x - y).abs());
                    }
                }
            }
        }
    }
    let mut c = Checks::new();
    c.check(worst <= 1e-10, format!("{points} evaluations, worst abs {worst:.1e}"));
    Ok(c.finish())
}

fn c6() -> Outcome {
    let mut c = Checks::new();
    let mut worst: f64 = 0.0;
    for d in 2..=3u32 {
        for &k in &[-0.5, 0.0] {
            let g = statrs::function::gamma::gamma(1.0 + k);
            for i in 0..200 {
                // cell midpoints: the d = 2, kappa = -1/2 profile jumps at |r| = 1
                let r = -1.0 + (i as f64 + 0.5) / 100.0;
                let a = radon_radial(d, |s| if k == 0.0 { 1.0 } else { (1.0 - s * s).powf(k) / g }, r)?;
                let b = radon_kappa_closed(d, k, r)?;
                worst = worst.max((a - b).abs() / b.abs().max(1e-300));
            }
        }
    }
    c.check(worst <= 1e-6, format!("800 points, worst rel {worst:.1e}"));
    let disk = radon_radial(3, |_| 1.0, 0.0)?;
    let chord = radon_radial(2, |_| 1.0, 0.0)?;
    c.check(rel(disk, PI) < 1e-12, format!("disk {disk}"));
    c.check(rel(chord, 2.0) < 1e-12, format!("chord {chord}"));
    Ok(c.finish())
}

pub fn funk_hecke_grid() -> Result<GridSpec> {
    GridSpec::cube(2, 64, 32.0 * PI)
}

fn fh_modes() -> Result<Vec<RadialModeData>> {
    Ok(vec![
        RadialModeData::from_fn(2, 0, 0, |r| C64::new(eta(r), 0.0))?,
        RadialModeData::from_fn(2, 1, 1, |r| C64::new(0.5 * eta(r), 0.3 * r * eta(r)))?,
        RadialModeData::from_fn(2, 2, -2, |r| C64::new(0.0, eta(r) * r * r))?,
    ])
}

/// max |series - slice| / max |slice| over lattice points where either is nonzero.
pub fn funk_hecke_mismatch(grid: &GridSpec, modes: &[RadialModeData], n_vel: usize) -> Result<f64> {
    let fh = funk_hecke_average(grid, modes)?;
    let f = phase_space_from_modes(*grid, VelocityMeasure::sphere(grid.d, n_vel)?, modes)?;
    let rho = average_rho(&f)?;
    let scale = rho.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let diff = fh.samples.iter().zip(&rho.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// max relative deviation of the k = 0 series and slice averages from h(xi) 2 pi |S^{d-2}| / r (1 - c^2)^{(d-3)/2}.
pub fn funk_hecke_k0_closed(grid: &GridSpec) -> Result<f64> {
    let mode = RadialModeData::from_fn(grid.d, 0, 0, |r| C64::new(eta(r), 0.0))?;
    let fh = funk_hecke_average(grid, std::slice::from_ref(&mode))?;
    let f = phase_space_from_modes(*grid, VelocityMeasure::sphere(grid.d, 32)?, std::slice::from_ref(&mode))?;
    let slice = average_rho(&f)?;
    let d = grid.d as u32;
    let ns = grid.n_space();
    let mut worst: f64 = 0.0;
    for it in 0..grid.n_t {
        let tau = grid.tau(it);
        for ix in 0..ns {
            let r = norm3(&grid.xi(ix));
            if r == 0.0 || tau.abs() >= r {
                continue;
            }
            let h = mode.profile(r) * mode.harmonic(&[1.0, 0.0, 0.0]);
            let c = tau / r;
            let e = h * (crate::exponent_calculus::sphere_area(d - 2) * 2.0 * PI / r * (1.0 - c * c).powf((d as f64 - 3.0) / 2.0));
            if e.norm() > 0.0 {
                for z in [fh.samples[it * ns + ix], slice.samples[it * ns + ix]] {
                    worst = worst.max((z - e).norm() / e.norm());
                }
            }
        }
    }
    Ok(worst)
}

fn c7() -> Outcome {
    let grid = funk_hecke_grid()?;
    let modes = fh_modes()?;
    let mut c = Checks::new();
    for m in &modes {
        let e = funk_hecke_mismatch(&grid, std::slice::from_ref(m), 32)?;
        c.check(e <= 1e-4, format!("k={} rel {e:.1e}", m.k));
    }
    let e = funk_hecke_mismatch(&grid, &modes, 32)?;
    c.check(e <= 1e-4, format!("k=0+1+2 rel {e:.1e}"));
    let e0 = funk_hecke_k0_closed(&grid)?;
    c.check(e0 <= 1e-8, format!("k=0 closed form rel {e0:.1e}"));
    Ok(c.finish())
}

pub const KNAPP_CASES: [(usize, f64, f64, f64); 3] = [(2, 2.0, 2.0, 0.0), (2, 4.0, 4.0, 0.0), (3, 4.0, 4.0, 0.25)];

fn c8() -> Outcome {
    let mut c = Checks::new();
    for &(d, q, r, a) in &KNAPP_CASES {
        let rep = knapp_scan(d, q, r, a, &DEFAULT_DELTAS)?;
        let ok = rep.verdict == ScanVerdict::Pass && (rep.slope - rep.predicted_slope).abs() <= 0.1;
        c.check(ok, format!("({d},{q},{r},{a}) slope {:.3} vs {:.3}", rep.slope, rep.predicted_slope));
    }
    Ok(c.finish())
}

pub const DYADIC_CASES: [(usize, f64, f64); 2] = [(3, 4.0, 4.0), (2, 2.0, 2.0)];

fn c9() -> Outcome {
    let mut c = Checks::new();
    for &(d, q, r) in &DYADIC_CASES {
        let a = to_f64(alpha_star(d as u32, q_from_f64(q)?, q_from_f64(r)?)?.value);
        let rep = dyadic_scan(d, q, r, &DEFAULT_KS)?;
        let ok = rep.verdict == ScanVerdict::Pass && rep.slope <= a + 0.1;
        c.check(ok, format!("dyadic ({d},{q},{r}) slope {:.3} <= {:.3}+0.1", rep.slope, a));
    }
    for (d, kind) in [(3, RhoDataKind::Generic), (2, RhoDataKind::Generic), (3, RhoDataKind::RadialX)] {
        let rep = rho_dyadic_scan(d, kind, &DEFAULT_KS)?;
        let env = match kind {
            RhoDataKind::Generic => (3.0 - d as f64) / 4.0,
            RhoDataKind::RadialX => (2.0 - d as f64) / 2.0,
        };
        let ok = rep.verdict == ScanVerdict::Pass && rep.slope <= env + 0.1;
        c.check(ok, format!("rho d={d} {kind:?} slope {:.3} <= {env:.3}+0.1", rep.slope));
    }
    Ok(c.finish())
}

pub const EXTREMISER_SIZES: [usize; 3] = [128, 256, 512];

fn c10() -> Outcome {
    let seq = attainment_sequence(&eta, &EXTREMISER_SIZES)?;
    let mut c = Checks::new();
    let fr: Vec<String> = seq.iter().map(|p| format!("{}:{:.4}", p.n, p.fraction)).collect();
    c.check(seq.windows(2).all(|w| w[1].ratio > w[0].ratio), format!("increasing {}", fr.join(" ")));
    let last = seq.last().map(|p| p.fraction).unwrap_or(0.0);
    c.check(last >= 0.95, format!("final fraction {last:.4} >= 0.95"));
    Ok(c.finish())
}

fn random_field(g: GridSpec, seed: u64) -> SpaceTimeField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpaceTimeField::zeros(g, Domain::Physical);
    for z in &mut f.samples {
        *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    f
}

/// Random low-degree polynomial in v times eta(|xi|)(1 + 0.3 xi_1).
pub fn velocity_poly_data(grid: GridSpec, measure: VelocityMeasure, seed: u64) -> Result<PhaseSpaceData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<C64> = (0..6).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    PhaseSpaceData::from_frequency_fn(grid, measure, move |xi, v| {
        let p = c[0] + c[1] * v[0] + c[2] * v[1] + c[3] * v[2] + c[4] * v[0] * v[1] + c[5] * (xi[0] * v[1] - xi[1] * v[0]);
        p * eta(norm3(xi)) * (1.0 + 0.3 * xi[0])
    })
}

/// Spatial transform eta(|xi|) times a polynomial, compact smooth time profile.
fn compact_test_field(grid: GridSpec, seed: u64) -> SpaceTimeField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let ns = grid.n_space();
    let mut s = vec![C64::new(0.0, 0.0); grid.n_total()];
    for it in 0..grid.n_t {
        let t = grid.time(it);
        let b = (1.0 - (t / 6.0).powi(2)).max(0.0).powi(4) * C64::new(1.0 + c[0] * t.cos(), c[1] * (0.7 * t).sin());
        if b.norm_sqr() == 0.0 {
            continue;
        }
        for ix in 0..ns {
            let xi = grid.xi(ix);
            s[it * ns + ix] = b * eta(norm3(&xi)) * C64::new(c[2] + c[3] * xi[0], c[4] * xi[1]);
        }
    }
    temporal_fft(&grid, &mut s, false);
    SpaceTimeField { grid, samples: s, domain: Domain::Frequency }
}

fn gaussian_data(grid: GridSpec, measure: VelocityMeasure) -> Result<PhaseSpaceData> {
    PhaseSpaceData::from_physical_fn(grid, measure, |x, v| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        C64::new((-0.5 * r2).exp() * (1.0 + 0.5 * v[0] - 0.25 * v[1] * v[1]), 0.3 * x[0] * (-0.4 * r2).exp())
    })
}

fn c11() -> Outcome {
    let mut c = Checks::new();

    // Plancherel and round trip
    let mut worst: f64 = 0.0;
    for d in [2, 3] {
        let g = GridSpec::new(d, 16, 8.0 * PI, 16, 4.0 * PI)?;
        let f = random_field(g, 7 + d as u64);
        let h = forward_transform(&f)?;
        let lhs = h.l2_norm().powi(2);
        let rhs = (2.0 * PI).powi(d as i32 + 1) * f.l2_norm().powi(2);
        worst = worst.max((lhs / rhs - 1.0).abs());
        let back = inverse_transform(&h)?;
        let scale = f.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst = worst.max(f.samples.iter().zip(&back.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale);
    }
    c.check(worst <= 1e-12, format!("Plancherel {worst:.1e}"));

    // Littlewood-Paley reconstruction over the resolvable range
    let g = GridSpec::new(2, 32, 8.0 * PI, 8, 4.0 * PI)?;
    let mut f = random_field(g, 5);
    f.samples.iter_mut().enumerate().filter(|(i, _)| i % g.n_space() == 0).for_each(|(_, z)| *z = C64::new(0.0, 0.0));
    let f = forward_transform(&f)?;
    let ns = g.n_space();
    let mut f0 = f.clone();
    // zero spatial frequency is not covered by any annulus
    for it in 0..g.n_t {
        f0.samples[it * ns] = C64::new(0.0, 0.0);
    }
    let (lo, hi) = g.lp_range();
    let mut sum = SpaceTimeField::zeros(g, Domain::Frequency);
    for j in lo..=hi {
        let p = lp_project(&f0, j)?;
        sum.samples.iter_mut().zip(&p.samples).for_each(|(a, b)| *a += b);
    }
    let scale = f0.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let err = sum.samples.iter().zip(&f0.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
    c.check(err <= 1e-10, format!("LP partition {err:.1e} (j {lo}..={hi})"));

    // support of rho f in the cone, exactly
    let g2 = GridSpec::new(2, 32, 16.0 * PI, 32, 16.0 * PI)?;
    let g3 = GridSpec::new(3, 16, 8.0 * PI, 16, 8.0 * PI)?;
    let cases = [
        (g2, VelocityMeasure::sphere(2, 12)?, DeltaRealization::Slice),
        (g2, VelocityMeasure::kappa_ball(2, 0.0, 6, 12)?, DeltaRealization::BandLimited),
        (g3, VelocityMeasure::sphere(3, 6)?, DeltaRealization::Slice),
    ];
    let mut outside = 0usize;
    let mut inside = 0usize;
    for (i, (g, m, real)) in cases.into_iter().enumerate() {
        let f = velocity_poly_data(g, m, i as u64)?;
        let (rho, _) = average_rho_with(&f, real)?;
        let ns = g.n_space();
        for (k, z) in rho.samples.iter().enumerate() {
            if g.tau(k / ns).abs() > norm3(&g.xi(k % ns)) {
                outside += usize::from(z.norm() != 0.0);
            } else {
                inside += usize::from(z.norm() != 0.0);
            }
        }
    }
    c.check(outside == 0 && inside > 0, format!("cone support ({outside} nonzero outside, {inside} inside)"));

    // rescaling identity
    let gr = GridSpec::cube(2, 64, 16.0 * PI)?;
    let fr = gaussian_data(gr, VelocityMeasure::sphere(2, 32)?)?;
    let mut worst: f64 = 0.0;
    for j in [-1, 0, 1] {
        worst = worst.max(rescaling_check(&fr, j, 0.25, 0.25)?.residual);
    }
    c.check(worst <= 1e-6, format!("rescaling {worst:.1e}"));

    // adjointness
    let mut worst: f64 = 0.0;
    for (g, m) in [(g2, VelocityMeasure::sphere(2, 64)?), (g3, VelocityMeasure::sphere(3, 17)?)] {
        for seed in 0..2 {
            let f = velocity_poly_data(g, m.clone(), 10 + seed)?;
            let gf = compact_test_field(g, 100 + seed);
            let lhs = rho_pairing(&f, &gf, DeltaRealization::Slice, 96)?;
            let rhs = phase_pairing(&f, &dual_rho_star(&gf, &m)?)?;
            worst = worst.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()));
        }
    }
    c.check(worst <= 1e-3, format!("adjointness {worst:.1e}"));

    // Legendre bound
    let mut min = f64::INFINITY;
    for d in 2..=3u32 {
        for k in 1..=40u32 {
            for i in 0..400 {
                let t = -1.0 + (i as f64 + 0.5) / 200.0;
                min = min.min(legendre_bound_margin(d, k, t)?);
            }
        }
    }
    c.check(min >= 0.0, format!("Legendre margin min {min:.2e}"));
    Ok(c.finish())
}
