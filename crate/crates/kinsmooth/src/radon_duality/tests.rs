use super::*;
use crate::spectral_grid::{eta, norm3, GridSpec, SpaceTimeField, C64};
use crate::symbol_library::{d_minus_symbol, d_plus_symbol, m_kappa_symbol};
use crate::velocity_average::RadialModeData;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn radon_radial_geometric_oracles() {
    // central disk of the unit ball, chord of the unit disk
    assert!(rel(radon_radial(3, |_| 1.0, 0.0).unwrap(), PI) < 1e-12);
    assert!(rel(radon_radial(2, |_| 1.0, 0.0).unwrap(), 2.0) < 1e-12);
    // off-centre: disk of radius sqrt(1 - r^2), chord 2 sqrt(1 - r^2)
    assert!(rel(radon_radial(3, |_| 1.0, 0.6).unwrap(), PI * 0.64) < 1e-10);
    assert!(rel(radon_radial(2, |_| 1.0, -0.6).unwrap(), 1.6) < 1e-10);
    assert_eq!(radon_radial(3, |_| 1.0, 1.5).unwrap(), 0.0);
    assert_eq!(radon_radial(2, |_| 1.0, -1.0).unwrap(), 0.0);
    assert!(radon_radial(3, |s| 1.0 / (1.0 - s), 0.2).is_err());
    assert!(radon_radial(2, |s| 1.0 / (1.0 - s).powf(1.5), 0.0).is_err());
    assert!(radon_radial(4, |_| 1.0, 0.0).is_err());
}

#[test]
fn radon_closed_examples() {
    assert!(rel(radon_kappa_closed(3, -1.0, 0.0).unwrap(), PI) < 1e-15);
    assert!(rel(radon_kappa_closed(3, 0.0, 0.0).unwrap(), PI) < 1e-15);
    for &k in &[-1.0, -0.5, 0.0] {
        for &r in &[1.0, -1.0, 1.2, -7.0] {
            let e = k + 0.5 * (3.0 - 1.0);
            if e > 0.0 {
                assert_eq!(radon_kappa_closed(3, k, r).unwrap(), 0.0);
            }
        }
    }
    assert!(radon_kappa_closed(2, 0.5, 0.0).is_err());
    assert!(radon_kappa_closed(2, -1.5, 0.0).is_err());
}

#[test]
fn profile_closed_matches_quadrature() {
    for d in 2..=3 {
        for &k in &[-1.0, -0.75, -0.5, -0.25, 0.0] {
            let p = RadonProfile::new(d, k).unwrap();
            for i in 0..=40 {
                let r = -1.0 + i as f64 / 20.0;
                let (a, b) = (p.closed_form(r), p.quadrature_form(r).unwrap());
                if a.is_finite() {
                    assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "d={d} k={k} r={r}: {a} vs {b}");
                }
            }
            assert!(rel(p.closed_form(0.0), p.constant) < 1e-15);
        }
    }
}

#[test]
fn m_mu_examples() {
    // kappa = -1 ball (half the sphere), m = 1, d = 3: m_mu^2 = pi / |xi|
    let half = VelocityMeasure::kappa_ball(3, -1.0, 1, 6).unwrap();
    let mm = build_m_mu(&Symbol::One, &half).unwrap();
    for &(r, tau) in &[(1.0, 0.3), (0.7, -0.69), (1.9, 0.0)] {
        assert!(rel(mm.eval(r, tau).powi(2), PI / r) < 1e-13);
        assert_eq!(mm.eval(r, 1.01 * r), 0.0);
    }
    // full sphere carries twice the weight
    let sph = VelocityMeasure::sphere(3, 6).unwrap();
    assert!(rel(build_m_mu(&Symbol::One, &sph).unwrap().eval(1.0, 0.5).powi(2), 2.0 * PI) < 1e-13);
    // d = 2 sphere with D_+^{1/4} D_-^{1/4}: m_mu^2 = 2 on the open cone
    let c = VelocityMeasure::sphere(2, 8).unwrap();
    let dd = Symbol::product(vec![d_plus_symbol(0.25), d_minus_symbol(0.25)]);
    let mm = build_m_mu(&dd, &c).unwrap();
    for &(r, tau) in &[(1.0, 0.3), (0.6, -0.59), (1.9, 0.0)] {
        assert!(rel(mm.eval(r, tau).powi(2), 2.0) < 1e-13);
    }
}

#[test]
fn m_mu_equals_m_kappa_on_lattice() {
    let mut worst: f64 = 0.0;
    for d in 2..=3usize {
        for &k in &[-1.0, -0.5, 0.0] {
            let meas = VelocityMeasure::kappa_ball(d, k, 2, 4).unwrap();
            for &(bp, bm) in &[(0.25, 0.25), (0.5, 0.0), (0.1, 0.3)] {
                let dd = Symbol::product(vec![d_plus_symbol(bp), d_minus_symbol(bm)]);
                let a = build_m_mu(&dd, &meas).unwrap();
                let b = m_kappa_symbol(d as u32, k, bp, bm).unwrap();
                for i in 0..40 {
                    for j in 0..40 {
                        let r = 0.1 + 2.0 * i as f64 / 40.0;
                        let tau = r * (-1.2 + 2.4 * j as f64 / 39.0);
                        let (x, y) = (a.eval(r, tau), b.eval(r, tau));
                        if x.is_finite() || y.is_finite() {
                            worst = worst.max((x - y).abs());
                        }
                    }
                }
            }
        }
    }
    assert!(worst <= 1e-10, "{worst}");
}

#[test]
fn m_mu_rejects_non_radial_measure() {
    let m = VelocityMeasure::sphere(2, 8).unwrap();
    let mut w = m.weights.clone();
    w[0] *= 1.5;
    let skew = VelocityMeasure::from_parts(2, m.kind, m.rule, m.nodes.clone(), w).unwrap();
    assert!(build_m_mu(&Symbol::One, &skew).is_err());
    assert!(build_m_mu(&Symbol::One, &m).is_ok());
}

#[test]
fn sharp_constant_examples_and_sweep() {
    assert!(rel(sharp_constant_numeric(2, 0.25).unwrap(), 4.0 * PI) < 1e-12);
    assert!(rel(sharp_constant_numeric(3, 0.0).unwrap(), 8.0 * PI * PI) < 1e-10);
    assert!(rel(sharp_constant_numeric(3, 0.5).unwrap(), 4.0 * PI * PI) < 1e-12);
    for d in 2..=3u32 {
        let lo = (3.0 - d as f64) / 4.0;
        for i in 0..10 {
            let bm = lo + (0.5 - lo) * i as f64 / 9.0;
            let s = sharp_constant_search(d, bm).unwrap();
            assert!(rel(s.value, s.closed_form) < 1e-8, "d={d} bm={bm}: {} vs {}", s.value, s.closed_form);
            if let Some(l) = s.stationary {
                assert!((s.argmax - l).abs() < 1e-5);
            }
        }
        assert!(sharp_constant_numeric(d, lo - 0.01).is_err());
    }
}

#[test]
fn maximiser_is_a_single_point_except_at_the_extremal_triple() {
    for &(d, bm) in &[(2u32, 0.3), (2, 0.45), (3, 0.0), (3, 0.1), (3, 0.5)] {
        let a = maximizer_set_measure(d, bm, 1_000_000, 1e-6).unwrap();
        let b = maximizer_set_measure(d, bm, 1_000_000, 1e-10).unwrap();
        assert!(b < a && b < 1e-3, "d={d} bm={bm}: {a} {b}");
    }
    assert_eq!(maximizer_set_measure(2, 0.25, 10_000, 1e-12).unwrap(), 1.0);
}

fn small_grid() -> GridSpec {
    duality_grid(64).unwrap()
}

#[test]
fn duality_zero_and_preconditions() {
    let g = small_grid();
    let m = duality_measure(DualityMeasure::Sphere, 64).unwrap();
    let z = SpaceTimeField::zeros(g, crate::spectral_grid::Domain::Frequency);
    assert_eq!(duality_residual(&z, &Symbol::One, &m).unwrap().residual, 0.0);
    let wide = SpaceTimeField::from_frequency_fn(g, |xi, _| C64::new((-norm3(xi)).exp(), 0.0));
    assert!(duality_residual(&wide, &Symbol::One, &m).is_err());
}

#[test]
fn duality_residual_small_grid() {
    let g = small_grid();
    let dd = Symbol::product(vec![d_plus_symbol(0.25), d_minus_symbol(0.25)]);
    for kind in [DualityMeasure::Sphere, DualityMeasure::Ball] {
        let meas = duality_measure(kind, 128).unwrap();
        for (seed, m) in [(1u64, Symbol::One), (2, dd.clone()), (3, d_plus_symbol(0.5))] {
            let gf = random_band_limited_g(&g, seed).unwrap();
            let r = duality_residual(&gf, &m, &meas).unwrap();
            assert!(r.lhs > 0.0 && r.residual < 1e-3, "{kind:?} {m:?}: {r:?}");
        }
    }
}

#[test]
fn extremiser_construction() {
    let grid = extremiser_grid(32).unwrap();
    assert!(build_extremiser(&|_| 0.0, grid, 64).is_err());
    assert!(build_extremiser(&|r| (-r * r).exp(), grid, 64).is_err());
    let g3 = GridSpec::new(3, 16, 2.0 * PI, 16, 2.0 * PI).unwrap();
    assert!(build_extremiser(&eta, g3, 8).is_err());
    let f = build_extremiser(&eta, grid, 64).unwrap();
    assert!(f.broadcast);
    for ix in 0..grid.n_space() {
        assert_eq!(f.at(5, ix).re, eta(norm3(&grid.xi(ix))));
    }
}

#[test]
fn extremiser_attainment_increases() {
    let seq = attainment_sequence(&eta, &[32, 64, 128]).unwrap();
    for w in seq.windows(2) {
        assert!(w[1].ratio > w[0].ratio, "{seq:?}");
    }
    assert!(seq.iter().all(|p| p.fraction < 1.0 && p.fraction > 0.5), "{seq:?}");
}

fn k_mode(k: usize, m: i64) -> RadialModeData {
    RadialModeData::from_fn(2, k, m, |r| C64::new(eta(r), 0.0)).unwrap()
}

#[test]
fn radial_check_examples() {
    let grid = GridSpec::new(2, 64, 32.0 * PI, 64, 32.0 * PI).unwrap();
    let c = sharp_constant_radial_check(&grid, 0.25, 0.25, &[k_mode(0, 0)]).unwrap();
    assert!(rel(c.c0, 4.0 * PI) < 1e-10);
    assert!(rel(c.rhs_series / c.norm_sq, 4.0 * PI) < 1e-10);
    assert!((c.ratio_to_c0 - 1.0).abs() < 1e-10);
    assert!((c.ratio_tau - 1.0).abs() < 1e-4, "{c:?}");
    // the lattice norm sees the integrable cone singularity and converges slowly
    let fine = GridSpec::new(2, 256, 128.0 * PI, 256, 128.0 * PI).unwrap();
    let cf = sharp_constant_radial_check(&fine, 0.25, 0.25, &[k_mode(0, 0)]).unwrap();
    assert!((c.ratio - 1.0).abs() < 0.05 && (cf.ratio - 1.0).abs() < (c.ratio - 1.0).abs(), "{c:?} {cf:?}");
    assert!((cf.ratio_tau - 1.0).abs() < 1e-6);
    let c1 = sharp_constant_radial_check(&grid, 0.25, 0.25, &[k_mode(0, 0), k_mode(1, 1)]).unwrap();
    assert!(c1.ratio_to_c0 < 1.0);
    assert!((c1.ratio_tau - 1.0).abs() < 1e-4, "{c1:?}");
    assert!(sharp_constant_radial_check(&grid, 0.25, 0.25, &[]).is_err());
    assert!(sharp_constant_radial_check(&grid, 0.3, 0.25, &[k_mode(0, 0)]).is_err());
    assert!(sharp_constant_radial_check(&grid, 0.25, 0.25, &[k_mode(1, 1), k_mode(1, 1)]).is_err());
}
