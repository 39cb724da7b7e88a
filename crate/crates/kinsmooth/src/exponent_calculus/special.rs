use std::f64::consts::PI;

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{invalid, out_of_range, Result};
use crate::quadrature::tanh_sinh;

/// Surface measure of the unit sphere S^n in R^{n+1}; |S^0| = 2.
pub fn sphere_area(n: u32) -> f64 {
    let h = (n as f64 + 1.0) / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// Normalised Gegenbauer polynomial p_{d,k} with p_{d,k}(1) = 1.
pub fn legendre(d: u32, k: u32, t: f64) -> Result<f64> {
    if d < 2 {
        return out_of_range("dimension d", d);
    }
    if !(t.abs() <= 1.0) {
        return out_of_range("t (need |t| <= 1)", t);
    }
    Ok(legendre_unchecked(d, k, t))
}

pub(crate) fn legendre_unchecked(d: u32, k: u32, t: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let dm2 = d as f64 - 2.0;
    let (mut p0, mut p1) = (1.0, t);
    for j in 1..k {
        let jf = j as f64;
        let p2 = ((2.0 * jf + dm2) * t * p1 - jf * p0) / (jf + dm2);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// p_{d,0..out.len()}(t) in one pass.
pub(crate) fn legendre_all(d: u32, t: f64, out: &mut [f64]) {
    let dm2 = d as f64 - 2.0;
    for (k, o) in out.iter_mut().enumerate() {
        *o = match k {
            0 => 1.0,
            1 => t,
            _ => 0.0,
        };
    }
    for k in 2..out.len() {
        let j = (k - 1) as f64;
        out[k] = ((2.0 * j + dm2) * t * out[k - 1] - j * out[k - 2]) / (j + dm2);
    }
}

/// C_d = 2^{d-2} pi^{-1/2} Gamma((d-1)/2).
pub fn legendre_bound_constant(d: u32) -> f64 {
    if d == 2 {
        // Gamma(1/2) = sqrt(pi) exactly.
        return 1.0;
    }
    2f64.powi(d as i32 - 2) * PI.powf(-0.5) * gamma((d as f64 - 1.0) / 2.0)
}

/// min{1, C_d k^{(2-d)/2} (1-t^2)^{(2-d)/2}} - |p_{d,k}(t)|.
pub fn legendre_bound_margin(d: u32, k: u32, t: f64) -> Result<f64> {
    if k < 1 {
        return out_of_range("k (need k >= 1)", k);
    }
    if !(t.abs() < 1.0) {
        return out_of_range("t (need |t| < 1)", t);
    }
    let e = (2.0 - d as f64) / 2.0;
    let bound = (legendre_bound_constant(d) * (k as f64).powf(e) * (1.0 - t * t).powf(e)).min(1.0);
    Ok(bound - legendre(d, k, t)?.abs())
}

/// Lower incomplete beta integral over [0, x].
pub fn incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return out_of_range("(a, b) (need a, b > 0)", format!("({a}, {b})"));
    }
    if !(0.0..=1.0).contains(&x) {
        return out_of_range("x (need 0 <= x <= 1)", x);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    // lambda = sin^2 u turns the endpoint powers into powers of sin u and cos u.
    let umax = x.sqrt().asin();
    let full = x == 1.0;
    let v = tanh_sinh(
        |u, du, dend| {
            let s = du.sin();
            let c = if full { dend.sin() } else { u.cos() };
            2.0 * s.powf(2.0 * a - 1.0) * c.powf(2.0 * b - 1.0)
        },
        0.0,
        umax,
        1e-14,
    );
    if !v.is_finite() {
        return invalid("incomplete beta quadrature failed");
    }
    Ok(v)
}

/// Complete beta function via log-gamma.
pub fn beta_fn(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}
