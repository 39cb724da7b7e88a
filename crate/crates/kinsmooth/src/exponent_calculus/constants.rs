use std::f64::consts::PI;

use serde::Serialize;

use super::special::{incomplete_beta, legendre_unchecked, sphere_area};
use crate::error::{out_of_range, Result};
use crate::quadrature::tanh_sinh;

/// A closed-form constant together with the formula and branch that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecialValue {
    pub value: f64,
    pub formula_id: &'static str,
    pub branch: &'static str,
}

/// x^e with the convention 0^0 = 1.
fn pow0(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        x.powf(e)
    }
}

/// Optimal constant for L^2 smoothing over the sphere at (q, r) = (2, 2).
pub fn sharp_constant_general(d: u32, beta_minus: f64) -> Result<SpecialValue> {
    if d < 2 {
        return out_of_range("dimension d", d);
    }
    let df = d as f64;
    let lo = (3.0 - df) / 4.0;
    if !(beta_minus >= lo) {
        return out_of_range("beta_minus (need >= (3-d)/4)", beta_minus);
    }
    let s = sphere_area(d - 2);
    if beta_minus <= 0.25 {
        let v = 2.0 * PI
            * s
            * pow0(df - 2.0, 2.0 - df)
            * pow0(df - 1.0 - 4.0 * beta_minus, (df - 1.0) / 2.0 - 2.0 * beta_minus)
            * pow0(df - 3.0 + 4.0 * beta_minus, (df - 3.0) / 2.0 + 2.0 * beta_minus);
        let branch = if beta_minus == 0.25 { "interior-boundary" } else { "interior" };
        Ok(SpecialValue { value: v, formula_id: "sharp-general", branch })
    } else {
        Ok(SpecialValue { value: 2.0 * PI * s, formula_id: "sharp-general", branch: "endpoint" })
    }
}

/// The profile M(lambda) whose supremum over [0, 1] gives the general sharp constant.
pub fn sharp_profile_m(d: u32, beta_minus: f64, lambda: f64) -> f64 {
    let df = d as f64;
    0.5 * sphere_area(d - 2)
        * pow0(1.0 + lambda, (df - 1.0) / 2.0 - 2.0 * beta_minus)
        * pow0(1.0 - lambda, 2.0 * beta_minus + (df - 3.0) / 2.0)
}

/// I_k = int_0^1 |p_{d,k}|^2 (1+l)^{d-3+2b+} (1-l)^{d-3+2b-} dl.
pub fn i_k_integral(d: u32, k: u32, beta_plus: f64, beta_minus: f64) -> Result<f64> {
    if d < 2 {
        return out_of_range("dimension d", d);
    }
    let df = d as f64;
    if !(beta_minus > (2.0 - df) / 2.0) {
        return out_of_range("beta_minus (need > (2-d)/2 for integrability)", beta_minus);
    }
    if !beta_plus.is_finite() {
        return out_of_range("beta_plus", beta_plus);
    }
    let ep = df - 3.0 + 2.0 * beta_plus;
    let em = df - 3.0 + 2.0 * beta_minus;
    Ok(tanh_sinh(
        |l, _, one_minus| {
            let p = legendre_unchecked(d, k, l);
            p * p * (1.0 + l).powf(ep) * one_minus.powf(em)
        },
        0.0,
        1.0,
        1e-14,
    ))
}

/// Optimal constant for radial-in-x data, beta_+ + beta_- = 1/2.
pub fn sharp_constant_radial(d: u32, beta_plus: f64, beta_minus: f64) -> Result<SpecialValue> {
    if d < 2 {
        return out_of_range("dimension d", d);
    }
    let df = d as f64;
    if (beta_plus + beta_minus - 0.5).abs() > 1e-12 {
        return out_of_range("beta_plus + beta_minus (need 1/2)", beta_plus + beta_minus);
    }
    if !(beta_minus > (2.0 - df) / 2.0) {
        return out_of_range("beta_minus (need > (2-d)/2)", beta_minus);
    }
    let pre = 4.0 * PI * sphere_area(d - 2).powi(2) / sphere_area(d - 1);
    let a = 2.0 * beta_minus + df - 2.0;
    let b = 2.0 * beta_plus + df - 2.0;
    if b > 0.0 {
        let i0 = 2f64.powf(2.0 * (df - 2.0)) * incomplete_beta(0.5, a, b)?;
        Ok(SpecialValue { value: pre * i0, formula_id: "sharp-radial-incomplete-beta", branch: "beta" })
    } else {
        let i0 = i_k_integral(d, 0, beta_plus, beta_minus)?;
        Ok(SpecialValue { value: pre * i0, formula_id: "sharp-radial-quadrature", branch: "quadrature" })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::golden_section_max;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn general_examples() {
        let c = sharp_constant_general(2, 0.25).unwrap();
        assert!(rel(c.value, 4.0 * PI) < 1e-15);
        assert!(rel(sharp_constant_general(3, 0.5).unwrap().value, 4.0 * PI * PI) < 1e-14);
        assert_eq!(sharp_constant_general(3, 0.5).unwrap().branch, "endpoint");
        assert!(rel(sharp_constant_general(3, 0.0).unwrap().value, 8.0 * PI * PI) < 1e-14);
        assert!(sharp_constant_general(2, 0.2).is_err());
        assert!(sharp_constant_general(3, -0.01).is_err());
    }

    #[test]
    fn general_matches_profile_supremum() {
        for d in 2..=4u32 {
            let lo = (3.0 - d as f64) / 4.0;
            for i in 0..10 {
                let bm = lo + (0.5 - lo) * i as f64 / 9.0;
                let (_, sup) = golden_section_max(|l| sharp_profile_m(d, bm, l), 0.0, 1.0, 1e-12);
                let c = sharp_constant_general(d, bm).unwrap().value;
                assert!(rel(4.0 * PI * sup, c) < 1e-8, "d={d} bm={bm}");
            }
        }
    }

    #[test]
    fn radial_examples() {
        // I_0 = 2^{2(d-2)} B(1/2; 2b- + d - 2, 2b+ + d - 2); symmetric case gives 4 pi.
        let c = sharp_constant_radial(2, 0.25, 0.25).unwrap();
        assert!(rel(c.value, 4.0 * PI) < 1e-12);
        // d=3, (b+, b-) = (1/2, 0): I_0 = int (1+l) = 3/2, so C_0 = 4 pi (4 pi^2)^2/(4 pi) * 3/2 = 6 pi^2.
        let c = sharp_constant_radial(3, 0.5, 0.0).unwrap();
        assert!(rel(c.value, 6.0 * PI * PI) < 1e-12);
        assert!(sharp_constant_radial(2, 0.5, 0.0).is_err());
        assert!(sharp_constant_radial(2, 0.3, 0.3).is_err());
    }

    #[test]
    fn radial_never_exceeds_general() {
        for d in 2..=3u32 {
            for i in 1..10 {
                let bm = (2.0 - d as f64) / 2.0 + 0.05 * i as f64;
                if bm < (3.0 - d as f64) / 4.0 {
                    continue;
                }
                let c0 = sharp_constant_radial(d, 0.5 - bm, bm).unwrap().value;
                let c = sharp_constant_general(d, bm).unwrap().value;
                assert!(c0 <= c * (1.0 + 1e-12), "d={d} bm={bm}: {c0} > {c}");
            }
        }
    }

    #[test]
    fn i_k_examples() {
        assert!((i_k_integral(2, 0, 0.25, 0.25).unwrap() - PI / 2.0).abs() < 1e-12);
        for &(d, bp, bm) in &[(2u32, 0.25, 0.25), (3, 0.5, 0.0), (3, 0.0, 0.5), (2, 0.4, 0.1)] {
            let i0 = i_k_integral(d, 0, bp, bm).unwrap();
            let closed = 2f64.powf(2.0 * (d as f64 - 2.0))
                * incomplete_beta(0.5, 2.0 * bm + d as f64 - 2.0, 2.0 * bp + d as f64 - 2.0).unwrap();
            assert!((i0 - closed).abs() < 1e-10 * closed, "{d} {bp} {bm}: {i0} {closed}");
            for k in 1..8 {
                assert!(i_k_integral(d, k, bp, bm).unwrap() < i0);
            }
        }
        assert!(i_k_integral(3, 1, 0.5, 0.0).unwrap() < i_k_integral(3, 0, 0.5, 0.0).unwrap());
        assert!(i_k_integral(2, 0, 0.5, 0.0).is_err());
    }
}
