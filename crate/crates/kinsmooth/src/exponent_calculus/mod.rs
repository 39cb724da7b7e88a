//! Exponent algebra: scaling relations, thresholds, admissibility, and the closed-form
//! constants built on one-dimensional special functions.
//!
//! Exponents are exact rationals (`Q`); every piecewise formula reports its branch.

mod constants;
pub(crate) mod special;

pub use constants::{
    i_k_integral, sharp_constant_general, sharp_constant_radial, sharp_profile_m, SpecialValue,
};
pub use special::{
    beta_fn, incomplete_beta, legendre, legendre_bound_margin, legendre_bound_constant, sphere_area,
};

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{invalid, out_of_range, Result};

pub type Q = Ratio<i64>;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(n)
}

pub fn to_f64(x: Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Parses "3", "-1/2", "0.25", "1e-1" style exponents exactly. Infinite exponents are rejected.
pub fn parse_q(s: &str) -> Result<Q> {
    let t = s.trim();
    if t.is_empty() {
        return invalid("empty exponent");
    }
    let lower = t.to_ascii_lowercase();
    if lower.contains("inf") || t.contains('∞') || lower.contains("nan") {
        return invalid(format!("exponent must be finite: {t}"));
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| crate::Error::Invalid(format!("bad numerator in {t}")))?;
        let d: i64 = d.trim().parse().map_err(|_| crate::Error::Invalid(format!("bad denominator in {t}")))?;
        if d == 0 {
            return invalid(format!("zero denominator in {t}"));
        }
        return Ok(Q::new(n, d));
    }
    let (mant, exp) = match lower.split_once('e') {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| crate::Error::Invalid(format!("bad exponent in {t}")))?),
        None => (lower.as_str(), 0),
    };
    let neg = mant.starts_with('-');
    let mant = mant.trim_start_matches(['-', '+']);
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() || !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return invalid(format!("not a number: {t}"));
    }
    let digits = format!("{ip}{fp}");
    let scale = fp.len() as i32 - exp;
    if digits.len() > 17 || scale.abs() > 17 {
        return invalid(format!("too many digits for exact arithmetic: {t}"));
    }
    let mut num: i64 = digits.parse().unwrap_or(0);
    if neg {
        num = -num;
    }
    let p10 = 10i64.pow(scale.unsigned_abs());
    Ok(if scale >= 0 { Q::new(num, p10) } else { Q::from_integer(num.checked_mul(p10).ok_or_else(|| crate::Error::Invalid(format!("overflow: {t}")))?) })
}

/// Nearest small-denominator rational to a finite float.
pub fn q_from_f64(x: f64) -> Result<Q> {
    if !x.is_finite() {
        return invalid(format!("exponent must be finite: {x}"));
    }
    Q::approximate_float(x).ok_or_else(|| crate::Error::Invalid(format!("cannot represent {x}")))
}

/// Result of a piecewise formula: value, branch taken, and whether the two branches tie.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Branched {
    #[serde(serialize_with = "ser_q")]
    pub value: Q,
    pub branch: &'static str,
    pub boundary: bool,
}

impl Branched {
    pub fn f64(&self) -> f64 {
        to_f64(self.value)
    }
}

pub(crate) fn ser_q<S: serde::Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{x}"))
}

fn pick_max(a: Q, na: &'static str, b: Q, nb: &'static str) -> Branched {
    if a >= b {
        Branched { value: a, branch: na, boundary: a == b }
    } else {
        Branched { value: b, branch: nb, boundary: false }
    }
}

fn pick_min(a: Q, na: &'static str, b: Q, nb: &'static str) -> Branched {
    if a <= b {
        Branched { value: a, branch: na, boundary: a == b }
    } else {
        Branched { value: b, branch: nb, boundary: false }
    }
}

fn check_d(d: u32) -> Result<Q> {
    if d < 2 {
        return out_of_range("dimension d (need d >= 2)", d);
    }
    Ok(qi(d as i64))
}

fn check_exp(name: &'static str, x: Q) -> Result<()> {
    if x < qi(2) {
        return out_of_range(name, format!("{x} (need >= 2)"));
    }
    Ok(())
}

fn check_kappa(kappa: Q) -> Result<()> {
    if kappa < qi(-1) || kappa > Q::zero() {
        return out_of_range("kappa (need -1 <= kappa <= 0)", kappa);
    }
    Ok(())
}

/// s + d/r + 1/q - d/p.
pub fn scaling_total(d: u32, q_: Q, r: Q, p: Q, s: Q) -> Result<Q> {
    let dq = check_d(d)?;
    check_exp("q", q_)?;
    check_exp("r", r)?;
    check_exp("p", p)?;
    Ok(s + dq / r + q_.recip() - dq / p)
}

pub fn alpha_star(d: u32, q_: Q, r: Q) -> Result<Branched> {
    let dq = check_d(d)?;
    check_exp("q", q_)?;
    check_exp("r", r)?;
    let a = q_.recip() + (dq - 1) / (r * 2) - (dq + 1) / 4;
    Ok(pick_max(a, "scaling", q(-1, 2), "floor"))
}

/// Necessary cone-multiplier order for Knapp plates (the first branch of alpha_star).
pub fn alpha_knapp(d: u32, q_: Q, r: Q) -> Result<Q> {
    let dq = check_d(d)?;
    check_exp("q", q_)?;
    check_exp("r", r)?;
    Ok(q_.recip() + (dq - 1) / (r * 2) - (dq + 1) / 4)
}

/// Lower smoothing threshold for the velocity measure mu_kappa.
pub fn beta_minus_star(d: u32, q_: Q, r: Q, kappa: Q) -> Result<Branched> {
    let dq = check_d(d)?;
    check_exp("q", q_)?;
    check_exp("r", r)?;
    check_kappa(kappa)?;
    let a = q_.recip() + (dq - 1) / (r * 2) - (dq + kappa) / 2;
    let b = -(dq + 1 + kappa * 2) / 4;
    Ok(pick_max(a, "scaling", b, "floor"))
}

/// Lower threshold for the sphere, stated directly (no kappa).
pub fn beta_minus_star_sphere(d: u32, q_: Q, r: Q) -> Result<Branched> {
    let dq = check_d(d)?;
    check_exp("q", q_)?;
    check_exp("r", r)?;
    let a = q_.recip() + (dq - 1) / (r * 2) - (dq - 1) / 2;
    Ok(pick_max(a, "scaling", -(dq - 1) / 4, "floor"))
}

/// Upper threshold on beta_plus for the sphere.
pub fn beta_plus_star(d: u32, q_: Q, r: Q) -> Result<Branched> {
    let dq = check_d(d)?;
    check_exp("q", q_)?;
    check_exp("r", r)?;
    let a = (dq + 1) / (r * 2) - q(1, 2);
    let b = dq / r + q_.recip() - (dq + 1) / 4;
    Ok(pick_min(a, "floor", b, "scaling"))
}

pub fn wave_admissible(d: u32, q_: Q, r: Q) -> Result<bool> {
    let dq = check_d(d)?;
    check_exp("q", q_)?;
    check_exp("r", r)?;
    Ok(q_.recip() <= (dq - 1) / 2 * (q(1, 2) - r.recip()))
}

/// Cone-multiplier order equivalent to the smoothing estimate for mu_kappa.
pub fn equiv_alpha(d: u32, beta_minus: Q, kappa: Q) -> Result<Q> {
    let dq = check_d(d)?;
    check_kappa(kappa)?;
    Ok(beta_minus + kappa / 2 + (dq - 1) / 4)
}

/// Decoupling exponent gamma(p, q) on T = {(1/p, 1/q) in [0,1/2]^2 : 1/p >= 1/q}.
pub fn gamma_decoupling(d: u32, p: Q, q_: Q) -> Result<Branched> {
    let dq = check_d(d)?;
    if p <= Q::zero() || q_ <= Q::zero() {
        return out_of_range("(p, q)", format!("({p}, {q_})"));
    }
    let (ip, iq) = (p.recip(), q_.recip());
    let half = q(1, 2);
    if ip > half || iq > half || ip < iq || iq < Q::zero() {
        return out_of_range("(1/p, 1/q) outside T", format!("({ip}, {iq})"));
    }
    let edge = (dq - 1) / ((dq + 1) * 2);
    if iq >= edge {
        Ok(Branched {
            value: (dq + 1) * iq / 2 + (dq - 1) / 4 - dq * ip,
            branch: "T0-upper",
            boundary: iq == edge,
        })
    } else {
        Ok(Branched { value: (dq - 1) / 2 - dq * ip, branch: "T0-lower", boundary: false })
    }
}

/// Radial Strichartz threshold.
pub fn alpha_double_star(d: u32, q_: Q, r: Q) -> Result<Branched> {
    let dq = check_d(d)?;
    check_exp("q", q_)?;
    check_exp("r", r)?;
    let a = q_.recip() + (dq - 1) / r - dq / 2;
    Ok(pick_max(a, "scaling", q(-1, 2), "floor"))
}

/// All exponents of one smoothing estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExponentTuple {
    pub d: u32,
    #[serde(serialize_with = "ser_q")]
    pub q: Q,
    #[serde(serialize_with = "ser_q")]
    pub r: Q,
    #[serde(serialize_with = "ser_q")]
    pub p: Q,
    #[serde(serialize_with = "ser_q")]
    pub s: Q,
    #[serde(serialize_with = "ser_q")]
    pub kappa: Q,
    #[serde(serialize_with = "ser_q")]
    pub beta_plus: Q,
    #[serde(serialize_with = "ser_q")]
    pub beta_minus: Q,
    #[serde(serialize_with = "ser_q")]
    pub alpha: Q,
}

impl ExponentTuple {
    /// L^2 data (p = 2, s = 0) with beta_plus fixed by the scaling relation.
    pub fn scaling_consistent(d: u32, q_: Q, r: Q, kappa: Q, beta_minus: Q) -> Result<Self> {
        check_kappa(kappa)?;
        let total = scaling_total(d, q_, r, qi(2), Q::zero())?;
        let alpha = equiv_alpha(d, beta_minus, kappa)?;
        Ok(Self { d, q: q_, r, p: qi(2), s: Q::zero(), kappa, beta_plus: total - beta_minus, beta_minus, alpha })
    }

    pub fn is_scaling_consistent(&self) -> bool {
        scaling_total(self.d, self.q, self.r, self.p, self.s)
            .map(|t| t == self.beta_plus + self.beta_minus)
            .unwrap_or(false)
    }
}

/// Whether the L^2 smoothing estimate for mu_kappa holds at a scaling-consistent tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    /// Exact threshold outside the wave-admissible range: not settled.
    Open,
}

pub fn smoothing_verdict(t: &ExponentTuple) -> Result<Verdict> {
    if !t.is_scaling_consistent() {
        return invalid("tuple is not scaling-consistent");
    }
    if t.p != qi(2) || !t.s.is_zero() {
        return invalid("verdicts are available for L^2 data only (p = 2, s = 0)");
    }
    let star = beta_minus_star(t.d, t.q, t.r, t.kappa)?.value;
    let adm = wave_admissible(t.d, t.q, t.r)?;
    Ok(if t.beta_minus > star {
        Verdict::Holds
    } else if t.beta_minus < star || adm {
        Verdict::Fails
    } else {
        Verdict::Open
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scaling_examples() {
        let two = qi(2);
        assert_eq!(scaling_total(2, two, two, two, qi(0)).unwrap(), q(1, 2));
        assert_eq!(scaling_total(3, two, two, two, qi(0)).unwrap(), q(1, 2));
        assert_eq!(scaling_total(2, two, two, two, qi(1)).unwrap(), q(3, 2));
        assert!(scaling_total(2, q(3, 2), two, two, qi(0)).is_err());
        assert!(scaling_total(1, two, two, two, qi(0)).is_err());
    }

    #[test]
    fn alpha_star_examples() {
        assert_eq!(alpha_star(2, qi(2), qi(2)).unwrap().value, qi(0));
        let a = alpha_star(2, qi(4), qi(4)).unwrap();
        assert_eq!((a.value, a.branch), (q(-3, 8), "scaling"));
        let a = alpha_star(3, qi(6), qi(6)).unwrap();
        assert_eq!((a.value, a.branch), (q(-1, 2), "floor"));
    }

    #[test]
    fn beta_minus_star_examples() {
        assert_eq!(beta_minus_star(3, qi(2), qi(2), qi(-1)).unwrap().value, qi(0));
        assert_eq!(beta_minus_star(3, qi(2), qi(2), qi(0)).unwrap().value, q(-1, 2));
        assert_eq!(beta_minus_star(2, qi(2), qi(2), qi(-1)).unwrap().value, q(1, 4));
        assert!(beta_minus_star(2, qi(2), qi(2), q(1, 2)).is_err());
        assert!(beta_minus_star(2, qi(2), qi(2), q(-3, 2)).is_err());
    }

    #[test]
    fn admissibility_examples() {
        assert!(wave_admissible(3, qi(4), qi(4)).unwrap());
        assert!(!wave_admissible(2, qi(2), qi(2)).unwrap());
        assert!(parse_q("inf").is_err());
        assert!(parse_q("∞").is_err());
    }

    #[test]
    fn equiv_and_gamma_examples() {
        assert_eq!(equiv_alpha(3, qi(0), qi(-1)).unwrap(), qi(0));
        assert_eq!(equiv_alpha(2, q(1, 4), qi(-1)).unwrap(), qi(0));
        assert_eq!(equiv_alpha(3, qi(0), qi(0)).unwrap(), q(1, 2));
        assert_eq!(gamma_decoupling(2, qi(2), qi(6)).unwrap().value, q(-1, 2));
        assert_eq!(gamma_decoupling(2, qi(2), qi(2)).unwrap().value, qi(0));
        let g = gamma_decoupling(3, qi(2), qi(2)).unwrap();
        assert_eq!((g.value, g.branch), (qi(0), "T0-upper"));
        assert!(gamma_decoupling(2, qi(4), qi(2)).is_err());
    }

    #[test]
    fn alpha_double_star_examples() {
        assert_eq!(alpha_double_star(3, qi(2), qi(4)).unwrap().value, q(-1, 2));
        assert!(alpha_double_star(3, qi(2), qi(4)).unwrap().boundary);
        assert_eq!(alpha_double_star(2, qi(2), qi(2)).unwrap().value, qi(0));
        assert_eq!(alpha_double_star(3, qi(8), qi(8)).unwrap().value, q(-1, 2));
    }

    #[test]
    fn parse_q_forms() {
        assert_eq!(parse_q("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_q("-1/2").unwrap(), q(-1, 2));
        assert_eq!(parse_q("3").unwrap(), qi(3));
        assert_eq!(parse_q("2.5e-1").unwrap(), q(1, 4));
        assert_eq!(parse_q("1e2").unwrap(), qi(100));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
        assert!(parse_q(".").is_err());
    }

    #[test]
    fn verdicts_including_open_threshold() {
        // d=2, (q,r)=(2,2) is not wave-admissible; the threshold beta_- = 1/4 is open.
        let t = ExponentTuple::scaling_consistent(2, qi(2), qi(2), qi(-1), q(1, 4)).unwrap();
        assert_eq!(smoothing_verdict(&t).unwrap(), Verdict::Open);
        let t = ExponentTuple::scaling_consistent(2, qi(2), qi(2), qi(-1), q(1, 3)).unwrap();
        assert_eq!(smoothing_verdict(&t).unwrap(), Verdict::Holds);
        let t = ExponentTuple::scaling_consistent(2, qi(2), qi(2), qi(-1), q(1, 5)).unwrap();
        assert_eq!(smoothing_verdict(&t).unwrap(), Verdict::Fails);
        // Wave-admissible: the threshold itself fails.
        let bm = beta_minus_star(3, qi(4), qi(4), qi(-1)).unwrap().value;
        let t = ExponentTuple::scaling_consistent(3, qi(4), qi(4), qi(-1), bm).unwrap();
        assert_eq!(smoothing_verdict(&t).unwrap(), Verdict::Fails);
    }

    fn lattice_exp() -> impl Strategy<Value = Q> {
        // 1/q on a lattice in (0, 1/2]
        (1i64..=24).prop_map(|k| Q::new(48, k))
    }

    proptest! {
        #[test]
        fn thresholds_are_complementary(d in 2u32..7, q_ in lattice_exp(), r in lattice_exp(), num in -40i64..40) {
            let total = scaling_total(d, q_, r, qi(2), qi(0)).unwrap();
            let bp_star = beta_plus_star(d, q_, r).unwrap().value;
            let bm_star = beta_minus_star_sphere(d, q_, r).unwrap().value;
            prop_assert_eq!(bp_star + bm_star, total);
            let bm = Q::new(num, 16);
            let bp = total - bm;
            prop_assert_eq!(bp < bp_star, bm > bm_star);
        }

        #[test]
        fn kappa_minus_one_is_the_sphere(d in 2u32..7, q_ in lattice_exp(), r in lattice_exp()) {
            let a = beta_minus_star(d, q_, r, qi(-1)).unwrap();
            let b = beta_minus_star_sphere(d, q_, r).unwrap();
            prop_assert_eq!(a.value, b.value);
        }

        #[test]
        fn equiv_alpha_maps_threshold_to_alpha_star(d in 2u32..7, q_ in lattice_exp(), r in lattice_exp(), k in -8i64..=0) {
            let kappa = Q::new(k, 8);
            let bm = beta_minus_star(d, q_, r, kappa).unwrap().value;
            prop_assert_eq!(equiv_alpha(d, bm, kappa).unwrap(), alpha_star(d, q_, r).unwrap().value);
        }

        #[test]
        fn gamma_at_p2_is_alpha_star(d in 2u32..7, q_ in lattice_exp()) {
            prop_assert_eq!(gamma_decoupling(d, qi(2), q_).unwrap().value, alpha_star(d, q_, q_).unwrap().value);
        }

        #[test]
        fn parse_roundtrip(n in -10_000i64..10_000, den in 1i64..500) {
            let x = Q::new(n, den);
            prop_assert_eq!(parse_q(&format!("{x}")).unwrap(), x);
        }
    }
}
