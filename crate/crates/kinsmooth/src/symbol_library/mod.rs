//! Fourier multipliers m(xi, tau) used throughout: the hyperbolic derivatives D+/D-,
//! cone multipliers, dyadic cone pieces, the measure-adapted multipliers m_kappa, and
//! the half-wave propagator.

mod grammar;

use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{out_of_range, Result};
use crate::exponent_calculus::sphere_area;
use crate::spectral_grid::{eta, norm3, spatial_fft, Domain, Multiplier, SpatialField, C64};

pub use grammar::parse_symbol;

/// Smallest admissible dyadic cone index.
pub const K0: i32 = 3;

/// x^e with 0^0 = 1 and 0^negative = infinity.
fn pow0(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        x.powf(e)
    }
}

/// psi_alpha(s) = s^alpha eta(s): sum_k 2^{-k alpha} psi_alpha(2^k s) = s^alpha exactly.
pub fn psi_alpha(alpha: f64, s: f64) -> f64 {
    let e = eta(s);
    if e == 0.0 {
        0.0
    } else {
        s.powf(alpha) * e
    }
}

/// Cutoff in |xi|.
pub fn phi(r: f64) -> f64 {
    eta(r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Symbol {
    One,
    /// (|xi| + |tau|)^beta
    DPlus { beta: f64 },
    /// ||xi| - |tau||^beta
    DMinus { beta: f64 },
    /// (1 - tau^2/|xi|^2)_+^alpha phi(|xi|)
    Cone { alpha: f64 },
    /// 1 on |tau| <= |xi| (boundary included)
    ConeIndicator,
    /// 1_{tau > 0} phi(|xi|) psi_alpha(2^k (|xi| - tau))
    DyadicCone { k: i32, alpha: f64 },
    /// sum_{k <= k0 - 1} 2^{-k beta} phi(|xi|) psi_beta(2^k (|xi| - tau))
    M0 { beta_minus: f64, k0: i32 },
    /// Closed-form measure-adapted multiplier for mu_kappa.
    MKappa { d: u32, kappa: f64, beta_plus: f64, beta_minus: f64 },
    /// ((1/|xi|) R w(-tau/|xi|))^{1/2} with R w = scale * C (1 - r^2)_+^{kappa + (d-1)/2}.
    RadonRoot { d: u32, kappa: f64, scale: f64 },
    Product(Vec<Symbol>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Locus {
    /// |tau| = |xi|
    Cone,
    /// xi = 0, tau = 0
    Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Singularity {
    pub locus: Locus,
    pub exponent: f64,
}

/// Intersection of elementary support regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct Support {
    pub cone: bool,
    pub annulus: bool,
    pub tau_positive: bool,
    /// |xi| - tau in [lo, hi]
    pub gap: Option<(f64, f64)>,
}

impl Support {
    fn meet(self, o: Support) -> Support {
        let gap = match (self.gap, o.gap) {
            (Some(a), Some(b)) => Some((a.0.max(b.0), a.1.min(b.1))),
            (a, None) => a,
            (None, b) => b,
        };
        Support {
            cone: self.cone || o.cone,
            annulus: self.annulus || o.annulus,
            tau_positive: self.tau_positive || o.tau_positive,
            gap,
        }
    }

    /// Most specific region tag.
    pub fn tag(&self) -> &'static str {
        if self.gap.is_some() && self.tau_positive {
            "dyadic shell"
        } else if self.cone {
            "cone"
        } else if self.annulus {
            "annulus"
        } else {
            "all"
        }
    }

    /// Closed containment test (boundaries included).
    pub fn contains(&self, r: f64, tau: f64) -> bool {
        (!self.cone || tau.abs() <= r)
            && (!self.annulus || (0.5..=2.0).contains(&r))
            && (!self.tau_positive || tau >= 0.0)
            && self.gap.is_none_or(|(lo, hi)| (lo..=hi).contains(&(r - tau)))
    }

    /// tau-interval of the support at fixed |xi| = r, if nonempty.
    pub fn tau_interval(&self, r: f64) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        if self.annulus && !(0.5..=2.0).contains(&r) {
            return None;
        }
        if self.cone {
            lo = -r;
            hi = r;
        }
        if self.tau_positive {
            lo = lo.max(0.0);
        }
        if let Some((glo, ghi)) = self.gap {
            lo = lo.max(r - ghi);
            hi = hi.min(r - glo);
        }
        (lo < hi).then_some((lo, hi))
    }
}

impl Symbol {
    pub fn product(terms: Vec<Symbol>) -> Symbol {
        let mut flat = Vec::new();
        for t in terms {
            match t {
                Symbol::Product(v) => flat.extend(v),
                Symbol::One => {}
                t => flat.push(t),
            }
        }
        match flat.len() {
            0 => Symbol::One,
            1 => flat.pop().unwrap(),
            _ => Symbol::Product(flat),
        }
    }

    /// Value at |xi| = r, tau.
    pub fn eval(&self, r: f64, tau: f64) -> f64 {
        match *self {
            Symbol::One => 1.0,
            Symbol::DPlus { beta } => pow0(r + tau.abs(), beta),
            Symbol::DMinus { beta } => pow0((r - tau.abs()).abs(), beta),
            Symbol::Cone { alpha } => {
                let p = phi(r);
                if p == 0.0 || tau.abs() > r {
                    0.0
                } else {
                    pow0(1.0 - (tau / r).powi(2), alpha) * p
                }
            }
            Symbol::ConeIndicator => (tau.abs() <= r) as u8 as f64,
            Symbol::DyadicCone { k, alpha } => {
                if tau <= 0.0 {
                    return 0.0;
                }
                let p = phi(r);
                if p == 0.0 {
                    return 0.0;
                }
                p * psi_alpha(alpha, 2f64.powi(k) * (r - tau))
            }
            Symbol::M0 { beta_minus, k0 } => m0_terms(beta_minus, k0, r, tau).0,
            Symbol::MKappa { d, kappa, beta_plus, beta_minus } => {
                if r == 0.0 || tau.abs() > r {
                    return 0.0;
                }
                let df = d as f64;
                let alpha = beta_minus + kappa / 2.0 + (df - 1.0) / 4.0;
                let c = sphere_area(d - 2) * gamma((df - 1.0) / 2.0) / (2.0 * gamma((df + 1.0) / 2.0 + kappa));
                let x = tau.abs() / r;
                c.sqrt()
                    * r.powf(beta_plus + beta_minus - 0.5)
                    * (1.0 + x).powf(beta_plus - beta_minus)
                    * pow0(1.0 - x * x, alpha)
            }
            Symbol::RadonRoot { d, kappa, scale } => {
                if r == 0.0 || tau.abs() > r {
                    return 0.0;
                }
                let c = -tau / r;
                let rw = scale * crate::radon_duality::radon_kappa_closed_unchecked(d, kappa, c);
                (rw / r).sqrt()
            }
            Symbol::Product(ref v) => {
                let mut p = 1.0;
                for s in v {
                    p *= s.eval(r, tau);
                    if p == 0.0 {
                        return 0.0;
                    }
                }
                p
            }
        }
    }

    pub fn support(&self) -> Support {
        let none = Support::default();
        match *self {
            Symbol::One | Symbol::DPlus { .. } | Symbol::DMinus { .. } => none,
            Symbol::Cone { .. } => Support { cone: true, annulus: true, ..none },
            Symbol::ConeIndicator | Symbol::MKappa { .. } | Symbol::RadonRoot { .. } => Support { cone: true, ..none },
            Symbol::DyadicCone { k, .. } => Support {
                annulus: true,
                tau_positive: true,
                gap: Some((2f64.powi(-k - 1), 2f64.powi(-k + 1))),
                ..none
            },
            Symbol::M0 { k0, .. } => Support { annulus: true, gap: Some((2f64.powi(-k0), f64::INFINITY)), ..none },
            Symbol::Product(ref v) => v.iter().fold(none, |acc, s| acc.meet(s.support())),
        }
    }

    pub fn singularities(&self) -> Vec<Singularity> {
        let mut out = Vec::new();
        match *self {
            Symbol::DPlus { beta } if beta < 0.0 => out.push(Singularity { locus: Locus::Origin, exponent: beta }),
            Symbol::DMinus { beta } if beta < 0.0 => out.push(Singularity { locus: Locus::Cone, exponent: beta }),
            Symbol::Cone { alpha } if alpha < 0.0 => out.push(Singularity { locus: Locus::Cone, exponent: alpha }),
            Symbol::MKappa { d, kappa, beta_plus, beta_minus } => {
                let alpha = beta_minus + kappa / 2.0 + (d as f64 - 1.0) / 4.0;
                if alpha < 0.0 {
                    out.push(Singularity { locus: Locus::Cone, exponent: alpha });
                }
                if beta_plus + beta_minus - 0.5 < 0.0 {
                    out.push(Singularity { locus: Locus::Origin, exponent: beta_plus + beta_minus - 0.5 });
                }
            }
            Symbol::RadonRoot { d, kappa, .. } => {
                let e = (kappa + (d as f64 - 1.0) / 2.0) / 2.0;
                if e < 0.0 {
                    out.push(Singularity { locus: Locus::Cone, exponent: e });
                }
                out.push(Singularity { locus: Locus::Origin, exponent: -0.5 });
            }
            Symbol::Product(ref v) => {
                for s in v {
                    out.extend(s.singularities());
                }
            }
            _ => {}
        }
        out
    }

    /// Total power of (|xi| - |tau|) carried near the cone; drives quadrature weights.
    pub fn cone_exponent(&self) -> f64 {
        match *self {
            Symbol::DMinus { beta } => beta,
            Symbol::Cone { alpha } => alpha,
            Symbol::MKappa { d, kappa, beta_minus, .. } => beta_minus + kappa / 2.0 + (d as f64 - 1.0) / 4.0,
            Symbol::RadonRoot { d, kappa, .. } => (kappa + (d as f64 - 1.0) / 2.0) / 2.0,
            Symbol::Product(ref v) => v.iter().map(|s| s.cone_exponent()).sum(),
            _ => 0.0,
        }
    }
}

impl Multiplier for Symbol {
    fn value(&self, xi: &[f64; 3], tau: f64) -> f64 {
        self.eval(norm3(xi), tau)
    }
    fn cone_singular(&self) -> bool {
        self.singularities().iter().any(|s| s.locus == Locus::Cone)
    }
}

pub fn d_plus_symbol(beta_plus: f64) -> Symbol {
    Symbol::DPlus { beta: beta_plus }
}

pub fn d_minus_symbol(beta_minus: f64) -> Symbol {
    Symbol::DMinus { beta: beta_minus }
}

pub fn cone_symbol(alpha: f64) -> Result<Symbol> {
    if !(alpha > -1.0) {
        return out_of_range("cone order alpha (need > -1)", alpha);
    }
    Ok(Symbol::Cone { alpha })
}

pub fn dyadic_cone_symbol(k: i32) -> Result<Symbol> {
    dyadic_cone_symbol_alpha(k, 0.0)
}

/// Dyadic piece with psi = psi_alpha, so that the decomposition of s^alpha is exact.
pub fn dyadic_cone_symbol_alpha(k: i32, alpha: f64) -> Result<Symbol> {
    if k < K0 {
        return out_of_range("dyadic index k (need k >= k0)", k);
    }
    Ok(Symbol::DyadicCone { k, alpha })
}

pub fn m0_symbol(beta_minus: f64, k0: i32) -> Result<Symbol> {
    if k0 < 1 {
        return out_of_range("k0 (need >= 1)", k0);
    }
    Ok(Symbol::M0 { beta_minus, k0 })
}

/// Value of m0 and the number of nonzero dyadic terms at (|xi|, tau).
pub fn m0_terms(beta_minus: f64, k0: i32, r: f64, tau: f64) -> (f64, usize) {
    let p = phi(r);
    let s = r - tau;
    if p == 0.0 || s <= 0.0 {
        return (0.0, 0);
    }
    // psi(2^k s) is nonzero only for 2^k s in (1/2, 2).
    let kc = (-s.log2()).round() as i32;
    let mut v = 0.0;
    let mut n = 0;
    for k in (kc - 2)..=(kc + 2).min(k0 - 1) {
        let t = 2f64.powi(-k).powf(beta_minus) * psi_alpha(beta_minus, 2f64.powi(k) * s);
        if t != 0.0 {
            v += t;
            n += 1;
        }
    }
    (p * v, n)
}

pub fn m_kappa_symbol(d: u32, kappa: f64, beta_plus: f64, beta_minus: f64) -> Result<Symbol> {
    if !(-1.0..=0.0).contains(&kappa) {
        return out_of_range("kappa (need -1 <= kappa <= 0)", kappa);
    }
    if d < 2 {
        return out_of_range("dimension d", d);
    }
    Ok(Symbol::MKappa { d, kappa, beta_plus, beta_minus })
}

/// Partial sums of sum_k 2^{-k alpha} psi_alpha(2^k s) over a window around -log2 s.
pub fn mono_decompose(alpha: f64, s: f64) -> Result<Vec<f64>> {
    if !(s > 0.0 && s.is_finite()) {
        return out_of_range("s (need s > 0)", s);
    }
    let c = (-s.log2()).round() as i32;
    let mut acc = 0.0;
    Ok(((c - 4)..=(c + 4))
        .map(|k| {
            acc += 2f64.powi(-k).powf(alpha) * psi_alpha(alpha, 2f64.powi(k) * s);
            acc
        })
        .collect())
}

/// U(t) h(x) = int e^{i(x.xi + t|xi|)} h^(xi) dxi (no (2 pi)^{-d}), returned in physical space.
pub fn half_wave(h: &SpatialField, t: f64) -> Result<SpatialField> {
    let hf = match h.domain {
        Domain::Physical => h.forward()?,
        Domain::Frequency => h.clone(),
    };
    let g = hf.grid;
    let c = (2.0 * PI).powi(g.d as i32);
    let mut s = hf.samples;
    for (i, z) in s.iter_mut().enumerate() {
        let r = norm3(&g.xi(i));
        *z *= C64::from_polar(c, t * r);
    }
    spatial_fft(&g, &mut s, true);
    Ok(SpatialField { grid: g, samples: s, domain: Domain::Physical })
}
