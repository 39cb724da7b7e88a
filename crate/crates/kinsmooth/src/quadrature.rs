//! One-dimensional quadrature rules shared by every module.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Nodes and weights affinely mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

type RuleKey = (usize, u64, u64);

fn cache() -> &'static Mutex<HashMap<RuleKey, Arc<Rule>>> {
    static CACHE: OnceLock<Mutex<HashMap<RuleKey, Arc<Rule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss-Legendre rule with `n` nodes (cached).
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    gauss_jacobi(n, 0.0, 0.0)
}

/// Gauss-Jacobi rule for the weight (1-x)^a (1+x)^b on [-1, 1], a, b > -1 (cached).
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Arc<Rule> {
    assert!(n >= 1 && a > -1.0 && b > -1.0, "bad Gauss-Jacobi parameters");
    let key = (n, a.to_bits(), b.to_bits());
    if let Some(r) = cache().lock().unwrap().get(&key) {
        return r.clone();
    }
    let rule = Arc::new(if a == 0.0 && b == 0.0 { legendre_rule(n) } else { jacobi_rule(n, a, b) });
    cache().lock().unwrap().insert(key, rule.clone());
    rule
}

fn legendre_rule(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_pd(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_pd(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

fn legendre_pd(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Recurrence coefficients (alpha_k, beta_k) of the monic Jacobi polynomials.
fn jacobi_recurrence(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut al = vec![0.0; n];
    let mut be = vec![0.0; n];
    let ab = a + b;
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        al[k] = if k == 0 { (b - a) / (ab + 2.0) } else { (b * b - a * a) / (s * (s + 2.0)) };
        be[k] = if k == 0 {
            (ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
                - ln_gamma(ab + 2.0)
        } else if k == 1 {
            4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
        };
    }
    be[0] = be[0].exp();
    (al, be)
}

fn jacobi_rule(n: usize, a: f64, b: f64) -> Rule {
    let (al, be) = jacobi_recurrence(n + 1, a, b);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        m[(k, k)] = al[k];
        if k + 1 < n {
            let s = be[k + 1].sqrt();
            m[(k, k + 1)] = s;
            m[(k + 1, k)] = s;
        }
    }
    let eig = SymmetricEigen::new(m);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // Newton polish on the orthonormal recurrence, then Christoffel weights.
    let orth = |x: f64| -> (f64, f64, f64) {
        let mut p_prev = 0.0;
        let mut d_prev = 0.0;
        let mut p = 1.0 / be[0].sqrt();
        let mut d = 0.0;
        let mut sumsq = p * p;
        for k in 0..n {
            let sb = be[k + 1].sqrt();
            let sbk = if k == 0 { 0.0 } else { be[k].sqrt() };
            let p_next = ((x - al[k]) * p - sbk * p_prev) / sb;
            let d_next = (p + (x - al[k]) * d - sbk * d_prev) / sb;
            p_prev = p;
            d_prev = d;
            p = p_next;
            d = d_next;
            if k + 1 < n {
                sumsq += p * p;
            }
        }
        (p, d, sumsq)
    };
    let mut weights = vec![0.0; n];
    for (x, w) in nodes.iter_mut().zip(weights.iter_mut()) {
        for _ in 0..3 {
            let (p, d, _) = orth(*x);
            if d == 0.0 || !d.is_finite() {
                break;
            }
            let nx = *x - p / d;
            if nx.abs() < 1.0 {
                *x = nx;
            }
        }
        *w = 1.0 / orth(*x).2;
    }
    Rule { nodes, weights }
}

/// Double-exponential (tanh-sinh) quadrature of f over [a, b].
///
/// The integrand receives `(x, x - a, b - x)` so that endpoint singularities can be
/// evaluated without cancellation.
pub fn tanh_sinh<F: FnMut(f64, f64, f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a > b {
        return -tanh_sinh_impl(&mut |x, da, db| f(x, db, da), b, a, tol);
    }
    tanh_sinh_impl(&mut f, a, b, tol)
}

fn tanh_sinh_impl(f: &mut dyn FnMut(f64, f64, f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let half = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    let len = b - a;
    let pi2 = std::f64::consts::FRAC_PI_2;
    let tmax = 6.5;
    let mut eval = |t: f64| -> f64 {
        let u = pi2 * t.sinh();
        let cu = u.cosh();
        let w = pi2 * t.cosh() / (cu * cu);
        if w == 0.0 || !w.is_finite() {
            return 0.0;
        }
        let da = len / (1.0 + (-2.0 * u).exp());
        let db = len / (1.0 + (2.0 * u).exp());
        if da == 0.0 || db == 0.0 {
            return 0.0;
        }
        let x = if t < 0.0 { a + da } else { b - db };
        let x = if t == 0.0 { c } else { x };
        let v = f(x, da, db);
        if v.is_finite() {
            w * v * half
        } else {
            0.0
        }
    };
    let mut h = 1.0;
    let mut sum = eval(0.0);
    let mut k = 1;
    while k as f64 * h <= tmax {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut est = sum * h;
    for _level in 0..12 {
        h *= 0.5;
        let mut add = 0.0;
        let mut k = 1;
        while k as f64 * h <= tmax {
            let t = k as f64 * h;
            add += eval(t) + eval(-t);
            k += 2;
        }
        sum += add;
        let new = sum * h;
        let diff = (new - est).abs();
        est = new;
        if diff <= tol * new.abs() || diff < 1e-300 {
            break;
        }
    }
    est
}

/// Convenience wrapper for smooth or mildly singular integrands of x alone.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    tanh_sinh(|x, _, _| f(x), a, b, tol)
}

/// Golden-section maximisation of f over [a, b]; returns (argmax, max).
/// Endpoints are compared against the interior candidate, ties go to the endpoint.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    let xm = 0.5 * (lo + hi);
    let mut best = (xm, f(xm));
    for e in [a, b] {
        let fe = f(e);
        if fe >= best.1 {
            best = (e, fe);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        let r = gauss_legendre(12);
        for p in 0..24 {
            let q: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "p={p} {q} {exact}");
        }
    }

    #[test]
    fn gauss_jacobi_moments() {
        // (1-x)^a (1+x)^b moments against 1 and x: closed forms from the beta function.
        for &(a, b) in &[(-0.5, -0.5), (0.25, -0.75), (-0.9, 0.0), (1.5, 2.0)] {
            let r = gauss_jacobi(20, a, b);
            let m0 = 2f64.powf(a + b + 1.0)
                * (ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(a + b + 2.0)).exp();
            let s0: f64 = r.weights.iter().sum();
            assert!((s0 / m0 - 1.0).abs() < 1e-13, "{a} {b}");
            let m1 = m0 * (b - a) / (a + b + 2.0);
            let s1: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x).sum();
            assert!((s1 - m1).abs() < 1e-13);
        }
        // Chebyshev weight: nodes are cos((2i-1)pi/2n), equal weights pi/n.
        let r = gauss_jacobi(7, -0.5, -0.5);
        for (i, x) in r.nodes.iter().rev().enumerate() {
            let c = ((2.0 * i as f64 + 1.0) * std::f64::consts::PI / 14.0).cos();
            assert!((x - c).abs() < 1e-14);
            assert!((r.weights[i] - std::f64::consts::PI / 7.0).abs() < 1e-14);
        }
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        let v = tanh_sinh(|_, da, _| da.powf(-0.5), 0.0, 1.0, 1e-13);
        assert!((v - 2.0).abs() < 1e-12);
        let v = tanh_sinh(|_, _, db| db.powf(-0.9), 0.0, 2.0, 1e-13);
        assert!((v - 10.0 * 2f64.powf(0.1)).abs() < 1e-10, "{v}");
        let v = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-14);
        assert!((v - 2.0).abs() < 1e-14);
        let v = integrate(|x| x, 1.0, 0.0, 1e-14);
        assert!((v + 0.5).abs() < 1e-15);
    }

    #[test]
    fn golden_section_finds_interior_and_endpoint_maxima() {
        let (x, v) = golden_section_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8 && v.abs() < 1e-15);
        let (x, _) = golden_section_max(|x| x, 0.0, 1.0, 1e-10);
        assert_eq!(x, 1.0);
    }
}
