use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, out_of_range, Result};
use crate::exponent_calculus::sphere_area;
use crate::quadrature::{gauss_jacobi, gauss_legendre};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureKind {
    /// Surface measure on S^{d-1}.
    Sphere,
    /// w_kappa(v) dv with w_kappa = (1 - |v|^2)_+^kappa / Gamma(1 + kappa); kappa = -1 is half the
    /// surface measure.
    KappaBall { kappa: f64 },
}

/// Tensor rule used to place the nodes; also the container layout tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum NodeRule {
    /// theta_j = 2 pi j / n on S^1.
    Circle { n: usize },
    /// Gauss-Legendre in cos(theta) times equispaced azimuth on S^2.
    SphereGl { n_polar: usize, n_azimuth: usize },
    /// Gauss-Jacobi radii times a circle rule.
    BallCircle { n_radial: usize, n: usize },
    BallSphere { n_radial: usize, n_polar: usize, n_azimuth: usize },
}

impl NodeRule {
    pub fn layout(&self) -> [u32; 4] {
        let u = |x: usize| x as u32;
        match *self {
            NodeRule::Circle { n } => [1, u(n), 0, 0],
            NodeRule::SphereGl { n_polar, n_azimuth } => [2, u(n_polar), u(n_azimuth), 0],
            NodeRule::BallCircle { n_radial, n } => [3, u(n_radial), u(n), 0],
            NodeRule::BallSphere { n_radial, n_polar, n_azimuth } => [4, u(n_radial), u(n_polar), u(n_azimuth)],
        }
    }

    pub fn from_layout(l: [u32; 4]) -> Result<Self> {
        let u = |x: u32| x as usize;
        Ok(match l {
            [1, n, 0, 0] => NodeRule::Circle { n: u(n) },
            [2, p, a, 0] => NodeRule::SphereGl { n_polar: u(p), n_azimuth: u(a) },
            [3, r, n, 0] => NodeRule::BallCircle { n_radial: u(r), n: u(n) },
            [4, r, p, a] => NodeRule::BallSphere { n_radial: u(r), n_polar: u(p), n_azimuth: u(a) },
            _ => return invalid(format!("unknown velocity layout {l:?}")),
        })
    }

    pub fn len(&self) -> usize {
        match *self {
            NodeRule::Circle { n } => n,
            NodeRule::SphereGl { n_polar, n_azimuth } => n_polar * n_azimuth,
            NodeRule::BallCircle { n_radial, n } => n_radial * n,
            NodeRule::BallSphere { n_radial, n_polar, n_azimuth } => n_radial * n_polar * n_azimuth,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            NodeRule::Circle { .. } | NodeRule::BallCircle { .. } => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VelocityMeasure {
    pub d: usize,
    pub kind: MeasureKind,
    pub rule: NodeRule,
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

fn sphere_nodes(d: usize, n: usize) -> (NodeRule, Vec<[f64; 3]>, Vec<f64>) {
    if d == 2 {
        let nodes = (0..n)
            .map(|j| {
                let th = 2.0 * PI * j as f64 / n as f64;
                [th.cos(), th.sin(), 0.0]
            })
            .collect();
        (NodeRule::Circle { n }, nodes, vec![2.0 * PI / n as f64; n])
    } else {
        let na = 2 * n;
        let gl = gauss_legendre(n);
        let mut nodes = Vec::with_capacity(n * na);
        let mut weights = Vec::with_capacity(n * na);
        for (&z, &w) in gl.nodes.iter().zip(&gl.weights) {
            let s = (1.0 - z * z).max(0.0).sqrt();
            for j in 0..na {
                let ph = 2.0 * PI * j as f64 / na as f64;
                nodes.push([s * ph.cos(), s * ph.sin(), z]);
                weights.push(w * 2.0 * PI / na as f64);
            }
        }
        (NodeRule::SphereGl { n_polar: n, n_azimuth: na }, nodes, weights)
    }
}

fn check_d(d: usize) -> Result<()> {
    if !(2..=3).contains(&d) {
        return out_of_range("velocity dimension (need 2 or 3)", d);
    }
    Ok(())
}

impl VelocityMeasure {
    /// Surface measure with n angular nodes (d = 2) or n polar x 2n azimuthal nodes (d = 3).
    pub fn sphere(d: usize, n: usize) -> Result<Self> {
        check_d(d)?;
        if n < 2 {
            return out_of_range("angular node count", n);
        }
        let (rule, nodes, weights) = sphere_nodes(d, n);
        Ok(Self { d, kind: MeasureKind::Sphere, rule, nodes, weights })
    }

    /// w_kappa dv with n_radial Gauss-Jacobi radii and an n-node angular rule.
    pub fn kappa_ball(d: usize, kappa: f64, n_radial: usize, n: usize) -> Result<Self> {
        check_d(d)?;
        if !(-1.0..=0.0).contains(&kappa) {
            return out_of_range("kappa (need -1 <= kappa <= 0)", kappa);
        }
        if n < 2 || n_radial < 1 {
            return out_of_range("node counts", format!("{n_radial} x {n}"));
        }
        let kind = MeasureKind::KappaBall { kappa };
        let (arule, anodes, aweights) = sphere_nodes(d, n);
        if kappa == -1.0 {
            let weights = aweights.iter().map(|w| 0.5 * w).collect();
            return Ok(Self { d, kind, rule: arule, nodes: anodes, weights });
        }
        let gj = gauss_jacobi(n_radial, kappa, d as f64 - 1.0);
        let scale = 2f64.powf(-kappa - d as f64) / gamma(1.0 + kappa);
        let mut nodes = Vec::with_capacity(n_radial * anodes.len());
        let mut weights = Vec::with_capacity(n_radial * anodes.len());
        for (&t, &w) in gj.nodes.iter().zip(&gj.weights) {
            let s = 0.5 * (1.0 + t);
            let ws = w * scale * (1.0 + s).powf(kappa);
            for (v, &wa) in anodes.iter().zip(&aweights) {
                nodes.push([s * v[0], s * v[1], s * v[2]]);
                weights.push(ws * wa);
            }
        }
        let rule = match arule {
            NodeRule::Circle { n } => NodeRule::BallCircle { n_radial, n },
            NodeRule::SphereGl { n_polar, n_azimuth } => NodeRule::BallSphere { n_radial, n_polar, n_azimuth },
            _ => unreachable!(),
        };
        Ok(Self { d, kind, rule, nodes, weights })
    }

    /// Rebuilds a measure from stored nodes, validating them against the declared rule.
    pub fn from_parts(
        d: usize,
        kind: MeasureKind,
        rule: NodeRule,
        nodes: Vec<[f64; 3]>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        check_d(d)?;
        if rule.dim() != d || rule.len() != nodes.len() || nodes.len() != weights.len() || nodes.is_empty() {
            return invalid("velocity node table does not match its layout");
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return invalid("velocity weights must be positive");
        }
        for v in &nodes {
            let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            let on_sphere = matches!(rule, NodeRule::Circle { .. } | NodeRule::SphereGl { .. });
            if (on_sphere && (r - 1.0).abs() > 1e-12) || r > 1.0 + 1e-12 || (d == 2 && v[2] != 0.0) {
                return invalid("velocity node outside the measure's support");
            }
        }
        if let MeasureKind::KappaBall { kappa } = kind {
            if !(-1.0..=0.0).contains(&kappa) {
                return out_of_range("kappa (need -1 <= kappa <= 0)", kappa);
            }
        }
        Ok(Self { d, kind, rule, nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Exact mass of the continuum measure.
    pub fn exact_mass(&self) -> f64 {
        let d = self.d as f64;
        match self.kind {
            MeasureKind::Sphere => sphere_area(self.d as u32 - 1),
            MeasureKind::KappaBall { kappa } => {
                sphere_area(self.d as u32 - 1) * gamma(d / 2.0) / (2.0 * gamma(d / 2.0 + 1.0 + kappa))
            }
        }
    }

    /// kappa in the Radon closed form and the multiple of w_kappa this measure equals.
    pub fn radon_parameters(&self) -> (f64, f64) {
        match self.kind {
            MeasureKind::Sphere => (-1.0, 2.0),
            MeasureKind::KappaBall { kappa } => (kappa, 1.0),
        }
    }

    /// The measure is invariant under rotations: nodes and weights coincide with the canonical
    /// rule of its kind (tables read from disk may carry arbitrary weights).
    pub fn is_radial(&self) -> bool {
        let canon = match (self.kind, self.rule) {
            (MeasureKind::Sphere, NodeRule::Circle { n }) => Self::sphere(2, n),
            (MeasureKind::Sphere, NodeRule::SphereGl { n_polar, n_azimuth }) if n_azimuth == 2 * n_polar => Self::sphere(3, n_polar),
            (MeasureKind::KappaBall { kappa }, NodeRule::Circle { n }) if kappa == -1.0 => Self::kappa_ball(2, kappa, 1, n),
            (MeasureKind::KappaBall { kappa }, NodeRule::SphereGl { n_polar, n_azimuth }) if kappa == -1.0 && n_azimuth == 2 * n_polar => {
                Self::kappa_ball(3, kappa, 1, n_polar)
            }
            (MeasureKind::KappaBall { kappa }, NodeRule::BallCircle { n_radial, n }) => Self::kappa_ball(2, kappa, n_radial, n),
            (MeasureKind::KappaBall { kappa }, NodeRule::BallSphere { n_radial, n_polar, n_azimuth }) if n_azimuth == 2 * n_polar => {
                Self::kappa_ball(3, kappa, n_radial, n_polar)
            }
            _ => return false,
        };
        let Ok(c) = canon else { return false };
        c.rule == self.rule
            && c.weights.iter().zip(&self.weights).all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs())
            && c.nodes.iter().zip(&self.nodes).all(|(a, b)| (0..3).all(|i| (a[i] - b[i]).abs() <= 1e-12))
    }

    /// Nodes lie on the unit sphere (surface measure or its kappa = -1 multiple).
    pub fn on_sphere(&self) -> bool {
        matches!(self.rule, NodeRule::Circle { .. } | NodeRule::SphereGl { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(m: &VelocityMeasure, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
        m.nodes.iter().zip(&m.weights).map(|(v, w)| w * f(v)).sum()
    }

    #[test]
    fn sphere_nodes_on_sphere_and_masses() {
        for d in 2..=3 {
            let m = VelocityMeasure::sphere(d, 12).unwrap();
            for v in &m.nodes {
                assert!(((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs() < 1e-14);
            }
            assert!((m.total_mass() - m.exact_mass()).abs() < 1e-12);
        }
        let m = VelocityMeasure::sphere(3, 8).unwrap();
        // int z^2 dsigma = 4 pi / 3
        assert!((integrate(&m, |v| v[2] * v[2]) - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_ball_weights_reproduce_w_kappa() {
        // int |v|^{2j} w_kappa dv = |S^{d-1}| B(d/2 + j, 1 + kappa) / (2 Gamma(1 + kappa)).
        for d in 2..=3usize {
            for &kappa in &[-0.75, -0.5, -0.2, 0.0] {
                let m = VelocityMeasure::kappa_ball(d, kappa, 10, 8).unwrap();
                for j in 0..4 {
                    let a = d as f64 / 2.0 + j as f64;
                    let b = 1.0 + kappa;
                    let exact = sphere_area(d as u32 - 1) * gamma(a) * gamma(b) / gamma(a + b) / (2.0 * gamma(b));
                    let num = integrate(&m, |v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).powi(j));
                    assert!((num - exact).abs() < 1e-8 * exact, "{d} {kappa} {j}");
                }
                // odd and mixed moments vanish, x^2 y^2 moment by symmetry
                assert!(integrate(&m, |v| v[0] * v[1]).abs() < 1e-12);
                assert!((m.total_mass() - m.exact_mass()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn kappa_minus_one_is_half_sphere() {
        let b = VelocityMeasure::kappa_ball(3, -1.0, 4, 6).unwrap();
        let s = VelocityMeasure::sphere(3, 6).unwrap();
        assert!((b.total_mass() - 0.5 * s.total_mass()).abs() < 1e-13);
        assert!((b.exact_mass() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn layout_roundtrip_and_validation() {
        let m = VelocityMeasure::kappa_ball(3, -0.5, 3, 4).unwrap();
        assert_eq!(NodeRule::from_layout(m.rule.layout()).unwrap(), m.rule);
        assert!(VelocityMeasure::from_parts(3, m.kind, m.rule, m.nodes.clone(), m.weights.clone()).is_ok());
        let mut bad = m.weights.clone();
        bad[0] = -1.0;
        assert!(VelocityMeasure::from_parts(3, m.kind, m.rule, m.nodes.clone(), bad).is_err());
        assert!(VelocityMeasure::kappa_ball(2, 0.5, 3, 4).is_err());
        assert!(NodeRule::from_layout([9, 0, 0, 0]).is_err());
    }
}
