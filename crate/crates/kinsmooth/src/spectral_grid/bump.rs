//! Smooth cutoffs supported in [1/2, 2] and the dyadic partition of unity built from them.

use serde::Serialize;

/// exp(-1/(1-s^2)) in the variable s = log2(lambda); supported in (1/2, 2), peak 1/e at 1.
pub fn raw_bump(lambda: f64) -> f64 {
    if !(lambda > 0.5 && lambda < 2.0) {
        return 0.0;
    }
    let s = lambda.log2();
    let q = 1.0 - s * s;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

/// eta(lambda) = b(lambda) / (b(lambda/2) + b(lambda) + b(2 lambda)); sum_j eta(2^-j lambda) = 1.
pub fn eta(lambda: f64) -> f64 {
    let b = raw_bump(lambda);
    if b == 0.0 {
        return 0.0;
    }
    b / (raw_bump(0.5 * lambda) + b + raw_bump(2.0 * lambda))
}

/// Equal to 1 on [1/2, 2], supported in (1/4, 4).
pub fn annulus_plateau(lambda: f64) -> f64 {
    eta(2.0 * lambda) + eta(lambda) + eta(0.5 * lambda)
}

/// Equal to 1 on [0, 2], vanishing on [4, inf).
pub fn low_plateau(lambda: f64) -> f64 {
    let l = lambda.abs();
    if l <= 2.0 {
        1.0
    } else if l >= 4.0 {
        0.0
    } else {
        1.0 - eta(0.25 * l)
    }
}

/// A cutoff profile; `partition` selects the normalised eta over the raw bump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BumpProfile {
    pub lo: f64,
    pub hi: f64,
    pub partition: bool,
}

impl Default for BumpProfile {
    fn default() -> Self {
        Self { lo: 0.5, hi: 2.0, partition: true }
    }
}

impl BumpProfile {
    pub fn raw() -> Self {
        Self { partition: false, ..Self::default() }
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        if self.partition {
            eta(lambda)
        } else {
            raw_bump(lambda) * std::f64::consts::E
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn support_and_peak() {
        assert_eq!(eta(0.5), 0.0);
        assert_eq!(eta(2.0), 0.0);
        assert_eq!(eta(1.0), 1.0);
        assert_eq!(eta(0.3), 0.0);
        assert!((BumpProfile::raw().eval(1.0) - 1.0).abs() < 1e-15);
        for i in 0..=100 {
            let l = 0.5 + 1.5 * i as f64 / 100.0;
            assert!((annulus_plateau(l) - 1.0).abs() < 1e-15, "{l}");
            assert_eq!(low_plateau(2.0 * i as f64 / 100.0), 1.0);
        }
        assert_eq!(annulus_plateau(4.0), 0.0);
        assert_eq!(low_plateau(4.0), 0.0);
    }

    proptest! {
        #[test]
        fn dyadic_partition_of_unity(e in -20.0f64..20.0) {
            let lambda = 2f64.powf(e);
            let s: f64 = (-30..=30).map(|j| eta(2f64.powi(-j) * lambda)).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn low_plateau_is_smooth_partition(l in 0.0f64..10.0) {
            let tail: f64 = (2..8).map(|j| eta(2f64.powi(-j) * l)).sum();
            prop_assert!((low_plateau(l) + tail - 1.0).abs() < 1e-12);
        }
    }
}
