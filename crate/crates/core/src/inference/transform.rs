//! Unconstrained reparametrisations of θ for the optimisers.

use super::DomainMode;
use crate::power_series::Family;
use serde::{Deserialize, Serialize};

/// Smooth bijection from t ∈ ℝ onto an open θ interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThetaMap {
    /// θ = lo + (hi − lo)/(1 + e^{−t}).
    Logistic { lo: f64, hi: f64 },
    /// θ = lo + e^t.
    ExpFrom { lo: f64 },
    /// θ = hi − e^t.
    OneMinusExp { hi: f64 },
    Identity,
}

/// |t| beyond which a fit is reported as sitting on the domain boundary.
pub const BOUNDARY_T: f64 = 12.0;

impl ThetaMap {
    pub fn for_family(family: Family, mode: DomainMode) -> Self {
        let d = mode.domain(family);
        match (d.lower.is_finite(), d.upper.is_finite()) {
            (true, true) => ThetaMap::Logistic { lo: d.lower, hi: d.upper },
            (true, false) => ThetaMap::ExpFrom { lo: d.lower },
            (false, true) => ThetaMap::OneMinusExp { hi: d.upper },
            (false, false) => ThetaMap::Identity,
        }
    }

    pub fn theta(&self, t: f64) -> f64 {
        match *self {
            ThetaMap::Logistic { lo, hi } => lo + (hi - lo) / (1.0 + (-t).exp()),
            ThetaMap::ExpFrom { lo } => lo + t.exp(),
            ThetaMap::OneMinusExp { hi } => hi - t.exp(),
            ThetaMap::Identity => t,
        }
    }

    pub fn inv(&self, theta: f64) -> f64 {
        match *self {
            ThetaMap::Logistic { lo, hi } => {
                let p = (theta - lo) / (hi - lo);
                (p / (1.0 - p)).ln()
            }
            ThetaMap::ExpFrom { lo } => (theta - lo).ln(),
            ThetaMap::OneMinusExp { hi } => (hi - theta).ln(),
            ThetaMap::Identity => theta,
        }
    }

    pub fn dtheta_dt(&self, t: f64) -> f64 {
        match *self {
            ThetaMap::Logistic { lo, hi } => {
                let e = (-t.abs()).exp();
                (hi - lo) * e / ((1.0 + e) * (1.0 + e))
            }
            ThetaMap::ExpFrom { .. } => t.exp(),
            ThetaMap::OneMinusExp { .. } => -t.exp(),
            ThetaMap::Identity => 1.0,
        }
    }

    /// True when t is so far out that θ is numerically at a finite edge.
    pub fn is_boundary(&self, t: f64) -> bool {
        match *self {
            ThetaMap::Logistic { .. } => t.abs() > BOUNDARY_T,
            ThetaMap::ExpFrom { .. } | ThetaMap::OneMinusExp { .. } => t < -BOUNDARY_T,
            ThetaMap::Identity => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_invert_and_differentiate() {
        let maps = [
            ThetaMap::for_family(Family::Geometric, DomainMode::Proper),
            ThetaMap::for_family(Family::Poisson, DomainMode::Proper),
            ThetaMap::for_family(Family::Geometric, DomainMode::Extended),
            ThetaMap::for_family(Family::Binomial { m: 3 }, DomainMode::Extended),
            ThetaMap::for_family(Family::Poisson, DomainMode::Extended),
        ];
        assert_eq!(maps[0], ThetaMap::Logistic { lo: 0.0, hi: 1.0 });
        assert_eq!(maps[1], ThetaMap::ExpFrom { lo: 0.0 });
        assert_eq!(maps[2], ThetaMap::OneMinusExp { hi: 1.0 });
        assert_eq!(maps[3], ThetaMap::ExpFrom { lo: -1.0 });
        assert_eq!(maps[4], ThetaMap::Identity);
        for m in maps {
            for t in [-3.0, -0.4, 0.0, 1.1, 2.5] {
                let th = m.theta(t);
                assert!((m.inv(th) - t).abs() < 1e-12);
                let h = 1e-6;
                let fd = (m.theta(t + h) - m.theta(t - h)) / (2.0 * h);
                assert!((m.dtheta_dt(t) - fd).abs() < 1e-8);
            }
        }
    }
}
