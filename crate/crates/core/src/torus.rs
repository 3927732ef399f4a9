//! Points on the unit torus `[0, 1)`.

use serde::{Deserialize, Serialize};

/// Reduce `x` modulo 1 into `[0, 1)`.
#[inline]
pub fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed minimal-image displacement `b - a` on the torus, in `[-1/2, 1/2)`.
#[inline]
pub fn min_image(d: f64) -> f64 {
    let w = wrap(d);
    if w >= 0.5 {
        w - 1.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorusPoint(f64);

impl TorusPoint {
    pub fn new(x: f64) -> Self {
        TorusPoint(wrap(x))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Shortest distance between two points on the torus, in `[0, 1/2]`.
    pub fn distance(self, other: TorusPoint) -> f64 {
        min_image(self.0 - other.0).abs()
    }
}

impl From<f64> for TorusPoint {
    fn from(x: f64) -> Self {
        TorusPoint::new(x)
    }
}

/// The sawtooth `nu((a - b) mod 1)`: the identity on `[0, 1)`, discontinuous
/// at coincidence.
#[inline]
pub fn torus_nu(a: TorusPoint, b: TorusPoint) -> f64 {
    wrap(a.0 - b.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nu_examples() {
        let p = |x| TorusPoint::new(x);
        assert!((torus_nu(p(0.7), p(0.2)) - 0.5).abs() < 1e-15);
        assert!((torus_nu(p(0.2), p(0.7)) - 0.5).abs() < 1e-15);
        assert_eq!(torus_nu(p(0.3), p(0.3)), 0.0);
    }

    #[test]
    fn wrap_tiny_negative_stays_below_one() {
        let w = wrap(-1e-20);
        assert!((0.0..1.0).contains(&w));
        assert_eq!(TorusPoint::new(1.0).value(), 0.0);
        assert!((TorusPoint::new(-0.25).value() - 0.75).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn nu_antisymmetry(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (pa, pb) = (TorusPoint::new(a), TorusPoint::new(b));
            let s = torus_nu(pa, pb) + torus_nu(pb, pa);
            if pa == pb {
                prop_assert_eq!(s, 0.0);
            } else {
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn wrapped_points_in_unit_interval(x in -1e6f64..1e6) {
            let v = TorusPoint::new(x).value();
            prop_assert!((0.0..1.0).contains(&v));
        }
    }
}
