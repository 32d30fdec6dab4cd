//! Compactly supported radial weight functions.
//!
//! Every profile is built on one C^∞ bump
//!
//! ```text
//! Φ(s) = exp(−s² / (1 − (s/c₁)²))   for s ∈ [0, c₁),   Φ(s) = 0 for s ≥ c₁,
//! ```
//!
//! which is 1 at the origin, strictly decreasing, and vanishes with all
//! derivatives at the support edge `c₁`. Weights are evaluated at a distance
//! `t` under a scale `h` as `Φ(t/h)`, so the family is consistent across
//! scales by construction. The support factor must exceed 3 and the profile
//! must stay above a floor value at a fixed interior radius; both conditions
//! are what the projection stages rely on for a well-defined, unique local
//! frame, so they are enforced at construction time.
//!
//! The interpolatory variant divides the bump by `max(s, ε)²`. Its blow-up at
//! the origin forces weighted fits through the sample nearest the evaluation
//! point, at the price of a huge (but guarded) dynamic range.

use crate::error::{Error, Result};

/// Default support factor c₁ (support radius in units of h).
pub const DEFAULT_SUPPORT_FACTOR: f64 = 3.5;

/// Default floor radius c₂: the profile is required to stay above the floor
/// value at s = c₂.
pub const DEFAULT_FLOOR_RADIUS: f64 = 1.0;

/// Guard radius ε for the interpolatory singularity: sites within ε·h of the
/// evaluation point receive the (finite) maximal weight Φ(s)/ε².
pub const SINGULARITY_GUARD: f64 = 1e-8;

/// Weights below this threshold are flushed to exact zero so that support
/// membership is a clean predicate.
pub const WEIGHT_FLUSH_THRESHOLD: f64 = 1e-300;

/// Functional form of a radial weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightShape {
    /// The plain C^∞ bump; finite everywhere.
    SmoothBump,
    /// Bump divided by squared distance; forces fits through nearby samples.
    Interpolatory,
}

/// A validated radial weight profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightProfile {
    shape: WeightShape,
    support_factor: f64,
    floor_radius: f64,
    floor_value: f64,
    singularity_guard: f64,
}

/// The raw bump Φ(s) for a given support factor.
fn bump(s: f64, support_factor: f64) -> f64 {
    if s >= support_factor {
        return 0.0;
    }
    let ratio = s / support_factor;
    (-s * s / (1.0 - ratio * ratio)).exp()
}

impl WeightProfile {
    /// Smooth bump profile with the default support factor.
    pub fn smooth_bump() -> Self {
        Self::new(WeightShape::SmoothBump, DEFAULT_SUPPORT_FACTOR)
            .expect("default profile is valid")
    }

    /// Interpolatory profile with the default support factor.
    pub fn interpolatory() -> Self {
        Self::new(WeightShape::Interpolatory, DEFAULT_SUPPORT_FACTOR)
            .expect("default profile is valid")
    }

    /// Builds a profile with an explicit support factor.
    ///
    /// The factor must be finite and strictly greater than 3 (the uniqueness
    /// requirement on the local frames), and the resulting bump must clear
    /// the floor: Φ(c₂) > c₃ with c₂ = 1 and c₃ = Φ(1)/2 for the default
    /// factor. The floor value scales with the profile so that widening the
    /// support never fails the check spuriously.
    pub fn new(shape: WeightShape, support_factor: f64) -> Result<Self> {
        if !support_factor.is_finite() || support_factor <= 3.0 {
            return Err(Error::InvalidParameter {
                name: "support_factor",
                reason: format!("must be finite and > 3, got {support_factor}"),
            });
        }
        let floor_radius = DEFAULT_FLOOR_RADIUS;
        let floor_value = bump(floor_radius, support_factor) / 2.0;
        let profile = WeightProfile {
            shape,
            support_factor,
            floor_radius,
            floor_value,
            singularity_guard: SINGULARITY_GUARD,
        };
        // Floor condition: the profile must be bounded away from zero at the
        // floor radius. With the constructions above this holds by
        // definition; the check guards future profile variants.
        if profile.eval_unchecked(floor_radius, 1.0) <= floor_value {
            return Err(Error::InvalidParameter {
                name: "support_factor",
                reason: format!(
                    "profile fails the floor condition at radius {floor_radius}"
                ),
            });
        }
        Ok(profile)
    }

    /// Functional form.
    pub fn shape(&self) -> WeightShape {
        self.shape
    }

    /// Support radius in units of the scale h.
    pub fn support_factor(&self) -> f64 {
        self.support_factor
    }

    /// Floor pair (c₂, c₃): the profile satisfies eval(c₂·h, h) > c₃.
    pub fn floor(&self) -> (f64, f64) {
        (self.floor_radius, self.floor_value)
    }

    /// Evaluates the weight at distance `t` under scale `h`.
    ///
    /// Fails on non-finite or negative `t` and on non-positive `h`.
    pub fn eval(&self, t: f64, h: f64) -> Result<f64> {
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "h",
                reason: format!("scale must be finite and positive, got {h}"),
            });
        }
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidParameter {
                name: "t",
                reason: format!("distance must be finite and non-negative, got {t}"),
            });
        }
        Ok(self.eval_unchecked(t, h))
    }

    /// Evaluates without argument validation. Callers must guarantee
    /// `t >= 0` and `h > 0`, both finite; hot loops use this after the
    /// surrounding configuration has been validated once.
    pub fn eval_unchecked(&self, t: f64, h: f64) -> f64 {
        let s = t / h;
        let phi = bump(s, self.support_factor);
        let value = match self.shape {
            WeightShape::SmoothBump => phi,
            WeightShape::Interpolatory => {
                let guarded = s.max(self.singularity_guard);
                phi / (guarded * guarded)
            }
        };
        if value < WEIGHT_FLUSH_THRESHOLD {
            0.0
        } else {
            value
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bump_is_one_at_origin_and_zero_at_support_edge() {
        let w = WeightProfile::smooth_bump();
        assert_eq!(w.eval(0.0, 1.0).unwrap(), 1.0);
        let c1 = w.support_factor();
        for h in [0.01, 0.5, 1.0, 3.0] {
            assert_eq!(w.eval(c1 * h, h).unwrap(), 0.0);
            assert_eq!(w.eval(c1 * h * 1.5, h).unwrap(), 0.0);
            // Just inside the edge the weight is positive or flushed-zero,
            // but never negative.
            assert!(w.eval(c1 * h * 0.999, h).unwrap() >= 0.0);
        }
    }

    #[test]
    fn scale_consistency() {
        // eval(t, h) must equal Φ(t/h) exactly: same ratio, same weight.
        let w = WeightProfile::smooth_bump();
        for s in [0.5, 1.0, 2.0] {
            let reference = w.eval(s, 1.0).unwrap();
            for h in [0.01, 0.1] {
                assert_eq!(w.eval(s * h, h).unwrap(), reference);
            }
        }
    }

    #[test]
    fn monotone_non_increasing() {
        let w = WeightProfile::smooth_bump();
        let wi = WeightProfile::interpolatory();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let a = rng.gen_range(0.0..4.0);
            let b = rng.gen_range(0.0..4.0);
            let (t1, t2) = if a < b { (a, b) } else { (b, a) };
            assert!(w.eval(t1, 1.0).unwrap() >= w.eval(t2, 1.0).unwrap());
            assert!(wi.eval(t1, 1.0).unwrap() >= wi.eval(t2, 1.0).unwrap());
        }
    }

    #[test]
    fn interpolatory_blows_up_near_origin() {
        let w = WeightProfile::interpolatory();
        // Within the guard radius the weight saturates at Φ(s)/ε² ≈ 1e16.
        let near = w.eval(1e-9, 1.0).unwrap();
        assert!(near > 1e15);
        // Outside the guard it behaves like Φ(s)/s².
        let s = 0.5;
        let expected = w.eval(s, 1.0).unwrap();
        let smooth = WeightProfile::smooth_bump().eval(s, 1.0).unwrap();
        assert!((expected - smooth / (s * s)).abs() <= 1e-15 * expected);
    }

    #[test]
    fn floor_condition_holds() {
        for w in [WeightProfile::smooth_bump(), WeightProfile::interpolatory()] {
            let (c2, c3) = w.floor();
            for h in [0.05, 1.0, 10.0] {
                assert!(w.eval(c2 * h, h).unwrap() > c3);
            }
        }
    }

    #[test]
    fn support_factor_must_exceed_three() {
        assert!(WeightProfile::new(WeightShape::SmoothBump, 3.0).is_err());
        assert!(WeightProfile::new(WeightShape::SmoothBump, 2.0).is_err());
        assert!(WeightProfile::new(WeightShape::SmoothBump, f64::NAN).is_err());
        assert!(WeightProfile::new(WeightShape::SmoothBump, 3.01).is_ok());
    }

    #[test]
    fn rejects_bad_arguments() {
        let w = WeightProfile::smooth_bump();
        assert!(w.eval(1.0, 0.0).is_err());
        assert!(w.eval(1.0, -2.0).is_err());
        assert!(w.eval(-1.0, 1.0).is_err());
        assert!(w.eval(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn tiny_weights_flush_to_exact_zero() {
        let w = WeightProfile::smooth_bump();
        // Approaching the support edge the bump underflows long before the
        // edge itself; whatever comes out must be exactly zero or a normal
        // positive number, never a subnormal dust value.
        let mut saw_zero_inside_support = false;
        for i in 0..1000 {
            let t = 3.4 + 0.0001 * i as f64;
            let v = w.eval(t, 1.0).unwrap();
            assert!(v == 0.0 || v >= WEIGHT_FLUSH_THRESHOLD);
            if v == 0.0 && t < w.support_factor() {
                saw_zero_inside_support = true;
            }
        }
        assert!(saw_zero_inside_support);
    }
}
