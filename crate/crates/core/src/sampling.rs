//! Sampling-density diagnostics.
//!
//! Three quantities describe how well a point set covers its domain:
//!
//! - the **separation radius** δ_X, half the minimum pairwise distance;
//! - the **fill distance** h, the radius of the largest hole — estimated
//!   here against a dense reference sample of the same domain, since the
//!   true supremum over an unknown manifold is not computable;
//! - the **quasi-uniformity constant** h/δ_X, which is small exactly when
//!   points are spread evenly.
//!
//! `density_bound_check` verifies the packing bound that quasi-uniform sets
//! obey: a ball of radius q·h around any point can contain at most ρ·q^d
//! samples, with ρ = (3/δ)^d for normalized separation δ < 2 and ρ = 3^d
//! otherwise (δ = 2δ_X/h). The projection stages rely on this bound for
//! bounded work per query; the check makes it testable instead of assumed.

use crate::cloud::{dist, PointCloud};
use crate::error::{Error, Result};
use crate::spatial::KdTree;

/// Two samples closer than this are considered coincident; separation and
/// downstream weight scales are meaningless below it.
pub const COINCIDENCE_TOLERANCE: f64 = 1e-12;

/// Summary of a cloud's sampling density.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingStats {
    /// Number of points measured.
    pub point_count: usize,
    /// Half the minimum pairwise distance (δ_X).
    pub separation_radius: f64,
    /// Largest reference-point distance to the cloud (fill distance h).
    pub fill_distance: f64,
    /// h / δ_X; close to 1 means near-ideal spread.
    pub quasi_uniform_constant: f64,
}

impl SamplingStats {
    /// Measures a cloud against a dense reference sample of the same domain.
    pub fn measure(cloud: &PointCloud, reference: &PointCloud) -> Result<Self> {
        let separation_radius = separation_radius(cloud)?;
        let fill_distance = fill_distance_estimate(cloud, reference)?;
        Ok(SamplingStats {
            point_count: cloud.len(),
            separation_radius,
            fill_distance,
            quasi_uniform_constant: fill_distance / separation_radius,
        })
    }
}

/// Half the minimum pairwise distance of the cloud.
///
/// Needs at least two points; fails with [`Error::CoincidentSamples`] if any
/// two points are within [`COINCIDENCE_TOLERANCE`].
pub fn separation_radius(cloud: &PointCloud) -> Result<f64> {
    if cloud.len() < 2 {
        return Err(Error::InsufficientPoints { needed: 2, actual: cloud.len() });
    }
    let tree = KdTree::build(cloud);
    let mut min_dist = f64::INFINITY;
    let mut min_pair = (0, 0);
    for i in 0..cloud.len() {
        let (j, d) = tree
            .nearest_other(i)
            .expect("cloud has at least two points");
        if d < min_dist || (d == min_dist && (i, j) < min_pair) {
            min_dist = d;
            min_pair = (i, j);
        }
    }
    if min_dist < COINCIDENCE_TOLERANCE {
        let (i, j) = min_pair;
        return Err(Error::CoincidentSamples { i, j, tolerance: COINCIDENCE_TOLERANCE });
    }
    Ok(min_dist / 2.0)
}

/// O(n²) reference implementation of [`separation_radius`].
///
/// Kept public as the independent oracle for the indexed path; prefer
/// [`separation_radius`] everywhere else.
pub fn separation_radius_brute(cloud: &PointCloud) -> Result<f64> {
    if cloud.len() < 2 {
        return Err(Error::InsufficientPoints { needed: 2, actual: cloud.len() });
    }
    let mut min_dist = f64::INFINITY;
    let mut min_pair = (0, 0);
    for i in 0..cloud.len() {
        for j in (i + 1)..cloud.len() {
            let d = dist(cloud.point(i), cloud.point(j));
            if d < min_dist {
                min_dist = d;
                min_pair = (i, j);
            }
        }
    }
    if min_dist < COINCIDENCE_TOLERANCE {
        let (i, j) = min_pair;
        return Err(Error::CoincidentSamples { i, j, tolerance: COINCIDENCE_TOLERANCE });
    }
    Ok(min_dist / 2.0)
}

/// Monte-Carlo fill-distance estimate: the largest distance from a reference
/// point to its nearest cloud point.
///
/// The reference stands in for the continuous domain, so it should be much
/// denser than the cloud; the estimate is a lower bound on the true fill
/// distance and converges to it as the reference densifies.
pub fn fill_distance_estimate(cloud: &PointCloud, reference: &PointCloud) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, actual: 0 });
    }
    if reference.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, actual: 0 });
    }
    if cloud.dim() != reference.dim() {
        return Err(Error::DimensionMismatch {
            expected: cloud.dim(),
            actual: reference.dim(),
        });
    }
    let tree = KdTree::build(cloud);
    let mut max_gap = 0.0f64;
    for r in reference.iter() {
        let (_, d) = tree.nearest(r).expect("cloud is non-empty");
        max_gap = max_gap.max(d);
    }
    Ok(max_gap)
}

/// O(n·m) reference implementation of [`fill_distance_estimate`], kept as
/// the independent oracle for the indexed path.
pub fn fill_distance_estimate_brute(
    cloud: &PointCloud,
    reference: &PointCloud,
) -> Result<f64> {
    if cloud.is_empty() || reference.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, actual: 0 });
    }
    if cloud.dim() != reference.dim() {
        return Err(Error::DimensionMismatch {
            expected: cloud.dim(),
            actual: reference.dim(),
        });
    }
    let mut max_gap = 0.0f64;
    for r in reference.iter() {
        let nearest = cloud
            .iter()
            .map(|p| dist(r, p))
            .fold(f64::INFINITY, f64::min);
        max_gap = max_gap.max(nearest);
    }
    Ok(max_gap)
}

/// Checks the quasi-uniform packing bound at one center.
///
/// Counts cloud points in the closed ball of radius `q·h` about `center` and
/// returns whether the count is within ρ·q^d, where d is the cloud dimension,
/// δ = `delta` is the normalized separation (2δ_X/h, i.e. points are at least
/// δ·h apart), ρ = (3/δ)^d for δ < 2 and ρ = 3^d otherwise.
///
/// `q` must be at least 1, `h` positive, `delta` positive.
pub fn density_bound_check(
    cloud: &PointCloud,
    center: &[f64],
    q: f64,
    h: f64,
    delta: f64,
) -> Result<bool> {
    if cloud.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, actual: 0 });
    }
    if center.len() != cloud.dim() {
        return Err(Error::DimensionMismatch { expected: cloud.dim(), actual: center.len() });
    }
    if !q.is_finite() || q < 1.0 {
        return Err(Error::InvalidParameter {
            name: "q",
            reason: format!("must be finite and >= 1, got {q}"),
        });
    }
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "h",
            reason: format!("must be finite and positive, got {h}"),
        });
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: format!("must be finite and positive, got {delta}"),
        });
    }
    let radius = q * h;
    let count = cloud.iter().filter(|p| dist(p, center) <= radius).count();
    let d = cloud.dim() as i32;
    let rho = if delta < 2.0 { (3.0 / delta).powi(d) } else { 3.0f64.powi(d) };
    Ok((count as f64) <= rho * q.powi(d))
}
