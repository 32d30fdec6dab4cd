//! Two-step manifold moving least-squares projection.
//!
//! To project a point r lying near the sampled manifold:
//!
//! 1. **Local frame.** Find an origin q and a d-dimensional subspace H
//!    minimizing the weighted normal spread
//!    `J₁(q, H) = Σ_i d(r_i − q, H)² · θ₁(‖r_i − q‖)`
//!    subject to r − q ⊥ H, with q constrained to a region of interest
//!    around r. A fixed-point iteration alternates a weighted principal
//!    subspace (top-d eigenvectors of the second-moment matrix about q)
//!    with an origin update `q ← c + P_H(r − c)` (c the weighted mean),
//!    which enforces the perpendicularity constraint by construction.
//! 2. **Local fit.** Express the region-of-interest samples in frame
//!    coordinates x_i = P_H(r_i − q) and fit a degree-m polynomial
//!    π: R^d → R^D through the full ambient positions by weighted least
//!    squares with weights θ₂(‖x_i‖). The projection of r is π(0).
//!
//! Samples participating in either step are restricted to the ambient ball
//! of radius μ (`roi_radius`) around the query; this is what keeps the
//! local coordinate chart injective on closed manifolds (far sheets would
//! otherwise fold onto the frame with near-zero frame coordinates). μ must
//! stay below the manifold's reach for that argument to hold.
//!
//! The projection is smooth in r, maps a tube around the manifold onto an
//! approximating manifold of the same intrinsic dimension, and for clean
//! samples of a C^∞ manifold lands within O(h^(m+1)) of the true surface.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::cloud::{dist, PointCloud};
use crate::error::{Error, Result};
use crate::mls::{mls_fit, MlsFit};
use crate::spatial::KdTree;
use crate::weights::{WeightProfile, WeightShape};

/// Default iteration cap for the frame-finding fixed point.
pub const STEP1_MAX_ITERATIONS: usize = 100;

/// Default step-1 convergence tolerance, as a fraction of h: the iteration
/// stops once the origin moves less than this per step. The attainable
/// precision of the fixed point is bounded below by rounding noise on the
/// weighted moments (observed limit cycles of a few 1e-9·h on marginal
/// supports), so the tolerance sits above that floor; the origin's residual
/// motion at this scale is far below anything the fit step can resolve.
pub const STEP1_TOLERANCE_FACTOR: f64 = 1e-8;

/// Region-of-interest default, as a multiple of h, used when the caller has
/// no reach estimate for the sampled manifold.
pub const DEFAULT_ROI_FACTOR: f64 = 10.0;

/// Minimal relative spectral gap λ_d − λ_{d+1} (in units of λ_1) below which
/// the weighted neighborhood does not determine a d-dimensional direction
/// subspace.
pub const SPECTRAL_GAP_THRESHOLD: f64 = 1e-6;

/// Slack factor for the step-1 objective divergence tripwire. Each
/// iteration is an exact descent step for frozen weights, but the weights
/// re-center at the moved origin, and no bound linear in |Δq|/h governs the
/// transport term: the bump weight's log-derivative is unbounded at its
/// support edge, so when the support holds few samples, a sub-h step that
/// pulls a new sample into support can legitimately multiply J₁ severalfold.
/// The assertion therefore only rejects egregious explosions —
/// `factor · |Δq|/h` relative growth per step — and leaves real divergence
/// control to the iteration cap, the frame-drift check, and the ROI check.
pub const J1_WOBBLE_FACTOR: f64 = 100.0;

/// Rounding floor for the J₁ monotonicity assertion, relative to the
/// weighted second moment Σ wᵢ‖rᵢ − q‖². J₁ subtracts the tangential from
/// the total spread, so when the samples are (near-)flat its true value is
/// a catastrophic cancellation of that moment and carries its rounding
/// noise, not J₁'s own.
pub const J1_ROUNDING_RELATIVE: f64 = 1e-12;

/// Orthonormality tolerance for frame validation (entries of BᵀB − I).
pub const FRAME_ORTHONORMALITY_TOLERANCE: f64 = 1e-10;

/// Perpendicularity tolerance for frame validation, relative to ‖r − q‖.
pub const FRAME_PERPENDICULARITY_TOLERANCE: f64 = 1e-8;

/// Configuration of the two-step projection.
#[derive(Debug, Clone, PartialEq)]
pub struct MmlsConfig {
    /// Intrinsic dimension d of the sampled manifold.
    pub intrinsic_dim: usize,
    /// Polynomial degree m of the local fits (approximation order m+1).
    pub degree: usize,
    /// Weight scale h; should track the fill distance of the sample.
    pub h: f64,
    /// Region-of-interest radius μ around each query; samples beyond it are
    /// invisible to that query. Keep below the manifold's reach.
    pub roi_radius: f64,
    /// Radial weight for the frame step (must be finite at 0, so the
    /// interpolatory shape is rejected here).
    pub step1_weights: WeightProfile,
    /// Radial weight for the fit step.
    pub step2_weights: WeightProfile,
    /// Iteration cap for the frame fixed point.
    pub step1_max_iterations: usize,
    /// Absolute origin-motion threshold ending the frame iteration.
    pub step1_tolerance: f64,
}

impl MmlsConfig {
    /// Builds a configuration with defaults: smooth-bump weights for both
    /// steps, μ = 10·h, tolerance 1e-10·h, 100 iterations.
    pub fn new(intrinsic_dim: usize, degree: usize, h: f64) -> Result<Self> {
        let config = MmlsConfig {
            intrinsic_dim,
            degree,
            h,
            roi_radius: DEFAULT_ROI_FACTOR * h,
            step1_weights: WeightProfile::smooth_bump(),
            step2_weights: WeightProfile::smooth_bump(),
            step1_max_iterations: STEP1_MAX_ITERATIONS,
            step1_tolerance: STEP1_TOLERANCE_FACTOR * h,
        };
        config.validate()?;
        Ok(config)
    }

    /// Replaces the region-of-interest radius.
    pub fn with_roi_radius(mut self, mu: f64) -> Result<Self> {
        self.roi_radius = mu;
        self.validate()?;
        Ok(self)
    }

    /// Replaces the fit-step weight profile.
    pub fn with_step2_weights(mut self, profile: WeightProfile) -> Result<Self> {
        self.step2_weights = profile;
        self.validate()?;
        Ok(self)
    }

    /// Checks every scalar constraint that does not need the cloud.
    pub fn validate(&self) -> Result<()> {
        if self.intrinsic_dim == 0 {
            return Err(Error::InvalidParameter {
                name: "intrinsic_dim",
                reason: "must be at least 1".into(),
            });
        }
        if self.degree == 0 {
            return Err(Error::InvalidParameter {
                name: "degree",
                reason: "must be at least 1 (approximation order at least 2)".into(),
            });
        }
        if !self.h.is_finite() || self.h <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "h",
                reason: format!("must be finite and positive, got {}", self.h),
            });
        }
        if !self.roi_radius.is_finite() || self.roi_radius <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "roi_radius",
                reason: format!("must be finite and positive, got {}", self.roi_radius),
            });
        }
        if self.step1_weights.shape() == WeightShape::Interpolatory {
            return Err(Error::InvalidParameter {
                name: "step1_weights",
                reason: "frame step requires a weight finite at distance 0".into(),
            });
        }
        if !self.step1_tolerance.is_finite() || self.step1_tolerance <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "step1_tolerance",
                reason: format!("must be finite and positive, got {}", self.step1_tolerance),
            });
        }
        if self.step1_max_iterations == 0 {
            return Err(Error::InvalidParameter {
                name: "step1_max_iterations",
                reason: "must be at least 1".into(),
            });
        }
        // Floor condition: both profiles must stay above their floor value
        // at the floor radius. True by construction for the provided shapes;
        // checked so hand-rolled profiles cannot sneak past.
        for (name, profile) in [
            ("step1_weights", &self.step1_weights),
            ("step2_weights", &self.step2_weights),
        ] {
            let (c2, c3) = profile.floor();
            if profile.eval_unchecked(c2 * self.h, self.h) <= c3 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "weight profile fails its floor condition".into(),
                });
            }
        }
        Ok(())
    }
}

/// A local origin-and-tangent frame produced by step 1.
#[derive(Debug, Clone)]
pub struct LocalFrame {
    query: Vec<f64>,
    origin: Vec<f64>,
    /// Ambient × intrinsic matrix with orthonormal columns spanning H.
    basis: DMatrix<f64>,
    j1_history: Vec<f64>,
    iterations: usize,
}

impl LocalFrame {
    /// The query point r this frame was built for.
    pub fn query(&self) -> &[f64] {
        &self.query
    }

    /// The local origin q.
    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    /// Orthonormal basis of the direction subspace H (columns).
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Final value of the weighted normal-spread objective J₁.
    pub fn j1_value(&self) -> f64 {
        *self.j1_history.last().unwrap_or(&0.0)
    }

    /// J₁ recorded at every iteration, in order.
    pub fn j1_history(&self) -> &[f64] {
        &self.j1_history
    }

    /// Number of fixed-point iterations used.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Frame coordinates Bᵀ(p − q) of an ambient point.
    pub fn local_coordinates(&self, point: &[f64]) -> Vec<f64> {
        let d = self.basis.ncols();
        let mut coords = vec![0.0; d];
        for (j, coord) in coords.iter_mut().enumerate() {
            *coord = self
                .basis
                .column(j)
                .iter()
                .zip(point.iter().zip(&self.origin))
                .map(|(b, (p, q))| b * (p - q))
                .sum();
        }
        coords
    }

    /// Ambient position q + B·x of a frame coordinate.
    pub fn lift(&self, local: &[f64]) -> Vec<f64> {
        let mut out = self.origin.clone();
        for (j, &x) in local.iter().enumerate() {
            for (o, b) in out.iter_mut().zip(self.basis.column(j).iter()) {
                *o += b * x;
            }
        }
        out
    }

    /// Re-verifies the frame constraints against the cloud by brute force:
    /// orthonormal basis, r − q ⊥ H, a sample within h of q, and q within μ
    /// of r. Independent of the spatial index, so tests can use it as an
    /// oracle on any returned frame.
    pub fn validate(&self, cloud: &PointCloud, config: &MmlsConfig) -> Result<()> {
        let d = self.basis.ncols();
        let gram = self.basis.transpose() * &self.basis;
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - want).abs() > FRAME_ORTHONORMALITY_TOLERANCE {
                    return Err(Error::Internal(format!(
                        "frame basis not orthonormal: gram[{i},{j}] = {}",
                        gram[(i, j)]
                    )));
                }
            }
        }
        let rq = dist(&self.query, &self.origin);
        for j in 0..d {
            let dot: f64 = self
                .basis
                .column(j)
                .iter()
                .zip(self.query.iter().zip(&self.origin))
                .map(|(b, (r, q))| b * (r - q))
                .sum();
            if dot.abs() > FRAME_PERPENDICULARITY_TOLERANCE * rq.max(f64::MIN_POSITIVE) {
                return Err(Error::Internal(format!(
                    "query offset not perpendicular to frame: component {dot:e}"
                )));
            }
        }
        let nearest = cloud
            .iter()
            .map(|p| dist(p, &self.origin))
            .fold(f64::INFINITY, f64::min);
        if nearest > config.h {
            return Err(Error::FrameDrift { h: config.h });
        }
        if rq > config.roi_radius {
            return Err(Error::RoiViolation { distance: rq, mu: config.roi_radius });
        }
        Ok(())
    }
}

/// Shared projection context: one immutable cloud, one spatial index, one
/// configuration. Build it once per cloud and reuse it for every query.
pub struct Projector<'a> {
    cloud: &'a PointCloud,
    tree: KdTree<'a>,
    config: MmlsConfig,
}

impl<'a> Projector<'a> {
    /// Validates the configuration against the cloud and builds the index.
    pub fn new(cloud: &'a PointCloud, config: MmlsConfig) -> Result<Self> {
        config.validate()?;
        if cloud.is_empty() {
            return Err(Error::InsufficientPoints { needed: 1, actual: 0 });
        }
        if config.intrinsic_dim >= cloud.dim() {
            return Err(Error::InvalidParameter {
                name: "intrinsic_dim",
                reason: format!(
                    "must be below the ambient dimension {} of the cloud, got {}",
                    cloud.dim(),
                    config.intrinsic_dim
                ),
            });
        }
        let tree = KdTree::build(cloud);
        Ok(Projector { cloud, tree, config })
    }

    /// The configuration in use.
    pub fn config(&self) -> &MmlsConfig {
        &self.config
    }

    /// The cloud being projected onto.
    pub fn cloud(&self) -> &PointCloud {
        self.cloud
    }

    /// Step 1: local origin and direction subspace for a query point.
    pub fn find_local_frame(&self, r: &[f64]) -> Result<LocalFrame> {
        if r.len() != self.cloud.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.cloud.dim(),
                actual: r.len(),
            });
        }
        let d = self.config.intrinsic_dim;
        let ambient = self.cloud.dim();
        let h = self.config.h;
        let mu = self.config.roi_radius;
        let profile = &self.config.step1_weights;

        // Region of interest: every sample this query is allowed to see.
        let candidates = self.tree.within_radius(r, mu);
        if candidates.len() < d + 1 {
            return Err(Error::SparseNeighborhood {
                count: candidates.len(),
                needed: d + 1,
            });
        }

        // Initial origin: weighted mean with weights centered at r itself.
        let mut weights: Vec<f64> = candidates
            .iter()
            .map(|&(_, dist_r)| profile.eval_unchecked(dist_r, h))
            .collect();
        let mut q = match weighted_mean(self.cloud, &candidates, &weights, ambient) {
            Some(q) => q,
            None => return Err(Error::EmptySupport),
        };

        let mut basis: Option<DMatrix<f64>> = None;
        let mut j1_history = Vec::new();
        let mut iterations = 0usize;
        let mut converged = false;
        // Origin motion of the previous iteration; scales the monotonicity
        // slack because it is what moved the weights.
        let mut last_step = f64::INFINITY;

        for iter in 0..self.config.step1_max_iterations {
            // Weights centered at the current origin.
            let mut active = 0usize;
            for (w, &(idx, _)) in weights.iter_mut().zip(&candidates) {
                *w = profile.eval_unchecked(dist(self.cloud.point(idx), &q), h);
                if *w > 0.0 {
                    active += 1;
                }
            }
            if active == 0 {
                return Err(Error::EmptySupport);
            }
            if active < d + 1 {
                return Err(Error::SparseNeighborhood { count: active, needed: d + 1 });
            }

            // Weighted second moment about q.
            let mut moment = DMatrix::<f64>::zeros(ambient, ambient);
            let mut sum_w = 0.0;
            let mut mean = vec![0.0; ambient];
            for (&w, &(idx, _)) in weights.iter().zip(&candidates) {
                if w == 0.0 {
                    continue;
                }
                let p = self.cloud.point(idx);
                sum_w += w;
                for a in 0..ambient {
                    let va = p[a] - q[a];
                    mean[a] += w * p[a];
                    for b in a..ambient {
                        moment[(a, b)] += w * va * (p[b] - q[b]);
                    }
                }
            }
            for a in 0..ambient {
                for b in (a + 1)..ambient {
                    moment[(b, a)] = moment[(a, b)];
                }
            }

            let eigen = moment.symmetric_eigen();
            let mut order: Vec<usize> = (0..ambient).collect();
            order.sort_by(|&a, &b| {
                eigen.eigenvalues[b]
                    .partial_cmp(&eigen.eigenvalues[a])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let lambda1 = eigen.eigenvalues[order[0]].max(0.0);
            let lambda_d = eigen.eigenvalues[order[d - 1]];
            let lambda_next = eigen.eigenvalues[order[d]];
            let gap = lambda_d - lambda_next;
            let threshold = SPECTRAL_GAP_THRESHOLD * lambda1;
            if lambda1 <= 0.0 || gap < threshold {
                return Err(Error::AmbiguousTangent { gap, threshold });
            }
            let mut b_new = DMatrix::zeros(ambient, d);
            for (col, &src) in order[..d].iter().enumerate() {
                b_new.set_column(col, &eigen.eigenvectors.column(src));
            }

            // J₁ at (q, H) under the weights centered at q; each term is the
            // squared normal component of r_i − q. The weighted total spread
            // is kept alongside because it sets the rounding scale of the
            // subtraction.
            let mut j1 = 0.0;
            let mut spread = 0.0;
            for (&w, &(idx, _)) in weights.iter().zip(&candidates) {
                if w == 0.0 {
                    continue;
                }
                let p = self.cloud.point(idx);
                let mut v2 = 0.0;
                for a in 0..ambient {
                    let va = p[a] - q[a];
                    v2 += va * va;
                }
                let mut t2 = 0.0;
                for j in 0..d {
                    let dot: f64 = b_new
                        .column(j)
                        .iter()
                        .zip(p.iter().zip(&q))
                        .map(|(bb, (pp, qq))| bb * (pp - qq))
                        .sum();
                    t2 += dot * dot;
                }
                j1 += w * (v2 - t2).max(0.0);
                spread += w * v2;
            }
            if let Some(&previous) = j1_history.last() {
                let slack =
                    J1_WOBBLE_FACTOR * (last_step / h) * previous + J1_ROUNDING_RELATIVE * spread;
                if j1 > previous + slack {
                    return Err(Error::ObjectiveIncrease {
                        iteration: iter,
                        previous,
                        current: j1,
                    });
                }
            }
            j1_history.push(j1);

            // Origin update: weighted mean pulled back onto the constraint
            // set (r − q ⊥ H holds for the result by construction).
            for m in mean.iter_mut() {
                *m /= sum_w;
            }
            let mut q_new = mean.clone();
            for j in 0..d {
                let dot: f64 = b_new
                    .column(j)
                    .iter()
                    .zip(r.iter().zip(&mean))
                    .map(|(bb, (rr, cc))| bb * (rr - cc))
                    .sum();
                for (qn, bb) in q_new.iter_mut().zip(b_new.column(j).iter()) {
                    *qn += dot * bb;
                }
            }

            // Constraint: the origin must stay near the samples.
            let (_, nearest) = self
                .tree
                .nearest(&q_new)
                .expect("cloud is non-empty");
            if nearest > h {
                return Err(Error::FrameDrift { h });
            }

            let step = dist(&q_new, &q);
            q = q_new;
            basis = Some(b_new);
            iterations = iter + 1;
            last_step = step;
            if step < self.config.step1_tolerance {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Step1NonConvergence { iterations, last_step });
        }
        // Constraint: q inside the region of interest. Candidates live in
        // B_μ(r) and the update keeps q in their convex hull's projection,
        // so this cannot fire for sane inputs; kept as a hard guard.
        let rq = dist(&q, r);
        if rq > mu {
            return Err(Error::RoiViolation { distance: rq, mu });
        }

        Ok(LocalFrame {
            query: r.to_vec(),
            origin: q,
            basis: basis.expect("at least one iteration ran"),
            j1_history,
            iterations,
        })
    }

    /// Step 2: weighted polynomial fit of the region-of-interest samples
    /// over a frame. The fit maps frame coordinates to ambient positions.
    pub fn fit_local_polynomial(&self, frame: &LocalFrame) -> Result<MlsFit> {
        let d = self.config.intrinsic_dim;
        let candidates = self.tree.within_radius(frame.query(), self.config.roi_radius);
        if candidates.is_empty() {
            return Err(Error::EmptySupport);
        }
        let mut sites = PointCloud::new(d);
        let mut values = PointCloud::new(self.cloud.dim());
        for &(idx, _) in &candidates {
            let p = self.cloud.point(idx);
            sites.push(&frame.local_coordinates(p))?;
            values.push(p)?;
        }
        let center = vec![0.0; d];
        let mut fit = mls_fit(
            &sites,
            &values,
            &center,
            self.config.degree,
            &self.config.step2_weights,
            self.config.h,
        )?;
        // Remap the fit's site indices back to cloud indices.
        for idx in fit.neighbor_indices.iter_mut() {
            *idx = candidates[*idx].0;
        }
        Ok(fit)
    }

    /// Full projection of one point onto the approximating manifold.
    pub fn project(&self, r: &[f64]) -> Result<Vec<f64>> {
        let frame = self.find_local_frame(r)?;
        let fit = self.fit_local_polynomial(&frame)?;
        Ok(fit.polynomial.constant_term())
    }

    /// Projects every query point. Runs in parallel; output order matches
    /// the query order and is independent of thread scheduling. The first
    /// failing query (in query order) aborts the batch.
    pub fn project_batch(&self, queries: &PointCloud) -> Result<PointCloud> {
        if queries.dim() != self.cloud.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.cloud.dim(),
                actual: queries.dim(),
            });
        }
        let results: Vec<Result<Vec<f64>>> = (0..queries.len())
            .into_par_iter()
            .map(|i| self.project(queries.point(i)))
            .collect();
        let mut out = PointCloud::new(self.cloud.dim());
        for point in results {
            out.push(&point?)?;
        }
        Ok(out)
    }
}

fn weighted_mean(
    cloud: &PointCloud,
    candidates: &[(usize, f64)],
    weights: &[f64],
    ambient: usize,
) -> Option<Vec<f64>> {
    let sum_w: f64 = weights.iter().sum();
    if sum_w <= 0.0 {
        return None;
    }
    let mut mean = vec![0.0; ambient];
    for (&w, &(idx, _)) in weights.iter().zip(candidates) {
        if w == 0.0 {
            continue;
        }
        for (m, &p) in mean.iter_mut().zip(cloud.point(idx)) {
            *m += w * p;
        }
    }
    for m in mean.iter_mut() {
        *m /= sum_w;
    }
    Some(mean)
}

/// Standalone step 1: builds the index, finds one frame. Use [`Projector`]
/// for repeated queries against one cloud.
pub fn find_local_frame(cloud: &PointCloud, r: &[f64], config: &MmlsConfig) -> Result<LocalFrame> {
    Projector::new(cloud, config.clone())?.find_local_frame(r)
}

/// Standalone step 2 over an existing frame.
pub fn fit_local_polynomial(
    cloud: &PointCloud,
    frame: &LocalFrame,
    config: &MmlsConfig,
) -> Result<MlsFit> {
    Projector::new(cloud, config.clone())?.fit_local_polynomial(frame)
}

/// Standalone projection of one point.
pub fn project(cloud: &PointCloud, r: &[f64], config: &MmlsConfig) -> Result<Vec<f64>> {
    Projector::new(cloud, config.clone())?.project(r)
}

/// Standalone batch projection with deterministic output order.
pub fn project_batch(
    cloud: &PointCloud,
    queries: &PointCloud,
    config: &MmlsConfig,
) -> Result<PointCloud> {
    Projector::new(cloud, config.clone())?.project_batch(queries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Grid sample of the plane z = 0.3 in R³.
    fn flat_cloud() -> PointCloud {
        let mut cloud = PointCloud::new(3);
        for i in 0..15 {
            for j in 0..15 {
                let x = -1.0 + 2.0 * i as f64 / 14.0;
                let y = -1.0 + 2.0 * j as f64 / 14.0;
                cloud.push(&[x, y, 0.3]).unwrap();
            }
        }
        cloud
    }

    /// Unit circle in R², n samples.
    fn circle_cloud(n: usize) -> PointCloud {
        let mut cloud = PointCloud::new(2);
        for i in 0..n {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            cloud.push(&[t.cos(), t.sin()]).unwrap();
        }
        cloud
    }

    fn circle_config(n: usize) -> MmlsConfig {
        let spacing = std::f64::consts::TAU / n as f64;
        MmlsConfig::new(1, 2, 3.0 * spacing)
            .unwrap()
            .with_roi_radius(0.5)
            .unwrap()
    }

    #[test]
    fn flat_cloud_frame_is_exact() {
        let cloud = flat_cloud();
        let config = MmlsConfig::new(2, 2, 0.3).unwrap();
        let r = cloud.point(7 * 15 + 7).to_vec(); // interior sample
        let frame = find_local_frame(&cloud, &r, &config).unwrap();
        // The origin coincides with the on-plane query and the basis spans
        // the plane (no z component).
        assert!(dist(frame.origin(), &r) <= 1e-10);
        for j in 0..2 {
            assert!(frame.basis().column(j)[2].abs() <= 1e-10);
        }
        assert!(frame.j1_value() <= 1e-18);
        frame.validate(&cloud, &config).unwrap();
    }

    #[test]
    fn off_plane_query_lands_on_the_foot() {
        // Affine data reproduces exactly: the projection of any nearby point
        // is its orthogonal foot on the plane.
        let cloud = flat_cloud();
        let config = MmlsConfig::new(2, 2, 0.3).unwrap();
        let r = [0.11, -0.23, 0.9];
        let frame = find_local_frame(&cloud, &r, &config).unwrap();
        assert!(dist(frame.origin(), &[0.11, -0.23, 0.3]) <= 1e-9);
        frame.validate(&cloud, &config).unwrap();
        let p = project(&cloud, &r, &config).unwrap();
        assert!(
            dist(&p, &[0.11, -0.23, 0.3]) <= 1e-9,
            "projection {p:?} should be the foot"
        );
    }

    #[test]
    fn circle_frame_matches_analytic_tangent() {
        let n = 400;
        let cloud = circle_cloud(n);
        let config = circle_config(n);
        for &theta in &[0.0f64, 0.9, 2.5, 4.4] {
            let r = [theta.cos(), theta.sin()];
            let frame = find_local_frame(&cloud, &r, &config).unwrap();
            frame.validate(&cloud, &config).unwrap();
            // The single basis vector must align with the analytic tangent
            // (−sin θ, cos θ): its radial component is the misalignment.
            let radial = frame.basis().column(0)[0] * theta.cos()
                + frame.basis().column(0)[1] * theta.sin();
            assert!(
                radial.abs() <= 0.05,
                "tangent misalignment {radial} at theta = {theta}"
            );
        }
    }

    #[test]
    fn j1_history_descends_overall() {
        let n = 200;
        let cloud = circle_cloud(n);
        let config = circle_config(n);
        // Query off the circle so the iteration has real work to do.
        let frame = find_local_frame(&cloud, &[1.02, 0.03], &config).unwrap();
        let history = frame.j1_history();
        assert!(!history.is_empty());
        assert!(history.last().unwrap() <= &(history[0] + 1e-18));
    }

    #[test]
    fn projection_is_idempotent_up_to_order() {
        let n = 300;
        let cloud = circle_cloud(n);
        let config = circle_config(n);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            let rho = 1.0 + rng.gen_range(-0.05..0.05);
            let r = [rho * t.cos(), rho * t.sin()];
            let p1 = project(&cloud, &r, &config).unwrap();
            let p2 = project(&cloud, &p1, &config).unwrap();
            // Idempotence bound: 10 · h^(m+1) · diameter.
            let bound = 10.0 * config.h.powi(3) * 2.0;
            assert!(dist(&p1, &p2) <= bound, "re-projection moved {}", dist(&p1, &p2));
        }
    }

    #[test]
    fn projection_commutes_with_rigid_motions() {
        let n = 250;
        let cloud = circle_cloud(n);
        let config = circle_config(n);
        // A fixed rotation + translation of the plane.
        let angle = 0.7f64;
        let rot = [[angle.cos(), -angle.sin()], [angle.sin(), angle.cos()]];
        let shift = [0.4, -1.1];
        let transform = |p: &[f64]| -> Vec<f64> {
            vec![
                rot[0][0] * p[0] + rot[0][1] * p[1] + shift[0],
                rot[1][0] * p[0] + rot[1][1] * p[1] + shift[1],
            ]
        };
        let mut moved = PointCloud::new(2);
        for p in cloud.iter() {
            moved.push(&transform(p)).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..8 {
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            let rho = 1.0 + rng.gen_range(-0.04..0.04);
            let r = [rho * t.cos(), rho * t.sin()];
            let direct = transform(&project(&cloud, &r, &config).unwrap());
            let via_moved = project(&moved, &transform(&r), &config).unwrap();
            assert!(
                dist(&direct, &via_moved) <= 1e-8,
                "equivariance gap {}",
                dist(&direct, &via_moved)
            );
        }
    }

    #[test]
    fn interpolatory_projection_returns_samples() {
        let n = 200;
        let cloud = circle_cloud(n);
        let config = circle_config(n)
            .with_step2_weights(WeightProfile::interpolatory())
            .unwrap();
        for &i in &[0usize, 57, 113] {
            let r = cloud.point(i).to_vec();
            let p = project(&cloud, &r, &config).unwrap();
            assert!(
                dist(&p, &r) <= 1e-6,
                "sample {i} moved by {} under interpolatory projection",
                dist(&p, &r)
            );
        }
    }

    #[test]
    fn projection_depends_smoothly_on_the_query() {
        let n = 300;
        let cloud = circle_cloud(n);
        let config = circle_config(n);
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let eps = config.h / 20.0;
        for _ in 0..20 {
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = [1.01 * t.cos(), 1.01 * t.sin()];
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            let r2 = [r[0] + eps * phi.cos(), r[1] + eps * phi.sin()];
            let p1 = project(&cloud, &r, &config).unwrap();
            let p2 = project(&cloud, &r2, &config).unwrap();
            let ratio = dist(&p1, &p2) / eps;
            assert!(ratio <= 3.0, "projection moved {ratio} times the query step");
        }
    }

    #[test]
    fn batch_projection_matches_single_calls() {
        let n = 150;
        let cloud = circle_cloud(n);
        let config = circle_config(n);
        let mut queries = PointCloud::new(2);
        for i in 0..12 {
            let t = 0.5 * i as f64;
            queries.push(&[1.03 * t.cos(), 1.03 * t.sin()]).unwrap();
        }
        let batch = project_batch(&cloud, &queries, &config).unwrap();
        let projector = Projector::new(&cloud, config).unwrap();
        for (i, q) in queries.iter().enumerate() {
            let single = projector.project(q).unwrap();
            assert_eq!(batch.point(i), single.as_slice());
        }
    }

    #[test]
    fn sparse_neighborhood_is_reported() {
        let cloud = PointCloud::from_rows(&[vec![0.0, 0.0], vec![0.1, 0.0]]).unwrap();
        let config = MmlsConfig::new(1, 1, 0.1).unwrap().with_roi_radius(0.05).unwrap();
        let err = find_local_frame(&cloud, &[1.0, 0.0], &config).unwrap_err();
        assert!(matches!(err, Error::SparseNeighborhood { .. }));
    }

    #[test]
    fn collinear_cloud_has_ambiguous_surface_tangent() {
        // Points on a line cannot support a 2-dimensional frame.
        let mut cloud = PointCloud::new(3);
        for i in 0..60 {
            cloud.push(&[i as f64 * 0.05, 0.0, 0.0]).unwrap();
        }
        let config = MmlsConfig::new(2, 1, 0.2).unwrap();
        let err = find_local_frame(&cloud, &[1.5, 0.0, 0.0], &config).unwrap_err();
        assert!(matches!(err, Error::AmbiguousTangent { .. }));
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        assert!(MmlsConfig::new(0, 2, 0.1).is_err());
        assert!(MmlsConfig::new(1, 0, 0.1).is_err());
        assert!(MmlsConfig::new(1, 2, 0.0).is_err());
        assert!(MmlsConfig::new(1, 2, f64::NAN).is_err());
        assert!(MmlsConfig::new(1, 2, 0.1).unwrap().with_roi_radius(-1.0).is_err());
        let mut config = MmlsConfig::new(1, 2, 0.1).unwrap();
        config.step1_weights = WeightProfile::interpolatory();
        assert!(config.validate().is_err());
        // Intrinsic dimension must stay below the ambient dimension.
        let cloud = circle_cloud(50);
        let config = MmlsConfig::new(2, 2, 0.3).unwrap();
        assert!(Projector::new(&cloud, config).is_err());
    }
}
