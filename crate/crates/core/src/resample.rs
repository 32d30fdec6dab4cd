//! Densification: turn a scattered sample of a manifold into an arbitrarily
//! fine one.
//!
//! For each input point a local frame and polynomial fit are computed once;
//! a K^d grid of frame coordinates spanning [−σ, σ]^d is then pushed through
//! that polynomial, producing K^d surface points per input point. Because
//! every grid node is an evaluation of a local manifold approximation, the
//! densified cloud inherits the approximation order of the projection and,
//! for noisy inputs, its smoothing.
//!
//! σ defaults to an estimated local neighborhood radius: the largest
//! distance, over randomly probed input points, to the neighbor ring that
//! makes the local fit solvable. Grid nodes therefore stay well inside the
//! region each fit is trusted on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cloud::{PointCloud, PointSource};
use crate::error::{Error, Result};
use crate::mls::polynomial_space_dim;
use crate::mmls::{MmlsConfig, Projector};
use crate::spatial::KdTree;

/// Number of random probes used by [`estimate_sigma`].
pub const SIGMA_DRAWS: usize = 100;

/// Controls one densification run.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampleConfig {
    /// Grid nodes per frame axis (K); one source point yields K^d nodes.
    pub grid_nodes_per_axis: usize,
    /// Half-extent of the local grid in frame coordinates. `None` estimates
    /// it from the cloud via [`estimate_sigma`].
    pub sigma: Option<f64>,
    /// Seed for the σ estimate's probe draws.
    pub seed: u64,
    /// If true, sources whose frame or fit fails are dropped (recorded in
    /// the output) instead of aborting the run.
    pub skip_failures: bool,
    /// Projection configuration shared by every source point.
    pub mmls: MmlsConfig,
}

impl ResampleConfig {
    /// Defaults: estimated σ, failures abort, seed 0.
    pub fn new(grid_nodes_per_axis: usize, mmls: MmlsConfig) -> Result<Self> {
        let config = ResampleConfig {
            grid_nodes_per_axis,
            sigma: None,
            seed: 0,
            skip_failures: false,
            mmls,
        };
        config.validate()?;
        Ok(config)
    }

    /// Checks scalar parameters.
    pub fn validate(&self) -> Result<()> {
        if self.grid_nodes_per_axis == 0 {
            return Err(Error::InvalidParameter {
                name: "grid_nodes_per_axis",
                reason: "must be at least 1".into(),
            });
        }
        if let Some(sigma) = self.sigma {
            if !sigma.is_finite() || sigma <= 0.0 {
                return Err(Error::InvalidParameter {
                    name: "sigma",
                    reason: format!("must be finite and positive, got {sigma}"),
                });
            }
        }
        self.mmls.validate()
    }
}

/// Result of a densification run.
#[derive(Debug, Clone)]
pub struct ResampleOutput {
    /// The densified cloud. Provenance records, for every node, which source
    /// point and which grid cell produced it.
    pub cloud: PointCloud,
    /// Nodes that were skipped because their source point failed to project
    /// (only populated when `skip_failures` is set).
    pub dropped: Vec<PointSource>,
    /// The grid half-extent actually used.
    pub sigma: f64,
}

/// Estimates the local neighborhood radius needed for degree-`degree` fits
/// over a d-dimensional sample: the maximum, over [`SIGMA_DRAWS`] seeded
/// probe points, of the distance to the neighbor completing a unisolvent
/// set (as many sites as the polynomial space has coefficients).
pub fn estimate_sigma(
    cloud: &PointCloud,
    intrinsic_dim: usize,
    degree: usize,
    seed: u64,
) -> Result<f64> {
    if intrinsic_dim == 0 {
        return Err(Error::InvalidParameter {
            name: "intrinsic_dim",
            reason: "must be at least 1".into(),
        });
    }
    let basis_size = polynomial_space_dim(intrinsic_dim, degree);
    if cloud.len() < basis_size {
        return Err(Error::InsufficientPoints { needed: basis_size, actual: cloud.len() });
    }
    let tree = KdTree::build(cloud);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sigma = 0.0f64;
    for _ in 0..SIGMA_DRAWS {
        let i = rng.gen_range(0..cloud.len());
        // k nearest including the probe itself: the last one completes a
        // set of `basis_size` sites.
        let ring = tree.k_nearest(cloud.point(i), basis_size, None);
        let far = ring.last().expect("basis_size >= 1").1;
        sigma = sigma.max(far);
    }
    if sigma <= 0.0 {
        return Err(Error::CoincidentSamples { i: 0, j: 0, tolerance: 0.0 });
    }
    Ok(sigma)
}

/// Densifies a cloud. Every input point contributes K^d output nodes laid
/// out contiguously: node `i·K^d + g` comes from source `i` and grid cell
/// `g` (row-major over the frame axes, first axis most significant). With
/// odd K the central cell of each block is the projection of the source
/// point itself.
pub fn resample(cloud: &PointCloud, config: &ResampleConfig) -> Result<ResampleOutput> {
    config.validate()?;
    let d = config.mmls.intrinsic_dim;
    let k = config.grid_nodes_per_axis;
    let nodes_per_source = k
        .checked_pow(d as u32)
        .filter(|&n| n.checked_mul(cloud.len()).is_some())
        .ok_or_else(|| Error::InvalidParameter {
            name: "grid_nodes_per_axis",
            reason: format!("grid of {k}^{d} nodes per source is too large"),
        })?;
    let sigma = match config.sigma {
        Some(s) => s,
        None => estimate_sigma(cloud, d, config.mmls.degree, config.seed)?,
    };
    // Per-axis offsets spanning [−σ, σ]; a single node sits at the origin.
    let axis_offsets: Vec<f64> = if k == 1 {
        vec![0.0]
    } else {
        (0..k)
            .map(|j| -sigma + 2.0 * sigma * j as f64 / (k - 1) as f64)
            .collect()
    };

    let projector = Projector::new(cloud, config.mmls.clone())?;
    let per_source: Vec<std::result::Result<Vec<Vec<f64>>, Error>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let frame = projector.find_local_frame(cloud.point(i))?;
            let fit = projector.fit_local_polynomial(&frame)?;
            let mut nodes = Vec::with_capacity(nodes_per_source);
            let mut coords = vec![0.0; d];
            for g in 0..nodes_per_source {
                // Row-major digits of g in base K, first axis most
                // significant.
                let mut rest = g;
                for axis in (0..d).rev() {
                    coords[axis] = axis_offsets[rest % k];
                    rest /= k;
                }
                nodes.push(fit.polynomial.evaluate(&coords)?);
            }
            Ok(nodes)
        })
        .collect();

    let mut out = PointCloud::new(cloud.dim());
    let mut provenance = Vec::new();
    let mut dropped = Vec::new();
    for (i, block) in per_source.into_iter().enumerate() {
        match block {
            Ok(nodes) => {
                for (g, node) in nodes.into_iter().enumerate() {
                    out.push(&node)?;
                    provenance.push(PointSource {
                        source_index: i as u32,
                        grid_index: g as u32,
                    });
                }
            }
            Err(cause) => {
                if config.skip_failures {
                    for g in 0..nodes_per_source {
                        dropped.push(PointSource {
                            source_index: i as u32,
                            grid_index: g as u32,
                        });
                    }
                } else {
                    return Err(Error::ProjectionFailed {
                        source: i as u32,
                        grid: 0,
                        cause: Box::new(cause),
                    });
                }
            }
        }
    }
    out.set_provenance(provenance)?;
    Ok(ResampleOutput { cloud: out, dropped, sigma })
}
