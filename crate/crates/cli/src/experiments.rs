//! End-to-end experiment drivers: geodesic distance tables on noisy sphere
//! samples, and convergence studies against analytic manifolds.
//!
//! Both drivers are deterministic in their seed: a master stream hands each
//! realization its sub-seeds in a fixed order, so results are reproducible
//! regardless of how the work is scheduled internally.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mmls::geodesic::{build_graph, default_connection_radius, dijkstra, ConnectionRule};
use mmls::resample::{estimate_sigma, resample, ResampleConfig};
use mmls::sampling::fill_distance_estimate;
use mmls::synthetic::{add_noise, farthest_point_subsample, sample_plane, sample_sphere};
use mmls::{Error, GeodesicGraph, MmlsConfig, PointCloud, Projector, Result};

use crate::report::{
    ConvergenceLevel, ConvergenceReport, ExperimentReport, PairRecord, EXACT_REGIME_THRESHOLD,
};

/// Region-of-interest radius for sphere-borne experiments, as a multiple of
/// the sphere radius. Candidate neighborhoods must stay on one side of the
/// fold: points further than √2·R (chord) belong to the opposing hemisphere
/// and would collapse onto the local frame. 1.2·R keeps a safety margin on
/// both sides — well under √2·R ≈ 1.414·R, and large enough that a
/// unisolvent neighbor set survives sampling fluctuations at the smallest
/// sample counts used here.
pub const SPHERE_ROI_FACTOR: f64 = 1.2;

/// Fit degrees evaluated by the distance tables (estimator columns
/// `mmls_deg1` and `mmls_deg3`).
pub const TABLE_DEGREES: [usize; 2] = [1, 3];

/// Multiplier applied to the connection radius when the proximity graph
/// comes out disconnected.
pub const GRAPH_RECONNECT_FACTOR: f64 = 1.3;

/// Attempts before giving up on connecting the graph.
pub const GRAPH_RECONNECT_ATTEMPTS: usize = 8;

/// Connection-radius multiplier (over the median-spacing default) for
/// densified clouds of intrinsic dimension ≥ 2. Shortest paths over a
/// proximity graph carry a detour overhead that shrinks as the radius grows
/// past the node spacing, and a chord undershoot that grows with the hop
/// length; on densified clouds the spacing is small enough that a generous
/// multiple of the default radius kills the detour error while hops stay
/// short. The raw sample cloud gets no such multiplier: its spacing is
/// already a sizable fraction of the curvature scale, so widening its
/// radius just tunnels chords through the ambient space — that graph stays
/// at the minimal connected radius and serves as the baseline the densified
/// estimates improve on.
pub const DENSE_RADIUS_FACTOR: f64 = 3.0;

/// Radius floor for densified graphs over 1-dimensional manifolds, as a
/// multiple of the intra-grid node spacing 2σ/(K−1). On a closed curve a
/// single unbridged gap leaves the graph connected (the loop degenerates to
/// a chain) yet flips every estimate crossing the gap to the complementary
/// arc — the worst possible silent failure, invisible to a component count.
/// Gaps can only survive in regions covered by a single source's grid,
/// where consecutive nodes sit one intra-grid spacing apart, so a radius
/// above that spacing closes them by construction. Surfaces (d ≥ 2) route
/// around local gaps and keep the plain policy.
pub const CURVE_BRIDGE_FACTOR: f64 = 1.5;

/// Parameters of a distance-table experiment: repeated resamplings of a
/// randomly embedded sphere, a fixed set of random point pairs per
/// realization, and four distance estimators evaluated on every pair.
#[derive(Debug, Clone)]
pub struct DistanceTableParams {
    /// Intrinsic dimension of the sphere.
    pub intrinsic_dim: usize,
    /// Ambient embedding dimension.
    pub ambient_dim: usize,
    /// Sphere radius.
    pub radius: f64,
    /// Samples per realization.
    pub samples: usize,
    /// Grid nodes per frame axis for densification (odd, so the central
    /// node of each block is the projection of its source sample).
    pub grid_nodes: usize,
    /// Point pairs evaluated per realization.
    pub pairs: usize,
    /// Number of independent realizations pooled into the summary.
    pub realizations: usize,
    /// Standard deviation of per-coordinate Gaussian noise.
    pub noise_sigma: f64,
    /// Master seed.
    pub seed: u64,
}

impl DistanceTableParams {
    /// Desk-scale table: 100 clean samples of S² ⊂ R²⁰, radius 0.5, 3-node
    /// grids, 100 pairs × 20 realizations.
    pub fn desk_scale(seed: u64) -> Self {
        DistanceTableParams {
            intrinsic_dim: 2,
            ambient_dim: 20,
            radius: 0.5,
            samples: 100,
            grid_nodes: 3,
            pairs: 100,
            realizations: 20,
            noise_sigma: 0.0,
            seed,
        }
    }

    /// Noise-study table: 400 samples, 5-node grids, configurable noise.
    pub fn noisy(noise_sigma: f64, seed: u64) -> Self {
        DistanceTableParams {
            samples: 400,
            grid_nodes: 5,
            noise_sigma,
            ..DistanceTableParams::desk_scale(seed)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.intrinsic_dim == 0 || self.ambient_dim < self.intrinsic_dim + 1 {
            return Err(Error::InvalidParameter {
                name: "intrinsic_dim",
                reason: format!(
                    "need 1 <= d < D, got d = {}, D = {}",
                    self.intrinsic_dim, self.ambient_dim
                ),
            });
        }
        if self.grid_nodes % 2 == 0 {
            return Err(Error::InvalidParameter {
                name: "grid_nodes",
                reason: "must be odd so each sample has a central grid node".into(),
            });
        }
        if self.samples < 2 || self.pairs == 0 || self.realizations == 0 {
            return Err(Error::InvalidParameter {
                name: "samples",
                reason: "need at least 2 samples, 1 pair, 1 realization".into(),
            });
        }
        if !self.radius.is_finite() || self.radius <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "radius",
                reason: format!("must be finite and positive, got {}", self.radius),
            });
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::InvalidParameter {
                name: "noise_sigma",
                reason: format!("must be finite and non-negative, got {}", self.noise_sigma),
            });
        }
        Ok(())
    }
}

/// Builds a radius graph at `factor` times the default connection radius,
/// widening geometrically until the graph is connected. Returns the graph
/// and the number of widenings used.
fn connected_graph(cloud: &PointCloud, factor: f64) -> Result<(GeodesicGraph, usize)> {
    let radius = factor * default_connection_radius(cloud)?;
    connected_graph_from(cloud, radius)
}

/// Builds a radius graph starting at `radius`, widening geometrically until
/// the graph is connected. Returns the graph and the number of widenings.
fn connected_graph_from(cloud: &PointCloud, mut radius: f64) -> Result<(GeodesicGraph, usize)> {
    for boosts in 0..=GRAPH_RECONNECT_ATTEMPTS {
        let graph = build_graph(cloud, ConnectionRule::Radius(radius))?;
        if graph.component_count() == 1 {
            return Ok((graph, boosts));
        }
        radius *= GRAPH_RECONNECT_FACTOR;
    }
    Err(Error::Disconnected)
}

/// Runs a distance-table experiment. Per realization: sample the sphere,
/// add noise, draw pairs, then estimate each pair's geodesic four ways —
/// straight-line distance, shortest path over the raw samples, and shortest
/// paths over two densified clouds (degree-1 and degree-3 fits). Truths are
/// exact geodesics between the clean (pre-noise) endpoint positions, and
/// the summary pools all realizations.
pub fn run_distance_table(params: &DistanceTableParams) -> Result<ExperimentReport> {
    params.validate()?;
    let start = Instant::now();
    let d = params.intrinsic_dim;
    let n = params.samples;
    let k = params.grid_nodes;
    let nodes_per_source = k.pow(d as u32);
    let center_cell = (nodes_per_source - 1) / 2;
    let roi = SPHERE_ROI_FACTOR * params.radius;

    let estimators: Vec<String> = ["euclidean", "raw_graph"]
        .into_iter()
        .map(String::from)
        .chain(TABLE_DEGREES.iter().map(|deg| format!("mmls_deg{deg}")))
        .collect();
    let mut records: Vec<PairRecord> = Vec::with_capacity(params.realizations * params.pairs);
    let mut raw_boosts_total = 0usize;
    let mut dense_boosts_total = 0usize;

    let mut master = ChaCha8Rng::seed_from_u64(params.seed);
    for realization in 0..params.realizations {
        // Sub-seeds in a fixed order, independent of what follows.
        let sphere_seed: u64 = master.gen();
        let noise_seed: u64 = master.gen();
        let pair_seed: u64 = master.gen();
        let sigma_seed: u64 = master.gen();

        let (clean, embedding) =
            sample_sphere(d, params.ambient_dim, params.radius, n, sphere_seed)?;
        let noisy = add_noise(&clean, params.noise_sigma, noise_seed)?;

        let mut pair_rng = ChaCha8Rng::seed_from_u64(pair_seed);
        let pairs: Vec<(usize, usize)> = (0..params.pairs)
            .map(|_| loop {
                let i = pair_rng.gen_range(0..n);
                let j = pair_rng.gen_range(0..n);
                if i != j {
                    break (i, j);
                }
            })
            .collect();

        // Truths (clean endpoints) and the two sample-cloud estimators.
        let mut truths = Vec::with_capacity(pairs.len());
        let mut euclidean = Vec::with_capacity(pairs.len());
        for &(i, j) in &pairs {
            truths.push(embedding.geodesic(clean.point(i), clean.point(j))?);
            euclidean.push(point_distance(noisy.point(i), noisy.point(j)));
        }
        let (raw_graph, boosts) = connected_graph(&noisy, 1.0)?;
        raw_boosts_total += boosts;
        let mut raw_estimates = Vec::with_capacity(pairs.len());
        for &(i, j) in &pairs {
            raw_estimates.push(dijkstra(&raw_graph, i, j)?.distance);
        }

        // Densified estimators, one per fit degree. The tangent grid spans
        // the local sample spacing (the ring radius of a linear-fit basis),
        // independent of the fit degree: nodes placed out at the full
        // weight-support radius of a high-degree fit would sit where the
        // polynomial is at its worst.
        let grid_sigma = estimate_sigma(&noisy, d, 1, sigma_seed)?;
        let mut dense_estimates: Vec<Vec<f64>> = Vec::with_capacity(TABLE_DEGREES.len());
        for &degree in &TABLE_DEGREES {
            let h = estimate_sigma(&noisy, d, degree, sigma_seed)?;
            let mmls = MmlsConfig::new(d, degree, h)?.with_roi_radius(roi)?;
            let mut resample_config = ResampleConfig::new(k, mmls)?;
            resample_config.sigma = Some(grid_sigma);
            resample_config.seed = sigma_seed;
            let densified = resample(&noisy, &resample_config)?;
            debug_assert_eq!(densified.cloud.len(), n * nodes_per_source);
            let (graph, boosts) = connected_graph(&densified.cloud, DENSE_RADIUS_FACTOR)?;
            dense_boosts_total += boosts;
            let mut estimates = Vec::with_capacity(pairs.len());
            for &(i, j) in &pairs {
                let from = i * nodes_per_source + center_cell;
                let to = j * nodes_per_source + center_cell;
                estimates.push(dijkstra(&graph, from, to)?.distance);
            }
            dense_estimates.push(estimates);
        }

        for (p, &(i, j)) in pairs.iter().enumerate() {
            let mut estimates = vec![euclidean[p], raw_estimates[p]];
            estimates.extend(dense_estimates.iter().map(|col| col[p]));
            records.push(PairRecord {
                realization: realization as u32,
                source: i as u32,
                target: j as u32,
                truth: truths[p],
                estimates,
            });
        }
    }

    // Pooled summary across every record.
    let truths: Vec<f64> = records.iter().map(|r| r.truth).collect();
    let rmse: Vec<f64> = (0..estimators.len())
        .map(|e| {
            let estimates: Vec<f64> = records.iter().map(|r| r.estimates[e]).collect();
            mmls::rmse_percent(&estimates, &truths)
        })
        .collect::<Result<_>>()?;

    let config = vec![
        ("intrinsic_dim".into(), params.intrinsic_dim.to_string()),
        ("ambient_dim".into(), params.ambient_dim.to_string()),
        ("radius".into(), params.radius.to_string()),
        ("samples".into(), params.samples.to_string()),
        ("grid_nodes".into(), params.grid_nodes.to_string()),
        ("pairs".into(), params.pairs.to_string()),
        ("realizations".into(), params.realizations.to_string()),
        ("noise_sigma".into(), params.noise_sigma.to_string()),
        ("seed".into(), params.seed.to_string()),
        ("roi_radius".into(), roi.to_string()),
        ("fit_degrees".into(), "1,3".into()),
        ("raw_graph_radius_boosts".into(), raw_boosts_total.to_string()),
        ("densified_graph_radius_boosts".into(), dense_boosts_total.to_string()),
    ];
    Ok(ExperimentReport {
        name: "distance-table".into(),
        config,
        estimators,
        records,
        rmse,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn point_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Test manifolds for convergence studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manifold {
    /// Unit circle in R² (geodesic errors available).
    Circle,
    /// Unit sphere in R³.
    Sphere,
    /// Affine plane in R³ (exact regime for every fit degree).
    Plane,
}

impl std::str::FromStr for Manifold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(Manifold::Circle),
            "sphere" => Ok(Manifold::Sphere),
            "plane" => Ok(Manifold::Plane),
            other => Err(Error::InvalidParameter {
                name: "manifold",
                reason: format!("unknown manifold {other:?} (circle, sphere, plane)"),
            }),
        }
    }
}

impl std::fmt::Display for Manifold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Manifold::Circle => "circle",
            Manifold::Sphere => "sphere",
            Manifold::Plane => "plane",
        })
    }
}

/// Parameters of a convergence study over dyadically growing sample counts.
#[derive(Debug, Clone)]
pub struct ConvergenceParams {
    /// Manifold to sample.
    pub manifold: Manifold,
    /// Approximation order (fit degree + 1).
    pub order: usize,
    /// Sample counts per level, coarsest first.
    pub levels: Vec<usize>,
    /// On-surface probe points projected per level.
    pub probes: usize,
    /// Geodesic pairs per level (circle only; 0 skips geodesics).
    pub pairs: usize,
    /// Grid nodes per axis when densifying for geodesics (odd).
    pub grid_nodes: usize,
    /// Master seed.
    pub seed: u64,
}

impl ConvergenceParams {
    /// Sphere defaults: 4 dyadic levels, 300 probes, no geodesics.
    pub fn sphere_defaults(order: usize, seed: u64) -> Self {
        ConvergenceParams {
            manifold: Manifold::Sphere,
            order,
            levels: vec![250, 1000, 4000, 16000],
            probes: 300,
            pairs: 0,
            grid_nodes: 7,
            seed,
        }
    }

    /// Circle defaults: 5 dyadic levels, geodesic errors over 100 pairs.
    /// The fine 13-node grids keep the graph's bridging-radius floor (and
    /// with it the chord-undershoot floor) below the fit error under study.
    pub fn circle_defaults(order: usize, seed: u64) -> Self {
        ConvergenceParams {
            manifold: Manifold::Circle,
            order,
            levels: vec![32, 64, 128, 256, 512],
            probes: 100,
            pairs: 100,
            grid_nodes: 13,
            seed,
        }
    }

    /// Plane defaults: 3 levels, surface probes only.
    pub fn plane_defaults(order: usize, seed: u64) -> Self {
        ConvergenceParams {
            manifold: Manifold::Plane,
            order,
            levels: vec![250, 1000, 4000],
            probes: 200,
            pairs: 0,
            grid_nodes: 7,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::InvalidParameter {
                name: "order",
                reason: "approximation order must be at least 2 (fit degree at least 1)".into(),
            });
        }
        if self.levels.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "levels",
                reason: "need at least two levels for a slope".into(),
            });
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter {
                name: "levels",
                reason: "sample counts must be strictly increasing".into(),
            });
        }
        if self.probes == 0 {
            return Err(Error::InvalidParameter {
                name: "probes",
                reason: "need at least one probe".into(),
            });
        }
        if self.pairs > 0 && self.grid_nodes % 2 == 0 {
            return Err(Error::InvalidParameter {
                name: "grid_nodes",
                reason: "must be odd so samples keep central grid nodes".into(),
            });
        }
        if self.pairs > 0 && self.manifold != Manifold::Circle {
            return Err(Error::InvalidParameter {
                name: "pairs",
                reason: "geodesic pairs are only evaluated on the circle".into(),
            });
        }
        Ok(())
    }
}

/// Pool oversampling factor for farthest-point subsampling: each level's
/// quasi-uniform sample is selected from this many times more i.i.d. draws.
pub const FPS_POOL_FACTOR: usize = 4;

/// Shortest admissible geodesic truth (relative to the circle radius) for
/// convergence pairs; shorter paths are dominated by endpoint placement
/// rather than the rate under study.
pub const MIN_GEODESIC_FRACTION: f64 = 0.5;

/// Runs a convergence study: at each level, draw an i.i.d. pool, select a
/// quasi-uniform subsample by farthest-point selection, measure its fill
/// distance, project seeded on-surface probes, and (on the circle) estimate
/// geodesics over a densified cloud. Errors are compared against the
/// analytic surface; log-log slopes are fitted against the measured fill.
pub fn run_convergence(params: &ConvergenceParams) -> Result<ConvergenceReport> {
    params.validate()?;
    let start = Instant::now();
    let degree = params.order - 1;
    let mut master = ChaCha8Rng::seed_from_u64(params.seed);
    let mut levels = Vec::with_capacity(params.levels.len());

    for &n in &params.levels {
        let pool_seed: u64 = master.gen();
        let fps_seed: u64 = master.gen();
        let sigma_seed: u64 = master.gen();
        let probe_seed: u64 = master.gen();
        let pair_seed: u64 = master.gen();

        let level = match params.manifold {
            Manifold::Sphere => {
                let (pool, embedding) =
                    sample_sphere(2, 3, 1.0, n * FPS_POOL_FACTOR, pool_seed)?;
                let cloud = select_subsample(&pool, n, fps_seed)?;
                let fill = fill_distance_estimate(&cloud, &pool)?;
                let h = estimate_sigma(&cloud, 2, degree, sigma_seed)?;
                let mmls = MmlsConfig::new(2, degree, h)?
                    .with_roi_radius(SPHERE_ROI_FACTOR * embedding.radius())?;
                let projector = Projector::new(&cloud, mmls)?;
                let mut probe_rng = ChaCha8Rng::seed_from_u64(probe_seed);
                let probes = embedding.sample(params.probes, &mut probe_rng)?;
                let mut surface_error_max = 0.0f64;
                for p in probes.iter() {
                    let projected = projector.project(p)?;
                    surface_error_max =
                        surface_error_max.max(embedding.surface_distance(&projected)?);
                }
                ConvergenceLevel { n, fill, surface_error_max, geodesic_relative_error: None }
            }
            Manifold::Circle => {
                let (pool, embedding) =
                    sample_sphere(1, 2, 1.0, n * FPS_POOL_FACTOR, pool_seed)?;
                let cloud = select_subsample(&pool, n, fps_seed)?;
                let fill = fill_distance_estimate(&cloud, &pool)?;
                let h = estimate_sigma(&cloud, 1, degree, sigma_seed)?;
                let mmls = MmlsConfig::new(1, degree, h)?
                    .with_roi_radius(SPHERE_ROI_FACTOR * embedding.radius())?;
                let projector = Projector::new(&cloud, mmls)?;
                let mut probe_rng = ChaCha8Rng::seed_from_u64(probe_seed);
                let probes = embedding.sample(params.probes, &mut probe_rng)?;
                let mut surface_error_max = 0.0f64;
                for p in probes.iter() {
                    let projected = projector.project(p)?;
                    surface_error_max =
                        surface_error_max.max(embedding.surface_distance(&projected)?);
                }
                let geodesic_relative_error = if params.pairs > 0 {
                    Some(circle_geodesic_error(
                        &cloud,
                        &embedding,
                        degree,
                        h,
                        params.grid_nodes,
                        params.pairs,
                        pair_seed,
                        sigma_seed,
                    )?)
                } else {
                    None
                };
                ConvergenceLevel { n, fill, surface_error_max, geodesic_relative_error }
            }
            Manifold::Plane => {
                let (pool, plane) = sample_plane(2, 3, 1.0, n * FPS_POOL_FACTOR, pool_seed)?;
                let cloud = select_subsample(&pool, n, fps_seed)?;
                let fill = fill_distance_estimate(&cloud, &pool)?;
                let h = estimate_sigma(&cloud, 2, degree, sigma_seed)?;
                let mmls = MmlsConfig::new(2, degree, h)?;
                let projector = Projector::new(&cloud, mmls)?;
                // Probes stay inside the half-extent square: boundary cells
                // have one-sided neighborhoods that would muddy the rates.
                let mut probe_rng = ChaCha8Rng::seed_from_u64(probe_seed);
                let mut surface_error_max = 0.0f64;
                for _ in 0..params.probes {
                    let coords =
                        [probe_rng.gen_range(-0.5..0.5), probe_rng.gen_range(-0.5..0.5)];
                    let probe = plane.embed(&coords)?;
                    let projected = projector.project(&probe)?;
                    surface_error_max =
                        surface_error_max.max(plane.surface_distance(&projected)?);
                }
                ConvergenceLevel { n, fill, surface_error_max, geodesic_relative_error: None }
            }
        };
        levels.push(level);
    }

    let exact_regime = levels.iter().all(|l| l.surface_error_max < EXACT_REGIME_THRESHOLD);
    let fills: Vec<f64> = levels.iter().map(|l| l.fill).collect();
    let surface_slope = if exact_regime {
        None
    } else {
        let errors: Vec<f64> = levels.iter().map(|l| l.surface_error_max).collect();
        Some(crate::report::log_log_slope(&fills, &errors)?)
    };
    let geodesic_slope = if levels.iter().all(|l| l.geodesic_relative_error.is_some()) {
        let errors: Vec<f64> =
            levels.iter().filter_map(|l| l.geodesic_relative_error).collect();
        if errors.iter().all(|&e| e > 0.0) {
            Some(crate::report::log_log_slope(&fills, &errors)?)
        } else {
            None
        }
    } else {
        None
    };

    let config = vec![
        ("order".into(), params.order.to_string()),
        (
            "levels".into(),
            params
                .levels
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
        ),
        ("probes".into(), params.probes.to_string()),
        ("pairs".into(), params.pairs.to_string()),
        ("grid_nodes".into(), params.grid_nodes.to_string()),
        ("pool_factor".into(), FPS_POOL_FACTOR.to_string()),
        ("seed".into(), params.seed.to_string()),
    ];
    Ok(ConvergenceReport {
        manifold: params.manifold.to_string(),
        order: params.order,
        config,
        levels,
        surface_slope,
        geodesic_slope,
        exact_regime,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Farthest-point subsample of a pool, materialized as a cloud.
fn select_subsample(pool: &PointCloud, n: usize, seed: u64) -> Result<PointCloud> {
    let picked = farthest_point_subsample(pool, n, seed)?;
    let mut cloud = PointCloud::new(pool.dim());
    for &i in &picked {
        cloud.push(pool.point(i))?;
    }
    Ok(cloud)
}

/// Mean relative geodesic error on the circle: densify, connect, run
/// shortest paths between central grid nodes of sampled endpoint pairs, and
/// compare against exact arc lengths. Pairs shorter than half the radius
/// are redrawn.
#[allow(clippy::too_many_arguments)]
fn circle_geodesic_error(
    cloud: &PointCloud,
    embedding: &mmls::SphereEmbedding,
    degree: usize,
    h: f64,
    grid_nodes: usize,
    pairs: usize,
    pair_seed: u64,
    sigma_seed: u64,
) -> Result<f64> {
    let n = cloud.len();
    let mmls = MmlsConfig::new(1, degree, h)?
        .with_roi_radius(SPHERE_ROI_FACTOR * embedding.radius())?;
    let mut resample_config = ResampleConfig::new(grid_nodes, mmls)?;
    resample_config.sigma = Some(estimate_sigma(cloud, 1, 1, sigma_seed)?);
    resample_config.seed = sigma_seed;
    let densified = resample(cloud, &resample_config)?;
    let intra_grid = 2.0 * densified.sigma / (grid_nodes - 1) as f64;
    let radius = (DENSE_RADIUS_FACTOR * default_connection_radius(&densified.cloud)?)
        .max(CURVE_BRIDGE_FACTOR * intra_grid);
    let (graph, _) = connected_graph_from(&densified.cloud, radius)?;
    let center_cell = (grid_nodes - 1) / 2;

    let mut rng = ChaCha8Rng::seed_from_u64(pair_seed);
    let min_truth = MIN_GEODESIC_FRACTION * embedding.radius();
    let mut total = 0.0;
    for _ in 0..pairs {
        let (i, j, truth) = loop {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i == j {
                continue;
            }
            let truth = embedding.geodesic(cloud.point(i), cloud.point(j))?;
            if truth >= min_truth {
                break (i, j, truth);
            }
        };
        let from = i * grid_nodes + center_cell;
        let to = j * grid_nodes + center_cell;
        let estimate = dijkstra(&graph, from, to)?.distance;
        total += (estimate - truth).abs() / truth;
    }
    Ok(total / pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_table_params(seed: u64) -> DistanceTableParams {
        DistanceTableParams {
            samples: 60,
            pairs: 10,
            realizations: 2,
            ..DistanceTableParams::desk_scale(seed)
        }
    }

    #[test]
    fn distance_table_is_deterministic_in_the_seed() {
        let params = tiny_table_params(11);
        let a = run_distance_table(&params).unwrap();
        let b = run_distance_table(&params).unwrap();
        assert_eq!(a.rmse, b.rmse);
        assert_eq!(a.records.len(), b.records.len());
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.truth, rb.truth);
            assert_eq!(ra.estimates, rb.estimates);
        }
        let c = run_distance_table(&tiny_table_params(12)).unwrap();
        assert_ne!(a.records[0].truth, c.records[0].truth);
    }

    #[test]
    fn distance_table_beats_its_baselines() {
        let report = run_distance_table(&tiny_table_params(3)).unwrap();
        assert_eq!(
            report.estimators,
            vec!["euclidean", "raw_graph", "mmls_deg1", "mmls_deg3"]
        );
        let rmse = |name: &str| report.estimator_rmse(name).unwrap();
        // The high-order densified estimate must beat the low-order one,
        // which must beat the raw-sample graph.
        assert!(rmse("mmls_deg3") < rmse("mmls_deg1"));
        assert!(rmse("mmls_deg1") < rmse("raw_graph"));
        // Straight-line distance underestimates every sphere geodesic, so
        // its pooled error is far from zero.
        assert!(rmse("euclidean") > 5.0);
        // Record layout: realizations x pairs, estimates aligned.
        assert_eq!(report.records.len(), 20);
        assert!(report.records.iter().all(|r| r.estimates.len() == 4));
        assert!(report.records.iter().all(|r| r.truth > 0.0));
    }

    #[test]
    fn distance_table_rejects_bad_parameters() {
        let mut p = tiny_table_params(1);
        p.grid_nodes = 4;
        assert!(run_distance_table(&p).is_err());
        let mut p = tiny_table_params(1);
        p.noise_sigma = -0.5;
        assert!(run_distance_table(&p).is_err());
        let mut p = tiny_table_params(1);
        p.pairs = 0;
        assert!(run_distance_table(&p).is_err());
        let mut p = tiny_table_params(1);
        p.ambient_dim = 2;
        assert!(run_distance_table(&p).is_err());
    }

    #[test]
    fn convergence_study_runs_and_orders_levels() {
        let params = ConvergenceParams {
            manifold: Manifold::Circle,
            order: 2,
            levels: vec![24, 48],
            probes: 10,
            pairs: 5,
            grid_nodes: 5,
            seed: 9,
        };
        let report = run_convergence(&params).unwrap();
        assert_eq!(report.levels.len(), 2);
        assert!(report.levels[0].fill > report.levels[1].fill);
        assert!(report.levels[0].surface_error_max > 0.0);
        assert!(report
            .levels
            .iter()
            .all(|l| l.geodesic_relative_error.is_some()));
        assert!(!report.exact_regime);
        assert!(report.surface_slope.is_some());
    }

    #[test]
    fn plane_study_reports_the_exact_regime() {
        let params = ConvergenceParams {
            manifold: Manifold::Plane,
            order: 3,
            levels: vec![80, 160],
            probes: 20,
            pairs: 0,
            grid_nodes: 5,
            seed: 2,
        };
        let report = run_convergence(&params).unwrap();
        assert!(report.exact_regime);
        assert!(report.surface_slope.is_none());
        assert!(report.geodesic_slope.is_none());
        assert!(report
            .levels
            .iter()
            .all(|l| l.surface_error_max < EXACT_REGIME_THRESHOLD));
    }

    #[test]
    fn convergence_rejects_bad_parameters() {
        let good = ConvergenceParams::circle_defaults(3, 1);
        let mut p = good.clone();
        p.order = 1;
        assert!(run_convergence(&p).is_err());
        let mut p = good.clone();
        p.levels = vec![32];
        assert!(run_convergence(&p).is_err());
        let mut p = good.clone();
        p.levels = vec![64, 32];
        assert!(run_convergence(&p).is_err());
        let mut p = good.clone();
        p.grid_nodes = 6;
        assert!(run_convergence(&p).is_err());
        // Geodesic pairs only make sense on the circle.
        let mut p = ConvergenceParams::sphere_defaults(3, 1);
        p.pairs = 5;
        assert!(run_convergence(&p).is_err());
    }

    #[test]
    fn manifold_names_parse_both_ways() {
        for (name, value) in [
            ("circle", Manifold::Circle),
            ("sphere", Manifold::Sphere),
            ("plane", Manifold::Plane),
        ] {
            assert_eq!(name.parse::<Manifold>().unwrap(), value);
            assert_eq!(value.to_string(), name);
        }
        assert!("torus".parse::<Manifold>().is_err());
    }
}
