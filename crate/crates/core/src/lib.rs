//! Manifold moving least-squares (MMLS) for scattered point clouds.
//!
//! Given a cloud of samples lying on (or noisily near) an unknown smooth
//! d-dimensional manifold embedded in `R^D`, this crate
//!
//! 1. **projects** arbitrary nearby points onto a smooth approximating
//!    manifold defined implicitly by a two-step moving least-squares
//!    construction ([`mmls`]),
//! 2. **densifies** the cloud to arbitrary resolution by projecting local
//!    grids spanned in the per-sample tangent frames ([`resample`]), and
//! 3. estimates **intrinsic geodesic distances** by running shortest-path
//!    searches over a neighborhood graph of the densified cloud
//!    ([`geodesic`]).
//!
//! The projection never builds a global parameterization: each query gets a
//! local origin and tangent frame (a weighted principal subspace computed by
//! a fixed-point iteration) and a local weighted polynomial fit over that
//! frame. Approximation order is controlled by the fit degree `m`: the
//! densified cloud approaches the sampled manifold at rate `h^(m+1)` in
//! Hausdorff distance and geodesic estimates converge at rate `h^m`, where
//! `h` is the fill distance of the input sample.
//!
//! Supporting modules: [`sampling`] (fill distance / separation diagnostics),
//! [`weights`] (compactly supported radial weights), [`mls`] (flat-domain
//! weighted polynomial fits), [`synthetic`] (seeded sphere/plane generators
//! and analytic oracles for validation), [`spatial`] (kd-tree), and [`io`]
//! (plain-text cloud files).

pub mod cloud;
pub mod error;
pub mod geodesic;
pub mod io;
pub mod mls;
pub mod mmls;
pub mod resample;
pub mod sampling;
pub mod spatial;
pub mod synthetic;
pub mod weights;

pub use cloud::{PointCloud, PointSource};
pub use error::{Error, Result};
pub use geodesic::{
    build_graph, default_connection_radius, dijkstra, geodesic_estimate, rmse_percent,
    ConnectionRule, GeodesicGraph, PathResult,
};
pub use mls::{mls_directional_derivative, mls_eval, mls_fit, MlsFit, VectorPolynomial};
pub use mmls::{find_local_frame, fit_local_polynomial, project, project_batch, LocalFrame,
    MmlsConfig, Projector};
pub use resample::{estimate_sigma, resample, ResampleConfig, ResampleOutput};
pub use sampling::{
    density_bound_check, fill_distance_estimate, separation_radius, SamplingStats,
};
pub use synthetic::{
    add_noise, farthest_point_subsample, sample_plane, sample_sphere, sphere_geodesic_oracle,
    PlaneEmbedding, SphereEmbedding,
};
pub use weights::{WeightProfile, WeightShape};
