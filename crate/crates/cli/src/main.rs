//! `mmls` — manifold reconstruction, densification, and geodesic estimation
//! from scattered point samples.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mmls::geodesic::{geodesic_estimate, ConnectionRule};
use mmls::io::{read_cloud, write_cloud, write_embedding};
use mmls::sampling::{fill_distance_estimate, separation_radius};
use mmls::synthetic::{add_noise, sample_sphere};
use mmls::{
    default_connection_radius, resample, Error, MmlsConfig, PointCloud, Projector,
    ResampleConfig, Result,
};
use mmls_cli::{
    run_convergence, run_distance_table, ConvergenceParams, DistanceTableParams, Manifold,
};

#[derive(Parser)]
#[command(
    name = "mmls",
    version,
    about = "Manifold moving least-squares: project, densify, and measure scattered samples",
    long_about = "Reconstructs a smooth manifold approximation from scattered point samples, \
                  densifies it to arbitrary resolution, and estimates intrinsic geodesic \
                  distances over the densified cloud."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Shared fit options: approximation order and the weight scale.
#[derive(Args)]
struct FitArgs {
    /// Approximation order k (fit degree k-1); at least 2.
    #[arg(short = 'k', long = "order", default_value_t = 3)]
    order: usize,

    /// Weight scale h. Defaults to twice the cloud's separation radius,
    /// which tracks the fill distance of quasi-uniform samples.
    #[arg(long)]
    h: Option<f64>,

    /// Region-of-interest radius around each query. Defaults to 10·h; cap
    /// it below the manifold's reach to keep far sheets invisible.
    #[arg(long)]
    roi: Option<f64>,
}

impl FitArgs {
    fn config(&self, cloud: &PointCloud, intrinsic_dim: usize) -> Result<MmlsConfig> {
        let degree = order_to_degree(self.order)?;
        let h = match self.h {
            Some(h) => h,
            None => 2.0 * separation_radius(cloud)?,
        };
        let config = MmlsConfig::new(intrinsic_dim, degree, h)?;
        match self.roi {
            Some(mu) => config.with_roi_radius(mu),
            None => Ok(config),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a randomly embedded d-sphere, optionally with Gaussian noise.
    SampleSphere {
        /// Intrinsic dimension d of the sphere.
        #[arg(short = 'd', long = "intrinsic-dim", default_value_t = 2)]
        intrinsic_dim: usize,
        /// Ambient dimension D of the embedding space.
        #[arg(short = 'D', long = "ambient-dim", default_value_t = 3)]
        ambient_dim: usize,
        /// Sphere radius.
        #[arg(short = 'R', long = "radius", default_value_t = 1.0)]
        radius: f64,
        /// Number of samples.
        #[arg(short = 'n', long = "samples", default_value_t = 1000)]
        samples: usize,
        /// Per-coordinate Gaussian noise standard deviation.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// RNG seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output cloud file.
        #[arg(long)]
        out: PathBuf,
        /// Also write the exact embedding (for later oracle comparisons).
        #[arg(long)]
        embedding_out: Option<PathBuf>,
    },

    /// Project query points onto the manifold approximation of a cloud.
    Project {
        /// Sample cloud file.
        #[arg(long)]
        cloud: PathBuf,
        /// Query points file (same ambient dimension as the cloud).
        #[arg(long)]
        queries: PathBuf,
        /// Intrinsic dimension d of the sampled manifold.
        #[arg(short = 'd', long = "intrinsic-dim", default_value_t = 2)]
        intrinsic_dim: usize,
        #[command(flatten)]
        fit: FitArgs,
        /// Output file for the projected points.
        #[arg(long)]
        out: PathBuf,
    },

    /// Densify a cloud by projecting per-sample tangent grids.
    Resample {
        /// Sample cloud file.
        #[arg(long)]
        cloud: PathBuf,
        /// Intrinsic dimension d of the sampled manifold.
        #[arg(short = 'd', long = "intrinsic-dim", default_value_t = 2)]
        intrinsic_dim: usize,
        /// Grid nodes per tangent axis (each sample becomes K^d nodes).
        #[arg(short = 'K', long = "grid-nodes", default_value_t = 3)]
        grid_nodes: usize,
        /// Tangent grid half-width. Defaults to an estimate of the distance
        /// to the farthest of the nearest basis-size samples.
        #[arg(long)]
        sigma: Option<f64>,
        /// Seed for the grid half-width estimate.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Drop sources whose projections fail instead of aborting.
        #[arg(long, default_value_t = false)]
        skip_failures: bool,
        #[command(flatten)]
        fit: FitArgs,
        /// Output file for the densified cloud.
        #[arg(long)]
        out: PathBuf,
    },

    /// Shortest-path distance between two cloud points over a proximity graph.
    Geodesic {
        /// Cloud file (typically a densified cloud).
        #[arg(long)]
        cloud: PathBuf,
        /// Source point index.
        #[arg(long)]
        source: usize,
        /// Target point index.
        #[arg(long)]
        target: usize,
        /// Connection radius. Defaults to 2.2× the median nearest-neighbor
        /// spacing.
        #[arg(long, conflicts_with = "knearest")]
        radius: Option<f64>,
        /// Connect each node to its k nearest neighbors instead.
        #[arg(long)]
        knearest: Option<usize>,
        /// Also print the node indices along the path.
        #[arg(long, default_value_t = false)]
        path: bool,
    },

    /// Sampling diagnostics: separation, connection radius, optional fill.
    Stats {
        /// Cloud file.
        #[arg(long)]
        cloud: PathBuf,
        /// Dense reference cloud for a fill-distance estimate.
        #[arg(long)]
        reference: Option<PathBuf>,
    },

    /// Geodesic accuracy table: 100 desk-scale sphere samples in R^20.
    Table1 {
        /// RNG seed.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Realizations to pool.
        #[arg(long, default_value_t = 20)]
        realizations: usize,
        /// Point pairs per realization.
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        /// Write the full per-pair table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Geodesic accuracy table under noise: 400 sphere samples in R^20.
    Table2 {
        /// Per-coordinate Gaussian noise standard deviation.
        #[arg(long, default_value_t = 1e-2)]
        noise: f64,
        /// RNG seed.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Realizations to pool.
        #[arg(long, default_value_t = 20)]
        realizations: usize,
        /// Point pairs per realization.
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        /// Write the full per-pair table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Convergence study against an analytic manifold.
    Convergence {
        /// Manifold: circle, sphere, or plane.
        #[arg(long, default_value = "sphere")]
        manifold: String,
        /// Approximation order k (fit degree k-1); at least 2.
        #[arg(short = 'k', long = "order", default_value_t = 3)]
        order: usize,
        /// Comma-separated sample counts, coarsest first (defaults depend
        /// on the manifold).
        #[arg(long)]
        levels: Option<String>,
        /// On-surface probe points per level.
        #[arg(long)]
        probes: Option<usize>,
        /// Geodesic pairs per level (circle only).
        #[arg(long)]
        pairs: Option<usize>,
        /// RNG seed.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Write per-level errors as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn order_to_degree(order: usize) -> Result<usize> {
    if order < 2 {
        return Err(Error::InvalidParameter {
            name: "order",
            reason: format!("approximation order must be at least 2, got {order}"),
        });
    }
    Ok(order - 1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// Maps errors to exit codes: 2 for invalid input, 3 for numerical failure
/// (the data cannot support the request at the requested scale), 4 for file
/// problems.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Parse { .. } => 4,
        Error::InvalidParameter { .. }
        | Error::DimensionMismatch { .. }
        | Error::InsufficientPoints { .. }
        | Error::IndexOutOfRange { .. }
        | Error::CoincidentSamples { .. }
        | Error::OffSphere { .. } => 2,
        Error::ProjectionFailed { cause, .. } => exit_code(cause),
        _ => 3,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::SampleSphere {
            intrinsic_dim,
            ambient_dim,
            radius,
            samples,
            noise,
            seed,
            out,
            embedding_out,
        } => {
            let (clean, embedding) =
                sample_sphere(intrinsic_dim, ambient_dim, radius, samples, seed)?;
            let cloud = add_noise(&clean, noise, seed.wrapping_add(1))?;
            write_cloud(&out, &cloud)?;
            println!(
                "wrote {} samples of S^{} (radius {}) in R^{} to {}",
                cloud.len(),
                intrinsic_dim,
                radius,
                ambient_dim,
                out.display()
            );
            if let Some(path) = embedding_out {
                write_embedding(&path, &embedding)?;
                println!("wrote embedding to {}", path.display());
            }
            Ok(())
        }

        Command::Project { cloud, queries, intrinsic_dim, fit, out } => {
            let cloud = read_cloud(&cloud)?;
            let queries = read_cloud(&queries)?;
            let config = fit.config(&cloud, intrinsic_dim)?;
            let projector = Projector::new(&cloud, config)?;
            let projected = projector.project_batch(&queries)?;
            write_cloud(&out, &projected)?;
            println!("projected {} queries to {}", projected.len(), out.display());
            Ok(())
        }

        Command::Resample {
            cloud,
            intrinsic_dim,
            grid_nodes,
            sigma,
            seed,
            skip_failures,
            fit,
            out,
        } => {
            let cloud = read_cloud(&cloud)?;
            let mmls = fit.config(&cloud, intrinsic_dim)?;
            let mut config = ResampleConfig::new(grid_nodes, mmls)?;
            config.sigma = sigma;
            config.seed = seed;
            config.skip_failures = skip_failures;
            let output = resample(&cloud, &config)?;
            write_cloud(&out, &output.cloud)?;
            println!(
                "densified {} samples into {} nodes (grid half-width {:.6}) at {}",
                cloud.len(),
                output.cloud.len(),
                output.sigma,
                out.display()
            );
            if !output.dropped.is_empty() {
                println!("dropped {} nodes from failed sources", output.dropped.len());
            }
            Ok(())
        }

        Command::Geodesic { cloud, source, target, radius, knearest, path } => {
            let cloud = read_cloud(&cloud)?;
            let rule = match (radius, knearest) {
                (Some(r), _) => Some(ConnectionRule::Radius(r)),
                (None, Some(k)) => Some(ConnectionRule::KNearest(k)),
                (None, None) => None,
            };
            let result = geodesic_estimate(&cloud, source, target, rule)?;
            println!("distance: {}", result.distance);
            println!("hops: {}", result.path.len().saturating_sub(1));
            if path {
                let nodes: Vec<String> = result.path.iter().map(usize::to_string).collect();
                println!("path: {}", nodes.join(" "));
            }
            Ok(())
        }

        Command::Stats { cloud, reference } => {
            let cloud = read_cloud(&cloud)?;
            println!("points: {}", cloud.len());
            println!("dimension: {}", cloud.dim());
            if cloud.len() >= 2 {
                println!("separation radius: {}", separation_radius(&cloud)?);
                println!(
                    "default connection radius: {}",
                    default_connection_radius(&cloud)?
                );
            }
            if let Some(path) = reference {
                let reference = read_cloud(&path)?;
                println!(
                    "fill distance (vs {}): {}",
                    path.display(),
                    fill_distance_estimate(&cloud, &reference)?
                );
            }
            Ok(())
        }

        Command::Table1 { seed, realizations, pairs, out } => {
            let mut params = DistanceTableParams::desk_scale(seed);
            params.realizations = realizations;
            params.pairs = pairs;
            let report = run_distance_table(&params)?;
            print_table(&report);
            if let Some(path) = out {
                std::fs::write(&path, report.to_csv())?;
                println!("wrote per-pair table to {}", path.display());
            }
            Ok(())
        }

        Command::Table2 { noise, seed, realizations, pairs, out } => {
            let mut params = DistanceTableParams::noisy(noise, seed);
            params.realizations = realizations;
            params.pairs = pairs;
            let report = run_distance_table(&params)?;
            print_table(&report);
            if let Some(path) = out {
                std::fs::write(&path, report.to_csv())?;
                println!("wrote per-pair table to {}", path.display());
            }
            Ok(())
        }

        Command::Convergence { manifold, order, levels, probes, pairs, seed, out } => {
            let manifold: Manifold = manifold.parse()?;
            order_to_degree(order)?;
            let mut params = match manifold {
                Manifold::Sphere => ConvergenceParams::sphere_defaults(order, seed),
                Manifold::Circle => ConvergenceParams::circle_defaults(order, seed),
                Manifold::Plane => ConvergenceParams::plane_defaults(order, seed),
            };
            if let Some(spec) = levels {
                params.levels = parse_levels(&spec)?;
            }
            if let Some(p) = probes {
                params.probes = p;
            }
            if let Some(p) = pairs {
                params.pairs = p;
            }
            let report = run_convergence(&params)?;
            print_convergence(&report);
            if let Some(path) = out {
                std::fs::write(&path, report.to_csv())?;
                println!("wrote per-level errors to {}", path.display());
            }
            Ok(())
        }
    }
}

fn parse_levels(spec: &str) -> Result<Vec<usize>> {
    spec.split(',')
        .map(|s| {
            s.trim().parse::<usize>().map_err(|e| Error::InvalidParameter {
                name: "levels",
                reason: format!("bad sample count {s:?}: {e}"),
            })
        })
        .collect()
}

fn print_table(report: &mmls_cli::ExperimentReport) {
    println!("{}", report.name);
    for (key, value) in &report.config {
        println!("  {key}: {value}");
    }
    println!("  pooled rmse (% of mean true geodesic):");
    for (name, rmse) in report.estimators.iter().zip(&report.rmse) {
        println!("    {name:<12} {rmse:.4}");
    }
    println!("  wall time: {:.1}s", report.wall_seconds);
}

fn print_convergence(report: &mmls_cli::ConvergenceReport) {
    println!("convergence on {} (order {})", report.manifold, report.order);
    println!("  {:>8} {:>12} {:>14} {:>14}", "n", "fill", "surface_max", "geodesic_rel");
    for level in &report.levels {
        let geo = level
            .geodesic_relative_error
            .map(|e| format!("{e:.3e}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "  {:>8} {:>12.5e} {:>14.5e} {:>14}",
            level.n, level.fill, level.surface_error_max, geo
        );
    }
    if report.exact_regime {
        println!("  exact regime: all surface errors below 1e-9; no slope fitted");
    }
    if let Some(slope) = report.surface_slope {
        println!("  surface error slope vs fill: {slope:.3}");
    }
    if let Some(slope) = report.geodesic_slope {
        println!("  geodesic error slope vs fill: {slope:.3}");
    }
    println!("  wall time: {:.1}s", report.wall_seconds);
}
