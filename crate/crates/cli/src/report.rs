//! Structured results of experiment runs, with plain-text renderings.
//!
//! Reports carry every per-pair record, so any summary statistic they quote
//! can be recomputed from the report itself — tests use that to cross-check
//! the pooled numbers. Renderings are deterministic except for the
//! wall-clock line, which is marked as a comment.

use mmls::{rmse_percent, Error, Result};

/// One evaluated point pair within one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    /// Which realization (resample of the manifold) the pair belongs to.
    pub realization: u32,
    /// Sample index of the first endpoint.
    pub source: u32,
    /// Sample index of the second endpoint.
    pub target: u32,
    /// Exact geodesic distance between the clean endpoint positions.
    pub truth: f64,
    /// One estimate per estimator, parallel to the report's estimator list.
    pub estimates: Vec<f64>,
}

/// Full record of a distance-table experiment.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    /// Experiment name, e.g. `distance-table`.
    pub name: String,
    /// Echo of every parameter the run used, in a fixed order.
    pub config: Vec<(String, String)>,
    /// Estimator column names, e.g. `euclidean`, `raw_graph`, `mmls_deg3`.
    pub estimators: Vec<String>,
    /// Every (realization, pair) evaluation.
    pub records: Vec<PairRecord>,
    /// Pooled RMSE (% of mean truth) per estimator, across all records.
    pub rmse: Vec<f64>,
    /// Wall-clock duration of the run in seconds (excluded from
    /// deterministic comparisons).
    pub wall_seconds: f64,
}

impl ExperimentReport {
    /// Recomputes the pooled RMSE percentages from the raw records. The
    /// stored `rmse` must always equal this; tests treat it as the oracle.
    pub fn recompute_rmse(&self) -> Result<Vec<f64>> {
        let truths: Vec<f64> = self.records.iter().map(|r| r.truth).collect();
        (0..self.estimators.len())
            .map(|e| {
                let estimates: Vec<f64> =
                    self.records.iter().map(|r| r.estimates[e]).collect();
                rmse_percent(&estimates, &truths)
            })
            .collect()
    }

    /// Pooled RMSE for a named estimator.
    pub fn estimator_rmse(&self, name: &str) -> Option<f64> {
        self.estimators
            .iter()
            .position(|e| e == name)
            .map(|i| self.rmse[i])
    }

    /// Renders the report as CSV with `#`-commented config and summary
    /// sections. Identical for identical runs, except the wall-clock line.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "# experiment: {}", self.name);
        for (key, value) in &self.config {
            let _ = writeln!(out, "# {key}: {value}");
        }
        for (name, rmse) in self.estimators.iter().zip(&self.rmse) {
            let _ = writeln!(out, "# rmse_percent[{name}]: {rmse}");
        }
        let _ = writeln!(out, "# wall_seconds: {}", self.wall_seconds);
        out.push_str("realization,source,target,truth");
        for name in &self.estimators {
            let _ = write!(out, ",{name}");
        }
        out.push('\n');
        for record in &self.records {
            let _ = write!(
                out,
                "{},{},{},{}",
                record.realization, record.source, record.target, record.truth
            );
            for estimate in &record.estimates {
                let _ = write!(out, ",{estimate}");
            }
            out.push('\n');
        }
        out
    }
}

/// Measurements at one resolution level of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceLevel {
    /// Sample count at this level.
    pub n: usize,
    /// Measured fill distance of the sample (against a denser reference).
    pub fill: f64,
    /// Maximum distance from any projected probe to the true surface.
    pub surface_error_max: f64,
    /// Mean relative geodesic error over the probe pairs, when the study
    /// evaluates geodesics.
    pub geodesic_relative_error: Option<f64>,
}

/// Full record of a convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// Manifold name: `circle`, `sphere`, or `plane`.
    pub manifold: String,
    /// Approximation order (polynomial degree + 1).
    pub order: usize,
    /// Echo of every parameter the run used.
    pub config: Vec<(String, String)>,
    /// Per-level measurements, coarsest first.
    pub levels: Vec<ConvergenceLevel>,
    /// Log-log slope of max surface error against fill distance; `None` in
    /// the exact regime (errors at rounding scale carry no rate signal).
    pub surface_slope: Option<f64>,
    /// Log-log slope of the geodesic error against fill distance.
    pub geodesic_slope: Option<f64>,
    /// True when every surface error is below the exactness threshold, so
    /// slopes are meaningless and omitted.
    pub exact_regime: bool,
    /// Wall-clock duration of the run in seconds.
    pub wall_seconds: f64,
}

/// Surface errors below this are treated as exact (pure rounding), putting
/// the study in the exact regime.
pub const EXACT_REGIME_THRESHOLD: f64 = 1e-9;

impl ConvergenceReport {
    /// Renders the report as CSV with commented config and slope lines.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "# experiment: convergence");
        let _ = writeln!(out, "# manifold: {}", self.manifold);
        let _ = writeln!(out, "# order: {}", self.order);
        for (key, value) in &self.config {
            let _ = writeln!(out, "# {key}: {value}");
        }
        match self.surface_slope {
            Some(slope) => {
                let _ = writeln!(out, "# surface_slope: {slope}");
            }
            None => {
                let _ = writeln!(out, "# surface_slope: n/a");
            }
        }
        match self.geodesic_slope {
            Some(slope) => {
                let _ = writeln!(out, "# geodesic_slope: {slope}");
            }
            None => {
                let _ = writeln!(out, "# geodesic_slope: n/a");
            }
        }
        let _ = writeln!(out, "# exact_regime: {}", self.exact_regime);
        let _ = writeln!(out, "# wall_seconds: {}", self.wall_seconds);
        out.push_str("n,fill,surface_error_max,geodesic_relative_error\n");
        for level in &self.levels {
            let _ = write!(
                out,
                "{},{},{}",
                level.n, level.fill, level.surface_error_max
            );
            match level.geodesic_relative_error {
                Some(err) => {
                    let _ = writeln!(out, ",{err}");
                }
                None => {
                    let _ = writeln!(out, ",");
                }
            }
        }
        out
    }

    /// Two/three-column whitespace table (fill, surface error, geodesic
    /// error when present) ready for `plot "file" using 1:2` in gnuplot.
    pub fn gnuplot_data(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let has_geodesic = self.levels.iter().any(|l| l.geodesic_relative_error.is_some());
        if has_geodesic {
            out.push_str("# fill surface_error_max geodesic_relative_error\n");
        } else {
            out.push_str("# fill surface_error_max\n");
        }
        for level in &self.levels {
            let _ = write!(out, "{} {}", level.fill, level.surface_error_max);
            if has_geodesic {
                let _ = write!(out, " {}", level.geodesic_relative_error.unwrap_or(f64::NAN));
            }
            out.push('\n');
        }
        out
    }
}

/// Least-squares slope of ln(y) against ln(x). Needs at least two points,
/// all positive.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), actual: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "xs",
            reason: "slope needs at least two points".into(),
        });
    }
    if xs.iter().chain(ys).any(|&v| !v.is_finite() || v <= 0.0) {
        return Err(Error::InvalidParameter {
            name: "xs",
            reason: "log-log slope needs positive finite values".into(),
        });
    }
    let lx: Vec<f64> = xs.iter().map(|&x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|&x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter {
            name: "xs",
            reason: "all x values coincide".into(),
        });
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_report() -> ExperimentReport {
        ExperimentReport {
            name: "distance-table".into(),
            config: vec![("n".into(), "4".into())],
            estimators: vec!["euclidean".into(), "mmls_deg3".into()],
            records: vec![
                PairRecord {
                    realization: 0,
                    source: 0,
                    target: 1,
                    truth: 1.0,
                    estimates: vec![0.9, 1.01],
                },
                PairRecord {
                    realization: 1,
                    source: 2,
                    target: 3,
                    truth: 1.0,
                    estimates: vec![1.1, 0.99],
                },
            ],
            rmse: vec![10.0, 1.0],
            wall_seconds: 0.5,
        }
    }

    #[test]
    fn stored_rmse_matches_recomputation() {
        let report = small_report();
        let recomputed = report.recompute_rmse().unwrap();
        for (stored, fresh) in report.rmse.iter().zip(&recomputed) {
            assert!((stored - fresh).abs() <= 1e-9, "{stored} vs {fresh}");
        }
        assert_eq!(report.estimator_rmse("euclidean"), Some(10.0));
        assert_eq!(report.estimator_rmse("missing"), None);
    }

    #[test]
    fn csv_round_trips_the_numbers() {
        let report = small_report();
        let csv = report.to_csv();
        assert!(csv.contains("# experiment: distance-table"));
        assert!(csv.contains("# rmse_percent[euclidean]: 10"));
        assert!(csv.contains("realization,source,target,truth,euclidean,mmls_deg3"));
        assert!(csv.contains("0,0,1,1,0.9,1.01"));
        // Deterministic except the wall-clock comment.
        let strip = |text: &str| -> String {
            text.lines()
                .filter(|l| !l.starts_with("# wall_seconds"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let mut other = small_report();
        other.wall_seconds = 99.0;
        assert_eq!(strip(&csv), strip(&other.to_csv()));
        assert_ne!(csv, other.to_csv());
    }

    #[test]
    fn slope_recovers_power_laws() {
        let xs = [0.4, 0.2, 0.1, 0.05];
        let cubes: Vec<f64> = xs.iter().map(|&x| 7.0 * x * x * x).collect();
        let slope = log_log_slope(&xs, &cubes).unwrap();
        assert!((slope - 3.0).abs() <= 1e-12);
        let noisy: Vec<f64> = xs.iter().map(|&x| 2.0 * x.powf(1.5)).collect();
        let slope = log_log_slope(&xs, &noisy).unwrap();
        assert!((slope - 1.5).abs() <= 1e-12);
    }

    #[test]
    fn slope_rejects_bad_inputs() {
        assert!(log_log_slope(&[1.0], &[1.0]).is_err());
        assert!(log_log_slope(&[1.0, 2.0], &[1.0]).is_err());
        assert!(log_log_slope(&[1.0, -2.0], &[1.0, 1.0]).is_err());
        assert!(log_log_slope(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(log_log_slope(&[0.0, 1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn convergence_csv_handles_missing_geodesics() {
        let report = ConvergenceReport {
            manifold: "plane".into(),
            order: 3,
            config: vec![],
            levels: vec![ConvergenceLevel {
                n: 100,
                fill: 0.1,
                surface_error_max: 1e-12,
                geodesic_relative_error: None,
            }],
            surface_slope: None,
            geodesic_slope: None,
            exact_regime: true,
            wall_seconds: 0.1,
        };
        let csv = report.to_csv();
        assert!(csv.contains("# surface_slope: n/a"));
        assert!(csv.contains("# exact_regime: true"));
        assert!(csv.contains("100,0.1,0.000000000001,"));
        let gnuplot = report.gnuplot_data();
        assert!(gnuplot.contains("0.1 0.000000000001"));
    }
}
