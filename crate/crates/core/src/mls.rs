//! Moving least-squares fits over a flat parameter domain.
//!
//! Given scattered sites x_i ∈ R^d carrying vector values y_i ∈ R^D, a
//! center ξ, a degree m, and a radial weight profile θ at scale h,
//! [`mls_fit`] solves
//!
//! ```text
//! min over π ∈ Π_m^d of  Σ_i ‖π(x_i) − y_i‖² · θ(‖x_i − ξ‖)
//! ```
//!
//! The squared norm decouples per output coordinate, so all D components
//! share one weighted design matrix and one factorization. Fits are local:
//! the weight's compact support selects the participating sites, and the
//! polynomial is expressed in the shifted, h-scaled coordinates
//! u = (x − ξ)/h, which keeps the design matrix entries O(1) regardless of
//! scale.
//!
//! For smooth data the fitted value converges at rate `h^(m+1)` and its
//! first derivatives at `h^m` as the sites densify.

use nalgebra::{DMatrix, DVector};

use crate::cloud::{dist, PointCloud};
use crate::error::{Error, Result};
use crate::weights::WeightProfile;

/// Relative singular-value cutoff: the weighted design matrix must have all
/// singular values above `cutoff · σ_max`, otherwise the site geometry does
/// not determine a unique degree-m polynomial and the fit fails loudly
/// instead of silently regularizing.
pub const SINGULAR_VALUE_CUTOFF: f64 = 1e-10;

/// Number of monomials in `dim` variables of total degree at most `degree`,
/// i.e. the dimension C(dim+degree, degree) of the polynomial space.
pub fn polynomial_space_dim(dim: usize, degree: usize) -> usize {
    // C(dim+degree, degree) computed incrementally to stay in range.
    let mut result: usize = 1;
    for i in 1..=degree {
        result = result * (dim + i) / i;
    }
    result
}

/// Multi-index exponents of all monomials in `dim` variables up to total
/// degree `degree`, in graded lexicographic order: total degree ascending,
/// and within one degree the leading variable's exponent descending (for
/// d = 2, degree 2: 1, x, y, x², xy, y²). The constant monomial is always
/// first, so polynomial evaluation at the origin reads the constant row
/// exactly.
pub fn monomial_exponents(dim: usize, degree: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity(polynomial_space_dim(dim, degree));
    let mut current = vec![0u32; dim];
    for total in 0..=degree as u32 {
        fill_exponents(&mut current, 0, total, &mut out);
    }
    out
}

fn fill_exponents(current: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<Vec<u32>>) {
    if pos == current.len() - 1 {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        fill_exponents(current, pos + 1, remaining - e, out);
    }
}

/// Evaluates one monomial at a point.
fn monomial(u: &[f64], exponents: &[u32]) -> f64 {
    u.iter()
        .zip(exponents)
        .map(|(&x, &e)| x.powi(e as i32))
        .product()
}

/// A polynomial map R^d → R^D expressed over shifted, scale-normalized
/// coordinates u = offset/scale around a fixed center.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPolynomial {
    domain_dim: usize,
    output_dim: usize,
    degree: usize,
    scale: f64,
    exponents: Vec<Vec<u32>>,
    /// (monomial, output-coordinate) coefficients.
    coefficients: DMatrix<f64>,
}

impl VectorPolynomial {
    /// Domain dimension d.
    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    /// Output dimension D.
    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// Total degree bound of the fit.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coordinate scale h used to normalize the domain.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// The value at the center — exactly the constant-term coefficient row.
    pub fn constant_term(&self) -> Vec<f64> {
        self.coefficients.row(0).iter().copied().collect()
    }

    /// Evaluates at an offset from the center, in unscaled domain units.
    pub fn evaluate(&self, offset: &[f64]) -> Result<Vec<f64>> {
        if offset.len() != self.domain_dim {
            return Err(Error::DimensionMismatch {
                expected: self.domain_dim,
                actual: offset.len(),
            });
        }
        let u: Vec<f64> = offset.iter().map(|&x| x / self.scale).collect();
        let basis = DVector::from_iterator(
            self.exponents.len(),
            self.exponents.iter().map(|e| monomial(&u, e)),
        );
        Ok((self.coefficients.transpose() * basis).iter().copied().collect())
    }

    /// Analytic directional derivative at an offset from the center, per
    /// unit of unscaled domain length.
    ///
    /// `direction` must be non-zero; it is normalized internally.
    pub fn directional_derivative(
        &self,
        direction: &[f64],
        offset: &[f64],
    ) -> Result<Vec<f64>> {
        if direction.len() != self.domain_dim || offset.len() != self.domain_dim {
            return Err(Error::DimensionMismatch {
                expected: self.domain_dim,
                actual: direction.len().max(offset.len()),
            });
        }
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidParameter {
                name: "direction",
                reason: "must be non-zero and finite".into(),
            });
        }
        let v: Vec<f64> = direction.iter().map(|x| x / norm).collect();
        let u: Vec<f64> = offset.iter().map(|&x| x / self.scale).collect();
        // ∂_v u^α = Σ_j v_j α_j u^(α − e_j); the 1/scale factor converts the
        // derivative from normalized to ambient domain units.
        let mut basis_deriv = DVector::zeros(self.exponents.len());
        for (row, exps) in self.exponents.iter().enumerate() {
            let mut total = 0.0;
            for (j, &e) in exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let mut term = v[j] * e as f64;
                for (l, &el) in exps.iter().enumerate() {
                    let power = if l == j { el - 1 } else { el };
                    term *= u[l].powi(power as i32);
                }
                total += term;
            }
            basis_deriv[row] = total / self.scale;
        }
        Ok((self.coefficients.transpose() * basis_deriv).iter().copied().collect())
    }
}

/// A completed moving least-squares fit.
#[derive(Debug, Clone)]
pub struct MlsFit {
    /// The fitted local polynomial, centered at the fit's center.
    pub polynomial: VectorPolynomial,
    /// Indices (into the site set) of sites with positive weight.
    pub neighbor_indices: Vec<usize>,
    /// σ_max/σ_min of the weighted design matrix.
    pub condition_estimate: f64,
    /// Total weight over participating sites.
    pub effective_weight_sum: f64,
}

/// Weighted least-squares polynomial fit of `values` over `sites`.
///
/// `sites` live in the domain R^d, `values` in R^D; row i of each belongs to
/// the same sample. The weight of site i is θ(‖x_i − center‖) under scale
/// `h`. Fails with [`Error::EmptySupport`] when no site carries positive
/// weight and with [`Error::UnisolvencyFailure`] when the positive-weight
/// sites cannot determine a unique degree-`degree` fit.
pub fn mls_fit(
    sites: &PointCloud,
    values: &PointCloud,
    center: &[f64],
    degree: usize,
    profile: &WeightProfile,
    h: f64,
) -> Result<MlsFit> {
    if sites.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: sites.len(), actual: values.len() });
    }
    if sites.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, actual: 0 });
    }
    if center.len() != sites.dim() {
        return Err(Error::DimensionMismatch { expected: sites.dim(), actual: center.len() });
    }
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "h",
            reason: format!("scale must be finite and positive, got {h}"),
        });
    }

    let d = sites.dim();
    let n_out = values.dim();
    let exponents = monomial_exponents(d, degree);
    let n_basis = exponents.len();

    // Select participating sites and their weights.
    let mut active: Vec<usize> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (i, x) in sites.iter().enumerate() {
        let w = profile.eval_unchecked(dist(x, center), h);
        if w > 0.0 {
            active.push(i);
            weights.push(w);
        }
    }
    if active.is_empty() {
        return Err(Error::EmptySupport);
    }
    if active.len() < n_basis {
        return Err(Error::UnisolvencyFailure {
            reason: format!(
                "only {} positive-weight sites for a {}-term degree-{} basis",
                active.len(),
                n_basis,
                degree
            ),
        });
    }

    // Weighted design and right-hand side in scaled coordinates.
    let m = active.len();
    let mut design = DMatrix::zeros(m, n_basis);
    let mut rhs = DMatrix::zeros(m, n_out);
    for (row, (&i, &w)) in active.iter().zip(&weights).enumerate() {
        let sw = w.sqrt();
        let u: Vec<f64> = sites
            .point(i)
            .iter()
            .zip(center)
            .map(|(&x, &c)| (x - c) / h)
            .collect();
        for (col, exps) in exponents.iter().enumerate() {
            design[(row, col)] = sw * monomial(&u, exps);
        }
        for (col, &y) in values.point(i).iter().enumerate() {
            rhs[(row, col)] = sw * y;
        }
    }

    let svd = design.svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let sigma_min = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if !(sigma_max > 0.0) || sigma_min <= SINGULAR_VALUE_CUTOFF * sigma_max {
        return Err(Error::UnisolvencyFailure {
            reason: format!(
                "weighted design matrix is rank-deficient (sigma_min/sigma_max = {:e})",
                if sigma_max > 0.0 { sigma_min / sigma_max } else { 0.0 }
            ),
        });
    }
    let coefficients = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Internal(format!("SVD solve failed: {e}")))?;

    Ok(MlsFit {
        polynomial: VectorPolynomial {
            domain_dim: d,
            output_dim: n_out,
            degree,
            scale: h,
            exponents,
            coefficients,
        },
        neighbor_indices: active,
        condition_estimate: sigma_max / sigma_min,
        effective_weight_sum: weights.iter().sum(),
    })
}

/// Evaluates a fit at an offset from its center. Offset 0 gives the MLS
/// value at the center itself.
pub fn mls_eval(fit: &MlsFit, offset: &[f64]) -> Result<Vec<f64>> {
    fit.polynomial.evaluate(offset)
}

/// Directional derivative of a fit at an offset from its center.
pub fn mls_directional_derivative(
    fit: &MlsFit,
    direction: &[f64],
    offset: &[f64],
) -> Result<Vec<f64>> {
    fit.polynomial.directional_derivative(direction, offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_sites_1d(n: usize, lo: f64, hi: f64) -> PointCloud {
        let xs: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        PointCloud::from_flat(1, xs).unwrap()
    }

    fn slope(hs: &[f64], errs: &[f64]) -> f64 {
        // Ordinary least squares on (ln h, ln err).
        let n = hs.len() as f64;
        let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        cov / var
    }

    #[test]
    fn monomial_order_is_graded_lex() {
        let exps = monomial_exponents(2, 2);
        let want: Vec<Vec<u32>> = vec![
            vec![0, 0],
            vec![1, 0],
            vec![0, 1],
            vec![2, 0],
            vec![1, 1],
            vec![0, 2],
        ];
        assert_eq!(exps, want);
        assert_eq!(exps.len(), polynomial_space_dim(2, 2));
        assert_eq!(polynomial_space_dim(2, 3), 10);
        assert_eq!(polynomial_space_dim(1, 1), 2);
        assert_eq!(polynomial_space_dim(3, 4), 35);
    }

    #[test]
    fn reproduces_polynomials_exactly() {
        // MLS reproduces any polynomial of the fit degree: residuals vanish
        // and evaluation matches the oracle to rounding at any offset.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for d in 1..=2usize {
            for degree in 1..=3usize {
                let exps = monomial_exponents(d, degree);
                let coeffs: Vec<f64> =
                    (0..exps.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let poly = |x: &[f64]| -> f64 {
                    exps.iter()
                        .zip(&coeffs)
                        .map(|(e, c)| c * monomial(x, e))
                        .sum()
                };
                let n = 40usize;
                let mut sites = PointCloud::new(d);
                let mut values = PointCloud::new(1);
                for _ in 0..n {
                    let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    values.push(&[poly(&x)]).unwrap();
                    sites.push(&x).unwrap();
                }
                let center = vec![0.1; d];
                let fit = mls_fit(
                    &sites,
                    &values,
                    &center,
                    degree,
                    &WeightProfile::smooth_bump(),
                    1.0,
                )
                .unwrap();
                for _ in 0..10 {
                    let offset: Vec<f64> =
                        (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect();
                    let x: Vec<f64> =
                        offset.iter().zip(&center).map(|(o, c)| o + c).collect();
                    let got = mls_eval(&fit, &offset).unwrap()[0];
                    let want = poly(&x);
                    assert!(
                        (got - want).abs() <= 1e-9 * (1.0 + want.abs()),
                        "d={d} degree={degree}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn constant_data_yields_constant_fit() {
        let sites = uniform_sites_1d(10, -1.0, 1.0);
        let values = PointCloud::from_flat(1, vec![3.0; 10]).unwrap();
        let fit = mls_fit(
            &sites,
            &values,
            &[0.0],
            2,
            &WeightProfile::smooth_bump(),
            1.0,
        )
        .unwrap();
        assert!((fit.polynomial.constant_term()[0] - 3.0).abs() <= 1e-12);
        let deriv = mls_directional_derivative(&fit, &[1.0], &[0.0]).unwrap()[0];
        assert!(deriv.abs() <= 1e-10);
    }

    #[test]
    fn value_error_converges_at_degree_plus_one() {
        // f = sin on [0, 2π], degree 2: halving h repeatedly must shrink the
        // center-value error at slope ≈ 3 on a log-log fit.
        let sites = uniform_sites_1d(201, 0.0, std::f64::consts::TAU);
        let values = PointCloud::from_flat(
            1,
            sites.iter().map(|x| x[0].sin()).collect::<Vec<_>>(),
        )
        .unwrap();
        let profile = WeightProfile::smooth_bump();
        let hs = [0.4, 0.2, 0.1, 0.05];
        let mut errs = Vec::new();
        for &h in &hs {
            let mut max_err = 0.0f64;
            for i in 0..60 {
                let xi = 1.5 + 3.3 * i as f64 / 59.0;
                let fit = mls_fit(&sites, &values, &[xi], 2, &profile, h).unwrap();
                let got = mls_eval(&fit, &[0.0]).unwrap()[0];
                max_err = max_err.max((got - xi.sin()).abs());
            }
            errs.push(max_err);
        }
        let s = slope(&hs, &errs);
        assert!(s >= 2.65, "value slope {s}, errors {errs:?}");
    }

    #[test]
    fn derivative_error_converges_at_degree() {
        // Same setting, derivative against cos: slope ≈ 2 for degree 2.
        let sites = uniform_sites_1d(201, 0.0, std::f64::consts::TAU);
        let values = PointCloud::from_flat(
            1,
            sites.iter().map(|x| x[0].sin()).collect::<Vec<_>>(),
        )
        .unwrap();
        let profile = WeightProfile::smooth_bump();
        let hs = [0.4, 0.2, 0.1, 0.05];
        let mut errs = Vec::new();
        for &h in &hs {
            let mut max_err = 0.0f64;
            for i in 0..60 {
                let xi = 1.5 + 3.3 * i as f64 / 59.0;
                let fit = mls_fit(&sites, &values, &[xi], 2, &profile, h).unwrap();
                let got = mls_directional_derivative(&fit, &[1.0], &[0.0]).unwrap()[0];
                max_err = max_err.max((got - xi.cos()).abs());
            }
            errs.push(max_err);
        }
        let s = slope(&hs, &errs);
        assert!(s >= 1.65, "derivative slope {s}, errors {errs:?}");
    }

    #[test]
    fn interpolatory_weights_pin_the_fit_at_a_site() {
        let sites = uniform_sites_1d(30, 0.0, 1.0);
        let values = PointCloud::from_flat(
            1,
            sites.iter().map(|x| (5.0 * x[0]).sin()).collect::<Vec<_>>(),
        )
        .unwrap();
        let k = 11usize;
        let center = sites.point(k).to_vec();
        let want = values.point(k)[0];
        let fit = mls_fit(
            &sites,
            &values,
            &center,
            2,
            &WeightProfile::interpolatory(),
            0.2,
        )
        .unwrap();
        let got = mls_eval(&fit, &[0.0]).unwrap()[0];
        assert!(
            (got - want).abs() <= 1e-6 * (1.0 + want.abs()),
            "interpolation miss: {got} vs {want}"
        );
    }

    #[test]
    fn output_coordinates_decouple() {
        // A joint R^1 → R^3 fit must equal three scalar fits component-wise.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let sites = uniform_sites_1d(40, -1.0, 1.0);
        let mut joint = PointCloud::new(3);
        let mut singles = vec![PointCloud::new(1), PointCloud::new(1), PointCloud::new(1)];
        for x in sites.iter() {
            let row = [
                (3.0 * x[0]).sin() + rng.gen_range(-0.01..0.01),
                x[0] * x[0],
                1.0 - x[0],
            ];
            joint.push(&row).unwrap();
            for (c, &v) in singles.iter_mut().zip(&row) {
                c.push(&[v]).unwrap();
            }
        }
        let profile = WeightProfile::smooth_bump();
        let fit = mls_fit(&sites, &joint, &[0.2], 2, &profile, 0.5).unwrap();
        let got = mls_eval(&fit, &[0.1]).unwrap();
        for (c, &g) in singles.iter().zip(&got) {
            let single = mls_fit(&sites, c, &[0.2], 2, &profile, 0.5).unwrap();
            let want = mls_eval(&single, &[0.1]).unwrap()[0];
            assert!((g - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn directional_derivative_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let d = rng.gen_range(1..=2usize);
            let degree = rng.gen_range(1..=3usize);
            let n = 60;
            let mut sites = PointCloud::new(d);
            let mut values = PointCloud::new(2);
            for _ in 0..n {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let v = [
                    (x.iter().sum::<f64>()).sin(),
                    x.iter().map(|t| t * t).sum::<f64>(),
                ];
                sites.push(&x).unwrap();
                values.push(&v).unwrap();
            }
            let center: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.3..0.3)).collect();
            let fit = mls_fit(
                &sites,
                &values,
                &center,
                degree,
                &WeightProfile::smooth_bump(),
                0.8,
            )
            .unwrap();
            let mut dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            dir.iter_mut().for_each(|v| *v /= norm);
            let offset: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.2..0.2)).collect();
            let analytic = mls_directional_derivative(&fit, &dir, &offset).unwrap();
            let step = 1e-5;
            let plus: Vec<f64> =
                offset.iter().zip(&dir).map(|(o, v)| o + step * v).collect();
            let minus: Vec<f64> =
                offset.iter().zip(&dir).map(|(o, v)| o - step * v).collect();
            let fp = mls_eval(&fit, &plus).unwrap();
            let fm = mls_eval(&fit, &minus).unwrap();
            for (a, (p, m)) in analytic.iter().zip(fp.iter().zip(&fm)) {
                let fd = (p - m) / (2.0 * step);
                assert!(
                    (a - fd).abs() <= 1e-7 * (1.0 + a.abs()),
                    "analytic {a} vs central difference {fd}"
                );
            }
        }
    }

    #[test]
    fn collinear_sites_fail_unisolvency() {
        // 2-D degree-1 fit from sites on a line: the y-monomial column is
        // linearly dependent, so the fit must refuse.
        let mut sites = PointCloud::new(2);
        let mut values = PointCloud::new(1);
        for i in 0..12 {
            let t = i as f64 / 11.0;
            sites.push(&[t, 2.0 * t]).unwrap();
            values.push(&[t]).unwrap();
        }
        let err = mls_fit(
            &sites,
            &values,
            &[0.5, 1.0],
            1,
            &WeightProfile::smooth_bump(),
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnisolvencyFailure { .. }));
    }

    #[test]
    fn far_center_has_empty_support() {
        let sites = uniform_sites_1d(10, 0.0, 1.0);
        let values = PointCloud::from_flat(1, vec![1.0; 10]).unwrap();
        let err = mls_fit(
            &sites,
            &values,
            &[100.0],
            1,
            &WeightProfile::smooth_bump(),
            0.5,
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptySupport));
    }

    #[test]
    fn too_few_in_support_sites_fail() {
        // Two sites inside the support of a 3-term quadratic basis.
        let sites = uniform_sites_1d(2, 0.0, 0.1);
        let values = PointCloud::from_flat(1, vec![1.0, 2.0]).unwrap();
        let err = mls_fit(
            &sites,
            &values,
            &[0.05],
            2,
            &WeightProfile::smooth_bump(),
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnisolvencyFailure { .. }));
    }

    #[test]
    fn validates_shapes_and_scale() {
        let sites = uniform_sites_1d(5, 0.0, 1.0);
        let values = PointCloud::from_flat(1, vec![0.0; 4]).unwrap();
        assert!(mls_fit(&sites, &values, &[0.0], 1, &WeightProfile::smooth_bump(), 1.0)
            .is_err());
        let values5 = PointCloud::from_flat(1, vec![0.0; 5]).unwrap();
        assert!(mls_fit(&sites, &values5, &[0.0, 0.0], 1, &WeightProfile::smooth_bump(), 1.0)
            .is_err());
        assert!(mls_fit(&sites, &values5, &[0.0], 1, &WeightProfile::smooth_bump(), 0.0)
            .is_err());
    }
}
