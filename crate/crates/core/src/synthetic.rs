//! Synthetic manifolds with known geometry.
//!
//! Everything here exists so that estimates can be checked against exact
//! answers: spheres of any intrinsic dimension embedded isometrically into a
//! higher-dimensional space (with a closed-form geodesic), affine planes
//! (zero curvature, so every projection step should be exact), Gaussian
//! perturbations for noise studies, and farthest-point subsampling to turn
//! i.i.d. draws into quasi-uniform sample sets.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cloud::{dist, PointCloud};
use crate::error::{Error, Result};

/// Relative tolerance (in units of the radius) for deciding whether a point
/// lies on an embedded sphere before evaluating the geodesic formula.
pub const ON_SPHERE_RELATIVE_TOLERANCE: f64 = 1e-6;

/// A round d-sphere of radius R isometrically embedded in R^D.
///
/// The sphere lives in the (d+1)-dimensional subspace spanned by the columns
/// of an orthonormal basis, shifted by a center point. Geodesic distances on
/// it are exactly `R · arccos(⟨u₁, u₂⟩)` for unit pullbacks u₁, u₂.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereEmbedding {
    center: Vec<f64>,
    radius: f64,
    /// Ambient × (d+1), orthonormal columns.
    basis: DMatrix<f64>,
}

impl SphereEmbedding {
    /// Random isometric embedding of S^d (radius `radius`) into R^`ambient`,
    /// with a random center drawn from a unit Gaussian. Deterministic in the
    /// seed.
    pub fn random(
        intrinsic_dim: usize,
        ambient_dim: usize,
        radius: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let span = intrinsic_dim + 1;
        check_sphere_dims(intrinsic_dim, ambient_dim, radius)?;
        // Orthonormal basis: QR of a Gaussian matrix, via Gram-Schmidt on
        // columns (dimensions are tiny; stability is not a concern after the
        // re-orthogonalization pass).
        let basis = loop {
            let raw = DMatrix::from_fn(ambient_dim, span, |_, _| rng.sample::<f64, _>(StandardNormal));
            if let Some(q) = gram_schmidt(&raw) {
                break q;
            }
        };
        let center: Vec<f64> = (0..ambient_dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        Ok(SphereEmbedding { center, radius, basis })
    }

    /// Embedding with the identity basis (first d+1 coordinate axes) and a
    /// zero center. Handy for tests where coordinates should be readable.
    pub fn axis_aligned(intrinsic_dim: usize, ambient_dim: usize, radius: f64) -> Result<Self> {
        check_sphere_dims(intrinsic_dim, ambient_dim, radius)?;
        let span = intrinsic_dim + 1;
        let basis = DMatrix::from_fn(ambient_dim, span, |i, j| if i == j { 1.0 } else { 0.0 });
        Ok(SphereEmbedding { center: vec![0.0; ambient_dim], radius, basis })
    }

    /// Rebuilds an embedding from stored parts, re-validating orthonormality.
    pub fn from_parts(center: Vec<f64>, radius: f64, basis: DMatrix<f64>) -> Result<Self> {
        if basis.ncols() < 2 || basis.nrows() < basis.ncols() {
            return Err(Error::InvalidParameter {
                name: "basis",
                reason: format!("{}x{} cannot embed a sphere", basis.nrows(), basis.ncols()),
            });
        }
        check_sphere_dims(basis.ncols() - 1, basis.nrows(), radius)?;
        if center.len() != basis.nrows() {
            return Err(Error::DimensionMismatch { expected: basis.nrows(), actual: center.len() });
        }
        let gram = basis.transpose() * &basis;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - want).abs() > 1e-10 {
                    return Err(Error::InvalidParameter {
                        name: "basis",
                        reason: "columns are not orthonormal".into(),
                    });
                }
            }
        }
        Ok(SphereEmbedding { center, radius, basis })
    }

    /// Intrinsic dimension d of the sphere.
    pub fn intrinsic_dim(&self) -> usize {
        self.basis.ncols() - 1
    }

    /// Dimension of the surrounding space.
    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Sphere radius.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Center of the sphere in ambient coordinates.
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Orthonormal basis of the spanning subspace (ambient × (d+1)).
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Maps a direction u ∈ R^(d+1) (need not be normalized) to the ambient
    /// point at radius R along it.
    pub fn embed_direction(&self, direction: &[f64]) -> Result<Vec<f64>> {
        if direction.len() != self.basis.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.ncols(),
                actual: direction.len(),
            });
        }
        let norm: f64 = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParameter {
                name: "direction",
                reason: "must be a nonzero finite vector".into(),
            });
        }
        let mut out = self.center.clone();
        for (j, &u) in direction.iter().enumerate() {
            let scale = self.radius * u / norm;
            for (o, b) in out.iter_mut().zip(self.basis.column(j).iter()) {
                *o += scale * b;
            }
        }
        Ok(out)
    }

    /// Pullback coordinates Qᵀ(y − c) ∈ R^(d+1).
    fn pullback(&self, point: &[f64]) -> Vec<f64> {
        (0..self.basis.ncols())
            .map(|j| {
                self.basis
                    .column(j)
                    .iter()
                    .zip(point.iter().zip(&self.center))
                    .map(|(b, (p, c))| b * (p - c))
                    .sum()
            })
            .collect()
    }

    /// Euclidean distance from an ambient point to the embedded sphere.
    pub fn surface_distance(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                actual: point.len(),
            });
        }
        let x = self.pullback(point);
        let in_plane: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        // Off-subspace residual: y − c − Qx.
        let mut off2 = 0.0;
        for (a, (&p, &c)) in point.iter().zip(&self.center).enumerate() {
            let mut recon = 0.0;
            for (j, &xj) in x.iter().enumerate() {
                recon += self.basis[(a, j)] * xj;
            }
            let res = p - c - recon;
            off2 += res * res;
        }
        let radial = in_plane - self.radius;
        Ok((radial * radial + off2).sqrt())
    }

    /// Exact geodesic distance between two points on the sphere. Errors if
    /// either point deviates from the surface by more than 1e-6·R.
    pub fn geodesic(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        let tolerance = ON_SPHERE_RELATIVE_TOLERANCE * self.radius;
        for point in [a, b] {
            let deviation = self.surface_distance(point)?;
            if deviation > tolerance {
                return Err(Error::OffSphere { deviation, tolerance });
            }
        }
        let xa = self.pullback(a);
        let xb = self.pullback(b);
        let na: f64 = xa.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb: f64 = xb.iter().map(|v| v * v).sum::<f64>().sqrt();
        let cos = xa
            .iter()
            .zip(&xb)
            .map(|(p, q)| p * q)
            .sum::<f64>()
            / (na * nb);
        Ok(self.radius * cos.clamp(-1.0, 1.0).acos())
    }

    /// Draws n points uniformly on the sphere (normalized Gaussian
    /// directions), deterministic in the rng state.
    pub fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<PointCloud> {
        let span = self.basis.ncols();
        let mut cloud = PointCloud::new(self.ambient_dim());
        let mut direction = vec![0.0; span];
        let mut produced = 0usize;
        while produced < n {
            for u in direction.iter_mut() {
                *u = rng.sample::<f64, _>(StandardNormal);
            }
            let norm: f64 = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-12 {
                continue; // astronomically rare; redraw rather than divide
            }
            cloud.push(&self.embed_direction(&direction)?)?;
            produced += 1;
        }
        Ok(cloud)
    }
}

fn check_sphere_dims(intrinsic_dim: usize, ambient_dim: usize, radius: f64) -> Result<()> {
    if intrinsic_dim == 0 {
        return Err(Error::InvalidParameter {
            name: "intrinsic_dim",
            reason: "must be at least 1".into(),
        });
    }
    if ambient_dim < intrinsic_dim + 1 {
        return Err(Error::InvalidParameter {
            name: "ambient_dim",
            reason: format!(
                "a {intrinsic_dim}-sphere needs at least {} ambient dimensions, got {ambient_dim}",
                intrinsic_dim + 1
            ),
        });
    }
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "radius",
            reason: format!("must be finite and positive, got {radius}"),
        });
    }
    Ok(())
}

/// Modified Gram-Schmidt with a re-orthogonalization pass; None if the
/// columns are numerically dependent.
fn gram_schmidt(raw: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut q = raw.clone();
    for j in 0..q.ncols() {
        for _ in 0..2 {
            for i in 0..j {
                let proj = q.column(i).dot(&q.column(j));
                let qi = q.column(i).clone_owned();
                let mut col = q.column_mut(j);
                col.axpy(-proj, &qi, 1.0);
            }
        }
        let norm = q.column(j).norm();
        if norm < 1e-8 {
            return None;
        }
        q.column_mut(j).scale_mut(1.0 / norm);
    }
    Some(q)
}

/// Samples n points uniformly from a randomly embedded d-sphere of radius R
/// in R^`ambient`. Returns the cloud and the embedding (for exact geodesics
/// and surface distances). Deterministic in the seed; the embedding and the
/// draws share one stream.
pub fn sample_sphere(
    intrinsic_dim: usize,
    ambient_dim: usize,
    radius: f64,
    n: usize,
    seed: u64,
) -> Result<(PointCloud, SphereEmbedding)> {
    let embedding = SphereEmbedding::random(intrinsic_dim, ambient_dim, radius, seed)?;
    // Continue the stream past the state consumed by the embedding by
    // deriving a second stream; keeps draws independent of basis size.
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let cloud = embedding.sample(n, &mut rng)?;
    Ok((cloud, embedding))
}

/// Exact geodesic distance between two on-sphere points.
pub fn sphere_geodesic_oracle(
    embedding: &SphereEmbedding,
    a: &[f64],
    b: &[f64],
) -> Result<f64> {
    embedding.geodesic(a, b)
}

/// A d-dimensional affine plane in R^D: zero curvature, so projections onto
/// it should be exact to rounding and convergence studies degenerate to the
/// exact regime.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneEmbedding {
    center: Vec<f64>,
    /// Ambient × d, orthonormal columns.
    basis: DMatrix<f64>,
}

impl PlaneEmbedding {
    /// Random affine d-plane in R^`ambient`, deterministic in the seed.
    pub fn random(intrinsic_dim: usize, ambient_dim: usize, seed: u64) -> Result<Self> {
        if intrinsic_dim == 0 {
            return Err(Error::InvalidParameter {
                name: "intrinsic_dim",
                reason: "must be at least 1".into(),
            });
        }
        if ambient_dim <= intrinsic_dim {
            return Err(Error::InvalidParameter {
                name: "ambient_dim",
                reason: format!("must exceed the plane dimension {intrinsic_dim}, got {ambient_dim}"),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = loop {
            let raw = DMatrix::from_fn(ambient_dim, intrinsic_dim, |_, _| {
                rng.sample::<f64, _>(StandardNormal)
            });
            if let Some(q) = gram_schmidt(&raw) {
                break q;
            }
        };
        let center: Vec<f64> = (0..ambient_dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        Ok(PlaneEmbedding { center, basis })
    }

    /// Plane dimension d.
    pub fn intrinsic_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Dimension of the surrounding space.
    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Maps plane coordinates x ∈ R^d to the ambient point c + Qx.
    pub fn embed(&self, coords: &[f64]) -> Result<Vec<f64>> {
        if coords.len() != self.basis.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.ncols(),
                actual: coords.len(),
            });
        }
        let mut out = self.center.clone();
        for (j, &x) in coords.iter().enumerate() {
            for (o, b) in out.iter_mut().zip(self.basis.column(j).iter()) {
                *o += x * b;
            }
        }
        Ok(out)
    }

    /// Distance from an ambient point to the plane.
    pub fn surface_distance(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                actual: point.len(),
            });
        }
        let mut off2 = 0.0;
        let coords: Vec<f64> = (0..self.basis.ncols())
            .map(|j| {
                self.basis
                    .column(j)
                    .iter()
                    .zip(point.iter().zip(&self.center))
                    .map(|(b, (p, c))| b * (p - c))
                    .sum()
            })
            .collect();
        for (a, (&p, &c)) in point.iter().zip(&self.center).enumerate() {
            let mut recon = 0.0;
            for (j, &xj) in coords.iter().enumerate() {
                recon += self.basis[(a, j)] * xj;
            }
            let res = p - c - recon;
            off2 += res * res;
        }
        Ok(off2.sqrt())
    }

    /// Geodesic distance on the plane (the in-plane Euclidean distance).
    pub fn geodesic(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        for point in [a, b] {
            if point.len() != self.ambient_dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.ambient_dim(),
                    actual: point.len(),
                });
            }
        }
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let mut in_plane2 = 0.0;
        for j in 0..self.basis.ncols() {
            let dot: f64 = self.basis.column(j).iter().zip(&diff).map(|(q, v)| q * v).sum();
            in_plane2 += dot * dot;
        }
        Ok(in_plane2.sqrt())
    }
}

/// Samples n points uniformly from the cube [−extent, extent]^d of a random
/// affine d-plane in R^`ambient`. Returns the cloud and the plane.
pub fn sample_plane(
    intrinsic_dim: usize,
    ambient_dim: usize,
    extent: f64,
    n: usize,
    seed: u64,
) -> Result<(PointCloud, PlaneEmbedding)> {
    if !extent.is_finite() || extent <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "extent",
            reason: format!("must be finite and positive, got {extent}"),
        });
    }
    let plane = PlaneEmbedding::random(intrinsic_dim, ambient_dim, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut cloud = PointCloud::new(ambient_dim);
    let mut coords = vec![0.0; intrinsic_dim];
    for _ in 0..n {
        for c in coords.iter_mut() {
            *c = rng.gen_range(-extent..=extent);
        }
        cloud.push(&plane.embed(&coords)?)?;
    }
    Ok((cloud, plane))
}

/// Adds i.i.d. Gaussian noise N(0, σ²) to every coordinate. σ = 0 returns a
/// bit-exact copy without consuming randomness. Provenance is preserved.
pub fn add_noise(cloud: &PointCloud, sigma: f64, seed: u64) -> Result<PointCloud> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: format!("must be finite and non-negative, got {sigma}"),
        });
    }
    if sigma == 0.0 {
        return Ok(cloud.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter {
        name: "sigma",
        reason: e.to_string(),
    })?;
    let data: Vec<f64> = cloud.flat().iter().map(|&x| x + rng.sample(normal)).collect();
    let mut noisy = PointCloud::from_flat(cloud.dim(), data)?;
    if let Some(provenance) = cloud.provenance() {
        noisy.set_provenance(provenance.to_vec())?;
    }
    Ok(noisy)
}

/// Greedy farthest-point subsampling: selects `m` indices such that the
/// selected set is quasi-uniform over the pool — its separation radius is at
/// least half of, and in the greedy construction at least equal to, its fill
/// distance with respect to the pool. That guarantee is re-checked before
/// returning. The first pick is seeded-random; everything after is
/// deterministic. Indices come back in selection order.
pub fn farthest_point_subsample(cloud: &PointCloud, m: usize, seed: u64) -> Result<Vec<usize>> {
    let n = cloud.len();
    if m == 0 {
        return Err(Error::InvalidParameter {
            name: "m",
            reason: "must select at least one point".into(),
        });
    }
    if m > n {
        return Err(Error::InvalidParameter {
            name: "m",
            reason: format!("cannot select {m} points from a cloud of {n}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.gen_range(0..n);
    let mut selected = Vec::with_capacity(m);
    selected.push(first);
    // dist_to_selected[i] = distance from pool point i to the selected set.
    let mut dist_to_selected: Vec<f64> = (0..n)
        .map(|i| dist(cloud.point(i), cloud.point(first)))
        .collect();
    // min_pairwise tracks the separation of the selected set: each new pick
    // is exactly dist_to_selected[pick] away from its nearest selected
    // point, and the greedy rule makes that the smallest pairwise gap so far.
    let mut min_pairwise = f64::INFINITY;
    while selected.len() < m {
        let (pick, &far) = dist_to_selected
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| a.partial_cmp(b).unwrap().then(j.cmp(i)))
            .expect("pool is non-empty");
        min_pairwise = min_pairwise.min(far);
        selected.push(pick);
        for (i, d) in dist_to_selected.iter_mut().enumerate() {
            let nd = dist(cloud.point(i), cloud.point(pick));
            if nd < *d {
                *d = nd;
            }
        }
    }
    // Greedy guarantee: separation ≥ fill distance w.r.t. the pool.
    let fill = dist_to_selected.iter().cloned().fold(0.0, f64::max);
    if m > 1 && min_pairwise < fill * (1.0 - 1e-12) {
        return Err(Error::Internal(format!(
            "farthest-point invariant violated: separation {min_pairwise} < pool fill {fill}"
        )));
    }
    Ok(selected)
}
