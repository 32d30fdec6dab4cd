//! Dense point-cloud container shared by every stage of the pipeline.
//!
//! Points are stored row-major in one flat buffer, so neighbor scans touch
//! contiguous memory. A cloud produced by densification additionally carries
//! per-point provenance: which input sample spawned the point and which grid
//! node it came from.

use crate::error::{Error, Result};

/// Provenance of a densified point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointSource {
    /// Index of the input sample whose local frame spawned this point.
    pub source_index: u32,
    /// Flattened grid-node index within that sample's local grid.
    pub grid_index: u32,
}

/// An ordered set of points in `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
    provenance: Option<Vec<PointSource>>,
}

impl PointCloud {
    /// Creates an empty cloud of the given dimension.
    pub fn new(dim: usize) -> Self {
        PointCloud { dim, data: Vec::new(), provenance: None }
    }

    /// Wraps a flat row-major coordinate buffer.
    ///
    /// Fails if `dim` is zero, the buffer length is not a multiple of `dim`,
    /// or any coordinate is non-finite.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "must be at least 1".into(),
            });
        }
        if data.len() % dim != 0 {
            return Err(Error::InvalidParameter {
                name: "data",
                reason: format!("length {} is not a multiple of dim {}", data.len(), dim),
            });
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "data",
                reason: format!("non-finite coordinate at flat index {bad}"),
            });
        }
        Ok(PointCloud { dim, data, provenance: None })
    }

    /// Builds a cloud from per-point rows. All rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "rows",
                reason: "need at least one non-empty row".into(),
            });
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(dim, data)
    }

    /// Appends one point. The point must match the cloud dimension.
    pub fn push(&mut self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: point.len() });
        }
        self.data.extend_from_slice(point);
        Ok(())
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// Whether the cloud holds no points.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coordinates of point `i`. Panics on out-of-range `i` like slice
    /// indexing does; use [`PointCloud::len`] to stay in range.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Iterates over all points in index order.
    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Flat row-major coordinate buffer.
    pub fn flat(&self) -> &[f64] {
        &self.data
    }

    /// Per-point provenance, if this cloud came from densification.
    pub fn provenance(&self) -> Option<&[PointSource]> {
        self.provenance.as_deref()
    }

    /// Attaches provenance records (one per point).
    pub fn set_provenance(&mut self, provenance: Vec<PointSource>) -> Result<()> {
        if provenance.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: provenance.len(),
            });
        }
        self.provenance = Some(provenance);
        Ok(())
    }

    /// Concatenates another cloud of the same dimension onto this one.
    /// Provenance is dropped because it no longer covers every point.
    pub fn extend(&mut self, other: &PointCloud) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: other.dim });
        }
        self.data.extend_from_slice(&other.data);
        self.provenance = None;
        Ok(())
    }
}

/// Squared Euclidean distance between two coordinate slices.
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean distance between two coordinate slices.
pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}
