//! Plain-text persistence for point clouds and sphere embeddings.
//!
//! Clouds are one point per line, coordinates separated by whitespace or
//! commas; blank lines and lines starting with `#` are ignored. Values are
//! written with Rust's shortest-roundtrip float formatting, so a
//! write/read cycle reproduces every coordinate bit-exactly.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::synthetic::SphereEmbedding;

/// Reads a point cloud from a text file.
pub fn read_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let text = fs::read_to_string(path)?;
    parse_cloud(&text)
}

/// Parses a point cloud from text (same format as [`read_cloud`]).
pub fn parse_cloud(text: &str) -> Result<PointCloud> {
    let mut cloud: Option<PointCloud> = None;
    for (index, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = parse_floats(line, index + 1)?;
        let cloud = cloud.get_or_insert_with(|| PointCloud::new(row.len()));
        cloud.push(&row).map_err(|_| Error::Parse {
            line: index + 1,
            reason: format!(
                "expected {} coordinates, found {}",
                cloud.dim(),
                row.len()
            ),
        })?;
    }
    cloud.ok_or(Error::Parse { line: 0, reason: "no data lines in file".into() })
}

/// Writes a point cloud to a text file, one point per line.
pub fn write_cloud(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<()> {
    let mut out = String::new();
    format_cloud(cloud, &mut out);
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Formats a point cloud into a string buffer (same format as
/// [`write_cloud`]).
pub fn format_cloud(cloud: &PointCloud, out: &mut String) {
    use std::fmt::Write;
    let _ = writeln!(out, "# {} points, dimension {}", cloud.len(), cloud.dim());
    for point in cloud.iter() {
        for (j, x) in point.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{x}");
        }
        out.push('\n');
    }
}

/// Writes a sphere embedding sidecar: radius, center, and the orthonormal
/// basis (row-major), in a commented plain-text layout.
pub fn write_embedding(path: impl AsRef<Path>, embedding: &SphereEmbedding) -> Result<()> {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# sphere embedding: intrinsic dimension {}, ambient dimension {}",
        embedding.intrinsic_dim(),
        embedding.ambient_dim()
    );
    let _ = writeln!(out, "radius {}", embedding.radius());
    out.push_str("center");
    for c in embedding.center() {
        let _ = write!(out, " {c}");
    }
    out.push('\n');
    let basis = embedding.basis();
    let _ = writeln!(out, "basis {} {}", basis.nrows(), basis.ncols());
    for i in 0..basis.nrows() {
        for j in 0..basis.ncols() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{}", basis[(i, j)]);
        }
        out.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Reads a sphere embedding written by [`write_embedding`], re-validating
/// the basis.
pub fn read_embedding(path: impl AsRef<Path>) -> Result<SphereEmbedding> {
    let text = fs::read_to_string(path)?;
    let mut radius: Option<f64> = None;
    let mut center: Option<Vec<f64>> = None;
    let mut basis_rows: Vec<Vec<f64>> = Vec::new();
    let mut basis_shape: Option<(usize, usize)> = None;

    for (index, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let number = index + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("radius") {
            radius = Some(parse_one_float(rest.trim(), number)?);
        } else if let Some(rest) = line.strip_prefix("center") {
            center = Some(parse_floats(rest.trim(), number)?);
        } else if let Some(rest) = line.strip_prefix("basis") {
            let dims = parse_floats(rest.trim(), number)?;
            if dims.len() != 2 || dims.iter().any(|&d| d < 1.0 || d.fract() != 0.0) {
                return Err(Error::Parse {
                    line: number,
                    reason: "basis header must be two positive integers".into(),
                });
            }
            basis_shape = Some((dims[0] as usize, dims[1] as usize));
        } else if basis_shape.is_some() {
            basis_rows.push(parse_floats(line, number)?);
        } else {
            return Err(Error::Parse {
                line: number,
                reason: format!("unrecognized directive: {line}"),
            });
        }
    }

    let radius = radius.ok_or(Error::Parse { line: 0, reason: "missing radius line".into() })?;
    let center = center.ok_or(Error::Parse { line: 0, reason: "missing center line".into() })?;
    let (nrows, ncols) =
        basis_shape.ok_or(Error::Parse { line: 0, reason: "missing basis header".into() })?;
    if basis_rows.len() != nrows || basis_rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse {
            line: 0,
            reason: format!("basis must be {nrows} rows of {ncols} values"),
        });
    }
    let basis = DMatrix::from_fn(nrows, ncols, |i, j| basis_rows[i][j]);
    SphereEmbedding::from_parts(center, radius, basis)
}

fn parse_floats(line: &str, number: usize) -> Result<Vec<f64>> {
    line.replace(',', " ")
        .split_whitespace()
        .map(|token| {
            token.parse::<f64>().map_err(|_| Error::Parse {
                line: number,
                reason: format!("not a number: {token:?}"),
            })
        })
        .collect()
}

fn parse_one_float(text: &str, number: usize) -> Result<f64> {
    let values = parse_floats(text, number)?;
    if values.len() != 1 {
        return Err(Error::Parse {
            line: number,
            reason: format!("expected exactly one value, found {}", values.len()),
        });
    }
    Ok(values[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::sample_sphere;

    #[test]
    fn cloud_roundtrip_is_bit_exact() {
        let (cloud, _) = sample_sphere(2, 7, 0.5, 30, 42).unwrap();
        let dir = std::env::temp_dir().join("mmls-io-test-cloud");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cloud.txt");
        write_cloud(&path, &cloud).unwrap();
        let back = read_cloud(&path).unwrap();
        assert_eq!(cloud.dim(), back.dim());
        assert_eq!(cloud.flat(), back.flat());
    }

    #[test]
    fn parser_accepts_comments_commas_and_blank_lines() {
        let text = "# heading\n\n1.0, 2.0\n 3.0\t4.0 \n# trailing\n";
        let cloud = parse_cloud(text).unwrap();
        assert_eq!(cloud.len(), 2);
        assert_eq!(cloud.point(0), &[1.0, 2.0]);
        assert_eq!(cloud.point(1), &[3.0, 4.0]);
    }

    #[test]
    fn parser_reports_line_numbers() {
        let err = parse_cloud("1.0 2.0\nbogus 3.0\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected Parse, got {other}"),
        }
        let err = parse_cloud("1.0 2.0\n3.0\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected Parse, got {other}"),
        }
        assert!(matches!(parse_cloud("# only comments\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn embedding_roundtrip_preserves_geometry() {
        let (cloud, embedding) = sample_sphere(2, 9, 1.5, 5, 7).unwrap();
        let dir = std::env::temp_dir().join("mmls-io-test-embedding");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("embedding.txt");
        write_embedding(&path, &embedding).unwrap();
        let back = read_embedding(&path).unwrap();
        assert_eq!(back.radius(), embedding.radius());
        assert_eq!(back.center(), embedding.center());
        assert_eq!(back.basis(), embedding.basis());
        // Geodesics agree bit-exactly on the reconstructed embedding.
        let g1 = embedding.geodesic(cloud.point(0), cloud.point(1)).unwrap();
        let g2 = back.geodesic(cloud.point(0), cloud.point(1)).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn malformed_embeddings_are_rejected() {
        assert!(matches!(
            read_embedding(std::env::temp_dir().join("mmls-io-missing.txt")),
            Err(Error::Io(_))
        ));
        let dir = std::env::temp_dir().join("mmls-io-test-bad");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.txt");
        fs::write(&path, "radius 1.0\ncenter 0 0 0\nbasis 3 2\n1 0\n0 1\n0 1\n").unwrap();
        // Second basis column is (0, 1, 1): not unit length, so validation
        // must reject it.
        assert!(read_embedding(&path).is_err());
    }
}
