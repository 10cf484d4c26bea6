//! Ordered knot sequences on the torus and the `avgsearch-points v1` file format.
//!
//! ```text
//! avgsearch-points v1 d=2 m=3 algorithm=greedy kernel=korobov(d=2,r=2,K=8) seed=0 grid=64 refine=30
//! 0x0p+0 0x0p+0
//! 0x1p-1 0x1.8p-2
//! 0x1.2p-3 0x1.e8p-1
//! ```
//!
//! Coordinates are hexadecimal floats so files round-trip bit for bit.
//! Readers also accept decimal coordinates for hand-written files.

use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::kernel::wrap_unit;
use crate::rng::UniformStream;

pub const MAGIC: &str = "avgsearch-points";
pub const VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum PointSetError {
    #[error("point set needs at least one point")]
    Empty,
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("{len} coordinates do not split into points of dimension {dim}")]
    Ragged { len: usize, dim: usize },
    #[error("non-finite coordinate {value} in point {point}")]
    NonFiniteInput { point: usize, value: f64 },
    #[error("equispaced baseline is defined for d=1 only, got d={0}")]
    EquispacedDimension(usize),
    #[error("prefix length {requested} outside 1..={available}")]
    Prefix { requested: usize, available: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed header at line {line}: {reason}")]
    Header { line: usize, reason: String },
    #[error("row count mismatch at line {line}: header declares m={declared}, found {found} rows")]
    RowCount {
        line: usize,
        declared: usize,
        found: usize,
    },
    #[error("row arity mismatch at line {line}: expected {expected} coordinates, found {found}")]
    RowArity {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("unparsable coordinate `{token}` at line {line}")]
    Coordinate { line: usize, token: String },
    #[error("non-finite coordinate `{token}` at line {line}")]
    NonFinite { line: usize, token: String },
}

/// Where a point set came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Provenance {
    #[default]
    External,
    Generated {
        algorithm: String,
        kernel: Option<String>,
        seed: Option<u64>,
        /// Extra `key=value` pairs, in header order.
        params: Vec<(String, String)>,
    },
}

impl Provenance {
    pub fn generated(algorithm: impl Into<String>) -> Self {
        Provenance::Generated {
            algorithm: algorithm.into(),
            kernel: None,
            seed: None,
            params: Vec::new(),
        }
    }

    pub fn algorithm(&self) -> Option<&str> {
        match self {
            Provenance::External => None,
            Provenance::Generated { algorithm, .. } => Some(algorithm),
        }
    }
}

/// `m ≥ 1` points in `[0,1)^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    provenance: Provenance,
}

impl PointSet {
    /// Builds a set from row-major coordinates, reducing each mod 1.
    pub fn new(
        dim: usize,
        coords: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self, PointSetError> {
        if dim == 0 {
            return Err(PointSetError::ZeroDimension);
        }
        if coords.is_empty() {
            return Err(PointSetError::Empty);
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(PointSetError::Ragged {
                len: coords.len(),
                dim,
            });
        }
        if let Some(i) = coords.iter().position(|x| !x.is_finite()) {
            return Err(PointSetError::NonFiniteInput {
                point: i / dim,
                value: coords[i],
            });
        }
        let coords = coords.into_iter().map(wrap_unit).collect();
        Ok(Self {
            dim,
            coords,
            provenance,
        })
    }

    pub fn from_points<P: AsRef<[f64]>>(
        dim: usize,
        points: &[P],
        provenance: Provenance,
    ) -> Result<Self, PointSetError> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(PointSetError::Ragged { len: p.len(), dim });
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords, provenance)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false; a point set holds at least one point.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.coords[j * self.dim..(j + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// The first `n` points, same provenance.
    pub fn prefix(&self, n: usize) -> Result<Self, PointSetError> {
        if n == 0 || n > self.len() {
            return Err(PointSetError::Prefix {
                requested: n,
                available: self.len(),
            });
        }
        Ok(Self {
            dim: self.dim,
            coords: self.coords[..n * self.dim].to_vec(),
            provenance: self.provenance.clone(),
        })
    }

    /// Serializes to the `avgsearch-points v1` text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        write!(out, "{MAGIC} {VERSION} d={} m={}", self.dim, self.len()).unwrap();
        if let Provenance::Generated {
            algorithm,
            kernel,
            seed,
            params,
        } = &self.provenance
        {
            write!(out, " algorithm={algorithm}").unwrap();
            if let Some(k) = kernel {
                write!(out, " kernel={k}").unwrap();
            }
            if let Some(s) = seed {
                write!(out, " seed={s}").unwrap();
            }
            for (k, v) in params {
                write!(out, " {k}={v}").unwrap();
            }
        }
        out.push('\n');
        for p in self.points() {
            for (i, &x) in p.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push_str(&format_hex_f64(x));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the `avgsearch-points v1` text format.
    pub fn from_text(text: &str) -> Result<Self, PointSetError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (header_line, header) =
            lines
                .by_ref()
                .find(|(_, l)| !l.trim().is_empty())
                .ok_or(PointSetError::Header {
                    line: 1,
                    reason: "empty file".into(),
                })?;
        let (dim, declared, provenance) = parse_header(header_line, header)?;

        let mut coords = Vec::with_capacity(declared * dim);
        let mut rows = 0usize;
        let mut last_line = header_line;
        for (line, raw) in lines {
            last_line = line;
            let row = raw.trim();
            if row.is_empty() {
                continue;
            }
            if rows == declared {
                return Err(PointSetError::RowCount {
                    line,
                    declared,
                    found: rows + 1,
                });
            }
            let tokens: Vec<&str> = row.split_whitespace().collect();
            if tokens.len() != dim {
                return Err(PointSetError::RowArity {
                    line,
                    expected: dim,
                    found: tokens.len(),
                });
            }
            for token in tokens {
                coords.push(parse_coordinate(line, token)?);
            }
            rows += 1;
        }
        if rows != declared {
            return Err(PointSetError::RowCount {
                line: last_line + 1,
                declared,
                found: rows,
            });
        }
        Self::new(dim, coords, provenance).map_err(|e| PointSetError::Header {
            line: header_line,
            reason: e.to_string(),
        })
    }
}

impl fmt::Display for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Writes `set` to `path`.
pub fn write_points(set: &PointSet, path: &Path) -> Result<(), PointSetError> {
    fs::write(path, set.to_text()).map_err(|source| PointSetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a point set from `path`.
pub fn read_points(path: &Path) -> Result<PointSet, PointSetError> {
    let text = fs::read_to_string(path).map_err(|source| PointSetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    PointSet::from_text(&text)
}

/// `{j/m : j = 0..m−1}` on the circle.
pub fn baseline_equispaced(dim: usize, m: usize) -> Result<PointSet, PointSetError> {
    if dim != 1 {
        return Err(PointSetError::EquispacedDimension(dim));
    }
    if m == 0 {
        return Err(PointSetError::Empty);
    }
    let coords = (0..m).map(|j| j as f64 / m as f64).collect();
    PointSet::new(1, coords, Provenance::generated("equispaced"))
}

/// `m` i.i.d. uniform points from the seeded [`UniformStream`], point by
/// point, coordinate 0 first.
pub fn baseline_random(dim: usize, m: usize, seed: u64) -> Result<PointSet, PointSetError> {
    if dim == 0 {
        return Err(PointSetError::ZeroDimension);
    }
    if m == 0 {
        return Err(PointSetError::Empty);
    }
    let mut stream = UniformStream::new(seed);
    let mut coords = vec![0.0; m * dim];
    stream.fill_point(&mut coords);
    let provenance = Provenance::Generated {
        algorithm: "random".into(),
        kernel: None,
        seed: Some(seed),
        params: Vec::new(),
    };
    PointSet::new(dim, coords, provenance)
}

fn parse_header(line: usize, header: &str) -> Result<(usize, usize, Provenance), PointSetError> {
    let bad = |reason: String| PointSetError::Header { line, reason };
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some(MAGIC) {
        return Err(bad(format!("expected `{MAGIC}`")));
    }
    match tokens.next() {
        Some(VERSION) => {}
        Some(v) => return Err(bad(format!("unsupported version `{v}`"))),
        None => return Err(bad("missing version".into())),
    }

    let mut dim = None;
    let mut m = None;
    let mut algorithm = None;
    let mut kernel = None;
    let mut seed = None;
    let mut params = Vec::new();
    for token in tokens {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, found `{token}`")))?;
        match key {
            "d" => {
                dim = Some(
                    value
                        .parse::<usize>()
                        .ok()
                        .filter(|&d| d > 0)
                        .ok_or_else(|| bad(format!("invalid d `{value}`")))?,
                )
            }
            "m" => {
                m = Some(
                    value
                        .parse::<usize>()
                        .ok()
                        .filter(|&m| m > 0)
                        .ok_or_else(|| bad(format!("invalid m `{value}`")))?,
                )
            }
            "algorithm" => algorithm = Some(value.to_string()),
            "kernel" => kernel = Some(value.to_string()),
            "seed" => {
                seed = Some(
                    value
                        .parse::<u64>()
                        .map_err(|_| bad(format!("invalid seed `{value}`")))?,
                )
            }
            _ => params.push((key.to_string(), value.to_string())),
        }
    }
    let dim = dim.ok_or_else(|| bad("missing d=".into()))?;
    let m = m.ok_or_else(|| bad("missing m=".into()))?;
    let provenance = match algorithm {
        Some(algorithm) => Provenance::Generated {
            algorithm,
            kernel,
            seed,
            params,
        },
        None => Provenance::External,
    };
    Ok((dim, m, provenance))
}

fn parse_coordinate(line: usize, token: &str) -> Result<f64, PointSetError> {
    let lower = token.to_ascii_lowercase();
    let value = if lower.contains("0x") {
        hexf_parse::parse_hexf64(token, false).map_err(|_| PointSetError::Coordinate {
            line,
            token: token.to_string(),
        })?
    } else {
        token
            .parse::<f64>()
            .map_err(|_| PointSetError::Coordinate {
                line,
                token: token.to_string(),
            })?
    };
    if !value.is_finite() {
        return Err(PointSetError::NonFinite {
            line,
            token: token.to_string(),
        });
    }
    Ok(value)
}

/// C99-style hexadecimal float (`0x1.8p-1`), exact for every finite `f64`.
pub fn format_hex_f64(x: f64) -> String {
    assert!(x.is_finite(), "hex formatting of non-finite value");
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exponent = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = bits & ((1u64 << 52) - 1);
    if exponent == 0 && mantissa == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if exponent == 0 {
        (0, -1022)
    } else {
        (1, exponent - 1023)
    };
    let mut digits = format!("{mantissa:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let exp_sign = if exp >= 0 { "+" } else { "-" };
    if digits.is_empty() {
        format!("{sign}0x{lead}p{exp_sign}{}", exp.abs())
    } else {
        format!("{sign}0x{lead}.{digits}p{exp_sign}{}", exp.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_format_known_values() {
        assert_eq!(format_hex_f64(0.0), "0x0p+0");
        assert_eq!(format_hex_f64(0.5), "0x1p-1");
        assert_eq!(format_hex_f64(0.75), "0x1.8p-1");
        assert_eq!(format_hex_f64(1.0), "0x1p+0");
        assert_eq!(format_hex_f64(-2.5), "-0x1.4p+1");
        assert_eq!(format_hex_f64(f64::MIN_POSITIVE / 2.0), "0x0.8p-1022");
    }

    #[test]
    fn hex_roundtrip_via_parser() {
        for &x in &[0.1, 1.0 / 3.0, 0.999_999_999, 5e-324, 1e-310, 0.25] {
            let s = format_hex_f64(x);
            assert_eq!(
                hexf_parse::parse_hexf64(&s, false).unwrap().to_bits(),
                x.to_bits(),
                "{s}"
            );
        }
    }

    #[test]
    fn single_point_file() {
        let set = PointSet::new(1, vec![0.5], Provenance::External).unwrap();
        assert_eq!(set.to_text(), "avgsearch-points v1 d=1 m=1\n0x1p-1\n");
    }

    #[test]
    fn one_maps_to_zero() {
        let set = PointSet::new(2, vec![1.0, 0.25], Provenance::External).unwrap();
        assert_eq!(set.point(0), &[0.0, 0.25]);
        let read = PointSet::from_text("avgsearch-points v1 d=1 m=1\n1.0\n").unwrap();
        assert_eq!(read.point(0), &[0.0]);
    }

    #[test]
    fn provenance_round_trip() {
        let prov = Provenance::Generated {
            algorithm: "greedy".into(),
            kernel: Some("korobov(d=1,r=2,K=4)".into()),
            seed: Some(9),
            params: vec![
                ("grid".into(), "256".into()),
                ("refine".into(), "30".into()),
            ],
        };
        let set = PointSet::new(1, vec![0.0, 0.5, 0.25], prov.clone()).unwrap();
        let text = set.to_text();
        assert!(text.starts_with(
            "avgsearch-points v1 d=1 m=3 algorithm=greedy kernel=korobov(d=1,r=2,K=4) seed=9 grid=256 refine=30\n"
        ));
        assert_eq!(PointSet::from_text(&text).unwrap(), set);
    }

    #[test]
    fn external_when_no_algorithm() {
        let set = PointSet::from_text("avgsearch-points v1 d=2 m=1\n0.1 0.2\n").unwrap();
        assert_eq!(set.provenance(), &Provenance::External);
        assert_eq!((set.len(), set.dim()), (1, 2));
    }

    #[test]
    fn too_few_rows() {
        let err =
            PointSet::from_text("avgsearch-points v1 d=2 m=3\n0.1 0.2\n0.3 0.4\n").unwrap_err();
        match err {
            PointSetError::RowCount {
                line,
                declared,
                found,
            } => {
                assert_eq!((line, declared, found), (4, 3, 2));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn too_many_rows() {
        let err = PointSet::from_text("avgsearch-points v1 d=1 m=1\n0.1\n0.2\n").unwrap_err();
        assert!(matches!(err, PointSetError::RowCount { line: 3, .. }));
    }

    #[test]
    fn arity_mismatch_names_line() {
        let err = PointSet::from_text("avgsearch-points v1 d=2 m=2\n0.1 0.2\n0.3\n").unwrap_err();
        assert!(matches!(
            err,
            PointSetError::RowArity {
                line: 3,
                expected: 2,
                found: 1
            }
        ));
    }

    #[test]
    fn nan_is_rejected() {
        let err = PointSet::from_text("avgsearch-points v1 d=1 m=1\nnan\n").unwrap_err();
        assert!(matches!(err, PointSetError::NonFinite { line: 2, .. }));
        assert!(err.to_string().contains("non-finite coordinate"));
        let err = PointSet::from_text("avgsearch-points v1 d=1 m=1\ninf\n").unwrap_err();
        assert!(matches!(err, PointSetError::NonFinite { .. }));
    }

    #[test]
    fn malformed_headers() {
        for text in [
            "",
            "points v1 d=1 m=1\n0\n",
            "avgsearch-points v2 d=1 m=1\n0\n",
            "avgsearch-points v1 m=1\n0\n",
            "avgsearch-points v1 d=1\n0\n",
            "avgsearch-points v1 d=0 m=1\n0\n",
            "avgsearch-points v1 d=1 m=1 junk\n0\n",
            "avgsearch-points v1 d=1 m=1 algorithm=x seed=abc\n0\n",
        ] {
            assert!(
                matches!(PointSet::from_text(text), Err(PointSetError::Header { .. })),
                "{text:?}"
            );
        }
    }

    #[test]
    fn garbage_coordinate() {
        let err = PointSet::from_text("avgsearch-points v1 d=1 m=1\n0xzz\n").unwrap_err();
        assert!(matches!(err, PointSetError::Coordinate { line: 2, .. }));
    }

    #[test]
    fn equispaced_values() {
        let set = baseline_equispaced(1, 4).unwrap();
        assert_eq!(set.coords(), &[0.0, 0.25, 0.5, 0.75]);
        assert!(matches!(
            baseline_equispaced(2, 4),
            Err(PointSetError::EquispacedDimension(2))
        ));
    }

    #[test]
    fn random_baseline_determinism() {
        let a = baseline_random(3, 50, 11).unwrap();
        let b = baseline_random(3, 50, 11).unwrap();
        let c = baseline_random(3, 50, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.coords(), c.coords());
        assert!(a.coords().iter().all(|x| (0.0..1.0).contains(x)));
        // prefixes agree across m
        assert_eq!(
            baseline_random(3, 10, 11).unwrap().coords(),
            &a.coords()[..30]
        );
    }

    #[test]
    fn file_round_trip_and_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.txt");
        let set = baseline_random(2, 20, 5).unwrap();
        write_points(&set, &path).unwrap();
        assert_eq!(read_points(&path).unwrap(), set);
        let missing = dir.path().join("missing.txt");
        let err = read_points(&missing).unwrap_err();
        assert!(err.to_string().contains("missing.txt"));
    }

    #[test]
    fn prefix_bounds() {
        let set = baseline_random(1, 5, 1).unwrap();
        assert_eq!(set.prefix(2).unwrap().len(), 2);
        assert!(set.prefix(0).is_err());
        assert!(set.prefix(6).is_err());
    }
}
