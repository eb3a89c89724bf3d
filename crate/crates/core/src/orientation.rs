//! Absolute orientation of two embedding spaces from paired anchor vectors.
//!
//! Given anchors `(aᵢ, bᵢ)`, both sets are centered on their means, the
//! cross-covariance `H = Σ b̂ᵢ âᵢᵀ` is decomposed as `U S Vᵀ`, and the
//! rotation is `R = U Vᵀ`. Target vectors are mapped into the centered
//! source frame as row vectors: `ỹ = (y − b̄) R`. No reflection correction
//! is applied, so `det R` may be −1; it is reported in the diagnostics.

use std::io::{BufRead, Write};

use log::warn;

use crate::embedder::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::linalg::{jacobi_svd, Matrix};

/// Paired source/target anchor vectors, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    dimension: usize,
    source: Vec<f64>,
    target: Vec<f64>,
}

impl AnchorSet {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid_argument("anchor dimension must be at least 1"));
        }
        Ok(AnchorSet {
            dimension,
            source: Vec::new(),
            target: Vec::new(),
        })
    }

    pub fn from_pairs<A: AsRef<[f64]>, B: AsRef<[f64]>>(
        dimension: usize,
        pairs: impl IntoIterator<Item = (A, B)>,
    ) -> Result<Self> {
        let mut set = AnchorSet::new(dimension)?;
        for (a, b) in pairs {
            set.push(a.as_ref(), b.as_ref())?;
        }
        Ok(set)
    }

    pub fn push(&mut self, source: &[f64], target: &[f64]) -> Result<()> {
        if source.len() != self.dimension || target.len() != self.dimension {
            return Err(Error::invalid_argument(format!(
                "anchor vectors must have dimension {}",
                self.dimension
            )));
        }
        if source.iter().chain(target).any(|x| !x.is_finite()) {
            return Err(Error::invalid_argument("anchor vectors must be finite"));
        }
        self.source.extend_from_slice(source);
        self.target.extend_from_slice(target);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.source.len() / self.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    pub fn source(&self, i: usize) -> &[f64] {
        &self.source[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.target[i * self.dimension..(i + 1) * self.dimension]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationDiagnostics {
    pub determinant: f64,
    /// Numerical rank of the cross-covariance matrix.
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub anchor_count: usize,
}

impl RotationDiagnostics {
    /// The anchors did not span every dimension; part of `R` is an arbitrary
    /// orthogonal completion.
    pub fn rank_deficient(&self) -> bool {
        self.rank < self.singular_values.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationModel {
    pub source_mean: Vec<f64>,
    pub target_mean: Vec<f64>,
    pub rotation: Matrix,
    pub diagnostics: RotationDiagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

fn mean(rows: &[f64], d: usize) -> Vec<f64> {
    let n = rows.len() / d;
    let mut m = vec![0.0; d];
    for row in rows.chunks_exact(d) {
        for (acc, x) in m.iter_mut().zip(row) {
            *acc += x;
        }
    }
    m.iter_mut().for_each(|x| *x /= n as f64);
    m
}

fn centered(rows: &[f64], mean: &[f64]) -> Vec<f64> {
    rows.chunks_exact(mean.len())
        .flat_map(|row| row.iter().zip(mean).map(|(x, m)| x - m))
        .collect()
}

/// Fits the rotation carrying the centered target anchors onto the centered
/// source anchors.
pub fn compute_rotation(anchors: &AnchorSet) -> Result<RotationModel> {
    if anchors.is_empty() {
        return Err(Error::invalid_argument("anchor set is empty"));
    }
    let d = anchors.dimension;
    if anchors.source.iter().chain(&anchors.target).any(|x| !x.is_finite()) {
        return Err(Error::invalid_argument("anchor vectors must be finite"));
    }
    let source_mean = mean(&anchors.source, d);
    let target_mean = mean(&anchors.target, d);
    let a_hat = centered(&anchors.source, &source_mean);
    let b_hat = centered(&anchors.target, &target_mean);

    // H = Σ b̂ᵢ âᵢᵀ
    let mut h = Matrix::zeros(d, d);
    for (b, a) in b_hat.chunks_exact(d).zip(a_hat.chunks_exact(d)) {
        for (r, &bv) in b.iter().enumerate() {
            if bv == 0.0 {
                continue;
            }
            for (c, &av) in a.iter().enumerate() {
                h[(r, c)] += bv * av;
            }
        }
    }

    let svd = jacobi_svd(&h)?;
    let rotation = svd.u.matmul(&svd.v.transpose())?;
    let diagnostics = RotationDiagnostics {
        determinant: rotation.determinant(),
        rank: svd.rank,
        singular_values: svd.singular_values,
        anchor_count: anchors.len(),
    };
    if diagnostics.rank_deficient() {
        warn!(
            "anchor cross-covariance has rank {} < {d}; rotation is partly arbitrary",
            diagnostics.rank
        );
    }
    Ok(RotationModel {
        source_mean,
        target_mean,
        rotation,
        diagnostics,
    })
}

impl RotationModel {
    /// `ā = b̄ = 0`, `R = I`.
    pub fn identity(dimension: usize) -> Self {
        RotationModel {
            source_mean: vec![0.0; dimension],
            target_mean: vec![0.0; dimension],
            rotation: Matrix::identity(dimension),
            diagnostics: RotationDiagnostics {
                determinant: 1.0,
                rank: dimension,
                singular_values: vec![1.0; dimension],
                anchor_count: 0,
            },
        }
    }

    pub fn dimension(&self) -> usize {
        self.source_mean.len()
    }

    /// Maps one target vector into the centered source frame.
    pub fn transform_target(&self, y: &[f64], out: &mut [f64]) {
        let centered: Vec<f64> = y.iter().zip(&self.target_mean).map(|(a, m)| a - m).collect();
        self.rotation.left_mul_into(&centered, out);
    }

    /// `‖B̂R − Â‖_F` over the given anchors, centering with this model's means.
    pub fn anchor_residual(&self, anchors: &AnchorSet) -> Result<f64> {
        let d = self.dimension();
        if anchors.dimension != d {
            return Err(Error::invalid_argument("anchor dimension differs from model"));
        }
        let mut rotated = vec![0.0; d];
        let mut sum = 0.0;
        for i in 0..anchors.len() {
            self.transform_target(anchors.target(i), &mut rotated);
            for ((r, a), m) in rotated.iter().zip(anchors.source(i)).zip(&self.source_mean) {
                let diff = r - (a - m);
                sum += diff * diff;
            }
        }
        Ok(sum.sqrt())
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        let line = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        writeln!(out, "{}", self.dimension())?;
        writeln!(out, "{}", line(&self.source_mean))?;
        writeln!(out, "{}", line(&self.target_mean))?;
        for i in 0..self.dimension() {
            writeln!(out, "{}", line(self.rotation.row(i)))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a model dump. Diagnostics other than the determinant are not
    /// stored and come back as full rank with unit singular values.
    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let lines: Vec<String> = input
            .lines()
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .filter(|l| !l.trim().is_empty())
            .collect();
        let d: usize = lines
            .first()
            .ok_or_else(|| Error::parse(1, "missing dimension"))?
            .trim()
            .parse()
            .map_err(|e| Error::parse(1, format!("bad dimension: {e}")))?;
        if d == 0 {
            return Err(Error::parse(1, "dimension must be at least 1"));
        }
        if lines.len() != d + 3 {
            return Err(Error::invalid_input(format!(
                "expected {} non-empty lines, found {}",
                d + 3,
                lines.len()
            )));
        }
        let parse_row = |idx: usize| -> Result<Vec<f64>> {
            let row: Vec<f64> = lines[idx]
                .split_whitespace()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::parse(idx + 1, format!("bad value {f:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            if row.len() != d {
                return Err(Error::parse(idx + 1, format!("expected {d} values")));
            }
            Ok(row)
        };
        let source_mean = parse_row(1)?;
        let target_mean = parse_row(2)?;
        let rows = (3..d + 3).map(parse_row).collect::<Result<Vec<_>>>()?;
        let rotation = Matrix::from_rows(&rows)?;
        Ok(RotationModel {
            source_mean,
            target_mean,
            diagnostics: RotationDiagnostics {
                determinant: rotation.determinant(),
                rank: d,
                singular_values: vec![1.0; d],
                anchor_count: 0,
            },
            rotation,
        })
    }
}

/// Moves a space into the common frame: source vectors are centered on `ā`,
/// target vectors are centered on `b̄` and rotated by `R`.
pub fn apply_rotation(model: &RotationModel, space: &EmbeddingSpace, side: Side) -> Result<EmbeddingSpace> {
    if space.dimension() != model.dimension() {
        return Err(Error::invalid_argument(format!(
            "space dimension {} differs from model dimension {}",
            space.dimension(),
            model.dimension()
        )));
    }
    Ok(match side {
        Side::Source => space.map_rows(|x, out| {
            for ((o, v), m) in out.iter_mut().zip(x).zip(&model.source_mean) {
                *o = v - m;
            }
        }),
        Side::Target => space.map_rows(|y, out| model.transform_target(y, out)),
    })
}
