//! Oriented p-planes in R^n in the graph chart `dx^1 ^ ... ^ dx^p > 0`.
//!
//! A plane is stored by its slope matrix `q` (`(n-p) x p`), meaning it is
//! spanned by `t_j = e_j + sum_i q[i][j] e_{p+i}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the Grassmannian bundle in graph coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannElement {
    n: usize,
    p: usize,
    base_point: DVector<f64>,
    slopes: DMatrix<f64>,
}

impl GrassmannElement {
    pub fn new(n: usize, p: usize, base_point: DVector<f64>, slopes: DMatrix<f64>) -> Result<Self> {
        check_dims(n, p)?;
        if base_point.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "base point has {} entries, expected {n}",
                base_point.len()
            )));
        }
        if slopes.nrows() != n - p || slopes.ncols() != p {
            return Err(Error::DimensionMismatch(format!(
                "slopes are {}x{}, expected {}x{p}",
                slopes.nrows(),
                slopes.ncols(),
                n - p
            )));
        }
        if base_point.iter().chain(slopes.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Grassmann element".into()));
        }
        Ok(GrassmannElement { n, p, base_point, slopes })
    }

    /// Element at the origin.
    pub fn at_origin(n: usize, p: usize, slopes: DMatrix<f64>) -> Result<Self> {
        Self::new(n, p, DVector::zeros(n), slopes)
    }

    /// Element from row-major slopes.
    pub fn from_rows(n: usize, p: usize, base_point: &[f64], slopes_row_major: &[f64]) -> Result<Self> {
        check_dims(n, p)?;
        if slopes_row_major.len() != (n - p) * p {
            return Err(Error::DimensionMismatch(format!(
                "{} slope entries, expected {}",
                slopes_row_major.len(),
                (n - p) * p
            )));
        }
        Self::new(
            n,
            p,
            DVector::from_column_slice(base_point),
            DMatrix::from_row_slice(n - p, p, slopes_row_major),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Codimension `n - p`.
    pub fn codim(&self) -> usize {
        self.n - self.p
    }

    pub fn base_point(&self) -> &DVector<f64> {
        &self.base_point
    }

    pub fn slopes(&self) -> &DMatrix<f64> {
        &self.slopes
    }

    /// First `p` coordinates of the base point.
    pub fn x(&self) -> &[f64] {
        &self.base_point.as_slice()[..self.p]
    }

    /// Last `n - p` coordinates of the base point.
    pub fn z(&self) -> &[f64] {
        &self.base_point.as_slice()[self.p..]
    }

    pub fn slopes_row_major(&self) -> Vec<f64> {
        let (m, p) = self.slopes.shape();
        (0..m).flat_map(|i| (0..p).map(move |j| (i, j))).map(|(i, j)| self.slopes[(i, j)]).collect()
    }

    /// The `p` chart tangent vectors `t_j = e_j + sum_i q^i_j e_{p+i}`.
    pub fn graph_tangent_basis(&self) -> Vec<DVector<f64>> {
        (0..self.p)
            .map(|j| {
                let mut t = DVector::zeros(self.n);
                t[j] = 1.0;
                for i in 0..self.codim() {
                    t[self.p + i] = self.slopes[(i, j)];
                }
                t
            })
            .collect()
    }

    pub fn to_record(&self) -> ElementRecord {
        ElementRecord {
            n: self.n,
            p: self.p,
            base_point: self.base_point.iter().copied().collect(),
            slopes: self.slopes_row_major(),
        }
    }
}

fn check_dims(n: usize, p: usize) -> Result<()> {
    if n < 2 || p == 0 || p >= n {
        return Err(Error::DimensionMismatch(format!("need 1 <= p <= n-1 and n >= 2, got n={n}, p={p}")));
    }
    Ok(())
}

/// Chart coordinates recovered from an arbitrary basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartCoordinates {
    pub slopes: DMatrix<f64>,
    /// The input basis had `beta < 0`, i.e. opposite orientation to the chart.
    pub orientation_reversed: bool,
}

fn leading_block(vectors: &[DVector<f64>]) -> Result<(usize, usize, DMatrix<f64>)> {
    let p = vectors.len();
    let n = vectors.first().map(|v| v.len()).ok_or_else(|| Error::Invalid("empty basis".into()))?;
    if vectors.iter().any(|v| v.len() != n) {
        return Err(Error::DimensionMismatch("basis vectors have different lengths".into()));
    }
    if p > n {
        return Err(Error::DimensionMismatch(format!("{p} vectors in R^{n}")));
    }
    let lead = DMatrix::from_fn(p, p, |r, c| vectors[c][r]);
    Ok((n, p, lead))
}

/// `beta|_E` evaluated on the given vectors: determinant of their first `p` coordinates.
pub fn beta_restriction(vectors: &[DVector<f64>]) -> Result<f64> {
    let (_, _, lead) = leading_block(vectors)?;
    Ok(lead.determinant())
}

/// Inverts the chart: slopes `q = C A^{-1}` where the basis matrix is `[A; C]`.
pub fn slopes_from_basis(vectors: &[DVector<f64>]) -> Result<ChartCoordinates> {
    let (n, p, lead) = leading_block(vectors)?;
    if p == n {
        return Err(Error::DimensionMismatch("a basis of R^n is not a proper plane".into()));
    }
    let det = lead.determinant();
    let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !(det.abs() >= 1e-12 * scale.powi(p as i32)) || scale == 0.0 {
        return Err(Error::SingularChart { det });
    }
    let lower = DMatrix::from_fn(n - p, p, |r, c| vectors[c][p + r]);
    let inv = lead.try_inverse().ok_or(Error::SingularChart { det })?;
    Ok(ChartCoordinates { slopes: lower * inv, orientation_reversed: det < 0.0 })
}

/// Structured-text form of an element (slopes row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementRecord {
    pub n: usize,
    pub p: usize,
    pub base_point: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl TryFrom<ElementRecord> for GrassmannElement {
    type Error = Error;

    fn try_from(r: ElementRecord) -> Result<Self> {
        GrassmannElement::from_rows(r.n, r.p, &r.base_point, &r.slopes)
    }
}
