//! Gram determinants, metric volumes and wedge minors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lagrangian::HomogenizedLagrangian;

/// A symmetric bilinear form `g_ij` on `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MetricRecord", into = "MetricRecord")]
pub struct MetricTensor {
    components: DMatrix<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MetricRecord {
    dim: usize,
    components: Vec<f64>,
}

impl TryFrom<MetricRecord> for MetricTensor {
    type Error = Error;
    fn try_from(r: MetricRecord) -> Result<Self> {
        if r.components.len() != r.dim * r.dim {
            return Err(Error::DimensionMismatch(format!(
                "metric of dim {} needs {} components, got {}",
                r.dim,
                r.dim * r.dim,
                r.components.len()
            )));
        }
        MetricTensor::new(DMatrix::from_row_slice(r.dim, r.dim, &r.components))
    }
}

impl From<MetricTensor> for MetricRecord {
    fn from(m: MetricTensor) -> Self {
        let n = m.dim();
        let components = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|ij| m.components[ij]).collect();
        MetricRecord { dim: n, components }
    }
}

impl MetricTensor {
    /// Validates squareness, finiteness and symmetry (1e-12 relative).
    pub fn new(components: DMatrix<f64>) -> Result<Self> {
        if !components.is_square() || components.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "metric must be square, got {}x{}",
                components.nrows(),
                components.ncols()
            )));
        }
        if components.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("metric components".into()));
        }
        let asym = (&components - components.transpose()).amax();
        if asym > 1e-12 * components.amax() {
            return Err(Error::Invalid(format!("metric is not symmetric (asymmetry {asym:e})")));
        }
        Ok(MetricTensor { components })
    }

    pub fn euclidean(n: usize) -> Self {
        MetricTensor { components: DMatrix::identity(n, n) }
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn dim(&self) -> usize {
        self.components.nrows()
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.transpose() * &self.components * b)[(0, 0)]
    }

    pub fn det(&self) -> f64 {
        self.components.determinant()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.components.clone().cholesky().is_some()
    }
}

fn check_vectors(vectors: &[DVector<f64>], n: usize) -> Result<()> {
    if vectors.is_empty() || vectors.len() > n {
        return Err(Error::DimensionMismatch(format!("need 1..={n} vectors, got {}", vectors.len())));
    }
    if let Some(v) = vectors.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch(format!("vector of length {} in R^{n}", v.len())));
    }
    Ok(())
}

/// `det [g(xi_a, xi_b)]`.
pub fn gram_det(vectors: &[DVector<f64>], metric: &MetricTensor) -> Result<f64> {
    check_vectors(vectors, metric.dim())?;
    let k = vectors.len();
    let gram = DMatrix::from_fn(k, k, |a, b| metric.inner(&vectors[a], &vectors[b]));
    Ok(gram.determinant())
}

/// `sqrt(G(xi_1, ..., xi_k))`.
pub fn volume(vectors: &[DVector<f64>], metric: &MetricTensor) -> Result<f64> {
    let g = gram_det(vectors, metric)?;
    if g >= 0.0 {
        return Ok(g.sqrt());
    }
    // roundoff on dependent vectors can leave a tiny negative determinant
    let scale: f64 = vectors.iter().map(|v| metric.inner(v, v).abs()).product();
    if -g <= 1e-12 * scale {
        Ok(0.0)
    } else {
        Err(Error::NegativeGram(g))
    }
}

/// Volume of the coordinate basis `e_1..e_n`, `sqrt(det g)`.
pub fn basis_volume(metric: &MetricTensor) -> Result<f64> {
    let n = metric.dim();
    let basis: Vec<DVector<f64>> = (0..n).map(|i| DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 })).collect();
    volume(&basis, metric)
}

/// `n` vectors as the rows of a matrix.
pub fn component_matrix(vectors: &[DVector<f64>]) -> DMatrix<f64> {
    let n = vectors.first().map_or(0, |v| v.len());
    DMatrix::from_fn(vectors.len(), n, |r, c| vectors[r][c])
}

/// `V(e_1..e_n) |det(components)|`, the factorization of the volume of `n`
/// vectors through the basis volume.
pub fn factored_volume(vectors: &[DVector<f64>], metric: &MetricTensor) -> Result<f64> {
    check_vectors(vectors, metric.dim())?;
    if vectors.len() != metric.dim() {
        return Err(Error::DimensionMismatch(format!("need exactly {} vectors", metric.dim())));
    }
    Ok(basis_volume(metric)? * component_matrix(vectors).determinant().abs())
}

/// `e*_{i_1} ^ ... ^ e*_{i_k} (xi_1, ..., xi_k)` with 1-based indices.
pub fn wedge_minor(indices: &[usize], vectors: &[DVector<f64>]) -> Result<f64> {
    if indices.len() != vectors.len() || indices.is_empty() {
        return Err(Error::BadIndices(format!("{} indices for {} vectors", indices.len(), vectors.len())));
    }
    let n = vectors[0].len();
    if vectors.iter().any(|v| v.len() != n) {
        return Err(Error::DimensionMismatch("vectors of different lengths".into()));
    }
    if indices[0] == 0 || indices.windows(2).any(|w| w[0] >= w[1]) || indices[indices.len() - 1] > n {
        return Err(Error::BadIndices(format!("{indices:?} must increase strictly within 1..={n}")));
    }
    let k = indices.len();
    Ok(DMatrix::from_fn(k, k, |r, c| vectors[c][indices[r] - 1]).determinant())
}

fn check_frame(f: &HomogenizedLagrangian, x: &[f64], frame: &[DVector<f64>], xi: &[f64]) -> Result<usize> {
    let n = f.n();
    if x.len() != n || xi.len() != n || frame.len() + 1 != n || frame.iter().any(|v| v.len() != n) {
        return Err(Error::DimensionMismatch(format!("surface element in R^{n} needs {} frame vectors of length {n}", n - 1)));
    }
    Ok(n)
}

/// `d sigma(xi_1..xi_{n-1}) = sum_i (-1)^(i-1) dF/dxi_i  (minor without row i)`.
pub fn surface_element(f: &HomogenizedLagrangian, x: &[f64], frame: &[DVector<f64>], xi: &[f64]) -> Result<f64> {
    let n = check_frame(f, x, frame, xi)?;
    let grad = f.gradient(x, xi)?;
    let mut sum = 0.0;
    for i in 0..n {
        let rows: Vec<usize> = (1..=n).filter(|&r| r != i + 1).collect();
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * grad[i] * wedge_minor(&rows, frame)?;
    }
    Ok(sum)
}

/// `det [grad F; xi_1; ...; xi_{n-1}]`.
pub fn bordered_determinant(f: &HomogenizedLagrangian, x: &[f64], frame: &[DVector<f64>], xi: &[f64]) -> Result<f64> {
    let n = check_frame(f, x, frame, xi)?;
    let grad = f.gradient(x, xi)?;
    let m = DMatrix::from_fn(n, n, |r, c| if r == 0 { grad[c] } else { frame[r - 1][c] });
    Ok(m.determinant())
}
