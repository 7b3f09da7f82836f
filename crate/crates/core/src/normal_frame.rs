//! The variational normal frame `v^1..v^{n-p}` of a Lagrangian at a plane
//! element, the hypersurface normal from a homogenized Lagrangian, and the
//! unit-normal quantities built on a metric.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram_volume::MetricTensor;
use crate::grassmann::GrassmannElement;
use crate::lagrangian::{HomogenizedLagrangian, LagrangianField};

/// How the lower `(n-p) x (n-p)` block of the frame is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameConvention {
    /// Diagonal block `-L + sum_j q^k_j dL/dq^k_j`, zero off the diagonal.
    #[default]
    Stated,
    /// Full block `-L delta_ik + sum_j q^i_j dL/dq^k_j`. Coincides with
    /// `Stated` in codimension one.
    CrossCoupled,
}

/// Frame vectors `v^1..v^{n-p}` at a plane element.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFrame {
    pub vectors: Vec<DVector<f64>>,
    pub at: GrassmannElement,
    pub lagrangian_name: String,
    pub convention: FrameConvention,
    /// Set when the lower block is (numerically) singular; the vectors are
    /// still returned.
    pub degenerate: bool,
}

impl NormalFrame {
    /// The vectors rescaled to unit Euclidean length.
    pub fn normalized(&self) -> Vec<DVector<f64>> {
        self.vectors
            .iter()
            .map(|v| {
                let norm = v.norm();
                if norm > 0.0 {
                    v / norm
                } else {
                    v.clone()
                }
            })
            .collect()
    }

    /// `sum_k lambda_k v^k`.
    pub fn combine(&self, lambda: &[f64]) -> Result<DVector<f64>> {
        if lambda.len() != self.vectors.len() {
            return Err(Error::DimensionMismatch(format!("{} coefficients for {} frame vectors", lambda.len(), self.vectors.len())));
        }
        let mut x = DVector::zeros(self.at.n());
        for (l, v) in lambda.iter().zip(&self.vectors) {
            x += v * *l;
        }
        Ok(x)
    }

    /// Frame vectors as the rows of an `(n-p) x n` matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.at.n();
        DMatrix::from_fn(self.vectors.len(), n, |r, c| self.vectors[r][c])
    }
}

/// The frame with the diagonal lower block.
pub fn cartan_frame(l: &LagrangianField, elem: &GrassmannElement) -> Result<NormalFrame> {
    frame_with_convention(l, elem, FrameConvention::Stated)
}

pub fn frame_with_convention(l: &LagrangianField, elem: &GrassmannElement, convention: FrameConvention) -> Result<NormalFrame> {
    let (value, grad) = l.value_and_grad_q_at(elem)?;
    Ok(assemble(l.name(), elem, value, &grad, convention))
}

pub(crate) fn assemble(name: &str, elem: &GrassmannElement, value: f64, grad: &DMatrix<f64>, convention: FrameConvention) -> NormalFrame {
    let (n, p, m) = (elem.n(), elem.p(), elem.codim());
    let q = elem.slopes();
    let mut lower = DMatrix::zeros(m, m);
    for k in 0..m {
        for i in 0..m {
            if convention == FrameConvention::Stated && i != k {
                continue;
            }
            let mut s = if i == k { -value } else { 0.0 };
            for j in 0..p {
                s += q[(i, j)] * grad[(k, j)];
            }
            lower[(i, k)] = s;
        }
    }
    let vectors = (0..m)
        .map(|k| {
            DVector::from_fn(n, |r, _| if r < p { grad[(k, r)] } else { lower[(r - p, k)] })
        })
        .collect();
    let tol = 1e-12 * value.abs();
    let degenerate = match convention {
        FrameConvention::Stated => (0..m).any(|k| lower[(k, k)].abs() < tol),
        FrameConvention::CrossCoupled => lower.singular_values().min() < tol,
    };
    NormalFrame { vectors, at: elem.clone(), lagrangian_name: name.to_string(), convention, degenerate }
}

/// `sum_i dL/dq^i_j df^i/dt + L X^j` with `df^i/dt = X^{p+i} - sum_j q^i_j X^j`,
/// for an arbitrary vector `X`. Returns the residual and the magnitude of the
/// largest term it cancels.
pub fn vector_identity_residual(l: &LagrangianField, elem: &GrassmannElement, x_vec: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let (value, grad) = l.value_and_grad_q_at(elem)?;
    identity_terms(elem, value, &grad, x_vec)
}

pub(crate) fn identity_terms(elem: &GrassmannElement, value: f64, grad: &DMatrix<f64>, x_vec: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let (n, p, m) = (elem.n(), elem.p(), elem.codim());
    if x_vec.len() != n {
        return Err(Error::DimensionMismatch(format!("X must lie in R^{n}")));
    }
    let q = elem.slopes();
    let dfdt: Vec<f64> = (0..m).map(|i| x_vec[p + i] - (0..p).map(|j| q[(i, j)] * x_vec[j]).sum::<f64>()).collect();
    let mut residual = DVector::zeros(p);
    let mut scale = 0.0f64;
    for j in 0..p {
        let mut s = value * x_vec[j];
        let mut mag = (value * x_vec[j]).abs();
        for i in 0..m {
            s += grad[(i, j)] * dfdt[i];
            mag += (grad[(i, j)] * dfdt[i]).abs();
        }
        residual[j] = s;
        scale = scale.max(mag);
    }
    Ok((residual, scale))
}

/// The identity evaluated at `X = sum_k lambda_k v^k` of [`cartan_frame`].
pub fn boundary_identity_residual(l: &LagrangianField, elem: &GrassmannElement, lambda: &[f64]) -> Result<DVector<f64>> {
    boundary_identity_residual_with(l, elem, lambda, FrameConvention::Stated)
}

pub fn boundary_identity_residual_with(
    l: &LagrangianField,
    elem: &GrassmannElement,
    lambda: &[f64],
    convention: FrameConvention,
) -> Result<DVector<f64>> {
    let (value, grad) = l.value_and_grad_q_at(elem)?;
    let frame = assemble(l.name(), elem, value, &grad, convention);
    let x = frame.combine(lambda)?;
    Ok(identity_terms(elem, value, &grad, &x)?.0)
}

fn check_xi(f: &HomogenizedLagrangian, x: &[f64], xi: &[f64]) -> Result<()> {
    let n = f.n();
    if x.len() != n || xi.len() != n {
        return Err(Error::DimensionMismatch(format!("x and xi must lie in R^{n}")));
    }
    if xi[n - 1] == 0.0 {
        return Err(Error::Domain("xi_n = 0 is outside the hyperplane chart".into()));
    }
    Ok(())
}

/// `(dF/dxi_1, ..., dF/dxi_n)`.
pub fn normal_from_homogenized(f: &HomogenizedLagrangian, x: &[f64], xi: &[f64]) -> Result<DVector<f64>> {
    check_xi(f, x, xi)?;
    f.gradient(x, xi)
}

/// `sqrt(g) xi / F(x, xi)`.
pub fn unit_normal_dual(f: &HomogenizedLagrangian, x: &[f64], xi: &[f64], metric_det: f64) -> Result<DVector<f64>> {
    if !(metric_det > 0.0) {
        return Err(Error::Domain(format!("metric determinant {metric_det} must be positive")));
    }
    let value = f.value(x, xi)?;
    if !(value > 0.0) {
        return Err(Error::Domain(format!("F(x, xi) = {value} must be positive")));
    }
    Ok(DVector::from_column_slice(xi) * (metric_det.sqrt() / value))
}

/// `(1/sqrt(g)) dF/dxi`, the normal in the primal basis.
pub fn unit_normal_primal(f: &HomogenizedLagrangian, x: &[f64], xi: &[f64], metric_det: f64) -> Result<DVector<f64>> {
    if !(metric_det > 0.0) {
        return Err(Error::Domain(format!("metric determinant {metric_det} must be positive")));
    }
    Ok(f.gradient(x, xi)? / metric_det.sqrt())
}

/// Length of the normal, `sqrt(det g)`.
pub fn normal_length(f: &HomogenizedLagrangian, x: &[f64], xi: &[f64], metric: &MetricTensor) -> Result<f64> {
    if metric.dim() != f.n() {
        return Err(Error::DimensionMismatch(format!("metric on R^{} for F on R^{}", metric.dim(), f.n())));
    }
    check_xi(f, x, xi)?;
    if !metric.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(metric.det().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gram_volume::{bordered_determinant, surface_element};
    use crate::lagrangian::homogenize;
    use proptest::prelude::*;

    fn elem(n: usize, p: usize, q: &[f64]) -> GrassmannElement {
        GrassmannElement::from_rows(n, p, &vec![0.0; n], q).unwrap()
    }

    fn assert_close(a: &DVector<f64>, b: &[f64], tol: f64) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a} vs {b:?}");
        }
    }

    #[test]
    fn frame_examples() {
        let area = LagrangianField::area_hypersurface(3).unwrap();
        let f = cartan_frame(&area, &elem(3, 2, &[0.0, 0.0])).unwrap();
        assert_close(&f.vectors[0], &[0.0, 0.0, -1.0], 0.0);
        let f = cartan_frame(&area, &elem(3, 2, &[1.0, 0.0])).unwrap();
        let h = 0.5f64.sqrt();
        assert_close(&f.vectors[0], &[h, 0.0, -h], 1e-15);

        let four = LagrangianField::area_paper_4d();
        let f = cartan_frame(&four, &elem(4, 2, &[1.0, 0.0, 0.0, 0.0])).unwrap();
        assert_close(&f.vectors[0], &[1.0, 0.0, 0.0, 0.0], 1e-15);
        assert_close(&f.vectors[1], &[0.0, 0.0, 0.0, -1.0], 1e-15);
        // the first diagonal entry is -|second row of q|^2 / L = 0
        assert!(f.degenerate);

        let d = LagrangianField::dirichlet(3, 2).unwrap();
        let f = cartan_frame(&d, &elem(3, 2, &[2.0, 0.0])).unwrap();
        assert_close(&f.vectors[0], &[2.0, 0.0, 2.0], 0.0);
    }

    #[test]
    fn degenerate_frames_are_flagged() {
        let d = LagrangianField::dirichlet(4, 2).unwrap();
        let f = cartan_frame(&d, &elem(4, 2, &[0.0; 4])).unwrap();
        assert!(f.vectors.iter().all(|v| v.iter().all(|&c| c == 0.0)));
        // -L + q.dL/dq vanishes for a Lagrangian homogeneous of degree one in q
        let hom = LagrangianField::from_expr(3, 2, "sqrt(q1_1^2 + q1_2^2)").unwrap();
        let f = cartan_frame(&hom, &elem(3, 2, &[0.6, 0.8])).unwrap();
        assert!(f.degenerate);
    }

    #[test]
    fn identity_vanishes_in_codimension_one() {
        let l = LagrangianField::area_hypersurface(3).unwrap();
        let r = boundary_identity_residual(&l, &elem(3, 2, &[0.4, -2.0]), &[1.7]).unwrap();
        assert!(r.amax() < 1e-14);
        let r = boundary_identity_residual(&l, &elem(3, 2, &[0.4, -2.0]), &[0.0]).unwrap();
        assert_eq!(r.amax(), 0.0);
    }

    #[test]
    fn stated_frame_leaves_cross_terms_in_higher_codimension() {
        // For dirichlet(4,2) the Euclidean-orthogonality of the two frames decides
        // which one annihilates the boundary identity.
        let l = LagrangianField::dirichlet(4, 2).unwrap();
        let e = elem(4, 2, &[0.7, -0.2, 1.1, 0.4]);
        let stated = boundary_identity_residual(&l, &e, &[1.0, 0.0]).unwrap();
        let coupled = boundary_identity_residual_with(&l, &e, &[1.0, 0.0], FrameConvention::CrossCoupled).unwrap();
        assert!(stated.amax() > 1e-2, "{stated}");
        assert!(coupled.amax() < 1e-14, "{coupled}");
    }

    #[test]
    fn cross_coupled_frame_is_euclidean_normal_for_graph_area() {
        let l = LagrangianField::area_graph_gram(4, 2).unwrap();
        let e = elem(4, 2, &[0.7, -0.2, 1.1, 0.4]);
        let f = frame_with_convention(&l, &e, FrameConvention::CrossCoupled).unwrap();
        for v in &f.vectors {
            for t in e.graph_tangent_basis() {
                assert!(v.dot(&t).abs() < 1e-14);
            }
        }
        let stated = cartan_frame(&l, &e).unwrap();
        let worst = stated.vectors.iter().flat_map(|v| e.graph_tangent_basis().into_iter().map(move |t| v.dot(&t).abs())).fold(0.0, f64::max);
        assert!(worst > 1e-2);
    }

    #[test]
    fn homogenized_normal_examples() {
        let f = HomogenizedLagrangian::euclidean(3);
        let x = [0.0; 3];
        assert_close(&normal_from_homogenized(&f, &x, &[0.0, 0.0, 2.0]).unwrap(), &[0.0, 0.0, 1.0], 1e-15);
        let h = 0.5f64.sqrt();
        assert_close(&normal_from_homogenized(&f, &x, &[1.0, 0.0, 1.0]).unwrap(), &[h, 0.0, h], 1e-15);
        assert!(matches!(normal_from_homogenized(&f, &x, &[1.0, 0.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn unit_normal_examples() {
        let f = HomogenizedLagrangian::euclidean(3);
        let x = [0.0; 3];
        assert_close(&unit_normal_dual(&f, &x, &[0.0, 3.0, 4.0], 1.0).unwrap(), &[0.0, 0.6, 0.8], 1e-15);
        assert_close(&unit_normal_dual(&f, &x, &[1.0, 0.0, 0.0], 4.0).unwrap(), &[2.0, 0.0, 0.0], 0.0);
        let lin = HomogenizedLagrangian::from_expr(3, "xi1").unwrap();
        assert!(matches!(unit_normal_dual(&lin, &x, &[-1.0, 0.0, 1.0], 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn normal_length_examples() {
        let f = HomogenizedLagrangian::euclidean(2);
        let x = [0.0; 2];
        assert_eq!(normal_length(&f, &x, &[0.3, 1.0], &MetricTensor::euclidean(2)).unwrap(), 1.0);
        assert_eq!(normal_length(&f, &x, &[0.3, 1.0], &MetricTensor::diagonal(&[4.0, 9.0]).unwrap()).unwrap(), 6.0);
        let bad = MetricTensor::diagonal(&[1.0, -2.0]).unwrap();
        assert_eq!(normal_length(&f, &x, &[0.3, 1.0], &bad), Err(Error::NotPositiveDefinite));
    }

    proptest! {
        #[test]
        fn example_one_direction(p in -5.0f64..5.0, q in -5.0f64..5.0) {
            let l = LagrangianField::area_hypersurface(3).unwrap();
            let v = &cartan_frame(&l, &elem(3, 2, &[p, q])).unwrap().vectors[0];
            let w = DVector::from_column_slice(&[p, q, -1.0]);
            prop_assert!(v.cross(&w).norm() < 1e-12 * v.norm() * w.norm());
        }

        #[test]
        fn scale_covariance(qs in proptest::collection::vec(-2.0f64..2.0, 4), c in 0.1f64..10.0) {
            let l = LagrangianField::area_graph_gram(4, 2).unwrap();
            let e = elem(4, 2, &qs);
            let a = cartan_frame(&l, &e).unwrap();
            let b = cartan_frame(&l.scaled(c), &e).unwrap();
            for (u, v) in a.vectors.iter().zip(&b.vectors) {
                prop_assert!((u * c - v).amax() <= 1e-12 * c * (1.0 + u.amax()));
            }
        }

        #[test]
        fn homogenized_normal_matches_frame(p in -3.0f64..3.0, q in -3.0f64..3.0) {
            let l = LagrangianField::area_hypersurface(3).unwrap();
            let frame = &cartan_frame(&l, &elem(3, 2, &[p, q])).unwrap().vectors[0];
            let f = homogenize(&l).unwrap();
            let xi = [-p, -q, 1.0];
            let grad = normal_from_homogenized(&f, &[0.0; 3], &xi).unwrap();
            prop_assert!((grad + frame).amax() < 1e-14);
        }

        #[test]
        fn dual_pairing_and_bordered_determinant(
            xi in proptest::collection::vec(-2.0f64..2.0, 3),
            frame in proptest::collection::vec(-2.0f64..2.0, 6),
            g in 0.2f64..5.0,
        ) {
            let mut xi = xi;
            if xi[2].abs() < 0.1 { xi[2] = 0.5; }
            let f = HomogenizedLagrangian::euclidean(3);
            let x = [0.0; 3];
            let dual = unit_normal_dual(&f, &x, &xi, g).unwrap();
            let primal = unit_normal_primal(&f, &x, &xi, g).unwrap();
            prop_assert!((dual.dot(&primal) - 1.0).abs() < 1e-12);
            let frame = [DVector::from_column_slice(&frame[..3]), DVector::from_column_slice(&frame[3..])];
            let a = surface_element(&f, &x, &frame, &xi).unwrap();
            let b = bordered_determinant(&f, &x, &frame, &xi).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
    }
}
