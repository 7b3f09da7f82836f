//! Deterministic fixtures shared by the kernel benchmarks.

use cartan_core::{BoundaryData, BoxDomain, GrassmannElement, GridGraph, LagrangianField};
use nalgebra::DVector;

/// `ln(cos x / cos y)` on `[-1/2, 1/2]^2`, a minimal graph with curvature everywhere.
pub fn scherk(x: &[f64]) -> Vec<f64> {
    vec![(x[0].cos() / x[1].cos()).ln()]
}

pub fn scherk_boundary() -> BoundaryData {
    BoundaryData::from_fn(1, scherk)
}

pub fn half_square() -> BoxDomain {
    BoxDomain::cube(2, -0.5, 0.5).expect("valid box")
}

/// Scherk values sampled on the grid, without solving.
pub fn scherk_interpolant(resolution: usize) -> GridGraph {
    GridGraph::from_fn(3, 2, half_square(), resolution, scherk).expect("valid grid")
}

/// Quasi-random slope matrices in `[-2, 2]` from a Weyl sequence.
pub fn slope_samples(l: &LagrangianField, count: usize) -> Vec<GrassmannElement> {
    let (n, p) = (l.n(), l.p());
    let len = (n - p) * p;
    let alpha = 0.5 * (5f64.sqrt() - 1.0);
    (0..count)
        .map(|s| {
            let slopes: Vec<f64> =
                (0..len).map(|k| 4.0 * ((1 + s * len + k) as f64 * alpha).fract() - 2.0).collect();
            GrassmannElement::from_rows(n, p, &vec![0.0; n], &slopes).expect("finite slopes")
        })
        .collect()
}

/// `k` vectors in `R^n` with entries from a Weyl sequence.
pub fn vector_set(n: usize, k: usize) -> Vec<DVector<f64>> {
    let alpha = 2f64.sqrt() - 1.0;
    (0..k).map(|i| DVector::from_fn(n, |j, _| 2.0 * ((1 + i * n + j) as f64 * alpha).fract() - 1.0)).collect()
}
