//! Discrete action, Euler-Lagrange residuals and the Dirichlet solver.

mod banded;
mod discrete;
mod grid;
mod solver;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lagrangian::LagrangianField;

pub(crate) use discrete::{elements, nodal_areas};
pub use grid::{BoundaryData, BoxDomain, GridGraph, GridRecord, GRID_FORMAT};

/// Value of the discrete action and the quadrature that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionValue {
    pub value: f64,
    /// 1: element midpoint rule; 2: node-centered differences with tensor trapezoid weights.
    pub quadrature_order: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Converged when `max |residual| < tolerance * (1 + |A|)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Gradient steps taken when the Newton step fails.
    pub descent_steps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tolerance: 1e-10, max_iterations: 200, descent_steps: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveInfo {
    pub converged: bool,
    pub iterations: usize,
    /// Max-norm of the Euler-Lagrange residual at exit.
    pub residual: f64,
    pub action: f64,
    /// Action after every accepted step, starting with the initial guess.
    pub action_history: Vec<f64>,
    pub descent_steps: usize,
}

/// Euler-Lagrange residual `dL/dz - div(dL/dq)` at the interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ElResidual {
    pub nodes: Vec<usize>,
    /// `n - p` components per entry of `nodes`.
    pub values: Vec<f64>,
    pub max_norm: f64,
}

/// Discrete action with the element midpoint rule.
pub fn action(l: &LagrangianField, graph: &GridGraph) -> Result<ActionValue> {
    action_with_order(l, graph, 1)
}

pub fn action_with_order(l: &LagrangianField, graph: &GridGraph, order: u8) -> Result<ActionValue> {
    discrete::check_dims(l, graph)?;
    let value = match order {
        1 => discrete::element_action(l, graph, &elements(graph)?)?,
        2 => discrete::trapezoid_action(l, graph)?,
        _ => return Err(Error::Invalid(format!("quadrature order {order} (expected 1 or 2)"))),
    };
    Ok(ActionValue { value, quadrature_order: order })
}

/// Gradient of the discrete action divided by the lumped nodal area.
pub fn el_residual(l: &LagrangianField, graph: &GridGraph) -> Result<ElResidual> {
    discrete::check_dims(l, graph)?;
    let elems = elements(graph)?;
    let (_, grad) = discrete::action_and_gradient(l, graph, &elems)?;
    let areas = nodal_areas(graph, &elems);
    let m = graph.codim();
    let nodes = graph.interior_nodes();
    let mut values = Vec::with_capacity(nodes.len() * m);
    // EL expression is dL/dz - div(dL/dq); the action gradient is its weak form
    for &k in &nodes {
        for i in 0..m {
            values.push(grad[k * m + i] / areas[k]);
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Euler-Lagrange residual".into()));
    }
    let max_norm = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(ElResidual { nodes, values, max_norm })
}

/// Solves the Dirichlet problem on `domain` with `resolution` nodes per axis.
///
/// `init` supplies a starting guess (its boundary is overwritten by the data);
/// by default the boundary data is interpolated transfinitely into the interior.
pub fn solve_dirichlet(
    l: &LagrangianField,
    boundary: &BoundaryData,
    domain: &BoxDomain,
    resolution: usize,
    init: Option<&GridGraph>,
) -> Result<GridGraph> {
    solve_dirichlet_with(l, boundary, domain, resolution, init, &SolveOptions::default())
}

pub fn solve_dirichlet_with(
    l: &LagrangianField,
    boundary: &BoundaryData,
    domain: &BoxDomain,
    resolution: usize,
    init: Option<&GridGraph>,
    opts: &SolveOptions,
) -> Result<GridGraph> {
    let mut g = GridGraph::new(l.n(), l.p(), domain.clone(), resolution)?;
    g.set_boundary(boundary)?;
    match init {
        Some(start) => {
            if start.values.len() != g.values.len() {
                return Err(Error::DimensionMismatch("initial guess has a different grid".into()));
            }
            for k in g.interior_nodes() {
                g.set_value(k, start.value(k));
            }
        }
        None => g.fill_interior_from_boundary(),
    }
    solve_graph(l, g, opts)
}

/// Solves with the boundary nodes of `graph` pinned, starting from its interior values.
pub fn solve_graph(l: &LagrangianField, graph: GridGraph, opts: &SolveOptions) -> Result<GridGraph> {
    discrete::check_dims(l, &graph)?;
    solver::newton(l, graph, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scherk(x: &[f64]) -> Vec<f64> {
        vec![(x[0].cos() / x[1].cos()).ln()]
    }

    fn square() -> BoxDomain {
        BoxDomain::cube(2, -0.5, 0.5).unwrap()
    }

    #[test]
    fn action_examples() {
        let one = LagrangianField::from_expr(3, 2, "1").unwrap();
        let flat = GridGraph::new(3, 2, BoxDomain::unit(2), 9).unwrap();
        assert!((action(&one, &flat).unwrap().value - 1.0).abs() < 1e-14);
        assert!((action_with_order(&one, &flat, 2).unwrap().value - 1.0).abs() < 1e-14);

        let dirichlet = LagrangianField::dirichlet(3, 2).unwrap();
        let g = GridGraph::from_fn(3, 2, BoxDomain::unit(2), 9, |x| vec![x[0]]).unwrap();
        assert!((action(&dirichlet, &g).unwrap().value - 0.5).abs() < 1e-12);
        assert!((action_with_order(&dirichlet, &g, 2).unwrap().value - 0.5).abs() < 1e-12);

        let area = LagrangianField::area_hypersurface(3).unwrap();
        assert!((action(&area, &flat).unwrap().value - 1.0).abs() < 1e-14);
        assert!(action_with_order(&area, &flat, 3).is_err());
    }

    #[test]
    fn quadrature_converges_at_second_order() {
        let area = LagrangianField::area_hypersurface(3).unwrap();
        for order in [1, 2] {
            let a: Vec<f64> = [17, 33, 65]
                .iter()
                .map(|&r| action_with_order(&area, &GridGraph::from_fn(3, 2, square(), r, scherk).unwrap(), order).unwrap().value)
                .collect();
            let ratio = (a[0] - a[1]).abs() / (a[1] - a[2]).abs();
            assert!(ratio > 3.5, "order {order}: ratio {ratio}");
        }
    }

    #[test]
    fn affine_graphs_have_zero_residual() {
        let area = LagrangianField::area_graph_gram(4, 2).unwrap();
        let g = GridGraph::from_fn(4, 2, BoxDomain::unit(2), 7, |x| vec![0.3 * x[0] - x[1] + 2.0, 1.5 * x[1]]).unwrap();
        assert!(el_residual(&area, &g).unwrap().max_norm < 1e-12);
    }

    #[test]
    fn flat_boundary_gives_flat_solution() {
        let area = LagrangianField::area_hypersurface(3).unwrap();
        let g = solve_dirichlet(&area, &BoundaryData::zero(1), &BoxDomain::unit(2), 9, None).unwrap();
        assert!(g.values().iter().all(|v| v.abs() < 1e-14));
        assert_eq!(g.info().unwrap().iterations, 0);
    }

    #[test]
    fn harmonic_solution_is_reproduced() {
        let d = LagrangianField::dirichlet(3, 2).unwrap();
        let b = BoundaryData::parse("x^2 - y^2", 2, 1).unwrap();
        let g = solve_dirichlet(&d, &b, &BoxDomain::unit(2), 17, None).unwrap();
        let info = g.info().unwrap();
        assert!(info.converged);
        for w in info.action_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-14);
        }
        for k in g.interior_nodes() {
            let x = g.position(k);
            assert!((g.value(k)[0] - (x[0] * x[0] - x[1] * x[1])).abs() < 1e-10);
        }
    }

    #[test]
    fn scherk_solution_converges() {
        let area = LagrangianField::area_hypersurface(3).unwrap();
        let b = BoundaryData::from_fn(1, scherk);
        let errors: Vec<f64> = [9, 17]
            .iter()
            .map(|&r| {
                let g = solve_dirichlet(&area, &b, &square(), r, None).unwrap();
                assert!(el_residual(&area, &g).unwrap().max_norm < 1e-10 * (1.0 + g.info().unwrap().action));
                g.interior_nodes().iter().map(|&k| (g.value(k)[0] - scherk(g.position(k))[0]).abs()).fold(0.0, f64::max)
            })
            .collect();
        assert!(errors[0] / errors[1] > 3.5, "{errors:?}");
    }

    #[test]
    fn one_dimensional_base() {
        // geodesics of the Euclidean plane are straight lines
        let arc = LagrangianField::area_hypersurface(2).unwrap();
        let b = BoundaryData::parse("2*x + 1", 1, 1).unwrap();
        let g = solve_dirichlet(&arc, &b, &BoxDomain::unit(1), 11, Some(&GridGraph::from_fn(2, 1, BoxDomain::unit(1), 11, |x| vec![x[0] * x[0]]).unwrap())).unwrap();
        for k in 0..g.node_count() {
            assert!((g.value(k)[0] - (2.0 * g.position(k)[0] + 1.0)).abs() < 1e-10);
        }
        assert!((action(&arc, &g).unwrap().value - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn higher_codimension_solve() {
        let area = LagrangianField::area_graph_gram(4, 2).unwrap();
        // a complex-analytic graph z = w^2 is area minimizing
        let b = BoundaryData::parse("x^2 - y^2; 2*x*y", 2, 2).unwrap();
        let g = solve_dirichlet(&area, &b, &BoxDomain::cube(2, -0.5, 0.5).unwrap(), 17, None).unwrap();
        let err = g
            .interior_nodes()
            .iter()
            .map(|&k| {
                let x = g.position(k);
                (g.value(k)[0] - (x[0] * x[0] - x[1] * x[1])).abs().max((g.value(k)[1] - 2.0 * x[0] * x[1]).abs())
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn iteration_limit_is_reported() {
        let area = LagrangianField::area_hypersurface(3).unwrap();
        let b = BoundaryData::from_fn(1, scherk);
        let opts = SolveOptions { max_iterations: 1, ..SolveOptions::default() };
        let err = solve_dirichlet_with(&area, &b, &square(), 9, None, &opts).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 1, .. }), "{err:?}");
    }
}
