use cartan_core::{
    action, el_residual, solve_dirichlet, BoundaryData, BoxDomain, GridGraph, LagrangianField,
};

const RESOLUTIONS: [usize; 3] = [17, 33, 65];

fn scherk(x: &[f64]) -> Vec<f64> {
    vec![(x[0].cos() / x[1].cos()).ln()]
}

fn half_square() -> BoxDomain {
    BoxDomain::cube(2, -0.5, 0.5).unwrap()
}

/// Observed orders `log2(e_h / e_{h/2})` for consecutive halvings.
fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn max_interior_error(g: &GridGraph, exact: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    g.interior_nodes()
        .into_iter()
        .map(|k| (g.value(k)[0] - exact(g.position(k))[0]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn harmonic_interpolant_residual_is_at_roundoff() {
    let l = LagrangianField::dirichlet(3, 2).unwrap();
    for res in RESOLUTIONS {
        let g = GridGraph::from_fn(3, 2, BoxDomain::unit(2), res, |x| vec![x[0] * x[0] - x[1] * x[1]]).unwrap();
        let r = el_residual(&l, &g).unwrap();
        // The five-point structure of P1 on this mesh differentiates quadratics exactly.
        assert!(r.max_norm < 1e-9, "res {res}: {:e}", r.max_norm);
    }
}

#[test]
fn harmonic_non_polynomial_residual_decays_quadratically() {
    let l = LagrangianField::dirichlet(3, 2).unwrap();
    let errs: Vec<f64> = RESOLUTIONS
        .iter()
        .map(|&res| {
            let g = GridGraph::from_fn(3, 2, BoxDomain::unit(2), res, |x| vec![x[0].exp() * x[1].sin()]).unwrap();
            el_residual(&l, &g).unwrap().max_norm
        })
        .collect();
    for o in orders(&errs) {
        assert!(o >= 1.8, "orders {:?} from {errs:?}", orders(&errs));
    }
}

#[test]
fn scherk_interpolant_residual_decays_quadratically() {
    let area = LagrangianField::area_hypersurface(3).unwrap();
    let errs: Vec<f64> = RESOLUTIONS
        .iter()
        .map(|&res| {
            let g = GridGraph::from_fn(3, 2, half_square(), res, scherk).unwrap();
            el_residual(&area, &g).unwrap().max_norm
        })
        .collect();
    for o in orders(&errs) {
        assert!(o >= 1.8, "orders {:?} from {errs:?}", orders(&errs));
    }
}

#[test]
fn dirichlet_solver_recovers_harmonic_polynomial() {
    let l = LagrangianField::dirichlet(3, 2).unwrap();
    let bd = BoundaryData::parse("x^2 - y^2", 2, 1).unwrap();
    for res in [9, 17] {
        let g = solve_dirichlet(&l, &bd, &BoxDomain::unit(2), res, None).unwrap();
        let err = max_interior_error(&g, |x| vec![x[0] * x[0] - x[1] * x[1]]);
        assert!(err < 1e-10, "res {res}: {err:e}");
    }
}

#[test]
fn scherk_solution_error_decays_quadratically() {
    let area = LagrangianField::area_hypersurface(3).unwrap();
    let bd = BoundaryData::parse("ln(cos(x) / cos(y))", 2, 1).unwrap();
    let mut errs = Vec::new();
    for res in RESOLUTIONS {
        let g = solve_dirichlet(&area, &bd, &half_square(), res, None).unwrap();
        let info = g.info().unwrap();
        assert!(info.converged);
        let a = action(&area, &g).unwrap().value;
        assert!(el_residual(&area, &g).unwrap().max_norm < 1e-10 * (1.0 + a.abs()));
        errs.push(max_interior_error(&g, scherk));
    }
    for o in orders(&errs) {
        assert!(o >= 1.8, "orders {:?} from {errs:?}", orders(&errs));
    }
}

#[test]
fn dirichlet_action_never_increases_after_first_step() {
    let l = LagrangianField::dirichlet(4, 2).unwrap();
    let bd = BoundaryData::parse("sin(3*x) * y; x * y^2", 2, 2).unwrap();
    let g = solve_dirichlet(&l, &bd, &BoxDomain::unit(2), 17, None).unwrap();
    let history = &g.info().unwrap().action_history;
    assert!(history.len() >= 2);
    for w in history[1..].windows(2) {
        assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "{history:?}");
    }
}

#[test]
fn flat_boundary_gives_the_plane() {
    let area = LagrangianField::area_hypersurface(3).unwrap();
    let g = solve_dirichlet(&area, &BoundaryData::parse("0", 2, 1).unwrap(), &BoxDomain::unit(2), 9, None).unwrap();
    assert!(g.values().iter().all(|v| v.abs() < 1e-14));
    assert!((action(&area, &g).unwrap().value - 1.0).abs() < 1e-14);
}
