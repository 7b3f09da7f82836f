//! Damped Newton on the discrete Euler-Lagrange system.

use crate::error::{Error, Result};
use crate::lagrangian::LagrangianField;

use super::discrete::{action_and_gradient, assemble_hessian, element_action, elements, interior_index, nodal_areas, Element};
use super::grid::GridGraph;
use super::{SolveInfo, SolveOptions};

struct State<'a> {
    l: &'a LagrangianField,
    elems: Vec<Element>,
    areas: Vec<f64>,
    interior: Vec<usize>,
    map: Vec<usize>,
    m: usize,
}

struct Eval {
    action: f64,
    grad: Vec<f64>,
    /// `grad / nodal area` on interior unknowns.
    residual: Vec<f64>,
}

impl Eval {
    fn max_norm(&self) -> f64 {
        self.residual.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    fn l2(&self) -> f64 {
        self.residual.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl State<'_> {
    fn eval(&self, g: &GridGraph) -> Result<Eval> {
        let (action, full) = action_and_gradient(self.l, g, &self.elems)?;
        let m = self.m;
        let mut grad = Vec::with_capacity(self.interior.len() * m);
        let mut residual = Vec::with_capacity(self.interior.len() * m);
        for &k in &self.interior {
            for i in 0..m {
                grad.push(full[k * m + i]);
                residual.push(full[k * m + i] / self.areas[k]);
            }
        }
        if residual.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Euler-Lagrange residual".into()));
        }
        Ok(Eval { action, grad, residual })
    }

    fn stepped(&self, g: &GridGraph, dir: &[f64], alpha: f64) -> GridGraph {
        let mut out = g.clone();
        let m = self.m;
        for (r, &k) in self.interior.iter().enumerate() {
            for i in 0..m {
                out.values[k * m + i] += alpha * dir[r * m + i];
            }
        }
        out
    }

    /// Backtracking descent on the action along `-residual`.
    fn descend(&self, mut g: GridGraph, mut cur: Eval, steps: usize, history: &mut Vec<f64>) -> Result<(GridGraph, Eval)> {
        let mut alpha = self.areas.iter().cloned().fold(f64::INFINITY, f64::min);
        for _ in 0..steps {
            let dir: Vec<f64> = cur.residual.iter().map(|v| -v).collect();
            let slope: f64 = cur.grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
            if slope >= 0.0 {
                break;
            }
            let mut accepted = None;
            while alpha > 1e-300 {
                let trial = self.stepped(&g, &dir, alpha);
                if let Ok(a) = element_action(self.l, &trial, &self.elems) {
                    if a <= cur.action + 1e-4 * alpha * slope {
                        accepted = Some(trial);
                        break;
                    }
                }
                alpha *= 0.5;
            }
            let Some(next) = accepted else { break };
            g = next;
            cur = self.eval(&g)?;
            history.push(cur.action);
            alpha *= 2.0;
        }
        Ok((g, cur))
    }
}

pub(crate) fn newton(l: &LagrangianField, graph: GridGraph, opts: &SolveOptions) -> Result<GridGraph> {
    let elems = elements(&graph)?;
    let areas = nodal_areas(&graph, &elems);
    let (interior, map) = interior_index(&graph);
    let state = State { l, elems, areas, interior, map, m: graph.codim() };

    let mut g = graph;
    let mut cur = state.eval(&g)?;
    let mut history = vec![cur.action];
    let mut descent_steps = 0;
    let mut singular_streak = 0;
    let mut iterations = 0;
    loop {
        let res = cur.max_norm();
        if res < opts.tolerance * (1.0 + cur.action.abs()) {
            g.info = Some(SolveInfo {
                converged: true,
                iterations,
                residual: res,
                action: cur.action,
                action_history: history,
                descent_steps,
            });
            return Ok(g);
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NoConvergence { iterations, residual: res });
        }
        iterations += 1;

        let hess = assemble_hessian(l, &g, &state.elems, &state.map)?;
        let mut dir: Vec<f64> = cur.grad.iter().map(|v| -v).collect();
        let newton_ok = match hess.solve(&mut dir) {
            Ok(()) => {
                singular_streak = 0;
                true
            }
            Err(Error::SingularJacobian) => {
                singular_streak += 1;
                if singular_streak > 1 {
                    return Err(Error::SingularJacobian);
                }
                false
            }
            Err(e) => return Err(e),
        };

        let mut accepted = false;
        if newton_ok {
            let base = cur.l2();
            let mut alpha = 1.0;
            while alpha > 1e-10 {
                let trial = state.stepped(&g, &dir, alpha);
                if let Ok(e) = state.eval(&trial) {
                    if e.l2() <= (1.0 - 1e-4 * alpha) * base {
                        g = trial;
                        cur = e;
                        history.push(cur.action);
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
        }
        if !accepted {
            let before = history.len();
            let (ng, ne) = state.descend(g, cur, opts.descent_steps, &mut history)?;
            descent_steps += history.len() - before;
            g = ng;
            cur = ne;
        }
    }
}
