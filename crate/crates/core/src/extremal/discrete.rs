//! Piecewise-linear discretization of the action.
//!
//! `p = 2` cells are split along the `(i, j)-(i+1, j+1)` diagonal into two
//! triangles; `p = 1` uses segments. On each element the gradient of the
//! interpolant is constant and `L` is sampled at the centroid with `z` the
//! mean of the element's nodal values.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lagrangian::LagrangianField;

use super::banded::BandMatrix;
use super::grid::GridGraph;

#[derive(Debug, Clone)]
pub(crate) struct Element {
    pub nodes: [usize; 3],
    pub nv: usize,
    pub measure: f64,
    pub centroid: [f64; 2],
    /// Gradients of the nodal basis functions.
    pub dphi: [[f64; 2]; 3],
}

pub(crate) fn elements(g: &GridGraph) -> Result<Vec<Element>> {
    let res = g.resolution;
    let mut out = Vec::new();
    if g.p == 1 {
        for i in 0..res - 1 {
            let (xa, xb) = (g.position(i)[0], g.position(i + 1)[0]);
            let len = xb - xa;
            if !(len > 0.0) {
                return Err(Error::ChartExit);
            }
            out.push(Element {
                nodes: [i, i + 1, 0],
                nv: 2,
                measure: len,
                centroid: [0.5 * (xa + xb), 0.0],
                dphi: [[-1.0 / len, 0.0], [1.0 / len, 0.0], [0.0; 2]],
            });
        }
        return Ok(out);
    }
    for j in 0..res - 1 {
        for i in 0..res - 1 {
            let a = g.node(i, j);
            let b = g.node(i + 1, j);
            let c = g.node(i + 1, j + 1);
            let d = g.node(i, j + 1);
            out.push(triangle(g, [a, b, c])?);
            out.push(triangle(g, [a, c, d])?);
        }
    }
    Ok(out)
}

fn triangle(g: &GridGraph, nodes: [usize; 3]) -> Result<Element> {
    let pa = g.position(nodes[0]);
    let pb = g.position(nodes[1]);
    let pc = g.position(nodes[2]);
    let e1 = [pb[0] - pa[0], pb[1] - pa[1]];
    let e2 = [pc[0] - pa[0], pc[1] - pa[1]];
    let det = e1[0] * e2[1] - e1[1] * e2[0];
    if !(det > 0.0) {
        return Err(Error::ChartExit);
    }
    let gb = [e2[1] / det, -e2[0] / det];
    let gc = [-e1[1] / det, e1[0] / det];
    Ok(Element {
        nodes,
        nv: 3,
        measure: 0.5 * det,
        centroid: [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0],
        dphi: [[-gb[0] - gc[0], -gb[1] - gc[1]], gb, gc],
    })
}

/// Element-local `(x, z, q_row_major)`.
fn local_state(g: &GridGraph, e: &Element) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (p, m) = (g.p, g.codim());
    let x = e.centroid[..p].to_vec();
    let mut z = vec![0.0; m];
    let mut q = vec![0.0; m * p];
    for a in 0..e.nv {
        let f = g.value(e.nodes[a]);
        for i in 0..m {
            z[i] += f[i] / e.nv as f64;
            for j in 0..p {
                q[i * p + j] += f[i] * e.dphi[a][j];
            }
        }
    }
    (x, z, q)
}

pub(crate) fn check_dims(l: &LagrangianField, g: &GridGraph) -> Result<()> {
    if l.n() != g.n || l.p() != g.p {
        return Err(Error::DimensionMismatch(format!(
            "Lagrangian {} on Gr_{}(R^{}) used with a graph in R^{} over a {}-dimensional base",
            l.name(),
            l.p(),
            l.n(),
            g.n,
            g.p
        )));
    }
    Ok(())
}

/// Discrete action on the elements, summed in a fixed order.
pub(crate) fn element_action(l: &LagrangianField, g: &GridGraph, elems: &[Element]) -> Result<f64> {
    let parts: Vec<f64> = elems
        .par_iter()
        .map(|e| {
            let (x, z, q) = local_state(g, e);
            e.measure * l.value(&x, &z, &q)
        })
        .collect();
    let total: f64 = parts.iter().sum();
    if !total.is_finite() {
        return Err(Error::NonFinite("discrete action".into()));
    }
    Ok(total)
}

/// Action and its gradient with respect to every nodal value (node-major).
pub(crate) fn action_and_gradient(l: &LagrangianField, g: &GridGraph, elems: &[Element]) -> Result<(f64, Vec<f64>)> {
    let (p, m) = (g.p, g.codim());
    let locals: Vec<Result<(f64, Vec<f64>)>> = elems
        .par_iter()
        .map(|e| {
            let (x, z, q) = local_state(g, e);
            let (v, grad) = l.zq_gradient(&x, &z, &q)?;
            let mut out = vec![0.0; e.nv * m];
            for a in 0..e.nv {
                for i in 0..m {
                    let mut s = grad[i] / e.nv as f64;
                    for j in 0..p {
                        s += grad[m + i * p + j] * e.dphi[a][j];
                    }
                    out[a * m + i] = e.measure * s;
                }
            }
            Ok((e.measure * v, out))
        })
        .collect();
    let mut total = 0.0;
    let mut grad = vec![0.0; g.values.len()];
    for (e, local) in elems.iter().zip(locals) {
        let (v, out) = local?;
        total += v;
        for a in 0..e.nv {
            for i in 0..m {
                grad[e.nodes[a] * m + i] += out[a * m + i];
            }
        }
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("discrete action".into()));
    }
    Ok((total, grad))
}

/// Lumped nodal areas `sum_e |e| / nv_e`.
pub(crate) fn nodal_areas(g: &GridGraph, elems: &[Element]) -> Vec<f64> {
    let mut area = vec![0.0; g.node_count()];
    for e in elems {
        for a in 0..e.nv {
            area[e.nodes[a]] += e.measure / e.nv as f64;
        }
    }
    area
}

/// Maps interior nodes to consecutive indices (`usize::MAX` on the boundary).
pub(crate) fn interior_index(g: &GridGraph) -> (Vec<usize>, Vec<usize>) {
    let mut map = vec![usize::MAX; g.node_count()];
    let interior = g.interior_nodes();
    for (r, &k) in interior.iter().enumerate() {
        map[k] = r;
    }
    (interior, map)
}

/// Half-bandwidth of the interior system in the node-major, component-interleaved ordering.
pub(crate) fn half_bandwidth(g: &GridGraph) -> usize {
    let m = g.codim();
    let node_offset = if g.p == 1 { 1 } else { g.resolution - 2 + 1 };
    node_offset * m + m - 1
}

/// Hessian of the discrete action restricted to interior unknowns.
pub(crate) fn assemble_hessian(l: &LagrangianField, g: &GridGraph, elems: &[Element], map: &[usize]) -> Result<BandMatrix> {
    let (p, m) = (g.p, g.codim());
    let nunk = g.interior_nodes().len() * m;
    let bw = half_bandwidth(g);
    let locals: Vec<Result<Vec<f64>>> = elems
        .par_iter()
        .map(|e| {
            let (x, z, q) = local_state(g, e);
            let jet = l.zq_jet(&x, &z, &q)?;
            let nvar = m + m * p;
            let nd = e.nv * m;
            // J[(a, i)] touches z_i with weight 1/nv and q_ij with weight dphi_a[j]
            let touches = |a: usize, i: usize| -> Vec<(usize, f64)> {
                let mut t = vec![(i, 1.0 / e.nv as f64)];
                for j in 0..p {
                    t.push((m + i * p + j, e.dphi[a][j]));
                }
                t
            };
            let mut out = vec![0.0; nd * nd];
            for a in 0..e.nv {
                for i in 0..m {
                    let ta = touches(a, i);
                    for b in 0..e.nv {
                        for k in 0..m {
                            let tb = touches(b, k);
                            let mut s = 0.0;
                            for &(u, wu) in &ta {
                                for &(v, wv) in &tb {
                                    s += wu * jet.hess[u * nvar + v] * wv;
                                }
                            }
                            out[(a * m + i) * nd + b * m + k] = e.measure * s;
                        }
                    }
                }
            }
            Ok(out)
        })
        .collect();
    let mut h = BandMatrix::zeros(nunk, bw, bw);
    for (e, local) in elems.iter().zip(locals) {
        let out = local?;
        let nd = e.nv * m;
        for a in 0..e.nv {
            let ra = map[e.nodes[a]];
            if ra == usize::MAX {
                continue;
            }
            for b in 0..e.nv {
                let rb = map[e.nodes[b]];
                if rb == usize::MAX {
                    continue;
                }
                for i in 0..m {
                    for k in 0..m {
                        h.add(ra * m + i, rb * m + k, out[(a * m + i) * nd + b * m + k]);
                    }
                }
            }
        }
    }
    Ok(h)
}

/// Order-2 quadrature: node-centered differences in index space, mapped to
/// physical coordinates, with tensor trapezoid weights.
pub(crate) fn trapezoid_action(l: &LagrangianField, g: &GridGraph) -> Result<f64> {
    let (p, m, res) = (g.p, g.codim(), g.resolution);
    let diff = |data: &[f64], stride: usize, k: usize, c: usize, axis: usize| -> f64 {
        let (i, j) = g.indices(k);
        let idx = if axis == 0 { i } else { j };
        let step = if axis == 0 { 1 } else { res };
        let v = |node: usize| data[node * stride + c];
        if idx == 0 {
            (-3.0 * v(k) + 4.0 * v(k + step) - v(k + 2 * step)) / 2.0
        } else if idx == res - 1 {
            (3.0 * v(k) - 4.0 * v(k - step) + v(k - 2 * step)) / 2.0
        } else {
            (v(k + step) - v(k - step)) / 2.0
        }
    };
    let weight = |idx: usize| if idx == 0 || idx == res - 1 { 0.5 } else { 1.0 };
    let mut total = 0.0;
    for k in 0..g.node_count() {
        let (i, j) = g.indices(k);
        // jx[a][b] = d x_a / d s_b
        let mut jx = [[0.0; 2]; 2];
        for a in 0..p {
            for b in 0..p {
                jx[a][b] = diff(&g.positions, p, k, a, b);
            }
        }
        let (det, inv) = if p == 1 {
            (jx[0][0], [[1.0 / jx[0][0], 0.0], [0.0; 2]])
        } else {
            let det = jx[0][0] * jx[1][1] - jx[0][1] * jx[1][0];
            (det, [[jx[1][1] / det, -jx[0][1] / det], [-jx[1][0] / det, jx[0][0] / det]])
        };
        if !(det > 0.0) {
            return Err(Error::ChartExit);
        }
        let mut q = vec![0.0; m * p];
        for c in 0..m {
            let ds: Vec<f64> = (0..p).map(|b| diff(&g.values, m, k, c, b)).collect();
            for a in 0..p {
                q[c * p + a] = (0..p).map(|b| ds[b] * inv[b][a]).sum();
            }
        }
        let w = if p == 1 { weight(i) } else { weight(i) * weight(j) };
        total += w * det * l.value(g.position(k), g.value(k), &q);
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("discrete action".into()));
    }
    Ok(total)
}
