//! First variation of the extremal action under boundary deformations.
//!
//! [`first_variation_fd`] moves the boundary of an extremal graph along a
//! vector field, re-solves the Dirichlet problem and differentiates the
//! action in `t`. [`first_variation_boundary`] evaluates the boundary
//! integral that the interior Euler-Lagrange equations reduce `dA/dt` to.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, VarLayout};
use crate::extremal::{
    action, el_residual, solve_dirichlet_with, solve_graph, BoundaryData, BoxDomain, GridGraph, SolveOptions,
};
use crate::grassmann::GrassmannElement;
use crate::lagrangian::LagrangianField;
use crate::normal_frame::{frame_with_convention, identity_terms, FrameConvention};

pub const TOL_ABS: f64 = 1e-8;
pub const TOL_REL: f64 = 1e-6;
/// Default `h_t` relative to the domain diameter.
pub const DEFAULT_STEP: f64 = 1e-4;

/// Side of the base box. For `p = 1`, `Left`/`Right` are the two endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

impl Edge {
    fn contains(self, g: &GridGraph, k: usize) -> bool {
        let last = g.resolution() - 1;
        let (i, j) = g.indices(k);
        match self {
            Edge::Left => i == 0,
            Edge::Right => i == last,
            Edge::Bottom => g.p() == 2 && j == 0,
            Edge::Top => g.p() == 2 && j == last,
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Edge::Left),
            "right" => Ok(Edge::Right),
            "bottom" => Ok(Edge::Bottom),
            "top" => Ok(Edge::Top),
            _ => Err(Error::Parse(format!("unknown edge {s:?} (left, right, bottom, top)"))),
        }
    }
}

/// Vector field `N` along the boundary of the extremal graph.
#[derive(Debug, Clone)]
pub enum DeformationField {
    /// `sum_k lambda_k v^k` with the frame of the given convention; an empty
    /// `lambda` means all ones.
    Frame { convention: FrameConvention, lambda: Vec<f64> },
    /// `sum_k lambda_k (q^k_1, ..., q^k_p, -e_k)`, the Euclidean normal space of the graph.
    EuclideanNormal { lambda: Vec<f64> },
    /// Graph tangent `t_j = e_j + sum_i q^i_j e_{p+i}` (1-based `j`).
    Tangent(usize),
    Constant(Vec<f64>),
    /// One expression per ambient component, over the ambient point `x1..xn`.
    Expr(Vec<Expr>),
}

impl DeformationField {
    pub fn frame() -> Self {
        DeformationField::Frame { convention: FrameConvention::Stated, lambda: Vec::new() }
    }

    /// `frame[:l1,l2,..]`, `cross-frame[:..]`, `euclidean-normal[:..]`,
    /// `tangent:<j>`, `const:<a>,<b>,..`, or `;`-separated expressions in `x1..xn`.
    pub fn parse(s: &str, n: usize) -> Result<Self> {
        let s = s.trim();
        let (head, tail) = match s.split_once(':') {
            Some((h, t)) => (h.trim(), Some(t.trim())),
            None => (s, None),
        };
        let numbers = |t: Option<&str>| -> Result<Vec<f64>> {
            t.map_or(Ok(Vec::new()), |t| {
                t.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {v:?} in {s:?}")))).collect()
            })
        };
        match head {
            "frame" => Ok(DeformationField::Frame { convention: FrameConvention::Stated, lambda: numbers(tail)? }),
            "cross-frame" => Ok(DeformationField::Frame { convention: FrameConvention::CrossCoupled, lambda: numbers(tail)? }),
            "euclidean-normal" => Ok(DeformationField::EuclideanNormal { lambda: numbers(tail)? }),
            "tangent" => {
                let j = tail
                    .and_then(|t| t.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse(format!("{s:?}: expected tangent:<j>")))?;
                Ok(DeformationField::Tangent(j))
            }
            "const" => {
                let v = numbers(tail)?;
                if v.len() != n {
                    return Err(Error::DimensionMismatch(format!("constant field needs {n} components")));
                }
                Ok(DeformationField::Constant(v))
            }
            _ => {
                let layout = VarLayout::point(n);
                let exprs: Vec<Expr> = s.split(';').map(|e| Expr::parse(e.trim(), &layout)).collect::<Result<_>>()?;
                if exprs.len() != n {
                    return Err(Error::DimensionMismatch(format!("field needs {n} expressions, got {}", exprs.len())));
                }
                Ok(DeformationField::Expr(exprs))
            }
        }
    }

    fn vector_at(&self, l: &LagrangianField, elem: &GrassmannElement) -> Result<DVector<f64>> {
        let (n, p, m) = (elem.n(), elem.p(), elem.codim());
        let weights = |lambda: &[f64]| -> Result<Vec<f64>> {
            match lambda.len() {
                0 => Ok(vec![1.0; m]),
                k if k == m => Ok(lambda.to_vec()),
                k => Err(Error::DimensionMismatch(format!("{k} mixture coefficients for codimension {m}"))),
            }
        };
        match self {
            DeformationField::Frame { convention, lambda } => frame_with_convention(l, elem, *convention)?.combine(&weights(lambda)?),
            DeformationField::EuclideanNormal { lambda } => {
                let w = weights(lambda)?;
                let q = elem.slopes();
                Ok(DVector::from_fn(n, |r, _| {
                    if r < p {
                        (0..m).map(|k| w[k] * q[(k, r)]).sum()
                    } else {
                        -w[r - p]
                    }
                }))
            }
            DeformationField::Tangent(j) => {
                if *j == 0 || *j > p {
                    return Err(Error::Invalid(format!("tangent index {j} outside 1..={p}")));
                }
                Ok(elem.graph_tangent_basis()[j - 1].clone())
            }
            DeformationField::Constant(v) => {
                if v.len() != n {
                    return Err(Error::DimensionMismatch(format!("constant field needs {n} components")));
                }
                Ok(DVector::from_column_slice(v))
            }
            DeformationField::Expr(e) => {
                if e.len() != n {
                    return Err(Error::DimensionMismatch(format!("field needs {n} expressions")));
                }
                let point = elem.base_point().as_slice();
                Ok(DVector::from_iterator(n, e.iter().map(|e| e.eval_f64(point))))
            }
        }
    }
}

impl fmt::Display for DeformationField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            DeformationField::Frame { convention, lambda } => {
                let name = match convention {
                    FrameConvention::Stated => "frame",
                    FrameConvention::CrossCoupled => "cross-frame",
                };
                if lambda.is_empty() {
                    write!(f, "{name}")
                } else {
                    write!(f, "{name}:{}", list(lambda))
                }
            }
            DeformationField::EuclideanNormal { lambda } if lambda.is_empty() => write!(f, "euclidean-normal"),
            DeformationField::EuclideanNormal { lambda } => write!(f, "euclidean-normal:{}", list(lambda)),
            DeformationField::Tangent(j) => write!(f, "tangent:{j}"),
            DeformationField::Constant(v) => write!(f, "const:{}", list(v)),
            DeformationField::Expr(e) => {
                write!(f, "{}", e.iter().map(|e| e.source().to_string()).collect::<Vec<_>>().join("; "))
            }
        }
    }
}

/// Scalar intensity `psi` on the boundary, a function of the base point.
#[derive(Debug, Clone)]
pub enum Intensity {
    Constant(f64),
    Expr(Expr),
    /// `c0 + sum_k a_k cos(w_k . x + phi_k)`.
    Trig { c0: f64, terms: Vec<(f64, Vec<f64>, f64)>, seed: Option<u64> },
    /// 1 on one side of the box (corners included), 0 elsewhere.
    EdgeIndicator(Edge),
}

impl Intensity {
    /// Smooth random intensity drawn from a seeded generator.
    pub fn random(seed: u64, p: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c0 = rng.gen_range(0.5..1.5);
        let terms = (0..3)
            .map(|_| {
                let a = rng.gen_range(-0.5..0.5);
                let w: Vec<f64> = (0..p).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let phi = rng.gen_range(0.0..2.0 * PI);
                (a, w, phi)
            })
            .collect();
        Intensity::Trig { c0, terms, seed: Some(seed) }
    }

    /// `random` (uses `seed`), `edge:<side>`, a number, or an expression in `x1..xp`.
    pub fn parse(s: &str, p: usize, seed: u64) -> Result<Self> {
        let s = s.trim();
        if s == "random" {
            return Ok(Self::random(seed, p));
        }
        if let Some(side) = s.strip_prefix("edge:") {
            return Ok(Intensity::EdgeIndicator(Edge::parse(side.trim())?));
        }
        if let Ok(c) = s.parse::<f64>() {
            return Ok(Intensity::Constant(c));
        }
        Ok(Intensity::Expr(Expr::parse(s, &VarLayout::point(p))?))
    }

    fn eval(&self, g: &GridGraph, k: usize) -> f64 {
        let x = g.position(k);
        match self {
            Intensity::Constant(c) => *c,
            Intensity::Expr(e) => e.eval_f64(x),
            Intensity::Trig { c0, terms, .. } => {
                c0 + terms.iter().map(|(a, w, phi)| a * (w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + phi).cos()).sum::<f64>()
            }
            Intensity::EdgeIndicator(edge) => {
                if edge.contains(g, k) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Sum of two intensities (used for linearity checks).
    pub fn plus(&self, other: &Intensity) -> Result<Intensity> {
        let src = |i: &Intensity| -> Result<String> {
            match i {
                Intensity::Constant(c) => Ok(format!("({c:e})")),
                Intensity::Expr(e) => Ok(format!("({})", e.source())),
                Intensity::Trig { c0, terms, .. } => {
                    let mut s = format!("({c0:e}");
                    for (a, w, phi) in terms {
                        let arg: Vec<String> = w.iter().enumerate().map(|(i, w)| format!("({w:e})*x{}", i + 1)).collect();
                        s.push_str(&format!(" + ({a:e})*cos({} + ({phi:e}))", arg.join(" + ")));
                    }
                    s.push(')');
                    Ok(s)
                }
                Intensity::EdgeIndicator(_) => Err(Error::Invalid("edge indicators cannot be summed".into())),
            }
        };
        let p = match (self, other) {
            (Intensity::Trig { terms, .. }, _) | (_, Intensity::Trig { terms, .. }) => terms.first().map_or(2, |t| t.1.len()),
            _ => 2,
        };
        Ok(Intensity::Expr(Expr::parse(&format!("{} + {}", src(self)?, src(other)?), &VarLayout::point(p))?))
    }
}

impl fmt::Display for Intensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Intensity::Constant(c) => write!(f, "{c}"),
            Intensity::Expr(e) => write!(f, "{}", e.source()),
            Intensity::Trig { seed: Some(s), .. } => write!(f, "random(seed={s})"),
            Intensity::Trig { .. } => write!(f, "trig"),
            Intensity::EdgeIndicator(e) => write!(f, "edge:{}", format!("{e:?}").to_lowercase()),
        }
    }
}

/// A boundary deformation `m -> m + t psi(m) N(m)`.
#[derive(Debug, Clone)]
pub struct DeformationSpec {
    pub field: DeformationField,
    pub intensity: Intensity,
    /// Step of the `t` stencil; `None` means `1e-4` times the domain diameter.
    pub h_t: Option<f64>,
}

impl DeformationSpec {
    pub fn new(field: DeformationField, intensity: Intensity) -> Self {
        DeformationSpec { field, intensity, h_t: None }
    }

    pub fn label(&self) -> String {
        format!("{} * {}", self.intensity, self.field)
    }

    /// `psi N` at every boundary node of a uniform graph, with `N` evaluated
    /// at the element `(x, f(x), q)` of the graph.
    pub fn boundary_vectors(&self, l: &LagrangianField, g: &GridGraph) -> Result<Vec<(usize, DVector<f64>)>> {
        self.vectors_at(l, g, &boundary_elements(g)?)
    }

    fn vectors_at(&self, l: &LagrangianField, g: &GridGraph, elems: &[(usize, GrassmannElement)]) -> Result<Vec<(usize, DVector<f64>)>> {
        elems
            .iter()
            .map(|(k, elem)| {
                let k = *k;
                let psi = self.intensity.eval(g, k);
                if !psi.is_finite() {
                    return Err(Error::NonFinite(format!("intensity at node {k}")));
                }
                let v = if psi == 0.0 { DVector::zeros(g.n()) } else { self.field.vector_at(l, elem)? * psi };
                if v.iter().any(|c| !c.is_finite()) {
                    return Err(Error::NonFinite(format!("deformation field at node {k}")));
                }
                Ok((k, v))
            })
            .collect()
    }
}

/// Fourth-order derivative of `v(idx)` on a uniform line of `len` samples.
fn derivative4(v: impl Fn(usize) -> f64, idx: usize, len: usize, h: f64) -> f64 {
    let d = if idx == 0 {
        -25.0 * v(0) + 48.0 * v(1) - 36.0 * v(2) + 16.0 * v(3) - 3.0 * v(4)
    } else if idx == 1 {
        -3.0 * v(0) - 10.0 * v(1) + 18.0 * v(2) - 6.0 * v(3) + v(4)
    } else if idx == len - 1 {
        let i = idx;
        25.0 * v(i) - 48.0 * v(i - 1) + 36.0 * v(i - 2) - 16.0 * v(i - 3) + 3.0 * v(i - 4)
    } else if idx == len - 2 {
        let i = idx;
        3.0 * v(i + 1) + 10.0 * v(i) - 18.0 * v(i - 1) + 6.0 * v(i - 2) - v(i - 3)
    } else {
        v(idx - 2) - 8.0 * v(idx - 1) + 8.0 * v(idx + 1) - v(idx + 2)
    };
    d / (12.0 * h)
}

/// The plane element `(x, f(x), grad f(x))` at every boundary node.
pub fn boundary_elements(g: &GridGraph) -> Result<Vec<(usize, GrassmannElement)>> {
    if !g.is_uniform() {
        return Err(Error::Invalid("boundary slopes need a uniform grid".into()));
    }
    let (n, p, m, res) = (g.n(), g.p(), g.codim(), g.resolution());
    let h = g.spacing();
    g.boundary_nodes()
        .into_iter()
        .map(|k| {
            let (i, j) = g.indices(k);
            let mut q = DMatrix::zeros(m, p);
            for c in 0..m {
                q[(c, 0)] = derivative4(|t| g.value(g.node(t, j))[c], i, res, h[0]);
                if p == 2 {
                    q[(c, 1)] = derivative4(|t| g.value(g.node(i, t))[c], j, res, h[1]);
                }
            }
            let mut base = g.position(k).to_vec();
            base.extend_from_slice(g.value(k));
            Ok((k, GrassmannElement::new(n, p, DVector::from_vec(base), q)?))
        })
        .collect()
}

/// Boundary elements whose slopes across the boundary are extrapolated from
/// the fine graph and a graph with twice its spacing (which shares every other
/// boundary node). Slopes along the boundary come from the Dirichlet data and
/// are kept as they are.
fn extrapolated_boundary_elements(fine: &GridGraph, coarse: &GridGraph) -> Result<Vec<(usize, GrassmannElement)>> {
    let (p, m) = (fine.p(), fine.codim());
    let last = fine.resolution() - 1;
    let mut elems = boundary_elements(fine)?;
    let coarse_elems: std::collections::HashMap<usize, GrassmannElement> = boundary_elements(coarse)?.into_iter().collect();
    let coarse_slopes = |i: usize, j: usize| coarse_elems.get(&coarse.node(i / 2, j / 2)).map(|e| e.slopes().clone());
    // (edge index, across-boundary column, position along the edge) per boundary node
    let locate = |k: usize| -> Option<(usize, usize, usize)> {
        let (i, j) = fine.indices(k);
        if p == 1 {
            return Some((if i == 0 { 0 } else { 1 }, 0, 0));
        }
        let corner = (i == 0 || i == last) && (j == 0 || j == last);
        match () {
            _ if corner => None,
            _ if i == 0 => Some((0, 0, j)),
            _ if i == last => Some((1, 0, j)),
            _ if j == 0 => Some((2, 1, i)),
            _ => Some((3, 1, i)),
        }
    };
    // corrections (q_fine - q_coarse) / 3 at shared nodes, per edge
    let mut samples: Vec<Vec<(f64, Vec<f64>)>> = vec![Vec::new(); 4];
    for (k, elem) in &elems {
        let Some((edge, col, pos)) = locate(*k) else { continue };
        let (i, j) = fine.indices(*k);
        if i % 2 == 1 || j % 2 == 1 {
            continue;
        }
        let qc = coarse_slopes(i, j).expect("shared boundary node");
        let delta = (0..m).map(|c| (elem.slopes()[(c, col)] - qc[(c, col)]) / 3.0).collect();
        samples[edge].push((pos as f64, delta));
    }
    for (k, elem) in elems.iter_mut() {
        let Some((edge, col, pos)) = locate(*k) else { continue };
        let delta = interpolate(&samples[edge], pos as f64, m);
        let mut q = elem.slopes().clone();
        for c in 0..m {
            q[(c, col)] += delta[c];
        }
        *elem = GrassmannElement::new(elem.n(), p, elem.base_point().clone(), q)?;
    }
    Ok(elems)
}

/// Interpolates `g` onto the grid with half its spacing.
fn prolong(g: &GridGraph) -> Result<GridGraph> {
    let res = 2 * g.resolution() - 1;
    let m = g.codim();
    let mut out = GridGraph::new(g.n(), g.p(), g.domain().clone(), res)?;
    for k in 0..out.node_count() {
        let (i, j) = out.indices(k);
        let is = if i % 2 == 0 { vec![i / 2] } else { vec![i / 2, i / 2 + 1] };
        let js = if j % 2 == 0 { vec![j / 2] } else { vec![j / 2, j / 2 + 1] };
        let mut v = vec![0.0; m];
        for &a in &is {
            for &b in &js {
                for (c, x) in g.value(g.node(a, b)).iter().enumerate() {
                    v[c] += x / (is.len() * js.len()) as f64;
                }
            }
        }
        out.set_value(k, &v);
    }
    Ok(out)
}

/// Lagrange interpolation through the (up to) four samples nearest to `x`.
fn interpolate(samples: &[(f64, Vec<f64>)], x: f64, m: usize) -> Vec<f64> {
    let mut near: Vec<&(f64, Vec<f64>)> = samples.iter().collect();
    near.sort_by(|a, b| (a.0 - x).abs().total_cmp(&(b.0 - x).abs()).then(a.0.total_cmp(&b.0)));
    near.truncate(4);
    let mut out = vec![0.0; m];
    for (a, (xa, va)) in near.iter().enumerate() {
        let w: f64 = near.iter().enumerate().filter(|(b, _)| *b != a).map(|(_, (xb, _))| (x - xb) / (xa - xb)).product();
        for c in 0..m {
            out[c] += w * va[c];
        }
    }
    out
}

/// `int_{dOmega} sum_j (sum_i dL/dq^i_j df^i/dt + L X^j) nu_j` on a converged graph.
pub fn first_variation_boundary(l: &LagrangianField, graph: &GridGraph, spec: &DeformationSpec) -> Result<f64> {
    let elems = boundary_elements(graph)?;
    let vectors = spec.vectors_at(l, graph, &elems)?;
    boundary_integral(l, graph, &elems, &vectors)
}

fn boundary_integral(
    l: &LagrangianField,
    g: &GridGraph,
    elems: &[(usize, GrassmannElement)],
    vectors: &[(usize, DVector<f64>)],
) -> Result<f64> {
    let a = action(l, g)?.value;
    let res = el_residual(l, g)?.max_norm;
    let tolerance = 1e-8 * (1.0 + a.abs());
    if res > tolerance {
        return Err(Error::NotCritical { residual: res, tolerance });
    }
    let mut flux = vec![DVector::zeros(g.p()); g.node_count()];
    for ((k, elem), (k2, x)) in elems.iter().zip(vectors) {
        debug_assert_eq!(k, k2);
        let (value, grad) = l.value_and_grad_q_at(elem)?;
        flux[*k] = identity_terms(elem, value, &grad, x)?.0;
    }
    let last = g.resolution() - 1;
    if g.p() == 1 {
        return Ok(flux[last][0] - flux[0][0]);
    }
    let h = g.spacing();
    let edge = |nodes: Vec<usize>, comp: usize, sign: f64, step: f64| -> f64 {
        let vals: Vec<f64> = nodes.iter().map(|&k| sign * flux[k][comp]).collect();
        edge_quadrature(&vals, step)
    };
    let bottom = edge((0..=last).map(|i| g.node(i, 0)).collect(), 1, -1.0, h[0]);
    let top = edge((0..=last).map(|i| g.node(i, last)).collect(), 1, 1.0, h[0]);
    let left = edge((0..=last).map(|j| g.node(0, j)).collect(), 0, -1.0, h[1]);
    let right = edge((0..=last).map(|j| g.node(last, j)).collect(), 0, 1.0, h[1]);
    Ok(bottom + top + left + right)
}

/// Trapezoid rule with one Richardson level when the interval count is even.
fn edge_quadrature(vals: &[f64], h: f64) -> f64 {
    let n = vals.len() - 1;
    let trap = |stride: usize| -> f64 {
        let hs = h * stride as f64;
        let inner: f64 = (stride..n).step_by(stride).map(|i| vals[i]).sum();
        hs * (0.5 * (vals[0] + vals[n]) + inner)
    };
    if n.is_multiple_of(2) {
        (4.0 * trap(1) - trap(2)) / 3.0
    } else {
        trap(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Normal,
    NonNormal,
    Inconclusive,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Normal => "normal",
            Classification::NonNormal => "non-normal",
            Classification::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub label: String,
    /// Action at `t = 0`.
    pub a0: f64,
    /// Central difference `(A(h) - A(-h)) / 2h`.
    pub da_dt: f64,
    /// Five-point difference.
    pub da_dt_order4: f64,
    /// Central difference on the fine grid alone, before extrapolation in `h`.
    pub da_dt_fine: f64,
    pub boundary_formula_value: Option<f64>,
    pub classification: Classification,
    pub h_t: f64,
    /// Whether the actions were extrapolated from two grid resolutions.
    pub extrapolated: bool,
    pub note: Option<String>,
}

impl VariationReport {
    pub fn tolerance(&self) -> f64 {
        TOL_ABS + TOL_REL * self.a0.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationOptions {
    pub solve: SolveOptions,
    /// Extrapolate actions and boundary slopes from two grid resolutions.
    pub extrapolate: bool,
    pub max_halvings: usize,
}

impl Default for VariationOptions {
    fn default() -> Self {
        VariationOptions { solve: SolveOptions::default(), extrapolate: true, max_halvings: 4 }
    }
}

/// An extremal graph at `t = 0` together with the companion grid used for
/// extrapolation in `h`.
///
/// When the graph carries its Dirichlet data the companion is the refined grid
/// with `2r - 1` nodes per axis and the graph itself plays the coarse role;
/// otherwise an odd `r` is paired with the coarsened grid `(r + 1) / 2`, which
/// reuses every other boundary node.
#[derive(Debug, Clone)]
pub struct VariationProblem {
    l: LagrangianField,
    base: GridGraph,
    fine: GridGraph,
    coarse: Option<GridGraph>,
    /// Boundary elements of the fine graph, with slopes extrapolated in `h` when possible.
    elements: Vec<(usize, GrassmannElement)>,
    opts: VariationOptions,
}

/// Largest refined companion the oracle will solve on.
const MAX_REFINED_RESOLUTION: usize = 257;

impl VariationProblem {
    pub fn new(l: &LagrangianField, graph: GridGraph, opts: &VariationOptions) -> Result<Self> {
        if !graph.is_uniform() {
            return Err(Error::Invalid("the reference graph must live on a uniform grid".into()));
        }
        let res = graph.resolution();
        let base = if graph.info().is_some_and(|i| i.converged) { graph } else { solve_graph(l, graph, &opts.solve)? };
        let refined = 2 * res - 1;
        let (fine, coarse) = match base.boundary_data() {
            Some(bd) if opts.extrapolate && refined <= MAX_REFINED_RESOLUTION => {
                let start = prolong(&base)?;
                let fine = solve_dirichlet_with(l, bd, base.domain(), refined, Some(&start), &opts.solve)?;
                (fine, Some(base.clone()))
            }
            _ if opts.extrapolate && res % 2 == 1 && res.div_ceil(2) >= 5 => {
                let mut c = GridGraph::new(base.n(), base.p(), base.domain().clone(), res.div_ceil(2))?;
                for k in c.boundary_nodes() {
                    let (i, j) = c.indices(k);
                    let v = base.value(base.node(2 * i, 2 * j)).to_vec();
                    c.set_value(k, &v);
                }
                c.fill_interior_from_boundary();
                (base.clone(), Some(solve_graph(l, c, &opts.solve)?))
            }
            _ => (base.clone(), None),
        };
        let elements = match &coarse {
            Some(c) => extrapolated_boundary_elements(&fine, c)?,
            None => boundary_elements(&fine)?,
        };
        Ok(VariationProblem { l: l.clone(), base, fine, coarse, elements, opts: opts.clone() })
    }

    pub fn solve(
        l: &LagrangianField,
        boundary: &BoundaryData,
        domain: &BoxDomain,
        resolution: usize,
        opts: &VariationOptions,
    ) -> Result<Self> {
        let graph = solve_dirichlet_with(l, boundary, domain, resolution, None, &opts.solve)?;
        Self::new(l, graph, opts)
    }

    /// The extremal graph the problem was built from.
    pub fn graph(&self) -> &GridGraph {
        &self.base
    }

    fn extrapolate(&self, fine: f64, coarse: Option<f64>) -> f64 {
        match coarse {
            Some(c) => (4.0 * fine - c) / 3.0,
            None => fine,
        }
    }

    /// `A(t)` on one grid with the fine-grid boundary vectors.
    fn deformed_action(&self, base: &GridGraph, stride: usize, vectors: &[DVector<f64>], t: f64) -> Result<f64> {
        let (p, m) = (base.p(), base.codim());
        let mut positions = base.positions().to_vec();
        let mut values = base.values().to_vec();
        for k in base.boundary_nodes() {
            let (i, j) = base.indices(k);
            let x = &vectors[self.fine.node(stride * i, stride * j)];
            for a in 0..p {
                positions[k * p + a] += t * x[a];
            }
            for c in 0..m {
                values[k * m + c] += t * x[p + c];
            }
        }
        let moved = base.with_moved_boundary(&positions, &values);
        let solved = solve_graph(&self.l, moved, &self.opts.solve)?;
        Ok(solved.info().map(|i| i.action).unwrap_or(f64::NAN))
    }

    pub fn report(&self, spec: &DeformationSpec) -> Result<VariationReport> {
        let g = &self.fine;
        let listed = spec.vectors_at(&self.l, g, &self.elements)?;
        let mut vectors = vec![DVector::zeros(g.n()); g.node_count()];
        for (k, v) in &listed {
            vectors[*k] = v.clone();
        }
        let boundary_formula_value = boundary_integral(&self.l, g, &self.elements, &listed).ok();
        let a0_fine = action(&self.l, g)?.value;
        let a0_coarse = match &self.coarse {
            Some(c) => Some(action(&self.l, c)?.value),
            None => None,
        };
        let a0 = self.extrapolate(a0_fine, a0_coarse);

        let mut h_t = spec.h_t.unwrap_or(DEFAULT_STEP * g.domain().diameter());
        let mut notes = Vec::new();
        if self.coarse.is_none() {
            notes.push("no extrapolation in h".to_string());
        }
        let mut report = VariationReport {
            label: spec.label(),
            a0,
            da_dt: f64::NAN,
            da_dt_order4: f64::NAN,
            da_dt_fine: f64::NAN,
            boundary_formula_value,
            classification: Classification::Inconclusive,
            h_t,
            extrapolated: self.coarse.is_some(),
            note: None,
        };
        if listed.iter().all(|(_, v)| v.iter().all(|&c| c == 0.0)) {
            report.da_dt = 0.0;
            report.da_dt_order4 = 0.0;
            report.da_dt_fine = 0.0;
            report.classification = Classification::Normal;
            report.note = (!notes.is_empty()).then(|| notes.join("; "));
            return Ok(report);
        }

        let steps = [-2.0, -1.0, 1.0, 2.0];
        for attempt in 0..=self.opts.max_halvings {
            let mut jobs: Vec<(usize, f64)> = steps.iter().map(|&s| (0, s * h_t)).collect();
            if self.coarse.is_some() {
                jobs.extend(steps.iter().map(|&s| (1, s * h_t)));
            }
            let results: Vec<Result<f64>> = jobs
                .par_iter()
                .map(|&(grid, t)| match grid {
                    0 => self.deformed_action(&self.fine, 1, &vectors, t),
                    _ => self.deformed_action(self.coarse.as_ref().expect("coarse grid"), 2, &vectors, t),
                })
                .collect();
            if results.iter().any(|r| matches!(r, Err(Error::ChartExit))) {
                if attempt == self.opts.max_halvings {
                    notes.push(format!("chart exit persists after {attempt} halvings of h_t"));
                    report.note = Some(notes.join("; "));
                    return Ok(report);
                }
                notes.push(format!("chart exit at h_t = {h_t:e}, halved"));
                h_t *= 0.5;
                report.h_t = h_t;
                continue;
            }
            let mut values = Vec::with_capacity(results.len());
            for r in results {
                match r {
                    Ok(v) => values.push(v),
                    Err(e @ Error::NoConvergence { .. }) | Err(e @ Error::SingularJacobian) => {
                        notes.push(format!("re-solve failed: {e}"));
                        report.note = Some(notes.join("; "));
                        return Ok(report);
                    }
                    Err(e) => return Err(e),
                }
            }
            let fine = &values[..4];
            let a: Vec<f64> = (0..4).map(|s| self.extrapolate(fine[s], values.get(4 + s).copied())).collect();
            let central = |a: &[f64]| (a[2] - a[1]) / (2.0 * h_t);
            report.da_dt = central(&a);
            report.da_dt_order4 = (a[0] - 8.0 * a[1] + 8.0 * a[2] - a[3]) / (12.0 * h_t);
            report.da_dt_fine = central(fine);
            report.classification = classify(report.da_dt, report.da_dt_order4, a0);
            break;
        }
        report.note = (!notes.is_empty()).then(|| notes.join("; "));
        Ok(report)
    }
}

/// Normal when `|dA/dt|` is below `TOL_ABS + TOL_REL |A0|` and both stencils
/// agree to ten times that tolerance; non-normal when the stencils agree on a
/// larger value.
pub fn classify(central: f64, five_point: f64, a0: f64) -> Classification {
    let tol = TOL_ABS + TOL_REL * a0.abs();
    let gap = (central - five_point).abs();
    if !(central.is_finite() && five_point.is_finite()) {
        Classification::Inconclusive
    } else if central.abs() <= tol && gap <= 10.0 * tol {
        Classification::Normal
    } else if central.abs() > tol && gap <= 10.0 * tol + 1e-2 * central.abs() {
        Classification::NonNormal
    } else {
        Classification::Inconclusive
    }
}

/// Solves at `t = 0` and measures `dA/dt` for one deformation.
pub fn first_variation_fd(
    l: &LagrangianField,
    boundary: &BoundaryData,
    domain: &BoxDomain,
    resolution: usize,
    spec: &DeformationSpec,
) -> Result<VariationReport> {
    VariationProblem::solve(l, boundary, domain, resolution, &VariationOptions::default())?.report(spec)
}

/// One report per candidate; errors are kept per row.
pub fn normality_scan(l: &LagrangianField, graph: &GridGraph, candidates: &[DeformationSpec]) -> Result<Vec<Result<VariationReport>>> {
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let problem = VariationProblem::new(l, graph.clone(), &VariationOptions::default())?;
    Ok(candidates.iter().map(|c| problem.report(c)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_order_stencils_are_exact_on_quartics() {
        let h = 0.1;
        let f = |x: f64| 1.0 - 2.0 * x + x.powi(3) - 0.5 * x.powi(4);
        let df = |x: f64| -2.0 + 3.0 * x * x - 2.0 * x.powi(3);
        for idx in 0..9 {
            let d = derivative4(|t| f(t as f64 * h), idx, 9, h);
            assert!((d - df(idx as f64 * h)).abs() < 1e-11, "{idx}");
        }
    }

    #[test]
    fn edge_quadrature_is_simpson_on_even_counts() {
        let vals: Vec<f64> = (0..=8).map(|i| (i as f64 / 8.0).powi(3)).collect();
        assert!((edge_quadrature(&vals, 1.0 / 8.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn field_and_intensity_parsing() {
        assert!(matches!(DeformationField::parse("frame", 3).unwrap(), DeformationField::Frame { .. }));
        assert!(matches!(DeformationField::parse("tangent:2", 3).unwrap(), DeformationField::Tangent(2)));
        assert!(matches!(DeformationField::parse("const:1,0,0", 3).unwrap(), DeformationField::Constant(_)));
        assert!(DeformationField::parse("const:1,0", 3).is_err());
        assert!(matches!(DeformationField::parse("0; 0; x1", 3).unwrap(), DeformationField::Expr(_)));
        assert_eq!(DeformationField::parse("euclidean-normal:1,2", 4).unwrap().to_string(), "euclidean-normal:1,2");
        assert!(matches!(Intensity::parse("edge:right", 2, 0).unwrap(), Intensity::EdgeIndicator(Edge::Right)));
        assert!(matches!(Intensity::parse("2.5", 2, 0).unwrap(), Intensity::Constant(_)));
        assert!(matches!(Intensity::parse("1 + x", 2, 0).unwrap(), Intensity::Expr(_)));
        match (Intensity::random(7, 2), Intensity::random(7, 2)) {
            (Intensity::Trig { c0: a, .. }, Intensity::Trig { c0: b, .. }) => assert_eq!(a, b),
            _ => unreachable!(),
        }
    }

    #[test]
    fn classification_rules() {
        assert_eq!(classify(1e-9, 1.1e-9, 1.0), Classification::Normal);
        assert_eq!(classify(0.5, 0.5000001, 1.0), Classification::NonNormal);
        assert_eq!(classify(1e-9, 1e-3, 1.0), Classification::Inconclusive);
        assert_eq!(classify(f64::NAN, 0.0, 1.0), Classification::Inconclusive);
    }

    #[test]
    fn flat_patch_examples() {
        let area = LagrangianField::area_hypersurface(3).unwrap();
        let domain = BoxDomain::unit(2);
        let problem = VariationProblem::solve(&area, &BoundaryData::zero(1), &domain, 9, &VariationOptions::default()).unwrap();

        let zero = DeformationSpec::new(DeformationField::frame(), Intensity::Constant(0.0));
        let r = problem.report(&zero).unwrap();
        assert_eq!(r.da_dt, 0.0);
        assert_eq!(r.classification, Classification::Normal);

        let edge = DeformationSpec::new(DeformationField::Constant(vec![1.0, 0.0, 0.0]), Intensity::EdgeIndicator(Edge::Right));
        let r = problem.report(&edge).unwrap();
        assert!((r.da_dt - 1.0).abs() < 1e-9, "{r:?}");
        assert!((r.boundary_formula_value.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r.classification, Classification::NonNormal);

        let vertical = DeformationSpec::new(DeformationField::frame(), Intensity::random(1, 2));
        let r = problem.report(&vertical).unwrap();
        assert!(r.da_dt.abs() < 1e-6 * r.a0, "{r:?}");
        assert_eq!(r.classification, Classification::Normal);
    }

    #[test]
    fn persistent_chart_exit_is_inconclusive() {
        let area = LagrangianField::area_hypersurface(3).unwrap();
        let problem =
            VariationProblem::solve(&area, &BoundaryData::zero(1), &BoxDomain::unit(2), 9, &VariationOptions::default()).unwrap();
        let mut spec = DeformationSpec::new(DeformationField::Constant(vec![-1.0, 0.0, 0.0]), Intensity::EdgeIndicator(Edge::Right));
        spec.h_t = Some(10.0);
        let r = problem.report(&spec).unwrap();
        assert_eq!(r.classification, Classification::Inconclusive);
        assert!(r.note.unwrap().contains("halvings"));
        assert_eq!(r.h_t, 10.0 / 16.0);
    }

    #[test]
    fn off_shell_boundary_formula_is_rejected() {
        let area = LagrangianField::area_hypersurface(3).unwrap();
        let g = GridGraph::from_fn(3, 2, BoxDomain::unit(2), 9, |x| vec![x[0] * x[0] * x[1]]).unwrap();
        let spec = DeformationSpec::new(DeformationField::frame(), Intensity::Constant(1.0));
        assert!(matches!(first_variation_boundary(&area, &g, &spec), Err(Error::NotCritical { .. })));
    }

    #[test]
    fn empty_scan() {
        let area = LagrangianField::area_hypersurface(3).unwrap();
        let g = GridGraph::new(3, 2, BoxDomain::unit(2), 9).unwrap();
        assert!(normality_scan(&area, &g, &[]).unwrap().is_empty());
    }
}
