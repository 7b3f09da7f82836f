use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, VarLayout};

use super::SolveInfo;

pub const GRID_FORMAT: &str = "cartan-grid/1";

/// Axis-aligned box `[lo_1, hi_1] x ... x [lo_p, hi_p]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let d = BoxDomain { lo, hi };
        d.validate()?;
        Ok(d)
    }

    /// `[lo, hi]^p`.
    pub fn cube(p: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; p], vec![hi; p])
    }

    pub fn unit(p: usize) -> Self {
        BoxDomain { lo: vec![0.0; p], hi: vec![1.0; p] }
    }

    fn validate(&self) -> Result<()> {
        if self.lo.len() != self.hi.len() || !(1..=2).contains(&self.lo.len()) {
            return Err(Error::DimensionMismatch(format!(
                "domain needs matching lo/hi of length 1 or 2, got {} and {}",
                self.lo.len(),
                self.hi.len()
            )));
        }
        for (a, b) in self.lo.iter().zip(&self.hi) {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::Invalid(format!("empty or non-finite side [{a}, {b}]")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn diameter(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }
}

type BoundaryFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
enum BoundaryKind {
    Exprs(Vec<Expr>),
    Function(BoundaryFn),
}

/// Dirichlet data `f|_{dOmega}`, evaluated at node positions.
#[derive(Clone)]
pub struct BoundaryData {
    codim: usize,
    kind: BoundaryKind,
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            BoundaryKind::Exprs(e) => {
                let srcs: Vec<&str> = e.iter().map(|e| e.source()).collect();
                write!(f, "BoundaryData({})", srcs.join("; "))
            }
            BoundaryKind::Function(_) => write!(f, "BoundaryData(<fn> -> R^{})", self.codim),
        }
    }
}

impl BoundaryData {
    /// One expression per component over `x1..xp` (aliases `x`, `y`),
    /// separated by `;`. A single expression is broadcast to every component.
    pub fn parse(source: &str, p: usize, codim: usize) -> Result<Self> {
        let layout = VarLayout::point(p);
        let parts: Vec<&str> = source.split(';').map(str::trim).filter(|s| !s.is_empty()).collect();
        let exprs: Vec<Expr> = parts.iter().map(|s| Expr::parse(s, &layout)).collect::<Result<_>>()?;
        let exprs = match exprs.len() {
            n if n == codim => exprs,
            1 => vec![exprs[0].clone(); codim],
            n => {
                return Err(Error::DimensionMismatch(format!("{n} boundary expressions for {codim} components")))
            }
        };
        Ok(BoundaryData { codim, kind: BoundaryKind::Exprs(exprs) })
    }

    pub fn zero(codim: usize) -> Self {
        Self::from_fn(codim, move |_| vec![0.0; codim])
    }

    pub fn from_fn<F>(codim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        BoundaryData { codim, kind: BoundaryKind::Function(Arc::new(f)) }
    }

    pub fn codim(&self) -> usize {
        self.codim
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let v = match &self.kind {
            BoundaryKind::Exprs(e) => e.iter().map(|e| e.eval_f64(x)).collect(),
            BoundaryKind::Function(f) => f(x),
        };
        if v.len() != self.codim {
            return Err(Error::DimensionMismatch(format!("boundary data returned {} components", v.len())));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("boundary data at {x:?}")));
        }
        Ok(v)
    }
}

/// Nodal values of a graph `f: Omega -> R^{n-p}` on a structured grid.
///
/// Nodes are numbered `i + j * resolution`. `values` holds `n - p`
/// components per node and `positions` holds `p` coordinates per node; the
/// positions are the uniform box grid unless the graph was built on a
/// deformed domain. A graph produced by the Dirichlet solver also keeps the
/// boundary data it was pinned to, so it can be re-solved on other grids.
#[derive(Debug, Clone)]
pub struct GridGraph {
    pub(crate) n: usize,
    pub(crate) p: usize,
    pub(crate) domain: BoxDomain,
    pub(crate) resolution: usize,
    pub(crate) values: Vec<f64>,
    pub(crate) positions: Vec<f64>,
    pub(crate) info: Option<SolveInfo>,
    pub(crate) boundary: Option<BoundaryData>,
}

impl PartialEq for GridGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.p == other.p
            && self.domain == other.domain
            && self.resolution == other.resolution
            && self.values == other.values
            && self.positions == other.positions
            && self.info == other.info
    }
}

impl GridGraph {
    pub fn new(n: usize, p: usize, domain: BoxDomain, resolution: usize) -> Result<Self> {
        domain.validate()?;
        if !(1..=2).contains(&p) || domain.dim() != p {
            return Err(Error::DimensionMismatch(format!("grids support p in {{1, 2}} with a matching domain, got p={p}")));
        }
        if n <= p {
            return Err(Error::DimensionMismatch(format!("n={n} must exceed p={p}")));
        }
        if resolution < 5 {
            return Err(Error::Invalid(format!("resolution {resolution} < 5")));
        }
        let count = resolution.pow(p as u32);
        let mut g = GridGraph {
            n,
            p,
            domain,
            resolution,
            values: vec![0.0; count * (n - p)],
            positions: vec![0.0; count * p],
            info: None,
            boundary: None,
        };
        g.positions = g.uniform_positions();
        Ok(g)
    }

    /// Grid whose values sample `f` at every node.
    pub fn from_fn<F>(n: usize, p: usize, domain: BoxDomain, resolution: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        let mut g = Self::new(n, p, domain, resolution)?;
        let m = n - p;
        for k in 0..g.node_count() {
            let v = f(g.position(k));
            if v.len() != m || v.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite(format!("sampled value at node {k}")));
            }
            g.values[k * m..(k + 1) * m].copy_from_slice(&v);
        }
        Ok(g)
    }

    fn uniform_positions(&self) -> Vec<f64> {
        let h = self.spacing();
        let res = self.resolution;
        let mut out = Vec::with_capacity(self.node_count() * self.p);
        for k in 0..self.node_count() {
            let idx = [k % res, k / res];
            for (a, &step) in h.iter().enumerate() {
                let coord = if idx[a] == res - 1 { self.domain.hi[a] } else { self.domain.lo[a] + idx[a] as f64 * step };
                out.push(coord);
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn codim(&self) -> usize {
        self.n - self.p
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn node_count(&self) -> usize {
        self.resolution.pow(self.p as u32)
    }

    /// `h = side / (resolution - 1)` per axis.
    pub fn spacing(&self) -> Vec<f64> {
        self.domain.lo.iter().zip(&self.domain.hi).map(|(a, b)| (b - a) / (self.resolution - 1) as f64).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn info(&self) -> Option<&SolveInfo> {
        self.info.as_ref()
    }

    pub fn boundary_data(&self) -> Option<&BoundaryData> {
        self.boundary.as_ref()
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        i + j * self.resolution
    }

    /// Grid indices `(i, j)` of node `k` (`j = 0` when `p = 1`).
    pub fn indices(&self, k: usize) -> (usize, usize) {
        (k % self.resolution, k / self.resolution)
    }

    pub fn position(&self, k: usize) -> &[f64] {
        &self.positions[k * self.p..(k + 1) * self.p]
    }

    pub fn value(&self, k: usize) -> &[f64] {
        let m = self.codim();
        &self.values[k * m..(k + 1) * m]
    }

    pub fn set_value(&mut self, k: usize, v: &[f64]) {
        let m = self.codim();
        self.values[k * m..(k + 1) * m].copy_from_slice(v);
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        let last = self.resolution - 1;
        let (i, j) = self.indices(k);
        i == 0 || i == last || (self.p == 2 && (j == 0 || j == last))
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&k| self.is_boundary(k)).collect()
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&k| !self.is_boundary(k)).collect()
    }

    /// True when node positions are the uniform grid on `domain`.
    pub fn is_uniform(&self) -> bool {
        self.positions == self.uniform_positions()
    }

    /// Pins boundary nodes to `data`.
    pub fn set_boundary(&mut self, data: &BoundaryData) -> Result<()> {
        if data.codim() != self.codim() {
            return Err(Error::DimensionMismatch(format!("boundary data has {} components, graph {}", data.codim(), self.codim())));
        }
        for k in self.boundary_nodes() {
            let v = data.eval(self.position(k))?;
            self.set_value(k, &v);
        }
        self.boundary = Some(data.clone());
        Ok(())
    }

    /// Replaces interior values by the transfinite interpolation of the boundary values.
    pub fn fill_interior_from_boundary(&mut self) {
        let m = self.codim();
        coons_fill(self.resolution, self.p, m, &mut self.values);
    }

    /// Rebuilds the graph on moved nodes: boundary positions and values are
    /// replaced, interior positions follow by transfinite interpolation of the
    /// boundary displacement, interior values are kept.
    pub(crate) fn with_moved_boundary(&self, positions: &[f64], values: &[f64]) -> GridGraph {
        let (p, m) = (self.p, self.codim());
        let mut out = self.clone();
        out.info = None;
        out.boundary = None;
        let mut disp = vec![0.0; self.node_count() * p];
        for k in self.boundary_nodes() {
            for a in 0..p {
                disp[k * p + a] = positions[k * p + a] - self.positions[k * p + a];
            }
            out.values[k * m..(k + 1) * m].copy_from_slice(&values[k * m..(k + 1) * m]);
        }
        coons_fill(self.resolution, p, p, &mut disp);
        for (o, d) in out.positions.iter_mut().zip(&disp) {
            *o += d;
        }
        out
    }

    pub fn to_record(&self) -> GridRecord {
        GridRecord {
            format: GRID_FORMAT.to_string(),
            n: self.n,
            p: self.p,
            domain: self.domain.clone(),
            resolution: self.resolution,
            values: self.values.clone(),
            positions: if self.is_uniform() { None } else { Some(self.positions.clone()) },
            converged: self.info.as_ref().map(|i| i.converged),
            residual: self.info.as_ref().map(|i| i.residual),
            iterations: self.info.as_ref().map(|i| i.iterations),
        }
    }

    pub fn from_record(r: GridRecord) -> Result<Self> {
        if r.format != GRID_FORMAT {
            return Err(Error::Parse(format!("unsupported grid format {:?}, expected {GRID_FORMAT:?}", r.format)));
        }
        let mut g = GridGraph::new(r.n, r.p, r.domain, r.resolution)?;
        if r.values.len() != g.values.len() {
            return Err(Error::DimensionMismatch(format!("grid needs {} values, got {}", g.values.len(), r.values.len())));
        }
        if r.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid values".into()));
        }
        g.values = r.values;
        if let Some(pos) = r.positions {
            if pos.len() != g.positions.len() {
                return Err(Error::DimensionMismatch("grid positions".into()));
            }
            g.positions = pos;
        }
        Ok(g)
    }
}

/// Serialized form of a [`GridGraph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub format: String,
    pub n: usize,
    pub p: usize,
    pub domain: BoxDomain,
    pub resolution: usize,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

/// Transfinite (Coons) interpolation of boundary entries into the interior of
/// a node-major array with `stride` entries per node.
pub(crate) fn coons_fill(res: usize, p: usize, stride: usize, data: &mut [f64]) {
    let last = res - 1;
    let at = |i: usize, j: usize| (i + j * res) * stride;
    if p == 1 {
        for i in 1..last {
            let s = i as f64 / last as f64;
            for c in 0..stride {
                data[i * stride + c] = (1.0 - s) * data[c] + s * data[last * stride + c];
            }
        }
        return;
    }
    for j in 1..last {
        let t = j as f64 / last as f64;
        for i in 1..last {
            let s = i as f64 / last as f64;
            for c in 0..stride {
                let edges = (1.0 - s) * data[at(0, j) + c]
                    + s * data[at(last, j) + c]
                    + (1.0 - t) * data[at(i, 0) + c]
                    + t * data[at(i, last) + c];
                let corners = (1.0 - s) * (1.0 - t) * data[at(0, 0) + c]
                    + s * (1.0 - t) * data[at(last, 0) + c]
                    + (1.0 - s) * t * data[at(0, last) + c]
                    + s * t * data[at(last, last) + c];
                data[at(i, j) + c] = edges - corners;
            }
        }
    }
}
