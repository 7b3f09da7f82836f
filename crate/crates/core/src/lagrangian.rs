//! Lagrangian fields `L(x, z, q)` on the graph chart and their homogenized
//! (covector) form `F(x, xi)`.
//!
//! Built-in and expression Lagrangians are differentiated exactly with dual
//! numbers. Opaque callables fall back to central differences with one level
//! of Richardson extrapolation.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dual::{self, Dual, Jet2, Scalar};
use crate::error::{ensure_finite, Error, Result};
use crate::expr::{Expr, VarLayout};
use crate::grassmann::GrassmannElement;

pub type OpaqueLagrangian = Arc<dyn Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync>;
pub type OpaqueHomogenized = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    /// `sqrt(1 + sum_j (q^1_j)^2)`, codimension one.
    AreaHypersurface,
    /// `sqrt(sum (q^i_j)^2 + det(q)^2)` for `n = 4, p = 2`, without the leading `1`.
    AreaPaper4d,
    /// `sqrt(det(I + q^T q))`, the p-area of a graph.
    AreaGraphGram,
    /// `1/2 sum (q^i_j)^2`.
    Dirichlet,
}

#[derive(Clone)]
enum Kind {
    Builtin(Builtin),
    Expr(Expr),
    Opaque(OpaqueLagrangian),
}

/// An evaluatable Lagrangian on `Gr_p^beta(R^n)`.
#[derive(Clone)]
pub struct LagrangianField {
    n: usize,
    p: usize,
    name: String,
    kind: Kind,
    scale: f64,
}

impl fmt::Debug for LagrangianField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LagrangianField")
            .field("n", &self.n)
            .field("p", &self.p)
            .field("name", &self.name)
            .finish()
    }
}

fn check_dims(n: usize, p: usize) -> Result<()> {
    if n < 2 || p == 0 || p >= n {
        return Err(Error::DimensionMismatch(format!("need 1 <= p <= n-1, got n={n}, p={p}")));
    }
    Ok(())
}

impl LagrangianField {
    pub fn area_hypersurface(n: usize) -> Result<Self> {
        check_dims(n, n.saturating_sub(1))?;
        Ok(Self::builtin(n, n - 1, format!("area{n}"), Builtin::AreaHypersurface))
    }

    pub fn area_paper_4d() -> Self {
        Self::builtin(4, 2, "paper4d".into(), Builtin::AreaPaper4d)
    }

    pub fn area_graph_gram(n: usize, p: usize) -> Result<Self> {
        check_dims(n, p)?;
        Ok(Self::builtin(n, p, format!("gram:{n}:{p}"), Builtin::AreaGraphGram))
    }

    pub fn dirichlet(n: usize, p: usize) -> Result<Self> {
        check_dims(n, p)?;
        Ok(Self::builtin(n, p, format!("dirichlet:{n}:{p}"), Builtin::Dirichlet))
    }

    fn builtin(n: usize, p: usize, name: String, b: Builtin) -> Self {
        LagrangianField { n, p, name, kind: Kind::Builtin(b), scale: 1.0 }
    }

    /// Parses a user expression over `x1..xp, z1..z{n-p}, q{i}_{j}`.
    pub fn from_expr(n: usize, p: usize, source: &str) -> Result<Self> {
        check_dims(n, p)?;
        let expr = Expr::parse(source, &VarLayout::lagrangian(n, p))?;
        Ok(LagrangianField { n, p, name: expr.source().to_string(), kind: Kind::Expr(expr), scale: 1.0 })
    }

    /// Wraps a plain callable `(x, z, q_row_major) -> L`; derivatives use finite differences.
    pub fn opaque<F>(n: usize, p: usize, name: &str, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        check_dims(n, p)?;
        Ok(LagrangianField { n, p, name: name.to_string(), kind: Kind::Opaque(Arc::new(f)), scale: 1.0 })
    }

    /// Resolves a built-in name (`area3`, `area-hypersurface:<n>`, `paper4d`,
    /// `gram:<n>:<p>`, `dirichlet:<n>:<p>`) or, failing that, parses an
    /// expression with the given dimensions.
    pub fn lookup(spec: &str, dims: Option<(usize, usize)>) -> Result<Self> {
        let s = spec.trim();
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| -> Result<usize> {
            t.parse::<usize>().map_err(|_| Error::Parse(format!("bad dimension {t:?} in {s:?}")))
        };
        match parts.as_slice() {
            ["paper4d"] | ["area-paper-4d"] => return Ok(Self::area_paper_4d()),
            ["area-hypersurface", n] => return Self::area_hypersurface(num(n)?),
            ["gram", n, p] | ["area-graph-gram", n, p] => return Self::area_graph_gram(num(n)?, num(p)?),
            ["dirichlet", n, p] => return Self::dirichlet(num(n)?, num(p)?),
            [name] if name.starts_with("area") && name[4..].parse::<usize>().is_ok() => {
                return Self::area_hypersurface(num(&name[4..])?)
            }
            ["gram"] | ["dirichlet"] | ["area"] => {
                if let Some((n, p)) = dims {
                    return match parts[0] {
                        "gram" => Self::area_graph_gram(n, p),
                        "dirichlet" => Self::dirichlet(n, p),
                        _ => Self::area_hypersurface(n),
                    };
                }
                return Err(Error::Invalid(format!("{s:?} needs dimensions")));
            }
            _ => {}
        }
        let (n, p) = dims.ok_or_else(|| {
            Error::Invalid(format!("{s:?} is not a built-in Lagrangian; expressions need n and p"))
        })?;
        Self::from_expr(n, p, s)
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

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Multiplies the field by a constant `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.scale *= c;
        out.name = format!("{c}*{}", self.name);
        out
    }

    /// Whether derivatives are exact (dual numbers) rather than finite differences.
    pub fn has_exact_derivatives(&self) -> bool {
        !matches!(self.kind, Kind::Opaque(_))
    }

    /// Number of scalar arguments `p + m + m p`.
    pub fn arity(&self) -> usize {
        let m = self.codim();
        self.p + m + m * self.p
    }

    /// Generic evaluation on the concatenated argument vector `(x, z, q)`.
    /// `None` for opaque callables.
    pub(crate) fn eval_generic<S: Scalar>(&self, args: &[S]) -> Option<S> {
        let (p, m) = (self.p, self.codim());
        let q = &args[p + m..];
        let raw = match &self.kind {
            Kind::Expr(e) => Some(e.eval(args)),
            Kind::Builtin(b) => Some(match b {
                Builtin::AreaHypersurface => {
                    let s = q.iter().fold(S::cst(1.0), |acc, &v| acc + v * v);
                    s.sqrt()
                }
                Builtin::AreaPaper4d => {
                    let det = q[0] * q[3] - q[1] * q[2];
                    let s = q.iter().fold(det * det, |acc, &v| acc + v * v);
                    s.sqrt()
                }
                Builtin::AreaGraphGram => gram_graph_area(q, m, p),
                Builtin::Dirichlet => q.iter().fold(S::cst(0.0), |acc, &v| acc + v * v) * S::cst(0.5),
            }),
            Kind::Opaque(_) => None,
        }?;
        Some(if self.scale == 1.0 { raw } else { raw * S::cst(self.scale) })
    }

    fn eval_args(&self, args: &[f64]) -> f64 {
        match &self.kind {
            Kind::Opaque(f) => {
                let (p, m) = (self.p, self.codim());
                self.scale * f(&args[..p], &args[p..p + m], &args[p + m..])
            }
            _ => self.eval_generic(args).expect("non-opaque"),
        }
    }

    fn pack(&self, x: &[f64], z: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        let m = self.codim();
        if x.len() != self.p || z.len() != m || q.len() != m * self.p {
            return Err(Error::DimensionMismatch(format!(
                "Lagrangian {} expects x in R^{}, z in R^{m}, q with {} entries",
                self.name,
                self.p,
                m * self.p
            )));
        }
        let mut args = Vec::with_capacity(self.arity());
        args.extend_from_slice(x);
        args.extend_from_slice(z);
        args.extend_from_slice(q);
        Ok(args)
    }

    /// `L(x, z, q)` with `q` row-major.
    pub fn value(&self, x: &[f64], z: &[f64], q: &[f64]) -> f64 {
        match self.pack(x, z, q) {
            Ok(args) => self.eval_args(&args),
            Err(_) => f64::NAN,
        }
    }

    pub fn value_at(&self, elem: &GrassmannElement) -> Result<f64> {
        self.check_element(elem)?;
        ensure_finite(self.value(elem.x(), elem.z(), &elem.slopes_row_major()), "Lagrangian value")
    }

    pub(crate) fn check_element(&self, elem: &GrassmannElement) -> Result<()> {
        if elem.n() != self.n || elem.p() != self.p {
            return Err(Error::DimensionMismatch(format!(
                "element lives in Gr_{}(R^{}), Lagrangian {} in Gr_{}(R^{})",
                elem.p(),
                elem.n(),
                self.name,
                self.p,
                self.n
            )));
        }
        Ok(())
    }

    /// Value and full gradient with respect to `(x, z, q)`.
    pub fn gradient(&self, x: &[f64], z: &[f64], q: &[f64]) -> Result<(f64, Vec<f64>)> {
        let args = self.pack(x, z, q)?;
        let (v, g) = match &self.kind {
            Kind::Opaque(_) => (self.eval_args(&args), fd_gradient(|a| self.eval_args(a), &args)),
            _ => dual::gradient(|a| self.eval_generic(a).expect("non-opaque"), &args),
        };
        ensure_finite(v, "Lagrangian value")?;
        for d in &g {
            ensure_finite(*d, "Lagrangian derivative")?;
        }
        Ok((v, g))
    }

    /// `dL/dq^i_j` as an `(n-p) x p` matrix.
    pub fn grad_q(&self, x: &[f64], z: &[f64], q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let m = self.codim();
        let qr = row_major(q);
        let (_, g) = self.gradient(x, z, &qr)?;
        Ok(DMatrix::from_row_slice(m, self.p, &g[self.p + m..]))
    }

    /// `dL/dz^i`.
    pub fn grad_z(&self, x: &[f64], z: &[f64], q: &DMatrix<f64>) -> Result<DVector<f64>> {
        let (_, g) = self.gradient(x, z, &row_major(q))?;
        Ok(DVector::from_column_slice(&g[self.p..self.p + self.codim()]))
    }

    /// `dL/dx^j`.
    pub fn grad_x(&self, x: &[f64], z: &[f64], q: &DMatrix<f64>) -> Result<DVector<f64>> {
        let (_, g) = self.gradient(x, z, &row_major(q))?;
        Ok(DVector::from_column_slice(&g[..self.p]))
    }

    /// Value and `dL/dq` at a Grassmann element.
    pub fn value_and_grad_q_at(&self, elem: &GrassmannElement) -> Result<(f64, DMatrix<f64>)> {
        self.check_element(elem)?;
        let (v, g) = self.gradient(elem.x(), elem.z(), &elem.slopes_row_major())?;
        let m = self.codim();
        Ok((v, DMatrix::from_row_slice(m, self.p, &g[self.p + m..])))
    }

    /// Value, gradient and Hessian with respect to the `(z, q)` block only,
    /// at fixed `x`. This is the local jet the discrete solver consumes.
    pub fn zq_jet(&self, x: &[f64], z: &[f64], q: &[f64]) -> Result<Jet2> {
        let args = self.pack(x, z, q)?;
        let p = self.p;
        let point = &args[p..];
        let jet = match &self.kind {
            Kind::Opaque(_) => {
                let f = |v: &[f64]| {
                    let mut a = args[..p].to_vec();
                    a.extend_from_slice(v);
                    self.eval_args(&a)
                };
                fd_jet(f, point)
            }
            _ => {
                let xs: Vec<Dual<Dual<f64>>> = args[..p].iter().map(|&v| Dual::cst(v)).collect();
                dual::hessian(
                    |v| {
                        let mut a = xs.clone();
                        a.extend_from_slice(v);
                        self.eval_generic(&a).expect("non-opaque")
                    },
                    point,
                )
            }
        };
        ensure_finite(jet.value, "Lagrangian value")?;
        if jet.grad.iter().chain(jet.hess.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Lagrangian derivatives".into()));
        }
        Ok(jet)
    }

    /// Value and gradient with respect to `(z, q)` at fixed `x`.
    pub fn zq_gradient(&self, x: &[f64], z: &[f64], q: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (v, g) = self.gradient(x, z, q)?;
        Ok((v, g[self.p..].to_vec()))
    }
}

/// `sqrt(det(I + Q^T Q))` by unpivoted elimination (the matrix is SPD, >= I).
fn gram_graph_area<S: Scalar>(q: &[S], m: usize, p: usize) -> S {
    let mut g: Vec<S> = vec![S::cst(0.0); p * p];
    for a in 0..p {
        for b in 0..p {
            let mut s = S::cst(if a == b { 1.0 } else { 0.0 });
            for i in 0..m {
                s = s + q[i * p + a] * q[i * p + b];
            }
            g[a * p + b] = s;
        }
    }
    let mut det = S::cst(1.0);
    for k in 0..p {
        let pivot = g[k * p + k];
        det = det * pivot;
        for r in k + 1..p {
            let f = g[r * p + k] / pivot;
            for c in k..p {
                g[r * p + c] = g[r * p + c] - f * g[k * p + c];
            }
        }
    }
    det.sqrt()
}

pub(crate) fn row_major(q: &DMatrix<f64>) -> Vec<f64> {
    let (m, p) = q.shape();
    let mut out = Vec::with_capacity(m * p);
    for i in 0..m {
        for j in 0..p {
            out.push(q[(i, j)]);
        }
    }
    out
}

/// Central differences, step `eps^(1/3) max(1, |v|)`, one Richardson level.
pub(crate) fn fd_gradient<F: Fn(&[f64]) -> f64>(f: F, point: &[f64]) -> Vec<f64> {
    let h0 = f64::EPSILON.cbrt();
    let mut v = point.to_vec();
    (0..point.len())
        .map(|a| {
            let h = h0 * point[a].abs().max(1.0);
            let mut central = |step: f64| {
                v[a] = point[a] + step;
                let fp = f(&v);
                v[a] = point[a] - step;
                let fm = f(&v);
                v[a] = point[a];
                (fp - fm) / (2.0 * step)
            };
            let d1 = central(h);
            let d2 = central(0.5 * h);
            (4.0 * d2 - d1) / 3.0
        })
        .collect()
}

fn fd_jet<F: Fn(&[f64]) -> f64>(f: F, point: &[f64]) -> Jet2 {
    let k = point.len();
    let value = f(point);
    let grad = fd_gradient(&f, point);
    let mut hess = vec![0.0; k * k];
    let h0 = f64::EPSILON.powf(0.25);
    let mut v = point.to_vec();
    for b in 0..k {
        let h = h0 * point[b].abs().max(1.0);
        v[b] = point[b] + h;
        let gp = fd_gradient(&f, &v);
        v[b] = point[b] - h;
        let gm = fd_gradient(&f, &v);
        v[b] = point[b];
        for a in 0..k {
            hess[a * k + b] = (gp[a] - gm[a]) / (2.0 * h);
        }
    }
    for a in 0..k {
        for b in a + 1..k {
            let s = 0.5 * (hess[a * k + b] + hess[b * k + a]);
            hess[a * k + b] = s;
            hess[b * k + a] = s;
        }
    }
    Jet2 { value, grad, hess }
}

#[derive(Clone)]
enum HKind {
    FromLagrangian(LagrangianField),
    Expr(Expr),
    Opaque(OpaqueHomogenized),
}

/// A function `F(x, xi)` on covectors, degree-one homogeneous in `xi`.
#[derive(Clone)]
pub struct HomogenizedLagrangian {
    n: usize,
    name: String,
    kind: HKind,
}

impl fmt::Debug for HomogenizedLagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HomogenizedLagrangian").field("n", &self.n).field("name", &self.name).finish()
    }
}

/// `F(x, xi) = xi_n L(x, -xi_1/xi_n, ..., -xi_{n-1}/xi_n)` for a hypersurface Lagrangian.
///
/// The slope of the hyperplane annihilated by `xi` is `-xi_i / xi_n`, so the
/// gradient of `F` at `xi = (-q, 1)` is exactly minus the hypersurface frame
/// vector `(dL/dq, q.dL/dq - L)`.
pub fn homogenize(l: &LagrangianField) -> Result<HomogenizedLagrangian> {
    if l.p() + 1 != l.n() {
        return Err(Error::DimensionMismatch(format!(
            "homogenization needs p = n - 1, got n={}, p={}",
            l.n(),
            l.p()
        )));
    }
    Ok(HomogenizedLagrangian { n: l.n(), name: format!("homogenized({})", l.name()), kind: HKind::FromLagrangian(l.clone()) })
}

impl HomogenizedLagrangian {
    /// `|xi|`.
    pub fn euclidean(n: usize) -> Self {
        let src = (1..=n).map(|i| format!("xi{i}^2")).collect::<Vec<_>>().join(" + ");
        let mut h = Self::from_expr(n, &format!("sqrt({src})")).expect("valid expression");
        h.name = format!("euclidean:{n}");
        h
    }

    /// `(sum xi_i^4)^(1/4)`.
    pub fn quartic(n: usize) -> Self {
        let src = (1..=n).map(|i| format!("xi{i}^4")).collect::<Vec<_>>().join(" + ");
        let mut h = Self::from_expr(n, &format!("pow({src}, 0.25)")).expect("valid expression");
        h.name = format!("quartic:{n}");
        h
    }

    /// Expression over `x1..xn, xi1..xin`.
    pub fn from_expr(n: usize, source: &str) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionMismatch(format!("n = {n}")));
        }
        let e = Expr::parse(source, &VarLayout::homogenized(n))?;
        Ok(HomogenizedLagrangian { n, name: e.source().to_string(), kind: HKind::Expr(e) })
    }

    pub fn opaque<F>(n: usize, name: &str, f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        HomogenizedLagrangian { n, name: name.to_string(), kind: HKind::Opaque(Arc::new(f)) }
    }

    /// Built-in names `euclidean:<n>`, `quartic:<n>`, a Lagrangian name to
    /// homogenize, or an expression in `xi1..xin` (needs `n`).
    pub fn lookup(spec: &str, n: Option<usize>) -> Result<Self> {
        let s = spec.trim();
        let parts: Vec<&str> = s.split(':').collect();
        let dim = |t: &str| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad dimension {t:?}")));
        match parts.as_slice() {
            ["euclidean", k] => return Ok(Self::euclidean(dim(k)?)),
            ["quartic", k] => return Ok(Self::quartic(dim(k)?)),
            ["euclidean"] | ["quartic"] => {
                let n = n.ok_or_else(|| Error::Invalid(format!("{s:?} needs n")))?;
                return Ok(if parts[0] == "euclidean" { Self::euclidean(n) } else { Self::quartic(n) });
            }
            _ => {}
        }
        if let Ok(l) = LagrangianField::lookup(s, None) {
            return homogenize(&l);
        }
        let n = n.ok_or_else(|| Error::Invalid(format!("{s:?} is not a built-in; expressions need n")))?;
        Self::from_expr(n, s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn eval_generic<S: Scalar>(&self, x: &[f64], xi: &[S]) -> Option<S> {
        let n = self.n;
        match &self.kind {
            HKind::FromLagrangian(l) => {
                let p = l.p();
                let last = xi[n - 1];
                let mut args: Vec<S> = x.iter().map(|&v| S::cst(v)).collect();
                args.extend(xi[..n - 1].iter().map(|&v| -v / last));
                debug_assert_eq!(args.len(), p + 1 + p);
                Some(last * l.eval_generic(&args)?)
            }
            HKind::Expr(e) => {
                let mut args: Vec<S> = x.iter().map(|&v| S::cst(v)).collect();
                args.extend_from_slice(xi);
                Some(e.eval(&args))
            }
            HKind::Opaque(_) => None,
        }
    }

    fn check(&self, x: &[f64], xi: &[f64]) -> Result<()> {
        if x.len() != self.n || xi.len() != self.n {
            return Err(Error::DimensionMismatch(format!("F on R^{} got x, xi of lengths {}, {}", self.n, x.len(), xi.len())));
        }
        if matches!(self.kind, HKind::FromLagrangian(_)) && xi[self.n - 1] == 0.0 {
            return Err(Error::Domain("homogenized Lagrangian needs xi_n != 0".into()));
        }
        if xi.iter().all(|&v| v == 0.0) {
            return Err(Error::Domain("xi = 0".into()));
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        self.check(x, xi)?;
        let v = match &self.kind {
            HKind::Opaque(f) => f(x, xi),
            _ => self.eval_generic(x, xi).expect("non-opaque"),
        };
        ensure_finite(v, "homogenized Lagrangian")
    }

    /// `dF/dxi`.
    pub fn gradient(&self, x: &[f64], xi: &[f64]) -> Result<DVector<f64>> {
        self.check(x, xi)?;
        let g = match &self.kind {
            HKind::Opaque(f) => fd_gradient(|v| f(x, v), xi),
            _ => dual::gradient(|v| self.eval_generic(x, v).expect("non-opaque"), xi).1,
        };
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gradient of F".into()));
        }
        Ok(DVector::from_vec(g))
    }

    /// Hessian of `F^2 / 2` in `xi` (the fundamental tensor of the norm).
    pub fn half_square_hessian(&self, x: &[f64], xi: &[f64]) -> Result<DMatrix<f64>> {
        self.check(x, xi)?;
        let n = self.n;
        let jet = match &self.kind {
            HKind::Opaque(f) => fd_jet(|v| 0.5 * f(x, v).powi(2), xi),
            _ => dual::hessian(
                |v| {
                    let f = self.eval_generic(x, v).expect("non-opaque");
                    f * f * Scalar::cst(0.5)
                },
                xi,
            ),
        };
        if jet.hess.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Hessian of F^2/2".into()));
        }
        Ok(DMatrix::from_row_slice(n, n, &jet.hess))
    }
}

/// Outcome of checking the Minkowski-norm conditions at sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct MinkowskiReport {
    pub homogeneity_ok: bool,
    pub hessian_ok: bool,
    /// Smallest eigenvalue of the `F^2/2` Hessian over all samples.
    pub min_eigenvalue: f64,
    pub samples: usize,
    pub failures: Vec<String>,
}

impl MinkowskiReport {
    pub fn passed(&self) -> bool {
        self.homogeneity_ok && self.hessian_ok
    }
}

pub const HOMOGENEITY_FACTORS: [f64; 3] = [0.5, 2.0, 7.0];

/// Checks degree-one homogeneity and positive definiteness of the `F^2/2`
/// Hessian at each `(x, xi)` sample. Never fails; problems are reported.
pub fn minkowski_check(f: &HomogenizedLagrangian, samples: &[(DVector<f64>, DVector<f64>)]) -> MinkowskiReport {
    let mut report = MinkowskiReport {
        homogeneity_ok: true,
        hessian_ok: true,
        min_eigenvalue: f64::INFINITY,
        samples: samples.len(),
        failures: Vec::new(),
    };
    for (k, (x, xi)) in samples.iter().enumerate() {
        let (x, xi) = (x.as_slice(), xi.as_slice());
        let base = match f.value(x, xi) {
            Ok(v) => v,
            Err(e) => {
                report.homogeneity_ok = false;
                report.hessian_ok = false;
                report.failures.push(format!("sample {k}: {e}"));
                continue;
            }
        };
        for &lambda in &HOMOGENEITY_FACTORS {
            let scaled: Vec<f64> = xi.iter().map(|v| lambda * v).collect();
            match f.value(x, &scaled) {
                Ok(v) if (v - lambda * base).abs() <= 1e-12 * (lambda * base).abs().max(f64::MIN_POSITIVE) => {}
                Ok(v) => {
                    report.homogeneity_ok = false;
                    report.failures.push(format!("sample {k}: F({lambda} xi) = {v:e}, {lambda} F(xi) = {:e}", lambda * base));
                }
                Err(e) => {
                    report.homogeneity_ok = false;
                    report.failures.push(format!("sample {k}: {e}"));
                }
            }
        }
        let h = match f.half_square_hessian(x, xi) {
            Ok(h) => h,
            Err(e) => {
                report.hessian_ok = false;
                report.failures.push(format!("sample {k}: {e}"));
                continue;
            }
        };
        let scale = h.amax().max(f64::MIN_POSITIVE);
        let asym = (&h - h.transpose()).amax();
        if asym > 1e-8 * scale {
            report.hessian_ok = false;
            report.failures.push(format!("sample {k}: Hessian asymmetry {asym:e}"));
        }
        let sym = (&h + h.transpose()) * 0.5;
        let n = sym.nrows();
        let trace = sym.trace();
        let min_eig = SymmetricEigen::new(sym).eigenvalues.min();
        report.min_eigenvalue = report.min_eigenvalue.min(min_eig);
        if !(trace > 0.0 && min_eig > 1e-10 * trace / n as f64) {
            report.hessian_ok = false;
            report.failures.push(format!("sample {k}: min eigenvalue {min_eig:e}, trace {trace:e}"));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(rows: usize, cols: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, v)
    }

    #[test]
    fn grad_q_examples() {
        let l = LagrangianField::area_hypersurface(3).unwrap();
        let g = l.grad_q(&[0.0, 0.0], &[0.0], &q(1, 2, &[0.0, 0.0])).unwrap();
        assert_eq!(g, q(1, 2, &[0.0, 0.0]));
        let g = l.grad_q(&[0.0, 0.0], &[0.0], &q(1, 2, &[1.0, 0.0])).unwrap();
        assert!((g[(0, 0)] - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(g[(0, 1)], 0.0);

        let d = LagrangianField::dirichlet(3, 2).unwrap();
        let g = d.grad_q(&[0.0, 0.0], &[0.0], &q(1, 2, &[2.0, 0.0])).unwrap();
        assert_eq!(g, q(1, 2, &[2.0, 0.0]));
    }

    #[test]
    fn grad_z_and_grad_x_examples() {
        let area = LagrangianField::area_hypersurface(3).unwrap();
        let gz = area.grad_z(&[0.3, 0.1], &[5.0], &q(1, 2, &[0.2, -0.4])).unwrap();
        assert_eq!(gz[0], 0.0);

        let l = LagrangianField::from_expr(2, 1, "z1*(1+q1_1^2)").unwrap();
        let gz = l.grad_z(&[0.0], &[3.0], &q(1, 1, &[2.0])).unwrap();
        assert_eq!(gz[0], 5.0);

        let l = LagrangianField::from_expr(2, 1, "x1*q1_1").unwrap();
        let gx = l.grad_x(&[4.0], &[0.0], &q(1, 1, &[7.0])).unwrap();
        assert_eq!(gx[0], 7.0);
    }

    #[test]
    fn builtins_match_their_formulas() {
        let (a, b) = (0.7, -1.3);
        let area = LagrangianField::area_hypersurface(3).unwrap();
        assert_eq!(area.value(&[0.0, 0.0], &[0.0], &[a, b]), (1.0 + a * a + b * b).sqrt());

        let qs = [0.4, -0.2, 1.1, 0.5];
        let det: f64 = qs[0] * qs[3] - qs[1] * qs[2];
        let four = LagrangianField::area_paper_4d();
        let expected = (qs.iter().map(|v| v * v).sum::<f64>() + det * det).sqrt();
        assert!((four.value(&[0.0; 2], &[0.0; 2], &qs) - expected).abs() < 1e-15);

        // graph area: det(I + Q^T Q) for the 2x2 case is 1 + |Q|^2 + det(Q)^2
        let gram = LagrangianField::area_graph_gram(4, 2).unwrap();
        let expected = (1.0 + qs.iter().map(|v| v * v).sum::<f64>() + det * det).sqrt();
        assert!((gram.value(&[0.0; 2], &[0.0; 2], &qs) - expected).abs() < 1e-14);
        // codimension one: the hypersurface area
        let gram3 = LagrangianField::area_graph_gram(3, 2).unwrap();
        assert!((gram3.value(&[0.0; 2], &[0.0], &[a, b]) - (1.0 + a * a + b * b).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lookup_resolves_names_and_expressions() {
        assert_eq!(LagrangianField::lookup("area3", None).unwrap().p(), 2);
        assert_eq!(LagrangianField::lookup("area-hypersurface:5", None).unwrap().n(), 5);
        assert_eq!(LagrangianField::lookup("paper4d", None).unwrap().codim(), 2);
        assert_eq!(LagrangianField::lookup("gram:5:3", None).unwrap().codim(), 2);
        assert_eq!(LagrangianField::lookup("dirichlet", Some((3, 1))).unwrap().p(), 1);
        let e = LagrangianField::lookup("sqrt(1 + q1_1^2)", Some((2, 1))).unwrap();
        assert!((e.value(&[0.0], &[0.0], &[1.0]) - 2f64.sqrt()).abs() < 1e-15);
        assert!(LagrangianField::lookup("q1_1", None).is_err());
        assert!(LagrangianField::lookup("gram:3:3", None).is_err());
    }

    #[test]
    fn opaque_fallback_uses_finite_differences() {
        let exact = LagrangianField::area_hypersurface(3).unwrap();
        let opaque = LagrangianField::opaque(3, 2, "area-fd", |_, _, q| (1.0 + q[0] * q[0] + q[1] * q[1]).sqrt()).unwrap();
        assert!(!opaque.has_exact_derivatives());
        let qq = q(1, 2, &[0.8, -0.3]);
        let a = exact.grad_q(&[0.0, 0.0], &[0.0], &qq).unwrap();
        let b = opaque.grad_q(&[0.0, 0.0], &[0.0], &qq).unwrap();
        assert!((a - b).amax() < 1e-9);
        let ja = exact.zq_jet(&[0.0, 0.0], &[0.0], &[0.8, -0.3]).unwrap();
        let jb = opaque.zq_jet(&[0.0, 0.0], &[0.0], &[0.8, -0.3]).unwrap();
        for (u, v) in ja.hess.iter().zip(&jb.hess) {
            assert!((u - v).abs() < 1e-5, "{u} vs {v}");
        }
    }

    #[test]
    fn non_finite_derivatives_are_errors() {
        // sqrt at the origin has an infinite slope
        let l = LagrangianField::area_paper_4d();
        let err = l.grad_q(&[0.0; 2], &[0.0; 2], &q(2, 2, &[0.0; 4])).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn homogenize_examples() {
        let f = homogenize(&LagrangianField::area_hypersurface(3).unwrap()).unwrap();
        let x = [0.0; 3];
        assert_eq!(f.value(&x, &[0.0, 0.0, 1.0]).unwrap(), 1.0);
        assert!((f.value(&x, &[1.0, 1.0, 1.0]).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert!(matches!(f.value(&x, &[1.0, 0.0, 0.0]), Err(Error::Domain(_))));
        assert!(homogenize(&LagrangianField::dirichlet(4, 2).unwrap()).is_err());
    }

    #[test]
    fn minkowski_examples() {
        let x = DVector::zeros(3);
        let samples = vec![(x.clone(), DVector::from_vec(vec![1.0, 1.0, 1.0])), (x.clone(), DVector::from_vec(vec![0.3, -2.0, 0.5]))];
        let r = minkowski_check(&HomogenizedLagrangian::euclidean(3), &samples);
        assert!(r.passed(), "{:?}", r.failures);

        let r = minkowski_check(&HomogenizedLagrangian::quartic(3), &samples[..1]);
        assert!(r.passed());
        // eigenvalues of the quartic fundamental tensor at (1,1,1): sqrt(3) (twice) and 1/sqrt(3)
        assert!((r.min_eigenvalue - 1.0 / 3f64.sqrt()).abs() < 1e-12);

        let lin = HomogenizedLagrangian::from_expr(3, "xi1").unwrap();
        let r = minkowski_check(&lin, &samples);
        assert!(r.homogeneity_ok);
        assert!(!r.hessian_ok);
    }

    #[test]
    fn quartic_hessian_matches_closed_form() {
        // d^2 (S^(1/2) / 2) = -2 S^(-3/2) xi_i^3 xi_j^3 + 3 S^(-1/2) xi_i^2 delta_ij, S = sum xi^4
        let f = HomogenizedLagrangian::quartic(3);
        let xi = [0.4, -1.1, 0.9];
        let s: f64 = xi.iter().map(|v| v.powi(4)).sum();
        let h = f.half_square_hessian(&[0.0; 3], &xi).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut e = -2.0 * s.powf(-1.5) * xi[i].powi(3) * xi[j].powi(3);
                if i == j {
                    e += 3.0 * s.powf(-0.5) * xi[i] * xi[i];
                }
                assert!((h[(i, j)] - e).abs() < 1e-13, "{i}{j}");
            }
        }
    }

    fn builtins() -> Vec<LagrangianField> {
        vec![
            LagrangianField::area_hypersurface(3).unwrap(),
            LagrangianField::area_hypersurface(5).unwrap(),
            LagrangianField::area_paper_4d(),
            LagrangianField::area_graph_gram(5, 2).unwrap(),
            LagrangianField::area_graph_gram(6, 3).unwrap(),
            LagrangianField::dirichlet(4, 2).unwrap(),
        ]
    }

    proptest! {
        #[test]
        fn dual_and_finite_differences_agree(seed in proptest::collection::vec(-2.0f64..2.0, 12)) {
            for l in builtins() {
                let k = l.codim() * l.p();
                let mut qv: Vec<f64> = seed.iter().cycle().take(k).copied().collect();
                qv[0] += 0.5; // keep paper4d away from its singular origin
                let x = vec![0.1; l.p()];
                let z = vec![0.2; l.codim()];
                let (_, exact) = l.gradient(&x, &z, &qv).unwrap();
                let mut args = x.clone();
                args.extend(&z);
                args.extend(&qv);
                let fd = fd_gradient(|a| l.eval_args(a), &args);
                for (e, d) in exact.iter().zip(&fd) {
                    prop_assert!((e - d).abs() <= 1e-6 * e.abs().max(1e-3), "{}: {e} vs {d}", l.name());
                }
            }
        }

        #[test]
        fn euler_identity_for_homogenized(
            a in -3.0f64..3.0, b in -3.0f64..3.0, c in 0.1f64..3.0, lam in 0.1f64..10.0,
        ) {
            let f = homogenize(&LagrangianField::area_hypersurface(3).unwrap()).unwrap();
            let x = [0.0; 3];
            let xi = [a, b, c];
            let v = f.value(&x, &xi).unwrap();
            let g = f.gradient(&x, &xi).unwrap();
            let euler: f64 = g.iter().zip(&xi).map(|(g, x)| g * x).sum();
            prop_assert!((euler - v).abs() <= 1e-10 * v.abs());
            let scaled = [lam * a, lam * b, lam * c];
            prop_assert!((f.value(&x, &scaled).unwrap() - lam * v).abs() <= 1e-12 * lam * v);
            prop_assert!((v - (a * a + b * b + c * c).sqrt()).abs() <= 1e-12 * v);
        }
    }
}
