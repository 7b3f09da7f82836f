use std::path::{Path, PathBuf};

use cartan_core::{
    cartan_frame, frame_with_convention, minkowski_check, normality_scan, solve_dirichlet, volume, BoundaryData,
    DeformationField, DeformationSpec, ElementRecord, FrameConvention, GrassmannElement, GridGraph, GridRecord,
    HomogenizedLagrangian, Intensity, LagrangianField, MetricTensor, VariationReport,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{parse_domain, parse_flat, parse_rows, CommandKind, RunConfig, DEFAULT_RESOLUTION, DEFAULT_SAMPLES};
use crate::format::{g17, tuple, Format, Table};
use crate::{suite, CliError};

/// What a command produced: the main body plus files written alongside it.
#[derive(Debug, Default)]
pub struct Outcome {
    pub body: String,
    pub side_files: Vec<(PathBuf, String)>,
    pub warnings: Vec<String>,
    /// Set when the command ran to completion but its verdict is a failure.
    pub failure: Option<CliError>,
}

impl Outcome {
    fn body(body: String) -> Self {
        Outcome { body, ..Default::default() }
    }
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        CommandKind::Frame => frame(cfg),
        CommandKind::CheckMinkowski => check_minkowski(cfg),
        CommandKind::Solve => solve(cfg),
        CommandKind::Verify => verify(cfg),
        CommandKind::Volume => volume_cmd(cfg),
        CommandKind::Acceptance => acceptance(cfg),
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::compute("SerializeError", e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn read_record<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::config("IoError", format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| CliError::config("ParseError", format!("{}: {}", path.display(), e.message())))
    } else {
        serde_json::from_str(&text).map_err(|e| CliError::config("ParseError", format!("{}: {e}", path.display())))
    }
}

fn lagrangian(cfg: &RunConfig) -> Result<LagrangianField, CliError> {
    let spec = cfg.require(&cfg.lagrangian, "lagrangian")?;
    Ok(LagrangianField::lookup(spec, cfg.dims())?)
}

#[derive(Serialize)]
struct FrameRecord<'a> {
    lagrangian: &'a str,
    convention: FrameConvention,
    normalized: bool,
    at: ElementRecord,
    vectors: Vec<Vec<f64>>,
    degenerate: bool,
}

fn frame(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let l = lagrangian(cfg)?;
    let (n, p) = (l.n(), l.p());
    let elem = match (&cfg.element, &cfg.slopes) {
        (Some(path), _) => GrassmannElement::try_from(read_record::<ElementRecord>(path)?)?,
        (None, Some(slopes)) => {
            let base = match &cfg.base_point {
                Some(b) => parse_flat(b)?,
                None => vec![0.0; n],
            };
            GrassmannElement::from_rows(n, p, &base, &parse_flat(slopes)?)?
        }
        (None, None) => return Err(CliError::config("MissingField", "`slopes` or `element` is required for frame")),
    };
    let convention = cfg.convention.unwrap_or_default();
    let frame = if convention == FrameConvention::Stated {
        cartan_frame(&l, &elem)?
    } else {
        frame_with_convention(&l, &elem, convention)?
    };
    let vectors: Vec<DVector<f64>> = if cfg.normalize { frame.normalized() } else { frame.vectors.clone() };
    let mut out = Outcome::default();
    if frame.degenerate {
        out.warnings.push("degenerate frame: a diagonal entry -L + sum_j q dL/dq vanishes".into());
    }
    out.body = match cfg.format() {
        Format::Text => vectors
            .iter()
            .enumerate()
            .map(|(k, v)| format!("v{} = {}\n", k + 1, tuple(v.iter().copied())))
            .collect(),
        Format::Csv => {
            let mut t = Table::new(std::iter::once("vector".to_string()).chain((1..=n).map(|i| format!("c{i}"))));
            for (k, v) in vectors.iter().enumerate() {
                t.push(std::iter::once(format!("v{}", k + 1)).chain(v.iter().map(|&c| g17(c))).collect());
            }
            t.csv()
        }
        Format::Json => json(&FrameRecord {
            lagrangian: l.name(),
            convention,
            normalized: cfg.normalize,
            at: elem.to_record(),
            vectors: vectors.iter().map(|v| v.iter().copied().collect()).collect(),
            degenerate: frame.degenerate,
        })?,
    };
    Ok(out)
}

/// Sample points `(x, xi)` with `|xi_n| >= 0.2` so homogenized Lagrangians are defined.
pub fn minkowski_samples(n: usize, count: usize, seed: u64) -> Vec<(DVector<f64>, DVector<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let mut xi = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
            xi[n - 1] = rng.gen_range(0.2..2.0);
            (x, xi)
        })
        .collect()
}

#[derive(Serialize)]
struct MinkowskiRecord<'a> {
    function: &'a str,
    samples: usize,
    homogeneity_ok: bool,
    hessian_ok: bool,
    min_eigenvalue: f64,
    passed: bool,
    failures: &'a [String],
}

fn check_minkowski(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = cfg.require(&cfg.lagrangian, "lagrangian")?;
    let f = HomogenizedLagrangian::lookup(spec, cfg.n)?;
    let samples = minkowski_samples(f.n(), cfg.samples.unwrap_or(DEFAULT_SAMPLES), cfg.seed);
    let report = minkowski_check(&f, &samples);
    let body = match cfg.format() {
        Format::Text => {
            let mut s = format!(
                "function: {}\nsamples: {}\nhomogeneity_ok: {}\nhessian_ok: {}\nmin_eigenvalue: {}\npassed: {}\n",
                f.name(),
                report.samples,
                report.homogeneity_ok,
                report.hessian_ok,
                g17(report.min_eigenvalue),
                report.passed()
            );
            for failure in &report.failures {
                s.push_str(&format!("failure: {failure}\n"));
            }
            s
        }
        Format::Csv => {
            let mut t = Table::new(["function", "samples", "homogeneity_ok", "hessian_ok", "min_eigenvalue", "passed"]);
            t.push(vec![
                f.name().to_string(),
                report.samples.to_string(),
                report.homogeneity_ok.to_string(),
                report.hessian_ok.to_string(),
                g17(report.min_eigenvalue),
                report.passed().to_string(),
            ]);
            t.csv()
        }
        Format::Json => json(&MinkowskiRecord {
            function: f.name(),
            samples: report.samples,
            homogeneity_ok: report.homogeneity_ok,
            hessian_ok: report.hessian_ok,
            min_eigenvalue: report.min_eigenvalue,
            passed: report.passed(),
            failures: &report.failures,
        })?,
    };
    Ok(Outcome::body(body))
}

fn solved_graph(cfg: &RunConfig, l: &LagrangianField) -> Result<GridGraph, CliError> {
    let boundary = BoundaryData::parse(cfg.require(&cfg.boundary, "boundary")?, l.p(), l.codim())?;
    let domain = parse_domain(cfg.domain.as_deref(), l.p())?;
    Ok(solve_dirichlet(l, &boundary, &domain, cfg.resolution.unwrap_or(DEFAULT_RESOLUTION), None)?)
}

fn point_cloud(g: &GridGraph) -> String {
    let header = (1..=g.p()).map(|j| format!("x{j}")).chain((1..=g.codim()).map(|i| format!("z{i}")));
    let mut t = Table::new(header);
    for k in 0..g.node_count() {
        t.push(g.position(k).iter().chain(g.value(k)).map(|&v| g17(v)).collect());
    }
    t.csv()
}

fn solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let l = lagrangian(cfg)?;
    let g = solved_graph(cfg, &l)?;
    let info = g.info().expect("solver attaches convergence data");
    let mut out = Outcome::body(match cfg.format() {
        Format::Json => json(&g.to_record())?,
        Format::Csv => point_cloud(&g),
        Format::Text => format!(
            "lagrangian: {}\nresolution: {}\nconverged: {}\niterations: {}\nresidual: {}\naction: {}\n",
            l.name(),
            g.resolution(),
            info.converged,
            info.iterations,
            g17(info.residual),
            g17(info.action)
        ),
    });
    if let Some(path) = &cfg.points {
        out.side_files.push((path.clone(), point_cloud(&g)));
    }
    Ok(out)
}

type Row = (String, String, Result<VariationReport, cartan_core::Error>);

fn report_table(rows: &[Row]) -> Table {
    let mut t = Table::new([
        "field", "psi", "a0", "da_dt", "da_dt_order4", "boundary_formula", "classification", "h_t", "note",
    ]);
    for (field, psi, row) in rows {
        match row {
            Ok(r) => {
                t.push(vec![
                    field.to_string(),
                    psi.clone(),
                    g17(r.a0),
                    g17(r.da_dt),
                    g17(r.da_dt_order4),
                    r.boundary_formula_value.map_or_else(|| "-".to_string(), g17),
                    r.classification.to_string(),
                    g17(r.h_t),
                    r.note.clone().unwrap_or_default(),
                ]);
            }
            Err(e) => t.push(vec![
                field.clone(),
                psi.clone(),
                "-".into(),
                "-".into(),
                "-".into(),
                "-".into(),
                "error".into(),
                "-".into(),
                format!("{}: {e}", e.code()),
            ]),
        }
    }
    t
}

#[derive(Serialize)]
struct VerifyRow {
    field: String,
    psi: String,
    #[serde(flatten)]
    report: Option<VariationReport>,
    error: Option<String>,
}

fn verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let l = lagrangian(cfg)?;
    let graph = match &cfg.graph {
        Some(path) => {
            let mut g = GridGraph::from_record(read_record::<GridRecord>(path)?)?;
            if let Some(b) = &cfg.boundary {
                g.set_boundary(&BoundaryData::parse(b, l.p(), l.codim())?)?;
            }
            g
        }
        None => solved_graph(cfg, &l)?,
    };
    let fields: Vec<String> = if cfg.fields.is_empty() { vec!["frame".to_string()] } else { cfg.fields.clone() };
    let psi_src = cfg.psi.clone().unwrap_or_else(|| "random".to_string());
    let psi = Intensity::parse(&psi_src, l.p(), cfg.seed)?;
    let specs: Vec<DeformationSpec> = fields
        .iter()
        .map(|f| {
            let mut spec = DeformationSpec::new(DeformationField::parse(f, l.n())?, psi.clone());
            spec.h_t = cfg.h_t;
            Ok(spec)
        })
        .collect::<Result<_, cartan_core::Error>>()?;
    let reports = normality_scan(&l, &graph, &specs)?;
    let psi_label = if psi_src == "random" { format!("random(seed={})", cfg.seed) } else { psi_src };
    let rows: Vec<Row> =
        specs.iter().zip(reports).map(|(spec, r)| (spec.field.to_string(), psi_label.clone(), r)).collect();
    let table = report_table(&rows);
    let mut out = Outcome::body(match cfg.format() {
        Format::Text => table.aligned(),
        Format::Csv => table.csv(),
        Format::Json => json(
            &rows
                .iter()
                .map(|(field, psi, r)| VerifyRow {
                    field: field.clone(),
                    psi: psi.clone(),
                    report: r.as_ref().ok().cloned(),
                    error: r.as_ref().err().map(|e| format!("{}: {e}", e.code())),
                })
                .collect::<Vec<_>>(),
        )?,
    });
    if let Some(path) = &cfg.csv {
        out.side_files.push((path.clone(), table.csv()));
    }
    Ok(out)
}

/// Volume input record: vectors as rows, optional metric.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VolumeInput {
    vectors: Vec<Vec<f64>>,
    metric: Option<MetricTensor>,
}

fn volume_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (rows, metric) = match (&cfg.input, &cfg.vectors) {
        (Some(path), _) => {
            let input: VolumeInput = read_record(path)?;
            (input.vectors, input.metric)
        }
        (None, Some(v)) => (parse_rows(v)?, None),
        (None, None) => return Err(CliError::config("MissingField", "`vectors` or `input` is required for volume")),
    };
    let metric = match (&cfg.metric, metric) {
        (Some(m), _) => {
            let m = parse_rows(m)?;
            let dim = m.len();
            if m.iter().any(|r| r.len() != dim) {
                return Err(CliError::config("ParseError", "metric must be square"));
            }
            Some(MetricTensor::new(DMatrix::from_row_iterator(dim, dim, m.into_iter().flatten()))?)
        }
        (None, m) => m,
    };
    let n = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != n) {
        return Err(CliError::config("ParseError", "vectors must have equal lengths"));
    }
    let vectors: Vec<DVector<f64>> = rows.iter().map(|r| DVector::from_column_slice(r)).collect();
    let metric = metric.unwrap_or_else(|| MetricTensor::euclidean(n));
    let v = volume(&vectors, &metric)?;
    let body = match cfg.format() {
        Format::Text => format!("{}\n", g17(v)),
        Format::Csv => format!("volume\n{}\n", g17(v)),
        Format::Json => json(&serde_json::json!({ "volume": v }))?,
    };
    Ok(Outcome::body(body))
}

fn acceptance(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let outcomes = suite::run_all(cfg.seed);
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    let mut out = Outcome::body(match cfg.format() {
        Format::Json => json(&outcomes)?,
        Format::Csv => suite::table(&outcomes).csv(),
        Format::Text => suite::summary(&outcomes, cfg.seed),
    });
    if failed > 0 {
        out.failure = Some(CliError::compute("AcceptanceFailed", format!("{failed} of {} criteria failed", outcomes.len())));
    }
    Ok(out)
}
