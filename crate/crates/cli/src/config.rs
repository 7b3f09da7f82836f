//! `RunConfig`: one record describing a full invocation, read from a TOML or
//! JSON file or assembled from command-line flags.

use std::path::{Path, PathBuf};

use cartan_core::{BoxDomain, FrameConvention};
use serde::{Deserialize, Serialize};

use crate::format::Format;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Frame,
    CheckMinkowski,
    Solve,
    Verify,
    Volume,
    Acceptance,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    /// Built-in name (`area3`, `paper4d`, `gram:4:2`, `dirichlet:3:2`, ...) or expression.
    pub lagrangian: Option<String>,
    pub n: Option<usize>,
    pub p: Option<usize>,

    /// Row-major slope matrix, rows separated by `;`.
    pub slopes: Option<String>,
    pub base_point: Option<String>,
    /// Element record file (`n`, `p`, `base_point`, `slopes`).
    pub element: Option<PathBuf>,
    pub convention: Option<FrameConvention>,
    #[serde(default)]
    pub normalize: bool,

    pub samples: Option<usize>,

    /// `lo,hi` for every axis or `lo,hi;lo,hi` per axis.
    pub domain: Option<String>,
    pub resolution: Option<usize>,
    pub boundary: Option<String>,
    /// Solved graph file to verify instead of solving.
    pub graph: Option<PathBuf>,
    /// CSV point cloud written next to the solved graph.
    pub points: Option<PathBuf>,

    #[serde(default)]
    pub fields: Vec<String>,
    pub psi: Option<String>,
    pub h_t: Option<f64>,
    /// CSV copy of the verify table.
    pub csv: Option<PathBuf>,

    /// Vectors as rows separated by `;`.
    pub vectors: Option<String>,
    pub metric: Option<String>,
    /// Volume input record (`vectors`, optional `metric`).
    pub input: Option<PathBuf>,

    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

pub const DEFAULT_RESOLUTION: usize = 33;
pub const DEFAULT_SAMPLES: usize = 100;

impl RunConfig {
    pub fn new(command: CommandKind) -> Self {
        RunConfig {
            command,
            lagrangian: None,
            n: None,
            p: None,
            slopes: None,
            base_point: None,
            element: None,
            convention: None,
            normalize: false,
            samples: None,
            domain: None,
            resolution: None,
            boundary: None,
            graph: None,
            points: None,
            fields: Vec::new(),
            psi: None,
            h_t: None,
            csv: None,
            vectors: None,
            metric: None,
            input: None,
            seed: 0,
            output: OutputSpec::default(),
        }
    }

    /// Reads a config file; TOML unless the extension is `.json`. Relative
    /// paths inside are resolved against the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("IoError", format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| CliError::config("ConfigError", e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| CliError::config("ConfigError", one_line(&e.to_string())))?
        };
        let dir = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.element,
            &mut cfg.graph,
            &mut cfg.points,
            &mut cfg.csv,
            &mut cfg.input,
            &mut cfg.output.path,
        ] {
            if let Some(rel) = p.as_mut().filter(|p| p.is_relative()) {
                *rel = dir.join(&*rel);
            }
        }
        Ok(cfg)
    }

    pub fn format(&self) -> Format {
        self.output.format.unwrap_or(match self.command {
            CommandKind::Solve => Format::Json,
            _ => Format::Text,
        })
    }

    pub fn require<'a, T>(&self, value: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        value.as_ref().ok_or_else(|| CliError::config("MissingField", format!("`{name}` is required for this command")))
    }

    pub fn dims(&self) -> Option<(usize, usize)> {
        self.n.zip(self.p)
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Rows separated by `;` or newlines, entries by whitespace or commas.
pub fn parse_rows(s: &str) -> Result<Vec<Vec<f64>>, CliError> {
    let rows: Vec<Vec<f64>> = s
        .split([';', '\n'])
        .map(str::trim)
        .filter(|r| !r.is_empty())
        .map(|r| {
            r.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|_| CliError::config("ParseError", format!("bad number {t:?}"))))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    if rows.is_empty() {
        return Err(CliError::config("ParseError", format!("no numbers in {s:?}")));
    }
    Ok(rows)
}

pub fn parse_flat(s: &str) -> Result<Vec<f64>, CliError> {
    Ok(parse_rows(s)?.into_iter().flatten().collect())
}

pub fn parse_domain(s: Option<&str>, p: usize) -> Result<BoxDomain, CliError> {
    let Some(s) = s else { return Ok(BoxDomain::unit(p)) };
    let rows = parse_rows(s)?;
    let axes: Vec<(f64, f64)> = match rows.as_slice() {
        [r] if r.len() == 2 => vec![(r[0], r[1]); p],
        _ if rows.len() == p && rows.iter().all(|r| r.len() == 2) => rows.iter().map(|r| (r[0], r[1])).collect(),
        _ => return Err(CliError::config("ParseError", format!("domain {s:?} must be `lo,hi` or {p} `lo,hi` pairs"))),
    };
    BoxDomain::new(axes.iter().map(|a| a.0).collect(), axes.iter().map(|a| a.1).collect()).map_err(CliError::from)
}

pub fn parse_convention(s: &str) -> Result<FrameConvention, String> {
    match s {
        "stated" => Ok(FrameConvention::Stated),
        "cross-coupled" => Ok(FrameConvention::CrossCoupled),
        _ => Err(format!("unknown convention {s:?} (stated, cross-coupled)")),
    }
}
