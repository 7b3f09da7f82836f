use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cartan_cli::config::parse_convention;
use cartan_cli::{execute, CliError, CommandKind, Format, OutputSpec, RunConfig, EXIT_COMPUTE, EXIT_CONFIG};
use cartan_core::FrameConvention;
use clap::{Args, Parser, Subcommand};

/// Variational normal frames, extremal graphs and first-variation checks.
#[derive(Debug, Parser)]
#[command(name = "cartan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normal frame of a plane element.
    Frame(FrameArgs),
    /// Homogeneity and Hessian definiteness of a homogenized Lagrangian.
    CheckMinkowski(MinkowskiArgs),
    /// Dirichlet problem for the extremal graph.
    Solve(SolveArgs),
    /// First variation of the action under boundary deformations.
    Verify(VerifyArgs),
    /// Volume of a list of vectors under a metric.
    Volume(VolumeArgs),
    /// Acceptance criteria 1-9 with a one-line verdict each.
    Acceptance(AcceptanceArgs),
    /// Runs the invocation described by a TOML (or .json) config file.
    Run {
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Output {
    /// Write the main output here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct Dims {
    /// Ambient dimension (needed for expressions and unsized built-ins).
    #[arg(long)]
    n: Option<usize>,
    /// Plane dimension.
    #[arg(long)]
    p: Option<usize>,
}

#[derive(Debug, Args)]
struct FrameArgs {
    #[arg(long, short)]
    lagrangian: String,
    #[command(flatten)]
    dims: Dims,
    /// Row-major slopes, rows separated by `;`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "element")]
    slopes: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    base_point: Option<String>,
    /// Element record file (JSON or TOML).
    #[arg(long)]
    element: Option<PathBuf>,
    #[arg(long, value_parser = parse_convention)]
    convention: Option<FrameConvention>,
    /// Scale each vector to unit Euclidean length.
    #[arg(long)]
    normalize: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct MinkowskiArgs {
    /// `euclidean:n`, `quartic:n`, a Lagrangian name to homogenize, or an expression in `x1..xn, xi1..xin`.
    #[arg(long, short)]
    lagrangian: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct ProblemArgs {
    #[arg(long, short)]
    lagrangian: String,
    #[command(flatten)]
    dims: Dims,
    /// `lo,hi` for every axis or `lo,hi;lo,hi`.
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    #[arg(long)]
    resolution: Option<usize>,
    /// Dirichlet data: one expression per component in `x1..xp` (or `x`, `y`), separated by `;`.
    #[arg(long, allow_hyphen_values = true)]
    boundary: Option<String>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Also write the nodes as a CSV point cloud.
    #[arg(long)]
    points: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Solved graph file to verify instead of solving.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Deformation field; repeat for a table. `frame`, `cross-frame`, `euclidean-normal`, `tangent:j`, `const:..`, or expressions.
    #[arg(long = "field", allow_hyphen_values = true)]
    fields: Vec<String>,
    /// Intensity: `random`, `edge:<side>`, a number, or an expression.
    #[arg(long, allow_hyphen_values = true)]
    psi: Option<String>,
    #[arg(long)]
    h_t: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct VolumeArgs {
    /// Vectors as rows separated by `;`.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "input")]
    vectors: Option<String>,
    /// Symmetric matrix, rows separated by `;`.
    #[arg(long, allow_hyphen_values = true)]
    metric: Option<String>,
    /// Record with `vectors` and optional `metric`.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct AcceptanceArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: Output,
}

impl Output {
    fn spec(self) -> OutputSpec {
        OutputSpec { path: self.output, format: self.format }
    }
}

impl ProblemArgs {
    fn fill(self, cfg: &mut RunConfig) {
        cfg.lagrangian = Some(self.lagrangian);
        cfg.n = self.dims.n;
        cfg.p = self.dims.p;
        cfg.domain = self.domain;
        cfg.resolution = self.resolution;
        cfg.boundary = self.boundary;
    }
}

fn config(command: Command) -> Result<RunConfig, CliError> {
    Ok(match command {
        Command::Run { config } => RunConfig::from_file(&config)?,
        Command::Frame(a) => RunConfig {
            lagrangian: Some(a.lagrangian),
            n: a.dims.n,
            p: a.dims.p,
            slopes: a.slopes,
            base_point: a.base_point,
            element: a.element,
            convention: a.convention,
            normalize: a.normalize,
            output: a.out.spec(),
            ..RunConfig::new(CommandKind::Frame)
        },
        Command::CheckMinkowski(a) => RunConfig {
            lagrangian: Some(a.lagrangian),
            n: a.n,
            samples: a.samples,
            seed: a.seed,
            output: a.out.spec(),
            ..RunConfig::new(CommandKind::CheckMinkowski)
        },
        Command::Solve(a) => {
            let mut cfg = RunConfig { points: a.points, output: a.out.spec(), ..RunConfig::new(CommandKind::Solve) };
            a.problem.fill(&mut cfg);
            cfg
        }
        Command::Verify(a) => {
            let mut cfg = RunConfig {
                graph: a.graph,
                fields: a.fields,
                psi: a.psi,
                h_t: a.h_t,
                seed: a.seed,
                csv: a.csv,
                output: a.out.spec(),
                ..RunConfig::new(CommandKind::Verify)
            };
            a.problem.fill(&mut cfg);
            cfg
        }
        Command::Volume(a) => RunConfig {
            vectors: a.vectors,
            metric: a.metric,
            input: a.input,
            output: a.out.spec(),
            ..RunConfig::new(CommandKind::Volume)
        },
        Command::Acceptance(a) => {
            RunConfig { seed: a.seed, output: a.out.spec(), ..RunConfig::new(CommandKind::Acceptance) }
        }
    })
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::compute("IoError", format!("{}: {e}", path.display())))
}

fn run(command: Command) -> Result<(), CliError> {
    let cfg = config(command)?;
    let outcome = execute(&cfg)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    match &cfg.output.path {
        Some(path) => write_file(path, &outcome.body)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(outcome.body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::compute("IoError", e.to_string()))?;
        }
    }
    for (path, text) in &outcome.side_files {
        write_file(path, text)?;
    }
    outcome.failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", CliError::config("UsageError", first).line());
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(if e.exit == EXIT_CONFIG { EXIT_CONFIG as u8 } else { EXIT_COMPUTE as u8 })
        }
    }
}
