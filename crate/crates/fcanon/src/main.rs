use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fcanon::commands::{
    self, CliError, CliResult, ConstructConfig, FiberKind, Obstruction, Outcome, Series, Source,
};
use fcanon_core::classes::Class;
use fcanon_core::warped::WarpedParams;

/// Curvature tensors, canonical-class residuals and warped constructions.
#[derive(Debug, Parser)]
#[command(name = "fcanon", version)]
struct Cli {
    /// Emit the report as JSON instead of a table.
    #[arg(long, global = true)]
    json: bool,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GeometryArgs {
    /// Catalog geometry name.
    #[arg(long, conflicts_with = "spec")]
    geometry: Option<String>,
    /// Geometry-spec JSON file.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    /// Soliton constant for catalog geometries that take one.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
}

impl GeometryArgs {
    fn source(&self) -> CliResult<Source> {
        match (&self.geometry, &self.spec) {
            (Some(name), None) => Ok(Source::Catalog {
                name: name.clone(),
                dim: self.dim,
                lambda: self.lambda,
            }),
            (None, Some(path)) => Ok(Source::Spec(path.clone())),
            _ => Err(CliError::Usage(
                "give exactly one of --geometry and --spec".into(),
            )),
        }
    }
}

#[derive(Debug, Args)]
struct WarpedArgs {
    #[arg(long = "dim", default_value_t = 4)]
    n: usize,
    /// Scalar curvature of the fiber.
    #[arg(long, default_value_t = 6.0, allow_hyphen_values = true)]
    k: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    epsilon: f64,
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    c: f64,
    /// Initial offset from the equilibrium, as a fraction of it.
    #[arg(long, default_value_t = 0.01)]
    amplitude: f64,
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
}

impl WarpedArgs {
    fn config(&self) -> ConstructConfig {
        ConstructConfig {
            params: WarpedParams {
                n: self.n,
                k: self.k,
                epsilon: self.epsilon,
                c: self.c,
            },
            amplitude: self.amplitude,
            step: self.step,
            ..ConstructConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FiberArg {
    Auto,
    SphereHyperbolic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WhichArg {
    KazdanWarner,
    Bochner,
    NongradientKw,
    Signature,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SeriesArg {
    Phi,
    Q,
    Warp,
    Denominator,
    ExplicitUnweighted,
}

fn parse_class(s: &str) -> Result<Class, String> {
    Class::from_str(s).map_err(|e| e.to_string())
}

fn parse_point(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| format!("`{c}`: {e}")))
        .collect()
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dump every curvature, potential and vector-field tensor at one point.
    Tensors {
        #[command(flatten)]
        geometry: GeometryArgs,
        /// Comma-separated coordinates; defaults to the first seeded sample.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        point: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Membership verdicts; without --class, the whole lattice.
    Classify {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long = "class", value_parser = parse_class)]
        classes: Vec<Class>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        count: usize,
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
    },
    /// Curvature identity suite at seeded points.
    Identities {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        count: usize,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
    /// Build and verify a warped solution of the weighted harmonic-curvature equation.
    Construct {
        #[command(flatten)]
        warped: WarpedArgs,
        #[arg(long, value_enum, default_value_t = FiberArg::Auto)]
        fiber: FiberArg,
        /// Verify the closed-form Gaussian example instead.
        #[arg(long)]
        explicit: bool,
        /// Nodes at which the assembled metric is checked.
        #[arg(long, default_value_t = 16)]
        count: usize,
        #[arg(long, default_value_t = 1e-5)]
        threshold: f64,
        /// Also write the solution data as JSON.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Integral identities on compact model spaces.
    Obstruction {
        #[arg(long, value_enum)]
        which: WhichArg,
        /// Sphere dimension.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Gauss-Legendre nodes per axis.
        #[arg(long, default_value_t = 64)]
        nodes: usize,
        /// Geometry for the signature check.
        #[arg(long)]
        geometry: Option<String>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        count: usize,
    },
    /// Two-column `t value` data for external plotting.
    Plot {
        #[arg(long, value_enum)]
        series: SeriesArg,
        #[command(flatten)]
        warped: WarpedArgs,
    },
}

enum Output {
    Report(Outcome),
    Text(String),
}

fn run(cli: &Cli) -> CliResult<Output> {
    let load = |g: &GeometryArgs| commands::load_geometry(&g.source()?);
    Ok(match &cli.command {
        Command::Tensors {
            geometry,
            point,
            depth,
            seed,
        } => Output::Report(commands::tensors(
            &load(geometry)?,
            point.clone(),
            *depth,
            *seed,
        )?),
        Command::Classify {
            geometry,
            classes,
            seed,
            count,
            threshold,
        } => Output::Report(commands::classify(
            &load(geometry)?,
            classes,
            *seed,
            *count,
            *threshold,
        )?),
        Command::Identities {
            geometry,
            seed,
            count,
            depth,
        } => Output::Report(commands::identities(
            &load(geometry)?,
            *seed,
            *count,
            *depth,
        )?),
        Command::Construct {
            warped,
            fiber,
            explicit,
            count,
            threshold,
            solution,
        } => {
            let cfg = ConstructConfig {
                fiber: match fiber {
                    FiberArg::Auto => FiberKind::Auto,
                    FiberArg::SphereHyperbolic => FiberKind::SphereHyperbolic,
                },
                explicit: *explicit,
                count: *count,
                threshold: *threshold,
                ..warped.config()
            };
            let (outcome, sol) = commands::construct(&cfg)?;
            if let (Some(path), Some(sol)) = (solution, sol) {
                write(
                    path,
                    &serde_json::to_string_pretty(&sol).expect("serializes"),
                )?;
            }
            Output::Report(outcome)
        }
        Command::Obstruction {
            which,
            dim,
            nodes,
            geometry,
            seed,
            count,
        } => {
            let which = match which {
                WhichArg::KazdanWarner => Obstruction::KazdanWarner,
                WhichArg::Bochner => Obstruction::Bochner,
                WhichArg::NongradientKw => Obstruction::NongradientKw,
                WhichArg::Signature => Obstruction::Signature,
            };
            let entry = match geometry {
                Some(name) => Some(commands::load_geometry(&Source::Catalog {
                    name: name.clone(),
                    dim: None,
                    lambda: None,
                })?),
                None => None,
            };
            Output::Report(commands::obstruction(
                which,
                *dim,
                *nodes,
                entry.as_ref(),
                *seed,
                *count,
            )?)
        }
        Command::Plot { series, warped } => {
            let series = match series {
                SeriesArg::Phi => Series::Phi,
                SeriesArg::Q => Series::Q,
                SeriesArg::Warp => Series::Warp,
                SeriesArg::Denominator => Series::Denominator,
                SeriesArg::ExplicitUnweighted => Series::ExplicitUnweighted,
            };
            Output::Text(commands::plot(series, &warped.config())?)
        }
    })
}

fn write(path: &PathBuf, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|out| {
        let (text, passed) = match out {
            Output::Report(o) if cli.json => (
                serde_json::to_string_pretty(&o.report).expect("serializes") + "\n",
                o.passed,
            ),
            Output::Report(o) => (o.text, o.passed),
            Output::Text(t) => (t, true),
        };
        match &cli.out {
            Some(path) => write(path, &text)?,
            None => print!("{text}"),
        }
        Ok(passed)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}
