use std::io::{self, Read, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sandwich_core::oracle::{differential_suite, RandomClusterSpec};
use sandwich_core::report::{self, Format, Report};
use sandwich_core::scene::{parse_scene, Scene};
use sandwich_core::Error;

/// Complete ideals, unloading and sandwiched singularities from scene files.
#[derive(Debug, Parser)]
#[command(name = "sandwich", version)]
struct Cli {
    #[arg(long, value_enum, default_value_t = OutputFormat::Text, global = true)]
    format: OutputFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Records,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and check a scene.
    Validate { scene: String },
    /// Unload the ideal's weights, optionally keeping some values fixed.
    Unload {
        scene: String,
        /// Comma-separated point ids whose values stay fixed.
        #[arg(long, value_delimiter = ',')]
        fixed: Vec<String>,
    },
    /// Factor the ideal into simple complete ideals.
    Factorize { scene: String },
    /// Dicritical points, exceptional components and singularities.
    Surface { scene: String },
    /// Whether the strict transform of a curve is Cartier.
    Cartier {
        scene: String,
        #[arg(long)]
        curve: String,
    },
    /// Principality of a curve near one singularity.
    Local {
        scene: String,
        #[arg(long)]
        curve: String,
        /// Singularity label, or the id of its minimal point.
        #[arg(long)]
        sing: String,
    },
    /// The flag of clusters of a curve.
    Flag {
        scene: String,
        #[arg(long)]
        curve: String,
        /// Excesses on the dicritical points, as `p=m,...`.
        #[arg(long)]
        excess: Option<String>,
    },
    /// Order of singularity of the strict transform.
    Delta {
        scene: String,
        #[arg(long)]
        curve: String,
    },
    /// Value semigroup of a branch at the point it meets.
    Semigroup {
        scene: String,
        #[arg(long)]
        branch: String,
    },
    /// Intersection of two strict transforms.
    Intersect {
        scene: String,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Everything computable from the scene.
    Report { scene: String },
    /// Run the randomized differential suites.
    Selfcheck {
        /// Number of seeds per suite.
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        /// First seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        max_points: usize,
    },
}

fn read_scene(path: &str) -> Result<Scene, String> {
    let text = if path == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| format!("reading stdin: {e}"))?;
        s
    } else {
        std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?
    };
    parse_scene(&text).map_err(|e| format!("{path}: {e}"))
}

enum Failure {
    Input(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_internal() {
            Failure::Internal(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

fn with_scene(path: &str, f: impl FnOnce(&Scene) -> Result<Report, Error>) -> Result<Report, Failure> {
    let scene = read_scene(path).map_err(Failure::Input)?;
    Ok(f(&scene)?)
}

fn run(command: Command) -> Result<(Report, bool), Failure> {
    let report = match command {
        Command::Validate { scene } => with_scene(&scene, report::validate_report)?,
        Command::Unload { scene, fixed } => with_scene(&scene, |s| report::unload_report(s, &fixed))?,
        Command::Factorize { scene } => with_scene(&scene, report::factorize_report)?,
        Command::Surface { scene } => with_scene(&scene, report::surface_report)?,
        Command::Cartier { scene, curve } => with_scene(&scene, |s| report::cartier_report(s, &curve))?,
        Command::Local { scene, curve, sing } => {
            with_scene(&scene, |s| report::local_report(s, &curve, &sing))?
        }
        Command::Flag { scene, curve, excess } => {
            with_scene(&scene, |s| report::flag_report(s, &curve, excess.as_deref()))?
        }
        Command::Delta { scene, curve } => with_scene(&scene, |s| report::delta_report(s, &curve))?,
        Command::Semigroup { scene, branch } => with_scene(&scene, |s| report::semigroup_report(s, &branch))?,
        Command::Intersect { scene, a, b } => with_scene(&scene, |s| report::intersect_report(s, &a, &b))?,
        Command::Report { scene } => with_scene(&scene, report::full_report)?,
        Command::Selfcheck {
            seeds,
            seed,
            max_points,
        } => {
            let list: Vec<u64> = (seed..seed.saturating_add(seeds)).collect();
            let spec = RandomClusterSpec {
                max_points: max_points.max(1),
                ..RandomClusterSpec::default()
            };
            let result = differential_suite(&list, &spec);
            let mut r = Report::new();
            for s in &result.suites {
                let key = s.name.replace(' ', "_");
                r.push(format!("{key}.passed"), s.passed);
                r.push(format!("{key}.failed"), s.failures.len());
                r.push(format!("{key}.inconclusive"), s.inconclusive);
            }
            if !result.all_passed() {
                eprint!("{}", result.render());
            }
            return Ok((r, result.all_passed()));
        }
    };
    Ok((report, true))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let format = match cli.format {
        OutputFormat::Text => Format::Text,
        OutputFormat::Records => Format::Records,
    };
    match run(cli.command) {
        Ok((report, ok)) => {
            let mut out = io::stdout().lock();
            let _ = out.write_all(report.render(format).as_bytes());
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}
