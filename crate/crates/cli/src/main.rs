use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sphquant_cli::{run, CliError, ExperimentSpec, Recipe};

#[derive(Parser)]
#[command(name = "sphquant", version, about = "Random quantiser experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact expected distortion over a grid.
    Distortion(Grid),
    /// Optimal parameter and distortion over a grid.
    Optimize(Grid),
    /// Extreme-value approximation: kappa, optimal radius, distortion.
    Evt(Grid),
    /// Bounds on kappa.
    Bounds(Grid),
    /// Monte Carlo estimate next to the exact value.
    Mc(Grid),
    /// Smallest n at which family-b beats family-a.
    Crossover(Grid),
    /// Optimal factorial designs.
    Factorial(Grid),
    /// Regenerate a named figure grid.
    Figure(Grid),
    /// Run a JSON experiment file.
    Run {
        #[arg(long)]
        spec: PathBuf,
    },
}

/// Grid flags. Lists are comma separated or lo:hi[:step].
#[derive(Args)]
struct Grid {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    param: Option<String>,
    #[arg(long)]
    radius: Option<String>,
    #[arg(long = "rel-tol")]
    rel_tol: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    batches: Option<String>,
    #[arg(long = "n-hi")]
    n_hi: Option<String>,
    #[arg(long = "family-a")]
    family_a: Option<String>,
    #[arg(long = "family-b")]
    family_b: Option<String>,
    #[arg(long)]
    name: Option<String>,
}

impl Grid {
    fn into_spec(self, recipe: Recipe) -> ExperimentSpec {
        let pairs = [
            ("d", self.d),
            ("n", self.n),
            ("s", self.s),
            ("target", self.target),
            ("family", self.family),
            ("param", self.param),
            ("radius", self.radius),
            ("rel-tol", self.rel_tol),
            ("tol", self.tol),
            ("samples", self.samples),
            ("batches", self.batches),
            ("n-hi", self.n_hi),
            ("family-a", self.family_a),
            ("family-b", self.family_b),
            ("name", self.name),
        ];
        let params: BTreeMap<String, String> = pairs
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
            .collect();
        ExperimentSpec {
            recipe,
            params,
            output: self.out,
            seed: self.seed,
        }
    }
}

fn load(path: &PathBuf) -> Result<ExperimentSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid {
        key: "spec".into(),
        message: e.to_string(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let spec = match cli.command {
        Command::Distortion(g) => Ok(g.into_spec(Recipe::Distortion)),
        Command::Optimize(g) => Ok(g.into_spec(Recipe::Optimize)),
        Command::Evt(g) => Ok(g.into_spec(Recipe::Evt)),
        Command::Bounds(g) => Ok(g.into_spec(Recipe::Bounds)),
        Command::Mc(g) => Ok(g.into_spec(Recipe::Mc)),
        Command::Crossover(g) => Ok(g.into_spec(Recipe::Crossover)),
        Command::Factorial(g) => Ok(g.into_spec(Recipe::Factorial)),
        Command::Figure(g) => Ok(g.into_spec(Recipe::Figure)),
        Command::Run { spec } => load(&spec),
    };
    match spec.and_then(|s| run(&s)) {
        Ok(summary) => {
            eprintln!(
                "wrote {} rows to {} ({:.2} s)",
                summary.rows,
                summary.csv.display(),
                summary.wall_time_s
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
