mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dsmetric::am::AmError;
use dsmetric::cantor::CantorError;
use dsmetric::discretize::DiscretizeError;
use dsmetric::io::IoError;
use dsmetric::metric::MetricError;
use dsmetric::pipelines::ManifoldError;
use dsmetric::quotient::QuotientError;
use dsmetric::relation::RelationError;
use dsmetric::sft::SftError;

#[derive(Parser)]
#[command(name = "dsmetric", version, about = "Distances between finite dynamical systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Out {
    /// Write the JSON result here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Pair {
    #[arg(long = "f")]
    f: PathBuf,
    #[arg(long = "g")]
    g: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DocKind {
    Space,
    Relation,
    Tree,
    TreeSystem,
    Manifold,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fixture {
    Circle,
    Torus,
}

#[derive(Subcommand)]
enum Command {
    /// Check a metric space, relation, tree or manifold document.
    Validate {
        #[arg(long)]
        input: PathBuf,
        /// Document kind; guessed from its keys when omitted.
        #[arg(long = "as")]
        kind: Option<DocKind>,
    },
    /// Hausdorff distance between two index sets of one space, or between two
    /// Euclidean point sets.
    Hausdorff {
        #[arg(long, requires_all = ["a", "b"], conflicts_with_all = ["x", "y"])]
        space: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        a: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        b: Vec<usize>,
        #[arg(long, requires = "y")]
        x: Option<PathBuf>,
        #[arg(long, requires = "x")]
        y: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
    /// Distance between two relations on one space.
    Ds {
        #[command(flatten)]
        pair: Pair,
        #[command(flatten)]
        out: Out,
    },
    /// Finite relation on an ε-net within ε of the input.
    Discretize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the certificate here.
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Lift a relation to the shift on depth-n cylinders placed within ε.
    Sft {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long, default_value_t = 1)]
        bits: u32,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = dsmetric::sft::DEFAULT_BUDGET)]
        budget: u64,
        #[command(flatten)]
        out: Out,
    },
    /// Leaf bijection between two Cantor trees by clopen-partition matching.
    CantorMatch {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        delta: f64,
        #[command(flatten)]
        out: Out,
    },
    /// Leaf maps h₁, h₂ with h₂∘g = j∘h₁ for close leaf bijections g and j.
    ConjugatePair {
        /// Tree system `{"tree": ..., "map": [...]}` carrying g.
        #[arg(long)]
        a: PathBuf,
        /// Tree system carrying j.
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        delta: f64,
        #[command(flatten)]
        out: Out,
    },
    /// Bracket the distance between isometric-conjugacy classes.
    Dgh {
        #[command(flatten)]
        pair: Pair,
        /// Use rigid motions of the common Euclidean space for the upper bound.
        #[arg(long)]
        euclidean: bool,
        #[arg(long, default_value_t = dsmetric::quotient::DEFAULT_SEARCH_BUDGET)]
        budget: u64,
        #[command(flatten)]
        out: Out,
    },
    /// C⁰ Gromov-Hausdorff distance between two maps.
    Am {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value_t = dsmetric::am::DEFAULT_AM_BUDGET)]
        budget: u64,
        #[command(flatten)]
        out: Out,
    },
    /// Approximate a sampled manifold map by a shift on a Cantor sample.
    ManifoldApprox {
        #[arg(long, required_unless_present = "fixture", conflicts_with = "fixture")]
        input: Option<PathBuf>,
        #[arg(long)]
        fixture: Option<Fixture>,
        /// Grid size of the fixture (points on the circle, side of the torus).
        #[arg(long)]
        size: Option<usize>,
        /// Grid steps of the circle rotation.
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long, default_value_t = 1)]
        bits: u32,
        #[command(flatten)]
        out: Out,
    },
    /// D(xⁿ, limit) on sampled graphs.
    RegressPower {
        #[arg(long = "n", value_delimiter = ',', default_values_t = [1u32, 4, 20, 100, 200])]
        ns: Vec<u32>,
        #[arg(long, default_value_t = dsmetric::pipelines::POWER_GRID)]
        grid: usize,
        #[command(flatten)]
        out: Out,
    },
    /// Fiber diameters, chain components and isolated points.
    Diagnose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long = "r", value_delimiter = ',', required = true)]
        scales: Vec<f64>,
        #[command(flatten)]
        out: Out,
    },
}

/// Exit status of a failed run.
fn exit_code(err: &anyhow::Error) -> u8 {
    const VALIDATION: u8 = 2;
    const BUDGET: u8 = 3;
    let sft = |e: &SftError| match e {
        SftError::BudgetExceeded { .. } | SftError::DepthOverflow { .. } => BUDGET,
        SftError::CertificateFailed { .. } => 1,
        _ => VALIDATION,
    };
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<IoError>() {
            return match e {
                IoError::Read { .. } => 1,
                IoError::Manifold { error: ManifoldError::Sft(s), .. } => sft(s),
                _ => VALIDATION,
            };
        }
        if let Some(e) = cause.downcast_ref::<QuotientError>() {
            return if matches!(e, QuotientError::BudgetExceeded(_)) { BUDGET } else { VALIDATION };
        }
        if let Some(e) = cause.downcast_ref::<SftError>() {
            return sft(e);
        }
        if let Some(e) = cause.downcast_ref::<ManifoldError>() {
            return match e {
                ManifoldError::Sft(s) => sft(s),
                ManifoldError::CertificateFailed { .. } => 1,
                _ => VALIDATION,
            };
        }
        if let Some(e) = cause.downcast_ref::<DiscretizeError>() {
            return match e {
                DiscretizeError::NonpositiveEpsilon(_) | DiscretizeError::NotDecreasing { .. } => VALIDATION,
                _ => 1,
            };
        }
        if let Some(e) = cause.downcast_ref::<CantorError>() {
            return match e {
                CantorError::RefinementImpossible { .. } | CantorError::NoMatchingBelowDelta { .. } => 1,
                _ => VALIDATION,
            };
        }
        if cause.is::<AmError>() || cause.is::<RelationError>() || cause.is::<MetricError>() || cause.is::<commands::Usage>() {
            return VALIDATION;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(commands::Outcome::Complete) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Partial) => {
            eprintln!("budget exhausted: result is partial");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
