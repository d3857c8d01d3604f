//! `waistlab`: reproducible verification runs from the command line.
//!
//! Exit codes: 0 pass (or indeterminate without `--strict`), 1 fail,
//! 2 usage error, 3 numerical failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use waistlab::{Error, Status, VerificationReport};

#[derive(Parser, Debug)]
#[command(name = "waistlab", version, about = "Convex geometry and waist-inequality verification runs")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Master seed; every sub-computation derives its own stream from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Monte-Carlo sample budget per estimate.
    #[arg(long, global = true, default_value_t = 200_000)]
    pub budget: usize,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Treat indeterminate checks as failures.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Deterministic tensor-grid integration (dimension ≤ 3).
    #[arg(long, global = true)]
    pub quadrature: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Volume of a body, exact where a closed form exists.
    Volume(BodyArg),
    /// Isotropic position and isotropic constant of the uniform measure.
    Isotropic(BodyArg),
    /// Gaussian M-position of a body.
    Mposition {
        #[command(flatten)]
        body: BodyArg,
        /// Symmetrize over the hyperoctahedral group (for boxes centred at a point).
        #[arg(long)]
        symmetric: bool,
    },
    /// ψ_α probe of the uniform measure on a body.
    Psi {
        #[command(flatten)]
        body: BodyArg,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 64)]
        directions: usize,
        /// Moment orders, comma separated.
        #[arg(long)]
        pgrid: Option<String>,
    },
    /// Ball's body K(μ) of the uniform measure on a symmetric body, or of a Gaussian.
    Ballbody {
        /// Body (recentred at its center of symmetry) or `gaussianN`.
        #[arg(long)]
        body: String,
        #[arg(long, default_value_t = 64)]
        directions: usize,
    },
    /// Waist check: Gaussian, box, or symmetric-body variant depending on --body.
    Waist(WaistArgs),
    /// Section theorem: largest fiber content times largest section against volume.
    Section(WaistArgs),
    /// Dyadic equipartition by hyperplane bisections, with an independent recount.
    Partition {
        /// Body (uniform measure) or `gaussianN`.
        #[arg(long)]
        body: String,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        /// Relative tolerance for every cell.
        #[arg(long, default_value_t = 0.01)]
        tolerance: f64,
        /// Save the tree document here.
        #[arg(long)]
        tree_out: Option<PathBuf>,
        /// Recount a saved tree instead of building one.
        #[arg(long)]
        recount: Option<PathBuf>,
    },
    /// Peak property of a density on ℝ^ℓ against the Gaussian profile.
    Peak {
        /// `gaussian`, `tilted:c` (density ∝ e^{−x²/2 − c·x₁}) or `truncated:a,b` (ℓ = 1).
        #[arg(long, default_value = "gaussian")]
        density: String,
        #[arg(long, default_value_t = 1)]
        ell: usize,
        #[arg(long)]
        rgrid: Option<String>,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
    },
    /// Spingarn-type inequality for the uniform measure on a body.
    Spingarn {
        #[command(flatten)]
        body: BodyArg,
        /// The body V; defaults to the measure's body.
        #[arg(long)]
        v: Option<String>,
        #[arg(long)]
        rgrid: Option<String>,
    },
    /// The acceptance suite.
    Suite {
        /// `quick` or `desk`.
        #[arg(long, default_value = "desk")]
        level: String,
        /// Criteria to run, comma separated (default all).
        #[arg(long)]
        criteria: Option<String>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct BodyArg {
    /// Builtin (cubeN, ballN(r), boxN(λ…), simplexN) or a body file.
    #[arg(long)]
    pub body: String,
}

#[derive(Args, Debug, Clone)]
pub struct WaistArgs {
    /// Builtin body, body file, or `gaussianN` for the Gaussian check.
    #[arg(long)]
    pub body: String,
    /// Map registry id, e.g. `coord:1`, `linear:[[1,2,0]]`, `sqnorm`.
    #[arg(long)]
    pub map: String,
    /// Target dimension of the map; checked against it.
    #[arg(long)]
    pub ell: Option<usize>,
    /// Tube radii, comma separated and decreasing.
    #[arg(long)]
    pub eps: Option<String>,
    /// Radii for Gaussian and symmetric-body checks, comma separated.
    #[arg(long)]
    pub rgrid: Option<String>,
    /// Levels, `;` between levels and `,` between coordinates.
    #[arg(long)]
    pub tgrid: Option<String>,
    /// Random flats in the section search.
    #[arg(long, default_value_t = 64)]
    pub flats: usize,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let command_line = argv[1..].join(" ");
    let start = Instant::now();
    let mut report = VerificationReport::new(command_line, cli.common.seed);
    if let Err(e) = commands::run(&cli, &mut report) {
        eprintln!("waistlab: {e}");
        return ExitCode::from(error_code(&e));
    }
    report.wall_time_seconds = start.elapsed().as_secs_f64();
    let doc = report.to_json();
    match &cli.common.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, doc + "\n") {
                eprintln!("waistlab: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
            eprintln!("{}: {:?}", path.display(), report.status);
        }
        None => println!("{doc}"),
    }
    ExitCode::from(status_code(report.status, cli.common.strict))
}

fn error_code(e: &Error) -> u8 {
    if e.is_usage() {
        2
    } else {
        3
    }
}

fn status_code(s: Status, strict: bool) -> u8 {
    match s {
        Status::Pass | Status::Skipped => 0,
        Status::Indeterminate if !strict => 0,
        _ => 1,
    }
}
