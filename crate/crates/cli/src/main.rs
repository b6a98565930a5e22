//! `trcsp`: command-line driver for the threshold-rank CSP solver.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use trcsp::generate::{admissible_pair, generate, GenSpec};
use trcsp::io::{instance_to_json, parse_graph, parse_json, parse_instance, parse_matrix, to_canonical_json, Graph};
use trcsp::net::DEFAULT_NET_CAP;
use trcsp::sdp::SdpSettings;
use trcsp::solver::{SolveOptions, SolveReport, Solver};
use trcsp::spectral::{eig_sym, rank_certificate, verify_rank_bound, BoundParams, EigMode, Side};
use trcsp::{Error, SymMatrix};

#[derive(Parser)]
#[command(name = "trcsp", version, about = "Approximate 2CSPs, MAX-CUT and Boolean quadratic programs on low threshold rank instances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a 2CSP given as instance JSON.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Solve MAX-CUT on a graph in `n m` / `u v` edge-list form.
    Maxcut {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Maximize xᵀAx over x in {±1}^n for A given as {"matrix": [[...]]}.
    Quadratic {
        #[arg(long)]
        matrix: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Threshold ranks of a normalized adjacency matrix.
    Rank(RankArgs),
    /// Generate a random instance.
    Gen(GenArgs),
    /// Check the signed threshold-rank bound on random admissible pairs.
    VerifyRankBound {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest dimension of A in a trial.
        #[arg(long, default_value_t = 40)]
        n_max: usize,
        /// Block size of B; 0 draws q from {1, 2, 3} per trial.
        #[arg(long, default_value_t = 0)]
        q: usize,
    },
    /// Build and measure the threshold-rank witness.
    Certify {
        /// JSON {"a": [[...]], "b": [[...]], "lambda": x, "t": n}; without it,
        /// random inputs are checked.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 40)]
        n_max: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Approximation parameter in (0, 1).
    #[arg(long, default_value_t = 0.2)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Threads used for the per-net-point SDP solves and rounding.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Refuse nets with more points than this.
    #[arg(long, default_value_t = DEFAULT_NET_CAP)]
    net_cap: u64,
    /// Rounding samples per net point [default: max(16, ceil(4/eps))].
    #[arg(long)]
    samples: Option<usize>,
    /// Also compute OPT by exhaustive search (small instances only).
    #[arg(long)]
    oracle: bool,
    /// Write the JSON report here; otherwise it goes to stdout and the
    /// summary to stderr.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dense eigendecomposition for the top eigenspace (default).
    #[arg(long, conflicts_with = "power_eig")]
    exact_eig: bool,
    /// Block power iteration for the top eigenspace.
    #[arg(long)]
    power_eig: bool,
    /// Record per-phase wall-clock times (reports are then not reproducible).
    #[arg(long)]
    timings: bool,
    /// Interior-point iteration cap per SDP phase.
    #[arg(long, default_value_t = SdpSettings::default().max_iter)]
    max_iter: usize,
    /// Relative primal/dual infeasibility target.
    #[arg(long, default_value_t = SdpSettings::default().tol_feas)]
    tol_feas: f64,
    /// Relative duality gap target.
    #[arg(long, default_value_t = SdpSettings::default().tol_gap)]
    tol_gap: f64,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long, conflicts_with = "instance", required_unless_present = "instance")]
    graph: Option<PathBuf>,
    /// Use the constraint graph of an instance.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Use the (1/q)-scaled normalized label-extended matrix of the instance.
    #[arg(long, requires = "instance")]
    label_extended: bool,
    #[arg(long, default_value_t = 0.25)]
    tau: f64,
    /// Print only the count on this side.
    #[arg(long, value_enum)]
    side: Option<SideArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Pos,
    Neg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    RandomRegular,
    CompleteBipartiteNoise,
    PlantedAssignment,
    RandomCsp,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Degree for random-regular.
    #[arg(long)]
    d: Option<usize>,
    /// Side sizes for complete-bipartite-noise.
    #[arg(long)]
    a: Option<usize>,
    #[arg(long)]
    b: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit the MAX-CUT edge-list format instead of instance JSON.
    #[arg(long)]
    graph_format: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure with its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NetTooLarge { .. } | Error::TooLargeForOracle { .. } => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn fail(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

type CliResult = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(format!("cannot read {}: {e}", path.display())))
}

fn check_out(path: Option<&PathBuf>) -> Result<(), Failure> {
    if let Some(p) = path {
        let parent = p.parent().filter(|d| !d.as_os_str().is_empty());
        if let Some(dir) = parent {
            if !dir.is_dir() {
                return Err(fail(format!("output directory {} does not exist", dir.display())));
            }
        }
    }
    Ok(())
}

fn write_out(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| fail(format!("cannot write {}: {e}", path.display())))
}

impl RunArgs {
    fn options(&self) -> Result<SolveOptions, Failure> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(fail(format!("--eps must lie in (0, 1), got {}", self.eps)));
        }
        if self.workers == 0 {
            return Err(fail("--workers must be at least 1"));
        }
        if self.samples == Some(0) {
            return Err(fail("--samples must be at least 1"));
        }
        check_out(self.out.as_ref())?;
        Ok(SolveOptions {
            eig: if self.power_eig {
                EigMode::Power { seed: self.seed }
            } else {
                EigMode::Exact
            },
            workers: self.workers,
            net_cap: self.net_cap,
            samples: self.samples,
            oracle: self.oracle,
            sdp: SdpSettings {
                max_iter: self.max_iter,
                tol_feas: self.tol_feas,
                tol_gap: self.tol_gap,
                ..SdpSettings::default()
            },
            timings: self.timings,
        })
    }

    fn emit(&self, report: &SolveReport) -> CliResult {
        let json = to_canonical_json(report)?;
        let summary = report.summary();
        match &self.out {
            Some(path) => {
                write_out(path, &json)?;
                println!("{summary}");
            }
            None => {
                print!("{json}");
                eprintln!("{summary}");
            }
        }
        if self.oracle && report.opt.is_none() {
            eprintln!("note: instance too large for the exhaustive oracle; OPT not computed");
        }
        if report.fallback {
            eprintln!("warning: no net point was solved; reporting the best of 100 uniform assignments");
            return Ok(3);
        }
        Ok(0)
    }
}

fn cmd_solve(instance: &Path, run: &RunArgs) -> CliResult {
    let options = run.options()?;
    let inst = parse_instance(&read(instance)?)?;
    let report = Solver::csp(&inst, run.eps, options)?.solve(run.seed);
    run.emit(&report)
}

fn cmd_maxcut(graph: &Path, run: &RunArgs) -> CliResult {
    let options = run.options()?;
    let g = parse_graph(&read(graph)?)?;
    let report = Solver::maxcut(&g, run.eps, options)?.solve(run.seed);
    run.emit(&report)
}

fn cmd_quadratic(matrix: &Path, run: &RunArgs) -> CliResult {
    let options = run.options()?;
    let a = parse_matrix(&read(matrix)?)?;
    let report = Solver::quadratic(&a, run.eps, options)?.solve(run.seed);
    run.emit(&report)
}

#[derive(Serialize)]
struct RankReport {
    tau: f64,
    pos: usize,
    neg: usize,
    spectrum_extremes: [f64; 2],
}

fn cmd_rank(args: &RankArgs) -> CliResult {
    if !(args.tau > 0.0 && args.tau.is_finite()) {
        return Err(fail(format!("--tau must be positive, got {}", args.tau)));
    }
    let matrix: SymMatrix = match (&args.graph, &args.instance) {
        (Some(g), _) => parse_graph(&read(g)?)?.to_instance().normalized_adjacency()?,
        (None, Some(i)) => {
            let inst = parse_instance(&read(i)?)?;
            if args.label_extended {
                inst.normalized_label_extended()?.0
            } else {
                inst.normalized_adjacency()?
            }
        }
        (None, None) => return Err(fail("one of --graph or --instance is required")),
    };
    let spec = eig_sym(&matrix);
    let pos = spec.threshold_rank(args.tau, Side::Pos)?;
    let neg = spec.threshold_rank(args.tau, Side::Neg)?;
    match args.side {
        Some(SideArg::Pos) => println!("{pos}"),
        Some(SideArg::Neg) => println!("{neg}"),
        None => print!(
            "{}",
            to_canonical_json(&RankReport {
                tau: args.tau,
                pos,
                neg,
                spectrum_extremes: [spec.max(), spec.min()],
            })?
        ),
    }
    Ok(0)
}

fn need(v: Option<usize>, flag: &str) -> Result<usize, Failure> {
    v.ok_or_else(|| fail(format!("--{flag} is required for this kind")))
}

fn cmd_gen(args: &GenArgs) -> CliResult {
    check_out(args.out.as_ref())?;
    let spec = match args.kind {
        Kind::RandomRegular => GenSpec::RandomRegular {
            n: need(args.n, "n")?,
            d: need(args.d, "d")?,
        },
        Kind::CompleteBipartiteNoise => GenSpec::CompleteBipartiteNoise {
            a: need(args.a, "a")?,
            b: need(args.b, "b")?,
            rho: args.rho,
        },
        Kind::PlantedAssignment => GenSpec::PlantedAssignment {
            n: need(args.n, "n")?,
            q: need(args.q, "q")?,
            m: need(args.m, "m")?,
        },
        Kind::RandomCsp => GenSpec::RandomCsp {
            n: need(args.n, "n")?,
            q: need(args.q, "q")?,
            m: need(args.m, "m")?,
            density: args.density,
        },
    };
    let generated = generate(&spec, args.seed)?;
    let text = if args.graph_format {
        Graph::from_instance(&generated.instance)?.to_text()
    } else {
        instance_to_json(&generated.instance)?
    };
    match &args.out {
        Some(p) => write_out(p, &text)?,
        None => print!("{text}"),
    }
    if let Some(hidden) = &generated.planted {
        eprintln!("planted assignment: {hidden:?}");
    }
    Ok(0)
}

fn cmd_verify_rank_bound(trials: usize, seed: u64, n_max: usize, q: usize) -> CliResult {
    if n_max < 2 {
        return Err(fail("--n-max must be at least 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = [(0.25, 0.25, 0.5), (0.09, 0.09, 0.3)];
    let mut violations = 0;
    for trial in 0..trials {
        let n = rng.random_range(2..=n_max);
        let q = if q == 0 { rng.random_range(1..=3) } else { q };
        let (a, b) = admissible_pair(n, q, rng.random())?;
        for &(tau, sigma, eps) in &params {
            let r = verify_rank_bound(&a, &b, &BoundParams { tau, sigma, eps: Some(eps) })?;
            if !r.all_hold() {
                violations += 1;
                eprintln!("trial {trial}: violation {}", serde_json::to_string(&r).unwrap_or_default());
            }
        }
    }
    println!("trials: {trials}");
    println!("violations: {violations}");
    Ok(if violations == 0 { 0 } else { 1 })
}

#[derive(Deserialize)]
struct CertifyInput {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    lambda: f64,
    t: usize,
}

fn cmd_certify(input: Option<&PathBuf>, trials: usize, seed: u64, n_max: usize) -> CliResult {
    if let Some(path) = input {
        let parsed: CertifyInput = parse_json(&read(path)?)?;
        let a = SymMatrix::from_rows(&parsed.a)?;
        let b = SymMatrix::from_rows(&parsed.b)?;
        let r = rank_certificate(&a, &b, parsed.lambda, parsed.t)?;
        print!("{}", to_canonical_json(&r)?);
        return Ok(if r.pass() { 0 } else { 1 });
    }
    if n_max < 2 {
        return Err(fail("--n-max must be at least 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for trial in 0..trials {
        let n = rng.random_range(2..=n_max);
        let (a, b) = admissible_pair(n, 1, rng.random())?;
        let spectrum = eig_sym(&b).eigenvalues;
        let nonneg = spectrum.iter().take_while(|&&l| l >= 0.0).count();
        if nonneg == 0 {
            continue;
        }
        let t = rng.random_range(1..=nonneg.min(4));
        let lambda = spectrum[t - 1];
        let r = rank_certificate(&a, &b, lambda, t)?;
        if !r.pass() {
            violations += 1;
            eprintln!("trial {trial}: {}", serde_json::to_string(&r).unwrap_or_default());
        }
    }
    println!("trials: {trials}");
    println!("violations: {violations}");
    Ok(if violations == 0 { 0 } else { 1 })
}

fn run(cli: Cli) -> CliResult {
    match &cli.command {
        Command::Solve { instance, run } => cmd_solve(instance, run),
        Command::Maxcut { graph, run } => cmd_maxcut(graph, run),
        Command::Quadratic { matrix, run } => cmd_quadratic(matrix, run),
        Command::Rank(args) => cmd_rank(args),
        Command::Gen(args) => cmd_gen(args),
        Command::VerifyRankBound {
            trials,
            seed,
            n_max,
            q,
        } => cmd_verify_rank_bound(*trials, *seed, *n_max, *q),
        Command::Certify {
            input,
            trials,
            seed,
            n_max,
        } => cmd_certify(input.as_ref(), *trials, *seed, *n_max),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
