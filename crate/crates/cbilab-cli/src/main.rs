//! `cbilab` — command-line front end for the CBI toolkit.
//!
//! Exit codes: 0 success, 1 validation error (machine-readable JSON on
//! stderr), 2 failed verification tolerance on `mc` runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use cbilab::discrete::{conditioned_gw, simulate_gwi_direct, DiscreteLaw, GwiConfig};
use cbilab::ivp::{solve_euler, solve_exact};
use cbilab::mechanisms::{classify_explosion_with, BranchingMechanism, ImmigrationMechanism};
use cbilab::montecarlo::{
    gwi_scaling_experiment, pitman_experiment, simulate_cbi_path, verify_extinction,
    verify_laplace, GwiScalingConfig, PitmanConfig, PitmanPoint, ScalingPoint,
};
use cbilab::paths::{PathEnvelope, SteppedPath};
use cbilab::rng::stream;
use cbilab::semigroup::cbi_laplace_with;

#[derive(Parser)]
#[command(
    name = "cbilab",
    version,
    about = "CBI process simulation and verification"
)]
struct Cli {
    /// Worker threads for replication-level parallelism (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for output artifacts (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the initial value problem c'₊ = f∘c + g for stepped drivers.
    Ivp {
        #[command(subcommand)]
        cmd: IvpCommand,
    },
    /// Evaluate the semigroup exponents u, v and the Laplace transform.
    Semigroup(SemigroupArgs),
    /// Simulate one CBI path with the span-σ scheme.
    Simulate(SimulateArgs),
    /// Run a Monte-Carlo experiment from a TOML config.
    Mc(McArgs),
    /// Galton-Watson with immigration: simulate or condition on total progeny.
    Gw {
        #[command(subcommand)]
        cmd: GwCommand,
    },
    /// Classify how a CBI(Ψ, Φ) can reach +∞.
    Classify(ClassifyArgs),
}

#[derive(Subcommand)]
enum IvpCommand {
    Solve(IvpSolveArgs),
}

#[derive(Args)]
struct IvpSolveArgs {
    /// Reproduction path: a CSV file or an inline JSON path spec.
    #[arg(long)]
    f: String,
    /// Immigration path: a CSV file or an inline JSON path spec.
    #[arg(long)]
    g: String,
    #[arg(long, value_parser = ["exact", "euler"])]
    method: String,
    /// Euler span (required for --method euler).
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    horizon: f64,
    /// Output grid points for the exact method.
    #[arg(long, default_value_t = 1001)]
    grid_points: usize,
    #[arg(long, default_value = "c.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct SemigroupArgs {
    /// Branching mechanism spec (JSON or an alias like `besq`).
    #[arg(long)]
    psi: String,
    /// Immigration mechanism spec; defaults to zero immigration.
    #[arg(long, default_value = "zero")]
    phi: String,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 0.0)]
    x: f64,
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    psi: String,
    #[arg(long, default_value = "zero")]
    phi: String,
    #[arg(long)]
    x: f64,
    #[arg(long)]
    horizon: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "z.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct McArgs {
    /// Experiment kind; must match the `kind` field of the config.
    #[arg(value_parser = ["verify-laplace", "verify-extinction", "gwi-limit", "pitman"])]
    kind: String,
    /// Experiment TOML (strict schema; see the guide).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum GwCommand {
    Simulate(GwSimulateArgs),
    Condition(GwConditionArgs),
}

#[derive(Args)]
struct GwSimulateArgs {
    /// Offspring law spec (JSON).
    #[arg(long)]
    mu: String,
    /// Immigration law spec (JSON); defaults to no immigration.
    #[arg(long, default_value = r#"{"kind":"dirac","value":0}"#)]
    nu: String,
    #[arg(short = 'k', long)]
    initial: u64,
    /// Number of generations to simulate.
    #[arg(short = 'n', long)]
    generations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "z.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct GwConditionArgs {
    #[arg(long)]
    mu: String,
    /// Initial population.
    #[arg(short = 'k', long)]
    initial: u64,
    /// Total progeny to condition on.
    #[arg(short = 'n', long)]
    total: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "z.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    psi: String,
    #[arg(long, default_value = "zero")]
    phi: String,
    /// Sign-test neighbourhood (0, eps).
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
}

#[derive(Debug)]
struct CliError(String);

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

type CliResult = Result<u8, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage and parse problems go to stderr with exit code 1.
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    if let Some(n) = cli.threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .is_err()
        {
            eprintln!(r#"{{"error":"could not configure the thread pool"}}"#);
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError(msg)) => {
            eprintln!("{}", serde_json::json!({ "error": msg }));
            ExitCode::from(1)
        }
    }
}

/// `CBILAB_SEED` overrides any configured seed.
fn effective_seed(configured: u64) -> Result<u64, CliError> {
    match std::env::var("CBILAB_SEED") {
        Ok(v) => v
            .parse::<u64>()
            .map_err(|e| CliError(format!("CBILAB_SEED: {e}"))),
        Err(_) => Ok(configured),
    }
}

fn out_path(dir: &Path, file: &Path) -> Result<PathBuf, CliError> {
    if !dir.as_os_str().is_empty() {
        fs::create_dir_all(dir)?;
    }
    Ok(if file.is_absolute() {
        file.to_path_buf()
    } else {
        dir.join(file)
    })
}

fn run(cli: Cli) -> CliResult {
    match cli.cmd {
        Command::Ivp {
            cmd: IvpCommand::Solve(args),
        } => ivp_solve(&cli.out_dir, args),
        Command::Semigroup(args) => semigroup(args),
        Command::Simulate(args) => simulate(&cli.out_dir, args),
        Command::Mc(args) => mc(&cli.out_dir, args),
        Command::Gw { cmd } => gw(&cli.out_dir, cmd),
        Command::Classify(args) => classify(args),
    }
}

// ---------------------------------------------------------------------------
// Path and law specs
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum PathSpec {
    Constant {
        value: f64,
        horizon: f64,
    },
    Affine {
        value: f64,
        slope: f64,
        horizon: f64,
    },
    Steps {
        times: Vec<f64>,
        values: Vec<f64>,
    },
    /// Piecewise-affine sampling of `x ↦ √|center - x|` on `[0, max_x]`.
    SqrtAbs {
        center: f64,
        density: f64,
        max_x: f64,
    },
}

fn parse_path(text: &str) -> Result<SteppedPath, CliError> {
    if Path::new(text).exists() {
        let content = fs::read_to_string(text)?;
        return SteppedPath::from_csv(&content).map_err(CliError::from);
    }
    let spec: PathSpec =
        serde_json::from_str(text).map_err(|e| CliError(format!("path spec: {e}")))?;
    Ok(match spec {
        PathSpec::Constant { value, horizon } => SteppedPath::constant(value, horizon),
        PathSpec::Affine {
            value,
            slope,
            horizon,
        } => SteppedPath::affine(value, slope, horizon),
        PathSpec::Steps { times, values } => SteppedPath::step_function(times, values)?,
        PathSpec::SqrtAbs {
            center,
            density,
            max_x,
        } => SteppedPath::sample_function(|x| (center - x).abs().sqrt(), max_x, density)?,
    })
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum LawSpec {
    Poisson { mean: f64 },
    Geometric { p: f64 },
    Bernoulli { p: f64 },
    Dirac { value: usize },
    Finite { probs: Vec<f64> },
}

fn parse_law(text: &str) -> Result<DiscreteLaw, CliError> {
    let spec: LawSpec =
        serde_json::from_str(text).map_err(|e| CliError(format!("law spec: {e}")))?;
    Ok(match spec {
        LawSpec::Poisson { mean } => DiscreteLaw::poisson(mean)?,
        LawSpec::Geometric { p } => DiscreteLaw::geometric(p)?,
        LawSpec::Bernoulli { p } => DiscreteLaw::bernoulli(p)?,
        LawSpec::Dirac { value } => DiscreteLaw::dirac(value),
        LawSpec::Finite { probs } => DiscreteLaw::finite(probs)?,
    })
}

fn parse_psi(text: &str) -> Result<BranchingMechanism, CliError> {
    BranchingMechanism::from_json(text).map_err(CliError::from)
}

fn parse_phi(text: &str) -> Result<ImmigrationMechanism, CliError> {
    ImmigrationMechanism::from_json(text).map_err(CliError::from)
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn ivp_solve(out_dir: &Path, args: IvpSolveArgs) -> CliResult {
    let f = parse_path(&args.f)?;
    let g = parse_path(&args.g)?;
    let out = out_path(out_dir, &args.out)?;
    let mut rows = String::from("time,c,h\n");
    match args.method.as_str() {
        "euler" => {
            let sigma = args
                .sigma
                .ok_or_else(|| CliError("--sigma is required for --method euler".into()))?;
            let sol = solve_euler(&mut f.clone(), &mut g.clone(), sigma, args.horizon)?;
            for i in 0..sol.grid_len() {
                rows.push_str(&format!(
                    "{},{},{}\n",
                    sol.time(i),
                    sol.values()[i],
                    sol.rates()[i]
                ));
            }
        }
        "exact" => {
            let sol = solve_exact(&f, &g)?;
            let n = args.grid_points.max(2);
            for i in 0..n {
                let t = args.horizon * i as f64 / (n - 1) as f64;
                rows.push_str(&format!("{},{},{}\n", t, sol.eval(t), sol.profile(t)));
            }
        }
        _ => unreachable!("clap restricts the method values"),
    }
    fs::write(&out, rows)?;
    println!("{}", out.display());
    Ok(0)
}

fn semigroup(args: SemigroupArgs) -> CliResult {
    let psi = parse_psi(&args.psi)?;
    let phi = parse_phi(&args.phi)?;
    let val = cbi_laplace_with(&psi, &phi, args.x, args.t, args.lambda, args.step)?;
    println!(
        "{}",
        serde_json::json!({
            "u": val.u,
            "v": val.v,
            "laplace": val.value,
            "err_estimate": val.err_estimate,
        })
    );
    Ok(0)
}

fn simulate(out_dir: &Path, args: SimulateArgs) -> CliResult {
    let psi = parse_psi(&args.psi)?;
    let phi = parse_phi(&args.phi)?;
    let seed = effective_seed(args.seed)?;
    let path = simulate_cbi_path(&psi, &phi, args.x, args.horizon, args.sigma, seed)?;
    let out = out_path(out_dir, &args.out)?;
    let mut rows = String::from("time,z\n");
    for (t, z) in path.times.iter().zip(&path.values) {
        rows.push_str(&format!("{t},{z}\n"));
    }
    fs::write(&out, rows)?;
    let envelope = PathEnvelope {
        mechanism: serde_json::json!({ "psi": psi.to_spec(), "phi": phi.to_spec() }),
        seed,
        horizon: args.horizon,
        csv: out
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    let sidecar = out.with_extension("json");
    fs::write(&sidecar, serde_json::to_string_pretty(&envelope)?)?;
    println!("{}", out.display());
    Ok(0)
}

fn classify(args: ClassifyArgs) -> CliResult {
    let psi = parse_psi(&args.psi)?;
    let phi = parse_phi(&args.phi)?;
    let verdict =
        classify_explosion_with(&psi, &phi, args.eps).map_err(|e| CliError(e.to_string()))?;
    println!("{}", serde_json::to_string(&verdict)?);
    Ok(0)
}

fn gw(out_dir: &Path, cmd: GwCommand) -> CliResult {
    match cmd {
        GwCommand::Simulate(args) => {
            let cfg = GwiConfig {
                offspring: parse_law(&args.mu)?,
                immigration: parse_law(&args.nu)?,
                initial: args.initial,
            };
            let seed = effective_seed(args.seed)?;
            let z = simulate_gwi_direct(&cfg, args.generations, &mut stream(seed, 0));
            write_generations(out_dir, &args.out, &z)
        }
        GwCommand::Condition(args) => {
            let mu = parse_law(&args.mu)?;
            let seed = effective_seed(args.seed)?;
            let sample = conditioned_gw(&mu, args.initial, args.total, &mut stream(seed, 0))?;
            write_generations(out_dir, &args.out, &sample.generation_sizes)
        }
    }
}

fn write_generations(out_dir: &Path, file: &Path, z: &[u64]) -> CliResult {
    let out = out_path(out_dir, file)?;
    let mut rows = String::from("generation,z\n");
    for (g, v) in z.iter().enumerate() {
        rows.push_str(&format!("{g},{v}\n"));
    }
    fs::write(&out, rows)?;
    println!("{}", out.display());
    Ok(0)
}

// ---------------------------------------------------------------------------
// Experiment configs (TOML, strict)
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct KindProbe {
    kind: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyLaplaceConfig {
    #[allow(dead_code)]
    kind: String,
    seed: u64,
    psi: String,
    phi: String,
    x: f64,
    t: f64,
    lambda: f64,
    replications: usize,
    sigma: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyExtinctionConfig {
    #[allow(dead_code)]
    kind: String,
    seed: u64,
    psi: String,
    phi: String,
    x: f64,
    t: f64,
    replications: usize,
    sigma: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GwiLimitConfig {
    #[allow(dead_code)]
    kind: String,
    seed: u64,
    mu: String,
    nu: String,
    target_psi: String,
    target_phi: String,
    x: f64,
    t: f64,
    lambda: f64,
    replications: usize,
    points: Vec<ScalingPoint>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PitmanTomlConfig {
    #[allow(dead_code)]
    kind: String,
    seed: u64,
    mu: String,
    l: f64,
    probe_times: Vec<f64>,
    replications: usize,
    points: Vec<PitmanPoint>,
}

fn mc(out_dir: &Path, args: McArgs) -> CliResult {
    let text = fs::read_to_string(&args.config)?;
    let probe: KindProbe = toml::from_str(&text).map_err(|e| CliError(format!("config: {e}")))?;
    if probe.kind != args.kind {
        return Err(CliError(format!(
            "config kind `{}` does not match requested experiment `{}`",
            probe.kind, args.kind
        )));
    }
    let out = out_path(out_dir, &args.out)?;
    match probe.kind.as_str() {
        "verify-laplace" => {
            let cfg: VerifyLaplaceConfig =
                toml::from_str(&text).map_err(|e| CliError(format!("config: {e}")))?;
            let report = verify_laplace(
                &parse_psi(&cfg.psi)?,
                &parse_phi(&cfg.phi)?,
                cfg.x,
                cfg.t,
                cfg.lambda,
                cfg.replications,
                cfg.sigma,
                effective_seed(cfg.seed)?,
            )?;
            fs::write(&out, serde_json::to_string_pretty(&report)?)?;
            println!(
                "estimate {} vs oracle {} (|diff| {} <= {}): {}",
                report.estimate,
                report.oracle,
                report.difference.abs(),
                report.stat_tolerance + report.disc_tolerance,
                if report.pass { "PASS" } else { "FAIL" }
            );
            Ok(if report.pass { 0 } else { 2 })
        }
        "verify-extinction" => {
            let cfg: VerifyExtinctionConfig =
                toml::from_str(&text).map_err(|e| CliError(format!("config: {e}")))?;
            let report = verify_extinction(
                &parse_psi(&cfg.psi)?,
                &parse_phi(&cfg.phi)?,
                cfg.x,
                cfg.t,
                cfg.replications,
                cfg.sigma,
                effective_seed(cfg.seed)?,
            )?;
            fs::write(&out, serde_json::to_string_pretty(&report)?)?;
            println!(
                "absorbed fraction {} vs oracle {}: {}",
                report.estimate,
                report.oracle,
                if report.pass { "PASS" } else { "FAIL" }
            );
            Ok(if report.pass { 0 } else { 2 })
        }
        "gwi-limit" => {
            let cfg: GwiLimitConfig =
                toml::from_str(&text).map_err(|e| CliError(format!("config: {e}")))?;
            let exp = GwiScalingConfig {
                offspring: parse_law(&cfg.mu)?,
                immigration: parse_law(&cfg.nu)?,
                points: cfg.points,
                target_psi: parse_psi(&cfg.target_psi)?,
                target_phi: parse_phi(&cfg.target_phi)?,
                x: cfg.x,
                t: cfg.t,
                lambda: cfg.lambda,
                replications: cfg.replications,
            };
            let report = gwi_scaling_experiment(&exp, effective_seed(cfg.seed)?)?;
            fs::write(&out, serde_json::to_string_pretty(&report)?)?;
            for gap in &report.gaps {
                println!("n={}: gap {}", gap.n, gap.gap);
            }
            println!("trend: {}", if report.trend_ok { "PASS" } else { "FAIL" });
            Ok(if report.trend_ok { 0 } else { 2 })
        }
        "pitman" => {
            let cfg: PitmanTomlConfig =
                toml::from_str(&text).map_err(|e| CliError(format!("config: {e}")))?;
            let exp = PitmanConfig {
                offspring: parse_law(&cfg.mu)?,
                l: cfg.l,
                points: cfg.points,
                probe_times: cfg.probe_times,
                replications: cfg.replications,
            };
            let summaries = pitman_experiment(&exp, effective_seed(cfg.seed)?)?;
            fs::write(&out, serde_json::to_string_pretty(&summaries)?)?;
            for s in &summaries {
                println!(
                    "n={}: k_n={}, scaled max {} ± {}",
                    s.n, s.k_n, s.scaled_max_mean, s.scaled_max_std
                );
            }
            Ok(0)
        }
        other => Err(CliError(format!("unknown experiment kind `{other}`"))),
    }
}
