use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hardy_core::atoms::{gamma_bound, AtomExport};
use hardy_core::certify::{run_certification, CertifyConfig};
use hardy_core::dyadic::{verify_system, SystemExport, SystemReport};
use hardy_core::generate::random_mean_zero;
use hardy_core::wavelet::BasisExport;
use hardy_core::{
    atomic_decompose, build_haar, load_space, verify_atom, AtomCertificate, BuildOptions, DyadicSystem,
    FiniteSpace, GridFunction, GridMode, ProductSpace,
};
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "hardy", version, about = "Dyadic cubes, product square functions and atomic decompositions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the dyadic system and Haar basis of a space.
    Build(BuildArgs),
    /// Decompose a function on a product space into atoms.
    Decompose(DecomposeArgs),
    /// Run the seeded property suite.
    Certify(CertifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Desk,
    Reference,
}

#[derive(Args)]
struct GridArgs {
    /// Dyadic base; the admissible default when absent.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_enum, default_value = "desk")]
    mode: Mode,
}

impl GridArgs {
    fn options(&self, order_seed: Option<u64>) -> BuildOptions {
        BuildOptions {
            delta: self.delta,
            mode: match self.mode {
                Mode::Desk => GridMode::Desk,
                Mode::Reference => GridMode::Reference,
            },
            order_seed,
        }
    }
}

#[derive(Args)]
struct Exponents {
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    space: PathBuf,
    /// Shuffle the net scan order with this seed.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    space: PathBuf,
    /// Second factor; the first factor again when absent.
    #[arg(long)]
    space2: Option<PathBuf>,
    /// JSON array of rows; a random doubly mean-zero function when absent.
    #[arg(long)]
    function: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    exponents: Exponents,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long, requires = "space2")]
    space: Option<PathBuf>,
    #[arg(long, requires = "space")]
    space2: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    corpus: usize,
    #[command(flatten)]
    exponents: Exponents,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_space(path: &Path) -> Result<Arc<FiniteSpace>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let space = load_space(&text).with_context(|| format!("loading {}", path.display()))?;
    Ok(Arc::new(space))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn gammas(e: &Exponents, pspace: &ProductSpace) -> [f64; 2] {
    let given = [e.gamma1, e.gamma2];
    [0, 1].map(|i| given[i].unwrap_or_else(|| gamma_bound(pspace.space(i).omega(), e.p, e.q) + 1.0))
}

#[derive(Serialize)]
struct SpaceSummary {
    points: usize,
    a0: f64,
    cmu: f64,
    omega: f64,
    total_measure: f64,
}

impl SpaceSummary {
    fn of(space: &FiniteSpace) -> Self {
        SpaceSummary {
            points: space.len(),
            a0: space.a0(),
            cmu: space.cmu(),
            omega: space.omega(),
            total_measure: space.total_measure(),
        }
    }
}

#[derive(Serialize)]
struct BuildReport {
    space: SpaceSummary,
    system: SystemExport,
    verification: SystemReport,
    basis: BasisExport,
}

fn cmd_build(args: &BuildArgs) -> Result<bool> {
    let space = read_space(&args.space)?;
    let system = Arc::new(DyadicSystem::build(space.clone(), args.grid.options(args.seed))?);
    let verification = verify_system(&system)?;
    let ok = verification.exact_ok();
    info!("built {} cubes on {} points", system.cube_count(), space.len());
    let basis = build_haar(system.clone());
    let report = BuildReport {
        space: SpaceSummary::of(&space),
        system: system.export(),
        verification,
        basis: basis.export(),
    };
    emit(&report, args.out.as_deref())?;
    Ok(ok)
}

#[derive(Serialize)]
struct TermReport {
    lambda: f64,
    base_lambda: f64,
    block_weight: f64,
    j: i32,
    ell: [usize; 2],
    certificate: AtomCertificate,
    atom: AtomExport,
}

#[derive(Serialize)]
struct DecomposeReport {
    factors: [SpaceSummary; 2],
    p: f64,
    q: f64,
    gamma: [f64; 2],
    cbar: [f64; 2],
    dilation: [f64; 2],
    residual: f64,
    lambda_sum: f64,
    hp_norm_p: f64,
    lambda_constant: f64,
    atoms_passed: bool,
    terms: Vec<TermReport>,
}

fn cmd_decompose(args: &DecomposeArgs) -> Result<bool> {
    let s1 = read_space(&args.space)?;
    let s2 = match &args.space2 {
        Some(p) => read_space(p)?,
        None => s1.clone(),
    };
    let pspace = ProductSpace::from_spaces(s1.clone(), s2.clone(), args.grid.options(None))?;
    let (n1, n2) = pspace.dims();
    let f = match &args.function {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let rows: Vec<Vec<f64>> =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let f = GridFunction::from_rows(&rows)?;
            f.check_shape(n1, n2)?;
            f
        }
        None => random_mean_zero(&pspace, &mut ChaCha8Rng::seed_from_u64(args.seed))?,
    };
    let gamma = gammas(&args.exponents, &pspace);
    let dec = atomic_decompose(&pspace, &f, args.exponents.p, args.exponents.q, gamma)?;
    info!("{} atoms, residual {:.3e}", dec.terms.len(), dec.residual);
    let terms: Vec<TermReport> = dec
        .terms
        .iter()
        .map(|t| TermReport {
            lambda: t.lambda,
            base_lambda: t.base_lambda,
            block_weight: t.block_weight,
            j: t.provenance.j,
            ell: t.provenance.ell,
            certificate: verify_atom(&t.atom),
            atom: t.atom.export(),
        })
        .collect();
    let atoms_passed = terms.iter().all(|t| t.certificate.passed());
    let ok = atoms_passed && dec.residual <= 1e-8;
    let report = DecomposeReport {
        factors: [SpaceSummary::of(&s1), SpaceSummary::of(&s2)],
        p: dec.p,
        q: dec.q,
        gamma: dec.gamma,
        cbar: dec.cbar,
        dilation: dec.dilation,
        residual: dec.residual,
        lambda_sum: dec.lambda_sum,
        hp_norm_p: dec.hp_norm_p,
        lambda_constant: dec.lambda_constant,
        atoms_passed,
        terms,
    };
    emit(&report, args.out.as_deref())?;
    Ok(ok)
}

fn cmd_certify(args: &CertifyArgs) -> Result<bool> {
    if args.corpus == 0 {
        bail!("--corpus must be at least 1");
    }
    let spaces = match (&args.space, &args.space2) {
        (Some(a), Some(b)) => Some([read_space(a)?, read_space(b)?]),
        _ => None,
    };
    let config = CertifyConfig {
        seed: args.seed,
        corpus: args.corpus,
        p: args.exponents.p,
        q: args.exponents.q,
        gamma: [args.exponents.gamma1, args.exponents.gamma2],
        options: args.grid.options(None),
        spaces,
    };
    let report = run_certification(&config)?;
    for c in report.checks.iter().filter(|c| c.exact && !c.passed) {
        log::error!("exact check {} failed: {}", c.name, c.detail);
    }
    emit(&report, args.out.as_deref())?;
    Ok(report.exact_ok())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("HARDY_THREADS") {
        let n: usize = v.parse().with_context(|| format!("HARDY_THREADS = {v:?} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    configure_threads()?;
    match &cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Decompose(a) => cmd_decompose(a),
        Command::Certify(a) => cmd_certify(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
