//! `qss` — build, analyze and simulate quantum secret sharing schemes.
//!
//! Exit codes: 0 on success with all checks passing, 1 when a property check
//! fails or a set is not authorised, 2 on usage and parse errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;

use qss_core::access::{analyze_access_structure, DEFAULT_TOL};
use qss_core::decoder::synthesize_decoder;
use qss_core::protocol::{
    qq_run_with, EveBasis, NoiseModel, NoiseTarget, SessionConfig, rcq_session,
};
use qss_core::qecc::bound_report;
use qss_core::qudit::{C64, CVector, PureState, SystemShape};
use qss_core::report::{QqSimSection, RcqSimSection, ReportDocument, Simulation};
use qss_core::scheme::{
    cgl23_scheme, discard_shares, five_qubit_scheme, ghz_scheme, load_scheme,
    reed_solomon_scheme, scheme_to_string, Scheme,
};
use qss_core::Error;

const EXIT_PROPERTY_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "qss",
    version,
    about = "Quantum secret sharing: scheme construction, access analysis and protocol simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a scheme and write it to a scheme file.
    Make(MakeArgs),
    /// Analyze the access structure and error-correction bounds of a scheme.
    Analyze(AnalyzeArgs),
    /// Run the QQ or RCQ protocol on a scheme.
    #[command(subcommand)]
    Simulate(SimulateCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstructionKind {
    Ghz,
    Cgl23,
    #[value(alias = "five_qubit")]
    FiveQubit,
    Rs,
}

#[derive(Args)]
struct MakeArgs {
    /// Which construction to build.
    #[arg(long, value_enum)]
    construction: ConstructionKind,
    /// Player count (ghz).
    #[arg(long)]
    n: Option<usize>,
    /// Share dimension (ghz, rs).
    #[arg(long)]
    q: Option<usize>,
    /// Threshold (rs).
    #[arg(long)]
    k: Option<usize>,
    /// Shares to discard after building, 1-based, comma separated.
    #[arg(long, value_delimiter = ',')]
    drop: Vec<usize>,
    /// Output scheme file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Scheme file path, or a builtin name (cgl23, five_qubit).
    scheme: String,
    /// Classification tolerance in bits.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SimulateCmd {
    /// Teleport random secrets to an authorised set and decode them.
    Qq(QqArgs),
    /// Establish a classical key with an authorised set.
    Rcq(RcqArgs),
}

#[derive(Args)]
struct QqArgs {
    /// Scheme file path, or a builtin name (cgl23, five_qubit).
    #[arg(long)]
    scheme: String,
    /// Authorised players, 1-based, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    set: Vec<usize>,
    /// Number of teleportation trials.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RcqArgs {
    /// Scheme file path, or a builtin name (cgl23, five_qubit).
    #[arg(long)]
    scheme: String,
    /// Authorised players, 1-based, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    set: Vec<usize>,
    /// Measurement rounds.
    #[arg(long, default_value_t = 1000)]
    rounds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise spec: none | depolarizing:share=S,p=P | depolarizing:decoded,p=P
    /// | erasure:share=S,p=P | intercept:share=S,basis=T|random
    #[arg(long, default_value = "none")]
    noise: String,
    /// Abort when the estimated error rate exceeds this value.
    #[arg(long, default_value_t = 0.11)]
    abort_qber: f64,
    /// Fraction of sifted rounds sacrificed for error estimation.
    #[arg(long, default_value_t = 0.5)]
    test_fraction: f64,
    /// Privacy-amplification compression factor.
    #[arg(long, default_value_t = 0.5)]
    pa_rate: f64,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write one line per round: `round t r t' s sifted`.
    #[arg(long)]
    log: Option<PathBuf>,
}

enum CliError {
    /// Bad invocation or unreadable/invalid input: exit 2.
    Usage(String),
    /// A property or authorisation check failed: exit 1.
    Property(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Property(_) => EXIT_PROPERTY_FAILURE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Property(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NotAuthorized { .. } => CliError::Property(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Make(args) => cmd_make(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Simulate(SimulateCmd::Qq(args)) => cmd_simulate_qq(args),
        Command::Simulate(SimulateCmd::Rcq(args)) => cmd_simulate_rcq(args),
    }
}

fn cmd_make(args: MakeArgs) -> Result<u8, CliError> {
    let need = |value: Option<usize>, flag: &str| {
        value.ok_or_else(|| CliError::Usage(format!("--{flag} is required for this construction")))
    };
    let scheme = match args.construction {
        ConstructionKind::Ghz => {
            ghz_scheme(need(args.n, "n")?, need(args.q, "q")?)?
        }
        ConstructionKind::Cgl23 => cgl23_scheme(),
        ConstructionKind::FiveQubit => five_qubit_scheme(),
        ConstructionKind::Rs => {
            reed_solomon_scheme(need(args.k, "k")?, need(args.q, "q")?)?
        }
    };
    let scheme = apply_drop(&scheme, &args.drop)?;
    write_atomic(&args.out, &scheme_to_string(&scheme))
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", args.out.display())))?;
    println!(
        "wrote {} (q={}, kappa={}, n={}, active={})",
        args.out.display(),
        scheme.share_dim(),
        scheme.secret_dim(),
        scheme.n_total(),
        scheme.n_active()
    );
    Ok(0)
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<u8, CliError> {
    let scheme = resolve_scheme(&args.scheme)?;
    if !args.tol.is_finite() || args.tol <= 0.0 {
        return Err(CliError::Usage(format!(
            "tolerance must be positive, got {}",
            args.tol
        )));
    }
    let access = analyze_access_structure(&scheme, args.tol)?;
    let qecc = bound_report(&scheme, &access)?;

    let mut summary = String::new();
    let ramp_str = |r: &qss_core::access::RampParams| match r.k {
        Some(k) => format!("({k}, {}, {})", r.k_prime, r.n),
        None => format!("(-, {}, {})", r.k_prime, r.n),
    };
    let _ = writeln!(summary, "scheme {}:", scheme.name());
    let _ = writeln!(
        summary,
        "  qq ramp  {}   rcq ramp {}   perfect threshold: {}",
        ramp_str(&access.ramp),
        ramp_str(&access.rcq_ramp),
        access.perfect_threshold
    );
    if let (Some(k), d) = (access.ramp.k, qecc.distance) {
        let _ = writeln!(
            summary,
            "  qq (k={k}) maps to rcq with k' >= n-k = {}; distance {}",
            access.ramp.n - k,
            d.map(|d| d.to_string()).unwrap_or_else(|| "-".into()),
        );
    }
    let _ = writeln!(
        summary,
        "  equivalence checks: {}   min info-bound margin {:.3e}",
        if access.equivalence.all_pass {
            "all pass"
        } else {
            "FAILED"
        },
        access.equivalence.min_info_bound_margin
    );
    let bounds_failed = qecc.bounds.any_failed();
    let _ = writeln!(
        summary,
        "  bounds: singleton {:?}, share-size {:?}, mds {:?}, duality {:?}, midpoint {:?}, claim {:?}",
        qecc.bounds.singleton_kappa,
        qecc.bounds.share_size,
        qecc.bounds.mds_advisory,
        qecc.bounds.pure_duality,
        qecc.bounds.threshold_midpoint,
        qecc.bounds.claimed_ramp_consistent,
    );
    print!("{summary}");

    let doc = ReportDocument::analyze(&scheme, &access, &qecc);
    if let Some(path) = &args.out {
        write_atomic(path, &doc.to_json())
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
        println!("report written to {}", path.display());
    }
    if !access.equivalence.all_pass || bounds_failed {
        return Err(CliError::Property(
            "a property check failed; see the report".into(),
        ));
    }
    Ok(0)
}

fn cmd_simulate_qq(args: QqArgs) -> Result<u8, CliError> {
    let scheme = resolve_scheme(&args.scheme)?;
    let subset = to_zero_based(&args.set)?;
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let decoder = synthesize_decoder(&scheme, &subset)?;
    let q = scheme.share_dim();
    let mut rng = rand_chacha_seeded(args.seed);
    let mut min_fidelity: f64 = 1.0;
    let mut sum_fidelity = 0.0;
    let mut histogram = vec![0usize; q * q];
    for _ in 0..args.trials {
        let secret = random_secret(q, &mut rng);
        let run = qq_run_with(&scheme, &decoder, &secret, &mut rng)?;
        min_fidelity = min_fidelity.min(run.fidelity);
        sum_fidelity += run.fidelity;
        histogram[run.bell_outcome.0 * q + run.bell_outcome.1] += 1;
    }
    let mean = sum_fidelity / args.trials as f64;
    println!(
        "qq on {} with set {:?}: trials {}, min fidelity {:.3e} below 1, mean {:.12}",
        scheme.name(),
        args.set,
        args.trials,
        1.0 - min_fidelity,
        mean
    );
    let doc = ReportDocument::simulation(
        &scheme,
        Simulation::Qq(QqSimSection {
            trials: args.trials,
            seed: args.seed,
            subset: args.set.clone(),
            min_fidelity,
            mean_fidelity: mean,
            outcome_histogram: histogram,
        }),
    );
    if let Some(path) = &args.out {
        write_atomic(path, &doc.to_json())
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
        println!("report written to {}", path.display());
    }
    Ok(0)
}

fn cmd_simulate_rcq(args: RcqArgs) -> Result<u8, CliError> {
    let scheme = resolve_scheme(&args.scheme)?;
    let subset = to_zero_based(&args.set)?;
    let noise = parse_noise(&args.noise)?;
    let mut config = SessionConfig::new(args.rounds, args.seed).with_noise(noise);
    config.abort_qber = args.abort_qber;
    config.test_fraction = args.test_fraction;
    config.pa_output_rate = args.pa_rate;
    let transcript = rcq_session(&scheme, &subset, &config)?;
    println!(
        "rcq on {} with set {:?}: rounds {}, sifted {} ({:.4}), qber {:.4}, aborted {}, final key {} digits",
        scheme.name(),
        args.set,
        args.rounds,
        transcript.sift_count(),
        transcript.sift_count() as f64 / args.rounds as f64,
        transcript.qber_estimate,
        transcript.aborted,
        transcript.final_key.len()
    );
    if let Some(path) = &args.log {
        let mut text = String::new();
        for r in &transcript.rounds {
            let outcome = r
                .player_outcome
                .map(|s| s.to_string())
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                text,
                "{} {} {} {} {} {}",
                r.index, r.dealer_basis, r.dealer_outcome, r.player_basis, outcome, r.sifted
            );
        }
        write_atomic(path, &text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    let doc = ReportDocument::simulation(
        &scheme,
        Simulation::Rcq(RcqSimSection::of(&subset, &transcript)),
    );
    if let Some(path) = &args.out {
        write_atomic(path, &doc.to_json())
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
        println!("report written to {}", path.display());
    }
    Ok(0)
}

fn apply_drop(scheme: &Scheme, drop_one_based: &[usize]) -> Result<Scheme, CliError> {
    if drop_one_based.is_empty() {
        return Ok(scheme.clone());
    }
    let drop = to_zero_based(drop_one_based)?;
    Ok(discard_shares(scheme, &drop)?)
}

fn to_zero_based(players: &[usize]) -> Result<Vec<usize>, CliError> {
    players
        .iter()
        .map(|&p| {
            p.checked_sub(1)
                .ok_or_else(|| CliError::Usage("player positions are 1-based".into()))
        })
        .collect()
}

/// Accepts a path to a scheme file or a builtin construction name.
fn resolve_scheme(spec: &str) -> Result<Scheme, CliError> {
    if Path::new(spec).exists() {
        return Ok(load_scheme(spec)?);
    }
    match spec {
        "cgl23" => Ok(cgl23_scheme()),
        "five_qubit" => Ok(five_qubit_scheme()),
        other => Err(CliError::Usage(format!(
            "'{other}' is neither a readable file nor a builtin scheme (cgl23, five_qubit)"
        ))),
    }
}

fn parse_noise(spec: &str) -> Result<NoiseModel, CliError> {
    let usage = |msg: &str| CliError::Usage(format!("invalid --noise '{spec}': {msg}"));
    if spec == "none" {
        return Ok(NoiseModel::None);
    }
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| usage("expected kind:parameters"))?;
    let mut share: Option<usize> = None;
    let mut p: Option<f64> = None;
    let mut basis: Option<EveBasis> = None;
    let mut decoded = false;
    for part in rest.split(',') {
        match part.split_once('=') {
            Some(("share", v)) => {
                let one_based: usize = v.parse().map_err(|_| usage("bad share"))?;
                share = Some(
                    one_based
                        .checked_sub(1)
                        .ok_or_else(|| usage("share positions are 1-based"))?,
                );
            }
            Some(("p", v)) => p = Some(v.parse().map_err(|_| usage("bad probability"))?),
            Some(("basis", "random")) => basis = Some(EveBasis::Random),
            Some(("basis", v)) => {
                basis = Some(EveBasis::Fixed(v.parse().map_err(|_| usage("bad basis"))?))
            }
            None if part == "decoded" => decoded = true,
            _ => return Err(usage("unknown parameter")),
        }
    }
    let model = match kind {
        "depolarizing" => {
            let p = p.ok_or_else(|| usage("needs p="))?;
            let target = if decoded {
                NoiseTarget::Decoded
            } else {
                NoiseTarget::Share(share.ok_or_else(|| usage("needs share= or decoded"))?)
            };
            NoiseModel::Depolarizing { target, p }
        }
        "erasure" => NoiseModel::Erasure {
            share: share.ok_or_else(|| usage("needs share="))?,
            p: p.ok_or_else(|| usage("needs p="))?,
        },
        "intercept" => NoiseModel::InterceptResend {
            share: share.ok_or_else(|| usage("needs share="))?,
            basis: basis.ok_or_else(|| usage("needs basis="))?,
        },
        _ => return Err(usage("unknown kind")),
    };
    Ok(model)
}

fn random_secret(dim: usize, rng: &mut impl rand::Rng) -> PureState {
    let mut v = CVector::from_fn(dim, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let norm = v.norm();
    v /= C64::new(norm, 0.0);
    PureState::new(SystemShape::new(&[dim]).expect("valid"), v).expect("normalized")
}

fn rand_chacha_seeded(seed: u64) -> impl rand::Rng {
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Writes through a temp file in the same directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}
