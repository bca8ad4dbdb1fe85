//! Subcommands of the `chanfactor` binary.
//!
//! Every command returns its report as text plus a status, so the binary only
//! decides where the text goes and which exit code to use.

use std::fs;
use std::path::{Path, PathBuf};

use chanfactor::casestudy::{self, DEFAULT_POINTS};
use chanfactor::channel::{
    causal_factorization_with_tol, shannon_entropy, verify_factorization, Channel, Distribution,
    FactorizationReport, Label, Partition, DEFAULT_ROW_TOL,
};
use chanfactor::phase::{self, PhaseReport, PhasedQubitEnsemble};
use chanfactor::qfactor::{
    self, Advantage, DensityMatrix, Ensemble, FidelityReport, PureState, QFactorizationJson,
    QVerifyReport,
};
use chanfactor::{sampling, von_neumann_entropy};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const HEATMAP_HEADER: &str = "p,alpha,advantage";

#[derive(Debug, Parser)]
#[command(name = "chanfactor", version, about = "Classical and quantum factorizations of finite channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Causal partition and reduced channel.
    Factorize(ChannelArgs),
    /// Square-root-amplitude quantum factorization with fidelity and entropy report.
    Qfactorize(QfactorizeArgs),
    /// Re-verify a stored quantum factorization against a channel.
    Qverify(QverifyArgs),
    /// Entropy advantage grid for the redundant binary symmetric channel (CSV).
    Heatmap(HeatmapArgs),
    /// Check that equal phases minimise the entropy of a qubit ensemble.
    PhaseScan(PhaseScanArgs),
    /// Entropy and purity along the qutrit mixed-minimum family (CSV).
    Casestudy(CasestudyArgs),
    /// Canned merging examples.
    MergeDemo,
}

#[derive(Debug, Args)]
pub struct ChannelArgs {
    /// Channel JSON: {"inputs": [...], "outputs": [...], "rows": [[...], ...]}.
    pub input: PathBuf,
    /// File holding the input distribution as a JSON array; uniform when omitted.
    #[arg(long)]
    pub dist: Option<PathBuf>,
    /// Row-equality tolerance for the causal partition.
    #[arg(long, default_value_t = DEFAULT_ROW_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct QfactorizeArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// File holding input classes as JSON `[[labels], ...]`; must refine the causal partition.
    #[arg(long)]
    pub partition: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QverifyArgs {
    /// Channel JSON.
    pub channel: PathBuf,
    /// Quantum factorization JSON, bare or as emitted by `qfactorize`.
    pub qfactorization: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[arg(long, default_value_t = 101)]
    pub p_steps: usize,
    #[arg(long, default_value_t = 101)]
    pub alpha_steps: usize,
}

#[derive(Debug, Args)]
pub struct PhaseScanArgs {
    /// Ensemble JSON: {"weights": [...], "a": [...], "b": [...]}; phases are ignored.
    #[arg(required_unless_present = "random")]
    pub input: Option<PathBuf>,
    /// Draw magnitudes and weights for this many states instead of reading a file.
    #[arg(long, conflicts_with = "input")]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grid points per free phase (defaults: 360 for two states, 72 for three).
    #[arg(long)]
    pub resolution: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CasestudyArgs {
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    pub points: usize,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Invalid(#[from] chanfactor::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } => 3,
            CliError::Invalid(_) | CliError::Usage(_) => 2,
        }
    }
}

/// Report text plus whether every check it contains passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub passed: bool,
}

impl Output {
    fn pass(text: String) -> Self {
        Self { text, passed: true }
    }
}

pub fn run(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::Factorize(a) => cmd_factorize(a),
        Command::Qfactorize(a) => cmd_qfactorize(a),
        Command::Qverify(a) => cmd_qverify(a),
        Command::Heatmap(a) => cmd_heatmap(a.p_steps, a.alpha_steps),
        Command::PhaseScan(a) => cmd_phase_scan(a),
        Command::Casestudy(a) => cmd_casestudy(a.points),
        Command::MergeDemo => cmd_merge_demo(),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

// Shape-only parse so that bad probabilities surface as validation errors.
#[derive(Deserialize)]
struct RawChannel {
    inputs: Vec<Label>,
    outputs: Vec<Label>,
    rows: Vec<Vec<f64>>,
}

pub fn load_channel(path: &Path) -> Result<Channel, CliError> {
    let raw: RawChannel = parse(path)?;
    Ok(Channel::new(raw.inputs, raw.outputs, raw.rows)?)
}

fn load_distribution(path: Option<&PathBuf>, n: usize) -> Result<Distribution, CliError> {
    let d = match path {
        Some(p) => Distribution::new(parse::<Vec<f64>>(p)?)?,
        None => Distribution::uniform(n),
    };
    if d.len() != n {
        return Err(chanfactor::Error::AlphabetMismatch(d.len(), n).into());
    }
    Ok(d)
}

fn load_partition(path: &Path, c: &Channel) -> Result<Partition, CliError> {
    let classes: Vec<Vec<Label>> = parse(path)?;
    let indices = classes
        .iter()
        .map(|class| {
            class
                .iter()
                .map(|label| {
                    c.inputs().iter().position(|l| l == label).ok_or_else(|| {
                        chanfactor::Error::InvalidPartition(format!("unknown input label {label}"))
                    })
                })
                .collect::<Result<Vec<usize>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Partition::from_classes(c.n_inputs(), indices)?)
}

fn class_labels(c: &Channel, classes: &[Vec<usize>]) -> Vec<Vec<Label>> {
    classes
        .iter()
        .map(|class| class.iter().map(|&x| c.inputs()[x].clone()).collect())
        .collect()
}

#[derive(Serialize)]
struct FactorizeReport {
    partition: Vec<Vec<Label>>,
    reduced: Channel,
    cardinality: usize,
    verification: FactorizationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_z: Option<f64>,
}

pub fn cmd_factorize(args: &ChannelArgs) -> Result<Output, CliError> {
    let c = load_channel(&args.input)?;
    let f = causal_factorization_with_tol(&c, args.tol);
    let verification = verify_factorization(&c, &f, args.tol);
    let entropies = match &args.dist {
        Some(_) => {
            let d = load_distribution(args.dist.as_ref(), c.n_inputs())?;
            let z = chanfactor::pushforward(&d, &f.partition)?;
            Some((shannon_entropy(&d), shannon_entropy(&z)))
        }
        None => None,
    };
    let passed = verification.valid;
    let report = FactorizeReport {
        partition: class_labels(&c, f.partition.classes()),
        cardinality: f.cardinality(),
        reduced: f.reduced,
        verification,
        h_x: entropies.map(|e| e.0),
        h_z: entropies.map(|e| e.1),
    };
    Ok(Output {
        text: to_json(&report),
        passed,
    })
}

#[derive(Serialize)]
struct QfactorizeReport {
    qfactorization: QFactorizationJson,
    cardinality: usize,
    verification: QVerifyReport,
    fidelity: FidelityReport,
    entropy: Advantage,
}

pub fn cmd_qfactorize(args: &QfactorizeArgs) -> Result<Output, CliError> {
    let c = load_channel(&args.channel.input)?;
    let d = load_distribution(args.channel.dist.as_ref(), c.n_inputs())?;
    let q = match &args.partition {
        Some(path) => qfactor::g0_for_partition(&c, load_partition(path, &c)?)?,
        None => qfactor::g0_construct_with_tol(&c, args.channel.tol),
    };
    let verification = qfactor::verify_qfactorization(&c, &q, 1e-9);
    let fidelity = qfactor::fidelity_bound_check(&c, &q)?;
    let passed = verification.valid && fidelity.bound_holds && fidelity.all_saturated;
    let report = QfactorizeReport {
        qfactorization: QFactorizationJson::new(&q, &c),
        cardinality: q.cardinality(),
        entropy: qfactor::advantage(&q, &d)?,
        verification,
        fidelity,
    };
    Ok(Output {
        text: to_json(&report),
        passed,
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StoredQfactorization {
    Bare(QFactorizationJson),
    Wrapped { qfactorization: QFactorizationJson },
}

pub fn cmd_qverify(args: &QverifyArgs) -> Result<Output, CliError> {
    let c = load_channel(&args.channel)?;
    let stored = match parse::<StoredQfactorization>(&args.qfactorization)? {
        StoredQfactorization::Bare(q) | StoredQfactorization::Wrapped { qfactorization: q } => q,
    };
    let q = stored.resolve(&c)?;
    let report = qfactor::verify_qfactorization(&c, &q, args.tol);
    Ok(Output {
        passed: report.valid,
        text: to_json(&report),
    })
}

fn grid(steps: usize) -> Vec<f64> {
    (0..steps).map(|k| k as f64 / (steps - 1) as f64).collect()
}

pub fn heatmap_values(p_steps: usize, alpha_steps: usize) -> Result<Vec<(f64, f64, f64)>, CliError> {
    if p_steps < 2 || alpha_steps < 2 {
        return Err(CliError::Usage("heatmap needs at least 2 steps per axis".into()));
    }
    let alphas = grid(alpha_steps);
    Ok(grid(p_steps)
        .into_par_iter()
        .flat_map_iter(|p| {
            alphas
                .iter()
                .map(move |&alpha| (p, alpha, qfactor::rbsc_advantage(p, alpha)))
        })
        .collect())
}

pub fn cmd_heatmap(p_steps: usize, alpha_steps: usize) -> Result<Output, CliError> {
    let mut text = String::from(HEATMAP_HEADER);
    text.push('\n');
    for (p, alpha, adv) in heatmap_values(p_steps, alpha_steps)? {
        text.push_str(&format!("{p},{alpha},{adv}\n"));
    }
    Ok(Output::pass(text))
}

#[derive(Deserialize)]
struct EnsembleFile {
    weights: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Seeded weights and magnitudes with all phases zero.
pub fn random_phase_ensemble(n: usize, seed: u64) -> Result<PhasedQubitEnsemble, CliError> {
    if n == 0 {
        return Err(CliError::Usage("--random needs at least one state".into()));
    }
    Ok(sampling::random_phased_ensemble(&mut sampling::rng(seed, 0), n, false))
}

pub fn cmd_phase_scan(args: &PhaseScanArgs) -> Result<Output, CliError> {
    let e = match (&args.input, args.random) {
        (_, Some(n)) => random_phase_ensemble(n, args.seed)?,
        (Some(path), None) => {
            let file: EnsembleFile = parse(path)?;
            let n = file.weights.len();
            PhasedQubitEnsemble::new(file.weights, file.a, file.b, vec![0.0; n])?
        }
        (None, None) => return Err(CliError::Usage("give an ensemble file or --random".into())),
    };
    let report: PhaseReport = phase::phase_scan(&e, args.resolution)?;
    Ok(Output {
        passed: report.pass,
        text: to_json(&report),
    })
}

#[derive(Debug, Serialize)]
pub struct CasestudySummary {
    pub global_min_t: f64,
    pub global_min_entropy: f64,
    pub local_min_t: Vec<f64>,
    pub entropy_at_t_min: f64,
    pub entropy_at_t_max: f64,
    pub purity_at_t_min: f64,
    pub traceless_constraint_rank: usize,
}

/// CSV curve plus a summary of the minima and the constraint rank.
pub fn casestudy_run(points: usize) -> Result<(String, CasestudySummary), CliError> {
    let f = casestudy::build_sic_family();
    let curve = casestudy::entropy_purity_curve(&f, points)?;
    let rank = casestudy::constraint_rank(&f)?;
    let first = &curve.points[0];
    let last = &curve.points[curve.points.len() - 1];
    let summary = CasestudySummary {
        global_min_t: curve.global_min_t,
        global_min_entropy: curve.global_min_entropy,
        local_min_t: curve.local_min_t.clone(),
        entropy_at_t_min: first.entropy_rho_t,
        entropy_at_t_max: last.entropy_rho_t,
        purity_at_t_min: first.purity_rho_t,
        traceless_constraint_rank: rank.traceless_rank,
    };
    Ok((casestudy::curve_csv(&curve), summary))
}

pub fn cmd_casestudy(points: usize) -> Result<Output, CliError> {
    let (csv, summary) = casestudy_run(points)?;
    eprint!("{}", to_json(&summary));
    Ok(Output::pass(csv))
}

#[derive(Debug, Serialize)]
pub struct PureMergeDemo {
    pub weights: Vec<f64>,
    pub entropy: f64,
    pub b_into_c: f64,
    pub c_into_b: f64,
}

#[derive(Debug, Serialize)]
pub struct MixedMergeDemo {
    /// Mixing parameter of the two near-maximally-mixed states and the near-pure state; 0 is the idealized limit.
    pub epsilon: f64,
    pub entropy: f64,
    pub into_near_mixed: f64,
    pub into_near_pure: f64,
}

#[derive(Debug, Serialize)]
pub struct MergeDemo {
    pub pure: PureMergeDemo,
    pub mixed: Vec<MixedMergeDemo>,
    /// The lesser merge direction never raised the entropy.
    pub min_rule_holds: bool,
}

fn merge_pair(e: &Ensemble, j: usize, k: usize) -> Result<(f64, f64), CliError> {
    let m = qfactor::merge(e, j, k)?;
    Ok((
        von_neumann_entropy(&qfactor::average_state(&m.j_into_k)),
        von_neumann_entropy(&qfactor::average_state(&m.k_into_j)),
    ))
}

pub fn merge_demo() -> Result<MergeDemo, CliError> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let weights = vec![3.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0];
    let pure = Ensemble::from_pure(
        weights.clone(),
        &[
            PureState::basis(2, 0),
            PureState::basis(2, 1),
            PureState::from_real(&[s, s])?,
        ],
    )?;
    let entropy = von_neumann_entropy(&qfactor::average_state(&pure));
    let (b_into_c, c_into_b) = merge_pair(&pure, 1, 2)?;
    let mut min_rule_holds = b_into_c.min(c_into_b) <= entropy + 1e-9;

    let mut mixed = Vec::new();
    for epsilon in [0.0, 0.01] {
        let near_mixed = |tilt: f64| {
            DensityMatrix::diagonal(&[0.5 + tilt, 0.5 - tilt]).expect("valid qubit state")
        };
        let states = vec![
            near_mixed(epsilon / 2.0),
            near_mixed(-epsilon / 2.0),
            DensityMatrix::diagonal(&[1.0 - epsilon, epsilon])?,
        ];
        let e = Ensemble::new(vec![1.0 / 3.0; 3], states)?;
        let entropy = von_neumann_entropy(&qfactor::average_state(&e));
        let (into_near_pure, into_near_mixed) = merge_pair(&e, 1, 2)?;
        min_rule_holds &= into_near_pure.min(into_near_mixed) <= entropy + 1e-9;
        mixed.push(MixedMergeDemo {
            epsilon,
            entropy,
            into_near_mixed,
            into_near_pure,
        });
    }
    Ok(MergeDemo {
        pure: PureMergeDemo {
            weights,
            entropy,
            b_into_c,
            c_into_b,
        },
        mixed,
        min_rule_holds,
    })
}

pub fn cmd_merge_demo() -> Result<Output, CliError> {
    let demo = merge_demo()?;
    Ok(Output {
        passed: demo.min_rule_holds,
        text: to_json(&demo),
    })
}
