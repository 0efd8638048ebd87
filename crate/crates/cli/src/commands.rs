use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dptlab::adversary::CorruptionSpec;
use dptlab::amplify::{amplification_ratio, boundary_domain, random_regular_graph, vertex_expansion, ExpansionMode};
use dptlab::certify::{certify_coordinate_expansion, default_c, Strategy};
use dptlab::codec::conflict_profile;
use dptlab::exact::to_f64;
use dptlab::io::{read_json, AssignmentFile, DomainFile, GraphFile, TableFile};
use dptlab::spectral::{lambda_with, spectrum_dense, Solver};
use dptlab::tester::{rejection_probability_exact, run_test_monte_carlo};
use dptlab::testgraph::{build_clique_slice, build_johnson, build_sliding_window};
use dptlab::{parse_fraction, Assignment, DPTable, Domain, Rational, TestGraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{AtStage, CliError, CliResult, Stage};
use crate::experiment::{run_experiment, write_bytes};

#[derive(Debug, Parser)]
#[command(name = "dptlab", version, about = "Direct product testing experiments")]
pub struct Cli {
    /// Seed for every randomized step; required whenever one is used.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write output here instead of stdout (for `run`: overrides the CSV path).
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a set system and its test graph and write them as graph JSON.
    BuildDomain(BuildArgs),
    /// Report λ(G) of a graph (and optionally the full dense spectrum).
    Spectrum {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
        solver: SolverArg,
        #[arg(long)]
        full: bool,
    },
    /// Check the three coordinate-expansion conditions.
    Certify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_parser = fraction)]
        lambda: Rational,
        #[arg(long, value_parser = fraction)]
        rho: Rational,
        #[arg(long, value_parser = fraction)]
        c: Option<Rational>,
        /// Sample this many subsets per size instead of enumerating them.
        #[arg(long)]
        sampled: Option<usize>,
    },
    /// Majority-decode a table and report its conflict profile.
    Decode {
        /// Domain or graph JSON.
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        table: PathBuf,
        #[arg(long, value_parser = fraction)]
        c: Option<Rational>,
        #[arg(long, value_parser = fraction)]
        rho: Option<Rational>,
        /// Also write the decoded table d(F) here.
        #[arg(long)]
        decoded: Option<PathBuf>,
    },
    /// Rejection probability of the agreement test.
    Test {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        table: PathBuf,
        /// Monte Carlo trials; exact computation when absent.
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Produce a corrupted table from an assignment.
    Adversary(AdversaryArgs),
    /// Vertex expansion of a random regular graph and the distance
    /// amplification of its boundary domain.
    Amplify {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Estimate expansion from this many random sets instead of brute force.
        #[arg(long)]
        samples: Option<usize>,
        /// Random pairs tried per distance.
        #[arg(long, default_value_t = 20)]
        pairs: usize,
    },
    /// Run a config-driven experiment and write one CSV row per instance.
    Run {
        config: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Auto,
    Dense,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    SlidingWindow,
    SparseSlidingWindow,
    CliqueSlice,
    Johnson,
    /// Random d-regular graph over singleton sets.
    RandomRegular,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub t: Option<u32>,
    #[arg(long)]
    pub d: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AdversaryKind {
    RandomSets,
    SingleFlip,
    Cluster,
}

#[derive(Debug, Args)]
pub struct AdversaryArgs {
    /// Domain or graph JSON.
    #[arg(long)]
    pub domain: PathBuf,
    /// Assignment JSON; a random one is drawn from the seed when absent.
    #[arg(long)]
    pub assignment: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: AdversaryKind,
    #[arg(long, value_parser = fraction)]
    pub delta: Option<Rational>,
    #[arg(long)]
    pub coord: Option<u32>,
    /// Comma-separated set indices; defaults to every set containing `coord`.
    #[arg(long, value_delimiter = ',')]
    pub sets: Option<Vec<usize>>,
}

fn fraction(text: &str) -> Result<Rational, String> {
    parse_fraction(text).map_err(|e| e.to_string())
}

/// What a subcommand produced: a JSON document and its flat CSV rows.
pub struct Output {
    pub json: serde_json::Value,
    pub csv: Vec<u8>,
}

fn output<T: Serialize, R: Serialize>(json: &T, rows: &[R]) -> CliResult<Output> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).at(Stage::Write)?;
    }
    let csv = writer.into_inner().map_err(|e| CliError::new(Stage::Write, e.into_error()))?;
    Ok(Output { json: serde_json::to_value(json).at(Stage::Write)?, csv })
}

fn need_seed(seed: Option<u64>, what: &str) -> CliResult<u64> {
    seed.ok_or_else(|| CliError::invalid(Stage::Config, format!("--seed is required for {what}")))
}

fn need<T>(value: Option<T>, flag: &str, what: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::invalid(Stage::Config, format!("--{flag} is required for {what}")))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DomainSource {
    Graph(GraphFile),
    Domain(DomainFile),
}

/// `read_json` with the path named in the error.
pub fn read<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    read_json(path).map_err(|e| CliError::invalid(Stage::Load, format!("{}: {e}", path.display())))
}

/// Loads a domain from either a domain file or a graph file.
pub fn load_domain(path: &Path) -> CliResult<Arc<Domain>> {
    match read::<DomainSource>(path)? {
        DomainSource::Graph(g) => g.domain.into_domain().at(Stage::Load),
        DomainSource::Domain(d) => d.into_domain().at(Stage::Load),
    }
}

pub fn load_graph(path: &Path) -> CliResult<TestGraph> {
    read::<GraphFile>(path)?.into_graph().at(Stage::Load)
}

pub fn load_table(path: &Path, dom: &Arc<Domain>) -> CliResult<DPTable> {
    read::<TableFile>(path)?.into_table(dom).at(Stage::Load)
}

#[derive(Serialize)]
struct EdgeRow {
    u: usize,
    v: usize,
    weight: u32,
}

fn build_domain(args: &BuildArgs, seed: Option<u64>) -> CliResult<Output> {
    let what = "this family";
    let graph = match args.family {
        FamilyArg::SlidingWindow => build_sliding_window(args.n, need(args.k, "k", what)?, false).at(Stage::Build)?.1,
        FamilyArg::SparseSlidingWindow => {
            build_sliding_window(args.n, need(args.k, "k", what)?, true).at(Stage::Build)?.1
        }
        FamilyArg::CliqueSlice => build_clique_slice(args.n).at(Stage::Build)?.1,
        FamilyArg::Johnson => {
            build_johnson(args.n, need(args.k, "k", what)?, need(args.t, "t", what)?).at(Stage::Build)?.1
        }
        FamilyArg::RandomRegular => {
            let seed = need_seed(seed, "random-regular")?;
            random_regular_graph(args.n as usize, need(args.d, "d", what)?, seed).at(Stage::Build)?
        }
    };
    let rows: Vec<EdgeRow> = graph.undirected_edges().map(|(u, v, weight)| EdgeRow { u, v, weight }).collect();
    output(&GraphFile::from_graph(&graph), &rows)
}

#[derive(Serialize)]
struct SpectrumJson {
    #[serde(flatten)]
    report: dptlab::spectral::SpectralReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenvalues: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct EigenRow {
    index: usize,
    eigenvalue: f64,
}

fn spectrum(graph: &Path, solver: SolverArg, full: bool) -> CliResult<Output> {
    let graph = load_graph(graph)?;
    let solver = match solver {
        SolverArg::Auto => Solver::Auto,
        SolverArg::Dense => Solver::Dense,
        SolverArg::Iterative => Solver::Iterative,
    };
    let report = lambda_with(&graph, solver).at(Stage::Build)?;
    let eigenvalues = full.then(|| spectrum_dense(&graph));
    let rows: Vec<EigenRow> = match &eigenvalues {
        Some(vals) => vals.iter().enumerate().map(|(index, &eigenvalue)| EigenRow { index, eigenvalue }).collect(),
        None => vec![
            EigenRow { index: 1, eigenvalue: report.lambda2 },
            EigenRow { index: report.vertices - 1, eigenvalue: report.lambda_min },
        ],
    };
    output(&SpectrumJson { report, eigenvalues }, &rows)
}

#[derive(Serialize)]
struct CertifyRow {
    lambda_target: String,
    rho_target: String,
    lambda_g: f64,
    worst_local: f64,
    cond1: bool,
    min_retention: String,
    cond2: bool,
    worst_tail: String,
    strategy: &'static str,
    cond3: bool,
    overall: bool,
    c: String,
    k: f64,
    certifies: bool,
}

fn certify(
    graph: &Path,
    lambda: &Rational,
    rho: &Rational,
    c: Option<&Rational>,
    sampled: Option<usize>,
    seed: Option<u64>,
) -> CliResult<Output> {
    let graph = load_graph(graph)?;
    let strategy = match sampled {
        Some(per_size) => Strategy::Sampled { per_size, seed: need_seed(seed, "sampled certification")? },
        None => Strategy::Exhaustive,
    };
    let c = c.cloned().unwrap_or_else(default_c);
    let cert = certify_coordinate_expansion(&graph, lambda, rho, strategy, &c).at(Stage::Certify)?;
    let row = CertifyRow {
        lambda_target: cert.lambda_target.to_string(),
        rho_target: cert.rho_target.to_string(),
        lambda_g: cert.cond1.lambda_g,
        worst_local: cert.cond1.worst_local,
        cond1: cert.cond1.pass,
        min_retention: cert.cond2.min_retention.to_string(),
        cond2: cert.cond2.pass,
        worst_tail: cert.cond3.worst_tail.to_string(),
        strategy: if sampled.is_some() { "sampled" } else { "exhaustive" },
        cond3: cert.cond3.pass,
        overall: cert.overall,
        c: cert.soundness.c.to_string(),
        k: cert.soundness.k,
        certifies: cert.soundness.certifies,
    };
    output(&cert, &[row])
}

#[derive(Serialize)]
struct CoordRow {
    coord: u32,
    beta: String,
    beta_f64: f64,
}

fn decode(
    domain: &Path,
    table: &Path,
    c: Option<&Rational>,
    rho: Option<&Rational>,
    decoded: Option<&Path>,
) -> CliResult<Output> {
    let dom = load_domain(domain)?;
    let f = load_table(table, &dom)?;
    let c = c.cloned().unwrap_or_else(default_c);
    let profile = conflict_profile(&f, &c, rho).at(Stage::Decode)?;
    if let Some(path) = decoded {
        let (_, d) = dptlab::codec::majority_decode(&f);
        dptlab::io::write_json(path, &TableFile::from_table(&d)).at(Stage::Write)?;
    }
    let rows: Vec<CoordRow> = profile
        .beta_i
        .iter()
        .map(|b| CoordRow { coord: b.coord, beta: b.beta.to_string(), beta_f64: to_f64(&b.beta) })
        .collect();
    output(&profile, &rows)
}

fn test(graph: &Path, table: &Path, trials: Option<u64>, seed: Option<u64>) -> CliResult<Output> {
    let graph = load_graph(graph)?;
    let f = load_table(table, graph.domain())?;
    let report = match trials {
        Some(trials) => {
            run_test_monte_carlo(&f, &graph, trials, need_seed(seed, "monte-carlo testing")?).at(Stage::Test)?
        }
        None => rejection_probability_exact(&f, &graph).at(Stage::Test)?,
    };
    output(&report, std::slice::from_ref(&report))
}

#[derive(Serialize)]
struct SetRow {
    set: usize,
    bits: String,
}

fn adversary(args: &AdversaryArgs, seed: Option<u64>) -> CliResult<Output> {
    let dom = load_domain(&args.domain)?;
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let a = match &args.assignment {
        Some(path) => read::<AssignmentFile>(path)?.into_assignment().at(Stage::Load)?,
        None => {
            let rng = rng.as_mut().ok_or_else(|| {
                CliError::invalid(Stage::Config, "--seed is required when no --assignment is given")
            })?;
            Assignment::new((0..dom.n()).map(|_| rng.gen()).collect())
        }
    };
    let mut next_seed = || -> CliResult<u64> {
        Ok(rng.as_mut().ok_or_else(|| CliError::invalid(Stage::Config, "--seed is required for this adversary"))?.gen())
    };
    let spec = match args.kind {
        AdversaryKind::RandomSets => CorruptionSpec::RandomSetCorruption {
            delta: need(args.delta.clone(), "delta", "random-sets")?,
            seed: next_seed()?,
        },
        AdversaryKind::SingleFlip => CorruptionSpec::PerSetSingleFlip { seed: next_seed()? },
        AdversaryKind::Cluster => {
            let coord = need(args.coord, "coord", "cluster")?;
            let sets = match &args.sets {
                Some(s) => s.clone(),
                None if (1..=dom.n()).contains(&coord) => dom.containing(coord).to_vec(),
                None => return Err(CliError::invalid(Stage::Config, format!("coordinate {coord} out of range"))),
            };
            CorruptionSpec::CoordinateClusterFlip { coord, sets }
        }
    };
    let f = spec.apply(&a, &dom).at(Stage::Corrupt)?;
    let rows: Vec<SetRow> = f
        .values()
        .iter()
        .enumerate()
        .map(|(set, v)| SetRow { set, bits: v.bits().iter().map(|&b| if b { '1' } else { '0' }).collect() })
        .collect();
    output(&TableFile::from_table(&f), &rows)
}

#[derive(Serialize)]
struct AmplifyRow {
    flips: usize,
    delta: String,
    min_encoded_distance: String,
    min_ratio: String,
    min_ratio_f64: f64,
    out_of_regime: bool,
}

#[derive(Serialize)]
struct AmplifyJson {
    n: usize,
    d: usize,
    seed: u64,
    expansion: dptlab::amplify::ExpansionEstimate,
    rows: Vec<AmplifyRow>,
}

/// For every flip count r in 1..=n/d, the smallest amplification ratio over
/// `pairs` random pairs at Hamming distance r.
fn amplify(n: usize, d: usize, samples: Option<usize>, pairs: usize, seed: Option<u64>) -> CliResult<Output> {
    let seed = need_seed(seed, "amplify")?;
    let graph = random_regular_graph(n, d, seed).at(Stage::Build)?;
    let mode = match samples {
        Some(samples) => ExpansionMode::Sampled { samples, seed },
        None => ExpansionMode::BruteForce,
    };
    let expansion = vertex_expansion(&graph, mode).at(Stage::Expansion)?;
    let dom = boundary_domain(&graph).at(Stage::Build)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rows = Vec::new();
    for flips in 1..=n / d.max(1) {
        let mut best: Option<dptlab::amplify::Amplification> = None;
        for _ in 0..pairs.max(1) {
            let x = Assignment::new((0..n).map(|_| rng.gen()).collect());
            let mut bits = x.bits().to_vec();
            order.shuffle(&mut rng);
            for &v in &order[..flips] {
                bits[v] = !bits[v];
            }
            let amp = amplification_ratio(&dom, &x, &Assignment::new(bits)).at(Stage::Expansion)?;
            if best.as_ref().is_none_or(|b| amp.ratio < b.ratio) {
                best = Some(amp);
            }
        }
        let best = best.expect("at least one pair");
        rows.push(AmplifyRow {
            flips,
            delta: best.delta.to_string(),
            min_encoded_distance: best.encoded_distance.to_string(),
            min_ratio_f64: to_f64(&best.ratio),
            min_ratio: best.ratio.to_string(),
            out_of_regime: best.out_of_regime,
        });
    }
    let json = AmplifyJson { n, d, seed, expansion, rows };
    output(&json, &json.rows)
}

#[derive(Serialize)]
struct RunSummary {
    csv: PathBuf,
    rows: usize,
    passed: usize,
    failed: usize,
    not_applicable: usize,
}

fn run(config: &Path, seed: Option<u64>, out: Option<&Path>) -> CliResult<Output> {
    let mut config = ExperimentConfig::load(config)?;
    if seed.is_some() {
        config.seed = seed;
    }
    if let Some(out) = out {
        config.output.csv = out.to_path_buf();
    }
    config.validate()?;
    let report = run_experiment(&config)?;
    let (passed, failed, not_applicable) = report.counts();
    let summary = RunSummary { csv: report.csv.clone(), rows: report.rows.len(), passed, failed, not_applicable };
    output(&summary, &[&summary])
}

/// Executes a parsed command and writes its output. For `run`, `--out`
/// redirects the CSV and the summary goes to stdout.
pub fn execute(cli: &Cli) -> CliResult<()> {
    let out = match &cli.command {
        Command::BuildDomain(args) => build_domain(args, cli.seed)?,
        Command::Spectrum { graph, solver, full } => spectrum(graph, *solver, *full)?,
        Command::Certify { graph, lambda, rho, c, sampled } => {
            certify(graph, lambda, rho, c.as_ref(), *sampled, cli.seed)?
        }
        Command::Decode { domain, table, c, rho, decoded } => {
            decode(domain, table, c.as_ref(), rho.as_ref(), decoded.as_deref())?
        }
        Command::Test { graph, table, trials } => test(graph, table, *trials, cli.seed)?,
        Command::Adversary(args) => adversary(args, cli.seed)?,
        Command::Amplify { n, d, samples, pairs } => amplify(*n, *d, *samples, *pairs, cli.seed)?,
        Command::Run { config } => {
            let out = run(config, cli.seed, cli.out.as_deref())?;
            return emit(&out, cli.format, None);
        }
    };
    emit(&out, cli.format, cli.out.as_deref())
}

fn emit(out: &Output, format: Format, path: Option<&Path>) -> CliResult<()> {
    let bytes = match format {
        Format::Csv => out.csv.clone(),
        Format::Json => {
            let mut text = serde_json::to_vec_pretty(&out.json).at(Stage::Write)?;
            text.push(b'\n');
            text
        }
    };
    match path {
        Some(path) => write_bytes(path, &bytes),
        None => std::io::stdout().lock().write_all(&bytes).at(Stage::Write),
    }
}

