use std::path::{Path, PathBuf};
use std::sync::Arc;

use dptlab::adversary::CorruptionSpec;
use dptlab::certify::{certify_coordinate_expansion, local_clique_retention, soundness_constant, Certificate,
    SoundnessConstants, Strategy, StrategyLabel};
use dptlab::codec::decoding_distance;
use dptlab::exact::{ratio, to_f64};
use dptlab::io::{write_json, AssignmentFile, GraphFile};
use dptlab::tester::{rejection_probability_exact, run_test_monte_carlo, Mode};
use dptlab::testgraph::{build_clique_slice, build_johnson, build_sliding_window};
use dptlab::{dp_distance, dp_encode, Assignment, DPTable, Domain, Rational, TestGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{CertifyConfig, CorruptionConfig, ExperimentConfig, FamilyConfig, StrategyConfig};
use crate::error::{AtStage, CliError, CliResult, Stage};

/// One CSV row. Rationals are exact `p/q` strings; Monte Carlo estimates are
/// decimal. `pass` is `beta <= bound`, or `na` when no bound applies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub seed: u64,
    pub family: String,
    pub n: u32,
    pub k: usize,
    pub t: Option<u32>,
    pub delta_planted: String,
    pub epsilon: String,
    pub beta: String,
    pub bound: String,
    pub pass: String,
}

/// Which soundness bound the rows are checked against.
#[derive(Clone, Debug)]
pub enum BoundRule {
    /// Locally clique with retention at least 1/2: `beta <= 4 epsilon`.
    FourEpsilon,
    /// Certified coordinate expander: `beta <= epsilon / K`.
    OverK(SoundnessConstants),
    None,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub rows: Vec<Row>,
    pub csv: PathBuf,
    pub certificate: Option<Certificate>,
}

impl ExperimentReport {
    pub fn counts(&self) -> (usize, usize, usize) {
        let count = |v: &str| self.rows.iter().filter(|r| r.pass == v).count();
        (count("true"), count("false"), count("na"))
    }
}

pub fn build_family(family: &FamilyConfig) -> CliResult<(Arc<Domain>, TestGraph)> {
    match family {
        FamilyConfig::SlidingWindow { n, k, sparse } => build_sliding_window(*n, *k, *sparse).at(Stage::Build),
        FamilyConfig::CliqueSlice { n } => build_clique_slice(*n).at(Stage::Build),
        FamilyConfig::Johnson { n, k, t } => build_johnson(*n, *k, *t).at(Stage::Build),
        FamilyConfig::GraphFile { path } => {
            let graph = crate::commands::read::<GraphFile>(path)?.into_graph().at(Stage::Load)?;
            Ok((Arc::clone(graph.domain()), graph))
        }
    }
}

fn strategy(config: &CertifyConfig, seed: Option<u64>) -> Strategy {
    match config.strategy {
        StrategyConfig::Exhaustive => Strategy::Exhaustive,
        StrategyConfig::Sampled { per_size } => Strategy::Sampled { per_size, seed: seed.unwrap_or(0) },
    }
}

/// Certifies if requested and picks the bound. A sampled certificate only
/// shows that no violation was found, so it never licenses the ε/K bound.
fn bound_rule(
    graph: &TestGraph,
    certify: Option<&CertifyConfig>,
    seed: Option<u64>,
) -> CliResult<(BoundRule, Option<Certificate>)> {
    let certificate = match certify {
        Some(c) => Some(
            certify_coordinate_expansion(graph, &c.lambda, &c.rho, strategy(c, seed), &c.c).at(Stage::Certify)?,
        ),
        None => None,
    };
    if local_clique_retention(graph).is_some_and(|c| c >= ratio(1, 2)) {
        return Ok((BoundRule::FourEpsilon, certificate));
    }
    if let (Some(c), Some(cert)) = (certify, &certificate) {
        let constants = soundness_constant(&c.lambda, &c.rho, &c.c).at(Stage::Certify)?;
        if cert.overall && cert.cond3.strategy == StrategyLabel::Exhaustive && constants.certifies() {
            return Ok((BoundRule::OverK(constants), certificate));
        }
    }
    Ok((BoundRule::None, certificate))
}

fn corruption_spec(config: &CorruptionConfig, dom: &Domain, seed: u64) -> Option<CorruptionSpec> {
    match config {
        CorruptionConfig::None => None,
        CorruptionConfig::RandomSetCorruption { delta } => {
            Some(CorruptionSpec::RandomSetCorruption { delta: delta.clone(), seed })
        }
        CorruptionConfig::PerSetSingleFlip => Some(CorruptionSpec::PerSetSingleFlip { seed }),
        CorruptionConfig::CoordinateClusterFlip { coord, sets } => Some(CorruptionSpec::CoordinateClusterFlip {
            coord: *coord,
            sets: sets.clone().unwrap_or_else(|| {
                if (1..=dom.n()).contains(coord) {
                    dom.containing(*coord).to_vec()
                } else {
                    Vec::new()
                }
            }),
        }),
    }
}

struct Shared<'a> {
    config: &'a ExperimentConfig,
    dom: Arc<Domain>,
    graph: TestGraph,
    planted: Option<Assignment>,
    rule: BoundRule,
}

fn random_assignment<R: Rng>(n: u32, rng: &mut R) -> Assignment {
    Assignment::new((0..n).map(|_| rng.gen()).collect())
}

fn bound_and_pass(rule: &BoundRule, epsilon: &Epsilon, beta: &Rational) -> (String, String) {
    match (rule, epsilon) {
        (BoundRule::FourEpsilon, Epsilon::Exact(e)) => {
            let bound = e * ratio(4, 1);
            let pass = beta <= &bound;
            (bound.to_string(), pass.to_string())
        }
        (BoundRule::FourEpsilon, Epsilon::Estimate(e)) => {
            let bound = 4.0 * e;
            (format!("{bound}"), (to_f64(beta) <= bound).to_string())
        }
        (BoundRule::OverK(k), Epsilon::Exact(e)) => {
            let pass = k.bound_holds(beta, e).expect("K > 0 was checked when choosing the rule");
            (format!("{e}/({})", k.k), pass.to_string())
        }
        (BoundRule::OverK(k), Epsilon::Estimate(e)) => {
            let bound = e / k.k.to_f64();
            (format!("{bound}"), (to_f64(beta) <= bound).to_string())
        }
        (BoundRule::None, _) => (String::new(), "na".into()),
    }
}

enum Epsilon {
    Exact(Rational),
    Estimate(f64),
}

impl Epsilon {
    fn render(&self) -> String {
        match self {
            Epsilon::Exact(e) => e.to_string(),
            Epsilon::Estimate(e) => format!("{e}"),
        }
    }
}

fn run_instance(shared: &Shared, seed: u64) -> CliResult<Row> {
    let config = shared.config;
    let dom = &shared.dom;
    // one stream per instance: planted assignment, then corruption and tester seeds
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted = match &shared.planted {
        Some(a) => a.clone(),
        None => random_assignment(dom.n(), &mut rng),
    };
    let corruption_seed: u64 = rng.gen();
    let tester_seed: u64 = rng.gen();

    let codeword = dp_encode(&planted, dom).at(Stage::Corrupt)?;
    let f: DPTable = match corruption_spec(&config.corruption, dom, corruption_seed) {
        Some(spec) => spec.apply(&planted, dom).at(Stage::Corrupt)?,
        None => codeword.clone(),
    };
    let delta_planted = dp_distance(&f, &codeword).at(Stage::Corrupt)?;
    let beta = decoding_distance(&f).at(Stage::Decode)?;
    let epsilon = match config.tester.mode {
        Mode::Exact => {
            let report = rejection_probability_exact(&f, &shared.graph).at(Stage::Test)?;
            Epsilon::Exact(report.exact.expect("exact mode reports a rational"))
        }
        Mode::MonteCarlo => {
            let report =
                run_test_monte_carlo(&f, &shared.graph, config.tester.trials, tester_seed).at(Stage::Test)?;
            Epsilon::Estimate(report.rejection)
        }
    };
    let (bound, pass) = bound_and_pass(&shared.rule, &epsilon, &beta);
    let t = match config.family {
        FamilyConfig::Johnson { t, .. } => Some(t),
        _ => None,
    };
    Ok(Row {
        seed,
        family: config.family.label().into(),
        n: dom.n(),
        k: dom.max_set_len(),
        t,
        delta_planted: delta_planted.to_string(),
        epsilon: epsilon.render(),
        beta: beta.to_string(),
        bound,
        pass,
    })
}

/// Runs every instance (in parallel) and returns the rows in seed order
/// without writing anything.
pub fn compute_experiment(config: &ExperimentConfig) -> CliResult<(Vec<Row>, Option<Certificate>)> {
    config.validate()?;
    let (dom, graph) = build_family(&config.family)?;
    let planted = match &config.assignment {
        Some(path) => {
            let a = crate::commands::read::<AssignmentFile>(path)?.into_assignment().at(Stage::Load)?;
            if a.len() != dom.n() as usize {
                return Err(CliError::invalid(
                    Stage::Load,
                    format!("assignment has {} bits but the domain has n = {}", a.len(), dom.n()),
                ));
            }
            Some(a)
        }
        None => None,
    };
    let (rule, certificate) = bound_rule(&graph, config.certify.as_ref(), config.seed)?;
    let shared = Shared { config, dom, graph, planted, rule };
    let base = config.seed.unwrap_or(0);
    let rows = (0..config.instances)
        .into_par_iter()
        .map(|i| run_instance(&shared, base + i))
        .collect::<CliResult<Vec<Row>>>()?;
    Ok((rows, certificate))
}

pub fn rows_to_csv(rows: &[Row]) -> CliResult<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).at(Stage::Write)?;
    }
    writer.into_inner().map_err(|e| CliError::new(Stage::Write, e.into_error()))
}

/// Builds everything, writes the CSV (and the certificate JSON if
/// requested) and returns the rows.
pub fn run_experiment(config: &ExperimentConfig) -> CliResult<ExperimentReport> {
    let (rows, certificate) = compute_experiment(config)?;
    write_bytes(&config.output.csv, &rows_to_csv(&rows)?)?;
    if let (Some(path), Some(cert)) = (&config.output.certificate, &certificate) {
        write_json(path, cert).at(Stage::Write)?;
    }
    Ok(ExperimentReport { rows, csv: config.output.csv.clone(), certificate })
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).at(Stage::Write)?;
    }
    std::fs::write(path, bytes).at(Stage::Write)
}
