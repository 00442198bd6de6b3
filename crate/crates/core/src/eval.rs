//! Simulation experiments: draw a source, run a cascade, reveal some timestamps,
//! rank, and score where the true source landed.

use std::io::Write;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::diffusion::{
    revealed_count, sample_observed, sample_source_degree_binned, simulate_ic, simulate_trunc_gaussian,
    ContagionResult, TimestampDistribution,
};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::observation::Observation;
use crate::oracle::approximation_ratio;
use crate::ranking::{rank_view, Algorithm, Ranking};
use crate::view::CascadeView;
use crate::NodeId;

/// Simulation attempts per run before giving up.
pub const MAX_ATTEMPTS: usize = 100;

/// Noise added to slotted (IC) times so that revealed timestamps do not tie.
pub const IC_JITTER: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiffusionModel {
    TruncGaussian { mu: f64, sigma: f64 },
    Ic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Free-form description of the graph (usually its path), echoed into the config hash.
    pub graph: String,
    pub directed: bool,
    pub model: DiffusionModel,
    pub stop_count: usize,
    pub bins: usize,
    pub fraction: f64,
    pub distribution: TimestampDistribution,
    pub exclude_source: bool,
    pub algorithms: Vec<Algorithm>,
    pub runs: usize,
    pub gammas: Vec<f64>,
    pub seed: u64,
    /// Per-hop delay handed to the rankers; estimated from each observation when `None`.
    pub ranker_mu: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            graph: String::new(),
            directed: false,
            model: DiffusionModel::TruncGaussian { mu: 100.0, sigma: 100.0 },
            stop_count: 200,
            bins: 10,
            fraction: 0.5,
            distribution: TimestampDistribution::Unbiased,
            exclude_source: true,
            algorithms: Algorithm::ALL.to_vec(),
            runs: 100,
            gammas: vec![10.0],
            seed: 0,
            ranker_mu: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return bad(format!("timestamp fraction must lie in (0, 1), got {}", self.fraction));
        }
        if let Some(g) = self.gammas.iter().find(|&&g| !(g > 0.0 && g <= 100.0)) {
            return bad(format!("gamma must lie in (0, 100], got {g}"));
        }
        if self.gammas.is_empty() || self.algorithms.is_empty() {
            return bad("need at least one gamma and one algorithm".into());
        }
        if self.stop_count == 0 || self.bins == 0 {
            return bad("stop count and bins must be positive".into());
        }
        if let DiffusionModel::TruncGaussian { mu, sigma } = self.model {
            if mu.is_nan() || mu <= 0.0 || sigma.is_nan() || sigma < 0.0 {
                return bad(format!("need mu > 0 and sigma >= 0, got mu={mu}, sigma={sigma}"));
            }
        }
        Ok(())
    }

    /// Canonical `key=value` lines; two configs describe the same experiment
    /// exactly when these agree.
    pub fn describe(&self) -> String {
        let model = match self.model {
            DiffusionModel::TruncGaussian { mu, sigma } => format!("gaussian\nmu={mu}\nsigma={sigma}"),
            DiffusionModel::Ic => "ic".to_string(),
        };
        let algos: Vec<&str> = self.algorithms.iter().map(|a| a.name()).collect();
        let gammas: Vec<String> = self.gammas.iter().map(|g| g.to_string()).collect();
        format!(
            "graph={}\ndirected={}\nmodel={}\nstop-count={}\nbins={}\nfraction={}\ndist={}\nexclude-source={}\nalgo={}\nruns={}\ngammas={}\nseed={}\nranker-mu={}\n",
            self.graph,
            self.directed,
            model,
            self.stop_count,
            self.bins,
            self.fraction,
            match self.distribution {
                TimestampDistribution::Unbiased => "unbiased",
                TimestampDistribution::TimeBiased => "biased",
            },
            self.exclude_source,
            algos.join(","),
            self.runs,
            gammas.join(","),
            self.seed,
            self.ranker_mu.map_or("estimate".to_string(), |m| m.to_string()),
        )
    }

    /// First 16 hex digits of the SHA-256 of [`describe`](Self::describe).
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.describe().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Where the true source landed in one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub source: NodeId,
    pub infected_count: usize,
    /// 1-based rank of the source under each configured algorithm, in config order.
    pub ranks: Vec<(Algorithm, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub accuracy: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub rows: Vec<AccuracyRow>,
    pub config_hash: String,
    pub records: Vec<RunRecord>,
}

impl AccuracyReport {
    pub fn accuracy(&self, algorithm: Algorithm, gamma: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.algorithm == algorithm && r.gamma == gamma)
            .map(|r| r.accuracy)
    }
}

/// Number of top positions that count as a hit: `ceil(gamma% of n)`.
pub fn gamma_cutoff(gamma: f64, n: usize) -> usize {
    (gamma * n as f64 / 100.0).ceil() as usize
}

/// Fraction of runs whose source is within the top `gamma` percent of its ranking.
pub fn gamma_accuracy(rankings: &[Ranking], sources: &[NodeId], gamma: f64) -> Result<f64> {
    if rankings.len() != sources.len() || rankings.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} rankings for {} sources",
            rankings.len(),
            sources.len()
        )));
    }
    let mut hits = 0;
    for (r, &s) in rankings.iter().zip(sources) {
        let rank = r.rank_of(s).ok_or(Error::SourceNotRanked(s))?;
        if rank <= gamma_cutoff(gamma, r.len()) {
            hits += 1;
        }
    }
    Ok(hits as f64 / rankings.len() as f64)
}

/// The generator for run `run` of an experiment seeded with `seed`.
pub fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

/// One simulated run: the cascade and what is revealed of it.
#[derive(Debug, Clone)]
pub struct SimulatedRun {
    pub truth: ContagionResult,
    pub observation: Observation,
}

/// Draws the source, cascade and observation for run `run`. Cascades that die
/// out or cannot reach `stop_count` nodes are redrawn with a fresh source.
pub fn simulate_run(g: &Graph, cfg: &ExperimentConfig, run: usize) -> Result<SimulatedRun> {
    let mut rng = run_rng(cfg.seed, run);
    let mut last = None;
    for _ in 0..MAX_ATTEMPTS {
        let source = sample_source_degree_binned(g, cfg.bins, &mut rng)?;
        let simulated = match cfg.model {
            DiffusionModel::TruncGaussian { mu, sigma } => {
                simulate_trunc_gaussian(g, source, cfg.stop_count, mu, sigma, &mut rng)
            }
            DiffusionModel::Ic => simulate_ic(g, source, cfg.stop_count, &mut rng).map(|r| r.jittered(IC_JITTER, &mut rng)),
        };
        let truth = match simulated {
            Ok(t) => t,
            Err(e) if e.is_retryable() => {
                last = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let eligible = truth.len() - usize::from(cfg.exclude_source);
        let count = revealed_count(cfg.fraction, truth.len()).min(eligible);
        let observation = sample_observed(&truth, count, cfg.distribution, cfg.exclude_source, &mut rng)?;
        return Ok(SimulatedRun { truth, observation });
    }
    Err(Error::RetriesExhausted {
        run,
        attempts: MAX_ATTEMPTS,
        last: last.map_or_else(String::new, |e| e.to_string()),
    })
}

fn score_run(g: &Graph, cfg: &ExperimentConfig, run: usize) -> Result<RunRecord> {
    let sim = simulate_run(g, cfg, run)?;
    let view = CascadeView::new(g, &sim.observation)?;
    let rankings = rank_view(g, &view, &cfg.algorithms, cfg.ranker_mu)?;
    let source = sim.truth.source;
    let ranks = rankings
        .iter()
        .map(|r| Ok((r.algorithm, r.rank_of(source).ok_or(Error::SourceNotRanked(source))?)))
        .collect::<Result<_>>()?;
    Ok(RunRecord {
        run,
        source,
        infected_count: sim.truth.len(),
        ranks,
    })
}

fn summarize(cfg: &ExperimentConfig, records: Vec<RunRecord>) -> AccuracyReport {
    let mut rows = Vec::new();
    for (i, &algorithm) in cfg.algorithms.iter().enumerate() {
        for &gamma in &cfg.gammas {
            let hits = records
                .iter()
                .filter(|r| r.ranks[i].1 <= gamma_cutoff(gamma, r.infected_count))
                .count();
            rows.push(AccuracyRow {
                algorithm,
                gamma,
                accuracy: hits as f64 / records.len() as f64,
                runs: records.len(),
            });
        }
    }
    AccuracyReport {
        rows,
        config_hash: cfg.hash(),
        records,
    }
}

/// Runs the whole protocol on `g`. Runs are independent and may execute in
/// parallel; the result does not depend on the thread count.
pub fn run_experiment(g: &Graph, cfg: &ExperimentConfig) -> Result<AccuracyReport> {
    cfg.validate()?;
    let records = (0..cfg.runs)
        .into_par_iter()
        .map(|run| score_run(g, cfg, run))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(cfg, records))
}

/// Runs the protocol once per removal count, each time on `g` with that many
/// edges removed at random without disconnecting it.
pub fn run_edge_removal_experiment(
    g: &Graph,
    cfg: &ExperimentConfig,
    removals: &[usize],
) -> Result<Vec<(usize, AccuracyReport)>> {
    removals
        .iter()
        .map(|&k| {
            let mut rng = run_rng(cfg.seed, usize::MAX);
            let reduced = g.remove_random_edges_connected(k, &mut rng)?;
            Ok((k, run_experiment(&reduced, cfg)?))
        })
        .collect()
}

/// Ranks an observed cascade as given. When only part of the infected set is
/// known, the rankings are best read as "likely earliest observed node".
pub fn rank_real_cascade(
    g: &Graph,
    obs: &Observation,
    algorithms: &[Algorithm],
    mu: Option<f64>,
) -> Result<Vec<Ranking>> {
    let view = CascadeView::new(g, obs)?;
    view.ensure_connected()?;
    rank_view(g, &view, algorithms, mu)
}

pub fn write_report_csv<W: Write>(report: &AccuracyReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "algorithm,gamma,accuracy,runs,config_hash")?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.algorithm, r.gamma, r.accuracy, r.runs, report.config_hash
        )?;
    }
    Ok(())
}

pub fn write_runs_csv<W: Write>(report: &AccuracyReport, g: &Graph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "run,algorithm,source,rank,infected_count")?;
    for rec in &report.records {
        for &(algorithm, rank) in &rec.ranks {
            writeln!(
                out,
                "{},{},{},{},{}",
                rec.run,
                algorithm,
                g.label(rec.source),
                rank,
                rec.infected_count
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioConfig {
    pub mu: f64,
    pub sigma: f64,
    /// Timestamps revealed per run (never the source's).
    pub observed: usize,
    pub runs: usize,
    pub seed: u64,
    /// Per-hop delay for the cost function; estimated per observation when `None`.
    pub cost_mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub observed: usize,
    /// Mean over runs with a finite ratio.
    pub mean: f64,
    pub ratios: Vec<f64>,
    /// Runs whose ratio was infinite or undefined, excluded from the mean.
    pub non_finite: usize,
}

/// Approximation-ratio study: the whole graph is infected from a uniformly
/// chosen source, `observed` other nodes reveal their times, and the EIF
/// minimum cost is compared with the exact minimum.
pub fn run_ratio_experiment(g: &Graph, cfg: &RatioConfig) -> Result<RatioReport> {
    let n = g.node_count();
    if cfg.runs == 0 || cfg.observed == 0 || cfg.observed >= n {
        return Err(Error::InvalidArgument(format!(
            "need runs >= 1 and 1 <= observed < {n}, got runs={} observed={}",
            cfg.runs, cfg.observed
        )));
    }
    let nodes: Vec<NodeId> = (0..n).collect();
    let ratios = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = run_rng(cfg.seed, run);
            let source = *nodes.choose(&mut rng).expect("graph is non-empty");
            let truth = simulate_trunc_gaussian(g, source, n, cfg.mu, cfg.sigma, &mut rng)?;
            let obs = sample_observed(&truth, cfg.observed, TimestampDistribution::Unbiased, true, &mut rng)?;
            let mu = match cfg.cost_mu {
                Some(m) => m,
                None => crate::eif::estimate_mu(g, &obs)?,
            };
            Ok(approximation_ratio(g, &obs, mu)?.ratio)
        })
        .collect::<Result<Vec<f64>>>()?;
    let finite: Vec<f64> = ratios.iter().copied().filter(|r| r.is_finite()).collect();
    let mean = finite.iter().sum::<f64>() / finite.len() as f64;
    Ok(RatioReport {
        observed: cfg.observed,
        mean,
        non_finite: ratios.len() - finite.len(),
        ratios,
    })
}
