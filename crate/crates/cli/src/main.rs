mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use srcrank::datasets;
use srcrank::diffusion::{
    revealed_count, sample_observed, sample_source_degree_binned, simulate_ic, simulate_trunc_gaussian,
    TimestampDistribution,
};
use srcrank::eval::{
    rank_real_cascade, run_edge_removal_experiment, run_experiment, run_ratio_experiment, write_report_csv,
    write_runs_csv, DiffusionModel, ExperimentConfig, RatioConfig, IC_JITTER,
};
use srcrank::graph::load_edge_list;
use srcrank::observation::{read_observation, write_observation};
use srcrank::ranking::{write_rankings_csv, Algorithm};
use srcrank::{Error, Graph};

/// Name accepted by --graph for the built-in Florentine families network.
const FLORENTINE: &str = "builtin:florentine";

#[derive(Parser, Debug)]
#[command(name = "srcrank", version, about = "Rank likely contagion sources from partial infection timestamps")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one cascade and write its observation and ground truth.
    Simulate(SimulateArgs),
    /// Rank the infected nodes of an observation file.
    Rank(RankArgs),
    /// Run the simulation protocol and report gamma%-accuracy per algorithm.
    Evaluate(EvaluateArgs),
    /// Compare the greedy tree cost with the exact minimum on a small graph.
    OracleRatio(RatioArgs),
    /// Evaluate on copies of the graph with random edges removed.
    RemoveEdges(RemoveArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// key=value file mirroring these flags; flags on the command line win.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for all randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to the available cores. Output does not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output file; standard output when omitted or "-".
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct GraphArgs {
    /// Edge list, two node labels per line; "builtin:florentine" for the bundled network.
    #[arg(long, value_name = "PATH")]
    graph: PathBuf,
    /// Treat each line as an arc rather than an undirected edge.
    #[arg(long)]
    directed: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ModelArg {
    Gaussian,
    Ic,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum DistArg {
    Unbiased,
    Biased,
}

impl From<DistArg> for TimestampDistribution {
    fn from(d: DistArg) -> Self {
        match d {
            DistArg::Unbiased => TimestampDistribution::Unbiased,
            DistArg::Biased => TimestampDistribution::TimeBiased,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum AlgoArg {
    Cr,
    Tr,
    Rum,
    Ecce,
    Netsleuth,
    Gau,
    All,
}

fn algorithms(args: &[AlgoArg]) -> Vec<Algorithm> {
    let mut out = Vec::new();
    for a in args {
        let add: &[Algorithm] = match a {
            AlgoArg::Cr => &[Algorithm::Cr],
            AlgoArg::Tr => &[Algorithm::Tr],
            AlgoArg::Rum => &[Algorithm::Rum],
            AlgoArg::Ecce => &[Algorithm::Ecce],
            AlgoArg::Netsleuth => &[Algorithm::Netsleuth],
            AlgoArg::Gau => &[Algorithm::Gau],
            AlgoArg::All => &Algorithm::ALL,
        };
        for &x in add {
            if !out.contains(&x) {
                out.push(x);
            }
        }
    }
    out
}

#[derive(Args, Debug, Clone)]
struct ProtocolArgs {
    /// Diffusion model.
    #[arg(long, value_enum, default_value_t = ModelArg::Gaussian)]
    model: ModelArg,
    /// Mean per-hop delay of the truncated Gaussian model.
    #[arg(long, default_value_t = 100.0)]
    mu: f64,
    /// Standard deviation of the truncated Gaussian model.
    #[arg(long, default_value_t = 100.0)]
    sigma: f64,
    /// Stop the cascade once this many nodes are infected.
    #[arg(long, default_value_t = 200)]
    stop_count: usize,
    /// Degree bins for drawing the source.
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Fraction of infected nodes whose timestamps are revealed.
    #[arg(long, default_value_t = 0.5)]
    fraction: f64,
    /// Which timestamps are revealed.
    #[arg(long, value_enum, default_value_t = DistArg::Unbiased)]
    dist: DistArg,
    /// Allow the source's own timestamp to be revealed.
    #[arg(long)]
    include_source: bool,
}

#[derive(Args, Debug, Clone)]
#[command(args_override_self = true)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Source label; drawn by degree bin when omitted.
    #[arg(long)]
    source: Option<String>,
    /// Ground-truth file; defaults to the --out path with ".truth" appended.
    #[arg(long, value_name = "PATH")]
    truth: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
#[command(args_override_self = true)]
struct RankArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    graph: GraphArgs,
    /// Observation file: one infected node per line, optionally followed by its time.
    #[arg(long, value_name = "PATH")]
    obs: PathBuf,
    /// Algorithms to run, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "tr")]
    algo: Vec<AlgoArg>,
    /// Per-hop delay; estimated from the timestamps when omitted.
    #[arg(long)]
    mu: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct ExperimentArgs {
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Algorithms to run, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    algo: Vec<AlgoArg>,
    /// Number of simulated runs.
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Gamma values in percent, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    gammas: Vec<f64>,
    /// Per-hop delay given to the rankers; estimated per run when omitted.
    #[arg(long)]
    ranker_mu: Option<f64>,
    /// Also write one row per run and algorithm to this file.
    #[arg(long, value_name = "PATH")]
    runs_out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
#[command(args_override_self = true)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args, Debug, Clone)]
#[command(args_override_self = true)]
struct RemoveArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Numbers of edges to remove, comma separated; one experiment each.
    #[arg(long, value_delimiter = ',', required = true)]
    removals: Vec<usize>,
}

#[derive(Args, Debug, Clone)]
#[command(args_override_self = true)]
struct RatioArgs {
    #[command(flatten)]
    common: Common,
    /// Edge list; the built-in Florentine families network when omitted.
    #[arg(long, value_name = "PATH")]
    graph: Option<PathBuf>,
    /// Mean per-hop delay.
    #[arg(long, default_value_t = 100.0)]
    mu: f64,
    /// Standard deviation of the per-hop delay.
    #[arg(long, default_value_t = 100.0)]
    sigma: f64,
    /// Numbers of revealed timestamps, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "5,8,11,14")]
    timestamps: Vec<usize>,
    /// Runs per timestamp count.
    #[arg(long, default_value_t = 500)]
    runs: usize,
    /// Estimate the per-hop delay from each observation instead of using --mu in the cost.
    #[arg(long)]
    estimate_mu: bool,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::TooFewTimestamps { .. } => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn load_graph(path: &Path, directed: bool) -> Result<Graph, Failure> {
    if path == Path::new(FLORENTINE) {
        if directed {
            return Err(usage("the built-in Florentine network is undirected"));
        }
        return Ok(datasets::florentine());
    }
    let file = File::open(path).map_err(|e| Failure {
        code: 1,
        message: format!("cannot open graph {}: {e}", path.display()),
    })?;
    let (g, stats) = load_edge_list(BufReader::new(file), directed)?;
    if stats.self_loops > 0 || stats.duplicates > 0 {
        log::warn!(
            "{}: dropped {} self-loops and {} duplicate edges",
            path.display(),
            stats.self_loops,
            stats.duplicates
        );
    }
    Ok(g)
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            let f = File::create(p).map_err(|e| Failure {
                code: 1,
                message: format!("cannot create {}: {e}", p.display()),
            })?;
            Ok(Box::new(BufWriter::new(f)))
        }
        _ => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn experiment_config(graph: &GraphArgs, exp: &ExperimentArgs, seed: u64) -> ExperimentConfig {
    let p = &exp.protocol;
    ExperimentConfig {
        graph: graph.graph.display().to_string(),
        directed: graph.directed,
        model: match p.model {
            ModelArg::Gaussian => DiffusionModel::TruncGaussian {
                mu: p.mu,
                sigma: p.sigma,
            },
            ModelArg::Ic => DiffusionModel::Ic,
        },
        stop_count: p.stop_count,
        bins: p.bins,
        fraction: p.fraction,
        distribution: p.dist.into(),
        exclude_source: !p.include_source,
        algorithms: algorithms(&exp.algo),
        runs: exp.runs,
        gammas: exp.gammas.clone(),
        seed,
        ranker_mu: exp.ranker_mu,
    }
}

fn simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let g = load_graph(&a.graph.graph, a.graph.directed)?;
    let p = &a.protocol;
    let out = a.common.out.clone().ok_or_else(|| usage("simulate needs --out"))?;
    if out.as_os_str() == "-" && a.truth.is_none() {
        return Err(usage("simulate needs --truth when writing the observation to standard output"));
    }
    let truth_path = a.truth.clone().unwrap_or_else(|| {
        let mut s = out.clone().into_os_string();
        s.push(".truth");
        s.into()
    });
    if !(p.fraction > 0.0 && p.fraction < 1.0) {
        return Err(usage(format!("--fraction must lie in (0, 1), got {}", p.fraction)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.common.seed);
    let source = match &a.source {
        Some(label) => g
            .node_by_label(label)
            .ok_or_else(|| Failure::from(Error::UnknownLabel(label.clone())))?,
        None => sample_source_degree_binned(&g, p.bins, &mut rng)?,
    };
    let truth = match p.model {
        ModelArg::Gaussian => simulate_trunc_gaussian(&g, source, p.stop_count, p.mu, p.sigma, &mut rng)?,
        ModelArg::Ic => simulate_ic(&g, source, p.stop_count, &mut rng)?.jittered(IC_JITTER, &mut rng),
    };
    let exclude = !p.include_source;
    let count = revealed_count(p.fraction, truth.len()).min(truth.len() - usize::from(exclude));
    let obs = sample_observed(&truth, count, p.dist.into(), exclude, &mut rng)?;

    let mut w = open_out(&Some(out))?;
    write_observation(&obs, &g, &mut w)?;
    w.flush()?;
    let mut w = open_out(&Some(truth_path))?;
    truth.write_ground_truth(&g, &mut w)?;
    w.flush()?;
    Ok(())
}

fn rank(a: &RankArgs) -> Result<(), Failure> {
    let g = load_graph(&a.graph.graph, a.graph.directed)?;
    let file = File::open(&a.obs).map_err(|e| Failure {
        code: 1,
        message: format!("cannot open observation {}: {e}", a.obs.display()),
    })?;
    let obs = read_observation(BufReader::new(file), &g)?;
    let rankings = rank_real_cascade(&g, &obs, &algorithms(&a.algo), a.mu)?;
    let mut w = open_out(&a.common.out)?;
    write_rankings_csv(&rankings, &g, &mut w)?;
    w.flush()?;
    Ok(())
}

fn evaluate(a: &EvaluateArgs) -> Result<(), Failure> {
    let g = load_graph(&a.graph.graph, a.graph.directed)?;
    let cfg = experiment_config(&a.graph, &a.experiment, a.common.seed);
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let report = run_experiment(&g, &cfg)?;
    let mut w = open_out(&a.common.out)?;
    write_report_csv(&report, &mut w)?;
    w.flush()?;
    if let Some(path) = &a.experiment.runs_out {
        let mut w = open_out(&Some(path.clone()))?;
        write_runs_csv(&report, &g, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn remove_edges(a: &RemoveArgs) -> Result<(), Failure> {
    let g = load_graph(&a.graph.graph, a.graph.directed)?;
    let cfg = experiment_config(&a.graph, &a.experiment, a.common.seed);
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let reports = run_edge_removal_experiment(&g, &cfg, &a.removals)?;
    let mut w = open_out(&a.common.out)?;
    writeln!(w, "removed,algorithm,gamma,accuracy,runs,config_hash")?;
    for (k, report) in &reports {
        for r in &report.rows {
            writeln!(
                w,
                "{k},{},{},{},{},{}",
                r.algorithm, r.gamma, r.accuracy, r.runs, report.config_hash
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn oracle_ratio(a: &RatioArgs) -> Result<(), Failure> {
    let g = match &a.graph {
        Some(p) => load_graph(p, false)?,
        None => datasets::florentine(),
    };
    let mut w = open_out(&a.common.out)?;
    writeln!(w, "timestamps,mean_ratio,runs,non_finite")?;
    for &k in &a.timestamps {
        let cfg = RatioConfig {
            mu: a.mu,
            sigma: a.sigma,
            observed: k,
            runs: a.runs,
            seed: a.common.seed,
            cost_mu: if a.estimate_mu { None } else { Some(a.mu) },
        };
        let report = run_ratio_experiment(&g, &cfg)?;
        writeln!(w, "{k},{},{},{}", report.mean, report.ratios.len(), report.non_finite)?;
    }
    w.flush()?;
    Ok(())
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Simulate(a) => &a.common,
        Command::Rank(a) => &a.common,
        Command::Evaluate(a) => &a.common,
        Command::OracleRatio(a) => &a.common,
        Command::RemoveEdges(a) => &a.common,
    }
}

fn dispatch(cmd: &Command) -> Result<(), Failure> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Rank(a) => rank(a),
        Command::Evaluate(a) => evaluate(a),
        Command::OracleRatio(a) => oracle_ratio(a),
        Command::RemoveEdges(a) => remove_edges(a),
    }
}

/// Parses the command line, splicing in a config file's flags ahead of the
/// explicit ones.
fn parse() -> Result<Cli, Failure> {
    let raw: Vec<OsString> = std::env::args_os().collect();
    let Some(path) = config::find_config_flag(&raw) else {
        return Ok(Cli::parse_from(raw));
    };
    let given = config::given_flags(&raw);
    let mut entries = config::read_config(Path::new(&path)).map_err(usage)?;
    entries.retain(|(k, _)| !given.contains(k));
    let extra = config::to_args(&entries).map_err(usage)?;
    // The subcommand is the first argument that is not a flag.
    let sub = raw.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-'));
    let Some(sub) = sub.map(|i| i + 1) else {
        return Ok(Cli::parse_from(raw));
    };
    let mut args = raw[..=sub].to_vec();
    args.extend(extra);
    args.extend_from_slice(&raw[sub + 1..]);
    Ok(Cli::parse_from(args))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = parse().and_then(|cli| {
        let jobs = common(&cli.command).jobs;
        if jobs == Some(0) {
            return Err(usage("--jobs must be at least 1"));
        }
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(j) = jobs {
            pool = pool.num_threads(j);
        }
        let pool = pool.build().map_err(|e| Failure {
            code: 1,
            message: e.to_string(),
        })?;
        pool.install(|| dispatch(&cli.command))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("srcrank: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
