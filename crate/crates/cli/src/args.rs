use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "roadpriv", version, about = "Location privacy on road networks")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Seed for every random draw. Recorded in metadata sidecars.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Report wall-clock time per phase on standard error.
    #[arg(long, global = true)]
    pub timing: bool,
    /// Output file. A `<out>.meta.json` sidecar is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic road graph.
    Generate {
        #[command(subcommand)]
        shape: Shape,
    },
    /// Sample pseudolocations from the graph-exponential mechanism.
    Perturb(PerturbArgs),
    /// Export a mechanism matrix as CSV.
    Mechanism(MechanismArgs),
    /// Quality loss, adversarial error, PC and TP of a mechanism.
    Evaluate(EvaluateArgs),
    /// Export an inference strategy as CSV.
    Attack(AttackArgs),
    /// Greedy output-range search.
    Optimize(OptimizeArgs),
    /// Run a canned experiment and print its table.
    Scenario(ScenarioArgs),
}

#[derive(Debug, Subcommand)]
pub enum Shape {
    /// Evenly spaced vertices on a straight segment.
    Line {
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 1000.0)]
        length: f64,
    },
    /// Two vertices joined by one edge that may be longer than their distance.
    TwoVertex {
        #[arg(long, default_value_t = 100.0)]
        euclid: f64,
        #[arg(long)]
        shortest: f64,
    },
    /// Square lattice.
    Lattice {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long, default_value_t = 100.0)]
        spacing: f64,
    },
    /// Two straight roads crossing at the origin.
    Cross {
        #[arg(long, default_value_t = 2000.0)]
        arm: f64,
        #[arg(long, default_value_t = 100.0)]
        spacing: f64,
    },
}

#[derive(Debug, Args)]
pub struct GraphInput {
    /// Graph file (`ggraph v1`).
    #[arg(long)]
    pub graph: PathBuf,
    /// Privacy parameter in 1/m.
    #[arg(long)]
    pub eps: f64,
    /// Output range file (`ggrange v1`); defaults to every vertex.
    #[arg(long)]
    pub range: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PriorInput {
    /// Prior CSV (`vertex_id,probability`); defaults to uniform.
    #[arg(long)]
    pub prior: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Graph-exponential mechanism.
    Gem,
    /// Planar Laplace snapped to the nearest vertex.
    Plmg,
}

#[derive(Debug, Args)]
pub struct KindArgs {
    #[arg(long, value_enum, default_value_t = Kind::Gem)]
    pub kind: Kind,
    /// PLMG grid step in metres.
    #[arg(long, default_value_t = 25.0)]
    pub grid_step: f64,
    /// PLMG grid padding in metres (default 10/eps).
    #[arg(long)]
    pub padding: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Shortest,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackArg {
    /// Bayes decision minimizing expected distance.
    Optimal,
    /// The posterior itself as a randomized guess.
    Posterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Optimal,
    Posterior,
    /// Most probable vertex.
    Map,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("location").required(true).args(["vertex", "x"]))]
pub struct PerturbArgs {
    #[command(flatten)]
    pub input: GraphInput,
    /// True vertex id.
    #[arg(long)]
    pub vertex: Option<usize>,
    /// True x coordinate; snapped to the nearest vertex.
    #[arg(long, requires = "y")]
    pub x: Option<f64>,
    #[arg(long, requires = "x")]
    pub y: Option<f64>,
    /// Number of independent draws, one per line.
    #[arg(long, default_value_t = 1)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct MechanismArgs {
    #[command(flatten)]
    pub input: GraphInput,
    #[command(flatten)]
    pub kind: KindArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: GraphInput,
    #[command(flatten)]
    pub prior: PriorInput,
    #[command(flatten)]
    pub kind: KindArgs,
    #[arg(long, value_enum, default_value_t = MetricArg::Shortest)]
    pub metric: MetricArg,
    #[arg(long, value_enum, default_value_t = AttackArg::Optimal)]
    pub attack: AttackArg,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[command(flatten)]
    pub input: GraphInput,
    #[command(flatten)]
    pub prior: PriorInput,
    #[command(flatten)]
    pub kind: KindArgs,
    #[arg(long, value_enum, default_value_t = MetricArg::Shortest)]
    pub metric: MetricArg,
    #[arg(long, value_enum, default_value_t = StrategyArg::Optimal)]
    pub attack: StrategyArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    MaximizePc,
    MinimizeQloss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    /// Start from the range minimizing quality loss.
    Qloss,
    /// Start from every vertex.
    Full,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Graph file (`ggraph v1`).
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub eps: f64,
    #[command(flatten)]
    pub prior: PriorInput,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::MaximizePc)]
    pub objective: ObjectiveArg,
    /// Quality-loss budget in metres (default: quality loss of the initial range).
    #[arg(long, conflicts_with = "unconstrained")]
    pub theta: Option<f64>,
    /// Drop the quality-loss budget.
    #[arg(long)]
    pub unconstrained: bool,
    #[arg(long, value_enum, default_value_t = AttackArg::Posterior)]
    pub attack: AttackArg,
    #[arg(long, value_enum, default_value_t = MetricArg::Shortest)]
    pub metric: MetricArg,
    /// Truncate GEM rows to the k nearest range members.
    #[arg(long)]
    pub topk: Option<usize>,
    #[arg(long, value_enum, default_value_t = InitArg::Qloss, conflicts_with = "w0")]
    pub init: InitArg,
    /// Initial range file (`ggrange v1`).
    #[arg(long)]
    pub w0: Option<PathBuf>,
    #[arg(long, default_value_t = roadpriv_core::optimizer::DEFAULT_MAX_SWEEPS)]
    pub max_sweeps: usize,
    /// Skip exact evaluation of the initial and final ranges.
    #[arg(long)]
    pub no_reports: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioName {
    LineSweep,
    TpSweep,
    CrossMap,
    EpsilonSweep,
    HotspotOpt,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(value_enum)]
    pub name: ScenarioName,
    /// Privacy parameters, comma separated (default depends on the scenario).
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    /// line-sweep: node counts.
    #[arg(long, value_delimiter = ',', default_values_t = [11usize, 26, 51, 101])]
    pub counts: Vec<usize>,
    /// line-sweep: segment length in metres.
    #[arg(long, default_value_t = 1000.0)]
    pub length: f64,
    /// tp-sweep: straight-line distance between the two vertices.
    #[arg(long, default_value_t = 100.0)]
    pub euclid: f64,
    /// tp-sweep: edge weights.
    #[arg(long, value_delimiter = ',', default_values_t = [100.0, 500.0, 1000.0, 2000.0])]
    pub shortest: Vec<f64>,
    /// epsilon-sweep: also report the optimized range.
    #[arg(long)]
    pub optimize: bool,
    /// epsilon-sweep: graph file (default: the hotspot lattice).
    #[arg(long, requires = "eps")]
    pub graph: Option<PathBuf>,
    /// epsilon-sweep: prior CSV for `--graph` (default uniform).
    #[arg(long, requires = "graph")]
    pub prior: Option<PathBuf>,
    /// hotspot lattice: vertices per side.
    #[arg(long, default_value_t = 16)]
    pub side: usize,
    /// hotspot lattice and cross map: vertex spacing in metres.
    #[arg(long, default_value_t = 100.0)]
    pub spacing: f64,
    /// hotspot lattice: mass share of each of the four hotspots.
    #[arg(long, default_value_t = 0.2)]
    pub share: f64,
}

impl From<MetricArg> for roadpriv_core::Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Shortest => roadpriv_core::Metric::Shortest,
            MetricArg::Euclidean => roadpriv_core::Metric::Euclidean,
        }
    }
}

impl From<AttackArg> for roadpriv_core::Attack {
    fn from(a: AttackArg) -> Self {
        match a {
            AttackArg::Optimal => roadpriv_core::Attack::Optimal,
            AttackArg::Posterior => roadpriv_core::Attack::Posterior,
        }
    }
}

impl From<ObjectiveArg> for roadpriv_core::Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::MaximizePc => roadpriv_core::Objective::MaximizePc,
            ObjectiveArg::MinimizeQloss => roadpriv_core::Objective::MinimizeQloss,
        }
    }
}
