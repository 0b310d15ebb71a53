use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ownet_core::conglomerate::DEFAULT_EPSILON;
use ownet_core::golden_power::{DEFAULT_LIMIT_QUANTUM, DEFAULT_PROTECTION_QUANTUM};
use ownet_core::ownership::{DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};

#[derive(Debug, Parser)]
#[command(name = "ownet", version, about = "Reasoning over company ownership graphs")]
#[command(after_help = "Set OWNET_THREADS to cap worker threads (0 = one per core). Logs go to stderr; set OWNET_LOG to change the level.")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Where to write the JSON result; `-` is stdout
    #[arg(long, global = true, default_value = "-")]
    pub output: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Network statistics of a graph
    Analyze(GraphArgs),
    /// Keep companies whose activity a decree allows
    Filter(FilterArgs),
    /// Integrated ownership, or eps-path ownership with --epsilon
    Ownership(OwnershipArgs),
    /// Companies controlled by one entity or a coalition
    Control(ControlArgs),
    /// Partition companies into conglomerates
    Conglomerates(ConglomerateArgs),
    /// Takeover screening for strategic companies
    #[command(subcommand)]
    Gp(GpCommand),
    /// Synthetic scale-free ownership graph
    Generate(GenerateArgs),
    /// Run the what-if HTTP service
    Serve(ServeArgs),
    /// Report structural issues and divergent cycles
    Validate(GraphArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Directory holding nodes.csv and edges.csv, a graph JSON file, or `-` for JSON on stdin
    #[arg(long, conflicts_with_all = ["graph_nodes", "graph_edges"])]
    pub graph: Option<String>,
    #[arg(long, requires = "graph_edges")]
    pub graph_nodes: Option<PathBuf>,
    #[arg(long, requires = "graph_nodes")]
    pub graph_edges: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Decree JSON: allowed activity prefixes and regional overrides
    #[arg(long)]
    pub decree: PathBuf,
    /// Print closures per region instead of the filtered graph
    #[arg(long)]
    pub impact: bool,
}

#[derive(Debug, Args)]
pub struct IterArgs {
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct OwnershipArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub source: String,
    /// Sum eps-paths above this weight instead of iterating to the limit
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// List the eps-paths to this entity (needs --epsilon)
    #[arg(long, requires = "epsilon")]
    pub target: Option<String>,
    #[command(flatten)]
    pub iter: IterArgs,
}

#[derive(Debug, Args)]
pub struct ControlArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Controlling entity; repeat for joint control
    #[arg(long = "controller", required = true)]
    pub controllers: Vec<String>,
    /// Use exact rational shares
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct ConglomerateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Add size and cross-region indicators
    #[arg(long)]
    pub indicators: bool,
    #[command(flatten)]
    pub iter: IterArgs,
}

#[derive(Debug, Args)]
pub struct GpArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Scenario JSON; defaults to the entity flags of the graph
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Use exact rational shares
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Subcommand)]
pub enum GpCommand {
    /// Does a transaction hand a strategic company to a foreign entity?
    Check {
        #[command(flatten)]
        gp: GpArgs,
        /// buyer,target,share[,seller]
        #[arg(long)]
        tx: String,
    },
    /// Largest share of a target a buyer may hold
    Limit {
        #[command(flatten)]
        gp: GpArgs,
        #[arg(long)]
        buyer: String,
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = DEFAULT_LIMIT_QUANTUM)]
        quantum: f64,
    },
    /// Acquisitions by public entities that secure every strategic company
    Protect {
        #[command(flatten)]
        gp: GpArgs,
        #[arg(long)]
        with_intermediaries: bool,
        #[arg(long, default_value_t = DEFAULT_PROTECTION_QUANTUM)]
        quantum: f64,
        #[arg(long, value_enum, default_value_t = Objective::MinTotal)]
        objective: Objective,
    },
    /// Check with all foreign entities acting together
    Collude {
        #[command(flatten)]
        gp: GpArgs,
        #[arg(long)]
        tx: String,
    },
    /// Check with unassigned shares handed to one foreign entity
    Cautious {
        #[command(flatten)]
        gp: GpArgs,
        #[arg(long)]
        tx: String,
        /// The foreign entity receiving residual shares
        #[arg(long)]
        foreign: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Objective {
    MinTotal,
    MinDirectStake,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Distribution {
    Uniform,
    DirichletPerCompany,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generator config JSON; flags below override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub person_fraction: Option<f64>,
    #[arg(long)]
    pub exponent: Option<f64>,
    #[arg(long, value_enum)]
    pub distribution: Option<Distribution>,
    #[arg(long)]
    pub regions: Option<usize>,
    /// Write nodes.csv and edges.csv here and print a summary instead of the graph
    #[arg(long)]
    pub csv_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Journal and uploaded graphs live here; omit for an in-memory service
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}
