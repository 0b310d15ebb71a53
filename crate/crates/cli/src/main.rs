mod args;

use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::net::SocketAddr;
use std::path::Path;
use std::process::ExitCode;

use clap::{CommandFactory, Parser};
use ownet_core::analytics::{analytics_report, impact_by_region};
use ownet_core::conglomerate::{conglomerate_indicators, conglomerates_with};
use ownet_core::control::joint_controls;
use ownet_core::generator::{generate, GeneratorConfig, ShareDistribution};
use ownet_core::golden_power::{
    cautious_gp_check, collusion_gp_check, gp_check, gp_limit, gp_protection, ProtectionObjective, Scenario,
};
use ownet_core::graph::{filter_by_activity, validate_records, DecreeConfig, GraphRecords};
use ownet_core::graph::io::{load_graph_files, read_records, save_graph_files, to_json_value};
use ownet_core::ownership::{
    check_convergence, enumerate_baldone_paths, epsilon_baldone_ownership, integrated_ownership, IterationParams,
};
use ownet_core::{Error, ExactShare, OwnershipGraph, Share, Transaction};
use serde::Serialize;
use serde_json::json;

use args::{Cli, Command, Distribution, GpArgs, GpCommand, GraphArgs, IterArgs, Objective};

enum Failure {
    /// Bad invocation: exit 2 with a diagnosis and the usage line.
    Usage(String),
    /// The command ran but the domain said no: exit 1.
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Domain(e.into())
    }
}

type Outcome = Result<ExitCode, Failure>;

fn read_input(path: &str) -> Result<Box<dyn Read>, Failure> {
    if path == "-" {
        Ok(Box::new(io::stdin().lock()))
    } else {
        Ok(Box::new(File::open(path)?))
    }
}

fn graph_records<S: Share>(args: &GraphArgs) -> Result<GraphRecords<S>, Failure> {
    match (&args.graph, &args.graph_nodes, &args.graph_edges) {
        (_, Some(nodes), Some(edges)) => Ok(read_records(File::open(nodes)?, File::open(edges)?)?),
        (Some(g), _, _) if Path::new(g).is_dir() => {
            let dir = Path::new(g);
            Ok(read_records(File::open(dir.join("nodes.csv"))?, File::open(dir.join("edges.csv"))?)?)
        }
        (Some(g), _, _) => Ok(serde_json::from_reader(read_input(g)?).map_err(Error::from)?),
        _ => Err(Failure::Usage("a graph is required: --graph <dir|json|-> or --graph-nodes with --graph-edges".into())),
    }
}

fn load<S: Share>(args: &GraphArgs) -> Result<OwnershipGraph<S>, Failure> {
    if let (Some(nodes), Some(edges)) = (&args.graph_nodes, &args.graph_edges) {
        return Ok(load_graph_files(nodes, edges)?);
    }
    Ok(OwnershipGraph::from_records(graph_records(args)?)?)
}

fn emit<T: Serialize + ?Sized>(output: &str, value: &T, pretty: bool) -> Result<(), Failure> {
    let sink: Box<dyn Write> = if output == "-" {
        Box::new(io::stdout().lock())
    } else {
        Box::new(File::create(output)?)
    };
    let mut sink = BufWriter::new(sink);
    let written = if pretty {
        serde_json::to_writer_pretty(&mut sink, value)
    } else {
        serde_json::to_writer(&mut sink, value)
    };
    written.map_err(Error::from)?;
    sink.write_all(b"\n")?;
    sink.flush()?;
    Ok(())
}

fn params(iter: &IterArgs) -> IterationParams {
    IterationParams {
        tol: iter.tol,
        max_iter: iter.max_iter,
    }
}

fn scenario<S: Share>(gp: &GpArgs, g: &OwnershipGraph<S>) -> Result<Scenario<S>, Failure> {
    match &gp.scenario {
        Some(path) => Ok(Scenario::from_json(&fs::read_to_string(path)?)?),
        None => Ok(Scenario::from_flags(g)),
    }
}

fn objective(o: Objective) -> ProtectionObjective {
    match o {
        Objective::MinTotal => ProtectionObjective::MinTotal,
        Objective::MinDirectStake => ProtectionObjective::MinDirectStake,
    }
}

fn run_gp<S: Share>(cmd: &GpCommand, gp: &GpArgs, output: &str) -> Outcome {
    let g: OwnershipGraph<S> = load(&gp.graph)?;
    let sc = scenario(gp, &g)?;
    let tx = |text: &str| text.parse::<Transaction<S>>().map_err(|e| Failure::Usage(e.to_string()));
    match cmd {
        GpCommand::Check { tx: t, .. } => emit(output, &gp_check(&g, &sc, &tx(t)?)?, true)?,
        GpCommand::Collude { tx: t, .. } => emit(output, &collusion_gp_check(&g, &sc, &tx(t)?)?, true)?,
        GpCommand::Cautious { tx: t, foreign, .. } => {
            emit(output, &cautious_gp_check(&g, &sc, &tx(t)?, foreign)?, true)?
        }
        GpCommand::Limit {
            buyer, target, quantum, ..
        } => emit(output, &gp_limit(&g, &sc, buyer, target, *quantum)?, true)?,
        GpCommand::Protect {
            with_intermediaries,
            quantum,
            objective: o,
            ..
        } => emit(
            output,
            &gp_protection(&g, &sc, *with_intermediaries, *quantum, objective(*o))?,
            true,
        )?,
    }
    Ok(ExitCode::SUCCESS)
}

fn run_control<S: Share>(args: &args::ControlArgs, output: &str) -> Outcome {
    let g: OwnershipGraph<S> = load(&args.graph)?;
    emit(output, &joint_controls(&g, &args.controllers)?, true)?;
    Ok(ExitCode::SUCCESS)
}

fn generator_config(args: &args::GenerateArgs) -> Result<GeneratorConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?).map_err(Error::from)?,
        None => GeneratorConfig::default(),
    };
    if let Some(n) = args.nodes {
        cfg.node_count = n;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(p) = args.person_fraction {
        cfg.person_fraction = p;
    }
    if let Some(x) = args.exponent {
        cfg.attachment_exponent = x;
    }
    if let Some(d) = args.distribution {
        cfg.share_distribution = match d {
            Distribution::Uniform => ShareDistribution::Uniform,
            Distribution::DirichletPerCompany => ShareDistribution::DirichletPerCompany,
        };
    }
    if let Some(r) = args.regions {
        cfg.region_count = r;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Outcome {
    let output = cli.output.as_str();
    match cli.command {
        Command::Analyze(graph) => {
            let g: OwnershipGraph = load(&graph)?;
            emit(output, &analytics_report(&g), true)?;
        }
        Command::Filter(args) => {
            let g: OwnershipGraph = load(&args.graph)?;
            let decree = DecreeConfig::from_json(&fs::read_to_string(&args.decree)?).map_err(Error::from)?;
            let filtered = filter_by_activity(&g, &decree);
            if args.impact {
                emit(output, &impact_by_region(&g, &filtered)?, true)?;
            } else {
                emit(output, &to_json_value(&filtered), false)?;
            }
        }
        Command::Ownership(args) => {
            let g: OwnershipGraph = load(&args.graph)?;
            match (args.epsilon, &args.target) {
                (Some(eps), Some(target)) => {
                    let paths = enumerate_baldone_paths(&g, &args.source, target, &eps)?;
                    let body = json!({"source": args.source, "target": target, "epsilon": eps, "paths": paths});
                    emit(output, &body, true)?;
                }
                (Some(eps), None) => emit(output, &epsilon_baldone_ownership(&g, &args.source, &eps)?, true)?,
                (None, _) => {
                    let v = integrated_ownership(&g, &args.source, params(&args.iter))?;
                    emit(output, &v, true)?;
                    if !v.converged {
                        eprintln!("warning: iteration stopped after {} rounds without converging", v.iterations);
                        return Ok(ExitCode::FAILURE);
                    }
                }
            }
        }
        Command::Control(args) => {
            return if args.exact {
                run_control::<ExactShare>(&args, output)
            } else {
                run_control::<f64>(&args, output)
            };
        }
        Command::Conglomerates(args) => {
            let g: OwnershipGraph = load(&args.graph)?;
            let p = conglomerates_with(&g, &args.epsilon, params(&args.iter))?;
            if args.indicators {
                let indicators = conglomerate_indicators(&p, &g)?;
                emit(output, &json!({"partition": p, "indicators": indicators}), true)?;
            } else {
                emit(output, &p, true)?;
            }
        }
        Command::Gp(cmd) => {
            let gp = match &cmd {
                GpCommand::Check { gp, .. }
                | GpCommand::Limit { gp, .. }
                | GpCommand::Protect { gp, .. }
                | GpCommand::Collude { gp, .. }
                | GpCommand::Cautious { gp, .. } => gp,
            };
            return if gp.exact {
                run_gp::<ExactShare>(&cmd, gp, output)
            } else {
                run_gp::<f64>(&cmd, gp, output)
            };
        }
        Command::Generate(args) => {
            let g = generate(&generator_config(&args)?)?;
            match &args.csv_dir {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    let (nodes, edges) = (dir.join("nodes.csv"), dir.join("edges.csv"));
                    save_graph_files(&g, &nodes, &edges)?;
                    let body = json!({
                        "node_count": g.len(),
                        "edge_count": g.edge_count(),
                        "nodes": nodes,
                        "edges": edges,
                    });
                    emit(output, &body, true)?;
                }
                None => emit(output, &to_json_value(&g), false)?,
            }
        }
        Command::Serve(args) => {
            let addr: SocketAddr = format!("{}:{}", args.host, args.port)
                .parse()
                .map_err(|e| Failure::Usage(format!("bad address: {e}")))?;
            let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            runtime.block_on(ownet_service::serve(addr, args.data_dir))?;
        }
        Command::Validate(graph) => {
            let records: GraphRecords = graph_records(&graph)?;
            let report = validate_records(&records);
            let convergence = if report.is_loadable() {
                Some(check_convergence(&OwnershipGraph::from_records(records)?, None)?)
            } else {
                None
            };
            let clean = report.is_loadable() && convergence.as_ref().is_some_and(|c| c.convergent);
            emit(
                output,
                &json!({"errors": report.errors, "warnings": report.warnings, "convergence": convergence}),
                true,
            )?;
            if !clean {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("OWNET_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("OWNET_THREADS must be a non-negative integer, got {raw:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if matches!(cli.command, Command::Serve(_)) { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("OWNET_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level)),
        )
        .init();
    match init_threads().and_then(|()| run(cli)) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let mut cmd = Cli::command();
            cmd.error(clap::error::ErrorKind::InvalidValue, msg).print().ok();
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
