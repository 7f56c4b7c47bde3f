use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use tracing_subscriber::EnvFilter;

use wayfinder::config::{BackendKind, ConfigError, Overrides, Preset, RunConfig};
use wayfinder::engine::StepReach;
use wayfinder::eval::{self, EvalOptions, HitsMode};
use wayfinder::{ExplorationPriors, KnowledgeGraph, Question, Reasoner};

#[derive(Parser)]
#[command(
    name = "wayfinder",
    version,
    about = "Multi-hop question answering over a knowledge graph"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the subgraph around topic entities and save it.
    Ingest(IngestArgs),
    /// Answer one question.
    Ask(AskArgs),
    /// Evaluate a dataset and write a report.
    Eval(EvalArgs),
    /// Inspect or move persisted exploration priors.
    Priors {
        #[command(subcommand)]
        action: PriorsAction,
    },
    /// Grid over k, depth and threshold; writes one CSV row per point.
    Sweep(SweepArgs),
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// JSON config file (lowest precedence after defaults).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendKind>,
    #[arg(long, global = true)]
    scripted_rules: Option<PathBuf>,
    /// Directory of prompt templates overriding the builtin ones.
    #[arg(long, global = true)]
    templates: Option<PathBuf>,
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true)]
    base_url: Option<String>,
}

#[derive(Args, Clone, Default)]
struct EngineArgs {
    /// Candidate relations per step.
    #[arg(long)]
    k: Option<usize>,
    /// Maximum path length in relations.
    #[arg(long)]
    depth: Option<usize>,
    /// Step iterations per question.
    #[arg(long)]
    iters: Option<usize>,
    /// Inclusive branching threshold.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Topic entity; repeat for several.
    #[arg(long = "topics", alias = "topic")]
    topics: Vec<String>,
    /// Take topics from every example of a dataset file.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    hops: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct AskArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long = "topics", alias = "topic", required = true)]
    topics: Vec<String>,
    #[arg(long)]
    question: String,
    #[arg(long, default_value = "q")]
    id: String,
    #[command(flatten)]
    engine: EngineArgs,
    /// Write the JSON-lines trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    priors_in: Option<PathBuf>,
    #[arg(long)]
    priors_out: Option<PathBuf>,
    /// Print the full outcome as JSON instead of one entity per line.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Plain-text table; defaults to the report path with a .txt extension.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    #[arg(long, value_enum, default_value_t = HitsMode::Strict)]
    hits_mode: HitsMode,
    #[arg(long)]
    priors_in: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 4, 5])]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 4, 5])]
    depth: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.4, 0.5, 0.6, 0.7])]
    zeta: Vec<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    #[arg(long, value_enum, default_value_t = HitsMode::Strict)]
    hits_mode: HitsMode,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand)]
enum PriorsAction {
    /// Print a priors file.
    Show {
        #[arg(long, default_value = "priors.json")]
        store: PathBuf,
    },
    /// Copy the store to another file.
    Export {
        #[arg(long, default_value = "priors.json")]
        store: PathBuf,
        out: PathBuf,
    },
    /// Validate a priors file and make it the store.
    Import {
        #[arg(long, default_value = "priors.json")]
        store: PathBuf,
        source: PathBuf,
    },
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Backend(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Backend(msg) => Failure::Backend(msg),
            other => Failure::Input(other.to_string()),
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Ingest(args) => ingest(args),
        Command::Ask(args) => ask(args),
        Command::Eval(args) => run_eval(args),
        Command::Priors { action } => priors(action),
        Command::Sweep(args) => sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Backend(msg)) => {
            eprintln!("backend error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn resolve(run: &RunArgs, engine: &EngineArgs, hops: Option<usize>) -> Result<RunConfig, Failure> {
    let overrides = Overrides {
        preset: run.preset,
        k: engine.k,
        depth: engine.depth,
        iterations: engine.iters,
        threshold: engine.threshold,
        hops,
        backend: run.backend,
        scripted_rules: run.scripted_rules.clone(),
        templates_dir: run.templates.clone(),
        model: run.model.clone(),
        base_url: run.base_url.clone(),
    };
    Ok(RunConfig::resolve(
        run.config.as_deref(),
        |k| std::env::var(k).ok(),
        &overrides,
    )?)
}

fn load_graph(path: &Path) -> Result<KnowledgeGraph, Failure> {
    KnowledgeGraph::load_path(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn run_config_line(config: &serde_json::Value) -> String {
    serde_json::to_string(&json!({"event": "run_config", "config": config})).expect("json") + "\n"
}

fn ingest(args: IngestArgs) -> Result<(), Failure> {
    let cfg = resolve(&args.run, &EngineArgs::default(), args.hops)?;
    let graph = load_graph(&args.graph)?;
    let mut topics = args.topics.clone();
    if let Some(path) = &args.dataset {
        for ex in eval::load_dataset_path(path).map_err(input)? {
            topics.extend(ex.topic_entities);
        }
    }
    if topics.is_empty() {
        return Err(Failure::Input("ingest needs --topics or --dataset".into()));
    }
    let sub = graph
        .extract_subgraph(&topics, cfg.engine.subgraph_hops)
        .map_err(input)?;
    sub.save_path(&args.out).map_err(input)?;
    eprintln!(
        "kept {} of {} triples ({} entities) within {} hops",
        sub.triples().len(),
        graph.triples().len(),
        sub.entities().len(),
        cfg.engine.subgraph_hops
    );
    Ok(())
}

fn ask(args: AskArgs) -> Result<(), Failure> {
    let cfg = resolve(&args.run, &args.engine, None)?;
    let graph = load_graph(&args.graph)?;
    let gateway = cfg.build_gateway()?;
    let priors = match &args.priors_in {
        Some(path) => ExplorationPriors::load(path).map_err(input)?,
        None => ExplorationPriors::new(),
    };
    let reasoner = Reasoner::new(&graph, cfg.engine.clone(), gateway);
    let question = Question {
        id: args.id.clone(),
        text: args.question.clone(),
        topics: args.topics.clone(),
    };
    let outcome = reasoner.answer_with_priors(&question, priors).map_err(input)?;
    let echo = cfg.echo();

    if let Some(path) = &args.trace {
        write_file(path, &(run_config_line(&echo) + &outcome.trace_jsonl()))?;
    }
    if let Some(path) = &args.priors_out {
        outcome.priors.save(path).map_err(input)?;
    }

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if args.json {
        let value = json!({
            "config": echo,
            "answer": outcome.answer,
            "ledger": outcome.ledger,
            "priors": outcome.priors,
            "stats": outcome.stats,
        });
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&value).expect("json"));
    } else {
        for entity in &outcome.answer.entities {
            let _ = writeln!(out, "{entity}");
        }
    }
    match &outcome.answer.best_path {
        Some(best) => eprintln!(
            "path: {}  score: {}  calls: {}  tokens: {}",
            best.sequence, outcome.answer.score, outcome.ledger.llm_calls, outcome.ledger.total_tokens
        ),
        None => eprintln!(
            "no answer: {}",
            outcome.answer.diagnostic.as_deref().unwrap_or("unknown")
        ),
    }

    let backend_failed = outcome.stats.steps.iter().any(|s| {
        matches!(
            s.reach,
            StepReach::ContextFailed | StepReach::RetrievalFailed | StepReach::RankingFailed
        )
    });
    if outcome.answer.is_empty() && backend_failed {
        return Err(Failure::Backend("every branch failed on backend errors".into()));
    }
    Ok(())
}

struct EvalInputs {
    cfg: RunConfig,
    graph: KnowledgeGraph,
    dataset: Vec<eval::QAExample>,
    options: EvalOptions,
}

/// Dataset-side inputs shared by `eval` and `sweep`.
struct DataArgs<'a> {
    dataset: &'a Path,
    graph: &'a Path,
    sample: Option<usize>,
    seed: u64,
    parallel: usize,
    hits_mode: HitsMode,
    priors_in: Option<&'a Path>,
}

fn eval_inputs(run: &RunArgs, engine: &EngineArgs, data: DataArgs<'_>) -> Result<EvalInputs, Failure> {
    let cfg = resolve(run, engine, None)?;
    let graph = load_graph(data.graph)?;
    let mut examples = eval::load_dataset_path(data.dataset)
        .map_err(|e| Failure::Input(format!("{}: {e}", data.dataset.display())))?;
    if let Some(n) = data.sample {
        examples = eval::sample(&examples, n, data.seed);
    }
    let priors = data.priors_in.map(ExplorationPriors::load).transpose().map_err(input)?;
    Ok(EvalInputs {
        cfg,
        graph,
        dataset: examples,
        options: EvalOptions {
            hits_mode: data.hits_mode,
            parallel: data.parallel,
            priors,
        },
    })
}

fn run_eval(args: EvalArgs) -> Result<(), Failure> {
    let inputs = eval_inputs(
        &args.run,
        &args.engine,
        DataArgs {
            dataset: &args.dataset,
            graph: &args.graph,
            sample: args.sample,
            seed: args.seed,
            parallel: args.parallel,
            hits_mode: args.hits_mode,
            priors_in: args.priors_in.as_deref(),
        },
    )?;
    let gateway = inputs.cfg.build_gateway()?;
    let reasoner = Reasoner::new(&inputs.graph, inputs.cfg.engine.clone(), gateway);
    let echo = json!({
        "run": inputs.cfg.echo(),
        "dataset": args.dataset,
        "graph": args.graph,
        "sample": args.sample,
        "seed": args.seed,
        "hits_mode": args.hits_mode,
    });
    let outcome = eval::run_eval(&inputs.dataset, &reasoner, echo.clone(), &inputs.options);

    write_file(&args.out, &outcome.report.to_json())?;
    let table_path = args.table.clone().unwrap_or_else(|| args.out.with_extension("txt"));
    let table = outcome.report.to_table();
    write_file(&table_path, &table)?;
    if let Some(path) = &args.trace {
        write_file(path, &(run_config_line(&echo) + &outcome.trace_jsonl()))?;
    }
    print!("{table}");
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let engine = EngineArgs {
        iters: args.iters,
        ..EngineArgs::default()
    };
    let inputs = eval_inputs(
        &args.run,
        &engine,
        DataArgs {
            dataset: &args.dataset,
            graph: &args.graph,
            sample: args.sample,
            seed: args.seed,
            parallel: args.parallel,
            hits_mode: args.hits_mode,
            priors_in: None,
        },
    )?;
    let gateway = inputs.cfg.build_gateway()?;
    let file = std::fs::File::create(&args.out).map_err(|e| Failure::Input(format!("{}: {e}", args.out.display())))?;
    let mut csv = csv::Writer::from_writer(file);
    csv.write_record([
        "k",
        "depth",
        "zeta",
        "questions",
        "errors",
        "hits_at_1",
        "f1",
        "mean_calls",
        "mean_tokens",
    ])
    .map_err(input)?;
    for &k in &args.k {
        for &depth in &args.depth {
            for &zeta in &args.zeta {
                let mut engine_cfg = inputs.cfg.engine.clone();
                engine_cfg.candidates_k = k;
                engine_cfg.max_depth = depth;
                engine_cfg.threshold = zeta;
                engine_cfg.validate().map_err(Failure::Input)?;
                let reasoner = Reasoner::new(&inputs.graph, engine_cfg, gateway.clone());
                let outcome = eval::run_eval(&inputs.dataset, &reasoner, serde_json::Value::Null, &inputs.options);
                let a = &outcome.report.aggregates;
                csv.write_record([
                    k.to_string(),
                    depth.to_string(),
                    zeta.to_string(),
                    a.questions.to_string(),
                    a.errors.to_string(),
                    format!("{:.1}", a.hits_at_1),
                    format!("{:.1}", a.f1),
                    format!("{:.1}", a.mean_calls),
                    format!("{:.1}", a.mean_tokens),
                ])
                .map_err(input)?;
            }
        }
    }
    csv.flush().map_err(input)?;
    eprintln!(
        "wrote {} grid points to {}",
        args.k.len() * args.depth.len() * args.zeta.len(),
        args.out.display()
    );
    Ok(())
}

fn priors(action: PriorsAction) -> Result<(), Failure> {
    match action {
        PriorsAction::Show { store } => {
            let priors =
                ExplorationPriors::load(&store).map_err(|e| Failure::Input(format!("{}: {e}", store.display())))?;
            println!("version: {}", priors.version);
            println!("priors: {}", priors.current());
            for (i, s) in priors.summaries.iter().enumerate() {
                println!("{:>3}. [{}] {}: {}", i + 1, s.reason, s.source_sequence, s.text);
            }
            Ok(())
        }
        PriorsAction::Export { store, out } => {
            let priors =
                ExplorationPriors::load(&store).map_err(|e| Failure::Input(format!("{}: {e}", store.display())))?;
            priors.save(&out).map_err(input)
        }
        PriorsAction::Import { store, source } => {
            let priors =
                ExplorationPriors::load(&source).map_err(|e| Failure::Input(format!("{}: {e}", source.display())))?;
            priors.save(&store).map_err(input)?;
            eprintln!(
                "imported {} summaries (version {})",
                priors.summaries.len(),
                priors.version
            );
            Ok(())
        }
    }
}
