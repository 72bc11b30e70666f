use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use featsel::client::{CompletionClient, HttpChatClient};
use featsel::featsel_core::eval::{evaluate_selection, Protocol, Shots, DEFAULT_GRID};
use featsel::featsel_core::tabular::subsample_shots;
use featsel::featsel_core::{Dataset, Descriptor, SelectionResult, Task};
use featsel::io::{load_dataset, read_json, write_json};
use featsel::rafs::{fetch_metadata, MetadataCache};
use featsel::report::{record_line, RECORDS_HEADER};
use featsel::runner::{
    build_provider, CellContext, CellKey, CellSelection, CellSelector, ExperimentConfig, Method,
    ProviderKind, RafsConfig, Runner, TransportConfig,
};
use featsel::transcript::{RecordingClient, ReplayClient};
use featsel::{Error, Result};
use serde::Deserialize;

/// Feature selection with classic baselines and LLM-scored prompts.
#[derive(Parser)]
#[command(name = "featsel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select features of one dataset with one method.
    Select(SelectArgs),
    /// Score a saved selection with the holdout protocol.
    Evaluate(EvaluateArgs),
    /// Run every cell of an experiment config and write reports.
    Sweep(SweepArgs),
    /// Call the live endpoint and append every exchange to a transcript.
    Record {
        #[arg(long)]
        file: PathBuf,
        #[command(subcommand)]
        command: LlmCommand,
    },
    /// Answer every prompt from a transcript; no network access.
    Replay {
        #[arg(long)]
        file: PathBuf,
        /// Model id, when the transcript holds several.
        #[arg(long)]
        model: Option<String>,
        #[command(subcommand)]
        command: LlmCommand,
    },
    /// Retrieve and cache feature metadata.
    FetchMeta(FetchArgs),
}

#[derive(Subcommand)]
enum LlmCommand {
    Select(SelectArgs),
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct DataArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    target: String,
    #[arg(long, default_value = "classification")]
    task: Task,
    #[arg(long)]
    descriptor: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderArg {
    Ncbi,
    Local,
    Missing,
}

#[derive(Args, Clone)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    method: Method,
    #[arg(long, default_value_t = 0.3)]
    ratio: f64,
    /// Row budget (a count, or "full" for every row).
    #[arg(long, default_value = "full")]
    shots: Shots,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Answer prompts from this transcript.
    #[arg(long)]
    replay_file: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value = "local")]
    provider: ProviderArg,
    /// Metadata map for the local provider.
    #[arg(long)]
    metadata_file: Option<PathBuf>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Selection JSON written by `select` or `sweep`.
    #[arg(long)]
    selection: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Comma-separated lambda grid.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<f64>,
}

#[derive(Args, Clone)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    /// Answer prompts from this transcript, overriding the config.
    #[arg(long)]
    replay_file: Option<PathBuf>,
}

#[derive(Args)]
struct FetchArgs {
    /// Comma-separated feature names.
    #[arg(long, value_delimiter = ',', required_unless_present = "csv")]
    features: Vec<String>,
    /// Take the feature names from this CSV header instead.
    #[arg(long, requires = "target")]
    csv: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long, default_value = "ncbi")]
    provider: ProviderArg,
    #[arg(long)]
    metadata_file: Option<PathBuf>,
    #[arg(long, default_value = "metadata")]
    cache_dir: PathBuf,
    #[arg(long)]
    organism: Option<String>,
}

/// Client supplied by `record` / `replay`.
enum Transport {
    Default,
    Given(Arc<dyn CompletionClient>),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Select(a) => select(&a, Transport::Default),
        Command::Evaluate(a) => evaluate(&a),
        Command::Sweep(a) => sweep(&a, Transport::Default),
        Command::Record { file, command } => {
            recording(&file).and_then(|c| run_llm(command, Transport::Given(c)))
        }
        Command::Replay { file, model, command } => ReplayClient::open(&file, model.as_deref())
            .and_then(|c| run_llm(command, Transport::Given(Arc::new(c)))),
        Command::FetchMeta(a) => fetch_meta(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn recording(file: &Path) -> Result<Arc<dyn CompletionClient>> {
    Ok(Arc::new(RecordingClient::new(HttpChatClient::from_env()?, file)?))
}

fn run_llm(cmd: LlmCommand, t: Transport) -> Result<ExitCode> {
    match cmd {
        LlmCommand::Select(a) => select(&a, t),
        LlmCommand::Sweep(a) => sweep(&a, t),
    }
}

fn provider_kind(p: ProviderArg) -> ProviderKind {
    match p {
        ProviderArg::Ncbi => ProviderKind::Ncbi,
        ProviderArg::Local => ProviderKind::Local,
        ProviderArg::Missing => ProviderKind::Missing,
    }
}

/// Single-cell config mirroring the select flags, so `select` and `sweep`
/// share one selector implementation.
fn single_cell_config(a: &SelectArgs) -> ExperimentConfig {
    let transport = a.method.needs_llm().then(|| TransportConfig {
        replay: a.replay_file.clone(),
        model: a.model.clone(),
        ..TransportConfig::default()
    });
    let rafs = (a.method == Method::Rafs).then(|| RafsConfig {
        provider: provider_kind(a.provider),
        file: a.metadata_file.clone(),
        cache_dir: a.cache_dir.clone(),
        organism: None,
        requests_per_second: 3.0,
    });
    ExperimentConfig {
        datasets: vec![featsel::runner::DatasetSpec {
            name: None,
            csv: a.data.csv.clone(),
            descriptor: a.data.descriptor.clone(),
            target: a.data.target.clone(),
            task: a.data.task,
        }],
        methods: vec![a.method],
        shots: vec![a.shots],
        seeds: vec![a.seed],
        ratio: a.ratio,
        grid: DEFAULT_GRID.to_vec(),
        folds: 5,
        test_fraction: 0.2,
        rfe_lambda: featsel::featsel_core::classic::DEFAULT_RFE_LAMBDA,
        parallelism: 1,
        transport,
        rafs,
    }
}

fn select(a: &SelectArgs, t: Transport) -> Result<ExitCode> {
    let cfg = single_cell_config(a);
    let runner = match t {
        Transport::Given(c) => Runner::with_client(cfg, &a.out_dir, c)?,
        Transport::Default => Runner::new(cfg, &a.out_dir)?,
    };
    let (d, desc) = load_dataset(&a.data.csv, a.data.descriptor.as_deref(), &a.data.target, a.data.task)?;
    let rows = match a.shots {
        Shots::Full => (0..d.n_rows()).collect(),
        Shots::Count(k) => subsample_shots(&d, k, a.seed)?,
    };
    let sel_d = d.select_rows(&rows)?;
    let key = CellKey { dataset: d.name.clone(), method: a.method.label().into(), shots: a.shots, seed: a.seed };
    let cx = CellContext { key: &key, method: a.method, data: &sel_d, descriptor: &desc, seed: a.seed, ratio: a.ratio };
    let chosen = runner
        .default_selector()
        .select(&cx)
        .map_err(|e| Error::Cell { cell: key.to_string(), source: Box::new(e) })?;
    if let Some(scores) = &chosen.scores {
        for s in scores.iter().filter(|s| s.error.is_some()) {
            eprintln!("warning: feature {} scored 0: {}", s.feature, s.error.as_deref().unwrap_or_default());
        }
    }
    let path = a.out_dir.join("selections").join(format!("{}.json", key.file_stem()));
    write_json(&path, &chosen)?;
    for f in &chosen.selection.selected {
        println!("{f}");
    }
    eprintln!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SelectionFile {
    Cell(CellSelection),
    Bare(SelectionResult),
}

fn evaluate(a: &EvaluateArgs) -> Result<ExitCode> {
    let (d, _): (Dataset, Descriptor) =
        load_dataset(&a.data.csv, a.data.descriptor.as_deref(), &a.data.target, a.data.task)?;
    let sel = match read_json::<SelectionFile>(&a.selection)? {
        SelectionFile::Cell(c) => c.selection,
        SelectionFile::Bare(s) => s,
    };
    let protocol = Protocol {
        grid: if a.grid.is_empty() { DEFAULT_GRID.to_vec() } else { a.grid.clone() },
        folds: a.folds,
        ..Protocol::default()
    };
    let rec = evaluate_selection(&d, &sel, a.seed, &protocol)
        .map_err(|e| Error::Cell { cell: format!("{}/{}/seed={}", d.name, sel.method, a.seed), source: Box::new(e.into()) })?;
    println!("{RECORDS_HEADER}\n{}", record_line(&rec));
    Ok(ExitCode::SUCCESS)
}

fn sweep(a: &SweepArgs, t: Transport) -> Result<ExitCode> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(p) = &a.replay_file {
        let tc = cfg.transport.get_or_insert_with(TransportConfig::default);
        tc.replay = Some(p.clone());
    }
    let runner = match t {
        Transport::Given(c) => Runner::with_client(cfg, &a.out_dir, c)?,
        Transport::Default => Runner::new(cfg, &a.out_dir)?,
    };
    let report = runner.run()?;
    eprintln!(
        "{} cells run, {} skipped as already done, {} records in {}",
        report.executed,
        report.skipped,
        report.records.len(),
        a.out_dir.join("records.csv").display()
    );
    if report.failures.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    for f in &report.failures {
        eprintln!("failed: {}/{}/shots={}/seed={}: {}", f.dataset, f.method, f.shots, f.seed, f.error);
    }
    eprintln!("{} cells failed; see {}", report.failures.len(), a.out_dir.join("failures.csv").display());
    Ok(ExitCode::FAILURE)
}

fn fetch_meta(a: &FetchArgs) -> Result<ExitCode> {
    let features: Vec<String> = match (&a.csv, &a.target) {
        (Some(csv), Some(target)) => {
            let (header, _) = featsel::io::read_csv(csv)?;
            header.into_iter().filter(|h| h != target).collect()
        }
        _ => a.features.iter().map(|f| f.trim().to_string()).filter(|f| !f.is_empty()).collect(),
    };
    let provider = build_provider(&RafsConfig {
        provider: provider_kind(a.provider),
        file: a.metadata_file.clone(),
        cache_dir: Some(a.cache_dir.clone()),
        organism: a.organism.clone(),
        requests_per_second: 3.0,
    })?;
    let cache = MetadataCache::on_disk(&a.cache_dir)?;
    let mut failed = 0;
    for f in &features {
        match fetch_metadata(f, provider.as_ref(), &cache) {
            Ok(m) if m.missing => println!("{f}\tmissing"),
            Ok(m) => println!("{f}\tfound\t{}", m.official_name),
            Err(e) => {
                failed += 1;
                eprintln!("error: {e}");
            }
        }
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
