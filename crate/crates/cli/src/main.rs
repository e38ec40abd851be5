use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use controversy_core::corpus::fixture::{FixtureGraph, FixtureParams, FixtureServer};
use controversy_core::corpus::{
    build_dataset, parse_seed_list, read_jsonl_file, split_dataset, write_jsonl_file, CrawlPolicy, DatasetSplit,
    Document, Edge, Fetcher, HttpFetcher, Polarity, SeedCounts, SeedEntry,
};
use controversy_core::eval::{evaluate, write_roc_csv, BootstrapConfig, EvalReport, PredictionSet};
use controversy_core::experiments::synthetic::{
    domain_corpus, drift_corpus, separable_corpus, topic_corpus, DomainParams, DriftParams, SeparableParams,
    TopicParams,
};
use controversy_core::experiments::tables::{metric_table, split_table};
use controversy_core::experiments::{
    derive_seed, exit_code, load_report, run_experiment, DataRef, Dataset, ExperimentError, ExperimentKind,
    ExperimentReport, ExperimentSpec,
};
use controversy_core::models::{fit, Classifier, ModelKind, ModelSpec};
use controversy_core::text::write_w2v_binary;
use serde::de::DeserializeOwned;
use serde::Serialize;
use url::Url;

type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Parser)]
#[command(
    name = "controversy",
    version,
    about = "Controversy detection: dataset crawling, models and experiments"
)]
struct Cli {
    /// Master random seed; overrides the seed of an experiment spec.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract seed entries from a seed-list page.
    Seeds {
        /// Local HTML file; fetched from --base when absent.
        #[arg(long)]
        html: Option<PathBuf>,
        /// URL of the seed-list page, used to resolve relative links.
        #[arg(long)]
        base: Url,
        /// Output JSONL; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Crawl from seeds, sample random negatives and weakly label pages.
    Crawl {
        /// Seed entries as JSONL.
        #[arg(long, required_unless_present = "fixture_server")]
        seeds: Option<PathBuf>,
        /// Crawl policy as JSON; defaults apply to missing fields.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Number of random negative seeds to sample.
        #[arg(long, default_value_t = 0)]
        negatives: usize,
        /// Endpoint that redirects to a random article.
        #[arg(long, default_value = "https://en.wikipedia.org/wiki/Special:Random")]
        random_endpoint: Url,
        /// Crawl a generated graph served locally instead of the web.
        #[arg(long)]
        fixture_server: bool,
        /// Output directory for documents.jsonl, edges.jsonl, seeds.jsonl and skipped.jsonl.
        #[arg(long)]
        out: PathBuf,
    },
    /// Partition a crawled dataset into train, validation and test by seed.
    Split {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        edges: PathBuf,
        #[arg(long, default_value_t = 5600)]
        train: usize,
        #[arg(long, default_value_t = 200)]
        validation: usize,
        #[arg(long, default_value_t = 200)]
        test: usize,
        #[arg(long, default_value_t = 2)]
        max_hops: u8,
        /// Output JSON array of splits.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one model on the train and validation splits and save a checkpoint.
    Train {
        #[arg(long, value_parser = parse_model)]
        model: ModelKind,
        /// Model configuration as JSON; defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        splits: PathBuf,
        /// Checkpoint path (.ctrv).
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON file for the fit report and training log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Score checkpoints on a test set with bootstrap intervals and significance.
    Eval {
        #[arg(long, required = true)]
        checkpoint: Vec<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        /// Splits JSON; the test split is scored. All documents when absent.
        #[arg(long)]
        splits: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        resamples: usize,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Bootstrap worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Write the evaluation report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write ROC points of the first checkpoint as CSV.
        #[arg(long)]
        roc: Option<PathBuf>,
    },
    /// Run an experiment from a JSON spec and write report.json and report.txt.
    Experiment {
        /// Overrides the kind in the spec.
        #[arg(long, value_parser = parse_kind)]
        kind: Option<ExperimentKind>,
        #[arg(long)]
        spec: PathBuf,
        /// Output directory; the spec's `output` or the spec directory when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render an experiment report, evaluation report or splits file.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Write a synthetic dataset with a matching experiment spec.
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        /// Generator parameters as JSON; defaults apply to missing fields.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Separable,
    Drift,
    Domain,
    Topics,
}

fn parse_model(s: &str) -> std::result::Result<ModelKind, String> {
    ModelKind::parse(s).ok_or_else(|| format!("unknown model {s:?} (cnn, han, tfidf, lm)"))
}

fn parse_kind(s: &str) -> std::result::Result<ExperimentKind, String> {
    ExperimentKind::parse(s)
        .ok_or_else(|| format!("unknown experiment {s:?} (baseline-comparison, temporal, topic-cv, domain, agreement)"))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ExperimentError + '_ {
    move |e| ExperimentError::Io(format!("{}: {e}", path.display()))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| ExperimentError::Format(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| ExperimentError::Format(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(io_err(path))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Seeds { html, base, out } => seeds(html.as_deref(), &base, out.as_deref()),
        Command::Crawl {
            seeds,
            policy,
            negatives,
            random_endpoint,
            fixture_server,
            out,
        } => crawl(
            seeds.as_deref(),
            policy.as_deref(),
            negatives,
            &random_endpoint,
            fixture_server.then_some(seed.unwrap_or(0)),
            &out,
        ),
        Command::Split {
            data,
            edges,
            train,
            validation,
            test,
            max_hops,
            out,
        } => split(
            &data,
            &edges,
            SeedCounts {
                train,
                validation,
                test,
            },
            max_hops,
            seed.unwrap_or(0),
            &out,
        ),
        Command::Train {
            model,
            config,
            data,
            splits,
            out,
            log,
        } => train(
            model,
            config.as_deref(),
            &data,
            &splits,
            &out,
            log.as_deref(),
            seed.unwrap_or(0),
        ),
        Command::Eval {
            checkpoint,
            data,
            splits,
            resamples,
            level,
            workers,
            json,
            roc,
        } => {
            let config = BootstrapConfig {
                resamples,
                level,
                seed: derive_seed(seed.unwrap_or(0), "bootstrap"),
                workers,
            };
            eval(
                &checkpoint,
                &data,
                splits.as_deref(),
                &config,
                json.as_deref(),
                roc.as_deref(),
            )
        }
        Command::Experiment { kind, spec, out } => experiment(kind, &spec, out.as_deref(), seed),
        Command::Report { input, format } => report(&input, format),
        Command::Synth { kind, params, out } => synth(kind, params.as_deref(), &out, seed.unwrap_or(0)),
    }
}

fn seeds(html: Option<&Path>, base: &Url, out: Option<&Path>) -> Result<()> {
    let page = match html {
        Some(p) => fs::read_to_string(p).map_err(io_err(p))?,
        None => {
            let policy = CrawlPolicy::default();
            let fetcher = HttpFetcher::new(&policy.user_agent, Duration::from_millis(policy.timeout_ms));
            let fetched = fetcher
                .fetch(base)
                .map_err(|e| ExperimentError::Io(format!("{base}: {e}")))?;
            fetched.body
        }
    };
    let entries = parse_seed_list(base, &page);
    if entries.is_empty() {
        return Err(ExperimentError::Format(format!("no seed links found on {base}")));
    }
    match out {
        Some(p) => write_jsonl_file(p, &entries)?,
        None => {
            for e in &entries {
                println!(
                    "{}",
                    serde_json::to_string(e).map_err(|e| ExperimentError::Format(e.to_string()))?
                );
            }
        }
    }
    log::info!("{} seeds", entries.len());
    Ok(())
}

fn crawl(
    seeds: Option<&Path>,
    policy: Option<&Path>,
    negatives: usize,
    random_endpoint: &Url,
    fixture_seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    let mut policy: CrawlPolicy = match policy {
        Some(p) => read_json(p)?,
        None => CrawlPolicy::default(),
    };
    let server = match fixture_seed {
        Some(s) => Some(
            FixtureServer::start(FixtureGraph::random(&FixtureParams::default(), s), s)
                .map_err(|e| ExperimentError::Io(format!("fixture server: {e}")))?,
        ),
        None => None,
    };
    let mut entries: Vec<SeedEntry> = match seeds {
        Some(p) => read_jsonl_file(p)?,
        None => Vec::new(),
    };
    let endpoint = match &server {
        Some(s) => {
            if entries.is_empty() {
                entries = s.seed_entries();
            }
            let fixture = s.policy();
            policy.wiki_hosts = fixture.wiki_hosts;
            policy.host_delay_ms = 0;
            s.random_url()
        }
        None => random_endpoint.clone(),
    };
    entries.retain(|s| s.polarity == Polarity::Controversial);
    if entries.is_empty() {
        return Err(ExperimentError::Usage("no controversial seeds given".into()));
    }
    let fetcher = HttpFetcher::new(&policy.user_agent, Duration::from_millis(policy.timeout_ms));
    let dataset = build_dataset(&entries, negatives, &endpoint, &policy, &fetcher)?;
    create_dir(out)?;
    write_jsonl_file(&out.join("documents.jsonl"), &dataset.documents)?;
    write_jsonl_file(&out.join("edges.jsonl"), &dataset.edges)?;
    write_jsonl_file(&out.join("seeds.jsonl"), &dataset.seeds)?;
    write_jsonl_file(&out.join("skipped.jsonl"), &dataset.skipped)?;
    let positives = dataset.documents.iter().filter(|d| d.label.is_positive()).count();
    println!(
        "{} documents ({} controversial), {} edges, {} skipped URLs",
        dataset.documents.len(),
        positives,
        dataset.edges.len(),
        dataset.skipped.len()
    );
    Ok(())
}

fn split(data: &Path, edges: &Path, counts: SeedCounts, max_hops: u8, seed: u64, out: &Path) -> Result<()> {
    let docs: Vec<Document> = read_jsonl_file(data)?;
    let edges: Vec<Edge> = read_jsonl_file(edges)?;
    let splits = split_dataset(&docs, &edges, counts, max_hops, derive_seed(seed, "split"))?;
    write_json(out, &splits)?;
    print!("{}", split_table(&splits));
    Ok(())
}

fn train(
    kind: ModelKind,
    config: Option<&Path>,
    data: &Path,
    splits: &Path,
    out: &Path,
    log: Option<&Path>,
    seed: u64,
) -> Result<()> {
    let mut spec: ModelSpec = match config {
        Some(p) => {
            let mut s: ModelSpec = read_json(p)?;
            if let Some(e) = s.embeddings.as_mut().filter(|e| e.is_relative()) {
                *e = p.parent().unwrap_or(Path::new(".")).join(&*e);
            }
            s
        }
        None => ModelSpec::default(),
    };
    spec.train.seed = derive_seed(seed, kind.name());
    let dataset = Dataset::load("dataset", data, Some(splits))?;
    let training = dataset.training()?;
    let (classifier, report) = fit(kind, &spec, &training.train, &training.validation)?;
    classifier.save(out)?;
    if let Some(p) = log {
        write_json(p, &report)?;
    }
    let epochs = match report.log.as_ref() {
        Some(l) => format!(" over {} epochs", l.epochs.len()),
        None => String::new(),
    };
    println!(
        "{}: trained on {} documents{epochs}, threshold {}, vocabulary {}",
        kind.name(),
        training.train.len(),
        classifier.threshold,
        report.vocabulary_size
    );
    Ok(())
}

fn eval(
    checkpoints: &[PathBuf],
    data: &Path,
    splits: Option<&Path>,
    config: &BootstrapConfig,
    json: Option<&Path>,
    roc: Option<&Path>,
) -> Result<()> {
    let dataset = Dataset::load("dataset", data, splits)?;
    let test = match splits {
        Some(_) => dataset.test()?,
        None => dataset.as_test_set(),
    };
    let mut sets: Vec<PredictionSet> = Vec::with_capacity(checkpoints.len());
    for (i, path) in checkpoints.iter().enumerate() {
        let classifier = Classifier::load(path)?;
        let mut name = classifier.kind.name().to_string();
        if sets.iter().any(|s| s.model == name) {
            name = format!("{name}#{}", i + 1);
        }
        sets.push(test.predictions(&classifier, &name, "eval")?);
    }
    let report = evaluate(&sets, config)?;
    if let Some(p) = json {
        write_json(p, &report)?;
    }
    if let Some(p) = roc {
        let file = fs::File::create(p).map_err(io_err(p))?;
        write_roc_csv(std::io::BufWriter::new(file), &sets[0])
            .map_err(|e| ExperimentError::Io(format!("{}: {e}", p.display())))?;
    }
    print!("{}", metric_table(&report));
    Ok(())
}

fn experiment(kind: Option<ExperimentKind>, path: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<()> {
    let mut spec = ExperimentSpec::load(path)?;
    if let Some(k) = kind {
        spec.kind = k;
    }
    if let Some(s) = seed {
        spec.seed = s;
    }
    let dir = match (out, &spec.output) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => o.clone(),
        (None, None) => path.parent().unwrap_or(Path::new(".")).to_path_buf(),
    };
    let report = run_experiment(&spec)?;
    report.write(&dir)?;
    print!("{}", report.render_table());
    Ok(())
}

fn report(input: &Path, format: Format) -> Result<()> {
    let text = fs::read_to_string(input).map_err(io_err(input))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| ExperimentError::Format(format!("{}: {e}", input.display())))?;
    let rendered = if value.get("config_hash").is_some() {
        let r: ExperimentReport = load_report(input)?;
        match format {
            Format::Json => r.to_json(),
            Format::Table => r.render_table(),
        }
    } else if value.is_array() {
        let splits: Vec<DatasetSplit> =
            serde_json::from_value(value).map_err(|e| ExperimentError::Format(format!("{}: {e}", input.display())))?;
        match format {
            Format::Json => pretty(&splits)?,
            Format::Table => split_table(&splits),
        }
    } else {
        let r: EvalReport =
            serde_json::from_value(value).map_err(|e| ExperimentError::Format(format!("{}: {e}", input.display())))?;
        match format {
            Format::Json => pretty(&r)?,
            Format::Table => metric_table(&r),
        }
    };
    print!("{rendered}");
    Ok(())
}

fn pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| ExperimentError::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn params_or_default<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => read_json(p),
        None => Ok(T::default()),
    }
}

fn write_dataset(dir: &Path, dataset: &Dataset) -> Result<DataRef> {
    create_dir(dir)?;
    write_jsonl_file(&dir.join("documents.jsonl"), &dataset.documents)?;
    write_json(&dir.join("splits.json"), &dataset.splits)?;
    Ok(DataRef {
        documents: dir.join("documents.jsonl"),
        splits: Some(dir.join("splits.json")),
        name: Some(dataset.name.clone()),
    })
}

fn relative(r: DataRef, base: &Path) -> DataRef {
    let strip = |p: PathBuf| p.strip_prefix(base).map(Path::to_path_buf).unwrap_or(p);
    DataRef {
        documents: strip(r.documents),
        splits: r.splits.map(strip),
        name: r.name,
    }
}

fn synth(kind: SynthKind, params: Option<&Path>, out: &Path, seed: u64) -> Result<()> {
    create_dir(out)?;
    let mut model = ModelSpec {
        embedding_dim: 50,
        ..ModelSpec::default()
    };
    model.vocabulary.min_freq = 1;
    let (experiment, dataset, reference, external) = match kind {
        SynthKind::Separable => {
            let d = separable_corpus(&params_or_default::<SeparableParams>(params)?, seed);
            let held_out: Vec<Document> = d
                .test()?
                .ids()
                .iter()
                .filter_map(|id| d.documents.iter().find(|doc| &doc.id == id).cloned())
                .collect();
            let external = Dataset::new("separable-test", held_out, Vec::new());
            let ext = write_dataset(&out.join("external"), &external)?;
            (
                ExperimentKind::BaselineComparison,
                write_dataset(out, &d)?,
                None,
                Some(DataRef { splits: None, ..ext }),
            )
        }
        SynthKind::Domain => {
            let d = domain_corpus(&params_or_default::<DomainParams>(params)?, seed);
            (ExperimentKind::Domain, write_dataset(out, &d)?, None, None)
        }
        SynthKind::Topics => {
            let d = topic_corpus(&params_or_default::<TopicParams>(params)?, seed);
            (ExperimentKind::TopicCv, write_dataset(out, &d)?, None, None)
        }
        SynthKind::Drift => {
            let p = params_or_default::<DriftParams>(params)?;
            let d = drift_corpus(&p, seed);
            let path = out.join("embeddings.bin");
            let file = fs::File::create(&path).map_err(io_err(&path))?;
            write_w2v_binary(std::io::BufWriter::new(file), &d.embeddings)?;
            model.embedding_dim = p.dim;
            model.embeddings = Some(PathBuf::from("embeddings.bin"));
            model.vocabulary_from_embeddings = true;
            let new = write_dataset(&out.join("new"), &d.new)?;
            let old = write_dataset(&out.join("old"), &d.old)?;
            (ExperimentKind::Temporal, new, Some(old), None)
        }
    };
    let folds = match kind {
        SynthKind::Topics => params_or_default::<TopicParams>(params)?.topics,
        _ => 10,
    };
    let spec = ExperimentSpec {
        kind: experiment,
        dataset: relative(dataset, out),
        reference: reference.map(|r| relative(r, out)),
        external: external.map(|r| relative(r, out)),
        annotations: None,
        models: ModelKind::ALL.to_vec(),
        model,
        bootstrap: BootstrapConfig::default(),
        scale: Default::default(),
        folds,
        seed,
        concurrent: false,
        output: None,
    };
    write_json(&out.join("experiment.json"), &spec)?;
    println!("wrote {} and experiment.json", out.display());
    Ok(())
}
