use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use seem_core::eval::{self, AnswerJudge, EvalReport, ExactMatchJudge, LlmAnswerJudge};
use seem_core::graph::{GraphStats, StatsTable};
use seem_core::ingest::{self, BuildMode, BuildOptions, Builder, Format, LoadedDataset};
use seem_core::{Error, HttpGateway, LlmGateway, MockGateway, RetrievalConfig, Snapshot, Toggles};

#[derive(Parser)]
#[command(name = "seem", version, about = "Episodic and graph long-term memory for conversational agents")]
struct Cli {
    /// Seed for the mock gateway.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Embedding width of the mock gateway.
    #[arg(long, global = true, default_value_t = 256)]
    dim: usize,
    /// `auto` uses HTTP when SEEM_LLM_URL is set, otherwise the mock.
    #[arg(long, global = true, value_enum, default_value_t = GatewayKind::Auto)]
    gateway: GatewayKind,
    /// More logging (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GatewayKind {
    Auto,
    Mock,
    Http,
}

#[derive(Subcommand)]
enum Command {
    /// Build a memory snapshot from a transcript file.
    Ingest(IngestArgs),
    /// Answer one question against a snapshot.
    Query(QueryArgs),
    /// Print layer statistics.
    Stats(StatsArgs),
    /// Score a QA dataset end to end.
    Eval(EvalArgs),
    /// Snapshot maintenance.
    #[command(subcommand)]
    Snapshot(SnapshotCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Batch,
    Incremental,
}

#[derive(Args)]
struct SourceArgs {
    /// Dataset format; guessed from the file when omitted.
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
    /// Only this conversation (LoCoMo sample_id or LongMemEval question_id).
    #[arg(long)]
    conversation: Option<String>,
}

#[derive(Args)]
struct IngestArgs {
    path: PathBuf,
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Batch)]
    mode: ModeArg,
    #[arg(long, default_value_t = ingest::DEFAULT_SEGMENTS)]
    segments: usize,
    /// Snapshot path, or a directory when several conversations are built.
    #[arg(long, short, default_value = "memory.snapshot.json")]
    out: PathBuf,
    /// Continue an interrupted incremental build from the snapshot at --out.
    #[arg(long)]
    resume: bool,
    /// Stop after this many segments, leaving a resumable snapshot.
    #[arg(long)]
    max_segments: Option<usize>,
    #[arg(long, default_value_t = ingest::DEFAULT_QUARANTINE_TOLERANCE)]
    quarantine_tolerance: f64,
    /// Initial retrieval size stored in the snapshot config.
    #[arg(long, default_value_t = 5)]
    n: usize,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long)]
    question: String,
    /// Overrides the snapshot's initial retrieval size.
    #[arg(long)]
    n: Option<usize>,
    /// Print the retrieval audit as JSON.
    #[arg(long)]
    explain: bool,
    /// Ablations: no-rpe, no-eef, no-facts, no-ppr.
    #[arg(long, value_delimiter = ',')]
    toggle: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Layer {
    Eml,
    Gml,
    All,
}

#[derive(Args)]
struct StatsArgs {
    /// One or more snapshots; each becomes a column of the graph table.
    #[arg(long, required = true)]
    snapshot: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Layer::All)]
    layer: Layer,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum JudgeKind {
    None,
    Exact,
    Llm,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, value_delimiter = ',')]
    toggle: Vec<String>,
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long, value_enum, default_value_t = JudgeKind::None)]
    judge: JudgeKind,
    /// Evaluate at most this many conversations.
    #[arg(long)]
    limit: Option<usize>,
    /// Write the full JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write per-question records as CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SnapshotCommand {
    /// Rewrite a snapshot in canonical form.
    Save {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load and audit a snapshot.
    Load { path: PathBuf },
    /// Print a summary of a snapshot.
    Inspect { path: PathBuf },
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 1 generic, 3 input/load, 4 build aborted, 5 empty memory, 6 gateway.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Input(_) | Error::Load(_) | Error::Snapshot(_) | Error::Config(_) | Error::Io(_)) => 3,
        Some(Error::BuildAborted { .. }) => 4,
        Some(Error::EmptyMemory) => 5,
        Some(Error::Transport(_) | Error::Extraction(_) | Error::Generation(_) | Error::Judge(_) | Error::Fusion(_)) => 6,
        _ => 1,
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(cli, a),
        Command::Query(a) => cmd_query(cli, a),
        Command::Stats(a) => cmd_stats(a),
        Command::Eval(a) => cmd_eval(cli, a),
        Command::Snapshot(c) => cmd_snapshot(c),
    }
}

fn use_http(kind: GatewayKind) -> bool {
    match kind {
        GatewayKind::Mock => false,
        GatewayKind::Http => true,
        GatewayKind::Auto => std::env::var_os("SEEM_LLM_URL").is_some(),
    }
}

enum Gateway {
    Mock(MockGateway),
    Http(Box<HttpGateway>),
}

impl Gateway {
    fn new(cli: &Cli) -> Result<Self> {
        if use_http(cli.gateway) {
            Ok(Gateway::Http(Box::new(HttpGateway::from_env()?)))
        } else {
            if cli.dim == 0 {
                bail!(Error::Config("--dim must be positive".into()));
            }
            Ok(Gateway::Mock(MockGateway::new(cli.seed, cli.dim)))
        }
    }

    /// The gateway that built `snap`. Mock parameters come from the
    /// fingerprint, so --seed and --dim are ignored here.
    fn for_snapshot(cli: &Cli, snap: &Snapshot) -> Result<Self> {
        let fp = &snap.memory.gateway_fingerprint;
        let gw = match parse_mock_fingerprint(fp) {
            Some((seed, dim)) if cli.gateway != GatewayKind::Http => Gateway::Mock(MockGateway::new(seed, dim)),
            _ => Gateway::Http(Box::new(HttpGateway::from_env()?)),
        };
        snap.memory.check_gateway(gw.as_dyn())?;
        Ok(gw)
    }

    fn as_dyn(&self) -> &dyn LlmGateway {
        match self {
            Gateway::Mock(m) => m,
            Gateway::Http(h) => h.as_ref(),
        }
    }
}

fn parse_mock_fingerprint(fp: &str) -> Option<(u64, usize)> {
    let rest = fp.strip_prefix("mock:seed=")?;
    let (seed, dim) = rest.split_once(":dim=")?;
    Some((seed.parse().ok()?, dim.parse().ok()?))
}

fn detect_format(path: &Path) -> Result<Format> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        return Ok(Format::Jsonl);
    }
    let head: String = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?
        .chars()
        .take(1 << 16)
        .collect();
    if head.contains("\"haystack_sessions\"") {
        Ok(Format::Longmemeval)
    } else if head.contains("\"conversation\"") {
        Ok(Format::Locomo)
    } else {
        bail!(Error::Config(format!("cannot tell the format of {}; pass --format", path.display())))
    }
}

fn load(path: &Path, source: &SourceArgs) -> Result<LoadedDataset> {
    let format = match source.format {
        Some(f) => f,
        None => detect_format(path)?,
    };
    let mut ds = ingest::load_transcript(path, format)?;
    if !ds.malformed.is_empty() {
        eprintln!("{} malformed record(s) skipped:", ds.malformed.len());
        for m in &ds.malformed {
            eprintln!("  {}: {}", m.location, m.reason);
        }
    }
    for w in &ds.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(id) = &source.conversation {
        ds.conversations.retain(|c| &c.document.conversation_id == id);
        if ds.conversations.is_empty() {
            bail!(Error::Input(format!("no conversation `{id}` in {}", path.display())));
        }
    }
    Ok(ds)
}

fn cmd_ingest(cli: &Cli, a: &IngestArgs) -> Result<()> {
    let ds = load(&a.path, &a.source)?;
    let gw = Gateway::new(cli)?;
    let config = RetrievalConfig::new(a.n)?;
    let mode = match a.mode {
        ModeArg::Batch => BuildMode::Batch,
        ModeArg::Incremental => BuildMode::Incremental { segments: a.segments },
    };
    let many = ds.conversations.len() > 1;
    if many {
        std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    }
    for conv in &ds.conversations {
        let id = &conv.document.conversation_id;
        let out = if many { a.out.join(format!("{id}.snapshot.json")) } else { a.out.clone() };
        let options = BuildOptions {
            mode,
            quarantine_tolerance: a.quarantine_tolerance,
            checkpoint: Some(out.clone()),
        };
        let passages = conv.document.passages()?;
        let mut builder = if a.resume && out.exists() {
            let snap = Snapshot::load(&out)?;
            Builder::resume(gw.as_dyn(), snap, passages, options)?
        } else {
            Builder::new(gw.as_dyn(), config.clone(), passages, options)?
        };
        builder.run_segments(a.max_segments)?;
        let snap = builder.snapshot();
        snap.save(&out)?;
        let m = &snap.memory;
        let state = if snap.is_complete() { "complete" } else { "partial" };
        println!(
            "{id}: {} passages, {} frames, {} facts, {} quarantined ({state}) -> {}",
            m.passages.len(),
            m.episodic.len(),
            m.graph.facts().len(),
            m.episodic.unframed().len(),
            out.display()
        );
    }
    Ok(())
}

fn with_n(mut config: RetrievalConfig, n: Option<usize>) -> Result<RetrievalConfig> {
    if let Some(n) = n {
        config.initial_retrieval_size = n;
    }
    config.validate()?;
    Ok(config)
}

fn cmd_query(cli: &Cli, a: &QueryArgs) -> Result<()> {
    let snap = Snapshot::load(&a.snapshot)?;
    let gw = Gateway::for_snapshot(cli, &snap)?;
    let config = with_n(snap.memory.config.clone(), a.n)?;
    let toggles = Toggles::from_names(&a.toggle)?;
    let ans = eval::answer(&snap.memory, gw.as_dyn(), &a.question, &config, toggles)?;
    println!("{}", ans.generated.answer);
    if a.explain {
        println!("{}", ans.retrieval.audit.to_json()?);
    }
    Ok(())
}

fn cmd_stats(a: &StatsArgs) -> Result<()> {
    let snaps = a
        .snapshot
        .iter()
        .map(|p| Snapshot::load(p))
        .collect::<seem_core::Result<Vec<_>>>()?;
    let eml: Vec<_> = snaps.iter().map(|s| s.memory.episodic.consolidation_stats()).collect();
    let gml: Vec<GraphStats> = snaps.iter().map(|s| s.memory.graph.graph_stats()).collect();
    let table = StatsTable::graph(&gml);
    if a.json {
        let mut out = serde_json::Map::new();
        if a.layer != Layer::Gml {
            out.insert("eml".into(), serde_json::to_value(&eml)?);
        }
        if a.layer != Layer::Eml {
            out.insert("gml".into(), serde_json::to_value(&table)?);
        }
        println!("{}", serde_json::to_string_pretty(&out)?);
        return Ok(());
    }
    if a.layer != Layer::Gml {
        for (path, s) in a.snapshot.iter().zip(&eml) {
            if eml.len() > 1 {
                println!("{}", path.display());
            }
            print!("{}", s.render_table());
            println!();
        }
    }
    if a.layer != Layer::Eml {
        print!("{}", table.render());
    }
    Ok(())
}

fn cmd_eval(cli: &Cli, a: &EvalArgs) -> Result<()> {
    let ds = load(&a.dataset, &a.source)?;
    let gw = Gateway::new(cli)?;
    let config = RetrievalConfig::new(a.n)?;
    let toggles = Toggles::from_names(&a.toggle)?;
    let exact = ExactMatchJudge;
    let llm;
    let judge: Option<&dyn AnswerJudge> = match (a.judge, &gw) {
        (JudgeKind::None, _) => None,
        (JudgeKind::Exact, _) => Some(&exact),
        (JudgeKind::Llm, Gateway::Http(h)) => {
            llm = LlmAnswerJudge(h.as_ref());
            Some(&llm)
        }
        (JudgeKind::Llm, Gateway::Mock(_)) => bail!(Error::Config("--judge llm needs the HTTP gateway".into())),
    };

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut skipped = 0;
    let mut audits = std::collections::BTreeMap::new();
    let take = a.limit.unwrap_or(usize::MAX);
    for conv in ds.conversations.iter().take(take) {
        if conv.questions.is_empty() {
            continue;
        }
        let snap = ingest::build(gw.as_dyn(), config.clone(), conv.document.passages()?, BuildOptions::default())
            .with_context(|| format!("building memory for {}", conv.document.conversation_id))?;
        let report = eval::run_eval(&snap.memory, gw.as_dyn(), &conv.questions, &config, toggles, judge)?;
        records.extend(report.records);
        failures.extend(report.failures);
        skipped += report.skipped_missing_gold;
        audits.extend(report.audits);
    }
    if records.is_empty() && failures.is_empty() {
        return Err(anyhow!(Error::Input("dataset has no answerable questions".into())));
    }
    let mut report = EvalReport::from_records(toggles, records, skipped, failures);
    report.audits = audits;
    print!("{}", report.render_table());
    if let Some(p) = &a.report {
        std::fs::write(p, report.to_json()?).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &a.csv {
        std::fs::write(p, report.to_csv()?).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn cmd_snapshot(c: &SnapshotCommand) -> Result<()> {
    match c {
        SnapshotCommand::Save { from, out } => {
            Snapshot::load(from)?.save(out)?;
            println!("saved {}", out.display());
        }
        SnapshotCommand::Load { path } => {
            let s = Snapshot::load(path)?;
            println!("ok: {} passages, format {}", s.memory.passages.len(), s.format_version);
        }
        SnapshotCommand::Inspect { path } => {
            let s = Snapshot::load(path)?;
            let m = &s.memory;
            let g = m.graph.graph_stats();
            println!("format_version   {}", s.format_version);
            println!("gateway          {}", m.gateway_fingerprint);
            println!("embedding dim    {}", m.passages.dim());
            println!("passages         {}", m.passages.len());
            println!("frames           {}", m.episodic.len());
            println!("tombstones       {}", m.episodic.tombstones().len());
            println!("entities         {}", g.entities);
            println!("facts            {}", g.facts);
            println!("synonymy edges   {}", g.synonymy_edges);
            println!("unframed         {}", s.quarantine.unframed.len());
            println!("fact-empty       {}", s.quarantine.fact_empty.len());
            match &s.progress {
                None => println!("build            complete"),
                Some(p) => println!(
                    "build            {}/{} passages, {}/{} segments",
                    p.ingested, p.total_passages, p.segments_done, p.segments
                ),
            }
        }
    }
    Ok(())
}
