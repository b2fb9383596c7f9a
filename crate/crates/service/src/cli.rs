use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use guielicit_core::corpus::{filter_corpus, load_corpus, write_corpus, FilterRules};
use guielicit_core::eval::{evaluate_run, EvalConfig};
use guielicit_core::feature_match::{rank_aspect_guis, AspectGui};
use guielicit_core::ranking::{rank_guis, RankedGui, RankingConfig};
use guielicit_core::recommend::FeatureRecommendation;
use guielicit_core::session::{SessionConfig, SessionEngine, SessionState, SessionStore, ARTIFACT_FILE, SUMMARY_FILE};

use crate::api::{router, AppState};
use crate::error::ApiError;
use crate::runtime::{check_corpus, CorpusArgs, LlmArgs};
use crate::sessions::Registry;

/// Embedding cache written by `ingest` next to the filtered corpus.
pub const EMBEDDINGS_FILE: &str = "embeddings.json";

#[derive(Debug, Parser)]
#[command(name = "guielicit", version, about = "GUI-based requirements elicitation: retrieval, recommendation and sessions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load, filter and embed a corpus into an output directory.
    Ingest(IngestArgs),
    /// Rank GUIs for a natural-language GUI description.
    Rank(RankArgs),
    /// Rank aspect-GUIs for a feature among the GUIs ranked for a query.
    Match(MatchArgs),
    /// Generate feature recommendations for a stored session slot.
    Recommend(RecommendArgs),
    /// Compute retrieval metrics over an annotation file.
    Eval(EvalArgs),
    /// Write a stored session's prototype artifact and summary.
    Export(ExportArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
    /// Create and drive stored sessions.
    #[command(subcommand)]
    Session(SessionCommand),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Output directory for the filtered corpus and its embeddings.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RankingArgs {
    #[arg(long, default_value_t = 30)]
    pub top_k: usize,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub query: String,
    #[command(flatten)]
    pub ranking: RankingArgs,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub feature: String,
    /// GUI description whose top-k ranking is searched.
    #[arg(long)]
    pub query: String,
    /// Aspect-GUIs to show.
    #[arg(long, default_value_t = 15)]
    pub k: usize,
    #[command(flatten)]
    pub ranking: RankingArgs,
}

#[derive(Debug, Args)]
pub struct StoreArgs {
    /// Session store directory.
    #[arg(long, env = "GUIELICIT_SESSIONS")]
    pub sessions: PathBuf,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub llm: LlmArgs,
    #[command(flatten)]
    pub store: StoreArgs,
    #[arg(long)]
    pub session: String,
    /// Defaults to the active slot.
    #[arg(long)]
    pub slot: Option<usize>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSON-lines annotation records.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Cutoffs for P@k and HITS@k (repeatable).
    #[arg(long = "k", default_values_t = [1, 5, 10, 15])]
    pub ks: Vec<usize>,
    /// Also write the metrics as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub store: StoreArgs,
    #[arg(long)]
    pub session: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub llm: LlmArgs,
    #[arg(long, env = "GUIELICIT_HOST", default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, env = "GUIELICIT_PORT", default_value_t = 8080)]
    pub port: u16,
    /// Persist sessions here; in-memory only when unset.
    #[arg(long, env = "GUIELICIT_SESSIONS")]
    pub sessions: Option<PathBuf>,
    /// Built web UI bundle served at `/`.
    #[arg(long, env = "GUIELICIT_UI_DIR")]
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SessionCommand {
    Create {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long)]
        app_name: String,
        /// Session configuration as JSON.
        #[arg(long)]
        config: Option<String>,
    },
    Show {
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long)]
        session: String,
    },
    Query {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long)]
        session: String,
        #[arg(long)]
        slot: usize,
        #[arg(long)]
        text: String,
    },
    Select {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long)]
        session: String,
        #[arg(long)]
        slot: usize,
        #[arg(long)]
        gui: String,
    },
    Complete {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long)]
        session: String,
        #[arg(long)]
        slot: usize,
    },
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), ApiError> {
    match cli.command {
        Command::Ingest(a) => ingest(a, out),
        Command::Rank(a) => rank(a, out),
        Command::Match(a) => matching(a, out),
        Command::Recommend(a) => recommend(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Export(a) => export(a, out),
        Command::Serve(a) => serve(a),
        Command::Session(c) => session(c, out),
    }
}

fn io(e: std::io::Error) -> ApiError {
    ApiError::internal(format!("cannot write output: {e}"))
}

fn ingest(a: IngestArgs, out: &mut dyn Write) -> Result<(), ApiError> {
    let corpus = load_corpus(&a.corpus.corpus)?;
    let rules = match &a.corpus.filters {
        Some(p) => FilterRules::from_json(
            &std::fs::read_to_string(p).map_err(|e| ApiError::bad_request(format!("cannot read {}: {e}", p.display())))?,
        )?,
        None => FilterRules::default_pipeline(),
    };
    let (kept, report) = filter_corpus(&corpus, &rules);
    let manifest = write_corpus(&kept, &a.out)?;

    let mut embed = a.corpus.clone();
    embed.embed_cache.get_or_insert_with(|| a.out.join(EMBEDDINGS_FILE));
    let retriever = embed.retriever(kept)?;

    writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes")).map_err(io)?;
    for e in &corpus.load_errors {
        writeln!(out, "skipped {}: {}", e.source, e.reason).map_err(io)?;
    }
    writeln!(
        out,
        "loaded {} GUIs ({} invalid records), kept {}, removed {}; {} vectors",
        corpus.len(),
        corpus.load_errors.len(),
        manifest.count_documents,
        report.removed_count(),
        retriever.vectors().len()
    )
    .map_err(io)?;
    Ok(())
}

fn ranking_config(a: &RankingArgs) -> Result<RankingConfig, ApiError> {
    let cfg = RankingConfig {
        alpha: a.alpha,
        top_k: a.top_k,
        ..RankingConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn rank(a: RankArgs, out: &mut dyn Write) -> Result<(), ApiError> {
    let cfg = ranking_config(&a.ranking)?;
    let r = a.corpus.retriever(a.corpus.load()?)?;
    let ranked = rank_guis(&r, &a.query, &cfg)?;
    if a.ranking.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&ranked).expect("ranking serializes")).map_err(io)?;
    } else {
        write_ranking(out, &ranked).map_err(io)?;
    }
    Ok(())
}

pub fn write_ranking(out: &mut dyn Write, ranked: &[RankedGui]) -> std::io::Result<()> {
    writeln!(out, "{:>4}  {:<24} {:>8} {:>8} {:>8}", "rank", "gui_id", "s1", "s2", "ensemble")?;
    for g in ranked {
        let s2 = g.s2.map_or("-".to_string(), |v| format!("{v:.4}"));
        writeln!(out, "{:>4}  {:<24} {:>8.4} {:>8} {:>8.4}", g.rank, g.gui_id, g.s1, s2, g.ensemble)?;
    }
    Ok(())
}

fn matching(a: MatchArgs, out: &mut dyn Write) -> Result<(), ApiError> {
    let cfg = ranking_config(&a.ranking)?;
    let r = a.corpus.retriever(a.corpus.load()?)?;
    let ranked = rank_guis(&r, &a.query, &cfg)?;
    let aspects = rank_aspect_guis(&r, &a.feature, &ranked, a.k)?;
    if a.ranking.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&aspects).expect("aspects serialize")).map_err(io)?;
    } else {
        write_aspects(out, &aspects).map_err(io)?;
    }
    Ok(())
}

pub fn write_aspects(out: &mut dyn Write, aspects: &[AspectGui]) -> std::io::Result<()> {
    writeln!(out, "{:>4}  {:<24} {:<16} {:>8} {:>8}", "rank", "gui_id", "component", "s_f", "s_g")?;
    for (i, a) in aspects.iter().enumerate() {
        writeln!(
            out,
            "{:>4}  {:<24} {:<16} {:>8.4} {:>8.4}",
            i + 1,
            a.gui_id,
            a.component_id.as_deref().unwrap_or("-"),
            a.score,
            a.gui_score
        )?;
    }
    Ok(())
}

fn open_store(a: &StoreArgs) -> Result<SessionStore, ApiError> {
    Ok(SessionStore::open(&a.sessions)?)
}

fn engine_for(corpus: &CorpusArgs, llm: &LlmArgs) -> Result<SessionEngine, ApiError> {
    llm.engine(corpus.retriever(corpus.load()?)?)
}

/// Loads a stored session, applies `op` and saves it back.
fn with_session<T>(
    engine: &SessionEngine,
    store: &SessionStore,
    id: &str,
    op: impl FnOnce(&SessionEngine, &mut SessionState) -> Result<T, ApiError>,
) -> Result<(SessionState, T), ApiError> {
    let mut state = store.load(id)?;
    check_corpus(engine, &state)?;
    let out = op(engine, &mut state)?;
    store.save(&state)?;
    Ok((state, out))
}

fn active_slot(state: &SessionState, slot: Option<usize>) -> Result<usize, ApiError> {
    slot.or(state.active_slot_index)
        .ok_or_else(|| ApiError::bad_request("session has no active slot; pass --slot"))
}

fn recommend(a: RecommendArgs, out: &mut dyn Write) -> Result<(), ApiError> {
    let engine = engine_for(&a.corpus, &a.llm)?;
    let store = open_store(&a.store)?;
    let (_, recs) = with_session(&engine, &store, &a.session, |e, s| {
        let slot = active_slot(s, a.slot)?;
        Ok(e.request_recommendations(s, slot)?)
    })?;
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&recs).expect("recommendations serialize")).map_err(io)?;
    } else {
        write_recommendations(out, &recs).map_err(io)?;
    }
    Ok(())
}

fn write_recommendations(out: &mut dyn Write, recs: &[FeatureRecommendation]) -> std::io::Result<()> {
    writeln!(out, "{:>4}  {:<6} {:>8}  feature", "rank", "id", "s_pf")?;
    for (i, r) in recs.iter().enumerate() {
        writeln!(out, "{:>4}  {:<6} {:>8.4}  {}", i + 1, r.feature.feature_id, r.coverage_score, r.feature.text)?;
        if !r.explanation.is_empty() {
            writeln!(out, "{:>21}{}", "", r.explanation)?;
        }
    }
    Ok(())
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> Result<(), ApiError> {
    let report = evaluate_run(&a.annotations, &EvalConfig { ks: a.ks })?;
    if let Some(path) = &a.out {
        report.write_json(path)?;
    }
    if a.json {
        writeln!(out, "{}", report.to_json()).map_err(io)?;
    } else {
        write!(out, "{}", report.render_table()).map_err(io)?;
    }
    Ok(())
}

fn export(a: ExportArgs, out: &mut dyn Write) -> Result<(), ApiError> {
    let store = open_store(&a.store)?;
    let state = store.load(&a.session)?;
    let artifact = state.export_artifact()?;
    artifact.write_to(&a.out)?;
    writeln!(out, "{}", a.out.join(ARTIFACT_FILE).display()).map_err(io)?;
    writeln!(out, "{}", a.out.join(SUMMARY_FILE).display()).map_err(io)?;
    Ok(())
}

fn session(c: SessionCommand, out: &mut dyn Write) -> Result<(), ApiError> {
    let print = |out: &mut dyn Write, v: &serde_json::Value| writeln!(out, "{}", serde_json::to_string_pretty(v).expect("json")).map_err(io);
    match c {
        SessionCommand::Create {
            corpus,
            store,
            app_name,
            config,
        } => {
            let config: SessionConfig = match config {
                Some(raw) => serde_json::from_str(&raw).map_err(|e| ApiError::bad_request(format!("--config: {e}")))?,
                None => SessionConfig::default(),
            };
            let engine = engine_for(&corpus, &LlmArgs::default())?;
            let state = engine.create_session(&app_name, config)?;
            open_store(&store)?.save(&state)?;
            writeln!(out, "{}", state.session_id).map_err(io)
        }
        SessionCommand::Show { store, session } => {
            let state = open_store(&store)?.load(&session)?;
            print(out, &serde_json::to_value(&state).expect("session serializes"))
        }
        SessionCommand::Query {
            corpus,
            store,
            session,
            slot,
            text,
        } => {
            let engine = engine_for(&corpus, &LlmArgs::default())?;
            let (_, ranking) = with_session(&engine, &open_store(&store)?, &session, |e, s| {
                Ok(e.submit_gui_query(s, slot, &text)?.current_ranking.clone())
            })?;
            write_ranking(out, &ranking).map_err(io)
        }
        SessionCommand::Select {
            corpus,
            store,
            session,
            slot,
            gui,
        } => {
            let engine = engine_for(&corpus, &LlmArgs::default())?;
            with_session(&engine, &open_store(&store)?, &session, |e, s| {
                e.select_gui(s, slot, &gui)?;
                Ok(())
            })?;
            writeln!(out, "selected {gui} for slot {slot}").map_err(io)
        }
        SessionCommand::Complete {
            corpus,
            store,
            session,
            slot,
        } => {
            let engine = engine_for(&corpus, &LlmArgs::default())?;
            with_session(&engine, &open_store(&store)?, &session, |e, s| {
                e.complete_slot(s, slot)?;
                Ok(())
            })?;
            writeln!(out, "completed slot {slot}").map_err(io)
        }
    }
}

/// Builds the application state the server runs on.
pub fn app_state(corpus: &CorpusArgs, llm: &LlmArgs, sessions: Option<&Path>) -> Result<AppState, ApiError> {
    let engine = engine_for(corpus, llm)?;
    let store = sessions.map(SessionStore::open).transpose()?;
    Ok(AppState {
        registry: Arc::new(Registry::new(Arc::new(engine), store)),
        asset_root: corpus.asset_root(),
    })
}

fn serve(a: ServeArgs) -> Result<(), ApiError> {
    let state = app_state(&a.corpus, &a.llm, a.sessions.as_deref())?;
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .map_err(|e| ApiError::bad_request(format!("invalid address {}:{}: {e}", a.host, a.port)))?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| ApiError::internal(e.to_string()))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| ApiError::internal(format!("cannot bind {addr}: {e}")))?;
        log::info!(
            "serving {} GUIs on http://{}",
            state.registry.engine().retriever().corpus().len(),
            listener.local_addr().unwrap_or(addr)
        );
        axum::serve(listener, router(state, a.ui_dir))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| ApiError::internal(e.to_string()))
    })
}
