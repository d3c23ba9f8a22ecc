//! Command implementations behind the `speedkit` binary.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 runtime failure,
//! 3 a requested acceptance check failed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use indexmap::IndexMap;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::bench::{self, BenchConfig, RunRecord};
use crate::curation::{
    self, greedy_select_restarts, qp_select, random_select, select_diverse, swap_refine,
    EmbeddingCache, EmbeddingSet, EmbeddingsProvider, SelectionRecord, DEFAULT_QP_ITERS,
};
use crate::dataset::{
    self, fit_to_isl, load_samples, tokenizer_by_id, write_samples, BucketSpec, ChatTemplate,
    Sample, SampleFormat, TokenId, DEFAULT_PAD_SUFFIX,
};
use crate::metrics::{self, MetricsReport, ParetoPoint};
use crate::mock::{self, MockConfig};

/// Environment variable overriding the embedding cache directory.
pub const CACHE_DIR_ENV: &str = "SPEEDKIT_CACHE_DIR";
const DEFAULT_CACHE_DIR: &str = ".speedkit-cache";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Check(_) => 3,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "speedkit", version, about = "Speculative-decoding benchmark toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select a diverse subset of prompts from their embeddings.
    Curate(CurateArgs),
    /// Pad or truncate samples to an exact input length.
    Bucket(BucketArgs),
    /// Sweep concurrency levels against a streaming endpoint.
    Bench(BenchArgs),
    /// Turn recorded runs into reports, Pareto and coverage tables.
    Analyze(AnalyzeArgs),
    /// Run the simulated speculative-decoding endpoint.
    ServeMock(ServeMockArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum CurateMethod {
    GreedySwap,
    Qp,
    Random,
}

#[derive(Debug, Args)]
pub struct CurateArgs {
    /// JSONL of `{id, embedding}` records.
    #[arg(long, required_unless_present = "embed_endpoint", conflicts_with = "embed_endpoint")]
    pub embeddings: Option<PathBuf>,
    /// OpenAI-compatible embeddings URL; texts come from --samples.
    #[arg(long, requires = "samples")]
    pub embed_endpoint: Option<String>,
    #[arg(long, default_value = "text-embedding-3-large")]
    pub embed_model: String,
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long, default_value_t = 80)]
    pub k: usize,
    /// Select k per sample category instead of k overall.
    #[arg(long, requires = "samples")]
    pub per_category: bool,
    #[arg(long, value_enum, default_value = "greedy_swap")]
    pub method: CurateMethod,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Greedy starts per selection; the best is refined.
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    #[arg(long, default_value_t = curation::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BucketArgs {
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long)]
    pub isl: usize,
    #[arg(long, default_value = DEFAULT_PAD_SUFFIX)]
    pub suffix: String,
    /// `bytes`, `whitespace` or `bpe:<rank file>`.
    #[arg(long, default_value = "bytes")]
    pub tokenizer: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub workload: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Directory written by `bench`.
    #[arg(long)]
    pub runs: Option<PathBuf>,
    #[arg(long, requires = "runs")]
    pub pareto: bool,
    #[arg(long, requires_all = ["baseline", "sd"])]
    pub speedup: bool,
    /// Run directory with speculation disabled.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Run directory with speculation enabled.
    #[arg(long)]
    pub sd: Option<PathBuf>,
    #[arg(long, requires_all = ["reference", "test", "k"])]
    pub coverage: bool,
    /// Reference corpus (JSONL of `token_ids` records or samples).
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Comma-separated vocabulary sizes.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    /// Tokenizer for sample records in the coverage corpora.
    #[arg(long, default_value = "bytes")]
    pub tokenizer: String,
    /// Fail with exit code 3 unless every run's empirical AL is within
    /// --tolerance of this value.
    #[arg(long)]
    pub expect_al: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeMockArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8000")]
    pub bind: String,
}

/// Parse `std::env::args`, run, and return the process exit code.
pub fn main_from_env() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging();
    run(cli.command).exit_code
}

fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

/// Run a command, reporting any error on stderr.
pub fn run(command: Command) -> CommandResult {
    let outcome = match command {
        Command::Curate(a) => cmd_curate(&a),
        Command::Bucket(a) => cmd_bucket(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::ServeMock(a) => cmd_serve_mock(&a),
    };
    match outcome {
        Ok(artifacts) => CommandResult {
            exit_code: 0,
            artifacts,
        },
        Err(e) => {
            eprintln!("error: {e}");
            CommandResult {
                exit_code: e.exit_code(),
                artifacts: Vec::new(),
            }
        }
    }
}

fn tokio_runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(runtime)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn create_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => std::fs::create_dir_all(p).map_err(runtime),
        _ => Ok(()),
    }
}

/// Embeddings for the curation candidates, in sample order when samples are
/// given.
fn curation_embeddings(a: &CurateArgs, samples: Option<&[Sample]>) -> Result<EmbeddingSet, CliError> {
    if let Some(endpoint) = &a.embed_endpoint {
        let samples = samples.expect("clap requires --samples with --embed-endpoint");
        let mut provider = EmbeddingsProvider::new(endpoint, &a.embed_model);
        provider.api_key = std::env::var("OPENAI_API_KEY").ok();
        let dir = std::env::var_os(CACHE_DIR_ENV).map_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR), PathBuf::from);
        let cache = EmbeddingCache::new(dir).map_err(runtime)?;
        let ids: Vec<String> = samples.iter().map(|s| s.id.clone()).collect();
        let texts: Vec<String> = samples.iter().map(Sample::flattened_text).collect();
        let rt = tokio_runtime()?;
        return rt
            .block_on(curation::fetch_embeddings_with_ids(ids, &texts, &provider, &cache))
            .map_err(runtime);
    }
    let path = a.embeddings.as_ref().expect("clap requires one embeddings source");
    let emb = EmbeddingSet::load_jsonl(path).map_err(usage)?;
    let Some(samples) = samples else {
        return Ok(emb);
    };
    let index: std::collections::HashMap<&str, usize> =
        emb.ids().iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let order = samples
        .iter()
        .map(|s| {
            index
                .get(s.id.as_str())
                .copied()
                .ok_or_else(|| usage(format!("no embedding for sample `{}`", s.id)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(emb.subset(&order))
}

pub fn cmd_curate(a: &CurateArgs) -> Result<Vec<PathBuf>, CliError> {
    let samples = a
        .samples
        .as_ref()
        .map(|p| load_samples(p, SampleFormat::Jsonl))
        .transpose()
        .map_err(usage)?;
    let emb = curation_embeddings(a, samples.as_deref())?;

    let mut groups: IndexMap<Option<String>, Vec<usize>> = IndexMap::new();
    match (&samples, a.per_category) {
        (Some(s), true) => {
            for (i, sample) in s.iter().enumerate() {
                groups.entry(Some(sample.category.clone())).or_default().push(i);
            }
        }
        _ => {
            groups.insert(None, (0..emb.len()).collect());
        }
    }
    for (cat, members) in &groups {
        if a.k == 0 || a.k > members.len() {
            let scope = cat.as_deref().map_or(String::new(), |c| format!(" in category `{c}`"));
            return Err(usage(format!(
                "--k {} out of range: {} candidates{scope}",
                a.k,
                members.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut records = Vec::new();
    let mut artifacts = Vec::new();
    let mut chosen_samples = Vec::new();
    create_parent(&a.out)?;
    for (cat, members) in &groups {
        let sub = emb.subset(members);
        let seed = rng.next_u64();
        let sel = match a.method {
            CurateMethod::GreedySwap if a.restarts > 1 => {
                let g = greedy_select_restarts(&sub, a.k, seed, a.restarts).map_err(runtime)?;
                swap_refine(&sub, &g, a.max_iter).map_err(runtime)?
            }
            CurateMethod::GreedySwap => select_diverse(&sub, a.k, seed, a.max_iter).map_err(runtime)?,
            CurateMethod::Qp => qp_select(&sub, a.k, DEFAULT_QP_ITERS, None).map_err(runtime)?,
            CurateMethod::Random => random_select(&sub, a.k, seed).map_err(runtime)?,
        };
        for w in &sel.warnings {
            eprintln!("warning: {}: {w}", cat.as_deref().unwrap_or("all"));
        }
        let mut record = SelectionRecord::new(&sub, &sel, seed, cat.clone());
        record.indices = sel.indices.iter().map(|&i| members[i]).collect();
        println!(
            "{}\tk={}\tobjective={:.6}\tmean_similarity={}",
            cat.as_deref().unwrap_or("all"),
            record.k,
            record.objective,
            record.mean_similarity.map_or("n/a".into(), |m| format!("{m:.6}"))
        );

        let csv = match cat {
            Some(c) => sibling(&a.out, &format!("{}.similarity.csv", file_safe(c))),
            None => sibling(&a.out, "similarity.csv"),
        };
        curation::write_similarity_csv(&sub, &sel.indices, &csv).map_err(runtime)?;
        artifacts.push(csv);
        if let Some(s) = &samples {
            chosen_samples.extend(record.indices.iter().map(|&i| s[i].clone()));
        }
        records.push(record);
    }

    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r).map_err(runtime)?);
        text.push('\n');
    }
    std::fs::write(&a.out, text).map_err(runtime)?;
    artifacts.insert(0, a.out.clone());
    if samples.is_some() {
        let path = sibling(&a.out, "samples.jsonl");
        write_samples(&path, &chosen_samples).map_err(runtime)?;
        artifacts.push(path);
    }
    Ok(artifacts)
}

pub fn cmd_bucket(a: &BucketArgs) -> Result<Vec<PathBuf>, CliError> {
    let tokenizer = tokenizer_by_id(&a.tokenizer).map_err(usage)?;
    let spec = BucketSpec::new(a.isl, a.suffix.clone(), &*tokenizer).map_err(usage)?;
    let samples = load_samples(&a.samples, SampleFormat::Jsonl).map_err(usage)?;
    let fitted = samples
        .iter()
        .map(|s| fit_to_isl(s, &spec, &*tokenizer))
        .collect::<Result<Vec<_>, _>>()
        .map_err(runtime)?;
    for s in &fitted {
        let n = tokenizer.count(&s.flattened_text());
        if n != a.isl {
            return Err(runtime(format!("sample `{}` has {n} tokens after fitting", s.id)));
        }
    }
    create_parent(&a.out)?;
    write_samples(&a.out, &fitted).map_err(runtime)?;
    println!(
        "{} samples -> {} ({} tokens, tokenizer {})",
        fitted.len(),
        spec.bucket_id(),
        a.isl,
        tokenizer.tokenizer_id()
    );
    Ok(vec![a.out.clone()])
}

fn write_report(dir: &Path, report: &MetricsReport) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("report_c{:04}.json", report.concurrency));
    let json = serde_json::to_string_pretty(report).map_err(runtime)?;
    std::fs::write(&path, json + "\n").map_err(runtime)?;
    Ok(path)
}

fn print_summary(reports: &[MetricsReport]) {
    println!("concurrency\tAL\tuser_tps\toutput_tps\tttft_p50_ms");
    for r in reports {
        println!(
            "{}\t{:.4}\t{:.2}\t{:.2}\t{:.2}",
            r.concurrency, r.empirical_al, r.user_tps, r.output_tps, r.ttft_stats.p50
        );
    }
}

pub fn cmd_bench(a: &BenchArgs) -> Result<Vec<PathBuf>, CliError> {
    let config = BenchConfig::load(&a.config).map_err(usage)?;
    let tokenizer = tokenizer_by_id(&config.tokenizer_id).map_err(usage)?;
    let workload =
        bench::load_workload(&a.workload, &ChatTemplate::identity(), &*tokenizer).map_err(usage)?;
    if workload.is_empty() {
        return Err(usage("workload is empty"));
    }
    let rt = tokio_runtime()?;
    let runs = rt
        .block_on(bench::run_benchmark(&config, &workload))
        .map_err(runtime)?;
    let mut artifacts = Vec::new();
    let mut reports = Vec::new();
    for run in &runs {
        artifacts.extend(bench::write_run(&a.out, run).map_err(runtime)?);
        if run.aborted.is_some() {
            continue;
        }
        if run.under_filled {
            eprintln!("warning: concurrency {} under-filled by the workload", run.concurrency);
        }
        match metrics::report_for_run(run) {
            Ok(r) => {
                artifacts.push(write_report(&a.out, &r)?);
                reports.push(r);
            }
            Err(e) => eprintln!("warning: concurrency {}: {e}", run.concurrency),
        }
    }
    print_summary(&reports);
    if let Some(run) = runs.iter().find(|r| r.aborted.is_some()) {
        return Err(runtime(format!(
            "run aborted at concurrency {}: {}",
            run.concurrency,
            run.aborted.as_deref().unwrap_or("")
        )));
    }
    let failed: usize = runs.iter().map(|r| r.traces.iter().filter(|t| !t.is_ok()).count()).sum();
    if failed > 0 {
        eprintln!("warning: {failed} requests failed or timed out");
    }
    Ok(artifacts)
}

fn load_runs(dir: &Path) -> Result<Vec<RunRecord>, CliError> {
    let runs = bench::read_runs(dir).map_err(usage)?;
    if runs.is_empty() {
        return Err(usage(format!("no runs in {}", dir.display())));
    }
    Ok(runs)
}

#[derive(Deserialize)]
struct TokenRecord {
    #[serde(default)]
    category: Option<String>,
    token_ids: Vec<TokenId>,
}

/// `(category, token ids)` per line; lines are either `token_ids` records or
/// samples tokenized with `tokenizer`.
fn load_token_corpus(path: &Path, tokenizer: &dyn dataset::TokenizerProvider) -> Result<Vec<(String, Vec<TokenId>)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let v: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| usage(format!("{} line {}: {e}", path.display(), i + 1)))?;
        let bad = |e: serde_json::Error| usage(format!("{} line {}: {e}", path.display(), i + 1));
        if v.get("token_ids").is_some() {
            let r: TokenRecord = serde_json::from_value(v).map_err(bad)?;
            out.push((r.category.unwrap_or_else(|| "all".into()), r.token_ids));
        } else {
            let s: Sample = serde_json::from_value(v).map_err(bad)?;
            out.push((s.category.clone(), tokenizer.encode(&s.flattened_text())));
        }
    }
    Ok(out)
}

fn mean_step_ms(report: &MetricsReport) -> Result<f64, CliError> {
    report
        .step_latency_stats
        .map(|s| s.mean)
        .ok_or_else(|| runtime(format!("no step latencies at concurrency {}", report.concurrency)))
}

fn speedup_table(baseline: &Path, sd: &Path) -> Result<serde_json::Value, CliError> {
    let base_reports: BTreeMap<usize, MetricsReport> = load_runs(baseline)?
        .iter()
        .filter_map(|r| metrics::report_for_run(r).ok().map(|m| (r.concurrency, m)))
        .collect();
    let mut rows = Vec::new();
    for run in load_runs(sd)? {
        let Some(base) = base_reports.get(&run.concurrency) else {
            continue;
        };
        let rep = metrics::report_for_run(&run).map_err(runtime)?;
        let est = metrics::speedup_proxy(mean_step_ms(base)?, mean_step_ms(&rep)?, rep.empirical_al)
            .map_err(runtime)?;
        // per-request decode rate against the baseline's mean rate
        let per_request: Vec<(f64, u64)> = run
            .ok_traces()
            .filter_map(|t| {
                let tput = metrics::tps(std::slice::from_ref(t), run.wall_start_ns, run.wall_end_ns).ok()?;
                (tput.user_tps > 0.0).then(|| (tput.user_tps / base.user_tps, t.total_output_tokens))
            })
            .collect();
        let means = metrics::mean_speedup(&per_request).ok();
        rows.push(serde_json::json!({
            "concurrency": run.concurrency,
            "proxy": est,
            "measured_output_tps_ratio": rep.output_tps / base.output_tps,
            "measured_user_tps_ratio": rep.user_tps / base.user_tps,
            "mean_speedup_request_weighted": means.map(|m| m.request_weighted),
            "mean_speedup_token_weighted": means.map(|m| m.token_weighted),
        }));
    }
    if rows.is_empty() {
        return Err(usage("baseline and sd runs share no concurrency level"));
    }
    Ok(serde_json::Value::Array(rows))
}

pub fn cmd_analyze(a: &AnalyzeArgs) -> Result<Vec<PathBuf>, CliError> {
    if a.runs.is_none() && !a.speedup && !a.coverage {
        return Err(usage("nothing to do: pass --runs, --speedup or --coverage"));
    }
    std::fs::create_dir_all(&a.out).map_err(runtime)?;
    let mut artifacts = Vec::new();
    let mut check_failures = Vec::new();

    if let Some(dir) = &a.runs {
        let runs = load_runs(dir)?;
        let mut reports = Vec::new();
        for run in runs.iter().filter(|r| r.aborted.is_none()) {
            let r = metrics::report_for_run(run).map_err(runtime)?;
            artifacts.push(write_report(&a.out, &r)?);
            if let Some(expected) = a.expect_al {
                if (r.empirical_al - expected).abs() > a.tolerance {
                    check_failures.push(format!(
                        "concurrency {}: AL {:.4} vs expected {expected} ± {}",
                        r.concurrency, r.empirical_al, a.tolerance
                    ));
                }
            }
            reports.push(r);
        }
        print_summary(&reports);
        if a.pareto {
            let points: Vec<ParetoPoint> = reports.iter().map(MetricsReport::pareto_point).collect();
            let path = a.out.join("pareto.csv");
            metrics::write_pareto_csv(&path, &points).map_err(runtime)?;
            artifacts.push(path);
        }
    }

    if a.speedup {
        let table = speedup_table(a.baseline.as_ref().expect("clap"), a.sd.as_ref().expect("clap"))?;
        for row in table.as_array().expect("array") {
            println!(
                "concurrency {}: proxy {:.4}x, measured {:.4}x",
                row["concurrency"], row["proxy"]["speedup"].as_f64().unwrap_or(f64::NAN),
                row["measured_output_tps_ratio"].as_f64().unwrap_or(f64::NAN)
            );
        }
        let path = a.out.join("speedup.json");
        std::fs::write(&path, serde_json::to_string_pretty(&table).map_err(runtime)? + "\n")
            .map_err(runtime)?;
        artifacts.push(path);
    }

    if a.coverage {
        let tokenizer = tokenizer_by_id(&a.tokenizer).map_err(usage)?;
        let reference: Vec<TokenId> = load_token_corpus(a.reference.as_ref().expect("clap"), &*tokenizer)?
            .into_iter()
            .flat_map(|(_, t)| t)
            .collect();
        let test = load_token_corpus(a.test.as_ref().expect("clap"), &*tokenizer)?;
        let mut ks = a.k.clone();
        ks.sort_unstable();
        let rows = ks
            .iter()
            .map(|&k| metrics::vocab_coverage(&reference, &test, k))
            .collect::<Result<Vec<_>, _>>()
            .map_err(usage)?;
        for r in &rows {
            println!("K={}\tcoverage={:.4}", r.k, r.covered_fraction);
        }
        let path = a.out.join("coverage.csv");
        metrics::write_coverage_csv(&path, &rows).map_err(runtime)?;
        artifacts.push(path);
    }

    if !check_failures.is_empty() {
        return Err(CliError::Check(check_failures.join("; ")));
    }
    Ok(artifacts)
}

pub fn cmd_serve_mock(a: &ServeMockArgs) -> Result<Vec<PathBuf>, CliError> {
    let cfg = MockConfig::load(&a.config).map_err(usage)?;
    let rt = tokio_runtime()?;
    rt.block_on(async {
        let handle = mock::serve(cfg, &a.bind).await.map_err(runtime)?;
        println!(
            "listening on {} config_hash={}",
            handle.base_url(),
            handle.state.config().config_hash()
        );
        let _ = std::io::Write::flush(&mut std::io::stdout());
        tokio::select! {
            _ = tokio::signal::ctrl_c() => {}
            _ = wait_for_terminate() => {}
        }
        handle.shutdown().await;
        Ok(Vec::new())
    })
}

#[cfg(unix)]
async fn wait_for_terminate() {
    match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
        Ok(mut s) => {
            s.recv().await;
        }
        Err(_) => std::future::pending().await,
    }
}

#[cfg(not(unix))]
async fn wait_for_terminate() {
    std::future::pending().await
}
