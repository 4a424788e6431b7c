use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use tourplanner::ccot::{render_markdown, Models};
use tourplanner::config::RunConfig;
use tourplanner::constraints::{hard_score, validate_itinerary};
use tourplanner::eval::{evaluate, PlanCase};
use tourplanner::geo::{ClusterConfig, GeoPoint};
use tourplanner::itinerary::{Itinerary, ITINERARY_SCHEMA_VERSION};
use tourplanner::pipeline::{cluster_candidates, run_pipeline};
use tourplanner::profile::{extract_rule_based, ExplicitDemands, UserProfile};
use tourplanner::providers::transcript::{Recording, Replay, TranscriptSink};
use tourplanner::providers::{ChatModel, Embedder};
use tourplanner::recall::{recall_candidates, recall_rate};
use tourplanner::reward::{score_itinerary, GspoBatch};
use tourplanner::sandbox::{generate_synthetic, load_sandbox, save_sandbox, Attraction, Sandbox, SyntheticSpec};

#[derive(Parser)]
#[command(name = "tourplanner", version, about = "Multi-day itinerary planner over a travel sandbox")]
struct Cli {
    /// Run configuration (JSON); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sandbox utilities.
    #[command(subcommand)]
    Sandbox(SandboxCmd),
    /// Candidate recall diagnostics.
    #[command(subcommand)]
    Recall(RecallCmd),
    /// Spatial clustering diagnostics.
    #[command(subcommand)]
    Geo(GeoCmd),
    /// Plan a trip for a query.
    Plan(PlanArgs),
    /// Check an itinerary against the hard rules; exits 0 only when eta is 1.
    Validate(ItineraryArgs),
    /// Full reward breakdown for an itinerary.
    Score(ScoreArgs),
    /// Group-sequence policy optimization utilities.
    #[command(subcommand)]
    Gspo(GspoCmd),
    /// Batch evaluation of generated plans against references.
    Evaluate(EvaluateArgs),
}

#[derive(Subcommand)]
enum SandboxCmd {
    /// Load and validate a sandbox file.
    Validate { path: PathBuf },
    /// Generate a synthetic sandbox.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Generator settings (JSON); defaults apply when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum RecallCmd {
    /// Per-channel counts and recall rate against a ground-truth list.
    Report {
        #[arg(long)]
        query: String,
        #[arg(long)]
        sandbox: Option<PathBuf>,
        /// JSON array of attraction ids or names.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GeoCmd {
    /// Cluster the attractions of a city.
    Cluster {
        #[arg(long)]
        sandbox: Option<PathBuf>,
        #[arg(long)]
        duration: usize,
        /// City to cluster; the first city with attractions when omitted.
        #[arg(long)]
        city: Option<String>,
    },
}

#[derive(Subcommand)]
enum GspoCmd {
    /// Advantages, sequence ratios and clipped objective for a batch.
    Eval {
        #[arg(long)]
        batch: PathBuf,
    },
}

#[derive(Args)]
struct PlanArgs {
    /// File holding the natural-language query.
    #[arg(long)]
    query_file: PathBuf,
    #[arg(long)]
    sandbox: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Where to write per-day arbitration records.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Provider transcript to write; defaults to `<out>.transcript.jsonl`.
    #[arg(long, conflicts_with = "replay")]
    transcript: Option<PathBuf>,
    /// Replay provider calls from a previous run's manifest.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Also write a Markdown rendering.
    #[arg(long)]
    markdown: Option<PathBuf>,
}

#[derive(Args)]
struct ItineraryArgs {
    #[arg(long)]
    itinerary: PathBuf,
    #[arg(long)]
    sandbox: Option<PathBuf>,
    /// User profile or explicit demands (JSON); parsed from the itinerary query when omitted.
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    target: ItineraryArgs,
    /// Reference itinerary for the route score.
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory of case files (JSON), read in name order.
    #[arg(long)]
    cases: PathBuf,
    #[arg(long)]
    sandbox: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Also compute the judge-based surpass rate.
    #[arg(long)]
    judge: bool,
    #[arg(long, default_value_t = 4)]
    parallelism: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    config_hash: String,
    seed: u64,
    query: String,
    transcript: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(ToString::to_string).collect();
            eprintln!("{}", json!({"error": chain.first(), "causes": &chain[1..]}));
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Sandbox(SandboxCmd::Validate { path }) => {
            let sb = load_sandbox(&path).with_context(|| format!("sandbox {}", path.display()))?;
            print_json(&json!({
                "valid": true,
                "cities": sb.cities().len(),
                "attractions": sb.attractions().len(),
                "restaurants": sb.restaurants().len(),
                "hotels": sb.hotels().len(),
                "transport": sb.transport().len(),
            }))?;
        }
        Command::Sandbox(SandboxCmd::Gen { seed, spec, out }) => {
            let spec: SyntheticSpec = match spec {
                Some(p) => read_json(&p)?,
                None => SyntheticSpec::default(),
            };
            let sb = generate_synthetic(seed, &spec)?;
            save_sandbox(&sb, &out).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Recall(RecallCmd::Report { query, sandbox, truth }) => {
            let sb = open_sandbox(sandbox.as_deref(), &cfg)?;
            let demands = extract_rule_based(&query)?;
            let embedder = cfg.embedder()?;
            let outcome = recall_candidates(&demands, &query, &sb, embedder.as_ref(), None)?;
            let ids = |v: &[tourplanner::recall::Scored]| v.iter().map(|s| s.id.clone()).collect::<Vec<_>>();
            let mut report = json!({
                "dest_city": demands.dest_city,
                "config": outcome.config,
                "semantic": outcome.semantic.len(),
                "landmark": outcome.landmark.len(),
                "suggested": outcome.suggested.len(),
                "merged": outcome.merged.ids().len(),
            });
            if let Some(p) = truth {
                let names: Vec<String> = read_json(&p)?;
                let truth = resolve_truth(&sb, &demands.dest_city, &names)?;
                let truth: Vec<&str> = truth.iter().map(String::as_str).collect();
                let rate = |v: Vec<String>| -> Result<f64> {
                    let v: Vec<&str> = v.iter().map(String::as_str).collect();
                    Ok(recall_rate(&v, &truth)?)
                };
                report["recall_rate"] = json!({
                    "semantic": rate(ids(&outcome.semantic))?,
                    "landmark": rate(ids(&outcome.landmark))?,
                    "merged": rate(outcome.merged.ids().iter().map(|s| s.to_string()).collect())?,
                });
            }
            print_json(&report)?;
        }
        Command::Geo(GeoCmd::Cluster { sandbox, duration, city }) => {
            let sb = open_sandbox(sandbox.as_deref(), &cfg)?;
            let city = match city {
                Some(c) => c,
                None => sb
                    .cities()
                    .iter()
                    .find(|c| sb.attractions_in(&c.name).next().is_some())
                    .map(|c| c.name.clone())
                    .ok_or_else(|| anyhow!("sandbox has no attractions"))?,
            };
            let points: Vec<&Attraction> = sb.attractions_in(&city).collect();
            let ccfg = cfg
                .pipeline
                .cluster
                .clone()
                .unwrap_or_else(|| ClusterConfig::for_duration(duration));
            let r = cluster_candidates(&points, &ccfg)?;
            let centroids: Vec<[f64; 2]> = r.centroids.iter().map(|p: &GeoPoint| [p.lat, p.lon]).collect();
            print_json(&json!({
                "city": city,
                "ids": points.iter().map(|a| &a.id).collect::<Vec<_>>(),
                "labels": r.labels,
                "centroids": centroids,
                "final_eps_km": r.final_eps_km,
                "iterations": r.iterations,
            }))?;
        }
        Command::Plan(args) => plan(args, &cfg)?,
        Command::Validate(args) => {
            let (it, sb, demands) = load_target(&args, &cfg)?;
            let h = hard_score(&it, &sb, &demands);
            let reports = validate_itinerary(&it, &sb, &cfg.pipeline.ccot.rules);
            let ok = h.eta == 1.0;
            print_json(&json!({"hard": h, "reports": reports}))?;
            if !ok {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Score(args) => {
            let (it, sb, demands) = load_target(&args.target, &cfg)?;
            let reference: Option<Itinerary> = args.reference.as_deref().map(read_json).transpose()?;
            let h = hard_score(&it, &sb, &demands);
            let pref = cfg.preference_model();
            let r = score_itinerary(&it, h, &sb, demands.budget, pref.as_ref(), reference.as_ref(), &cfg.reward)?;
            print_json(&r)?;
        }
        Command::Gspo(GspoCmd::Eval { batch }) => {
            let b: GspoBatch = read_json(&batch)?;
            print_json(&b.evaluate()?)?;
        }
        Command::Evaluate(args) => {
            let sb = open_sandbox(args.sandbox.as_deref(), &cfg)?;
            let cases = load_cases(&args.cases)?;
            let judge = if args.judge { Some(cfg.judge_model()?) } else { None };
            let judge_ref = judge.as_ref().map(|m| (m.as_ref() as &dyn ChatModel, &cfg.judge.settings));
            let report = evaluate(&cases, &sb, &cfg.eval, judge_ref, args.parallelism)?;
            let mut doc = serde_json::to_value(&report)?;
            doc["config_hash"] = json!(cfg.config_hash());
            write_atomic(&args.out, &pretty(&doc)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn plan(args: PlanArgs, cfg: &RunConfig) -> Result<()> {
    let sb = open_sandbox(args.sandbox.as_deref(), cfg)?;
    let hash = cfg.config_hash();
    let query = fs::read_to_string(&args.query_file)
        .with_context(|| format!("reading {}", args.query_file.display()))?
        .trim()
        .to_string();
    let manifest_path = sibling(&args.out, "manifest.json");

    let run = match &args.replay {
        Some(mpath) => {
            let m: Manifest = read_json(mpath)?;
            if m.config_hash != hash {
                bail!("manifest {} was produced with config {}, current config is {hash}", mpath.display(), m.config_hash);
            }
            if m.query != query {
                bail!("manifest {} was produced for a different query", mpath.display());
            }
            let replay = Replay::load(&m.transcript).with_context(|| format!("transcript {}", m.transcript.display()))?;
            let models = Models { chat: &replay, embedder: &replay, provider: &cfg.chat.settings };
            let run = run_pipeline(&query, &sb, &models, &cfg.pipeline, &hash)?;
            if manifest_path != *mpath {
                write_atomic(&manifest_path, &pretty(&m)?)?;
            }
            run
        }
        None => {
            let transcript = args.transcript.clone().unwrap_or_else(|| sibling(&args.out, "transcript.jsonl"));
            let sink = TranscriptSink::to_file(&transcript).with_context(|| format!("creating {}", transcript.display()))?;
            let chat: Arc<dyn ChatModel> = Arc::from(cfg.chat_model()?);
            let embedder: Arc<dyn Embedder> = Arc::from(cfg.embedder()?);
            let chat = Recording { inner: chat, sink: &sink };
            let embedder = Recording { inner: embedder, sink: &sink };
            let models = Models { chat: &chat, embedder: &embedder, provider: &cfg.chat.settings };
            let run = run_pipeline(&query, &sb, &models, &cfg.pipeline, &hash)?;
            drop(sink);
            let m = Manifest { config_hash: hash.clone(), seed: cfg.seed, query: query.clone(), transcript };
            write_atomic(&manifest_path, &pretty(&m)?)?;
            run
        }
    };

    write_atomic(&args.out, &run.trip.itinerary.to_json())?;
    if let Some(p) = &args.record {
        let doc = json!({
            "config_hash": hash,
            "profile": run.profile,
            "hotel": run.hotel,
            "outbound": run.outbound,
            "return": run.inbound,
            "agents": run.trip.agents,
            "days": run.trip.records,
        });
        write_atomic(p, &pretty(&doc)?)?;
    }
    if let Some(p) = &args.markdown {
        write_atomic(p, &render_markdown(&run.trip.itinerary))?;
    }
    Ok(())
}

fn load_target(args: &ItineraryArgs, cfg: &RunConfig) -> Result<(Itinerary, Sandbox, ExplicitDemands)> {
    let it: Itinerary = read_json(&args.itinerary)?;
    if it.schema_version != ITINERARY_SCHEMA_VERSION {
        bail!("itinerary schema_version {} is not supported", it.schema_version);
    }
    let sb = open_sandbox(args.sandbox.as_deref(), cfg)?;
    let demands = match &args.profile {
        Some(p) => {
            let v: Value = read_json(p)?;
            if v.get("explicit").is_some() {
                serde_json::from_value::<UserProfile>(v)
                    .with_context(|| format!("profile {}", p.display()))?
                    .explicit
            } else {
                serde_json::from_value::<ExplicitDemands>(v).with_context(|| format!("profile {}", p.display()))?
            }
        }
        None if !it.query.is_empty() => extract_rule_based(&it.query)?,
        None => bail!("itinerary has no query; pass --profile"),
    };
    Ok((it, sb, demands))
}

fn load_cases(dir: &Path) -> Result<Vec<PlanCase>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let mut c: PlanCase = read_json(p)?;
            if c.id.is_empty() {
                c.id = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            }
            Ok(c)
        })
        .collect()
}

fn resolve_truth(sb: &Sandbox, city: &str, entries: &[String]) -> Result<Vec<String>> {
    entries
        .iter()
        .map(|e| {
            sb.attraction_by_id(e)
                .or_else(|| sb.resolve_attraction(city, e))
                .map(|a| a.id.clone())
                .ok_or_else(|| anyhow!("truth entry {e:?} is not an attraction in the sandbox"))
        })
        .collect()
}

fn open_sandbox(flag: Option<&Path>, cfg: &RunConfig) -> Result<Sandbox> {
    let path = flag
        .or(cfg.sandbox.as_deref())
        .ok_or_else(|| anyhow!("no sandbox given; pass --sandbox or set it in the config"))?;
    load_sandbox(path).with_context(|| format!("sandbox {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn pretty<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    print!("{}", pretty(v)?);
    Ok(())
}

/// `<path>.<suffix>`, keeping the full original file name.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    path.with_file_name(name)
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
