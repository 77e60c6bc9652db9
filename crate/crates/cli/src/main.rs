use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use hintsched::config::FileConfig;
use hintsched::{load_state, serve, ServeOptions};
use hintsched_core::eval::{aggregate, evaluate, load_dataset, parse_dataset};
use hintsched_core::extender::{Extender, ExtenderConfig};
use hintsched_core::parsers::{AnalyzerConfig, IntentAnalyzer};
use hintsched_core::sim::{build_analyzer, run_scenario, scenario, BackendKind, ScenarioId, SimOptions, EVAL_FIXTURE_JSON};
use hintsched_core::state::{DEFAULT_DEPLOYMENT_LABEL, DEFAULT_PLACEMENT_TTL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "hintsched", version, about = "Hint-driven pod placement: extender service, evaluation and scenario replay")]
struct Cli {
    /// TOML settings file; flags and environment override it.
    #[arg(long, global = true, env = "HINTSCHED_CONFIG")]
    config: Option<PathBuf>,

    /// Hint analyzer: regex, llm or scripted.
    #[arg(long, global = true, env = "HINTSCHED_BACKEND")]
    backend: Option<String>,

    /// `{hint, parsed}` records replacing the bundled scripted fixtures.
    #[arg(long, global = true)]
    scripted_fixture: Option<PathBuf>,

    #[arg(long, global = true, value_enum, env = "HINTSCHED_FORMAT")]
    format: Option<Format>,

    #[arg(long, global = true, env = "HINTSCHED_LLM_ENDPOINT")]
    llm_endpoint: Option<String>,

    #[arg(long, global = true, env = "HINTSCHED_LLM_MODEL")]
    llm_model: Option<String>,

    /// simple, openai or bedrock.
    #[arg(long, global = true, env = "HINTSCHED_LLM_DIALECT")]
    llm_dialect: Option<String>,

    #[arg(long, global = true, env = "HINTSCHED_LLM_TIMEOUT_MS")]
    llm_timeout_ms: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the scheduler-extender HTTP service.
    Serve {
        #[arg(long, env = "HINTSCHED_LISTEN")]
        listen: Option<String>,
        /// Cluster snapshot (nodes and pods); defaults to the bundled testbed.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Re-read the snapshot this often.
        #[arg(long)]
        resync_secs: Option<u64>,
        #[arg(long, env = "HINTSCHED_DEPLOYMENT_LABEL")]
        deployment_label: Option<String>,
        #[arg(long, env = "HINTSCHED_PLACEMENT_TTL_MS")]
        placement_ttl_ms: Option<u64>,
        #[arg(long)]
        no_recent_placements: bool,
    },
    /// Score an analyzer backend against a labelled hint corpus.
    Eval {
        /// JSON array of {prompt, expected, category}; defaults to the bundled corpus.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Skip malformed records instead of failing.
        #[arg(long)]
        lenient: bool,
    },
    /// Replay placement scenarios A-F on the simulated testbed.
    Scenario {
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        inter_arrival_ms: Option<u64>,
        #[arg(long)]
        visibility_delay_ms: Option<u64>,
        #[arg(long)]
        no_recent_placements: bool,
    },
    /// Parse one hint and print the detected intents.
    Parse {
        #[arg(long)]
        hint: String,
    },
}

struct Common {
    format: Format,
    backend: BackendKind,
    analyzer_config: AnalyzerConfig,
    scripted_fixture: Option<PathBuf>,
}

impl Common {
    fn resolve(cli: &Cli, file: &FileConfig) -> anyhow::Result<Self> {
        let format = match (cli.format, file.format.as_deref()) {
            (Some(f), _) => f,
            (None, Some(f)) => Format::from_str(f, true).map_err(|e| anyhow::anyhow!("format: {e}"))?,
            (None, None) => Format::Text,
        };
        let backend = cli
            .backend
            .as_deref()
            .or(file.backend.as_deref())
            .unwrap_or("regex")
            .parse::<BackendKind>()
            .map_err(anyhow::Error::msg)?;

        let mut c = AnalyzerConfig::default();
        let llm = &file.llm;
        if let Some(v) = cli.llm_endpoint.clone().or(llm.endpoint.clone()) {
            c.endpoint = v;
        }
        if let Some(v) = cli.llm_model.clone().or(llm.model.clone()) {
            c.model_id = v;
        }
        if let Some(v) = cli.llm_dialect.as_deref().or(llm.dialect.as_deref()) {
            c.dialect = v.parse().map_err(anyhow::Error::msg)?;
        }
        if let Some(ms) = cli.llm_timeout_ms.or(llm.timeout_ms) {
            c.request_timeout = Duration::from_millis(ms);
        }
        if let Some(v) = llm.max_tokens {
            c.max_tokens = v;
        }
        if let Some(v) = llm.max_hint_length {
            c.max_hint_length = v;
        }
        c.api_key = std::env::var("HINTSCHED_LLM_API_KEY").ok().filter(|k| !k.is_empty()).or(llm.api_key.clone());

        Ok(Common {
            format,
            backend,
            analyzer_config: c,
            scripted_fixture: cli.scripted_fixture.clone().or(file.scripted_fixture.clone()),
        })
    }

    fn analyzer(&self) -> anyhow::Result<IntentAnalyzer> {
        build_analyzer(self.backend, &self.analyzer_config, self.scripted_fixture.as_deref()).context("building analyzer")
    }
}

fn print_json(value: &impl serde::Serialize) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let common = Common::resolve(&cli, &file)?;

    match cli.command {
        Command::Serve {
            listen,
            snapshot,
            resync_secs,
            deployment_label,
            placement_ttl_ms,
            no_recent_placements,
        } => {
            let s = &file.serve;
            let listen: SocketAddr = listen
                .or(s.listen.clone())
                .unwrap_or_else(|| "127.0.0.1:8888".to_string())
                .parse()
                .context("listen address")?;
            let snapshot = snapshot.or(s.snapshot.clone());
            let label = deployment_label
                .or(s.deployment_label.clone())
                .unwrap_or_else(|| DEFAULT_DEPLOYMENT_LABEL.to_string());
            let ttl = placement_ttl_ms
                .or(s.placement_ttl_ms)
                .map(Duration::from_millis)
                .unwrap_or(DEFAULT_PLACEMENT_TTL);
            let recent = !no_recent_placements && s.recent_placements.unwrap_or(true);
            let resync = match (snapshot.clone(), resync_secs.or(s.resync_secs)) {
                (Some(path), Some(secs)) if secs > 0 => Some((path, Duration::from_secs(secs))),
                (Some(path), None) => Some((path, Duration::from_secs(60))),
                _ => None,
            };

            let state = load_state(snapshot.as_deref(), &label)?;
            let extender = Arc::new(Extender::new(
                state,
                Arc::new(common.analyzer()?),
                ExtenderConfig {
                    deployment_label: label.clone(),
                    placement_ttl: ttl,
                    recent_placements: recent,
                },
            ));
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(serve(
                extender,
                ServeOptions {
                    listen,
                    resync,
                    deployment_label: label,
                },
            ))?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Eval { dataset, lenient } => {
            let strict = !(lenient || file.eval.lenient.unwrap_or(false));
            let data = match dataset.or(file.eval.dataset.clone()) {
                Some(path) => load_dataset(&path, strict)?,
                None => parse_dataset(EVAL_FIXTURE_JSON, strict)?,
            };
            for (index, reason) in &data.skipped {
                log::warn!("skipped record {index}: {reason}");
            }
            let analyzer = common.analyzer()?;
            let report = aggregate(&evaluate(&analyzer, &data.cases))?;
            match common.format {
                Format::Text => print!("{}", report.render_text(analyzer.backend_source().name())),
                Format::Json => print_json(&report)?,
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Scenario {
            id,
            inter_arrival_ms,
            visibility_delay_ms,
            no_recent_placements,
        } => {
            let sc = &file.scenario;
            let id = id.or(sc.id.clone()).unwrap_or_else(|| "all".to_string());
            let ids: Vec<ScenarioId> = if id.eq_ignore_ascii_case("all") {
                ScenarioId::ALL.to_vec()
            } else {
                vec![id.parse().map_err(anyhow::Error::msg)?]
            };
            let inter_arrival = inter_arrival_ms.or(sc.inter_arrival_ms).map(Duration::from_millis);
            let delay = visibility_delay_ms.or(sc.visibility_delay_ms).map(Duration::from_millis);
            let opts = SimOptions {
                recent_placements: !no_recent_placements && sc.recent_placements.unwrap_or(true),
                ..SimOptions::default()
            };
            let analyzer = Arc::new(common.analyzer()?);
            let reports: Vec<_> = ids
                .into_iter()
                .map(|id| {
                    let mut spec = scenario(id);
                    if id == ScenarioId::D {
                        spec.inter_arrival = inter_arrival.unwrap_or(spec.inter_arrival);
                        spec.api_visibility_delay = delay.unwrap_or(spec.api_visibility_delay);
                    }
                    run_scenario(&spec, &analyzer, opts)
                })
                .collect();
            let passed = reports.iter().filter(|r| r.passed()).count();
            match common.format {
                Format::Text => {
                    for r in &reports {
                        println!("{}", r.render_text());
                    }
                    println!("{passed}/{} scenarios passed", reports.len());
                }
                Format::Json => print_json(&reports)?,
            }
            Ok(if passed == reports.len() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }

        Command::Parse { hint } => {
            let analyzer = common.analyzer()?;
            let outcome = analyzer.analyze(&hint);
            if outcome.degraded {
                bail!("analyzer failed for this hint ({} backend)", outcome.source.name());
            }
            match common.format {
                Format::Json => print_json(&outcome.parsed.to_wire())?,
                Format::Text => {
                    if outcome.parsed.is_empty() {
                        println!("no intents detected");
                    }
                    for d in outcome.parsed.intents.values() {
                        let meta: Vec<String> = d.to_wire().as_object().into_iter().flatten()
                            .filter(|(k, _)| !matches!(k.as_str(), "confidence" | "strength" | "strength_explanation"))
                            .map(|(k, v)| format!("{k}={v}"))
                            .collect();
                        println!(
                            "{} confidence={:.2} strength={}{}{}",
                            d.intent.name(),
                            d.confidence,
                            d.strength.value(),
                            if meta.is_empty() { String::new() } else { format!(" {}", meta.join(" ")) },
                            d.strength_explanation.as_deref().map(|e| format!(" ({e})")).unwrap_or_default()
                        );
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
