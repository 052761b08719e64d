use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use earpiece_core::analytics::{
    compare_report, group_stats, parse_survey, parse_tagged, survey_aggregate, CiConfig, Resources, SurveyScale,
};
use earpiece_core::curation::Blocklist;
use earpiece_core::fixtures;
use earpiece_core::textgen::{NGramModel, DEFAULT_ALPHA, DEFAULT_ORDER};
use earpiece_gateway::auth::TokenIssuer;
use earpiece_gateway::config::GatewayConfig;
use earpiece_gateway::demo::run_demo;
use earpiece_gateway::ingest::{ingest_corpus, train_corpus, ModelDescriptor};
use earpiece_gateway::replay::{replay_file, ShowSummary};
use earpiece_gateway::server::{serve, AppState};
use earpiece_gateway::GatewayError;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "earpiece", version, about = "Run and analyse earpiece-fed improv shows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train an n-gram model on a corpus file (one utterance per line).
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Start the session server.
    Serve {
        /// A model written by `train`.
        #[arg(long, conflicts_with = "corpus")]
        model: Option<PathBuf>,
        /// Train on this corpus at startup instead of loading a model.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        port: Option<u16>,
        /// One word per line; the bundled list when omitted.
        #[arg(long)]
        blocklist: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Keep session logs here and reload them at startup.
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
    /// Compare lexical features of tagged lines (`SOURCE<TAB>text`).
    Analyze {
        #[arg(long)]
        lines: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Directory with easy_words.txt, dictionary.txt and
        /// sentiment_lexicon.tsv; the bundled lists when omitted.
        #[arg(long)]
        resources: Option<PathBuf>,
    },
    /// Aggregate audience questionnaires per group.
    Survey {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        scale_min: u8,
        #[arg(long, default_value_t = 7)]
        scale_max: u8,
    },
    /// Rebuild a show from its transcript and print its summary.
    Replay {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Play the bundled two-scene show and write its transcript.
    Demo {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "earpiece_gateway=info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), GatewayError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| GatewayError::Data(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| GatewayError::Io(format!("{}: {e}", path.display())))
}

fn read(path: &Path) -> Result<String, GatewayError> {
    std::fs::read_to_string(path).map_err(|e| GatewayError::Data(format!("{}: {e}", path.display())))
}

fn print_json(value: &impl Serialize) {
    // a closed pipe (`| head`) is not an error worth reporting
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn run(command: Command) -> Result<(), GatewayError> {
    match command {
        Command::Train { corpus, order, alpha, out } => {
            let d = ingest_corpus(&corpus, order, alpha, &out)?;
            print_json(&d);
        }
        Command::Serve {
            model,
            corpus,
            port,
            blocklist,
            seed,
            config,
            log_dir,
        } => {
            let mut cfg = match &config {
                Some(path) => GatewayConfig::load(path)?,
                None => GatewayConfig::default(),
            };
            cfg.port = port.unwrap_or(cfg.port);
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.log_dir = log_dir.or(cfg.log_dir);
            cfg.validate()?;
            let (model, descriptor) = match (model, corpus) {
                (Some(path), _) => {
                    let m = NGramModel::load(&path).map_err(|e| GatewayError::Data(e.to_string()))?;
                    let d = ModelDescriptor::of(&m);
                    (m, d)
                }
                (None, Some(path)) => train_corpus(&path, DEFAULT_ORDER, DEFAULT_ALPHA)?,
                (None, None) => return Err(GatewayError::BadRequest("serve needs --model or --corpus".into())),
            };
            let blocklist = match blocklist {
                Some(path) => Blocklist::load(&path).map_err(|e| GatewayError::Data(e.to_string()))?,
                None => Blocklist::parse(fixtures::BLOCKLIST),
            };
            serve_forever(cfg, model, descriptor, blocklist)?;
        }
        Command::Analyze { lines, out, resources } => {
            let tagged = parse_tagged(&read(&lines)?).map_err(|e| GatewayError::Data(format!("{}: {e}", lines.display())))?;
            let loaded;
            let res = match resources {
                Some(dir) => {
                    loaded = Resources::load_dir(&dir).map_err(|e| GatewayError::Data(e.to_string()))?;
                    &loaded
                }
                None => Resources::bundled(),
            };
            let groups = group_stats(&tagged, res, &CiConfig::default());
            let report = compare_report(&groups);
            write_json(&out, &serde_json::json!({ "groups": groups, "report": report }))?;
            for claim in &report.claims {
                let verdict = match claim.holds {
                    Some(true) => "holds",
                    Some(false) => "does not hold",
                    None => "n/a",
                };
                println!("{:<32} {verdict}", claim.id);
            }
        }
        Command::Survey {
            input,
            out,
            scale_min,
            scale_max,
        } => {
            let scale = SurveyScale {
                min: scale_min,
                max: scale_max,
            };
            let responses = parse_survey(&read(&input)?, scale).map_err(|e| GatewayError::Data(format!("{}: {e}", input.display())))?;
            let groups = survey_aggregate(&responses, &CiConfig::default());
            write_json(&out, &groups)?;
            for (group, g) in &groups {
                println!("{group:<10} n={}", g.n);
            }
        }
        Command::Replay { transcript, out } => {
            let summary = replay_file(&transcript, Resources::bundled(), &CiConfig::default())?;
            match out {
                Some(path) => write_json(&path, &summary)?,
                None => print_json(&summary),
            }
        }
        Command::Demo { out } => {
            let run = run_demo()?;
            let json = run.transcript.to_json();
            match out {
                Some(path) => std::fs::write(&path, &json).map_err(|e| GatewayError::Io(format!("{}: {e}", path.display())))?,
                None => {
                    let _ = std::io::stdout().lock().write_all(json.as_bytes());
                }
            }
            let summary = ShowSummary::from_session(run.rehearsal.host.show(), Resources::bundled(), &CiConfig::default());
            if let Some(m) = summary.latency.median_s {
                eprintln!("median delivery latency {m:.2} s over {} lines", summary.latency.per_utterance.len());
            }
        }
    }
    Ok(())
}

fn serve_forever(cfg: GatewayConfig, model: NGramModel, descriptor: ModelDescriptor, blocklist: Blocklist) -> Result<(), GatewayError> {
    let addr: SocketAddr = format!("{}:{}", cfg.host, cfg.port)
        .parse()
        .map_err(|e| GatewayError::Data(format!("bad listen address {}:{}: {e}", cfg.host, cfg.port)))?;
    let log_dir = cfg.log_dir.clone();
    let state = Arc::new(AppState::new(cfg, Arc::new(model), descriptor, Arc::new(blocklist), TokenIssuer::Random));
    if let Some(dir) = &log_dir {
        std::fs::create_dir_all(dir).map_err(|e| GatewayError::Io(format!("{}: {e}", dir.display())))?;
        let n = state.recover_sessions(dir)?;
        tracing::info!("recovered {n} sessions from {}", dir.display());
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| GatewayError::Io(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| GatewayError::Io(format!("cannot listen on {addr}: {e}")))?;
        let bound = listener.local_addr().map_err(|e| GatewayError::Io(e.to_string()))?;
        println!("listening on http://{bound}");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        serve(listener, state, shutdown).await.map_err(|e| GatewayError::Io(e.to_string()))
    })
}
