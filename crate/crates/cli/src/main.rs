use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use clap::{Args, Parser, Subcommand};
use log::{error, info};
use refnet_core::config::PipelineConfig;
use refnet_core::pipeline::{run_pipeline, Layout, Stage};
use refnet_core::topics::Topic;
use refnet_core::Error;
use tower_http::services::ServeDir;

#[derive(Parser, Debug)]
#[command(
    name = "refnet",
    version,
    about = "Build and explore in-text author reference networks"
)]
struct Cli {
    /// Pipeline configuration file.
    #[arg(long, global = true, default_value = "refnet.toml")]
    config: PathBuf,

    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the catalog API root or snapshot directory.
    #[arg(long, global = true, env = "REFNET_CATALOG_URL")]
    base_url: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fetch catalog metadata and texts, build author and text tables.
    Fetch(FetchArgs),
    /// Scan texts for author mentions.
    Scan(ScanArgs),
    /// Assign topics to reference contexts.
    Classify(ClassifyArgs),
    /// Build every dataset variant and compute network metrics.
    Analyze(AnalyzeArgs),
    /// Write the explorer bundle.
    Export,
    /// Run all stages in order.
    Run(RunArgs),
    /// Serve the explorer and the bundle over HTTP.
    Serve(ServeArgs),
}

#[derive(Args, Debug, Default)]
struct FetchArgs {
    /// Keep at most this many catalog entries per category.
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct ScanArgs {
    /// Maximum references per text and cited author.
    #[arg(long)]
    cap: Option<usize>,
    /// Context window in characters.
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct ClassifyArgs {
    /// Topic threshold as `<label>=<value>`; `default=<value>` sets the fallback.
    #[arg(long = "threshold", value_parser = parse_threshold)]
    thresholds: Vec<(Option<Topic>, f64)>,
}

#[derive(Args, Debug, Default)]
struct AnalyzeArgs {
    /// Seed for community detection.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    #[command(flatten)]
    fetch: FetchArgs,
    #[command(flatten)]
    scan: ScanArgs,
    #[command(flatten)]
    classify: ClassifyArgs,
    #[command(flatten)]
    analyze: AnalyzeArgs,
}

#[derive(Args, Debug)]
struct ServeArgs {
    /// Port to listen on; 0 picks a free port.
    #[arg(long)]
    port: Option<u16>,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Directory holding the built explorer.
    #[arg(long)]
    explorer_dir: Option<PathBuf>,
    /// Bundle to serve instead of the one in the output directory.
    #[arg(long)]
    bundle: Option<PathBuf>,
}

fn parse_threshold(s: &str) -> Result<(Option<Topic>, f64), String> {
    let (label, value) = s.split_once('=').ok_or("expected <label>=<value>")?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|e| format!("bad threshold `{value}`: {e}"))?;
    let topic = match label.trim() {
        "default" => None,
        l => Some(l.parse::<Topic>().map_err(|e| e.to_string())?),
    };
    Ok((topic, value))
}

impl FetchArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(n) = self.limit {
            cfg.catalog.limit_per_category = Some(n);
        }
    }
}

impl ScanArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(c) = self.cap {
            cfg.scan.per_text_target_cap = c;
        }
        if let Some(w) = self.window {
            cfg.scan.window_size = w;
        }
    }
}

impl ClassifyArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        for (topic, v) in &self.thresholds {
            match topic {
                Some(t) => {
                    cfg.topics.classifier.thresholds.insert(*t, *v);
                }
                None => cfg.topics.classifier.default_threshold = *v,
            }
        }
    }
}

impl AnalyzeArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(s) = self.seed {
            cfg.analysis.seed = s;
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Error> {
    if !cli.config.is_file() {
        return Err(Error::Config(format!(
            "config file {} not found",
            cli.config.display()
        )));
    }
    let mut cfg = PipelineConfig::load(&cli.config)?;
    if let Some(out) = &cli.out {
        cfg.output_dir = std::env::current_dir()
            .map(|d| d.join(out))
            .unwrap_or_else(|_| out.clone());
    }
    if let Some(url) = &cli.base_url {
        cfg.catalog.base_url = url.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut cfg = load_config(&cli)?;
    let stages: Vec<Stage> = match &cli.command {
        Command::Fetch(a) => {
            a.apply(&mut cfg);
            vec![Stage::Fetch]
        }
        Command::Scan(a) => {
            a.apply(&mut cfg);
            vec![Stage::Scan]
        }
        Command::Classify(a) => {
            a.apply(&mut cfg);
            vec![Stage::Classify]
        }
        Command::Analyze(a) => {
            a.apply(&mut cfg);
            vec![Stage::Analyze]
        }
        Command::Export => vec![Stage::Export],
        Command::Run(a) => {
            a.fetch.apply(&mut cfg);
            a.scan.apply(&mut cfg);
            a.classify.apply(&mut cfg);
            a.analyze.apply(&mut cfg);
            Stage::ALL.to_vec()
        }
        Command::Serve(a) => return serve(&cfg, a),
    };
    for report in run_pipeline(&cfg, &stages)? {
        for p in &report.artifacts {
            info!("{}: wrote {}", report.stage, p.display());
        }
    }
    Ok(())
}

struct ServeState {
    bundle: PathBuf,
}

const NO_EXPLORER: &str = "<!doctype html><html><head><meta charset=\"utf-8\"><title>refnet</title></head>\
<body><p>No explorer build is configured. The bundle is at <a href=\"/bundle.json\">/bundle.json</a>.</p></body></html>";

async fn bundle_handler(State(state): State<Arc<ServeState>>) -> Response {
    match tokio::fs::read(&state.bundle).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, "application/json")], bytes).into_response(),
        Err(e) => (StatusCode::NOT_FOUND, format!("bundle unavailable: {e}")).into_response(),
    }
}

fn router(bundle: PathBuf, explorer_dir: Option<PathBuf>) -> Router {
    let state = Arc::new(ServeState { bundle });
    let app = Router::new()
        .route("/bundle.json", get(bundle_handler))
        .with_state(state);
    match explorer_dir {
        Some(dir) => {
            app.fallback_service(ServeDir::new(dir).append_index_html_on_directories(true))
        }
        None => app.route("/", get(|| async { Html(NO_EXPLORER) })),
    }
}

fn serve(cfg: &PipelineConfig, args: &ServeArgs) -> Result<(), Error> {
    let bundle = args
        .bundle
        .clone()
        .unwrap_or_else(|| Layout::new(cfg.output_dir()).bundle());
    if !bundle.is_file() {
        return Err(Error::MissingArtifact {
            stage: "serve".into(),
            path: bundle,
        });
    }
    let explorer_dir = args
        .explorer_dir
        .clone()
        .or_else(|| cfg.serve.explorer_dir.as_deref().map(|d| cfg.resolve(d)));
    if let Some(d) = &explorer_dir {
        if !d.is_dir() {
            return Err(Error::Config(format!(
                "explorer directory {} not found",
                d.display()
            )));
        }
    }
    let port = args.port.unwrap_or(cfg.serve.port);
    let addr: SocketAddr = format!("{}:{port}", args.host)
        .parse()
        .map_err(|e| Error::Config(format!("bad listen address: {e}")))?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| Error::io("tokio runtime", e))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Error::io(addr.to_string(), e))?;
        let local = listener
            .local_addr()
            .map_err(|e| Error::io(addr.to_string(), e))?;
        println!("serving http://{local}");
        let _ = std::io::stdout().flush();
        axum::serve(listener, router(bundle, explorer_dir))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Error::io(local.to_string(), e))
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_parse() {
        assert_eq!(
            parse_threshold("religion=0.4").unwrap(),
            (Some(Topic::Religion), 0.4)
        );
        assert_eq!(parse_threshold("default=0.3").unwrap(), (None, 0.3));
        assert!(parse_threshold("religion").is_err());
        assert!(parse_threshold("astrology=0.4").is_err());
        assert!(parse_threshold("art=high").is_err());
    }

    #[test]
    fn run_flags_reach_the_config() {
        let cli = Cli::try_parse_from([
            "refnet",
            "run",
            "--limit",
            "3",
            "--cap",
            "9",
            "--seed",
            "5",
            "--threshold",
            "art=0.5",
        ])
        .unwrap();
        let Command::Run(args) = cli.command else {
            panic!("not run")
        };
        let mut cfg = PipelineConfig::default();
        args.fetch.apply(&mut cfg);
        args.scan.apply(&mut cfg);
        args.classify.apply(&mut cfg);
        args.analyze.apply(&mut cfg);
        assert_eq!(cfg.catalog.limit_per_category, Some(3));
        assert_eq!(cfg.scan.per_text_target_cap, 9);
        assert_eq!(cfg.analysis.seed, 5);
        assert_eq!(cfg.topics.classifier.threshold(Topic::Art), 0.5);
    }
}
