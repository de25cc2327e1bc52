use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use proxysync_core::canonical::to_canonical_string;
use proxysync_core::gesture::corpus;
use proxysync_core::model::UserId;
use proxysync_core::par::Execution;
use proxysync_core::relay::HubConfig;
use proxysync_core::scenario::sweep::{self, SweepParameter};
use proxysync_core::scenario::{
    library, load_script, run_script, Golden, LiveSession, RunReport, ScenarioName, ScenarioScript,
};
use proxysync_net::{router, run_live, serve, LiveConfig, Relay};
use serde_json::Value;
use tokio::net::TcpListener;

#[derive(Parser)]
#[command(name = "proxysync", version, about = "Shared tabletop proxies over a relay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the TCP relay.
    ServeRelay(ServeRelay),
    /// Run one scenario to completion and write its report.
    Run(RunArgs),
    /// Run a scenario once per parameter value and write CSV.
    Sweep(SweepArgs),
    /// Convert a run report's metrics to CSV or canonical JSON.
    Export(ExportArgs),
    /// Serve a live session to browsers over the websocket bridge.
    StreamUi(StreamUi),
    /// Regenerate checked-in scripts, goldens and the gesture corpus.
    #[command(hide = true)]
    Fixtures(Fixtures),
}

#[derive(Args)]
struct ServeRelay {
    #[arg(long, default_value = "127.0.0.1:7400")]
    address: SocketAddr,
    /// JSON object of namespace -> {delay, jitter} in milliseconds.
    #[arg(long)]
    latency_table: Option<PathBuf>,
    /// Do not retain last-known messages for late joiners.
    #[arg(long)]
    no_retention: bool,
    /// Deliver messages back to their originator.
    #[arg(long)]
    echo: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Script file.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Built-in scenario.
    #[arg(long)]
    scenario: Option<ScenarioName>,
}

impl Source {
    fn load(&self) -> Result<ScenarioScript> {
        match (&self.script, self.scenario) {
            (Some(path), _) => load_script(path).map_err(|e| anyhow::anyhow!("{e}")),
            (None, Some(name)) => Ok(library::builtin(name)),
            (None, None) => bail!("either --script or --scenario is required"),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Directory for report.json, metrics.json and moves.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the script seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: Source,
    /// artificial-latency (ms), robot-speed (m/s), hand-speed (m/s) or table-size (m).
    #[arg(long)]
    parameter: SweepParameter,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    values: Vec<f64>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run values one after another instead of on the thread pool.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ExportArgs {
    /// report.json written by `run`.
    #[arg(long)]
    report: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StreamUi {
    #[arg(long, default_value = "127.0.0.1:7401")]
    address: SocketAddr,
    /// Script whose scene is served; scripted events are dropped.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long, default_value = "tictactoe")]
    scenario: ScenarioName,
    /// The user the browser controls.
    #[arg(long, default_value = "alice")]
    user: String,
    #[arg(long)]
    latency_table: Option<PathBuf>,
    /// Wall-clock milliseconds per simulation tick.
    #[arg(long, default_value_t = 10)]
    tick_ms: u64,
}

#[derive(Args)]
struct Fixtures {
    /// Repository root.
    #[arg(long, default_value = ".")]
    root: PathBuf,
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::ServeRelay(a) => serve_relay(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Export(a) => export(a),
        Command::StreamUi(a) => stream_ui(a),
        Command::Fixtures(a) => fixtures(&a.root),
    }
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Runtime::new()?)
}

fn relay_with_table(config: HubConfig, table: Option<&Path>) -> Result<Relay> {
    let relay = Relay::new(config);
    if let Some(path) = table {
        let table = Relay::load_latency_table(path).with_context(|| format!("reading {}", path.display()))?;
        relay.apply_latency_table(&table)?;
    }
    Ok(relay)
}

fn serve_relay(a: ServeRelay) -> Result<()> {
    let config = HubConfig {
        retention: !a.no_retention,
        echo: a.echo,
        seed: a.seed,
    };
    runtime()?.block_on(async {
        let relay = relay_with_table(config, a.latency_table.as_deref())?;
        relay.spawn_delivery();
        let listener = TcpListener::bind(a.address).await?;
        tracing::info!(address = %listener.local_addr()?, "relay listening");
        serve(listener, relay).await?;
        Ok(())
    })
}

fn write_canonical(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = to_canonical_string(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn run(a: RunArgs) -> Result<()> {
    let mut script = a.source.load()?;
    if let Some(seed) = a.seed {
        script.parameters.seed = seed;
    }
    let started = Instant::now();
    let report = run_script(&script)?;
    let m = &report.metrics;
    println!("scenario        {}", report.name);
    println!("sim time        {} ms in {:.2} s", m.sim_time, started.elapsed().as_secs_f64());
    println!("moves           {}", m.moves);
    println!("illusion breaks {}", m.illusion_breaks);
    if let (Some(min), Some(mean)) = (m.min_slack_ms, m.mean_slack_ms) {
        println!("slack           min {min:.0} ms, mean {mean:.0} ms");
    }
    println!("reassignments   {}", m.reassignments);
    if let Some(acc) = m.gesture_accuracy() {
        println!("gesture targets {}/{} ({:.0}%)", m.checkpoints_matched, m.checkpoints_expected, acc * 100.0);
    }
    println!("violations      speed {}, clearance {}", m.speed_violations, m.clearance_violations);
    println!(
        "relay latency   p50 {} ms, p95 {} ms, max {} ms",
        m.relay.latency_p50, m.relay.latency_p95, m.relay.latency_max
    );
    println!("final digest    {}", report.final_digest);
    if let Some(out) = a.out {
        fs::create_dir_all(&out)?;
        write_canonical(&out.join("report.json"), &report)?;
        write_canonical(&out.join("metrics.json"), &Golden::from(&report))?;
        let mut w = csv::Writer::from_path(out.join("moves.csv"))?;
        w.write_record(["object", "site", "proxy", "distance", "grasp_at", "release_at", "display_at", "settled_at", "slack_ms", "illusion_break"])?;
        for mv in &report.moves {
            w.write_record([
                mv.object.to_string(),
                mv.site.to_string(),
                mv.proxy.as_ref().map(|p| p.to_string()).unwrap_or_default(),
                format!("{:.4}", mv.distance()),
                mv.grasp_at.to_string(),
                mv.release_at.to_string(),
                mv.display_at.to_string(),
                mv.settled_at.map(|t| t.to_string()).unwrap_or_default(),
                mv.slack_ms.map(|s| format!("{s:.0}")).unwrap_or_default(),
                mv.illusion_break.to_string(),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}

fn sweep_cmd(a: SweepArgs) -> Result<()> {
    let script = a.source.load()?;
    let exec = if a.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let rows = sweep::sweep(&script, a.parameter, &a.values, exec)?;
    match &a.out {
        Some(path) => sweep::write_csv(&rows, fs::File::create(path)?)?,
        None => sweep::write_csv(&rows, std::io::stdout().lock())?,
    }
    if let Some(t) = sweep::zero_break_threshold(&rows) {
        eprintln!("zero illusion breaks from {} = {t}", a.parameter);
    }
    Ok(())
}

/// Flattens nested objects into dotted keys.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Null => out.push((prefix.to_owned(), String::new())),
        Value::String(s) => out.push((prefix.to_owned(), s.clone())),
        other => out.push((prefix.to_owned(), other.to_string())),
    }
}

fn export(a: ExportArgs) -> Result<()> {
    let text = fs::read_to_string(&a.report).with_context(|| format!("reading {}", a.report.display()))?;
    let report: RunReport = serde_json::from_str(&text).context("not a run report")?;
    let golden = Golden::from(&report);
    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    match a.format {
        Format::Json => writeln!(out, "{}", to_canonical_string(&golden)?)?,
        Format::Csv => {
            let mut cells = Vec::new();
            flatten("", &serde_json::to_value(&golden)?, &mut cells);
            let mut w = csv::Writer::from_writer(out);
            w.write_record(cells.iter().map(|(k, _)| k))?;
            w.write_record(cells.iter().map(|(_, v)| v))?;
            w.flush()?;
        }
    }
    Ok(())
}

fn stream_ui(a: StreamUi) -> Result<()> {
    let mut script = match &a.script {
        Some(p) => load_script(p).map_err(|e| anyhow::anyhow!("{e}"))?,
        None => library::builtin(a.scenario),
    };
    script.events.clear();
    let namespace = script.name.as_str().to_owned();
    let live = LiveSession::new(&script, UserId::new(a.user.as_str())).map_err(|e| anyhow::anyhow!("{e}"))?;
    runtime()?.block_on(async move {
        let relay = relay_with_table(HubConfig::default(), a.latency_table.as_deref())?;
        relay.spawn_delivery();
        let mut config = LiveConfig::new(namespace.clone());
        config.tick = Duration::from_millis(a.tick_ms.max(1));
        let sim = tokio::spawn(run_live(relay.clone(), live, config));
        let listener = TcpListener::bind(a.address).await?;
        tracing::info!(address = %listener.local_addr()?, %namespace, "stream-ui bridge on /ws");
        tokio::select! {
            r = axum::serve(listener, router(relay)) => r?,
            r = sim => bail!("simulation stopped: {:?}", r?),
        }
        Ok(())
    })
}

fn fixtures(root: &Path) -> Result<()> {
    let scenarios = root.join("scenarios");
    let golden = scenarios.join("golden");
    fs::create_dir_all(&golden)?;
    let scripts: Vec<ScenarioScript> = ScenarioName::ALL.into_iter().map(library::builtin).collect();
    let reports = proxysync_core::par::map(Execution::Parallel, &scripts, run_script);
    for (script, report) in scripts.iter().zip(reports) {
        let name = script.name.as_str();
        fs::write(scenarios.join(format!("{name}.json")), script.to_canonical_json() + "\n")?;
        write_canonical(&golden.join(format!("{name}.json")), &Golden::from(&report?))?;
        println!("wrote {name}");
    }
    let dir = root.join("corpus").join("gestures");
    corpus::write_dir(&dir, &corpus::synthesize())?;
    println!("wrote {}", dir.display());
    Ok(())
}
