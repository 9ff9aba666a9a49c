use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use voiceguard::dataset::EmbeddingDataset;
use voiceguard::encoder::{serve_protocol, StubEncoder};
use voiceguard::eval::{
    default_grid, evaluate, metrics_table, select_threshold, stratified_split, sweep_table, threshold_sweep,
    write_jsonl,
};
use voiceguard::gateway::{bench, bench_table, serve, BackendChoice, ConfigOverrides, Engine, EngineConfig};
use voiceguard::head::HeadParams;
use voiceguard::train::{cv_table, predict_scores, run_cross_validation, train_head, TrainConfig};
use voiceguard::{Error, Result};

#[derive(Parser)]
#[command(name = "voiceguard", version, about = "Audio safety classification from frozen encoder embeddings")]
struct Cli {
    /// Log progress to stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct EngineArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Decision threshold on p(malicious); 0.15 or lower for high-security use.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_parser = parse_backend)]
    backend: Option<BackendChoice>,
    /// Executable speaking the external encoder protocol.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Head parameter file.
    #[arg(long)]
    head: Option<PathBuf>,
    /// Stub encoder seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    audit_log: Option<PathBuf>,
    /// Declare that the external backend can transcribe.
    #[arg(long)]
    backend_transcribes: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Classify one WAV file and print the decision as JSON.
    Classify {
        wav: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
        /// Also return a transcript when the backend supports it.
        #[arg(long)]
        transcribe: bool,
    },
    /// Run the HTTP classification service.
    Serve {
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
    /// Train a head on a VSED1 embedding dataset.
    TrainHead {
        /// Training dataset.
        #[arg(long)]
        train: PathBuf,
        /// Validation dataset; without it 20% of --train is held out.
        #[arg(long)]
        val: Option<PathBuf>,
        /// Output head parameter file.
        #[arg(long)]
        out: PathBuf,
        /// TOML file with trainer hyperparameters.
        #[arg(long)]
        train_config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_steps: Option<usize>,
        /// Write the validation history as JSON lines.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Metrics of a head on a labelled dataset.
    Eval {
        #[arg(long)]
        head: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = voiceguard::head::DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Threshold sweep over 0.05..0.95 and the F1-optimal threshold.
    Sweep {
        #[arg(long)]
        head: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Stratified k-fold cross-validation of head training.
    Cv {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long)]
        train_config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Latency of the classification path and the full pipeline.
    Bench {
        #[arg(required = true)]
        wavs: Vec<PathBuf>,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long, default_value_t = 20)]
        repetitions: usize,
        #[arg(long, default_value_t = 3)]
        warmup: usize,
        #[arg(long)]
        json: bool,
    },
    /// External-protocol encoder backed by the stub (for testing).
    #[command(hide = true)]
    BackendStub {
        verb: String,
        #[arg(long)]
        input_tensor: String,
        #[arg(long)]
        output_tensor: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fixed transcript to return.
        #[arg(long, default_value = "")]
        transcript: String,
        /// Sleep before answering a transcription request.
        #[arg(long, default_value_t = 0)]
        transcribe_delay_ms: u64,
    },
}

fn parse_backend(s: &str) -> std::result::Result<BackendChoice, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl EngineArgs {
    fn resolve(&self, port: Option<u16>) -> Result<EngineConfig> {
        let env = ConfigOverrides::from_env(std::env::vars())?;
        let cli = ConfigOverrides {
            backend: self.backend,
            model: self.model.clone(),
            transcription: self.backend_transcribes.then_some(true),
            seed: self.seed,
            head: self.head.clone(),
            threshold: self.threshold,
            audit_log: self.audit_log.clone(),
            port,
            ..Default::default()
        };
        EngineConfig::resolve(self.config.as_deref(), &env, &cli)
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v).map_err(|e| Error::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

fn train_config(path: Option<&Path>, seed: Option<u64>, max_steps: Option<usize>) -> Result<TrainConfig> {
    let mut cfg = match path {
        Some(p) => toml::from_str(&std::fs::read_to_string(p)?)
            .map_err(|e| Error::Config(format!("{}: {}", p.display(), e.message())))?,
        None => TrainConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(m) = max_steps {
        cfg.max_steps = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct ClassifyOutput<'a> {
    #[serde(flatten)]
    decision: &'a voiceguard::head::Decision,
    #[serde(skip_serializing_if = "Option::is_none")]
    transcript: Option<&'a str>,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Classify { wav, engine, transcribe } => {
            let cfg = engine.resolve(None)?;
            let engine = Engine::from_config(cfg)?;
            let result = engine.classify_path(&wav, transcribe);
            engine.audit_log().flush()?;
            let c = result?;
            print_json(&ClassifyOutput { decision: &c.decision, transcript: c.transcript.as_deref() })
        }
        Command::Serve { engine, port, host } => {
            let cfg = engine.resolve(port)?;
            let addr = SocketAddr::new(host, cfg.service_port);
            let engine = Arc::new(Engine::from_config(cfg)?);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(engine, addr))
        }
        Command::TrainHead { train, val, out, train_config: tc, seed, max_steps, history } => {
            let cfg = train_config(tc.as_deref(), seed, max_steps)?;
            let train_ds = EmbeddingDataset::load(&train)?;
            let (train_ds, val_ds) = match val {
                Some(v) => (train_ds, EmbeddingDataset::load(v)?),
                None => {
                    let s = stratified_split(&train_ds.labels, (0.8, 0.2, 0.0), cfg.seed)?;
                    (train_ds.subset(&s.train), train_ds.subset(&s.val))
                }
            };
            let outcome = train_head(&train_ds, &val_ds, &cfg)?;
            outcome.params.save(&out)?;
            if let Some(h) = history {
                outcome.history.write_jsonl(std::io::BufWriter::new(std::fs::File::create(h)?))?;
            }
            println!(
                "best step {} validation F1 {:.4}; {} parameters written to {}",
                outcome.history.best_step,
                outcome.history.best_val_f1,
                outcome.params.param_count(),
                out.display()
            );
            Ok(())
        }
        Command::Eval { head, data, threshold, json } => {
            let head = HeadParams::load(head)?;
            let ds = EmbeddingDataset::load(data)?;
            let report = evaluate(&predict_scores(&head, &ds), &ds.labels, threshold)?;
            if json {
                print_json(&report)
            } else {
                print!("{}", metrics_table(&report));
                Ok(())
            }
        }
        Command::Sweep { head, data, json } => {
            let head = HeadParams::load(head)?;
            let ds = EmbeddingDataset::load(data)?;
            let scores = predict_scores(&head, &ds);
            let grid = default_grid();
            let rows = threshold_sweep(&scores, &ds.labels, &grid)?;
            let best = select_threshold(&scores, &ds.labels, &grid)?;
            if json {
                write_jsonl(std::io::stdout().lock(), &rows)
            } else {
                print!("{}", sweep_table(&rows));
                println!("selected threshold {best:.2}");
                Ok(())
            }
        }
        Command::Cv { data, k, train_config: tc, seed, max_steps, json } => {
            let cfg = train_config(tc.as_deref(), seed, max_steps)?;
            let ds = EmbeddingDataset::load(data)?;
            let report = run_cross_validation(&ds, k, &cfg)?;
            if json {
                print_json(&report)
            } else {
                for f in &report.folds {
                    println!("fold {} F1 {:.4} (best step {})", f.fold, f.metrics.f1, f.best_step);
                }
                print!("{}", cv_table(&report));
                Ok(())
            }
        }
        Command::Bench { wavs, engine, repetitions, warmup, json } => {
            let cfg = engine.resolve(None)?;
            let engine = Engine::from_config(cfg)?;
            let report = bench(&engine, &wavs, repetitions, warmup)?;
            engine.audit_log().flush()?;
            if json {
                print_json(&report)
            } else {
                print!("{}", bench_table(&report));
                Ok(())
            }
        }
        Command::BackendStub { verb, input_tensor: _, output_tensor: _, seed, transcript, transcribe_delay_ms } => {
            if verb == "transcribe" {
                std::thread::sleep(std::time::Duration::from_millis(transcribe_delay_ms));
            }
            let backend = StubEncoder::new(seed);
            serve_protocol(&backend, &verb, std::io::stdin().lock(), std::io::stdout().lock(), Some(&transcript))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => tracing::Level::WARN,
        1 => tracing::Level::INFO,
        _ => tracing::Level::DEBUG,
    };
    tracing_subscriber::fmt().with_max_level(level).with_writer(std::io::stderr).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
