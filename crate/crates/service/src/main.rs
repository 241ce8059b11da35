use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use curator_core::quality::profile_quality;
use curator_core::table::ingest_csv;
use curator_core::usage::SessionRecord;
use curator_service::api::router;
use curator_service::app::AppState;
use curator_service::config::{QualitySection, ServiceConfig};
use curator_service::report::{profile_report, ReportInputs};
use curator_service::store::FileStore;

#[derive(Parser)]
#[command(name = "curator", version, about = "Quality and usage scoring for tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a CSV file and write the JSON report.
    Profile {
        csv: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave out per-record scores.
        #[arg(long)]
        no_records: bool,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
    /// Usage profile maintenance.
    Usage {
        #[command(subcommand)]
        command: UsageCommand,
    },
    /// Write the synthetic 42-attribute marketing table as CSV.
    Synth {
        #[arg(long, default_value_t = 1000)]
        records: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a service config with rules for the injected defects.
        #[arg(long)]
        config_out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum UsageCommand {
    /// Rebuild the usage profile of a stored dataset from its session log.
    Recompute {
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// NDJSON file of finalized sessions to append to the log first.
        #[arg(long)]
        import: Option<PathBuf>,
    },
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn load_config(path: Option<&Path>) -> Result<ServiceConfig, Box<dyn std::error::Error>> {
    Ok(match path {
        Some(p) => ServiceConfig::load(p)?,
        None => ServiceConfig::from_env(),
    })
}

fn write_output(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("writing {}: {e}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn profile(csv: &Path, config: Option<&Path>, out: Option<&Path>, with_records: bool) -> CliResult {
    let config = load_config(config)?;
    let quality_config = config.quality_config()?;
    let file = std::fs::File::open(csv).map_err(|e| format!("opening {}: {e}", csv.display()))?;
    let dataset = ingest_csv(std::io::BufReader::new(file), &config.ingest)?;
    let quality = profile_quality(&dataset, &quality_config)?;
    // usage only exists for datasets the service has already stored
    let usage = if config.storage_root.exists() {
        FileStore::open(&config.storage_root)?.load_usage(dataset.id())?
    } else {
        None
    };
    let report = profile_report(
        &ReportInputs {
            dataset: &dataset,
            quality: &quality,
            usage: usage.as_ref(),
            usage_config: &config.usage,
            cutoffs: config.cutoffs,
            glyph_mode: config.glyph_mode,
        },
        with_records,
    );
    write_output(out, &serde_json::to_string_pretty(&report)?)
}

fn serve(config: Option<&Path>, host: std::net::IpAddr, port: u16) -> CliResult {
    let config = load_config(config)?;
    let state = AppState::open(config)?;
    eprintln!("curator: {} dataset(s) under {}", state.dataset_ids().len(), state.store.root().display());
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async move {
        let addr = SocketAddr::new(host, port);
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!("curator: listening on http://{}", listener.local_addr()?);
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

fn recompute(dataset: &str, config: Option<&Path>, import: Option<&Path>) -> CliResult {
    let config = load_config(config)?;
    let store = FileStore::open(&config.storage_root)?;
    if !store.dataset_ids()?.iter().any(|id| id == dataset) {
        return Err(format!("no dataset {dataset:?} under {}", store.root().display()).into());
    }
    if let Some(path) = import {
        let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
        let known: Vec<String> = store.sessions(dataset)?.into_iter().map(|r| r.session_id).collect();
        let mut added = 0;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let record: SessionRecord =
                serde_json::from_str(line).map_err(|e| format!("{}:{}: {e}", path.display(), i + 1))?;
            if record.dataset_id != dataset {
                return Err(format!("{}:{}: session for dataset {:?}", path.display(), i + 1, record.dataset_id).into());
            }
            if known.contains(&record.session_id) {
                continue;
            }
            store.append_session(&record)?;
            added += 1;
        }
        eprintln!("curator: imported {added} session(s)");
    }
    // AppState::open rebuilds and saves usage for every stored dataset
    let state = AppState::open(config)?;
    let entry = state.dataset(dataset).ok_or("dataset vanished during recompute")?;
    let usage = state.reload_usage(&entry)?;
    match usage {
        Some(u) => eprintln!("curator: usage over {} session(s)", u.session_count),
        None => eprintln!("curator: no finalized sessions"),
    }
    write_output(None, &serde_json::to_string_pretty(&state.report(&entry, false))?)
}

fn synth(records: usize, seed: u64, out: Option<&Path>, config_out: Option<&Path>) -> CliResult {
    if let Some(p) = config_out {
        let config = ServiceConfig {
            quality: QualitySection::from_config(&curator_core::synth::marketing_config()),
            ..ServiceConfig::default()
        };
        std::fs::write(p, toml::to_string(&config)?).map_err(|e| format!("writing {}: {e}", p.display()))?;
    }
    let table = curator_core::synth::marketing_table(records, seed);
    match out {
        Some(p) => std::fs::write(p, table.to_csv_string()).map_err(|e| format!("writing {}: {e}", p.display()))?,
        None => print!("{}", table.to_csv_string()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Profile { csv, config, out, no_records } => {
            profile(csv, config.as_deref(), out.as_deref(), !no_records)
        }
        Command::Serve { config, port, host } => serve(config.as_deref(), *host, *port),
        Command::Usage { command: UsageCommand::Recompute { dataset, config, import } } => {
            recompute(dataset, config.as_deref(), import.as_deref())
        }
        Command::Synth { records, seed, out, config_out } => {
            synth(*records, *seed, out.as_deref(), config_out.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("curator: {e}");
            ExitCode::FAILURE
        }
    }
}
