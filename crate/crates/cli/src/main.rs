use std::io;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::mpsc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use simlive_cli::client::{self, Limit};
use simlive_cli::config::{FlagOverrides, InstanceConfig, EXIT_CONFIG};
use simlive_cli::serve::{Instance, EXIT_BIND};
use simlive_core::des::StopSignal;
use simlive_core::endpoint::ClientError;
use simlive_core::netsim::MacVariant;

#[derive(Parser)]
#[command(name = "simhost", version, about = "Live network simulation host")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation instance until interrupted.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        seed: Option<u64>,
        /// Simulated seconds per wall second.
        #[arg(long)]
        pace: Option<f64>,
        #[arg(long)]
        protocol: Option<MacVariant>,
        #[arg(long)]
        label: Option<String>,
    },
    /// Call a procedure and print its result.
    Call {
        url: String,
        procedure: String,
        /// JSON array (positional), object (keyword) or a single value.
        #[arg(allow_hyphen_values = true)]
        args: Option<String>,
    },
    /// Print a topic's events as JSON lines.
    Tail {
        url: String,
        topic: String,
        #[arg(long, conflicts_with = "seconds")]
        count: Option<u64>,
        #[arg(long)]
        seconds: Option<f64>,
    },
}

fn interrupt() -> StopSignal {
    let stop = StopSignal::new();
    let s = stop.clone();
    if let Err(e) = ctrlc::set_handler(move || s.stop()) {
        log::warn!("cannot install interrupt handler: {e}");
    }
    stop
}

fn serve(config: PathBuf, flags: FlagOverrides) -> ExitCode {
    let loaded = InstanceConfig::load(&config).and_then(|mut c| {
        c.apply(&flags);
        let base = config.parent().unwrap_or(std::path::Path::new(".")).to_owned();
        let sim = c.build(&base)?;
        Ok((c, sim))
    });
    let (cfg, sim) = match loaded {
        Ok(v) => v,
        Err(e) => {
            eprintln!("simhost: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let mut instance = match Instance::start(&cfg, sim) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("simhost: {e}");
            return ExitCode::from(EXIT_BIND as u8);
        }
    };
    println!("{}", instance.url());
    let (tx, rx) = mpsc::channel();
    if let Err(e) = ctrlc::set_handler(move || {
        let _ = tx.send(());
    }) {
        log::warn!("cannot install interrupt handler: {e}");
    }
    while rx.recv_timeout(Duration::from_millis(200)).is_err() {
        if instance.is_finished() {
            break;
        }
    }
    log::info!("shutting down");
    match instance.shutdown() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("simhost: simulation failed: {e}");
            ExitCode::FAILURE
        }
    }
}

fn report(e: &ClientError) {
    match e {
        ClientError::RemoteError { uri, args, .. } => match args.first() {
            Some(msg) => eprintln!("{uri}: {}", msg.as_str().map_or_else(|| msg.to_string(), str::to_owned)),
            None => eprintln!("{uri}"),
        },
        other => eprintln!("simhost: {other}"),
    }
}

fn main() -> ExitCode {
    simlive_cli::init_logging();
    match Cli::parse().command {
        Command::Serve {
            config,
            port,
            seed,
            pace,
            protocol,
            label,
        } => serve(
            config,
            FlagOverrides {
                port,
                seed,
                pace,
                protocol,
                label,
            },
        ),
        Command::Call { url, procedure, args } => {
            let payload = match client::parse_args(args.as_deref()) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("simhost: {e}");
                    return ExitCode::from(EXIT_CONFIG as u8);
                }
            };
            match client::call(&url, &procedure, payload) {
                Ok(v) => {
                    println!("{v}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    report(&e);
                    ExitCode::FAILURE
                }
            }
        }
        Command::Tail {
            url,
            topic,
            count,
            seconds,
        } => {
            let limit = match (count, seconds) {
                (Some(n), _) => Limit::Count(n),
                (None, Some(s)) if s >= 0.0 && s.is_finite() => Limit::Duration(Duration::from_secs_f64(s)),
                (None, Some(_)) => {
                    eprintln!("simhost: --seconds must be a non-negative number");
                    return ExitCode::from(EXIT_CONFIG as u8);
                }
                (None, None) => Limit::Forever,
            };
            match client::tail(&url, &topic, limit, &interrupt(), &mut io::stdout().lock()) {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => {
                    report(&e);
                    ExitCode::FAILURE
                }
            }
        }
    }
}
