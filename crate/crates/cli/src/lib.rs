//! `simhost`: serve one live simulation instance, call its procedures,
//! tail its topics.

pub mod client;
pub mod config;
pub mod serve;

pub const LOG_ENV: &str = "SIMHOST_LOG";

/// Logs to stderr at the level in `SIMHOST_LOG` (default `info`).
pub fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "info")).init();
}
