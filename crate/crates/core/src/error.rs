use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kernel evaluated outside 0 <= tau <= s <= 1 (s = {s}, tau = {tau})")]
    KernelDomain { s: f64, tau: f64 },

    #[error("sine series truncated too early: term {i_max} contributes {relative:e} relative at the first interior node")]
    Truncation { i_max: usize, relative: f64 },

    #[error("steady-state problem is resonant for mode {n} (determinant {det:e})")]
    Resonant { n: i32, det: f64 },

    #[error("delay line underrun: t = {requested} requested, earliest retained sample is t = {earliest}")]
    HorizonUnderrun { requested: f64, earliest: f64 },

    #[error("delay line sample out of order: expected t = {expected}, got t = {got}")]
    NonUniformSample { expected: f64, got: f64 },

    #[error("instability guard tripped at t = {t}: |value| = {value:e}")]
    Instability { t: f64, value: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
