use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sequence length {0} must be a power of two and at least 8")]
    InvalidLength(usize),
    #[error("seed {seed} is not valid for length {len}: {reason}")]
    InvalidSeed {
        seed: i64,
        len: usize,
        reason: &'static str,
    },
    #[error("chirp rate {beta} outside 0..={max}")]
    ChirpRateOutOfRange { beta: i64, max: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{count} odd seeds do not fit below {max} for length {len}")]
    SeedRangeExhausted { count: usize, len: usize, max: usize },
    #[error("identical seeds {0}: the peak is the autocorrelation peak N")]
    IdenticalSeeds(u32),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),
    #[error("composite SNR is undefined for an all-zero clean signal; use absolute noise power")]
    ZeroSignal,
    #[error("band-limit fraction {0} outside (0, 1]")]
    BandLimitFraction(f64),
    #[error("false-alarm probability {0} outside (0, 1)")]
    InvalidPfa(f64),
    #[error("{what} index {index} out of range (count {count})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        count: usize,
    },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;
