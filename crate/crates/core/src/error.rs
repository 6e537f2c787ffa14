use thiserror::Error;

/// Errors raised by the simulator stages.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid phase noise model: {0}")]
    InvalidModel(String),
    #[error("too short for spectral shaping: {got} samples (need an even count >= {min})")]
    TooShort { got: usize, min: usize },
    #[error("trajectory shorter than waveform ({traj} < {wave})")]
    TrajectoryTooShort { traj: usize, wave: usize },
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    SampleRateMismatch(f64, f64),
    #[error("ragged block: {bits} bits is not a multiple of {per_symbol}")]
    RaggedBlock { bits: usize, per_symbol: usize },
    #[error("invalid carrier configuration: {0}")]
    InvalidCarrier(String),
    #[error("payload size mismatch: expected {expected} bits, got {got}")]
    PayloadSize { expected: usize, got: usize },
    #[error("degenerate allocation: {0}")]
    DegenerateAllocation(String),
    #[error("grid has {subcarriers} subcarriers but FFT size is {nfft}")]
    GridTooWide { subcarriers: usize, nfft: usize },
    #[error("insufficient samples: need {need}, have {have}")]
    InsufficientSamples { need: usize, have: usize },
    #[error("invalid channel profile: {0}")]
    InvalidProfile(String),
    #[error("antenna configuration: {0}")]
    Antennas(String),
    #[error("port mismatch: realization expects {expected} tx ports, got {got}")]
    PortMismatch { expected: usize, got: usize },
    #[error("signal power reference must be positive, got {0}")]
    SignalPower(f64),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("no pilots in grid: {0}")]
    NoPilots(&'static str),
    #[error("singular system in MMSE equalizer")]
    Singular,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("all-zero reference symbols")]
    ZeroReference,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("scenario {scenario}: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
