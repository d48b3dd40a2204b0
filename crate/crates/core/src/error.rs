use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown channel C{0}")]
    UnknownChannel(u32),

    #[error("pair index {0} outside the grid's pair range")]
    PairIndexOutOfRange(usize),

    #[error("grid table line {line}: {msg}")]
    GridTable { line: usize, msg: String },

    #[error("non-finite phase {0}")]
    NonFinitePhase(f64),

    #[error("state is not normalized (norm {0})")]
    Unnormalized(f64),

    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("time tag {0} ps falls outside every switch gate")]
    Unrouted(i64),

    #[error("time tags are not sorted")]
    Unsorted,

    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("degenerate data: {0}")]
    Degenerate(&'static str),

    #[error("CAR undefined with zero accidentals ({coincidences} coincidences)")]
    UndefinedCar { coincidences: f64 },

    #[error("csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input (configuration, arguments,
    /// input files) rather than by a failure while running.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::UnknownChannel(_)
                | Error::PairIndexOutOfRange(_)
                | Error::GridTable { .. }
                | Error::NonFinitePhase(_)
                | Error::OutOfRange { .. }
                | Error::Config { .. }
                | Error::InvalidConfig(_)
                | Error::InsufficientPoints { .. }
        )
    }
}
