use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input data violates a structural rule (bad dimensions, inconsistent
    /// class counts, unparseable records, ...).
    #[error("malformed input: {0}")]
    MalformedInput(String),

    /// A regime string in a corpus file is not one of the known regimes.
    #[error("unknown regime: {0:?}")]
    UnknownRegime(String),

    /// A score distribution sums to zero, so it cannot be renormalized.
    #[error("degenerate score distribution (sums to zero)")]
    DegenerateDistribution,

    /// Fewer points than the k-NN computation requires.
    #[error("insufficient points: have {have}, need at least {need}")]
    InsufficientPoints { have: usize, need: usize },

    /// Spatial variance requires at least two cluster members.
    #[error("insufficient members: have {0}, need at least 2")]
    InsufficientMembers(usize),

    /// The pass-through path only accepts single-sample sets.
    #[error("expected a single-sample set, got {0} samples")]
    NotSingleSample(usize),

    /// A metric needs both a correct and an incorrect class, one is empty.
    #[error("empty class: {0}")]
    EmptyClass(&'static str),

    /// A grid run was given a corpus with no images.
    #[error("empty corpus")]
    EmptyCorpus,

    /// Scene objects are too close for the cluster-count oracle to be valid.
    #[error("overlap ambiguity: {0}")]
    OverlapAmbiguity(String),

    /// I/O failure, annotated with the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
