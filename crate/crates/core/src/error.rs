use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors across the splitting pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid split fractions: {0}")]
    InvalidFractions(String),
    #[error("partition too small: {0}")]
    PartitionTooSmall(String),
    #[error("requested sizes exceed dataset: {0}")]
    SizesExceedDataset(String),
    #[error("no decodable samples under {0}")]
    EmptyDataset(PathBuf),
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("empty pixel sequence")]
    EmptyPixels,
    #[error("histogram configurations differ: {0}")]
    MixedConfigs(String),
    #[error("reference aggregate is zero; cannot normalize")]
    DegenerateReference,
    #[error("k too large: {0}")]
    KTooLarge(String),
    #[error("invalid fold count: {0}")]
    InvalidK(String),
    #[error("class too small: {0}")]
    ClassTooSmall(String),
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("missing band: {0}")]
    MissingBand(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported manifest schema version {0}")]
    SchemaMismatch(u64),
    #[error("manifest parse error: {0}")]
    ManifestParse(String),
    #[error("manifest does not match dataset: {0}")]
    FingerprintMismatch(String),
}

impl Error {
    /// Stable machine-parsable category name, printed by the CLI as
    /// `error[Category]: detail`.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidFractions(_) => "InvalidFractions",
            Error::PartitionTooSmall(_) => "PartitionTooSmall",
            Error::SizesExceedDataset(_) => "SizesExceedDataset",
            Error::EmptyDataset(_) => "EmptyDataset",
            Error::Io { .. } => "IoError",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::InvalidDataset(_) => "InvalidDataset",
            Error::EmptyPixels => "EmptyPixels",
            Error::MixedConfigs(_) => "MixedConfigs",
            Error::DegenerateReference => "DegenerateReference",
            Error::KTooLarge(_) => "KTooLarge",
            Error::InvalidK(_) => "InvalidK",
            Error::ClassTooSmall(_) => "ClassTooSmall",
            Error::NonFiniteInput(_) => "NonFiniteInput",
            Error::MissingBand(_) => "MissingBand",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::SchemaMismatch(_) => "SchemaMismatch",
            Error::ManifestParse(_) => "ManifestParse",
            Error::FingerprintMismatch(_) => "FingerprintMismatch",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
