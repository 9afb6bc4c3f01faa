use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid register layout: {0}")]
    InvalidLayout(String),

    #[error("unknown register `{0}`")]
    UnknownRegister(String),

    #[error("state is not normalized (squared norm {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("matrix is not unitary (max |U^dag U - I| = {defect:e})")]
    NotUnitary { defect: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("{side} vectors {first} and {second} are not orthonormal (overlap {overlap})")]
    NotOrthonormal {
        side: &'static str,
        first: usize,
        second: usize,
        overlap: f64,
    },

    #[error("invalid belief partition: {0}")]
    InvalidPartition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no trial records to accumulate")]
    EmptyRecords,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
