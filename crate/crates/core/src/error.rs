use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid lattice configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} index {index} out of range (0..{len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error(
        "free Hamiltonian has a zero mode (eigenvalue {eigenvalue:e}); \
         use mass > 0 or a boundary/offset that lifts the degeneracy"
    )]
    ZeroMode { eigenvalue: f64 },

    #[error("invalid mode vector: {0}")]
    InvalidMode(String),

    #[error("invalid correlation state: {0}")]
    InvalidState(String),

    #[error("invalid gauge function: {0}")]
    InvalidGauge(String),

    #[error(
        "degenerate construction: the current divergence vanishes identically \
         (max |div J| = {max_abs:e}); use a state with a localized current such as a wavepacket"
    )]
    DegenerateConstruction { max_abs: f64 },

    #[error("operation requires a periodic lattice")]
    RequiresPeriodic,

    #[error("Fock oracle limited to N <= 4 sites (2N <= 8 modes), got N = {n_sites}")]
    OracleTooLarge { n_sites: usize },

    #[error("gauge function is constant; the probe is trivially zero")]
    ConstantGauge,

    #[error("refinement study needs at least {needed} levels, got {got}")]
    TooFewLevels { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, LabError>;
