use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid momentum: {0}")]
    InvalidMomentum(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A momentum sample sits on the gapless manifold.
    #[error(
        "degenerate mode at k = {k:?}: quasiparticle energy {energy:e} is below {threshold:e}; \
         enable the shifted grid or change N"
    )]
    DegenerateMode { k: Vec<f64>, energy: f64, threshold: f64 },

    /// The finite-lattice ground state is degenerate.
    #[error(
        "zero-energy BdG mode (|E| = {energy:e}); the ground state is degenerate, \
         flip the boundary-condition flag or change the lattice size"
    )]
    ZeroEnergyMode { energy: f64 },

    #[error("lattice too large for dense diagonalization: {sites} sites (limit {limit})")]
    LatticeTooLarge { sites: usize, limit: usize },

    #[error("block size L = {block_l} violates the margin: need N >= {margin} * L, have N = {n}")]
    MarginViolation { block_l: usize, margin: usize, n: usize },

    #[error("invalid correlation-matrix spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("not enough data points for the fit: have {have}, need {need}")]
    TooFewPoints { have: usize, need: usize },

    #[error("rank-deficient design matrix: {0}")]
    RankDeficient(String),

    #[error("invalid fit input: {0}")]
    InvalidSeries(String),

    #[error("no finite Fermi surface: {0}")]
    NoFermiSurface(String),

    #[error("under-resolved: {0}")]
    UnderResolved(String),

    #[error("correlator cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
