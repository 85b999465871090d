//! Exact ground-state correlations, block entanglement entropy and its
//! finite-size scaling for spinless fermions on a hypercubic lattice with
//! nearest-neighbour hopping and p-wave pairing,
//!
//! `H = Σ_k Λ_k f†_k f_k`, `Λ_k = 2 sqrt(t_k² + Δ_k²)`,
//! `t_k = λ - Σ_α cos k_α`, `Δ_k = γ Σ_α sin k_α`.
//!
//! The pipeline is: [`build_correlator_table`] (one FFT per parameter point),
//! [`block_matrices`] for an `L^d` block, [`mode_spectrum`] and
//! [`block_entropy`], then [`select_model`] on the `(L, S_L)` series. The
//! logarithmic prefactor can be compared with [`widom_prefactor`].
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! `*F64` aliases name the common double-precision instantiations.

pub mod cache;
pub mod checks;
pub mod correlators;
mod dense;
pub mod entanglement;
pub mod error;
pub mod grid;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod scaling;
pub mod widom;

pub use cache::CorrelatorCache;
pub use correlators::{
    block_matrices, block_matrices_with_margin, build_correlator_table, build_correlator_table_with,
    BlockCorrelations, CorrelatorTable, TableSource, ZeroModePolicy, DEFAULT_MARGIN,
};
pub use entanglement::{
    block_entropy, entropy_series, entropy_series_from_table, mode_spectrum, mode_spectrum_with, BlockEntropy,
    EntropySeries, ModeSpectrum, SeriesOptions, SpectrumMethod,
};
pub use error::{Error, Result};
pub use grid::KGrid;
pub use model::{
    classify_phase, delta_k, dos_estimate, dos_trend, lambda_k, spectral_gap, t_k, DosHistogram, DosTrend,
    ModelParams, Momentum, Phase, PhaseLabel,
};
pub use oracle::oracle_bdg;
pub use scalar::Real;
pub use scaling::{
    classify_decay, fit_scaling, select_model, DecayFit, DecayKind, ModelSelection, ScalingFit, ScalingModel,
    SelectionConfig,
};
pub use widom::{
    extract_fermi_surface, widom_closed_form_2d, widom_crossing_integral, widom_from_surface, widom_prefactor,
    FermiSurface, WidomResult,
};

pub type ModelParamsF64 = ModelParams<f64>;
pub type MomentumF64 = Momentum<f64>;
pub type CorrelatorTableF64 = CorrelatorTable<f64>;
pub type BlockCorrelationsF64 = BlockCorrelations<f64>;
pub type ModeSpectrumF64 = ModeSpectrum<f64>;
pub type BlockEntropyF64 = BlockEntropy<f64>;
pub type EntropySeriesF64 = EntropySeries<f64>;
pub type ScalingFitF64 = ScalingFit<f64>;
pub type ModelSelectionF64 = ModelSelection<f64>;
pub type DecayFitF64 = DecayFit<f64>;
pub type FermiSurfaceF64 = FermiSurface<f64>;
pub type WidomResultF64 = WidomResult<f64>;
pub type DosHistogramF64 = DosHistogram<f64>;
