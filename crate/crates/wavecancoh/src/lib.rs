//! Time-varying, scale-specific canonical coherence between two groups of
//! nonstationary multivariate time series.
//!
//! Given two jointly recorded channel groups X (P channels) and Y
//! (Q channels), this crate estimates, per dyadic wavelet scale j and per
//! rescaled time u = k/T, the squared maximal cross-group association
//! achievable by linear channel combinations under unit quadratic-form
//! constraints — together with the canonical direction vectors that achieve
//! it. A lagged variant scores directed X → Y association at lead h.
//!
//! The pipeline is: non-decimated wavelet transform → raw wavelet
//! periodogram → rectangular smoothing → Gram-inverse bias correction →
//! eigenvalue-floor regularization → per-(scale, time) whitened canonical
//! solve. Simulators with known population coherence, a short-time Fourier
//! baseline, Wald bands over replicates and a trial-permutation test
//! complete the toolbox.
//!
//! Determinism: every stochastic operation takes an explicit 64-bit seed
//! and derives sub-streams by hashing, so results are independent of thread
//! count and scheduling. See the `examples/` directory for one runnable
//! program per capability, and the `wavecancoh` binary for file-based use.

pub mod baseline;
pub mod cancoh;
pub mod cli;
pub mod error;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod lws;
pub mod panel;
pub mod rng;
pub mod simulate;
pub mod wavelets;

pub use error::{Error, Result};
pub use panel::TimeSeriesPanel;
