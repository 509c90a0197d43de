//! Discrimination of symmetric qubit ensembles under general symmetric
//! figures of merit.
//!
//! An ensemble of `2M` qubit states sits on a cone of the Bloch ball, evenly
//! spaced in azimuth. Any symmetric discriminator on it has conditional
//! probabilities of the form `alpha cos^2(|i - j| pi / 2M) + beta`; the
//! equatorial symmetric POVM realizes the narrowest admissible member `Q`,
//! which is optimal for every monotonous merit. The modules build the
//! ensembles, channels and bounds, and provide independent numerical checks.

pub mod cli;
pub mod discriminator;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod merit;
pub mod nosignal;
pub mod optimal;
pub mod qubit;

pub use discriminator::{ChannelMatrix, CosineFit};
pub use ensemble::{make_symmetric_ensemble, ShadowDecomposition, SymmetricEnsemble};
pub use error::{Error, Result};
pub use merit::{BuiltinMerit, FigureOfMerit, ScoreReport};
pub use nosignal::{AdmissibleRegion, BoundReport, Verdict};
pub use optimal::{GeneralOptions, OptimizationResult};
pub use qubit::{BlochVector, ComplexMatrix2, DensityOperator, Povm, PovmEffect};
