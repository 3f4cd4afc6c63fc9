//! Steady-state stock-flow-consistent economy with distributional
//! constraints on household wealth.
//!
//! - [`sfc_model`]: the accounting system, its reduction to a single
//!   constant-sum constraint on deposits, and state recovery.
//! - [`distributions`]: weight functions `f(m)` and percentile fits.
//! - [`mass_transport`]: chemical potential, grand-canonical marginals, phase
//!   classification and a brute-force canonical oracle.
//! - [`sampler`]: hit-and-run sampling on the constant-sum simplex.
//! - [`estimation`]: implied income laws and parameter estimation.
//! - [`ingest`]: percentile-threshold tables.

// NaN must fail positivity checks, hence `!(x > 0.0)` throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod estimation;
pub mod ingest;
pub mod mass_transport;
pub mod numeric;
pub mod sampler;
pub mod sfc_model;

pub use distributions::{Family, FittedDistribution, TailClass, WeightFunction};
pub use error::{Error, IngestError, Result};
pub use ingest::PercentileTable;
pub use mass_transport::{Density, Phase};
pub use sampler::{ConstraintSet, DirectionScheme, SampleChain, SamplerConfig};
pub use sfc_model::{EconomicState, ModelParameters, ReducedSystem, SteadyStateSystem};
