//! Data-driven discovery of MIMO polynomial NARMAX models with
//! tree-adjoining-grammar guided genetic programming.
//!
//! The pipeline, module by module:
//!
//! * [`grammar`]: elementary trees, derivation trees (the genotype),
//!   adjunction, random generation, validation.
//! * [`interpreter`]: derived tree → canonical [`PolynomialModel`].
//! * [`simulation`]: one-step-ahead prediction, free-run simulation, RMS
//!   and best-fit-rate metrics, CSV data sets.
//! * [`estimation`]: least squares, CMA-ES and Nelder–Mead coefficient
//!   estimation.
//! * [`evolution`]: crossover, mutation, Pareto sorting and the main loop.
//! * [`benchmarks`]: synthetic systems with known ground truth.

pub mod benchmarks;
pub mod estimation;
pub mod evolution;
pub mod grammar;
pub mod interpreter;
pub mod rng;
pub mod simulation;

pub use estimation::{estimate, estimate_sets, EstimationError, EstimatorConfig, Method};
pub use evolution::{evolve, Evolution, GpConfig, Individual, ObjectivePoint, ProgressRecord};
pub use grammar::{build_grammar, ChannelCounts, DerivationTree, Grammar, Limits, NonlinearOp, SubModel, TreeId};
pub use interpreter::{interpret, model_signature, MonomialTerm, PolynomialModel, SignalFactor};
pub use simulation::{bfr, evaluate, predict, rms_errors, simulate, DataSet, ResponsePair, SimulationError};
