//! Sample-based model fitness via recursive equal-mass partitions and the
//! Hellinger distance.
//!
//! A partition is built from the model sample so every leaf holds the same
//! model mass; the mother sample is counted into the leaves and the two
//! multinomials are compared with the bias-corrected criterion
//! `D + p'/(2 n1) + sqrt(8 p'/n2) < 8 eps^2`.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the common `f64` instantiation.

pub mod criterion;
pub mod dataset;
pub mod divergence;
pub mod error;
pub mod partition;
pub mod report;
pub mod roots;
pub mod scalar;
pub mod threshold;
pub mod validate;

pub use criterion::{
    bias_correction, evaluate_fitness, evaluate_fitness_detailed, fitness_from_pmfs, implied_epsilon,
    ks_two_sample, FitnessEvaluation, FitnessReport, KsResult, Verdict,
};
pub use dataset::{ar_covariance, load_dataset, read_dataset, sample_mvn, sample_uniform, CsvOptions, Dataset, RngStream};
pub use divergence::{
    alpha_generator, dual_generator, f_divergence, hellinger, symmetrized_alpha, DivergenceGenerator, MultinomialPmf,
};
pub use error::{Error, Result};
pub use partition::{
    build_fixed_partition, build_moving_partition, BinCounts, Branching, PartitionKind, PartitionSpec, PartitionTree,
};
pub use scalar::Real;
pub use threshold::{
    a_set_infimum, alpha_of_delta, capital_delta_star, delta_star_hellinger, hellinger_alpha_approx, AlphaOfDelta,
    CapitalDeltaStar, SolverOptions, ThresholdConfig,
};

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type PartitionTree64 = PartitionTree<f64>;
pub type PartitionTree32 = PartitionTree<f32>;
pub type Pmf64 = MultinomialPmf<f64>;
pub type Pmf32 = MultinomialPmf<f32>;
pub type Generator64 = DivergenceGenerator<f64>;
pub type Generator32 = DivergenceGenerator<f32>;
pub type FitnessReport64 = FitnessReport<f64>;
pub type FitnessReport32 = FitnessReport<f32>;
