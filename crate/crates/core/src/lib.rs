//! Randomization-test confidence sets for the period of a signal observed at
//! unequally spaced times.

pub mod basis;
pub mod config;
pub mod design;
pub mod error;
pub mod harmonic;
pub mod inference;
pub mod periodogram;
pub mod permutation;
pub mod rng;
pub mod scalar;
pub mod series;
pub mod simulation;

pub use config::{InferenceConfig, PValueEstimator};
pub use design::{optimal_design, DesignKind, DesignOptions, DesignReport, ObservationDesign, SigmaSource};
pub use error::{Error, Result};
pub use harmonic::{fit_harmonic, FitResult, HarmonicParams};
pub use inference::{
    confidence_set, exact_pvalue_enumeration, full_null_pvalue, randomization_pvalue, test_statistic, Candidates,
    ConfidenceSet, TestMode, TestOutcome,
};
pub use periodogram::{build_log_grid, compute_periodogram, find_peaks, PeriodGrid, Periodogram};
pub use permutation::{equivalence_classes, np_test, ModThetaPartition, NpOutcome};
pub use rng::{RngKey, SignPattern, StreamContext};
pub use scalar::Real;
pub use series::{parse_timeseries, TimeSeries};
pub use simulation::{SimDesign, SimulationSpec};

/// Exact p-value from a full enumeration of a finite group.
pub type ExactPValue = num_rational::Ratio<u64>;

pub type TimeSeries64 = TimeSeries<f64>;
pub type TimeSeries32 = TimeSeries<f32>;
pub type PeriodGrid64 = PeriodGrid<f64>;
pub type Periodogram64 = Periodogram<f64>;
pub type HarmonicParams64 = HarmonicParams<f64>;
pub type TestOutcome64 = TestOutcome<f64>;
pub type ConfidenceSet64 = ConfidenceSet<f64>;
