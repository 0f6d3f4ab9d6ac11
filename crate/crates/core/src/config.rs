use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a Monte Carlo p-value is formed from `exceedances` out of `R` draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PValueEstimator {
    /// `#exceed / R`.
    PlugInMean,
    /// `(1 + #exceed) / (R + 1)`; valid at every finite `R`.
    #[default]
    AddOne,
}

impl PValueEstimator {
    pub fn estimate(self, exceedances: u64, replicates: u64) -> f64 {
        match self {
            PValueEstimator::PlugInMean => exceedances as f64 / replicates as f64,
            PValueEstimator::AddOne => (exceedances + 1) as f64 / (replicates + 1) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub alpha: f64,
    pub replicates: u64,
    /// Peak filter: only peaks at least this fraction of the highest are tested.
    pub peak_filter_gamma: f64,
    pub pvalue_estimator: PValueEstimator,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            replicates: 10_000,
            peak_filter_gamma: 0.2,
            pvalue_estimator: PValueEstimator::AddOne,
        }
    }
}

impl InferenceConfig {
    pub fn new(alpha: f64, replicates: u64) -> Result<Self> {
        Self {
            alpha,
            replicates,
            ..Self::default()
        }
        .validated()
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.peak_filter_gamma = gamma;
        self
    }

    pub fn with_estimator(mut self, estimator: PValueEstimator) -> Self {
        self.pvalue_estimator = estimator;
        self
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        if !(self.peak_filter_gamma > 0.0 && self.peak_filter_gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma must lie in (0, 1], got {}",
                self.peak_filter_gamma
            )));
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimators() {
        assert_eq!(PValueEstimator::PlugInMean.estimate(3, 10), 0.3);
        assert_eq!(PValueEstimator::AddOne.estimate(3, 9), 0.4);
        assert_eq!(PValueEstimator::AddOne.estimate(9, 9), 1.0);
        assert_eq!(PValueEstimator::AddOne.estimate(0, 99), 0.01);
    }

    #[test]
    fn validation() {
        assert!(InferenceConfig::new(0.05, 100).is_ok());
        assert!(InferenceConfig::new(0.0, 100).is_err());
        assert!(InferenceConfig::new(1.0, 100).is_err());
        assert!(InferenceConfig::new(0.05, 0).is_err());
        assert!(InferenceConfig::default().with_gamma(0.0).validated().is_err());
        assert!(InferenceConfig::default().with_gamma(1.0).validated().is_ok());
    }
}
