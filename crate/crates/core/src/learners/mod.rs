//! Regression learners used both for forecasting and inside the feature
//! catalog's model-based features.
//!
//! The set is closed — a LASSO and a random forest — but everything behind
//! [`FittedModel`] is plain vectors, so externally produced predictions can
//! be evaluated with the same metrics.

mod forest;
mod linear;

pub use forest::{forest_fit, forest_fit_with, ForestModel, ForestParams};
pub use linear::{lasso_fit, ols_fit, soft_threshold, LinearModel};

use crate::error::Result;
use crate::matrix::DenseMatrix;

/// Which learner to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LearnerKind {
    Lasso,
    RandomForest,
}

impl std::fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LearnerKind::Lasso => f.write_str("lasso"),
            LearnerKind::RandomForest => f.write_str("random_forest"),
        }
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lasso" => Ok(LearnerKind::Lasso),
            "random_forest" => Ok(LearnerKind::RandomForest),
            other => Err(crate::error::Error::config(format!(
                "unknown learner '{other}' (expected lasso | random_forest)"
            ))),
        }
    }
}

/// Learner choice plus hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    pub lasso_lambda: f64,
    pub forest_trees: usize,
    pub seed: u64,
}

impl LearnerConfig {
    pub fn new(kind: LearnerKind) -> Self {
        LearnerConfig {
            kind,
            lasso_lambda: 0.1,
            forest_trees: 100,
            seed: 42,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// A trained model of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Linear(LinearModel),
    Forest(ForestModel),
}

impl FittedModel {
    pub fn predict(&self, x: &DenseMatrix) -> Result<Vec<f64>> {
        match self {
            FittedModel::Linear(model) => model.predict(x),
            FittedModel::Forest(model) => model.predict(x),
        }
    }
}

/// Trains the configured learner on `(x, y)`.
pub fn fit(config: &LearnerConfig, x: &DenseMatrix, y: &[f64]) -> Result<FittedModel> {
    match config.kind {
        LearnerKind::Lasso => Ok(FittedModel::Linear(lasso_fit(x, y, config.lasso_lambda)?)),
        LearnerKind::RandomForest => Ok(FittedModel::Forest(forest_fit(
            x,
            y,
            config.forest_trees,
            config.seed,
        )?)),
    }
}
