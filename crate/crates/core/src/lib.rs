//! Desk-scale laboratory for stereo-supervised monocular disparity learning.
//!
//! A simulated drone explores a textured room under a simple avoidance
//! heuristic. A trusted stereo oracle supplies average-disparity labels; a
//! bag-of-textons estimator learns to predict the same quantity from single
//! frames. Three behavioral learning schemes decide who flies while the
//! estimator trains, and the analytics layer quantifies what each scheme
//! costs in safety overrides, spurious turns and classification quality.
//!
//! Library layout:
//! - [`vbow`]: texton dictionaries and histogram-plus-entropy features
//! - [`estimator`]: kNN and linear disparity regressors with smoothing
//! - [`world`]: room geometry, rendering, stereo oracle, kinematics
//! - [`behavior`]: the avoidance finite state machine
//! - [`schemes`]: phase timeline, control switching, experiment runs
//! - [`analytics`]: collision math, ROC/MSE metrics, heatmaps, bootstrap
//! - [`cli`]: batch driver behind the `monolab` binary

pub mod analytics;
pub mod behavior;
pub mod cli;
pub mod config;
pub mod error;
pub mod estimator;
pub mod image;
pub mod schemes;
pub mod summary;
pub mod vbow;
pub mod world;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
