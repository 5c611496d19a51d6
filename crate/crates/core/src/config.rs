//! Experiment configuration: JSON-backed, fully defaulted, validated against
//! every module invariant before any run starts.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::behavior::BehaviorConfig;
use crate::error::{Error, Result};
use crate::schemes::Scheme;
use crate::vbow;
use crate::world::{CameraModel, World};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldSettings {
    pub width: f64,
    pub depth: f64,
    pub texture_seed: u64,
    /// Meters per texel of the wall textures.
    pub texture_scale: f64,
    /// Spatial period of the wall textures in meters.
    pub texture_period: f64,
}

impl Default for WorldSettings {
    fn default() -> Self {
        Self {
            width: 10.0,
            depth: 10.0,
            texture_seed: 2024,
            texture_scale: 0.01,
            texture_period: 5.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraSettings {
    pub hfov_deg: f64,
    pub width: usize,
    pub height: usize,
    /// Disparity at 1 m depth, in pixel-meters.
    pub bf: f64,
    pub disparity_max: f64,
    pub noise_sigma: f64,
}

impl Default for CameraSettings {
    fn default() -> Self {
        Self {
            hfov_deg: 120.0,
            width: 128,
            height: 96,
            bf: 10.0,
            disparity_max: 32.0,
            noise_sigma: 0.25,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorSettings {
    /// Turn threshold on the average disparity, in pixels.
    pub disparity_threshold: f64,
    pub attitude_threshold_deg: f64,
    pub turn_rate_deg: f64,
}

impl Default for BehaviorSettings {
    fn default() -> Self {
        Self {
            disparity_threshold: 6.67,
            attitude_threshold_deg: 5.0,
            turn_rate_deg: 90.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSettings {
    pub k: usize,
    pub smooth_window: usize,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            k: 5,
            smooth_window: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSettings {
    pub textons_per_family: usize,
    pub patch_size: usize,
    /// Patch samples per frame for the histogram.
    pub samples_per_frame: usize,
    pub kohonen_presentations: usize,
    /// Stereo-only warmup frames used to train the dictionary.
    pub bootstrap_frames: usize,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        Self {
            textons_per_family: vbow::DEFAULT_TEXTONS_PER_FAMILY,
            patch_size: vbow::DEFAULT_PATCH_SIZE,
            samples_per_frame: vbow::DEFAULT_SAMPLES_PER_IMAGE,
            kohonen_presentations: vbow::DEFAULT_KOHONEN_PRESENTATIONS,
            bootstrap_frames: 300,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSettings {
    pub initial_s: f64,
    pub learning_s: f64,
    pub test_s: f64,
}

impl Default for PhaseSettings {
    fn default() -> Self {
        Self {
            initial_s: 60.0,
            learning_s: 240.0,
            test_s: 300.0,
        }
    }
}

/// Root configuration. Every field has a default, so an empty JSON object is
/// a valid config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub world: WorldSettings,
    pub camera: CameraSettings,
    pub behavior: BehaviorSettings,
    pub estimator: EstimatorSettings,
    pub features: FeatureSettings,
    pub phases: PhaseSettings,
    /// Multiplies all three phase durations; recorded in summaries.
    pub time_scale: f64,
    pub fps: f64,
    pub forward_speed: f64,
    /// Disparity above which the stereo oracle vetoes forward motion while
    /// the monocular estimate is in control.
    pub override_threshold: f64,
    pub schemes: Vec<Scheme>,
    pub seeds: Vec<u64>,
    pub dictionary_seed: u64,
    /// Bootstrap-test iterations for scheme comparisons.
    pub bootstrap_iters: usize,
    pub bootstrap_seed: u64,
    pub heatmap_bins: usize,
    /// Diagnostic: replace the monocular estimate with the stereo value.
    pub oracle_mono: bool,
    pub output_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            world: WorldSettings::default(),
            camera: CameraSettings::default(),
            behavior: BehaviorSettings::default(),
            estimator: EstimatorSettings::default(),
            features: FeatureSettings::default(),
            phases: PhaseSettings::default(),
            time_scale: 1.0,
            fps: 10.0,
            forward_speed: 0.5,
            override_threshold: 10.0,
            schemes: vec![
                Scheme::ColdTurkey,
                Scheme::Dagger {
                    beta: Scheme::DEFAULT_DAGGER_BETA,
                },
                Scheme::TrainingWheels,
                Scheme::PureStereo,
            ],
            seeds: (1..=30).collect(),
            dictionary_seed: 9000,
            bootstrap_iters: 10_000,
            bootstrap_seed: 4242,
            heatmap_bins: 32,
            oracle_mono: false,
            output_dir: "out".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    pub fn camera_model(&self) -> CameraModel {
        CameraModel {
            hfov: self.camera.hfov_deg.to_radians(),
            width: self.camera.width,
            height: self.camera.height,
            bf: self.camera.bf,
            disparity_max: self.camera.disparity_max,
            noise_sigma: self.camera.noise_sigma,
        }
    }

    pub fn behavior_config(&self) -> BehaviorConfig {
        BehaviorConfig {
            disparity_threshold: self.behavior.disparity_threshold,
            attitude_threshold: self.behavior.attitude_threshold_deg.to_radians(),
            turn_rate: self.behavior.turn_rate_deg.to_radians(),
        }
    }

    pub fn build_world(&self) -> Result<World> {
        World::new(
            self.world.width,
            self.world.depth,
            self.world.texture_seed,
            self.world.texture_scale,
            self.world.texture_period,
        )
    }

    pub fn scaled_phase_seconds(&self) -> (f64, f64, f64) {
        (
            self.phases.initial_s * self.time_scale,
            self.phases.learning_s * self.time_scale,
            self.phases.test_s * self.time_scale,
        )
    }

    /// Checks every field against the module invariants. Returns the first
    /// violation with its field path.
    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid_config(field, format!("must be positive, got {v}")))
            }
        };
        positive("world.width", self.world.width)?;
        positive("world.depth", self.world.depth)?;
        positive("world.texture_scale", self.world.texture_scale)?;
        if self.world.texture_period < 8.0 * self.world.texture_scale {
            return Err(Error::invalid_config(
                "world.texture_period",
                "must span at least 8 texels",
            ));
        }

        if !(0.0..180.0).contains(&self.camera.hfov_deg) || self.camera.hfov_deg == 0.0 {
            return Err(Error::invalid_config(
                "camera.hfov_deg",
                "must lie in (0, 180)",
            ));
        }
        if self.camera.width == 0 || self.camera.height == 0 {
            return Err(Error::invalid_config(
                "camera.width/height",
                "image dimensions must be positive",
            ));
        }
        positive("camera.bf", self.camera.bf)?;
        positive("camera.disparity_max", self.camera.disparity_max)?;
        if self.camera.noise_sigma < 0.0 {
            return Err(Error::invalid_config(
                "camera.noise_sigma",
                "must be non-negative",
            ));
        }

        if self.behavior.disparity_threshold <= 0.0
            || self.behavior.disparity_threshold >= self.camera.disparity_max
        {
            return Err(Error::invalid_config(
                "behavior.disparity_threshold",
                "must lie in (0, disparity_max)",
            ));
        }
        positive(
            "behavior.attitude_threshold_deg",
            self.behavior.attitude_threshold_deg,
        )?;
        positive("behavior.turn_rate_deg", self.behavior.turn_rate_deg)?;
        positive("fps", self.fps)?;
        // One turn step must not be able to jump across the alignment window,
        // otherwise the FSM can spin forever.
        if self.behavior.turn_rate_deg / self.fps > 2.0 * self.behavior.attitude_threshold_deg {
            return Err(Error::invalid_config(
                "behavior.turn_rate_deg",
                "turn per frame exceeds twice the attitude threshold",
            ));
        }

        if self.estimator.k == 0 {
            return Err(Error::invalid_config("estimator.k", "must be at least 1"));
        }
        if self.estimator.smooth_window == 0 {
            return Err(Error::invalid_config(
                "estimator.smooth_window",
                "must be at least 1",
            ));
        }

        if self.features.textons_per_family == 0 {
            return Err(Error::invalid_config(
                "features.textons_per_family",
                "must be at least 1",
            ));
        }
        if self.features.patch_size == 0
            || self.features.patch_size > self.camera.width.min(self.camera.height)
        {
            return Err(Error::invalid_config(
                "features.patch_size",
                "must fit inside the camera image",
            ));
        }
        if self.features.samples_per_frame == 0 {
            return Err(Error::invalid_config(
                "features.samples_per_frame",
                "must be at least 1",
            ));
        }
        if self.features.bootstrap_frames == 0 {
            return Err(Error::invalid_config(
                "features.bootstrap_frames",
                "must be at least 1",
            ));
        }

        positive("time_scale", self.time_scale)?;
        positive("forward_speed", self.forward_speed)?;
        let (i_s, l_s, t_s) = self.scaled_phase_seconds();
        for (field, v) in [
            ("phases.initial_s", i_s),
            ("phases.learning_s", l_s),
            ("phases.test_s", t_s),
        ] {
            positive(field, v)?;
            if (v * self.fps).round() < 1.0 {
                return Err(Error::invalid_config(
                    field,
                    "scaled phase shorter than one frame",
                ));
            }
        }

        if self.override_threshold <= 0.0 || self.override_threshold > self.camera.disparity_max {
            return Err(Error::invalid_config(
                "override_threshold",
                "must lie in (0, disparity_max]",
            ));
        }

        if self.schemes.is_empty() {
            return Err(Error::invalid_config("schemes", "must list at least one"));
        }
        for s in &self.schemes {
            if let Scheme::Dagger { beta } = s {
                if !(0.0..=1.0).contains(beta) {
                    return Err(Error::invalid_config(
                        "schemes.dagger.beta",
                        "must lie in [0, 1]",
                    ));
                }
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid_config("seeds", "must list at least one"));
        }
        if self.heatmap_bins == 0 {
            return Err(Error::invalid_config("heatmap_bins", "must be at least 1"));
        }
        if self.bootstrap_iters < 1000 {
            return Err(Error::invalid_config(
                "bootstrap_iters",
                "must be at least 1000",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn empty_json_is_a_valid_config() {
        let cfg: ExperimentConfig = serde_json::from_str("{}").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.fps, 10.0);
        assert_eq!(cfg.seeds.len(), 30);
    }

    #[test]
    fn validation_names_the_offending_field() {
        let mut cfg = ExperimentConfig::default();
        cfg.behavior.disparity_threshold = 40.0;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("behavior.disparity_threshold"));

        let mut cfg = ExperimentConfig::default();
        cfg.estimator.k = 0;
        assert!(cfg.validate().unwrap_err().to_string().contains("estimator.k"));

        let mut cfg = ExperimentConfig::default();
        cfg.seeds.clear();
        assert!(cfg.validate().unwrap_err().to_string().contains("seeds"));
    }

    #[test]
    fn rejects_turn_steps_that_skip_the_alignment_window() {
        let mut cfg = ExperimentConfig::default();
        cfg.behavior.turn_rate_deg = 200.0;
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .contains("turn_rate_deg"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let r: std::result::Result<ExperimentConfig, _> =
            serde_json::from_str(r#"{"not_a_field": 1}"#);
        assert!(r.is_err());
    }

    #[test]
    fn scheme_json_shapes() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"schemes": [{"kind": "cold_turkey"}, {"kind": "dagger", "beta": 0.5}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.schemes[0], Scheme::ColdTurkey);
        assert_eq!(cfg.schemes[1], Scheme::Dagger { beta: 0.5 });
    }
}
