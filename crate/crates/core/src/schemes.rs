//! Experiment orchestration: the phase timeline, the switch between the
//! stereo oracle and the learned monocular estimator, the three learning
//! schemes, safety overrides, and per-run logging.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytics::{self, TrajectoryPoint};
use crate::behavior::{self, BehaviorConfig, Command, FsmMode, FsmState};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::estimator::{MonoEstimator, TrainingSample};
use crate::image::Image;
use crate::vbow::{self, TextonDictionary};
use crate::world::{self, CameraModel, DroneState, World};

/// Behavioral learning scheme. `PureStereo` is the diagnostic baseline that
/// never hands control to the monocular estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    ColdTurkey,
    Dagger { beta: f64 },
    TrainingWheels,
    PureStereo,
}

impl Scheme {
    pub const DEFAULT_DAGGER_BETA: f64 = 0.25;

    /// Stable label used in file names and summaries.
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::ColdTurkey => "cold_turkey",
            Scheme::Dagger { .. } => "dagger",
            Scheme::TrainingWheels => "training_wheels",
            Scheme::PureStereo => "pure_stereo",
        }
    }

    fn stream_tag(&self) -> u64 {
        match self {
            Scheme::ColdTurkey => 1,
            Scheme::Dagger { beta } => 2u64.wrapping_add(beta.to_bits() << 3),
            Scheme::TrainingWheels => 3,
            Scheme::PureStereo => 4,
        }
    }
}

/// Experiment phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    InitialStereo,
    Learning,
    Test,
}

/// Which estimate currently drives the behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlSource {
    Stereo,
    Mono,
}

/// Chooses the control source for one step. The initial period is always
/// stereo-driven; the test phase is monocular for every learning scheme.
/// During learning, cold turkey stays on stereo, training wheels flies on
/// mono, and the probabilistic mixture draws stereo with probability beta on
/// every step.
pub fn select_control_source<R: Rng>(scheme: Scheme, phase: Phase, rng: &mut R) -> ControlSource {
    match phase {
        Phase::InitialStereo => ControlSource::Stereo,
        Phase::Test => match scheme {
            Scheme::PureStereo => ControlSource::Stereo,
            _ => ControlSource::Mono,
        },
        Phase::Learning => match scheme {
            Scheme::ColdTurkey | Scheme::PureStereo => ControlSource::Stereo,
            Scheme::TrainingWheels => ControlSource::Mono,
            Scheme::Dagger { beta } => {
                if rng.random::<f64>() < beta {
                    ControlSource::Stereo
                } else {
                    ControlSource::Mono
                }
            }
        },
    }
}

/// Per-frame record of the closed loop.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameRecord {
    pub time: f64,
    pub phase: Phase,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub lambda_stereo: f64,
    pub lambda_mono: Option<f64>,
    pub source: ControlSource,
    /// Post-step FSM mode; only Forward or Turning persist.
    pub mode: FsmMode,
    pub overridden: bool,
    pub picked: bool,
    pub contact: bool,
}

/// Event counters; always recomputable from the frame log.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub overrides_test: u64,
    pub overrides_learning: u64,
    pub turns_test: u64,
    pub forced_turns_test: u64,
    pub turns_learning: u64,
    pub contacts: u64,
}

/// Recomputes the counters from per-frame records.
pub fn recompute_counters(frames: &[FrameRecord]) -> Counters {
    let mut c = Counters::default();
    for f in frames {
        let test = f.phase == Phase::Test;
        if f.overridden {
            if test {
                c.overrides_test += 1;
            } else {
                c.overrides_learning += 1;
            }
        }
        if f.picked {
            if test {
                c.turns_test += 1;
                if f.overridden {
                    c.forced_turns_test += 1;
                }
            } else {
                c.turns_learning += 1;
            }
        }
        if f.contact {
            c.contacts += 1;
        }
    }
    c
}

/// Test-phase estimator quality against the stereo oracle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TestMetrics {
    pub mse: Option<f64>,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub auc: Option<f64>,
    /// Number of test frames with a monocular estimate.
    pub frames: usize,
}

/// Full record of one experiment run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentLog {
    pub scheme: Scheme,
    pub seed: u64,
    pub fps: f64,
    /// Scaled phase durations in seconds (initial, learning, test).
    pub phase_seconds: (f64, f64, f64),
    pub counters: Counters,
    pub metrics: TestMetrics,
    pub training_samples: usize,
    pub frames: Vec<FrameRecord>,
}

impl ExperimentLog {
    /// Trajectory points for heatmap binning, restricted to one phase.
    pub fn trajectory(&self, phase: Phase) -> Vec<TrajectoryPoint> {
        self.frames
            .iter()
            .filter(|f| f.phase == phase)
            .map(|f| TrajectoryPoint {
                x: f.x,
                y: f.y,
                turning: f.mode == FsmMode::Turning,
            })
            .collect()
    }

    /// Writes the frame log as CSV.
    pub fn write_frames_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from(
            "frame,time,phase,x,y,heading,lambda_stereo,lambda_mono,source,mode,overridden,picked,contact\n",
        );
        for (i, f) in self.frames.iter().enumerate() {
            let phase = match f.phase {
                Phase::InitialStereo => "initial_stereo",
                Phase::Learning => "learning",
                Phase::Test => "test",
            };
            let source = match f.source {
                ControlSource::Stereo => "stereo",
                ControlSource::Mono => "mono",
            };
            let mode = match f.mode {
                FsmMode::Forward => "forward",
                FsmMode::PickDirection => "pick_direction",
                FsmMode::Turning => "turning",
            };
            let mono = f.lambda_mono.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                i,
                f.time,
                phase,
                f.x,
                f.y,
                f.heading,
                f.lambda_stereo,
                mono,
                source,
                mode,
                f.overridden as u8,
                f.picked as u8,
                f.contact as u8
            ));
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// Reads a frame log written by [`ExperimentLog::write_frames_csv`].
    pub fn read_frames_csv(path: &Path) -> Result<Vec<FrameRecord>> {
        let text = fs::read_to_string(path)?;
        let bad = |line: usize, message: String| Error::MalformedDataset {
            path: path.display().to_string(),
            message: format!("line {line}: {message}"),
        };
        let mut frames = Vec::new();
        for (ln, line) in text.lines().enumerate().skip(1) {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 13 {
                return Err(bad(ln + 1, "expected 13 columns".into()));
            }
            let num =
                |s: &str| -> Result<f64> { s.parse().map_err(|e| bad(ln + 1, format!("{e}"))) };
            frames.push(FrameRecord {
                time: num(f[1])?,
                phase: match f[2] {
                    "initial_stereo" => Phase::InitialStereo,
                    "learning" => Phase::Learning,
                    "test" => Phase::Test,
                    other => return Err(bad(ln + 1, format!("unknown phase {other}"))),
                },
                x: num(f[3])?,
                y: num(f[4])?,
                heading: num(f[5])?,
                lambda_stereo: num(f[6])?,
                lambda_mono: if f[7].is_empty() {
                    None
                } else {
                    Some(num(f[7])?)
                },
                source: match f[8] {
                    "stereo" => ControlSource::Stereo,
                    "mono" => ControlSource::Mono,
                    other => return Err(bad(ln + 1, format!("unknown source {other}"))),
                },
                mode: match f[9] {
                    "forward" => FsmMode::Forward,
                    "pick_direction" => FsmMode::PickDirection,
                    "turning" => FsmMode::Turning,
                    other => return Err(bad(ln + 1, format!("unknown mode {other}"))),
                },
                overridden: f[10] == "1",
                picked: f[11] == "1",
                contact: f[12] == "1",
            });
        }
        Ok(frames)
    }
}

/// Computes test-phase metrics from frame records using the behavior
/// threshold for ground-truth and predicted positives.
pub fn metrics_from_frames(frames: &[FrameRecord], threshold: f64) -> TestMetrics {
    let pairs: Vec<(f64, f64)> = frames
        .iter()
        .filter(|f| f.phase == Phase::Test)
        .filter_map(|f| f.lambda_mono.map(|m| (m, f.lambda_stereo)))
        .collect();
    if pairs.is_empty() {
        return TestMetrics {
            mse: None,
            tpr: None,
            fpr: None,
            auc: None,
            frames: 0,
        };
    }
    let est: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let truth: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mse = analytics::mse(&est, &truth).ok();

    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut tn = 0u64;
    let mut fn_ = 0u64;
    for &(m, s) in &pairs {
        match (m > threshold, s > threshold) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let tpr = (tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64);
    let fpr = (fp + tn > 0).then(|| fp as f64 / (fp + tn) as f64);
    let auc = analytics::roc_curve(&est, &truth, threshold)
        .ok()
        .map(|r| r.auc);
    TestMetrics {
        mse,
        tpr,
        fpr,
        auc,
        frames: pairs.len(),
    }
}

fn run_rng(seed: u64, scheme: Scheme) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&scheme.stream_tag().to_le_bytes());
    bytes[16..24].copy_from_slice(&0x6d6f6e6f6c6162u64.to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

/// Flies a stereo-controlled warmup and returns the rendered frames plus the
/// number of wall contacts.
pub fn stereo_warmup_frames(
    cfg: &ExperimentConfig,
    world: &World,
    n_frames: usize,
    seed: u64,
) -> Result<(Vec<Image>, u64)> {
    let cam = cfg.camera_model();
    let behavior = cfg.behavior_config();
    let dt = 1.0 / cfg.fps;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pose = DroneState::new(world.width() / 2.0, world.depth() / 2.0, 0.0, cfg.forward_speed);
    let mut fsm = FsmState::forward();
    let mut frames = Vec::with_capacity(n_frames);
    let mut contacts = 0u64;
    for _ in 0..n_frames {
        frames.push(world::render_view(world, &pose, &cam)?);
        let lambda = world::stereo_disparity(world, &pose, &cam, &mut rng)?;
        let out = behavior::fsm_step(&fsm, lambda, pose.heading, &behavior, &mut rng);
        let (next, contact) =
            world::step_dynamics(world, &pose, out.command, behavior.turn_rate, dt)?;
        if contact {
            contacts += 1;
        }
        fsm = out.state;
        pose = next;
    }
    Ok((frames, contacts))
}

/// Runs a short stereo-only warmup flight and trains the texton dictionary
/// on the collected frames. The dictionary is immutable afterwards.
pub fn dictionary_bootstrap(
    cfg: &ExperimentConfig,
    world: &World,
    seed: u64,
) -> Result<TextonDictionary> {
    let (frames, _) = stereo_warmup_frames(cfg, world, cfg.features.bootstrap_frames, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    vbow::train_dictionary(
        &frames,
        cfg.features.textons_per_family,
        cfg.features.patch_size,
        cfg.features.kohonen_presentations,
        &mut rng,
    )
}

/// A validated configuration with its world and trained dictionary, ready to
/// run any number of (scheme, seed) experiments in parallel.
pub struct PreparedExperiment {
    pub cfg: ExperimentConfig,
    pub world: World,
    pub dictionary: TextonDictionary,
}

impl PreparedExperiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let world = cfg.build_world()?;
        let dictionary = dictionary_bootstrap(&cfg, &world, cfg.dictionary_seed)?;
        Ok(Self {
            cfg,
            world,
            dictionary,
        })
    }

    pub fn run(&self, scheme: Scheme, seed: u64) -> Result<ExperimentLog> {
        run_experiment(&self.cfg, &self.world, &self.dictionary, scheme, seed)
    }
}

/// Runs one closed-loop experiment.
///
/// Per frame: render, read the stereo oracle, extract features, predict with
/// the estimator (smoothed), learn during the stereo-supervised phases,
/// select the control source, step the FSM on the selected disparity, apply
/// the override rule, and advance the dynamics. The estimator freezes at the
/// start of the test phase.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    world: &World,
    dict: &TextonDictionary,
    scheme: Scheme,
    seed: u64,
) -> Result<ExperimentLog> {
    let cam: CameraModel = cfg.camera_model();
    let behavior_cfg: BehaviorConfig = cfg.behavior_config();
    let (initial_s, learning_s, test_s) = cfg.scaled_phase_seconds();
    let n_initial = (initial_s * cfg.fps).round() as usize;
    let n_learning = (learning_s * cfg.fps).round() as usize;
    let n_test = (test_s * cfg.fps).round() as usize;
    let total = n_initial + n_learning + n_test;
    let dt = 1.0 / cfg.fps;

    let mut rng = run_rng(seed, scheme);
    let mut est = MonoEstimator::new(cfg.estimator.k, cfg.estimator.smooth_window)?;
    let mut pose = DroneState::new(
        world.width() / 2.0,
        world.depth() / 2.0,
        0.0,
        cfg.forward_speed,
    );
    let mut fsm = FsmState::forward();
    let mut frames: Vec<FrameRecord> = Vec::with_capacity(total);
    let mut counters = Counters::default();

    for i in 0..total {
        let time = i as f64 / cfg.fps;
        let phase = if i < n_initial {
            Phase::InitialStereo
        } else if i < n_initial + n_learning {
            Phase::Learning
        } else {
            Phase::Test
        };
        if phase == Phase::Test && !est.is_frozen() {
            est.freeze();
        }

        let image = world::render_view(world, &pose, &cam)?;
        let lambda_stereo = world::stereo_disparity(world, &pose, &cam, &mut rng)?;
        let features = vbow::texton_histogram(&image, dict, cfg.features.samples_per_frame, &mut rng)?;

        let lambda_mono = if cfg.oracle_mono {
            Some(lambda_stereo)
        } else if est.sample_count() > 0 {
            let raw = est.knn_predict(&features)?;
            Some(est.smooth(raw))
        } else {
            None
        };

        if phase != Phase::Test {
            est.add_sample(TrainingSample {
                features,
                disparity: lambda_stereo,
                timestamp: time,
            })?;
        }

        let requested = select_control_source(scheme, phase, &mut rng);
        let (source, lambda_used) = match (requested, lambda_mono) {
            (ControlSource::Mono, Some(m)) => (ControlSource::Mono, m),
            // Without a monocular estimate yet, stereo keeps control.
            (ControlSource::Mono, None) => (ControlSource::Stereo, lambda_stereo),
            (ControlSource::Stereo, _) => (ControlSource::Stereo, lambda_stereo),
        };

        let mut out = behavior::fsm_step(&fsm, lambda_used, pose.heading, &behavior_cfg, &mut rng);
        let mut overridden = false;
        // Safety override: the stereo oracle vetoes forward motion into the
        // danger zone while the monocular estimate is in control, forcing one
        // fresh avoidance turn.
        if source == ControlSource::Mono
            && lambda_stereo > cfg.override_threshold
            && out.command == Command::Forward
        {
            let forced = behavior::pick_new_direction(pose.heading, &mut rng);
            out = behavior::StepOutcome {
                command: Command::Turn(forced.turn_direction),
                state: forced,
                picked: true,
            };
            overridden = true;
        }

        let (next_pose, contact) =
            world::step_dynamics(world, &pose, out.command, behavior_cfg.turn_rate, dt)?;

        if overridden {
            if phase == Phase::Test {
                counters.overrides_test += 1;
            } else {
                counters.overrides_learning += 1;
            }
        }
        if out.picked {
            if phase == Phase::Test {
                counters.turns_test += 1;
                if overridden {
                    counters.forced_turns_test += 1;
                }
            } else {
                counters.turns_learning += 1;
            }
        }
        if contact {
            counters.contacts += 1;
        }

        frames.push(FrameRecord {
            time,
            phase,
            x: pose.x,
            y: pose.y,
            heading: pose.heading,
            lambda_stereo,
            lambda_mono,
            source,
            mode: out.state.mode,
            overridden,
            picked: out.picked,
            contact,
        });

        fsm = out.state;
        pose = next_pose;
    }

    debug_assert_eq!(counters, recompute_counters(&frames));
    let metrics = metrics_from_frames(&frames, behavior_cfg.disparity_threshold);
    Ok(ExperimentLog {
        scheme,
        seed,
        fps: cfg.fps,
        phase_seconds: (initial_s, learning_s, test_s),
        counters,
        metrics,
        training_samples: est.sample_count(),
        frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn tiny_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.phases.initial_s = 3.0;
        cfg.phases.learning_s = 4.0;
        cfg.phases.test_s = 3.0;
        cfg.features.bootstrap_frames = 40;
        cfg.features.kohonen_presentations = 2_000;
        cfg.features.samples_per_frame = 100;
        cfg
    }

    #[test]
    fn control_source_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            select_control_source(Scheme::ColdTurkey, Phase::Learning, &mut rng),
            ControlSource::Stereo
        );
        assert_eq!(
            select_control_source(Scheme::TrainingWheels, Phase::Learning, &mut rng),
            ControlSource::Mono
        );
        assert_eq!(
            select_control_source(Scheme::TrainingWheels, Phase::Test, &mut rng),
            ControlSource::Mono
        );
        assert_eq!(
            select_control_source(Scheme::ColdTurkey, Phase::Test, &mut rng),
            ControlSource::Mono
        );
        assert_eq!(
            select_control_source(Scheme::PureStereo, Phase::Test, &mut rng),
            ControlSource::Stereo
        );
        for scheme in [
            Scheme::ColdTurkey,
            Scheme::Dagger { beta: 0.25 },
            Scheme::TrainingWheels,
            Scheme::PureStereo,
        ] {
            assert_eq!(
                select_control_source(scheme, Phase::InitialStereo, &mut rng),
                ControlSource::Stereo
            );
        }
    }

    #[test]
    fn dagger_mixture_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let scheme = Scheme::Dagger { beta: 0.25 };
        let draws = 100_000;
        let stereo = (0..draws)
            .filter(|_| {
                select_control_source(scheme, Phase::Learning, &mut rng) == ControlSource::Stereo
            })
            .count();
        let frac = stereo as f64 / draws as f64;
        assert!((frac - 0.25).abs() < 0.01, "stereo fraction {frac}");
    }

    #[test]
    fn smoke_run_is_structurally_valid() {
        let prepared = PreparedExperiment::new(tiny_config()).unwrap();
        let log = prepared.run(Scheme::ColdTurkey, 7).unwrap();
        assert_eq!(log.frames.len(), 100);
        assert_eq!(log.counters, recompute_counters(&log.frames));
        // Learning stops exactly at the test boundary.
        assert_eq!(log.training_samples, 70);
        for f in &log.frames {
            assert!((0.0..=10.0).contains(&f.x));
            assert!((0.0..=10.0).contains(&f.y));
            if f.phase == Phase::Test {
                assert_eq!(f.source, ControlSource::Mono);
            }
        }
    }

    #[test]
    fn overrides_only_fire_with_mono_in_danger() {
        let mut cfg = tiny_config();
        cfg.phases.test_s = 8.0;
        let prepared = PreparedExperiment::new(cfg).unwrap();
        for seed in 0..3 {
            let log = prepared.run(Scheme::ColdTurkey, seed).unwrap();
            for f in &log.frames {
                if f.overridden {
                    assert_eq!(f.source, ControlSource::Mono);
                    assert!(f.lambda_stereo > prepared.cfg.override_threshold);
                    assert!(f.picked);
                }
            }
        }
    }

    #[test]
    fn oracle_identity_mono_never_overrides() {
        let mut cfg = tiny_config();
        cfg.oracle_mono = true;
        cfg.camera.noise_sigma = 0.0;
        cfg.phases.test_s = 10.0;
        let prepared = PreparedExperiment::new(cfg).unwrap();
        let log = prepared.run(Scheme::TrainingWheels, 3).unwrap();
        assert_eq!(log.counters.overrides_test, 0);
        assert_eq!(log.counters.overrides_learning, 0);
        assert_eq!(log.counters.contacts, 0);
    }

    #[test]
    fn run_is_deterministic() {
        let prepared = PreparedExperiment::new(tiny_config()).unwrap();
        let a = prepared.run(Scheme::Dagger { beta: 0.25 }, 11).unwrap();
        let b = prepared.run(Scheme::Dagger { beta: 0.25 }, 11).unwrap();
        assert_eq!(a.counters, b.counters);
        assert_eq!(a.frames.len(), b.frames.len());
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            assert_eq!(fa.x.to_bits(), fb.x.to_bits());
            assert_eq!(fa.lambda_stereo.to_bits(), fb.lambda_stereo.to_bits());
            assert_eq!(fa.lambda_mono.map(f64::to_bits), fb.lambda_mono.map(f64::to_bits));
        }
    }

    #[test]
    fn estimator_is_frozen_in_test_phase() {
        let prepared = PreparedExperiment::new(tiny_config()).unwrap();
        let log = prepared.run(Scheme::TrainingWheels, 2).unwrap();
        let learning_frames = log
            .frames
            .iter()
            .filter(|f| f.phase != Phase::Test)
            .count();
        assert_eq!(log.training_samples, learning_frames);
    }

    #[test]
    fn frame_csv_round_trip() {
        let prepared = PreparedExperiment::new(tiny_config()).unwrap();
        let log = prepared.run(Scheme::TrainingWheels, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frames.csv");
        log.write_frames_csv(&path).unwrap();
        let frames = ExperimentLog::read_frames_csv(&path).unwrap();
        assert_eq!(frames.len(), log.frames.len());
        for (a, b) in log.frames.iter().zip(&frames) {
            assert_eq!(a.lambda_stereo.to_bits(), b.lambda_stereo.to_bits());
            assert_eq!(a.phase, b.phase);
            assert_eq!(a.mode, b.mode);
            assert_eq!(a.overridden, b.overridden);
        }
        assert_eq!(recompute_counters(&frames), log.counters);
    }

    #[test]
    fn bootstrap_dictionary_is_deterministic_and_spread() {
        let cfg = tiny_config();
        let world = cfg.build_world().unwrap();
        let a = dictionary_bootstrap(&cfg, &world, 5).unwrap();
        let b = dictionary_bootstrap(&cfg, &world, 5).unwrap();
        assert_eq!(a.intensity_textons(), b.intensity_textons());

        // Centroids must not collapse onto each other.
        let textons = a.intensity_textons();
        for i in 0..textons.len() {
            for j in i + 1..textons.len() {
                let d: f64 = textons[i]
                    .values
                    .iter()
                    .zip(&textons[j].values)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                assert!(d > 0.0, "centroids {i} and {j} coincide");
            }
        }
    }

    #[test]
    fn warmup_stays_inside_room() {
        let cfg = tiny_config();
        let world = cfg.build_world().unwrap();
        let (frames, contacts) = stereo_warmup_frames(&cfg, &world, 100, 9).unwrap();
        assert_eq!(frames.len(), 100);
        assert_eq!(contacts, 0);
    }

    #[test]
    fn metrics_recompute_from_csv_matches_log() {
        let prepared = PreparedExperiment::new(tiny_config()).unwrap();
        let log = prepared.run(Scheme::Dagger { beta: 0.25 }, 13).unwrap();
        let m = metrics_from_frames(&log.frames, prepared.cfg.behavior.disparity_threshold);
        assert_eq!(m.frames, log.metrics.frames);
        assert_eq!(m.mse, log.metrics.mse);
    }
}
