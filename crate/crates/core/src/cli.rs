//! Batch driver behind the `monolab` binary: runs experiment batches, offline
//! learning curves, the collision-math calculator, and dictionary tooling.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analytics::{self, Heatmap, HeatmapFilter};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::estimator::{self, MonoEstimator, TrainingSample, TrainingSet};
use crate::image::Image;
use crate::schemes::{
    self, metrics_from_frames, ExperimentLog, Phase, PreparedExperiment, Scheme,
};
use crate::summary::{summarize, RunSummary};
use crate::vbow::{self, TextonDictionary};
use crate::world::{self, OfflineDataset};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "MONOLAB_OUTPUT_DIR";

fn resolve_output_dir(cfg: &ExperimentConfig, cli_override: Option<&Path>) -> PathBuf {
    if let Some(dir) = cli_override {
        return dir.to_path_buf();
    }
    if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    PathBuf::from(&cfg.output_dir)
}

fn heatmap_to_pgm(map: &Heatmap, path: &Path) -> Result<()> {
    let max = map.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let pixels: Vec<f64> = map.counts.iter().map(|&c| c as f64 / max).collect();
    Image::new(map.bins, map.bins, pixels)?.write_pgm(path)
}

fn heatmap_to_csv(map: &Heatmap, path: &Path) -> Result<()> {
    let mut out = String::new();
    for row in map.counts.chunks(map.bins) {
        let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Runs every (scheme x seed) experiment in the config, writing per-run frame
/// logs, per-scheme test-phase heatmaps, and the batch summary JSON.
pub fn cmd_sim(config_path: &Path, out_override: Option<&Path>) -> Result<RunSummary> {
    let cfg = ExperimentConfig::from_json_file(config_path)?;
    cfg.validate()?;
    let out_dir = resolve_output_dir(&cfg, out_override);
    fs::create_dir_all(&out_dir)?;

    let prepared = PreparedExperiment::new(cfg.clone())?;
    let specs: Vec<(Scheme, u64)> = cfg
        .schemes
        .iter()
        .flat_map(|&s| cfg.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let logs: Vec<ExperimentLog> = specs
        .par_iter()
        .map(|&(scheme, seed)| prepared.run(scheme, seed))
        .collect::<Result<_>>()?;

    let runs_dir = out_dir.join("runs");
    fs::create_dir_all(&runs_dir)?;
    for log in &logs {
        let name = format!("{}_{:04}", log.scheme.label(), log.seed);
        log.write_frames_csv(&runs_dir.join(format!("{name}.csv")))?;
    }

    for &scheme in &cfg.schemes {
        let mut trajectory = Vec::new();
        for log in logs.iter().filter(|l| l.scheme == scheme) {
            trajectory.extend(log.trajectory(Phase::Test));
        }
        for (filter, tag) in [
            (HeatmapFilter::Turning, "turning"),
            (HeatmapFilter::Forward, "forward"),
        ] {
            let map = analytics::heatmap(
                &trajectory,
                filter,
                cfg.heatmap_bins,
                cfg.world.width,
                cfg.world.depth,
            )?;
            let base = format!("heatmap_{}_{}", scheme.label(), tag);
            heatmap_to_pgm(&map, &out_dir.join(format!("{base}.pgm")))?;
            heatmap_to_csv(&map, &out_dir.join(format!("{base}.csv")))?;
        }
    }

    let summary = summarize(&cfg, &logs);
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(out_dir.join("summary.json"), text)?;
    Ok(summary)
}

/// One learning-curve measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    pub train_size: usize,
    pub regressor: String,
    pub split: String,
    pub mse: f64,
    pub auc: f64,
}

/// Offline evaluation artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OfflineReport {
    pub curve: Vec<CurvePoint>,
    /// kNN held-out metrics at the largest checkpoint.
    pub knn_test_auc: f64,
    pub knn_test_mse: f64,
    pub linear_test_mse: f64,
    /// ROC operating point nearest the requested TPR: (threshold, fpr, tpr).
    pub operating_point: (f64, f64, f64),
    pub requested_tpr: f64,
    pub train_pool: usize,
    pub holdout: usize,
}

pub struct OfflineArgs {
    pub config_path: PathBuf,
    /// Existing dataset directory; mutually exclusive with `synthesize`.
    pub dataset_dir: Option<PathBuf>,
    /// Number of frames to synthesize when no dataset is given.
    pub synthesize: Option<usize>,
    pub out_override: Option<PathBuf>,
    pub checkpoints: Vec<usize>,
    pub dataset_seed: u64,
    pub target_tpr: f64,
}

impl Default for OfflineArgs {
    fn default() -> Self {
        Self {
            config_path: PathBuf::new(),
            dataset_dir: None,
            synthesize: Some(5000),
            out_override: None,
            checkpoints: vec![250, 500, 1000, 2000, 4000],
            dataset_seed: 77,
            target_tpr: 0.96,
        }
    }
}

/// Trains kNN and linear regressors on growing dataset prefixes and writes
/// the learning-curve CSV plus a summary JSON with the ROC operating point.
pub fn cmd_offline(args: &OfflineArgs) -> Result<OfflineReport> {
    let cfg = ExperimentConfig::from_json_file(&args.config_path)?;
    cfg.validate()?;
    let out_dir = resolve_output_dir(&cfg, args.out_override.as_deref());
    fs::create_dir_all(&out_dir)?;

    let dataset = match (&args.dataset_dir, args.synthesize) {
        (Some(dir), _) => OfflineDataset::load_dir(dir)?,
        (None, Some(n)) => {
            let world = cfg.build_world()?;
            let mut cam = cfg.camera_model();
            cam.noise_sigma = 0.0;
            let ds = world::generate_offline_dataset(
                &world,
                &cam,
                &cfg.behavior_config(),
                n,
                cfg.fps,
                args.dataset_seed,
            )?;
            ds.save_dir(&out_dir.join("dataset"))?;
            ds
        }
        (None, None) => {
            return Err(Error::InvalidArgument(
                "need either a dataset directory or a synthesis request".into(),
            ))
        }
    };

    let n = dataset.frames.len();
    let holdout = (n / 5).max(1);
    let pool = n - holdout;
    if pool == 0 {
        return Err(Error::InvalidArgument(
            "dataset too small to split".into(),
        ));
    }

    // Dictionary from the head of the training pool.
    let dict_frames: Vec<Image> = dataset.frames[..cfg.features.bootstrap_frames.min(pool)]
        .iter()
        .map(|f| f.image.clone())
        .collect();
    let mut dict_rng = ChaCha8Rng::seed_from_u64(cfg.dictionary_seed);
    let dict = vbow::train_dictionary(
        &dict_frames,
        cfg.features.textons_per_family,
        cfg.features.patch_size,
        cfg.features.kohonen_presentations,
        &mut dict_rng,
    )?;

    // Per-frame rng keyed by index keeps features order-independent.
    let features: Vec<vbow::FeatureVector> = dataset
        .frames
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let mut rng = ChaCha8Rng::seed_from_u64(args.dataset_seed ^ (i as u64) << 16);
            vbow::texton_histogram(&f.image, &dict, cfg.features.samples_per_frame, &mut rng)
        })
        .collect::<Result<_>>()?;
    let labels: Vec<f64> = dataset.frames.iter().map(|f| f.disparity).collect();

    let threshold = cfg.behavior.disparity_threshold;
    let eval = |estimates: &[f64], truth: &[f64]| -> (f64, f64) {
        let mse = analytics::mse(estimates, truth).unwrap_or(f64::NAN);
        let auc = analytics::roc_curve(estimates, truth, threshold)
            .map(|r| r.auc)
            .unwrap_or(f64::NAN);
        (mse, auc)
    };

    let mut checkpoints: Vec<usize> = args
        .checkpoints
        .iter()
        .copied()
        .filter(|&c| c >= 1)
        .map(|c| c.min(pool))
        .collect();
    checkpoints.dedup();
    if checkpoints.is_empty() {
        checkpoints.push(pool);
    }

    let mut curve = Vec::new();
    let mut final_knn_test: Option<(Vec<f64>, f64, f64)> = None;
    let mut final_linear_mse = f64::NAN;
    for &size in &checkpoints {
        let mut train = TrainingSet::new();
        for i in 0..size {
            train.push(TrainingSample {
                features: features[i].clone(),
                disparity: labels[i],
                timestamp: i as f64 / cfg.fps,
            });
        }

        let knn_at = |idx: &[usize]| -> Result<Vec<f64>> {
            idx.par_iter()
                .map(|&i| estimator::knn_predict(&train, cfg.estimator.k, &features[i]))
                .collect()
        };
        let train_idx: Vec<usize> = (0..size).collect();
        let test_idx: Vec<usize> = (pool..n).collect();
        let train_truth: Vec<f64> = train_idx.iter().map(|&i| labels[i]).collect();
        let test_truth: Vec<f64> = test_idx.iter().map(|&i| labels[i]).collect();

        let knn_train = knn_at(&train_idx)?;
        let knn_test = knn_at(&test_idx)?;
        let (m, a) = eval(&knn_train, &train_truth);
        curve.push(CurvePoint {
            train_size: size,
            regressor: "knn".into(),
            split: "train".into(),
            mse: m,
            auc: a,
        });
        let (knn_test_mse, knn_test_auc) = eval(&knn_test, &test_truth);
        curve.push(CurvePoint {
            train_size: size,
            regressor: "knn".into(),
            split: "test".into(),
            mse: knn_test_mse,
            auc: knn_test_auc,
        });

        let dims = features[0].len();
        if size >= dims + 1 {
            let model = estimator::linear_fit(&train)?;
            let lin_train: Vec<f64> = train_idx.iter().map(|&i| model.predict(&features[i])).collect();
            let lin_test: Vec<f64> = test_idx.iter().map(|&i| model.predict(&features[i])).collect();
            let (m, a) = eval(&lin_train, &train_truth);
            curve.push(CurvePoint {
                train_size: size,
                regressor: "linear".into(),
                split: "train".into(),
                mse: m,
                auc: a,
            });
            let (m, a) = eval(&lin_test, &test_truth);
            curve.push(CurvePoint {
                train_size: size,
                regressor: "linear".into(),
                split: "test".into(),
                mse: m,
                auc: a,
            });
            final_linear_mse = m;
        }
        final_knn_test = Some((knn_test, knn_test_mse, knn_test_auc));
    }

    let (knn_test_est, knn_test_mse, knn_test_auc) =
        final_knn_test.expect("at least one checkpoint");
    let test_truth: Vec<f64> = (pool..n).map(|i| labels[i]).collect();
    let roc = analytics::roc_curve(&knn_test_est, &test_truth, threshold)?;
    let operating_point = roc.operating_point_nearest_tpr(args.target_tpr);

    let mut csv = String::from("train_size,regressor,split,mse,auc\n");
    for p in &curve {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            p.train_size, p.regressor, p.split, p.mse, p.auc
        ));
    }
    fs::write(out_dir.join("learning_curve.csv"), csv)?;

    let mut roc_csv = String::from("threshold,fpr,tpr\n");
    for &(thr, fpr, tpr) in &roc.points {
        roc_csv.push_str(&format!("{thr},{fpr},{tpr}\n"));
    }
    fs::write(out_dir.join("roc_knn_test.csv"), roc_csv)?;

    let report = OfflineReport {
        curve,
        knn_test_auc,
        knn_test_mse,
        linear_test_mse: final_linear_mse,
        operating_point,
        requested_tpr: args.target_tpr,
        train_pool: pool,
        holdout,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(out_dir.join("offline_summary.json"), text)?;
    Ok(report)
}

#[derive(Debug, Clone, Default)]
pub struct AnalyzeArgs {
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub s: Option<u32>,
    pub fps: Option<f64>,
    pub speed: Option<f64>,
    pub p_ident: Option<f64>,
    /// Frame-log CSV to score against the stereo column.
    pub frames: Option<PathBuf>,
    /// Disparity threshold for frame-log classification.
    pub threshold: Option<f64>,
    /// Destination for the frame-log ROC curve.
    pub roc_csv: Option<PathBuf>,
}

/// Evaluates the collision/spurious-turn calculator and, when a frame log is
/// given, its classification metrics. Returns the combined metrics JSON.
pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<serde_json::Value> {
    let mut out = serde_json::Map::new();
    let fps = args.fps.unwrap_or(30.0);
    let speed = args.speed.unwrap_or(0.5);

    if let (Some(tpr), Some(s)) = (args.tpr, args.s) {
        out.insert(
            "collision_prob_iid".into(),
            json!(analytics::collision_prob_iid(tpr, s)?),
        );
        if let Some(p_ident) = args.p_ident {
            out.insert(
                "markov_negative_persistence".into(),
                json!(analytics::markov_negative_persistence(p_ident, tpr)?),
            );
            out.insert(
                "collision_prob_markov".into(),
                json!(analytics::collision_prob_markov(p_ident, tpr, s)?),
            );
        }
    }
    if let Some(fpr) = args.fpr {
        out.insert(
            "spurious_turns_per_meter".into(),
            json!(analytics::spurious_turn_rate(fpr, fps, speed)?),
        );
    }

    if let Some(frames_path) = &args.frames {
        let frames = ExperimentLog::read_frames_csv(frames_path)?;
        let threshold = args
            .threshold
            .unwrap_or(crate::behavior::BehaviorConfig::default().disparity_threshold);
        let metrics = metrics_from_frames(&frames, threshold);
        out.insert("frame_log".into(), serde_json::to_value(&metrics)?);

        if let Some(roc_path) = &args.roc_csv {
            let pairs: Vec<(f64, f64)> = frames
                .iter()
                .filter(|f| f.phase == Phase::Test)
                .filter_map(|f| f.lambda_mono.map(|m| (m, f.lambda_stereo)))
                .collect();
            let est: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let truth: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let roc = analytics::roc_curve(&est, &truth, threshold)?;
            let mut csv = String::from("threshold,fpr,tpr\n");
            for &(thr, fpr, tpr) in &roc.points {
                csv.push_str(&format!("{thr},{fpr},{tpr}\n"));
            }
            fs::write(roc_path, csv)?;
        }
    }

    if out.is_empty() {
        return Err(Error::InvalidArgument(
            "nothing to analyze: pass --tpr/--s, --fpr, or --frames".into(),
        ));
    }
    Ok(serde_json::Value::Object(out))
}

/// Trains a texton dictionary from the config's warmup flight and saves it.
pub fn cmd_dict_train(config_path: &Path, out_path: &Path) -> Result<()> {
    let cfg = ExperimentConfig::from_json_file(config_path)?;
    cfg.validate()?;
    let world = cfg.build_world()?;
    let dict = schemes::dictionary_bootstrap(&cfg, &world, cfg.dictionary_seed)?;
    dict.save(out_path)
}

/// Loads a dictionary file and reports its shape and centroid spread.
pub fn cmd_dict_inspect(path: &Path) -> Result<serde_json::Value> {
    let dict = TextonDictionary::load(path)?;
    let min_pairwise = |patches: &[vbow::Patch]| -> f64 {
        let mut min = f64::INFINITY;
        for i in 0..patches.len() {
            for j in i + 1..patches.len() {
                let d: f64 = patches[i]
                    .values
                    .iter()
                    .zip(&patches[j].values)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                min = min.min(d.sqrt());
            }
        }
        min
    };
    Ok(json!({
        "textons_per_family": dict.textons_per_family(),
        "patch_size": dict.patch_size(),
        "feature_len": dict.feature_len(),
        "min_pairwise_distance_intensity": min_pairwise(dict.intensity_textons()),
        "min_pairwise_distance_gradient": min_pairwise(dict.gradient_textons()),
    }))
}

/// Smooths predictions the same way the online loop does; used by offline
/// tooling that wants parity with flight-time behavior.
pub fn smooth_series(raw: &[f64], window: usize) -> Result<Vec<f64>> {
    let mut est = MonoEstimator::new(1, window)?;
    Ok(raw.iter().map(|&v| est.smooth(v)).collect())
}
