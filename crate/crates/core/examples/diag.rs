// Scratch diagnostic: measure feature-space novelty of test states per scheme.
use monolab::config::ExperimentConfig;
use monolab::schemes::{PreparedExperiment, Scheme, Phase, ControlSource};
use monolab::estimator::{TrainingSample, TrainingSet, knn_predict};
use monolab::vbow;
use monolab::world::{self, DroneState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.time_scale = 0.5;
    let prepared = PreparedExperiment::new(cfg.clone()).unwrap();
    let cam = cfg.camera_model();

    for scheme in [Scheme::ColdTurkey, Scheme::Dagger { beta: 0.25 }, Scheme::TrainingWheels] {
        let mut novelty_all = Vec::new();
        let mut novelty_override = Vec::new();
        let mut err_all = Vec::new();
        let mut min_wall_learn: Vec<f64> = Vec::new();
        for seed in 1..=8u64 {
            let log = prepared.run(scheme, seed).unwrap();
            // Rebuild the training set by replaying: features are not logged,
            // so recompute them from logged poses with a fixed rng (approximate
            // novelty, consistent across schemes).
            let mut train = TrainingSet::new();
            let mut rng = ChaCha8Rng::seed_from_u64(999);
            for f in log.frames.iter().filter(|f| f.phase != Phase::Test) {
                let pose = DroneState::new(f.x, f.y, f.heading, 0.5);
                let img = world::render_view(&prepared.world, &pose, &cam).unwrap();
                let feat = vbow::texton_histogram(&img, &prepared.dictionary, 200, &mut rng).unwrap();
                train.push(TrainingSample { features: feat, disparity: f.lambda_stereo, timestamp: f.time });
                let d = f.x.min(f.y).min(10.0 - f.x).min(10.0 - f.y);
                min_wall_learn.push(d);
            }
            for f in log.frames.iter().filter(|f| f.phase == Phase::Test) {
                if f.source != ControlSource::Mono { continue; }
                let pose = DroneState::new(f.x, f.y, f.heading, 0.5);
                let img = world::render_view(&prepared.world, &pose, &cam).unwrap();
                let feat = vbow::texton_histogram(&img, &prepared.dictionary, 200, &mut rng).unwrap();
                // NN distance in feature space
                let mut best = f64::INFINITY;
                for s in train.samples() {
                    let d = feat.squared_distance(&s.features);
                    if d < best { best = d; }
                }
                let pred = knn_predict(&train, 5, &feat).unwrap();
                novelty_all.push(best.sqrt());
                err_all.push((pred - f.lambda_stereo).abs());
                if f.overridden { novelty_override.push(best.sqrt()); }
            }
        }
        let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len().max(1) as f64;
        let mut sorted = novelty_all.clone(); sorted.sort_by(f64::total_cmp);
        let p90 = sorted.get(sorted.len()*9/10).copied().unwrap_or(0.0);
        let deep = min_wall_learn.iter().filter(|&&d| d < 1.0).count() as f64 / min_wall_learn.len() as f64;
        println!("{:16} novelty mean {:.4} p90 {:.4} | override novelty {:.4} (n={:3}) | |err| mean {:.3} | learn frames <1m of wall: {:.3}",
            format!("{:?}", scheme), mean(&novelty_all), p90, mean(&novelty_override), novelty_override.len(), mean(&err_all), deep);
    }
}
