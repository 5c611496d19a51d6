//! Batch summary: per-seed rows, per-scheme aggregates, and pairwise
//! bootstrap significance tests between schemes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytics;
use crate::config::ExperimentConfig;
use crate::schemes::{ExperimentLog, Scheme};

/// One experiment run reduced to its headline numbers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRow {
    pub scheme: Scheme,
    pub seed: u64,
    pub overrides_test: u64,
    pub turns_test: u64,
    pub forced_turns_test: u64,
    pub overrides_learning: u64,
    pub turns_learning: u64,
    pub contacts: u64,
    pub mse: Option<f64>,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub auc: Option<f64>,
    pub training_samples: usize,
}

impl RunRow {
    pub fn from_log(log: &ExperimentLog) -> Self {
        Self {
            scheme: log.scheme,
            seed: log.seed,
            overrides_test: log.counters.overrides_test,
            turns_test: log.counters.turns_test,
            forced_turns_test: log.counters.forced_turns_test,
            overrides_learning: log.counters.overrides_learning,
            turns_learning: log.counters.turns_learning,
            contacts: log.counters.contacts,
            mse: log.metrics.mse,
            tpr: log.metrics.tpr,
            fpr: log.metrics.fpr,
            auc: log.metrics.auc,
            training_samples: log.training_samples,
        }
    }
}

/// Mean and sample standard deviation of one metric across seeds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

fn mean_std(values: &[f64]) -> MeanStd {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    MeanStd { mean, std }
}

fn mean_of_present(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let present: Vec<f64> = values.flatten().collect();
    if present.is_empty() {
        None
    } else {
        Some(present.iter().sum::<f64>() / present.len() as f64)
    }
}

/// Aggregate over all seeds of one scheme.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeAggregate {
    pub scheme: Scheme,
    pub runs: usize,
    pub overrides_test: MeanStd,
    pub turns_test: MeanStd,
    pub mse: Option<f64>,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub auc: Option<f64>,
}

/// Two-sided bootstrap comparison of one metric between two schemes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeComparison {
    pub metric: String,
    pub scheme_a: Scheme,
    pub scheme_b: Scheme,
    pub mean_a: f64,
    pub mean_b: f64,
    pub p_value: f64,
}

/// Everything `sim` writes about a batch, minus the per-run frame logs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub time_scale: f64,
    /// Scaled phase durations in seconds (initial, learning, test).
    pub phase_seconds: (f64, f64, f64),
    pub fps: f64,
    pub runs: Vec<RunRow>,
    pub aggregates: Vec<SchemeAggregate>,
    pub comparisons: Vec<SchemeComparison>,
}

/// Builds the summary from the batch logs, in config order.
pub fn summarize(cfg: &ExperimentConfig, logs: &[ExperimentLog]) -> RunSummary {
    let runs: Vec<RunRow> = logs.iter().map(RunRow::from_log).collect();

    let aggregates: Vec<SchemeAggregate> = cfg
        .schemes
        .iter()
        .map(|&scheme| {
            let rows: Vec<&RunRow> = runs.iter().filter(|r| r.scheme == scheme).collect();
            let overrides: Vec<f64> = rows.iter().map(|r| r.overrides_test as f64).collect();
            let turns: Vec<f64> = rows.iter().map(|r| r.turns_test as f64).collect();
            SchemeAggregate {
                scheme,
                runs: rows.len(),
                overrides_test: mean_std(&overrides),
                turns_test: mean_std(&turns),
                mse: mean_of_present(rows.iter().map(|r| r.mse)),
                tpr: mean_of_present(rows.iter().map(|r| r.tpr)),
                fpr: mean_of_present(rows.iter().map(|r| r.fpr)),
                auc: mean_of_present(rows.iter().map(|r| r.auc)),
            }
        })
        .collect();

    let mut comparisons = Vec::new();
    let metric_values = |scheme: Scheme, pick: &dyn Fn(&RunRow) -> f64| -> Vec<f64> {
        runs.iter()
            .filter(|r| r.scheme == scheme)
            .map(|r| pick(r))
            .collect()
    };
    let metrics: [(&str, &dyn Fn(&RunRow) -> f64); 2] = [
        ("overrides_test", &|r| r.overrides_test as f64),
        ("turns_test", &|r| r.turns_test as f64),
    ];
    let mut comparison_index = 0u64;
    for (name, pick) in metrics {
        for (i, &sa) in cfg.schemes.iter().enumerate() {
            for &sb in cfg.schemes.iter().skip(i + 1) {
                // Overrides are structurally zero for the stereo baseline;
                // comparing them against it is noise.
                if name == "overrides_test"
                    && (sa == Scheme::PureStereo || sb == Scheme::PureStereo)
                {
                    continue;
                }
                let a = metric_values(sa, pick);
                let b = metric_values(sb, pick);
                if a.is_empty() || b.is_empty() {
                    continue;
                }
                let mut rng =
                    ChaCha8Rng::seed_from_u64(cfg.bootstrap_seed.wrapping_add(comparison_index));
                comparison_index += 1;
                let p_value =
                    analytics::bootstrap_mean_diff_test(&a, &b, cfg.bootstrap_iters, &mut rng)
                        .expect("validated sample sizes");
                comparisons.push(SchemeComparison {
                    metric: name.to_string(),
                    scheme_a: sa,
                    scheme_b: sb,
                    mean_a: mean_std(&a).mean,
                    mean_b: mean_std(&b).mean,
                    p_value,
                });
            }
        }
    }

    RunSummary {
        time_scale: cfg.time_scale,
        phase_seconds: cfg.scaled_phase_seconds(),
        fps: cfg.fps,
        runs,
        aggregates,
        comparisons,
    }
}

impl RunSummary {
    pub fn aggregate(&self, scheme: Scheme) -> Option<&SchemeAggregate> {
        self.aggregates.iter().find(|a| a.scheme == scheme)
    }

    pub fn comparison(&self, metric: &str, a: Scheme, b: Scheme) -> Option<&SchemeComparison> {
        self.comparisons.iter().find(|c| {
            c.metric == metric
                && ((c.scheme_a == a && c.scheme_b == b) || (c.scheme_a == b && c.scheme_b == a))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{Counters, TestMetrics};

    fn fake_log(scheme: Scheme, seed: u64, overrides: u64, turns: u64) -> ExperimentLog {
        ExperimentLog {
            scheme,
            seed,
            fps: 10.0,
            phase_seconds: (60.0, 240.0, 300.0),
            counters: Counters {
                overrides_test: overrides,
                turns_test: turns,
                ..Default::default()
            },
            metrics: TestMetrics {
                mse: Some(1.0),
                tpr: Some(0.8),
                fpr: Some(0.2),
                auc: Some(0.9),
                frames: 100,
            },
            training_samples: 0,
            frames: vec![],
        }
    }

    #[test]
    fn aggregates_recompute_from_rows() {
        let mut cfg = ExperimentConfig::default();
        cfg.schemes = vec![Scheme::ColdTurkey, Scheme::TrainingWheels];
        cfg.seeds = vec![1, 2, 3];
        let logs = vec![
            fake_log(Scheme::ColdTurkey, 1, 20, 40),
            fake_log(Scheme::ColdTurkey, 2, 30, 44),
            fake_log(Scheme::ColdTurkey, 3, 25, 42),
            fake_log(Scheme::TrainingWheels, 1, 4, 41),
            fake_log(Scheme::TrainingWheels, 2, 6, 39),
            fake_log(Scheme::TrainingWheels, 3, 5, 40),
        ];
        let summary = summarize(&cfg, &logs);
        let ct = summary.aggregate(Scheme::ColdTurkey).unwrap();
        assert_eq!(ct.runs, 3);
        assert!((ct.overrides_test.mean - 25.0).abs() < 1e-12);
        // Sample std of {20, 30, 25} is 5.
        assert!((ct.overrides_test.std - 5.0).abs() < 1e-12);

        // Recompute the mean from the serialized rows.
        let mean: f64 = summary
            .runs
            .iter()
            .filter(|r| r.scheme == Scheme::ColdTurkey)
            .map(|r| r.overrides_test as f64)
            .sum::<f64>()
            / 3.0;
        assert_eq!(mean, ct.overrides_test.mean);
    }

    #[test]
    fn comparisons_cover_scheme_pairs_and_are_deterministic() {
        let mut cfg = ExperimentConfig::default();
        cfg.schemes = vec![Scheme::ColdTurkey, Scheme::TrainingWheels, Scheme::PureStereo];
        cfg.seeds = vec![1, 2, 3, 4];
        cfg.bootstrap_iters = 1000;
        let mut logs = Vec::new();
        for seed in 1..=4 {
            logs.push(fake_log(Scheme::ColdTurkey, seed, 20 + seed, 40));
            logs.push(fake_log(Scheme::TrainingWheels, seed, seed, 41));
            logs.push(fake_log(Scheme::PureStereo, seed, 0, 45));
        }
        let a = summarize(&cfg, &logs);
        let b = summarize(&cfg, &logs);
        // overrides: only the learning-scheme pair; turns: all three pairs.
        assert_eq!(a.comparisons.len(), 1 + 3);
        assert!(a
            .comparison("overrides_test", Scheme::ColdTurkey, Scheme::TrainingWheels)
            .is_some());
        assert!(a
            .comparison("turns_test", Scheme::TrainingWheels, Scheme::PureStereo)
            .is_some());
        for (ca, cb) in a.comparisons.iter().zip(&b.comparisons) {
            assert_eq!(ca.p_value, cb.p_value);
        }
    }
}
