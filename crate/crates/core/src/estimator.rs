//! Online-trained monocular disparity regressors: kNN primary, linear baseline,
//! plus the sliding-window smoother applied to raw predictions.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vbow::FeatureVector;

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_SMOOTH_WINDOW: usize = 4;

/// One supervised pair: appearance features and the stereo disparity label.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub features: FeatureVector,
    pub disparity: f64,
    pub timestamp: f64,
}

/// Append-only store of training samples.
#[derive(Debug, Clone, Default)]
pub struct TrainingSet {
    samples: Vec<TrainingSample>,
}

impl TrainingSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[TrainingSample] {
        &self.samples
    }

    pub fn push(&mut self, sample: TrainingSample) {
        self.samples.push(sample);
    }

    /// Writes one row per sample: feature components, disparity, timestamp.
    /// The default float formatting round-trips exactly.
    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        if let Some(first) = self.samples.first() {
            let dims = first.features.len();
            for i in 0..dims {
                out.push_str(&format!("f{i},"));
            }
        }
        out.push_str("disparity,timestamp\n");
        for s in &self.samples {
            for v in s.features.to_flat() {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{},{}\n", s.disparity, s.timestamp));
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn import_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let bad = |message: String| Error::MalformedDataset {
            path: path.display().to_string(),
            message,
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let cols = header.split(',').count();
        if cols < 3 {
            return Err(bad("need feature, disparity and timestamp columns".into()));
        }
        let mut set = TrainingSet::new();
        for (ln, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(format!("line {}: {}", ln + 2, e)))?;
            if fields.len() != cols {
                return Err(bad(format!("line {}: wrong column count", ln + 2)));
            }
            let nf = cols - 2;
            set.push(TrainingSample {
                features: FeatureVector {
                    histogram: fields[..nf - 1].to_vec(),
                    entropy: fields[nf - 1],
                },
                disparity: fields[nf],
                timestamp: fields[nf + 1],
            });
        }
        Ok(set)
    }
}

/// kNN disparity regressor with temporal smoothing over raw predictions.
#[derive(Debug, Clone)]
pub struct MonoEstimator {
    k: usize,
    smooth_window: usize,
    training_set: TrainingSet,
    recent: VecDeque<f64>,
    frozen: bool,
}

impl MonoEstimator {
    pub fn new(k: usize, smooth_window: usize) -> Result<Self> {
        if k == 0 || smooth_window == 0 {
            return Err(Error::InvalidArgument(
                "k and smooth_window must be at least 1".into(),
            ));
        }
        Ok(Self {
            k,
            smooth_window,
            training_set: TrainingSet::new(),
            recent: VecDeque::with_capacity(smooth_window),
            frozen: false,
        })
    }

    pub fn training_set(&self) -> &TrainingSet {
        &self.training_set
    }

    pub fn sample_count(&self) -> usize {
        self.training_set.len()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Stops learning; later `add_sample` calls fail.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn add_sample(&mut self, sample: TrainingSample) -> Result<()> {
        if self.frozen {
            return Err(Error::LearningFrozen);
        }
        self.training_set.push(sample);
        Ok(())
    }

    /// Mean disparity of the k nearest samples by Euclidean distance over the
    /// flat feature vector; averages all samples when fewer than k exist.
    /// Exhaustive scan; ties at the k-th distance keep the lower sample index.
    pub fn knn_predict(&self, query: &FeatureVector) -> Result<f64> {
        knn_predict(&self.training_set, self.k, query)
    }

    /// Pushes a raw prediction and returns the mean of the most recent
    /// `smooth_window` raw values.
    pub fn smooth(&mut self, raw: f64) -> f64 {
        if self.recent.len() == self.smooth_window {
            self.recent.pop_front();
        }
        self.recent.push_back(raw);
        self.recent.iter().sum::<f64>() / self.recent.len() as f64
    }
}

/// Standalone kNN regression over a training set.
pub fn knn_predict(set: &TrainingSet, k: usize, query: &FeatureVector) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::Untrained);
    }
    let mut scored: Vec<(f64, usize)> = set
        .samples()
        .iter()
        .enumerate()
        .map(|(i, s)| (query.squared_distance(&s.features), i))
        .collect();
    let k = k.min(scored.len());
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, cmp);
    }
    let sum: f64 = scored[..k]
        .iter()
        .map(|&(_, i)| set.samples()[i].disparity)
        .sum();
    Ok(sum / k as f64)
}

/// Affine disparity model fitted by least squares.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearModel {
    /// One weight per feature component.
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Set when the design matrix was rank-deficient and the minimum-norm
    /// solution was taken.
    pub degenerate: bool,
}

impl LinearModel {
    pub fn predict(&self, features: &FeatureVector) -> f64 {
        let flat = features.to_flat();
        self.intercept
            + self
                .weights
                .iter()
                .zip(&flat)
                .map(|(w, x)| w * x)
                .sum::<f64>()
    }
}

/// Least-squares fit (with intercept) of disparity on the feature vector.
/// Rank-deficient designs fall back to the SVD minimum-norm solution and
/// carry the `degenerate` flag.
pub fn linear_fit(set: &TrainingSet) -> Result<LinearModel> {
    if set.is_empty() {
        return Err(Error::Untrained);
    }
    let dims = set.samples()[0].features.len();
    let rows = set.len();
    if rows < dims + 1 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} samples for a {}-dimensional fit, got {}",
            dims + 1,
            dims,
            rows
        )));
    }
    let cols = dims + 1;
    let mut design = DMatrix::<f64>::zeros(rows, cols);
    let mut target = DVector::<f64>::zeros(rows);
    for (r, s) in set.samples().iter().enumerate() {
        for (c, v) in s.features.to_flat().into_iter().enumerate() {
            design[(r, c)] = v;
        }
        design[(r, cols - 1)] = 1.0;
        target[r] = s.disparity;
    }
    let svd = design.svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = max_sv * rows.max(cols) as f64 * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let solution = svd
        .solve(&target, tol)
        .map_err(|e| Error::InvalidArgument(format!("least-squares solve failed: {e}")))?;
    Ok(LinearModel {
        weights: solution.as_slice()[..dims].to_vec(),
        intercept: solution[dims],
        degenerate: rank < cols,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn feat(values: &[f64]) -> FeatureVector {
        let (hist, entropy) = values.split_at(values.len() - 1);
        FeatureVector {
            histogram: hist.to_vec(),
            entropy: entropy[0],
        }
    }

    fn sample(values: &[f64], disparity: f64) -> TrainingSample {
        TrainingSample {
            features: feat(values),
            disparity,
            timestamp: 0.0,
        }
    }

    fn random_feat<R: Rng>(dims: usize, rng: &mut R) -> FeatureVector {
        let values: Vec<f64> = (0..dims).map(|_| rng.random::<f64>()).collect();
        feat(&values)
    }

    #[test]
    fn add_sample_counts_and_preserves_order() {
        let mut est = MonoEstimator::new(5, 4).unwrap();
        est.add_sample(sample(&[0.1, 0.2], 3.0)).unwrap();
        assert_eq!(est.sample_count(), 1);
        for i in 0..3999 {
            est.add_sample(sample(&[0.1, 0.2], i as f64)).unwrap();
        }
        assert_eq!(est.sample_count(), 4000);
        assert_eq!(est.training_set().samples()[1].disparity, 0.0);
        assert_eq!(est.training_set().samples()[3999].disparity, 3998.0);
    }

    #[test]
    fn add_after_freeze_fails() {
        let mut est = MonoEstimator::new(5, 4).unwrap();
        est.add_sample(sample(&[0.5, 0.5], 1.0)).unwrap();
        est.freeze();
        let err = est.add_sample(sample(&[0.5, 0.5], 2.0)).unwrap_err();
        assert!(matches!(err, Error::LearningFrozen));
        assert_eq!(est.sample_count(), 1);
    }

    #[test]
    fn knn_on_empty_set_is_untrained() {
        let est = MonoEstimator::new(5, 4).unwrap();
        assert!(matches!(
            est.knn_predict(&feat(&[0.1, 0.9])),
            Err(Error::Untrained)
        ));
    }

    #[test]
    fn knn_single_sample_truncates_k() {
        let mut est = MonoEstimator::new(5, 4).unwrap();
        est.add_sample(sample(&[0.9, 0.1], 7.25)).unwrap();
        assert_eq!(est.knn_predict(&feat(&[0.0, 0.0])).unwrap(), 7.25);
    }

    #[test]
    fn knn_exact_query_with_k1_returns_stored_label() {
        let mut est = MonoEstimator::new(1, 4).unwrap();
        est.add_sample(sample(&[0.2, 0.3], 4.5)).unwrap();
        est.add_sample(sample(&[0.8, 0.1], 9.0)).unwrap();
        assert_eq!(est.knn_predict(&feat(&[0.8, 0.1])).unwrap(), 9.0);
    }

    #[test]
    fn knn_matches_brute_force_sort_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let dims = 21;
        let mut set = TrainingSet::new();
        for _ in 0..200 {
            set.push(TrainingSample {
                features: random_feat(dims, &mut rng),
                disparity: rng.random::<f64>() * 32.0,
                timestamp: 0.0,
            });
        }
        for _ in 0..50 {
            let q = random_feat(dims, &mut rng);
            let got = knn_predict(&set, 5, &q).unwrap();

            // Oracle: full sort on (distance, index), then plain mean of 5.
            let mut dists: Vec<(f64, usize)> = set
                .samples()
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let d: f64 = q
                        .to_flat()
                        .iter()
                        .zip(s.features.to_flat().iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (d, i)
                })
                .collect();
            dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let want: f64 = dists[..5]
                .iter()
                .map(|&(_, i)| set.samples()[i].disparity)
                .sum::<f64>()
                / 5.0;
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn knn_prediction_stays_within_label_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let mut set = TrainingSet::new();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for _ in 0..100 {
            let d = rng.random::<f64>() * 20.0;
            lo = lo.min(d);
            hi = hi.max(d);
            set.push(TrainingSample {
                features: random_feat(9, &mut rng),
                disparity: d,
                timestamp: 0.0,
            });
        }
        for _ in 0..20 {
            let p = knn_predict(&set, 7, &random_feat(9, &mut rng)).unwrap();
            assert!(p >= lo && p <= hi);
        }
    }

    #[test]
    fn smooth_constant_input() {
        let mut est = MonoEstimator::new(5, 4).unwrap();
        for _ in 0..3 {
            est.smooth(1.0);
        }
        assert_eq!(est.smooth(1.0), 1.0);
    }

    #[test]
    fn smooth_partial_window() {
        let mut est = MonoEstimator::new(5, 4).unwrap();
        est.smooth(0.0);
        assert_eq!(est.smooth(4.0), 2.0);
    }

    #[test]
    fn smooth_sliding_mean() {
        let mut est = MonoEstimator::new(5, 4).unwrap();
        let outs: Vec<f64> = [1.0, 2.0, 3.0, 4.0, 5.0]
            .iter()
            .map(|&v| est.smooth(v))
            .collect();
        assert_eq!(outs[4], (2.0 + 3.0 + 4.0 + 5.0) / 4.0);
        assert_eq!(outs[4], 3.5);
    }

    #[test]
    fn smooth_is_shift_equivariant() {
        let inputs = [0.3, 2.0, 1.7, 9.4, 0.2, 5.5];
        let c = 3.25;
        let mut a = MonoEstimator::new(5, 4).unwrap();
        let mut b = MonoEstimator::new(5, 4).unwrap();
        for &v in &inputs {
            let ya = a.smooth(v);
            let yb = b.smooth(v + c);
            assert!((yb - (ya + c)).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_fit_recovers_noiseless_affine_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut set = TrainingSet::new();
        for _ in 0..100 {
            let f = random_feat(4, &mut rng);
            let y = 2.0 * f.histogram[0] + 1.0;
            set.push(TrainingSample {
                features: f,
                disparity: y,
                timestamp: 0.0,
            });
        }
        let model = linear_fit(&set).unwrap();
        assert!((model.weights[0] - 2.0).abs() < 1e-8);
        for w in &model.weights[1..] {
            assert!(w.abs() < 1e-8);
        }
        assert!((model.intercept - 1.0).abs() < 1e-8);
        assert!(!model.degenerate);
    }

    #[test]
    fn linear_fit_constant_labels_gives_intercept_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut set = TrainingSet::new();
        for _ in 0..50 {
            set.push(TrainingSample {
                features: random_feat(4, &mut rng),
                disparity: 6.5,
                timestamp: 0.0,
            });
        }
        let model = linear_fit(&set).unwrap();
        for w in &model.weights {
            assert!(w.abs() < 1e-8);
        }
        assert!((model.intercept - 6.5).abs() < 1e-8);
    }

    #[test]
    fn linear_fit_residual_matches_normal_equations_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dims = 6;
        let mut set = TrainingSet::new();
        for _ in 0..80 {
            set.push(TrainingSample {
                features: random_feat(dims, &mut rng),
                disparity: rng.random::<f64>() * 10.0,
                timestamp: 0.0,
            });
        }
        let model = linear_fit(&set).unwrap();

        // Oracle: form X'X w = X'y and solve by Gaussian elimination with
        // partial pivoting, written straight-line here.
        let cols = dims + 1;
        let mut xtx = vec![vec![0.0; cols]; cols];
        let mut xty = vec![0.0; cols];
        let rows: Vec<Vec<f64>> = set
            .samples()
            .iter()
            .map(|s| {
                let mut r = s.features.to_flat();
                r.push(1.0);
                r
            })
            .collect();
        for (s, row) in set.samples().iter().zip(&rows) {
            for i in 0..cols {
                for j in 0..cols {
                    xtx[i][j] += row[i] * row[j];
                }
                xty[i] += row[i] * s.disparity;
            }
        }
        let mut a = xtx;
        let mut b = xty;
        for col in 0..cols {
            let piv = (col..cols)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for r in col + 1..cols {
                let f = a[r][col] / a[col][col];
                for c in col..cols {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
        let mut w = vec![0.0; cols];
        for r in (0..cols).rev() {
            let mut acc = b[r];
            for c in r + 1..cols {
                acc -= a[r][c] * w[c];
            }
            w[r] = acc / a[r][r];
        }

        let residual = |weights: &[f64], intercept: f64| -> f64 {
            set.samples()
                .iter()
                .map(|s| {
                    let pred: f64 = intercept
                        + s.features
                            .to_flat()
                            .iter()
                            .zip(weights)
                            .map(|(x, wi)| x * wi)
                            .sum::<f64>();
                    (pred - s.disparity).powi(2)
                })
                .sum()
        };
        let got = residual(&model.weights, model.intercept);
        let want = residual(&w[..dims], w[dims]);
        assert!((got - want).abs() < 1e-8, "residuals {got} vs {want}");
    }

    #[test]
    fn linear_fit_rank_deficient_sets_degenerate_flag() {
        // Feature 1 duplicates feature 0: the design cannot have full rank.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut set = TrainingSet::new();
        for _ in 0..30 {
            let v = rng.random::<f64>();
            set.push(TrainingSample {
                features: feat(&[v, v, rng.random::<f64>()]),
                disparity: 3.0 * v,
                timestamp: 0.0,
            });
        }
        let model = linear_fit(&set).unwrap();
        assert!(model.degenerate);
        // Predictions still reproduce the labels.
        for s in set.samples() {
            assert!((model.predict(&s.features) - s.disparity).abs() < 1e-6);
        }
    }

    #[test]
    fn training_set_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.csv");
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut set = TrainingSet::new();
        for i in 0..20 {
            set.push(TrainingSample {
                features: random_feat(5, &mut rng),
                disparity: rng.random::<f64>() * 30.0,
                timestamp: i as f64 * 0.1,
            });
        }
        set.export_csv(&path).unwrap();
        let back = TrainingSet::import_csv(&path).unwrap();
        assert_eq!(back.len(), set.len());
        for (a, b) in set.samples().iter().zip(back.samples()) {
            assert_eq!(a.features, b.features);
            assert_eq!(a.disparity.to_bits(), b.disparity.to_bits());
            assert_eq!(a.timestamp.to_bits(), b.timestamp.to_bits());
        }
    }
}
