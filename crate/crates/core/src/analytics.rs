//! Collision and spurious-turn mathematics, classification metrics, position
//! heatmaps, and the bootstrap significance test used to compare schemes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidArgument(format!(
            "{name} must lie in [0, 1], got {v}"
        )));
    }
    Ok(())
}

/// Probability that `s` consecutive i.i.d. positive samples are all missed:
/// `(1 - tpr)^s`, evaluated in log space.
pub fn collision_prob_iid(tpr: f64, s: u32) -> Result<f64> {
    check_unit("tpr", tpr)?;
    if tpr == 1.0 {
        return Ok(0.0);
    }
    if tpr == 0.0 {
        return Ok(1.0);
    }
    Ok((s as f64 * (1.0 - tpr).ln()).exp())
}

/// General product form of the collision probability: true-negative
/// probabilities over the far segment of an approach, then false-negative
/// probabilities over the near segment. The split index is implicit in the
/// slice lengths.
pub fn collision_prob_product(tn_probs: &[f64], fn_probs: &[f64]) -> Result<f64> {
    let mut log_acc = 0.0;
    for &p in tn_probs.iter().chain(fn_probs) {
        check_unit("per-sample probability", p)?;
        if p == 0.0 {
            return Ok(0.0);
        }
        log_acc += p.ln();
    }
    Ok(log_acc.exp())
}

/// Probability that a negative classification is followed by another
/// negative, under the classification-persistence model.
pub fn markov_negative_persistence(p_ident: f64, tpr: f64) -> Result<f64> {
    check_unit("p_ident", p_ident)?;
    check_unit("tpr", tpr)?;
    Ok(p_ident + (1.0 - p_ident) * (1.0 - tpr))
}

/// Collision probability under the persistence model: the chain stays on the
/// all-negative path for the remaining `s - 1` transitions.
pub fn collision_prob_markov(p_ident: f64, tpr: f64, s: u32) -> Result<f64> {
    if s < 2 {
        return Err(Error::InvalidArgument(format!(
            "persistence model needs s >= 2, got {s}"
        )));
    }
    let omega = markov_negative_persistence(p_ident, tpr)?;
    if omega == 0.0 {
        return Ok(0.0);
    }
    Ok(((s - 1) as f64 * omega.ln()).exp())
}

/// Expected spurious turns per meter travelled: `fpr * fps / speed`.
pub fn spurious_turn_rate(fpr: f64, fps: f64, speed: f64) -> Result<f64> {
    check_unit("fpr", fpr)?;
    if speed <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "speed must be positive, got {speed}"
        )));
    }
    Ok(fpr * fps / speed)
}

/// Absorption probability after `steps` transitions of a user-supplied
/// row-stochastic chain, starting from `start` and absorbing in
/// `collision_state`.
pub fn absorbing_collision_prob(
    transition: &[Vec<f64>],
    start: &[f64],
    collision_state: usize,
    steps: usize,
) -> Result<f64> {
    let n = transition.len();
    if n == 0 || start.len() != n || collision_state >= n {
        return Err(Error::InvalidArgument(
            "chain, start vector and collision state must agree".into(),
        ));
    }
    for (i, row) in transition.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidArgument(format!("row {i} has wrong length")));
        }
        let sum: f64 = row.iter().sum();
        if row.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "row {i} is not a probability distribution (sum {sum})"
            )));
        }
    }
    let mut dist = start.to_vec();
    for _ in 0..steps {
        let mut next = vec![0.0; n];
        for (i, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (j, &q) in transition[i].iter().enumerate() {
                next[j] += p * q;
            }
        }
        dist = next;
    }
    Ok(dist[collision_state])
}

/// Empirical ROC curve with trapezoid AUC.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(threshold, fpr, tpr)` triples sorted by ascending FPR. The
    /// endpoints correspond to thresholds of plus and minus infinity.
    pub points: Vec<(f64, f64, f64)>,
    pub auc: f64,
}

/// Sweeps a prediction threshold over all distinct estimate values; ground
/// truth positives are `truth > t_gt`, predicted positives `estimate > thr`.
pub fn roc_curve(estimates: &[f64], truth: &[f64], t_gt: f64) -> Result<RocCurve> {
    if estimates.len() != truth.len() || estimates.is_empty() {
        return Err(Error::LengthMismatch(estimates.len(), truth.len()));
    }
    let labels: Vec<bool> = truth.iter().map(|&v| v > t_gt).collect();
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateLabels(pos > 0));
    }

    let mut thresholds: Vec<f64> = estimates.to_vec();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let mut points = Vec::with_capacity(thresholds.len() + 2);
    let rates = |thr: f64| -> (f64, f64) {
        let mut tp = 0usize;
        let mut fp = 0usize;
        for (&e, &l) in estimates.iter().zip(&labels) {
            if e > thr {
                if l {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        (fp as f64 / neg as f64, tp as f64 / pos as f64)
    };
    points.push((f64::INFINITY, 0.0, 0.0));
    for &thr in thresholds.iter().rev() {
        let (fpr, tpr) = rates(thr);
        points.push((thr, fpr, tpr));
    }
    let last = points.last().copied().unwrap();
    if last.1 != 1.0 || last.2 != 1.0 {
        points.push((f64::NEG_INFINITY, 1.0, 1.0));
    }

    let mut auc = 0.0;
    for w in points.windows(2) {
        let (_, x1, y1) = w[0];
        let (_, x2, y2) = w[1];
        auc += (x2 - x1) * (y1 + y2) / 2.0;
    }
    Ok(RocCurve { points, auc })
}

impl RocCurve {
    /// Point whose TPR is closest to the requested value.
    pub fn operating_point_nearest_tpr(&self, tpr: f64) -> (f64, f64, f64) {
        *self
            .points
            .iter()
            .min_by(|a, b| (a.2 - tpr).abs().total_cmp(&(b.2 - tpr).abs()))
            .expect("curve has endpoints")
    }
}

/// Mean squared error between paired slices.
pub fn mse(estimates: &[f64], truth: &[f64]) -> Result<f64> {
    if estimates.len() != truth.len() || estimates.is_empty() {
        return Err(Error::LengthMismatch(estimates.len(), truth.len()));
    }
    let acc: f64 = estimates
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(acc / estimates.len() as f64)
}

/// Two-sided bootstrap test for a difference in means under the pooled null.
/// Deterministic for a fixed rng seed.
pub fn bootstrap_mean_diff_test<R: Rng>(
    a: &[f64],
    b: &[f64],
    iters: usize,
    rng: &mut R,
) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    if iters < 1000 {
        return Err(Error::InvalidArgument(format!(
            "need at least 1000 bootstrap iterations, got {iters}"
        )));
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let observed = (mean(a) - mean(b)).abs();
    let pool: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut at_least = 0usize;
    for _ in 0..iters {
        let draw = |rng: &mut R, n: usize| -> f64 {
            let mut acc = 0.0;
            for _ in 0..n {
                acc += pool[rng.random_range(0..pool.len())];
            }
            acc / n as f64
        };
        let da = draw(rng, a.len());
        let db = draw(rng, b.len());
        if (da - db).abs() >= observed {
            at_least += 1;
        }
    }
    Ok((at_least + 1) as f64 / (iters + 1) as f64)
}

/// Mode filter for position heatmaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeatmapFilter {
    Forward,
    Turning,
    All,
}

/// One trajectory point: position and whether the drone was turning.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryPoint {
    pub x: f64,
    pub y: f64,
    pub turning: bool,
}

/// 2-D position histogram over the room extent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Heatmap {
    pub bins: usize,
    /// Row-major counts, row 0 at y = 0.
    pub counts: Vec<u64>,
}

impl Heatmap {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Bins trajectory positions matching the filter into a `bins x bins` grid
/// over `[0, width] x [0, depth]`.
pub fn heatmap(
    trajectory: &[TrajectoryPoint],
    filter: HeatmapFilter,
    bins: usize,
    width: f64,
    depth: f64,
) -> Result<Heatmap> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be at least 1".into()));
    }
    let mut counts = vec![0u64; bins * bins];
    for p in trajectory {
        let keep = match filter {
            HeatmapFilter::Forward => !p.turning,
            HeatmapFilter::Turning => p.turning,
            HeatmapFilter::All => true,
        };
        if !keep {
            continue;
        }
        let bx = ((p.x / width * bins as f64) as usize).min(bins - 1);
        let by = ((p.y / depth * bins as f64) as usize).min(bins - 1);
        counts[by * bins + bx] += 1;
    }
    Ok(Heatmap { bins, counts })
}
