//! Per-channel contamination detectors.
//!
//! One ν one-class SVM per channel is trained on clean feature vectors
//! only. ν is tuned per channel by threefold cross-validation in which each
//! validation fold is padded with the same number of artificial outliers
//! drawn uniformly from the channel's (inflated) feature bounding box.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::features::{FeatureTable, FeatureVector};
use crate::learners::{gamma_scale, score_ocsvm, train_ocsvm, OcsvmScore, OneClassModel};
use crate::seed::{self, tag};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub nu_grid: Vec<f64>,
    pub folds: usize,
    /// Fraction of the per-feature range added on each side of the
    /// training bounding box before sampling artificial outliers.
    pub box_inflation: f64,
    /// Artificial outliers per validation target.
    pub outlier_ratio: f64,
    /// Z-score each feature with training statistics before fitting.
    pub standardize: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            nu_grid: (1..=10).map(|i| i as f64 / 10.0).collect(),
            folds: 3,
            box_inflation: 0.2,
            outlier_ratio: 1.0,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuChoice {
    pub nu: f64,
    /// Mean validation balanced accuracy of the chosen ν.
    pub balanced_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBounds {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl FeatureBounds {
    pub fn of(x: &[Vec<f64>]) -> Self {
        let d = x[0].len();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for r in x {
            for f in 0..d {
                min[f] = min[f].min(r[f]);
                max[f] = max[f].max(r[f]);
            }
        }
        FeatureBounds { min, max }
    }

    pub fn inflated(&self, fraction: f64) -> FeatureBounds {
        let (min, max) = self
            .min
            .iter()
            .zip(&self.max)
            .map(|(&lo, &hi)| {
                let span = hi - lo;
                // a constant feature still gets a non-empty box
                let pad = if span > 0.0 {
                    fraction * span
                } else {
                    fraction * lo.abs().max(1.0)
                };
                (lo - pad, hi + pad)
            })
            .unzip();
        FeatureBounds { min, max }
    }

    pub fn sample_uniform(&self, count: usize, rng: &mut seed::Rng) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| {
                self.min
                    .iter()
                    .zip(&self.max)
                    .map(|(&lo, &hi)| if hi > lo { rng.random_range(lo..hi) } else { lo })
                    .collect()
            })
            .collect()
    }
}

/// Per-feature affine map `(x − mean) / scale`; constant features keep
/// scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let n = x.len() as f64;
        let d = x[0].len();
        let mean: Vec<f64> = (0..d).map(|f| x.iter().map(|r| r[f]).sum::<f64>() / n).collect();
        let scale = (0..d)
            .map(|f| {
                let var = x.iter().map(|r| (r[f] - mean[f]).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn identity(d: usize) -> Self {
        Standardizer {
            mean: vec![0.0; d],
            scale: vec![1.0; d],
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn apply_all(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.apply(r)).collect()
    }
}

fn fit_scaler(x: &[Vec<f64>], cfg: &DetectorConfig) -> Standardizer {
    if cfg.standardize {
        Standardizer::fit(x)
    } else {
        Standardizer::identity(x[0].len())
    }
}

/// Binary balanced accuracy of a detector on targets vs outliers.
pub fn detector_balanced_accuracy(
    model: &OneClassModel,
    targets: &[Vec<f64>],
    outliers: &[Vec<f64>],
) -> Result<f64> {
    let mut tp = 0usize;
    for t in targets {
        if score_ocsvm(model, t)?.is_target {
            tp += 1;
        }
    }
    let mut tn = 0usize;
    for o in outliers {
        if !score_ocsvm(model, o)?.is_target {
            tn += 1;
        }
    }
    Ok(0.5 * (tp as f64 / targets.len() as f64 + tn as f64 / outliers.len() as f64))
}

/// Selects ν for one channel's training matrix.
pub fn tune_nu_channel(x: &[Vec<f64>], seed: u64, cfg: &DetectorConfig) -> Result<NuChoice> {
    if x.len() < cfg.folds.max(3) {
        return Err(Error::InvalidArgument(format!(
            "ν tuning needs at least {} samples per channel, got {}",
            cfg.folds.max(3),
            x.len()
        )));
    }
    if cfg.nu_grid.is_empty() {
        return Err(Error::InvalidArgument("empty ν grid".into()));
    }
    let mut rng = seed::rng(seed);
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.shuffle(&mut rng);
    let mut sums = vec![0.0; cfg.nu_grid.len()];
    for k in 0..cfg.folds {
        let (train, val): (Vec<_>, Vec<_>) = order
            .iter()
            .enumerate()
            .partition(|(pos, _)| pos % cfg.folds != k);
        let train: Vec<Vec<f64>> = train.into_iter().map(|(_, &i)| x[i].clone()).collect();
        let val: Vec<Vec<f64>> = val.into_iter().map(|(_, &i)| x[i].clone()).collect();
        let n_out = ((val.len() as f64) * cfg.outlier_ratio).round().max(1.0) as usize;
        let outliers = FeatureBounds::of(&train)
            .inflated(cfg.box_inflation)
            .sample_uniform(n_out, &mut rng);
        let scaler = fit_scaler(&train, cfg);
        let (train, val, outliers) = (
            scaler.apply_all(&train),
            scaler.apply_all(&val),
            scaler.apply_all(&outliers),
        );
        let gamma = gamma_scale(&train);
        for (slot, &nu) in sums.iter_mut().zip(&cfg.nu_grid) {
            let model = train_ocsvm(&train, nu, gamma)?;
            *slot += detector_balanced_accuracy(&model, &val, &outliers)?;
        }
    }
    let mut best = 0;
    for (i, s) in sums.iter().enumerate() {
        if *s > sums[best] {
            best = i;
        }
    }
    Ok(NuChoice {
        nu: cfg.nu_grid[best],
        balanced_accuracy: sums[best] / cfg.folds as f64,
    })
}

fn channel_seed(seed: u64, channel: usize) -> u64 {
    seed::derive(seed, &[tag::DETECTOR, channel as u64])
}

/// ν for every channel of `train`.
pub fn tune_nu(train: &FeatureTable, seed: u64, cfg: &DetectorConfig) -> Result<Vec<NuChoice>> {
    (0..train.channel_count)
        .into_par_iter()
        .map(|l| tune_nu_channel(&train.channel_matrix(l), channel_seed(seed, l), cfg))
        .collect()
}

/// True entries mark channels judged clean.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChannelMask {
    pub clean: Vec<bool>,
}

impl ChannelMask {
    pub fn all_clean(channels: usize) -> Self {
        ChannelMask {
            clean: vec![true; channels],
        }
    }

    pub fn with_contaminated(channels: usize, contaminated: &[usize]) -> Self {
        let mut m = Self::all_clean(channels);
        for &c in contaminated {
            m.clean[c] = false;
        }
        m
    }

    pub fn len(&self) -> usize {
        self.clean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clean.is_empty()
    }

    pub fn is_all_clean(&self) -> bool {
        self.clean.iter().all(|&c| c)
    }

    pub fn contaminated(&self) -> Vec<usize> {
        (0..self.clean.len()).filter(|&l| !self.clean[l]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorEnsemble {
    pub detectors: Vec<OneClassModel>,
    pub nu_per_channel: Vec<f64>,
    pub tuning_balanced_accuracy: Vec<f64>,
    pub feature_bounds: Vec<FeatureBounds>,
    pub scalers: Vec<Standardizer>,
}

impl DetectorEnsemble {
    pub fn channel_count(&self) -> usize {
        self.detectors.len()
    }
}

/// Tunes ν and fits one detector per channel on the full clean training
/// matrix.
pub fn train_detectors(
    train: &FeatureTable,
    seed: u64,
    cfg: &DetectorConfig,
) -> Result<DetectorEnsemble> {
    if train.contaminated {
        return Err(Error::ContaminatedTraining);
    }
    let tuned = tune_nu(train, seed, cfg)?;
    let fitted = (0..train.channel_count)
        .into_par_iter()
        .map(|l| {
            let x = train.channel_matrix(l);
            let scaler = fit_scaler(&x, cfg);
            let z = scaler.apply_all(&x);
            let model = train_ocsvm(&z, tuned[l].nu, gamma_scale(&z))?;
            Ok((model, (FeatureBounds::of(&x), scaler)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (detectors, rest): (Vec<_>, Vec<_>) = fitted.into_iter().unzip();
    let (feature_bounds, scalers) = rest.into_iter().unzip();
    Ok(DetectorEnsemble {
        detectors,
        nu_per_channel: tuned.iter().map(|t| t.nu).collect(),
        tuning_balanced_accuracy: tuned.iter().map(|t| t.balanced_accuracy).collect(),
        feature_bounds,
        scalers,
    })
}

fn check_layout(ens: &DetectorEnsemble, features: &[FeatureVector]) -> Result<()> {
    if features.len() != ens.channel_count() {
        return Err(Error::ChannelMismatch(format!(
            "{} feature vectors for {} detectors",
            features.len(),
            ens.channel_count()
        )));
    }
    for (l, f) in features.iter().enumerate() {
        if f.channel_id != l {
            return Err(Error::ChannelMismatch(format!(
                "feature vector {l} belongs to channel {}",
                f.channel_id
            )));
        }
    }
    Ok(())
}

/// Detector scores for every channel; channel `l` only sees `x_l`.
pub fn score_channels(ens: &DetectorEnsemble, features: &[FeatureVector]) -> Result<Vec<OcsvmScore>> {
    check_layout(ens, features)?;
    ens.detectors
        .iter()
        .zip(&ens.scalers)
        .zip(features)
        .map(|((d, s), f)| score_ocsvm(d, &s.apply(&f.values)))
        .collect()
}

pub fn mask_from_scores(scores: &[OcsvmScore]) -> ChannelMask {
    ChannelMask {
        clean: scores.iter().map(|s| s.is_target).collect(),
    }
}

pub fn detect(ens: &DetectorEnsemble, features: &[FeatureVector]) -> Result<ChannelMask> {
    Ok(mask_from_scores(&score_channels(ens, features)?))
}
