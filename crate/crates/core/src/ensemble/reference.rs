//! Reference methods: the single all-channel forest and the
//! one-of-(2L+1) default-model scheme.

use serde::{Deserialize, Serialize};

use super::{subset_predict, train_subset_forest, ChannelSubset};
use crate::detection::{score_channels, DetectorEnsemble};
use crate::features::{FeatureTable, FeatureVector};
use crate::learners::{OcsvmScore, ForestModel};
use crate::{Error, Result};

/// One forest over the concatenation of every channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullModel {
    pub subset: ChannelSubset,
    pub model: ForestModel,
}

fn all_channels(n: usize) -> Result<ChannelSubset> {
    ChannelSubset::new((0..n).collect())
}

pub fn train_full(train: &FeatureTable, seed: u64) -> Result<FullModel> {
    let subset = all_channels(train.channel_count)?;
    let model = train_subset_forest(train, &subset, seed)?;
    Ok(FullModel { subset, model })
}

impl FullModel {
    pub fn predict(&self, features: &[FeatureVector]) -> Result<usize> {
        if features.len() != self.subset.len() {
            return Err(Error::DimensionMismatch {
                expected: self.subset.len(),
                actual: features.len(),
            });
        }
        subset_predict(&self.model, &self.subset, features)
    }
}

/// A full-channel model plus one model per left-out channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Do7Models {
    pub full: FullModel,
    /// `leave_one_out[i]` never saw channel `i`.
    pub leave_one_out: Vec<(ChannelSubset, ForestModel)>,
}

pub fn train_do7(train: &FeatureTable, seed: u64, full: Option<FullModel>) -> Result<Do7Models> {
    let n = train.channel_count;
    if n < 2 {
        return Err(Error::InvalidArgument(
            "leave-one-out models need at least 2 channels".into(),
        ));
    }
    let full = match full {
        Some(f) => f,
        None => train_full(train, seed)?,
    };
    let leave_one_out = (0..n)
        .map(|skip| {
            let subset = ChannelSubset::new((0..n).filter(|&l| l != skip).collect())?;
            let model = train_subset_forest(train, &subset, seed)?;
            Ok((subset, model))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Do7Models {
        full,
        leave_one_out,
    })
}

impl Do7Models {
    /// Channel whose model answers: `None` for the full model, else the
    /// flagged channel with the lowest detector score (lowest id on ties).
    pub fn choose(scores: &[OcsvmScore]) -> Option<usize> {
        let mut pick: Option<usize> = None;
        for (l, s) in scores.iter().enumerate() {
            if s.is_target {
                continue;
            }
            if pick.is_none_or(|p| s.score < scores[p].score) {
                pick = Some(l);
            }
        }
        pick
    }

    pub fn predict_with_scores(&self, features: &[FeatureVector], scores: &[OcsvmScore]) -> Result<usize> {
        if scores.len() != self.leave_one_out.len() {
            return Err(Error::ChannelMismatch(format!(
                "{} detector scores for {} channels",
                scores.len(),
                self.leave_one_out.len()
            )));
        }
        match Self::choose(scores) {
            None => self.full.predict(features),
            Some(l) => {
                let (subset, model) = &self.leave_one_out[l];
                subset_predict(model, subset, features)
            }
        }
    }

    pub fn predict(&self, detector: &DetectorEnsemble, features: &[FeatureVector]) -> Result<usize> {
        let scores = score_channels(detector, features)?;
        self.predict_with_scores(features, &scores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(score: f64) -> OcsvmScore {
        OcsvmScore {
            score,
            is_target: score >= 0.0,
        }
    }

    #[test]
    fn choice_rule() {
        assert_eq!(Do7Models::choose(&[s(0.1), s(0.2), s(0.0)]), None);
        assert_eq!(
            Do7Models::choose(&[s(0.1), s(0.2), s(0.3), s(0.1), s(0.1), s(0.1), s(-0.4), s(0.1)]),
            Some(6)
        );
        // channels 2 and 5 flagged, 5 is further out
        assert_eq!(
            Do7Models::choose(&[s(0.1), s(0.1), s(-0.1), s(0.1), s(0.1), s(-0.3), s(0.1), s(0.1)]),
            Some(5)
        );
        assert_eq!(Do7Models::choose(&[s(0.1), s(-0.2), s(-0.2)]), Some(1));
    }
}
