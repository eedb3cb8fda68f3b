//! The K-combination multiclassifier with dynamic member selection, plus
//! the reference methods it is compared against.
//!
//! Every member is a random forest trained on the concatenated features of
//! one channel subset. A joint ensemble holds the members for several
//! subset sizes at once.

mod ecoc;
mod reference;

pub use ecoc::{decode, random_codebook, train_ecoc, Codebook, EcocConfig, EcocModel};
pub use reference::{train_do7, train_full, Do7Models, FullModel};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::ChannelMask;
use crate::features::{concat, FeatureTable, FeatureVector};
use crate::learners::{argmax_lowest, predict_forest, train_forest, ForestConfig, ForestModel};
use crate::seed::{self, tag};
use crate::{Error, Result};

/// Ascending, distinct channel ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChannelSubset(Vec<usize>);

impl ChannelSubset {
    pub fn new(mut ids: Vec<usize>) -> Result<Self> {
        ids.sort_unstable();
        let before = ids.len();
        ids.dedup();
        if ids.is_empty() || ids.len() != before {
            return Err(Error::InvalidArgument(
                "channel subset must be non-empty with distinct ids".into(),
            ));
        }
        Ok(ChannelSubset(ids))
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    /// All channels of the mask that this subset touches are clean.
    pub fn is_clean_under(&self, mask: &ChannelMask) -> bool {
        self.0.iter().all(|&l| mask.clean[l])
    }
}

impl fmt::Display for ChannelSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "{}", parts.join("-"))
    }
}

/// All K-combinations of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<ChannelSubset> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(ChannelSubset(idx.clone()));
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Set of subset sizes an ensemble is built from, e.g. `7` or `2,3,5`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KSpec(BTreeSet<usize>);

impl KSpec {
    pub fn new(sizes: impl IntoIterator<Item = usize>) -> Result<Self> {
        let set: BTreeSet<usize> = sizes.into_iter().collect();
        if set.is_empty() || set.contains(&0) {
            return Err(Error::InvalidArgument(
                "k spec needs one or more sizes ≥ 1".into(),
            ));
        }
        Ok(KSpec(set))
    }

    pub fn sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn largest(&self) -> usize {
        *self.0.iter().next_back().unwrap()
    }

    /// Total member count for `channels` channels.
    pub fn member_count(&self, channels: usize) -> usize {
        self.sizes().map(|k| binomial(channels, k)).sum()
    }
}

impl FromStr for KSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let sizes = s
            .split([',', '+'])
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("malformed k spec {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        KSpec::new(sizes)
    }
}

/// Joined with `+` so the value stays a single CSV field.
impl fmt::Display for KSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "{}", parts.join("+"))
    }
}

/// Seed of the forest trained on `subset`. Shared by ensemble members and
/// the reference models, so identical subsets yield identical forests.
pub fn member_seed(master: u64, subset: &ChannelSubset) -> u64 {
    let mut path = vec![tag::MEMBER];
    path.extend(subset.ids().iter().map(|&i| i as u64));
    seed::derive(master, &path)
}

pub(crate) fn train_subset_forest(
    train: &FeatureTable,
    subset: &ChannelSubset,
    master: u64,
) -> Result<ForestModel> {
    let x = train.design_matrix(subset.ids())?;
    train_forest(
        &x,
        &train.labels,
        train.class_count,
        ForestConfig::with_seed(member_seed(master, subset)),
    )
}

pub(crate) fn subset_predict(
    model: &ForestModel,
    subset: &ChannelSubset,
    features: &[FeatureVector],
) -> Result<usize> {
    predict_forest(model, &concat(features, subset.ids())?.values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub subset: ChannelSubset,
    pub model: ForestModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveEnsemble {
    pub members: Vec<Member>,
    pub k_spec: KSpec,
    pub class_count: usize,
    pub channel_count: usize,
}

impl MoveEnsemble {
    /// Members whose subset size belongs to `k_spec`, in original order.
    pub fn restrict(&self, k_spec: &KSpec) -> MoveEnsemble {
        MoveEnsemble {
            members: self
                .members
                .iter()
                .filter(|m| k_spec.0.contains(&m.subset.len()))
                .cloned()
                .collect(),
            k_spec: k_spec.clone(),
            class_count: self.class_count,
            channel_count: self.channel_count,
        }
    }
}

/// Trains one forest for every K-combination of every K in `k_spec`.
pub fn build_ensemble(train: &FeatureTable, k_spec: &KSpec, seed: u64) -> Result<MoveEnsemble> {
    if train.contaminated {
        return Err(Error::InvalidArgument(
            "ensemble members must be trained on clean data".into(),
        ));
    }
    let channels = train.channel_count;
    if k_spec.largest() > channels {
        return Err(Error::InvalidArgument(format!(
            "k spec {k_spec} exceeds {channels} channels"
        )));
    }
    let subsets: Vec<ChannelSubset> = k_spec
        .sizes()
        .flat_map(|k| combinations(channels, k))
        .collect();
    let members = subsets
        .into_par_iter()
        .map(|subset| {
            let model = train_subset_forest(train, &subset, seed)?;
            Ok(Member { subset, model })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MoveEnsemble {
        members,
        k_spec: k_spec.clone(),
        class_count: train.class_count,
        channel_count: channels,
    })
}

/// Members whose subsets avoid every contaminated channel; all members when
/// none qualifies.
pub fn select(ens: &MoveEnsemble, mask: &ChannelMask) -> Vec<usize> {
    let chosen: Vec<usize> = ens
        .members
        .iter()
        .enumerate()
        .filter(|(_, m)| m.subset.is_clean_under(mask))
        .map(|(i, _)| i)
        .collect();
    if chosen.is_empty() {
        (0..ens.members.len()).collect()
    } else {
        chosen
    }
}

/// Majority vote; ties go to the lowest class.
pub fn majority_vote(labels: impl IntoIterator<Item = usize>, class_count: usize) -> usize {
    let mut votes = vec![0u32; class_count];
    for l in labels {
        votes[l] += 1;
    }
    argmax_lowest(&votes)
}

/// Every member's prediction for one trial.
pub fn member_predictions(ens: &MoveEnsemble, features: &[FeatureVector]) -> Result<Vec<usize>> {
    if features.len() != ens.channel_count {
        return Err(Error::ChannelMismatch(format!(
            "{} feature vectors for {} channels",
            features.len(),
            ens.channel_count
        )));
    }
    ens.members
        .iter()
        .map(|m| subset_predict(&m.model, &m.subset, features))
        .collect()
}

/// Vote of the members selected by `mask`, given precomputed member
/// predictions.
pub fn vote_selected(ens: &MoveEnsemble, predictions: &[usize], mask: &ChannelMask) -> usize {
    majority_vote(
        select(ens, mask).into_iter().map(|i| predictions[i]),
        ens.class_count,
    )
}

/// Dynamic selection followed by majority voting.
pub fn predict(ens: &MoveEnsemble, features: &[FeatureVector], mask: &ChannelMask) -> Result<usize> {
    if mask.len() != ens.channel_count {
        return Err(Error::ChannelMismatch(format!(
            "mask of length {} for {} channels",
            mask.len(),
            ens.channel_count
        )));
    }
    let preds = member_predictions(ens, features)?;
    Ok(vote_selected(ens, &preds, mask))
}

/// Full-committee vote, ignoring any detector.
pub fn predict_fu(ens: &MoveEnsemble, features: &[FeatureVector]) -> Result<usize> {
    predict(ens, features, &ChannelMask::all_clean(ens.channel_count))
}

/// True when at least one member predicts `true_label`.
pub fn predict_oracle(ens: &MoveEnsemble, features: &[FeatureVector], true_label: usize) -> Result<bool> {
    if true_label >= ens.class_count {
        return Err(Error::InvalidArgument(format!(
            "label {true_label} outside {} classes",
            ens.class_count
        )));
    }
    Ok(member_predictions(ens, features)?.contains(&true_label))
}
