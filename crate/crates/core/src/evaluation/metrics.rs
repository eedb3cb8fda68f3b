use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::seed::{self, tag};
use crate::signalset::SignalSet;
use crate::{Error, Result};

/// Mean per-class recall over the classes present in `y_true`.
pub fn balanced_accuracy(y_true: &[usize], y_pred: &[usize], class_count: usize) -> Result<f64> {
    if y_true.is_empty() {
        return Err(Error::InvalidArgument("balanced accuracy of no samples".into()));
    }
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    let mut support = vec![0usize; class_count];
    let mut hits = vec![0usize; class_count];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= class_count || p >= class_count {
            return Err(Error::InvalidArgument(format!(
                "label outside {class_count} classes"
            )));
        }
        support[t] += 1;
        if t == p {
            hits[t] += 1;
        }
    }
    let (sum, present) = support
        .iter()
        .zip(&hits)
        .filter(|(&s, _)| s > 0)
        .fold((0.0, 0usize), |(acc, n), (&s, &h)| {
            (acc + h as f64 / s as f64, n + 1)
        });
    Ok(sum / present as f64)
}

/// Splits indices into `folds` class-stratified test sets.
///
/// Each class is shuffled and dealt round-robin; the dealing position
/// carries over between classes so fold sizes differ by at most one.
pub fn stratified_partition(
    labels: &[usize],
    class_count: usize,
    folds: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {folds}")));
    }
    let mut by_class = vec![Vec::new(); class_count];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    for (c, members) in by_class.iter().enumerate() {
        if !members.is_empty() && members.len() < folds {
            return Err(Error::ClassTooSmall {
                class: c,
                count: members.len(),
                needed: folds,
            });
        }
    }
    let mut rng = seed::rng(seed);
    let mut out = vec![Vec::new(); folds];
    let mut next = 0;
    for mut members in by_class {
        members.shuffle(&mut rng);
        for i in members {
            out[next].push(i);
            next = (next + 1) % folds;
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

/// Test-set indices per repeat and fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub test_sets: Vec<Vec<Vec<usize>>>,
    pub total: usize,
}

impl FoldAssignment {
    pub fn test(&self, repeat: usize, fold: usize) -> &[usize] {
        &self.test_sets[repeat][fold]
    }

    pub fn train(&self, repeat: usize, fold: usize) -> Vec<usize> {
        let test = self.test(repeat, fold);
        (0..self.total).filter(|i| test.binary_search(i).is_err()).collect()
    }
}

pub fn stratified_folds(set: &SignalSet, folds: usize, repeats: usize, seed: u64) -> Result<FoldAssignment> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("need at least one repeat".into()));
    }
    let labels = set.labels();
    let test_sets = (0..repeats)
        .map(|r| {
            stratified_partition(
                &labels,
                set.class_count(),
                folds,
                seed::derive(seed, &[tag::FOLDS, r as u64]),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FoldAssignment {
        test_sets,
        total: labels.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signalset::{synth_signalset, SynthConfig};

    #[test]
    fn bac_examples() {
        assert_eq!(balanced_accuracy(&[0, 1, 2], &[0, 1, 2], 3).unwrap(), 1.0);
        // recalls 1.0, 0.5, 0.75
        let y = [0, 0, 1, 1, 2, 2, 2, 2];
        let p = [0, 0, 1, 0, 2, 2, 2, 1];
        assert!((balanced_accuracy(&y, &p, 3).unwrap() - 0.75).abs() < 1e-15);
        let y: Vec<usize> = (0..80).map(|i| i % 8).collect();
        assert_eq!(balanced_accuracy(&y, &[3; 80], 8).unwrap(), 0.125);
        assert!(balanced_accuracy(&[], &[], 2).is_err());
    }

    #[test]
    fn absent_classes_are_ignored() {
        assert_eq!(balanced_accuracy(&[1, 1], &[1, 0], 4).unwrap(), 0.5);
    }

    #[test]
    fn paper_scale_folds() {
        let mut cfg = SynthConfig::desk(1);
        cfg.trials_per_class = 100;
        cfg.duration_ms = 16.0;
        let set = synth_signalset(&cfg).unwrap();
        let a = stratified_folds(&set, 10, 2, 5).unwrap();
        let labels = set.labels();
        for r in 0..2 {
            let mut all: Vec<usize> = Vec::new();
            for f in 0..10 {
                let t = a.test(r, f);
                assert_eq!(t.len(), 80);
                for c in 0..8 {
                    assert_eq!(t.iter().filter(|&&i| labels[i] == c).count(), 10);
                }
                assert_eq!(a.train(r, f).len(), 720);
                all.extend_from_slice(t);
            }
            all.sort_unstable();
            assert_eq!(all, (0..800).collect::<Vec<_>>());
        }
        assert_ne!(a.test_sets[0], a.test_sets[1]);
        assert_eq!(a, stratified_folds(&set, 10, 2, 5).unwrap());
    }

    #[test]
    fn small_class_rejected() {
        let labels = [0, 0, 0, 1, 1];
        assert!(matches!(
            stratified_partition(&labels, 2, 3, 0),
            Err(Error::ClassTooSmall { class: 1, .. })
        ));
    }
}
