//! Error-correcting output codes over binary random forests.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::evaluation::{balanced_accuracy, stratified_partition};
use crate::features::{concat, FeatureTable, FeatureVector};
use crate::learners::{predict_forest, train_forest, ForestConfig, ForestModel};
use crate::seed::{self, tag};
use crate::{Error, Result};

pub const MAX_CODEBOOK_DRAWS: usize = 1000;

/// `rows[class][bit]` is `true` for +1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codebook {
    pub rows: Vec<Vec<bool>>,
}

impl Codebook {
    pub fn classes(&self) -> usize {
        self.rows.len()
    }

    pub fn bits(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Rows pairwise distinct and no column constant.
    pub fn is_valid(&self) -> bool {
        let m = self.classes();
        for a in 0..m {
            for b in (a + 1)..m {
                if self.rows[a] == self.rows[b] {
                    return false;
                }
            }
        }
        (0..self.bits()).all(|j| {
            let first = self.rows[0][j];
            self.rows.iter().any(|r| r[j] != first)
        })
    }

    pub fn min_distance(&self) -> usize {
        let mut best = usize::MAX;
        for a in 0..self.classes() {
            for b in (a + 1)..self.classes() {
                best = best.min(hamming(&self.rows[a], &self.rows[b]));
            }
        }
        best
    }
}

fn hamming(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

pub fn random_codebook(classes: usize, bits: usize, rng: &mut seed::Rng) -> Result<Codebook> {
    for _ in 0..MAX_CODEBOOK_DRAWS {
        let cb = Codebook {
            rows: (0..classes)
                .map(|_| (0..bits).map(|_| rng.random_bool(0.5)).collect())
                .collect(),
        };
        if cb.is_valid() {
            return Ok(cb);
        }
    }
    Err(Error::CodebookUnreachable(MAX_CODEBOOK_DRAWS))
}

/// Nearest codeword by Hamming distance, lowest class on ties.
pub fn decode(codebook: &Codebook, bits: &[bool]) -> usize {
    let mut best = 0;
    let mut best_d = usize::MAX;
    for (c, row) in codebook.rows.iter().enumerate() {
        let d = hamming(row, bits);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcocConfig {
    pub code_size_grid: Vec<f64>,
    pub folds: usize,
}

impl Default for EcocConfig {
    fn default() -> Self {
        EcocConfig {
            code_size_grid: vec![2.0, 3.0, 4.0, 5.0, 6.0],
            folds: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcocModel {
    pub codebook: Codebook,
    pub binary_learners: Vec<ForestModel>,
    pub code_size: f64,
    pub channel_count: usize,
}

pub fn bits_for(code_size: f64, classes: usize) -> usize {
    (code_size * classes as f64).ceil() as usize
}

fn fit_binary(
    x: &[Vec<f64>],
    y: &[usize],
    codebook: &Codebook,
    seed: u64,
) -> Result<Vec<ForestModel>> {
    (0..codebook.bits())
        .into_par_iter()
        .map(|b| {
            let yb: Vec<usize> = y.iter().map(|&c| codebook.rows[c][b] as usize).collect();
            train_forest(
                x,
                &yb,
                2,
                ForestConfig::with_seed(seed::derive(seed, &[b as u64])),
            )
        })
        .collect()
}

fn predict_rows(learners: &[ForestModel], codebook: &Codebook, x: &[f64]) -> Result<usize> {
    let bits = learners
        .iter()
        .map(|m| predict_forest(m, x).map(|p| p == 1))
        .collect::<Result<Vec<_>>>()?;
    Ok(decode(codebook, &bits))
}

/// Tunes `code_size` by stratified k-fold balanced accuracy and refits the
/// winner on all of `train`.
pub fn train_ecoc(train: &FeatureTable, cfg: &EcocConfig, seed: u64) -> Result<EcocModel> {
    let all: Vec<usize> = (0..train.channel_count).collect();
    let x = train.design_matrix(&all)?;
    let y = &train.labels;
    let m = train.class_count;
    if cfg.code_size_grid.is_empty() {
        return Err(Error::InvalidArgument("empty code_size grid".into()));
    }
    let folds = stratified_partition(y, m, cfg.folds, seed::derive(seed, &[tag::ECOC]))?;

    let mut best: Option<(f64, f64, Codebook)> = None;
    for (gi, &code_size) in cfg.code_size_grid.iter().enumerate() {
        let grid_seed = seed::derive(seed, &[tag::ECOC, gi as u64 + 1]);
        let mut rng = seed::rng(grid_seed);
        let codebook = random_codebook(m, bits_for(code_size, m), &mut rng)?;
        let mut score = 0.0;
        for (k, test_idx) in folds.iter().enumerate() {
            let train_idx: Vec<usize> = (0..y.len())
                .filter(|i| !test_idx.contains(i))
                .collect();
            let xt: Vec<Vec<f64>> = train_idx.iter().map(|&i| x[i].clone()).collect();
            let yt: Vec<usize> = train_idx.iter().map(|&i| y[i]).collect();
            let learners = fit_binary(&xt, &yt, &codebook, seed::derive(grid_seed, &[k as u64]))?;
            let preds = test_idx
                .iter()
                .map(|&i| predict_rows(&learners, &codebook, &x[i]))
                .collect::<Result<Vec<_>>>()?;
            let truth: Vec<usize> = test_idx.iter().map(|&i| y[i]).collect();
            score += balanced_accuracy(&truth, &preds, m)?;
        }
        if best.as_ref().is_none_or(|b| score > b.0) {
            best = Some((score, code_size, codebook));
        }
    }
    let (_, code_size, codebook) = best.unwrap();
    let binary_learners = fit_binary(&x, y, &codebook, seed::derive(seed, &[tag::ECOC, 0]))?;
    Ok(EcocModel {
        codebook,
        binary_learners,
        code_size,
        channel_count: train.channel_count,
    })
}

impl EcocModel {
    pub fn predict(&self, features: &[FeatureVector]) -> Result<usize> {
        let all: Vec<usize> = (0..self.channel_count).collect();
        let x = concat(features, &all)?.values;
        predict_rows(&self.binary_learners, &self.codebook, &x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_count() {
        assert_eq!(bits_for(2.0, 8), 16);
        assert_eq!(bits_for(1.5, 3), 5);
    }

    #[test]
    fn random_codebooks_are_valid() {
        let mut rng = seed::rng(1);
        for bits in [2, 4, 16] {
            let cb = random_codebook(4, bits, &mut rng).unwrap();
            assert!(cb.is_valid());
            assert_eq!(cb.bits(), bits);
        }
        // 3 distinct rows cannot fit in one bit
        assert!(matches!(
            random_codebook(3, 1, &mut rng),
            Err(Error::CodebookUnreachable(_))
        ));
    }

    #[test]
    fn validity_rules() {
        let dup = Codebook {
            rows: vec![vec![true, false], vec![true, false]],
        };
        assert!(!dup.is_valid());
        let constant_col = Codebook {
            rows: vec![vec![true, false], vec![true, true]],
        };
        assert!(!constant_col.is_valid());
    }

    #[test]
    fn decoding_corrects_single_errors() {
        let mut rng = seed::rng(7);
        let cb = loop {
            let cb = random_codebook(8, 16, &mut rng).unwrap();
            if cb.min_distance() >= 3 {
                break cb;
            }
        };
        for (c, row) in cb.rows.iter().enumerate() {
            assert_eq!(decode(&cb, row), c);
            for flip in 0..row.len() {
                let mut bits = row.clone();
                bits[flip] = !bits[flip];
                assert_eq!(decode(&cb, &bits), c);
            }
        }
    }
}
