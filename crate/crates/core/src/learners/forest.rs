use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, TreeConfig};
use super::{argmax_lowest, check_matrix};
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub trees: usize,
    pub seed: u64,
}

impl ForestConfig {
    pub const DEFAULT_TREES: usize = 30;

    pub fn with_seed(seed: u64) -> Self {
        ForestConfig {
            trees: Self::DEFAULT_TREES,
            seed,
        }
    }
}

/// Bagged CART trees with `floor(√d)` features per node and hard voting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub class_count: usize,
    pub n_features: usize,
    pub train_seed: u64,
}

impl ForestModel {
    pub fn to_json(&self) -> Result<String> {
        super::to_model_json("forest", self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        super::from_model_json("forest", text)
    }
}

pub fn train_forest(
    x: &[Vec<f64>],
    y: &[usize],
    class_count: usize,
    config: ForestConfig,
) -> Result<ForestModel> {
    let d = check_matrix(x)?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= class_count) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} outside {class_count} classes"
        )));
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(Error::SingleClass);
    }
    if config.trees == 0 {
        return Err(Error::InvalidArgument("forest needs at least one tree".into()));
    }
    let columns: Vec<Vec<f64>> = (0..d).map(|f| x.iter().map(|r| r[f]).collect()).collect();
    let tree_config = TreeConfig {
        max_features: Some(((d as f64).sqrt().floor() as usize).max(1)),
    };
    let n = x.len();
    let trees = (0..config.trees)
        .map(|t| {
            let mut rng = seed::rng(seed::derive(config.seed, &[t as u64]));
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            DecisionTree::fit(&columns, y, class_count, bootstrap, tree_config, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        trees,
        class_count,
        n_features: d,
        train_seed: config.seed,
    })
}

/// Per-tree votes for `x`.
pub fn forest_votes(model: &ForestModel, x: &[f64]) -> Result<Vec<u32>> {
    if x.len() != model.n_features {
        return Err(Error::DimensionMismatch {
            expected: model.n_features,
            actual: x.len(),
        });
    }
    let mut votes = vec![0u32; model.class_count];
    for t in &model.trees {
        votes[t.predict(x)] += 1;
    }
    Ok(votes)
}

/// Majority vote of per-tree leaf majorities; ties go to the lowest class.
pub fn predict_forest(model: &ForestModel, x: &[f64]) -> Result<usize> {
    Ok(argmax_lowest(&forest_votes(model, x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = seed::rng(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let c = i % 2;
            let centre = if c == 0 { -3.0 } else { 3.0 };
            x.push(vec![
                centre + noise.sample(&mut rng),
                noise.sample(&mut rng),
                centre + noise.sample(&mut rng),
            ]);
            y.push(c);
        }
        (x, y)
    }

    #[test]
    fn separable_blobs() {
        let (x, y) = blobs(200, 1);
        let model = train_forest(&x, &y, 2, ForestConfig::with_seed(3)).unwrap();
        assert_eq!(model.trees.len(), 30);
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(r, &l)| predict_forest(&model, r).unwrap() == l)
            .count();
        assert!(correct as f64 / 200.0 >= 0.99);
    }

    #[test]
    fn deterministic() {
        let (x, y) = blobs(60, 2);
        let a = train_forest(&x, &y, 2, ForestConfig::with_seed(8)).unwrap();
        let b = train_forest(&x, &y, 2, ForestConfig::with_seed(8)).unwrap();
        assert_eq!(a, b);
        let (probe, _) = blobs(40, 9);
        for p in &probe {
            assert_eq!(predict_forest(&a, p).unwrap(), predict_forest(&b, p).unwrap());
        }
    }

    #[test]
    fn memorizes_two_points() {
        // A bootstrap of two rows can miss one class; those trees vote for
        // the class they saw, so the majority still recovers each label.
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let y = vec![0, 1];
        let model = train_forest(&x, &y, 2, ForestConfig::with_seed(0)).unwrap();
        assert_eq!(predict_forest(&model, &x[0]).unwrap(), 0);
        assert_eq!(predict_forest(&model, &x[1]).unwrap(), 1);
    }

    #[test]
    fn input_validation() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            train_forest(&x, &[1, 1], 2, ForestConfig::with_seed(0)),
            Err(Error::SingleClass)
        ));
        let bad = vec![vec![0.0], vec![f64::NAN]];
        assert!(matches!(
            train_forest(&bad, &[0, 1], 2, ForestConfig::with_seed(0)),
            Err(Error::NonFinite(_))
        ));
        let model = train_forest(&x, &[0, 1], 2, ForestConfig::with_seed(0)).unwrap();
        assert!(matches!(
            predict_forest(&model, &[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tie_goes_to_lowest_class() {
        let x = vec![vec![0.0], vec![1.0]];
        let mut model = train_forest(&x, &[0, 1], 2, ForestConfig::with_seed(0)).unwrap();
        let always = |class: usize| {
            let rows = vec![vec![0.0], vec![1.0]];
            let y = vec![class, class];
            DecisionTree::fit(
                &[rows.iter().map(|r| r[0]).collect()],
                &y,
                2,
                vec![0, 1],
                TreeConfig { max_features: None },
                &mut seed::rng(0),
            )
        };
        model.trees = (0..30).map(|t| always(if t < 15 { 1 } else { 0 })).collect();
        assert_eq!(predict_forest(&model, &[0.5]).unwrap(), 0);
        model.trees = (0..30).map(|_| always(1)).collect();
        assert_eq!(predict_forest(&model, &[0.5]).unwrap(), 1);
    }

    #[test]
    fn json_round_trip() {
        let (x, y) = blobs(30, 4);
        let model = train_forest(&x, &y, 2, ForestConfig::with_seed(1)).unwrap();
        let back = ForestModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
    }
}
