//! ν one-class SVM with an RBF kernel, solved by SMO.
//!
//! Internally the dual is solved in the scaled form `0 ≤ β ≤ 1`,
//! `Σβ = ν·n`; the stored model uses `α = β / (ν·n)`, so `Σα = 1` and
//! `α ≤ 1/(ν·n)`.

use serde::{Deserialize, Serialize};

use super::check_matrix;
use crate::{Error, Result};

pub const MAX_ITER: usize = 100_000;
const TOLERANCE: f64 = 1e-5;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneClassModel {
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub rho: f64,
    pub gamma: f64,
    pub nu: f64,
    /// All training rows were identical (rank-1 kernel).
    pub degenerate: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcsvmScore {
    pub score: f64,
    pub is_target: bool,
}

impl OneClassModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    pub fn to_json(&self) -> Result<String> {
        super::to_model_json("ocsvm", self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        super::from_model_json("ocsvm", text)
    }
}

pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// `1 / (d · mean per-feature variance)`, or 1 when every feature is
/// constant.
pub fn gamma_scale(x: &[Vec<f64>]) -> f64 {
    let n = x.len() as f64;
    let d = x.first().map_or(0, Vec::len);
    if d == 0 || x.is_empty() {
        return 1.0;
    }
    let mean_var = (0..d)
        .map(|f| {
            let m = x.iter().map(|r| r[f]).sum::<f64>() / n;
            x.iter().map(|r| (r[f] - m).powi(2)).sum::<f64>() / n
        })
        .sum::<f64>()
        / d as f64;
    if mean_var > 0.0 {
        1.0 / (d as f64 * mean_var)
    } else {
        1.0
    }
}

pub fn train_ocsvm(x: &[Vec<f64>], nu: f64, gamma: f64) -> Result<OneClassModel> {
    check_matrix(x)?;
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "one-class SVM needs at least 2 samples, got {n}"
        )));
    }
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidArgument(format!("nu {nu} outside (0, 1]")));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma {gamma}")));
    }
    let degenerate = x.iter().all(|r| r == &x[0]);

    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| rbf(gamma, &x[i], &x[j])).collect())
        .collect();

    let total = nu * n as f64;
    let mut beta = vec![0.0; n];
    let full = (total.floor() as usize).min(n);
    beta[..full].iter_mut().for_each(|b| *b = 1.0);
    if full < n {
        beta[full] = total - full as f64;
    }
    let mut grad: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| q[i][j] * beta[j]).sum())
        .collect();

    let mut iterations = 0;
    loop {
        // i: steepest feasible ascent among β_i < 1
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if beta[t] < 1.0 && -grad[t] >= g_max {
                g_max = -grad[t];
                i_sel = t;
            }
        }
        // j: second-order choice among β_j > 0
        let mut g_max2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut obj_min = f64::INFINITY;
        for t in 0..n {
            if beta[t] > 0.0 {
                g_max2 = g_max2.max(grad[t]);
                if i_sel == usize::MAX {
                    continue;
                }
                let diff = g_max + grad[t];
                if diff > 0.0 {
                    let mut quad = q[i_sel][i_sel] + q[t][t] - 2.0 * q[i_sel][t];
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -diff * diff / quad;
                    if obj <= obj_min {
                        obj_min = obj;
                        j_sel = t;
                    }
                }
            }
        }
        if g_max + g_max2 < TOLERANCE || i_sel == usize::MAX || j_sel == usize::MAX {
            break;
        }
        if iterations >= MAX_ITER {
            return Err(Error::SolverStalled(iterations));
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let old_i = beta[i];
        let old_j = beta[j];
        let mut quad = q[i][i] + q[j][j] - 2.0 * q[i][j];
        if quad <= 0.0 {
            quad = TAU;
        }
        let delta = (grad[i] - grad[j]) / quad;
        let sum = old_i + old_j;
        let mut bi = old_i - delta;
        let mut bj = old_j + delta;
        if sum > 1.0 {
            if bi > 1.0 {
                bi = 1.0;
                bj = sum - 1.0;
            }
        } else if bj < 0.0 {
            bj = 0.0;
            bi = sum;
        }
        if sum > 1.0 {
            if bj > 1.0 {
                bj = 1.0;
                bi = sum - 1.0;
            }
        } else if bi < 0.0 {
            bi = 0.0;
            bj = sum;
        }
        beta[i] = bi;
        beta[j] = bj;
        let (di, dj) = (bi - old_i, bj - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q[i][t] * di + q[j][t] * dj;
        }
    }

    // ρ: lowest gradient over free variables, so free support vectors sit
    // on the target side of the boundary; else the midpoint of the
    // feasible interval.
    let mut free_min = f64::INFINITY;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..n {
        if beta[t] >= 1.0 {
            lb = lb.max(grad[t]);
        } else if beta[t] <= 0.0 {
            ub = ub.min(grad[t]);
        } else {
            free_min = free_min.min(grad[t]);
        }
    }
    let rho_scaled = if free_min.is_finite() {
        free_min.max(lb)
    } else {
        0.5 * (ub + lb)
    };

    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    for t in 0..n {
        if beta[t] > 0.0 {
            support_vectors.push(x[t].clone());
            alphas.push(beta[t] / total);
        }
    }
    Ok(OneClassModel {
        support_vectors,
        alphas,
        rho: rho_scaled / total,
        gamma,
        nu,
        degenerate,
        iterations,
    })
}

/// Signed decision value `Σ α_i k(x_i, x) − ρ`; non-negative means target.
pub fn score_ocsvm(model: &OneClassModel, x: &[f64]) -> Result<OcsvmScore> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: x.len(),
        });
    }
    let s: f64 = model
        .support_vectors
        .iter()
        .zip(&model.alphas)
        .map(|(sv, a)| a * rbf(model.gamma, sv, x))
        .sum();
    let score = s - model.rho;
    Ok(OcsvmScore {
        score,
        is_target: score >= 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand_distr::{Distribution, Normal};

    fn cloud(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seed::rng(seed);
        let g = Normal::new(0.0, 1.0).unwrap();
        (0..n)
            .map(|_| (0..d).map(|_| g.sample(&mut rng)).collect())
            .collect()
    }

    #[test]
    fn two_points_split_evenly() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 2.0]];
        for nu in [0.1, 0.5, 1.0] {
            let m = train_ocsvm(&x, nu, 0.5).unwrap();
            assert_eq!(m.alphas.len(), 2);
            for a in &m.alphas {
                assert!((a - 0.5).abs() < 1e-6, "nu {nu}: {:?}", m.alphas);
            }
        }
    }

    #[test]
    fn dual_constraints_hold() {
        let x = cloud(80, 3, 1);
        for nu in [0.1, 0.3, 0.7, 1.0] {
            let m = train_ocsvm(&x, nu, gamma_scale(&x)).unwrap();
            let sum: f64 = m.alphas.iter().sum();
            assert!((sum - 1.0).abs() < 1e-6);
            let cap = 1.0 / (nu * 80.0);
            assert!(m.alphas.iter().all(|&a| a >= 0.0 && a <= cap + 1e-9));
        }
    }

    #[test]
    fn nu_bounds_training_outliers() {
        let x = cloud(200, 4, 2);
        let m = train_ocsvm(&x, 0.5, gamma_scale(&x)).unwrap();
        let out = x
            .iter()
            .filter(|r| !score_ocsvm(&m, r).unwrap().is_target)
            .count() as f64
            / 200.0;
        assert!(out <= 0.55 && out >= 0.35, "{out}");
    }

    #[test]
    fn interior_support_vectors_sit_on_the_boundary() {
        let x = cloud(60, 2, 3);
        let nu = 0.3;
        let m = train_ocsvm(&x, nu, gamma_scale(&x)).unwrap();
        let cap = 1.0 / (nu * 60.0);
        let mut seen = 0;
        for (sv, &a) in m.support_vectors.iter().zip(&m.alphas) {
            if a > 1e-9 && a < cap - 1e-9 {
                let s = score_ocsvm(&m, sv).unwrap().score;
                assert!(s.abs() < 1e-3, "{s}");
                seen += 1;
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn far_probes_are_outliers() {
        let x = cloud(50, 3, 4);
        let m = train_ocsvm(&x, 0.2, gamma_scale(&x)).unwrap();
        let far = score_ocsvm(&m, &[1e6, 1e6, 1e6]).unwrap();
        assert!(!far.is_target);
        assert!((far.score + m.rho).abs() < 1e-12);
        let moderately_far = vec![30.0; 3];
        assert!(!score_ocsvm(&m, &moderately_far).unwrap().is_target);
        // the cloud centre is dense
        assert!(score_ocsvm(&m, &[0.0, 0.0, 0.0]).unwrap().is_target);
    }

    #[test]
    fn identical_rows_are_flagged_but_solved() {
        let x = vec![vec![1.0, 2.0]; 5];
        let m = train_ocsvm(&x, 0.5, 1.0).unwrap();
        assert!(m.degenerate);
        assert!((m.alphas.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(score_ocsvm(&m, &[1.0, 2.0]).unwrap().is_target);
    }

    #[test]
    fn argument_checks() {
        let x = cloud(5, 2, 5);
        assert!(train_ocsvm(&x[..1], 0.5, 1.0).is_err());
        assert!(train_ocsvm(&x, 0.0, 1.0).is_err());
        assert!(train_ocsvm(&x, 1.5, 1.0).is_err());
        let m = train_ocsvm(&x, 0.5, 1.0).unwrap();
        assert!(score_ocsvm(&m, &[0.0]).is_err());
    }

    #[test]
    fn gamma_heuristic() {
        let x = vec![vec![0.0, 0.0], vec![2.0, 4.0]];
        // variances 1 and 4 -> mean 2.5, d = 2
        assert!((gamma_scale(&x) - 0.2).abs() < 1e-12);
        assert_eq!(gamma_scale(&[vec![1.0], vec![1.0]]), 1.0);
    }
}
