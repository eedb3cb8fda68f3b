use rand::Rng as _;

use myoselect::evaluation::{holm_adjust, wilcoxon_signed_rank};
use myoselect::seed;

/// Doubled mid-ranks of |d| by direct counting.
fn doubled_midranks(abs: &[f64]) -> Vec<u64> {
    abs.iter()
        .map(|&v| {
            let less = abs.iter().filter(|&&w| w < v).count() as u64;
            let equal = abs.iter().filter(|&&w| w == v).count() as u64;
            2 * less + equal + 1
        })
        .collect()
}

/// Two-sided exact p by visiting all 2^n sign patterns.
fn enumerated_p(diffs: &[f64]) -> f64 {
    let nz: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    let n = nz.len();
    let ranks = doubled_midranks(&nz.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let observed: u64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for pattern in 0u64..1 << n {
        let w: u64 = (0..n).filter(|i| pattern >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= observed {
            le += 1;
        }
        if w >= observed {
            ge += 1;
        }
    }
    ((2 * le.min(ge)) as f64 / (1u64 << n) as f64).min(1.0)
}

#[test]
fn exact_wilcoxon_matches_enumeration() {
    let mut rng = seed::rng(77);
    let mut checked = 0;
    while checked < 200 {
        let n = rng.random_range(5..=12);
        // a coarse grid yields ties and zero differences
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 / 8.0).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 / 8.0).collect();
        let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let nonzero = diffs.iter().filter(|d| **d != 0.0).count();
        let res = wilcoxon_signed_rank(&a, &b);
        if nonzero == 0 {
            assert!(res.unwrap().all_zero);
            continue;
        }
        if nonzero < 5 {
            assert!(res.is_err());
            continue;
        }
        let res = res.unwrap();
        assert!(res.exact);
        assert_eq!(res.p_value, enumerated_p(&diffs), "a={a:?} b={b:?}");
        checked += 1;
    }
}

#[test]
fn holm_matches_closed_form() {
    let mut rng = seed::rng(78);
    for _ in 0..100 {
        let m = rng.random_range(1..=20);
        let p: Vec<f64> = (0..m).map(|_| rng.random::<f64>().powi(3)).collect();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&x, &y| p[x].total_cmp(&p[y]));
        let pos: Vec<usize> = {
            let mut pos = vec![0; m];
            for (j, &i) in order.iter().enumerate() {
                pos[i] = j;
            }
            pos
        };
        let res = holm_adjust(&p, 0.05).unwrap();
        for i in 0..m {
            let expected = (0..=pos[i])
                .map(|j| (m - j) as f64 * p[order[j]])
                .fold(0.0, f64::max)
                .min(1.0);
            assert_eq!(res.adjusted[i], expected);
            assert_eq!(res.reject[i], expected <= 0.05);
        }
    }
}
