//! Periodized Daubechies-6 discrete wavelet transform.

use crate::{Error, Result};

/// Daubechies-6 (12-tap) orthonormal low-pass analysis filter.
pub const DB6_LOW: [f64; 12] = [
    0.1115407433501095,
    0.4946238903984533,
    0.7511339080210959,
    0.3152503517091982,
    -0.2262646939654400,
    -0.1297668675672625,
    0.0975016055873225,
    0.0275228655303053,
    -0.0315820393174862,
    0.0005538422011614,
    0.0047772575109455,
    -0.0010773010853085,
];

/// Quadrature-mirror high-pass: `g[k] = (-1)^k · h[N-1-k]`.
fn db6_high() -> [f64; 12] {
    let mut g = [0.0; 12];
    for (k, v) in g.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *v = sign * DB6_LOW[DB6_LOW.len() - 1 - k];
    }
    g
}

/// Subbands of a multilevel decomposition, coarsest first:
/// `[A_J, D_J, ..., D_1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub bands: Vec<Vec<f64>>,
    /// Input length at each level before any odd-length padding, finest
    /// first. Needed to undo the padding on reconstruction.
    lengths: Vec<usize>,
}

impl Decomposition {
    pub fn levels(&self) -> usize {
        self.lengths.len()
    }

    pub fn approximation(&self) -> &[f64] {
        &self.bands[0]
    }

    /// Detail band at `level` (1 = finest).
    pub fn detail(&self, level: usize) -> &[f64] {
        &self.bands[self.levels() + 1 - level]
    }
}

fn analysis_step(x: &[f64], low: &[f64], high: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let mut a = vec![0.0; half];
    let mut d = vec![0.0; half];
    for k in 0..half {
        let mut sa = 0.0;
        let mut sd = 0.0;
        for (j, (&h, &g)) in low.iter().zip(high).enumerate() {
            let v = x[(2 * k + j) % n];
            sa += h * v;
            sd += g * v;
        }
        a[k] = sa;
        d[k] = sd;
    }
    (a, d)
}

fn synthesis_step(a: &[f64], d: &[f64], low: &[f64], high: &[f64]) -> Vec<f64> {
    let n = 2 * a.len();
    let mut x = vec![0.0; n];
    for k in 0..a.len() {
        for (j, (&h, &g)) in low.iter().zip(high).enumerate() {
            x[(2 * k + j) % n] += h * a[k] + g * d[k];
        }
    }
    x
}

/// Forward transform with periodic extension.
///
/// An odd-length intermediate signal is extended by repeating its last
/// sample, which keeps reconstruction exact for any length but means the
/// transform is only energy preserving when `len` is a multiple of
/// `2^levels`.
pub fn dwt_db6(signal: &[f64], levels: usize) -> Result<Decomposition> {
    if levels == 0 {
        return Err(Error::InvalidArgument("levels must be at least 1".into()));
    }
    if levels >= usize::BITS as usize || signal.len() < (1usize << levels) {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            levels,
        });
    }
    let low = DB6_LOW;
    let high = db6_high();
    let mut current = signal.to_vec();
    let mut details = Vec::with_capacity(levels);
    let mut lengths = Vec::with_capacity(levels);
    for _ in 0..levels {
        lengths.push(current.len());
        if current.len() % 2 == 1 {
            current.push(*current.last().unwrap());
        }
        let (a, d) = analysis_step(&current, &low, &high);
        details.push(d);
        current = a;
    }
    let mut bands = Vec::with_capacity(levels + 1);
    bands.push(current);
    bands.extend(details.into_iter().rev());
    Ok(Decomposition { bands, lengths })
}

pub fn idwt_db6(dec: &Decomposition) -> Vec<f64> {
    let low = DB6_LOW;
    let high = db6_high();
    let mut current = dec.bands[0].clone();
    for level in (1..=dec.levels()).rev() {
        let mut x = synthesis_step(&current, dec.detail(level), &low, &high);
        x.truncate(dec.lengths[level - 1]);
        current = x;
    }
    current
}
