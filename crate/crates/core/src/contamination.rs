//! Noise models with exact SNR control and random test-set contamination
//! plans.
//!
//! SNR is always signal-to-residual: `10·log10(P_clean / P_(dirty − clean))`
//! with `P` the mean square. That makes additive noise and distortions such
//! as attenuation or clipping directly comparable.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::seed::{self, tag};
use crate::signalset::Recording;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    PowerLine,
    Attenuation,
    Gaussian,
    Clipping,
    BaselineWander,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 5] = [
        NoiseKind::PowerLine,
        NoiseKind::Attenuation,
        NoiseKind::Gaussian,
        NoiseKind::Clipping,
        NoiseKind::BaselineWander,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::PowerLine => "power_line",
            NoiseKind::Attenuation => "attenuation",
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Clipping => "clipping",
            NoiseKind::BaselineWander => "baseline_wander",
        }
    }

    /// Kinds that rescale the signal rather than add to it.
    pub fn is_multiplicative(self) -> bool {
        matches!(self, NoiseKind::Attenuation | NoiseKind::Clipping)
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace(['-', ' '], "_");
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.name() == norm || k.name().replace('_', "") == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown noise kind {s:?}")))
    }
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationPlan {
    pub kind: NoiseKind,
    pub snr_db: f64,
    pub channels: BTreeSet<usize>,
    pub seed: u64,
}

impl ContaminationPlan {
    pub fn validate(&self, channel_count: usize) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::InvalidArgument("plan lists no channels".into()));
        }
        if let Some(&c) = self.channels.iter().find(|&&c| c >= channel_count) {
            return Err(Error::MissingChannel(c));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::InvalidArgument(format!("snr {}", self.snr_db)));
        }
        Ok(())
    }
}

/// One line of a plan JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub trial_index: usize,
    pub kind: NoiseKind,
    pub snr_db: f64,
    pub channels: Vec<usize>,
    pub seed: u64,
}

impl PlanRecord {
    pub fn new(trial_index: usize, plan: &ContaminationPlan) -> Self {
        PlanRecord {
            trial_index,
            kind: plan.kind,
            snr_db: plan.snr_db,
            channels: plan.channels.iter().copied().collect(),
            seed: plan.seed,
        }
    }
}

pub fn power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Realized signal-to-residual ratio in dB. Returns `+inf` when the two
/// series are identical.
pub fn measure_snr(clean: &[f64], dirty: &[f64]) -> Result<f64> {
    if clean.len() != dirty.len() {
        return Err(Error::DimensionMismatch {
            expected: clean.len(),
            actual: dirty.len(),
        });
    }
    if clean.is_empty() {
        return Err(Error::InvalidArgument("empty series".into()));
    }
    let p_clean = power(clean);
    if p_clean == 0.0 {
        return Err(Error::SilentChannel(0));
    }
    let p_res = clean
        .iter()
        .zip(dirty)
        .map(|(c, d)| (d - c) * (d - c))
        .sum::<f64>()
        / clean.len() as f64;
    if p_res == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (p_clean / p_res).log10())
}

/// Target residual power for `snr_db`.
fn residual_power(p_signal: f64, snr_db: f64) -> f64 {
    p_signal * 10f64.powf(-snr_db / 10.0)
}

pub fn attenuation_factor(snr_db: f64) -> f64 {
    (1.0 - 10f64.powf(-snr_db / 20.0)).clamp(0.0, 1.0 - f64::EPSILON)
}

fn add_tone(x: &[f64], rate: f64, freq: f64, phase: f64, target: f64) -> Vec<f64> {
    let tone: Vec<f64> = (0..x.len())
        .map(|t| (2.0 * PI * freq * t as f64 / rate + phase).sin())
        .collect();
    // Scaled by the tone's realized power over the window: for sub-Hz
    // wander a 1 s window holds less than two periods, so A²/2 is off.
    let p_tone = power(&tone);
    let amp = if p_tone > 0.0 {
        (target / p_tone).sqrt()
    } else {
        0.0
    };
    x.iter().zip(&tone).map(|(v, s)| v + amp * s).collect()
}

fn add_gaussian(x: &[f64], rng: &mut seed::Rng, target: f64) -> Vec<f64> {
    let noise: Vec<f64> = (0..x.len()).map(|_| StandardNormal.sample(rng)).collect();
    let p = power(&noise);
    let amp = if p > 0.0 { (target / p).sqrt() } else { 0.0 };
    x.iter().zip(&noise).map(|(v, n)| v + amp * n).collect()
}

fn soft_clip(x: &[f64], threshold: f64) -> Vec<f64> {
    x.iter().map(|v| threshold * (v / threshold).tanh()).collect()
}

const CLIP_TOLERANCE_DB: f64 = 0.1;
const CLIP_MAX_ITER: usize = 60;

/// `T·tanh(x/T)` with `T` found by bisection in log-space so the realized
/// SNR lands within 0.1 dB of `snr_db`.
fn clip_to_snr(x: &[f64], snr_db: f64) -> Vec<f64> {
    let rms = power(x).sqrt();
    let realized = |t: f64| measure_snr(x, &soft_clip(x, t)).unwrap_or(f64::INFINITY);
    // realized SNR grows with T
    let (mut lo, mut hi) = ((rms * 1e-9).ln(), (rms * 1e9).ln());
    let mut best = (f64::INFINITY, hi);
    for _ in 0..CLIP_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let s = realized(mid.exp());
        let err = (s - snr_db).abs();
        if err < best.0 {
            best = (err, mid);
        }
        if err <= CLIP_TOLERANCE_DB / 2.0 {
            break;
        }
        if s > snr_db {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    soft_clip(x, best.1.exp())
}

/// Applies `plan` to the listed channels of `rec`; every other channel is
/// copied untouched.
pub fn inject(rec: &Recording, plan: &ContaminationPlan) -> Result<Recording> {
    plan.validate(rec.channel_count())?;
    let mut rng = seed::rng(plan.seed);
    // drawn once per plan so every channel shares the interferer
    let (freq, phase) = match plan.kind {
        NoiseKind::PowerLine => (rng.random_range(48.0..=52.0), rng.random_range(0.0..2.0 * PI)),
        NoiseKind::BaselineWander => (rng.random_range(0.5..=1.5), rng.random_range(0.0..2.0 * PI)),
        _ => (0.0, 0.0),
    };
    let mut out = rec.clone();
    for &l in &plan.channels {
        let x = rec.channel(l);
        let p = power(x);
        if p == 0.0 && plan.kind.is_multiplicative() {
            return Err(Error::SilentChannel(l));
        }
        let target = residual_power(p, plan.snr_db);
        let y = match plan.kind {
            NoiseKind::PowerLine | NoiseKind::BaselineWander => {
                add_tone(x, rec.sampling_rate(), freq, phase, target)
            }
            NoiseKind::Gaussian => add_gaussian(x, &mut rng, target),
            NoiseKind::Attenuation => {
                let a = attenuation_factor(plan.snr_db);
                x.iter().map(|v| a * v).collect()
            }
            NoiseKind::Clipping => clip_to_snr(x, plan.snr_db),
        };
        out = out.with_channel(l, y)?;
    }
    Ok(out)
}

/// Largest contaminated-channel count drawn per trial.
pub const MAX_CONTAMINATED: usize = 7;

/// One random plan per recording: uniform noise kind, uniform channel count
/// in `1..=min(7, channel_total − 1)`, channels drawn without replacement.
pub fn plan_random_contamination(
    rec_count: usize,
    channel_total: usize,
    snr_db: f64,
    seed: u64,
) -> Result<Vec<ContaminationPlan>> {
    if channel_total == 0 {
        return Err(Error::InvalidArgument("no channels to contaminate".into()));
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidArgument(format!("snr {snr_db}")));
    }
    let max = MAX_CONTAMINATED.min(channel_total.saturating_sub(1)).max(1);
    let mut rng = seed::rng(seed::derive(seed, &[tag::CONTAMINATION]));
    Ok((0..rec_count)
        .map(|_| {
            let kind = NoiseKind::ALL[rng.random_range(0..NoiseKind::ALL.len())];
            let count = rng.random_range(1..=max);
            let channels = sample(&mut rng, channel_total, count).into_iter().collect();
            ContaminationPlan {
                kind,
                snr_db,
                channels,
                seed: rng.random(),
            }
        })
        .collect())
}
