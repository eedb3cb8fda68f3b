use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex, FftPlanner};

use super::{paired_layout, Modality, Recording, SignalSet, SignalSetMeta};
use crate::seed::{self, tag};
use crate::{Error, Result};

pub const EMG_BAND_HZ: (f64, f64) = (20.0, 450.0);
pub const MMG_BAND_HZ: (f64, f64) = (5.0, 100.0);

/// Corner frequencies (low, high) of the power-spectrum envelope
/// `f²·fh⁴ / ((f² + fl²)(f² + fh²)²)` used to colour each modality.
pub const EMG_SHAPE_HZ: (f64, f64) = (40.0, 120.0);
pub const MMG_SHAPE_HZ: (f64, f64) = (8.0, 25.0);

/// Active/inactive rows of the class × channel activation pattern. Rows are
/// weight-4 words of the extended Hamming (8,4) code, so every pair of
/// classes differs on at least four channels while no single channel
/// separates more than two groups of classes.
const PATTERN: [[u8; 8]; 8] = [
    [1, 1, 1, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 1, 1, 1],
    [1, 1, 0, 0, 1, 1, 0, 0],
    [0, 0, 1, 1, 0, 0, 1, 1],
    [1, 0, 1, 0, 1, 0, 1, 0],
    [0, 1, 0, 1, 0, 1, 0, 1],
    [1, 0, 0, 1, 1, 0, 0, 1],
    [0, 1, 1, 0, 0, 1, 1, 0],
];

const ACTIVE_GAIN: f64 = 1.0;
const RESTING_GAIN: f64 = 0.4;
/// Relative spread of the fixed per-(class, channel) level around the
/// active/resting gain.
const LEVEL_SPREAD: f64 = 0.3;
/// Relative spread of the fixed per-(class, channel) spectral corner shift.
const SHAPE_SPREAD: f64 = 0.4;
/// Log-normal spread of the per-trial effort shared by all channels.
const COMMON_JITTER: f64 = 0.3;
/// Log-normal spread of the per-trial, per-channel gain.
const CHANNEL_JITTER: f64 = 0.1;

fn unit_hash(salt: u64, class: usize, channel: usize) -> f64 {
    (seed::derive(salt, &[class as u64, channel as u64]) >> 11) as f64 / (1u64 << 53) as f64
}

fn modality_scale(m: Modality) -> f64 {
    match m {
        Modality::Emg => 1.0,
        Modality::Mmg => 0.5,
    }
}

/// Seed-independent activation level of `channel` for `class`.
///
/// The first 8 × 8 block follows the fixed pattern table; larger layouts
/// fall back to a hashed pattern so they stay deterministic. Each level is
/// nudged by a fixed per-(class, channel) factor so single channels carry
/// some class information beyond the binary pattern.
pub fn activation(class: usize, channel: usize) -> f64 {
    let active = if class < 8 && channel < 8 {
        PATTERN[class][channel] == 1
    } else {
        seed::derive(0xAC71_7A7E, &[class as u64, channel as u64]) & 1 == 1
    };
    let base = if active { ACTIVE_GAIN } else { RESTING_GAIN };
    base * (1.0 + LEVEL_SPREAD * (2.0 * unit_hash(0x1E7E1, class, channel) - 1.0))
}

/// Seed-independent multiplier on the spectral corner frequencies.
pub fn spectral_shift(class: usize, channel: usize) -> f64 {
    1.0 + SHAPE_SPREAD * (2.0 * unit_hash(0x5A1F7, class, channel) - 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub classes: usize,
    pub trials_per_class: usize,
    /// Sensors per modality (L); the set has 2L channels.
    pub channels_per_modality: usize,
    pub duration_ms: f64,
    pub rate_hz: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn desk(seed: u64) -> Self {
        SynthConfig {
            classes: 8,
            trials_per_class: 40,
            channels_per_modality: 4,
            duration_ms: 1000.0,
            rate_hz: 1000.0,
            seed,
        }
    }
}

fn spectral_amplitude(f: f64, (fl, fh): (f64, f64)) -> f64 {
    let (f2, l2, h2) = (f * f, fl * fl, fh * fh);
    (f2 * h2 * h2 / ((f2 + l2) * (f2 + h2) * (f2 + h2))).sqrt()
}

/// Unit-RMS coloured Gaussian noise: white noise shaped by the spectral
/// envelope, with every FFT bin outside `[lo, hi]` Hz zeroed.
fn band_limited_noise(
    rng: &mut seed::Rng,
    n: usize,
    rate: f64,
    (lo, hi): (f64, f64),
    shape: (f64, f64),
    planner: &mut FftPlanner<f64>,
) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|_| Complex::new(StandardNormal.sample(rng), 0.0))
        .collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let bin = k.min(n - k) as f64;
        let f = bin * rate / n as f64;
        if f < lo || f > hi {
            *c = Complex::new(0.0, 0.0);
        } else {
            *c *= spectral_amplitude(f, shape);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let mut out: Vec<f64> = buf.iter().map(|c| c.re / n as f64).collect();
    let rms = (out.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if rms > 0.0 {
        out.iter_mut().for_each(|v| *v /= rms);
    }
    out
}

/// Deterministic stand-in for recorded EMG/MMG trials.
///
/// Each channel is coloured, band-limited Gaussian noise (EMG 20–450 Hz,
/// MMG 5–100 Hz). The class sets each channel's activation level and
/// shifts its spectral corners; a log-normal effort factor shared by all
/// channels of a trial and a smaller per-channel factor set the gain.
pub fn synth_signalset(cfg: &SynthConfig) -> Result<SignalSet> {
    if cfg.classes < 2 {
        return Err(Error::InvalidArgument("need at least 2 classes".into()));
    }
    if cfg.trials_per_class < 1 {
        return Err(Error::InvalidArgument(
            "need at least 1 trial per class".into(),
        ));
    }
    if cfg.channels_per_modality < 1 {
        return Err(Error::InvalidArgument(
            "need at least 1 channel per modality".into(),
        ));
    }
    if !(cfg.rate_hz >= 2.0 * EMG_BAND_HZ.1) {
        return Err(Error::InvalidArgument(format!(
            "sampling rate {} Hz is below the {} Hz needed for the EMG band",
            cfg.rate_hz,
            2.0 * EMG_BAND_HZ.1
        )));
    }
    let n = (cfg.rate_hz * cfg.duration_ms / 1000.0).round() as usize;
    if n == 0 {
        return Err(Error::InvalidArgument("duration yields no samples".into()));
    }
    let layout = paired_layout(cfg.channels_per_modality);
    let mut planner = FftPlanner::new();
    let mut recordings = Vec::with_capacity(cfg.classes * cfg.trials_per_class);
    for class in 0..cfg.classes {
        for trial in 0..cfg.trials_per_class {
            let mut rng = seed::rng(seed::derive(
                cfg.seed,
                &[tag::SYNTH, class as u64, trial as u64],
            ));
            let z0: f64 = StandardNormal.sample(&mut rng);
            let samples = layout
                .iter()
                .map(|ch| {
                    let (band, (fl, fh)) = match ch.modality {
                        Modality::Emg => (EMG_BAND_HZ, EMG_SHAPE_HZ),
                        Modality::Mmg => (MMG_BAND_HZ, MMG_SHAPE_HZ),
                    };
                    let shift = spectral_shift(class, ch.id);
                    let shape = (fl * shift, fh * shift);
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let gain = activation(class, ch.id)
                        * modality_scale(ch.modality)
                        * (COMMON_JITTER * z0 + CHANNEL_JITTER * z).exp();
                    let mut s = band_limited_noise(&mut rng, n, cfg.rate_hz, band, shape, &mut planner);
                    s.iter_mut().for_each(|v| *v *= gain);
                    s
                })
                .collect();
            recordings.push(Recording::new(samples, cfg.rate_hz, class, layout.clone())?);
        }
    }
    let names = (0..cfg.classes).map(|c| format!("class_{c}")).collect();
    SignalSet::new(
        recordings,
        names,
        SignalSetMeta {
            name: format!("synth-{}x{}-seed{}", cfg.classes, cfg.trials_per_class, cfg.seed),
            seed: Some(cfg.seed),
            contaminated: false,
        },
    )
}
