//! Trial and signalset data model, the synthetic EMG/MMG generator and the
//! on-disk directory format.

mod io;
mod synth;

pub use io::{load_signalset, save_signalset, Manifest, ManifestChannel, ManifestTrial};
pub use synth::{activation, spectral_shift, synth_signalset, SynthConfig, EMG_BAND_HZ, MMG_BAND_HZ};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Modality {
    Emg,
    Mmg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelInfo {
    pub id: usize,
    pub modality: Modality,
}

/// The paired layout used throughout: ids `0..L` are EMG, `L..2L` are MMG.
pub fn paired_layout(per_modality: usize) -> Vec<ChannelInfo> {
    (0..2 * per_modality)
        .map(|id| ChannelInfo {
            id,
            modality: if id < per_modality {
                Modality::Emg
            } else {
                Modality::Mmg
            },
        })
        .collect()
}

fn validate_layout(channels: &[ChannelInfo]) -> Result<()> {
    if channels.is_empty() {
        return Err(Error::ChannelMismatch("layout has no channels".into()));
    }
    for (i, c) in channels.iter().enumerate() {
        if c.id != i {
            return Err(Error::ChannelMismatch(format!(
                "channel ids must be contiguous from 0, found {} at position {}",
                c.id, i
            )));
        }
    }
    let emg = channels
        .iter()
        .filter(|c| c.modality == Modality::Emg)
        .count();
    if 2 * emg != channels.len() {
        return Err(Error::ChannelMismatch(format!(
            "expected equal EMG and MMG counts, got {} EMG of {}",
            emg,
            channels.len()
        )));
    }
    Ok(())
}

/// One trial: a fixed-rate multichannel window with its class label.
///
/// Samples are stored channel-major; `channel(l)` is the full series of
/// channel `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    samples: Vec<Vec<f64>>,
    sampling_rate: f64,
    label: usize,
    channels: Vec<ChannelInfo>,
}

impl Recording {
    pub fn new(
        samples: Vec<Vec<f64>>,
        sampling_rate: f64,
        label: usize,
        channels: Vec<ChannelInfo>,
    ) -> Result<Self> {
        validate_layout(&channels)?;
        if samples.len() != channels.len() {
            return Err(Error::ChannelMismatch(format!(
                "{} sample series for {} channels",
                samples.len(),
                channels.len()
            )));
        }
        let n = samples[0].len();
        if n == 0 {
            return Err(Error::InvalidArgument("recording has no samples".into()));
        }
        if samples.iter().any(|s| s.len() != n) {
            return Err(Error::ChannelMismatch(
                "channels have different lengths".into(),
            ));
        }
        if !(sampling_rate.is_finite() && sampling_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sampling rate {sampling_rate}"
            )));
        }
        for (l, s) in samples.iter().enumerate() {
            if let Some(i) = s.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "sample {i} of channel {l} is {}",
                    s[i]
                )));
            }
        }
        Ok(Recording {
            samples,
            sampling_rate,
            label,
            channels,
        })
    }

    pub fn channel(&self, id: usize) -> &[f64] {
        &self.samples[id]
    }

    pub fn channel_series(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[ChannelInfo] {
        &self.channels
    }

    pub fn n_samples(&self) -> usize {
        self.samples[0].len()
    }

    pub fn sampling_rate(&self) -> f64 {
        self.sampling_rate
    }

    pub fn label(&self) -> usize {
        self.label
    }

    /// Copy of this recording with channel `id` replaced.
    pub fn with_channel(&self, id: usize, series: Vec<f64>) -> Result<Self> {
        if id >= self.channel_count() {
            return Err(Error::MissingChannel(id));
        }
        if series.len() != self.n_samples() {
            return Err(Error::DimensionMismatch {
                expected: self.n_samples(),
                actual: series.len(),
            });
        }
        let mut samples = self.samples.clone();
        samples[id] = series;
        Recording::new(samples, self.sampling_rate, self.label, self.channels.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalSetMeta {
    pub name: String,
    pub seed: Option<u64>,
    /// Set once any recording has passed through noise injection.
    pub contaminated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSet {
    recordings: Vec<Recording>,
    class_count: usize,
    class_names: Vec<String>,
    meta: SignalSetMeta,
}

impl SignalSet {
    pub fn new(
        recordings: Vec<Recording>,
        class_names: Vec<String>,
        meta: SignalSetMeta,
    ) -> Result<Self> {
        let first = recordings.first().ok_or(Error::EmptySignalSet)?;
        let class_count = class_names.len();
        if class_count < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 classes, got {class_count}"
            )));
        }
        let mut seen = vec![false; class_count];
        for (i, r) in recordings.iter().enumerate() {
            if r.sampling_rate != first.sampling_rate {
                return Err(Error::InvalidArgument(format!(
                    "recording {i} has sampling rate {} but the set uses {}",
                    r.sampling_rate, first.sampling_rate
                )));
            }
            if r.channels != first.channels {
                return Err(Error::ChannelMismatch(format!(
                    "recording {i} has a different channel layout"
                )));
            }
            if r.label >= class_count {
                return Err(Error::InvalidArgument(format!(
                    "recording {i} has label {} but only {class_count} classes",
                    r.label
                )));
            }
            seen[r.label] = true;
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::ClassTooSmall {
                class: c,
                count: 0,
                needed: 1,
            });
        }
        Ok(SignalSet {
            recordings,
            class_count,
            class_names,
            meta,
        })
    }

    pub fn recordings(&self) -> &[Recording] {
        &self.recordings
    }

    pub fn len(&self) -> usize {
        self.recordings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recordings.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn channel_count(&self) -> usize {
        self.recordings[0].channel_count()
    }

    pub fn channels(&self) -> &[ChannelInfo] {
        self.recordings[0].channels()
    }

    pub fn sampling_rate(&self) -> f64 {
        self.recordings[0].sampling_rate()
    }

    pub fn meta(&self) -> &SignalSetMeta {
        &self.meta
    }

    pub fn labels(&self) -> Vec<usize> {
        self.recordings.iter().map(Recording::label).collect()
    }

    /// Same set with different recordings (e.g. after contamination).
    pub fn with_recordings(&self, recordings: Vec<Recording>, meta: SignalSetMeta) -> Result<Self> {
        SignalSet::new(recordings, self.class_names.clone(), meta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(label: usize, layout: Vec<ChannelInfo>) -> Recording {
        let n = layout.len();
        Recording::new(vec![vec![0.5; 4]; n], 1000.0, label, layout).unwrap()
    }

    #[test]
    fn layout_pairs_modalities() {
        let l = paired_layout(4);
        assert_eq!(l.len(), 8);
        assert!(l[..4].iter().all(|c| c.modality == Modality::Emg));
        assert!(l[4..].iter().all(|c| c.modality == Modality::Mmg));
        assert!(validate_layout(&l).is_ok());
    }

    #[test]
    fn unbalanced_layout_rejected() {
        let mut l = paired_layout(2);
        l[2].modality = Modality::Emg;
        assert!(matches!(validate_layout(&l), Err(Error::ChannelMismatch(_))));
    }

    #[test]
    fn recording_rejects_nan() {
        let mut s = vec![vec![0.0; 4]; 2];
        s[1][2] = f64::NAN;
        let err = Recording::new(s, 1000.0, 0, paired_layout(1)).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn signalset_requires_every_class() {
        let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let meta = SignalSetMeta {
            name: "t".into(),
            seed: None,
            contaminated: false,
        };
        let recs = vec![rec(0, paired_layout(1)), rec(1, paired_layout(1))];
        assert!(SignalSet::new(recs, names, meta.clone()).is_err());
        let err = SignalSet::new(vec![], vec!["a".into(), "b".into()], meta).unwrap_err();
        assert_eq!(err.to_string(), "empty signalset");
    }

    #[test]
    fn with_channel_replaces_only_target() {
        let r = rec(0, paired_layout(2));
        let r2 = r.with_channel(3, vec![1.0; 4]).unwrap();
        assert_eq!(r2.channel(3), &[1.0; 4]);
        for l in 0..3 {
            assert_eq!(r2.channel(l), r.channel(l));
        }
    }
}
