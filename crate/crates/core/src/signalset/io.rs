//! Signalset directory format: `manifest.json` plus one CSV per trial.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ChannelInfo, Modality, Recording, SignalSet, SignalSetMeta};
use crate::{Error, Result};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestChannel {
    pub id: usize,
    pub modality: Modality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestTrial {
    pub file: String,
    pub class_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub sampling_rate_hz: f64,
    pub channels: Vec<ManifestChannel>,
    pub classes: Vec<String>,
    pub trials: Vec<ManifestTrial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub contaminated: bool,
}

fn trial_file_name(i: usize) -> String {
    format!("trial_{i:05}.csv")
}

/// Writes `set` under `dir`, creating the directory if needed.
///
/// Every sample is checked before the first byte is written. Values are
/// printed in shortest round-trip form, so a reload is bit-exact.
pub fn save_signalset(set: &SignalSet, dir: &Path) -> Result<()> {
    for (i, r) in set.recordings().iter().enumerate() {
        for (l, s) in r.samples.iter().enumerate() {
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "recording {i}, channel {l}"
                )));
            }
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let channel_count = set.channel_count();
    let header: Vec<String> = (0..channel_count).map(|l| format!("c{l}")).collect();
    let header = header.join(",");
    let mut trials = Vec::with_capacity(set.len());
    for (i, r) in set.recordings().iter().enumerate() {
        let file = trial_file_name(i);
        let path = dir.join(&file);
        let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(f);
        let mut line = String::with_capacity(channel_count * 24);
        let write_err = |e| Error::io(&path, e);
        writeln!(w, "{header}").map_err(write_err)?;
        for t in 0..r.n_samples() {
            line.clear();
            for l in 0..channel_count {
                if l > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{:?}", r.samples[l][t]));
            }
            line.push('\n');
            w.write_all(line.as_bytes()).map_err(write_err)?;
        }
        w.flush().map_err(write_err)?;
        trials.push(ManifestTrial {
            file,
            class_index: r.label,
        });
    }

    let manifest = Manifest {
        name: set.meta().name.clone(),
        sampling_rate_hz: set.sampling_rate(),
        channels: set
            .channels()
            .iter()
            .map(|c| ManifestChannel {
                id: c.id,
                modality: c.modality,
            })
            .collect(),
        classes: set.class_names().to_vec(),
        trials,
        seed: set.meta().seed,
        contaminated: set.meta().contaminated,
    };
    let path = dir.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn parse_trial(path: &Path, channel_count: usize) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Malformed {
        path: path.to_path_buf(),
        reason: "empty file".into(),
    })?;
    let columns = header.split(',').count();
    if columns != channel_count {
        return Err(Error::ChannelMismatch(format!(
            "{} has {columns} columns, manifest declares {channel_count} channels",
            path.display()
        )));
    }
    let mut series = vec![Vec::new(); channel_count];
    for (row, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut n = 0;
        for (l, field) in line.split(',').enumerate() {
            if l >= channel_count {
                return Err(Error::ChannelMismatch(format!(
                    "{} row {} has more than {channel_count} values",
                    path.display(),
                    row + 1
                )));
            }
            let v: f64 = field.trim().parse().map_err(|_| Error::Malformed {
                path: path.to_path_buf(),
                reason: format!("row {}: cannot parse {field:?}", row + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "{} row {} column {l}",
                    path.display(),
                    row + 1
                )));
            }
            series[l].push(v);
            n += 1;
        }
        if n != channel_count {
            return Err(Error::ChannelMismatch(format!(
                "{} row {} has {n} values, expected {channel_count}",
                path.display(),
                row + 1
            )));
        }
    }
    Ok(series)
}

pub fn load_signalset(dir: &Path) -> Result<SignalSet> {
    let manifest_path: PathBuf = dir.join(MANIFEST);
    if !manifest_path.is_file() {
        return Err(Error::MissingManifest(manifest_path));
    }
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.trials.is_empty() {
        return Err(Error::EmptySignalSet);
    }
    let layout: Vec<ChannelInfo> = manifest
        .channels
        .iter()
        .map(|c| ChannelInfo {
            id: c.id,
            modality: c.modality,
        })
        .collect();
    let mut recordings = Vec::with_capacity(manifest.trials.len());
    for t in &manifest.trials {
        let path = dir.join(&t.file);
        let samples = parse_trial(&path, layout.len())?;
        recordings.push(Recording::new(
            samples,
            manifest.sampling_rate_hz,
            t.class_index,
            layout.clone(),
        )?);
    }
    SignalSet::new(
        recordings,
        manifest.classes,
        SignalSetMeta {
            name: manifest.name,
            seed: manifest.seed,
            contaminated: manifest.contaminated,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signalset::{paired_layout, synth_signalset, SynthConfig};

    fn small() -> SignalSet {
        synth_signalset(&SynthConfig {
            classes: 3,
            trials_per_class: 2,
            channels_per_modality: 2,
            duration_ms: 50.0,
            rate_hz: 1000.0,
            seed: 4,
        })
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let set = small();
        save_signalset(&set, dir.path()).unwrap();
        let back = load_signalset(dir.path()).unwrap();
        assert_eq!(back, set);
        let files = fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(files, set.len() + 1);
    }

    #[test]
    fn missing_manifest() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_signalset(dir.path()),
            Err(Error::MissingManifest(_))
        ));
    }

    #[test]
    fn column_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        save_signalset(&small(), dir.path()).unwrap();
        let p = dir.path().join(trial_file_name(0));
        fs::write(&p, "c0,c1,c2\n0.1,0.2,0.3\n").unwrap();
        let err = load_signalset(dir.path()).unwrap_err();
        assert!(err.to_string().contains("channel mismatch"), "{err}");
    }

    #[test]
    fn empty_trials() {
        let dir = tempfile::tempdir().unwrap();
        let m = Manifest {
            name: "x".into(),
            sampling_rate_hz: 1000.0,
            channels: vec![],
            classes: vec!["a".into(), "b".into()],
            trials: vec![],
            seed: None,
            contaminated: false,
        };
        fs::write(dir.path().join(MANIFEST), serde_json::to_string(&m).unwrap()).unwrap();
        let err = load_signalset(dir.path()).unwrap_err();
        assert_eq!(err.to_string(), "empty signalset");
    }

    #[test]
    fn non_finite_sample_in_file() {
        let dir = tempfile::tempdir().unwrap();
        save_signalset(&small(), dir.path()).unwrap();
        let p = dir.path().join(trial_file_name(1));
        fs::write(&p, "c0,c1,c2,c3\n0.1,NaN,0.3,0.4\n").unwrap();
        assert!(matches!(load_signalset(dir.path()), Err(Error::NonFinite(_))));
    }

    #[test]
    fn nan_rejected_before_writing() {
        let good = small();
        let mut recs = good.recordings().to_vec();
        recs[3] = Recording {
            samples: vec![vec![f64::NAN; 50]; 4],
            sampling_rate: 1000.0,
            label: recs[3].label,
            channels: paired_layout(2),
        };
        let bad = SignalSet {
            recordings: recs,
            class_count: good.class_count(),
            class_names: good.class_names().to_vec(),
            meta: good.meta().clone(),
        };
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        assert!(matches!(save_signalset(&bad, &out), Err(Error::NonFinite(_))));
        assert!(!out.exists());
    }

    #[test]
    fn trial_files_use_lf_and_header() {
        let dir = tempfile::tempdir().unwrap();
        save_signalset(&small(), dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join(trial_file_name(0))).unwrap();
        assert!(text.starts_with("c0,c1,c2,c3\n"));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 51);
    }
}
