//! Per-channel DWT statistics and channel-subset concatenation.

mod dwt;

pub use dwt::{dwt_db6, idwt_db6, Decomposition, DB6_LOW};

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::signalset::{Recording, SignalSet};
use crate::{Error, Result};

/// Decomposition depth used for every channel.
pub const LEVELS: usize = 3;

/// Features per channel: MAV and SSC for each of the `LEVELS + 1` subbands.
pub const fn channel_dim(levels: usize) -> usize {
    2 * (levels + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub channel_id: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcatFeature {
    /// Ascending channel ids.
    pub subset: Vec<usize>,
    pub values: Vec<f64>,
}

/// Mean absolute value.
pub fn mav(coeffs: &[f64]) -> Result<f64> {
    if coeffs.is_empty() {
        return Err(Error::InvalidArgument("MAV of an empty vector".into()));
    }
    Ok(coeffs.iter().map(|v| v.abs()).sum::<f64>() / coeffs.len() as f64)
}

/// Slope sign changes: interior points where the slope flips strictly.
pub fn ssc(coeffs: &[f64]) -> Result<f64> {
    if coeffs.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "SSC needs at least 3 values, got {}",
            coeffs.len()
        )));
    }
    Ok(coeffs
        .windows(3)
        .filter(|w| (w[1] - w[0]) * (w[2] - w[1]) < 0.0)
        .count() as f64)
}

/// `[MAV(A3), SSC(A3), MAV(D3), SSC(D3), MAV(D2), SSC(D2), MAV(D1), SSC(D1)]`.
pub fn extract_series(series: &[f64], levels: usize) -> Result<Vec<f64>> {
    let dec = dwt_db6(series, levels)?;
    let mut out = Vec::with_capacity(channel_dim(levels));
    for band in &dec.bands {
        out.push(mav(band)?);
        out.push(ssc(band)?);
    }
    Ok(out)
}

pub fn extract_channel(rec: &Recording, channel_id: usize) -> Result<FeatureVector> {
    if channel_id >= rec.channel_count() {
        return Err(Error::MissingChannel(channel_id));
    }
    Ok(FeatureVector {
        channel_id,
        values: extract_series(rec.channel(channel_id), LEVELS)?,
    })
}

/// Feature vectors of every channel of one trial, indexed by channel id.
pub fn extract_recording(rec: &Recording) -> Result<Vec<FeatureVector>> {
    (0..rec.channel_count())
        .map(|l| extract_channel(rec, l))
        .collect()
}

/// Concatenates the vectors of `subset` in ascending channel order,
/// whatever order the ids arrive in.
pub fn concat(features: &[FeatureVector], subset: &[usize]) -> Result<ConcatFeature> {
    let mut ids = subset.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mut values = Vec::new();
    for &id in &ids {
        let fv = features
            .iter()
            .find(|f| f.channel_id == id)
            .ok_or(Error::MissingChannel(id))?;
        values.extend_from_slice(&fv.values);
    }
    Ok(ConcatFeature { subset: ids, values })
}

/// Features of a whole signalset, one row of per-channel vectors per trial.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub rows: Vec<Vec<FeatureVector>>,
    pub labels: Vec<usize>,
    pub class_count: usize,
    pub channel_count: usize,
    /// Inherited from the source signalset.
    pub contaminated: bool,
}

impl FeatureTable {
    pub fn from_signalset(set: &SignalSet) -> Result<Self> {
        let rows = set
            .recordings()
            .par_iter()
            .map(extract_recording)
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureTable {
            rows,
            labels: set.labels(),
            class_count: set.class_count(),
            channel_count: set.channel_count(),
            contaminated: set.meta().contaminated,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> FeatureTable {
        FeatureTable {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
            channel_count: self.channel_count,
            contaminated: self.contaminated,
        }
    }

    /// Matrix of channel `l`'s feature vectors, one row per trial.
    pub fn channel_matrix(&self, l: usize) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r[l].values.clone()).collect()
    }

    /// Concatenated design matrix for a channel subset.
    pub fn design_matrix(&self, subset: &[usize]) -> Result<Vec<Vec<f64>>> {
        self.rows
            .iter()
            .map(|r| concat(r, subset).map(|c| c.values))
            .collect()
    }

    /// CSV: `label,c0_f0,...` with channels ascending.
    pub fn to_csv(&self) -> String {
        let dim = self.rows.first().map_or(0, |r| r[0].values.len());
        let mut out = String::from("label");
        for l in 0..self.channel_count {
            for f in 0..dim {
                let _ = write!(out, ",c{l}_f{f}");
            }
        }
        out.push('\n');
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let _ = write!(out, "{label}");
            for fv in row {
                for v in &fv.values {
                    let _ = write!(out, ",{v:?}");
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signalset::{paired_layout, synth_signalset, SynthConfig};

    #[test]
    fn mav_examples() {
        assert_eq!(mav(&[1.0, -1.0, 1.0, -1.0]).unwrap(), 1.0);
        assert_eq!(mav(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(mav(&[3.0, -4.0]).unwrap(), 3.5);
        assert!(mav(&[]).is_err());
    }

    #[test]
    fn ssc_examples() {
        assert_eq!(ssc(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 0.0);
        assert_eq!(ssc(&[1.0, 2.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(ssc(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(ssc(&[1.0, 2.0]).is_err());
    }

    fn synth_trial() -> Recording {
        let mut cfg = SynthConfig::desk(5);
        cfg.trials_per_class = 1;
        synth_signalset(&cfg).unwrap().recordings()[0].clone()
    }

    #[test]
    fn zero_channel_features() {
        let rec = Recording::new(vec![vec![0.0; 1000]; 2], 1000.0, 0, paired_layout(1)).unwrap();
        let fv = extract_channel(&rec, 1).unwrap();
        assert_eq!(fv.values, vec![0.0; 8]);
    }

    #[test]
    fn extraction_matches_manual_composition() {
        let rec = synth_trial();
        let fv = extract_channel(&rec, 0).unwrap();
        assert_eq!(fv.values.len(), channel_dim(LEVELS));
        let dec = dwt_db6(rec.channel(0), 3).unwrap();
        let a3 = dec.approximation();
        let expected = vec![
            mav(a3).unwrap(),
            ssc(a3).unwrap(),
            mav(dec.detail(3)).unwrap(),
            ssc(dec.detail(3)).unwrap(),
            mav(dec.detail(2)).unwrap(),
            ssc(dec.detail(2)).unwrap(),
            mav(dec.detail(1)).unwrap(),
            ssc(dec.detail(1)).unwrap(),
        ];
        assert_eq!(fv.values, expected);
        assert_eq!(extract_channel(&rec.clone(), 0).unwrap(), fv);
        assert!(extract_channel(&rec, 8).is_err());
    }

    #[test]
    fn concat_rules() {
        let rec = synth_trial();
        let fs = extract_recording(&rec).unwrap();
        let single = concat(&fs, &[3]).unwrap();
        assert_eq!(single.values, fs[3].values);
        let pair = concat(&fs, &[0, 1]).unwrap();
        assert_eq!(pair.values.len(), 16);
        assert_eq!(&pair.values[..8], &fs[0].values[..]);
        assert_eq!(concat(&fs, &[1, 0]).unwrap(), pair);
        assert!(matches!(concat(&fs[..2], &[5]), Err(Error::MissingChannel(5))));
    }

    #[test]
    fn table_csv_shape() {
        let mut cfg = SynthConfig::desk(6);
        cfg.trials_per_class = 2;
        let set = synth_signalset(&cfg).unwrap();
        let table = FeatureTable::from_signalset(&set).unwrap();
        let csv = table.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 17);
        assert!(lines.iter().all(|l| l.split(',').count() == 1 + 8 * 8));
    }
}
