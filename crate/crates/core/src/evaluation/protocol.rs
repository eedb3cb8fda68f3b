//! Repeated stratified cross-validation with randomized test-set
//! contamination.
//!
//! Each (repeat, fold) cell trains every artifact (detectors, ensembles,
//! reference models) on the clean training split only. For every SNR level
//! a fresh copy of the test split is contaminated, featurized and scored by
//! every method. Cells are independent and run in parallel; results are
//! reassembled in cell order, so the report does not depend on scheduling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{balanced_accuracy, stratified_folds};
use super::stats::{average_ranks, holm_adjust, wilcoxon_signed_rank};
use crate::contamination::{inject, plan_random_contamination};
use crate::detection::{
    mask_from_scores, score_channels, train_detectors, ChannelMask, DetectorConfig,
};
use crate::ensemble::{
    build_ensemble, member_predictions, train_do7, train_ecoc, train_full, vote_selected,
    EcocConfig, KSpec, MoveEnsemble,
};
use crate::features::{extract_recording, FeatureTable, FeatureVector};
use crate::seed::{self, tag};
use crate::signalset::SignalSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    B,
    EC,
    Or,
    Fu,
    DO,
    DO7,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::B, Method::EC, Method::Or, Method::Fu, Method::DO, Method::DO7];

    pub fn name(self) -> &'static str {
        match self {
            Method::B => "B",
            Method::EC => "EC",
            Method::Or => "Or",
            Method::Fu => "Fu",
            Method::DO => "DO",
            Method::DO7 => "DO7",
        }
    }

    /// Methods whose output depends on the K-combination ensemble.
    pub fn uses_ensemble(self) -> bool {
        matches!(self, Method::Or | Method::Fu | Method::DO)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub folds: usize,
    pub repeats: usize,
    pub snr_levels: Vec<f64>,
    pub k_specs: Vec<KSpec>,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    pub alpha: f64,
    pub detector: DetectorConfig,
    pub ecoc: EcocConfig,
}

impl ExperimentConfig {
    pub const SNR_LEVELS: [f64; 8] = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 10.0];

    /// 10 folds × 1 repeat, every method, K = 7 and the joint {2,3,5}.
    pub fn desk(master_seed: u64) -> Self {
        ExperimentConfig {
            folds: 10,
            repeats: 1,
            snr_levels: Self::SNR_LEVELS.to_vec(),
            k_specs: vec![KSpec::new([7]).unwrap(), KSpec::new([2, 3, 5]).unwrap()],
            methods: Method::ALL.to_vec(),
            master_seed,
            alpha: 0.05,
            detector: DetectorConfig::default(),
            ecoc: EcocConfig::default(),
        }
    }

    /// Desk configuration with four repeats.
    pub fn paper(master_seed: u64) -> Self {
        ExperimentConfig {
            repeats: 4,
            ..Self::desk(master_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidArgument("need at least 2 folds".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidArgument("need at least 1 repeat".into()));
        }
        if self.snr_levels.is_empty() || self.snr_levels.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("SNR levels must be finite and non-empty".into()));
        }
        if self.k_specs.is_empty() {
            return Err(Error::InvalidArgument("need at least one k spec".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("need at least one method".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }

    fn methods_sorted(&self) -> Vec<Method> {
        self.methods.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacRecord {
    pub method: Method,
    pub k_spec: KSpec,
    pub snr_db: f64,
    pub repeat: usize,
    pub fold: usize,
    pub bac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorRecord {
    pub repeat: usize,
    pub fold: usize,
    pub channel: usize,
    pub nu: f64,
    pub tuning_bac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub k_spec: KSpec,
    pub snr_db: f64,
    pub repeat: usize,
    pub fold: usize,
    pub subset: String,
    pub bac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    /// `k_spec` for method rankings; empty for K rankings.
    pub k_spec: String,
    pub snr_db: Option<f64>,
    pub method: Method,
    /// Alternative being ranked (a method or a k spec).
    pub alternative: String,
    pub avg_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueRow {
    pub family: String,
    pub a: String,
    pub b: String,
    pub n: usize,
    pub statistic: Option<f64>,
    pub median_diff: f64,
    pub p_raw: Option<f64>,
    pub p_holm: Option<f64>,
    pub reject: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub dataset: String,
    pub trials: usize,
    pub channels: usize,
    pub class_count: usize,
    pub bac: Vec<BacRecord>,
    pub detectors: Vec<DetectorRecord>,
    pub members: Vec<MemberRecord>,
    pub ranks_by_k: Vec<RankRow>,
    pub ranks_by_snr: Vec<RankRow>,
    pub pvalues: Vec<PValueRow>,
    pub pvalues_by_snr: Vec<PValueRow>,
    pub pvalues_by_k: Vec<PValueRow>,
    pub dominance_violations: Vec<String>,
}

impl ExperimentReport {
    pub fn bac_of(&self, method: Method, k_spec: &KSpec, snr_db: f64) -> Vec<f64> {
        self.bac
            .iter()
            .filter(|r| r.method == method && &r.k_spec == k_spec && r.snr_db == snr_db)
            .map(|r| r.bac)
            .collect()
    }

    pub fn mean_bac(&self, method: Method, k_spec: &KSpec, snr_db: f64) -> f64 {
        let v = self.bac_of(method, k_spec, snr_db);
        v.iter().sum::<f64>() / v.len() as f64
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

struct CellOutput {
    bac: Vec<BacRecord>,
    detectors: Vec<DetectorRecord>,
    members: Vec<MemberRecord>,
}

fn snr_key(snr: f64) -> u64 {
    snr.to_bits()
}

fn run_cell(
    set: &SignalSet,
    clean: &FeatureTable,
    train_idx: &[usize],
    test_idx: &[usize],
    repeat: usize,
    fold: usize,
    cfg: &ExperimentConfig,
) -> Result<CellOutput> {
    let methods = cfg.methods_sorted();
    let has = |m: Method| methods.contains(&m);
    let channels = clean.channel_count;
    let m = clean.class_count;
    let cell_seed = seed::derive(cfg.master_seed, &[tag::CELL, repeat as u64, fold as u64]);
    let train = clean.subset(train_idx);

    let detector = if has(Method::DO) || has(Method::DO7) {
        Some(train_detectors(&train, cell_seed, &cfg.detector)?)
    } else {
        None
    };
    let ensembles: Vec<MoveEnsemble> = if methods.iter().any(|m| m.uses_ensemble()) {
        let union = KSpec::new(cfg.k_specs.iter().flat_map(|k| k.sizes()))?;
        let full = build_ensemble(&train, &union, cell_seed)?;
        cfg.k_specs.iter().map(|k| full.restrict(k)).collect()
    } else {
        Vec::new()
    };
    let full_model = if has(Method::B) || has(Method::DO7) {
        Some(train_full(&train, cell_seed)?)
    } else {
        None
    };
    let do7 = if has(Method::DO7) {
        Some(train_do7(&train, cell_seed, full_model.clone())?)
    } else {
        None
    };
    let ecoc = if has(Method::EC) {
        Some(train_ecoc(&train, &cfg.ecoc, seed::derive(cell_seed, &[tag::ECOC]))?)
    } else {
        None
    };

    let mut out = CellOutput {
        bac: Vec::new(),
        detectors: Vec::new(),
        members: Vec::new(),
    };
    if let Some(d) = &detector {
        for l in 0..channels {
            out.detectors.push(DetectorRecord {
                repeat,
                fold,
                channel: l,
                nu: d.nu_per_channel[l],
                tuning_bac: d.tuning_balanced_accuracy[l],
            });
        }
    }

    let truth: Vec<usize> = test_idx.iter().map(|&i| clean.labels[i]).collect();
    for &snr in &cfg.snr_levels {
        let plans = plan_random_contamination(
            test_idx.len(),
            channels,
            snr,
            seed::derive(cell_seed, &[tag::CONTAMINATION, snr_key(snr)]),
        )?;
        let test_features: Vec<Vec<FeatureVector>> = test_idx
            .iter()
            .zip(&plans)
            .map(|(&i, plan)| extract_recording(&inject(&set.recordings()[i], plan)?))
            .collect::<Result<_>>()?;

        let scores = match &detector {
            Some(d) => Some(
                test_features
                    .iter()
                    .map(|f| score_channels(d, f))
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        let masks: Option<Vec<ChannelMask>> = scores
            .as_ref()
            .map(|s| s.iter().map(|t| mask_from_scores(t)).collect());

        let mut fixed: Vec<(Method, f64)> = Vec::new();
        if let Some(b) = &full_model {
            if has(Method::B) {
                let p = test_features.iter().map(|f| b.predict(f)).collect::<Result<Vec<_>>>()?;
                fixed.push((Method::B, balanced_accuracy(&truth, &p, m)?));
            }
        }
        if let Some(e) = &ecoc {
            let p = test_features.iter().map(|f| e.predict(f)).collect::<Result<Vec<_>>>()?;
            fixed.push((Method::EC, balanced_accuracy(&truth, &p, m)?));
        }
        if let (Some(d7), Some(sc)) = (&do7, &scores) {
            let p = test_features
                .iter()
                .zip(sc)
                .map(|(f, s)| d7.predict_with_scores(f, s))
                .collect::<Result<Vec<_>>>()?;
            fixed.push((Method::DO7, balanced_accuracy(&truth, &p, m)?));
        }

        for (k_spec, ens) in cfg.k_specs.iter().zip(
            ensembles
                .iter()
                .map(Some)
                .chain(std::iter::repeat(None)),
        ) {
            let mut row: Vec<(Method, f64)> = fixed.clone();
            if let Some(ens) = ens {
                let preds = test_features
                    .iter()
                    .map(|f| member_predictions(ens, f))
                    .collect::<Result<Vec<_>>>()?;
                if has(Method::Or) {
                    let p: Vec<usize> = preds
                        .iter()
                        .zip(&truth)
                        .map(|(ps, &t)| if ps.contains(&t) { t } else { (t + 1) % m })
                        .collect();
                    row.push((Method::Or, balanced_accuracy(&truth, &p, m)?));
                }
                if has(Method::Fu) {
                    let all = ChannelMask::all_clean(channels);
                    let p: Vec<usize> = preds.iter().map(|ps| vote_selected(ens, ps, &all)).collect();
                    row.push((Method::Fu, balanced_accuracy(&truth, &p, m)?));
                }
                if let (true, Some(masks)) = (has(Method::DO), &masks) {
                    let p: Vec<usize> = preds
                        .iter()
                        .zip(masks)
                        .map(|(ps, mask)| vote_selected(ens, ps, mask))
                        .collect();
                    row.push((Method::DO, balanced_accuracy(&truth, &p, m)?));
                }
                for (j, member) in ens.members.iter().enumerate() {
                    let p: Vec<usize> = preds.iter().map(|ps| ps[j]).collect();
                    out.members.push(MemberRecord {
                        k_spec: k_spec.clone(),
                        snr_db: snr,
                        repeat,
                        fold,
                        subset: member.subset.to_string(),
                        bac: balanced_accuracy(&truth, &p, m)?,
                    });
                }
            }
            row.sort_by_key(|(method, _)| *method);
            for (method, bac) in row {
                out.bac.push(BacRecord {
                    method,
                    k_spec: k_spec.clone(),
                    snr_db: snr,
                    repeat,
                    fold,
                    bac,
                });
            }
        }
    }
    Ok(out)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Pairwise tests over `series` (label, paired sample), Holm-corrected
/// within the family.
fn pairwise(family: &str, series: &[(String, Vec<f64>)], alpha: f64) -> Result<Vec<PValueRow>> {
    let mut rows = Vec::new();
    for i in 0..series.len() {
        for j in (i + 1)..series.len() {
            let (a, xa) = &series[i];
            let (b, xb) = &series[j];
            let diffs: Vec<f64> = xa.iter().zip(xb).map(|(x, y)| x - y).collect();
            let mut row = PValueRow {
                family: family.to_string(),
                a: a.clone(),
                b: b.clone(),
                n: 0,
                statistic: None,
                median_diff: median(diffs),
                p_raw: None,
                p_holm: None,
                reject: false,
                note: String::new(),
            };
            match wilcoxon_signed_rank(xa, xb) {
                Ok(w) => {
                    row.n = w.n;
                    row.statistic = Some(w.statistic);
                    row.p_raw = Some(w.p_value);
                    row.note = if w.all_zero {
                        "all_zero".into()
                    } else if w.many_zeros() {
                        "zeros_over_20pct".into()
                    } else {
                        "ok".into()
                    };
                }
                Err(Error::TooFewPairs(n)) => {
                    row.n = n;
                    row.note = "too_few_pairs".into();
                }
                Err(e) => return Err(e),
            }
            rows.push(row);
        }
    }
    let tested: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].p_raw.is_some()).collect();
    let raw: Vec<f64> = tested.iter().map(|&i| rows[i].p_raw.unwrap()).collect();
    let holm = holm_adjust(&raw, alpha)?;
    for (k, &i) in tested.iter().enumerate() {
        rows[i].p_holm = Some(holm.adjusted[k]);
        rows[i].reject = holm.reject[k];
    }
    Ok(rows)
}

type CellKey = (u64, usize, usize);

fn assemble(
    set: &SignalSet,
    cfg: &ExperimentConfig,
    bac: Vec<BacRecord>,
    detectors: Vec<DetectorRecord>,
    members: Vec<MemberRecord>,
) -> Result<ExperimentReport> {
    let methods = cfg.methods_sorted();
    // (method, k_spec) -> ordered (snr, repeat, fold) -> bac
    let mut table: BTreeMap<(Method, usize), BTreeMap<CellKey, f64>> = BTreeMap::new();
    let snr_pos = |s: f64| cfg.snr_levels.iter().position(|&x| x == s).unwrap() as u64;
    for r in &bac {
        let k = cfg.k_specs.iter().position(|k| k == &r.k_spec).unwrap();
        table
            .entry((r.method, k))
            .or_default()
            .insert((snr_pos(r.snr_db), r.repeat, r.fold), r.bac);
    }
    let series = |method: Method, k: usize, snr: Option<f64>| -> Vec<f64> {
        table
            .get(&(method, k))
            .map(|cells| {
                cells
                    .iter()
                    .filter(|((s, _, _), _)| snr.is_none_or(|v| *s == snr_pos(v)))
                    .map(|(_, &v)| v)
                    .collect()
            })
            .unwrap_or_default()
    };

    // K comparison per ensemble method, groups = (snr, repeat, fold)
    let mut ranks_by_k = Vec::new();
    let mut pvalues_by_k = Vec::new();
    for &method in methods.iter().filter(|m| m.uses_ensemble()) {
        let cols: Vec<Vec<f64>> = (0..cfg.k_specs.len()).map(|k| series(method, k, None)).collect();
        let groups: Vec<Vec<f64>> = (0..cols[0].len())
            .map(|g| cols.iter().map(|c| c[g]).collect())
            .collect();
        let ranks = average_ranks(&groups, true)?;
        for (k, r) in ranks.into_iter().enumerate() {
            ranks_by_k.push(RankRow {
                k_spec: String::new(),
                snr_db: None,
                method,
                alternative: cfg.k_specs[k].to_string(),
                avg_rank: r,
            });
        }
        let labelled: Vec<(String, Vec<f64>)> = cfg
            .k_specs
            .iter()
            .zip(cols)
            .map(|(k, c)| (k.to_string(), c))
            .collect();
        pvalues_by_k.extend(pairwise(&format!("k:{method}"), &labelled, cfg.alpha)?);
    }

    // Method comparison per k spec and SNR, groups = (repeat, fold)
    let mut ranks_by_snr = Vec::new();
    let mut pvalues = Vec::new();
    let mut pvalues_by_snr = Vec::new();
    for (k, k_spec) in cfg.k_specs.iter().enumerate() {
        for &snr in &cfg.snr_levels {
            let cols: Vec<Vec<f64>> = methods.iter().map(|&m| series(m, k, Some(snr))).collect();
            let groups: Vec<Vec<f64>> = (0..cols[0].len())
                .map(|g| cols.iter().map(|c| c[g]).collect())
                .collect();
            let ranks = average_ranks(&groups, true)?;
            for (&method, r) in methods.iter().zip(ranks) {
                ranks_by_snr.push(RankRow {
                    k_spec: k_spec.to_string(),
                    snr_db: Some(snr),
                    method,
                    alternative: method.to_string(),
                    avg_rank: r,
                });
            }
            let labelled: Vec<(String, Vec<f64>)> = methods
                .iter()
                .zip(cols)
                .map(|(m, c)| (m.to_string(), c))
                .collect();
            pvalues_by_snr.extend(pairwise(
                &format!("methods:{k_spec}@{snr}"),
                &labelled,
                cfg.alpha,
            )?);
        }
        let labelled: Vec<(String, Vec<f64>)> = methods
            .iter()
            .map(|&m| (m.to_string(), series(m, k, None)))
            .collect();
        pvalues.extend(pairwise(&format!("methods:{k_spec}"), &labelled, cfg.alpha)?);
    }

    // Or must dominate every other method cell by cell
    let mut dominance_violations = Vec::new();
    if methods.contains(&Method::Or) {
        for (k, k_spec) in cfg.k_specs.iter().enumerate() {
            let oracle = &table[&(Method::Or, k)];
            for &method in methods.iter().filter(|&&m| m != Method::Or) {
                for (cell, &v) in &table[&(method, k)] {
                    if v > oracle[cell] {
                        dominance_violations.push(format!(
                            "k={k_spec} snr={} repeat={} fold={}: {method} {v} > Or {}",
                            cfg.snr_levels[cell.0 as usize], cell.1, cell.2, oracle[cell]
                        ));
                    }
                }
            }
        }
    }

    Ok(ExperimentReport {
        config: cfg.clone(),
        dataset: set.meta().name.clone(),
        trials: set.len(),
        channels: set.channel_count(),
        class_count: set.class_count(),
        bac,
        detectors,
        members,
        ranks_by_k,
        ranks_by_snr,
        pvalues,
        pvalues_by_snr,
        pvalues_by_k,
        dominance_violations,
    })
}

/// Runs the full protocol on a clean signalset.
pub fn run_experiment(set: &SignalSet, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if set.meta().contaminated {
        return Err(Error::ContaminatedTraining);
    }
    let channels = set.channel_count();
    if let Some(k) = cfg.k_specs.iter().find(|k| k.largest() > channels) {
        return Err(Error::InvalidArgument(format!(
            "k spec {k} exceeds {channels} channels"
        )));
    }
    let clean = FeatureTable::from_signalset(set)?;
    let folds = stratified_folds(set, cfg.folds, cfg.repeats, cfg.master_seed)?;
    let cells: Vec<(usize, usize)> = (0..cfg.repeats)
        .flat_map(|r| (0..cfg.folds).map(move |f| (r, f)))
        .collect();
    let outputs = cells
        .par_iter()
        .map(|&(r, f)| {
            run_cell(set, &clean, &folds.train(r, f), folds.test(r, f), r, f, cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut bac = Vec::new();
    let mut detectors = Vec::new();
    let mut members = Vec::new();
    for o in outputs {
        bac.extend(o.bac);
        detectors.extend(o.detectors);
        members.extend(o.members);
    }
    assemble(set, cfg, bac, detectors, members)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("do7".parse::<Method>().unwrap(), Method::DO7);
        assert!("XX".parse::<Method>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::desk(1);
        assert!(cfg.validate().is_ok());
        cfg.folds = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::desk(1);
        cfg.alpha = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::desk(1);
        cfg.snr_levels = vec![f64::INFINITY];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn pairwise_handles_ties_and_short_samples() {
        let s = vec![
            ("a".to_string(), vec![0.5; 6]),
            ("b".to_string(), vec![0.5; 6]),
            ("c".to_string(), vec![0.1, 0.2, 0.3, 0.4, 0.45, 0.49]),
        ];
        let rows = pairwise("t", &s, 0.05).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].note, "all_zero");
        assert_eq!(rows[0].p_raw, Some(1.0));
        assert!(rows[1].p_holm.unwrap() >= rows[1].p_raw.unwrap());
        let short = vec![("a".to_string(), vec![0.1, 0.2]), ("b".to_string(), vec![0.3, 0.1])];
        let rows = pairwise("t", &short, 0.05).unwrap();
        assert_eq!(rows[0].note, "too_few_pairs");
        assert!(rows[0].p_holm.is_none());
    }
}
