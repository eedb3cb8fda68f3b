use std::collections::BTreeSet;
use std::fs;

use myoselect::contamination::{inject, ContaminationPlan, NoiseKind};
use myoselect::detection::{detect, train_detectors, DetectorConfig, FeatureBounds};
use myoselect::ensemble::{build_ensemble, predict_fu, train_full};
use myoselect::evaluation::{
    balanced_accuracy, emit_report, run_experiment, stratified_folds, stratified_partition, ExperimentConfig,
    ExperimentReport, Method,
};
use myoselect::features::{extract_recording, FeatureTable};
use myoselect::learners::score_ocsvm;
use myoselect::seed;
use myoselect::signalset::{synth_signalset, SynthConfig};

fn held_out_third(s: u64) -> (FeatureTable, FeatureTable) {
    let set = synth_signalset(&SynthConfig::desk(s)).unwrap();
    let table = FeatureTable::from_signalset(&set).unwrap();
    let parts = stratified_partition(&table.labels, table.class_count, 3, s).unwrap();
    let test = parts[0].clone();
    let train: Vec<usize> = parts[1..].concat();
    (table.subset(&train), table.subset(&test))
}

#[test]
fn all_channel_forest_and_full_committee_on_clean_data() {
    let (train, test) = held_out_third(3);
    let full = train_full(&train, 3).unwrap();
    let b: Vec<usize> = test.rows.iter().map(|r| full.predict(r).unwrap()).collect();
    let bac_b = balanced_accuracy(&test.labels, &b, 8).unwrap();
    assert!(bac_b > 0.8, "B {bac_b}");

    let ens = build_ensemble(&train, &"2,3,5".parse().unwrap(), 3).unwrap();
    let fu: Vec<usize> = test.rows.iter().map(|r| predict_fu(&ens, r).unwrap()).collect();
    let bac_fu = balanced_accuracy(&test.labels, &fu, 8).unwrap();
    assert!((bac_fu - bac_b).abs() <= 0.05, "Fu {bac_fu} vs B {bac_b}");
}

#[test]
fn detector_quality() {
    let set = synth_signalset(&SynthConfig::desk(1)).unwrap();
    let table = FeatureTable::from_signalset(&set).unwrap();
    let folds = stratified_folds(&set, 10, 1, 1).unwrap();
    let mut rng = seed::rng(99);
    let (mut tp, mut targets, mut tn, mut outliers) = (vec![0usize; 8], 0usize, vec![0usize; 8], 0usize);
    let (mut hit, mut affected) = (0usize, 0usize);
    for fold in 0..3 {
        let train = table.subset(&folds.train(0, fold));
        let test = folds.test(0, fold).to_vec();
        let det = train_detectors(&train, fold as u64, &DetectorConfig::default()).unwrap();
        targets += test.len();
        outliers += test.len();
        for l in 0..8 {
            let box_ = FeatureBounds::of(&train.channel_matrix(l)).inflated(0.2);
            for o in box_.sample_uniform(test.len(), &mut rng) {
                if !score_ocsvm(&det.detectors[l], &det.scalers[l].apply(&o)).unwrap().is_target {
                    tn[l] += 1;
                }
            }
            for &i in &test {
                let v = det.scalers[l].apply(&table.rows[i][l].values);
                if score_ocsvm(&det.detectors[l], &v).unwrap().is_target {
                    tp[l] += 1;
                }
            }
        }
        for &i in &test {
            let plan = ContaminationPlan {
                kind: NoiseKind::Gaussian,
                snr_db: 0.0,
                channels: BTreeSet::from([(i % 8), (i + 3) % 8]),
                seed: i as u64,
            };
            let dirty = inject(&set.recordings()[i], &plan).unwrap();
            let mask = detect(&det, &extract_recording(&dirty).unwrap()).unwrap();
            for &c in &plan.channels {
                affected += 1;
                if !mask.clean[c] {
                    hit += 1;
                }
            }
        }
    }
    for l in 0..8 {
        let ba = 0.5 * (tp[l] as f64 / targets as f64 + tn[l] as f64 / outliers as f64);
        assert!(ba >= 0.9, "channel {l}: {ba}");
    }
    let sensitivity = hit as f64 / affected as f64;
    assert!(sensitivity >= 0.9, "{sensitivity}");
}

fn small_report() -> ExperimentReport {
    let mut sc = SynthConfig::desk(4);
    sc.trials_per_class = 10;
    let set = synth_signalset(&sc).unwrap();
    let mut cfg = ExperimentConfig::desk(4);
    cfg.folds = 5;
    cfg.snr_levels = vec![0.0, 10.0];
    cfg.k_specs = vec!["7".parse().unwrap(), "2,3,5".parse().unwrap()];
    run_experiment(&set, &cfg).unwrap()
}

#[test]
fn report_files_and_reemission() {
    let report = small_report();
    let m = Method::ALL.len();
    assert_eq!(report.bac.len(), m * 2 * 2 * 5);
    assert_eq!(report.ranks_by_snr.len(), 2 * 2 * m);
    let families: BTreeSet<&str> = report.pvalues.iter().map(|r| r.family.as_str()).collect();
    assert_eq!(families.len(), 2);
    for f in families {
        assert_eq!(report.pvalues.iter().filter(|r| r.family == f).count(), m * (m - 1) / 2);
    }

    let first = tempfile::tempdir().unwrap();
    let files = emit_report(&report, first.path()).unwrap();
    let bac_csv = fs::read_to_string(first.path().join("bac_raw.csv")).unwrap();
    assert!(bac_csv.starts_with("method,k_spec,snr_db,repeat,fold,bac\n"));
    assert_eq!(bac_csv.lines().count(), 1 + report.bac.len());
    let snr_csv = fs::read_to_string(first.path().join("ranks_by_snr.csv")).unwrap();
    assert_eq!(snr_csv.lines().count(), 1 + 2 * 2 * m);

    let json = fs::read_to_string(first.path().join("report.json")).unwrap();
    let again = ExperimentReport::from_json(&json).unwrap();
    let second = tempfile::tempdir().unwrap();
    let files2 = emit_report(&again, second.path()).unwrap();
    assert_eq!(files.len(), files2.len());
    for f in &files {
        let name = f.file_name().unwrap();
        assert_eq!(fs::read(f).unwrap(), fs::read(second.path().join(name)).unwrap(), "{name:?}");
    }
}
