use std::collections::HashSet;

use cogbridge::datamodel::{split_fingerprint, Corpus, SignalType, Tense};
use cogbridge::harness::{
    featsel_compare, fit_fold, mask_eval, prepare_folds, run_attentive, run_cv, run_task,
    selection_scores, task_targets, Classifier, ExperimentConfig, FEATSEL_CLASSIFIERS,
};
use cogbridge::selection::Method;
use cogbridge::synth::{generate, resources, PlantSpec};
use cogbridge::tasks::TaskName;

fn quick(task: TaskName, signal: SignalType, seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(task, signal, seed);
    c.train.max_epochs = 2;
    c.k_folds = 3;
    c
}

fn corpus(d: usize, m: usize, seed: u64) -> Corpus {
    generate(&PlantSpec::new(d, 1, 2.0, m, seed))
        .unwrap()
        .corpus
}

#[test]
fn seven_hundred_sentences_give_five_folds_of_140() {
    let c = corpus(8, 700, 1);
    let mut cfg = ExperimentConfig::new(TaskName::SenLen, SignalType::Eeg, 3);
    cfg.train.max_epochs = 1;
    let targets = task_targets(&cfg, &c, &resources()).unwrap();
    let folds = prepare_folds(&cfg, &c, &targets).unwrap();
    let out = run_attentive(&cfg, &folds).unwrap();
    assert_eq!(out.folds.len(), 5);
    for r in &out.folds {
        assert_eq!(r.n_test, 140);
        assert_eq!(r.n_train, 560);
        let s: f64 = r.mean_alpha.as_ref().unwrap().iter().sum();
        assert!((s - 1.0).abs() < 1e-9);
    }
    let total: f64 = out.attention.unwrap().values.iter().sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn normalization_is_fitted_on_training_sentences_only() {
    let c = corpus(17, 60, 2);
    let cfg = quick(TaskName::WordLen, SignalType::Eye, 4);
    let targets = task_targets(&cfg, &c, &resources()).unwrap();
    for fd in prepare_folds(&cfg, &c, &targets).unwrap() {
        let train: HashSet<&str> = fd
            .dataset
            .items
            .iter()
            .filter(|it| it.fold != fd.fold)
            .map(|it| it.sentence_id.as_str())
            .collect();
        assert_eq!(
            fd.norm_fingerprint,
            split_fingerprint(train.iter().copied())
        );
        for &i in &fd.test {
            assert!(!train.contains(fd.dataset.items[i].sentence_id.as_str()));
        }
    }
}

#[test]
fn identical_sentences_share_one_attention_vector() {
    let mut c = corpus(8, 40, 3);
    let template = c.records[0].clone();
    for (i, r) in c.records.iter_mut().enumerate() {
        let id = r.id.clone();
        *r = template.clone();
        r.id = id;
        r.annotations.tense = Some([Tense::Present, Tense::Past, Tense::Future][i % 3]);
    }
    let cfg = quick(TaskName::Tense, SignalType::Eeg, 5);
    let targets = task_targets(&cfg, &c, &resources()).unwrap();
    let folds = prepare_folds(&cfg, &c, &targets).unwrap();
    let all: Vec<usize> = (0..8).collect();
    let (result, model) = fit_fold(&cfg, &folds[0], Classifier::Attentive, &all).unwrap();
    let single = model
        .unwrap()
        .attention(&folds[0].dataset.items[folds[0].test[0]].matrix)
        .unwrap()
        .unwrap();
    for (a, b) in result.mean_alpha.unwrap().iter().zip(&single) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn masking_a_constant_column_leaves_f1_unchanged() {
    let mut c = corpus(8, 45, 4);
    for r in &mut c.records {
        for t in 0..r.len() {
            r.eeg.set(t, 5, 0.0);
        }
    }
    let cfg = quick(TaskName::Tense, SignalType::Eeg, 6);
    let targets = task_targets(&cfg, &c, &resources()).unwrap();
    let folds = prepare_folds(&cfg, &c, &targets).unwrap();
    let out = run_attentive(&cfg, &folds).unwrap();
    let report = mask_eval(&cfg, &folds, &out, out.attention.as_ref().unwrap()).unwrap();
    assert_eq!(report.order.len(), 8);
    assert_eq!(report.masked_f1.len(), 8);
    assert_eq!(report.drop_of(5), Some(0.0));
}

#[test]
fn retrained_masking_reports_every_feature() {
    let c = corpus(8, 36, 5);
    let mut cfg = quick(TaskName::SenLen, SignalType::Eeg, 7);
    cfg.train.max_epochs = 1;
    cfg.mask_retrain = true;
    let run = run_task(&cfg, &c, &resources()).unwrap();
    let mask = run.mask.unwrap();
    assert!(mask.retrained);
    assert_eq!(mask.order.len(), 8);
}

#[test]
fn eye_mask_report_has_seventeen_entries() {
    let c = corpus(17, 36, 6);
    let mut cfg = quick(TaskName::SenLen, SignalType::Eye, 8);
    cfg.train.max_epochs = 1;
    let run = run_task(&cfg, &c, &resources()).unwrap();
    assert_eq!(run.mask.unwrap().order.len(), 17);
}

#[test]
fn experiment_is_deterministic() {
    let c = corpus(8, 40, 7);
    let cfg = quick(TaskName::BShift, SignalType::Eeg, 9);
    let a = run_task(&cfg, &c, &resources()).unwrap().summary();
    let b = run_task(&cfg, &c, &resources()).unwrap().summary();
    assert_eq!(a, b);
}

#[test]
fn featsel_grid_shape_and_full_set_agreement() {
    let c = corpus(8, 40, 8);
    let mut cfg = quick(TaskName::Tense, SignalType::Eeg, 10);
    cfg.train.max_epochs = 1;
    cfg.k_sweep = vec![1, 4, 8];
    let targets = task_targets(&cfg, &c, &resources()).unwrap();
    let folds = prepare_folds(&cfg, &c, &targets).unwrap();
    let attention = run_attentive(&cfg, &folds).unwrap().attention.unwrap();
    let mut scores = vec![attention];
    for m in [Method::Mi, Method::Rfe, Method::Rf] {
        scores.push(selection_scores(&cfg, &c, &targets, m).unwrap());
    }
    let grid = featsel_compare(&cfg, &folds, &scores, &FEATSEL_CLASSIFIERS).unwrap();
    assert_eq!(grid.cells.len(), 4 * 3 * 2);
    for classifier in FEATSEL_CLASSIFIERS {
        let full: Vec<f64> = Method::ALL
            .iter()
            .map(|&m| grid.get(m, 8, classifier).unwrap().mean_f1)
            .collect();
        assert!(full.iter().all(|&f| f == full[0]));
    }
    let direct = run_cv(&cfg, &folds, Classifier::Linear, &[0, 1, 2, 3, 4, 5, 6, 7]).unwrap();
    assert_eq!(
        grid.get(Method::Mi, 8, Classifier::Linear).unwrap().mean_f1,
        direct.mean_f1()
    );

    cfg.k_sweep = vec![9];
    assert!(featsel_compare(&cfg, &folds, &scores, &FEATSEL_CLASSIFIERS).is_err());
}

#[test]
fn attention_is_not_a_baseline_method() {
    let c = corpus(8, 30, 9);
    let cfg = quick(TaskName::Tense, SignalType::Eeg, 1);
    let targets = task_targets(&cfg, &c, &resources()).unwrap();
    assert!(selection_scores(&cfg, &c, &targets, Method::Attention).is_err());
}
