use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use cogbridge::datamodel::{load_corpus, Corpus, Resources, SignalType};
use cogbridge::harness::report::{
    write_attention_grid, write_featsel_grid, write_featsel_series, write_method_comparison,
};
use cogbridge::harness::{
    featsel_compare, prepare_folds, run_task, selection_scores, task_targets, ExperimentConfig,
    FeatselGrid, RunSummary, FEATSEL_CLASSIFIERS, SUMMARY_FILE,
};
use cogbridge::selection::{feature_names, write_scores_csv, ImportanceScores, Method};
use cogbridge::synth::{generate, write_files, PlantMode, PlantSpec};
use cogbridge::tasks::{TaskKind, TaskName};

use crate::archive::{open_corpus, CorpusArchive, ARCHIVE_FILE};
use crate::failure::{CliResult, Failure};
use crate::manifest::{now_unix, write_atomic, RunManifest, MANIFEST_FILE};
use crate::options::{
    ExperimentArgs, FeatselArgs, IngestArgs, KindArg, ModeArg, RunArgs, SynthArgs,
};
use crate::settings::{
    experiment_config, parse_k_sweep, parse_methods, parse_signals, parse_tasks, FileConfig,
};

pub const FEATSEL_FILE: &str = "featsel.json";

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::input(format!("cannot create {}: {e}", dir.display())))
}

fn to_value<T: Serialize>(v: &T) -> CliResult<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| Failure::internal(e.to_string()))
}

pub fn run_dir(root: &Path, task: TaskName, signal: SignalType, seed: u64) -> PathBuf {
    root.join(format!("{}_{}_seed{seed}", task.as_str(), signal.as_str()))
}

pub fn ingest(args: &IngestArgs) -> CliResult<()> {
    let started = now_unix();
    let corpus = load_corpus(&args.signals, &args.annotations)?;
    let resources = Resources::load(args.common_words.as_deref(), args.connectors.as_deref())?;
    create_dir(&args.out)?;
    let archive = CorpusArchive::new(corpus, &resources);
    archive.save(&args.out.join(ARCHIVE_FILE))?;

    let mut m = RunManifest::new(None, serde_json::Value::Null, started);
    let mut inputs = vec![args.signals.clone(), args.annotations.clone()];
    inputs.extend(args.common_words.clone());
    inputs.extend(args.connectors.clone());
    m.add_inputs(&inputs)?;
    m.add_outputs(&args.out, &[ARCHIVE_FILE.to_string()])?;
    info!("ingested {} sentences", archive.corpus.len());
    m.save(&args.out.join(MANIFEST_FILE))
}

/// Corpus plus the per-(task, signal) configs of one invocation.
struct Plan {
    corpus: Corpus,
    resources: Resources,
    inputs: Vec<PathBuf>,
    configs: Vec<ExperimentConfig>,
}

fn plan(
    exp: &ExperimentArgs,
    file: &FileConfig,
    tweak: impl Fn(&mut ExperimentConfig),
) -> CliResult<Plan> {
    let tasks = parse_tasks(&exp.tasks)?;
    let signals = parse_signals(&exp.signals)?;
    let mut configs = Vec::new();
    for &signal in &signals {
        for &task in &tasks {
            let mut c = experiment_config(task, signal, exp, file)?;
            tweak(&mut c);
            c.validate()?;
            configs.push(c);
        }
    }
    let (corpus, resources, inputs) = open_corpus(&exp.corpus)?;
    Ok(Plan {
        corpus,
        resources,
        inputs,
        configs,
    })
}

pub fn run(args: &RunArgs, file: &FileConfig) -> CliResult<()> {
    let plan = plan(&args.exp, file, |c| {
        if args.no_mask {
            c.masking = false;
        }
        if args.mask_retrain {
            c.mask_retrain = true;
        }
    })?;
    let root = &args.exp.out;
    create_dir(root)?;
    for config in &plan.configs {
        let started = now_unix();
        info!("running {} on {} signals", config.task, config.signal_type);
        let result = run_task(config, &plan.corpus, &plan.resources)?;
        let summary = result.summary();
        let dir = run_dir(root, config.task, config.signal_type, config.seed);
        create_dir(&dir)?;
        summary.save(&dir)?;
        let mut outputs = summary.write_reports(&dir)?;
        outputs.push(SUMMARY_FILE.to_string());

        let mut m = RunManifest::new(Some(config.seed), to_value(config)?, started);
        m.add_inputs(&plan.inputs)?;
        m.add_outputs(&dir, &outputs)?;
        m.norm_fingerprints = summary.norm_fingerprints.clone();
        m.save(&dir.join(MANIFEST_FILE))?;
        info!("{}: mean macro-F1 {:.4}", config.task, summary.mean_f1);
    }
    write_grids(root, args.exp.seed)
}

/// Gathers every saved run under `root` for `seed` into one attention grid
/// per signal type.
pub fn write_grids(root: &Path, seed: u64) -> CliResult<()> {
    let started = now_unix();
    let mut by_signal: BTreeMap<&str, Vec<ImportanceScores>> = BTreeMap::new();
    for signal in [SignalType::Eye, SignalType::Eeg] {
        for task in TaskName::ALL {
            let dir = run_dir(root, task, signal, seed);
            if dir.join(SUMMARY_FILE).is_file() {
                let s = RunSummary::load(&dir)?;
                by_signal
                    .entry(signal.as_str())
                    .or_default()
                    .push(s.attention);
            }
        }
    }
    let mut outputs = Vec::new();
    for signal in [SignalType::Eye, SignalType::Eeg] {
        if let Some(scores) = by_signal.get(signal.as_str()) {
            let name = format!("attention_grid_{}_seed{seed}.csv", signal.as_str());
            write_attention_grid(signal, scores, &root.join(&name))?;
            outputs.push(name);
        }
    }
    if outputs.is_empty() {
        return Ok(());
    }
    let mut m = RunManifest::new(Some(seed), serde_json::Value::Null, started);
    m.add_outputs(root, &outputs)?;
    m.save(&root.join(format!("grid_manifest_seed{seed}.json")))
}

/// Saved output of one `featsel` invocation for a task and signal type.
#[derive(Debug, Serialize, Deserialize)]
pub struct FeatselResults {
    pub config: ExperimentConfig,
    pub scores: Vec<ImportanceScores>,
    pub grid: FeatselGrid,
}

impl FeatselResults {
    fn write_reports(&self, dir: &Path) -> CliResult<Vec<String>> {
        let names = feature_names(self.config.signal_type, self.config.signal_type.dim());
        let mut files = vec![
            "scores.csv".to_string(),
            "method_comparison.csv".to_string(),
            "featsel_grid.csv".to_string(),
        ];
        write_scores_csv(&self.scores, &dir.join(&files[0]))?;
        write_method_comparison(&self.scores, &dir.join(&files[1]))?;
        write_featsel_grid(&self.grid, &names, &dir.join(&files[2]))?;
        for c in FEATSEL_CLASSIFIERS {
            let name = format!("featsel_{}.csv", c.as_str());
            write_featsel_series(&self.grid, c, &dir.join(&name))?;
            files.push(name);
        }
        Ok(files)
    }
}

pub fn featsel(args: &FeatselArgs, file: &FileConfig) -> CliResult<()> {
    let methods = match &args.methods {
        Some(m) => parse_methods(m)?,
        None => file.methods.clone().unwrap_or_else(|| Method::ALL.to_vec()),
    };
    let k_sweep = args.k_sweep.as_deref().map(parse_k_sweep).transpose()?;
    let plan = plan(&args.exp, file, |c| {
        c.featsel_methods = methods.clone();
        if let Some(k) = &k_sweep {
            c.k_sweep = k.clone();
        }
    })?;
    let root = &args.exp.out;

    // check every prerequisite before any training starts
    let mut prior = Vec::new();
    for config in &plan.configs {
        let dir = run_dir(root, config.task, config.signal_type, config.seed);
        if config.featsel_methods.contains(&Method::Attention) {
            if !dir.join(SUMMARY_FILE).is_file() {
                return Err(Failure::input(format!(
                    "attention scores for {} on {} not found in {}; run `cogbridge run --task {} --signals {} --seed {} --out {}` first",
                    config.task,
                    config.signal_type,
                    dir.display(),
                    config.task,
                    config.signal_type,
                    config.seed,
                    root.display()
                )));
            }
            prior.push(Some(RunSummary::load(&dir)?.attention));
        } else {
            prior.push(None);
        }
    }

    for (config, attention) in plan.configs.iter().zip(prior) {
        let started = now_unix();
        info!(
            "feature selection for {} on {} signals",
            config.task, config.signal_type
        );
        let targets = task_targets(config, &plan.corpus, &plan.resources)?;
        let folds = prepare_folds(config, &plan.corpus, &targets)?;
        let mut scores = Vec::new();
        for &m in &config.featsel_methods {
            scores.push(match m {
                Method::Attention => attention.clone().expect("checked above"),
                _ => selection_scores(config, &plan.corpus, &targets, m)?,
            });
        }
        let grid = featsel_compare(config, &folds, &scores, &FEATSEL_CLASSIFIERS)?;
        let results = FeatselResults {
            config: config.clone(),
            scores,
            grid,
        };

        let dir = run_dir(root, config.task, config.signal_type, config.seed);
        create_dir(&dir)?;
        let body =
            serde_json::to_vec_pretty(&results).map_err(|e| Failure::internal(e.to_string()))?;
        write_atomic(&dir.join(FEATSEL_FILE), &body)?;
        let mut outputs = results.write_reports(&dir)?;
        outputs.push(FEATSEL_FILE.to_string());
        let mut m = RunManifest::new(Some(config.seed), to_value(config)?, started);
        m.add_inputs(&plan.inputs)?;
        m.add_outputs(&dir, &outputs)?;
        m.norm_fingerprints = folds.iter().map(|f| f.norm_fingerprint.clone()).collect();
        m.save(&dir.join("featsel_manifest.json"))?;
    }
    Ok(())
}

pub fn synth(args: &SynthArgs) -> CliResult<()> {
    let started = now_unix();
    let mut spec = PlantSpec::new(args.d, args.planted, args.effect, args.m, args.seed);
    spec.noise = args.noise;
    spec.kind = match args.kind {
        KindArg::ThreeClass => TaskKind::ThreeClass,
        KindArg::Binary => TaskKind::Binary,
        KindArg::Sequence => TaskKind::Sequence,
    };
    spec.mode = match args.mode {
        ModeArg::MeanShift => PlantMode::MeanShift,
        ModeArg::Ordered => PlantMode::Ordered,
    };
    spec.min_len = args.min_len;
    spec.max_len = args.max_len;
    spec.shared_noise = args.shared_noise;
    let syn = generate(&spec)?;
    write_files(&syn, &args.out)?;
    let mut m = RunManifest::new(Some(args.seed), to_value(&spec)?, started);
    let outputs: Vec<String> = [
        "signals.tsv",
        "annotations.jsonl",
        "common_words.txt",
        "connectors.txt",
    ]
    .map(String::from)
    .to_vec();
    m.add_outputs(&args.out, &outputs)?;
    m.save(&args.out.join(MANIFEST_FILE))
}

/// Re-renders the CSVs of one run directory from its saved results.
fn report_dir(dir: &Path) -> CliResult<Option<u64>> {
    let mut seed = None;
    if dir.join(SUMMARY_FILE).is_file() {
        let summary = RunSummary::load(dir)?;
        summary.write_reports(dir)?;
        seed = Some(summary.config.seed);
    }
    let fs = dir.join(FEATSEL_FILE);
    if fs.is_file() {
        let bytes =
            std::fs::read(&fs).map_err(|e| Failure::input(format!("{}: {e}", fs.display())))?;
        let results: FeatselResults = serde_json::from_slice(&bytes)
            .map_err(|e| Failure::input(format!("{}: {e}", fs.display())))?;
        results.write_reports(dir)?;
        seed = seed.or(Some(results.config.seed));
    }
    Ok(seed)
}

pub fn report(path: &Path) -> CliResult<()> {
    if !path.is_dir() {
        return Err(Failure::input(format!(
            "{} is not a directory",
            path.display()
        )));
    }
    if path.join(MANIFEST_FILE).is_file() && report_dir(path)?.is_some() {
        return Ok(());
    }
    let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(MANIFEST_FILE).is_file())
        .collect();
    entries.sort();
    let mut seeds = Vec::new();
    for dir in &entries {
        RunManifest::load(&dir.join(MANIFEST_FILE))?;
        if let Some(seed) = report_dir(dir)? {
            seeds.push(seed);
        }
    }
    if seeds.is_empty() {
        return Err(Failure::input(format!(
            "no saved runs under {}",
            path.display()
        )));
    }
    seeds.sort_unstable();
    seeds.dedup();
    for seed in seeds {
        write_grids(path, seed)?;
    }
    Ok(())
}
