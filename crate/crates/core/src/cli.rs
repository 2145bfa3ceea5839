//! Experiment specs and the `train`, `ensemble`, `report` and `synth`
//! commands. Every command writes tidy CSV (or JSON) files whose first line
//! carries the experiment spec digest and master seed.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{self, Dataset, GroupPartition, LoadOptions, SplitSpec, Standardizer};
use crate::ensemble::{self, EnsembleSpec, Strategy};
use crate::error::{Error, Result};
use crate::evolve::{self, DumpHeader, Provenance, RunConfig, RunHistory};
use crate::indicators::{self, PseudoFront, TrialArchive};
use crate::metrics::{self, MetricId};
use crate::moea::{Individual, Population, ReproSpec, SraSpec, VariationSpec};
use crate::nnet::{Activation, Loss, NetSpec, TrainSpec};
use crate::seed;

/// Seeded synthetic data recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n: usize,
    pub d: usize,
    pub bias: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_label() -> String {
    "label".into()
}

fn default_split() -> Vec<f64> {
    vec![0.5, 0.125, 0.125, 0.25]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    /// CSV file, relative to the experiment spec file's directory.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SynthSpec>,
    #[serde(default = "default_label")]
    pub label: String,
    /// Sensitive columns; `["group"]` for synthetic data.
    #[serde(default)]
    pub sensitive: Vec<String>,
    /// Privileged values, one per sensitive column; `["A"]` for synthetic data.
    #[serde(default)]
    pub privileged: Vec<String>,
    #[serde(default)]
    pub buckets: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub drop_sensitive: bool,
    /// Relative sizes of train/validation/test or train/validation/ensemble/test.
    #[serde(default = "default_split")]
    pub split: Vec<f64>,
    #[serde(default = "yes")]
    pub standardize: bool,
}

/// Flat run settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default = "RunSpec::default_hidden")]
    pub hidden: usize,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default = "RunSpec::default_lr")]
    pub learning_rate: f64,
    #[serde(default = "RunSpec::default_batch")]
    pub batch_size: usize,
    #[serde(default = "RunSpec::default_epochs")]
    pub epochs_per_partial: usize,
    #[serde(default = "RunSpec::default_sigma")]
    pub sigma: f64,
    #[serde(default = "RunSpec::default_prob")]
    pub crossover_prob: f64,
    #[serde(default = "RunSpec::default_prob")]
    pub mutation_prob: f64,
    #[serde(default = "RunSpec::default_k")]
    pub k: usize,
    /// Training losses; the differentiable criteria when omitted.
    #[serde(default)]
    pub losses: Option<Vec<Loss>>,
    #[serde(default = "MetricId::tri_objective")]
    pub criteria: Vec<MetricId>,
    #[serde(default)]
    pub tracked: Vec<MetricId>,
    pub generations: usize,
    pub lambda: usize,
    #[serde(default = "RunSpec::default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub checkpoint_every: Option<usize>,
    #[serde(default = "RunSpec::default_pc_low")]
    pub pc_low: f64,
    #[serde(default = "RunSpec::default_pc_high")]
    pub pc_high: f64,
}

impl RunSpec {
    fn default_hidden() -> usize {
        64
    }
    fn default_lr() -> f64 {
        0.004
    }
    fn default_batch() -> usize {
        40
    }
    fn default_epochs() -> usize {
        1
    }
    fn default_sigma() -> f64 {
        0.01
    }
    fn default_prob() -> f64 {
        1.0
    }
    fn default_k() -> usize {
        10
    }
    fn default_alpha() -> f64 {
        2.0
    }
    fn default_pc_low() -> f64 {
        0.4
    }
    fn default_pc_high() -> f64 {
        0.6
    }

    pub fn losses(&self) -> Result<Vec<Loss>> {
        match &self.losses {
            Some(l) => Ok(l.clone()),
            None => self
                .criteria
                .iter()
                .filter(|c| c.is_differentiable())
                .map(|&c| Loss::from_metric(c))
                .collect(),
        }
    }

    pub fn to_run_config(&self, input_dim: usize, seed: u64) -> Result<RunConfig> {
        let cfg = RunConfig {
            net: NetSpec {
                input_dim,
                hidden: self.hidden,
                activation: self.activation,
            },
            train_spec: TrainSpec {
                learning_rate: self.learning_rate,
                batch_size: self.batch_size,
                epochs_per_partial: self.epochs_per_partial,
                loss: Loss::CrossEntropy,
                alpha: self.alpha,
                seed: 0,
            },
            vspec: VariationSpec {
                sigma: self.sigma,
                crossover_prob: self.crossover_prob,
                mutation_prob: self.mutation_prob,
                seed: 0,
            },
            repro: ReproSpec {
                k: self.k,
                losses: self.losses()?,
            },
            criteria: self.criteria.clone(),
            tracked: self.tracked.clone(),
            generations: self.generations,
            lambda: self.lambda,
            alpha: self.alpha,
            seed,
            sra: SraSpec {
                pc_low: self.pc_low,
                pc_high: self.pc_high,
                ..SraSpec::default()
            },
            checkpoint_every: self.checkpoint_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_target() -> usize {
    ensemble::DEFAULT_TARGET_SIZE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleEntry {
    pub strategy: Strategy,
    #[serde(default = "default_target")]
    pub target_size: usize,
    /// Selection criteria; the run's optimised criteria when omitted.
    #[serde(default)]
    pub criteria: Option<Vec<MetricId>>,
}

fn default_metrics() -> Vec<MetricId> {
    let mut m = vec![MetricId::Acc];
    m.extend(MetricId::representative());
    m
}

fn default_significance() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSpec {
    /// Objectives for HV/CPF; the run's optimised criteria when omitted.
    #[serde(default)]
    pub criteria: Option<Vec<MetricId>>,
    /// Test-set metrics of ensembles and base models, combined by G-mean.
    #[serde(default = "default_metrics")]
    pub metrics: Vec<MetricId>,
    #[serde(default = "default_significance")]
    pub significance: f64,
}

impl Default for ReportSpec {
    fn default() -> Self {
        Self {
            criteria: None,
            metrics: default_metrics(),
            significance: default_significance(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    pub trials: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub data: DataSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub ensemble: Vec<EnsembleEntry>,
    #[serde(default)]
    pub report: ReportSpec,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::config(format!("spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.data.path.is_some() == self.data.synthetic.is_some() {
            return Err(Error::config("give exactly one of data.path and data.synthetic"));
        }
        if !matches!(self.data.split.len(), 3 | 4) {
            return Err(Error::config("data.split needs 3 or 4 parts"));
        }
        if self.report.metrics.is_empty() {
            return Err(Error::config("report.metrics must not be empty"));
        }
        Ok(())
    }

    /// Seed of trial `t`.
    pub fn trial_seed(&self, t: usize) -> u64 {
        seed::derive(self.seed, &[1, t as u64])
    }

    pub fn split_seed(&self) -> u64 {
        seed::derive(self.seed, &[2])
    }

    pub fn hv_criteria(&self) -> Vec<MetricId> {
        self.report.criteria.clone().unwrap_or_else(|| self.run.criteria.clone())
    }

    fn sensitive(&self) -> (Vec<String>, Vec<String>) {
        let synthetic = self.data.synthetic.is_some();
        let pick = |v: &Vec<String>, d: &str| if v.is_empty() && synthetic { vec![d.to_string()] } else { v.clone() };
        (pick(&self.data.sensitive, "group"), pick(&self.data.privileged, "A"))
    }
}

/// Reads a spec file and returns it with the SHA-256 of its bytes.
pub fn load_spec(path: &Path) -> Result<(ExperimentSpec, String)> {
    let text = fs::read_to_string(path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    Ok((ExperimentSpec::from_toml(&text)?, digest(&text)))
}

pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Standardised data parts with their group partitions.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: Dataset,
    pub train_part: GroupPartition,
    pub val: Dataset,
    pub val_part: GroupPartition,
    /// The validation set when the split has three parts.
    pub ens: Dataset,
    pub ens_part: GroupPartition,
    pub test: Dataset,
    pub test_part: GroupPartition,
}

/// Loads or generates the data, splits it, standardises on the training
/// part and builds groups on every part. Relative CSV paths resolve
/// against `base_dir`.
pub fn prepare_data(spec: &ExperimentSpec, base_dir: &Path) -> Result<PreparedData> {
    let (sens, privileged) = spec.sensitive();
    let ds = if let Some(s) = &spec.data.synthetic {
        let mut ds = data::synth_biased(s.n, s.d, s.bias, s.seed)?;
        if !spec.data.drop_sensitive {
            ds.append_sensitive_one_hot();
        }
        ds
    } else {
        let path = spec.data.path.as_ref().expect("validated");
        let path = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
        let sens_refs: Vec<&str> = sens.iter().map(String::as_str).collect();
        let mut opts = LoadOptions::new(&spec.data.label, &sens_refs);
        opts.buckets = spec.data.buckets.clone();
        opts.drop_sensitive = spec.data.drop_sensitive;
        data::load_csv(&path, &opts)?
    };
    let split_spec = SplitSpec::from_weights(&spec.data.split, spec.split_seed())?;
    let mut parts = data::split(&ds, &split_spec)?;
    if spec.data.standardize {
        let st = Standardizer::fit(&parts[0]);
        for p in &mut parts {
            st.apply(p);
        }
    }
    let sens_refs: Vec<&str> = sens.iter().map(String::as_str).collect();
    let priv_refs: Vec<&str> = privileged.iter().map(String::as_str).collect();
    let groups = |d: &Dataset| data::make_groups(d, &sens_refs, &priv_refs);
    let test = parts.pop().expect("three or four parts");
    let ens = if parts.len() == 3 { parts.pop().expect("ensemble part") } else { parts[1].clone() };
    Ok(PreparedData {
        train_part: groups(&parts[0])?,
        val_part: groups(&parts[1])?,
        ens_part: groups(&ens)?,
        test_part: groups(&test)?,
        train: parts[0].clone(),
        val: parts[1].clone(),
        ens,
        test,
    })
}

/// Result of one evolutionary trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub config: RunConfig,
    pub population: Population,
    pub history: RunHistory,
    pub wall_secs: f64,
}

pub fn run_trial(spec: &ExperimentSpec, data: &PreparedData, trial: usize) -> Result<TrialOutcome> {
    let seed = spec.trial_seed(trial);
    let config = spec.run.to_run_config(data.train.width(), seed)?;
    let started = Instant::now();
    let (population, history) = evolve::run(&config, &data.train, &data.train_part, &data.val, &data.val_part)?;
    Ok(TrialOutcome {
        trial,
        seed,
        config,
        population,
        history,
        wall_secs: started.elapsed().as_secs_f64(),
    })
}

/// Test-set values of every generation whose genomes were kept, as
/// `(generation, rows)`.
pub fn checkpoint_test_values(
    outcome: &TrialOutcome,
    data: &PreparedData,
    criteria: &[MetricId],
) -> Result<Vec<(usize, Vec<Vec<f64>>)>> {
    let (net, alpha) = (&outcome.config.net, outcome.config.alpha);
    outcome
        .history
        .records
        .iter()
        .filter_map(|rec| rec.genomes.as_ref().map(|g| (rec.generation, g)))
        .map(|(gen, genomes)| {
            let rows = genomes
                .iter()
                .map(|g| metrics::evaluate(net, g, &data.test, &data.test_part, criteria, alpha).map(|v| v.0))
                .collect::<Result<_>>()?;
            Ok((gen, rows))
        })
        .collect()
}

/// Hypervolume of every generation against the trial's own pseudo front.
pub fn own_front_hv(history: &RunHistory, criteria: &[MetricId]) -> Result<Vec<indicators::HvEstimate>> {
    let gens: Vec<Vec<Vec<f64>>> = (0..history.len()).map(|g| history.values(g, criteria)).collect::<Result<_>>()?;
    let front = indicators::build_pseudo_front(&gens)?;
    gens.iter()
        .map(|pts| indicators::hypervolume(&indicators::normalize(pts, &front)?, criteria.len()))
        .collect()
}

fn fmt_stderr(s: Option<f64>) -> String {
    s.map_or(String::new(), |v| v.to_string())
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Run-directory metadata written next to the copied experiment spec.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunMeta {
    provenance: Provenance,
    spec_dir: PathBuf,
    trials: usize,
}

fn trial_dir(run_dir: &Path, t: usize) -> PathBuf {
    run_dir.join(format!("trial_{t}"))
}

fn write_objectives_csv(path: &Path, prov: &Provenance, criteria: &[MetricId], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "{}", prov.csv_comment())?;
    writeln!(out, "individual,criterion,value")?;
    for (i, r) in rows.iter().enumerate() {
        for (c, v) in criteria.iter().zip(r) {
            writeln!(out, "{i},{c},{v}")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn read_objectives_csv(path: &Path) -> Result<(Vec<MetricId>, Vec<Vec<f64>>)> {
    let file = fs::File::open(path).map_err(|e| Error::Report(format!("cannot open {}: {e}", path.display())))?;
    let mut criteria: Vec<MetricId> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.starts_with('#') || line.starts_with("individual,") || line.is_empty() {
            continue;
        }
        let bad = || Error::data(format!("{}: malformed line `{line}`", path.display()));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(bad());
        }
        let i: usize = f[0].parse().map_err(|_| bad())?;
        let c: MetricId = f[1].parse().map_err(|_| bad())?;
        let v: f64 = f[2].parse().map_err(|_| bad())?;
        if !criteria.contains(&c) {
            criteria.push(c);
        }
        if rows.len() <= i {
            rows.resize(i + 1, Vec::new());
        }
        rows[i].push(v);
    }
    Ok((criteria, rows))
}

fn test_criteria(spec: &ExperimentSpec) -> Vec<MetricId> {
    let mut all = spec.hv_criteria();
    for m in &spec.report.metrics {
        if !all.contains(m) {
            all.push(*m);
        }
    }
    all
}

/// `train`: runs every trial and writes histories, population dumps,
/// test-set objectives (final and checkpointed) and own-front HV curves under `out_dir` (or the
/// experiment spec's `output_dir`).
pub fn cmd_train(spec_path: &Path, out_dir: Option<&Path>) -> Result<PathBuf> {
    let (spec, sha) = load_spec(spec_path)?;
    let spec_dir = spec_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default()
        .canonicalize()
        .unwrap_or_default();
    let run_dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| spec.output_dir.as_ref().map(|p| spec_dir.join(p)))
        .ok_or_else(|| Error::Usage("no output directory: pass --out or set output_dir".into()))?;
    fs::create_dir_all(&run_dir)?;
    let prov = Provenance {
        spec_sha256: sha,
        seed: spec.seed,
    };
    fs::copy(spec_path, run_dir.join("spec.toml"))?;
    let meta = RunMeta {
        provenance: prov.clone(),
        spec_dir,
        trials: spec.trials,
    };
    fs::write(run_dir.join("run.json"), serde_json::to_string_pretty(&meta)?)?;

    let data = prepare_data(&spec, &meta.spec_dir)?;
    let hv_crit = spec.hv_criteria();
    let test_crit = test_criteria(&spec);
    let mut log = create(&run_dir.join("train.log"))?;
    writeln!(log, "{}", prov.csv_comment())?;
    let mut seeds = create(&run_dir.join("seeds.csv"))?;
    writeln!(seeds, "{}", prov.csv_comment())?;
    writeln!(seeds, "trial,seed")?;
    for t in 0..spec.trials {
        let outcome = run_trial(&spec, &data, t)?;
        let dir = trial_dir(&run_dir, t);
        evolve::write_history_csv(&outcome.history, &prov, create(&dir.join("history.csv"))?)?;
        let header = DumpHeader {
            provenance: prov.clone(),
            net: outcome.config.net,
            criteria: outcome.config.criteria.clone(),
            tracked: outcome.config.tracked.clone(),
            alpha: outcome.config.alpha,
        };
        let mut dump = create(&dir.join("population.jsonl"))?;
        evolve::write_population_jsonl(&header, &outcome.population, &mut dump)?;
        dump.flush()?;

        let test_rows: Vec<Vec<f64>> = outcome
            .population
            .members
            .iter()
            .map(|m| {
                metrics::evaluate(&header.net, &m.genome, &data.test, &data.test_part, &test_crit, header.alpha).map(|v| v.0)
            })
            .collect::<Result<_>>()?;
        write_objectives_csv(&dir.join("test_objectives.csv"), &prov, &test_crit, &test_rows)?;

        let mut th = create(&dir.join("test_history.csv"))?;
        writeln!(th, "{}", prov.csv_comment())?;
        writeln!(th, "generation,individual,criterion,value")?;
        for (g, rows) in checkpoint_test_values(&outcome, &data, &hv_crit)? {
            for (i, r) in rows.iter().enumerate() {
                for (c, v) in hv_crit.iter().zip(r) {
                    writeln!(th, "{g},{i},{c},{v}")?;
                }
            }
        }
        th.flush()?;

        let own_crit: Vec<MetricId> = hv_crit.clone();
        let hv = own_front_hv(&outcome.history, &own_crit)?;
        let mut ind = create(&dir.join("indicators.csv"))?;
        writeln!(ind, "{}", prov.csv_comment())?;
        writeln!(ind, "generation,indicator,value,stderr")?;
        for (g, h) in hv.iter().enumerate() {
            writeln!(ind, "{g},HV,{},{}", h.value, fmt_stderr(h.stderr))?;
        }
        ind.flush()?;

        writeln!(seeds, "{t},{}", outcome.seed)?;
        writeln!(log, "trial {t} seed {} wall {:.3}s", outcome.seed, outcome.wall_secs)?;
        for rec in &outcome.history.records {
            writeln!(log, "  generation {} seed {} pc {:?} wall {:.3}s", rec.generation, rec.seed, rec.pc, rec.wall_secs)?;
        }
        info!("trial {t} done in {:.2}s", outcome.wall_secs);
    }
    seeds.flush()?;
    log.flush()?;
    Ok(run_dir)
}

fn load_run(run_dir: &Path) -> Result<(ExperimentSpec, RunMeta)> {
    let meta_text = fs::read_to_string(run_dir.join("run.json"))
        .map_err(|e| Error::Report(format!("{} is not a run directory: {e}", run_dir.display())))?;
    let meta: RunMeta = serde_json::from_str(&meta_text)?;
    let spec_text = fs::read_to_string(run_dir.join("spec.toml"))?;
    if digest(&spec_text) != meta.provenance.spec_sha256 {
        return Err(Error::Report(format!("{}: copied experiment spec does not match its digest", run_dir.display())));
    }
    Ok((ExperimentSpec::from_toml(&spec_text)?, meta))
}

fn load_population(run_dir: &Path, t: usize) -> Result<(DumpHeader, Vec<Individual>)> {
    let path = trial_dir(run_dir, t).join("population.jsonl");
    let file = fs::File::open(&path).map_err(|e| Error::data(format!("cannot open {}: {e}", path.display())))?;
    evolve::read_population_jsonl(BufReader::new(file))
}

/// Selection manifest of one strategy across trials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub provenance: Provenance,
    pub net: NetSpec,
    pub strategy: Strategy,
    pub target_size: usize,
    pub criteria: Vec<MetricId>,
    pub trials: Vec<ManifestTrial>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestTrial {
    pub trial: usize,
    /// Population dump, relative to the run directory.
    pub population: String,
    /// Line indices (after the header) of the selected members.
    pub members: Vec<usize>,
}

/// `ensemble`: selects members from every trial's final population on the
/// ensemble split, then reports test metrics and their G-mean for each
/// ensemble and each base model.
pub fn cmd_ensemble(run_dir: &Path, strategies: &[Strategy], size: Option<usize>) -> Result<()> {
    let (spec, meta) = load_run(run_dir)?;
    let data = prepare_data(&spec, &meta.spec_dir)?;
    let prov = meta.provenance.clone();
    let entries: Vec<EnsembleEntry> = if !strategies.is_empty() {
        strategies
            .iter()
            .map(|&s| EnsembleEntry {
                strategy: s,
                target_size: size.unwrap_or(ensemble::DEFAULT_TARGET_SIZE),
                criteria: None,
            })
            .collect()
    } else if !spec.ensemble.is_empty() {
        spec.ensemble
            .iter()
            .cloned()
            .map(|mut e| {
                if let Some(s) = size {
                    e.target_size = s;
                }
                e
            })
            .collect()
    } else {
        Strategy::ALL
            .iter()
            .map(|&s| EnsembleEntry {
                strategy: s,
                target_size: size.unwrap_or(ensemble::DEFAULT_TARGET_SIZE),
                criteria: None,
            })
            .collect()
    };
    let metrics_list = spec.report.metrics.clone();
    let mut report = create(&run_dir.join("ensemble_report.csv"))?;
    writeln!(report, "{}", prov.csv_comment())?;
    let names: Vec<String> = metrics_list.iter().map(|m| m.to_string()).collect();
    writeln!(report, "trial,strategy,size,{},gmean", names.join(","))?;
    let mut base = create(&run_dir.join("base_models.csv"))?;
    writeln!(base, "{}", prov.csv_comment())?;
    writeln!(base, "trial,individual,{},gmean", names.join(","))?;

    let pops: Vec<(DumpHeader, Vec<Individual>)> = (0..meta.trials).map(|t| load_population(run_dir, t)).collect::<Result<_>>()?;
    for (t, (header, members)) in pops.iter().enumerate() {
        for (i, m) in members.iter().enumerate() {
            let v = metrics::evaluate(&header.net, &m.genome, &data.test, &data.test_part, &metrics_list, header.alpha)?;
            writeln!(base, "{t},{i},{},{}", join(&v.0), indicators::g_mean(&v.0)?)?;
        }
    }
    for entry in &entries {
        let mut trials = Vec::new();
        let criteria = entry.criteria.clone().unwrap_or_else(|| spec.run.criteria.clone());
        for (t, (header, members)) in pops.iter().enumerate() {
            let es = EnsembleSpec {
                strategy: entry.strategy,
                target_size: entry.target_size,
                criteria: criteria.clone(),
                alpha: header.alpha,
            };
            let ens = ensemble::select(members, &header.net, &data.ens, &data.ens_part, &es)?;
            let v = ensemble::evaluate_ensemble(&ens, &data.test, &data.test_part, &metrics_list, header.alpha)?;
            writeln!(report, "{t},{},{},{},{}", entry.strategy, ens.len(), join(&v.0), indicators::g_mean(&v.0)?)?;
            trials.push(ManifestTrial {
                trial: t,
                population: format!("trial_{t}/population.jsonl"),
                members: ens.indices.clone(),
            });
        }
        let manifest = EnsembleManifest {
            provenance: prov.clone(),
            net: pops[0].0.net,
            strategy: entry.strategy,
            target_size: entry.target_size,
            criteria,
            trials,
        };
        fs::write(
            run_dir.join(format!("ensemble_{}.json", entry.strategy)),
            serde_json::to_string_pretty(&manifest)?,
        )?;
    }
    report.flush()?;
    base.flush()?;
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Run directory contents used by `report`.
struct LoadedRun {
    name: String,
    /// Per trial, per generation, validation values on the report criteria.
    histories: Vec<Vec<Vec<Vec<f64>>>>,
    /// Per trial, final-population test values on the report criteria.
    finals: Vec<Vec<Vec<f64>>>,
    /// Test values of every checkpointed generation of every trial.
    test_checkpoints: Vec<Vec<Vec<f64>>>,
    provenance: Provenance,
}

fn project_rows(rows: &[Vec<f64>], have: &[MetricId], want: &[MetricId], what: &str) -> Result<Vec<Vec<f64>>> {
    let cols: Vec<usize> = want
        .iter()
        .map(|w| {
            have.iter()
                .position(|h| h == w)
                .ok_or_else(|| Error::Report(format!("{what} does not record criterion {w}")))
        })
        .collect::<Result<_>>()?;
    Ok(rows.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect())
}

fn load_for_report(run_dir: &Path, criteria: &[MetricId]) -> Result<LoadedRun> {
    let (spec, meta) = load_run(run_dir)?;
    let mut histories = Vec::new();
    let mut finals = Vec::new();
    let mut test_checkpoints = Vec::new();
    for t in 0..meta.trials {
        let dir = trial_dir(run_dir, t);
        let file = fs::File::open(dir.join("history.csv"))?;
        let (have, gens) = evolve::read_history_csv(BufReader::new(file))?;
        let what = format!("{} trial {t} history", run_dir.display());
        histories.push(gens.iter().map(|g| project_rows(g, &have, criteria, &what)).collect::<Result<_>>()?);
        let (have, rows) = read_objectives_csv(&dir.join("test_objectives.csv"))?;
        finals.push(project_rows(&rows, &have, criteria, &format!("{} trial {t} test objectives", run_dir.display()))?);
        if let Ok(file) = fs::File::open(dir.join("test_history.csv")) {
            let (have, gens) = evolve::read_history_csv(BufReader::new(file))?;
            let what = format!("{} trial {t} test history", run_dir.display());
            for g in gens.iter().filter(|g| !g.is_empty()) {
                test_checkpoints.push(project_rows(g, &have, criteria, &what)?);
            }
        }
    }
    let name = if spec.name.is_empty() {
        run_dir.file_name().map_or("run".into(), |n| n.to_string_lossy().into_owned())
    } else {
        spec.name.clone()
    };
    Ok(LoadedRun {
        name,
        histories,
        finals,
        test_checkpoints,
        provenance: meta.provenance,
    })
}

fn mean_stderr(values: &[indicators::HvEstimate]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().map(|h| h.value).sum::<f64>() / n;
    let se = values
        .iter()
        .map(|h| h.stderr.map(|s| s * s))
        .sum::<Option<f64>>()
        .map(|v| v.sqrt() / n);
    (mean, se)
}

fn read_baseline(path: &Path, criteria: &[MetricId]) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let have: Vec<MetricId> = rdr.headers()?.iter().map(|h| h.trim().parse()).collect::<Result<_>>()?;
    let row = rdr
        .records()
        .next()
        .ok_or_else(|| Error::data("baseline file has no data row"))??;
    let values: Vec<f64> = row
        .iter()
        .map(|v| v.trim().parse::<f64>().map_err(|_| Error::data(format!("bad baseline value `{v}`"))))
        .collect::<Result<_>>()?;
    Ok(project_rows(&[values], &have, criteria, "baseline")?.remove(0))
}

/// `report`: pooled pseudo fronts (the test front also pools every
/// checkpointed generation), per-generation mean HV/CPF curves,
/// final test-set indicators, rank-sum verdicts of each run against the
/// first, and the dominance-relation table when a baseline point is given.
pub fn cmd_report(run_dirs: &[PathBuf], out_dir: &Path, baseline: Option<&Path>) -> Result<()> {
    if run_dirs.is_empty() {
        return Err(Error::Usage("report needs at least one run directory".into()));
    }
    let (first_spec, _) = load_run(&run_dirs[0])?;
    let criteria = first_spec.hv_criteria();
    let significance = first_spec.report.significance;
    let m = criteria.len();
    let runs: Vec<LoadedRun> = run_dirs.iter().map(|d| load_for_report(d, &criteria)).collect::<Result<_>>()?;
    let digests: Vec<String> = runs.iter().map(|r| r.provenance.spec_sha256.clone()).collect();
    let header = format!(
        "# spec_sha256={} seed={}",
        digests.join("+"),
        runs.iter().map(|r| r.provenance.seed.to_string()).collect::<Vec<_>>().join("+")
    );
    fs::create_dir_all(out_dir)?;

    let val_sets: Vec<Vec<Vec<f64>>> = runs.iter().flat_map(|r| r.histories.iter().flatten().cloned()).collect();
    let val_front = indicators::build_pseudo_front(&val_sets)?;
    let test_sets: Vec<Vec<Vec<f64>>> = runs
        .iter()
        .flat_map(|r| r.finals.iter().chain(&r.test_checkpoints).cloned())
        .collect();
    let test_front = indicators::build_pseudo_front(&test_sets)?;

    let mut front_out = create(&out_dir.join("front.csv"))?;
    writeln!(front_out, "{header}")?;
    writeln!(front_out, "{}", criteria.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","))?;
    for p in &test_front.points {
        writeln!(front_out, "{}", join(p))?;
    }
    front_out.flush()?;

    let hv_of = |pts: &[Vec<f64>], front: &PseudoFront| -> Result<indicators::HvEstimate> {
        indicators::hypervolume(&indicators::normalize(pts, front)?, m)
    };

    let mut curves = create(&out_dir.join("curves.csv"))?;
    writeln!(curves, "{header}")?;
    writeln!(curves, "run,generation,indicator,value,stderr")?;
    for r in &runs {
        let gens = r.histories.iter().map(Vec::len).min().unwrap_or(0);
        for g in 0..gens {
            let hv: Vec<_> = r.histories.iter().map(|h| hv_of(&h[g], &val_front)).collect::<Result<_>>()?;
            let (v, se) = mean_stderr(&hv);
            writeln!(curves, "{},{g},HV,{v},{}", r.name, fmt_stderr(se))?;
            let cpf: Vec<f64> = r.histories.iter().map(|h| indicators::cpf(&h[g], &val_front)).collect::<Result<_>>()?;
            writeln!(curves, "{},{g},CPF,{},", r.name, cpf.iter().sum::<f64>() / cpf.len() as f64)?;
        }
    }
    curves.flush()?;

    let mut finals = create(&out_dir.join("final.csv"))?;
    writeln!(finals, "{header}")?;
    writeln!(finals, "run,trial,indicator,value,stderr")?;
    let mut final_hv: Vec<Vec<f64>> = Vec::new();
    let mut final_cpf: Vec<Vec<f64>> = Vec::new();
    for r in &runs {
        let mut hvs = Vec::new();
        let mut cpfs = Vec::new();
        for (t, pts) in r.finals.iter().enumerate() {
            let hv = hv_of(pts, &test_front)?;
            let cpf = indicators::cpf(pts, &test_front)?;
            writeln!(finals, "{},{t},HV,{},{}", r.name, hv.value, fmt_stderr(hv.stderr))?;
            writeln!(finals, "{},{t},CPF,{cpf},", r.name)?;
            hvs.push(hv.value);
            cpfs.push(cpf);
        }
        final_hv.push(hvs);
        final_cpf.push(cpfs);
    }
    finals.flush()?;

    let mut verdicts = create(&out_dir.join("verdicts.csv"))?;
    writeln!(verdicts, "{header}")?;
    writeln!(verdicts, "run,baseline,indicator,verdict")?;
    for k in 1..runs.len() {
        for (name, vals) in [("HV", &final_hv), ("CPF", &final_cpf)] {
            let v = match indicators::rank_sum_test(&vals[k], &vals[0], significance) {
                Ok(v) => v.symbol().to_string(),
                Err(e) => {
                    warn!("{name} verdict for {} unavailable: {e}", runs[k].name);
                    "NA".into()
                }
            };
            writeln!(verdicts, "{},{},{name},{v}", runs[k].name, runs[0].name)?;
        }
    }
    verdicts.flush()?;

    if let Some(path) = baseline {
        let s = read_baseline(path, &criteria)?;
        let mut rel = create(&out_dir.join("relations.csv"))?;
        writeln!(rel, "{header}")?;
        writeln!(rel, "run,metric,value")?;
        for r in &runs {
            let arch = TrialArchive {
                trials: r.finals.clone(),
                s: s.clone(),
            };
            writeln!(rel, "{},Dominate,{}", r.name, arch.dominate()?)?;
            writeln!(rel, "{},Incomparable,{}", r.name, arch.incomparable()?)?;
            writeln!(rel, "{},Dominated,{}", r.name, arch.dominated()?)?;
        }
        rel.flush()?;
    }
    Ok(())
}

/// `synth`: writes a biased synthetic dataset as CSV with label column
/// `label` and sensitive column `group`.
pub fn cmd_synth(n: usize, d: usize, bias: f64, seed: u64, out: &Path) -> Result<()> {
    let ds = data::synth_biased(n, d, bias, seed)?;
    let mut w = create(out)?;
    writeln!(w, "# synth n={n} d={d} bias={bias} seed={seed}")?;
    ds.write_csv(&mut w, "label")?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Parser)]
#[command(name = "fairevo", version, about = "Fairness-aware multi-objective evolutionary learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every trial of an experiment spec.
    Train {
        spec: PathBuf,
        /// Output directory (overrides output_dir in the experiment spec).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build ensembles from a trained run and score them on the test split.
    Ensemble {
        run_dir: PathBuf,
        /// EnsAll, EnsBest, EnsKnee or EnsDiv; repeatable.
        #[arg(long = "strategy")]
        strategies: Vec<String>,
        /// Target size for EnsKnee and EnsDiv.
        #[arg(long)]
        size: Option<usize>,
    },
    /// Indicator tables and plot data for one or more runs.
    Report {
        #[arg(required = true)]
        run_dirs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// CSV with one row of objective values to compare against.
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
    /// Write a synthetic biased dataset.
    Synth {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        d: usize,
        #[arg(long, default_value_t = 0.3)]
        bias: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { spec, out } => cmd_train(&spec, out.as_deref()).map(|dir| {
            println!("{}", dir.display());
        }),
        Command::Ensemble { run_dir, strategies, size } => {
            let parsed: Vec<Strategy> = strategies.iter().map(|s| s.parse()).collect::<Result<_>>()?;
            cmd_ensemble(&run_dir, &parsed, size)
        }
        Command::Report { run_dirs, out, baseline } => cmd_report(&run_dirs, &out, baseline.as_deref()),
        Command::Synth { n, d, bias, seed, out } => cmd_synth(n, d, bias, seed, &out),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("fairevo: {e}");
            e.exit_code()
        }
    }
}
