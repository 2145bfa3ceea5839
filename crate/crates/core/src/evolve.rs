//! The generational loop: initialise and partially train λ networks, then
//! alternate reproduction and survival for a fixed number of generations,
//! recording every surviving population.

use std::io::{BufRead, Write};
use std::time::Instant;

use log::{debug, info};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GroupPartition};
use crate::error::{Error, Result};
use crate::metrics::MetricId;
use crate::moea::{self, Individual, Population, Problem, ReproSpec, SraSpec, VariationSpec};
use crate::nnet::{self, Genome, Loss, NetSpec, TrainSpec};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub net: NetSpec,
    /// Learning rate, batch size and epochs; `loss` and `seed` are set per call.
    pub train_spec: TrainSpec,
    /// Variation settings; `seed` is derived per generation.
    pub vspec: VariationSpec,
    pub repro: ReproSpec,
    /// Optimised criteria. Must include CE.
    pub criteria: Vec<MetricId>,
    /// Criteria recorded alongside the optimised ones.
    #[serde(default)]
    pub tracked: Vec<MetricId>,
    pub generations: usize,
    pub lambda: usize,
    pub alpha: f64,
    pub seed: u64,
    #[serde(default)]
    pub sra: SraSpec,
    /// Store genomes every this many generations (the final one always).
    #[serde(default)]
    pub checkpoint_every: Option<usize>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.net.validate()?;
        self.train_spec.validate()?;
        self.vspec.validate()?;
        if self.generations == 0 {
            return Err(Error::config("generations must be at least 1"));
        }
        if self.lambda < 2 {
            return Err(Error::config("lambda must be at least 2"));
        }
        if !self.criteria.contains(&MetricId::Ce) {
            return Err(Error::config("criteria must include CE"));
        }
        let all: Vec<MetricId> = self.criteria.iter().chain(&self.tracked).copied().collect();
        for (i, c) in all.iter().enumerate() {
            if all[..i].contains(c) {
                return Err(Error::config(format!("criterion {c} listed twice")));
            }
        }
        if self.repro.losses.is_empty() || self.repro.k == 0 {
            return Err(Error::config("need at least one training loss and K >= 1"));
        }
        for loss in &self.repro.losses {
            if !self.criteria.contains(&loss.metric()) {
                return Err(Error::config(format!("training loss {loss} is not an optimised criterion")));
            }
        }
        self.repro.kappa(self.lambda)?;
        if !(self.sra.pc_low <= self.sra.pc_high) || self.sra.pc_low < 0.0 || self.sra.pc_high > 1.0 {
            return Err(Error::config("pc range must satisfy 0 <= pc_low <= pc_high <= 1"));
        }
        if self.alpha == 0.0 || self.alpha == 1.0 || !self.alpha.is_finite() {
            return Err(Error::config("alpha must be finite and differ from 0 and 1"));
        }
        Ok(())
    }

    /// Optimised criteria followed by tracked ones.
    pub fn all_criteria(&self) -> Vec<MetricId> {
        self.criteria.iter().chain(&self.tracked).copied().collect()
    }
}

/// Surviving population after one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Optimised objectives of each survivor, in rank order.
    pub objectives: Vec<Vec<f64>>,
    /// Tracked criteria of each survivor.
    pub extra: Vec<Vec<f64>>,
    pub pc: Option<f64>,
    pub seed: u64,
    pub wall_secs: f64,
    /// Present at checkpoint generations.
    pub genomes: Option<Vec<Genome>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    pub criteria: Vec<MetricId>,
    pub tracked: Vec<MetricId>,
    /// `generations + 1` records; index 0 is the initial population.
    pub records: Vec<GenerationRecord>,
}

impl RunHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Objectives plus tracked values of generation `g`, projected onto `wanted`.
    pub fn values(&self, g: usize, wanted: &[MetricId]) -> Result<Vec<Vec<f64>>> {
        let rec = self
            .records
            .get(g)
            .ok_or_else(|| Error::Report(format!("generation {g} not recorded")))?;
        let all: Vec<MetricId> = self.criteria.iter().chain(&self.tracked).copied().collect();
        let cols: Vec<usize> = wanted
            .iter()
            .map(|w| {
                all.iter()
                    .position(|c| c == w)
                    .ok_or_else(|| Error::Report(format!("criterion {w} not recorded")))
            })
            .collect::<Result<_>>()?;
        Ok(rec
            .objectives
            .iter()
            .zip(&rec.extra)
            .map(|(o, e)| {
                cols.iter()
                    .map(|&c| if c < o.len() { o[c] } else { e[c - o.len()] })
                    .collect()
            })
            .collect())
    }
}

fn record(pop: &Population, generation: usize, pc: Option<f64>, seed: u64, started: Instant, keep: bool) -> GenerationRecord {
    GenerationRecord {
        generation,
        objectives: pop.members.iter().map(|m| m.objectives.0.clone()).collect(),
        extra: pop.members.iter().map(|m| m.extra.clone()).collect(),
        pc,
        seed,
        wall_secs: started.elapsed().as_secs_f64(),
        genomes: keep.then(|| pop.members.iter().map(|m| m.genome.clone()).collect()),
    }
}

fn rank_initial(members: Vec<Individual>, cfg: &RunConfig, seed: u64) -> Population {
    let points: Vec<&[f64]> = members.iter().map(|m| m.objectives.values()).collect();
    let order: Vec<usize> = if cfg.criteria.len() == 1 {
        let mut o: Vec<usize> = (0..members.len()).collect();
        o.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]));
        o
    } else {
        let pc = (cfg.sra.pc_low + cfg.sra.pc_high) / 2.0;
        moea::sra_rank(&points, pc, &cfg.sra, seed)
    };
    let mut slots: Vec<Option<Individual>> = members.into_iter().map(Some).collect();
    Population {
        members: order.iter().map(|&i| slots[i].take().expect("permutation")).collect(),
        capacity: cfg.lambda,
    }
}

/// Runs the full loop. Training uses `train`, every evaluation uses `val`.
pub fn run(
    cfg: &RunConfig,
    train: &Dataset,
    train_part: &GroupPartition,
    val: &Dataset,
    val_part: &GroupPartition,
) -> Result<(Population, RunHistory)> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::data("training and validation sets must be non-empty"));
    }
    let problem = Problem {
        net: &cfg.net,
        train,
        train_part,
        val,
        val_part,
        criteria: &cfg.criteria,
        tracked: &cfg.tracked,
        alpha: cfg.alpha,
        learning_rate: cfg.train_spec.learning_rate,
        batch_size: cfg.train_spec.batch_size,
        epochs_per_partial: cfg.train_spec.epochs_per_partial,
    };
    let checkpoint = |g: usize| g == cfg.generations || cfg.checkpoint_every.is_some_and(|k| k > 0 && g.is_multiple_of(k));
    let started = Instant::now();

    let init_seed = seed::derive(cfg.seed, &[0]);
    let losses = &cfg.repro.losses;
    let initial: Vec<Individual> = (0..cfg.lambda)
        .into_par_iter()
        .map(|i| {
            let g = nnet::init_genome(&cfg.net, seed::derive(init_seed, &[i as u64, 0]));
            let loss: Loss = losses[i % losses.len()];
            let trained = problem.train(&g, loss, seed::derive(init_seed, &[i as u64, 1]))?;
            problem.individual(trained, 0, loss.to_string())
        })
        .collect::<Result<_>>()
        .map_err(|e| Error::Generation { generation: 0, source: Box::new(e) })?;
    let mut pop = rank_initial(initial, cfg, seed::derive(init_seed, &[u64::MAX]));
    let mut records = vec![record(&pop, 0, None, init_seed, started, checkpoint(0))];
    info!("generation 0: {} members", pop.len());

    for gen in 1..=cfg.generations {
        let gen_seed = seed::derive(cfg.seed, &[gen as u64]);
        let step = || -> Result<(Population, f64)> {
            let mut rng = seed::rng(seed::derive(gen_seed, &[0]));
            let pc = if cfg.sra.pc_high > cfg.sra.pc_low {
                rng.random_range(cfg.sra.pc_low..=cfg.sra.pc_high)
            } else {
                cfg.sra.pc_low
            };
            let vspec = VariationSpec {
                seed: seed::derive(gen_seed, &[1]),
                ..cfg.vspec
            };
            let offspring = moea::reproduce(&pop, &cfg.repro, &vspec, &problem, gen)?;
            let mut union = pop.members.clone();
            union.extend(offspring);
            let next = moea::survival(union, cfg.lambda, pc, &cfg.sra, seed::derive(gen_seed, &[2]))?;
            Ok((next, pc))
        };
        let (next, pc) = step().map_err(|e| Error::Generation { generation: gen, source: Box::new(e) })?;
        pop = next;
        records.push(record(&pop, gen, Some(pc), gen_seed, started, checkpoint(gen)));
        debug!("generation {gen}: pc = {pc:.3}, best first objective = {}", pop.members[0].objectives.0[0]);
    }
    info!("run finished in {:.2}s", started.elapsed().as_secs_f64());
    Ok((
        pop,
        RunHistory {
            criteria: cfg.criteria.clone(),
            tracked: cfg.tracked.clone(),
            records,
        },
    ))
}

/// Spec digest and seed written into every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub spec_sha256: String,
    pub seed: u64,
}

impl Provenance {
    pub fn csv_comment(&self) -> String {
        format!("# spec_sha256={} seed={}", self.spec_sha256, self.seed)
    }
}

/// Tidy history: `generation,individual,criterion,value`, optimised then
/// tracked criteria.
pub fn write_history_csv<W: Write>(history: &RunHistory, prov: &Provenance, mut out: W) -> Result<()> {
    writeln!(out, "{}", prov.csv_comment())?;
    writeln!(out, "generation,individual,criterion,value")?;
    for rec in &history.records {
        for (i, (o, e)) in rec.objectives.iter().zip(&rec.extra).enumerate() {
            let names = history.criteria.iter().chain(&history.tracked);
            for (c, v) in names.zip(o.iter().chain(e)) {
                writeln!(out, "{},{},{},{}", rec.generation, i, c, v)?;
            }
        }
    }
    Ok(())
}

/// Reads a file written by [`write_history_csv`] back into per-generation
/// rows keyed by criterion order of first appearance.
pub fn read_history_csv<R: BufRead>(input: R) -> Result<(Vec<MetricId>, Vec<Vec<Vec<f64>>>)> {
    let mut criteria: Vec<MetricId> = Vec::new();
    let mut gens: Vec<Vec<Vec<f64>>> = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.starts_with("generation,") || line.trim().is_empty() {
            continue;
        }
        let bad = || Error::data(format!("history line {}: malformed", lineno + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(bad());
        }
        let g: usize = f[0].parse().map_err(|_| bad())?;
        let i: usize = f[1].parse().map_err(|_| bad())?;
        let c: MetricId = f[2].parse().map_err(|_| bad())?;
        let v: f64 = f[3].parse().map_err(|_| bad())?;
        let col = match criteria.iter().position(|x| *x == c) {
            Some(p) => p,
            None => {
                criteria.push(c);
                criteria.len() - 1
            }
        };
        if gens.len() <= g {
            gens.resize(g + 1, Vec::new());
        }
        if gens[g].len() <= i {
            gens[g].resize(i + 1, Vec::new());
        }
        let row = &mut gens[g][i];
        if row.len() <= col {
            row.resize(col + 1, f64::NAN);
        }
        row[col] = v;
    }
    Ok((criteria, gens))
}

/// First line of a population dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub provenance: Provenance,
    pub net: NetSpec,
    pub criteria: Vec<MetricId>,
    pub tracked: Vec<MetricId>,
    pub alpha: f64,
}

/// JSON lines: a [`DumpHeader`], then one [`Individual`] per line.
pub fn write_population_jsonl<W: Write>(header: &DumpHeader, pop: &Population, mut out: W) -> Result<()> {
    serde_json::to_writer(&mut out, header)?;
    writeln!(out)?;
    for m in &pop.members {
        serde_json::to_writer(&mut out, m)?;
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_population_jsonl<R: BufRead>(input: R) -> Result<(DumpHeader, Vec<Individual>)> {
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| Error::data("empty population dump"))??;
    let header: DumpHeader = serde_json::from_str(&first)?;
    let mut members = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ind: Individual = serde_json::from_str(&line)?;
        ind.genome.check(&header.net)?;
        members.push(ind);
    }
    if members.is_empty() {
        return Err(Error::data("population dump holds no individuals"));
    }
    Ok((header, members))
}
