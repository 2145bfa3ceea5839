//! Base-model selection from an evolved population and soft-voting
//! aggregation of the chosen members.

use std::fmt;
use std::str::FromStr;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GroupPartition};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricId, ObjectiveVector};
use crate::moea::{nondominated_set, Individual};
use crate::nnet::{self, Genome, NetSpec};

/// Default ensemble size for the knee and diversity strategies.
pub const DEFAULT_TARGET_SIZE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    /// Every nondominated model.
    All,
    /// The best nondominated model per criterion.
    Best,
    /// Models furthest below the hyperplane through the extreme points.
    Knee,
    /// A spread-out subset chosen by crowding removal.
    Div,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::All, Strategy::Best, Strategy::Knee, Strategy::Div];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::All => "EnsAll",
            Strategy::Best => "EnsBest",
            Strategy::Knee => "EnsKnee",
            Strategy::Div => "EnsDiv",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let key = key.strip_prefix("ens").unwrap_or(&key);
        match key {
            "all" => Ok(Strategy::All),
            "best" => Ok(Strategy::Best),
            "knee" => Ok(Strategy::Knee),
            "div" => Ok(Strategy::Div),
            _ => Err(Error::Usage(format!("unknown ensemble strategy '{s}'"))),
        }
    }
}

impl TryFrom<String> for Strategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub strategy: Strategy,
    /// Size for the knee and diversity strategies.
    pub target_size: usize,
    /// Criteria the population is re-evaluated on before selection.
    pub criteria: Vec<MetricId>,
    pub alpha: f64,
}

impl EnsembleSpec {
    pub fn new(strategy: Strategy, criteria: Vec<MetricId>) -> Self {
        Self {
            strategy,
            target_size: DEFAULT_TARGET_SIZE,
            criteria,
            alpha: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.criteria.is_empty() {
            return Err(Error::config("ensemble selection needs at least one criterion"));
        }
        if self.target_size == 0 && matches!(self.strategy, Strategy::Knee | Strategy::Div) {
            return Err(Error::config("ensemble target size must be at least 1"));
        }
        Ok(())
    }
}

/// Selected base models sharing one network shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub net: NetSpec,
    pub members: Vec<Genome>,
    /// Position of each member in the population it was chosen from.
    pub indices: Vec<usize>,
}

impl Ensemble {
    pub fn new(net: NetSpec, members: Vec<Genome>, indices: Vec<usize>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Selection("an ensemble needs at least one member".into()));
        }
        for g in &members {
            g.check(&net)?;
        }
        Ok(Self { net, members, indices })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Re-evaluates `pop` on the ensemble set and selects members per `spec`.
pub fn select(
    pop: &[Individual],
    net: &NetSpec,
    ens_data: &Dataset,
    part: &GroupPartition,
    spec: &EnsembleSpec,
) -> Result<Ensemble> {
    spec.validate()?;
    if pop.is_empty() {
        return Err(Error::Selection("cannot select from an empty population".into()));
    }
    let points: Vec<Vec<f64>> = pop
        .par_iter()
        .map(|ind| metrics::evaluate(net, &ind.genome, ens_data, part, &spec.criteria, spec.alpha).map(|v| v.0))
        .collect::<Result<_>>()?;
    let chosen = select_indices(&points, &spec.criteria, spec.strategy, spec.target_size)?;
    let members = chosen.iter().map(|&i| pop[i].genome.clone()).collect();
    Ensemble::new(*net, members, chosen)
}

/// Selection on precomputed objective vectors; returns ascending indices
/// into `points`, except for the knee strategy which returns them in knee
/// order.
pub fn select_indices(points: &[Vec<f64>], criteria: &[MetricId], strategy: Strategy, e: usize) -> Result<Vec<usize>> {
    if points.is_empty() {
        return Err(Error::Selection("no candidate models".into()));
    }
    let m = points[0].len();
    if m == 0 || points.iter().any(|p| p.len() != m) || criteria.len() != m {
        return Err(Error::data("objective vectors do not match the criteria"));
    }
    let nd = nondominated_set(points);
    if matches!(strategy, Strategy::Knee | Strategy::Div) && e >= nd.len() {
        if e > nd.len() {
            warn!("ensemble size {e} exceeds the {} nondominated models; using all", nd.len());
        }
        return Ok(nd);
    }
    Ok(match strategy {
        Strategy::All => nd,
        Strategy::Best => {
            let mut out: Vec<usize> = (0..m)
                .map(|j| {
                    *nd.iter()
                        .min_by(|&&a, &&b| points[a][j].total_cmp(&points[b][j]).then(a.cmp(&b)))
                        .expect("nondominated set is non-empty")
                })
                .collect();
            out.sort_unstable();
            out.dedup();
            out
        }
        Strategy::Knee => {
            let local: Vec<Vec<f64>> = normalized(&nd.iter().map(|&i| points[i].clone()).collect::<Vec<_>>());
            let ce = criteria.iter().position(|&c| c == MetricId::Ce);
            knee_order(&local, ce).into_iter().take(e).map(|k| nd[k]).collect()
        }
        Strategy::Div => {
            let local = normalized(&nd.iter().map(|&i| points[i].clone()).collect::<Vec<_>>());
            let mut keep = diversity_keep(&local, e);
            keep.sort_unstable();
            keep.into_iter().map(|k| nd[k]).collect()
        }
    })
}

/// Min-max normalisation over the given set; constant objectives map to 0.
fn normalized(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = points[0].len();
    let lo: Vec<f64> = (0..m).map(|j| points.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..m).map(|j| points.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max)).collect();
    points
        .iter()
        .map(|p| {
            (0..m)
                .map(|j| {
                    let w = hi[j] - lo[j];
                    if w > 0.0 {
                        (p[j] - lo[j]) / w
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Normal vector `a` of the hyperplane `a·x = 1` through the extreme
/// points; `(1, …, 1)` when that plane is undefined or not facing the origin.
fn extreme_hyperplane(points: &[Vec<f64>]) -> Vec<f64> {
    let m = points[0].len();
    let rows: Vec<&Vec<f64>> = (0..m)
        .map(|j| {
            points
                .iter()
                .enumerate()
                .max_by(|(ia, a), (ib, b)| a[j].total_cmp(&b[j]).then(ib.cmp(ia)))
                .map(|(_, p)| p)
                .expect("non-empty set")
        })
        .collect();
    let e = DMatrix::from_fn(m, m, |r, c| rows[r][c]);
    let ones = DVector::from_element(m, 1.0);
    match e.lu().solve(&ones) {
        Some(a) if a.iter().all(|v| v.is_finite() && *v > 0.0) => a.iter().copied().collect(),
        _ => vec![1.0; m],
    }
}

/// Order of `points` (normalised) by knee score, best first. The score is
/// the distance below the extreme-point hyperplane; ties go to the point
/// nearer the ideal, then the lower CE, then the lower index.
pub fn knee_order(points: &[Vec<f64>], ce: Option<usize>) -> Vec<usize> {
    let a = extreme_hyperplane(points);
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let score: Vec<f64> = points
        .iter()
        .map(|p| (1.0 - a.iter().zip(p).map(|(x, y)| x * y).sum::<f64>()) / norm)
        .collect();
    let ideal_dist: Vec<f64> = points.iter().map(|p| p.iter().map(|v| v * v).sum::<f64>()).collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        score[j]
            .total_cmp(&score[i])
            .then(ideal_dist[i].total_cmp(&ideal_dist[j]))
            .then(ce.map_or(std::cmp::Ordering::Equal, |c| points[i][c].total_cmp(&points[j][c])))
            .then(i.cmp(&j))
    });
    order
}

/// `(Σ|a_j - b_j|^(1/m))^m`.
pub fn fractional_distance(a: &[f64], b: &[f64]) -> f64 {
    let m = a.len() as f64;
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs().powf(1.0 / m))
        .sum::<f64>()
        .powf(m)
}

/// Removes the most crowded member until `e` remain. The closest pair
/// loses the member whose next-nearest neighbour is closer.
fn diversity_keep(points: &[Vec<f64>], e: usize) -> Vec<usize> {
    let n = points.len();
    let d: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| fractional_distance(&points[i], &points[j])).collect())
        .collect();
    let mut alive: Vec<usize> = (0..n).collect();
    while alive.len() > e.max(1) {
        let mut pair = (alive[0], alive[1]);
        let mut best = f64::INFINITY;
        for (x, &i) in alive.iter().enumerate() {
            for &j in &alive[x + 1..] {
                if d[i][j] < best {
                    best = d[i][j];
                    pair = (i, j);
                }
            }
        }
        let second = |i: usize, partner: usize| {
            alive
                .iter()
                .filter(|&&k| k != i && k != partner)
                .map(|&k| d[i][k])
                .fold(f64::INFINITY, f64::min)
        };
        let (i, j) = pair;
        let victim = if second(i, j) < second(j, i) { i } else { j };
        alive.retain(|&k| k != victim);
    }
    alive
}

/// Per-member probabilities for every row of `ds`.
fn member_probs(ens: &Ensemble, ds: &Dataset) -> Result<Vec<Vec<f64>>> {
    ens.members
        .par_iter()
        .map(|g| nnet::predict_all(&ens.net, g, ds))
        .collect()
}

/// Mean of sorted per-member values, so the result ignores member order.
fn soft_vote(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Averaged member probability for one feature row.
pub fn predict(ens: &Ensemble, x: &[f64]) -> Result<f64> {
    if ens.is_empty() {
        return Err(Error::Selection("empty ensemble".into()));
    }
    let values = ens
        .members
        .iter()
        .map(|g| nnet::forward(&ens.net, g, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(soft_vote(values))
}

/// Averaged member probabilities for every row of `ds`.
pub fn predict_all(ens: &Ensemble, ds: &Dataset) -> Result<Vec<f64>> {
    if ens.is_empty() {
        return Err(Error::Selection("empty ensemble".into()));
    }
    let per_member = member_probs(ens, ds)?;
    Ok((0..ds.len())
        .map(|i| soft_vote(per_member.iter().map(|p| p[i]).collect()))
        .collect())
}

/// Scores the thresholded averaged prediction on `criteria`.
pub fn evaluate_ensemble(
    ens: &Ensemble,
    test: &Dataset,
    part: &GroupPartition,
    criteria: &[MetricId],
    alpha: f64,
) -> Result<ObjectiveVector> {
    let probs = predict_all(ens, test)?;
    metrics::score_probabilities(&probs, test, part, criteria, alpha)
}
