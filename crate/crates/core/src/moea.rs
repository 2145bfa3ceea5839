//! Dominance, stochastic-ranking survival selection, tournament mating
//! selection, weight crossover, Gaussian mutation and the
//! exploration/exploitation reproduction step.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GroupPartition};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricId, ObjectiveVector};
use crate::nnet::{self, Genome, Loss, NetSpec, TrainSpec};
use crate::seed::{self, Rng};

/// Weights are clamped to this magnitude after variation and training.
pub const WEIGHT_LIMIT: f64 = 1e3;

/// A trained network and its latest evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: Genome,
    /// Values of the optimised criteria.
    pub objectives: ObjectiveVector,
    /// Values of tracked, non-optimised criteria.
    #[serde(default)]
    pub extra: Vec<f64>,
    pub birth_gen: usize,
    /// Loss used for the most recent partial training.
    pub lineage: String,
}

/// Members ordered by selection rank (index 0 is best).
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub members: Vec<Individual>,
    pub capacity: usize,
}

impl Population {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn objectives(&self) -> Vec<&[f64]> {
        self.members.iter().map(|m| m.objectives.values()).collect()
    }

    /// Binary tournament on positional rank.
    pub fn mating_select(&self, count: usize, rng: &mut Rng) -> Result<Vec<usize>> {
        let ranks: Vec<usize> = (0..self.len()).collect();
        mating_select(&ranks, count, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationSpec {
    pub sigma: f64,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub seed: u64,
}

impl VariationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::config("mutation strength must be positive"));
        }
        for (name, p) in [("crossover_prob", self.crossover_prob), ("mutation_prob", self.mutation_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Exploration repeats `k` and the set of training losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproSpec {
    pub k: usize,
    pub losses: Vec<Loss>,
}

impl ReproSpec {
    /// Exploitation parent count `λ - m·K`.
    pub fn kappa(&self, lambda: usize) -> Result<usize> {
        let explore = self.k * self.losses.len();
        lambda
            .checked_sub(explore)
            .ok_or_else(|| Error::config(format!("m*K = {explore} exceeds lambda = {lambda}")))
    }

    /// Offspring per generation, `m·K + λ`.
    pub fn offspring_count(&self, lambda: usize) -> usize {
        self.k * self.losses.len() + lambda
    }
}

/// Stochastic-ranking parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SraSpec {
    /// Range `pc` is drawn from each generation.
    pub pc_low: f64,
    pub pc_high: f64,
    /// Bubble passes; `None` means the union size.
    pub passes: Option<usize>,
    /// IBEA scaling factor for the ε-indicator fitness.
    pub kappa: f64,
}

impl Default for SraSpec {
    fn default() -> Self {
        Self {
            pc_low: 0.4,
            pc_high: 0.6,
            passes: None,
            kappa: 0.05,
        }
    }
}

/// Pareto dominance for minimisation.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::data("objective vectors differ in length"));
    }
    Ok(dominates_unchecked(a, b))
}

#[inline]
pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Indices of members not dominated by any other member.
pub fn nondominated_set<P: AsRef<[f64]>>(points: &[P]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    // A point can only be dominated by one with a smaller coordinate sum.
    let sums: Vec<f64> = points.iter().map(|p| p.as_ref().iter().sum()).collect();
    order.sort_by(|&a, &b| sums[a].total_cmp(&sums[b]).then(a.cmp(&b)));
    let mut front: Vec<usize> = Vec::new();
    for &i in &order {
        let p = points[i].as_ref();
        if !front.iter().any(|&j| dominates_unchecked(points[j].as_ref(), p)) {
            front.push(i);
        }
    }
    front.sort_unstable();
    front
}

/// Min-max normalisation per objective; constant objectives map to 0.
fn normalise<P: AsRef<[f64]>>(points: &[P]) -> Vec<Vec<f64>> {
    let m = points.first().map_or(0, |p| p.as_ref().len());
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for p in points {
        for (j, &v) in p.as_ref().iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    points
        .iter()
        .map(|p| {
            p.as_ref()
                .iter()
                .enumerate()
                .map(|(j, &v)| {
                    let w = hi[j] - lo[j];
                    if w > 0.0 {
                        (v - lo[j]) / w
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// IBEA fitness under the additive ε-indicator; larger is better.
pub fn epsilon_fitness<P: AsRef<[f64]>>(points: &[P], kappa: f64) -> Vec<f64> {
    let pts = normalise(points);
    let n = pts.len();
    let eps = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x - y)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut ind = vec![0.0; n * n];
    let mut c = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = eps(&pts[i], &pts[j]);
                ind[i * n + j] = v;
                c = c.max(v.abs());
            }
        }
    }
    if c == 0.0 {
        c = 1.0;
    }
    (0..n)
        .map(|x| {
            (0..n)
                .filter(|&y| y != x)
                .map(|y| -(-ind[y * n + x] / (c * kappa)).exp())
                .sum()
        })
        .collect()
}

/// Shift-based density: distance from each point to its nearest shifted
/// neighbour. Larger means less crowded and is better.
pub fn sde_density<P: AsRef<[f64]>>(points: &[P]) -> Vec<f64> {
    let pts = normalise(points);
    let n = pts.len();
    (0..n)
        .map(|x| {
            (0..n)
                .filter(|&y| y != x)
                .map(|y| {
                    pts[y]
                        .iter()
                        .zip(&pts[x])
                        .map(|(a, b)| (a - b).max(0.0).powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .map(|d| if d.is_finite() { d } else { 0.0 })
        .collect()
}

/// Stochastic bubble ranking over two indicator scores (larger better).
/// Each adjacent comparison uses `primary` with probability `pc`, else
/// `secondary`. Returns indices best first.
pub fn stochastic_rank(primary: &[f64], secondary: &[f64], pc: f64, passes: usize, rng: &mut Rng) -> Vec<usize> {
    let n = primary.len();
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..passes {
        let mut swapped = false;
        for j in 0..n.saturating_sub(1) {
            let (a, b) = (order[j], order[j + 1]);
            let u: f64 = rng.random();
            let worse = if u < pc {
                primary[a] < primary[b]
            } else {
                secondary[a] < secondary[b]
            };
            if worse {
                order.swap(j, j + 1);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    order
}

/// Ranks `points` with the ε-indicator/SDE stochastic ranking.
pub fn sra_rank<P: AsRef<[f64]>>(points: &[P], pc: f64, spec: &SraSpec, seed: u64) -> Vec<usize> {
    let eps = epsilon_fitness(points, spec.kappa);
    let sde = sde_density(points);
    let mut rng = seed::rng(seed);
    stochastic_rank(&eps, &sde, pc, spec.passes.unwrap_or(points.len()), &mut rng)
}

fn check_survival(union_len: usize, lambda: usize, pc: f64) -> Result<()> {
    if union_len < lambda {
        return Err(Error::Selection(format!(
            "cannot keep {lambda} survivors from {union_len} candidates"
        )));
    }
    if !(0.0..=1.0).contains(&pc) {
        return Err(Error::config("pc must lie in [0, 1]"));
    }
    Ok(())
}

/// Keeps the top `lambda` of `union` under stochastic ranking.
pub fn sra_survival(union: Vec<Individual>, lambda: usize, pc: f64, spec: &SraSpec, seed: u64) -> Result<Population> {
    check_survival(union.len(), lambda, pc)?;
    let points: Vec<&[f64]> = union.iter().map(|m| m.objectives.values()).collect();
    let order = sra_rank(&points, pc, spec, seed);
    Ok(take_in_order(union, &order, lambda))
}

fn take_in_order(union: Vec<Individual>, order: &[usize], lambda: usize) -> Population {
    let mut slots: Vec<Option<Individual>> = union.into_iter().map(Some).collect();
    let members = order[..lambda]
        .iter()
        .map(|&i| slots[i].take().expect("rank order is a permutation"))
        .collect();
    Population { members, capacity: lambda }
}

/// Survival selection: stable sort for a single objective, stochastic
/// ranking otherwise.
pub fn survival(union: Vec<Individual>, lambda: usize, pc: f64, spec: &SraSpec, seed: u64) -> Result<Population> {
    let m = union.first().map_or(0, |i| i.objectives.len());
    if m == 1 {
        check_survival(union.len(), lambda, pc)?;
        let mut order: Vec<usize> = (0..union.len()).collect();
        order.sort_by(|&a, &b| union[a].objectives.0[0].total_cmp(&union[b].objectives.0[0]));
        return Ok(take_in_order(union, &order, lambda));
    }
    sra_survival(union, lambda, pc, spec, seed)
}

/// Binary tournaments with replacement; the lower rank wins, ties are
/// broken by a coin flip.
pub fn mating_select(ranks: &[usize], count: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if ranks.is_empty() {
        return Err(Error::Selection("mating selection from an empty population".into()));
    }
    Ok((0..count)
        .map(|_| {
            let a = rng.random_range(0..ranks.len());
            let b = rng.random_range(0..ranks.len());
            match ranks[a].cmp(&ranks[b]) {
                std::cmp::Ordering::Less => a,
                std::cmp::Ordering::Greater => b,
                std::cmp::Ordering::Equal => {
                    if rng.random_bool(0.5) {
                        a
                    } else {
                        b
                    }
                }
            }
        })
        .collect())
}

/// Blend crossover with explicit per-coordinate weights `u`.
pub fn weight_crossover_with(p: &Genome, q: &Genome, u: &[f64]) -> Result<(Genome, Genome)> {
    if p.len() != q.len() || u.len() != p.len() {
        return Err(Error::data("crossover parents differ in length"));
    }
    let mut o1 = Vec::with_capacity(p.len());
    let mut o2 = Vec::with_capacity(p.len());
    for ((&a, &b), &w) in p.0.iter().zip(&q.0).zip(u) {
        o1.push(w * a + (1.0 - w) * b);
        o2.push(w * b + (1.0 - w) * a);
    }
    Ok((Genome(o1), Genome(o2)))
}

/// `o1 = u·p + (1-u)·q`, `o2 = u·q + (1-u)·p` with `u_i ~ U[0, 1]`.
pub fn weight_crossover(p: &Genome, q: &Genome, rng: &mut Rng) -> Result<(Genome, Genome)> {
    let u: Vec<f64> = (0..p.len()).map(|_| rng.random::<f64>()).collect();
    weight_crossover_with(p, q, &u)
}

/// Adds `N(0, σ²)` noise to every coordinate.
pub fn gaussian_mutation(g: &Genome, sigma: f64, rng: &mut Rng) -> Result<Genome> {
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::config(format!("mutation strength: {e}")))?;
    Ok(Genome(g.0.iter().map(|w| w + normal.sample(rng)).collect()))
}

fn clamp_weights(g: &mut Genome) {
    for w in &mut g.0 {
        *w = w.clamp(-WEIGHT_LIMIT, WEIGHT_LIMIT);
    }
}

/// Everything needed to train and score a genome.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub net: &'a NetSpec,
    pub train: &'a Dataset,
    pub train_part: &'a GroupPartition,
    pub val: &'a Dataset,
    pub val_part: &'a GroupPartition,
    /// Optimised criteria.
    pub criteria: &'a [MetricId],
    /// Additionally recorded criteria.
    pub tracked: &'a [MetricId],
    pub alpha: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs_per_partial: usize,
}

impl Problem<'_> {
    /// Optimised criteria followed by tracked ones.
    pub fn all_criteria(&self) -> Vec<MetricId> {
        let mut all = self.criteria.to_vec();
        all.extend_from_slice(self.tracked);
        all
    }

    pub fn train_spec(&self, loss: Loss, seed: u64) -> TrainSpec {
        TrainSpec {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs_per_partial: self.epochs_per_partial,
            loss,
            alpha: self.alpha,
            seed,
        }
    }

    pub fn train(&self, g: &Genome, loss: Loss, seed: u64) -> Result<Genome> {
        let mut out = nnet::partial_train(self.net, g, self.train, self.train_part, &self.train_spec(loss, seed))?;
        clamp_weights(&mut out);
        Ok(out)
    }

    /// Evaluates on the validation set and wraps the result.
    pub fn individual(&self, genome: Genome, birth_gen: usize, lineage: String) -> Result<Individual> {
        let all = self.all_criteria();
        let v = metrics::evaluate(self.net, &genome, self.val, self.val_part, &all, self.alpha)?;
        let (obj, extra) = v.0.split_at(self.criteria.len());
        Ok(Individual {
            genome,
            objectives: ObjectiveVector(obj.to_vec()),
            extra: extra.to_vec(),
            birth_gen,
            lineage,
        })
    }
}

/// Index of the best member on criterion `target`; ties go to the lower
/// index, then the lower CE.
fn best_on(pop: &Population, criteria: &[MetricId], target: MetricId) -> Result<usize> {
    let j = criteria
        .iter()
        .position(|&c| c == target)
        .ok_or_else(|| Error::config(format!("loss {target} is not among the optimised criteria")))?;
    let ce = criteria.iter().position(|&c| c == MetricId::Ce);
    let key = |i: usize| {
        let o = &pop.members[i].objectives.0;
        (o[j], ce.map_or(0.0, |c| o[c]))
    };
    Ok((0..pop.len())
        .min_by(|&a, &b| {
            let (ka, kb) = (key(a), key(b));
            ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(a.cmp(&b))
        })
        .expect("population is non-empty"))
}

/// One unit of offspring work, prepared sequentially and executed in parallel.
struct Job {
    start: Genome,
    loss: Loss,
    /// Consecutive partial trainings; each snapshot is one offspring.
    repeats: usize,
    seed: u64,
}

fn vary(
    pop: &Population,
    first: usize,
    second: usize,
    vspec: &VariationSpec,
    rng: &mut Rng,
) -> Result<(Genome, Genome)> {
    let (p, q) = (&pop.members[first].genome, &pop.members[second].genome);
    let (mut o1, mut o2) = if rng.random_bool(vspec.crossover_prob) {
        weight_crossover(p, q, rng)?
    } else {
        (p.clone(), q.clone())
    };
    if rng.random_bool(vspec.mutation_prob) {
        o1 = gaussian_mutation(&o1, vspec.sigma, rng)?;
    }
    if rng.random_bool(vspec.mutation_prob) {
        o2 = gaussian_mutation(&o2, vspec.sigma, rng)?;
    }
    clamp_weights(&mut o1);
    clamp_weights(&mut o2);
    Ok((o1, o2))
}

fn run_job(problem: &Problem<'_>, job: &Job, vspec: &VariationSpec, gen: usize) -> Result<Vec<Individual>> {
    let mut out = Vec::with_capacity(job.repeats);
    let mut current = job.start.clone();
    for r in 0..job.repeats {
        let train_seed = seed::derive(job.seed, &[r as u64]);
        let attempt = |g: &Genome, s: u64| -> Result<Individual> {
            let trained = problem.train(g, job.loss, s)?;
            let ind = problem.individual(trained, gen, job.loss.to_string())?;
            if ind.objectives.is_finite() {
                Ok(ind)
            } else {
                Err(Error::Training("offspring has non-finite objectives".into()))
            }
        };
        let ind = match attempt(&current, train_seed) {
            Ok(ind) => ind,
            Err(first) => {
                // Regenerate once: re-perturb the pre-training genome and retrain.
                let retry_seed = seed::derive(job.seed, &[r as u64, 1]);
                let mut rng = seed::rng(retry_seed);
                let mut regenerated = gaussian_mutation(&current, vspec.sigma, &mut rng)?;
                clamp_weights(&mut regenerated);
                attempt(&regenerated, retry_seed).map_err(|second| {
                    Error::Training(format!("offspring failed twice: {first}; {second}"))
                })?
            }
        };
        current = ind.genome.clone();
        out.push(ind);
    }
    Ok(out)
}

/// Produces `m·K + λ` evaluated offspring from `pop`.
///
/// Exploration: for each training loss, the member best on that loss is
/// crossed with a tournament-selected mate (first child kept), mutated, then
/// partially trained `K` times in succession on that loss; every snapshot is
/// an offspring. Exploitation: `κ = λ - m·K` tournament parents are paired
/// with tournament mates to breed `λ` children, each trained once on a
/// random loss.
pub fn reproduce(
    pop: &Population,
    spec: &ReproSpec,
    vspec: &VariationSpec,
    problem: &Problem<'_>,
    gen: usize,
) -> Result<Vec<Individual>> {
    vspec.validate()?;
    if pop.is_empty() {
        return Err(Error::Selection("cannot reproduce an empty population".into()));
    }
    if spec.losses.is_empty() {
        return Err(Error::config("at least one training loss is required"));
    }
    let lambda = pop.capacity;
    let kappa = spec.kappa(lambda)?.max(1).min(pop.len());
    let mut rng = seed::rng(vspec.seed);
    let mut jobs = Vec::new();

    for &loss in &spec.losses {
        let best = best_on(pop, problem.criteria, loss.metric())?;
        let mate = pop.mating_select(1, &mut rng)?[0];
        let (child, _) = vary(pop, best, mate, vspec, &mut rng)?;
        jobs.push(Job {
            start: child,
            loss,
            repeats: spec.k,
            seed: rng.random(),
        });
    }

    let parents = pop.mating_select(kappa, &mut rng)?;
    let mut bred = 0;
    let mut cursor = 0;
    while bred < lambda {
        let p = parents[cursor % parents.len()];
        cursor += 1;
        let q = pop.mating_select(1, &mut rng)?[0];
        let (o1, o2) = vary(pop, p, q, vspec, &mut rng)?;
        for child in [o1, o2] {
            if bred == lambda {
                break;
            }
            let loss = spec.losses[rng.random_range(0..spec.losses.len())];
            jobs.push(Job {
                start: child,
                loss,
                repeats: 1,
                seed: rng.random(),
            });
            bred += 1;
        }
    }

    let results: Vec<Result<Vec<Individual>>> = jobs
        .par_iter()
        .map(|job| run_job(problem, job, vspec, gen))
        .collect();
    let mut offspring = Vec::with_capacity(spec.offspring_count(lambda));
    for r in results {
        offspring.extend(r?);
    }
    Ok(offspring)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_front(points: &[Vec<f64>]) -> Vec<usize> {
        (0..points.len())
            .filter(|&i| {
                !(0..points.len()).any(|j| {
                    j != i
                        && points[j].iter().zip(&points[i]).all(|(a, b)| a <= b)
                        && points[j].iter().zip(&points[i]).any(|(a, b)| a < b)
                })
            })
            .collect()
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates(&[0.0, 0.0], &[1.0, 1.0]).unwrap());
        assert!(!dominates(&[0.0, 1.0], &[1.0, 0.0]).unwrap());
        assert!(!dominates(&[1.0, 0.0], &[0.0, 1.0]).unwrap());
        assert!(!dominates(&[0.3, 0.3], &[0.3, 0.3]).unwrap());
        assert!(dominates(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn nondominated_examples() {
        let pts = vec![vec![0.0, 2.0], vec![1.0, 1.0], vec![2.0, 0.0], vec![1.0, 2.0]];
        assert_eq!(nondominated_set(&pts), vec![0, 1, 2]);
        assert_eq!(nondominated_set(&[vec![3.0, 4.0]]), vec![0]);
        let dup = vec![vec![0.0, 1.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(nondominated_set(&dup), vec![0, 1]);
    }

    proptest! {
        #[test]
        fn nondominated_matches_brute_force(pts in prop::collection::vec(prop::collection::vec(0u8..6, 3), 1..60)) {
            let pts: Vec<Vec<f64>> = pts.into_iter().map(|p| p.into_iter().map(f64::from).collect()).collect();
            prop_assert_eq!(nondominated_set(&pts), brute_front(&pts));
        }

        #[test]
        fn crossover_conserves_sum(p in prop::collection::vec(-5.0f64..5.0, 1..30), seed in any::<u64>()) {
            let q: Vec<f64> = p.iter().map(|v| v * 0.7 - 1.0).collect();
            let (o1, o2) = weight_crossover(&Genome(p.clone()), &Genome(q.clone()), &mut seed::rng(seed)).unwrap();
            for i in 0..p.len() {
                prop_assert!((o1.0[i] + o2.0[i] - p[i] - q[i]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn forced_crossover_weights() {
        let p = Genome(vec![1.0, 2.0, 3.0]);
        let q = Genome(vec![-1.0, 0.0, 5.0]);
        let (a, b) = weight_crossover_with(&p, &q, &[1.0; 3]).unwrap();
        assert_eq!((a, b), (p.clone(), q.clone()));
        let (a, b) = weight_crossover_with(&p, &q, &[0.5; 3]).unwrap();
        assert_eq!(a, Genome(vec![0.0, 1.0, 4.0]));
        assert_eq!(a, b);
        assert!(weight_crossover(&p, &Genome(vec![1.0]), &mut seed::rng(0)).is_err());
    }

    #[test]
    fn mutation_statistics() {
        let sigma = 0.3;
        let g = Genome(vec![0.0; 100_000]);
        let m = gaussian_mutation(&g, sigma, &mut seed::rng(17)).unwrap();
        let n = m.len() as f64;
        let mean = m.0.iter().sum::<f64>() / n;
        let var = m.0.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 3.0 * sigma / n.sqrt(), "mean {mean}");
        assert!((var / (sigma * sigma) - 1.0).abs() < 0.05, "var {var}");
        let tiny = gaussian_mutation(&Genome(vec![1.0, -2.0]), 1e-300, &mut seed::rng(1)).unwrap();
        assert_eq!(tiny, Genome(vec![1.0, -2.0]));
        assert_eq!(
            gaussian_mutation(&g, sigma, &mut seed::rng(17)).unwrap(),
            m
        );
    }

    #[test]
    fn tournament_rules() {
        let mut rng = seed::rng(3);
        let picks = mating_select(&[0, 1], 500, &mut rng).unwrap();
        // any tournament containing rank 0 is won by it
        let zeros = picks.iter().filter(|&&i| i == 0).count();
        assert!(zeros > 300);
        let equal = mating_select(&[0; 4], 4000, &mut seed::rng(9)).unwrap();
        for k in 0..4 {
            let c = equal.iter().filter(|&&i| i == k).count();
            assert!((800..1200).contains(&c), "count {c}");
        }
        assert_eq!(
            mating_select(&[0, 1, 2], 10, &mut seed::rng(5)).unwrap(),
            mating_select(&[0, 1, 2], 10, &mut seed::rng(5)).unwrap()
        );
        assert!(mating_select(&[], 1, &mut rng).is_err());
    }

    fn ind(obj: Vec<f64>) -> Individual {
        Individual {
            genome: Genome(vec![0.0]),
            objectives: ObjectiveVector(obj),
            extra: vec![],
            birth_gen: 0,
            lineage: "CE".into(),
        }
    }

    #[test]
    fn survival_keeps_everything_when_sizes_match() {
        let union: Vec<Individual> = (0..5).map(|i| ind(vec![i as f64, 5.0 - i as f64])).collect();
        let pop = sra_survival(union.clone(), 5, 0.5, &SraSpec::default(), 1).unwrap();
        assert_eq!(pop.len(), 5);
        for u in &union {
            assert!(pop.members.contains(u));
        }
        assert!(matches!(
            sra_survival(union, 6, 0.5, &SraSpec::default(), 1),
            Err(Error::Selection(_))
        ));
    }

    #[test]
    fn pc_one_is_a_sort_by_epsilon_fitness() {
        let mut rng = seed::rng(2);
        for _ in 0..20 {
            let pts: Vec<Vec<f64>> = (0..15).map(|_| vec![rng.random(), rng.random(), rng.random()]).collect();
            let spec = SraSpec::default();
            let order = sra_rank(&pts, 1.0, &spec, 4);
            let fit = epsilon_fitness(&pts, spec.kappa);
            let mut oracle: Vec<usize> = (0..pts.len()).collect();
            oracle.sort_by(|&a, &b| fit[b].total_cmp(&fit[a]));
            assert_eq!(order, oracle);
        }
    }

    #[test]
    fn single_objective_survival_sorts() {
        let union: Vec<Individual> = [3.0, 1.0, 2.0, 0.5].iter().map(|&v| ind(vec![v])).collect();
        let pop = survival(union, 2, 0.5, &SraSpec::default(), 0).unwrap();
        assert_eq!(pop.members[0].objectives.0, vec![0.5]);
        assert_eq!(pop.members[1].objectives.0, vec![1.0]);
    }

    #[test]
    fn repro_counts() {
        let spec = ReproSpec {
            k: 10,
            losses: vec![Loss::CrossEntropy, Loss::IndividualEntropy, Loss::GroupEntropy],
        };
        assert_eq!(spec.offspring_count(100), 130);
        assert_eq!(spec.kappa(100).unwrap(), 70);
        assert!(spec.kappa(20).is_err());
        let one = ReproSpec { k: 10, losses: vec![Loss::CrossEntropy] };
        assert_eq!(one.offspring_count(300), 310);
    }
}
