//! Set-quality indicators: pseudo Pareto fronts, normalisation,
//! hypervolume, coverage over the front (CPF), the dominance-relation
//! metrics against a single reference solution, G-mean, and the Wilcoxon
//! rank-sum test used for `+/≈/−` verdicts.

use std::fmt;

use log::warn;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::moea::{dominates_unchecked, nondominated_set};
use crate::seed;

/// Every normalised coordinate of the hypervolume reference point.
pub const HV_REFERENCE: f64 = 1.1;
/// Largest dimension handled by the exact hypervolume.
pub const EXACT_HV_MAX_DIM: usize = 4;
/// Default Monte-Carlo sample count for high-dimensional hypervolume.
pub const HV_MC_SAMPLES: usize = 1_000_000;
/// Default sample count of the CPF estimator.
pub const CPF_SAMPLES: usize = 10_000;
pub const DEFAULT_SEED: u64 = 0x5EED;

const MC_BLOCK: usize = 1 << 14;

/// Nondominated points pooled over runs, with per-objective bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoFront {
    pub points: Vec<Vec<f64>>,
    pub ideal: Vec<f64>,
    pub nadir: Vec<f64>,
    /// Objectives on which every front point agrees; normalised with width 1.
    pub degenerate: Vec<bool>,
}

impl PseudoFront {
    pub fn dim(&self) -> usize {
        self.ideal.len()
    }

    pub fn width(&self, j: usize) -> f64 {
        if self.degenerate[j] {
            1.0
        } else {
            self.nadir[j] - self.ideal[j]
        }
    }
}

/// Nondominated filter of the union of `runs`, with exact duplicates merged.
pub fn build_pseudo_front(runs: &[Vec<Vec<f64>>]) -> Result<PseudoFront> {
    let pooled: Vec<&Vec<f64>> = runs.iter().flatten().collect();
    let Some(first) = pooled.first() else {
        return Err(Error::domain("pseudo front of an empty union"));
    };
    let m = first.len();
    if pooled.iter().any(|p| p.len() != m) {
        return Err(Error::data("objective dimension differs across runs"));
    }
    if pooled.iter().flat_map(|p| p.iter()).any(|v| !v.is_finite()) {
        return Err(Error::data("non-finite objective value"));
    }
    let mut points: Vec<Vec<f64>> = nondominated_set(&pooled)
        .into_iter()
        .map(|i| pooled[i].clone())
        .collect();
    points.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    points.dedup();
    let mut ideal = vec![f64::INFINITY; m];
    let mut nadir = vec![f64::NEG_INFINITY; m];
    for p in &points {
        for j in 0..m {
            ideal[j] = ideal[j].min(p[j]);
            nadir[j] = nadir[j].max(p[j]);
        }
    }
    let degenerate: Vec<bool> = (0..m).map(|j| !(nadir[j] > ideal[j])).collect();
    for (j, d) in degenerate.iter().enumerate() {
        if *d {
            warn!("pseudo front is degenerate in objective {j}; width 1 substituted");
        }
    }
    Ok(PseudoFront {
        points,
        ideal,
        nadir,
        degenerate,
    })
}

/// `(v - ideal) / (nadir - ideal)` per objective, clipped to `[0, 1.1]`.
pub fn normalize<P: AsRef<[f64]>>(points: &[P], front: &PseudoFront) -> Result<Vec<Vec<f64>>> {
    points
        .iter()
        .map(|p| {
            let p = p.as_ref();
            if p.len() != front.dim() {
                return Err(Error::data("point dimension differs from the front"));
            }
            Ok(p.iter()
                .enumerate()
                .map(|(j, &v)| ((v - front.ideal[j]) / front.width(j)).clamp(0.0, HV_REFERENCE))
                .collect())
        })
        .collect()
}

/// A hypervolume value, with a standard error when estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HvEstimate {
    pub value: f64,
    pub stderr: Option<f64>,
}

fn inside_reference(points: &[Vec<f64>], reference: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut kept = Vec::with_capacity(points.len());
    let mut outside = 0;
    for p in points {
        if p.len() != reference.len() {
            return Err(Error::data("point dimension differs from the reference point"));
        }
        if p.iter().zip(reference).all(|(v, r)| v < r) {
            kept.push(p.clone());
        } else {
            outside += 1;
        }
    }
    if outside > 0 {
        warn!("{outside} points do not lie strictly inside the reference point and add no volume");
    }
    Ok(kept)
}

/// Exact hypervolume of `points` against `reference` (minimisation) via
/// the WFG exclusive-volume recursion.
pub fn hypervolume_exact(points: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    let pts = inside_reference(points, reference)?;
    Ok(wfg(pts, reference))
}

fn inclusive(p: &[f64], reference: &[f64]) -> f64 {
    p.iter().zip(reference).map(|(v, r)| r - v).product()
}

fn wfg(pts: Vec<Vec<f64>>, reference: &[f64]) -> f64 {
    if pts.is_empty() {
        return 0.0;
    }
    let m = reference.len();
    let mut pts: Vec<Vec<f64>> = nondominated_set(&pts).into_iter().map(|i| pts[i].clone()).collect();
    if m == 1 {
        return pts.iter().map(|p| reference[0] - p[0]).fold(0.0, f64::max);
    }
    if m == 2 {
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        let mut vol = 0.0;
        let mut prev_y = reference[1];
        for p in &pts {
            if p[1] < prev_y {
                vol += (reference[0] - p[0]) * (prev_y - p[1]);
                prev_y = p[1];
            }
        }
        return vol;
    }
    // Sorting by the last objective (worst first) keeps limit sets small.
    pts.sort_by(|a, b| b[m - 1].total_cmp(&a[m - 1]));
    let mut vol = 0.0;
    for k in 0..pts.len() {
        let limited: Vec<Vec<f64>> = pts[k + 1..]
            .iter()
            .map(|q| q.iter().zip(&pts[k]).map(|(a, b)| a.max(*b)).collect())
            .collect();
        vol += inclusive(&pts[k], reference) - wfg(limited, reference);
    }
    vol
}

/// Monte-Carlo hypervolume over the box between the points' lower corner
/// and `reference`. Samples are drawn in fixed-size blocks with per-block
/// seeds, so the estimate does not depend on the thread count.
pub fn hypervolume_mc(points: &[Vec<f64>], reference: &[f64], samples: usize, seed: u64) -> Result<HvEstimate> {
    let pts = inside_reference(points, reference)?;
    if pts.is_empty() {
        return Ok(HvEstimate { value: 0.0, stderr: Some(0.0) });
    }
    let pts: Vec<Vec<f64>> = nondominated_set(&pts).into_iter().map(|i| pts[i].clone()).collect();
    let m = reference.len();
    let lower: Vec<f64> = (0..m)
        .map(|j| pts.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min))
        .collect();
    let box_vol: f64 = lower.iter().zip(reference).map(|(l, r)| r - l).product();
    let blocks = samples.div_ceil(MC_BLOCK);
    let hits: u64 = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed::rng(seed::derive(seed, &[b as u64]));
            let count = MC_BLOCK.min(samples - b * MC_BLOCK);
            let mut x = vec![0.0; m];
            let mut hit = 0u64;
            for _ in 0..count {
                for j in 0..m {
                    x[j] = lower[j] + rng.random::<f64>() * (reference[j] - lower[j]);
                }
                if pts.iter().any(|p| p.iter().zip(&x).all(|(a, b)| a <= b)) {
                    hit += 1;
                }
            }
            hit
        })
        .sum();
    let n = samples as f64;
    let frac = hits as f64 / n;
    Ok(HvEstimate {
        value: box_vol * frac,
        stderr: Some(box_vol * (frac * (1.0 - frac) / n).sqrt()),
    })
}

/// Hypervolume of normalised points against `(1.1, …, 1.1)`: exact up to
/// four objectives, Monte-Carlo with 10⁶ samples beyond.
pub fn hypervolume(points: &[Vec<f64>], m: usize) -> Result<HvEstimate> {
    if m == 0 {
        return Err(Error::data("hypervolume needs at least one objective"));
    }
    let reference = vec![HV_REFERENCE; m];
    if m <= EXACT_HV_MAX_DIM {
        Ok(HvEstimate {
            value: hypervolume_exact(points, &reference)?,
            stderr: None,
        })
    } else {
        hypervolume_mc(points, &reference, HV_MC_SAMPLES, DEFAULT_SEED)
    }
}

/// Orthonormal coordinates of `x` within the hyperplane orthogonal to
/// `(1, …, 1)`.
fn simplex_projection(x: &[f64]) -> Vec<f64> {
    let mut prefix = 0.0;
    (1..x.len())
        .map(|k| {
            prefix += x[k - 1];
            let kf = k as f64;
            (prefix - kf * x[k]) / (kf * (kf + 1.0)).sqrt()
        })
        .collect()
}

fn chebyshev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Coverage over the pseudo front.
///
/// Front and set are normalised by the front's bounds. A front point counts
/// as covered when some member of `points` weakly dominates it after a
/// tolerance of half the cell size. Front points are projected onto the
/// hyperplane orthogonal to `(1, …, 1)`, each owning an axis-aligned cube
/// whose side is the mean nearest-neighbour (Chebyshev) spacing of the
/// projected front. CPF is the volume of the covered cubes' union over the
/// volume of all cubes' union, estimated on `samples` shared uniform draws.
pub fn cpf_with<P: AsRef<[f64]>>(points: &[P], front: &PseudoFront, samples: usize, seed: u64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::domain("CPF of an empty set"));
    }
    let m = front.dim();
    let refs = normalize(&front.points, front)?;
    let set = normalize(points, front)?;
    if refs.len() < 2 || m < 2 {
        warn!("degenerate front: CPF is 0");
        return Ok(0.0);
    }
    let proj: Vec<Vec<f64>> = refs.iter().map(|r| simplex_projection(r)).collect();
    let cell = proj
        .iter()
        .enumerate()
        .map(|(i, p)| {
            proj.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| chebyshev(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .sum::<f64>()
        / proj.len() as f64;
    if !(cell > 0.0) {
        warn!("degenerate front: CPF is 0");
        return Ok(0.0);
    }
    let half = cell / 2.0;
    let covered: Vec<bool> = refs
        .iter()
        .map(|r| set.iter().any(|s| s.iter().zip(r).all(|(a, b)| *a <= b + half)))
        .collect();
    if !covered.iter().any(|&c| c) {
        return Ok(0.0);
    }
    let d = m - 1;
    let lo: Vec<f64> = (0..d)
        .map(|k| proj.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min) - half)
        .collect();
    let hi: Vec<f64> = (0..d)
        .map(|k| proj.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max) + half)
        .collect();
    let mut rng = seed::rng(seed);
    let (mut all, mut hit) = (0usize, 0usize);
    let mut x = vec![0.0; d];
    for _ in 0..samples {
        for k in 0..d {
            x[k] = lo[k] + rng.random::<f64>() * (hi[k] - lo[k]);
        }
        let mut in_any = false;
        let mut in_covered = false;
        for (p, &c) in proj.iter().zip(&covered) {
            if chebyshev(p, &x) <= half {
                in_any = true;
                if c {
                    in_covered = true;
                    break;
                }
            }
        }
        all += usize::from(in_any);
        hit += usize::from(in_covered);
    }
    Ok(if all == 0 { 0.0 } else { hit as f64 / all as f64 })
}

/// [`cpf_with`] using 10⁴ samples and the default seed.
pub fn cpf<P: AsRef<[f64]>>(points: &[P], front: &PseudoFront) -> Result<f64> {
    cpf_with(points, front, CPF_SAMPLES, DEFAULT_SEED)
}

/// Per-trial model sets compared against one reference solution `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialArchive {
    pub trials: Vec<Vec<Vec<f64>>>,
    pub s: Vec<f64>,
}

/// Fractions of a trial's points that dominate `s`, are incomparable with
/// it, and are dominated by it. They sum to 1.
pub fn relation_proportions(trial: &[Vec<f64>], s: &[f64]) -> (f64, f64, f64) {
    let n = trial.len() as f64;
    let (mut dom, mut inc, mut dtd) = (0usize, 0usize, 0usize);
    for p in trial {
        if dominates_unchecked(p, s) {
            dom += 1;
        } else if dominates_unchecked(s, p) {
            dtd += 1;
        } else {
            inc += 1;
        }
    }
    (dom as f64 / n, inc as f64 / n, dtd as f64 / n)
}

impl TrialArchive {
    fn usable(&self) -> Result<Vec<&Vec<Vec<f64>>>> {
        let m = self.s.len();
        if self.trials.iter().flatten().any(|p| p.len() != m) {
            return Err(Error::data("archive point dimension differs from s"));
        }
        let usable: Vec<_> = self.trials.iter().filter(|t| !t.is_empty()).collect();
        if usable.len() < self.trials.len() {
            warn!("{} empty trials excluded", self.trials.len() - usable.len());
        }
        if usable.is_empty() {
            return Err(Error::domain("archive has no non-empty trial"));
        }
        Ok(usable)
    }

    /// Fraction of trials holding at least one point that dominates `s`.
    pub fn dominate(&self) -> Result<f64> {
        let t = self.usable()?;
        let hits = t
            .iter()
            .filter(|trial| trial.iter().any(|p| dominates_unchecked(p, &self.s)))
            .count();
        Ok(hits as f64 / t.len() as f64)
    }

    /// Mean over trials of the share of points incomparable with `s`.
    pub fn incomparable(&self) -> Result<f64> {
        let t = self.usable()?;
        Ok(t.iter().map(|trial| relation_proportions(trial, &self.s).1).sum::<f64>() / t.len() as f64)
    }

    /// Mean over trials of the share of points dominated by `s`.
    pub fn dominated(&self) -> Result<f64> {
        let t = self.usable()?;
        Ok(t.iter().map(|trial| relation_proportions(trial, &self.s).2).sum::<f64>() / t.len() as f64)
    }
}

pub fn dominate_metric(arch: &TrialArchive) -> Result<f64> {
    arch.dominate()
}

pub fn incomparable_metric(arch: &TrialArchive) -> Result<f64> {
    arch.incomparable()
}

pub fn dominated_metric(arch: &TrialArchive) -> Result<f64> {
    arch.dominated()
}

/// Geometric mean of non-negative minimised values.
pub fn g_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::domain("G-mean of no values"));
    }
    if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::domain("G-mean needs finite non-negative values"));
    }
    if values.contains(&0.0) {
        return Ok(0.0);
    }
    let k = values.len() as f64;
    Ok((values.iter().map(|v| v.ln()).sum::<f64>() / k).exp())
}

/// Outcome of comparing sample `a` against sample `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Better,
    Similar,
    Worse,
}

impl Verdict {
    /// `+`, `≈` or `-`.
    pub fn symbol(self) -> &'static str {
        match self {
            Verdict::Better => "+",
            Verdict::Similar => "≈",
            Verdict::Worse => "-",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Mann-Whitney statistics of `a` against `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// Number of pairs with `a > b`, ties counted as one half.
    pub u: f64,
    /// Continuity-corrected normal score (0 when the variance vanishes).
    pub z: f64,
    /// Two-sided p-value.
    pub p: f64,
}

pub fn mann_whitney(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("rank-sum test on an empty sample"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::domain("rank-sum test on NaN values"));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut all: Vec<(f64, bool)> = a.iter().map(|&v| (v, true)).chain(b.iter().map(|&v| (v, false))).collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = all.len();
    let mut rank_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        rank_a += all[i..=j].iter().filter(|x| x.1).count() as f64 * avg;
        i = j + 1;
    }
    let u = rank_a - na * (na + 1.0) / 2.0;
    let mean = na * nb / 2.0;
    let nf = n as f64;
    let var = na * nb / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if !(var > 0.0) {
        return Ok(MannWhitney { u, z: 0.0, p: 1.0 });
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt() * (u - mean).signum();
    let p = erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0);
    Ok(MannWhitney { u, z, p })
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// Two-sided Wilcoxon rank-sum test where larger values are better.
/// A significant difference is oriented by the medians (then by `U`).
pub fn rank_sum_test(a: &[f64], b: &[f64], alpha: f64) -> Result<Verdict> {
    if a.len() < 3 || b.len() < 3 {
        return Err(Error::domain("rank-sum test needs at least 3 values per sample"));
    }
    let mw = mann_whitney(a, b)?;
    if mw.z == 0.0 && mw.p == 1.0 && a.iter().chain(b).all(|v| *v == a[0]) {
        warn!("rank-sum test on constant samples");
    }
    if mw.p >= alpha {
        return Ok(Verdict::Similar);
    }
    let (ma, mb) = (median(a), median(b));
    let a_larger = if ma != mb { ma > mb } else { mw.u > a.len() as f64 * b.len() as f64 / 2.0 };
    Ok(if a_larger { Verdict::Better } else { Verdict::Worse })
}

/// Same as [`rank_sum_test`] for metrics where smaller is better.
pub fn rank_sum_test_lower_better(a: &[f64], b: &[f64], alpha: f64) -> Result<Verdict> {
    let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
    rank_sum_test(&neg(a), &neg(b), alpha)
}
