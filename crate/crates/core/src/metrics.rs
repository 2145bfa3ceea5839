//! Evaluation criteria: cross entropy, accuracy, generalized entropy
//! indices and the sixteen confusion-matrix fairness metrics.
//!
//! Every criterion is expressed on a minimised scale with optimum 0.
//! Ratio metrics are turned into `1 - min(r, 1/r)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GroupPartition};
use crate::error::{Error, Result};
use crate::nnet::{self, Genome, NetSpec};

/// Lower clamp applied to predicted probabilities.
pub const PROB_EPS: f64 = 1e-12;
/// Probabilities at or above this are predicted positive.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Identifier of one evaluation criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MetricId {
    /// Mean binary cross entropy.
    Ce,
    /// Error rate, `1 - accuracy`.
    Acc,
    /// Individual unfairness (generalized entropy over benefits).
    Fi,
    /// Group unfairness (between-group generalized entropy).
    Fg,
    /// Confusion-matrix metric `Fair1`..`Fair16`.
    Fair(u8),
}

impl MetricId {
    pub fn fair(k: u8) -> Result<Self> {
        if (1..=16).contains(&k) {
            Ok(MetricId::Fair(k))
        } else {
            Err(Error::config(format!("Fair{k} does not exist (1..=16)")))
        }
    }

    /// Fair1..Fair8, the set used as optimisation objectives.
    pub fn representative() -> Vec<MetricId> {
        (1..=8).map(MetricId::Fair).collect()
    }

    /// Fair9..Fair16, evaluation-only by default.
    pub fn supplementary() -> Vec<MetricId> {
        (9..=16).map(MetricId::Fair).collect()
    }

    /// `CE, FI, FG`.
    pub fn tri_objective() -> Vec<MetricId> {
        vec![MetricId::Ce, MetricId::Fi, MetricId::Fg]
    }

    /// `CE, Fair1..Fair8`.
    pub fn nine_objective() -> Vec<MetricId> {
        let mut v = vec![MetricId::Ce];
        v.extend(Self::representative());
        v
    }

    /// Whether the criterion can serve as a training loss.
    pub fn is_differentiable(self) -> bool {
        matches!(self, MetricId::Ce | MetricId::Fi | MetricId::Fg)
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricId::Ce => f.write_str("CE"),
            MetricId::Acc => f.write_str("ACC"),
            MetricId::Fi => f.write_str("FI"),
            MetricId::Fg => f.write_str("FG"),
            MetricId::Fair(k) => write!(f, "Fair{k}"),
        }
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "CE" => Ok(MetricId::Ce),
            "ACC" => Ok(MetricId::Acc),
            "FI" => Ok(MetricId::Fi),
            "FG" => Ok(MetricId::Fg),
            other => other
                .strip_prefix("Fair")
                .and_then(|k| k.parse::<u8>().ok())
                .ok_or_else(|| Error::config(format!("unknown criterion `{other}`")))
                .and_then(MetricId::fair),
        }
    }
}

impl TryFrom<String> for MetricId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MetricId> for String {
    fn from(m: MetricId) -> String {
        m.to_string()
    }
}

/// Objective values aligned with an ordered criteria list; all minimised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectiveVector(pub Vec<f64>);

impl ObjectiveVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Values of `wanted`, looked up by position in `criteria`.
    pub fn project(&self, criteria: &[MetricId], wanted: &[MetricId]) -> Result<ObjectiveVector> {
        wanted
            .iter()
            .map(|w| {
                criteria
                    .iter()
                    .position(|c| c == w)
                    .map(|j| self.0[j])
                    .ok_or_else(|| Error::config(format!("criterion {w} was not evaluated")))
            })
            .collect::<Result<Vec<_>>>()
            .map(ObjectiveVector)
    }
}

impl From<Vec<f64>> for ObjectiveVector {
    fn from(v: Vec<f64>) -> Self {
        ObjectiveVector(v)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha == 0.0 || alpha == 1.0 {
        return Err(Error::config(format!(
            "generalized entropy needs alpha outside {{0, 1}}, got {alpha}"
        )));
    }
    Ok(())
}

/// `b_i = p_i - y_i + 1`.
pub fn benefit_vector(probs: &[f64], labels: &[u8]) -> Result<Vec<f64>> {
    if probs.len() != labels.len() {
        return Err(Error::data("probability and label lengths differ"));
    }
    Ok(probs
        .iter()
        .zip(labels)
        .map(|(p, &y)| p - f64::from(y) + 1.0)
        .collect())
}

fn check_benefits(b: &[f64]) -> Result<f64> {
    if b.is_empty() {
        return Err(Error::domain("generalized entropy of an empty benefit vector"));
    }
    if b.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::domain("benefits must be positive and finite"));
    }
    Ok(b.iter().sum::<f64>() / b.len() as f64)
}

/// Individual-level generalized entropy index
/// `1/(n a (a-1)) * sum((b_i/mu)^a - 1)`.
pub fn generalized_entropy(b: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let mu = check_benefits(b)?;
    let n = b.len() as f64;
    let s: f64 = b.iter().map(|&v| (v / mu).powf(alpha) - 1.0).sum();
    Ok(s / (n * alpha * (alpha - 1.0)))
}

/// Per-group sums and sizes of `b`; groups with no member in `b` keep size 0.
fn group_sums(b: &[f64], group_of: &[usize], n_groups: usize) -> (Vec<f64>, Vec<usize>) {
    let mut sums = vec![0.0; n_groups];
    let mut sizes = vec![0usize; n_groups];
    for (&v, &g) in b.iter().zip(group_of) {
        sums[g] += v;
        sizes[g] += 1;
    }
    (sums, sizes)
}

/// Between-group generalized entropy
/// `1/(n a (a-1)) * sum_g n_g((mu_g/mu)^a - 1)`.
pub fn group_entropy(b: &[f64], part: &GroupPartition, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if part.len() != b.len() {
        return Err(Error::data("benefit length differs from partition size"));
    }
    if part.group_sizes().iter().any(|&s| s == 0) {
        return Err(Error::domain("group entropy over an empty group"));
    }
    group_entropy_by_ids(b, part.group_of(), part.n_groups(), alpha)
}

/// Same as [`group_entropy`] over raw ids; groups absent from `b` are skipped.
pub(crate) fn group_entropy_by_ids(b: &[f64], group_of: &[usize], n_groups: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let mu = check_benefits(b)?;
    let n = b.len() as f64;
    let (sums, sizes) = group_sums(b, group_of, n_groups);
    let s: f64 = sums
        .iter()
        .zip(&sizes)
        .filter(|(_, &ng)| ng > 0)
        .map(|(&sum, &ng)| {
            let ng = ng as f64;
            ng * ((sum / ng / mu).powf(alpha) - 1.0)
        })
        .sum();
    Ok(s / (n * alpha * (alpha - 1.0)))
}

/// Gradient of [`generalized_entropy`] with respect to each benefit.
pub(crate) fn generalized_entropy_grad(b: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let mu = check_benefits(b)?;
    let n = b.len() as f64;
    let mean_pow: f64 = b.iter().map(|&v| (v / mu).powf(alpha)).sum::<f64>() / n;
    let scale = 1.0 / (n * (alpha - 1.0) * mu);
    Ok(b.iter()
        .map(|&v| scale * ((v / mu).powf(alpha - 1.0) - mean_pow))
        .collect())
}

/// Gradient of the between-group index with respect to each benefit.
pub(crate) fn group_entropy_grad(b: &[f64], group_of: &[usize], n_groups: usize, alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let mu = check_benefits(b)?;
    let n = b.len() as f64;
    let (sums, sizes) = group_sums(b, group_of, n_groups);
    let ratio: Vec<f64> = sums
        .iter()
        .zip(&sizes)
        .map(|(&s, &ng)| if ng > 0 { s / ng as f64 / mu } else { 0.0 })
        .collect();
    let mean_pow: f64 = ratio
        .iter()
        .zip(&sizes)
        .map(|(&r, &ng)| ng as f64 * r.powf(alpha))
        .sum::<f64>()
        / n;
    let scale = 1.0 / (n * (alpha - 1.0) * mu);
    Ok(group_of
        .iter()
        .map(|&g| scale * (ratio[g].powf(alpha - 1.0) - mean_pow))
        .collect())
}

/// Mean binary cross entropy with probabilities clamped to
/// `[PROB_EPS, 1 - PROB_EPS]`.
pub fn cross_entropy(probs: &[f64], labels: &[u8]) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(Error::data("probability and label lengths differ"));
    }
    if probs.is_empty() {
        return Err(Error::data("cross entropy of an empty batch"));
    }
    let s: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(s / probs.len() as f64)
}

/// Confusion counts of one side of the binary split.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

/// A conditional probability `num / den`; `None` when `den == 0`.
pub type Rate = Option<f64>;

fn rate(num: u64, den: u64) -> Rate {
    (den > 0).then(|| num as f64 / den as f64)
}

impl SideCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// P(ŷ=1 | y=0)
    pub fn fpr(&self) -> Rate {
        rate(self.fp, self.fp + self.tn)
    }

    /// P(ŷ=1 | y=1)
    pub fn tpr(&self) -> Rate {
        rate(self.tp, self.tp + self.fn_)
    }

    /// P(ŷ=0 | y=1)
    pub fn fnr(&self) -> Rate {
        rate(self.fn_, self.tp + self.fn_)
    }

    /// P(y=0 | ŷ=1)
    pub fn fdr(&self) -> Rate {
        rate(self.fp, self.tp + self.fp)
    }

    /// P(y=1 | ŷ=0)
    pub fn false_omission(&self) -> Rate {
        rate(self.fn_, self.fn_ + self.tn)
    }

    /// P(y=1 | ŷ=1)
    pub fn ppv(&self) -> Rate {
        rate(self.tp, self.tp + self.fp)
    }

    /// P(ŷ≠y) within the side.
    pub fn error_rate(&self) -> Rate {
        rate(self.fp + self.fn_, self.total())
    }

    /// P(ŷ=1) within the side.
    pub fn positive_rate(&self) -> Rate {
        rate(self.tp + self.fp, self.total())
    }
}

/// Confusion counts for the privileged (g1) and unprivileged (g2) sides.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupConfusion {
    pub privileged: SideCounts,
    pub unprivileged: SideCounts,
}

impl GroupConfusion {
    pub fn swapped(&self) -> Self {
        Self {
            privileged: self.unprivileged,
            unprivileged: self.privileged,
        }
    }

    pub fn total(&self) -> u64 {
        self.privileged.total() + self.unprivileged.total()
    }
}

pub fn confusion(preds: &[u8], labels: &[u8], part: &GroupPartition) -> Result<GroupConfusion> {
    if preds.len() != labels.len() || preds.len() != part.len() {
        return Err(Error::data("prediction, label and partition lengths differ"));
    }
    let mut c = GroupConfusion::default();
    for (i, (&p, &y)) in preds.iter().zip(labels).enumerate() {
        let side = if part.is_privileged(i) {
            &mut c.privileged
        } else {
            &mut c.unprivileged
        };
        match (p, y) {
            (1, 1) => side.tp += 1,
            (1, _) => side.fp += 1,
            (_, 1) => side.fn_ += 1,
            _ => side.tn += 1,
        }
    }
    Ok(c)
}

/// Signed difference; `Err(())` flags a one-sided undefined rate.
fn signed_diff(a: Rate, b: Rate) -> std::result::Result<f64, ()> {
    match (a, b) {
        (Some(a), Some(b)) => Ok(a - b),
        (None, None) => Ok(0.0),
        _ => Err(()),
    }
}

fn abs_diff(a: Rate, b: Rate) -> f64 {
    signed_diff(a, b).map_or(1.0, f64::abs)
}

/// `1 - min(a/b, b/a)`, with 0/0 → 0 and x/0 → 1.
fn ratio_gap(a: Rate, b: Rate) -> f64 {
    match (a, b) {
        (None, None) => 0.0,
        (Some(a), Some(b)) => {
            if a == 0.0 && b == 0.0 {
                0.0
            } else if a == 0.0 || b == 0.0 {
                1.0
            } else {
                1.0 - (a / b).min(b / a)
            }
        }
        _ => 1.0,
    }
}

/// Value of `Fair{k}` on the minimised scale.
pub fn fairness_metric(id: MetricId, c: &GroupConfusion) -> Result<f64> {
    let k = match id {
        MetricId::Fair(k) if (1..=16).contains(&k) => k,
        other => return Err(Error::config(format!("{other} is not a confusion-matrix metric"))),
    };
    let (g1, g2) = (&c.privileged, &c.unprivileged);
    Ok(match k {
        1 => match (signed_diff(g1.fpr(), g2.fpr()), signed_diff(g1.tpr(), g2.tpr())) {
            (Ok(a), Ok(b)) => 0.5 * (a + b).abs(),
            _ => 1.0,
        },
        2 => abs_diff(g1.error_rate(), g2.error_rate()),
        3 => ratio_gap(g1.fdr(), g2.fdr()),
        4 => abs_diff(g1.fpr(), g2.fpr()),
        5 => abs_diff(g1.false_omission(), g2.false_omission()),
        6 => ratio_gap(g1.false_omission(), g2.false_omission()),
        7 => abs_diff(g1.fnr(), g2.fnr()),
        8 => ratio_gap(g1.fnr(), g2.fnr()),
        9 => ratio_gap(g1.error_rate(), g2.error_rate()),
        10 => abs_diff(g1.fdr(), g2.fdr()),
        11 => ratio_gap(g1.fpr(), g2.fpr()),
        12 => ratio_gap(g1.positive_rate(), g2.positive_rate()),
        13 => abs_diff(g1.positive_rate(), g2.positive_rate()),
        14 => abs_diff(g1.tpr(), g2.tpr()),
        15 => 0.5 * (abs_diff(g1.fpr(), g2.fpr()) + abs_diff(g1.tpr(), g2.tpr())),
        16 => abs_diff(g1.ppv(), g2.ppv()),
        _ => unreachable!(),
    })
}

/// Thresholded predictions.
pub fn predict_labels(probs: &[f64]) -> Vec<u8> {
    probs.iter().map(|&p| u8::from(p >= DECISION_THRESHOLD)).collect()
}

/// Computes `criteria` from predicted probabilities for `ds`.
pub fn score_probabilities(
    probs: &[f64],
    ds: &Dataset,
    part: &GroupPartition,
    criteria: &[MetricId],
    alpha: f64,
) -> Result<ObjectiveVector> {
    if criteria.is_empty() {
        return Err(Error::config("no criteria to evaluate"));
    }
    if probs.len() != ds.len() || part.len() != ds.len() {
        return Err(Error::data("probabilities, dataset and partition sizes differ"));
    }
    let labels = ds.labels();
    let preds = predict_labels(probs);
    let needs_confusion = criteria.iter().any(|c| matches!(c, MetricId::Fair(_)));
    let conf = if needs_confusion {
        Some(confusion(&preds, labels, part)?)
    } else {
        None
    };
    let mut benefits: Option<Vec<f64>> = None;
    let mut out = Vec::with_capacity(criteria.len());
    for &c in criteria {
        let v = match c {
            MetricId::Ce => cross_entropy(probs, labels)?,
            MetricId::Acc => {
                let wrong = preds.iter().zip(labels).filter(|(p, y)| p != y).count();
                wrong as f64 / labels.len() as f64
            }
            MetricId::Fi | MetricId::Fg => {
                let b = match &benefits {
                    Some(b) => b,
                    None => benefits.insert(benefit_vector(probs, labels)?),
                };
                if c == MetricId::Fi {
                    generalized_entropy(b, alpha)?
                } else {
                    group_entropy(b, part, alpha)?
                }
            }
            MetricId::Fair(_) => fairness_metric(c, conf.as_ref().expect("confusion computed"))?,
        };
        if !v.is_finite() {
            return Err(Error::domain(format!("criterion {c} evaluated to {v}")));
        }
        out.push(v);
    }
    Ok(ObjectiveVector(out))
}

/// One forward pass over `ds`, then every criterion from the shared predictions.
pub fn evaluate(
    net: &NetSpec,
    genome: &Genome,
    ds: &Dataset,
    part: &GroupPartition,
    criteria: &[MetricId],
    alpha: f64,
) -> Result<ObjectiveVector> {
    let probs = nnet::predict_all(net, genome, ds)?;
    score_probabilities(&probs, ds, part, criteria, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_groups(sizes: (usize, usize)) -> GroupPartition {
        let mut g = vec![0; sizes.0];
        g.extend(vec![1; sizes.1]);
        GroupPartition::from_assignments(g, vec![true, false]).unwrap()
    }

    #[test]
    fn benefit_examples() {
        let b = benefit_vector(&[1.0, 0.0, 0.8], &[1, 0, 0]).unwrap();
        assert_eq!(b, vec![1.0, 1.0, 1.8]);
        assert!(benefit_vector(&[0.1], &[1, 0]).is_err());
    }

    #[test]
    fn entropy_hand_values() {
        // mu = 4/3; ((3/4)^2 * 2 + (3/2)^2 - 3) / (3 * 2) = (1.125 + 2.25 - 3) / 6
        let b = [1.0, 1.0, 2.0];
        assert!((generalized_entropy(&b, 2.0).unwrap() - 0.0625).abs() < 1e-12);
        let part = two_groups((2, 1));
        assert!((group_entropy(&b, &part, 2.0).unwrap() - 0.0625).abs() < 1e-12);
        assert_eq!(generalized_entropy(&[1.3; 5], 2.0).unwrap(), 0.0);
    }

    #[test]
    fn entropy_domain_errors() {
        assert!(matches!(generalized_entropy(&[1.0, 2.0], 1.0), Err(Error::Config(_))));
        assert!(matches!(generalized_entropy(&[1.0, 2.0], 0.0), Err(Error::Config(_))));
        assert!(matches!(generalized_entropy(&[1.0, 0.0], 2.0), Err(Error::Domain(_))));
        assert!(matches!(generalized_entropy(&[], 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn group_entropy_single_group_and_equal_means() {
        let one = GroupPartition::from_assignments(vec![0; 3], vec![true]).unwrap();
        assert!(group_entropy(&[1.0, 1.5, 0.5], &one, 2.0).unwrap().abs() < 1e-15);
        let part = two_groups((2, 2));
        assert!(group_entropy(&[1.0, 2.0, 1.5, 1.5], &part, 3.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn confusion_hand_tally() {
        // sides: privileged = samples 0,1 ; unprivileged = 2,3
        let part = two_groups((2, 2));
        let c = confusion(&[1, 0, 1, 1], &[1, 1, 0, 1], &part).unwrap();
        assert_eq!(c.privileged, SideCounts { tp: 1, fp: 0, tn: 0, fn_: 1 });
        assert_eq!(c.unprivileged, SideCounts { tp: 1, fp: 1, tn: 0, fn_: 0 });
        let s = confusion(&[1, 0, 1, 1], &[1, 1, 0, 1], &part.swapped()).unwrap();
        assert_eq!(s, c.swapped());
    }

    #[test]
    fn perfect_predictions_have_no_errors() {
        let part = two_groups((3, 3));
        let y = [1, 0, 1, 0, 0, 1];
        let c = confusion(&y, &y, &part).unwrap();
        assert_eq!(c.privileged.fp + c.privileged.fn_ + c.unprivileged.fp + c.unprivileged.fn_, 0);
    }

    #[test]
    fn statistical_parity_and_disparate_impact_examples() {
        // P(ŷ=1|g1) = 0.6, P(ŷ=1|g2) = 0.4
        let c = GroupConfusion {
            privileged: SideCounts { tp: 3, fp: 3, tn: 2, fn_: 2 },
            unprivileged: SideCounts { tp: 2, fp: 2, tn: 3, fn_: 3 },
        };
        assert!((fairness_metric(MetricId::Fair(13), &c).unwrap() - 0.2).abs() < 1e-12);
        // P(ŷ=1|g1) = 0.5, P(ŷ=1|g2) = 0.25
        let c = GroupConfusion {
            privileged: SideCounts { tp: 1, fp: 1, tn: 1, fn_: 1 },
            unprivileged: SideCounts { tp: 1, fp: 0, tn: 2, fn_: 1 },
        };
        assert!((fairness_metric(MetricId::Fair(12), &c).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_denominator_policy() {
        // no predicted positives anywhere: FDR undefined on both sides
        let c = GroupConfusion {
            privileged: SideCounts { tp: 0, fp: 0, tn: 3, fn_: 2 },
            unprivileged: SideCounts { tp: 0, fp: 0, tn: 1, fn_: 1 },
        };
        assert_eq!(fairness_metric(MetricId::Fair(3), &c).unwrap(), 0.0);
        assert_eq!(fairness_metric(MetricId::Fair(12), &c).unwrap(), 0.0);
        // predicted positives only on one side
        let c = GroupConfusion {
            privileged: SideCounts { tp: 1, fp: 1, tn: 3, fn_: 2 },
            unprivileged: SideCounts { tp: 0, fp: 0, tn: 1, fn_: 1 },
        };
        assert_eq!(fairness_metric(MetricId::Fair(3), &c).unwrap(), 1.0);
        assert_eq!(fairness_metric(MetricId::Fair(10), &c).unwrap(), 1.0);
        assert_eq!(fairness_metric(MetricId::Fair(12), &c).unwrap(), 1.0);
        // an empty side never crashes
        let c = GroupConfusion {
            privileged: SideCounts { tp: 2, fp: 1, tn: 3, fn_: 2 },
            unprivileged: SideCounts::default(),
        };
        for k in 1..=16 {
            let v = fairness_metric(MetricId::Fair(k), &c).unwrap();
            assert!(v.is_finite() && v >= 0.0);
        }
    }

    #[test]
    fn non_fair_id_rejected() {
        assert!(fairness_metric(MetricId::Ce, &GroupConfusion::default()).is_err());
        assert!(MetricId::fair(17).is_err());
    }

    #[test]
    fn metric_ids_round_trip_text() {
        for id in [MetricId::Ce, MetricId::Acc, MetricId::Fi, MetricId::Fg, MetricId::Fair(1), MetricId::Fair(16)] {
            assert_eq!(id.to_string().parse::<MetricId>().unwrap(), id);
        }
        assert!("Fair0".parse::<MetricId>().is_err());
        assert!("XYZ".parse::<MetricId>().is_err());
        assert_eq!(MetricId::nine_objective().len(), 9);
    }

    #[test]
    fn cross_entropy_examples() {
        assert!((cross_entropy(&[0.5; 4], &[0, 1, 1, 0]).unwrap() - 2f64.ln()).abs() < 1e-15);
        let ce = cross_entropy(&[1.0 - PROB_EPS, PROB_EPS], &[1, 0]).unwrap();
        assert!(ce <= 1e-11);
        assert!(cross_entropy(&[], &[]).is_err());
    }
}
