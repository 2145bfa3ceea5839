//! Confusion-matrix fairness metrics for a hand-made set of predictions,
//! plus the two entropy-based unfairness indices on the same predictions.
//!
//! `cargo run --example fairness_metrics`

use fairevo::data::GroupPartition;
use fairevo::metrics::{self, MetricId};

fn main() -> fairevo::Result<()> {
    // Ten privileged (group 0) and ten unprivileged (group 1) samples.
    let labels: Vec<u8> = vec![1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
    let probs: Vec<f64> = vec![
        0.9, 0.8, 0.7, 0.6, 0.4, 0.7, 0.3, 0.6, 0.2, 0.1, //
        0.6, 0.4, 0.3, 0.2, 0.1, 0.4, 0.3, 0.55, 0.2, 0.1,
    ];
    let groups: Vec<usize> = (0..20).map(|i| i / 10).collect();
    let part = GroupPartition::from_assignments(groups, vec![true, false])?;

    let preds = metrics::predict_labels(&probs);
    let c = metrics::confusion(&preds, &labels, &part)?;
    println!("privileged   {:?}", c.privileged);
    println!("unprivileged {:?}", c.unprivileged);
    for k in 1..=16 {
        let id = MetricId::fair(k)?;
        println!("{id:>6}: {:.4}", metrics::fairness_metric(id, &c)?);
    }

    let b = metrics::benefit_vector(&probs, &labels)?;
    println!("FI: {:.6}", metrics::generalized_entropy(&b, 2.0)?);
    println!("FG: {:.6}", metrics::group_entropy(&b, &part, 2.0)?);
    println!("CE: {:.6}", metrics::cross_entropy(&probs, &labels)?);
    Ok(())
}
