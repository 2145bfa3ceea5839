//! The four ensemble selection strategies on a synthetic 3-objective
//! front with a pronounced knee.
//!
//! `cargo run --example ensemble_selection`

use fairevo::ensemble::{self, Strategy};
use fairevo::metrics::MetricId;

fn main() -> fairevo::Result<()> {
    let mut points = Vec::new();
    for i in 0..=6 {
        for j in 0..=(6 - i) {
            let (a, b) = (f64::from(i) / 6.0, f64::from(j) / 6.0);
            let c = 1.0 - a - b;
            // Pull the middle of the simplex towards the origin.
            let pull = 1.0 - 0.6 * (a * b * c * 27.0).cbrt();
            points.push(vec![a * pull, b * pull, c * pull]);
        }
    }
    points.push(vec![0.9, 0.9, 0.9]);
    let criteria = MetricId::tri_objective();
    for strategy in Strategy::ALL {
        let picked = ensemble::select_indices(&points, &criteria, strategy, 5)?;
        println!("{strategy}: {} members", picked.len());
        for i in picked {
            println!("  {i:>2} {:?}", points[i].iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());
        }
    }
    Ok(())
}
