//! Nondominated filtering and stochastic-ranking survival on a random
//! tri-objective point set.
//!
//! `cargo run --example survival_ranking`

use rand::Rng as _;

use fairevo::moea::{self, SraSpec};
use fairevo::seed;

fn main() {
    let mut rng = seed::rng(9);
    let points: Vec<Vec<f64>> = (0..12)
        .map(|_| {
            let a: f64 = rng.random_range(0.0..1.0);
            let b: f64 = rng.random_range(0.0..1.0 - a);
            vec![a, b, 1.0 - a - b + rng.random_range(0.0..0.3)]
        })
        .collect();
    let front = moea::nondominated_set(&points);
    let fitness = moea::epsilon_fitness(&points, 0.05);
    let density = moea::sde_density(&points);
    for (i, p) in points.iter().enumerate() {
        println!(
            "{i:>2} {:?} front {:<5} eps-fitness {:>8.4} density {:.4}",
            p.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>(),
            front.contains(&i),
            fitness[i],
            density[i]
        );
    }
    let spec = SraSpec::default();
    for pc in [0.0, 0.5, 1.0] {
        println!("pc {pc}: ranking {:?}", moea::sra_rank(&points, pc, &spec, 4));
    }
}
