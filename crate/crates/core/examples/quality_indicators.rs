//! Pseudo fronts, hypervolume (exact and Monte-Carlo), CPF, the dominance
//! relation metrics and the rank-sum verdict on two synthetic algorithms.
//!
//! `cargo run --release --example quality_indicators`

use rand::Rng as _;

use fairevo::indicators::{self, TrialArchive};
use fairevo::seed;

/// Points near the simplex `sum = scale` in `m` dimensions.
fn trial(m: usize, n: usize, scale: f64, rng: &mut seed::Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..1.0)).collect();
            let s: f64 = w.iter().sum();
            w.iter().map(|v| scale * v / s + rng.random_range(0.0..0.05)).collect()
        })
        .collect()
}

fn main() -> fairevo::Result<()> {
    let mut rng = seed::rng(5);
    let good: Vec<_> = (0..10).map(|_| trial(3, 20, 1.0, &mut rng)).collect();
    let weak: Vec<_> = (0..10).map(|_| trial(3, 20, 1.2, &mut rng)).collect();
    let all: Vec<_> = good.iter().chain(&weak).cloned().collect();
    let front = indicators::build_pseudo_front(&all)?;
    println!("pseudo front of {} points, ideal {:?}, nadir {:?}", front.points.len(), front.ideal, front.nadir);

    let score = |sets: &[Vec<Vec<f64>>]| -> fairevo::Result<(Vec<f64>, Vec<f64>)> {
        let mut hv = Vec::new();
        let mut cpf = Vec::new();
        for s in sets {
            hv.push(indicators::hypervolume(&indicators::normalize(s, &front)?, 3)?.value);
            cpf.push(indicators::cpf(s, &front)?);
        }
        Ok((hv, cpf))
    };
    let (hv_g, cpf_g) = score(&good)?;
    let (hv_w, cpf_w) = score(&weak)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!("HV  good {:.4} weak {:.4} verdict {}", mean(&hv_g), mean(&hv_w), indicators::rank_sum_test(&hv_g, &hv_w, 0.05)?);
    println!("CPF good {:.4} weak {:.4} verdict {}", mean(&cpf_g), mean(&cpf_w), indicators::rank_sum_test(&cpf_g, &cpf_w, 0.05)?);

    let normalized = indicators::normalize(&good[0], &front)?;
    let exact = indicators::hypervolume_exact(&normalized, &[indicators::HV_REFERENCE; 3])?;
    let mc = indicators::hypervolume_mc(&normalized, &[indicators::HV_REFERENCE; 3], 200_000, 1)?;
    println!("trial 0 HV exact {exact:.5}, Monte-Carlo {:.5} +- {:.5}", mc.value, mc.stderr.unwrap_or(0.0));

    let arch = TrialArchive {
        trials: good.clone(),
        s: vec![0.4, 0.4, 0.4],
    };
    println!(
        "against s = (0.4, 0.4, 0.4): Dominate {:.3}, Incomparable {:.3}, Dominated {:.3}",
        arch.dominate()?,
        arch.incomparable()?,
        arch.dominated()?
    );
    Ok(())
}
