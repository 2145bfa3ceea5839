//! Tri-objective (CE, FI, FG) evolution against CE-only evolution on biased
//! synthetic data. Prints own-front HV growth per trial, final test-set HV
//! of both algorithms on a front pooled over every generation, and the
//! G-mean of the all-nondominated ensemble against the median base model.
//!
//! `cargo run --release --example trend_study -- [trials] [generations]`

use std::path::Path;

use fairevo::cli::{checkpoint_test_values, own_front_hv, prepare_data, run_trial, ExperimentSpec};
use fairevo::ensemble::{self, EnsembleSpec, Strategy};
use fairevo::indicators::{self, build_pseudo_front, hypervolume, normalize};
use fairevo::metrics::{self, MetricId};

const SPEC: &str = r#"
name = "F_EIG"
seed = 2024
trials = 10

[data]
synthetic = { n = 2000, d = 5, bias = 0.3, seed = 7 }
drop_sensitive = true
split = [5.0, 1.25, 1.25, 2.5]

[run]
hidden = 64
learning_rate = 0.004
batch_size = 40
epochs_per_partial = 7
sigma = 0.01
k = 5
criteria = ["CE", "FI", "FG"]
generations = 30
lambda = 20
checkpoint_every = 1
"#;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn main() -> fairevo::Result<()> {
    env_logger::init();
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut eig = ExperimentSpec::from_toml(SPEC)?;
    if let Some(&t) = args.first() {
        eig.trials = t;
    }
    if let Some(&g) = args.get(1) {
        eig.run.generations = g;
    }
    let mut ce = eig.clone();
    ce.name = "F_E".into();
    ce.run.criteria = vec![MetricId::Ce];
    ce.run.tracked = vec![MetricId::Fi, MetricId::Fg];

    let data = prepare_data(&eig, Path::new("."))?;
    let tri = MetricId::tri_objective();
    let mut report_set = vec![MetricId::Acc];
    report_set.extend(MetricId::representative());

    let mut pooled = Vec::new();
    let mut finals: Vec<Vec<Vec<Vec<f64>>>> = Vec::new();
    for spec in [&eig, &ce] {
        let mut per_trial = Vec::new();
        for t in 0..spec.trials {
            let out = run_trial(spec, &data, t)?;
            let hv = own_front_hv(&out.history, &tri)?;
            let gens = checkpoint_test_values(&out, &data, &tri)?;
            per_trial.push(gens.last().expect("final generation kept").1.clone());
            pooled.extend(gens.into_iter().map(|(_, rows)| rows));

            let es = EnsembleSpec::new(Strategy::All, out.config.criteria.clone());
            let ens = ensemble::select(&out.population.members, &out.config.net, &data.ens, &data.ens_part, &es)?;
            let ens_v = ensemble::evaluate_ensemble(&ens, &data.test, &data.test_part, &report_set, out.config.alpha)?;
            let base: Vec<f64> = out
                .population
                .members
                .iter()
                .map(|m| {
                    let v = metrics::evaluate(&out.config.net, &m.genome, &data.test, &data.test_part, &report_set, out.config.alpha)?;
                    indicators::g_mean(&v.0)
                })
                .collect::<fairevo::Result<_>>()?;
            println!(
                "{} trial {t}: own-front HV {:.4} -> {:.4}, EnsAll of {} G-mean {:.4} vs median base {:.4} ({:.1}s)",
                spec.name,
                hv[0].value,
                hv[hv.len() - 1].value,
                ens.len(),
                indicators::g_mean(&ens_v.0)?,
                median(base),
                out.wall_secs
            );
        }
        finals.push(per_trial);
    }

    let front = build_pseudo_front(&pooled)?;
    let hv = |sets: &[Vec<Vec<f64>>]| -> fairevo::Result<Vec<f64>> {
        sets.iter().map(|s| Ok(hypervolume(&normalize(s, &front)?, tri.len())?.value)).collect()
    };
    let (a, b) = (hv(&finals[0])?, hv(&finals[1])?);
    println!("test HV: F_EIG {:.4}, F_E {:.4}", mean(&a), mean(&b));
    println!("rank-sum verdict F_EIG vs F_E: {}", indicators::rank_sum_test(&a, &b, 0.05)?);
    Ok(())
}
