//! Nine-objective evolution (CE and Fair1 to Fair8) followed by all four
//! ensemble strategies, each scored by the G-mean of test error and
//! Fair1 to Fair8.
//!
//! `cargo run --release --example nine_objective -- [trials]`

use std::path::Path;

use fairevo::cli::{prepare_data, run_trial, ExperimentSpec};
use fairevo::ensemble::{self, EnsembleSpec, Strategy};
use fairevo::indicators;
use fairevo::metrics::{self, MetricId};

const SPEC: &str = r#"
name = "nine"
seed = 99
trials = 3

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
k = 2
losses = ["CE"]
criteria = ["CE", "Fair1", "Fair2", "Fair3", "Fair4", "Fair5", "Fair6", "Fair7", "Fair8"]
generations = 30
lambda = 20
"#;

fn main() -> fairevo::Result<()> {
    env_logger::init();
    let mut spec = ExperimentSpec::from_toml(SPEC)?;
    if let Some(t) = std::env::args().nth(1).and_then(|a| a.parse().ok()) {
        spec.trials = t;
    }
    let data = prepare_data(&spec, Path::new("."))?;
    let mut report_set = vec![MetricId::Acc];
    report_set.extend(MetricId::representative());
    for t in 0..spec.trials {
        let out = run_trial(&spec, &data, t)?;
        let mut base: Vec<f64> = out
            .population
            .members
            .iter()
            .map(|m| {
                let v = metrics::evaluate(&out.config.net, &m.genome, &data.test, &data.test_part, &report_set, out.config.alpha)?;
                indicators::g_mean(&v.0)
            })
            .collect::<fairevo::Result<_>>()?;
        base.sort_by(f64::total_cmp);
        println!("trial {t}: base G-mean min {:.4} median {:.4} max {:.4}", base[0], base[base.len() / 2], base[base.len() - 1]);
        for strategy in Strategy::ALL {
            let mut es = EnsembleSpec::new(strategy, out.config.criteria.clone());
            es.target_size = 5;
            let ens = ensemble::select(&out.population.members, &out.config.net, &data.ens, &data.ens_part, &es)?;
            let v = ensemble::evaluate_ensemble(&ens, &data.test, &data.test_part, &report_set, out.config.alpha)?;
            println!("  {strategy:<8} {:>2} members, G-mean {:.4}, error {:.4}", ens.len(), indicators::g_mean(&v.0)?, v.0[0]);
        }
    }
    Ok(())
}
