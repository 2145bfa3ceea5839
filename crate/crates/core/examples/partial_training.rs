//! Trains one network with each of the three losses on biased synthetic
//! data and reports every criterion on a held-out split after each pass.
//!
//! `cargo run --release --example partial_training`

use fairevo::data::{self, SplitSpec, Standardizer};
use fairevo::metrics::{self, MetricId};
use fairevo::nnet::{self, Loss, NetSpec, TrainSpec};

fn main() -> fairevo::Result<()> {
    let ds = data::synth_biased(2000, 5, 0.3, 1)?;
    let mut parts = data::split(&ds, &SplitSpec::new(vec![0.75, 0.25], 2)?)?;
    let st = Standardizer::fit(&parts[0]);
    parts.iter_mut().for_each(|p| st.apply(p));
    let (train, test) = (&parts[0], &parts[1]);
    let train_part = data::make_groups(train, &["group"], &["A"])?;
    let test_part = data::make_groups(test, &["group"], &["A"])?;

    let net = NetSpec::new(train.width(), 64)?;
    let criteria = [MetricId::Ce, MetricId::Acc, MetricId::Fi, MetricId::Fg];
    for loss in [Loss::CrossEntropy, Loss::IndividualEntropy, Loss::GroupEntropy] {
        let mut g = nnet::init_genome(&net, 3);
        println!("loss {loss}");
        for pass in 0..5u64 {
            let ts = TrainSpec {
                learning_rate: 0.004,
                batch_size: 40,
                epochs_per_partial: 5,
                loss,
                alpha: 2.0,
                seed: pass,
            };
            g = nnet::partial_train(&net, &g, train, &train_part, &ts)?;
            let v = metrics::evaluate(&net, &g, test, &test_part, &criteria, 2.0)?;
            println!(
                "  after {:>2} epochs: CE {:.4}  error {:.4}  FI {:.5}  FG {:.2e}",
                (pass + 1) * 5,
                v.0[0],
                v.0[1],
                v.0[2],
                v.0[3]
            );
        }
    }
    Ok(())
}
