//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng as _;

use fairevo::cli::{self, checkpoint_test_values, own_front_hv, prepare_data, run_trial, ExperimentSpec, PreparedData, TrialOutcome};
use fairevo::data::GroupPartition;
use fairevo::ensemble::{self, Ensemble, EnsembleSpec, Strategy};
use fairevo::indicators::{self, build_pseudo_front, hypervolume, hypervolume_exact, hypervolume_mc, normalize, TrialArchive, Verdict};
use fairevo::metrics::{self, fairness_metric, GroupConfusion, MetricId, SideCounts};
use fairevo::moea::nondominated_set;
use fairevo::nnet::{self, Loss, NetSpec};
use fairevo::seed;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// ---------------------------------------------------------------- 1

fn frac(num: u64, den: u64) -> Option<f64> {
    if den == 0 {
        None
    } else {
        Some(num as f64 / den as f64)
    }
}

fn oracle_diff(a: Option<f64>, b: Option<f64>) -> f64 {
    match (a, b) {
        (Some(a), Some(b)) => (a - b).abs(),
        (None, None) => 0.0,
        _ => 1.0,
    }
}

fn oracle_ratio(a: Option<f64>, b: Option<f64>) -> f64 {
    match (a, b) {
        (Some(a), Some(b)) if a == 0.0 && b == 0.0 => 0.0,
        (Some(a), Some(b)) if a == 0.0 || b == 0.0 => 1.0,
        (Some(a), Some(b)) => 1.0 - f64::min(a / b, b / a),
        (None, None) => 0.0,
        _ => 1.0,
    }
}

/// Direct transcription of the sixteen definitions over raw counts.
fn fair_oracle(k: u8, c: &GroupConfusion) -> f64 {
    let g = [c.privileged, c.unprivileged];
    let fpr = |s: &SideCounts| frac(s.fp, s.fp + s.tn);
    let tpr = |s: &SideCounts| frac(s.tp, s.tp + s.fn_);
    let fnr = |s: &SideCounts| frac(s.fn_, s.tp + s.fn_);
    let fdr = |s: &SideCounts| frac(s.fp, s.fp + s.tp);
    let fomr = |s: &SideCounts| frac(s.fn_, s.fn_ + s.tn);
    let ppv = |s: &SideCounts| frac(s.tp, s.tp + s.fp);
    let err = |s: &SideCounts| frac(s.fp + s.fn_, s.tp + s.fp + s.tn + s.fn_);
    let pos = |s: &SideCounts| frac(s.tp + s.fp, s.tp + s.fp + s.tn + s.fn_);
    let (a, b) = (&g[0], &g[1]);
    match k {
        1 => match (fpr(a), tpr(a), fpr(b), tpr(b)) {
            (Some(f1), Some(t1), Some(f2), Some(t2)) => 0.5 * (f1 + t1 - f2 - t2).abs(),
            (None, None, None, None) => 0.0,
            (f1, t1, f2, t2) if f1.is_some() == f2.is_some() && t1.is_some() == t2.is_some() => {
                0.5 * (f1.unwrap_or(0.0) + t1.unwrap_or(0.0) - f2.unwrap_or(0.0) - t2.unwrap_or(0.0)).abs()
            }
            _ => 1.0,
        },
        2 => oracle_diff(err(a), err(b)),
        3 => oracle_ratio(fdr(a), fdr(b)),
        4 => oracle_diff(fpr(a), fpr(b)),
        5 => oracle_diff(fomr(a), fomr(b)),
        6 => oracle_ratio(fomr(a), fomr(b)),
        7 => oracle_diff(fnr(a), fnr(b)),
        8 => oracle_ratio(fnr(a), fnr(b)),
        9 => oracle_ratio(err(a), err(b)),
        10 => oracle_diff(fdr(a), fdr(b)),
        11 => oracle_ratio(fpr(a), fpr(b)),
        12 => oracle_ratio(pos(a), pos(b)),
        13 => oracle_diff(pos(a), pos(b)),
        14 => oracle_diff(tpr(a), tpr(b)),
        15 => 0.5 * (oracle_diff(fpr(a), fpr(b)) + oracle_diff(tpr(a), tpr(b))),
        16 => oracle_diff(ppv(a), ppv(b)),
        _ => unreachable!(),
    }
}

fn random_side(rng: &mut seed::Rng) -> SideCounts {
    let cell = |rng: &mut seed::Rng| if rng.random_bool(0.15) { 0 } else { rng.random_range(1..60) };
    SideCounts {
        tp: cell(rng),
        fp: cell(rng),
        tn: cell(rng),
        fn_: cell(rng),
    }
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = seed::rng(101);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let c = GroupConfusion {
            privileged: random_side(&mut rng),
            unprivileged: random_side(&mut rng),
        };
        for k in 1..=16u8 {
            let got = fairness_metric(MetricId::Fair(k), &c).expect("metric");
            worst = worst.max((got - fair_oracle(k, &c)).abs());
        }
    }
    let mut identical_ok = true;
    for _ in 0..200 {
        let s = random_side(&mut rng);
        let c = GroupConfusion { privileged: s, unprivileged: s };
        identical_ok &= (1..=16u8).all(|k| fairness_metric(MetricId::Fair(k), &c).expect("metric") == 0.0);
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-12 && identical_ok && secs < 5.0,
        format!("max |kernel - oracle| = {worst:.2e}, identical groups all zero: {identical_ok}, {secs:.3}s"),
    )
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Outcome {
    let b = [1.0, 1.0, 2.0];
    let part = GroupPartition::from_assignments(vec![0, 0, 1], vec![true, false]).unwrap();
    let fi = metrics::generalized_entropy(&b, 2.0).unwrap();
    let fg = metrics::group_entropy(&b, &part, 2.0).unwrap();
    let hand = (fi - 0.0625).abs() <= 1e-12 && (fg - 0.0625).abs() <= 1e-12;

    let flat = [1.37; 12];
    let flat_part = GroupPartition::from_assignments((0..12).map(|i| i % 3).collect(), vec![true, false, false]).unwrap();
    let constant = metrics::generalized_entropy(&flat, 2.0).unwrap().abs() <= 1e-12
        && metrics::group_entropy(&flat, &flat_part, 2.0).unwrap().abs() <= 1e-12;

    let mut rng = seed::rng(202);
    let n = 60;
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..2.0)).collect();
    let groups: Vec<usize> = (0..n).map(|i| i % 4).collect();
    let part = GroupPartition::from_assignments(groups.clone(), vec![true, false, false, false]).unwrap();
    let fi0 = metrics::generalized_entropy(&b, 2.0).unwrap();
    let fg0 = metrics::group_entropy(&b, &part, 2.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..100 {
        order.shuffle(&mut rng);
        let bs: Vec<f64> = order.iter().map(|&i| b[i]).collect();
        let gs: Vec<usize> = order.iter().map(|&i| groups[i]).collect();
        let ps = GroupPartition::from_assignments(gs, vec![true, false, false, false]).unwrap();
        worst = worst
            .max((metrics::generalized_entropy(&bs, 2.0).unwrap() - fi0).abs())
            .max((metrics::group_entropy(&bs, &ps, 2.0).unwrap() - fg0).abs());
    }
    outcome(
        hand && constant && worst <= 1e-12,
        format!("f_I = {fi:.15}, f_G = {fg:.15}, constant benefits zero: {constant}, shuffle drift {worst:.2e}"),
    )
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let ds = fairevo::data::synth_biased(50, 4, 0.3, 303).unwrap();
    let part = fairevo::data::make_groups(&ds, &["group"], &["A"]).unwrap();
    let net = NetSpec::new(ds.width(), 6).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..20u64 {
        let g = nnet::init_genome(&net, seed::derive(303, &[i]));
        for loss in [Loss::CrossEntropy, Loss::IndividualEntropy, Loss::GroupEntropy] {
            let (_, grad) = nnet::loss_gradient(&net, &g, &ds, &part, loss, 2.0).unwrap();
            for j in 0..g.len() {
                let mut plus = g.clone();
                let mut minus = g.clone();
                plus.0[j] += h;
                minus.0[j] -= h;
                let fp = nnet::loss_value(&net, &plus, &ds, &part, loss, 2.0).unwrap();
                let fm = nnet::loss_value(&net, &minus, &ds, &part, loss, 2.0).unwrap();
                let numeric = (fp - fm) / (2.0 * h);
                let scale = grad[j].abs().max(numeric.abs()).max(1e-6);
                worst = worst.max((grad[j] - numeric).abs() / scale);
            }
        }
    }
    outcome(worst < 1e-4, format!("max relative error {worst:.2e} over 20 genomes x 3 losses"))
}

// ---------------------------------------------------------------- 4

fn brute_nondominated(points: &[Vec<f64>]) -> Vec<usize> {
    let dom = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y);
    (0..points.len())
        .filter(|&i| !(0..points.len()).any(|j| dom(&points[j], &points[i])))
        .collect()
}

fn criterion_4() -> Outcome {
    let mut rng = seed::rng(404);
    let mut mismatches = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..=200);
        let m = rng.random_range(2..=5);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| f64::from(rng.random_range(0..8u8))).collect()).collect();
        let mut got = nondominated_set(&pts);
        got.sort_unstable();
        if got != brute_nondominated(&pts) {
            mismatches += 1;
        }
    }
    let r = [1.1, 1.1];
    let hv1 = hypervolume_exact(&[vec![0.0, 0.0]], &r).unwrap();
    let hv2 = hypervolume_exact(&[vec![0.0, 0.5], vec![0.5, 0.0]], &r).unwrap();
    let hand = (hv1 - 1.21).abs() <= 1e-12 && (hv2 - 0.96).abs() <= 1e-12;

    let mut worst_z: f64 = 0.0;
    for s in 0..5u64 {
        let mut rng = seed::rng(seed::derive(404, &[s]));
        let pts: Vec<Vec<f64>> = (0..15).map(|_| (0..3).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let exact3 = hypervolume_exact(&pts, &[1.1; 3]).unwrap();
        let lifted: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().copied().chain([0.0; 6]).collect()).collect();
        let mc = hypervolume_mc(&lifted, &[1.1; 9], indicators::HV_MC_SAMPLES, seed::derive(405, &[s])).unwrap();
        let exact9 = exact3 * 1.1f64.powi(6);
        worst_z = worst_z.max((mc.value - exact9).abs() / mc.stderr.expect("stderr"));
    }
    outcome(
        mismatches == 0 && hand && worst_z <= 3.0,
        format!("front mismatches {mismatches}/100, HV {hv1:.15} and {hv2:.15}, worst MC deviation {worst_z:.2} stderr"),
    )
}

// ---------------------------------------------------------------- 5 and 6

const DESK_SPEC: &str = r#"
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

struct DeskRun {
    data: PreparedData,
    eig: Vec<TrialOutcome>,
    ce_only: Vec<TrialOutcome>,
    secs: f64,
}

fn desk_run() -> &'static DeskRun {
    static RUN: OnceLock<DeskRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let started = Instant::now();
        let eig = ExperimentSpec::from_toml(DESK_SPEC).unwrap();
        let mut ce = eig.clone();
        ce.name = "F_E".into();
        ce.run.criteria = vec![MetricId::Ce];
        ce.run.tracked = vec![MetricId::Fi, MetricId::Fg];
        let data = prepare_data(&eig, Path::new(".")).unwrap();
        let trials = |spec: &ExperimentSpec| -> Vec<TrialOutcome> {
            (0..spec.trials).map(|t| run_trial(spec, &data, t).unwrap()).collect()
        };
        let eig_out = trials(&eig);
        let ce_out = trials(&ce);
        DeskRun {
            data,
            eig: eig_out,
            ce_only: ce_out,
            secs: started.elapsed().as_secs_f64(),
        }
    })
}

fn criterion_5() -> Outcome {
    let run = desk_run();
    let tri = MetricId::tri_objective();
    let mut rising = 0;
    for t in &run.eig {
        let hv = own_front_hv(&t.history, &tri).unwrap();
        rising += usize::from(hv[hv.len() - 1].value > hv[0].value);
    }

    let mut pooled: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut finals: [Vec<Vec<Vec<f64>>>; 2] = [Vec::new(), Vec::new()];
    for (k, outs) in [&run.eig, &run.ce_only].into_iter().enumerate() {
        for t in outs {
            let gens = checkpoint_test_values(t, &run.data, &tri).unwrap();
            finals[k].push(gens.last().expect("final generation kept").1.clone());
            pooled.extend(gens.into_iter().map(|(_, rows)| rows));
        }
    }
    let front = build_pseudo_front(&pooled).unwrap();
    let hv = |sets: &[Vec<Vec<f64>>]| -> Vec<f64> {
        sets.iter().map(|s| hypervolume(&normalize(s, &front).unwrap(), 3).unwrap().value).collect()
    };
    let (a, b) = (hv(&finals[0]), hv(&finals[1]));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let verdict = indicators::rank_sum_test(&a, &b, 0.05).unwrap();
    outcome(
        rising >= 9 && verdict == Verdict::Better,
        format!(
            "(a) HV rose in {rising}/10 trials; (b) test HV F_EIG {:.4} vs F_E {:.4}, verdict \"{}\"; {:.1}s",
            mean(&a),
            mean(&b),
            verdict.symbol(),
            run.secs
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = seed::rng(606);
    let mut superset = true;
    for _ in 0..50 {
        let m = rng.random_range(2..=9);
        let n = rng.random_range(2..=60);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let mut criteria = vec![MetricId::Ce];
        criteria.extend((1..m as u8).map(MetricId::Fair));
        let all = ensemble::select_indices(&pts, &criteria, Strategy::All, 0).unwrap();
        let best = ensemble::select_indices(&pts, &criteria, Strategy::Best, 0).unwrap();
        superset &= best.iter().all(|i| all.contains(i));
    }

    let run = desk_run();
    let mut report_set = vec![MetricId::Acc];
    report_set.extend(MetricId::representative());
    let first = &run.eig[0];
    let member = first.population.members[0].genome.clone();
    let single = Ensemble::new(first.config.net, vec![member.clone()], vec![0]).unwrap();
    let ens_v = ensemble::evaluate_ensemble(&single, &run.data.test, &run.data.test_part, &report_set, 2.0).unwrap();
    let own_v = metrics::evaluate(&first.config.net, &member, &run.data.test, &run.data.test_part, &report_set, 2.0).unwrap();
    let exact = ens_v == own_v;

    let mut wins = 0;
    let mut sizes = Vec::new();
    for t in &run.eig {
        let spec = EnsembleSpec::new(Strategy::All, t.config.criteria.clone());
        let ens = ensemble::select(&t.population.members, &t.config.net, &run.data.ens, &run.data.ens_part, &spec).unwrap();
        let v = ensemble::evaluate_ensemble(&ens, &run.data.test, &run.data.test_part, &report_set, 2.0).unwrap();
        let ens_g = indicators::g_mean(&v.0).unwrap();
        let mut base: Vec<f64> = t
            .population
            .members
            .iter()
            .map(|m| {
                let v = metrics::evaluate(&t.config.net, &m.genome, &run.data.test, &run.data.test_part, &report_set, 2.0).unwrap();
                indicators::g_mean(&v.0).unwrap()
            })
            .collect();
        base.sort_by(f64::total_cmp);
        let k = base.len();
        let median = if k % 2 == 1 { base[k / 2] } else { 0.5 * (base[k / 2 - 1] + base[k / 2]) };
        wins += usize::from(ens_g <= median);
        sizes.push(ens.len());
    }
    outcome(
        superset && exact && wins >= 7,
        format!("EnsAll covers EnsBest: {superset}, size-1 ensemble exact: {exact}, EnsAll G-mean <= median base in {wins}/10 trials (ensemble sizes {sizes:?})"),
    )
}

// ---------------------------------------------------------------- 7

fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Dominate, Incomparable and Dominated by explicit enumeration.
fn enumerate(trials: &[Vec<Vec<f64>>], s: &[f64]) -> (f64, f64, f64) {
    let mut dom_trials = 0.0;
    let mut inc = 0.0;
    let mut dtd = 0.0;
    for trial in trials {
        let mut any = false;
        let (mut i, mut d) = (0.0, 0.0);
        for p in trial {
            if dominates(p, s) {
                any = true;
            } else if dominates(s, p) {
                d += 1.0;
            } else {
                i += 1.0;
            }
        }
        if any {
            dom_trials += 1.0;
        }
        inc += i / trial.len() as f64;
        dtd += d / trial.len() as f64;
    }
    let n = trials.len() as f64;
    (dom_trials / n, inc / n, dtd / n)
}

fn criterion_7() -> Outcome {
    let s = vec![0.5, 0.5];
    let hand: Vec<Vec<Vec<Vec<f64>>>> = vec![
        vec![
            vec![vec![0.4, 0.4], vec![0.6, 0.6]],
            vec![vec![0.2, 0.9], vec![0.9, 0.2], vec![0.7, 0.5]],
            vec![vec![0.5, 0.5]],
        ],
        vec![
            vec![vec![0.1, 0.1]],
            vec![vec![0.5, 0.4], vec![0.4, 0.6]],
            vec![vec![0.6, 0.6], vec![0.8, 0.9], vec![0.3, 0.7], vec![0.5, 0.49]],
        ],
    ];
    let mut exact = true;
    for trials in &hand {
        let arch = TrialArchive { trials: trials.clone(), s: s.clone() };
        let got = (arch.dominate().unwrap(), arch.incomparable().unwrap(), arch.dominated().unwrap());
        exact &= got == enumerate(trials, &s);
    }
    let mut rng = seed::rng(707);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.random_range(2..=4);
        let s: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..0.8)).collect();
        for _ in 0..3 {
            let n = rng.random_range(1..=30);
            let trial: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| f64::from(rng.random_range(0..10u8)) / 9.0).collect()).collect();
            let (a, b, c) = indicators::relation_proportions(&trial, &s);
            worst = worst.max((a + b + c - 1.0).abs());
        }
    }
    outcome(
        exact && worst <= 1e-12,
        format!("hand archives match enumeration: {exact}, proportion identity drift {worst:.2e}"),
    )
}

// ---------------------------------------------------------------- 8

const SMALL_SPEC: &str = r#"
name = "small"
seed = 11
trials = 2

[data]
path = "data.csv"
sensitive = ["group"]
privileged = ["A"]

[run]
hidden = 8
k = 1
generations = 3
lambda = 8
learning_rate = 0.01
"#;

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "jsonl")) {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn pipeline(work: &Path, tag: &str) -> PathBuf {
    let root = work.join(tag);
    let run = root.join("run");
    let spec = work.join("spec.toml");
    let args = |a: &[&str]| std::iter::once("fairevo".to_string()).chain(a.iter().map(|s| s.to_string())).collect::<Vec<_>>();
    assert_eq!(cli::main_with_args(args(&["train", spec.to_str().unwrap(), "--out", run.to_str().unwrap()])), 0);
    assert_eq!(cli::main_with_args(args(&["ensemble", run.to_str().unwrap(), "--size", "3"])), 0);
    let report = root.join("report");
    assert_eq!(cli::main_with_args(args(&["report", run.to_str().unwrap(), "--out", report.to_str().unwrap()])), 0);
    let synth = root.join("synth.csv");
    assert_eq!(
        cli::main_with_args(args(&["synth", "--n", "300", "--seed", "5", "--out", synth.to_str().unwrap()])),
        0
    );
    root
}

fn criterion_8() -> Outcome {
    let work = tempfile::tempdir().unwrap();
    cli::cmd_synth(400, 4, 0.3, 3, &work.path().join("data.csv")).unwrap();
    fs::write(work.path().join("spec.toml"), SMALL_SPEC).unwrap();
    let a = pipeline(work.path(), "a");
    let b = pipeline(work.path(), "b");
    let (fa, fb) = (csv_files(&a), csv_files(&b));
    let differing: Vec<String> = fa
        .iter()
        .filter(|p| fs::read(a.join(p)).ok() != fs::read(b.join(p)).ok())
        .map(|p| p.display().to_string())
        .collect();
    outcome(
        fa == fb && !fa.is_empty() && differing.is_empty(),
        format!("{} output files compared, {} differ {:?}", fa.len(), differing.len(), differing),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("fairness metric oracle", criterion_1),
        ("entropy indices", criterion_2),
        ("loss gradients", criterion_3),
        ("dominance and hypervolume", criterion_4),
        ("desk-scale trend", criterion_5),
        ("ensemble contracts", criterion_6),
        ("dominance relation metrics", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!("criterion {} ({name}): {} - {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
