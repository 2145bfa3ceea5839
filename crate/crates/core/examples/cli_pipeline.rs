//! The full command-line workflow in a temporary directory: `synth`,
//! `train` for two experiment specs, `ensemble` and `report`.
//!
//! `cargo run --release --example cli_pipeline`

use std::fs;

use fairevo::cli;

const TRI: &str = r#"
name = "tri"
seed = 3
trials = 3

[data]
path = "data.csv"
sensitive = ["group"]
privileged = ["A"]

[run]
hidden = 16
k = 2
generations = 8
lambda = 10
epochs_per_partial = 3
"#;

fn run(args: &[&str]) {
    let argv = std::iter::once("fairevo").chain(args.iter().copied());
    let code = cli::main_with_args(argv);
    assert_eq!(code, 0, "fairevo {args:?} exited with {code}");
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let path = |p: &str| dir.path().join(p).to_string_lossy().into_owned();
    run(&["synth", "--n", "1200", "--d", "4", "--seed", "1", "--out", &path("data.csv")]);
    fs::write(dir.path().join("tri.toml"), TRI).unwrap();
    let ce_only = TRI.replace("name = \"tri\"", "name = \"ce\"").replace("[run]", "[run]\ncriteria = [\"CE\"]\ntracked = [\"FI\", \"FG\"]");
    fs::write(dir.path().join("ce.toml"), ce_only.replace("k = 2", "k = 2\nlosses = [\"CE\"]") + "\n[report]\ncriteria = [\"CE\", \"FI\", \"FG\"]\n").unwrap();

    run(&["train", &path("tri.toml"), "--out", &path("runs/tri")]);
    run(&["train", &path("ce.toml"), "--out", &path("runs/ce")]);
    run(&["ensemble", &path("runs/tri"), "--strategy", "EnsAll", "--strategy", "EnsKnee", "--size", "3"]);
    fs::write(dir.path().join("baseline.csv"), "CE,FI,FG\n0.5,0.05,0.001\n").unwrap();
    run(&["report", &path("runs/tri"), &path("runs/ce"), "--out", &path("report"), "--baseline", &path("baseline.csv")]);

    for file in ["runs/tri/ensemble_report.csv", "report/final.csv", "report/verdicts.csv", "report/relations.csv"] {
        println!("== {file}");
        print!("{}", fs::read_to_string(dir.path().join(file)).unwrap());
    }
}
