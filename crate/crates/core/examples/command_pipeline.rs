//! The command-line pipeline driven in-process: synth, extend, eval, plan.
//! Outputs land in a temporary directory, each step with its manifest.json.
//!
//! cargo run --example command_pipeline

use roadkit::cli::main_with_args;

fn run(args: &[&str]) {
    println!("$ roadkit {}", args.join(" "));
    let code = main_with_args(std::iter::once("roadkit").chain(args.iter().copied()));
    println!("exit {code}\n");
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let d = |sub: &str| dir.path().join(sub).display().to_string();
    let gt = dir.path().join("synth/gt.jsonl").display().to_string();
    let det = dir.path().join("synth/detections.jsonl").display().to_string();
    let ext = dir.path().join("ext/extended.jsonl").display().to_string();

    run(&["--output-dir", &d("synth"), "--seed", "42", "synth"]);
    run(&["--output-dir", &d("ext"), "extend", "-i", &gt]);
    run(&["--output-dir", &d("eval"), "eval", "--gt", &ext, "--det", &det]);
    run(&["--output-dir", &d("plan"), "plan", "--input", "960x540", "--sweep", "1920x1080,960x540"]);
    run(&["--output-dir", &d("bad"), "sample", "-i", &gt, "-n", "1/0"]);

    print!("{}", std::fs::read_to_string(dir.path().join("eval/eval.csv")).unwrap());
}
