//! Runs the batch commands on a checked-in problem file and prints the JSON.
//!
//! cargo run --example batch_report -- [problem-file]

use std::path::PathBuf;

use tsvar::cli::{run, without_timings, Command, Flags};

fn main() {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/problems/ex2_discrete.tsv")
    });
    let flags = Flags::default();
    for command in [Command::Eval, Command::Residual, Command::Solve] {
        let out = run(command, &path, &flags);
        println!("--- {} (exit {})", command.name(), out.code);
        print!("{}", out.human);
    }
    let out = run(Command::Solve, &path, &flags);
    println!("--- JSON");
    println!("{}", serde_json::to_string_pretty(&without_timings(out.json)).unwrap());
}
