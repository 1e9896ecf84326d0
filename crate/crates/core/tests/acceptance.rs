//! One line per acceptance criterion. Time limits and instance counts are
//! fixed inside `smabp::corpus`; every comparison there is exact.

use std::process::ExitCode;

use smabp::corpus::{run_criterion, CorpusConfig, CRITERIA};

fn main() -> ExitCode {
    let cfg = CorpusConfig::default();
    let mut failed = Vec::new();
    for (id, name) in CRITERIA {
        match run_criterion(id, &cfg) {
            Ok(r) => {
                println!("{}", r.line());
                if !r.passed {
                    failed.push(id);
                }
            }
            Err(e) => {
                println!("criterion {id} [{name}] FAIL: error: {e}");
                failed.push(id);
            }
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failing criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
