use std::process::ExitCode;

use clap::Parser;
use mtp2::cli::{run, RunConfig};

fn main() -> ExitCode {
    let cfg = match RunConfig::try_parse() {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            // usage errors share the input-error status; 2 means "no MLE"
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let output = cfg.output.clone();
    let outcome = run(cfg);
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    match output {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &outcome.report) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{}", outcome.report),
    }
    if outcome.code != 0 {
        if let Some(line) = outcome.report.lines().find(|l| l.starts_with("error: ")) {
            eprintln!("{line}");
        }
    }
    ExitCode::from(outcome.code as u8)
}
