use std::io::Write;
use std::process::ExitCode;

use shortap_cli::{parse_config, run};

const USAGE: &str = "usage: shortap <command> [key=value ...]

commands: params, sieve, nu-mean, lf-check, gy-check, corr-check, tau-moments,
          ap-count, full-suite
keys:     N M k w mode eps r_exponent support_lo support_hi samples seed
          tau_A tau_C tau_C0 m shifts window output csv threads config";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if matches!(args.first().map(String::as_str), Some("-h" | "--help" | "help")) {
        println!("{USAGE}");
        return ExitCode::SUCCESS;
    }
    let cfg = match parse_config(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}\n\n{USAGE}");
            return ExitCode::from(1);
        }
    };
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: key threads: {e}");
            return ExitCode::from(1);
        }
    }
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let json = report.to_json();
    let written = match &cfg.output {
        Some(path) => std::fs::write(path, json + "\n").map_err(|e| format!("{}: {e}", path.display())),
        None => writeln!(std::io::stdout(), "{json}").map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(1);
    }
    for check in report.hard_failures() {
        eprintln!("hard failure: {} = {}", check.name, check.value);
    }
    ExitCode::from(report.exit_code() as u8)
}
