use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use projtract::report::Tolerances;
use projtract::suites::SuiteOptions;
use projtract_cli::{
    emit_report, list_registry, parse_report, run_scenario, scenario_from_config, Invocation, ReportDocument,
    ScenarioReport,
};

#[derive(Parser)]
#[command(name = "projtract", about = "Numerical verification of projective tractor geometry", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites on one or more scenarios and emit a JSON report.
    Analyze {
        /// Scenario id, e.g. `round_sphere(5)`; repeatable.
        #[arg(long = "scenario")]
        scenarios: Vec<String>,
        /// Scenario configuration file (`family=…` plus its parameters).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Suite name or check id; repeatable. Defaults to the scenario's default suites.
        #[arg(long = "suite")]
        suites: Vec<String>,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1e-5)]
        fd_step: f64,
        #[arg(long, default_value_t = 512)]
        ode_steps: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol_alg: f64,
        #[arg(long, default_value_t = 1e-7)]
        tol_d1: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol_d2: f64,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print a one-line-per-check summary to stderr.
        #[arg(long)]
        summary: bool,
    },
    /// List the registered scenarios.
    List,
    /// Re-read a report and print its summary.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn verdict(doc: &ReportDocument) -> ExitCode {
    if doc.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::List => match serde_json::to_string_pretty(&list_registry()) {
            Ok(s) => {
                println!("{s}");
                ExitCode::SUCCESS
            }
            Err(e) => usage(e),
        },
        Command::Report { input } => {
            let text = match std::fs::read_to_string(&input) {
                Ok(t) => t,
                Err(e) => return usage(format!("{}: {e}", input.display())),
            };
            match parse_report(&text) {
                Ok(doc) => {
                    print!("{}", doc.summary());
                    verdict(&doc)
                }
                Err(e) => usage(e),
            }
        }
        Command::Analyze {
            mut scenarios,
            config,
            suites,
            points,
            seed,
            fd_step,
            ode_steps,
            tol_alg,
            tol_d1,
            tol_d2,
            out,
            summary,
        } => {
            if let Some(path) = config {
                let text = match std::fs::read_to_string(&path) {
                    Ok(t) => t,
                    Err(e) => return usage(format!("{}: {e}", path.display())),
                };
                match scenario_from_config(&text) {
                    Ok(id) => scenarios.push(id),
                    Err(e) => return usage(e),
                }
            }
            if scenarios.is_empty() {
                return usage("at least one --scenario or --config is required");
            }
            if points == 0 || ode_steps == 0 || !(fd_step > 0.0) {
                return usage("--points, --ode-steps and --fd-step must be positive");
            }
            let opts = SuiteOptions { points, seed, fd_step, ode_steps, tol: Tolerances { alg: tol_alg, d1: tol_d1, d2: tol_d2 } };
            let mut reports = Vec::new();
            for id in &scenarios {
                match run_scenario(id, &suites, &opts) {
                    Ok(checks) => reports.push(ScenarioReport { id: id.clone(), checks }),
                    Err(e) => return usage(e),
                }
            }
            let doc = match ReportDocument::new(Invocation::new(&scenarios, &suites, &opts), reports) {
                Ok(d) => d,
                Err(e) => return usage(e),
            };
            if let Err(e) = emit_report(&doc, out.as_deref()) {
                return usage(e);
            }
            if summary {
                eprint!("{}", doc.summary());
            }
            verdict(&doc)
        }
    }
}
