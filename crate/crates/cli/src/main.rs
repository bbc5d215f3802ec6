//! `noma-tradeoff`: run trade-off sweeps, validate the partial-knowledge
//! closed forms, or print the feasibility frontier.
//!
//! Exit codes: 0 on success, 2 when every sweep point is infeasible, 1 on
//! any error (including a failed validation).

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use noma_tradeoff::experiment::{
    emit_csv, feasibility_frontier, run_experiment, validate_partial_csit, write_curves_csv,
    ExperimentConfig,
};

#[derive(Parser)]
#[command(name = "noma-tradeoff", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the sweep in a config file and write CSV.
    Run(Common),
    /// Compare the partial-knowledge closed forms with Monte Carlo; writes a JSON report.
    Validate(Common),
    /// Print the largest rate floor or smallest outage ceiling per scheme.
    Rmax(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    config: PathBuf,
    /// Override the seed of the fading ensemble.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of fading states.
    #[arg(long)]
    n_states: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> noma_tradeoff::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.n_states {
            cfg.n_states = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn write(&self, text: &str) -> Result<(), String> {
        match &self.output {
            Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
            None => std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.cmd {
        Cmd::Run(c) => {
            let cfg = c.config().map_err(|e| e.to_string())?;
            let curves = run_experiment(&cfg).map_err(|e| e.to_string())?;
            match &c.output {
                Some(p) => emit_csv(&curves, p).map_err(|e| e.to_string())?,
                None => write_curves_csv(&curves, std::io::stdout().lock()).map_err(|e| e.to_string())?,
            }
            if curves.iter().all(|c| c.all_infeasible()) {
                eprintln!("every sweep point is infeasible");
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Validate(c) => {
            let cfg = c.config().map_err(|e| e.to_string())?;
            let report = validate_partial_csit(&cfg).map_err(|e| e.to_string())?;
            c.write(&(report.to_json().map_err(|e| e.to_string())? + "\n"))?;
            eprintln!(
                "max rate rel err {:.3e}, max outage abs err {:.3e}: {}",
                report.max_rate_rel_err,
                report.max_outage_abs_err,
                if report.pass { "pass" } else { "FAIL" }
            );
            Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Rmax(c) => {
            let cfg = c.config().map_err(|e| e.to_string())?;
            let frontier = feasibility_frontier(&cfg).map_err(|e| e.to_string())?;
            let mut out = String::from("scheme,quantity,value\n");
            for f in &frontier {
                out += &format!("{},{},{:.8e}\n", f.scheme.label(), f.quantity, f.value);
            }
            c.write(&out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap would exit 2 on usage errors, which is reserved here
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
