use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use claycalc_cli::run::{run_simulation, run_steady};
use claycalc_cli::scenario::Scenario;
use claycalc_cli::verify::{verify, VerifyOptions};

#[derive(Parser)]
#[command(name = "claycalc", version, about = "Dynamic simulation of an electric flash clay calciner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the scenario from its initial steady state.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve for the steady state under the inputs in force at the end time.
    Steady {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the property checks and print a report.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Write the report here as well as to stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Number of random states for the Jacobian check.
        #[arg(long, default_value_t = 20)]
        states: usize,
        #[arg(long)]
        skip_timing: bool,
        /// Adds VALUE to analytic Jacobian entry ROW,COL.
        #[arg(long, value_name = "ROW,COL,VALUE", hide = true)]
        inject_fault: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Number of calciner cells.
    #[arg(long)]
    nz: Option<usize>,
    #[arg(long, value_parser = ["analytic", "fd"])]
    jacobian: Option<String>,
    #[arg(long, value_parser = ["be", "bdf2"])]
    method: Option<String>,
}

impl Common {
    fn load(&self) -> Result<Scenario> {
        let mut sc = Scenario::load(&self.scenario).with_context(|| format!("reading {}", self.scenario.display()))?;
        if let Some(nz) = self.nz {
            sc.set("calciner.N_z", &nz.to_string())?;
        }
        if let Some(j) = &self.jacobian {
            sc.set("solver.jacobian", j)?;
        }
        if let Some(m) = &self.method {
            sc.set("solver.method", m)?;
        }
        Ok(sc)
    }
}

fn parse_fault(text: &str) -> Result<(usize, usize, f64)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [r, c, v] = parts.as_slice() else {
        anyhow::bail!(claycalc::Error::Config(format!("fault must be ROW,COL,VALUE, got '{text}'")));
    };
    let bad = || claycalc::Error::Config(format!("bad fault specification '{text}'"));
    Ok((r.parse().map_err(|_| bad())?, c.parse().map_err(|_| bad())?, v.parse().map_err(|_| bad())?))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate { common, out } => {
            let sc = common.load()?;
            let s = run_simulation(&sc, &out)?;
            println!("{} samples, {} steps, final CD {:.4}; outputs in {}", s.samples, s.steps, s.final_cd, out.display());
            Ok(true)
        }
        Command::Steady { common, out } => {
            let sc = common.load()?;
            let cd = run_steady(&sc, &out)?;
            println!("steady CD {cd:.4}; outputs in {}", out.display());
            Ok(true)
        }
        Command::Verify { common, report, states, skip_timing, inject_fault } => {
            let sc = common.load()?;
            let fault = inject_fault.as_deref().map(parse_fault).transpose()?;
            let opts = VerifyOptions { jacobian_states: states.max(1), fault, skip_timing, ..VerifyOptions::new() };
            let r = verify(&sc, &opts)?;
            let text = r.to_text();
            print!("{text}");
            if let Some(path) = report {
                std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(r.passed())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(claycalc_cli::exit_code(&e) as u8)
        }
    }
}
