use clap::{Parser, Subcommand};
use halfline::error::Error;
use halfline::experiment::{compare_in, run_experiment, sweep_in, RunConfig, PRESETS};
use std::process::ExitCode;

/// Damped and forced NLS on the half-line with a Robin wall.
#[derive(Parser)]
#[command(name = "halfline", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one configuration (file path or preset name) and run its checks.
    Run { config: String },
    /// Transform solver against the Crank-Nicolson oracle, with a halving table.
    Compare { config: String },
    /// Decay-exponent sweep over the [sweep] grid.
    Sweep { config: String },
    /// Bundled presets.
    Presets {
        #[command(subcommand)]
        cmd: PresetCmd,
    },
}

#[derive(Subcommand)]
enum PresetCmd {
    List,
    /// Print a preset's TOML.
    Show { name: String },
}

fn code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::Usage(_) | Error::Domain(_) => 2,
        Error::Io(_) => 3,
        Error::Numerical(_) | Error::NotConverged { .. } => 1,
    }
}

fn verdict(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match cli.cmd {
        Cmd::Presets { cmd: PresetCmd::List } => {
            for (name, text) in PRESETS {
                let desc = RunConfig::parse(text, name).map(|c| c.description).unwrap_or_default();
                println!("{name:24} {desc}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Presets { cmd: PresetCmd::Show { name } } => match halfline::experiment::preset(&name) {
            Some(t) => {
                print!("{t}");
                Ok(ExitCode::SUCCESS)
            }
            None => Err(Error::Usage(format!("unknown preset '{name}'"))),
        },
        Cmd::Run { config } => RunConfig::load(&config).and_then(|cfg| {
            let s = run_experiment(&cfg)?;
            println!("{}: {}", s.name, s.status);
            for c in &s.checks {
                println!("  {:32} {:>12.5e}  {:24} {}", c.name, c.value, c.limit, if c.pass { "PASS" } else { "FAIL" });
            }
            if let Some(n) = &s.note {
                println!("  {n}");
            }
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            println!("artifacts in {}", cfg.output_dir().display());
            Ok(verdict(s.passed))
        }),
        Cmd::Compare { config } => RunConfig::load(&config).and_then(|cfg| {
            let dir = cfg.output_dir().join("compare");
            let s = compare_in(&cfg, &dir)?;
            println!("max relative L2 {:.3e}, Linf {:.3e}", s.max_relative_l2, s.max_relative_linf);
            println!("max Robin residual: spectral {:.3e}, fd {:.3e}", s.max_robin_residual_spectral, s.max_robin_residual_fd);
            for r in &s.convergence {
                let o = r.order.map(|o| format!("{o:.2}")).unwrap_or_else(|| "-".into());
                println!("  {:16} N={:6} dt={:.3e}  diff {:.3e}  order {o}", r.solver, r.n, r.dt, r.difference);
            }
            println!("artifacts in {}", dir.display());
            Ok(verdict(s.passed))
        }),
        Cmd::Sweep { config } => RunConfig::load(&config).and_then(|cfg| {
            let dir = cfg.output_dir().join("sweep");
            let rows = sweep_in(&cfg, &dir)?;
            for r in &rows {
                println!(
                    "cell {:3} beta {:>6} p {:.2} eps {:.3e} alpha {:+.2}  fitted {:+.3} predicted {:+.3}  {}",
                    r.cell,
                    r.beta.map(|b| format!("{b:.3}")).unwrap_or_else(|| "-".into()),
                    r.power,
                    r.eps,
                    r.alpha,
                    r.fitted,
                    r.predicted,
                    if r.pass { "PASS" } else { "FAIL" }
                );
            }
            println!("artifacts in {}", dir.display());
            Ok(verdict(rows.iter().all(|r| r.pass)))
        }),
    };
    match out {
        Ok(c) => c,
        Err(e) => {
            eprintln!("halfline: {e}");
            ExitCode::from(code(&e))
        }
    }
}
