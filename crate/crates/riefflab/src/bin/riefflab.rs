use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use riefflab::harness::{refinement_study, run_suite, SuiteConfig};
use riefflab::{LabError, Result};

#[derive(Parser)]
#[command(name = "riefflab", version, about = "Numerical checks for Rieffel deformations and modulation maps")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run check suites and emit a JSON report.
    Run(RunArgs),
    /// Residual of one check across lattice sizes.
    Refine(RefineArgs),
}

#[derive(Args)]
struct Common {
    /// Flat key=value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    rep_n: Option<usize>,
    #[arg(long)]
    torus_m: Option<usize>,
    /// translation | kronecker:a1,a2
    #[arg(long)]
    system: Option<String>,
    /// gaussian | hermite:k
    #[arg(long)]
    window: Option<String>,
    /// M | Mprime
    #[arg(long)]
    modmap: Option<String>,
    /// s1,s2
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<String>,
    /// seed:k count:m (either part may be omitted)
    #[arg(long, num_args = 1..=2)]
    probes: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated suites, or "all".
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Global tolerance override.
    #[arg(long)]
    tol: Option<f64>,
    /// Record per-check wall time.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct RefineArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    check: String,
    /// Comma-separated lattice sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    levels: Vec<usize>,
    /// Emit CSV instead of a table.
    #[arg(long)]
    csv: bool,
}

fn build_config(c: &Common) -> Result<SuiteConfig> {
    let mut cfg = match &c.config {
        Some(p) => SuiteConfig::parse(&std::fs::read_to_string(p)?)?,
        None => SuiteConfig::default(),
    };
    let pairs = [
        ("grid_n", c.grid_n.map(|v| v.to_string())),
        ("rep_n", c.rep_n.map(|v| v.to_string())),
        ("torus_m", c.torus_m.map(|v| v.to_string())),
        ("system", c.system.clone()),
        ("window", c.window.clone()),
        ("modmap", c.modmap.clone()),
        ("sigma", c.sigma.clone()),
    ];
    for (k, v) in pairs {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    for p in &c.probes {
        match p.split_once(':') {
            Some(("seed", v)) => cfg.set("seed", v)?,
            Some(("count", v)) => cfg.set("probes", v)?,
            _ => return Err(LabError::InvalidArgument(format!("bad --probes part '{p}' (expected seed:k or count:m)"))),
        }
    }
    cfg.apply_env()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Run(a) => {
            let mut cfg = build_config(&a.common)?;
            if let Some(s) = &a.suite {
                cfg.set("suites", s)?;
            }
            if let Some(t) = a.tol {
                cfg.tol = Some(t);
            }
            if a.report.is_some() {
                cfg.report = a.report.clone();
            }
            cfg.timing |= a.timing;
            let report = run_suite(&cfg)?;
            print!("{}", report.summary());
            Ok(report.all_passed())
        }
        Cmd::Refine(a) => {
            let cfg = build_config(&a.common)?;
            let t = refinement_study(&cfg, &a.check, &a.levels)?;
            if a.csv {
                print!("{}", t.to_csv());
            } else {
                println!("{}", t.check);
                for (i, (n, r)) in t.rows.iter().enumerate() {
                    match i.checked_sub(1).map(|j| t.orders[j]) {
                        Some(o) => println!("  N={n:<5} {r:.3e}  order {o:.2}"),
                        None => println!("  N={n:<5} {r:.3e}"),
                    }
                }
            }
            Ok(t.monotone())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
