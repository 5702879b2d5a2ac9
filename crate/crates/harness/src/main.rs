use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use ekch_core::Exec;
use ekch_harness::config::ExperimentConfig;
use ekch_harness::experiments::{self, RunContext, System};
use ekch_harness::report::{all_passed, audit_lines, output_dir, Audit};

#[derive(Parser)]
#[command(name = "ekch", version = ekch_harness::report::VERSION, about = "Relaxation-limit experiments on the periodic torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single Euler-Korteweg run
    RunEk(Args),
    /// Single nonlocal Cahn-Hilliard run
    RunNlch(Args),
    /// Single local Cahn-Hilliard run
    RunLch(Args),
    /// Relaxation runs over an epsilon list against one nonlocal reference
    SweepEps(Args),
    /// Joint (eps, eta) sweep against one local reference
    SweepJoint(Args),
    /// Kernel moments and Poincare constants, printed as JSON
    VerifyKernel(Args),
    /// Sampled pressure and growth constants of the configured potentials
    VerifyPotential(Args),
    /// Poincare constant against random fields and a direct-sum oracle
    Poincare(Args),
    /// Consistency of the nonlocal operator with the Laplacian
    Consistency(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent sweep members (1 = sequential)
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Seed of the randomized checks; overrides `seed` in the config
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(command: &Command) -> Result<Vec<Audit>> {
    let (name, args) = match command {
        Command::RunEk(a) => ("run-ek", a),
        Command::RunNlch(a) => ("run-nlch", a),
        Command::RunLch(a) => ("run-lch", a),
        Command::SweepEps(a) => ("sweep-eps", a),
        Command::SweepJoint(a) => ("sweep-joint", a),
        Command::VerifyKernel(a) => ("verify-kernel", a),
        Command::VerifyPotential(a) => ("verify-potential", a),
        Command::Poincare(a) => ("poincare", a),
        Command::Consistency(a) => ("consistency", a),
    };
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = output_dir(&cfg, args.out.as_deref(), name);
    std::fs::create_dir_all(&out)?;
    let ctx = RunContext { out: out.clone(), exec: Exec::from_jobs(args.jobs.max(1)) };
    let audits = match command {
        Command::RunEk(_) => experiments::run_single(System::Ek, &cfg, &ctx)?.audits,
        Command::RunNlch(_) => experiments::run_single(System::Nlch, &cfg, &ctx)?.audits,
        Command::RunLch(_) => experiments::run_single(System::Lch, &cfg, &ctx)?.audits,
        Command::SweepEps(_) => {
            let r = experiments::sweep_eps(&cfg, &ctx)?;
            print!("{}", experiments::sweep_table(&r.rows).to_csv());
            for f in &r.flags {
                eprintln!("note: {f}");
            }
            r.audits
        }
        Command::SweepJoint(_) => {
            let r = experiments::sweep_joint(&cfg, &ctx)?;
            println!("{}", r.rule);
            r.audits
        }
        Command::VerifyKernel(_) => {
            let r = experiments::verify_kernel(&cfg, &ctx)?;
            println!("{}", serde_json::to_string_pretty(&r.rows)?);
            r.audits
        }
        Command::VerifyPotential(_) => experiments::verify_potential(&cfg, &ctx, cfg.seed)?.audits,
        Command::Poincare(_) => {
            let r = experiments::poincare(&cfg, &ctx, cfg.seed)?;
            println!("C_P = {} at mode {:?}", r.c_p, r.extremal_mode);
            r.audits
        }
        Command::Consistency(_) => {
            let r = experiments::consistency(&cfg, &ctx)?;
            for f in &r.flags {
                eprintln!("note: {f}");
            }
            r.audits
        }
    };
    eprintln!("artifacts in {}", out.display());
    Ok(audits)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(audits) => {
            eprint!("{}", audit_lines(&audits));
            if all_passed(&audits) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
