use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use expcli::ExperimentConfig;
use expcli::{exit_code, run_benchmark, run_sweep_data, run_sweep_order, run_validate};
use smpred::error::Result;

#[derive(Parser)]
#[command(
    name = "expcli",
    version,
    about = "Set Membership multi-step identification experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full benchmark run: identification, baselines, validation and all
    /// figure data files
    Bench(CommonArgs),
    /// Lambda as a function of model order (Fig. 1 data)
    SweepOrder(CommonArgs),
    /// Lambda as a function of the dataset fraction used (Fig. 2 data)
    SweepData(CommonArgs),
    /// Check the guaranteed bounds on fresh validation data (Fig. 4 data)
    Validate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value config file; defaults match the benchmark study
    #[arg(long)]
    config: Option<PathBuf>,
    /// Generator seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory override
    #[arg(long)]
    out: Option<PathBuf>,
    /// Model order override
    #[arg(long)]
    order: Option<usize>,
    /// Prediction horizon override
    #[arg(long)]
    pmax: Option<usize>,
    /// Margin on the optimal-bound estimate, > 1
    #[arg(long)]
    alpha: Option<f64>,
    /// Margin on the per-model bound, > 1
    #[arg(long)]
    gamma: Option<f64>,
    /// Disturbance bound override
    #[arg(long)]
    dbar: Option<f64>,
}

impl CommonArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if let Some(order) = self.order {
            cfg.order = order;
        }
        if let Some(pmax) = self.pmax {
            cfg.p_max = pmax;
        }
        if let Some(alpha) = self.alpha {
            cfg.alpha = alpha;
        }
        if let Some(gamma) = self.gamma {
            cfg.gamma = gamma;
        }
        if let Some(dbar) = self.dbar {
            cfg.d_bound = dbar;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Bench(args) => {
            let cfg = args.load()?;
            let artifacts = run_benchmark(&cfg)?;
            println!("p,tau_multistep,tau_ls,tau_iterated");
            for row in &artifacts.report.rows {
                println!(
                    "{},{:.6},{:.6},{:.6}",
                    row.p, row.tau_multistep, row.tau_ls, row.tau_iterated
                );
            }
            let v = artifacts.report.violations.total_violations("multistep");
            println!("multistep bound violations on validation data: {v}");
            println!(
                "wrote {} files to {}",
                artifacts.files.len(),
                artifacts.out_dir.display()
            );
        }
        Command::SweepOrder(args) => {
            let cfg = args.load()?;
            let (rows, path) = run_sweep_order(&cfg)?;
            println!("order,p,lambda");
            for r in &rows {
                println!("{},{},{:.6}", r.x, r.p, r.lambda);
            }
            println!("wrote {}", path.display());
        }
        Command::SweepData(args) => {
            let cfg = args.load()?;
            let (rows, path) = run_sweep_data(&cfg)?;
            println!("fraction,p,lambda");
            for r in &rows {
                println!("{},{},{:.6}", r.x, r.p, r.lambda);
            }
            println!("wrote {}", path.display());
        }
        Command::Validate(args) => {
            let cfg = args.load()?;
            let (report, files) = run_validate(&cfg)?;
            println!("kind,p,violations,total,max_normalized_error");
            for r in &report.rows {
                println!(
                    "{},{},{},{},{:.4}",
                    r.kind, r.p, r.violations, r.total, r.max_normalized
                );
            }
            for f in files {
                println!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
