use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dwlse::sim::output::{
    write_acee_csv, write_estimates_csv, write_mse_csv, write_sweep_csv, write_truth_csv,
};
use dwlse::sim::{run_campaign, sweep_iterations, PreparedScenario, ScenarioConfig};
use dwlse::Result;

/// Distributed WLS tracking simulator.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo campaign of the centralized and distributed estimators.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// ADMM iterations per scan.
        #[arg(long)]
        admm_iters: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Campaign per ADMM iteration count.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,20,50")]
        iters: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the generated network as an edge list.
    Topology {
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file; the built-in tracking scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Monte Carlo runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(path: Option<&Path>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => ScenarioConfig::from_file(p),
        None => Ok(ScenarioConfig::tracking_default()),
    }
}

impl Common {
    fn config(&self) -> Result<ScenarioConfig> {
        let mut cfg = load(self.scenario.as_deref())?;
        if let Some(m) = self.runs {
            cfg.runs = m;
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        Ok(cfg)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn simulate(common: &Common, admm_iters: Option<usize>, out: &Path) -> Result<()> {
    let mut cfg = common.config()?;
    if let Some(l) = admm_iters {
        cfg.dwlse.admm_iters = l;
    }
    let result = run_campaign(&cfg)?;
    fs::create_dir_all(out)?;
    write_mse_csv(create(out, "mse.csv")?, &result)?;
    write_acee_csv(create(out, "acee.csv")?, &result)?;

    // trajectories of the first run, for plotting
    let prepared = PreparedScenario::new(cfg)?;
    let data = prepared.simulate_run(0)?;
    write_truth_csv(create(out, "truth.csv")?, &data.truth)?;
    write_estimates_csv(create(out, "estimates.csv")?, &prepared.run_dwlse(&data)?)?;

    eprintln!(
        "{} runs, D_max = {}, epsilon = {}; avg MSE cif {:.4}, dwlse (node 0) {:.4}, avg ACEE {:.4}",
        result.dwlse.runs,
        result.max_degree,
        result.epsilon,
        result.cif.time_averaged_mse(0),
        result.dwlse.time_averaged_mse(0),
        result.dwlse.time_averaged_acee(),
    );
    Ok(())
}

fn sweep(common: &Common, iters: &[usize], out: &Path) -> Result<()> {
    let result = sweep_iterations(&common.config()?, iters)?;
    fs::create_dir_all(out)?;
    let mut file = create(out, "sweep.csv")?;
    write_sweep_csv(&mut file, &result)?;
    file.flush()?;
    write_sweep_csv(io::stdout().lock(), &result)?;
    Ok(())
}

fn topology(scenario: Option<&Path>) -> Result<()> {
    let cfg = load(scenario)?;
    let topo = cfg.topology()?;
    let mut out = io::stdout().lock();
    writeln!(out, "# {} nodes, D_max = {}", topo.node_count(), topo.max_degree())?;
    out.write_all(topo.to_edge_list().as_bytes())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate {
            common,
            admm_iters,
            out,
        } => simulate(common, *admm_iters, out),
        Command::Sweep { common, iters, out } => sweep(common, iters, out),
        Command::Topology { scenario } => topology(scenario.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
