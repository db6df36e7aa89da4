//! Command-line interface for the hybrid RIS-aided MEC simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ris_mec::channel::{min_gains, sample_channels, Dims, Fading};
use ris_mec::closedform::{self, ClosedFormParams, ConservativeChannel, EnergyOutcome};
use ris_mec::config::ExperimentConfig;
use ris_mec::error::Error;
use ris_mec::orchestrator::{self, brute_force_oracle, OracleGrids, SolveContext};
use ris_mec::rng::derive_seed;
use ris_mec::sca::SurrogateBackend;

#[derive(Parser)]
#[command(
    name = "ris-mec",
    version,
    about = "Hybrid active-passive RIS-aided MEC cost minimization simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one channel realization with the configured algorithms.
    Solve(SolveArgs),
    /// Run the configured Monte Carlo sweep and write CSV + manifest.
    Sweep(SweepArgs),
    /// Closed-form latency/energy solutions for the single-antenna
    /// line-of-sight regime.
    Closedform(ClosedformArgs),
    /// Brute-force grid search on a desk-scale instance.
    Oracle(OracleArgs),
    /// Run the invariant suite.
    Validate,
}

#[derive(Args)]
struct SolveArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Channel seed (defaults to the first trial's derived seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Emit the summary as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON configuration file (must contain a sweep section).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the CSV and run manifest.
    #[arg(long)]
    out: PathBuf,
    /// Force the sequential driver.
    #[arg(long)]
    sequential: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ClosedformMode {
    Latency,
    Energy,
}

#[derive(Args)]
struct ClosedformArgs {
    /// Which special case to solve.
    #[arg(long, value_enum)]
    mode: ClosedformMode,
    /// Derive the conservative channel gains from a seeded realization of
    /// this configuration (forces M = 1, line-of-sight fading).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for the derived channel.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// User index for the derived channel.
    #[arg(long, default_value_t = 0)]
    user: usize,
    /// Explicit RIS-AP element gain |h| (overrides the derived channel).
    #[arg(long)]
    g_ris_ap: Option<f64>,
    /// Explicit user-RIS element gain |h_r|.
    #[arg(long)]
    g_user_ris: Option<f64>,
    /// Number of reflecting units.
    #[arg(long, default_value_t = 6)]
    n_units: usize,
    /// Transmit power in watts.
    #[arg(long, default_value_t = 0.01)]
    p_tx: f64,
    /// RIS amplification power budget in watts.
    #[arg(long, default_value_t = 0.01)]
    p_ris_max: f64,
    /// RIS thermal noise power in watts.
    #[arg(long, default_value_t = 1e-11)]
    ris_noise_power: f64,
    /// AP noise power in watts.
    #[arg(long, default_value_t = 1e-11)]
    ap_noise_power: f64,
    /// Bandwidth in Hz.
    #[arg(long, default_value_t = 1e6)]
    bandwidth: f64,
    /// Task size in bits.
    #[arg(long, default_value_t = 1e6)]
    s_bits: f64,
    /// Transmission deadline in seconds.
    #[arg(long, default_value_t = 0.5)]
    t_max: f64,
    /// Minimum amplification factor.
    #[arg(long, default_value_t = 1.0)]
    rho_min: f64,
    /// Clamp amplification to this cap (analytic solutions are uncapped).
    #[arg(long)]
    rho_cap: Option<f64>,
    /// Active-unit count for the energy pipeline's time step.
    #[arg(long, default_value_t = 3)]
    n_act: usize,
    /// Amplification factor for the energy pipeline's time/count steps.
    #[arg(long, default_value_t = 2.0)]
    rho: f64,
}

#[derive(Args)]
struct OracleArgs {
    /// JSON configuration file (desk-scale dimensions).
    #[arg(long)]
    config: PathBuf,
    /// Grid spec: comma-separated `phases=8,rho_step=0.5,beta_steps=21`.
    #[arg(long)]
    grids: Option<String>,
    /// Channel seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Solve(args) => run_solve(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Closedform(args) => run_closedform(args),
        Command::Oracle(args) => run_oracle(args),
        Command::Validate => run_validate(),
    }
    .map_or_else(
        |e| {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        },
        |_| ExitCode::SUCCESS,
    )
}

fn run_solve(args: SolveArgs) -> Result<(), Error> {
    let config = ExperimentConfig::from_path(&args.config)?;
    let seed = args
        .seed
        .unwrap_or_else(|| derive_seed(config.master_seed, &[0x7472_6961_6c73, 0]));
    let realization = sample_channels(
        &config.geometry,
        &config.path_loss,
        config.dims,
        seed,
        config.fading,
    )?;
    let backend = SurrogateBackend::default();
    let ctx = SolveContext::from_config(&config, &backend);
    let results = orchestrator::run_all(&ctx, &realization, &config.algorithms);

    if args.json {
        let mut entries = Vec::new();
        for (kind, res) in &results {
            let value = match res {
                Ok(o) => serde_json::json!({
                    "algorithm": kind.id(),
                    "total_cost": o.cost.total_cost,
                    "latency_sum": o.cost.latency_sum,
                    "energy_sum": o.cost.energy_sum,
                    "active_units_per_slot": o.active_units_per_slot(),
                    "iterations": o.iterations,
                    "converged": o.converged,
                    "trace": o.trace,
                }),
                Err(e) => serde_json::json!({
                    "algorithm": kind.id(),
                    "infeasible": e.to_string(),
                }),
            };
            entries.push(value);
        }
        let doc = serde_json::json!({ "seed": seed, "results": entries });
        println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
        return Ok(());
    }

    println!("seed {seed}");
    for (kind, res) in &results {
        match res {
            Ok(o) => {
                println!(
                    "{:<17} cost {:12.6e}  latency {:10.4e} s  energy {:10.4e} J  active {:?}  iters {:2}  converged {}",
                    kind.id(),
                    o.cost.total_cost,
                    o.cost.latency_sum,
                    o.cost.energy_sum,
                    o.active_units_per_slot(),
                    o.iterations,
                    o.converged
                );
            }
            Err(e) => println!("{:<17} infeasible: {e}", kind.id()),
        }
    }
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<(), Error> {
    let config = ExperimentConfig::from_path(&args.config)?;
    let output = orchestrator::run_sweep(&config, !args.sequential)?;
    let paths = orchestrator::write_sweep(&output, &args.out)?;
    for p in paths {
        println!("wrote {}", p.display());
    }
    println!("{} records", output.records.len());
    Ok(())
}

fn closedform_channel(args: &ClosedformArgs) -> Result<(ConservativeChannel, usize), Error> {
    if let (Some(g_h), Some(g_r)) = (args.g_ris_ap, args.g_user_ris) {
        return Ok((ConservativeChannel::new(g_h, g_r)?, args.n_units));
    }
    let path = args.config.as_ref().ok_or_else(|| {
        Error::Config("give --g-ris-ap/--g-user-ris or --config for a derived channel".into())
    })?;
    let config = ExperimentConfig::from_path(path)?;
    // The analytical regime: single-antenna AP, line-of-sight links.
    let dims = Dims { m_antennas: 1, ..config.dims };
    let realization =
        sample_channels(&config.geometry, &config.path_loss, dims, args.seed, Fading::Los)?;
    let (g_h, g_r) = min_gains(&realization, args.user)?;
    Ok((ConservativeChannel::new(g_h, g_r)?, dims.n_units))
}

fn run_closedform(args: ClosedformArgs) -> Result<(), Error> {
    let (cc, n_units) = closedform_channel(&args)?;
    let params = ClosedFormParams {
        p_tx: args.p_tx,
        p_ris_max: args.p_ris_max,
        ris_noise_power: args.ris_noise_power,
        ap_noise_power: args.ap_noise_power,
        bandwidth: args.bandwidth,
        p_circuit: 1e-4,
        p_dc: 3.1622776601683794e-4,
        n_units,
        rho_min: args.rho_min,
        rho_cap: args.rho_cap,
    };
    println!("conservative gains: |h| = {:.6e}, |h_r| = {:.6e}", cc.g_ris_ap, cc.g_user_ris);
    match args.mode {
        ClosedformMode::Latency => {
            let solution = closedform::latency_count(&cc, &params)?;
            let timing = closedform::latency_time(&cc, &solution, args.s_bits, args.t_max, &params);
            println!("n_act            = {}", solution.n_act);
            println!("n_pas            = {}", solution.n_pas);
            println!("n_act_continuous = {:.6}", solution.n_act_continuous);
            println!("rho              = {:.6}", solution.rho);
            println!(
                "sinr             = {:.6e}",
                closedform::conservative_sinr(&cc, &params, solution.n_act as f64, solution.rho)
            );
            println!("t                = {:.6e} s", timing.t);
            println!("feasible         = {}", timing.feasible);
        }
        ClosedformMode::Energy => {
            let t = match closedform::energy_time(&cc, &params, args.n_act, args.rho, args.s_bits, args.t_max)
            {
                EnergyOutcome::Feasible(t) => {
                    println!(
                        "t                = {t:.6e} s (at n_act = {}, rho = {})",
                        args.n_act, args.rho
                    );
                    t
                }
                EnergyOutcome::Infeasible(f) => {
                    println!("t                = infeasible ({f:?})");
                    return Ok(());
                }
            };
            match closedform::energy_amp(&cc, &params, args.n_act, args.s_bits, t, args.rho_min) {
                EnergyOutcome::Feasible(rho) => {
                    println!("rho              = {rho:.6} (energy-minimal at n_act = {})", args.n_act);
                    match closedform::energy_count(&cc, &params, rho.max(1.0 + 1e-9), args.s_bits, t)? {
                        EnergyOutcome::Feasible(c) => {
                            println!("n_act            = {}", c.n_act);
                            println!("n_act_continuous = {:.6}", c.n_act_continuous);
                            println!(
                                "energy           = {:.6e} J",
                                closedform::energy_objective(&cc, &params, c.n_act as f64, rho, t)
                            );
                        }
                        EnergyOutcome::Infeasible(f) => println!("n_act            = infeasible ({f:?})"),
                    }
                }
                EnergyOutcome::Infeasible(f) => println!("rho              = infeasible ({f:?})"),
            }
        }
    }
    Ok(())
}

fn parse_grids(spec: &str) -> Result<OracleGrids, Error> {
    let mut grids = OracleGrids::default();
    for part in spec.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("bad grid entry '{part}'")))?;
        let parse = |v: &str| {
            v.parse::<f64>()
                .map_err(|e| Error::Config(format!("bad grid value '{v}': {e}")))
        };
        match key.trim() {
            "phases" => grids.phase_levels = parse(value)? as usize,
            "rho_step" => grids.rho_step = parse(value)?,
            "beta_steps" => grids.beta_steps = parse(value)? as usize,
            "max_evaluations" => grids.max_evaluations = parse(value)? as u64,
            other => return Err(Error::Config(format!("unknown grid key '{other}'"))),
        }
    }
    Ok(grids)
}

fn run_oracle(args: OracleArgs) -> Result<(), Error> {
    let config = ExperimentConfig::from_path(&args.config)?;
    let grids = match &args.grids {
        Some(spec) => parse_grids(spec)?,
        None => OracleGrids::default(),
    };
    let seed = args
        .seed
        .unwrap_or_else(|| derive_seed(config.master_seed, &[0x7472_6961_6c73, 0]));
    let realization = sample_channels(
        &config.geometry,
        &config.path_loss,
        config.dims,
        seed,
        config.fading,
    )?;
    let tasks = vec![config.task; config.dims.k_users];
    let result = brute_force_oracle(&realization, &tasks, &config.system, &config.user, &grids)?;
    println!("seed {seed}");
    println!("evaluations = {}", result.evaluations);
    println!("best cost   = {:.6e}", result.cost);
    for (k, state) in result.ris_per_slot.iter().enumerate() {
        println!(
            "slot {k}: active {}/{}  rho {:.3}  beta {:.3}  t {:.4e} s  p {:.4e} W",
            state.n_active(),
            state.n_units(),
            state.amplification[0],
            result.alloc.beta[k],
            result.alloc.t[k],
            result.alloc.p[k]
        );
    }
    Ok(())
}

fn run_validate() -> Result<(), Error> {
    let results = ris_mec::validate::run_invariant_suite();
    let mut failed = 0;
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status}  {:<55} {}", r.name, r.detail);
        if !r.passed {
            failed += 1;
        }
    }
    println!("{}/{} invariants hold", results.len() - failed, results.len());
    if failed > 0 {
        return Err(Error::Domain(format!("{failed} invariant(s) failed")));
    }
    Ok(())
}
