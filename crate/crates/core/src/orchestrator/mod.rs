//! Alternating optimization, baselines, grid oracle, and the sweep harness.

pub mod oracle;
pub mod sweep;

pub use oracle::{brute_force_oracle, OracleGrids, OracleResult};
pub use sweep::{run_sweep, write_sweep, SweepOutput, TrialRecord};

use crate::beamforming::mmse_beamformer;
use crate::channel::ChannelRealization;
use crate::config::{AlgorithmKind, ExperimentConfig};
use crate::error::{Error, Result};
use crate::model::{self, Allocation, CostBreakdown, RisState, SystemParams, Task, UserParams};
use crate::sca::{self, SubproblemBackend};
use crate::timepower::{self, ConvexPoint, TimePowerProblem};
use crate::CVector;

/// Everything a single solve needs besides the channel realization.
pub struct SolveContext<'a> {
    pub tasks: Vec<Task>,
    pub params: SystemParams,
    pub user_params: UserParams,
    pub l_max: usize,
    pub epsilon: f64,
    pub backend: &'a dyn SubproblemBackend,
}

impl<'a> SolveContext<'a> {
    pub fn from_config(config: &ExperimentConfig, backend: &'a dyn SubproblemBackend) -> Self {
        SolveContext {
            tasks: vec![config.task; config.dims.k_users],
            params: config.system,
            user_params: config.user,
            l_max: config.convergence.l_max,
            epsilon: config.convergence.epsilon,
            backend,
        }
    }
}

/// Result of one alternating-optimization run.
#[derive(Debug, Clone)]
pub struct AoOutcome {
    pub alloc: Allocation,
    pub ris_per_slot: Vec<RisState>,
    pub cost: CostBreakdown,
    /// Total cost after each outer iteration (non-increasing).
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl AoOutcome {
    pub fn active_units_per_slot(&self) -> Vec<usize> {
        self.ris_per_slot.iter().map(|r| r.n_active()).collect()
    }
}

/// Starting point of the loop.
#[derive(Debug, Clone)]
pub enum InitKind {
    AllPassive,
    AllActive,
    /// Resume from a previous solution.
    Warm(Allocation, Vec<RisState>),
}

/// Frozen-variable options distinguishing the baselines.
#[derive(Debug, Clone)]
pub struct AoOptions {
    /// Freeze every unit's mode bit to this value.
    pub mode_freeze: Option<bool>,
    /// Freeze every user's offload ratio.
    pub beta_freeze: Option<f64>,
    pub init: InitKind,
}

impl AoOptions {
    pub fn free() -> Self {
        AoOptions { mode_freeze: None, beta_freeze: None, init: InitKind::AllPassive }
    }
}

fn fallback_beamformer(m: usize) -> CVector {
    let mut v = CVector::zeros(m);
    v[0] = crate::C64::new(1.0, 0.0);
    v
}

/// Check that a trivially safe initialization exists: the pinned (or zero)
/// offload ratio with every slot at its cap and an all-passive RIS.
fn precheck_feasible_init(ctx: &SolveContext<'_>, k_users: usize, beta: f64) -> Result<()> {
    let frame: f64 = ctx.user_params.t_max * k_users as f64;
    for (k, task) in ctx.tasks.iter().enumerate() {
        let cycles = (1.0 - beta) * task.c_cycles;
        if cycles <= 0.0 {
            continue;
        }
        let f_needed = cycles / frame;
        if f_needed > ctx.user_params.f_max {
            return Err(Error::Infeasible(format!(
                "no feasible initialization: C6 local compute time (user {k}) needs \
                 {f_needed:.3e} Hz > f_max"
            )));
        }
        let e_local = cycles * ctx.user_params.kappa * f_needed * f_needed;
        if e_local > ctx.user_params.e_max {
            return Err(Error::Infeasible(format!(
                "no feasible initialization: C1 energy budget (user {k}) needs \
                 {e_local:.3e} J > E_max"
            )));
        }
    }
    Ok(())
}

/// The alternating-optimization loop: closed-form beamformers, the convex
/// time/power/ratio subproblem, then the RIS-configuration block to inner
/// convergence; stops when the cost change falls below epsilon. Every block
/// keeps the better of its solution and its warm start, so the cost trace is
/// non-increasing (asserted).
pub fn alternating_optimize(
    ctx: &SolveContext<'_>,
    realization: &ChannelRealization,
    options: &AoOptions,
) -> Result<AoOutcome> {
    let k_users = realization.k_users();
    let n_units = realization.n_units();
    let m = realization.m_antennas();

    if let Some(b) = options.beta_freeze {
        if b < 1.0 {
            precheck_feasible_init(ctx, k_users, b)?;
        }
    } else {
        precheck_feasible_init(ctx, k_users, 0.0)?;
    }

    // Initialization: passive RIS (or the requested start), half offload,
    // half slot, full CPU, transmit power from the energy-budget equality.
    let (mut alloc, mut ris): (Allocation, Vec<RisState>) = match &options.init {
        InitKind::Warm(a, r) => (a.clone(), r.clone()),
        kind => {
            let state = match (options.mode_freeze, kind) {
                (Some(true), _) | (None, InitKind::AllActive) => RisState::all_active(n_units),
                _ => RisState::all_passive(n_units),
            };
            let beta0 = options.beta_freeze.unwrap_or(0.5);
            let t0 = ctx.user_params.t_max / 2.0;
            let mut alloc = Allocation {
                t: vec![t0; k_users],
                p: vec![0.0; k_users],
                beta: vec![beta0; k_users],
                f_local: vec![ctx.user_params.f_max; k_users],
                beamformer: vec![fallback_beamformer(m); k_users],
            };
            for k in 0..k_users {
                let (_, e_local) = model::local_compute(
                    &ctx.tasks[k],
                    beta0,
                    ctx.user_params.f_max,
                    ctx.user_params.kappa,
                );
                alloc.p[k] = ((ctx.user_params.e_max - e_local) / t0).max(0.0);
            }
            (alloc, vec![state; k_users])
        }
    };

    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let inner_eps = ctx.epsilon * 0.1;

    for _l in 1..=ctx.l_max {
        iterations += 1;

        // (i) MMSE receive beamformers (direction independent of power).
        for k in 0..k_users {
            let p_ref = alloc.p[k].max(1e-9);
            match mmse_beamformer(
                realization,
                &ris[k],
                p_ref,
                ctx.params.ris_noise_power,
                ctx.params.ap_noise_power,
                k,
            ) {
                Ok(w) => alloc.beamformer[k] = w,
                Err(_) => alloc.beamformer[k] = fallback_beamformer(m),
            }
        }

        // (ii) Transmission time / energy / offload ratio.
        let mut problem =
            TimePowerProblem::from_state(realization, &ris, &alloc, &ctx.tasks, &ctx.params, &ctx.user_params);
        problem.beta_freeze = options.beta_freeze;
        let warm = ConvexPoint {
            t: alloc.t.clone(),
            p_bar: alloc.t.iter().zip(&alloc.p).map(|(t, p)| t * p).collect(),
            beta: alloc.beta.clone(),
        };
        let (point, _report) = timepower::solve_time_power(&problem, Some(&warm))?;
        alloc.p = timepower::recover_power(&point);
        alloc.t = point.t;
        alloc.beta = point.beta;

        // (iii) RIS configuration and CPU frequencies, to inner convergence.
        let mut inner_prev = f64::INFINITY;
        for _ in 0..6 {
            let mut sub = sca::assemble_subproblem(
                realization,
                &alloc,
                &ris,
                &ctx.tasks,
                &ctx.params,
                &ctx.user_params,
            )?;
            if let Some(fixed) = options.mode_freeze {
                for slot in &mut sub.slots {
                    slot.mode_freeze = Some(vec![fixed; n_units]);
                }
            }
            let step = sca::solve_and_recover(&sub, ctx.backend)?;
            ris = step.ris_per_slot;
            alloc.f_local = step.f_local;
            if inner_prev - step.objective <= inner_eps {
                break;
            }
            inner_prev = step.objective;
        }

        let cost = model::total_cost(&alloc, &ris, realization, &ctx.tasks, &ctx.params, &ctx.user_params);
        let y = cost.total_cost;
        if let Some(&prev) = trace.last() {
            assert!(
                y <= prev + 1e-9 + 1e-9 * prev.abs(),
                "cost trace must be non-increasing: {prev} -> {y}"
            );
            trace.push(y);
            if (prev - y).abs() <= ctx.epsilon {
                converged = true;
                break;
            }
        } else {
            trace.push(y);
        }
    }

    let cost = model::total_cost(&alloc, &ris, realization, &ctx.tasks, &ctx.params, &ctx.user_params);
    Ok(AoOutcome { alloc, ris_per_slot: ris, cost, trace, iterations, converged })
}

/// Run one named algorithm. The hybrid multi-starts from both pure modes and
/// additionally resumes from each pure baseline's solution, so its cost never
/// exceeds either baseline at matched inputs.
pub fn run_baseline(
    kind: AlgorithmKind,
    ctx: &SolveContext<'_>,
    realization: &ChannelRealization,
) -> Result<AoOutcome> {
    match kind {
        AlgorithmKind::FullyActive => alternating_optimize(
            ctx,
            realization,
            &AoOptions { mode_freeze: Some(true), beta_freeze: None, init: InitKind::AllActive },
        ),
        AlgorithmKind::FullyPassive => alternating_optimize(
            ctx,
            realization,
            &AoOptions { mode_freeze: Some(false), beta_freeze: None, init: InitKind::AllPassive },
        ),
        AlgorithmKind::FullyLocal => alternating_optimize(
            ctx,
            realization,
            &AoOptions {
                mode_freeze: Some(false),
                beta_freeze: Some(0.0),
                init: InitKind::AllPassive,
            },
        ),
        AlgorithmKind::FullyOffloading => alternating_optimize(
            ctx,
            realization,
            &AoOptions { mode_freeze: None, beta_freeze: Some(1.0), init: InitKind::AllPassive },
        ),
        AlgorithmKind::Hybrid => {
            let active = run_baseline(AlgorithmKind::FullyActive, ctx, realization).ok();
            let passive = run_baseline(AlgorithmKind::FullyPassive, ctx, realization).ok();
            run_hybrid(ctx, realization, active.as_ref(), passive.as_ref())
        }
    }
}

/// Hybrid solve reusing already-computed pure-mode outcomes when available.
pub fn run_hybrid(
    ctx: &SolveContext<'_>,
    realization: &ChannelRealization,
    active: Option<&AoOutcome>,
    passive: Option<&AoOutcome>,
) -> Result<AoOutcome> {
    let mut best: Option<AoOutcome> = None;
    let mut last_err: Option<Error> = None;
    let mut consider = |outcome: Result<AoOutcome>| match outcome {
        Ok(o) => {
            if best
                .as_ref()
                .map_or(true, |b| o.cost.total_cost < b.cost.total_cost)
            {
                best = Some(o);
            }
        }
        Err(e) => last_err = Some(e),
    };

    for init in [InitKind::AllPassive, InitKind::AllActive] {
        consider(alternating_optimize(
            ctx,
            realization,
            &AoOptions { mode_freeze: None, beta_freeze: None, init },
        ));
    }
    for warm in [active, passive].into_iter().flatten() {
        consider(alternating_optimize(
            ctx,
            realization,
            &AoOptions {
                mode_freeze: None,
                beta_freeze: None,
                init: InitKind::Warm(warm.alloc.clone(), warm.ris_per_slot.clone()),
            },
        ));
    }
    best.ok_or_else(|| {
        last_err.unwrap_or_else(|| Error::Infeasible("no hybrid start succeeded".into()))
    })
}

/// Run the requested algorithms, computing shared prerequisites once.
pub fn run_all(
    ctx: &SolveContext<'_>,
    realization: &ChannelRealization,
    algorithms: &[AlgorithmKind],
) -> Vec<(AlgorithmKind, Result<AoOutcome>)> {
    let needs_pure = algorithms.contains(&AlgorithmKind::Hybrid);
    let mut cache: Vec<(AlgorithmKind, Result<AoOutcome>)> = Vec::new();
    let get = |kind: AlgorithmKind,
                   cache: &mut Vec<(AlgorithmKind, Result<AoOutcome>)>|
     -> Result<AoOutcome> {
        if let Some((_, r)) = cache.iter().find(|(k, _)| *k == kind) {
            return r.clone();
        }
        let r = run_baseline(kind, ctx, realization);
        cache.push((kind, r.clone()));
        r
    };

    if needs_pure {
        let _ = get(AlgorithmKind::FullyActive, &mut cache);
        let _ = get(AlgorithmKind::FullyPassive, &mut cache);
    }

    let mut out = Vec::with_capacity(algorithms.len());
    for &kind in algorithms {
        let result = match kind {
            AlgorithmKind::Hybrid => {
                let active = cache
                    .iter()
                    .find(|(k, _)| *k == AlgorithmKind::FullyActive)
                    .and_then(|(_, r)| r.as_ref().ok().cloned());
                let passive = cache
                    .iter()
                    .find(|(k, _)| *k == AlgorithmKind::FullyPassive)
                    .and_then(|(_, r)| r.as_ref().ok().cloned());
                run_hybrid(ctx, realization, active.as_ref(), passive.as_ref())
            }
            other => get(other, &mut cache),
        };
        out.push((kind, result));
    }
    out
}
