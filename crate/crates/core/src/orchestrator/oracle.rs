//! Brute-force grid oracle for desk-scale instances.
//!
//! Exhaustive search over mode patterns, per-unit phase levels, a shared
//! amplification grid, and an offload-ratio grid. Transmission times come
//! from the binding rate constraint (floored by the local-compute need at
//! the CPU cap) and transmit powers from the binding energy/RIS-power
//! budgets. Every surviving candidate passes the exact feasibility check
//! before its cost counts.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::model::{self, Allocation, RisState, SystemParams, Task, UserParams};
use crate::CVector;

#[derive(Debug, Clone, Copy)]
pub struct OracleGrids {
    /// Phase levels per unit (uniform on [0, 2pi)).
    pub phase_levels: usize,
    /// Step of the shared amplification grid over [1, rho_cap].
    pub rho_step: f64,
    /// Number of offload-ratio grid points on [0, 1].
    pub beta_steps: usize,
    /// Refusal threshold on the estimated number of grid evaluations.
    pub max_evaluations: u64,
}

impl Default for OracleGrids {
    fn default() -> Self {
        OracleGrids { phase_levels: 8, rho_step: 0.5, beta_steps: 21, max_evaluations: 50_000_000 }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub cost: f64,
    pub alloc: Allocation,
    pub ris_per_slot: Vec<RisState>,
    /// Grid points actually evaluated.
    pub evaluations: u64,
}

/// Per-user grid size: mode patterns x phase combinations x amplification
/// grid x offload grid.
pub fn per_user_grid_size(n_units: usize, rho_cap: f64, grids: &OracleGrids) -> u64 {
    let rho_points = ((rho_cap - 1.0) / grids.rho_step).floor() as u64 + 1;
    (1u64 << n_units)
        * (grids.phase_levels as u64).pow(n_units as u32)
        * rho_points
        * grids.beta_steps as u64
}

struct UserCandidate {
    ris: RisState,
    beta: f64,
    p: f64,
    t: f64,
    f_local: f64,
    beamformer: CVector,
}

/// Exhaustive grid search. Enforces the desk-scale bounds N <= 4, M <= 2,
/// K <= 2 and refuses oversized grids with a size estimate.
pub fn brute_force_oracle(
    realization: &ChannelRealization,
    tasks: &[Task],
    params: &SystemParams,
    user_params: &UserParams,
    grids: &OracleGrids,
) -> Result<OracleResult> {
    let k_users = realization.k_users();
    let n = realization.n_units();
    let m = realization.m_antennas();
    if n > 4 || m > 2 || k_users > 2 {
        return Err(Error::UnsupportedConfiguration(format!(
            "oracle bounds are N<=4, M<=2, K<=2; got N={n}, M={m}, K={k_users}"
        )));
    }
    let per_user = per_user_grid_size(n, params.rho_cap, grids);
    let total = per_user.saturating_pow(k_users as u32);
    if total > grids.max_evaluations {
        return Err(Error::UnsupportedConfiguration(format!(
            "grid too large: about {total} evaluations (limit {})",
            grids.max_evaluations
        )));
    }

    // Enumerate per-user candidates; for K = 2 combine them pairwise with a
    // frame-coupled refinement.
    let mut per_user_cands: Vec<Vec<UserCandidate>> = Vec::with_capacity(k_users);
    let mut evaluations = 0u64;
    for user in 0..k_users {
        let cands = enumerate_user(realization, tasks, params, user_params, grids, user, &mut evaluations);
        per_user_cands.push(cands);
    }

    let mut best: Option<(f64, Allocation, Vec<RisState>)> = None;
    let mut consider = |alloc: Allocation, ris: Vec<RisState>| {
        let report = model::check_feasibility(&alloc, &ris, realization, tasks, params, user_params);
        if !report.is_feasible(1e-9) {
            return;
        }
        let cost = model::total_cost(&alloc, &ris, realization, tasks, params, user_params).total_cost;
        if best.as_ref().map_or(true, |(c, _, _)| cost < *c) {
            best = Some((cost, alloc, ris));
        }
    };

    match k_users {
        1 => {
            for c in &per_user_cands[0] {
                let alloc = Allocation {
                    t: vec![c.t],
                    p: vec![c.p],
                    beta: vec![c.beta],
                    f_local: vec![c.f_local],
                    beamformer: vec![c.beamformer.clone()],
                };
                consider(alloc, vec![c.ris.clone()]);
            }
        }
        2 => {
            for a in &per_user_cands[0] {
                for b in &per_user_cands[1] {
                    // Frame coupling: CPU frequencies re-derive from the
                    // joint frame; infeasible pairs drop in the final check.
                    let frame = a.t + b.t;
                    let f = |c: &UserCandidate, task: &Task| -> f64 {
                        let cycles = (1.0 - c.beta) * task.c_cycles;
                        if cycles <= 0.0 || frame <= 0.0 {
                            0.0
                        } else {
                            (cycles / frame).min(user_params.f_max)
                        }
                    };
                    let alloc = Allocation {
                        t: vec![a.t, b.t],
                        p: vec![a.p, b.p],
                        beta: vec![a.beta, b.beta],
                        f_local: vec![f(a, &tasks[0]), f(b, &tasks[1])],
                        beamformer: vec![a.beamformer.clone(), b.beamformer.clone()],
                    };
                    consider(alloc, vec![a.ris.clone(), b.ris.clone()]);
                }
            }
        }
        _ => unreachable!("bounded above"),
    }

    let (cost, alloc, ris_per_slot) = best.ok_or_else(|| {
        Error::Infeasible("no feasible grid point".into())
    })?;
    Ok(OracleResult { cost, alloc, ris_per_slot, evaluations })
}

fn enumerate_user(
    realization: &ChannelRealization,
    tasks: &[Task],
    params: &SystemParams,
    user_params: &UserParams,
    grids: &OracleGrids,
    user: usize,
    evaluations: &mut u64,
) -> Vec<UserCandidate> {
    let n = realization.n_units();
    let task = &tasks[user];
    let mut out = Vec::new();
    let rho_points: Vec<f64> = {
        let mut v = vec![];
        let mut rho = 1.0;
        while rho <= params.rho_cap + 1e-12 {
            v.push(rho);
            rho += grids.rho_step;
        }
        v
    };
    let phases: Vec<f64> = (0..grids.phase_levels)
        .map(|i| std::f64::consts::TAU * i as f64 / grids.phase_levels as f64)
        .collect();

    for pattern in 0..(1usize << n) {
        let mode: Vec<bool> = (0..n).map(|i| pattern >> i & 1 == 1).collect();
        let has_active = mode.iter().any(|&b| b);
        let rho_iter: &[f64] = if has_active { &rho_points } else { &rho_points[..1] };
        let mut phase_idx = vec![0usize; n];
        loop {
            let phase: Vec<f64> = phase_idx.iter().map(|&i| phases[i]).collect();
            for &rho in rho_iter {
                let ris = RisState {
                    mode: mode.clone(),
                    amplification: vec![rho; n],
                    phase: phase.clone(),
                };
                for bi in 0..grids.beta_steps {
                    let beta = bi as f64 / (grids.beta_steps - 1).max(1) as f64;
                    *evaluations += 1;
                    if let Some(c) =
                        bind_candidate(realization, task, params, user_params, user, ris.clone(), beta)
                    {
                        out.push(c);
                    }
                }
            }
            // Advance the mixed-radix phase counter.
            let mut i = 0;
            loop {
                if i == n {
                    break;
                }
                phase_idx[i] += 1;
                if phase_idx[i] < phases.len() {
                    break;
                }
                phase_idx[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
    }
    out
}

/// Derive (p, t, f) for a fixed RIS state and offload ratio: the rate
/// constraint binds the time, the energy and RIS-power budgets bind the
/// power.
fn bind_candidate(
    realization: &ChannelRealization,
    task: &Task,
    params: &SystemParams,
    user_params: &UserParams,
    user: usize,
    ris: RisState,
    beta: f64,
) -> Option<UserCandidate> {
    let beamformer = crate::beamforming::mmse_beamformer(
        realization,
        &ris,
        1.0,
        params.ris_noise_power,
        params.ap_noise_power,
        user,
    )
    .ok()?;

    // Unit-power SINR gain.
    let probe = Allocation {
        t: vec![0.0; realization.k_users()],
        p: {
            let mut p = vec![0.0; realization.k_users()];
            p[user] = 1.0;
            p
        },
        beta: vec![0.0; realization.k_users()],
        f_local: vec![0.0; realization.k_users()],
        beamformer: vec![beamformer.clone(); realization.k_users()],
    };
    let gain = model::sinr(realization, &ris, &probe, params, user);

    // RIS power budget bound on p.
    let mut amp_units = 0.0;
    let mut amp_hr = 0.0;
    for i in 0..ris.n_units() {
        let c2 = ris.active_coeff(i).norm_sqr();
        amp_units += c2;
        amp_hr += c2 * realization.h_user_ris[user][i].norm_sqr();
    }
    let p_c2 = if amp_hr > 0.0 {
        let head = params.p_ris_max - params.ris_noise_power * amp_units;
        if head <= 0.0 {
            return None;
        }
        head / amp_hr
    } else if params.ris_noise_power * amp_units > params.p_ris_max {
        return None;
    } else {
        f64::INFINITY
    };

    let local_floor = (1.0 - beta) * task.c_cycles / user_params.f_max;
    let time_for = |p: f64| -> f64 {
        if beta <= 0.0 {
            return local_floor;
        }
        let rate = params.bandwidth * (1.0 + p * gain).log2();
        if rate <= 0.0 {
            return f64::INFINITY;
        }
        (beta * task.s_bits / rate).max(local_floor)
    };
    let energy_used = |p: f64| -> f64 {
        let t = time_for(p);
        if !t.is_finite() {
            return f64::INFINITY;
        }
        let f = if t > 0.0 { (1.0 - beta) * task.c_cycles / t } else { 0.0 };
        let e_local = (1.0 - beta) * task.c_cycles * user_params.kappa * f * f;
        t * p + e_local
    };

    let p = if beta <= 0.0 {
        0.0
    } else {
        // Largest power meeting the energy budget, capped by the RIS budget.
        let hi = p_c2.min(1e3);
        if energy_used(hi) <= user_params.e_max {
            hi
        } else {
            let (mut lo, mut hi) = (0.0, hi);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if energy_used(mid) <= user_params.e_max {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        }
    };
    if beta > 0.0 && p <= 0.0 {
        return None;
    }
    let t = time_for(p);
    if !t.is_finite() || t > user_params.t_max {
        return None;
    }
    let f_local = if t > 0.0 { ((1.0 - beta) * task.c_cycles / t).min(user_params.f_max) } else { 0.0 };
    Some(UserCandidate { ris, beta, p, t, f_local, beamformer })
}
