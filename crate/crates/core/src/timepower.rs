//! Convex subproblem in transmission time, transmit energy, and offload
//! ratio.
//!
//! For fixed beamformers, RIS configuration, and CPU frequencies, the cost
//! objective is jointly convex in `(t_k, pbar_k, beta_k)` after substituting
//! the transmit energy `pbar_k = p_k t_k`. The rate requirement becomes the
//! perspective form `t B log2(1 + pbar G / t) >= beta S`, extended by
//! continuity with value 0 at `t = 0`.
//!
//! The solver is a two-phase log-barrier interior point method with analytic
//! gradients and Hessians over the at most `3K` variables. The contract is
//! the returned [`KktReport`], not the method: feasibility within 1e-9 and
//! KKT residuals below 1e-6 at the reported point.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::model::{Allocation, RisState, SystemParams, Task, UserParams};

const LN2: f64 = std::f64::consts::LN_2;

/// Per-user constants of the subproblem.
#[derive(Debug, Clone)]
pub struct UserTerms {
    pub s_bits: f64,
    pub c_cycles: f64,
    /// Fixed CPU frequency during this block (Hz).
    pub f_local: f64,
    /// Local energy at full local execution: C kappa f^2 (J).
    pub e_local_full: f64,
    pub e_max: f64,
    pub t_max: f64,
    /// Effective SINR gain G = |w^H g|^2 / (sigma^2 ||w^H H^H A L T||^2 +
    /// delta^2), in 1/W. Non-positive gain disables offloading for the user.
    pub gain: f64,
    /// ||A L T h_r||^2: transmit-energy coefficient in the RIS power budget.
    pub amp_gain_hr: f64,
    /// ||A L T||_F^2: per-second noise-amplification coefficient.
    pub amp_units: f64,
    /// Per-second RIS + circuit power while the slot is on (W).
    pub e_rate_t: f64,
}

/// The assembled convex subproblem.
#[derive(Debug, Clone)]
pub struct TimePowerProblem {
    pub users: Vec<UserTerms>,
    pub tradeoff: f64,
    pub energy_scale: f64,
    pub bandwidth: f64,
    pub p_ris_max: f64,
    pub ris_noise_power: f64,
    /// Pin every offload ratio to a constant (binary-offloading baselines).
    pub beta_freeze: Option<f64>,
}

/// Decision variables of the subproblem (physical units).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPoint {
    pub t: Vec<f64>,
    /// Transmit energy variable pbar = p t (J).
    pub p_bar: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Scaled optimality certificate for the returned point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// max(0, largest scaled constraint value).
    pub primal_residual: f64,
    /// Scaled gradient-of-Lagrangian norm.
    pub stationarity_residual: f64,
    /// max_i lambda_i * slack_i.
    pub complementarity_residual: f64,
}

/// Which constraint family a scalar inequality belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintId {
    TimeNonneg(usize),
    TimeCap(usize),
    EnergyNonneg(usize),
    BetaLower(usize),
    BetaUpper(usize),
    EnergyBudget(usize),
    RisPowerBudget(usize),
    RateRequirement(usize),
    LocalComputeTime(usize),
}

impl std::fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstraintId::TimeNonneg(k) => write!(f, "t >= 0 (user {k})"),
            ConstraintId::TimeCap(k) => write!(f, "t <= T_max (user {k})"),
            ConstraintId::EnergyNonneg(k) => write!(f, "pbar >= 0 (user {k})"),
            ConstraintId::BetaLower(k) => write!(f, "beta >= 0 (user {k})"),
            ConstraintId::BetaUpper(k) => write!(f, "beta <= 1 (user {k})"),
            ConstraintId::EnergyBudget(k) => write!(f, "C1 energy budget (user {k})"),
            ConstraintId::RisPowerBudget(k) => write!(f, "C2 RIS power budget (user {k})"),
            ConstraintId::RateRequirement(k) => write!(f, "C4 rate requirement (user {k})"),
            ConstraintId::LocalComputeTime(k) => write!(f, "C6 local compute time (user {k})"),
        }
    }
}

impl TimePowerProblem {
    /// Assemble from the current system state. `alloc` supplies the fixed
    /// beamformers and CPU frequencies.
    pub fn from_state(
        realization: &ChannelRealization,
        ris_per_slot: &[RisState],
        alloc: &Allocation,
        tasks: &[Task],
        params: &SystemParams,
        user_params: &UserParams,
    ) -> Self {
        let k_users = alloc.k_users();
        let mut users = Vec::with_capacity(k_users);
        for k in 0..k_users {
            let ris = &ris_per_slot[k];
            let w = &alloc.beamformer[k];
            let g = crate::model::effective_channel(realization, ris, k);
            let hw = &realization.h_ris_ap * w;
            let n = realization.n_units();
            let mut amp_units = 0.0;
            let mut amp_gain_hr = 0.0;
            let mut noise_gain = 0.0;
            for i in 0..n {
                let c2 = ris.active_coeff(i).norm_sqr();
                amp_units += c2;
                amp_gain_hr += c2 * realization.h_user_ris[k][i].norm_sqr();
                noise_gain += c2 * hw[i].norm_sqr();
            }
            let gain = w.dotc(&g).norm_sqr()
                / (params.ris_noise_power * noise_gain + params.ap_noise_power);
            let n_act = ris.n_active() as f64;
            let n_pas = (n - ris.n_active()) as f64;
            let e_rate_t = n_act * (params.p_circuit + params.p_dc)
                + params.ris_noise_power * amp_units
                + n_pas * params.p_circuit;
            users.push(UserTerms {
                s_bits: tasks[k].s_bits,
                c_cycles: tasks[k].c_cycles,
                f_local: alloc.f_local[k],
                e_local_full: tasks[k].c_cycles * user_params.kappa * alloc.f_local[k].powi(2),
                e_max: user_params.e_max,
                t_max: user_params.t_max,
                gain,
                amp_gain_hr,
                amp_units,
                e_rate_t,
            });
        }
        TimePowerProblem {
            users,
            tradeoff: params.tradeoff,
            energy_scale: params.energy_scale,
            bandwidth: params.bandwidth,
            p_ris_max: params.p_ris_max,
            ris_noise_power: params.ris_noise_power,
            beta_freeze: None,
        }
    }

    pub fn k_users(&self) -> usize {
        self.users.len()
    }

    fn offload_enabled(&self, k: usize) -> bool {
        self.users[k].gain > 0.0
            && self.users[k].s_bits > 0.0
            && self.beta_freeze != Some(0.0)
    }

    /// Whether the offload ratio is a decision variable for user `k`.
    fn beta_is_variable(&self, k: usize) -> bool {
        self.offload_enabled(k) && self.beta_freeze.is_none()
    }

    /// Perspective rate term `t B log2(1 + pbar G / t)` in bits, extended by
    /// continuity to 0 at `t = 0`.
    pub fn rate_bits(&self, k: usize, t: f64, p_bar: f64) -> f64 {
        if t <= 0.0 || p_bar <= 0.0 {
            return 0.0;
        }
        self.bandwidth / LN2 * t * (p_bar * self.users[k].gain / t).ln_1p()
    }

    /// Objective value at a physical-space point.
    pub fn objective(&self, point: &ConvexPoint) -> f64 {
        let mut total = 0.0;
        for (k, u) in self.users.iter().enumerate() {
            let e_total = point.p_bar[k] * (1.0 + u.amp_gain_hr)
                + u.e_local_full * (1.0 - point.beta[k])
                + point.t[k] * u.e_rate_t;
            total += self.tradeoff * point.t[k]
                + (1.0 - self.tradeoff) * self.energy_scale * e_total;
        }
        total
    }

    /// Scaled margins (>= 0 is satisfied) for every constraint at a point.
    pub fn constraint_margins(&self, point: &ConvexPoint) -> Vec<(ConstraintId, f64)> {
        let program = Program::build(self, None);
        let y = program.scale_point(point);
        program
            .constraints
            .iter()
            .map(|c| (c.id, -program.con_value(c, &y)))
            .collect()
    }
}

/// Recover per-user transmit powers from the energy substitution:
/// `p = pbar / t` when `t > 0`, else 0.
pub fn recover_power(point: &ConvexPoint) -> Vec<f64> {
    point
        .t
        .iter()
        .zip(point.p_bar.iter())
        .map(|(&t, &pb)| if t > 0.0 { pb / t } else { 0.0 })
        .collect()
}

// ---------------------------------------------------------------------------
// Barrier solver internals
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum ConKind {
    /// coeffs . y + offset <= 0
    Linear { coeffs: Vec<(usize, f64)>, offset: f64 },
    /// (beta S - rate(t, pbar)) / S <= 0, variables scaled.
    Rate { user: usize },
}

#[derive(Debug, Clone)]
struct Con {
    kind: ConKind,
    id: ConstraintId,
    /// Index of the phase-I slack variable, if present.
    slack: Option<usize>,
}

struct VarIdx {
    t: usize,
    p_bar: Option<usize>,
    beta: Option<usize>,
}

/// Scaled formulation: y_t = t / t_max, y_p = pbar / e_max, y_b = beta.
struct Program<'a> {
    problem: &'a TimePowerProblem,
    vars: Vec<VarIdx>,
    n_vars: usize,
    constraints: Vec<Con>,
    /// Linear objective coefficients over y (constant dropped).
    objective: Vec<f64>,
}

impl<'a> Program<'a> {
    fn build(problem: &'a TimePowerProblem, slack_var: Option<usize>) -> Self {
        let k_users = problem.k_users();
        let mut vars = Vec::with_capacity(k_users);
        let mut n_vars = 0;
        for k in 0..k_users {
            let t = n_vars;
            n_vars += 1;
            let p_bar = if problem.offload_enabled(k) {
                n_vars += 1;
                Some(n_vars - 1)
            } else {
                None
            };
            let beta = if problem.beta_is_variable(k) {
                n_vars += 1;
                Some(n_vars - 1)
            } else {
                None
            };
            vars.push(VarIdx { t, p_bar, beta });
        }
        // Fixed offload ratio when beta is not a variable.
        let beta_fixed =
            |k: usize| -> f64 { if problem.offload_enabled(k) { problem.beta_freeze.unwrap_or(0.0) } else { 0.0 } };

        let mut objective = vec![0.0; n_vars];
        let w = problem.tradeoff;
        let ew = (1.0 - problem.tradeoff) * problem.energy_scale;
        for (k, u) in problem.users.iter().enumerate() {
            objective[vars[k].t] += (w + ew * u.e_rate_t) * u.t_max;
            if let Some(ip) = vars[k].p_bar {
                objective[ip] += ew * (1.0 + u.amp_gain_hr) * u.e_max;
            }
            if let Some(ib) = vars[k].beta {
                objective[ib] -= ew * u.e_local_full;
            }
        }

        let mut constraints = Vec::new();
        // Simple bounds stay hard in phase I (the slack only relaxes the
        // coupling constraints); iterates then never leave the box, which
        // keeps the rate term inside its smooth domain.
        let mut push = |kind: ConKind, id: ConstraintId| {
            let boxed = matches!(
                id,
                ConstraintId::TimeNonneg(_)
                    | ConstraintId::TimeCap(_)
                    | ConstraintId::EnergyNonneg(_)
                    | ConstraintId::BetaLower(_)
                    | ConstraintId::BetaUpper(_)
            );
            constraints.push(Con { kind, id, slack: if boxed { None } else { slack_var } });
        };

        for (k, u) in problem.users.iter().enumerate() {
            let it = vars[k].t;
            push(
                ConKind::Linear { coeffs: vec![(it, -1.0)], offset: 0.0 },
                ConstraintId::TimeNonneg(k),
            );
            push(
                ConKind::Linear { coeffs: vec![(it, 1.0)], offset: -1.0 },
                ConstraintId::TimeCap(k),
            );
            if let Some(ip) = vars[k].p_bar {
                push(
                    ConKind::Linear { coeffs: vec![(ip, -1.0)], offset: 0.0 },
                    ConstraintId::EnergyNonneg(k),
                );
                // C1: pbar + e_local_full (1 - beta) <= e_max, scaled by e_max.
                let mut coeffs = vec![(ip, 1.0)];
                let mut offset = -1.0;
                if let Some(ib) = vars[k].beta {
                    push(
                        ConKind::Linear { coeffs: vec![(ib, -1.0)], offset: 0.0 },
                        ConstraintId::BetaLower(k),
                    );
                    push(
                        ConKind::Linear { coeffs: vec![(ib, 1.0)], offset: -1.0 },
                        ConstraintId::BetaUpper(k),
                    );
                    coeffs.push((ib, -u.e_local_full / u.e_max));
                    offset += u.e_local_full / u.e_max;
                } else {
                    offset += u.e_local_full * (1.0 - beta_fixed(k)) / u.e_max;
                }
                push(ConKind::Linear { coeffs, offset }, ConstraintId::EnergyBudget(k));
                // C2: pbar amp_hr + t sigma^2 amp_units <= t P_R, scaled by
                // t_max * P_R (vacuously slack when the slot is all-passive).
                let s = u.t_max * problem.p_ris_max;
                push(
                    ConKind::Linear {
                        coeffs: vec![
                            (ip, u.e_max * u.amp_gain_hr / s),
                            (
                                it,
                                u.t_max
                                    * (problem.ris_noise_power * u.amp_units
                                        - problem.p_ris_max)
                                    / s,
                            ),
                        ],
                        offset: 0.0,
                    },
                    ConstraintId::RisPowerBudget(k),
                );
                push(ConKind::Rate { user: k }, ConstraintId::RateRequirement(k));
            }
            // C6: (1 - beta) C / f <= sum_j t_j, scaled by sum of t_max.
            let total_t_max: f64 = problem.users.iter().map(|u| u.t_max).sum();
            let mut coeffs: Vec<(usize, f64)> = (0..k_users)
                .map(|j| (vars[j].t, -problem.users[j].t_max / total_t_max))
                .collect();
            match vars[k].beta {
                Some(ib) if u.f_local > 0.0 => {
                    let local_time_full = u.c_cycles / u.f_local;
                    coeffs.push((ib, -local_time_full / total_t_max));
                    push(
                        ConKind::Linear { coeffs, offset: local_time_full / total_t_max },
                        ConstraintId::LocalComputeTime(k),
                    );
                }
                Some(ib) => {
                    // Zero CPU frequency: only full offloading fits the
                    // frame, so the ratio is pinned from below instead.
                    if u.c_cycles > 0.0 {
                        push(
                            ConKind::Linear { coeffs: vec![(ib, -1.0)], offset: 1.0 },
                            ConstraintId::LocalComputeTime(k),
                        );
                    }
                }
                None => {
                    // Remaining cycles are a constant here; a zero frequency
                    // with work left is rejected before the program is built.
                    let cycles = (1.0 - beta_fixed(k)) * u.c_cycles;
                    let local_time = if cycles <= 0.0 { 0.0 } else { cycles / u.f_local };
                    push(
                        ConKind::Linear { coeffs, offset: local_time / total_t_max },
                        ConstraintId::LocalComputeTime(k),
                    );
                }
            }
        }

        Program { problem, vars, n_vars, constraints, objective }
    }

    /// Offload ratio of user `k` at the scaled point.
    fn beta_at(&self, k: usize, y: &[f64]) -> f64 {
        match self.vars[k].beta {
            Some(ib) => y[ib],
            None => {
                if self.problem.offload_enabled(k) {
                    self.problem.beta_freeze.unwrap_or(0.0)
                } else {
                    0.0
                }
            }
        }
    }

    fn scale_point(&self, point: &ConvexPoint) -> Vec<f64> {
        let mut y = vec![0.0; self.n_vars];
        for (k, v) in self.vars.iter().enumerate() {
            let u = &self.problem.users[k];
            y[v.t] = point.t[k] / u.t_max;
            if let Some(ip) = v.p_bar {
                y[ip] = point.p_bar[k] / u.e_max;
            }
            if let Some(ib) = v.beta {
                y[ib] = point.beta[k];
            }
        }
        y
    }

    fn unscale_point(&self, y: &[f64]) -> ConvexPoint {
        let k_users = self.problem.k_users();
        let mut point = ConvexPoint {
            t: vec![0.0; k_users],
            p_bar: vec![0.0; k_users],
            beta: vec![0.0; k_users],
        };
        for (k, v) in self.vars.iter().enumerate() {
            let u = &self.problem.users[k];
            point.t[k] = y[v.t] * u.t_max;
            if let Some(ip) = v.p_bar {
                point.p_bar[k] = y[ip] * u.e_max;
            }
            point.beta[k] = match v.beta {
                Some(ib) => y[ib],
                None => self.beta_at(k, y),
            };
        }
        point
    }

    fn con_value(&self, con: &Con, y: &[f64]) -> f64 {
        let base = match &con.kind {
            ConKind::Linear { coeffs, offset } => {
                coeffs.iter().map(|&(i, c)| c * y[i]).sum::<f64>() + offset
            }
            ConKind::Rate { user } => {
                let u = &self.problem.users[*user];
                let v = &self.vars[*user];
                let t = y[v.t] * u.t_max;
                let p_bar = y[v.p_bar.expect("rate constraint needs pbar")] * u.e_max;
                let beta = self.beta_at(*user, y);
                (beta * u.s_bits - self.problem.rate_bits(*user, t, p_bar)) / u.s_bits
            }
        };
        match con.slack {
            Some(s) => base - y[s],
            None => base,
        }
    }

    /// Accumulate gradient of one constraint into `grad`, scaled by `mult`.
    fn con_grad(&self, con: &Con, y: &[f64], mult: f64, grad: &mut [f64]) {
        match &con.kind {
            ConKind::Linear { coeffs, .. } => {
                for &(i, c) in coeffs {
                    grad[i] += mult * c;
                }
            }
            ConKind::Rate { user } => {
                let (gt, gp, gb) = self.rate_grad(*user, y);
                let v = &self.vars[*user];
                grad[v.t] += mult * gt;
                grad[v.p_bar.unwrap()] += mult * gp;
                if let Some(ib) = v.beta {
                    grad[ib] += mult * gb;
                }
            }
        }
        if let Some(s) = con.slack {
            grad[s] -= mult;
        }
    }

    /// Gradient of the scaled rate constraint wrt (y_t, y_p, y_b).
    fn rate_grad(&self, k: usize, y: &[f64]) -> (f64, f64, f64) {
        let u = &self.problem.users[k];
        let v = &self.vars[k];
        let t = y[v.t] * u.t_max;
        let p_bar = y[v.p_bar.unwrap()] * u.e_max;
        if t <= 0.0 || p_bar <= 0.0 {
            // Continuous extension: the rate term vanishes, only the demand
            // side keeps a gradient.
            return (0.0, 0.0, 1.0);
        }
        let b_ln2 = self.problem.bandwidth / LN2;
        let ratio = p_bar * u.gain / t;
        // d/dt [t ln(1+u)] = ln(1+u) - u/(1+u); d/dpbar = G/(1+u).
        let q_t = b_ln2 * (ratio.ln_1p() - ratio / (1.0 + ratio));
        let q_p = b_ln2 * u.gain / (1.0 + ratio);
        (
            -q_t * u.t_max / u.s_bits,
            -q_p * u.e_max / u.s_bits,
            1.0,
        )
    }

    /// Rank-1 curvature factor of the rate constraint: `con = k_f * v v^T`
    /// with `v` sparse over (y_t, y_p).
    fn rate_hess(&self, k: usize, y: &[f64]) -> (f64, [(usize, f64); 2]) {
        let u = &self.problem.users[k];
        let v = &self.vars[k];
        let t = y[v.t] * u.t_max;
        let p_bar = y[v.p_bar.unwrap()] * u.e_max;
        if t <= 0.0 || p_bar <= 0.0 {
            return (0.0, [(v.t, 0.0), (v.p_bar.unwrap(), 0.0)]);
        }
        let b_ln2 = self.problem.bandwidth / LN2;
        let ratio = p_bar * u.gain / t;
        let k_f = b_ln2 / (t * (1.0 + ratio) * (1.0 + ratio)) / u.s_bits;
        (
            k_f,
            [
                (v.t, ratio * u.t_max),
                (v.p_bar.unwrap(), -u.gain * u.e_max),
            ],
        )
    }
}

struct BarrierOutcome {
    y: Vec<f64>,
    tau: f64,
}

/// Minimize `objective . y` subject to the constraint set via a log barrier,
/// starting from a strictly feasible `y0`.
fn barrier_minimize(
    program: &Program<'_>,
    objective: &[f64],
    mut y: Vec<f64>,
    comp_target: f64,
    mut stop_early: impl FnMut(&[f64]) -> bool,
) -> BarrierOutcome {
    let m = program.constraints.len() as f64;
    let mut tau = 1.0;
    let n = y.len();
    let obj_scale = objective.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
    loop {
        let final_stage = m / tau <= comp_target;
        // Newton iterations for the current barrier parameter. The final
        // stage drives the gradient itself down so the reported stationarity
        // residual (gradient over tau) is certified, not just the decrement.
        let max_newton = if final_stage { 200 } else { 80 };
        for _ in 0..max_newton {
            let mut grad = vec![0.0; n];
            let mut hess = nalgebra::DMatrix::<f64>::zeros(n, n);
            for (i, &c) in objective.iter().enumerate() {
                grad[i] = tau * c;
            }
            for con in &program.constraints {
                let g = program.con_value(con, &y);
                let inv = -1.0 / g; // g < 0 in the interior
                let mut cg = vec![0.0; n];
                program.con_grad(con, &y, 1.0, &mut cg);
                for i in 0..n {
                    if cg[i] != 0.0 {
                        grad[i] += inv * cg[i];
                        for j in 0..n {
                            if cg[j] != 0.0 {
                                hess[(i, j)] += inv * inv * cg[i] * cg[j];
                            }
                        }
                    }
                }
                if let ConKind::Rate { user } = &con.kind {
                    let (k_f, pairs) = program.rate_hess(*user, &y);
                    for &(i, vi) in &pairs {
                        for &(j, vj) in &pairs {
                            hess[(i, j)] += inv * k_f * vi * vj;
                        }
                    }
                }
            }

            // Solve H d = -grad with escalating ridge if needed.
            let mut ridge = 0.0;
            let dir = loop {
                let mut h = hess.clone();
                if ridge > 0.0 {
                    for i in 0..n {
                        h[(i, i)] += ridge;
                    }
                }
                match nalgebra::Cholesky::new(h) {
                    Some(ch) => {
                        let b = nalgebra::DVector::from_column_slice(&grad);
                        break (ch.solve(&b) * -1.0).data.as_vec().clone();
                    }
                    None => {
                        ridge = if ridge == 0.0 { 1e-12 } else { ridge * 100.0 };
                        if ridge > 1e6 {
                            break vec![0.0; n];
                        }
                    }
                }
            };

            let decrement: f64 = -0.5 * grad.iter().zip(dir.iter()).map(|(g, d)| g * d).sum::<f64>();
            let grad_inf = grad.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let grad_converged = grad_inf <= 1e-8 * tau * obj_scale;
            if decrement.abs() < 1e-13 || (final_stage && grad_converged) {
                break;
            }
            if !final_stage && decrement.abs() < 1e-11 {
                break;
            }

            let strictly_feasible = |yy: &[f64]| {
                program.constraints.iter().all(|c| program.con_value(c, yy) < 0.0)
            };

            // Quadratic phase: with a small Newton decrement the full step is
            // safe for the self-concordant barrier, and the Armijo test on
            // phi (magnitude tau * objective) would drown in cancellation.
            if decrement.abs() < 0.025 {
                let mut alpha = 1.0;
                let mut moved = false;
                for _ in 0..60 {
                    let cand: Vec<f64> =
                        y.iter().zip(dir.iter()).map(|(a, d)| a + alpha * d).collect();
                    if strictly_feasible(&cand) {
                        y = cand;
                        moved = true;
                        break;
                    }
                    alpha *= 0.5;
                }
                if !moved {
                    break;
                }
                continue;
            }

            // Damped phase: backtracking line search on the barrier value.
            let phi = |yy: &[f64]| -> f64 {
                let mut v = tau * objective.iter().zip(yy.iter()).map(|(c, x)| c * x).sum::<f64>();
                for con in &program.constraints {
                    let g = program.con_value(con, yy);
                    if !(g < 0.0) {
                        return f64::INFINITY;
                    }
                    v -= (-g).ln();
                }
                v
            };
            let phi0 = phi(&y);
            let slope: f64 = grad.iter().zip(dir.iter()).map(|(g, d)| g * d).sum();
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand: Vec<f64> = y.iter().zip(dir.iter()).map(|(a, d)| a + alpha * d).collect();
                if phi(&cand) <= phi0 + 0.25 * alpha * slope {
                    y = cand;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
        }

        if stop_early(&y) {
            return BarrierOutcome { y, tau };
        }
        if m / tau <= comp_target {
            return BarrierOutcome { y, tau };
        }
        tau *= 20.0;
    }
}

/// Solve the subproblem. `warm_start` supplies the previous iterate; when it
/// is feasible the returned objective never exceeds its objective.
pub fn solve_time_power(
    problem: &TimePowerProblem,
    warm_start: Option<&ConvexPoint>,
) -> Result<(ConvexPoint, KktReport)> {
    // Structural checks with no feasible fix.
    for (k, u) in problem.users.iter().enumerate() {
        if let Some(b) = problem.beta_freeze {
            if b > 0.0 && u.s_bits > 0.0 && u.gain <= 0.0 {
                return Err(Error::Infeasible(format!(
                    "{}: pinned offloading with no usable link",
                    ConstraintId::RateRequirement(k)
                )));
            }
        }
        if !problem.beta_is_variable(k) {
            let beta = if problem.offload_enabled(k) {
                problem.beta_freeze.unwrap_or(0.0)
            } else {
                0.0
            };
            let local = u.e_local_full * (1.0 - beta);
            if local > u.e_max {
                return Err(Error::Infeasible(format!(
                    "{}: local execution needs {local} J > budget {} J at the pinned ratio",
                    ConstraintId::EnergyBudget(k),
                    u.e_max
                )));
            }
            if (1.0 - beta) * u.c_cycles > 0.0 && u.f_local <= 0.0 {
                return Err(Error::Infeasible(format!(
                    "{}: cycles remain at the pinned ratio but the CPU frequency is zero",
                    ConstraintId::LocalComputeTime(k)
                )));
            }
        }
    }

    let program = Program::build(problem, None);

    let warm_feasible = warm_start.is_some_and(|p| {
        let y = program.scale_point(p);
        program.constraints.iter().all(|c| program.con_value(c, &y) <= 1e-9)
    });

    // Strictly feasible start: warm start if it qualifies, else phase I
    // (itself warm-started where possible).
    let y0 = warm_start
        .map(|p| program.scale_point(p))
        .filter(|y| {
            program
                .constraints
                .iter()
                .all(|c| program.con_value(c, y) < -1e-10)
        });
    let y0 = match y0 {
        Some(y) => y,
        None => match phase_one(problem, warm_start) {
            Ok(y) => y,
            // A feasible warm start on a facet with (numerically) no
            // interior: nothing to improve, return it unchanged. The report
            // carries the honest uncertified residuals.
            Err(_) if warm_feasible => {
                let ws = warm_start.expect("feasibility checked").clone();
                let y = program.scale_point(&ws);
                let primal = program
                    .constraints
                    .iter()
                    .map(|c| program.con_value(c, &y))
                    .fold(0.0f64, f64::max);
                return Ok((
                    ws,
                    KktReport {
                        primal_residual: primal.max(0.0),
                        stationarity_residual: f64::INFINITY,
                        complementarity_residual: f64::INFINITY,
                    },
                ));
            }
            Err(e) => return Err(e),
        },
    };

    let outcome = barrier_minimize(&program, &program.objective, y0, 1e-9, |_| false);
    let mut point = program.unscale_point(&outcome.y);

    // Certify at the central-path point; the cleanup below moves coordinates
    // by at most the solver tolerance and is re-checked for feasibility.
    let report = kkt_report(&program, &outcome);

    // Keep-better rule against a feasible warm start.
    if let Some(ws) = warm_start {
        let feasible = program
            .constraints
            .iter()
            .all(|c| program.con_value(c, &program.scale_point(ws)) <= 1e-9);
        if feasible && problem.objective(ws) < problem.objective(&point) {
            point = ws.clone();
        }
    }

    point = snap_to_bounds(problem, &program, point);
    Ok((point, report))
}

/// Phase I: minimize the max constraint violation; error with the violated
/// constraint names when the optimum stays non-negative.
fn phase_one(problem: &TimePowerProblem, warm_start: Option<&ConvexPoint>) -> Result<Vec<f64>> {
    let probe = Program::build(problem, None);
    let slack_idx = probe.n_vars;
    let program = Program::build(problem, Some(slack_idx));
    let n = slack_idx + 1;

    // Start near the warm point when one is supplied (the feasible region
    // may be a thin facet around it); otherwise the box center.
    let mut y0 = vec![0.5; n];
    if let Some(ws) = warm_start {
        let scaled = probe.scale_point(ws);
        for (i, v) in scaled.iter().enumerate() {
            // Nudge off exact bounds so box barriers stay finite.
            y0[i] = v.clamp(1e-7, 1.0 - 1e-7);
        }
    }
    let worst = program
        .constraints
        .iter()
        .map(|c| {
            let mut y_probe = y0.clone();
            y_probe[slack_idx] = 0.0;
            program.con_value(c, &y_probe)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    y0[slack_idx] = worst + 1.0;

    let mut objective = vec![0.0; n];
    objective[slack_idx] = 1.0;

    let outcome = barrier_minimize(&program, &objective, y0, 1e-10, |y| y[slack_idx] < -1e-6);
    let s_star = outcome.y[slack_idx];
    if s_star >= -1e-9 {
        let mut y = outcome.y.clone();
        y[slack_idx] = 0.0;
        let mut violated: Vec<String> = program
            .constraints
            .iter()
            .filter(|c| program.con_value(c, &y) > -1e-9)
            .map(|c| c.id.to_string())
            .collect();
        violated.dedup();
        return Err(Error::Infeasible(format!(
            "no strictly feasible point (phase I optimum {s_star:.3e}); tight or violated: {}",
            violated.join(", ")
        )));
    }
    let mut y = outcome.y;
    y.truncate(slack_idx);
    Ok(y)
}

/// Snap variables within solver tolerance of their bounds onto the bounds
/// when the snapped point stays feasible and no worse.
fn snap_to_bounds(
    problem: &TimePowerProblem,
    program: &Program<'_>,
    point: ConvexPoint,
) -> ConvexPoint {
    let tol = 1e-8;
    let mut snapped = point.clone();
    for k in 0..problem.k_users() {
        let u = &problem.users[k];
        if snapped.t[k] / u.t_max < tol {
            snapped.t[k] = 0.0;
        }
        if snapped.t[k] / u.t_max > 1.0 - tol {
            snapped.t[k] = u.t_max;
        }
        if snapped.p_bar[k] / u.e_max < tol {
            snapped.p_bar[k] = 0.0;
        }
        if problem.beta_freeze.is_none() {
            for b in [0.0, 1.0] {
                if (snapped.beta[k] - b).abs() < tol {
                    snapped.beta[k] = b;
                }
            }
        }
    }
    let y = program.scale_point(&snapped);
    let feasible = program
        .constraints
        .iter()
        .all(|c| program.con_value(c, &y) <= 1e-9);
    if feasible && problem.objective(&snapped) <= problem.objective(&point) + 1e-12 {
        snapped
    } else {
        point
    }
}

fn kkt_report(program: &Program<'_>, outcome: &BarrierOutcome) -> KktReport {
    let y = &outcome.y;
    let n = y.len();

    let mut primal: f64 = 0.0;
    let mut comp: f64 = 0.0;
    let mut lagr = program.objective.clone();
    for con in &program.constraints {
        let g = program.con_value(con, y);
        primal = primal.max(g);
        // Barrier multipliers: lambda_i = 1 / (tau * slack_i).
        let lambda = if g < -1e-300 { 1.0 / (outcome.tau * (-g)) } else { 0.0 };
        comp = comp.max(lambda * (-g).max(0.0));
        if g < -1e-300 {
            program.con_grad(con, y, lambda, &mut lagr);
        }
    }
    comp = comp.max(1.0 / outcome.tau);
    let obj_scale = program
        .objective
        .iter()
        .fold(1.0f64, |a, &b| a.max(b.abs()));
    let stationarity = lagr
        .iter()
        .take(n)
        .fold(0.0f64, |a, &b| a.max(b.abs()))
        / obj_scale;
    KktReport {
        primal_residual: primal.max(0.0),
        stationarity_residual: stationarity,
        complementarity_residual: comp,
    }
}
