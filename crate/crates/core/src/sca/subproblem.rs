//! Per-slot convex program assembly, state lifting, and solution recovery.

use super::{
    big_m_couple, exp_lower_bound, psd_lift, relax_binary, relaxed_unit_modulus_margin,
    svd_noise_form, LinearizationPoint, LiftedVars, SubproblemBackend, SvdNoiseForm,
};
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::model::{Allocation, RisState, SystemParams, Task, UserParams};
use crate::{CMatrix, CVector, C64};

const LN2: f64 = std::f64::consts::LN_2;

/// Constraint families of the lifted per-slot program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotConstraint {
    /// C1: transmit + local energy within budget.
    EnergyBudget,
    /// RIS amplification power within budget (lifted form).
    RisPowerBudget,
    /// Signal power at least its exponential slack.
    SignalSlack,
    /// Amplified noise below the linearized exponential slack.
    NoiseSlack,
    /// Linearized binary concavity cut (per unit).
    BinaryTaylor,
    /// Mode bit range 0..1 (two margins per unit).
    BinaryRange,
    /// C6: local compute fits within the frame.
    LocalTimeWithinFrame,
    /// C7: CPU frequency range (two margins).
    FrequencyRange,
    /// Relaxed passive unit modulus (per unit).
    UnitModulusRelaxed,
    /// Big-M coupling box (eight scalar margins per unit).
    BigMBox,
    /// Schur PSD block of the masked lift.
    PsdMasked,
    /// Linearized trace bound of the masked lift.
    TraceMasked,
    /// Schur PSD block of the full lift.
    PsdFull,
    /// Linearized trace bound of the full lift.
    TraceFull,
    /// Surrogate rate requirement of the lifted program.
    RateSurrogate,
}

/// One evaluated margin (>= 0 feasible).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginEntry {
    pub kind: SlotConstraint,
    /// Unit index for per-unit families.
    pub unit: Option<usize>,
    pub margin: f64,
}

/// Scalar-inequality counts per family for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstraintCensus {
    pub energy_budget: usize,
    pub ris_power_budget: usize,
    pub signal_slack: usize,
    pub noise_slack: usize,
    pub binary_taylor: usize,
    pub binary_range: usize,
    pub local_time: usize,
    pub frequency_range: usize,
    pub unit_modulus: usize,
    pub big_m_box: usize,
    pub psd_masked: usize,
    pub trace_masked: usize,
    pub psd_full: usize,
    pub trace_full: usize,
    pub rate_surrogate: usize,
}

impl ConstraintCensus {
    pub fn total(&self) -> usize {
        self.energy_budget
            + self.ris_power_budget
            + self.signal_slack
            + self.noise_slack
            + self.binary_taylor
            + self.binary_range
            + self.local_time
            + self.frequency_range
            + self.unit_modulus
            + self.big_m_box
            + self.psd_masked
            + self.trace_masked
            + self.psd_full
            + self.trace_full
            + self.rate_surrogate
    }
}

/// The lifted convex program for one user's slot, with every other block's
/// variables held fixed.
#[derive(Debug, Clone)]
pub struct SlotProgram {
    pub user: usize,
    // Fixed allocation for this slot.
    pub t: f64,
    pub p: f64,
    pub beta: f64,
    /// Total frame time (sum of all slot times).
    pub frame_time: f64,
    // Channel data.
    pub h_r: CVector,
    pub hw: CVector,
    /// Composite channel [H^H diag(h_r), h_d], M x (N+1).
    pub h_k: CMatrix,
    /// H_k^H w: the signal quadratic reduces to a^H O a.
    signal_vec: CVector,
    pub svd: SvdNoiseForm,
    /// w^H h_d.
    pub base_direct: C64,
    /// Per-unit cascade term conj((H w)_n) h_r_n.
    pub unit_terms: Vec<C64>,
    // Constants.
    pub s_bits: f64,
    pub c_cycles: f64,
    pub kappa: f64,
    pub e_max: f64,
    pub f_max: f64,
    pub sys: SystemParams,
    /// Big-M constant: twice the amplification cap.
    pub rho_max_big_m: f64,
    /// Optional frozen mode bits (baselines fix all-active or all-passive).
    pub mode_freeze: Option<Vec<bool>>,
    pub point: LinearizationPoint,
}

impl SlotProgram {
    pub fn n_units(&self) -> usize {
        self.h_r.len()
    }

    /// Signal power `p * tr(W H_k O H_k^H)` as a function of the full lift.
    pub fn signal_power(&self, o_mat: &CMatrix) -> f64 {
        let a = &self.signal_vec;
        self.p * (a.adjoint() * o_mat * a)[(0, 0)].re
    }

    /// Amplified-noise power `sigma^2 tr(sum chi diag(p) U diag(q^H)) +
    /// delta^2` as a function of the masked lift.
    pub fn noise_power(&self, u_mat: &CMatrix) -> f64 {
        self.sys.ris_noise_power * self.svd.weighted_trace(u_mat) + self.sys.ap_noise_power
    }

    /// RIS amplification power in the lifted variables.
    pub fn lifted_amplification(&self, u_mat: &CMatrix) -> f64 {
        let mut acc = 0.0;
        for n in 0..self.n_units() {
            acc += self.p * self.h_r[n].norm_sqr() * u_mat[(n, n)].re;
        }
        acc + self.sys.ris_noise_power * u_mat.trace().re
    }

    /// Local energy at frequency `f`.
    pub fn local_energy(&self, f: f64) -> f64 {
        (1.0 - self.beta) * self.c_cycles * self.kappa * f * f
    }

    /// Smallest CPU frequency meeting the frame constraint, clamped to the
    /// cap. Errors when even the cap cannot fit the local work in the frame.
    pub fn optimal_f_local(&self) -> Result<f64> {
        let cycles = (1.0 - self.beta) * self.c_cycles;
        if cycles <= 0.0 {
            return Ok(0.0);
        }
        if self.frame_time <= 0.0 {
            return Err(Error::Infeasible(format!(
                "user {}: local work with an empty frame",
                self.user
            )));
        }
        let f = cycles / self.frame_time;
        if f > self.f_max * (1.0 + 1e-12) {
            return Err(Error::Infeasible(format!(
                "user {}: needs CPU frequency {f:.3e} above cap {:.3e}",
                self.user, self.f_max
            )));
        }
        Ok(f.min(self.f_max))
    }

    /// Lift a concrete RIS state (and CPU frequency) into the program's
    /// variable space. Exponential slacks are set tight on the signal side
    /// and at the true noise on the noise side.
    pub fn lift_state(&self, ris: &RisState, f_local: f64) -> LiftedVars {
        let n = self.n_units();
        let o_head = CVector::from_iterator(n, (0..n).map(|i| ris.coeff(i)));
        let mut o = CVector::zeros(n + 1);
        o.rows_mut(0, n).copy_from(&o_head);
        o[n] = C64::new(1.0, 0.0);
        let o_mat = &o * o.adjoint();
        let u = CVector::from_iterator(n, (0..n).map(|i| ris.active_coeff(i).conj()));
        let u_mat = &u * u.adjoint();
        let signal = self.signal_power(&o_mat);
        let noise = self.noise_power(&u_mat);
        LiftedVars {
            sig_exp: if signal > 0.0 { signal.ln() } else { f64::NEG_INFINITY },
            noise_exp: noise.ln(),
            alpha: ris.mode.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
            f_local,
            u,
            u_mat,
            o,
            o_mat,
        }
    }

    /// Linearization point generated by a concrete state.
    pub fn linearization_from_state(&self, ris: &RisState, f_local: f64) -> LinearizationPoint {
        let lifted = self.lift_state(ris, f_local);
        LinearizationPoint {
            alpha_bar: lifted.alpha,
            u_bar: lifted.u,
            o_bar: lifted.o,
            v_bar: lifted.noise_exp,
        }
    }

    /// Objective contribution of this slot at a lifted point (the fixed
    /// latency term is retained for comparability with the full cost).
    pub fn objective(&self, lifted: &LiftedVars) -> f64 {
        let sum_alpha: f64 = lifted.alpha.iter().sum();
        let n = self.n_units() as f64;
        let e_total = self.t * self.p
            + self.local_energy(lifted.f_local)
            + self.t
                * (sum_alpha * (self.sys.p_circuit + self.sys.p_dc)
                    + self.lifted_amplification(&lifted.u_mat)
                    + (n - sum_alpha) * self.sys.p_circuit);
        self.sys.tradeoff * self.t
            + (1.0 - self.sys.tradeoff) * self.sys.energy_scale * e_total
    }

    /// True (unlifted) cost of a concrete state.
    pub fn true_cost(&self, ris: &RisState, f_local: f64) -> f64 {
        let rp = crate::model::ris_power(ris, self.p, &self.h_r, &self.sys);
        let e_total = self.t * self.p
            + self.local_energy(f_local)
            + self.t * (rp.active + rp.passive);
        self.sys.tradeoff * self.t
            + (1.0 - self.sys.tradeoff) * self.sys.energy_scale * e_total
    }

    /// Exact SINR of a concrete state through the slot's cached channel
    /// terms.
    pub fn true_sinr(&self, ris: &RisState) -> f64 {
        let mut amp: C64 = self.base_direct;
        let mut noise_gain = 0.0;
        for n in 0..self.n_units() {
            amp += self.unit_terms[n] * ris.coeff(n);
            noise_gain += ris.active_coeff(n).norm_sqr() * self.hw[n].norm_sqr();
        }
        self.p * amp.norm_sqr()
            / (self.sys.ris_noise_power * noise_gain + self.sys.ap_noise_power)
    }

    /// Exact rate margin `t B log2(1+sinr) - beta S` (bits).
    pub fn true_rate_margin(&self, ris: &RisState) -> f64 {
        let gamma = self.true_sinr(ris);
        self.t * self.sys.bandwidth * (1.0 + gamma).log2() - self.beta * self.s_bits
    }

    /// Exact amplification power of a concrete state.
    pub fn true_amplification(&self, ris: &RisState) -> f64 {
        crate::model::ris_power(ris, self.p, &self.h_r, &self.sys).amplification
    }

    /// Surrogate rate margin of the lifted program (bits).
    pub fn surrogate_rate_margin(&self, lifted: &LiftedVars) -> f64 {
        self.t * self.sys.bandwidth * (lifted.sig_exp - lifted.noise_exp) / LN2
            - self.beta * self.s_bits
    }

    /// Evaluate every constraint margin of the lifted program.
    pub fn check(&self, lifted: &LiftedVars) -> Result<Vec<MarginEntry>> {
        let n = self.n_units();
        if lifted.u.len() != n || lifted.o.len() != n + 1 || lifted.alpha.len() != n {
            return Err(Error::Dimension("lifted variable sizes differ from N".into()));
        }
        if (lifted.o[n] - C64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::Domain("last entry of the full lift must be 1".into()));
        }
        let mut out = Vec::with_capacity(12 * n + 12);
        let mut push = |kind, unit, margin| out.push(MarginEntry { kind, unit, margin });

        // C1 scaled by the budget.
        let e_used = self.t * self.p + self.local_energy(lifted.f_local);
        push(SlotConstraint::EnergyBudget, None, (self.e_max - e_used) / self.e_max);

        // RIS power budget, scaled.
        push(
            SlotConstraint::RisPowerBudget,
            None,
            (self.sys.p_ris_max - self.lifted_amplification(&lifted.u_mat)) / self.sys.p_ris_max,
        );

        // Exponential slacks, scaled by the slack magnitudes.
        let signal = self.signal_power(&lifted.o_mat);
        let sig_rhs = lifted.sig_exp.exp();
        push(
            SlotConstraint::SignalSlack,
            None,
            (signal - sig_rhs) / sig_rhs.max(f64::MIN_POSITIVE),
        );
        let noise = self.noise_power(&lifted.u_mat);
        let noise_rhs = exp_lower_bound(lifted.noise_exp, self.point.v_bar);
        push(SlotConstraint::NoiseSlack, None, (noise_rhs - noise) / noise.abs());

        // Binary relaxation per unit.
        for i in 0..n {
            let rb = relax_binary(self.point.alpha_bar[i])?;
            push(SlotConstraint::BinaryTaylor, Some(i), -rb.constraint_value(lifted.alpha[i]));
            let (lo, hi) = rb.range_margins(lifted.alpha[i]);
            push(SlotConstraint::BinaryRange, Some(i), lo);
            push(SlotConstraint::BinaryRange, Some(i), hi);
        }

        // C6 and C7, scaled by the frame/cap.
        let cycles = (1.0 - self.beta) * self.c_cycles;
        let local_margin = if cycles <= 0.0 {
            self.frame_time
        } else if lifted.f_local > 0.0 {
            self.frame_time - cycles / lifted.f_local
        } else {
            f64::NEG_INFINITY
        };
        push(
            SlotConstraint::LocalTimeWithinFrame,
            None,
            local_margin / self.frame_time.max(f64::MIN_POSITIVE),
        );
        push(SlotConstraint::FrequencyRange, None, lifted.f_local / self.f_max);
        push(
            SlotConstraint::FrequencyRange,
            None,
            (self.f_max - lifted.f_local) / self.f_max,
        );

        // Relaxed unit modulus per unit.
        for i in 0..n {
            push(
                SlotConstraint::UnitModulusRelaxed,
                Some(i),
                relaxed_unit_modulus_margin(lifted.o[i], lifted.u[i], lifted.alpha[i]),
            );
        }

        // Big-M box: the masked vector couples to the conjugated coefficients.
        let target: Vec<C64> = (0..n).map(|i| lifted.o[i].conj()).collect();
        let big_m = big_m_couple(&target, &lifted.alpha, self.rho_max_big_m)?;
        for i in 0..n {
            for m in big_m.margins(i, lifted.u[i]) {
                push(SlotConstraint::BigMBox, Some(i), m);
            }
        }

        // PSD lifts.
        let lift_u = psd_lift(&self.point.u_bar);
        push(SlotConstraint::PsdMasked, None, lift_u.schur_margin(&lifted.u_mat, &lifted.u));
        push(
            SlotConstraint::TraceMasked,
            None,
            lift_u.trace_bound_margin(&lifted.u_mat, &lifted.u),
        );
        let head = lifted.o.clone();
        let lift_o = psd_lift(&self.point.o_bar);
        push(SlotConstraint::PsdFull, None, lift_o.schur_margin(&lifted.o_mat, &head));
        push(
            SlotConstraint::TraceFull,
            None,
            lift_o.trace_bound_margin(&lifted.o_mat, &head),
        );

        // Surrogate rate in bits, scaled by the requirement. With zero
        // demand the exact requirement is vacuous, while the log-of-ratio
        // surrogate would spuriously require unit SINR; it is dropped.
        let rate_margin = if self.beta * self.s_bits > 0.0 {
            self.surrogate_rate_margin(lifted) / self.s_bits.max(1.0)
        } else {
            0.0
        };
        push(SlotConstraint::RateSurrogate, None, rate_margin);

        Ok(out)
    }

    /// Scalar-inequality counts of the program.
    pub fn census(&self) -> ConstraintCensus {
        let n = self.n_units();
        ConstraintCensus {
            energy_budget: 1,
            ris_power_budget: 1,
            signal_slack: 1,
            noise_slack: 1,
            binary_taylor: n,
            binary_range: 2 * n,
            local_time: 1,
            frequency_range: 2,
            unit_modulus: n,
            big_m_box: 8 * n,
            psd_masked: 1,
            trace_masked: 1,
            psd_full: 1,
            trace_full: 1,
            rate_surrogate: 1,
        }
    }
}

/// The assembled RIS-block subproblem: one lifted program per slot plus the
/// warm-start states that generated the linearization points.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub slots: Vec<SlotProgram>,
    pub input_states: Vec<RisState>,
    pub input_f: Vec<f64>,
    pub frame_time: f64,
}

/// Assemble the lifted program for every slot, linearized at the lift of
/// `input_states`. Errors when a slot is missing its input state (and hence
/// its linearization point).
pub fn assemble_subproblem(
    realization: &ChannelRealization,
    alloc: &Allocation,
    input_states: &[RisState],
    tasks: &[Task],
    params: &SystemParams,
    user_params: &UserParams,
) -> Result<Subproblem> {
    let k_users = alloc.k_users();
    if input_states.len() != k_users {
        return Err(Error::Dimension(format!(
            "missing linearization point: {} input states for K={k_users}",
            input_states.len()
        )));
    }
    let frame_time = alloc.total_time();
    let n = realization.n_units();
    let m = realization.m_antennas();
    let mut slots = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let w = &alloc.beamformer[k];
        let h_r = realization.h_user_ris[k].clone();
        let hw = &realization.h_ris_ap * w;
        let mut h_k = CMatrix::zeros(m, n + 1);
        for col in 0..n {
            for row in 0..m {
                h_k[(row, col)] = realization.h_ris_ap[(col, row)].conj() * h_r[col];
            }
        }
        h_k.column_mut(n).copy_from(&realization.h_direct[k]);
        let signal_vec = h_k.adjoint() * w;
        let svd = svd_noise_form(&realization.h_ris_ap, w);
        let base_direct = w.dotc(&realization.h_direct[k]);
        let unit_terms: Vec<C64> = (0..n).map(|i| hw[i].conj() * h_r[i]).collect();

        let mut slot = SlotProgram {
            user: k,
            t: alloc.t[k],
            p: alloc.p[k],
            beta: alloc.beta[k],
            frame_time,
            h_r,
            hw,
            h_k,
            signal_vec,
            svd,
            base_direct,
            unit_terms,
            s_bits: tasks[k].s_bits,
            c_cycles: tasks[k].c_cycles,
            kappa: user_params.kappa,
            e_max: user_params.e_max,
            f_max: user_params.f_max,
            sys: *params,
            rho_max_big_m: 2.0 * params.rho_cap,
            mode_freeze: None,
            point: LinearizationPoint {
                alpha_bar: vec![0.0; n],
                u_bar: CVector::zeros(n),
                o_bar: CVector::zeros(n + 1),
                v_bar: 0.0,
            },
        };
        slot.point = slot.linearization_from_state(&input_states[k], alloc.f_local[k]);
        slot.point.validate()?;
        slots.push(slot);
    }
    Ok(Subproblem {
        slots,
        input_states: input_states.to_vec(),
        input_f: alloc.f_local.clone(),
        frame_time,
    })
}

/// Result of one SCA step.
#[derive(Debug, Clone)]
pub struct ScaStep {
    pub ris_per_slot: Vec<RisState>,
    pub f_local: Vec<f64>,
    /// True (unlifted) objective summed over slots.
    pub objective: f64,
    /// Slots where the backend failed or regressed and the input was kept.
    pub kept_input: Vec<bool>,
}

/// Solve every slot through the backend and recover concrete RIS states.
///
/// Mode bits round at 0.5 with a feasibility re-check (least-active units
/// flip back to passive if the power budget breaks); amplification factors
/// come from the masked-vector magnitudes, phases from the full lift. Each
/// slot keeps the better of the recovered point and the input point under
/// the true objective, so the step never regresses.
pub fn solve_and_recover<B: SubproblemBackend + ?Sized>(
    subproblem: &Subproblem,
    backend: &B,
) -> Result<ScaStep> {
    let k_users = subproblem.slots.len();
    let mut ris_out = Vec::with_capacity(k_users);
    let mut f_out = Vec::with_capacity(k_users);
    let mut kept = vec![false; k_users];
    let mut objective = 0.0;

    for (k, slot) in subproblem.slots.iter().enumerate() {
        let input_state = &subproblem.input_states[k];
        let input_f = subproblem.input_f[k];
        let input_cost = slot.true_cost(input_state, input_f);

        let candidate = backend
            .solve_slot(slot)
            .ok()
            .and_then(|lifted| recover_slot(slot, &lifted));

        match candidate {
            Some((state, f)) => {
                let cost = slot.true_cost(&state, f);
                if cost <= input_cost {
                    objective += cost;
                    ris_out.push(state);
                    f_out.push(f);
                } else {
                    kept[k] = true;
                    objective += input_cost;
                    ris_out.push(input_state.clone());
                    f_out.push(input_f);
                }
            }
            None => {
                kept[k] = true;
                objective += input_cost;
                ris_out.push(input_state.clone());
                f_out.push(input_f);
            }
        }
    }
    Ok(ScaStep {
        ris_per_slot: ris_out,
        f_local: f_out,
        objective,
        kept_input: kept,
    })
}

/// Round and re-validate one slot's lifted solution; `None` when the
/// recovered state cannot meet the exact power or rate constraints.
fn recover_slot(slot: &SlotProgram, lifted: &LiftedVars) -> Option<(RisState, f64)> {
    let n = slot.n_units();
    let rho_cap = slot.sys.rho_cap;
    let mut mode: Vec<bool> = lifted.alpha.iter().map(|&a| a >= 0.5).collect();
    let mut amplification = vec![1.0; n];
    let mut phase = vec![0.0; n];
    for i in 0..n {
        phase[i] = lifted.o[i].arg();
        if mode[i] {
            amplification[i] = lifted.u[i].norm().clamp(1.0, rho_cap);
        }
    }

    // Re-validate the power budget; flip the least-confident active units
    // back to passive until it holds.
    let build = |mode: &[bool], amp: &[f64], phase: &[f64]| RisState {
        mode: mode.to_vec(),
        amplification: amp.to_vec(),
        phase: phase.to_vec(),
    };
    let mut state = build(&mode, &amplification, &phase);
    let budget = slot.sys.p_ris_max * (1.0 + 1e-9);
    while slot.true_amplification(&state) > budget {
        let flip = (0..n)
            .filter(|&i| mode[i])
            .min_by(|&a, &b| lifted.alpha[a].total_cmp(&lifted.alpha[b]))?;
        mode[flip] = false;
        amplification[flip] = 1.0;
        state = build(&mode, &amplification, &phase);
    }

    // Exact rate re-check at the fixed time/power/ratio.
    let tol = 1e-9 * slot.s_bits.max(1.0);
    if slot.true_rate_margin(&state) < -tol {
        return None;
    }
    Some((state, lifted.f_local))
}
