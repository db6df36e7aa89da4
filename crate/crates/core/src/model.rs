//! System state and metrics for the hybrid RIS-aided MEC model.
//!
//! All quantities are linear SI units. Metrics are total functions: points
//! that violate constraints still evaluate (optimization iterates may be
//! transiently infeasible), and feasibility is a separate verdict with
//! per-constraint margins.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::{CVector, C64};

/// A computation task: input size in bits and total CPU cycles required.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub s_bits: f64,
    /// Total CPU cycles to process the task (not cycles per bit; the default
    /// parameter set is only self-consistent under the total-cycles reading).
    pub c_cycles: f64,
}

/// Per-user resource limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserParams {
    /// Maximum energy the user may spend on transmit + local compute (J).
    pub e_max: f64,
    /// Maximum CPU frequency (Hz).
    pub f_max: f64,
    /// Maximum transmission time per slot (s).
    pub t_max: f64,
    /// Effective-capacitance coefficient (J s^2 / cycle).
    pub kappa: f64,
    /// Maximum transmit power (W); used by the closed-form solvers and
    /// baselines.
    pub p_max: f64,
}

/// Per-slot RIS configuration: mode bits, amplification factors, phases.
///
/// The effective reflection coefficient of unit `n` is `rho_n^{mode_n} *
/// e^{j theta_n}`, so passive units always have unit modulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisState {
    /// Active-mode bits (true = active).
    pub mode: Vec<bool>,
    /// Amplification factor per unit, >= 1; only applied to active units.
    pub amplification: Vec<f64>,
    /// Phase shift per unit in radians.
    pub phase: Vec<f64>,
}

impl RisState {
    /// All units passive with the given phases and unit amplification.
    pub fn all_passive(n: usize) -> Self {
        RisState {
            mode: vec![false; n],
            amplification: vec![1.0; n],
            phase: vec![0.0; n],
        }
    }

    /// All units active with unit amplification and zero phase.
    pub fn all_active(n: usize) -> Self {
        RisState {
            mode: vec![true; n],
            amplification: vec![1.0; n],
            phase: vec![0.0; n],
        }
    }

    pub fn n_units(&self) -> usize {
        self.mode.len()
    }

    pub fn n_active(&self) -> usize {
        self.mode.iter().filter(|&&b| b).count()
    }

    /// Effective reflection coefficient `rho^mode * e^{j theta}` of unit `n`.
    pub fn coeff(&self, n: usize) -> C64 {
        let rho = if self.mode[n] { self.amplification[n] } else { 1.0 };
        C64::from_polar(rho, self.phase[n])
    }

    /// Coefficient masked to active units (zero for passive units).
    pub fn active_coeff(&self, n: usize) -> C64 {
        if self.mode[n] {
            C64::from_polar(self.amplification[n], self.phase[n])
        } else {
            C64::new(0.0, 0.0)
        }
    }

    pub fn validate(&self, rho_cap: f64) -> Result<()> {
        if self.amplification.len() != self.mode.len() || self.phase.len() != self.mode.len() {
            return Err(Error::Dimension("RIS state vectors differ in length".into()));
        }
        for (n, &rho) in self.amplification.iter().enumerate() {
            if !(1.0..=rho_cap).contains(&rho) {
                return Err(Error::Domain(format!(
                    "amplification[{n}] = {rho} outside [1, {rho_cap}]"
                )));
            }
        }
        Ok(())
    }
}

/// System-wide constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Bandwidth B (Hz).
    pub bandwidth: f64,
    /// Thermal noise power introduced by active RIS units, sigma^2 (W).
    pub ris_noise_power: f64,
    /// AWGN power at the AP, delta^2 (W).
    pub ap_noise_power: f64,
    /// Circuit power per RIS unit, P_C (W).
    pub p_circuit: f64,
    /// DC biasing power per active RIS unit, P_DC (W).
    pub p_dc: f64,
    /// RIS amplification power budget, P_R^max (W).
    pub p_ris_max: f64,
    /// Latency/energy tradeoff weight w in [0, 1], shared by all users.
    pub tradeoff: f64,
    /// Normalizing factor multiplying the energy term of the objective.
    pub energy_scale: f64,
    /// Amplification factor cap enforced by the simulator.
    pub rho_cap: f64,
}

/// Per-user decision variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// Transmission time per user (s).
    pub t: Vec<f64>,
    /// Transmit power per user (W).
    pub p: Vec<f64>,
    /// Offload ratio per user in [0, 1].
    pub beta: Vec<f64>,
    /// Local CPU frequency per user (Hz).
    pub f_local: Vec<f64>,
    /// Unit-norm receive beamformer per user (length M).
    pub beamformer: Vec<CVector>,
}

impl Allocation {
    pub fn k_users(&self) -> usize {
        self.t.len()
    }

    pub fn total_time(&self) -> f64 {
        self.t.iter().sum()
    }
}

/// Energy split for one user (J).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserEnergy {
    pub transmit: f64,
    pub local: f64,
    pub ris_active: f64,
    pub ris_passive: f64,
}

impl UserEnergy {
    pub fn total(&self) -> f64 {
        self.transmit + self.local + self.ris_active + self.ris_passive
    }
}

/// Evaluated objective with its parts.
#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown {
    /// Sum of transmission times (s).
    pub latency_sum: f64,
    /// Per-user energy split.
    pub per_user: Vec<UserEnergy>,
    /// Sum of per-user total energies (J).
    pub energy_sum: f64,
    /// Weighted objective: sum w*t + sum (1-w)*energy_scale*E_total.
    pub total_cost: f64,
}

/// RIS power draw for one slot (W).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisPower {
    /// Total active-unit power: N_act (P_C + P_DC) + amplification.
    pub active: f64,
    /// Passive-unit circuit power: (N - N_act) P_C.
    pub passive: f64,
    /// Amplification output power p ||A L T h_r||^2 + sigma^2 ||A L T||^2,
    /// the quantity bounded by the RIS power budget.
    pub amplification: f64,
}

/// Local computing time and energy for one user.
///
/// Full offload (`beta = 1`) costs nothing. A zero CPU frequency with work
/// remaining yields infinite time rather than an error.
pub fn local_compute(task: &Task, beta: f64, f: f64, kappa: f64) -> (f64, f64) {
    let cycles = (1.0 - beta) * task.c_cycles;
    if cycles <= 0.0 {
        return (0.0, 0.0);
    }
    let time = if f > 0.0 { cycles / f } else { f64::INFINITY };
    let energy = cycles * kappa * f * f;
    (time, energy)
}

/// Cascaded-plus-direct channel `h_d + H^H L T h_r` for user `k`.
pub fn effective_channel(
    realization: &ChannelRealization,
    ris: &RisState,
    user: usize,
) -> CVector {
    let h_r = &realization.h_user_ris[user];
    let n = realization.n_units();
    let scaled = CVector::from_iterator(n, (0..n).map(|i| ris.coeff(i) * h_r[i]));
    let cascade = realization.h_ris_ap.adjoint() * scaled;
    &realization.h_direct[user] + cascade
}

/// Squared norm of the amplified-noise row `w^H H^H A L T` (active units
/// only).
fn amplified_noise_gain(
    realization: &ChannelRealization,
    ris: &RisState,
    beamformer: &CVector,
) -> f64 {
    let hw = &realization.h_ris_ap * beamformer; // N-vector, rows (H w)_n
    (0..realization.n_units())
        .map(|n| hw[n].norm_sqr() * ris.active_coeff(n).norm_sqr())
        .sum()
}

/// Receive SINR of user `k`.
///
/// Amplified RIS thermal noise enters only through active units; with an
/// all-passive state the denominator is exactly the AP noise power.
pub fn sinr(
    realization: &ChannelRealization,
    ris: &RisState,
    alloc: &Allocation,
    params: &SystemParams,
    user: usize,
) -> f64 {
    let w = &alloc.beamformer[user];
    let g = effective_channel(realization, ris, user);
    let signal = alloc.p[user] * w.dotc(&g).norm_sqr();
    let noise = params.ris_noise_power * amplified_noise_gain(realization, ris, w)
        + params.ap_noise_power;
    signal / noise
}

/// Achievable offloading rate `B log2(1 + gamma)` in bits/s.
pub fn rate(params: &SystemParams, gamma: f64) -> f64 {
    params.bandwidth * (1.0 + gamma).log2()
}

/// RIS power draw for one slot, given the user's transmit power and its
/// user-RIS channel.
pub fn ris_power(ris: &RisState, p: f64, h_r: &CVector, params: &SystemParams) -> RisPower {
    let n = ris.n_units();
    let n_act = ris.n_active();
    let mut amplification = 0.0;
    for i in 0..n {
        let c = ris.active_coeff(i).norm_sqr();
        amplification += p * c * h_r[i].norm_sqr() + params.ris_noise_power * c;
    }
    RisPower {
        active: n_act as f64 * (params.p_circuit + params.p_dc) + amplification,
        passive: (n - n_act) as f64 * params.p_circuit,
        amplification,
    }
}

/// Assemble the full cost breakdown for an allocation and per-slot RIS states.
pub fn total_cost(
    alloc: &Allocation,
    ris_per_slot: &[RisState],
    realization: &ChannelRealization,
    tasks: &[Task],
    params: &SystemParams,
    user_params: &UserParams,
) -> CostBreakdown {
    let k_users = alloc.k_users();
    let mut per_user = Vec::with_capacity(k_users);
    let mut latency_sum = 0.0;
    let mut energy_sum = 0.0;
    let mut total = 0.0;
    for k in 0..k_users {
        let t = alloc.t[k];
        let (_, e_local) = local_compute(&tasks[k], alloc.beta[k], alloc.f_local[k], user_params.kappa);
        let rp = ris_power(&ris_per_slot[k], alloc.p[k], &realization.h_user_ris[k], params);
        let energy = UserEnergy {
            transmit: t * alloc.p[k],
            local: e_local,
            ris_active: t * rp.active,
            ris_passive: t * rp.passive,
        };
        latency_sum += t;
        energy_sum += energy.total();
        total += params.tradeoff * t
            + (1.0 - params.tradeoff) * params.energy_scale * energy.total();
        per_user.push(energy);
    }
    CostBreakdown {
        latency_sum,
        per_user,
        energy_sum,
        total_cost: total,
    }
}

/// Signed feasibility margins for constraints C1-C8; >= 0 means satisfied.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// Energy budget: E_max - (t p + E_local).
    pub c1_energy: Vec<f64>,
    /// RIS power budget: P_R^max - amplification power.
    pub c2_ris_power: Vec<f64>,
    /// Offload ratio range: min(beta, 1 - beta).
    pub c3_beta_range: Vec<f64>,
    /// Rate requirement: t R - beta S (bits).
    pub c4_rate: Vec<f64>,
    /// Binary mode bits; zero by construction for `RisState`.
    pub c5_binary: Vec<f64>,
    /// Local compute fits the frame: sum t - (1 - beta) C / f.
    pub c6_local_time: Vec<f64>,
    /// Slot cap: T_max - t.
    pub c6_time_cap: Vec<f64>,
    /// CPU frequency range: min(f, f_max - f).
    pub c7_frequency: Vec<f64>,
    /// Passive units at unit modulus: -|1 - |coeff|| per slot (max over
    /// passive units); zero by construction for `RisState`.
    pub c8_unit_modulus: Vec<f64>,
}

impl FeasibilityReport {
    /// Smallest margin across all constraints.
    pub fn min_margin(&self) -> f64 {
        let all = [
            &self.c1_energy,
            &self.c2_ris_power,
            &self.c3_beta_range,
            &self.c4_rate,
            &self.c5_binary,
            &self.c6_local_time,
            &self.c6_time_cap,
            &self.c7_frequency,
            &self.c8_unit_modulus,
        ];
        all.iter()
            .flat_map(|v| v.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.min_margin() >= -tol
    }

    /// Name of the most violated constraint, if any margin is below `-tol`.
    pub fn worst_violation(&self, tol: f64) -> Option<(&'static str, usize, f64)> {
        let named: [(&'static str, &Vec<f64>); 9] = [
            ("C1 energy budget", &self.c1_energy),
            ("C2 RIS power budget", &self.c2_ris_power),
            ("C3 offload ratio range", &self.c3_beta_range),
            ("C4 rate requirement", &self.c4_rate),
            ("C5 binary modes", &self.c5_binary),
            ("C6 local compute time", &self.c6_local_time),
            ("C6 slot cap", &self.c6_time_cap),
            ("C7 frequency range", &self.c7_frequency),
            ("C8 unit modulus", &self.c8_unit_modulus),
        ];
        let mut worst: Option<(&'static str, usize, f64)> = None;
        for (name, margins) in named {
            for (k, &m) in margins.iter().enumerate() {
                if m < -tol && worst.map_or(true, |(_, _, w)| m < w) {
                    worst = Some((name, k, m));
                }
            }
        }
        worst
    }
}

/// Evaluate constraints C1-C8 of the cost-minimization problem, returning
/// margins rather than booleans.
pub fn check_feasibility(
    alloc: &Allocation,
    ris_per_slot: &[RisState],
    realization: &ChannelRealization,
    tasks: &[Task],
    params: &SystemParams,
    user_params: &UserParams,
) -> FeasibilityReport {
    let k_users = alloc.k_users();
    let frame = alloc.total_time();
    let mut report = FeasibilityReport {
        c1_energy: Vec::with_capacity(k_users),
        c2_ris_power: Vec::with_capacity(k_users),
        c3_beta_range: Vec::with_capacity(k_users),
        c4_rate: Vec::with_capacity(k_users),
        c5_binary: vec![0.0; k_users],
        c6_local_time: Vec::with_capacity(k_users),
        c6_time_cap: Vec::with_capacity(k_users),
        c7_frequency: Vec::with_capacity(k_users),
        c8_unit_modulus: Vec::with_capacity(k_users),
    };
    for k in 0..k_users {
        let beta = alloc.beta[k];
        let f = alloc.f_local[k];
        let (t_local, e_local) = local_compute(&tasks[k], beta, f, user_params.kappa);
        let rp = ris_power(&ris_per_slot[k], alloc.p[k], &realization.h_user_ris[k], params);
        let gamma = sinr(realization, &ris_per_slot[k], alloc, params, k);

        report.c1_energy.push(user_params.e_max - (alloc.t[k] * alloc.p[k] + e_local));
        report.c2_ris_power.push(params.p_ris_max - rp.amplification);
        report.c3_beta_range.push(beta.min(1.0 - beta));
        report
            .c4_rate
            .push(alloc.t[k] * rate(params, gamma) - beta * tasks[k].s_bits);
        report.c6_local_time.push(if t_local.is_infinite() {
            f64::NEG_INFINITY
        } else {
            frame - t_local
        });
        report.c6_time_cap.push(user_params.t_max - alloc.t[k]);
        report.c7_frequency.push(f.min(user_params.f_max - f));
        let ris = &ris_per_slot[k];
        let worst_modulus = (0..ris.n_units())
            .filter(|&n| !ris.mode[n])
            .map(|n| (ris.coeff(n).norm() - 1.0).abs())
            .fold(0.0f64, f64::max);
        report.c8_unit_modulus.push(-worst_modulus);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channels, Dims, Fading, Geometry, PathLossModel, UserCircle};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn params() -> SystemParams {
        SystemParams {
            bandwidth: 1e6,
            ris_noise_power: 1e-11,
            ap_noise_power: 1e-11,
            p_circuit: 1e-4,
            p_dc: 3.1622776601683794e-4,
            p_ris_max: 1e-2,
            tradeoff: 0.5,
            energy_scale: 1.0,
            rho_cap: 14.0,
        }
    }

    fn user_params() -> UserParams {
        UserParams {
            e_max: 0.01,
            f_max: 1e9,
            t_max: 0.5,
            kappa: 1e-28,
            p_max: 0.01,
        }
    }

    fn task() -> Task {
        Task { s_bits: 1e6, c_cycles: 4e7 }
    }

    fn realization(seed: u64, dims: Dims) -> ChannelRealization {
        let geom = Geometry {
            ap_position: [0.0, 0.0],
            ris_position: [50.0, 20.0],
            user_positions: None,
            user_circle: Some(UserCircle { center: [50.0, 0.0], radius: 10.0 }),
        };
        let model = PathLossModel {
            a0: 1e-3,
            d0: 1.0,
            exponent_ap_ris: 2.6,
            exponent_ris_user: 2.2,
            exponent_ap_user: 3.2,
        };
        sample_channels(&geom, &model, dims, seed, Fading::Rayleigh).unwrap()
    }

    fn unit_beamformer(m: usize) -> CVector {
        let mut v = CVector::zeros(m);
        v[0] = C64::new(1.0, 0.0);
        v
    }

    fn simple_alloc(k: usize, m: usize) -> Allocation {
        Allocation {
            t: vec![0.25; k],
            p: vec![0.01; k],
            beta: vec![0.5; k],
            f_local: vec![1e9; k],
            beamformer: vec![unit_beamformer(m); k],
        }
    }

    #[test]
    fn local_compute_full_offload_is_free() {
        assert_eq!(local_compute(&task(), 1.0, 1e9, 1e-28), (0.0, 0.0));
    }

    #[test]
    fn local_compute_hand_values() {
        let (t, e) = local_compute(&task(), 0.5, 1e9, 1e-28);
        assert_relative_eq!(t, 0.02, max_relative = 1e-12);
        assert_relative_eq!(e, 2e-3, max_relative = 1e-12);
    }

    #[test]
    fn local_compute_default_task_at_f_max() {
        // Full local execution of the default task at the 1 GHz cap.
        let (t, e) = local_compute(&task(), 0.0, 1e9, 1e-28);
        assert_relative_eq!(t, 0.04, max_relative = 1e-12);
        assert_relative_eq!(e, 4e-3, max_relative = 1e-12);
    }

    #[test]
    fn local_compute_zero_frequency_signals_infinite_time() {
        let (t, e) = local_compute(&task(), 0.5, 0.0, 1e-28);
        assert!(t.is_infinite());
        assert_eq!(e, 0.0);
    }

    #[test]
    fn effective_channel_without_ris_is_direct() {
        let dims = Dims { k_users: 1, m_antennas: 3, n_units: 0 };
        let r = realization(1, dims);
        let ris = RisState::all_passive(0);
        let g = effective_channel(&r, &ris, 0);
        assert_eq!(g, r.h_direct[0]);
    }

    #[test]
    fn effective_channel_single_unit_coherent_sum() {
        let dims = Dims { k_users: 1, m_antennas: 1, n_units: 1 };
        let mut r = realization(2, dims);
        r.h_direct[0][0] = C64::from_polar(0.6, 0.8);
        r.h_user_ris[0][0] = C64::from_polar(0.5, -0.2);
        r.h_ris_ap[(0, 0)] = C64::from_polar(0.4, 0.3);
        // Align the single cascade term with the direct path:
        // arg(conj(H) * e^{j theta} * h_r) = arg(h_d).
        let theta = 0.8 - (-0.3 - 0.2);
        let ris = RisState {
            mode: vec![false],
            amplification: vec![1.0],
            phase: vec![theta],
        };
        let g = effective_channel(&r, &ris, 0);
        assert_relative_eq!(g[0].norm(), 0.6 + 0.4 * 0.5, max_relative = 1e-12);
    }

    #[test]
    fn effective_channel_cascade_linear_in_amplification() {
        let dims = Dims { k_users: 1, m_antennas: 4, n_units: 5 };
        let r = realization(3, dims);
        let base = RisState {
            mode: vec![true; 5],
            amplification: vec![3.0; 5],
            phase: vec![0.7, -0.4, 0.1, 2.2, 1.0],
        };
        let doubled = RisState {
            amplification: vec![6.0; 5],
            ..base.clone()
        };
        let passive_ref = effective_channel(&r, &RisState::all_passive(5), 0) - &r.h_direct[0];
        let _ = passive_ref;
        let c1 = effective_channel(&r, &base, 0) - &r.h_direct[0];
        let c2 = effective_channel(&r, &doubled, 0) - &r.h_direct[0];
        for m in 0..4 {
            assert_relative_eq!(c2[m].re, 2.0 * c1[m].re, max_relative = 1e-12);
            assert_relative_eq!(c2[m].im, 2.0 * c1[m].im, max_relative = 1e-12);
        }
    }

    #[test]
    fn sinr_zero_power_is_zero() {
        let dims = Dims { k_users: 1, m_antennas: 2, n_units: 3 };
        let r = realization(4, dims);
        let mut alloc = simple_alloc(1, 2);
        alloc.p[0] = 0.0;
        assert_eq!(sinr(&r, &RisState::all_passive(3), &alloc, &params(), 0), 0.0);
    }

    #[test]
    fn sinr_all_passive_denominator_is_ap_noise_exactly() {
        let dims = Dims { k_users: 1, m_antennas: 2, n_units: 3 };
        let r = realization(5, dims);
        let alloc = simple_alloc(1, 2);
        let ris = RisState::all_passive(3);
        let p = params();
        let gamma = sinr(&r, &ris, &alloc, &p, 0);
        let g = effective_channel(&r, &ris, 0);
        let signal = alloc.p[0] * alloc.beamformer[0].dotc(&g).norm_sqr();
        assert_eq!(gamma, signal / p.ap_noise_power);
    }

    #[test]
    fn sinr_matches_independent_matrix_evaluation() {
        // Second implementation building the diagonal matrices explicitly.
        let dims = Dims { k_users: 2, m_antennas: 4, n_units: 5 };
        let r = realization(6, dims);
        let ris = RisState {
            mode: vec![true, false, true, false, true],
            amplification: vec![2.0, 1.0, 3.5, 1.0, 1.2],
            phase: vec![0.3, 1.1, -0.8, 2.0, 0.0],
        };
        let alloc = simple_alloc(2, 4);
        let p = params();
        for k in 0..2 {
            let n = 5;
            let lt = DMatrix::from_fn(n, n, |i, j| if i == j { ris.coeff(i) } else { C64::new(0.0, 0.0) });
            let alt = DMatrix::from_fn(n, n, |i, j| if i == j { ris.active_coeff(i) } else { C64::new(0.0, 0.0) });
            let g = &r.h_direct[k] + r.h_ris_ap.adjoint() * &lt * &r.h_user_ris[k];
            let w = &alloc.beamformer[k];
            let signal = alloc.p[k] * w.dotc(&g).norm_sqr();
            let row = w.adjoint() * r.h_ris_ap.adjoint() * &alt;
            let denom = p.ris_noise_power * row.norm_squared() + p.ap_noise_power;
            let expect = signal / denom;
            let got = sinr(&r, &ris, &alloc, &p, k);
            assert_relative_eq!(got, expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn sinr_monotone_in_power() {
        let dims = Dims { k_users: 1, m_antennas: 3, n_units: 4 };
        let r = realization(7, dims);
        let ris = RisState::all_active(4);
        let p = params();
        let mut alloc = simple_alloc(1, 3);
        let mut prev = -1.0;
        for i in 0..20 {
            alloc.p[0] = i as f64 * 1e-3;
            let gamma = sinr(&r, &ris, &alloc, &p, 0);
            assert!(gamma >= prev);
            prev = gamma;
        }
    }

    #[test]
    fn rate_reference_points() {
        let p = params();
        assert_eq!(rate(&p, 0.0), 0.0);
        assert_relative_eq!(rate(&p, 1.0), 1e6, max_relative = 1e-12);
        assert_relative_eq!(rate(&p, 3.0), 2e6, max_relative = 1e-12);
    }

    #[test]
    fn ris_power_all_passive() {
        let dims = Dims { k_users: 1, m_antennas: 1, n_units: 6 };
        let r = realization(8, dims);
        let rp = ris_power(&RisState::all_passive(6), 0.01, &r.h_user_ris[0], &params());
        assert_eq!(rp.active, 0.0);
        assert_eq!(rp.amplification, 0.0);
        assert_relative_eq!(rp.passive, 6.0 * 1e-4, max_relative = 1e-12);
    }

    #[test]
    fn ris_power_all_active_unit_amplification() {
        let dims = Dims { k_users: 1, m_antennas: 1, n_units: 6 };
        let r = realization(9, dims);
        let p = params();
        let rp = ris_power(&RisState::all_active(6), 0.01, &r.h_user_ris[0], &p);
        let h_norm_sqr: f64 = r.h_user_ris[0].iter().map(|c| c.norm_sqr()).sum();
        assert_relative_eq!(
            rp.amplification,
            0.01 * h_norm_sqr + 6.0 * p.ris_noise_power,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            rp.active,
            6.0 * (p.p_circuit + p.p_dc) + rp.amplification,
            max_relative = 1e-12
        );
        assert_eq!(rp.passive, 0.0);
    }

    #[test]
    fn total_cost_latency_only_when_tradeoff_is_one() {
        let dims = Dims { k_users: 2, m_antennas: 2, n_units: 3 };
        let r = realization(10, dims);
        let mut p = params();
        p.tradeoff = 1.0;
        let alloc = simple_alloc(2, 2);
        let ris = vec![RisState::all_active(3), RisState::all_passive(3)];
        let tasks = vec![task(); 2];
        let cb = total_cost(&alloc, &ris, &r, &tasks, &p, &user_params());
        assert_relative_eq!(cb.total_cost, alloc.t.iter().sum::<f64>(), max_relative = 1e-15);

        // Perturbing the energy path must not change the weighted cost.
        let mut up = user_params();
        up.kappa *= 100.0;
        let cb2 = total_cost(&alloc, &ris, &r, &tasks, &p, &up);
        assert_eq!(cb.total_cost, cb2.total_cost);
    }

    #[test]
    fn total_cost_vanishes_at_zero_time_full_offload() {
        let dims = Dims { k_users: 1, m_antennas: 2, n_units: 3 };
        let r = realization(11, dims);
        let mut p = params();
        p.tradeoff = 0.0;
        let alloc = Allocation {
            t: vec![0.0],
            p: vec![0.0],
            beta: vec![1.0],
            f_local: vec![1e9],
            beamformer: vec![unit_beamformer(2)],
        };
        let cb = total_cost(&alloc, &[RisState::all_active(3)], &r, &[task()], &p, &user_params());
        assert_eq!(cb.total_cost, 0.0);
    }

    #[test]
    fn total_cost_recomputable_from_parts() {
        let dims = Dims { k_users: 2, m_antennas: 3, n_units: 4 };
        let r = realization(12, dims);
        let p = params();
        let alloc = simple_alloc(2, 3);
        let ris = vec![
            RisState {
                mode: vec![true, false, true, true],
                amplification: vec![2.0, 1.0, 1.5, 4.0],
                phase: vec![0.1, 0.2, 0.3, 0.4],
            },
            RisState::all_passive(4),
        ];
        let tasks = vec![task(); 2];
        let cb = total_cost(&alloc, &ris, &r, &tasks, &p, &user_params());
        let rebuilt: f64 = (0..2)
            .map(|k| {
                p.tradeoff * alloc.t[k]
                    + (1.0 - p.tradeoff) * p.energy_scale * cb.per_user[k].total()
            })
            .sum();
        assert_relative_eq!(cb.total_cost, rebuilt, max_relative = 1e-12);
        assert_relative_eq!(
            cb.energy_sum,
            cb.per_user.iter().map(|e| e.total()).sum::<f64>(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn total_cost_bit_identical_on_repeat() {
        let dims = Dims { k_users: 2, m_antennas: 3, n_units: 4 };
        let r = realization(13, dims);
        let alloc = simple_alloc(2, 3);
        let ris = vec![RisState::all_active(4), RisState::all_passive(4)];
        let tasks = vec![task(); 2];
        let a = total_cost(&alloc, &ris, &r, &tasks, &params(), &user_params());
        let b = total_cost(&alloc, &ris, &r, &tasks, &params(), &user_params());
        assert_eq!(a, b);
    }

    #[test]
    fn feasibility_no_offloading_point_satisfied() {
        let dims = Dims { k_users: 2, m_antennas: 2, n_units: 3 };
        let r = realization(14, dims);
        let up = user_params();
        let alloc = Allocation {
            t: vec![up.t_max; 2],
            p: vec![0.0; 2],
            beta: vec![0.0; 2],
            f_local: vec![up.f_max; 2],
            beamformer: vec![unit_beamformer(2); 2],
        };
        let ris = vec![RisState::all_passive(3); 2];
        let report = check_feasibility(&alloc, &ris, &r, &[task(); 2], &params(), &up);
        assert!(report.is_feasible(0.0), "margins: {report:?}");
        // All-passive: C2 margin equals the full budget.
        for &m in &report.c2_ris_power {
            assert_relative_eq!(m, params().p_ris_max, max_relative = 1e-15);
        }
    }

    #[test]
    fn feasibility_flags_violations() {
        let dims = Dims { k_users: 1, m_antennas: 2, n_units: 3 };
        let r = realization(15, dims);
        let up = user_params();
        let alloc = Allocation {
            t: vec![up.t_max * 2.0],
            p: vec![1e3],
            beta: vec![1.4],
            f_local: vec![up.f_max * 2.0],
            beamformer: vec![unit_beamformer(2)],
        };
        let ris = vec![RisState::all_active(3)];
        let report = check_feasibility(&alloc, &ris, &r, &[task()], &params(), &up);
        assert!(!report.is_feasible(1e-9));
        assert!(report.c1_energy[0] < 0.0);
        assert!(report.c3_beta_range[0] < 0.0);
        assert!(report.c6_time_cap[0] < 0.0);
        assert!(report.c7_frequency[0] < 0.0);
        assert!(report.worst_violation(1e-9).is_some());
    }
}
