//! Analytical solvers for the single-antenna line-of-sight regime.
//!
//! Covers the two special cases that admit closed forms: pure latency
//! minimization and pure energy minimization. Assumptions: M = 1, no direct
//! link, full offloading at fixed transmit power, a common amplification
//! factor for all active units, and the conservative element-wise minimum
//! channel gains. Amplification factors are computed uncapped by default;
//! `rho_cap` optionally clamps them for consistency with the simulator.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::C64;

/// Conservative channel description: element-wise minimum magnitudes of the
/// RIS-AP vector and the user-RIS vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservativeChannel {
    /// min_n |h_n| over the RIS-AP channel.
    pub g_ris_ap: f64,
    /// min_n |h_r,n| over the user-RIS channel.
    pub g_user_ris: f64,
}

impl ConservativeChannel {
    pub fn new(g_ris_ap: f64, g_user_ris: f64) -> Result<Self> {
        if g_ris_ap <= 0.0 || g_user_ris <= 0.0 {
            return Err(Error::Domain("conservative gains must be > 0".into()));
        }
        Ok(ConservativeChannel { g_ris_ap, g_user_ris })
    }

    /// Derive from a sampled channel (requires M = 1).
    pub fn from_realization(realization: &ChannelRealization, user: usize) -> Result<Self> {
        let (g_h, g_r) = crate::channel::min_gains(realization, user)?;
        ConservativeChannel::new(g_h, g_r)
    }
}

/// Scalar parameter set for the closed-form solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormParams {
    /// Fixed transmit power P^max (W).
    pub p_tx: f64,
    /// RIS amplification power budget (W).
    pub p_ris_max: f64,
    /// RIS thermal noise power sigma^2 (W).
    pub ris_noise_power: f64,
    /// AP noise power delta^2 (W).
    pub ap_noise_power: f64,
    /// Bandwidth (Hz).
    pub bandwidth: f64,
    /// Circuit power per unit (W).
    pub p_circuit: f64,
    /// DC biasing power per active unit (W).
    pub p_dc: f64,
    /// Total number of reflecting units.
    pub n_units: usize,
    /// Minimum amplification factor (>= 1).
    pub rho_min: f64,
    /// Optional amplification cap; `None` keeps the analytical (uncapped)
    /// solutions.
    pub rho_cap: Option<f64>,
}

/// Integer split of the units for latency minimization, with the continuous
/// optimizer it was rounded from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencySolution {
    pub n_act: usize,
    pub n_pas: usize,
    /// Continuous maximizer of the count objective before rounding.
    pub n_act_continuous: f64,
    /// Common amplification factor (1.0 when no unit is active).
    pub rho: f64,
}

/// Transmission-time verdict for the latency problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyTiming {
    pub t: f64,
    pub feasible: bool,
}

/// Why an energy-minimization step has no solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyFailure {
    /// Minimum transmission time exceeds the deadline.
    TimeBudget { t_required: f64, t_max: f64 },
    /// The conservative (product lower bound) rate condition fails for the
    /// amplification step; `directly_feasible` reports whether a direct scan
    /// of the exact rate constraint would still find an admissible factor.
    AmpConservativeBound { directly_feasible: bool },
    /// Amplification lower bound exceeds the power-budget upper bound.
    AmpRange { rho_lower: f64, rho_upper: f64 },
    /// The conservative rate condition fails for the count step.
    CountCondition { directly_feasible: bool },
    /// Count lower bound exceeds the power-budget upper bound.
    CountRange { n_lower: f64, n_upper: f64 },
}

/// Outcome of an energy-minimization step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyOutcome<T> {
    Feasible(T),
    Infeasible(EnergyFailure),
}

impl<T> EnergyOutcome<T> {
    pub fn feasible(&self) -> Option<&T> {
        match self {
            EnergyOutcome::Feasible(v) => Some(v),
            EnergyOutcome::Infeasible(_) => None,
        }
    }
}

/// Phase shifts aligning every cascaded term: `theta_n = arg(h_n) -
/// arg(h_r,n)`, making each contribution real-positive.
pub fn aligned_phases(h: &[C64], h_r: &[C64]) -> Vec<f64> {
    h.iter()
        .zip(h_r.iter())
        .map(|(hn, hrn)| hn.arg() - hrn.arg())
        .collect()
}

/// Conservative SINR with `n_act` active units at common amplification `rho`:
///
/// `P |h|^2 |h_r|^2 (n_act rho + N - n_act)^2 / (sigma^2 |h|^2 n_act rho^2 +
/// delta^2)`.
///
/// `n_act` is continuous-valued so count optimization can work on the
/// relaxation; it equals the exact SINR when all element gains are equal and
/// phases are aligned.
pub fn conservative_sinr(
    cc: &ConservativeChannel,
    params: &ClosedFormParams,
    n_act: f64,
    rho: f64,
) -> f64 {
    let n = params.n_units as f64;
    let h2 = cc.g_ris_ap * cc.g_ris_ap;
    let hr2 = cc.g_user_ris * cc.g_user_ris;
    let array = n_act * rho + n - n_act;
    let num = params.p_tx * h2 * hr2 * array * array;
    let den = params.ris_noise_power * h2 * n_act * rho * rho + params.ap_noise_power;
    num / den
}

/// Amplification power drawn by `n_act` active units at common factor `rho`
/// under the conservative gains (the left side of the RIS power budget).
pub fn amplification_power(
    cc: &ConservativeChannel,
    params: &ClosedFormParams,
    n_act: f64,
    rho: f64,
) -> f64 {
    (params.p_tx * cc.g_user_ris * cc.g_user_ris + params.ris_noise_power) * n_act * rho * rho
}

/// Latency-optimal common amplification factor for `n_act > 0` active units:
/// the factor that spends the whole RIS power budget,
/// `rho* = sqrt(P_R^max / ((P |h_r|^2 + sigma^2) n_act))`.
pub fn latency_amp(
    cc: &ConservativeChannel,
    params: &ClosedFormParams,
    n_act: usize,
) -> Result<f64> {
    if n_act == 0 {
        return Err(Error::Domain(
            "amplification undefined with no active units".into(),
        ));
    }
    let rho = (params.p_ris_max
        / ((params.p_tx * cc.g_user_ris * cc.g_user_ris + params.ris_noise_power)
            * n_act as f64))
        .sqrt();
    Ok(apply_cap(rho, params))
}

fn apply_cap(rho: f64, params: &ClosedFormParams) -> f64 {
    match params.rho_cap {
        Some(cap) => rho.clamp(1.0, cap),
        None => rho,
    }
}

/// Count objective of the latency problem: conservative SINR with the
/// budget-saturating amplification factor substituted in.
pub fn count_objective(cc: &ConservativeChannel, params: &ClosedFormParams, n_act: f64) -> f64 {
    if n_act <= 0.0 {
        // No active unit: passive array gain only.
        return conservative_sinr(cc, params, 0.0, 1.0);
    }
    let rho = (params.p_ris_max
        / ((params.p_tx * cc.g_user_ris * cc.g_user_ris + params.ris_noise_power) * n_act))
        .sqrt();
    conservative_sinr(cc, params, n_act, rho)
}

/// Stationary points of the count objective in the sqrt(n_act) domain:
/// `x1 < 0 < x2 < x3` with the maximum at `x2`.
pub fn count_objective_stationary_points(
    cc: &ConservativeChannel,
    params: &ClosedFormParams,
) -> (f64, f64, f64) {
    let a2 = (params.p_ris_max
        / (params.p_tx * cc.g_user_ris * cc.g_user_ris + params.ris_noise_power))
        .sqrt();
    let n = params.n_units as f64;
    let disc = (a2 * a2 + 4.0 * n).sqrt();
    ((a2 - disc) / 2.0, a2 / 2.0, (a2 + disc) / 2.0)
}

/// Latency-optimal active-unit count.
///
/// Below the channel-quality threshold all units switch active; above it the
/// continuous optimum `P_R^max / (4 (P |h_r|^2 + sigma^2))` applies. The
/// integer count evaluates the count objective at the floor and ceiling
/// (clamped to `[0, N]`) and keeps the better; a continuous optimum below one
/// additionally compares against the fully passive configuration.
pub fn latency_count(cc: &ConservativeChannel, params: &ClosedFormParams) -> Result<LatencySolution> {
    let n = params.n_units as f64;
    let sigma2 = params.ris_noise_power;
    if params.p_ris_max <= 4.0 * n * sigma2 {
        return Err(Error::OutOfRegime(format!(
            "power budget {} not above 4 N sigma^2 = {}",
            params.p_ris_max,
            4.0 * n * sigma2
        )));
    }
    let threshold = (params.p_ris_max / (4.0 * n * params.p_tx) - sigma2 / params.p_tx).sqrt();
    let continuous = if cc.g_user_ris <= threshold {
        n
    } else {
        params.p_ris_max / (4.0 * (params.p_tx * cc.g_user_ris * cc.g_user_ris + sigma2))
    };

    let mut candidates = vec![
        (continuous.floor().clamp(0.0, n)) as usize,
        (continuous.ceil().clamp(0.0, n)) as usize,
    ];
    if continuous < 1.0 {
        // Whether to fall back to fully passive is not determined by the
        // continuous solution; compare both explicitly.
        candidates.push(0);
        candidates.push(1);
    }
    candidates.sort_unstable();
    candidates.dedup();

    let best = candidates
        .into_iter()
        .map(|cand| (cand, count_objective(cc, params, cand as f64)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty candidate set");
    let n_act = best.0;
    let rho = if n_act > 0 { latency_amp(cc, params, n_act)? } else { 1.0 };
    Ok(LatencySolution {
        n_act,
        n_pas: params.n_units - n_act,
        n_act_continuous: continuous,
        rho,
    })
}

/// Minimum transmission time for the latency solution and its deadline
/// verdict: `t* = S / (B log2(1 + sinr))`, feasible iff `t* <= T^max`.
pub fn latency_time(
    cc: &ConservativeChannel,
    solution: &LatencySolution,
    s_bits: f64,
    t_max: f64,
    params: &ClosedFormParams,
) -> LatencyTiming {
    let gamma = conservative_sinr(cc, params, solution.n_act as f64, solution.rho);
    let rate = params.bandwidth * (1.0 + gamma).log2();
    let t = if rate > 0.0 { s_bits / rate } else { f64::INFINITY };
    LatencyTiming { t, feasible: t <= t_max }
}

/// Minimum transmission time for the energy problem at a given
/// configuration; infeasible when it exceeds the deadline.
pub fn energy_time(
    cc: &ConservativeChannel,
    params: &ClosedFormParams,
    n_act: usize,
    rho: f64,
    s_bits: f64,
    t_max: f64,
) -> EnergyOutcome<f64> {
    let gamma = conservative_sinr(cc, params, n_act as f64, rho);
    if gamma <= 0.0 {
        return EnergyOutcome::Infeasible(EnergyFailure::TimeBudget {
            t_required: f64::INFINITY,
            t_max,
        });
    }
    let t = s_bits / (params.bandwidth * (1.0 + gamma).log2());
    if t <= t_max {
        EnergyOutcome::Feasible(t)
    } else {
        EnergyOutcome::Infeasible(EnergyFailure::TimeBudget { t_required: t, t_max })
    }
}

/// Required SINR for moving `s_bits` in time `t`: `2^(S/(tB)) - 1`.
fn required_sinr(params: &ClosedFormParams, s_bits: f64, t: f64) -> f64 {
    (s_bits / (t * params.bandwidth)).exp2() - 1.0
}

/// Scan the exact rate constraint over a rho grid (diagnostics for the
/// conservative-bound infeasibility verdicts).
fn rate_directly_feasible_in_rho(
    cc: &ConservativeChannel,
    params: &ClosedFormParams,
    n_act: f64,
    rho_min: f64,
    rho_max: f64,
    s_hat: f64,
) -> bool {
    if rho_max < rho_min {
        return false;
    }
    let steps = 512;
    (0..=steps).any(|i| {
        let rho = rho_min + (rho_max - rho_min) * i as f64 / steps as f64;
        conservative_sinr(cc, params, n_act, rho) >= s_hat
    })
}

/// Energy-minimal common amplification factor for a fixed count and
/// transmission time.
///
/// The rate constraint is lower-bounded through `(a+b)^2 >= 4ab`, giving a
/// quadratic whose smaller root is the least admissible factor; the RIS
/// power budget gives the upper bound. Requires `0 < n_act < N` for a
/// non-degenerate bound.
pub fn energy_amp(
    cc: &ConservativeChannel,
    params: &ClosedFormParams,
    n_act: usize,
    s_bits: f64,
    t: f64,
    rho_min: f64,
) -> EnergyOutcome<f64> {
    let n = params.n_units as f64;
    let na = n_act as f64;
    let h2 = cc.g_ris_ap * cc.g_ris_ap;
    let hr2 = cc.g_user_ris * cc.g_user_ris;
    let sigma2 = params.ris_noise_power;
    let delta2 = params.ap_noise_power;
    let s_hat = required_sinr(params, s_bits, t);

    let rho_upper = (params.p_ris_max / ((params.p_tx * hr2 + sigma2) * na)).sqrt();
    let b = 4.0 * params.p_tx * h2 * hr2 * na * (n - na);
    let disc = b * b - 4.0 * sigma2 * delta2 * h2 * na * s_hat * s_hat;
    if disc < 0.0 || b <= 0.0 {
        return EnergyOutcome::Infeasible(EnergyFailure::AmpConservativeBound {
            directly_feasible: rate_directly_feasible_in_rho(
                cc, params, na, rho_min, rho_upper, s_hat,
            ),
        });
    }
    let denom = -2.0 * sigma2 * h2 * na * s_hat;
    let r1 = (-b + disc.sqrt()) / denom;
    let r2 = (-b - disc.sqrt()) / denom;
    if rho_min > r2 {
        return EnergyOutcome::Infeasible(EnergyFailure::AmpConservativeBound {
            directly_feasible: rate_directly_feasible_in_rho(
                cc, params, na, rho_min, rho_upper, s_hat,
            ),
        });
    }
    let rho_lower = r1.max(rho_min);
    if rho_lower > rho_upper {
        return EnergyOutcome::Infeasible(EnergyFailure::AmpRange {
            rho_lower,
            rho_upper,
        });
    }
    EnergyOutcome::Feasible(apply_cap(rho_lower, params))
}

/// Count result for the energy problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCount {
    pub n_act: usize,
    /// Continuous lower bound before rounding up.
    pub n_act_continuous: f64,
}

/// Energy-minimal active-unit count for a fixed amplification factor and
/// transmission time. Requires `rho > 1` (the bound's denominator
/// degenerates at unit amplification).
pub fn energy_count(
    cc: &ConservativeChannel,
    params: &ClosedFormParams,
    rho: f64,
    s_bits: f64,
    t: f64,
) -> Result<EnergyOutcome<EnergyCount>> {
    if rho <= 1.0 {
        return Err(Error::Domain(format!(
            "count bound needs rho > 1, got {rho}"
        )));
    }
    let n = params.n_units as f64;
    let h2 = cc.g_ris_ap * cc.g_ris_ap;
    let hr2 = cc.g_user_ris * cc.g_user_ris;
    let sigma2 = params.ris_noise_power;
    let delta2 = params.ap_noise_power;
    let s_hat = required_sinr(params, s_bits, t);

    let n_upper = (params.p_ris_max / ((params.p_tx * hr2 + sigma2) * rho * rho)).min(n);
    if 4.0 * params.p_tx * hr2 * (rho - 1.0) * n < sigma2 * rho * rho * s_hat {
        let directly_feasible = (0..=params.n_units).any(|cand| {
            conservative_sinr(cc, params, cand as f64, rho) >= s_hat
                && amplification_power(cc, params, cand as f64, rho) <= params.p_ris_max
        });
        return Ok(EnergyOutcome::Infeasible(EnergyFailure::CountCondition {
            directly_feasible,
        }));
    }
    let denom = 4.0 * params.p_tx * h2 * hr2 * (rho - 1.0) * n - sigma2 * h2 * rho * rho * s_hat;
    let n_lower = (delta2 * s_hat / denom).max(0.0);
    let n_act = n_lower.ceil();
    if n_act > n_upper {
        return Ok(EnergyOutcome::Infeasible(EnergyFailure::CountRange {
            n_lower,
            n_upper,
        }));
    }
    Ok(EnergyOutcome::Feasible(EnergyCount {
        n_act: n_act as usize,
        n_act_continuous: n_lower,
    }))
}

/// Energy objective for one user at the fixed transmit power: per-second
/// system power times the transmission time.
pub fn energy_objective(
    cc: &ConservativeChannel,
    params: &ClosedFormParams,
    n_act: f64,
    rho: f64,
    t: f64,
) -> f64 {
    let n = params.n_units as f64;
    t * (params.p_tx
        + amplification_power(cc, params, n_act, rho)
        + n * params.p_circuit
        + n_act * params.p_dc)
}
