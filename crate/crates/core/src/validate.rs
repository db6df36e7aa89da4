//! Quick invariant suite behind the `validate` CLI subcommand.
//!
//! Runs a compressed version of the property checks that the test suite
//! exercises in depth: one line of PASS/FAIL per invariant, a few seconds
//! total.

use rand::Rng;

use crate::channel::{self, sample_channels, Dims, Fading, Geometry, PathLossModel, UserCircle};
use crate::closedform::{self, ClosedFormParams, ConservativeChannel};
use crate::model::{self, Allocation, RisState, SystemParams, Task, UserParams};
use crate::sca;
use crate::timepower::{self, TimePowerProblem, UserTerms};
use crate::{CMatrix, CVector, C64};

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, run: impl FnOnce() -> std::result::Result<String, String>) -> CheckResult {
    match run() {
        Ok(detail) => CheckResult { name, passed: true, detail },
        Err(detail) => CheckResult { name, passed: false, detail },
    }
}

fn reference_geometry() -> (Geometry, PathLossModel) {
    (
        Geometry {
            ap_position: [0.0, 0.0],
            ris_position: [50.0, 20.0],
            user_positions: None,
            user_circle: Some(UserCircle { center: [50.0, 0.0], radius: 10.0 }),
        },
        PathLossModel {
            a0: 1e-3,
            d0: 1.0,
            exponent_ap_ris: 2.6,
            exponent_ris_user: 2.2,
            exponent_ap_user: 3.2,
        },
    )
}

fn reference_params() -> (SystemParams, UserParams, Task) {
    (
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
        },
        UserParams { e_max: 0.01, f_max: 1e9, t_max: 0.5, kappa: 1e-28, p_max: 0.01 },
        Task { s_bits: 1e6, c_cycles: 4e7 },
    )
}

/// Run the suite; the caller prints one line per entry.
pub fn run_invariant_suite() -> Vec<CheckResult> {
    let mut out = Vec::new();

    out.push(check("path loss monotone, reference value at d0", || {
        let (_, model) = reference_geometry();
        let mut prev = f64::INFINITY;
        for i in 1..500 {
            let g = channel::path_loss_gain(0.5 * i as f64, &model, 2.6).map_err(|e| e.to_string())?;
            if g >= prev {
                return Err(format!("gain not decreasing at step {i}"));
            }
            prev = g;
        }
        let at_d0 = channel::path_loss_gain(1.0, &model, 2.2).map_err(|e| e.to_string())?;
        if (at_d0 - 1e-3).abs() > 1e-15 {
            return Err(format!("gain at d0 = {at_d0}, expected 1e-3"));
        }
        Ok("strictly decreasing; a0 recovered at d0".into())
    }));

    out.push(check("channel sampling deterministic in the seed", || {
        let (geom, model) = reference_geometry();
        let dims = Dims { k_users: 2, m_antennas: 4, n_units: 6 };
        let a = sample_channels(&geom, &model, dims, 7, Fading::Rayleigh).map_err(|e| e.to_string())?;
        let b = sample_channels(&geom, &model, dims, 7, Fading::Rayleigh).map_err(|e| e.to_string())?;
        if a != b {
            return Err("same seed produced different realizations".into());
        }
        Ok("identical realizations from identical seeds".into())
    }));

    out.push(check("line-of-sight entries carry exact path-loss magnitude", || {
        let (geom, model) = reference_geometry();
        let dims = Dims { k_users: 1, m_antennas: 1, n_units: 4 };
        let r = sample_channels(&geom, &model, dims, 9, Fading::Los).map_err(|e| e.to_string())?;
        let d = {
            let p = r.user_positions[0];
            ((p[0] - 50.0f64).powi(2) + (p[1] - 20.0f64).powi(2)).sqrt()
        };
        let expect = channel::path_loss_gain(d, &model, model.exponent_ris_user)
            .map_err(|e| e.to_string())?
            .sqrt();
        for e in r.h_user_ris[0].iter() {
            if (e.norm() - expect).abs() > 1e-12 * expect {
                return Err(format!("|entry| = {}, expected {expect}", e.norm()));
            }
        }
        Ok("unit-modulus fading confirmed".into())
    }));

    out.push(check("MMSE beamformer beats random combiners", || {
        let (geom, model) = reference_geometry();
        let (sys, _, _) = reference_params();
        let dims = Dims { k_users: 1, m_antennas: 4, n_units: 4 };
        let r = sample_channels(&geom, &model, dims, 3, Fading::Rayleigh).map_err(|e| e.to_string())?;
        let ris = RisState {
            mode: vec![true, false, true, false],
            amplification: vec![3.0, 1.0, 2.0, 1.0],
            phase: vec![0.5, 1.0, -0.3, 0.2],
        };
        let w = crate::beamforming::mmse_beamformer(&r, &ris, 0.01, sys.ris_noise_power, sys.ap_noise_power, 0)
            .map_err(|e| e.to_string())?;
        let alloc = |v: CVector| Allocation {
            t: vec![0.25],
            p: vec![0.01],
            beta: vec![0.5],
            f_local: vec![1e9],
            beamformer: vec![v],
        };
        let best = model::sinr(&r, &ris, &alloc(w), &sys, 0);
        let mut rng = crate::rng::derive_stream(1, &[77]);
        for i in 0..1000 {
            let v = CVector::from_iterator(4, (0..4).map(|_| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            }));
            let n = v.norm();
            let s = model::sinr(&r, &ris, &alloc(v / C64::new(n, 0.0)), &sys, 0);
            if s > best * (1.0 + 1e-9) {
                return Err(format!("random combiner {i} beat MMSE: {s} > {best}"));
            }
        }
        Ok(format!("MMSE SINR {best:.3e} maximal over 1000 samples"))
    }));

    out.push(check("first-order bounds are global underestimators", || {
        let mut rng = crate::rng::derive_stream(2, &[78]);
        for _ in 0..500 {
            let bar = rng.random_range(0.0..1.0);
            let a = rng.random_range(-1.0..2.0);
            let rb = sca::relax_binary(bar).map_err(|e| e.to_string())?;
            if rb.square_lower_bound(a) > a * a + 1e-12 {
                return Err("binary tangent exceeded the square".into());
            }
            let vb = rng.random_range(-30.0..3.0);
            let v = vb + rng.random_range(-2.0..2.0);
            if sca::exp_lower_bound(v, vb) > v.exp() * (1.0 + 1e-12) {
                return Err("exponential tangent exceeded exp".into());
            }
        }
        Ok("binary and exponential tangents below their functions".into())
    }));

    out.push(check("Big-M coupling pins binary modes exactly", || {
        let target = vec![C64::new(2.0, -1.5)];
        let c = sca::big_m_couple(&target, &[1.0], 28.0).map_err(|e| e.to_string())?;
        let m = c.margins(0, target[0]);
        if m.iter().any(|&x| x < -1e-12) {
            return Err("active pin violated".into());
        }
        let c = sca::big_m_couple(&target, &[0.0], 28.0).map_err(|e| e.to_string())?;
        let m = c.margins(0, C64::new(0.0, 0.0));
        if m.iter().any(|&x| x < -1e-12) {
            return Err("passive pin violated".into());
        }
        Ok("both binary pins exact".into())
    }));

    out.push(check("SVD noise identity", || {
        let mut rng = crate::rng::derive_stream(3, &[79]);
        for _ in 0..100 {
            let n = 4;
            let m = 3;
            let h = CMatrix::from_fn(n, m, |_, _| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let w = {
                let v = CVector::from_iterator(m, (0..m).map(|_| {
                    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                }));
                let norm = v.norm();
                v / C64::new(norm, 0.0)
            };
            let u = CVector::from_iterator(n, (0..n).map(|_| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            }));
            let form = sca::svd_noise_form(&h, &w);
            let lhs = form.direct_noise(&u);
            let rhs = form.weighted_trace(&(&u * u.adjoint()));
            if (lhs - rhs).abs() > 1e-10 * lhs.abs().max(1e-30) {
                return Err(format!("identity off: {lhs} vs {rhs}"));
            }
        }
        Ok("identity within 1e-10 on 100 random instances".into())
    }));

    out.push(check("budget-saturating amplification factor", || {
        let (sys, user, _) = reference_params();
        let params = ClosedFormParams {
            p_tx: user.p_max,
            p_ris_max: sys.p_ris_max,
            ris_noise_power: sys.ris_noise_power,
            ap_noise_power: sys.ap_noise_power,
            bandwidth: sys.bandwidth,
            p_circuit: sys.p_circuit,
            p_dc: sys.p_dc,
            n_units: 6,
            rho_min: 1.0,
            rho_cap: None,
        };
        let cc = ConservativeChannel::new(1e-3, 0.2).map_err(|e| e.to_string())?;
        for n_act in 1..=6 {
            let rho = closedform::latency_amp(&cc, &params, n_act).map_err(|e| e.to_string())?;
            let used = closedform::amplification_power(&cc, &params, n_act as f64, rho);
            if (used - params.p_ris_max).abs() > 1e-12 * params.p_ris_max {
                return Err(format!("budget not met at n_act = {n_act}: {used}"));
            }
        }
        Ok("power budget equality holds for every count".into())
    }));

    out.push(check("convex subproblem meets its optimality certificate", || {
        let problem = TimePowerProblem {
            users: vec![UserTerms {
                s_bits: 1e6,
                c_cycles: 4e7,
                f_local: 1e9,
                e_local_full: 4e-3,
                e_max: 0.01,
                t_max: 0.5,
                gain: 5e7,
                amp_gain_hr: 0.0,
                amp_units: 0.0,
                e_rate_t: 6e-4,
            }],
            tradeoff: 0.5,
            energy_scale: 1.0,
            bandwidth: 1e6,
            p_ris_max: 0.01,
            ris_noise_power: 1e-11,
            beta_freeze: None,
        };
        let (point, report) = timepower::solve_time_power(&problem, None).map_err(|e| e.to_string())?;
        if report.primal_residual > 1e-9 || report.stationarity_residual > 1e-6
            || report.complementarity_residual > 1e-6
        {
            return Err(format!("residuals too large: {report:?}"));
        }
        for (id, m) in problem.constraint_margins(&point) {
            if m < -1e-9 {
                return Err(format!("{id} violated by {m:.3e}"));
            }
        }
        Ok(format!(
            "KKT residuals {:.1e}/{:.1e}/{:.1e}",
            report.primal_residual, report.stationarity_residual, report.complementarity_residual
        ))
    }));

    out.push(check("objective recomputable from the energy breakdown", || {
        let (geom, model) = reference_geometry();
        let (sys, user, task) = reference_params();
        let dims = Dims { k_users: 2, m_antennas: 3, n_units: 4 };
        let r = sample_channels(&geom, &model, dims, 21, Fading::Rayleigh).map_err(|e| e.to_string())?;
        let e1 = {
            let mut v = CVector::zeros(3);
            v[0] = C64::new(1.0, 0.0);
            v
        };
        let alloc = Allocation {
            t: vec![0.2, 0.3],
            p: vec![0.005, 0.002],
            beta: vec![0.4, 0.6],
            f_local: vec![5e8, 2e8],
            beamformer: vec![e1.clone(), e1],
        };
        let ris = vec![RisState::all_active(4), RisState::all_passive(4)];
        let cb = model::total_cost(&alloc, &ris, &r, &[task; 2], &sys, &user);
        let rebuilt: f64 = (0..2)
            .map(|k| sys.tradeoff * alloc.t[k]
                + (1.0 - sys.tradeoff) * sys.energy_scale * cb.per_user[k].total())
            .sum();
        if (rebuilt - cb.total_cost).abs() > 1e-12 * cb.total_cost.abs() {
            return Err(format!("{rebuilt} vs {}", cb.total_cost));
        }
        Ok("weighted objective equals the sum of its parts".into())
    }));

    out
}
