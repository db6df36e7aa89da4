//! Closed-form MMSE receive beamforming.

use nalgebra::Cholesky;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::model::RisState;
use crate::{CMatrix, CVector, C64};

/// MMSE receive beamformer for user `k`.
///
/// Solves `[g g^H + (sigma^2/p) T T^H + (delta^2/p) I] w = g` with `g` the
/// effective channel and `T = H^H A L T` the amplified-noise mixing matrix,
/// then normalizes. The regularized matrix is Hermitian positive definite for
/// any `delta^2 > 0`, so a Cholesky factorization is used instead of an
/// explicit inverse. The global phase is fixed by rotating the first
/// non-negligible component to the positive real axis, which keeps outputs
/// deterministic.
pub fn mmse_beamformer(
    realization: &ChannelRealization,
    ris: &RisState,
    p: f64,
    ris_noise_power: f64,
    ap_noise_power: f64,
    user: usize,
) -> Result<CVector> {
    if p <= 0.0 {
        return Err(Error::Domain(format!("transmit power {p} must be > 0")));
    }
    let m = realization.m_antennas();
    let n = realization.n_units();
    if m == 0 {
        return Err(Error::Dimension("M must be >= 1".into()));
    }
    let g = crate::model::effective_channel(realization, ris, user);

    // T = H^H A L T (M x N); column n is conj(H[n, .]) * active coeff.
    let mut t = CMatrix::zeros(m, n);
    for col in 0..n {
        let c = ris.active_coeff(col);
        if c.norm_sqr() > 0.0 {
            for row in 0..m {
                t[(row, col)] = realization.h_ris_ap[(col, row)].conj() * c;
            }
        }
    }

    let mut a = &g * g.adjoint();
    if n > 0 {
        a += (&t * t.adjoint()).scale(ris_noise_power / p);
    }
    for i in 0..m {
        a[(i, i)] += C64::new(ap_noise_power / p, 0.0);
    }

    let chol = Cholesky::new(a).ok_or_else(|| {
        Error::Domain("MMSE system matrix is not positive definite".into())
    })?;
    let mut w = chol.solve(&g);
    let norm = w.norm();
    if !(norm > 0.0) {
        return Err(Error::Domain("effective channel is zero".into()));
    }
    w /= C64::new(norm, 0.0);
    Ok(fix_global_phase(w))
}

/// Rotate so the first component with non-negligible magnitude is
/// real-positive.
fn fix_global_phase(mut w: CVector) -> CVector {
    let norm = w.norm();
    if let Some(lead) = w.iter().find(|c| c.norm() > 1e-12 * norm).copied() {
        let rot = lead.conj() / lead.norm();
        w *= rot;
    }
    w
}
