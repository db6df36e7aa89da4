//! Successive convex approximation machinery for the RIS-configuration
//! subproblem.
//!
//! With transmission times, powers, and offload ratios fixed, the remaining
//! block optimizes the mode bits, amplification factors, phase shifts, and
//! CPU frequencies. The non-convexities are handled by a chain of standard
//! transformations, each exposed here as a checkable constraint object:
//!
//! - binary mode bits: relaxation to `[0, 1]` plus a concavity cut
//!   linearized at the previous iterate ([`relax_binary`])
//! - the product of mode bits and reflection coefficients: Big-M box
//!   coupling applied separately to real and imaginary parts
//!   ([`big_m_couple`])
//! - quadratic forms of the coefficient vectors: PSD lifting with a
//!   Schur-complement block and a linearized trace lower bound
//!   ([`psd_lift`])
//! - the amplified-noise quadratic: an SVD-based rewrite that is linear in
//!   the lifted matrix ([`svd_noise_form`])
//! - the rate's signal/noise coupling: exponential slack variables with the
//!   noise side linearized ([`exp_lower_bound`])
//! - passive-unit unit modulus: relaxed to a disc of radius `1 - alpha`
//!
//! [`subproblem`] assembles these into the per-slot convex program and
//! recovers RIS states from lifted solutions; [`backend`] defines the solver
//! contract and ships a desk-scale enumeration backend.

pub mod backend;
pub mod subproblem;

pub use backend::{SubproblemBackend, SurrogateBackend};
pub use subproblem::{assemble_subproblem, solve_and_recover, SlotProgram, Subproblem};

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::{CMatrix, CVector, C64};

/// Previous-iterate quantities the Taylor bounds expand around.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationPoint {
    /// Previous relaxed mode bits, in [0, 1].
    pub alpha_bar: Vec<f64>,
    /// Previous masked-coefficient vector.
    pub u_bar: CVector,
    /// Previous full coefficient vector with the trailing 1.
    pub o_bar: CVector,
    /// Previous noise slack exponent.
    pub v_bar: f64,
}

impl LinearizationPoint {
    pub fn validate(&self) -> Result<()> {
        for &a in &self.alpha_bar {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Domain(format!("alpha_bar {a} outside [0, 1]")));
            }
        }
        if !self.v_bar.is_finite() {
            return Err(Error::Domain("v_bar must be finite".into()));
        }
        Ok(())
    }
}

/// Decision variables of the lifted subproblem for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedVars {
    /// Masked coefficient vector (conjugated coefficients of active units).
    pub u: CVector,
    /// Lifted outer product of `u` (Hermitian PSD, N x N).
    pub u_mat: CMatrix,
    /// Coefficient vector with trailing 1 ((N+1)-vector).
    pub o: CVector,
    /// Lifted outer product of `o` (Hermitian PSD, (N+1) x (N+1)).
    pub o_mat: CMatrix,
    /// Signal-power slack exponent: feasible when signal >= e^{sig_exp}.
    pub sig_exp: f64,
    /// Noise-power slack exponent: feasible when noise <= linearized e^v.
    pub noise_exp: f64,
    /// Relaxed mode bits.
    pub alpha: Vec<f64>,
    /// CPU frequency (Hz).
    pub f_local: f64,
}

// ---------------------------------------------------------------------------
// Binary relaxation
// ---------------------------------------------------------------------------

/// Linearized binary constraint for one mode bit.
///
/// The exact reformulation is `alpha - alpha^2 <= 0` with `alpha` in `[0, 1]`;
/// the square is replaced by its tangent at `alpha_bar`, which keeps the
/// constraint convex and makes it an inner approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryRelaxation {
    pub alpha_bar: f64,
}

/// Build the linearized binary constraint pair for one unit.
pub fn relax_binary(alpha_bar: f64) -> Result<BinaryRelaxation> {
    if !(0.0..=1.0).contains(&alpha_bar) {
        return Err(Error::Domain(format!("alpha_bar {alpha_bar} outside [0, 1]")));
    }
    Ok(BinaryRelaxation { alpha_bar })
}

impl BinaryRelaxation {
    /// Tangent lower bound of `alpha^2` at the expansion point.
    pub fn square_lower_bound(&self, alpha: f64) -> f64 {
        self.alpha_bar * self.alpha_bar + 2.0 * self.alpha_bar * (alpha - self.alpha_bar)
    }

    /// Constraint value `alpha - bound` (feasible when <= 0).
    pub fn constraint_value(&self, alpha: f64) -> f64 {
        alpha - self.square_lower_bound(alpha)
    }

    /// Range margins for `0 <= alpha <= 1`.
    pub fn range_margins(&self, alpha: f64) -> (f64, f64) {
        (alpha, 1.0 - alpha)
    }
}

// ---------------------------------------------------------------------------
// Big-M coupling
// ---------------------------------------------------------------------------

/// Box constraints coupling the masked coefficients to the full coefficients
/// through the mode bits, applied separately to real and imaginary parts.
///
/// `alpha = 0` pins the masked coefficient to zero; `alpha = 1` pins it to
/// the coupled target value.
#[derive(Debug, Clone, PartialEq)]
pub struct BigMCoupling {
    /// Coupled target per unit (the assembler passes the conjugated
    /// coefficient so the masked vector matches its defining identity).
    pub target: Vec<C64>,
    pub alpha: Vec<f64>,
    pub rho_max: f64,
}

/// Build the Big-M constraint set.
///
/// Errors when `rho_max` cannot cover the attainable coefficient range.
pub fn big_m_couple(target: &[C64], alpha: &[f64], rho_max: f64) -> Result<BigMCoupling> {
    if target.len() != alpha.len() {
        return Err(Error::Dimension("target and alpha lengths differ".into()));
    }
    let needed = target
        .iter()
        .map(|c| c.re.abs().max(c.im.abs()))
        .fold(0.0f64, f64::max);
    if rho_max < needed {
        return Err(Error::ConstraintConstruction(format!(
            "Big-M constant {rho_max} below attainable coefficient component {needed}"
        )));
    }
    Ok(BigMCoupling {
        target: target.to_vec(),
        alpha: alpha.to_vec(),
        rho_max,
    })
}

impl BigMCoupling {
    /// Margins of the eight scalar inequalities for unit `n` at masked value
    /// `u_n` (>= 0 feasible): lower/upper target coupling and lower/upper
    /// zero coupling, for the real then imaginary part.
    pub fn margins(&self, n: usize, u_n: C64) -> [f64; 8] {
        let th = self.target[n];
        let a = self.alpha[n];
        let m = self.rho_max;
        let part = |x: f64, t: f64| -> [f64; 4] {
            [
                x - (t - (1.0 - a) * m), // target lower
                (t + (1.0 - a) * m) - x, // target upper
                x + a * m,               // zero lower
                a * m - x,               // zero upper
            ]
        };
        let re = part(u_n.re, th.re);
        let im = part(u_n.im, th.im);
        [re[0], re[1], re[2], re[3], im[0], im[1], im[2], im[3]]
    }

    /// Smallest margin over all units and inequalities.
    pub fn min_margin(&self, u: &CVector) -> f64 {
        (0..self.target.len())
            .flat_map(|n| self.margins(n, u[n]))
            .fold(f64::INFINITY, f64::min)
    }
}

// ---------------------------------------------------------------------------
// PSD lifting
// ---------------------------------------------------------------------------

/// Lift of a coefficient vector to its outer product: a Schur-complement PSD
/// block plus a trace upper bound linearized at the previous iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdLift {
    pub v_bar: CVector,
}

pub fn psd_lift(v_bar: &CVector) -> PsdLift {
    PsdLift { v_bar: v_bar.clone() }
}

impl PsdLift {
    /// Tangent lower bound of `||v||^2` at the expansion point:
    /// `-||v_bar||^2 + 2 Re tr(v_bar^H v)`.
    pub fn trace_lower_bound(&self, v: &CVector) -> f64 {
        -self.v_bar.norm_squared() + 2.0 * self.v_bar.dotc(v).re
    }

    /// Margin of the linearized trace bound `tr(M) <= bound` (>= 0 feasible).
    pub fn trace_bound_margin(&self, mat: &CMatrix, v: &CVector) -> f64 {
        self.trace_lower_bound(v) - mat.trace().re
    }

    /// Minimum eigenvalue of the Schur block `[[M, v], [v^H, 1]]`
    /// (>= 0 feasible).
    pub fn schur_margin(&self, mat: &CMatrix, v: &CVector) -> f64 {
        let n = v.len();
        let mut block = CMatrix::zeros(n + 1, n + 1);
        block.view_mut((0, 0), (n, n)).copy_from(mat);
        for i in 0..n {
            block[(i, n)] = v[i];
            block[(n, i)] = v[i].conj();
        }
        block[(n, n)] = C64::new(1.0, 0.0);
        SymmetricEigen::new(block)
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }
}

// ---------------------------------------------------------------------------
// Exponential slack linearization
// ---------------------------------------------------------------------------

/// First-order lower bound of `e^v` at `v_bar`: `e^{v_bar} (v - v_bar + 1)`.
pub fn exp_lower_bound(v: f64, v_bar: f64) -> f64 {
    v_bar.exp() * (v - v_bar + 1.0)
}

// ---------------------------------------------------------------------------
// SVD noise decomposition
// ---------------------------------------------------------------------------

/// Singular value decomposition of `H W H^H` used to rewrite the
/// amplified-noise quadratic linearly in the lifted matrix.
#[derive(Debug, Clone)]
pub struct SvdNoiseForm {
    /// Singular values.
    pub chi: Vec<f64>,
    /// Left singular vectors.
    pub left: Vec<CVector>,
    /// Right singular vectors.
    pub right: Vec<CVector>,
    /// Diagonal of `H W H^H` (the only part entering trace expressions).
    diag: Vec<f64>,
}

/// Decompose `H W H^H` with `W = w w^H`.
///
/// The product is Hermitian positive semidefinite, so its singular value
/// decomposition coincides with its eigendecomposition (left and right
/// vectors equal, singular values the nonnegative eigenvalues); the
/// Hermitian solver is used because it is accurate to machine precision on
/// complex inputs.
pub fn svd_noise_form(h_ris_ap: &CMatrix, beamformer: &CVector) -> SvdNoiseForm {
    let n = h_ris_ap.nrows();
    let hw = h_ris_ap * beamformer;
    let m = &hw * hw.adjoint();
    let eig = SymmetricEigen::new(m.clone());
    let mut chi = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for i in 0..n {
        chi.push(eig.eigenvalues[i]);
        let v = eig.eigenvectors.column(i).into_owned();
        left.push(v.clone());
        right.push(v);
    }
    let diag = (0..n).map(|i| m[(i, i)].re).collect();
    SvdNoiseForm { chi, left, right, diag }
}

impl SvdNoiseForm {
    /// Reconstruct `sum chi p q^H`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.diag.len();
        let mut m = CMatrix::zeros(n, n);
        for ((&chi, p), q) in self.chi.iter().zip(&self.left).zip(&self.right) {
            m += (p * q.adjoint()).scale(chi);
        }
        m
    }

    /// `tr(sum chi diag(p_n) U diag(q_n^H))`: the noise quadratic as a linear
    /// function of the lifted matrix diagonal.
    pub fn weighted_trace(&self, u_mat: &CMatrix) -> f64 {
        let n = self.diag.len();
        let mut total = C64::new(0.0, 0.0);
        for ((&chi, p), q) in self.chi.iter().zip(&self.left).zip(&self.right) {
            for m in 0..n {
                total += chi * p[m] * q[m].conj() * u_mat[(m, m)];
            }
        }
        total.re
    }

    /// Direct evaluation `tr(diag(u) H W H^H diag(u^H))` for a coefficient
    /// vector (the identity's left side).
    pub fn direct_noise(&self, u: &CVector) -> f64 {
        u.iter()
            .zip(self.diag.iter())
            .map(|(c, &d)| c.norm_sqr() * d)
            .sum()
    }
}

// ---------------------------------------------------------------------------
// Relaxed unit modulus
// ---------------------------------------------------------------------------

/// Margin of the relaxed passive unit-modulus constraint for unit `n`:
/// `(1 - alpha_n) - |o_n - conj(u_n)|` (>= 0 feasible).
///
/// Active units (`alpha = 1`) pin the lifted coefficient to the masked one;
/// passive units relax the unit circle to the unit disc.
pub fn relaxed_unit_modulus_margin(o_n: C64, u_n: C64, alpha_n: f64) -> f64 {
    (1.0 - alpha_n) - (o_n - u_n.conj()).norm()
}
