//! Seeded channel generation.
//!
//! Distance-based path loss `a0 * (d/d0)^(-exponent)` with either Rayleigh
//! small-scale fading or unit-modulus line-of-sight phases. Channels are pure
//! functions of `(geometry, model, dims, seed, fading)`: each link draws from
//! its own derived stream, so realizations are identical no matter how many
//! trials run concurrently.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::{CMatrix, CVector, C64};

/// Circle for random user placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserCircle {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Node layout in the 2-D plane (meters).
///
/// Distances to users placed in the circle use plain Euclidean distance
/// between the stated 2-D coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub ap_position: [f64; 2],
    pub ris_position: [f64; 2],
    /// Explicit user positions; when absent, users are resampled from
    /// `user_circle` on every trial.
    #[serde(default)]
    pub user_positions: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub user_circle: Option<UserCircle>,
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        if let Some(c) = &self.user_circle {
            if c.radius < 0.0 {
                return Err(Error::Domain(format!("user circle radius {} < 0", c.radius)));
            }
        }
        if self.user_positions.is_none() && self.user_circle.is_none() {
            return Err(Error::Config(
                "geometry needs user_positions or user_circle".into(),
            ));
        }
        Ok(())
    }
}

/// Distance-based path-loss law `a0 * (d/d0)^(-exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    /// Linear reference gain at distance `d0`.
    pub a0: f64,
    /// Reference distance in meters.
    pub d0: f64,
    pub exponent_ap_ris: f64,
    pub exponent_ris_user: f64,
    pub exponent_ap_user: f64,
}

impl PathLossModel {
    pub fn validate(&self) -> Result<()> {
        if self.a0 <= 0.0 || self.d0 <= 0.0 {
            return Err(Error::Domain("path loss a0 and d0 must be > 0".into()));
        }
        if self.exponent_ap_ris <= 0.0
            || self.exponent_ris_user <= 0.0
            || self.exponent_ap_user <= 0.0
        {
            return Err(Error::Domain("path loss exponents must be > 0".into()));
        }
        Ok(())
    }
}

/// Small-scale fading kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fading {
    /// Unit-variance circularly symmetric complex Gaussian factor per entry.
    Rayleigh,
    /// Unit-modulus phase factor per entry (line of sight).
    Los,
}

/// System dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub k_users: usize,
    pub m_antennas: usize,
    pub n_units: usize,
}

/// One frame's channels for all users.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Direct user-AP channel per user (length M).
    pub h_direct: Vec<CVector>,
    /// User-RIS channel per user (length N).
    pub h_user_ris: Vec<CVector>,
    /// RIS-AP channel matrix (N x M).
    pub h_ris_ap: CMatrix,
    /// User positions actually used (explicit or sampled).
    pub user_positions: Vec<[f64; 2]>,
    /// Seed this realization was drawn from.
    pub seed: u64,
}

impl ChannelRealization {
    pub fn k_users(&self) -> usize {
        self.h_direct.len()
    }
    pub fn m_antennas(&self) -> usize {
        self.h_ris_ap.ncols()
    }
    pub fn n_units(&self) -> usize {
        self.h_ris_ap.nrows()
    }
}

/// Linear power gain at distance `d` for the given exponent.
///
/// Strictly decreasing in `d`; equals `a0` at `d = d0`.
pub fn path_loss_gain(d: f64, model: &PathLossModel, exponent: f64) -> Result<f64> {
    if d <= 0.0 {
        return Err(Error::Domain(format!("distance {d} must be > 0")));
    }
    Ok(model.a0 * (d / model.d0).powf(-exponent))
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn fading_factor<R: Rng>(fading: Fading, rng: &mut R) -> C64 {
    match fading {
        Fading::Rayleigh => {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        }
        Fading::Los => {
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            C64::from_polar(1.0, phase)
        }
    }
}

fn draw_vector<R: Rng>(len: usize, scale: f64, fading: Fading, rng: &mut R) -> CVector {
    CVector::from_iterator(len, (0..len).map(|_| scale * fading_factor(fading, rng)))
}

/// Sample one channel realization.
///
/// Entries are `sqrt(path loss gain)` times a unit-variance fading factor
/// (Rayleigh) or a unit-modulus phase (LoS). Identical `(geometry, model,
/// dims, seed, fading)` give bit-identical output.
pub fn sample_channels(
    geometry: &Geometry,
    model: &PathLossModel,
    dims: Dims,
    seed: u64,
    fading: Fading,
) -> Result<ChannelRealization> {
    geometry.validate()?;
    model.validate()?;
    if dims.k_users == 0 || dims.m_antennas == 0 {
        return Err(Error::Dimension("K and M must be > 0".into()));
    }

    let user_positions = resolve_user_positions(geometry, dims.k_users, seed)?;

    let gain_ris_ap = path_loss_gain(
        distance(geometry.ap_position, geometry.ris_position),
        model,
        model.exponent_ap_ris,
    )?;
    let ris_ap_scale = gain_ris_ap.sqrt();
    let mut rng_h = rng::derive_stream(seed, &[rng::LINK_RIS_AP]);
    let h_ris_ap = CMatrix::from_fn(dims.n_units, dims.m_antennas, |_, _| {
        ris_ap_scale * fading_factor(fading, &mut rng_h)
    });

    let mut h_direct = Vec::with_capacity(dims.k_users);
    let mut h_user_ris = Vec::with_capacity(dims.k_users);
    for (k, pos) in user_positions.iter().enumerate() {
        let gain_d = path_loss_gain(
            distance(*pos, geometry.ap_position),
            model,
            model.exponent_ap_user,
        )?;
        let gain_r = path_loss_gain(
            distance(*pos, geometry.ris_position),
            model,
            model.exponent_ris_user,
        )?;
        let mut rng_d = rng::derive_stream(seed, &[rng::LINK_DIRECT, k as u64]);
        let mut rng_r = rng::derive_stream(seed, &[rng::LINK_USER_RIS, k as u64]);
        h_direct.push(draw_vector(dims.m_antennas, gain_d.sqrt(), fading, &mut rng_d));
        h_user_ris.push(draw_vector(dims.n_units, gain_r.sqrt(), fading, &mut rng_r));
    }

    Ok(ChannelRealization {
        h_direct,
        h_user_ris,
        h_ris_ap,
        user_positions,
        seed,
    })
}

fn resolve_user_positions(geometry: &Geometry, k_users: usize, seed: u64) -> Result<Vec<[f64; 2]>> {
    if let Some(pos) = &geometry.user_positions {
        if pos.len() != k_users {
            return Err(Error::Dimension(format!(
                "{} user positions given for K={k_users}",
                pos.len()
            )));
        }
        return Ok(pos.clone());
    }
    let circle = geometry.user_circle.as_ref().expect("validated");
    let mut out = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let mut r = rng::derive_stream(seed, &[rng::LINK_PLACEMENT, k as u64]);
        // Uniform over the disc.
        let radius = circle.radius * r.random::<f64>().sqrt();
        let angle: f64 = r.random_range(0.0..std::f64::consts::TAU);
        out.push([
            circle.center[0] + radius * angle.cos(),
            circle.center[1] + radius * angle.sin(),
        ]);
    }
    Ok(out)
}

/// Element-wise minimum magnitudes of the RIS-AP and user-RIS channels.
///
/// Only defined for the single-antenna AP (the conservative bound used by the
/// closed-form solvers); M > 1 is an unsupported configuration.
pub fn min_gains(realization: &ChannelRealization, user: usize) -> Result<(f64, f64)> {
    if realization.m_antennas() != 1 {
        return Err(Error::UnsupportedConfiguration(format!(
            "min gains need M=1, got M={}",
            realization.m_antennas()
        )));
    }
    if user >= realization.k_users() {
        return Err(Error::Dimension(format!("user {user} out of range")));
    }
    let h = realization.h_ris_ap.column(0);
    let h_r = &realization.h_user_ris[user];
    let g_h = h
        .iter()
        .map(|c| c.norm())
        .fold(f64::INFINITY, f64::min);
    let g_r = h_r
        .iter()
        .map(|c| c.norm())
        .fold(f64::INFINITY, f64::min);
    Ok((g_h, g_r))
}
