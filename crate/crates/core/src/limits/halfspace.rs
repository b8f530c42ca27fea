use crate::block::BlockCov;
use crate::dispersion::{spectral_data, InteractionMatrix, SpectralOptions};
use crate::error::{Error, Result};
use crate::profile::CovarianceProfile;

use super::{symbol_parts, Branch, LimitModel};

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// (1 + sign(r1 +- shift)) / 2, equal to 1/2 on the coincidence set.
pub fn chi(r1: f64, shift: f64, branch: Branch) -> f64 {
    (1.0 + sign(r1 + branch.sign() * shift)) / 2.0
}

pub(crate) fn halfspace_symbol_any(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    model: LimitModel,
    tau: f64,
    r: &[f64],
    theta: &[f64],
) -> Result<BlockCov> {
    let sp = spectral_data(v, theta, &SpectralOptions::default())?;
    Ok(symbol_parts(v, profile, model, true, &sp, tau, r)?.q)
}

pub(crate) fn check_halfspace(v: &InteractionMatrix, r: &[f64]) -> Result<()> {
    if !v.symmetry_flag() {
        return Err(Error::ModelViolation);
    }
    match r.first() {
        Some(&r1) if r1 >= 0.0 => Ok(()),
        _ => Err(Error::InvalidQuery(format!("half-space limit needs r_1 >= 0, got {r:?}"))),
    }
}

/// Half-space symbol: the limit sandwich with A^+- weighted by chi^+-.
pub fn halfspace_symbol(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    model: LimitModel,
    tau: f64,
    r: &[f64],
    theta: &[f64],
) -> Result<BlockCov> {
    check_halfspace(v, r)?;
    halfspace_symbol_any(v, profile, model, tau, r, theta)
}

/// g^_{tau,r}(theta)
pub fn halfspace_euler(v: &InteractionMatrix, profile: &CovarianceProfile, tau: f64, r: &[f64], theta: &[f64]) -> Result<BlockCov> {
    halfspace_symbol(v, profile, LimitModel::Euler, tau, r, theta)
}

/// g^eps_{tau,r}(theta)
pub fn halfspace_ns(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    tau: f64,
    r: &[f64],
    theta: &[f64],
    eps: f64,
) -> Result<BlockCov> {
    halfspace_symbol(v, profile, LimitModel::NavierStokes { eps }, tau, r, theta)
}
