//! Closed-form limit covariances and their transport equations.

mod field;
mod halfspace;
mod kernel;
mod position;
mod sandwich;

pub use field::{euler_pde_residual, limit_field, ns_pde_residual, FieldAxis, LimitField};
pub use halfspace::{chi, halfspace_euler, halfspace_ns, halfspace_symbol};
pub use kernel::{
    bump_convolution, higher_correction, ns_correction, ns_kernel, ns_kernel_free, phase_integral, PhasePolynomial,
};
pub use position::{halfspace_limit_covariance, limit_covariance, LimitAnchor, PositionQuadrature};
pub use sandwich::{
    equilibrium_components, equilibrium_residual, euler_limit, euler_parts, sandwich, BandComponent, BandMatrix,
    EquilibriumResidual, EulerParts,
};

use crate::block::BlockCov;
use crate::dispersion::{spectral_data, third_derivatives, InteractionMatrix, SpectralOptions, SpectralPoint};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::profile::CovarianceProfile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Which limit formula to evaluate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LimitModel {
    /// Hyperbolic scaling, R^_0(r +- grad omega tau).
    Euler,
    /// Diffusive scaling with the stationary-phase kernel.
    NavierStokes { eps: f64 },
    /// Diffusive scaling with the kernel dropped: R^_0(r +- grad omega tau / eps).
    KernelFree { eps: f64 },
    /// Scaling tau / eps^order with the phase polynomial of that order, by quadrature.
    Higher { order: usize, eps: f64 },
}

impl LimitModel {
    fn validate(&self) -> Result<()> {
        match *self {
            LimitModel::Euler => Ok(()),
            LimitModel::NavierStokes { eps } | LimitModel::KernelFree { eps } | LimitModel::Higher { eps, .. } if !(eps > 0.0) => {
                Err(Error::InvalidParameter { name: "eps", reason: format!("{eps} must be positive") })
            }
            LimitModel::Higher { order, .. } if !(2..=3).contains(&order) => {
                Err(Error::Unsupported(format!("higher-order correction of order {order}; supported orders are 2 and 3")))
            }
            _ => Ok(()),
        }
    }

    /// Macroscopic drift time: the band shift is grad omega times this.
    pub fn drift_time(&self, tau: f64) -> f64 {
        match *self {
            LimitModel::Euler => tau,
            LimitModel::NavierStokes { eps } | LimitModel::KernelFree { eps } => tau / eps,
            LimitModel::Higher { order, eps } => tau / eps.powi(order as i32 - 1),
        }
    }
}

/// Per-band scalar weights (w+, w-) with A^+- = w+- q^_0(theta).
pub(crate) fn band_weights(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    model: LimitModel,
    sp: &SpectralPoint,
    tau: f64,
    r: &[f64],
) -> Result<Vec<(C64, C64)>> {
    model.validate()?;
    let t = profile.temperature();
    let drift = model.drift_time(tau);
    let shifted = |grad: &[f64], s: f64| -> Vec<f64> { r.iter().zip(grad).map(|(x, g)| x + s * g * drift).collect() };
    let mut out = Vec::with_capacity(sp.bands.len());
    for (sigma, b) in sp.bands.iter().enumerate() {
        let (xp, xm) = (shifted(&b.grad, 1.0), shifted(&b.grad, -1.0));
        let w = match model {
            LimitModel::Euler | LimitModel::KernelFree { .. } => (C64::new(t.value(&xp), 0.0), C64::new(t.value(&xm), 0.0)),
            LimitModel::NavierStokes { .. } => {
                (bump_convolution(t, &b.hess, tau, &xp, Branch::Plus), bump_convolution(t, &b.hess, tau, &xm, Branch::Minus))
            }
            LimitModel::Higher { order, eps } => {
                let third = if order >= 3 {
                    Some(third_derivatives(v, &sp.theta, sigma, 1e-3, &SpectralOptions::default())?)
                } else {
                    None
                };
                let poly = PhasePolynomial::new(tau, eps, order, &b.hess, third)?;
                (phase_integral(t, &poly, &xp, Branch::Plus)?, phase_integral(t, &poly, &xm, Branch::Minus)?)
            }
        };
        out.push(w);
    }
    Ok(out)
}

/// Full-space limit symbol for any model.
pub fn limit_symbol(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    model: LimitModel,
    tau: f64,
    r: &[f64],
    theta: &[f64],
) -> Result<BlockCov> {
    let sp = spectral_data(v, theta, &SpectralOptions::default())?;
    Ok(symbol_parts(v, profile, model, false, &sp, tau, r)?.q)
}

/// Sandwich parts at a precomputed spectral point, optionally with the half-space indicators.
pub(crate) fn symbol_parts(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    model: LimitModel,
    halfspace: bool,
    sp: &SpectralPoint,
    tau: f64,
    r: &[f64],
) -> Result<EulerParts> {
    let mut w = band_weights(v, profile, model, sp, tau, r)?;
    if halfspace {
        let drift = model.drift_time(tau);
        for ((wp, wm), b) in w.iter_mut().zip(&sp.bands) {
            let shift = b.grad[0] * drift;
            *wp *= chi(r[0], shift, Branch::Plus);
            *wm *= chi(r[0], shift, Branch::Minus);
        }
    }
    Ok(sandwich(sp, &profile.q0_hat(&sp.theta), &w))
}
