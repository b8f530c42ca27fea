use crate::block::BlockCov;
use crate::dispersion::{spectral_data, InteractionMatrix, SpectralOptions, SpectralPoint};
use crate::error::{Error, Result};
use crate::linalg::{block_diag, hermitian_eigen, max_abs, max_abs_diff, CMat, C64, I};
use crate::profile::CovarianceProfile;

use super::{band_weights, LimitModel};

/// C = [[0, omega^{-1}], [-omega, 0]] on one band, in 2n x 2n block form.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    omega: f64,
    n: usize,
}

impl BandMatrix {
    pub fn new(omega: f64, n: usize) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidParameter { name: "omega", reason: format!("{omega} must be positive") });
        }
        Ok(Self { omega, n })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn matrix(&self) -> CMat {
        let n = self.n;
        let mut c = CMat::zeros(2 * n, 2 * n);
        for k in 0..n {
            c[(k, n + k)] = C64::new(1.0 / self.omega, 0.0);
            c[(n + k, k)] = C64::new(-self.omega, 0.0);
        }
        c
    }

    /// I + s i C for s = +-1.
    pub fn rotation(&self, s: f64) -> CMat {
        CMat::identity(2 * self.n, 2 * self.n) + self.matrix() * (I * s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandComponent {
    pub omega: f64,
    /// 1/4 P (I + iC) A^+ (I - iC*) P
    pub r_plus: BlockCov,
    /// 1/4 P (I - iC) A^- (I + iC*) P
    pub r_minus: BlockCov,
    /// f_sigma = P q P
    pub f: BlockCov,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EulerParts {
    pub q: BlockCov,
    pub m_plus: BlockCov,
    pub m_minus: BlockCov,
    pub bands: Vec<BandComponent>,
}

/// 1/4 sum_sigma P [(I + iC) w+ q0 (I - iC*) + (I - iC) w- q0 (I + iC*)] P with P = blockdiag(Pi, Pi).
pub fn sandwich(sp: &SpectralPoint, q0hat: &BlockCov, weights: &[(C64, C64)]) -> EulerParts {
    let n = sp.n();
    let r0 = q0hat.matrix();
    let mut m_plus = CMat::zeros(2 * n, 2 * n);
    let mut m_minus = CMat::zeros(2 * n, 2 * n);
    let mut bands = Vec::with_capacity(sp.bands.len());
    for (b, &(wp, wm)) in sp.bands.iter().zip(weights) {
        let p = block_diag(&b.projector, &b.projector);
        let c = BandMatrix { omega: b.omega, n };
        let (up, um) = (c.rotation(1.0), c.rotation(-1.0));
        let rp = &p * &up * (r0 * wp) * up.adjoint() * &p * C64::new(0.25, 0.0);
        let rm = &p * &um * (r0 * wm) * um.adjoint() * &p * C64::new(0.25, 0.0);
        m_plus += &rp;
        m_minus += &rm;
        let f = &rp + &rm;
        bands.push(BandComponent {
            omega: b.omega,
            r_plus: BlockCov::from_matrix(rp),
            r_minus: BlockCov::from_matrix(rm),
            f: BlockCov::from_matrix(f),
        });
    }
    let q = BlockCov::from_matrix(&m_plus + &m_minus);
    EulerParts { q, m_plus: BlockCov::from_matrix(m_plus), m_minus: BlockCov::from_matrix(m_minus), bands }
}

pub fn euler_parts(v: &InteractionMatrix, profile: &CovarianceProfile, tau: f64, r: &[f64], theta: &[f64]) -> Result<EulerParts> {
    let sp = spectral_data(v, theta, &SpectralOptions::default())?;
    let w = band_weights(v, profile, LimitModel::Euler, &sp, tau, r)?;
    Ok(sandwich(&sp, &profile.q0_hat(theta), &w))
}

/// Euler-scale limit q^_{tau,r}(theta).
pub fn euler_limit(v: &InteractionMatrix, profile: &CovarianceProfile, tau: f64, r: &[f64], theta: &[f64]) -> Result<BlockCov> {
    Ok(euler_parts(v, profile, tau, r, theta)?.q)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquilibriumResidual {
    /// |q11 - Omega^2 q00|
    pub omega_relation: f64,
    /// |q01 + q10|
    pub cross_relation: f64,
    /// |q_ii - q_ii*|
    pub hermiticity: f64,
    /// largest negative eigenvalue magnitude of the Hermitian parts of q_ii
    pub negative_part: f64,
}

impl EquilibriumResidual {
    /// The algebraic relations q11 = Omega^2 q00 and q01 = -q10.
    pub fn relations(&self) -> f64 {
        self.omega_relation.max(self.cross_relation)
    }

    pub fn total(&self) -> f64 {
        self.relations().max(self.hermiticity).max(self.negative_part)
    }
}

pub fn equilibrium_components(q: &BlockCov, sp: &SpectralPoint) -> EquilibriumResidual {
    let q00 = q.block(0, 0);
    let q11 = q.block(1, 1);
    let omega_relation = max_abs_diff(&q11, &(&sp.vhat * &q00));
    let cross_relation = max_abs(&(q.block(0, 1) + q.block(1, 0)));
    let mut hermiticity: f64 = 0.0;
    let mut negative_part: f64 = 0.0;
    for m in [&q00, &q11] {
        hermiticity = hermiticity.max(max_abs_diff(m, &m.adjoint()));
        let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
        negative_part = negative_part.max(-hermitian_eigen(&h).0[0]);
    }
    EquilibriumResidual { omega_relation, cross_relation, hermiticity, negative_part }
}

/// max of the four equilibrium defects.
pub fn equilibrium_residual(q: &BlockCov, sp: &SpectralPoint) -> f64 {
    equilibrium_components(q, sp).total()
}
