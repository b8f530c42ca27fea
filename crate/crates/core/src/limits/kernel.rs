use std::f64::consts::PI;

use nalgebra::SymmetricEigen;

use crate::block::BlockCov;
use crate::dispersion::InteractionMatrix;
use crate::error::{Error, Result};
use crate::linalg::{RMat, C64, I};
use crate::profile::{CovarianceProfile, TemperatureProfile};

use super::{limit_symbol, Branch, LimitModel};

fn symmetric_eigen(h: &RMat) -> (Vec<f64>, RMat) {
    let sym = (h + h.transpose()) * 0.5;
    let e = SymmetricEigen::new(sym);
    (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
}

/// Stationary-phase kernel K^+- = F^{-1}[exp(-+ i (tau/2) y.Hy)] at x, in closed form.
pub fn ns_kernel(tau: f64, hess: &RMat, x: &[f64], branch: Branch) -> Result<C64> {
    let d = x.len();
    if hess.nrows() != d || hess.ncols() != d {
        return Err(Error::InvalidParameter { name: "hess", reason: format!("expected {d} x {d}") });
    }
    if tau == 0.0 || !tau.is_finite() {
        return Err(Error::InvalidParameter { name: "tau", reason: "must be nonzero".into() });
    }
    let (vals, vecs) = symmetric_eigen(hess);
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    if vals.iter().any(|v| v.abs() <= 1e-12 * scale) || scale <= 1e-300 {
        return Err(Error::DegenerateHessian { det: vals.iter().product() });
    }
    // F^{-1}[exp(i beta y.Hy / 2)]
    let beta = -branch.sign() * tau;
    let signature: f64 = vals.iter().map(|v| v.signum()).sum();
    let det: f64 = vals.iter().product::<f64>().abs();
    let y = vecs.transpose() * nalgebra::DVector::from_column_slice(x);
    let quad: f64 = y.iter().zip(&vals).map(|(c, l)| c * c / l).sum();
    let modulus = (2.0 * PI * beta.abs()).powf(-(d as f64) / 2.0) / det.sqrt();
    let phase = PI * beta.signum() * signature / 4.0 - quad / (2.0 * beta);
    Ok(C64::from_polar(modulus, phase))
}

/// F^{-1}[T~(s) exp(-+ i (tau/2) s.Hs)](x): the profile smoothed by the kernel, in closed form.
///
/// Regular for every real symmetric H (the Gaussian factor keeps the integral convergent).
pub fn bump_convolution(t: &TemperatureProfile, hess: &RMat, tau: f64, x: &[f64], branch: Branch) -> C64 {
    match *t {
        TemperatureProfile::Constant { value } => C64::new(value, 0.0),
        TemperatureProfile::GaussianBump { amplitude, width } => {
            let (vals, vecs) = symmetric_eigen(hess);
            let y = vecs.transpose() * nalgebra::DVector::from_column_slice(x);
            let mut acc = C64::new(amplitude, 0.0);
            for (c, l) in y.iter().zip(&vals) {
                let mu = C64::new(width / 4.0, 0.0) + I * (branch.sign() * tau * l / 2.0);
                acc *= (width / 4.0).sqrt() / mu.sqrt() * (-(c * c) / (mu * 4.0)).exp();
            }
            acc + 1.0
        }
    }
}

/// Phase tau * sum_{p=2}^{order} eps^{p-order} d^p omega . s^p / p!.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePolynomial {
    tau: f64,
    eps: f64,
    order: usize,
    hess: RMat,
    third: Option<Vec<f64>>,
}

impl PhasePolynomial {
    pub fn new(tau: f64, eps: f64, order: usize, hess: &RMat, third: Option<Vec<f64>>) -> Result<Self> {
        if !(2..=3).contains(&order) {
            return Err(Error::Unsupported(format!("phase polynomial of order {order}")));
        }
        let d = hess.nrows();
        if order == 3 && third.as_ref().is_none_or(|t| t.len() != d * d * d) {
            return Err(Error::InvalidParameter { name: "third", reason: "order 3 needs the d^3 third-derivative tensor".into() });
        }
        Ok(Self { tau, eps, order, hess: hess.clone(), third: if order == 3 { third } else { None } })
    }

    pub fn dim(&self) -> usize {
        self.hess.nrows()
    }

    fn second_scale(&self) -> f64 {
        self.tau * self.eps.powi(2 - self.order as i32)
    }

    pub fn eval(&self, s: &[f64]) -> f64 {
        let d = s.len();
        let mut quad = 0.0;
        for j in 0..d {
            for l in 0..d {
                quad += self.hess[(j, l)] * s[j] * s[l];
            }
        }
        let mut out = self.second_scale() * quad / 2.0;
        if let Some(t3) = &self.third {
            let mut cub = 0.0;
            for j in 0..d {
                for l in 0..d {
                    for m in 0..d {
                        cub += t3[(j * d + l) * d + m] * s[j] * s[l] * s[m];
                    }
                }
            }
            out += self.tau * cub / 6.0;
        }
        out
    }

    /// Upper bound of |grad phase| on the ball of radius `radius`.
    fn slope_bound(&self, radius: f64) -> f64 {
        let h = self.hess.norm();
        let t3 = self.third.as_ref().map_or(0.0, |t| t.iter().map(|x| x * x).sum::<f64>().sqrt());
        self.tau.abs() * (self.eps.powi(2 - self.order as i32) * h * radius + t3 * radius * radius / 2.0)
    }
}

/// F^{-1}[T~(s) exp(-+ i phase(s))](x) by the trapezoid rule over the support of T~.
pub fn phase_integral(t: &TemperatureProfile, poly: &PhasePolynomial, x: &[f64], branch: Branch) -> Result<C64> {
    let d = poly.dim();
    if x.len() != d {
        return Err(Error::InvalidParameter { name: "x", reason: format!("expected {d} coordinates") });
    }
    let base = C64::new(t.baseline(), 0.0);
    let cutoff = t.transform_cutoff();
    if cutoff == 0.0 {
        return Ok(base);
    }
    if d > 2 {
        return Err(Error::Unsupported(format!("phase quadrature in dimension {d}")));
    }
    let xnorm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    let h = PI / (xnorm + poly.slope_bound(cutoff * (d as f64).sqrt()) + 20.0);
    let half = (cutoff / h).ceil() as i64;
    let nodes: Vec<f64> = (-half..=half).map(|k| k as f64 * h).collect();
    let sgn = branch.sign();
    let mut acc = C64::new(0.0, 0.0);
    let mut s = vec![0.0; d];
    let total = nodes.len().pow(d as u32);
    for flat in 0..total {
        let mut rem = flat;
        for c in s.iter_mut() {
            *c = nodes[rem % nodes.len()];
            rem /= nodes.len();
        }
        let amp = t.smooth_transform(&s);
        if amp == 0.0 {
            continue;
        }
        let dot: f64 = s.iter().zip(x).map(|(a, b)| a * b).sum();
        acc += C64::from_polar(amp, -dot - sgn * poly.eval(&s));
    }
    Ok(base + acc * (h / (2.0 * PI)).powi(d as i32))
}

/// Navier-Stokes-scale correction q^eps_{tau,r}(theta).
pub fn ns_correction(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    tau: f64,
    r: &[f64],
    theta: &[f64],
    eps: f64,
) -> Result<BlockCov> {
    limit_symbol(v, profile, LimitModel::NavierStokes { eps }, tau, r, theta)
}

/// The same sandwich with A^+- replaced by R^_0(r +- grad omega tau / eps).
pub fn ns_kernel_free(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    tau: f64,
    r: &[f64],
    theta: &[f64],
    eps: f64,
) -> Result<BlockCov> {
    limit_symbol(v, profile, LimitModel::KernelFree { eps }, tau, r, theta)
}

/// Order-k correction q^{eps,k}_{tau,r}(theta) for k in {2, 3}.
pub fn higher_correction(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    tau: f64,
    r: &[f64],
    theta: &[f64],
    eps: f64,
    order: usize,
) -> Result<BlockCov> {
    limit_symbol(v, profile, LimitModel::Higher { order, eps }, tau, r, theta)
}
