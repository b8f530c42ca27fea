//! Reference chain fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use lattice_hydro::covariance::OffsetPair;
use lattice_hydro::*;
use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BUMP: TemperatureProfile = TemperatureProfile::GaussianBump { amplitude: 0.5, width: 1.0 };

/// Nearest-neighbour chain, d = 1, n = 1, gamma = 1, m = 1.
pub fn chain() -> InteractionMatrix {
    build_nearest_neighbor(1, &[1.0], &[1.0]).unwrap()
}

/// Gibbs density at T0 = 1 with T(r) = 1 + 0.5 exp(-r^2).
pub fn bump_profile(v: &InteractionMatrix) -> CovarianceProfile {
    gibbs_spectral(v, 1.0).unwrap().with_temperature(BUMP).unwrap()
}

pub fn temperature(r: f64) -> f64 {
    1.0 + 0.5 * (-r * r).exp()
}

/// Chain dispersion written out by hand: omega = sqrt(2 gamma (1 - cos) + m^2).
pub fn omega(theta: f64) -> f64 {
    (3.0 - 2.0 * theta.cos()).sqrt()
}

pub fn omega_prime(theta: f64) -> f64 {
    theta.sin() / omega(theta)
}

pub fn omega_second(theta: f64) -> f64 {
    let w = omega(theta);
    theta.cos() / w - theta.sin().powi(2) / w.powi(3)
}

/// T_+ and T_- of the scalar reduction.
pub fn t_plus_minus(tau: f64, r: f64, theta: f64) -> (f64, f64) {
    let s = omega_prime(theta) * tau;
    let (a, b) = (temperature(r + s), temperature(r - s));
    (0.5 * (a + b), 0.5 * (a - b))
}

/// q_0^00(z) of the Gibbs chain: rho^|z| / sqrt(a^2 - 4) with a = 2 + m^2.
pub fn gibbs_q00(z: i64) -> f64 {
    let a = 3.0f64;
    let root = (a * a - 4.0).sqrt();
    let rho = (a - root) / 2.0;
    rho.powi(z.unsigned_abs() as i32) / root
}

pub fn all_pairs(lo: i64, hi: i64) -> Vec<OffsetPair> {
    (lo..=hi).flat_map(|a| (lo..=hi).map(move |b| (vec![a], vec![b]))).collect()
}

pub fn max_map_diff(a: &CovarianceMap, b: &CovarianceMap) -> f64 {
    a.iter().map(|(k, x)| x.max_abs_diff(&b[k])).fold(0.0, f64::max)
}

pub fn random_state(lbox: &LatticeBox, n: usize, seed: u64) -> FieldState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = lbox.len() * n;
    let v0 = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
    let v1 = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
    FieldState::new(lbox.clone(), n, v0, v1, false).unwrap()
}

/// Generator of the periodic dynamics in position space, state ordered (v0 sites, v1 sites), n = 1, d = 1.
pub fn chain_generator(v: &InteractionMatrix, l: usize) -> DMatrix<f64> {
    assert!(v.dim() == 1 && v.components() == 1);
    let mut a = DMatrix::zeros(2 * l, 2 * l);
    for x in 0..l {
        a[(x, l + x)] = 1.0;
        for (z, m) in v.support() {
            let y = (x as i64 - z[0]).rem_euclid(l as i64) as usize;
            a[(l + x, y)] -= m[(0, 0)];
        }
    }
    a
}

/// exp(A t) by the matrix exponential.
pub fn flow_matrix(v: &InteractionMatrix, l: usize, t: f64) -> DMatrix<f64> {
    (chain_generator(v, l) * t).exp()
}

/// Position-space V matrix of the periodic chain.
pub fn chain_potential(v: &InteractionMatrix, l: usize) -> DMatrix<f64> {
    let a = chain_generator(v, l);
    -a.view((l, 0), (l, l)).into_owned()
}

/// Symmetric matrix function through the real eigendecomposition.
pub fn symmetric_function(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let e = m.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(f));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

/// Periodic trapezoid rule on [-pi, pi).
pub fn torus_mean(m: usize, f: impl Fn(f64) -> f64) -> f64 {
    (0..m).map(|k| f(-PI + 2.0 * PI * (k as f64 + 0.5) / m as f64)).sum::<f64>() / m as f64
}

/// int_{-Y}^{Y} exp(i a y^2 - eta y^2 - i x y) dy by the trapezoid rule on the even part.
pub fn damped_fresnel(a: f64, x: f64, eta: f64) -> Complex<f64> {
    let ymax = (40.0 / eta).sqrt();
    let freq = 2.0 * a.abs() * ymax + x.abs() + 1.0;
    let h = (2.0 * PI / freq) / 12.0;
    let n = (ymax / h).ceil() as usize;
    let mut acc = Complex::new(0.5, 0.0);
    for k in 1..=n {
        let y = k as f64 * h;
        acc += Complex::from_polar((-eta * y * y).exp(), a * y * y) * (x * y).cos();
    }
    acc * (2.0 * h)
}

/// Extrapolates f(eta) to eta = 0 from eta, eta/2, eta/4, eta/8 (polynomial in eta).
pub fn richardson(f: impl Fn(f64) -> Complex<f64>, eta: f64) -> Complex<f64> {
    let mut t: Vec<Complex<f64>> = (0..4).map(|k| f(eta / 2f64.powi(k))).collect();
    for level in 1..4 {
        let p = 2f64.powi(level);
        for k in (level as usize..4).rev() {
            t[k] = (t[k] * p - t[k - 1]) / (p - 1.0);
        }
    }
    t[3]
}

/// Largest damping for which the expansion in eta / a converges fast, including the x^2 eta / a^2 term.
pub fn damping_start(a: f64, x: f64) -> f64 {
    4e-3f64.min(0.05 * a.abs()).min(0.2 * a * a / (x * x).max(1e-12))
}

/// F^{-1}[exp(-+ i (tau/2) y.Hy)](x) by rotating H to its eigenbasis and damping each 1-D factor.
pub fn kernel_oracle(tau: f64, hess: &DMatrix<f64>, x: &[f64], branch: Branch) -> Complex<f64> {
    let e = hess.clone().symmetric_eigen();
    let d = x.len();
    let xv = nalgebra::DVector::from_column_slice(x);
    let xr = e.eigenvectors.transpose() * xv;
    let mut out = Complex::new(1.0, 0.0);
    for k in 0..d {
        let a = -branch.sign() * tau / 2.0 * e.eigenvalues[k];
        out *= richardson(|eta| damped_fresnel(a, xr[k], eta), damping_start(a, xr[k])) / (2.0 * PI);
    }
    out
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

pub fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}
