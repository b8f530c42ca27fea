use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::block::BlockCov;
use crate::dispersion::{fourier_symbol, ConditionStatus, InteractionMatrix};
use crate::dynamics::FieldState;
use crate::error::{Error, Result};
use crate::fft::TorusFft;
use crate::lattice::LatticeBox;
use crate::linalg::{block_diag, hermitian_eigen, hermitian_function, CMat, RMat, C64};

/// Macroscopic temperature profile T(r).
#[derive(Clone, Debug, PartialEq)]
pub enum TemperatureProfile {
    /// T(r) = value
    Constant { value: f64 },
    /// T(r) = 1 + amplitude * exp(-|r|^2 / width)
    GaussianBump { amplitude: f64, width: f64 },
}

impl TemperatureProfile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant { value } if !(value >= 0.0) || !value.is_finite() => {
                Err(Error::InvalidParameter { name: "T", reason: format!("constant {value} must be non-negative") })
            }
            Self::GaussianBump { amplitude, width } if !(amplitude >= 0.0) || !(width > 0.0) || !amplitude.is_finite() || !width.is_finite() => {
                Err(Error::InvalidParameter { name: "T", reason: format!("bump needs amplitude >= 0 and width > 0, got {amplitude}, {width}") })
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, r: &[f64]) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::GaussianBump { amplitude, width } => 1.0 + amplitude * (-r.iter().map(|x| x * x).sum::<f64>() / width).exp(),
        }
    }

    pub fn gradient(&self, r: &[f64]) -> Vec<f64> {
        match *self {
            Self::Constant { .. } => vec![0.0; r.len()],
            Self::GaussianBump { amplitude, width } => {
                let e = amplitude * (-r.iter().map(|x| x * x).sum::<f64>() / width).exp();
                r.iter().map(|x| -2.0 * x / width * e).collect()
            }
        }
    }

    /// Constant part of T, whose Fourier transform is a point mass at s = 0.
    pub fn baseline(&self) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::GaussianBump { .. } => 1.0,
        }
    }

    /// Fourier transform of T - baseline: integral of e^{i s.r} (T(r) - baseline) dr.
    pub fn smooth_transform(&self, s: &[f64]) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::GaussianBump { amplitude, width } => {
                let d = s.len() as f64;
                amplitude * (PI * width).powf(d / 2.0) * (-width * s.iter().map(|x| x * x).sum::<f64>() / 4.0).exp()
            }
        }
    }

    /// Radius beyond which the smooth transform is below 1e-18 of its peak.
    pub fn transform_cutoff(&self) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::GaussianBump { width, .. } => (4.0 * 18.0 * 10f64.ln() / width).sqrt(),
        }
    }
}

pub type DensityFn = Arc<dyn Fn(&[f64]) -> (CMat, CMat) + Send + Sync>;

/// Spectral densities q^_0^00(theta), q^_0^11(theta); cross terms are zero.
#[derive(Clone)]
pub enum SpectralDensity {
    Gibbs { v: InteractionMatrix, t0: f64 },
    Custom { label: String, n: usize, f: DensityFn },
}

impl fmt::Debug for SpectralDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gibbs { t0, .. } => write!(f, "Gibbs(T0 = {t0})"),
            Self::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Gibbs { t0: f64 },
    Custom(String),
}

impl SpectralDensity {
    pub fn components(&self) -> usize {
        match self {
            Self::Gibbs { v, .. } => v.components(),
            Self::Custom { n, .. } => *n,
        }
    }

    pub fn provenance(&self) -> Provenance {
        match self {
            Self::Gibbs { t0, .. } => Provenance::Gibbs { t0: *t0 },
            Self::Custom { label, .. } => Provenance::Custom(label.clone()),
        }
    }

    /// (q^00, q^11) at theta; entries are infinite where a Gibbs symbol is singular.
    pub fn eval(&self, theta: &[f64]) -> (CMat, CMat) {
        match self {
            Self::Gibbs { v, t0 } => {
                let n = v.components();
                let vhat = fourier_symbol(v, theta);
                let inv = if n == 1 {
                    let x = vhat[(0, 0)].re;
                    CMat::from_element(1, 1, C64::new(if x.abs() > 1e-300 { 1.0 / x } else { f64::INFINITY }, 0.0))
                } else {
                    vhat.try_inverse().unwrap_or_else(|| CMat::from_element(n, n, C64::new(f64::INFINITY, 0.0)))
                };
                (inv * C64::new(*t0, 0.0), CMat::identity(n, n) * C64::new(*t0, 0.0))
            }
            Self::Custom { f, .. } => f(theta),
        }
    }
}

/// Position-space q_0 on a box, computed by a midpoint rule in theta.
#[derive(Debug)]
struct Q0Table {
    lbox: LatticeBox,
    q00: Vec<RMat>,
    q11: Vec<RMat>,
    tail: f64,
    correlation_length: i64,
}

fn midpoint_theta(lbox: &LatticeBox, idx: usize) -> Vec<f64> {
    lbox.theta(idx).iter().zip(lbox.extent()).map(|(t, &l)| t + PI / l as f64).collect()
}

impl Q0Table {
    fn build(density: &SpectralDensity, lbox: &LatticeBox) -> Result<Self> {
        let n = density.components();
        let fft = TorusFft::new(lbox);
        let len = lbox.len();
        let mut grid00 = vec![vec![C64::new(0.0, 0.0); len]; n * n];
        let mut grid11 = vec![vec![C64::new(0.0, 0.0); len]; n * n];
        for idx in 0..len {
            let theta = midpoint_theta(lbox, idx);
            let (a, b) = density.eval(&theta);
            for (m, grid) in [(&a, &mut grid00), (&b, &mut grid11)] {
                if m.iter().any(|z| !z.is_finite()) {
                    return Err(Error::SingularSymbol { theta, what: "spectral density" });
                }
                let lo = hermitian_eigen(m).0[0];
                if lo < -1e-10 {
                    return Err(Error::NotPositive { theta, eigenvalue: lo });
                }
                for i in 0..n {
                    for j in 0..n {
                        grid[i * n + j][idx] = m[(i, j)];
                    }
                }
            }
        }
        let mut q00 = vec![RMat::zeros(n, n); len];
        let mut q11 = vec![RMat::zeros(n, n); len];
        let shift: Vec<f64> = lbox.extent().iter().map(|&l| PI / l as f64).collect();
        for (grid, out) in [(&mut grid00, &mut q00), (&mut grid11, &mut q11)] {
            for (c, buf) in grid.iter_mut().enumerate() {
                fft.from_symbol(buf);
                for (idx, val) in buf.iter().enumerate() {
                    let z = lbox.centered_coord(idx);
                    let phase: f64 = -z.iter().zip(&shift).map(|(&a, &b)| a as f64 * b).sum::<f64>();
                    out[idx][(c / n, c % n)] = (val * C64::from_polar(1.0, phase)).re;
                }
            }
        }
        let norm = |idx: usize| q00[idx].abs().max().max(q11[idx].abs().max());
        let total: f64 = (0..len).map(norm).sum();
        let quarter: Vec<i64> = lbox.extent().iter().map(|&l| (l / 4) as i64).collect();
        let mut tail = 0.0;
        let mut corr = 0i64;
        let peak = (0..len).map(norm).fold(0.0, f64::max);
        for idx in 0..len {
            let z = lbox.centered_coord(idx);
            let zinf = z.iter().map(|c| c.abs()).max().unwrap_or(0);
            if z.iter().zip(&quarter).any(|(c, q)| c.abs() >= *q) {
                tail += norm(idx);
            }
            if norm(idx) > 1e-15 * peak {
                corr = corr.max(zinf);
            }
        }
        let tail = if total > 0.0 { tail / total } else { 0.0 };
        Ok(Self { lbox: lbox.clone(), q00, q11, tail, correlation_length: corr })
    }
}

/// Initial-measure family: R_0(r, z) = T(r) q_0(z), Q_eps(z, z') = sqrt(T(eps z) T(eps z')) q_0(z - z').
#[derive(Clone, Debug)]
pub struct CovarianceProfile {
    temperature: TemperatureProfile,
    density: SpectralDensity,
    q0: Arc<Q0Table>,
}

pub fn default_q0_box(d: usize) -> LatticeBox {
    let l = match d {
        1 => 1024,
        2 => 128,
        _ => 32,
    };
    LatticeBox::cube(d, l).expect("positive extent")
}

fn density_dim(density: &SpectralDensity) -> Option<usize> {
    match density {
        SpectralDensity::Gibbs { v, .. } => Some(v.dim()),
        SpectralDensity::Custom { .. } => None,
    }
}

/// Gibbs spectral densities q^00 = T0 V^^{-1}, q^11 = T0 I with T = 1.
pub fn gibbs_spectral(v: &InteractionMatrix, t0: f64) -> Result<CovarianceProfile> {
    if !(t0 > 0.0) || !t0.is_finite() {
        return Err(Error::InvalidParameter { name: "T0", reason: format!("{t0} must be positive") });
    }
    let lbox = default_q0_box(v.dim());
    for idx in 0..lbox.len() {
        let theta = lbox.theta(idx);
        let (vals, _) = hermitian_eigen(&fourier_symbol(v, &theta));
        if vals[0] <= 1e-12 {
            return Err(Error::SingularSymbol { theta, what: "Gibbs measure" });
        }
    }
    product_profile(TemperatureProfile::Constant { value: 1.0 }, SpectralDensity::Gibbs { v: v.clone(), t0 })
}

/// Combines a temperature profile with spectral densities.
pub fn product_profile(temperature: TemperatureProfile, density: SpectralDensity) -> Result<CovarianceProfile> {
    let d = density_dim(&density).unwrap_or(1);
    product_profile_on(temperature, density, &default_q0_box(d))
}

/// As `product_profile`, with q_0 evaluated on the given box.
pub fn product_profile_on(temperature: TemperatureProfile, density: SpectralDensity, q0_box: &LatticeBox) -> Result<CovarianceProfile> {
    temperature.validate()?;
    if let Some(d) = density_dim(&density) {
        if d != q0_box.dim() {
            return Err(Error::InvalidBox(format!("q0 box dimension {} != lattice dimension {d}", q0_box.dim())));
        }
    }
    let q0 = Arc::new(Q0Table::build(&density, q0_box)?);
    Ok(CovarianceProfile { temperature, density, q0 })
}

impl CovarianceProfile {
    pub fn temperature(&self) -> &TemperatureProfile {
        &self.temperature
    }

    pub fn density(&self) -> &SpectralDensity {
        &self.density
    }

    pub fn provenance(&self) -> Provenance {
        self.density.provenance()
    }

    pub fn dim(&self) -> usize {
        self.q0.lbox.dim()
    }

    pub fn components(&self) -> usize {
        self.density.components()
    }

    /// Same densities with a different temperature profile.
    pub fn with_temperature(&self, temperature: TemperatureProfile) -> Result<Self> {
        temperature.validate()?;
        Ok(Self { temperature, density: self.density.clone(), q0: self.q0.clone() })
    }

    /// Relative l1 mass of q_0 beyond a quarter of the evaluation box.
    pub fn periodization_error(&self) -> f64 {
        self.q0.tail
    }

    /// Largest |z|_inf with |q_0(z)| above 1e-15 of its peak.
    pub fn correlation_length(&self) -> i64 {
        self.q0.correlation_length
    }

    /// blockdiag(q^00(theta), q^11(theta))
    pub fn q0_hat(&self, theta: &[f64]) -> BlockCov {
        let (a, b) = self.density.eval(theta);
        BlockCov::from_matrix(block_diag(&a, &b))
    }

    /// R^_0(r, theta) = T(r) q^_0(theta)
    pub fn r0_hat(&self, r: &[f64], theta: &[f64]) -> BlockCov {
        &self.q0_hat(theta) * self.temperature.value(r)
    }

    /// q_0(z) as a block matrix; zero outside the evaluation box window.
    pub fn q0(&self, z: &[i64]) -> BlockCov {
        let lbox = &self.q0.lbox;
        let n = self.components();
        let inside = z.iter().zip(lbox.extent()).all(|(c, &l)| c.abs() < (l / 2) as i64);
        if !inside {
            return BlockCov::zeros(n);
        }
        let idx = lbox.index_of(z);
        let a = self.q0.q00[idx].map(|x| C64::new(x, 0.0));
        let b = self.q0.q11[idx].map(|x| C64::new(x, 0.0));
        BlockCov::from_matrix(block_diag(&a, &b))
    }

    /// Relative l1 mass of q_0 at |z|_inf > radius, within the evaluation box.
    pub fn tail_mass(&self, radius: i64) -> f64 {
        let t = &self.q0;
        let norm = |idx: usize| t.q00[idx].abs().max().max(t.q11[idx].abs().max());
        let mut total = 0.0;
        let mut tail = 0.0;
        for idx in 0..t.lbox.len() {
            let w = norm(idx);
            total += w;
            if t.lbox.centered_coord(idx).iter().any(|c| c.abs() > radius) {
                tail += w;
            }
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }

    pub fn check_periodization(&self) -> Result<()> {
        if self.q0.tail > 1e-8 {
            return Err(Error::InvalidParameter {
                name: "q0_box",
                reason: format!("periodization tail {:e} exceeds 1e-8; enlarge the q0 box", self.q0.tail),
            });
        }
        Ok(())
    }
}

/// Q_eps(z, z') = sqrt(T(eps z) T(eps z')) q_0(z - z').
pub fn covariance_q(profile: &CovarianceProfile, eps: f64, z: &[i64], zp: &[i64]) -> BlockCov {
    let t = &profile.temperature;
    let r: Vec<f64> = z.iter().map(|&c| eps * c as f64).collect();
    let rp: Vec<f64> = zp.iter().map(|&c| eps * c as f64).collect();
    let diff: Vec<i64> = z.iter().zip(zp).map(|(a, b)| a - b).collect();
    &profile.q0(&diff) * (t.value(&r) * t.value(&rp)).sqrt()
}

/// Gaussian sampler for the product profile on a periodic box.
///
/// Site coordinates are taken as the centered representatives in [-L/2, L/2).
pub struct FieldSampler {
    lbox: LatticeBox,
    n: usize,
    fft: TorusFft,
    sqrt00: Vec<CMat>,
    sqrt11: Vec<CMat>,
    weight: Vec<f64>,
}

impl FieldSampler {
    pub fn new(profile: &CovarianceProfile, eps: f64, lbox: &LatticeBox) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter { name: "eps", reason: "must be positive".into() });
        }
        let n = profile.components();
        let mut sqrt00 = Vec::with_capacity(lbox.len());
        let mut sqrt11 = Vec::with_capacity(lbox.len());
        for idx in 0..lbox.len() {
            let theta = lbox.theta(idx);
            let (a, b) = profile.density.eval(&theta);
            for (m, out) in [(a, &mut sqrt00), (b, &mut sqrt11)] {
                if m.iter().any(|z| !z.is_finite()) {
                    return Err(Error::SingularSymbol { theta, what: "sampling density" });
                }
                let lo = hermitian_eigen(&m).0[0];
                if lo < -1e-10 {
                    return Err(Error::NotPositive { theta, eigenvalue: lo });
                }
                out.push(hermitian_function(&m, |l| C64::new(l.max(0.0).sqrt(), 0.0)));
            }
        }
        let weight = (0..lbox.len())
            .map(|idx| {
                let r: Vec<f64> = lbox.centered_coord(idx).iter().map(|&c| eps * c as f64).collect();
                profile.temperature.value(&r).sqrt()
            })
            .collect();
        Ok(Self { lbox: lbox.clone(), n, fft: TorusFft::new(lbox), sqrt00, sqrt11, weight })
    }

    /// Sample number `index` of the stream keyed by `seed`, with the largest discarded imaginary residue.
    pub fn sample_with_residue(&self, seed: u64, index: u64) -> (FieldState, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let len = self.lbox.len();
        let n = self.n;
        let mut out = FieldState::zeros(self.lbox.clone(), n, false);
        let mut residue: f64 = 0.0;
        for (part, roots) in [(0usize, &self.sqrt00), (1usize, &self.sqrt11)] {
            let mut hat: Vec<Vec<C64>> = (0..n)
                .map(|_| (0..len).map(|_| C64::new(StandardNormal.sample(&mut rng), 0.0)).collect())
                .collect();
            for buf in hat.iter_mut() {
                self.fft.to_symbol(buf);
            }
            let mut tmp = vec![C64::new(0.0, 0.0); n];
            for idx in 0..len {
                for i in 0..n {
                    tmp[i] = (0..n).map(|j| roots[idx][(i, j)] * hat[j][idx]).sum();
                }
                for i in 0..n {
                    hat[i][idx] = tmp[i];
                }
            }
            let dst = if part == 0 { &mut out.v0 } else { &mut out.v1 };
            for (k, buf) in hat.iter_mut().enumerate() {
                self.fft.from_symbol(buf);
                for s in 0..len {
                    residue = residue.max(buf[s].im.abs());
                    dst[s * n + k] = self.weight[s] * buf[s].re;
                }
            }
        }
        (out, residue)
    }

    pub fn sample(&self, seed: u64, index: u64) -> FieldState {
        self.sample_with_residue(seed, index).0
    }
}

/// One Gaussian sample of the product profile on a periodic box (stream index 0).
pub fn sample_field(profile: &CovarianceProfile, eps: f64, lbox: &LatticeBox, seed: u64) -> Result<FieldState> {
    Ok(FieldSampler::new(profile, eps, lbox)?.sample(seed, 0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileCondition {
    I1,
    I2,
    I3,
    I4,
    I4Prime,
    V1,
    V2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileEntry {
    pub condition: ProfileCondition,
    pub status: ConditionStatus,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileReport {
    pub entries: Vec<ProfileEntry>,
    /// Fitted power-law exponent of |q_0(z)| (large for exponential decay).
    pub decay_exponent: f64,
    /// Fitted exponential rate of |q_0(z)|.
    pub decay_rate: f64,
    /// Fitted power-law exponent of the Fourier transform of T (smooth part).
    pub fourier_exponent: f64,
}

impl ProfileReport {
    pub fn get(&self, c: ProfileCondition) -> &ProfileEntry {
        self.entries.iter().find(|e| e.condition == c).expect("every condition is reported")
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

fn pass_if(ok: bool) -> ConditionStatus {
    if ok {
        ConditionStatus::Pass
    } else {
        ConditionStatus::Fail
    }
}

/// Sampled diagnostics for I1-I4, I4', V1, V2 on the product construction.
pub fn verify_profile(profile: &CovarianceProfile, eps_list: &[f64]) -> ProfileReport {
    let d = profile.dim();
    let lbox = &profile.q0.lbox;
    let zmax = (lbox.extent()[0] / 4).min(64) as i64;
    let mag = |z: i64| {
        let mut c = vec![0i64; d];
        c[0] = z;
        profile.q0(&c).max_abs()
    };
    let q00 = mag(0);
    let mut xs_pow = Vec::new();
    let mut xs_exp = Vec::new();
    let mut ys = Vec::new();
    for z in 1..=zmax {
        let m = mag(z);
        if m <= 1e-13 * q00 {
            break;
        }
        xs_pow.push((1.0 + z as f64).ln());
        xs_exp.push(z as f64);
        ys.push(m.ln());
    }
    let (gamma, rate) = if ys.len() >= 3 {
        let half = ys.len() / 2;
        (-slope(&xs_pow[half..], &ys[half..]), -slope(&xs_exp[half..], &ys[half..]))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let i1 = gamma > d as f64;

    let mut min_eig = f64::INFINITY;
    for idx in 0..lbox.len().min(4096) {
        let theta = midpoint_theta(lbox, idx);
        let (a, b) = profile.density.eval(&theta);
        if a.iter().chain(b.iter()).all(|z| z.is_finite()) {
            min_eig = min_eig.min(hermitian_eigen(&a).0[0]).min(hermitian_eigen(&b).0[0]);
        }
    }
    let t = &profile.temperature;
    let psd = min_eig >= -1e-10 && t.validate().is_ok();

    let mut grad_sup: f64 = 0.0;
    for k in -400..=400 {
        let mut r = vec![0.0; d];
        r[0] = k as f64 * 0.025;
        grad_sup = grad_sup.max(t.gradient(&r).iter().fold(0.0, |a, g| a.max(g.abs())));
    }

    let mut sx = Vec::new();
    let mut sy = Vec::new();
    let peak = t.smooth_transform(&vec![0.0; d]).abs();
    for k in 1..=200 {
        let mut s = vec![0.0; d];
        s[0] = k as f64 * 0.25;
        let v = t.smooth_transform(&s).abs();
        if v <= 1e-300 || v <= 1e-200 * peak {
            break;
        }
        sx.push((1.0 + s[0]).ln());
        sy.push(v.ln());
    }
    let fourier_exponent = if peak == 0.0 || sy.len() < 3 { f64::INFINITY } else { -slope(&sx[sx.len() / 2..], &sy[sy.len() / 2..]) };
    let i4p = fourier_exponent > d as f64 + 3.0;

    let g_used = if i1 { gamma.min(2.0 * d as f64 + 2.0) } else { d as f64 };
    let mut v1_consts = Vec::new();
    let mut v2_consts = Vec::new();
    for &eps in eps_list {
        let (mut c1, mut c2): (f64, f64) = (0.0, 0.0);
        for base in (-40..=40).step_by(5) {
            for off in 0..=12i64 {
                let mut z = vec![0i64; d];
                z[0] = base;
                let mut zp = z.clone();
                zp[0] = base - off;
                let q = covariance_q(profile, eps, &z, &zp);
                let r: Vec<f64> = z.iter().map(|&c| eps * c as f64).collect();
                let r0 = &profile.q0(&[off].iter().copied().chain(std::iter::repeat(0).take(d - 1)).collect::<Vec<_>>()) * t.value(&r);
                let dz = off as f64;
                let bound = (1.0 + dz).powf(-g_used).min(eps * dz);
                let diff = q.max_abs_diff(&r0);
                if bound > 0.0 {
                    c1 = c1.max(diff / bound);
                } else if diff > 1e-14 {
                    c1 = f64::INFINITY;
                }
                c2 = c2.max(q.max_abs() * (1.0 + dz).powf(g_used));
            }
        }
        v1_consts.push(c1);
        v2_consts.push(c2);
    }
    let stable = |cs: &[f64]| cs.iter().all(|c| c.is_finite()) && cs.windows(2).all(|w| w[1] <= 2.0 * w[0] + 1e-12);
    let v1 = i1 && stable(&v1_consts);
    let v2 = i1 && stable(&v2_consts);
    let maxf = |cs: &[f64]| cs.iter().cloned().fold(0.0, f64::max);

    ProfileReport {
        entries: vec![
            ProfileEntry { condition: ProfileCondition::I1, status: pass_if(i1), margin: gamma - d as f64 },
            ProfileEntry { condition: ProfileCondition::I2, status: pass_if(psd), margin: min_eig },
            ProfileEntry { condition: ProfileCondition::I3, status: pass_if(psd), margin: min_eig },
            ProfileEntry { condition: ProfileCondition::I4, status: pass_if(grad_sup.is_finite()), margin: grad_sup },
            ProfileEntry { condition: ProfileCondition::I4Prime, status: pass_if(i4p), margin: fourier_exponent - (d as f64 + 3.0) },
            ProfileEntry { condition: ProfileCondition::V1, status: pass_if(v1), margin: maxf(&v1_consts) },
            ProfileEntry { condition: ProfileCondition::V2, status: pass_if(v2), margin: maxf(&v2_consts) },
        ],
        decay_exponent: gamma,
        decay_rate: rate,
        fourier_exponent,
    }
}
