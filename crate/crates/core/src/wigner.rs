//! The complex field a(x), scaled Wigner matrices and their transport limits.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::block::BlockCov;
use crate::covariance::{integer_part, resolve_box, BoxPolicy, CovarianceTransport, ScaledQuery};
use crate::dispersion::{fourier_symbol, spectral_data, InteractionMatrix, SpectralOptions, SpectralPoint};
use crate::dynamics::{check_box, evolve, propagator_from_symbol, FieldState};
use crate::error::{Error, Result};
use crate::fft::TorusFft;
use crate::lattice::LatticeBox;
use crate::limits::{halfspace_euler, FieldAxis};
use crate::linalg::{hermitian_eigen, hermitian_function, max_abs, CMat, C64, I};
use crate::profile::{CovarianceProfile, FieldSampler};

/// V^^{p} on a box grid; fails where V^ is not positive definite.
fn symbol_power_grid(v: &InteractionMatrix, lbox: &LatticeBox, p: f64) -> Result<Vec<CMat>> {
    (0..lbox.len())
        .map(|idx| {
            let theta = lbox.theta(idx);
            let vhat = fourier_symbol(v, &theta);
            if hermitian_eigen(&vhat).0[0] <= 1e-12 {
                return Err(Error::SingularSymbol { theta, what: "fractional power" });
            }
            Ok(hermitian_function(&vhat, |l| C64::new(l.powf(p), 0.0)))
        })
        .collect()
}

/// a(x) = (Omega^{1/2} v0 + i Omega^{-1/2} v1) / sqrt 2 on the sites of a box.
#[derive(Clone, Debug)]
pub struct AField {
    lbox: LatticeBox,
    n: usize,
    half_space: bool,
    values: Vec<C64>,
}

impl AField {
    pub fn lattice(&self) -> &LatticeBox {
        &self.lbox
    }

    pub fn components(&self) -> usize {
        self.n
    }

    pub fn at_index(&self, site: usize) -> &[C64] {
        &self.values[site * self.n..(site + 1) * self.n]
    }

    /// a at a lattice point; periodic in the full space, odd across z_1 = 0 in the half-space.
    pub fn at(&self, coord: &[i64]) -> Vec<C64> {
        if self.half_space && coord[0] < 0 {
            let mut m = coord.to_vec();
            m[0] = -m[0];
            return self.at(&m).into_iter().map(|z| -z).collect();
        }
        self.at_index(self.lbox.index_of(coord)).to_vec()
    }

    /// sum_x |a(x)|^2
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum()
    }
}

fn apply_a(v: &InteractionMatrix, lbox: &LatticeBox, n: usize, v0: &[f64], v1: &[f64]) -> Result<Vec<C64>> {
    let up = symbol_power_grid(v, lbox, 0.25)?;
    let down = symbol_power_grid(v, lbox, -0.25)?;
    let fft = TorusFft::new(lbox);
    let len = lbox.len();
    let transform = |src: &[f64]| -> Vec<Vec<C64>> {
        (0..n)
            .map(|k| {
                let mut buf: Vec<C64> = (0..len).map(|s| C64::new(src[s * n + k], 0.0)).collect();
                fft.to_symbol(&mut buf);
                buf
            })
            .collect()
    };
    let (h0, h1) = (transform(v0), transform(v1));
    let scale = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut out: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); len]; n];
    for idx in 0..len {
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                acc += up[idx][(i, j)] * h0[j][idx] + I * down[idx][(i, j)] * h1[j][idx];
            }
            out[i][idx] = acc * scale;
        }
    }
    let mut values = vec![C64::new(0.0, 0.0); len * n];
    for (k, buf) in out.iter_mut().enumerate() {
        fft.from_symbol(buf);
        for s in 0..len {
            values[s * n + k] = buf[s];
        }
    }
    Ok(values)
}

/// The complex field of a state; the half-space version uses the image-symmetrized multipliers.
pub fn a_field(v: &InteractionMatrix, x: &FieldState) -> Result<AField> {
    let lbox = x.lattice().clone();
    let n = x.components();
    if n != v.components() {
        return Err(Error::InvalidParameter { name: "state", reason: "component count differs from V".into() });
    }
    if !x.is_half_space() {
        check_box(v, &lbox)?;
        let values = apply_a(v, &lbox, n, &x.v0, &x.v1)?;
        return Ok(AField { lbox, n, half_space: false, values });
    }
    if !v.symmetry_flag() {
        return Err(Error::ModelViolation);
    }
    let mut ext = lbox.extent().to_vec();
    ext[0] *= 2;
    let full = LatticeBox::new(ext)?;
    check_box(v, &full)?;
    let mut e0 = vec![0.0; full.len() * n];
    let mut e1 = vec![0.0; full.len() * n];
    for site in 0..lbox.len() {
        let z = lbox.coord_of(site);
        if z[0] == 0 {
            continue;
        }
        let mut m = z.clone();
        m[0] = -z[0];
        let (a, b) = (full.index_of(&z), full.index_of(&m));
        for k in 0..n {
            e0[a * n + k] = x.v0[site * n + k];
            e1[a * n + k] = x.v1[site * n + k];
            e0[b * n + k] = -x.v0[site * n + k];
            e1[b * n + k] = -x.v1[site * n + k];
        }
    }
    let ext_values = apply_a(v, &full, n, &e0, &e1)?;
    let mut values = vec![C64::new(0.0, 0.0); lbox.len() * n];
    for site in 0..lbox.len() {
        let z = lbox.coord_of(site);
        if z[0] == 0 {
            continue;
        }
        let a = full.index_of(&z);
        values[site * n..(site + 1) * n].copy_from_slice(&ext_values[a * n..(a + 1) * n]);
    }
    Ok(AField { lbox, n, half_space: true, values })
}

/// Placement of the site pair for separation y.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WignerConvention {
    /// [r/eps + y/2] and [r/eps - y/2].
    IntegerPart,
    /// [r/eps] + ceil(y/2) and [r/eps] - floor(y/2).
    EvenLattice,
}

/// |y|_inf <= y_max with a cosine taper over the outer `taper` fraction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WignerWindow {
    pub y_max: usize,
    pub taper: f64,
    pub tail_tol: f64,
}

impl WignerWindow {
    pub fn default_for(d: usize) -> Self {
        Self { y_max: if d == 1 { 64 } else { 16 }, taper: 0.1, tail_tol: 1e-6 }
    }

    fn weight1(&self, y: i64) -> f64 {
        let ymax = self.y_max as f64;
        let a = y.abs() as f64;
        let flat = (1.0 - self.taper) * ymax;
        if a <= flat {
            1.0
        } else if a >= ymax {
            0.0
        } else {
            0.5 * (1.0 + (PI * (a - flat) / (ymax - flat)).cos())
        }
    }

    fn weight(&self, y: &[i64]) -> f64 {
        y.iter().map(|&c| self.weight1(c)).product()
    }

    fn offsets(&self, d: usize) -> Vec<Vec<i64>> {
        let side = 2 * self.y_max + 1;
        (0..side.pow(d as u32))
            .map(|mut flat| {
                let mut y = vec![0i64; d];
                for a in (0..d).rev() {
                    y[a] = (flat % side) as i64 - self.y_max as i64;
                    flat /= side;
                }
                y
            })
            .collect()
    }
}

/// A scaled Wigner matrix request at (tau, r) on a list of angles; Euler scaling t = tau / eps.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerQuery {
    pub eps: f64,
    pub tau: f64,
    pub r: Vec<f64>,
    pub thetas: Vec<Vec<f64>>,
    pub convention: WignerConvention,
    pub window: WignerWindow,
    pub halfspace: bool,
}

impl WignerQuery {
    pub fn new(eps: f64, tau: f64, r: Vec<f64>, thetas: Vec<Vec<f64>>) -> Self {
        let window = WignerWindow::default_for(r.len());
        Self { eps, tau, r, thetas, convention: WignerConvention::IntegerPart, window, halfspace: false }
    }

    pub fn with_convention(mut self, convention: WignerConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn with_window(mut self, window: WignerWindow) -> Self {
        self.window = window;
        self
    }

    pub fn half_space(mut self) -> Self {
        self.halfspace = true;
        self
    }

    fn pair(&self, y: &[i64]) -> (Vec<i64>, Vec<i64>) {
        match self.convention {
            WignerConvention::IntegerPart => (
                self.r.iter().zip(y).map(|(&r, &c)| integer_part(r / self.eps + c as f64 / 2.0)).collect(),
                self.r.iter().zip(y).map(|(&r, &c)| integer_part(r / self.eps - c as f64 / 2.0)).collect(),
            ),
            WignerConvention::EvenLattice => {
                let base: Vec<i64> = self.r.iter().map(|&r| integer_part(r / self.eps)).collect();
                (
                    base.iter().zip(y).map(|(b, c)| b + c.div_euclid(2) + c.rem_euclid(2)).collect(),
                    base.iter().zip(y).map(|(b, c)| b - c.div_euclid(2)).collect(),
                )
            }
        }
    }

    fn validate(&self, v: &InteractionMatrix, profile: &CovarianceProfile) -> Result<()> {
        let d = v.dim();
        if self.r.len() != d || self.thetas.iter().any(|t| t.len() != d) {
            return Err(Error::InvalidQuery("r and theta must match the lattice dimension".into()));
        }
        if self.thetas.is_empty() {
            return Err(Error::InvalidQuery("no angles requested".into()));
        }
        if self.window.y_max < 2 || !(0.0..1.0).contains(&self.window.taper) {
            return Err(Error::InvalidParameter { name: "window", reason: "need y_max >= 2 and taper in [0, 1)".into() });
        }
        if self.halfspace {
            if !v.symmetry_flag() {
                return Err(Error::ModelViolation);
            }
            if self.r[0] < 0.0 {
                return Err(Error::InvalidQuery(format!("half-space query needs r_1 >= 0, got {}", self.r[0])));
            }
        }
        let radius = ((1.0 - self.window.taper) * self.window.y_max as f64).floor() as i64;
        let tail = profile.tail_mass(radius);
        if tail > self.window.tail_tol {
            return Err(Error::WindowTooSmall { tail, tol: self.window.tail_tol });
        }
        Ok(())
    }

    fn scaled_query(&self) -> Result<ScaledQuery> {
        let h = (self.window.y_max / 2 + 1) as i64;
        let d = self.r.len();
        ScaledQuery::new(self.tau, 1.0, self.r.clone(), vec![(vec![h; d], vec![-h; d])], self.eps)
    }
}

/// Which quantity a Wigner grid holds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WignerVariant {
    /// Monte Carlo estimate of the scaled Wigner matrix.
    Empirical { eps: f64 },
    /// The scaled Wigner matrix from exactly propagated covariances.
    Exact { eps: f64 },
    Initial,
    LimitFull,
    LimitHalf,
}

/// n x n complex matrices over (time, r, theta).
#[derive(Clone, Debug)]
pub struct WignerGrid {
    pub variant: WignerVariant,
    pub time: FieldAxis,
    pub space: Vec<FieldAxis>,
    pub thetas: Vec<Vec<f64>>,
    /// values[(time * n_space + space) * n_theta + theta]
    values: Vec<CMat>,
    stderr: Option<Vec<CMat>>,
    spectral: Vec<SpectralPoint>,
    source: Option<(InteractionMatrix, CovarianceProfile)>,
}

fn space_len(space: &[FieldAxis]) -> usize {
    space.iter().map(|a| a.count).product()
}

fn space_coord(space: &[FieldAxis], mut flat: usize) -> Vec<usize> {
    let mut out = vec![0; space.len()];
    for a in (0..space.len()).rev() {
        out[a] = flat % space[a].count;
        flat /= space[a].count;
    }
    out
}

fn space_index(space: &[FieldAxis], idx: &[usize]) -> usize {
    idx.iter().zip(space).fold(0, |acc, (&i, a)| acc * a.count + i)
}

impl WignerGrid {
    pub fn value(&self, time: usize, space: &[usize], theta: usize) -> &CMat {
        &self.values[(time * space_len(&self.space) + space_index(&self.space, space)) * self.thetas.len() + theta]
    }

    /// Standard errors (real and imaginary parts separately) for Monte Carlo grids.
    pub fn stderr(&self, time: usize, space: &[usize], theta: usize) -> Option<&CMat> {
        let k = (time * space_len(&self.space) + space_index(&self.space, space)) * self.thetas.len() + theta;
        self.stderr.as_ref().map(|s| &s[k])
    }

    pub fn values(&self) -> &[CMat] {
        &self.values
    }

    pub fn r_at(&self, space: &[usize]) -> Vec<f64> {
        space.iter().zip(&self.space).map(|(&i, a)| a.point(i)).collect()
    }

    /// Largest |W - W^*| over the grid.
    pub fn hermitian_defect(&self) -> f64 {
        self.values.iter().map(|w| max_abs(&(w - w.adjoint()))).fold(0.0, f64::max)
    }
}

fn single_point_axes(tau: f64, r: &[f64]) -> Result<(FieldAxis, Vec<FieldAxis>)> {
    let time = FieldAxis::new(tau, 1.0, 1)?;
    let space = r.iter().map(|&x| FieldAxis::new(x, 1.0, 1)).collect::<Result<Vec<_>>>()?;
    Ok((time, space))
}

/// Windowed sum_y w(y) e^{i theta.y} C(y) for every requested angle.
fn theta_sums(query: &WignerQuery, ys: &[Vec<i64>], corr: &[CMat]) -> Vec<CMat> {
    query
        .thetas
        .iter()
        .map(|theta| {
            let n = corr[0].nrows();
            let mut acc = CMat::zeros(n, n);
            for (y, c) in ys.iter().zip(corr) {
                let w = query.window.weight(y);
                if w == 0.0 {
                    continue;
                }
                let phase: f64 = theta.iter().zip(y).map(|(t, &k)| t * k as f64).sum();
                acc += c * C64::from_polar(w, phase);
            }
            acc
        })
        .collect()
}

/// Monte Carlo estimate of W^eps(tau, r; theta) over `nsamples` propagated Gaussian samples.
///
/// Sample `k` uses stream `k` of the generator keyed by `seed`; reductions run in sample order.
pub fn wigner_empirical(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    query: &WignerQuery,
    nsamples: usize,
    seed: u64,
) -> Result<WignerGrid> {
    query.validate(v, profile)?;
    if query.halfspace {
        return Err(Error::Unsupported("Monte Carlo Wigner matrices are implemented for the full space".into()));
    }
    if nsamples < 2 {
        return Err(Error::InvalidParameter { name: "nsamples", reason: format!("{nsamples} < 2") });
    }
    let sq = query.scaled_query()?;
    let lbox = resolve_box(v, profile, &sq)?;
    let sampler = FieldSampler::new(profile, query.eps, &lbox)?;
    symbol_power_grid(v, &lbox, 0.25)?;
    let t = sq.time();
    let n = v.components();
    let ys: Vec<Vec<i64>> = query.window.offsets(v.dim()).into_iter().filter(|y| query.window.weight(y) > 0.0).collect();
    let pairs: Vec<(Vec<i64>, Vec<i64>)> = ys.iter().map(|y| query.pair(y)).collect();
    let nt = query.thetas.len();
    let per_sample: Vec<Result<Vec<C64>>> = (0..nsamples as u64)
        .into_par_iter()
        .map(|k| {
            let x = evolve(v, &sampler.sample(seed, k), t)?;
            let a = a_field(v, &x)?;
            let corr: Vec<CMat> = pairs
                .iter()
                .map(|(x1, x2)| {
                    let (u, w) = (a.at(x1), a.at(x2));
                    CMat::from_fn(n, n, |i, j| u[i].conj() * w[j])
                })
                .collect();
            Ok(theta_sums(query, &ys, &corr).into_iter().flat_map(|m| m.iter().copied().collect::<Vec<_>>()).collect())
        })
        .collect();
    let width = nt * n * n;
    let mut sum = vec![C64::new(0.0, 0.0); width];
    let mut sq_re = vec![0.0; width];
    let mut sq_im = vec![0.0; width];
    for s in per_sample {
        for (k, z) in s?.into_iter().enumerate() {
            sum[k] += z;
            sq_re[k] += z.re * z.re;
            sq_im[k] += z.im * z.im;
        }
    }
    let s = nsamples as f64;
    let mut values = Vec::with_capacity(nt);
    let mut errors = Vec::with_capacity(nt);
    for th in 0..nt {
        let mut mean = CMat::zeros(n, n);
        let mut err = CMat::zeros(n, n);
        // nalgebra storage is column-major
        for (e, slot) in mean.iter_mut().enumerate() {
            *slot = sum[th * n * n + e] / s;
        }
        for (e, slot) in err.iter_mut().enumerate() {
            let k = th * n * n + e;
            let m = sum[k] / s;
            let vr = ((sq_re[k] - s * m.re * m.re) / (s - 1.0)).max(0.0);
            let vi = ((sq_im[k] - s * m.im * m.im) / (s - 1.0)).max(0.0);
            *slot = C64::new((vr / s).sqrt(), (vi / s).sqrt());
        }
        values.push(mean);
        errors.push(err);
    }
    let (time, space) = single_point_axes(query.tau, &query.r)?;
    Ok(WignerGrid {
        variant: WignerVariant::Empirical { eps: query.eps },
        time,
        space,
        thetas: query.thetas.clone(),
        values,
        stderr: Some(errors),
        spectral: Vec::new(),
        source: None,
    })
}

/// W^eps(tau, r; theta) from exactly propagated covariances of a.
pub fn wigner_exact(v: &InteractionMatrix, profile: &CovarianceProfile, query: &WignerQuery) -> Result<WignerGrid> {
    query.validate(v, profile)?;
    let mut sq = query.scaled_query()?;
    if query.halfspace {
        // sites with negative normal coordinate are images; size the box for both
        let lbox = resolve_box(v, profile, &sq)?;
        let mut ext = lbox.extent().to_vec();
        ext[0] *= 2;
        sq = sq.with_box(BoxPolicy::Fixed(ext));
    }
    let lbox = resolve_box(v, profile, &sq)?;
    let t = sq.time();
    let n = v.components();
    let up = symbol_power_grid(v, &lbox, 0.25)?;
    let down = symbol_power_grid(v, &lbox, -0.25)?;
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let symbols: Vec<CMat> = (0..lbox.len())
        .map(|idx| {
            let g = propagator_from_symbol(&fourier_symbol(v, &lbox.theta(idx)), t);
            let mut l = CMat::zeros(n, 2 * n);
            l.view_mut((0, 0), (n, n)).copy_from(&(&up[idx] * C64::new(scale, 0.0)));
            l.view_mut((0, n), (n, n)).copy_from(&(&down[idx] * (I * scale)));
            l * g
        })
        .collect();
    let transport = CovarianceTransport::new(profile, query.eps, &lbox, &symbols, query.halfspace);
    let ys: Vec<Vec<i64>> = query.window.offsets(v.dim()).into_iter().filter(|y| query.window.weight(y) > 0.0).collect();
    let pairs: Vec<(Vec<i64>, Vec<i64>)> = ys.iter().map(|y| query.pair(y)).collect();
    let corr = transport.pairs(&pairs);
    let values = theta_sums(query, &ys, &corr);
    let (time, space) = single_point_axes(query.tau, &query.r)?;
    Ok(WignerGrid {
        variant: WignerVariant::Exact { eps: query.eps },
        time,
        space,
        thetas: query.thetas.clone(),
        values,
        stderr: None,
        spectral: Vec::new(),
        source: None,
    })
}

fn band_power(sp: &SpectralPoint, p: f64) -> Result<CMat> {
    let n = sp.n();
    let mut out = CMat::zeros(n, n);
    for b in &sp.bands {
        if b.omega <= 1e-12 {
            return Err(Error::SingularSymbol { theta: sp.theta.clone(), what: "fractional power" });
        }
        out += &b.projector * C64::new(b.omega.powf(p), 0.0);
    }
    Ok(out)
}

/// 1/2 (O^{1/2} q00 O^{1/2} + O^{-1/2} q11 O^{-1/2} + i O^{1/2} q01 O^{-1/2} - i O^{-1/2} q10 O^{1/2}).
pub fn wigner_from_covariance(sp: &SpectralPoint, q: &BlockCov) -> Result<CMat> {
    let up = band_power(sp, 0.5)?;
    let down = band_power(sp, -0.5)?;
    let w = &up * q.block(0, 0) * &up + &down * q.block(1, 1) * &down + (&up * q.block(0, 1) * &down) * I
        - (&down * q.block(1, 0) * &up) * I;
    Ok(w * C64::new(0.5, 0.0))
}

/// W(0, r; theta) from R^_0(r, theta).
pub fn wigner_initial(v: &InteractionMatrix, profile: &CovarianceProfile, r: &[f64], theta: &[f64]) -> Result<CMat> {
    let sp = spectral_data(v, theta, &SpectralOptions::default())?;
    wigner_from_covariance(&sp, &profile.r0_hat(r, theta))
}

fn reflect(theta: &[f64]) -> Vec<f64> {
    let mut t = theta.to_vec();
    t[0] = -t[0];
    t
}

fn limit_at(
    profile: &CovarianceProfile,
    sp: &SpectralPoint,
    reflected: Option<&SpectralPoint>,
    tau: f64,
    r: &[f64],
) -> Result<CMat> {
    let n = sp.n();
    let mut out = CMat::zeros(n, n);
    for b in &sp.bands {
        let mut x: Vec<f64> = r.iter().zip(&b.grad).map(|(a, g)| a - tau * g).collect();
        let w0 = match reflected {
            Some(spr) if tau != 0.0 => {
                let edge = tau * b.grad[0];
                if r[0] == edge {
                    return Err(Error::CriticalSet { theta: sp.theta.clone(), reason: "r_1 = tau d_1 omega (coincidence set)".into() });
                }
                if r[0] > edge {
                    wigner_from_covariance(sp, &profile.r0_hat(&x, &sp.theta))?
                } else {
                    x[0] = -x[0];
                    wigner_from_covariance(spr, &profile.r0_hat(&x, &spr.theta))?
                }
            }
            _ => wigner_from_covariance(sp, &profile.r0_hat(&x, &sp.theta))?,
        };
        out += &b.projector * w0 * &b.projector;
    }
    Ok(out)
}

fn spectral_pair(v: &InteractionMatrix, theta: &[f64], halfspace: bool) -> Result<(SpectralPoint, Option<SpectralPoint>)> {
    let opts = SpectralOptions::default();
    let sp = spectral_data(v, theta, &opts)?;
    let spr = if halfspace { Some(spectral_data(v, &reflect(theta), &opts)?) } else { None };
    Ok((sp, spr))
}

/// W^p(tau, r; theta); the half-space version switches to the reflected angle behind the front.
pub fn wigner_limit(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    tau: f64,
    r: &[f64],
    theta: &[f64],
    halfspace: bool,
) -> Result<CMat> {
    if halfspace {
        if !v.symmetry_flag() {
            return Err(Error::ModelViolation);
        }
        if r[0] < 0.0 {
            return Err(Error::InvalidQuery(format!("half-space limit needs r_1 >= 0, got {}", r[0])));
        }
    }
    let (sp, spr) = spectral_pair(v, theta, halfspace)?;
    limit_at(profile, &sp, spr.as_ref(), tau, r)
}

fn build_grid(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    variant: WignerVariant,
    time: FieldAxis,
    space: Vec<FieldAxis>,
    thetas: &[Vec<f64>],
) -> Result<WignerGrid> {
    let halfspace = variant == WignerVariant::LimitHalf;
    if space.len() != v.dim() || thetas.iter().any(|t| t.len() != v.dim()) {
        return Err(Error::InvalidQuery(format!("grid needs {} space axes and angles of that dimension", v.dim())));
    }
    if halfspace {
        if !v.symmetry_flag() {
            return Err(Error::ModelViolation);
        }
        if space[0].start < 0.0 {
            return Err(Error::InvalidQuery("half-space grid needs r_1 >= 0".into()));
        }
    }
    let spectra = thetas.iter().map(|t| spectral_pair(v, t, halfspace)).collect::<Result<Vec<_>>>()?;
    let ns = space_len(&space);
    let nt = thetas.len();
    let values = (0..time.count * ns * nt)
        .into_par_iter()
        .map(|flat| {
            let th = flat % nt;
            let point = flat / nt;
            let tau = time.point(point / ns);
            let r: Vec<f64> = space_coord(&space, point % ns).iter().zip(&space).map(|(&i, a)| a.point(i)).collect();
            let (sp, spr) = &spectra[th];
            limit_at(profile, sp, spr.as_ref(), tau, &r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WignerGrid {
        variant,
        time,
        space,
        thetas: thetas.to_vec(),
        values,
        stderr: None,
        spectral: spectra.into_iter().map(|(sp, _)| sp).collect(),
        source: Some((v.clone(), profile.clone())),
    })
}

/// W^p on a (tau, r, theta) grid, full or half space.
pub fn wigner_limit_grid(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    halfspace: bool,
    time: FieldAxis,
    space: Vec<FieldAxis>,
    thetas: &[Vec<f64>],
) -> Result<WignerGrid> {
    let variant = if halfspace { WignerVariant::LimitHalf } else { WignerVariant::LimitFull };
    build_grid(v, profile, variant, time, space, thetas)
}

/// W(0, r; theta) on an (r, theta) grid.
pub fn wigner_initial_grid(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    space: Vec<FieldAxis>,
    thetas: &[Vec<f64>],
) -> Result<WignerGrid> {
    build_grid(v, profile, WignerVariant::Initial, FieldAxis::new(0.0, 1.0, 1)?, space, thetas)
}

/// Boundary values at r_1 = 0 against the prescribed b_sigma.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryReport {
    pub points: usize,
    /// Against b_sigma with the two cases of the sign of d_1 omega.
    pub mismatch: f64,
    /// Against W_sigma(0, tau |d_1 omega|, r_bar - tau grad_bar omega; theta).
    pub symmetric_mismatch: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportReport {
    /// max |d_tau f + grad omega . grad_r f| over interior stencils, all bands and angles.
    pub interior: f64,
    pub stencils: usize,
    pub boundary: Option<BoundaryReport>,
}

fn band_part(p: &CMat, w: &CMat) -> CMat {
    p * w * p
}

/// Central-difference residual of the energy transport equation, with the half-space boundary check.
pub fn transport_residual(grid: &WignerGrid) -> Result<TransportReport> {
    let halfspace = match grid.variant {
        WignerVariant::LimitFull => false,
        WignerVariant::LimitHalf => true,
        _ => return Err(Error::InvalidQuery("transport residual needs a limit grid".into())),
    };
    if grid.time.count < 3 || grid.space.iter().any(|a| a.count < 3) {
        return Err(Error::GridTooSmall("need at least 3 points per axis".into()));
    }
    let d = grid.space.len();
    let ns = space_len(&grid.space);
    let mut worst: f64 = 0.0;
    let mut stencils = 0;
    for (th, sp) in grid.spectral.iter().enumerate() {
        for b in &sp.bands {
            let f = |k: usize, idx: &[usize]| band_part(&b.projector, grid.value(k, idx, th));
            for k in 1..grid.time.count - 1 {
                for flat in 0..ns {
                    let idx = space_coord(&grid.space, flat);
                    if idx.iter().zip(&grid.space).any(|(&i, a)| i == 0 || i + 1 == a.count) {
                        continue;
                    }
                    if halfspace {
                        let side = |kk: usize, i: usize| {
                            let g = grid.space[0].point(i) - grid.time.point(kk) * b.grad[0];
                            if g > 0.0 {
                                1
                            } else if g < 0.0 {
                                -1
                            } else {
                                0
                            }
                        };
                        let s0 = side(k, idx[0]);
                        let crosses = [k - 1, k, k + 1]
                            .iter()
                            .any(|&kk| [idx[0] - 1, idx[0], idx[0] + 1].iter().any(|&i| side(kk, i) != s0));
                        if s0 == 0 || crosses {
                            continue;
                        }
                    }
                    let dt = (f(k + 1, &idx) - f(k - 1, &idx)) / C64::new(2.0 * grid.time.step, 0.0);
                    let mut res = dt;
                    for j in 0..d {
                        let (mut up, mut dn) = (idx.clone(), idx.clone());
                        up[j] += 1;
                        dn[j] -= 1;
                        res += (f(k, &up) - f(k, &dn)) * C64::new(b.grad[j] / (2.0 * grid.space[j].step), 0.0);
                    }
                    worst = worst.max(max_abs(&res));
                    stencils += 1;
                }
            }
        }
    }
    let boundary = if halfspace && grid.space[0].start == 0.0 { Some(boundary_report(grid)?) } else { None };
    Ok(TransportReport { interior: worst, stencils, boundary })
}

fn boundary_report(grid: &WignerGrid) -> Result<BoundaryReport> {
    let (v, profile) = grid.source.as_ref().ok_or_else(|| Error::InvalidQuery("grid carries no source data".into()))?;
    let ns = space_len(&grid.space);
    let opts = SpectralOptions::default();
    let mut report = BoundaryReport { points: 0, mismatch: 0.0, symmetric_mismatch: 0.0 };
    for (th, sp) in grid.spectral.iter().enumerate() {
        let spr = spectral_data(v, &reflect(&sp.theta), &opts)?;
        for k in 0..grid.time.count {
            let tau = grid.time.point(k);
            if tau <= 0.0 {
                continue;
            }
            for flat in 0..ns {
                let idx = space_coord(&grid.space, flat);
                if idx[0] != 0 {
                    continue;
                }
                let r = grid.r_at(&idx);
                for b in &sp.bands {
                    let g1 = b.grad[0];
                    if g1 == 0.0 {
                        continue;
                    }
                    let mut x: Vec<f64> = r.iter().zip(&b.grad).map(|(a, g)| a - tau * g).collect();
                    x[0] = tau * g1.abs();
                    let expected = if g1 < 0.0 {
                        wigner_from_covariance(sp, &profile.r0_hat(&x, &sp.theta))?
                    } else {
                        wigner_from_covariance(&spr, &profile.r0_hat(&x, &spr.theta))?
                    };
                    let symmetric = wigner_from_covariance(sp, &profile.r0_hat(&x, &sp.theta))?;
                    let got = band_part(&b.projector, grid.value(k, &idx, th));
                    report.mismatch = report.mismatch.max(max_abs(&(&got - band_part(&b.projector, &expected))));
                    report.symmetric_mismatch =
                        report.symmetric_mismatch.max(max_abs(&(&got - band_part(&b.projector, &symmetric))));
                    report.points += 1;
                }
            }
        }
    }
    Ok(report)
}

/// Largest violation of the relations between the Euler limit symbol and W^p.
///
/// Full space: O q^00 = O^{-1} q^11 = (W^p(theta) + W^p(-theta)^*) / 2 and
/// q^01 = -q^10 = -(i/2)(W^p(theta) - W^p(-theta)^*), plus W^p = W[q].
/// Half space: W^p_+ = W[g_{tau,r}(theta) + g_{tau,r~}(theta~)].
pub fn wigner_relation_residual(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    tau: f64,
    r: &[f64],
    theta: &[f64],
    halfspace: bool,
) -> Result<f64> {
    let opts = SpectralOptions::default();
    let sp = spectral_data(v, theta, &opts)?;
    let wp = wigner_limit(v, profile, tau, r, theta, halfspace)?;
    if halfspace {
        let mut rr = r.to_vec();
        rr[0] = -rr[0];
        let g = halfspace_euler(v, profile, tau, r, theta)?;
        let spr = spectral_data(v, &reflect(theta), &opts)?;
        let gr = crate::limits::symbol_parts(v, profile, crate::limits::LimitModel::Euler, true, &spr, tau, &rr)?.q;
        let q = BlockCov::from_matrix(g.matrix() + gr.matrix());
        return Ok(max_abs(&(wigner_from_covariance(&sp, &q)? - wp)));
    }
    let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
    let wm = wigner_limit(v, profile, tau, r, &neg, false)?.adjoint();
    let q = crate::limits::euler_limit(v, profile, tau, r, theta)?;
    let omega = band_power(&sp, 1.0)?;
    let omega_inv = band_power(&sp, -1.0)?;
    let half = C64::new(0.5, 0.0);
    let sym = (&wp + &wm) * half;
    let anti = (&wp - &wm) * (-I * 0.5);
    let checks = [
        max_abs(&(&omega * q.block(0, 0) - &sym)),
        max_abs(&(&omega_inv * q.block(1, 1) - &sym)),
        max_abs(&(q.block(0, 1) - &anti)),
        max_abs(&(q.block(0, 1) + q.block(1, 0))),
        max_abs(&(wigner_from_covariance(&sp, &q)? - &wp)),
    ];
    Ok(checks.iter().copied().fold(0.0, f64::max))
}
