//! Limit energy density and current, the continuity law, and locally conserved quantities.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::block::BlockCov;
use crate::covariance::{propagate_covariance, OffsetPair, ScaledQuery};
use crate::dispersion::{spectral_data, symbol_gradient, InteractionMatrix, SpectralOptions, SpectralPoint};
use crate::error::{Error, Result};
use crate::limits::FieldAxis;
use crate::linalg::{max_abs, CMat, C64, I};
use crate::profile::CovarianceProfile;

/// Periodic trapezoid rule on the torus: nodes -pi + 2 pi k / m per axis, weight m^{-d}
/// (the normalization (2 pi)^{-d} is included).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ThetaQuadrature {
    pub points_per_axis: usize,
}

impl ThetaQuadrature {
    pub fn new(points_per_axis: usize) -> Result<Self> {
        if points_per_axis < 4 {
            return Err(Error::GridTooSmall(format!("{points_per_axis} theta points per axis")));
        }
        Ok(Self { points_per_axis })
    }

    pub fn default_for(d: usize) -> Self {
        Self { points_per_axis: if d == 1 { 256 } else { 64 } }
    }

    pub fn nodes(&self, d: usize) -> Vec<Vec<f64>> {
        let m = self.points_per_axis;
        (0..m.pow(d as u32))
            .map(|mut flat| {
                let mut th = vec![0.0; d];
                for a in (0..d).rev() {
                    th[a] = -PI + 2.0 * PI * (flat % m) as f64 / m as f64;
                    flat /= m;
                }
                th
            })
            .collect()
    }

    pub fn weight(&self, d: usize) -> f64 {
        (self.points_per_axis as f64).powi(-(d as i32))
    }
}

/// Spectral points of the quadrature; cells on the critical set are dropped and counted.
fn quadrature_points(v: &InteractionMatrix, grid: &ThetaQuadrature) -> Result<(Vec<SpectralPoint>, f64)> {
    let d = v.dim();
    let w = grid.weight(d);
    let opts = SpectralOptions::default();
    let results: Vec<Result<Option<SpectralPoint>>> = grid
        .nodes(d)
        .into_par_iter()
        .map(|th| match spectral_data(v, &th, &opts) {
            Ok(sp) => Ok(Some(sp)),
            Err(Error::CriticalSet { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();
    let mut points = Vec::new();
    let mut excluded = 0.0;
    for r in results {
        match r? {
            Some(sp) => points.push(sp),
            None => excluded += w,
        }
    }
    Ok((points, excluded))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyDensity {
    /// (2 pi)^{-d} tr int q^11 d theta
    pub value: f64,
    /// (2 pi)^{-d} tr int (q^11 + q^00 V^*) / 2 d theta
    pub two_term: f64,
    /// Normalized measure of the dropped critical cells.
    pub excluded: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyCurrent {
    pub value: Vec<f64>,
    pub excluded: f64,
}

fn density_at(v: &InteractionMatrix, profile: &CovarianceProfile, pts: &[SpectralPoint], tau: f64, r: &[f64], w: f64) -> Result<(f64, f64)> {
    let mut one = 0.0;
    let mut two = 0.0;
    for sp in pts {
        let q = euler_at(v, profile, sp, tau, r)?;
        let q11 = q.block(1, 1);
        one += q11.trace().re;
        two += 0.5 * (q11 + q.block(0, 0) * sp.vhat.adjoint()).trace().re;
    }
    Ok((one * w, two * w))
}

fn euler_at(v: &InteractionMatrix, profile: &CovarianceProfile, sp: &SpectralPoint, tau: f64, r: &[f64]) -> Result<BlockCov> {
    Ok(crate::limits::symbol_parts(v, profile, crate::limits::LimitModel::Euler, false, sp, tau, r)?.q)
}

fn current_at(v: &InteractionMatrix, profile: &CovarianceProfile, pts: &[SpectralPoint], tau: f64, r: &[f64], w: f64) -> Result<Vec<f64>> {
    let d = v.dim();
    let mut out = vec![0.0; d];
    for sp in pts {
        let q10 = euler_at(v, profile, sp, tau, r)?.block(1, 0);
        for (k, dv) in symbol_gradient(v, &sp.theta).iter().enumerate() {
            out[k] += (-I * 0.5 * (&q10 * dv).trace()).re;
        }
    }
    Ok(out.into_iter().map(|x| x * w).collect())
}

/// e(tau, r) by the periodic trapezoid rule, in both displayed forms.
pub fn energy_density_limit(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    tau: f64,
    r: &[f64],
    grid: &ThetaQuadrature,
) -> Result<EnergyDensity> {
    let (pts, excluded) = quadrature_points(v, grid)?;
    let (value, two_term) = density_at(v, profile, &pts, tau, r, grid.weight(v.dim()))?;
    Ok(EnergyDensity { value, two_term, excluded })
}

/// j_k(tau, r) = -(i/2)(2 pi)^{-d} tr int q^10 d_k V^ d theta.
pub fn energy_current_limit(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    tau: f64,
    r: &[f64],
    grid: &ThetaQuadrature,
) -> Result<EnergyCurrent> {
    let (pts, excluded) = quadrature_points(v, grid)?;
    let value = current_at(v, profile, &pts, tau, r, grid.weight(v.dim()))?;
    Ok(EnergyCurrent { value, excluded })
}

/// max over interior points of |d_tau e + div_r j| by central differences.
pub fn continuity_residual(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    time: FieldAxis,
    space: &[FieldAxis],
    grid: &ThetaQuadrature,
) -> Result<f64> {
    let d = v.dim();
    if space.len() != d {
        return Err(Error::InvalidQuery(format!("space grid needs {d} axes")));
    }
    if time.count < 3 || space.iter().any(|a| a.count < 3) {
        return Err(Error::GridTooSmall("need at least 3 points per axis".into()));
    }
    let (pts, _) = quadrature_points(v, grid)?;
    let w = grid.weight(d);
    let ns: usize = space.iter().map(|a| a.count).product();
    let coord = |mut flat: usize| {
        let mut idx = vec![0usize; d];
        for a in (0..d).rev() {
            idx[a] = flat % space[a].count;
            flat /= space[a].count;
        }
        idx
    };
    let point = |idx: &[usize]| -> Vec<f64> { idx.iter().zip(space).map(|(&i, a)| a.point(i)).collect() };
    let interior: Vec<(usize, Vec<usize>)> = (1..time.count - 1)
        .flat_map(|k| (0..ns).map(move |f| (k, f)))
        .map(|(k, f)| (k, coord(f)))
        .filter(|(_, idx)| idx.iter().zip(space).all(|(&i, a)| i > 0 && i + 1 < a.count))
        .collect();
    let residuals = interior
        .par_iter()
        .map(|(k, idx)| {
            let r = point(idx);
            let e_up = density_at(v, profile, &pts, time.point(k + 1), &r, w)?.0;
            let e_dn = density_at(v, profile, &pts, time.point(k - 1), &r, w)?.0;
            let mut res = (e_up - e_dn) / (2.0 * time.step);
            let tau = time.point(*k);
            for j in 0..d {
                let (mut up, mut dn) = (idx.clone(), idx.clone());
                up[j] += 1;
                dn[j] -= 1;
                let ju = current_at(v, profile, &pts, tau, &point(&up), w)?[j];
                let jd = current_at(v, profile, &pts, tau, &point(&dn), w)?[j];
                res += (ju - jd) / (2.0 * space[j].step);
            }
            Ok(res.abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

/// Average microscopic energy at the site [r / eps] at time tau / eps, from propagated covariances.
pub fn micro_energy(v: &InteractionMatrix, profile: &CovarianceProfile, tau: f64, r: &[f64], eps: f64) -> Result<f64> {
    let d = v.dim();
    let zero = vec![0i64; d];
    let mut offsets: Vec<OffsetPair> = vec![(zero.clone(), zero.clone())];
    let support: Vec<(Vec<i64>, crate::linalg::RMat)> = v.support().map(|(z, m)| (z.clone(), m.clone())).collect();
    for (w, _) in &support {
        offsets.push((zero.clone(), w.iter().map(|c| -c).collect()));
    }
    let q = propagate_covariance(v, profile, &ScaledQuery::new(tau, 1.0, r.to_vec(), offsets, eps)?)?;
    let mut e = q[&(zero.clone(), zero.clone())].block(1, 1).trace().re;
    for (w, m) in &support {
        let q00 = q[&(zero.clone(), w.iter().map(|c| -c).collect())].block(0, 0);
        // tr[Q^00(x, x - w) V(w)^T]
        e += q00.iter().zip(m.iter()).map(|(a, b)| a.re * b).sum::<f64>();
    }
    Ok(0.5 * e)
}

/// Named test functions with a quadrature box.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    /// exp(-|r - c|^2 / w^2), truncated at 6.5 w.
    GaussianBump { center: Vec<f64>, width: f64 },
    /// exp(-1 / (1 - |r - c|^2 / R^2)) inside the ball of radius R.
    CompactBump { center: Vec<f64>, radius: f64 },
}

impl TestFunction {
    pub fn validate(&self, d: usize) -> Result<()> {
        let (c, s) = match self {
            TestFunction::GaussianBump { center, width } => (center, *width),
            TestFunction::CompactBump { center, radius } => (center, *radius),
        };
        if c.len() != d {
            return Err(Error::InvalidParameter { name: "phi", reason: format!("center must have {d} coordinates") });
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter { name: "phi", reason: format!("scale {s} must be positive") });
        }
        Ok(())
    }

    pub fn center(&self) -> &[f64] {
        match self {
            TestFunction::GaussianBump { center, .. } | TestFunction::CompactBump { center, .. } => center,
        }
    }

    /// Half-width of the box outside which phi is treated as zero.
    pub fn support_radius(&self) -> f64 {
        match self {
            TestFunction::GaussianBump { width, .. } => 6.5 * width,
            TestFunction::CompactBump { radius, .. } => *radius,
        }
    }

    fn offset(&self, r: &[f64]) -> Vec<f64> {
        r.iter().zip(self.center()).map(|(a, b)| a - b).collect()
    }

    pub fn value(&self, r: &[f64]) -> f64 {
        let x = self.offset(r);
        let s2: f64 = x.iter().map(|a| a * a).sum();
        match self {
            TestFunction::GaussianBump { width, .. } => (-s2 / (width * width)).exp(),
            TestFunction::CompactBump { radius, .. } => {
                let u = s2 / (radius * radius);
                if u < 1.0 {
                    (-1.0 / (1.0 - u)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn gradient(&self, r: &[f64]) -> Vec<f64> {
        let x = self.offset(r);
        let s2: f64 = x.iter().map(|a| a * a).sum();
        let factor = match self {
            TestFunction::GaussianBump { width, .. } => -2.0 / (width * width) * self.value(r),
            TestFunction::CompactBump { radius, .. } => {
                let u = s2 / (radius * radius);
                if u < 1.0 {
                    -2.0 / (radius * radius * (1.0 - u).powi(2)) * self.value(r)
                } else {
                    0.0
                }
            }
        };
        x.iter().map(|a| factor * a).collect()
    }
}

/// Trapezoid rule in r over the support box of the test function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RQuadrature {
    pub points_per_axis: usize,
}

impl RQuadrature {
    pub fn default_for(d: usize) -> Self {
        Self { points_per_axis: if d == 1 { 801 } else { 161 } }
    }

    fn nodes(&self, phi: &TestFunction) -> (Vec<Vec<f64>>, f64) {
        let d = phi.center().len();
        let m = self.points_per_axis;
        let half = phi.support_radius();
        let h = 2.0 * half / (m - 1) as f64;
        let nodes = (0..m.pow(d as u32))
            .map(|mut flat| {
                let mut r = vec![0.0; d];
                for a in (0..d).rev() {
                    r[a] = phi.center()[a] - half + h * (flat % m) as f64;
                    flat /= m;
                }
                r
            })
            .collect();
        // endpoints carry phi = 0 (or e^{-42}), so uniform weights are the trapezoid rule
        (nodes, h.powi(d as i32))
    }
}

/// E^(phi; tau, theta), A^(phi; tau, theta) and the same with phi replaced by each d_k phi.
#[derive(Clone, Debug)]
pub struct ConservedField {
    pub thetas: Vec<Vec<f64>>,
    pub energy: Vec<CMat>,
    pub action: Vec<CMat>,
    /// energy_grad[k][theta] = E^(d_k phi)
    pub energy_grad: Vec<Vec<CMat>>,
    pub action_grad: Vec<Vec<CMat>>,
}

/// E^ = int phi q^11 dr and A^ = int phi q^01 dr by r-quadrature of the Euler limit.
pub fn conserved_quantities(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    phi: &TestFunction,
    tau: f64,
    thetas: &[Vec<f64>],
    rq: &RQuadrature,
) -> Result<ConservedField> {
    let d = v.dim();
    phi.validate(d)?;
    if d > 2 {
        return Err(Error::Unsupported(format!("r-quadrature of test functions in dimension {d}")));
    }
    if rq.points_per_axis < 3 {
        return Err(Error::GridTooSmall("need at least 3 r points per axis".into()));
    }
    let (nodes, w) = rq.nodes(phi);
    let opts = SpectralOptions::default();
    let per_theta = thetas
        .par_iter()
        .map(|th| {
            let sp = spectral_data(v, th, &opts)?;
            let n = sp.n();
            let mut e = CMat::zeros(n, n);
            let mut a = CMat::zeros(n, n);
            let mut eg = vec![CMat::zeros(n, n); d];
            let mut ag = vec![CMat::zeros(n, n); d];
            for r in &nodes {
                let f = phi.value(r);
                let g = phi.gradient(r);
                if f == 0.0 && g.iter().all(|x| *x == 0.0) {
                    continue;
                }
                let q = euler_at(v, profile, &sp, tau, r)?;
                let (q11, q01) = (q.block(1, 1), q.block(0, 1));
                e += &q11 * C64::new(f * w, 0.0);
                a += &q01 * C64::new(f * w, 0.0);
                for k in 0..d {
                    eg[k] += &q11 * C64::new(g[k] * w, 0.0);
                    ag[k] += &q01 * C64::new(g[k] * w, 0.0);
                }
            }
            Ok((e, a, eg, ag))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = ConservedField {
        thetas: thetas.to_vec(),
        energy: Vec::new(),
        action: Vec::new(),
        energy_grad: vec![Vec::new(); d],
        action_grad: vec![Vec::new(); d],
    };
    for (e, a, eg, ag) in per_theta {
        out.energy.push(e);
        out.action.push(a);
        for k in 0..d {
            out.energy_grad[k].push(eg[k].clone());
            out.action_grad[k].push(ag[k].clone());
        }
    }
    Ok(out)
}

/// Band-wise residuals of d_tau E^ = i omega grad omega . A^(grad phi) and
/// d_tau A^ = -i omega^{-1} grad omega . E^(grad phi), with a central difference of step `dtau`.
pub fn conserved_identity_residual(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    phi: &TestFunction,
    tau: f64,
    dtau: f64,
    thetas: &[Vec<f64>],
    rq: &RQuadrature,
) -> Result<(f64, f64)> {
    let up = conserved_quantities(v, profile, phi, tau + dtau, thetas, rq)?;
    let dn = conserved_quantities(v, profile, phi, tau - dtau, thetas, rq)?;
    let mid = conserved_quantities(v, profile, phi, tau, thetas, rq)?;
    let opts = SpectralOptions::default();
    let (mut re, mut ra): (f64, f64) = (0.0, 0.0);
    for (t, th) in thetas.iter().enumerate() {
        let sp = spectral_data(v, th, &opts)?;
        let de = (&up.energy[t] - &dn.energy[t]) / C64::new(2.0 * dtau, 0.0);
        let da = (&up.action[t] - &dn.action[t]) / C64::new(2.0 * dtau, 0.0);
        for b in &sp.bands {
            let p = &b.projector;
            let n = sp.n();
            let mut rhs_e = CMat::zeros(n, n);
            let mut rhs_a = CMat::zeros(n, n);
            for (k, g) in b.grad.iter().enumerate() {
                rhs_e += &mid.action_grad[k][t] * (I * b.omega * *g);
                rhs_a += &mid.energy_grad[k][t] * (-I * *g / b.omega);
            }
            re = re.max(max_abs(&(p * (&de - rhs_e) * p)));
            ra = ra.max(max_abs(&(p * (&da - rhs_a) * p)));
        }
    }
    Ok((re, ra))
}

/// Microscopic X_h, Y_h against their limits E(phi; tau, h), A(phi; tau, h).
#[derive(Clone, Debug, PartialEq)]
pub struct MicroConserved {
    pub h: Vec<i64>,
    pub x: CMat,
    pub y: CMat,
    pub x_limit: CMat,
    pub y_limit: CMat,
}

impl MicroConserved {
    pub fn difference(&self) -> f64 {
        max_abs(&(&self.x - &self.x_limit)).max(max_abs(&(&self.y - &self.y_limit)))
    }
}

/// eps^d sum_z phi(eps z) E[E(z + h, z)] and the same for A, at time tau / eps.
pub fn micro_conserved(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    phi: &TestFunction,
    tau: f64,
    eps: f64,
    hs: &[Vec<i64>],
    tq: &ThetaQuadrature,
    rq: &RQuadrature,
) -> Result<Vec<MicroConserved>> {
    let d = v.dim();
    phi.validate(d)?;
    if hs.iter().any(|h| h.len() != d) {
        return Err(Error::InvalidQuery("h offsets must match the lattice dimension".into()));
    }
    let reach = phi.support_radius();
    let lo: Vec<i64> = phi.center().iter().map(|c| ((c - reach) / eps).floor() as i64).collect();
    let hi: Vec<i64> = phi.center().iter().map(|c| ((c + reach) / eps).ceil() as i64).collect();
    let mut sites: Vec<Vec<i64>> = vec![Vec::new()];
    for a in 0..d {
        sites = sites.into_iter().flat_map(|s| (lo[a]..=hi[a]).map(move |c| [s.clone(), vec![c]].concat())).collect();
    }
    let weights: Vec<f64> = sites.iter().map(|z| phi.value(&z.iter().map(|&c| eps * c as f64).collect::<Vec<_>>())).collect();
    let support: Vec<(Vec<i64>, crate::linalg::RMat)> = v.support().map(|(z, m)| (z.clone(), m.clone())).collect();
    let mut offsets: Vec<OffsetPair> = Vec::new();
    for (z, &wz) in sites.iter().zip(&weights) {
        if wz == 0.0 {
            continue;
        }
        for h in hs {
            let zh: Vec<i64> = z.iter().zip(h).map(|(a, b)| a + b).collect();
            offsets.push((zh.clone(), z.clone()));
            for (w, _) in &support {
                offsets.push((zh.clone(), z.iter().zip(w).map(|(a, b)| a - b).collect()));
            }
        }
    }
    offsets.sort();
    offsets.dedup();
    let zero = vec![0.0; d];
    let q = propagate_covariance(v, profile, &ScaledQuery::new(tau, 1.0, zero, offsets, eps)?)?;
    let n = v.components();
    let scale = eps.powi(d as i32);
    let nodes = tq.nodes(d);
    let field = conserved_quantities(v, profile, phi, tau, &nodes, rq)?;
    let tw = tq.weight(d);
    let mut out = Vec::with_capacity(hs.len());
    for h in hs {
        let mut x = CMat::zeros(n, n);
        let mut y = CMat::zeros(n, n);
        for (z, &wz) in sites.iter().zip(&weights) {
            if wz == 0.0 {
                continue;
            }
            let zh: Vec<i64> = z.iter().zip(h).map(|(a, b)| a + b).collect();
            let base = &q[&(zh.clone(), z.clone())];
            let mut e = base.block(1, 1);
            for (w, m) in &support {
                let zp: Vec<i64> = z.iter().zip(w).map(|(a, b)| a - b).collect();
                // Q^00(z + h, z') V(z - z')^T
                e += q[&(zh.clone(), zp)].block(0, 0) * m.transpose().map(|c| C64::new(c, 0.0));
            }
            x += e * C64::new(0.5 * wz * scale, 0.0);
            y += (base.block(0, 1) - base.block(1, 0)) * C64::new(0.5 * wz * scale, 0.0);
        }
        let mut x_limit = CMat::zeros(n, n);
        let mut y_limit = CMat::zeros(n, n);
        for (t, th) in nodes.iter().enumerate() {
            let phase: f64 = -th.iter().zip(h).map(|(a, &b)| a * b as f64).sum::<f64>();
            let c = C64::from_polar(tw, phase);
            x_limit += &field.energy[t] * c;
            y_limit += &field.action[t] * c;
        }
        out.push(MicroConserved { h: h.clone(), x, y, x_limit, y_limit });
    }
    Ok(out)
}
