use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::block::BlockCov;
use crate::dispersion::{spectral_data, InteractionMatrix, SpectralOptions};
use crate::dynamics::{check_box, evolve, symbol_grid};
use crate::error::{Error, Result};
use crate::fft::TorusFft;
use crate::lattice::LatticeBox;
use crate::linalg::{CMat, C64};
use crate::profile::{CovarianceProfile, FieldSampler};

pub type OffsetPair = (Vec<i64>, Vec<i64>);
pub type CovarianceMap = BTreeMap<OffsetPair, BlockCov>;

#[derive(Clone, Debug, PartialEq)]
pub enum BoxPolicy {
    Auto,
    Fixed(Vec<usize>),
}

/// Observation of the flow at time tau / eps^kappa around the site [r / eps].
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledQuery {
    pub tau: f64,
    pub kappa: f64,
    pub r: Vec<f64>,
    pub offsets: Vec<OffsetPair>,
    pub eps: f64,
    pub box_policy: BoxPolicy,
}

/// Integer part of x, robust to representation error of decimal inputs such as 0.5 / 0.05.
pub fn integer_part(x: f64) -> i64 {
    (x + 1e-9 * x.abs().max(1.0)).floor() as i64
}

impl ScaledQuery {
    pub fn new(tau: f64, kappa: f64, r: Vec<f64>, offsets: Vec<OffsetPair>, eps: f64) -> Result<Self> {
        let q = Self { tau, kappa, r, offsets, eps, box_policy: BoxPolicy::Auto };
        q.validate()?;
        Ok(q)
    }

    pub fn with_box(mut self, policy: BoxPolicy) -> Self {
        self.box_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidParameter { name: "eps", reason: format!("{} must be positive", self.eps) });
        }
        if !(self.kappa >= 1.0) || !self.kappa.is_finite() {
            return Err(Error::InvalidParameter { name: "kappa", reason: format!("{} must be >= 1", self.kappa) });
        }
        if !self.tau.is_finite() || self.r.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter { name: "tau", reason: "tau and r must be finite".into() });
        }
        let d = self.r.len();
        if d == 0 || self.offsets.iter().any(|(z, zp)| z.len() != d || zp.len() != d) {
            return Err(Error::InvalidQuery("offsets must match the dimension of r".into()));
        }
        Ok(())
    }

    /// Microscopic time tau / eps^kappa.
    pub fn time(&self) -> f64 {
        self.tau / self.eps.powf(self.kappa)
    }

    /// The site [r / eps].
    pub fn anchor(&self) -> Vec<i64> {
        self.r.iter().map(|&x| integer_part(x / self.eps)).collect()
    }

    pub fn site(&self, z: &[i64]) -> Vec<i64> {
        self.anchor().iter().zip(z).map(|(a, b)| a + b).collect()
    }
}

/// 1.1 times the largest group speed found on a grid.
pub fn max_group_speed(v: &InteractionMatrix) -> f64 {
    let d = v.dim();
    let per_axis: usize = match d {
        1 => 512,
        2 => 64,
        _ => 16,
    };
    let lbox = LatticeBox::cube(d, per_axis).expect("positive extent");
    let opts = SpectralOptions::default();
    let mut best: f64 = 0.0;
    for idx in 0..lbox.len() {
        let theta: Vec<f64> = lbox.theta(idx).iter().map(|t| t + 0.37 / per_axis as f64).collect();
        if let Ok(sp) = spectral_data(v, &theta, &opts) {
            for b in &sp.bands {
                best = best.max(b.grad.iter().map(|g| g * g).sum::<f64>().sqrt());
            }
        }
    }
    1.1 * best
}

/// Smallest power-of-two box with no wrap-around contamination at the observed sites.
pub fn required_extent(v: &InteractionMatrix, profile: &CovarianceProfile, query: &ScaledQuery) -> Vec<usize> {
    let t = query.time().abs();
    let reach = max_group_speed(v) * t + 16.0 + 4.0 * t.cbrt() + profile.correlation_length() as f64;
    let anchor = query.anchor();
    (0..v.dim())
        .map(|a| {
            let off = query.offsets.iter().flat_map(|(z, zp)| [z[a].abs(), zp[a].abs()]).max().unwrap_or(0);
            let need = 2.0 * (reach + (anchor[a].abs() + off) as f64);
            (need.ceil() as usize).max(2 * (2 * v.radius() as usize + 1)).max(32).next_power_of_two()
        })
        .collect()
}

pub(crate) fn resolve_box(v: &InteractionMatrix, profile: &CovarianceProfile, query: &ScaledQuery) -> Result<LatticeBox> {
    query.validate()?;
    if query.r.len() != v.dim() {
        return Err(Error::InvalidQuery(format!("r has dimension {}, lattice has {}", query.r.len(), v.dim())));
    }
    if profile.components() != v.components() || profile.dim() != v.dim() {
        return Err(Error::InvalidParameter { name: "profile", reason: "profile does not match V".into() });
    }
    profile.check_periodization()?;
    let required = required_extent(v, profile, query);
    let extent = match &query.box_policy {
        BoxPolicy::Auto => required,
        BoxPolicy::Fixed(e) => {
            if e.len() != required.len() || e.iter().zip(&required).any(|(a, b)| a < b) {
                return Err(Error::BoxTooSmall { extent: e.clone(), required });
            }
            e.clone()
        }
    };
    let lbox = LatticeBox::new(extent)?;
    check_box(v, &lbox)?;
    Ok(lbox)
}

/// Linear covariance transport C(x, y) = sum_{a,b} conj(K(x, a)) Q(a, b) K(y, b)^T on a periodic box.
///
/// Q(a, b) = s(a) q_0(a - b) s(b) with s = sqrt(T(eps a)) (times a mask a_1 > 0 in the half-space
/// case, where K(x, a) = K(x - a) - K(x - a~)).
pub(crate) struct CovarianceTransport {
    lbox: LatticeBox,
    fft: TorusFft,
    n: usize,
    /// K(w) for every box offset w, m x 2n.
    kernel: Vec<CMat>,
    weight: Vec<f64>,
    /// q^_0 of the embedded table at -theta.
    q0_neg: Vec<CMat>,
    half_space: bool,
}

impl CovarianceTransport {
    /// `symbols` holds the kernel symbol K^(theta) on the box grid.
    pub(crate) fn new(profile: &CovarianceProfile, eps: f64, lbox: &LatticeBox, symbols: &[CMat], half_space: bool) -> Self {
        let fft = TorusFft::new(lbox);
        let n = profile.components();
        let len = lbox.len();
        let (rows, cols) = symbols[0].shape();
        let mut kernel = vec![CMat::zeros(rows, cols); len];
        for r in 0..rows {
            for c in 0..cols {
                let mut buf: Vec<C64> = symbols.iter().map(|s| s[(r, c)]).collect();
                fft.from_symbol(&mut buf);
                for (k, val) in kernel.iter_mut().zip(&buf) {
                    k[(r, c)] = *val;
                }
            }
        }
        let corr = profile.correlation_length();
        let m = 2 * n;
        let mut q0 = vec![vec![C64::new(0.0, 0.0); len]; m * m];
        for idx in 0..len {
            let z = lbox.centered_coord(idx);
            if z.iter().all(|c| c.abs() <= corr) {
                let q = profile.q0(&z);
                for e in 0..m * m {
                    q0[e][idx] = q.matrix()[(e / m, e % m)];
                }
            }
        }
        for buf in q0.iter_mut() {
            fft.to_symbol(buf);
        }
        let q0_neg = (0..len)
            .map(|idx| {
                let neg: Vec<i64> = lbox.coord_of(idx).iter().map(|c| -c).collect();
                let j = lbox.index_of(&neg);
                CMat::from_fn(m, m, |r, c| q0[r * m + c][j])
            })
            .collect();
        let t = profile.temperature();
        let weight = (0..len)
            .map(|idx| {
                let a = lbox.centered_coord(idx);
                if half_space && a[0] <= 0 {
                    return 0.0;
                }
                let r: Vec<f64> = a.iter().map(|&c| eps * c as f64).collect();
                t.value(&r).sqrt()
            })
            .collect();
        Self { lbox: lbox.clone(), fft, n, kernel, weight, q0_neg, half_space }
    }

    fn kernel_at(&self, x: &[i64], a: usize) -> CMat {
        let ac = self.lbox.centered_coord(a);
        let w: Vec<i64> = x.iter().zip(&ac).map(|(p, q)| p - q).collect();
        let k = &self.kernel[self.lbox.index_of(&w)];
        if self.half_space {
            if x[0] == 0 {
                return CMat::zeros(k.nrows(), k.ncols());
            }
            let mut wm = w;
            wm[0] = x[0] + ac[0];
            k - &self.kernel[self.lbox.index_of(&wm)]
        } else {
            k.clone()
        }
    }

    /// C(x, y) for the requested site pairs.
    pub(crate) fn pairs(&self, pairs: &[(Vec<i64>, Vec<i64>)]) -> Vec<CMat> {
        let len = self.lbox.len();
        let m2 = 2 * self.n;
        let rows = self.kernel[0].nrows();
        let xs: BTreeSet<&Vec<i64>> = pairs.iter().map(|(x, _)| x).collect();
        let mut out = vec![CMat::zeros(rows, rows); pairs.len()];
        for x in xs {
            // H(a) = conj(K(x, a)) s(a); P(b) = sum_a H(a) q_0(a - b)
            let mut h = vec![vec![C64::new(0.0, 0.0); len]; rows * m2];
            for a in 0..len {
                if self.weight[a] == 0.0 {
                    continue;
                }
                let k = self.kernel_at(x, a);
                for e in 0..rows * m2 {
                    h[e][a] = k[(e / m2, e % m2)].conj() * self.weight[a];
                }
            }
            for buf in h.iter_mut() {
                self.fft.to_symbol(buf);
            }
            let mut p = vec![vec![C64::new(0.0, 0.0); len]; rows * m2];
            for idx in 0..len {
                let q = &self.q0_neg[idx];
                for i in 0..rows {
                    for j in 0..m2 {
                        p[i * m2 + j][idx] = (0..m2).map(|k| h[i * m2 + k][idx] * q[(k, j)]).sum();
                    }
                }
            }
            for buf in p.iter_mut() {
                self.fft.from_symbol(buf);
            }
            for (slot, (px, y)) in out.iter_mut().zip(pairs) {
                if px != x {
                    continue;
                }
                let mut c = CMat::zeros(rows, rows);
                for b in 0..len {
                    if self.weight[b] == 0.0 {
                        continue;
                    }
                    let k = self.kernel_at(y, b);
                    let pb = CMat::from_fn(rows, m2, |i, j| p[i * m2 + j][b] * self.weight[b]);
                    c += pb * k.transpose();
                }
                *slot = c;
            }
        }
        out
    }
}

fn site_pairs(query: &ScaledQuery) -> Vec<(Vec<i64>, Vec<i64>)> {
    query.offsets.iter().map(|(z, zp)| (query.site(z), query.site(zp))).collect()
}

fn collect_real(query: &ScaledQuery, values: Vec<CMat>) -> CovarianceMap {
    query
        .offsets
        .iter()
        .cloned()
        .zip(values)
        .map(|(k, m)| (k, BlockCov::from_matrix(m.map(|z| C64::new(z.re, 0.0)))))
        .collect()
}

/// Q_{eps,t}([r/eps] + z, [r/eps] + z') by exact propagation of the product-profile covariance.
pub fn propagate_covariance(v: &InteractionMatrix, profile: &CovarianceProfile, query: &ScaledQuery) -> Result<CovarianceMap> {
    let lbox = resolve_box(v, profile, query)?;
    let symbols = symbol_grid(v, &lbox, query.time());
    let transport = CovarianceTransport::new(profile, query.eps, &lbox, &symbols, false);
    Ok(collect_real(query, transport.pairs(&site_pairs(query))))
}

/// Covariance of the zero-boundary half-space flow with initial data restricted to z_1 > 0.
pub fn halfspace_covariance(v: &InteractionMatrix, profile: &CovarianceProfile, query: &ScaledQuery) -> Result<CovarianceMap> {
    if !v.symmetry_flag() {
        return Err(Error::ModelViolation);
    }
    if query.r.first().is_some_and(|&r1| r1 < 0.0) {
        return Err(Error::InvalidQuery(format!("half-space query needs r_1 >= 0, got {}", query.r[0])));
    }
    let pairs = site_pairs(query);
    if pairs.iter().any(|(x, y)| x[0] < 0 || y[0] < 0) {
        return Err(Error::InvalidQuery("observed sites must lie in the half-space".into()));
    }
    let lbox = resolve_box(v, profile, query)?;
    let symbols = symbol_grid(v, &lbox, query.time());
    let transport = CovarianceTransport::new(profile, query.eps, &lbox, &symbols, true);
    Ok(collect_real(query, transport.pairs(&pairs)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalEntry {
    pub estimate: BlockCov,
    pub stderr: BlockCov,
}

/// Monte Carlo estimate of the same quantity as `propagate_covariance`.
///
/// Sample `k` uses stream `k` of the generator keyed by `seed`; the reduction runs in sample order,
/// so the result does not depend on the thread count.
pub fn empirical_covariance(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    query: &ScaledQuery,
    nsamples: usize,
    seed: u64,
) -> Result<BTreeMap<OffsetPair, EmpiricalEntry>> {
    if nsamples < 100 {
        return Err(Error::InvalidParameter { name: "nsamples", reason: format!("{nsamples} < 100") });
    }
    let lbox = resolve_box(v, profile, query)?;
    let sampler = FieldSampler::new(profile, query.eps, &lbox)?;
    let pairs = site_pairs(query);
    let n = v.components();
    let m = 2 * n;
    let t = query.time();
    let per_sample: Vec<Result<Vec<f64>>> = (0..nsamples as u64)
        .into_par_iter()
        .map(|k| {
            let x = evolve(v, &sampler.sample(seed, k), t)?;
            let state = |site: &[i64]| {
                let s = lbox.index_of(site);
                let mut out = x.displacement(s).to_vec();
                out.extend_from_slice(x.velocity(s));
                out
            };
            let mut prods = Vec::with_capacity(pairs.len() * m * m);
            for (a, b) in &pairs {
                let (ua, ub) = (state(a), state(b));
                for i in 0..m {
                    for j in 0..m {
                        prods.push(ua[i] * ub[j]);
                    }
                }
            }
            Ok(prods)
        })
        .collect();
    let width = pairs.len() * m * m;
    let mut sum = vec![0.0; width];
    let mut sum_sq = vec![0.0; width];
    for prods in per_sample {
        for (k, p) in prods?.into_iter().enumerate() {
            sum[k] += p;
            sum_sq[k] += p * p;
        }
    }
    let s = nsamples as f64;
    let mut out = BTreeMap::new();
    for (p, key) in query.offsets.iter().enumerate() {
        let mut est = CMat::zeros(m, m);
        let mut err = CMat::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let k = p * m * m + i * m + j;
                let mean = sum[k] / s;
                let var = ((sum_sq[k] - s * mean * mean) / (s - 1.0)).max(0.0);
                est[(i, j)] = C64::new(mean, 0.0);
                err[(i, j)] = C64::new((var / s).sqrt(), 0.0);
            }
        }
        out.insert(key.clone(), EmpiricalEntry { estimate: BlockCov::from_matrix(est), stderr: BlockCov::from_matrix(err) });
    }
    Ok(out)
}
