use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, to_complex, CMat, RMat, C64, I};

/// Parameters of the nearest-neighbour family, kept for analytic band derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct NearestNeighbor {
    pub gammas: Vec<f64>,
    pub masses: Vec<f64>,
}

/// Finite-support force matrix V(z) with n x n real blocks on Z^d.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionMatrix {
    d: usize,
    n: usize,
    support: BTreeMap<Vec<i64>, RMat>,
    symmetry_flag: bool,
    family: Option<NearestNeighbor>,
}

impl InteractionMatrix {
    /// Builds V from its nonzero blocks. Symmetry V(-z) = V(z)^T is not enforced here;
    /// `check_conditions` reports it and `spectral_data` refuses non-Hermitian symbols.
    pub fn new(d: usize, n: usize, support: impl IntoIterator<Item = (Vec<i64>, RMat)>) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::InvalidParameter { name: "d/n", reason: "must be positive".into() });
        }
        let mut map = BTreeMap::new();
        for (z, m) in support {
            if z.len() != d {
                return Err(Error::InvalidParameter { name: "support", reason: format!("offset {z:?} is not {d}-dimensional") });
            }
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::InvalidParameter { name: "support", reason: format!("block at {z:?} is not {n}x{n}") });
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter { name: "support", reason: format!("non-finite entry at {z:?}") });
            }
            map.insert(z, m);
        }
        let mut v = Self { d, n, support: map, symmetry_flag: false, family: None };
        v.symmetry_flag = v.reflection_defect() == 0.0;
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn components(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> impl Iterator<Item = (&Vec<i64>, &RMat)> {
        self.support.iter()
    }

    pub fn get(&self, z: &[i64]) -> Option<&RMat> {
        self.support.get(z)
    }

    /// Whether V((-z_1, z_bar)) = V(z) for all offsets.
    pub fn symmetry_flag(&self) -> bool {
        self.symmetry_flag
    }

    pub fn family(&self) -> Option<&NearestNeighbor> {
        self.family.as_ref()
    }

    /// Same matrix with the family tag dropped, so derivatives fall back to finite differences.
    pub fn without_family(&self) -> Self {
        Self { family: None, ..self.clone() }
    }

    /// Largest |z_j| over the support.
    pub fn radius(&self) -> i64 {
        self.support.keys().flat_map(|z| z.iter().map(|c| c.abs())).max().unwrap_or(0)
    }

    fn block_or_zero(&self, z: &[i64]) -> RMat {
        self.support.get(z).cloned().unwrap_or_else(|| RMat::zeros(self.n, self.n))
    }

    /// max |V(-z) - V(z)^T|, with the offset attaining it.
    pub fn transpose_defect(&self) -> (f64, Option<Vec<i64>>) {
        let mut worst = (0.0, None);
        for (z, m) in &self.support {
            let neg: Vec<i64> = z.iter().map(|c| -c).collect();
            let diff = (self.block_or_zero(&neg) - m.transpose()).abs().max();
            if diff > worst.0 {
                worst = (diff, Some(z.clone()));
            }
        }
        worst
    }

    fn reflection_defect(&self) -> f64 {
        self.support
            .iter()
            .map(|(z, m)| {
                let mut r = z.clone();
                r[0] = -r[0];
                (self.block_or_zero(&r) - m).abs().max()
            })
            .fold(0.0, f64::max)
    }
}

pub fn build_nearest_neighbor(d: usize, gammas: &[f64], masses: &[f64]) -> Result<InteractionMatrix> {
    if d == 0 {
        return Err(Error::InvalidParameter { name: "d", reason: "must be at least 1".into() });
    }
    if gammas.is_empty() || gammas.len() != masses.len() {
        return Err(Error::InvalidParameter { name: "gammas", reason: "need one gamma and one mass per component".into() });
    }
    if let Some(g) = gammas.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
        return Err(Error::InvalidParameter { name: "gamma", reason: format!("{g} is not positive") });
    }
    if let Some(m) = masses.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
        return Err(Error::InvalidParameter { name: "mass", reason: format!("{m} is negative") });
    }
    let n = gammas.len();
    let mut support = Vec::new();
    let center = RMat::from_fn(n, n, |i, j| if i == j { 2.0 * d as f64 * gammas[i] + masses[i] * masses[i] } else { 0.0 });
    support.push((vec![0; d], center));
    let off = RMat::from_fn(n, n, |i, j| if i == j { -gammas[i] } else { 0.0 });
    for j in 0..d {
        for s in [-1, 1] {
            let mut z = vec![0; d];
            z[j] = s;
            support.push((z, off.clone()));
        }
    }
    let mut v = InteractionMatrix::new(d, n, support)?;
    v.family = Some(NearestNeighbor { gammas: gammas.to_vec(), masses: masses.to_vec() });
    Ok(v)
}

/// V^(theta) = sum_z V(z) e^{i z.theta}.
pub fn fourier_symbol(v: &InteractionMatrix, theta: &[f64]) -> CMat {
    let mut out = CMat::zeros(v.n, v.n);
    for (z, m) in &v.support {
        let phase: f64 = z.iter().zip(theta).map(|(&a, &b)| a as f64 * b).sum();
        out += to_complex(m) * C64::from_polar(1.0, phase);
    }
    out
}

/// d/d theta_k V^(theta) = sum_z i z_k V(z) e^{i z.theta}, for each k.
pub fn symbol_gradient(v: &InteractionMatrix, theta: &[f64]) -> Vec<CMat> {
    (0..v.d)
        .map(|k| {
            let mut out = CMat::zeros(v.n, v.n);
            for (z, m) in &v.support {
                let phase: f64 = z.iter().zip(theta).map(|(&a, &b)| a as f64 * b).sum();
                out += to_complex(m) * (I * z[k] as f64 * C64::from_polar(1.0, phase));
            }
            out
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Band {
    pub omega: f64,
    pub multiplicity: usize,
    pub projector: CMat,
    pub grad: Vec<f64>,
    pub hess: RMat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralPoint {
    pub theta: Vec<f64>,
    pub vhat: CMat,
    pub omega: CMat,
    pub bands: Vec<Band>,
}

impl SpectralPoint {
    pub fn n(&self) -> usize {
        self.vhat.nrows()
    }

    /// (|sum Pi - I|, max |Pi^2 - Pi|, |Omega - sum omega Pi|)
    pub fn projector_defects(&self) -> (f64, f64, f64) {
        let n = self.n();
        let mut sum = CMat::zeros(n, n);
        let mut recon = CMat::zeros(n, n);
        let mut idem: f64 = 0.0;
        for b in &self.bands {
            sum += &b.projector;
            recon += &b.projector * C64::new(b.omega, 0.0);
            idem = idem.max(crate::linalg::max_abs_diff(&(&b.projector * &b.projector), &b.projector));
        }
        let complete = crate::linalg::max_abs_diff(&sum, &CMat::identity(n, n));
        let rec = crate::linalg::max_abs_diff(&recon, &self.omega);
        (complete, idem, rec)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralOptions {
    /// Step for finite-difference band derivatives (families without analytic formulas).
    pub fd_step: f64,
    /// Distinct bands closer than this are treated as a crossing.
    pub gap_tol: f64,
    /// Eigenvalues closer than this (relative) form one degenerate band.
    pub degeneracy_tol: f64,
    pub negative_tol: f64,
    pub derivatives: bool,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { fd_step: 1e-3, gap_tol: 1e-8, degeneracy_tol: 1e-10, negative_tol: 1e-10, derivatives: true }
    }
}

struct Grouped {
    omegas: Vec<f64>,
    mults: Vec<usize>,
    projectors: Vec<CMat>,
}

fn group_bands(vhat: &CMat, theta: &[f64], opts: &SpectralOptions) -> Result<Grouped> {
    let n = vhat.nrows();
    let (vals, vecs) = hermitian_eigen(vhat);
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if vals[0] < -opts.negative_tol * scale {
        return Err(Error::NegativeSymbol { theta: theta.to_vec(), eigenvalue: vals[0] });
    }
    let om: Vec<f64> = vals.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let mut g = Grouped { omegas: Vec::new(), mults: Vec::new(), projectors: Vec::new() };
    let mut k = 0;
    while k < n {
        let mut end = k + 1;
        while end < n && om[end] - om[k] <= opts.degeneracy_tol * om[k].max(1.0) {
            end += 1;
        }
        let mut p = CMat::zeros(n, n);
        for c in k..end {
            let v = vecs.column(c);
            p += &v * v.adjoint();
        }
        let mean = om[k..end].iter().sum::<f64>() / (end - k) as f64;
        if let Some(&prev) = g.omegas.last() {
            if mean - prev < opts.gap_tol {
                return Err(Error::CriticalSet { theta: theta.to_vec(), reason: format!("band gap {:e} below tolerance", mean - prev) });
            }
        }
        g.omegas.push(mean);
        g.mults.push(end - k);
        g.projectors.push(p);
        k = end;
    }
    Ok(g)
}

/// Grouped band frequencies at theta (no derivatives).
pub fn band_frequencies(v: &InteractionMatrix, theta: &[f64], opts: &SpectralOptions) -> Result<Vec<f64>> {
    Ok(group_bands(&fourier_symbol(v, theta), theta, opts)?.omegas)
}

fn shifted(theta: &[f64], steps: &[(usize, f64)]) -> Vec<f64> {
    let mut t = theta.to_vec();
    for &(j, h) in steps {
        t[j] += h;
    }
    t
}

fn fd_band(v: &InteractionMatrix, theta: &[f64], steps: &[(usize, f64)], sigma: usize, count: usize, opts: &SpectralOptions) -> Result<f64> {
    let t = shifted(theta, steps);
    let om = band_frequencies(v, &t, opts)?;
    if om.len() != count {
        return Err(Error::CriticalSet { theta: theta.to_vec(), reason: "band count changes within the difference stencil".into() });
    }
    Ok(om[sigma])
}

fn analytic_derivatives(nn: &NearestNeighbor, vhat: &CMat, theta: &[f64], omega: f64) -> (Vec<f64>, RMat) {
    let k = (0..vhat.nrows())
        .min_by(|&a, &b| (vhat[(a, a)].re - omega * omega).abs().total_cmp(&(vhat[(b, b)].re - omega * omega).abs()))
        .unwrap_or(0);
    let g = nn.gammas[k];
    let d = theta.len();
    let grad = theta.iter().map(|t| g * t.sin() / omega).collect();
    let hess = RMat::from_fn(d, d, |j, l| {
        let diag = if j == l { g * theta[j].cos() / omega } else { 0.0 };
        diag - g * g * theta[j].sin() * theta[l].sin() / omega.powi(3)
    });
    (grad, hess)
}

/// Dispersion data at theta: symbol, Omega = V^^{1/2}, grouped bands with projectors and derivatives.
pub fn spectral_data(v: &InteractionMatrix, theta: &[f64], opts: &SpectralOptions) -> Result<SpectralPoint> {
    if theta.len() != v.d {
        return Err(Error::InvalidParameter { name: "theta", reason: format!("expected {} angles", v.d) });
    }
    let vhat = fourier_symbol(v, theta);
    let herm = crate::linalg::max_abs_diff(&vhat, &vhat.adjoint());
    if herm > 1e-12 * (1.0 + crate::linalg::max_abs(&vhat)) {
        let (_, z) = v.transpose_defect();
        return Err(Error::NotSymmetric { offset: z.unwrap_or_default() });
    }
    let g = group_bands(&vhat, theta, opts)?;
    let n = v.n;
    let d = v.d;
    let mut omega = CMat::zeros(n, n);
    for (w, p) in g.omegas.iter().zip(&g.projectors) {
        omega += p * C64::new(*w, 0.0);
    }
    let count = g.omegas.len();
    let mut bands = Vec::with_capacity(count);
    for s in 0..count {
        let w = g.omegas[s];
        let (grad, hess) = if !opts.derivatives {
            (vec![0.0; d], RMat::zeros(d, d))
        } else {
            if w < opts.gap_tol {
                return Err(Error::CriticalSet { theta: theta.to_vec(), reason: "vanishing frequency".into() });
            }
            match &v.family {
                Some(nn) => analytic_derivatives(nn, &vhat, theta, w),
                None => {
                    let h = opts.fd_step;
                    let mut grad = vec![0.0; d];
                    let mut hess = RMat::zeros(d, d);
                    for j in 0..d {
                        let p = fd_band(v, theta, &[(j, h)], s, count, opts)?;
                        let m = fd_band(v, theta, &[(j, -h)], s, count, opts)?;
                        grad[j] = (p - m) / (2.0 * h);
                        hess[(j, j)] = (p - 2.0 * w + m) / (h * h);
                        for l in 0..j {
                            let pp = fd_band(v, theta, &[(j, h), (l, h)], s, count, opts)?;
                            let pm = fd_band(v, theta, &[(j, h), (l, -h)], s, count, opts)?;
                            let mp = fd_band(v, theta, &[(j, -h), (l, h)], s, count, opts)?;
                            let mm = fd_band(v, theta, &[(j, -h), (l, -h)], s, count, opts)?;
                            let val = (pp - pm - mp + mm) / (4.0 * h * h);
                            hess[(j, l)] = val;
                            hess[(l, j)] = val;
                        }
                    }
                    (grad, hess)
                }
            }
        };
        bands.push(Band { omega: w, multiplicity: g.mults[s], projector: g.projectors[s].clone(), grad, hess });
    }
    Ok(SpectralPoint { theta: theta.to_vec(), vhat, omega, bands })
}

/// Third derivatives d^3 omega / d theta_j d theta_l d theta_m of band `sigma`,
/// by central differences of the Hessian.
pub fn third_derivatives(v: &InteractionMatrix, theta: &[f64], sigma: usize, step: f64, opts: &SpectralOptions) -> Result<Vec<f64>> {
    let d = v.d;
    let mut out = vec![0.0; d * d * d];
    for m in 0..d {
        let p = spectral_data(v, &shifted(theta, &[(m, step)]), opts)?;
        let q = spectral_data(v, &shifted(theta, &[(m, -step)]), opts)?;
        if p.bands.len() <= sigma || q.bands.len() <= sigma {
            return Err(Error::CriticalSet { theta: theta.to_vec(), reason: "band count changes within the difference stencil".into() });
        }
        for j in 0..d {
            for l in 0..d {
                out[(j * d + l) * d + m] = (p.bands[sigma].hess[(j, l)] - q.bands[sigma].hess[(j, l)]) / (2.0 * step);
            }
        }
    }
    // symmetrize over index permutations
    let mut sym = vec![0.0; d * d * d];
    for j in 0..d {
        for l in 0..d {
            for m in 0..d {
                let idx = |a: usize, b: usize, c: usize| (a * d + b) * d + c;
                let perms = [idx(j, l, m), idx(j, m, l), idx(l, j, m), idx(l, m, j), idx(m, j, l), idx(m, l, j)];
                sym[idx(j, l, m)] = perms.iter().map(|&p| out[p]).sum::<f64>() / 6.0;
            }
        }
    }
    Ok(sym)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConditionStatus {
    Pass,
    Fail,
    SampledPass,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    Offset(Vec<i64>),
    Theta(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionEntry {
    pub condition: Condition,
    pub status: ConditionStatus,
    pub witnesses: Vec<Witness>,
    /// E1: support radius; E2: max |V(-z)-V(z)^T|; E3: min eigenvalue of V^ on the grid;
    /// E4: max |det Hessian| per band (minimum over bands); E5: smallest variation of omega_s +- omega_s';
    /// E6: ratio of successive Riemann-sum increments.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub entries: Vec<ConditionEntry>,
    /// Grid points flagged near the critical set (crossings, zero frequency, vanishing d omega/d theta_1, degenerate Hessian).
    pub critical_sample: Vec<Vec<f64>>,
    /// Grid points where det V^ = 0.
    pub zero_set_sample: Vec<Vec<f64>>,
}

impl ConditionReport {
    pub fn get(&self, c: Condition) -> &ConditionEntry {
        self.entries.iter().find(|e| e.condition == c).expect("every condition is reported")
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.status != ConditionStatus::Fail)
    }
}

fn grid_points(d: usize, n: usize) -> Vec<Vec<f64>> {
    let total = n.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            let mut t = vec![0.0; d];
            for a in (0..d).rev() {
                t[a] = -PI + 2.0 * PI * (idx % n) as f64 / n as f64;
                idx /= n;
            }
            t
        })
        .collect()
}

fn inverse_norm_sum(v: &InteractionMatrix, n: usize, singular: &mut Vec<Vec<f64>>) -> f64 {
    let d = v.d;
    let cell = (2.0 * PI / n as f64).powi(d as i32);
    let mut sum = 0.0;
    for t in grid_points(d, n) {
        let (vals, _) = hermitian_eigen(&fourier_symbol(v, &t));
        if vals[0] <= 1e-12 {
            singular.push(t);
        } else {
            sum += cell / vals[0];
        }
    }
    sum / (2.0 * PI).powi(d as i32)
}

/// Sampled diagnostics for E1-E6 on a uniform grid with `grid_resolution` points per axis.
pub fn check_conditions(v: &InteractionMatrix, grid_resolution: usize) -> Result<ConditionReport> {
    if grid_resolution < 8 {
        return Err(Error::InvalidParameter { name: "grid_resolution", reason: "must be at least 8".into() });
    }
    let d = v.d;
    let mut entries = Vec::new();
    entries.push(ConditionEntry { condition: Condition::E1, status: ConditionStatus::Pass, witnesses: vec![], margin: v.radius() as f64 });

    let (defect, wz) = v.transpose_defect();
    let e2_ok = defect <= 1e-14;
    entries.push(ConditionEntry {
        condition: Condition::E2,
        status: if e2_ok { ConditionStatus::Pass } else { ConditionStatus::Fail },
        witnesses: wz.filter(|_| !e2_ok).map(Witness::Offset).into_iter().collect(),
        margin: defect,
    });

    let opts = SpectralOptions::default();
    let grid = grid_points(d, grid_resolution);
    let mut min_eig = f64::INFINITY;
    let mut e3_witness = Vec::new();
    let mut critical = Vec::new();
    let mut zero_set = Vec::new();
    let mut samples: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::new(); // theta, omegas, det hess
    for t in &grid {
        let vhat = fourier_symbol(v, t);
        let (vals, _) = hermitian_eigen(&vhat);
        min_eig = min_eig.min(vals[0]);
        if vals[0] < -1e-10 {
            e3_witness.push(Witness::Theta(t.clone()));
        }
        if vals[0].abs() <= 1e-12 {
            zero_set.push(t.clone());
        }
        if !e2_ok {
            continue;
        }
        match spectral_data(v, t, &opts) {
            Ok(sp) => {
                let dets: Vec<f64> = sp.bands.iter().map(|b| crate::linalg::determinant(&b.hess)).collect();
                if sp.bands.iter().any(|b| b.grad[0].abs() < 1e-12) || dets.iter().any(|x| x.abs() < 1e-10) {
                    critical.push(t.clone());
                }
                samples.push((t.clone(), sp.bands.iter().map(|b| b.omega).collect(), dets));
            }
            Err(_) => critical.push(t.clone()),
        }
    }
    entries.push(ConditionEntry {
        condition: Condition::E3,
        status: if e3_witness.is_empty() { ConditionStatus::Pass } else { ConditionStatus::Fail },
        witnesses: e3_witness.into_iter().take(4).collect(),
        margin: min_eig,
    });

    // band count at generic points
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for s in &samples {
        *counts.entry(s.1.len()).or_default() += 1;
    }
    let s_bands = counts.iter().max_by_key(|(_, c)| **c).map(|(k, _)| *k).unwrap_or(0);
    let generic: Vec<&(Vec<f64>, Vec<f64>, Vec<f64>)> = samples.iter().filter(|s| s.1.len() == s_bands).collect();

    let mut e4_margin = f64::INFINITY;
    let mut e4_ok = !generic.is_empty();
    for sigma in 0..s_bands {
        let best = generic.iter().map(|s| s.2[sigma].abs()).fold(0.0, f64::max);
        e4_margin = e4_margin.min(best);
        if best <= 1e-10 {
            e4_ok = false;
        }
    }
    entries.push(ConditionEntry {
        condition: Condition::E4,
        status: if e4_ok { ConditionStatus::Pass } else { ConditionStatus::Fail },
        witnesses: if e4_ok { vec![] } else { generic.first().map(|s| Witness::Theta(s.0.clone())).into_iter().collect() },
        margin: if e4_margin.is_finite() { e4_margin } else { 0.0 },
    });

    let mut e5_margin = f64::INFINITY;
    let mut e5_witness = Vec::new();
    for a in 0..s_bands {
        for b in (a + 1)..s_bands {
            for sign in [1.0, -1.0] {
                let vals: Vec<f64> = generic.iter().map(|s| s.1[a] + sign * s.1[b]).collect();
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let var = hi - lo;
                e5_margin = e5_margin.min(var);
                if var <= 1e-8 && lo.abs() > 1e-8 {
                    e5_witness.push(Witness::Theta(generic[0].0.clone()));
                }
            }
        }
    }
    entries.push(ConditionEntry {
        condition: Condition::E5,
        status: if e5_witness.is_empty() { ConditionStatus::Pass } else { ConditionStatus::Fail },
        witnesses: e5_witness,
        margin: if e5_margin.is_finite() { e5_margin } else { f64::INFINITY },
    });

    // E6: Riemann sums on refined grids; singular points excluded
    let base = if d >= 3 { grid_resolution.min(16) } else { grid_resolution };
    let mut singular = Vec::new();
    let s1 = inverse_norm_sum(v, base, &mut singular);
    let s2 = inverse_norm_sum(v, 2 * base, &mut Vec::new());
    let s3 = inverse_norm_sum(v, 4 * base, &mut Vec::new());
    let (inc1, inc2) = (s2 - s1, s3 - s2);
    let ratio = if inc1.abs() > 0.0 { inc2.abs() / inc1.abs() } else { 0.0 };
    let converged = inc2.abs() <= 1e-12 * s3.abs().max(1.0) || ratio < 0.75;
    let (status, witnesses) = if singular.is_empty() && min_eig > 0.0 {
        (ConditionStatus::Pass, vec![])
    } else if converged {
        (ConditionStatus::SampledPass, vec![])
    } else {
        (ConditionStatus::Fail, singular.iter().take(4).cloned().map(Witness::Theta).collect())
    };
    entries.push(ConditionEntry { condition: Condition::E6, status, witnesses, margin: ratio });

    Ok(ConditionReport { entries, critical_sample: critical, zero_set_sample: zero_set })
}
