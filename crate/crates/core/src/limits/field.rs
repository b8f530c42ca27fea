use crate::block::BlockCov;
use crate::dispersion::{spectral_data, InteractionMatrix, SpectralOptions, SpectralPoint};
use crate::error::{Error, Result};
use crate::linalg::{max_abs, CMat, C64, I};
use crate::profile::CovarianceProfile;

use super::{chi, symbol_parts, BandMatrix, Branch, LimitModel};

/// Regular grid start + k * step, k < count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldAxis {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl FieldAxis {
    pub fn new(start: f64, step: f64, count: usize) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() {
            return Err(Error::InvalidParameter { name: "step", reason: format!("{step} must be positive") });
        }
        Ok(Self { start, step, count })
    }

    /// Grid of `count` points centred on `centre`.
    pub fn centered(centre: f64, step: f64, count: usize) -> Result<Self> {
        Self::new(centre - step * (count as f64 - 1.0) / 2.0, step, count)
    }

    pub fn point(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }
}

/// Band components f_sigma of a limit symbol on a (time, r) grid at fixed theta.
///
/// The time axis is tau for the Euler model and the rescaled time t (tau = eps^{k-1} t) for the
/// diffusive and higher models.
#[derive(Clone, Debug)]
pub struct LimitField {
    pub model: LimitModel,
    pub halfspace: bool,
    pub time: FieldAxis,
    pub space: Vec<FieldAxis>,
    sp: SpectralPoint,
    /// values[point][band], points time-major then space row-major
    values: Vec<Vec<BlockCov>>,
}

fn macro_time(model: LimitModel, time: f64) -> f64 {
    match model {
        LimitModel::Euler => time,
        LimitModel::NavierStokes { eps } | LimitModel::KernelFree { eps } => eps * time,
        LimitModel::Higher { order, eps } => eps.powi(order as i32 - 1) * time,
    }
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

pub fn limit_field(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    model: LimitModel,
    halfspace: bool,
    theta: &[f64],
    time: FieldAxis,
    space: Vec<FieldAxis>,
) -> Result<LimitField> {
    if space.len() != v.dim() {
        return Err(Error::InvalidQuery(format!("space grid needs {} axes", v.dim())));
    }
    let sp = spectral_data(v, theta, &SpectralOptions::default())?;
    let ns = space_len(&space);
    let mut values = Vec::with_capacity(time.count * ns);
    for k in 0..time.count {
        let tau = macro_time(model, time.point(k));
        for flat in 0..ns {
            let idx = space_coord(&space, flat);
            let r: Vec<f64> = idx.iter().zip(&space).map(|(&i, a)| a.point(i)).collect();
            if halfspace && r[0] < 0.0 {
                return Err(Error::InvalidQuery("half-space field needs r_1 >= 0 on the whole grid".into()));
            }
            let parts = symbol_parts(v, profile, model, halfspace, &sp, tau, &r)?;
            values.push(parts.bands.into_iter().map(|b| b.f).collect());
        }
    }
    Ok(LimitField { model, halfspace, time, space, sp, values })
}

impl LimitField {
    pub fn spectral_point(&self) -> &SpectralPoint {
        &self.sp
    }

    pub fn band_count(&self) -> usize {
        self.sp.bands.len()
    }

    pub fn value(&self, time: usize, space: &[usize], band: usize) -> &BlockCov {
        &self.values[time * space_len(&self.space) + space_index(&self.space, space)][band]
    }

    fn at(&self, time: usize, space: &[usize], band: usize) -> &CMat {
        self.value(time, space, band).matrix()
    }

    /// Whether every point of the stencil lies on the same side of both half-space discontinuities.
    fn smooth_stencil(&self, k: usize, idx: &[usize], band: usize) -> bool {
        if !self.halfspace {
            return true;
        }
        let g = self.sp.bands[band].grad[0];
        let side = |kk: usize, r1: f64| {
            let shift = g * self.model.drift_time(macro_time(self.model, self.time.point(kk)));
            (chi(r1, shift, Branch::Plus), chi(r1, shift, Branch::Minus))
        };
        let reference = side(k, self.space[0].point(idx[0]));
        if reference.0 == 0.5 || reference.1 == 0.5 {
            return false;
        }
        for kk in [k - 1, k, k + 1] {
            for i in [idx[0] - 1, idx[0], idx[0] + 1] {
                if side(kk, self.space[0].point(i)) != reference {
                    return false;
                }
            }
        }
        true
    }

    /// max over interior points of |d_time f - iC (a . grad_r f + b H : hess_r f)|.
    fn residual(&self, second_order: C64) -> Result<f64> {
        if self.time.count < 3 || self.space.iter().any(|a| a.count < 3) {
            return Err(Error::GridTooSmall("need at least 3 points per axis".into()));
        }
        let d = self.space.len();
        let ns = space_len(&self.space);
        let mut worst: f64 = 0.0;
        for band in 0..self.band_count() {
            let b = &self.sp.bands[band];
            let ic = BandMatrix::new(b.omega, self.sp.n())?.matrix() * I;
            for k in 1..self.time.count - 1 {
                for flat in 0..ns {
                    let idx = space_coord(&self.space, flat);
                    if idx.iter().zip(&self.space).any(|(&i, a)| i == 0 || i + 1 == a.count) {
                        continue;
                    }
                    if !self.smooth_stencil(k, &idx, band) {
                        continue;
                    }
                    let dt = (self.at(k + 1, &idx, band) - self.at(k - 1, &idx, band)) / C64::new(2.0 * self.time.step, 0.0);
                    let f0 = self.at(k, &idx, band);
                    let shifted = |j: usize, s: isize, l: usize, u: isize| {
                        let mut i = idx.clone();
                        i[j] = (i[j] as isize + s) as usize;
                        i[l] = (i[l] as isize + u) as usize;
                        self.at(k, &i, band)
                    };
                    let mut transport = CMat::zeros(f0.nrows(), f0.ncols());
                    for j in 0..d {
                        let h = self.space[j].step;
                        let grad = (shifted(j, 1, j, 0) - shifted(j, -1, j, 0)) / C64::new(2.0 * h, 0.0);
                        transport += grad * C64::new(b.grad[j], 0.0);
                        if second_order != C64::new(0.0, 0.0) {
                            for l in 0..d {
                                let hl = self.space[l].step;
                                let second = if j == l {
                                    (shifted(j, 1, j, 0) - f0 * C64::new(2.0, 0.0) + shifted(j, -1, j, 0)) / C64::new(h * h, 0.0)
                                } else {
                                    (shifted(j, 1, l, 1) - shifted(j, 1, l, -1) - shifted(j, -1, l, 1) + shifted(j, -1, l, -1))
                                        / C64::new(4.0 * h * hl, 0.0)
                                };
                                transport += second * (second_order * b.hess[(j, l)]);
                            }
                        }
                    }
                    worst = worst.max(max_abs(&(dt - &ic * transport)));
                }
            }
        }
        Ok(worst)
    }
}

/// Central-difference residual of d_tau f = iC grad omega . grad_r f on an Euler field.
pub fn euler_pde_residual(field: &LimitField) -> Result<f64> {
    if field.model != LimitModel::Euler {
        return Err(Error::InvalidQuery("euler residual needs an Euler field".into()));
    }
    field.residual(C64::new(0.0, 0.0))
}

/// Residual of d_t f = iC (grad omega . grad_r + (i eps / 2) hess omega : hess_r) f.
///
/// An Euler field with eps = 0 gives the Euler residual.
pub fn ns_pde_residual(field: &LimitField, eps: f64) -> Result<f64> {
    match field.model {
        LimitModel::NavierStokes { eps: e } if (e - eps).abs() <= 1e-15 * e.max(1.0) => field.residual(I * (eps / 2.0)),
        LimitModel::Euler if eps == 0.0 => field.residual(C64::new(0.0, 0.0)),
        _ => Err(Error::InvalidQuery("navier-stokes residual needs a matching navier-stokes field".into())),
    }
}
