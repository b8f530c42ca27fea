use std::f64::consts::PI;

use rayon::prelude::*;

use crate::block::BlockCov;
use crate::covariance::{integer_part, CovarianceMap, OffsetPair};
use crate::dispersion::InteractionMatrix;
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::profile::CovarianceProfile;

use super::halfspace::{check_halfspace, halfspace_symbol_any};
use super::{limit_symbol, LimitModel};

/// Macroscopic point at which the limit symbol is evaluated for the pair (z, z').
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitAnchor {
    /// r itself.
    Macro,
    /// eps ([r/eps] + z), the macroscopic position of the left site.
    LeftSite,
}

/// Midpoint rule in theta for q(z) = (2 pi)^{-d} int q^(theta) e^{-i z.theta} d theta.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PositionQuadrature {
    pub points_per_axis: usize,
}

impl PositionQuadrature {
    pub fn default_for(d: usize) -> Self {
        Self {
            points_per_axis: match d {
                1 => 4096,
                2 => 256,
                _ => 32,
            },
        }
    }

    fn nodes(&self, d: usize) -> Vec<Vec<f64>> {
        let m = self.points_per_axis;
        let total = m.pow(d as u32);
        (0..total)
            .map(|mut flat| {
                let mut th = vec![0.0; d];
                for a in (0..d).rev() {
                    th[a] = -PI + (2.0 * PI) * ((flat % m) as f64 + 0.5) / m as f64;
                    flat /= m;
                }
                th
            })
            .collect()
    }
}

struct SymbolGrid {
    nodes: Vec<Vec<f64>>,
    values: Vec<CMat>,
}

impl SymbolGrid {
    fn build(nodes: &[Vec<f64>], f: impl Fn(&[f64]) -> Result<BlockCov> + Sync) -> Result<Self> {
        let values: Result<Vec<CMat>> = nodes.par_iter().map(|th| f(th).map(BlockCov::into_matrix)).collect();
        Ok(Self { nodes: nodes.to_vec(), values: values? })
    }

    fn at(&self, z: &[i64]) -> CMat {
        let (rows, cols) = self.values[0].shape();
        let mut acc = CMat::zeros(rows, cols);
        for (th, q) in self.nodes.iter().zip(&self.values) {
            let phase: f64 = -z.iter().zip(th).map(|(&a, b)| a as f64 * b).sum::<f64>();
            acc += q * C64::from_polar(1.0, phase);
        }
        acc / C64::new(self.nodes.len() as f64, 0.0)
    }
}

fn anchor_point(anchor: LimitAnchor, r: &[f64], eps: f64, z: &[i64]) -> Vec<f64> {
    match anchor {
        LimitAnchor::Macro => r.to_vec(),
        LimitAnchor::LeftSite => r.iter().zip(z).map(|(&x, &c)| eps * (integer_part(x / eps) + c) as f64).collect(),
    }
}

fn check_inputs(v: &InteractionMatrix, r: &[f64], eps: f64, offsets: &[OffsetPair]) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter { name: "eps", reason: "must be positive".into() });
    }
    let d = v.dim();
    if r.len() != d || offsets.iter().any(|(z, zp)| z.len() != d || zp.len() != d) {
        return Err(Error::InvalidQuery(format!("r and offsets must have dimension {d}")));
    }
    Ok(())
}

fn cached<'a>(cache: &'a mut Vec<(Vec<f64>, SymbolGrid)>, key: Vec<f64>, build: impl FnOnce() -> Result<SymbolGrid>) -> Result<&'a SymbolGrid> {
    if let Some(pos) = cache.iter().position(|(k, _)| *k == key) {
        return Ok(&cache[pos].1);
    }
    cache.push((key, build()?));
    Ok(&cache.last().expect("just pushed").1)
}

/// Position-space limit q(z - z') evaluated at the anchor of each pair.
#[allow(clippy::too_many_arguments)]
pub fn limit_covariance(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    model: LimitModel,
    tau: f64,
    r: &[f64],
    eps: f64,
    offsets: &[OffsetPair],
    anchor: LimitAnchor,
    quad: PositionQuadrature,
) -> Result<CovarianceMap> {
    check_inputs(v, r, eps, offsets)?;
    let nodes = quad.nodes(v.dim());
    let mut cache: Vec<(Vec<f64>, SymbolGrid)> = Vec::new();
    let mut out = CovarianceMap::new();
    for (z, zp) in offsets {
        let at = anchor_point(anchor, r, eps, z);
        let grid = cached(&mut cache, at.clone(), || SymbolGrid::build(&nodes, |th| limit_symbol(v, profile, model, tau, &at, th)))?;
        let diff: Vec<i64> = z.iter().zip(zp).map(|(a, b)| a - b).collect();
        out.insert((z.clone(), zp.clone()), BlockCov::from_matrix(grid.at(&diff)));
    }
    Ok(out)
}

fn reflect<T: Copy + std::ops::Neg<Output = T>>(x: &[T]) -> Vec<T> {
    let mut y = x.to_vec();
    y[0] = -y[0];
    y
}

/// Half-space position-space limit: two image terms for r_1 > 0, four for r_1 = 0.
///
/// With the `LeftSite` anchor the normal coordinate of the anchor stays at 0 when r_1 = 0.
#[allow(clippy::too_many_arguments)]
pub fn halfspace_limit_covariance(
    v: &InteractionMatrix,
    profile: &CovarianceProfile,
    model: LimitModel,
    tau: f64,
    r: &[f64],
    eps: f64,
    offsets: &[OffsetPair],
    anchor: LimitAnchor,
    quad: PositionQuadrature,
) -> Result<CovarianceMap> {
    check_halfspace(v, r)?;
    check_inputs(v, r, eps, offsets)?;
    let nodes = quad.nodes(v.dim());
    let mut cache: Vec<(Vec<f64>, SymbolGrid)> = Vec::new();
    let mut out = CovarianceMap::new();
    let boundary = r[0] == 0.0;
    for (z, zp) in offsets {
        let mut at = anchor_point(anchor, r, eps, z);
        if boundary {
            at[0] = 0.0;
        }
        let sym = |at: Vec<f64>| move |th: &[f64]| halfspace_symbol_any(v, profile, model, tau, &at, th);
        let diff = |a: &[i64], b: &[i64]| -> Vec<i64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };
        let (zt, zpt) = (reflect(z), reflect(zp));
        let value = if boundary {
            let g = cached(&mut cache, at.clone(), || SymbolGrid::build(&nodes, sym(at.clone())))?;
            // grouped so that z_1 = 0 or z'_1 = 0 cancels exactly
            (g.at(&diff(z, zp)) - g.at(&diff(z, &zpt))) - (g.at(&diff(&zt, zp)) - g.at(&diff(&zt, &zpt)))
        } else {
            let direct = cached(&mut cache, at.clone(), || SymbolGrid::build(&nodes, sym(at.clone())))?.at(&diff(z, zp));
            let mirrored = reflect(&at);
            let image = cached(&mut cache, mirrored.clone(), || SymbolGrid::build(&nodes, sym(mirrored.clone())))?.at(&diff(&zt, &zpt));
            direct + image
        };
        out.insert((z.clone(), zp.clone()), BlockCov::from_matrix(value));
    }
    Ok(out)
}
