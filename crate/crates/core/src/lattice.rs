use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Periodic box {0..L_1-1} x ... x {0..L_d-1}, stored row-major with axis 0 slowest.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticeBox {
    extent: Vec<usize>,
}

impl LatticeBox {
    pub fn new(extent: Vec<usize>) -> Result<Self> {
        if extent.is_empty() || extent.iter().any(|&l| l == 0) {
            return Err(Error::InvalidBox(format!("extent {extent:?} must be non-empty with positive entries")));
        }
        Ok(Self { extent })
    }

    pub fn cube(d: usize, l: usize) -> Result<Self> {
        Self::new(vec![l; d])
    }

    pub fn dim(&self) -> usize {
        self.extent.len()
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent
    }

    pub fn len(&self) -> usize {
        self.extent.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Linear index of a lattice point, wrapped onto the torus.
    pub fn index_of(&self, coord: &[i64]) -> usize {
        coord.iter().zip(&self.extent).fold(0usize, |acc, (&c, &l)| acc * l + c.rem_euclid(l as i64) as usize)
    }

    /// Coordinates in [0, L).
    pub fn coord_of(&self, mut idx: usize) -> Vec<i64> {
        let mut out = vec![0i64; self.dim()];
        for a in (0..self.dim()).rev() {
            out[a] = (idx % self.extent[a]) as i64;
            idx /= self.extent[a];
        }
        out
    }

    /// Representative in [-L/2, L/2).
    pub fn centered_coord(&self, idx: usize) -> Vec<i64> {
        let mut c = self.coord_of(idx);
        for (x, &l) in c.iter_mut().zip(&self.extent) {
            if *x >= (l as i64 + 1) / 2 {
                *x -= l as i64;
            }
        }
        c
    }

    /// DFT angle 2 pi k / L of a grid index, mapped into [-pi, pi).
    pub fn theta(&self, idx: usize) -> Vec<f64> {
        self.centered_coord(idx)
            .iter()
            .zip(&self.extent)
            .map(|(&k, &l)| 2.0 * PI * k as f64 / l as f64)
            .collect()
    }
}
