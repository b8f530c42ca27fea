use std::ops::{Add, Mul, Sub};

use crate::linalg::{max_abs, max_abs_diff, CMat, C64};

/// A 2n x 2n complex matrix viewed as a 2 x 2 grid of n x n blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockCov {
    n: usize,
    m: CMat,
}

impl BlockCov {
    pub fn zeros(n: usize) -> Self {
        Self { n, m: CMat::zeros(2 * n, 2 * n) }
    }

    pub fn from_matrix(m: CMat) -> Self {
        assert!(m.nrows() == m.ncols() && m.nrows() % 2 == 0, "BlockCov needs a square matrix of even size");
        Self { n: m.nrows() / 2, m }
    }

    pub fn from_blocks(b00: &CMat, b01: &CMat, b10: &CMat, b11: &CMat) -> Self {
        let n = b00.nrows();
        let mut out = Self::zeros(n);
        out.set_block(0, 0, b00);
        out.set_block(0, 1, b01);
        out.set_block(1, 0, b10);
        out.set_block(1, 1, b11);
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    pub fn block(&self, i: usize, j: usize) -> CMat {
        self.m.view((i * self.n, j * self.n), (self.n, self.n)).into_owned()
    }

    pub fn set_block(&mut self, i: usize, j: usize, b: &CMat) {
        let n = self.n;
        self.m.view_mut((i * n, j * n), (n, n)).copy_from(b);
    }

    /// Entry of the full 2n x 2n matrix.
    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.m[(row, col)]
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.m)
    }

    pub fn max_abs_diff(&self, other: &BlockCov) -> f64 {
        max_abs_diff(&self.m, &other.m)
    }

    pub fn transpose(&self) -> BlockCov {
        Self { n: self.n, m: self.m.transpose() }
    }

    pub fn adjoint(&self) -> BlockCov {
        Self { n: self.n, m: self.m.adjoint() }
    }

    pub fn scale(&self, s: C64) -> BlockCov {
        Self { n: self.n, m: &self.m * s }
    }
}

impl Add for &BlockCov {
    type Output = BlockCov;
    fn add(self, rhs: &BlockCov) -> BlockCov {
        BlockCov { n: self.n, m: &self.m + &rhs.m }
    }
}

impl Sub for &BlockCov {
    type Output = BlockCov;
    fn sub(self, rhs: &BlockCov) -> BlockCov {
        BlockCov { n: self.n, m: &self.m - &rhs.m }
    }
}

impl Mul<f64> for &BlockCov {
    type Output = BlockCov;
    fn mul(self, rhs: f64) -> BlockCov {
        BlockCov { n: self.n, m: &self.m * C64::new(rhs, 0.0) }
    }
}
