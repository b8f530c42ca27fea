use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::lattice::LatticeBox;
use crate::linalg::C64;

/// Multi-dimensional FFT on a periodic box.
///
/// `to_symbol` computes f^(theta) = sum_z f(z) e^{i z.theta}; `from_symbol` is its inverse
/// (1/N) sum_theta e^{-i z.theta} f^(theta).
#[derive(Clone)]
pub struct TorusFft {
    lbox: LatticeBox,
    plus: Vec<Arc<dyn Fft<f64>>>,
    minus: Vec<Arc<dyn Fft<f64>>>,
}

impl TorusFft {
    pub fn new(lbox: &LatticeBox) -> Self {
        let mut planner = FftPlanner::new();
        let plus = lbox.extent().iter().map(|&l| planner.plan_fft_inverse(l)).collect();
        let minus = lbox.extent().iter().map(|&l| planner.plan_fft_forward(l)).collect();
        Self { lbox: lbox.clone(), plus, minus }
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lbox
    }

    pub fn to_symbol(&self, data: &mut [C64]) {
        self.apply(&self.plus, data);
    }

    pub fn from_symbol(&self, data: &mut [C64]) {
        self.apply(&self.minus, data);
        let scale = 1.0 / self.lbox.len() as f64;
        data.iter_mut().for_each(|x| *x *= scale);
    }

    fn apply(&self, plans: &[Arc<dyn Fft<f64>>], data: &mut [C64]) {
        assert_eq!(data.len(), self.lbox.len(), "data length does not match box");
        let ext = self.lbox.extent();
        let d = ext.len();
        for a in 0..d {
            let l = ext[a];
            if l == 1 {
                continue;
            }
            let stride: usize = ext[a + 1..].iter().product();
            if stride == 1 {
                plans[a].process(data);
                continue;
            }
            let outer = data.len() / (l * stride);
            let mut line = vec![C64::new(0.0, 0.0); l];
            let mut scratch = vec![C64::new(0.0, 0.0); plans[a].get_inplace_scratch_len()];
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * l * stride + s;
                    for k in 0..l {
                        line[k] = data[base + k * stride];
                    }
                    plans[a].process_with_scratch(&mut line, &mut scratch);
                    for k in 0..l {
                        data[base + k * stride] = line[k];
                    }
                }
            }
        }
    }
}
