//! Separable multi-dimensional FFT over the grid axes of a spinor field,
//! applied independently to every spinor component.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct GridFft {
    grid: Vec<usize>,
    spinor_dim: usize,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    total: usize,
}

impl std::fmt::Debug for GridFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridFft").field("grid", &self.grid).field("spinor_dim", &self.spinor_dim).finish()
    }
}

impl GridFft {
    pub fn new(grid: &[usize], spinor_dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = grid.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Self { grid: grid.to_vec(), spinor_dim, forward, inverse, total: grid.iter().product() }
    }

    /// Unnormalized forward transform, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform including the `1/Π n_j` normalization, in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / self.total as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.total * self.spinor_dim);
        let m = self.grid.len();
        for (axis, plan) in plans.iter().enumerate().take(m) {
            let len = self.grid[axis];
            let stride: usize = self.spinor_dim * self.grid[axis + 1..].iter().product::<usize>();
            let outer: usize = self.grid[..axis].iter().product();
            let mut line = vec![Complex64::new(0.0, 0.0); len];
            let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            for o in 0..outer {
                let block = o * len * stride;
                for inner in 0..stride {
                    let base = block + inner;
                    for (i, z) in line.iter_mut().enumerate() {
                        *z = data[base + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, z) in line.iter().enumerate() {
                        data[base + i * stride] = *z;
                    }
                }
            }
        }
    }
}
