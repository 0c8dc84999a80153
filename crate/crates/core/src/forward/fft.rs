//! Minimal 3D FFT on top of rustfft's 1D plans.
//!
//! Data layout is x-fastest: `idx = ix + n0 (iy + n1 iz)`. The x pass runs
//! in place over contiguous lines; the y and z passes permute the array with
//! blocked transposes so every 1D transform works on contiguous data, then
//! permute back. The inverse transform applies the usual `1/N`
//! normalisation.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

const BLOCK: usize = 32;

pub struct Fft3 {
    dims: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
    perm: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Fft3 {
    pub fn new(dims: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = [
            planner.plan_fft_forward(dims[0]),
            planner.plan_fft_forward(dims[1]),
            planner.plan_fft_forward(dims[2]),
        ];
        let inverse = [
            planner.plan_fft_inverse(dims[0]),
            planner.plan_fft_inverse(dims[1]),
            planner.plan_fft_inverse(dims[2]),
        ];
        let len = dims[0] * dims[1] * dims[2];
        let max_scratch = forward
            .iter()
            .chain(inverse.iter())
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap();
        Fft3 {
            dims,
            forward,
            inverse,
            perm: vec![Complex64::new(0.0, 0.0); len],
            scratch: vec![Complex64::new(0.0, 0.0); max_scratch],
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        let dims = self.dims;
        self.forward_from_box(data, dims);
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        let dims = self.dims;
        self.inverse_into_box(data, dims);
    }

    /// Forward transform of data supported in the leading box
    /// `[0, active[a])` per axis: lines that are identically zero are
    /// skipped, which is most of them on a 2x zero-padded grid.
    pub fn forward_from_box(&mut self, data: &mut [Complex64], active: [usize; 3]) {
        assert_eq!(data.len(), self.len());
        let [n0, n1, n2] = self.dims;
        let [a0, a1, a2] = active;
        debug_assert!(a0 <= n0 && a1 <= n1 && a2 <= n2);

        // x: for each populated slab, the first a1 lines are contiguous
        let p0 = self.forward[0].clone();
        for iz in 0..a2 {
            let start = iz * n0 * n1;
            p0.process_with_scratch(&mut data[start..start + a1 * n0], &mut self.scratch);
        }
        // y: populated slabs only
        let p1 = self.forward[1].clone();
        for iz in 0..a2 {
            let slab = &mut data[iz * n0 * n1..(iz + 1) * n0 * n1];
            transpose_into(slab, &mut self.perm[..n0 * n1], n0, n1);
            p1.process_with_scratch(&mut self.perm[..n0 * n1], &mut self.scratch);
            transpose_into(&self.perm[..n0 * n1], slab, n1, n0);
        }
        // z: all lines
        let p2 = self.forward[2].clone();
        let rows = n0 * n1;
        transpose_into(data, &mut self.perm, rows, n2);
        p2.process_with_scratch(&mut self.perm, &mut self.scratch);
        transpose_into(&self.perm, data, n2, rows);
    }

    /// Inverse transform producing valid values only inside the leading box
    /// `[0, need[a])`; the rest of the buffer is left unfinished. Includes
    /// the `1/N` normalisation on the valid box.
    pub fn inverse_into_box(&mut self, data: &mut [Complex64], need: [usize; 3]) {
        assert_eq!(data.len(), self.len());
        let [n0, n1, n2] = self.dims;
        let [m0, m1, m2] = need;
        debug_assert!(m0 <= n0 && m1 <= n1 && m2 <= n2);

        // z first so later passes can skip slabs nobody will read
        let p2 = self.inverse[2].clone();
        let rows = n0 * n1;
        transpose_into(data, &mut self.perm, rows, n2);
        p2.process_with_scratch(&mut self.perm, &mut self.scratch);
        transpose_into(&self.perm, data, n2, rows);

        let p1 = self.inverse[1].clone();
        for iz in 0..m2 {
            let slab = &mut data[iz * n0 * n1..(iz + 1) * n0 * n1];
            transpose_into(slab, &mut self.perm[..n0 * n1], n0, n1);
            p1.process_with_scratch(&mut self.perm[..n0 * n1], &mut self.scratch);
            transpose_into(&self.perm[..n0 * n1], slab, n1, n0);
        }

        let p0 = self.inverse[0].clone();
        let scale = 1.0 / self.len() as f64;
        for iz in 0..m2 {
            let start = iz * n0 * n1;
            let lines = &mut data[start..start + m1 * n0];
            p0.process_with_scratch(lines, &mut self.scratch);
            for v in lines.iter_mut().take(m1 * n0) {
                *v *= scale;
            }
        }
        let _ = m0;
    }
}

/// Blocked out-of-place transpose of a row-major `rows x cols` matrix
/// (`src[c + cols * r]`) into its `cols x rows` transpose.
fn transpose_into(src: &[Complex64], dst: &mut [Complex64], cols: usize, rows: usize) {
    debug_assert_eq!(src.len(), rows * cols);
    debug_assert_eq!(dst.len(), rows * cols);
    for rb in (0..rows).step_by(BLOCK) {
        let rend = (rb + BLOCK).min(rows);
        for cb in (0..cols).step_by(BLOCK) {
            let cend = (cb + BLOCK).min(cols);
            for r in rb..rend {
                for c in cb..cend {
                    dst[r + rows * c] = src[c + cols * r];
                }
            }
        }
    }
}
