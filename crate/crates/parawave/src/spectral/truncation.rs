use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Physical-space values on the `(2·n_max+1)²` collocation grid,
/// indexed `[m1][m2]` with `x = 2π(m1, m2)/(2·n_max+1)`.
pub type Grid = Array2<Complex64>;

/// Symmetric frequency box `{-n_max..n_max}²` with its collocation grid and
/// cached FFT plans. Lattice order is lexicographic in `(j1, j2)`.
pub struct Truncation {
    n_max: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Truncation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Truncation").field("n_max", &self.n_max).finish()
    }
}

impl Truncation {
    pub fn new(n_max: usize) -> Arc<Self> {
        let n_grid = 2 * n_max + 1;
        let mut planner = FftPlanner::new();
        Arc::new(Self {
            n_max,
            forward: planner.plan_fft_forward(n_grid),
            inverse: planner.plan_fft_inverse(n_grid),
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Collocation grid side length `2·n_max+1`.
    pub fn n_grid(&self) -> usize {
        2 * self.n_max + 1
    }

    /// Number of lattice points.
    pub fn len(&self) -> usize {
        self.n_grid() * self.n_grid()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, j: (i64, i64)) -> bool {
        let n = self.n_max as i64;
        j.0.abs() <= n && j.1.abs() <= n
    }

    /// Lattice position of frequency `j` in lexicographic order.
    pub fn index_of(&self, j: (i64, i64)) -> Option<usize> {
        if !self.contains(j) {
            return None;
        }
        let n = self.n_max as i64;
        let g = self.n_grid() as i64;
        Some(((j.0 + n) * g + (j.1 + n)) as usize)
    }

    /// Frequency at lattice position `idx`.
    pub fn freq_at(&self, idx: usize) -> (i64, i64) {
        let n = self.n_max as i64;
        let g = self.n_grid() as i64;
        let i = idx as i64;
        (i / g - n, i % g - n)
    }

    /// Iterate frequencies in lattice order.
    pub fn freqs(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let n = self.n_max as i64;
        (-n..=n).flat_map(move |j1| (-n..=n).map(move |j2| (j1, j2)))
    }

    /// Coefficient array index for frequency `j` (row, col in the box array).
    #[inline]
    pub fn box_index(&self, j: (i64, i64)) -> (usize, usize) {
        let n = self.n_max as i64;
        ((j.0 + n) as usize, (j.1 + n) as usize)
    }

    /// Inverse transform: coefficients in box layout -> physical grid values.
    pub fn to_grid(&self, coeffs: &Array2<Complex64>) -> Grid {
        let g = self.n_grid();
        let n = self.n_max as i64;
        let mut work = Array2::<Complex64>::zeros((g, g));
        // reorder box layout (j+n) into FFT layout (j mod g)
        for j1 in -n..=n {
            let f1 = j1.rem_euclid(g as i64) as usize;
            for j2 in -n..=n {
                let f2 = j2.rem_euclid(g as i64) as usize;
                work[[f1, f2]] = coeffs[[(j1 + n) as usize, (j2 + n) as usize]];
            }
        }
        self.fft2_in_place(&mut work, false);
        work
    }

    /// Forward transform: physical grid values -> coefficients in box layout.
    pub fn to_coeffs(&self, grid: &Grid) -> Array2<Complex64> {
        let g = self.n_grid();
        let n = self.n_max as i64;
        let mut work = grid.clone();
        self.fft2_in_place(&mut work, true);
        let scale = 1.0 / (g * g) as f64;
        let mut coeffs = Array2::<Complex64>::zeros((g, g));
        for j1 in -n..=n {
            let f1 = j1.rem_euclid(g as i64) as usize;
            for j2 in -n..=n {
                let f2 = j2.rem_euclid(g as i64) as usize;
                coeffs[[(j1 + n) as usize, (j2 + n) as usize]] = work[[f1, f2]] * scale;
            }
        }
        coeffs
    }

    /// Unnormalized 2D FFT over both axes of a square array.
    pub fn fft2_in_place(&self, data: &mut Array2<Complex64>, forward: bool) {
        let g = data.nrows();
        debug_assert_eq!(g, self.n_grid());
        let plan = if forward { &self.forward } else { &self.inverse };
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        let flat = data.as_slice_mut().expect("contiguous array");
        fft2_flat(plan, flat, g, &mut scratch);
    }

    /// Collocation points along one axis.
    pub fn grid_coords(&self) -> Vec<f64> {
        let g = self.n_grid();
        (0..g).map(|m| 2.0 * std::f64::consts::PI * m as f64 / g as f64).collect()
    }
}

fn transpose_square(data: &mut [Complex64], g: usize) {
    for r in 0..g {
        for c in r + 1..g {
            data.swap(r * g + c, c * g + r);
        }
    }
}

fn fft2_flat(plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64], g: usize, scratch: &mut [Complex64]) {
    for r in 0..g {
        plan.process_with_scratch(&mut data[r * g..(r + 1) * g], scratch);
    }
    transpose_square(data, g);
    for r in 0..g {
        plan.process_with_scratch(&mut data[r * g..(r + 1) * g], scratch);
    }
    transpose_square(data, g);
}

/// Square 2D FFT with cached plans and caller-provided buffers; used by the
/// strip solver's product sweeps where allocation churn matters.
pub struct Fft2 {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn scratch_len(&self) -> usize {
        self.forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len())
    }

    pub fn process(&self, data: &mut [Complex64], forward: bool, scratch: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.size * self.size);
        let plan = if forward { &self.forward } else { &self.inverse };
        fft2_flat(plan, data, self.size, scratch);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let t = Truncation::new(5);
        for (idx, j) in t.freqs().enumerate() {
            assert_eq!(t.index_of(j), Some(idx));
            assert_eq!(t.freq_at(idx), j);
        }
        assert_eq!(t.index_of((6, 0)), None);
    }

    #[test]
    fn lattice_symmetric_and_contains_zero() {
        let t = Truncation::new(3);
        assert!(t.contains((0, 0)));
        for j in t.freqs() {
            assert!(t.contains((-j.0, -j.1)));
        }
    }

    #[test]
    fn transform_roundtrip() {
        let t = Truncation::new(8);
        let g = t.n_grid();
        let mut coeffs = Array2::<Complex64>::zeros((g, g));
        coeffs[t.box_index((1, 0))] = Complex64::new(0.3, -0.7);
        coeffs[t.box_index((-4, 5))] = Complex64::new(1.1, 0.2);
        let grid = t.to_grid(&coeffs);
        let back = t.to_coeffs(&grid);
        let err: f64 = coeffs
            .iter()
            .zip(back.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "roundtrip err {err}");
    }

    #[test]
    fn single_mode_grid_values() {
        let t = Truncation::new(4);
        let g = t.n_grid();
        let mut coeffs = Array2::<Complex64>::zeros((g, g));
        coeffs[t.box_index((1, 2))] = Complex64::new(1.0, 0.0);
        let grid = t.to_grid(&coeffs);
        let xs = t.grid_coords();
        for m1 in 0..g {
            for m2 in 0..g {
                let expect = Complex64::new(0.0, xs[m1] + 2.0 * xs[m2]).exp();
                assert!((grid[[m1, m2]] - expect).norm() < 1e-12);
            }
        }
    }
}
