use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use super::truncation::{Grid, Truncation};

/// Fourier multiplier kinds for [`GridField::differential`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiffKind {
    GradX1,
    GradX2,
    Laplacian,
    /// `|j|^σ`, with the zero mode mapped to 0.
    AbsPower(f64),
}

/// Truncated Fourier representation of a function on T².
#[derive(Clone)]
pub struct GridField {
    trunc: Arc<Truncation>,
    coeffs: Array2<Complex64>,
    real: bool,
    mean_zero: bool,
}

impl std::fmt::Debug for GridField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridField")
            .field("n_max", &self.trunc.n_max())
            .field("real", &self.real)
            .field("mean_zero", &self.mean_zero)
            .finish()
    }
}

impl GridField {
    pub fn zeros(trunc: &Arc<Truncation>) -> Self {
        let g = trunc.n_grid();
        Self {
            trunc: Arc::clone(trunc),
            coeffs: Array2::zeros((g, g)),
            real: true,
            mean_zero: true,
        }
    }

    pub fn from_coeffs(trunc: &Arc<Truncation>, coeffs: Array2<Complex64>) -> Self {
        assert_eq!(coeffs.nrows(), trunc.n_grid());
        let mut f = Self { trunc: Arc::clone(trunc), coeffs, real: false, mean_zero: false };
        f.refresh_flags();
        f
    }

    /// Field with a single unit coefficient at frequency `j` (`e^{i j·x}`).
    pub fn single_mode(trunc: &Arc<Truncation>, j: (i64, i64)) -> Self {
        let g = trunc.n_grid();
        let mut coeffs = Array2::zeros((g, g));
        coeffs[trunc.box_index(j)] = Complex64::new(1.0, 0.0);
        Self { trunc: Arc::clone(trunc), coeffs, real: false, mean_zero: j != (0, 0) }
    }

    /// `cos(j·x)` as a real field.
    pub fn cosine(trunc: &Arc<Truncation>, j: (i64, i64), amp: f64) -> Self {
        let g = trunc.n_grid();
        let mut coeffs = Array2::<Complex64>::zeros((g, g));
        let half = Complex64::new(0.5 * amp, 0.0);
        coeffs[trunc.box_index(j)] = half;
        coeffs[trunc.box_index((-j.0, -j.1))] += half;
        Self { trunc: Arc::clone(trunc), coeffs, real: true, mean_zero: j != (0, 0) }
    }

    /// Sample a physical-space function on the collocation grid.
    pub fn from_fn(trunc: &Arc<Truncation>, f: impl Fn(f64, f64) -> f64) -> Self {
        let xs = trunc.grid_coords();
        let g = trunc.n_grid();
        let grid = Array2::from_shape_fn((g, g), |(m1, m2)| Complex64::new(f(xs[m1], xs[m2]), 0.0));
        let coeffs = trunc.to_coeffs(&grid);
        let mut out = Self { trunc: Arc::clone(trunc), coeffs, real: true, mean_zero: false };
        out.symmetrize_real();
        out.refresh_flags();
        out
    }

    pub fn truncation(&self) -> &Arc<Truncation> {
        &self.trunc
    }

    pub fn coeffs(&self) -> &Array2<Complex64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn is_mean_zero(&self) -> bool {
        self.mean_zero
    }

    pub fn coeff(&self, j: (i64, i64)) -> Complex64 {
        match self.trunc.contains(j) {
            true => self.coeffs[self.trunc.box_index(j)],
            false => Complex64::new(0.0, 0.0),
        }
    }

    pub fn set_coeff(&mut self, j: (i64, i64), v: Complex64) {
        let idx = self.trunc.box_index(j);
        self.coeffs[idx] = v;
        self.real = false;
        if j == (0, 0) {
            self.mean_zero = v == Complex64::new(0.0, 0.0);
        }
    }

    fn refresh_flags(&mut self) {
        self.mean_zero = self.coeff((0, 0)).norm() == 0.0;
        let n = self.trunc.n_max() as i64;
        let mut real = true;
        'outer: for j1 in 0..=n {
            for j2 in -n..=n {
                let a = self.coeff((j1, j2));
                let b = self.coeff((-j1, -j2));
                if (a - b.conj()).norm() > 1e-15 * (1.0 + a.norm()) {
                    real = false;
                    break 'outer;
                }
            }
        }
        self.real = real;
    }

    /// Enforce `û(-j) = conj û(j)` exactly by symmetrization.
    pub fn symmetrize_real(&mut self) {
        let n = self.trunc.n_max() as i64;
        for j1 in 0..=n {
            let lo = if j1 == 0 { 0 } else { -n };
            for j2 in lo..=n {
                let jp = self.trunc.box_index((j1, j2));
                let jm = self.trunc.box_index((-j1, -j2));
                let avg = 0.5 * (self.coeffs[jp] + self.coeffs[jm].conj());
                self.coeffs[jp] = avg;
                self.coeffs[jm] = avg.conj();
            }
        }
        let z = self.trunc.box_index((0, 0));
        self.coeffs[z] = Complex64::new(self.coeffs[z].re, 0.0);
        self.real = true;
    }

    /// Zero the mean and set the flag.
    pub fn project_mean_zero(&mut self) {
        let z = self.trunc.box_index((0, 0));
        self.coeffs[z] = Complex64::new(0.0, 0.0);
        self.mean_zero = true;
    }

    pub fn to_grid(&self) -> Grid {
        self.trunc.to_grid(&self.coeffs)
    }

    /// `(Σ_j w(j)^{2s} |û_j|²)^{1/2}` with `w = ⟨j⟩` (inhomogeneous) or `|j|`.
    pub fn sobolev_norm(&self, s: f64, homogeneous: bool) -> f64 {
        let mut sum = 0.0;
        for (idx, j) in self.trunc.freqs().enumerate() {
            let c = self.coeffs.as_slice().unwrap()[idx];
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let r2 = (j.0 * j.0 + j.1 * j.1) as f64;
            let w2s = if homogeneous {
                if j == (0, 0) {
                    continue;
                }
                r2.powf(s)
            } else {
                (1.0 + r2).powf(s)
            };
            sum += w2s * c.norm_sqr();
        }
        sum.sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0, false)
    }

    /// Keep only frequencies selected by `keep`; `Π_Θ + Π_{Θ^c} = Id`.
    pub fn project(&self, keep: impl Fn((i64, i64)) -> bool) -> Self {
        let mut out = self.clone();
        for (idx, j) in self.trunc.freqs().enumerate() {
            if !keep(j) {
                out.coeffs.as_slice_mut().unwrap()[idx] = Complex64::new(0.0, 0.0);
            }
        }
        out.refresh_flags();
        out
    }

    /// Translation `u(· + υ)`: multiplies `û_j` by `e^{i j·υ}`.
    pub fn translate(&self, v: [f64; 2]) -> Self {
        let mut out = self.clone();
        for (idx, j) in self.trunc.freqs().enumerate() {
            let phase = Complex64::new(0.0, j.0 as f64 * v[0] + j.1 as f64 * v[1]).exp();
            out.coeffs.as_slice_mut().unwrap()[idx] *= phase;
        }
        out.refresh_flags();
        out
    }

    /// Apply a Fourier multiplier derivative.
    pub fn differential(&self, kind: DiffKind) -> Self {
        let mut out = self.clone();
        for (idx, j) in self.trunc.freqs().enumerate() {
            let c = &mut out.coeffs.as_slice_mut().unwrap()[idx];
            let (j1, j2) = (j.0 as f64, j.1 as f64);
            *c = match kind {
                DiffKind::GradX1 => *c * Complex64::new(0.0, j1),
                DiffKind::GradX2 => *c * Complex64::new(0.0, j2),
                DiffKind::Laplacian => *c * (-(j1 * j1 + j2 * j2)),
                DiffKind::AbsPower(sigma) => {
                    if j == (0, 0) {
                        Complex64::new(0.0, 0.0)
                    } else {
                        *c * (j1 * j1 + j2 * j2).sqrt().powf(sigma)
                    }
                }
            };
        }
        out.refresh_flags();
        out
    }

    /// Apply a scalar multiplier `m(j)` coefficient-wise.
    pub fn multiplier(&self, m: impl Fn((i64, i64)) -> Complex64) -> Self {
        let mut out = self.clone();
        for (idx, j) in self.trunc.freqs().enumerate() {
            out.coeffs.as_slice_mut().unwrap()[idx] *= m(j);
        }
        out.refresh_flags();
        out
    }

    /// Zero all modes with `max(|j1|,|j2|) > 2/3·n_max` (dealiasing).
    pub fn dealias(&self) -> Self {
        let cut = (2 * self.trunc.n_max() / 3) as i64;
        self.project(|j| j.0.abs() <= cut && j.1.abs() <= cut)
    }

    /// Pointwise product computed on the collocation grid (no dealiasing).
    pub fn pointwise_mul(&self, other: &Self) -> Self {
        let a = self.to_grid();
        let b = other.to_grid();
        let prod = &a * &b;
        let mut out = Self::from_coeffs(&self.trunc, self.trunc.to_coeffs(&prod));
        if self.real && other.real {
            out.symmetrize_real();
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.mapv_inplace(|v| v * c);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.coeffs += &other.coeffs;
        out.real = self.real && other.real;
        out.mean_zero = self.mean_zero && other.mean_zero;
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.coeffs -= &other.coeffs;
        out.real = self.real && other.real;
        out.mean_zero = self.mean_zero && other.mean_zero;
        out
    }

    /// `∫_{T²} u v̄ dx` by Parseval.
    pub fn l2_inner(&self, other: &Self) -> Complex64 {
        let four_pi2 = (2.0 * std::f64::consts::PI).powi(2);
        let mut sum = Complex64::new(0.0, 0.0);
        for (a, b) in self.coeffs.iter().zip(other.coeffs.iter()) {
            sum += a * b.conj();
        }
        sum * four_pi2
    }

    /// `∫_{T²} u dx` by the zero coefficient.
    pub fn integral(&self) -> Complex64 {
        self.coeff((0, 0)) * (2.0 * std::f64::consts::PI).powi(2)
    }
}

/// Zakharov-Craig-Sulem state `(η, ψ)` with physical parameters.
#[derive(Clone, Debug)]
pub struct ZcsState {
    pub eta: GridField,
    pub psi: GridField,
    pub t: f64,
    pub kappa: f64,
    pub g: f64,
}

impl ZcsState {
    /// New state at `t = 0` with gravity fixed to 1. Enforces the reality and
    /// mean-zero invariants on both fields.
    pub fn new(eta: GridField, psi: GridField, kappa: f64) -> Self {
        Self::with_gravity(eta, psi, kappa, 1.0)
    }

    pub fn with_gravity(mut eta: GridField, mut psi: GridField, kappa: f64, g: f64) -> Self {
        assert!(kappa > 0.0, "surface tension must be positive");
        eta.symmetrize_real();
        eta.project_mean_zero();
        psi.symmetrize_real();
        psi.project_mean_zero();
        Self { eta, psi, t: 0.0, kappa, g }
    }

    pub fn truncation(&self) -> &Arc<Truncation> {
        self.eta.truncation()
    }

    pub fn zero(trunc: &Arc<Truncation>, kappa: f64) -> Self {
        Self::new(GridField::zeros(trunc), GridField::zeros(trunc), kappa)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn trunc() -> Arc<Truncation> {
        Truncation::new(8)
    }

    #[test]
    fn norm_single_mode() {
        let t = trunc();
        let u = GridField::single_mode(&t, (1, 0));
        assert_relative_eq!(u.sobolev_norm(0.0, false), 1.0, epsilon = 1e-14);
        // ⟨(1,0)⟩ = √2 by hand
        assert_relative_eq!(u.sobolev_norm(1.0, false), 2f64.sqrt(), epsilon = 1e-14);
        let z = GridField::zeros(&t);
        assert_eq!(z.sobolev_norm(0.0, false), 0.0);
    }

    #[test]
    fn project_cases() {
        let t = trunc();
        let u = GridField::single_mode(&t, (1, 0)).add(&GridField::single_mode(&t, (3, 0)));
        // full projection is identity
        let full = u.project(|_| true);
        assert_eq!(full.coeffs(), u.coeffs());
        // Θ = {0} on a mean-zero field
        let zero = u.project(|j| j == (0, 0));
        assert_eq!(zero.l2_norm(), 0.0);
        // |j| ≤ 1/ε with ε=0.5 keeps (1,0) only
        let low = u.project(|j| ((j.0 * j.0 + j.1 * j.1) as f64).sqrt() <= 2.0);
        assert_relative_eq!((low.coeff((1, 0)) - Complex64::new(1.0, 0.0)).norm(), 0.0);
        assert_eq!(low.coeff((3, 0)).norm(), 0.0);
        // complement sums back
        let hi = u.project(|j| ((j.0 * j.0 + j.1 * j.1) as f64).sqrt() > 2.0);
        let sum = low.add(&hi);
        let err: f64 =
            sum.coeffs().iter().zip(u.coeffs().iter()).map(|(a, b)| (a - b).norm()).sum();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn translate_phase_and_isometry() {
        let t = trunc();
        let u = GridField::single_mode(&t, (1, 0));
        let v = u.translate([std::f64::consts::PI, 0.0]);
        // phase e^{iπ} = −1
        assert_relative_eq!((v.coeff((1, 0)) + Complex64::new(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        let w = GridField::from_fn(&t, |x1, x2| (x1).sin() + 0.3 * (2.0 * x2).cos());
        let shifted = w.translate([0.7, -1.3]);
        for &s in &[0.0, 1.0, 2.5] {
            assert_relative_eq!(
                shifted.sobolev_norm(s, false),
                w.sobolev_norm(s, false),
                epsilon = 1e-12
            );
        }
        // υ = 0 is the identity
        let id = w.translate([0.0, 0.0]);
        assert_eq!(id.coeffs(), w.coeffs());
    }

    #[test]
    fn differential_examples() {
        let t = trunc();
        // laplacian of e^{i(1,1)x} is −2 e^{i(1,1)x}
        let u = GridField::single_mode(&t, (1, 1));
        let lap = u.differential(DiffKind::Laplacian);
        assert_relative_eq!((lap.coeff((1, 1)) + Complex64::new(2.0, 0.0)).norm(), 0.0);
        // |D| of a constant is 0
        let c = GridField::single_mode(&t, (0, 0));
        assert_eq!(c.differential(DiffKind::AbsPower(1.0)).l2_norm(), 0.0);
        // ∂_x1 cos(x1) = −sin(x1)
        let cosx = GridField::cosine(&t, (1, 0), 1.0);
        let d = cosx.differential(DiffKind::GradX1);
        let minus_sin = GridField::from_fn(&t, |x1, _| -(x1.sin()));
        let err = d.sub(&minus_sin).l2_norm();
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn real_fields_have_real_grid_values() {
        let t = trunc();
        let u = GridField::from_fn(&t, |x1, x2| (3.0 * x1).cos() * (x2).sin() + 0.2);
        assert!(u.is_real());
        let grid = u.to_grid();
        let max_im = grid.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        assert!(max_im <= 1e-12);
    }

    #[test]
    fn parseval_quadrature() {
        let t = trunc();
        let u = GridField::from_fn(&t, |x1, x2| (x1).cos() + 0.5 * (2.0 * x1 + x2).sin());
        let coeff_sq: f64 = u.coeffs().iter().map(|c| c.norm_sqr()).sum();
        let grid = u.to_grid();
        let quad = grid.iter().map(|v| v.norm_sqr()).sum::<f64>() / grid.len() as f64;
        assert_relative_eq!(coeff_sq, quad, max_relative = 1e-10);
    }

    #[test]
    fn dealias_cuts_high_modes() {
        let t = trunc();
        let u = GridField::single_mode(&t, (6, 0)).add(&GridField::single_mode(&t, (2, 1)));
        let d = u.dealias();
        assert_eq!(d.coeff((6, 0)).norm(), 0.0);
        assert_eq!(d.coeff((2, 1)).norm(), 1.0);
    }
}
