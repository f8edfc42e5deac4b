use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use ndarray::Array2;
use num_complex::Complex64;

use crate::spectral::{Grid, Truncation};

use super::ParacalcError;

type MultiplierFn = dyn Fn([f64; 2]) -> Complex64 + Send + Sync;
type GeneralFn = dyn Fn([f64; 2]) -> Grid + Send + Sync;

/// Structural form of a symbol `a(x, ξ)`; the kinds with separable structure
/// get exact fast paths in quantization.
pub enum SymbolKind {
    /// `m(ξ)`, independent of x.
    Multiplier(Arc<MultiplierFn>),
    /// `f(x)`, independent of ξ (stored as x-Fourier coefficients).
    Function(Arc<Array2<Complex64>>),
    /// `f(x)·m(ξ)`.
    Product(Arc<Array2<Complex64>>, Arc<MultiplierFn>),
    /// `Σ_k c_k(ξ) e^{i k·x}` over an explicit finite mode list.
    FourierModes(Vec<((i64, i64), Arc<MultiplierFn>)>),
    /// Arbitrary evaluator producing the x-grid snapshot at a given ξ.
    General(Arc<GeneralFn>),
    /// Pointwise sum.
    Sum(Vec<Arc<Symbol>>),
}

/// Symbol of declared order `m`: evaluator `(x-grid, ξ) ↦ ℂ` with metadata.
/// The x-Fourier coefficients at half-integer midpoints are computed by one
/// FFT of the snapshot and cached keyed by ξ.
pub struct Symbol {
    kind: SymbolKind,
    trunc: Arc<Truncation>,
    pub order: f64,
    /// Homogeneity degree in the state, if meaningful.
    pub homogeneity: Option<u32>,
    pub real_valued: bool,
    pub even_in_xi: bool,
    /// Support radius R: eval(·, ξ) = 0 for |ξ| > 11R.
    pub r_localized: Option<f64>,
    coeff_cache: Mutex<HashMap<(u64, u64), Arc<Array2<Complex64>>>>,
}

impl std::fmt::Debug for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Symbol")
            .field("order", &self.order)
            .field("real_valued", &self.real_valued)
            .finish()
    }
}

impl Symbol {
    pub fn new(trunc: &Arc<Truncation>, kind: SymbolKind, order: f64) -> Self {
        Self {
            kind,
            trunc: Arc::clone(trunc),
            order,
            homogeneity: None,
            real_valued: false,
            even_in_xi: false,
            r_localized: None,
            coeff_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn multiplier(
        trunc: &Arc<Truncation>,
        order: f64,
        m: impl Fn([f64; 2]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        let mut s = Self::new(trunc, SymbolKind::Multiplier(Arc::new(m)), order);
        s.real_valued = false;
        s
    }

    /// Real radial multiplier, marked even in ξ.
    pub fn radial_multiplier(
        trunc: &Arc<Truncation>,
        order: f64,
        m: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let mut s = Self::multiplier(trunc, order, move |xi| {
            Complex64::new(m((xi[0] * xi[0] + xi[1] * xi[1]).sqrt()), 0.0)
        });
        s.real_valued = true;
        s.even_in_xi = true;
        s
    }

    pub fn constant(trunc: &Arc<Truncation>, c: f64) -> Self {
        let mut s = Self::multiplier(trunc, 0.0, move |_| Complex64::new(c, 0.0));
        s.real_valued = true;
        s.even_in_xi = true;
        s
    }

    /// Symbol equal to a function of x alone (order 0).
    pub fn function(trunc: &Arc<Truncation>, grid: &Grid) -> Self {
        let coeffs = trunc.to_coeffs(grid);
        let real = grid.iter().all(|v| v.im.abs() <= 1e-12);
        let mut s = Self::new(trunc, SymbolKind::Function(Arc::new(coeffs)), 0.0);
        s.real_valued = real;
        s.even_in_xi = true;
        s
    }

    pub fn product(
        trunc: &Arc<Truncation>,
        grid: &Grid,
        order: f64,
        m: impl Fn([f64; 2]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        let coeffs = trunc.to_coeffs(grid);
        Self::new(trunc, SymbolKind::Product(Arc::new(coeffs), Arc::new(m)), order)
    }

    pub fn fourier_modes(
        trunc: &Arc<Truncation>,
        order: f64,
        modes: Vec<((i64, i64), Arc<MultiplierFn>)>,
    ) -> Self {
        Self::new(trunc, SymbolKind::FourierModes(modes), order)
    }

    pub fn general(
        trunc: &Arc<Truncation>,
        order: f64,
        eval: impl Fn([f64; 2]) -> Grid + Send + Sync + 'static,
    ) -> Self {
        Self::new(trunc, SymbolKind::General(Arc::new(eval)), order)
    }

    pub fn sum(parts: Vec<Arc<Symbol>>) -> Self {
        assert!(!parts.is_empty());
        let trunc = Arc::clone(parts[0].truncation());
        let order = parts.iter().map(|p| p.order).fold(f64::NEG_INFINITY, f64::max);
        let real = parts.iter().all(|p| p.real_valued);
        let mut s = Self::new(&trunc, SymbolKind::Sum(parts), order);
        s.real_valued = real;
        s
    }

    pub fn truncation(&self) -> &Arc<Truncation> {
        &self.trunc
    }

    pub fn with_order(mut self, order: f64) -> Self {
        self.order = order;
        self
    }

    pub fn with_real(mut self, real: bool) -> Self {
        self.real_valued = real;
        self
    }

    pub fn with_homogeneity(mut self, p: u32) -> Self {
        self.homogeneity = Some(p);
        self
    }

    pub fn with_r_localized(mut self, r: f64) -> Self {
        self.r_localized = Some(r);
        self
    }

    /// Snapshot of `a(·, ξ)` on the collocation grid.
    pub fn eval(&self, xi: [f64; 2]) -> Grid {
        let g = self.trunc.n_grid();
        match &self.kind {
            SymbolKind::Multiplier(m) => Array2::from_elem((g, g), m(xi)),
            SymbolKind::Function(coeffs) => self.trunc.to_grid(coeffs),
            SymbolKind::Product(coeffs, m) => {
                let mut grid = self.trunc.to_grid(coeffs);
                let v = m(xi);
                grid.mapv_inplace(|z| z * v);
                grid
            }
            SymbolKind::FourierModes(modes) => {
                let xs = self.trunc.grid_coords();
                let mut grid = Array2::<Complex64>::zeros((g, g));
                for (k, c) in modes {
                    let v = c(xi);
                    if v.norm() == 0.0 {
                        continue;
                    }
                    for m1 in 0..g {
                        let p1 = k.0 as f64 * xs[m1];
                        for m2 in 0..g {
                            let phase = Complex64::new(0.0, p1 + k.1 as f64 * xs[m2]).exp();
                            grid[[m1, m2]] += v * phase;
                        }
                    }
                }
                grid
            }
            SymbolKind::General(f) => f(xi),
            SymbolKind::Sum(parts) => {
                let mut grid = parts[0].eval(xi);
                for p in &parts[1..] {
                    grid += &p.eval(xi);
                }
                grid
            }
        }
    }

    /// x-Fourier coefficient `â(k, ξ)`. Exact for separable kinds; one cached
    /// FFT of the snapshot otherwise.
    pub fn fourier_coeff(&self, k: (i64, i64), xi: [f64; 2]) -> Result<Complex64, ParacalcError> {
        let c = match &self.kind {
            SymbolKind::Multiplier(m) => {
                if k == (0, 0) {
                    m(xi)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            SymbolKind::Function(coeffs) => match self.trunc.contains(k) {
                true => coeffs[self.trunc.box_index(k)],
                false => Complex64::new(0.0, 0.0),
            },
            SymbolKind::Product(coeffs, m) => match self.trunc.contains(k) {
                true => coeffs[self.trunc.box_index(k)] * m(xi),
                false => Complex64::new(0.0, 0.0),
            },
            SymbolKind::FourierModes(modes) => modes
                .iter()
                .filter(|(km, _)| *km == k)
                .map(|(_, c)| c(xi))
                .sum(),
            SymbolKind::General(_) => {
                if !self.trunc.contains(k) {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                let coeffs = self.snapshot_coeffs(xi)?;
                coeffs[self.trunc.box_index(k)]
            }
            SymbolKind::Sum(parts) => {
                let mut sum = Complex64::new(0.0, 0.0);
                for p in parts {
                    sum += p.fourier_coeff(k, xi)?;
                }
                sum
            }
        };
        if c.re.is_nan() || c.im.is_nan() || c.re.is_infinite() || c.im.is_infinite() {
            return Err(ParacalcError::EvalFailed { k, xi });
        }
        Ok(c)
    }

    fn snapshot_coeffs(&self, xi: [f64; 2]) -> Result<Arc<Array2<Complex64>>, ParacalcError> {
        let key = (xi[0].to_bits(), xi[1].to_bits());
        if let Some(hit) = self.coeff_cache.lock().unwrap().get(&key) {
            return Ok(Arc::clone(hit));
        }
        let grid = self.eval(xi);
        if grid.iter().any(|v| v.re.is_nan() || v.im.is_nan()) {
            return Err(ParacalcError::EvalFailed { k: (0, 0), xi });
        }
        let coeffs = Arc::new(self.trunc.to_coeffs(&grid));
        let mut cache = self.coeff_cache.lock().unwrap();
        // cap the cache; probes sweep many ξ but each is visited few times
        if cache.len() > 1 << 17 {
            cache.clear();
        }
        cache.insert(key, Arc::clone(&coeffs));
        Ok(coeffs)
    }

    /// `conj a(x, −ξ)`, the symbol of the conjugated block in a real-to-real
    /// matrix operator.
    pub fn conj_reflect(self: &Arc<Self>) -> Symbol {
        let inner = Arc::clone(self);
        let mut s = Symbol::general(&self.trunc, self.order, move |xi| {
            let mut grid = inner.eval([-xi[0], -xi[1]]);
            grid.mapv_inplace(|z| z.conj());
            grid
        });
        s.real_valued = self.real_valued;
        s.even_in_xi = self.even_in_xi;
        s.r_localized = self.r_localized;
        s
    }

    /// Pointwise-scaled symbol `c·a`.
    pub fn scaled(self: &Arc<Self>, c: Complex64) -> Symbol {
        let inner = Arc::clone(self);
        let mut s = Symbol::general(&self.trunc, self.order, move |xi| {
            let mut grid = inner.eval(xi);
            grid.mapv_inplace(|z| z * c);
            grid
        });
        s.real_valued = self.real_valued && c.im == 0.0;
        s.even_in_xi = self.even_in_xi;
        s.r_localized = self.r_localized;
        s
    }
}

/// Centered finite-difference step in ξ: `max(1e−4·⟨ξ⟩, 1e−4)`.
pub fn fd_step(xi: [f64; 2]) -> f64 {
    let bracket = (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    (1e-4 * bracket).max(1e-4)
}

/// `∂_ξ^α a(·, ξ)` by nested centered differences (numerically, order ≤ 4).
pub fn xi_derivative(a: &Symbol, alpha: (u32, u32), xi: [f64; 2]) -> Grid {
    if alpha == (0, 0) {
        return a.eval(xi);
    }
    let h = fd_step(xi);
    if alpha.0 > 0 {
        let mut plus = xi_derivative(a, (alpha.0 - 1, alpha.1), [xi[0] + h, xi[1]]);
        let minus = xi_derivative(a, (alpha.0 - 1, alpha.1), [xi[0] - h, xi[1]]);
        plus -= &minus;
        plus.mapv_inplace(|z| z / (2.0 * h));
        plus
    } else {
        let mut plus = xi_derivative(a, (alpha.0, alpha.1 - 1), [xi[0], xi[1] + h]);
        let minus = xi_derivative(a, (alpha.0, alpha.1 - 1), [xi[0], xi[1] - h]);
        plus -= &minus;
        plus.mapv_inplace(|z| z / (2.0 * h));
        plus
    }
}

/// `∂_x^β` of a grid snapshot via the spectral multiplier `(i j)^β`.
pub fn x_derivative(trunc: &Arc<Truncation>, grid: &Grid, beta: (u32, u32)) -> Grid {
    if beta == (0, 0) {
        return grid.clone();
    }
    let coeffs = trunc.to_coeffs(grid);
    let mut out = coeffs;
    for (idx, j) in trunc.freqs().enumerate() {
        let f1 = Complex64::new(0.0, j.0 as f64).powu(beta.0);
        let f2 = Complex64::new(0.0, j.1 as f64).powu(beta.1);
        out.as_slice_mut().unwrap()[idx] *= f1 * f2;
    }
    trunc.to_grid(&out)
}

/// Seminorm diagnostic `|a|_{m,σ}` with δ = 1: max over the (x, ξ)-sample
/// grid of `|∂_x^α ∂_ξ^β a| ⟨ξ⟩^{−m+|β|}`, ξ sampled on dyadic circles.
/// Reported as a diagnostic, never asserted exactly.
pub fn seminorm_diagnostic(a: &Symbol, m: f64, sigma: u32) -> f64 {
    let sigma = sigma.min(4);
    let trunc = a.truncation();
    let mut worst: f64 = 0.0;
    let mut radius = 1.0;
    while radius <= trunc.n_max() as f64 {
        for i in 0..8 {
            let phi = std::f64::consts::PI * i as f64 / 4.0;
            let xi = [radius * phi.cos(), radius * phi.sin()];
            let bracket = (1.0 + radius * radius).sqrt();
            for total in 0..=sigma {
                for a1 in 0..=total {
                    let b_total = total - a1;
                    for b1 in 0..=b_total {
                        let beta = (b1, b_total - b1);
                        // split |α|+|β| ≤ σ between x and ξ
                        let grid = xi_derivative(a, beta, xi);
                        let gx = x_derivative(trunc, &grid, (a1, 0));
                        let sup = gx.iter().map(|v| v.norm()).fold(0.0, f64::max);
                        let weight = bracket.powf(-m + (beta.0 + beta.1) as f64);
                        worst = worst.max(sup * weight);
                    }
                }
            }
        }
        radius *= 2.0;
    }
    worst
}
