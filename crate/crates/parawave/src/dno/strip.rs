use std::collections::HashMap;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::spectral::{DiffKind, Fft2, GridField, Truncation};

use super::DnoError;

/// Parameters of the flattened-strip elliptic solver.
#[derive(Debug, Clone, Copy)]
pub struct StripParams {
    /// Number of vertical intervals; the grid has `n_y + 1` levels.
    pub n_y: usize,
    /// Strip depth Y; nodes are `y_m = −Y (m/n_y)²`, clustered at the surface.
    pub depth: f64,
    /// Relative update tolerance of the fixed-point iteration.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for StripParams {
    fn default() -> Self {
        Self { n_y: 80, depth: 6.0, tol: 1e-10, max_iter: 200 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IterStat {
    pub iteration: usize,
    /// Fixed-point update norm relative to the flat extension.
    pub residual: f64,
    pub update_ratio: f64,
}

/// Velocity potential on the strip: Fourier-in-x rows per y-level,
/// `values[[m, mode]]`, level 0 at the surface `y = 0`.
pub struct StripField {
    pub values: Array2<Complex64>,
    pub y: Vec<f64>,
    /// Bottom-row to top-row norm ratio ≤ 1e−8 (truncation adequacy).
    pub decay_ok: bool,
}

pub struct StripSolution {
    pub phi: StripField,
    /// Correction `u = φ − e^{y|D|}ψ`, reusable as a warm start.
    pub correction: Array2<Complex64>,
    pub stats: Vec<IterStat>,
}

struct TriFactor {
    /// Forward-elimination data: `inv_diag[m]` and `upper[m]` after LU.
    inv_diag: Vec<f64>,
    upper: Vec<f64>,
    lower: Vec<f64>,
}

impl TriFactor {
    /// Factor the tridiagonal rows (lower, diag, upper), m = 1..n.
    fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Self {
        let n = diag.len();
        let mut inv_diag = vec![0.0; n];
        let mut up = upper;
        let mut d = diag[0];
        inv_diag[0] = 1.0 / d;
        up[0] *= inv_diag[0];
        for m in 1..n {
            d = diag[m] - lower[m] * up[m - 1];
            inv_diag[m] = 1.0 / d;
            if m < n - 1 {
                up[m] *= inv_diag[m];
            }
        }
        Self { inv_diag, upper: up, lower }
    }

    fn solve(&self, rhs: &mut [Complex64]) {
        let n = rhs.len();
        rhs[0] *= self.inv_diag[0];
        for m in 1..n {
            rhs[m] = (rhs[m] - self.lower[m] * rhs[m - 1]) * self.inv_diag[m];
        }
        for m in (0..n - 1).rev() {
            let t = rhs[m + 1];
            rhs[m] -= self.upper[m] * t;
        }
    }
}

/// Shared per-(truncation, params) solver context: vertical grid, flat decay
/// table, per-|j|² tridiagonal factorizations, active (dealiased) mode set.
pub struct StripContext {
    pub trunc: Arc<Truncation>,
    pub params: StripParams,
    y: Vec<f64>,
    /// `e^{y_m |j|}` per (level, mode).
    decay: Array2<f64>,
    factors: Vec<Arc<TriFactor>>,
    abs_j: Vec<f64>,
    zero_mode: usize,
    active: Vec<bool>,
    /// Row-major list of active mode indices.
    active_idx: Vec<usize>,
    surface_dy_weights: [f64; 6],
    /// Per-row 7-point σ-stencils for the high-order deferred-correction
    /// residual: window start and (∂_σ, ∂_σσ) weights for rows 1..n_y−1.
    res_rows: Vec<ResRow>,
    /// Biased 6-point ∂_σ stencils next to each end and 5-point backward at
    /// the bottom, used by the level-derivative sweep.
    d1_top: Vec<f64>,
    d1_bot: Vec<f64>,
    d1_end: Vec<f64>,
    /// Product-grid FFT (power-of-two side ≥ 3·cut+1) for the F(η) sweep.
    pg: Fft2,
    /// Box-order mode index → product-grid position, and the position of −j.
    perm: Vec<usize>,
    perm_neg: Vec<usize>,
}

struct ResRow {
    start: usize,
    w1: Vec<f64>,
    w2: Vec<f64>,
}

impl StripContext {
    pub fn new(trunc: &Arc<Truncation>, params: StripParams) -> Self {
        let n_y = params.n_y;
        let yy = params.depth;
        let dsig = 1.0 / n_y as f64;
        let y: Vec<f64> = (0..=n_y).map(|m| -yy * (m as f64 * dsig).powi(2)).collect();

        let n_modes = trunc.len();
        let mut abs_j = vec![0.0; n_modes];
        let cut = (2 * trunc.n_max() / 3) as i64;
        let mut active = vec![false; n_modes];
        for (idx, j) in trunc.freqs().enumerate() {
            abs_j[idx] = ((j.0 * j.0 + j.1 * j.1) as f64).sqrt();
            active[idx] = j.0.abs() <= cut && j.1.abs() <= cut;
        }
        let active_idx: Vec<usize> =
            (0..n_modes).filter(|&i| active[i]).collect();

        let mut decay = Array2::<f64>::zeros((n_y + 1, n_modes));
        for m in 0..=n_y {
            for idx in 0..n_modes {
                decay[[m, idx]] = (y[m] * abs_j[idx]).exp();
            }
        }

        // one factorization per distinct |j|²
        let mut by_j2: HashMap<i64, Arc<TriFactor>> = HashMap::new();
        let mut factors = Vec::with_capacity(n_modes);
        for j in trunc.freqs() {
            let j2 = j.0 * j.0 + j.1 * j.1;
            let f = by_j2
                .entry(j2)
                .or_insert_with(|| Arc::new(build_factor(n_y, yy, (j2 as f64).sqrt())));
            factors.push(Arc::clone(f));
        }

        let surface_dy_weights = one_sided_first_derivative(&y[0..6]);
        let zero_mode = trunc.index_of((0, 0)).unwrap();
        // smallest power of two resolving products of two band-`cut` fields
        let p_side = ((3 * cut + 1) as usize).next_power_of_two();
        let pg = Fft2::new(p_side);
        let p_i64 = p_side as i64;
        let fft_pos = |j: (i64, i64)| -> usize {
            (j.0.rem_euclid(p_i64) * p_i64 + j.1.rem_euclid(p_i64)) as usize
        };
        let mut perm = vec![0usize; n_modes];
        let mut perm_neg = vec![0usize; n_modes];
        for (idx, j) in trunc.freqs().enumerate() {
            if active[idx] {
                perm[idx] = fft_pos(j);
                perm_neg[idx] = fft_pos((-j.0, -j.1));
            }
        }

        let sig = |m: usize| m as f64 * dsig;
        let top_nodes: Vec<f64> = (0..6).map(sig).collect();
        let bot_nodes: Vec<f64> = (n_y - 5..=n_y).map(sig).collect();
        let end_nodes: Vec<f64> = (n_y - 4..=n_y).map(sig).collect();
        let d1_top = fd_weights(sig(1), &top_nodes, 1);
        let d1_bot = fd_weights(sig(n_y - 1), &bot_nodes, 1);
        let d1_end = fd_weights(sig(n_y), &end_nodes, 1);
        assert!(n_y >= 8, "strip grid needs at least 8 intervals");
        let res_rows: Vec<ResRow> = (1..n_y)
            .map(|m| {
                let start = m.saturating_sub(3).min(n_y - 6);
                let nodes: Vec<f64> = (start..start + 7).map(sig).collect();
                ResRow {
                    start,
                    w1: fd_weights(sig(m), &nodes, 1),
                    w2: fd_weights(sig(m), &nodes, 2),
                }
            })
            .collect();

        Self {
            trunc: Arc::clone(trunc),
            params,
            y,
            decay,
            factors,
            abs_j,
            zero_mode,
            active,
            active_idx,
            surface_dy_weights,
            res_rows,
            d1_top,
            d1_bot,
            d1_end,
            pg,
            perm,
            perm_neg,
        }
    }

    pub fn y_levels(&self) -> &[f64] {
        &self.y
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.active[idx]
    }

    /// Flat harmonic extension `e^{y_m|D|}ψ` on all levels.
    pub fn flat_extension(&self, psi: &GridField) -> Array2<Complex64> {
        let (levels, n_modes) = self.decay.dim();
        let psi_flat = psi.coeffs().as_slice().unwrap();
        let mut out = Array2::<Complex64>::zeros((levels, n_modes));
        for m in 0..levels {
            let row = &mut out.as_slice_mut().unwrap()[m * n_modes..(m + 1) * n_modes];
            for (idx, r) in row.iter_mut().enumerate() {
                *r = psi_flat[idx] * self.decay[[m, idx]];
            }
        }
        out
    }

    /// `∂_y v` on all levels: centered in the mapped coordinate in the
    /// interior, one-sided at the surface and bottom.
    fn dy_all(&self, v: &Array2<Complex64>) -> Array2<Complex64> {
        let n_y = self.params.n_y;
        let n_modes = v.ncols();
        let dsig = 1.0 / n_y as f64;
        let yy = self.params.depth;
        let mut out = Array2::<Complex64>::zeros((n_y + 1, n_modes));
        // surface: 6-point one-sided in y
        let w = self.surface_dy_weights;
        for idx in 0..n_modes {
            let mut acc = Complex64::default();
            for (l, &wl) in w.iter().enumerate() {
                acc += wl * v[[l, idx]];
            }
            out[[0, idx]] = acc;
        }
        // next-to-surface row: biased 6-point σ-stencil
        {
            let inv_yp = 1.0 / (-2.0 * yy * dsig);
            for idx in 0..n_modes {
                let mut acc = Complex64::default();
                for (l, &w) in self.d1_top.iter().enumerate() {
                    acc += w * v[[l, idx]];
                }
                out[[1, idx]] = acc * inv_yp;
            }
        }
        // interior: (1/y'(σ))·fourth-order centered ∂_σ with y' = −2Yσ
        for m in 2..n_y - 1 {
            let inv_yp = 1.0 / (-2.0 * yy * (m as f64 * dsig));
            let scale = inv_yp / (12.0 * dsig);
            for idx in 0..n_modes {
                out[[m, idx]] = (v[[m - 2, idx]] - 8.0 * v[[m - 1, idx]]
                    + 8.0 * v[[m + 1, idx]]
                    - v[[m + 2, idx]])
                    * scale;
            }
        }
        // next-to-bottom and bottom rows: biased/backward stencils
        {
            let inv_yp = 1.0 / (-2.0 * yy * ((n_y - 1) as f64 * dsig));
            for idx in 0..n_modes {
                let mut acc = Complex64::default();
                for (l, &w) in self.d1_bot.iter().enumerate() {
                    acc += w * v[[n_y - 5 + l, idx]];
                }
                out[[n_y - 1, idx]] = acc * inv_yp;
            }
            let inv_yp = 1.0 / (-2.0 * yy);
            for idx in 0..n_modes {
                let mut acc = Complex64::default();
                for (l, &w) in self.d1_end.iter().enumerate() {
                    acc += w * v[[n_y - 4 + l, idx]];
                }
                out[[n_y, idx]] = acc * inv_yp;
            }
        }
        out
    }

    #[doc(hidden)]
    pub fn profile_dy(&self, v: &Array2<Complex64>) -> Array2<Complex64> {
        self.dy_all(v)
    }

    #[doc(hidden)]
    pub fn profile_flat_inverse(&self, g: &Array2<Complex64>) -> Array2<Complex64> {
        self.flat_inverse(g)
    }

    /// Surface derivative `∂_y v|_{y=0}` as a coefficient row.
    pub fn surface_dy(&self, v: &Array2<Complex64>) -> Vec<Complex64> {
        let w = self.surface_dy_weights;
        let n_modes = v.ncols();
        (0..n_modes)
            .map(|idx| {
                let mut acc = Complex64::default();
                for (l, &wl) in w.iter().enumerate() {
                    acc += wl * v[[l, idx]];
                }
                acc
            })
            .collect()
    }

    /// Solve `(∂_yy − |j|²) u_j = g_j` per active mode with `u_j(0) = 0` and
    /// the transparent bottom condition, returning `u` (surface row zero).
    /// Two deferred-correction passes against a fourth-order residual lift
    /// the interior accuracy to O(Δσ⁴).
    fn flat_inverse(&self, g: &Array2<Complex64>) -> Array2<Complex64> {
        let n_y = self.params.n_y;
        let yy = self.params.depth;
        let dsig = 1.0 / n_y as f64;
        let n_modes = g.ncols();
        let mut sol = Array2::<Complex64>::zeros((self.active_idx.len(), n_y));
        sol.as_slice_mut()
            .unwrap()
            .par_chunks_mut(n_y)
            .enumerate()
            .for_each_init(
                || (vec![Complex64::default(); n_y], vec![Complex64::default(); n_y]),
                |(rhs, res), (row, u)| {
                    let idx = self.active_idx[row];
                    for m in 1..n_y {
                        let sig = m as f64 * dsig;
                        rhs[m - 1] = g[[m, idx]] * (4.0 * yy * yy * sig * sig * dsig * dsig);
                    }
                    rhs[n_y - 1] = g[[n_y, idx]] * (4.0 * yy * yy * dsig * dsig);
                    if idx == self.zero_mode {
                        // transparent tail for the mean mode: model the forcing
                        // below the strip as g₀(−Y)e^{λ(y+Y)} with λ fitted from
                        // the last levels, so ∂_y u₀(−Y) = g₀(−Y)/λ
                        let g_end = g[[n_y, idx]];
                        let g_prev = g[[n_y - 1, idx]];
                        let dy = self.y[n_y - 1] - self.y[n_y];
                        let mut lambda = 1.0;
                        if g_end.norm() > 0.0 {
                            let ratio = (g_prev.norm() / g_end.norm()).max(1.0);
                            lambda = (ratio.ln() / dy).clamp(1.0, 4.0);
                        }
                        let tail = g_end / lambda;
                        rhs[n_y - 1] += tail * (4.0 * dsig * yy - 2.0 * dsig * dsig * yy);
                    }
                    u.copy_from_slice(rhs);
                    self.factors[idx].solve(u);
                    for _ in 0..3 {
                        self.residual4_into(u, rhs, self.abs_j[idx], res);
                        self.factors[idx].solve(res);
                        for (uv, rv) in u.iter_mut().zip(res.iter()) {
                            *uv -= rv;
                        }
                    }
                },
            );
        let mut out = Array2::<Complex64>::zeros((n_y + 1, n_modes));
        for (row, &idx) in self.active_idx.iter().enumerate() {
            for m in 1..=n_y {
                out[[m, idx]] = sol[[row, m - 1]];
            }
        }
        out
    }

    /// Scaled high-order residual of the mapped mode equation
    /// `u'' − u'/σ − (2Yσ|j|)² u = (2Yσ)² g` on `u` (indexed 1..n, u₀ = 0),
    /// using 7-point σ-stencils; the bottom row repeats the second-order
    /// merged transparent row.
    fn residual4_into(&self, u: &[Complex64], rhs: &[Complex64], abs_j: f64, r: &mut [Complex64]) {
        let n_y = self.params.n_y;
        let yy = self.params.depth;
        let dsig = 1.0 / n_y as f64;
        let at = |m: usize| -> Complex64 {
            if m == 0 {
                Complex64::default()
            } else {
                u[m - 1]
            }
        };
        for m in 1..n_y {
            let row = &self.res_rows[m - 1];
            let sig = m as f64 * dsig;
            let c = (2.0 * yy * sig * abs_j).powi(2);
            let mut d1 = Complex64::default();
            let mut d2 = Complex64::default();
            for l in 0..7 {
                let v = at(row.start + l);
                d1 += row.w1[l] * v;
                d2 += row.w2[l] * v;
            }
            r[m - 1] = (d2 - d1 / sig - c * at(m)) * (dsig * dsig) - rhs[m - 1];
        }
        // bottom merged row (second order, as factored)
        let (lower, diag) = bottom_row(n_y, yy, abs_j);
        r[n_y - 1] = lower * at(n_y - 1) + diag * at(n_y) - rhs[n_y - 1];
    }
}

struct Workspace {
    bufs: Vec<Vec<Complex64>>,
    scratch: Vec<Complex64>,
}

/// Coefficients of the ghost-eliminated bottom row (scaled by Δσ²).
fn bottom_row(n_y: usize, yy: f64, abs_j: f64) -> (f64, f64) {
    let dsig = 1.0 / n_y as f64;
    if abs_j > 0.0 {
        (
            2.0,
            -4.0 * yy * abs_j * dsig - 2.0 + 2.0 * yy * abs_j * dsig * dsig
                - (2.0 * yy * abs_j * dsig).powi(2),
        )
    } else {
        (2.0, -2.0)
    }
}

/// Interior row m: `u'' − u'/σ − (2Yσ|j|)² u = (2Yσ)² g`, scaled by Δσ².
/// Bottom row folds in the transparent condition `∂_y u = |j| u`.
fn build_factor(n_y: usize, yy: f64, abs_j: f64) -> TriFactor {
    let dsig = 1.0 / n_y as f64;
    let mut lower = vec![0.0; n_y];
    let mut diag = vec![0.0; n_y];
    let mut upper = vec![0.0; n_y];
    for m in 1..n_y {
        let sig = m as f64 * dsig;
        let i = m - 1;
        lower[i] = 1.0 + 1.0 / (2.0 * m as f64);
        diag[i] = -2.0 - (2.0 * yy * sig * abs_j * dsig).powi(2);
        upper[i] = 1.0 - 1.0 / (2.0 * m as f64);
    }
    // m = 1 couples to the Dirichlet value u_0 = 0, so its lower entry is inert
    lower[0] = 0.0;
    let i = n_y - 1;
    let (lo, di) = bottom_row(n_y, yy, abs_j);
    lower[i] = lo;
    diag[i] = di;
    upper[i] = 0.0;
    TriFactor::new(lower, diag, upper)
}

/// Weights of the first derivative at `ys[0]` from the degree-5 interpolant.
fn one_sided_first_derivative(ys: &[f64]) -> [f64; 6] {
    let w = fd_weights(ys[0], ys, 1);
    let mut out = [0.0; 6];
    out.copy_from_slice(&w);
    out
}

/// Fornberg finite-difference weights for the `m`-th derivative at `x0`
/// on arbitrary nodes `xs`.
pub fn fd_weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=m.min(i)).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=m.min(i)).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Variable coefficients of the flattened interior operator, all real:
/// `F(η) = (b−1)Δ_x − 2b∇η·∇_x∂_y − bΔη·∂_y`, `b = 1/(1+|∇η|²)`.
pub struct FlattenedCoeffs {
    pub b: Array2<f64>,
    pub beta1: Array2<f64>,
    pub beta2x: Array2<f64>,
    pub beta2y: Array2<f64>,
    pub beta3: Array2<f64>,
    pub grad1: Array2<f64>,
    pub grad2: Array2<f64>,
    pub one_plus: Array2<f64>,
}

pub fn flattened_coeffs(eta: &GridField) -> FlattenedCoeffs {
    let g1 = eta.differential(DiffKind::GradX1).to_grid();
    let g2 = eta.differential(DiffKind::GradX2).to_grid();
    let lap = eta.differential(DiffKind::Laplacian).to_grid();
    let n = g1.nrows();
    let mut b = Array2::<f64>::zeros((n, n));
    let mut beta1 = b.clone();
    let mut beta2x = b.clone();
    let mut beta2y = b.clone();
    let mut beta3 = b.clone();
    let mut grad1 = b.clone();
    let mut grad2 = b.clone();
    let mut one_plus = b.clone();
    for m1 in 0..n {
        for m2 in 0..n {
            let gx = g1[[m1, m2]].re;
            let gy = g2[[m1, m2]].re;
            let denom = 1.0 + gx * gx + gy * gy;
            let bb = 1.0 / denom;
            b[[m1, m2]] = bb;
            beta1[[m1, m2]] = bb - 1.0;
            beta2x[[m1, m2]] = -2.0 * bb * gx;
            beta2y[[m1, m2]] = -2.0 * bb * gy;
            beta3[[m1, m2]] = -bb * lap[[m1, m2]].re;
            grad1[[m1, m2]] = gx;
            grad2[[m1, m2]] = gy;
            one_plus[[m1, m2]] = denom;
        }
    }
    FlattenedCoeffs { b, beta1, beta2x, beta2y, beta3, grad1, grad2, one_plus }
}

/// Fixed-point solver for the flattened Laplace problem under the surface:
/// `φ = e^{y|D|}ψ + u`, `u = −L₀⁻¹ F(η)[φ]` iterated to tolerance.
pub struct StripSolver<'a> {
    pub ctx: &'a StripContext,
    coeffs: FlattenedCoeffs,
    /// Flattening coefficients sampled on the product grid.
    beta1p: Vec<f64>,
    beta2xp: Vec<f64>,
    beta2yp: Vec<f64>,
    beta3p: Vec<f64>,
    mults_lap: Vec<f64>,
    mults_j1: Vec<f64>,
    mults_j2: Vec<f64>,
    /// `i j₁ − j₂`, packing both gradient components into one transform.
    mults_grad_pack: Vec<Complex64>,
}

impl<'a> StripSolver<'a> {
    pub fn new(ctx: &'a StripContext, eta: &GridField) -> Self {
        assert!(eta.is_real(), "surface elevation must be real");
        let eta = eta.dealias();
        let coeffs = flattened_coeffs(&eta);
        let trunc = &ctx.trunc;
        let mut mults_lap = vec![0.0; trunc.len()];
        let mut mults_j1 = vec![0.0; trunc.len()];
        let mut mults_j2 = vec![0.0; trunc.len()];
        let mut mults_grad_pack = vec![Complex64::default(); trunc.len()];
        for (idx, j) in trunc.freqs().enumerate() {
            mults_lap[idx] = -((j.0 * j.0 + j.1 * j.1) as f64);
            mults_j1[idx] = j.0 as f64;
            mults_j2[idx] = j.1 as f64;
            mults_grad_pack[idx] = Complex64::new(-(j.1 as f64), j.0 as f64);
        }
        // sample ∇η and Δη on the product grid: one packed transform each
        let pp = ctx.pg.size() * ctx.pg.size();
        let mut scratch = vec![Complex64::default(); ctx.pg.scratch_len()];
        let mut grad_buf = vec![Complex64::default(); pp];
        let mut lap_buf = vec![Complex64::default(); pp];
        let eta_flat = eta.coeffs().as_slice().unwrap();
        for &idx in &ctx.active_idx {
            let pos = ctx.perm[idx];
            grad_buf[pos] = eta_flat[idx] * mults_grad_pack[idx];
            lap_buf[pos] = eta_flat[idx] * mults_lap[idx];
        }
        ctx.pg.process(&mut grad_buf, false, &mut scratch);
        ctx.pg.process(&mut lap_buf, false, &mut scratch);
        let mut beta1p = vec![0.0; pp];
        let mut beta2xp = vec![0.0; pp];
        let mut beta2yp = vec![0.0; pp];
        let mut beta3p = vec![0.0; pp];
        for q in 0..pp {
            let gx = grad_buf[q].re;
            let gy = grad_buf[q].im;
            let bb = 1.0 / (1.0 + gx * gx + gy * gy);
            beta1p[q] = bb - 1.0;
            beta2xp[q] = -2.0 * bb * gx;
            beta2yp[q] = -2.0 * bb * gy;
            beta3p[q] = -bb * lap_buf[q].re;
        }
        Self {
            ctx,
            coeffs,
            beta1p,
            beta2xp,
            beta2yp,
            beta3p,
            mults_lap,
            mults_j1,
            mults_j2,
            mults_grad_pack,
        }
    }

    pub fn coeffs(&self) -> &FlattenedCoeffs {
        &self.coeffs
    }

    #[doc(hidden)]
    pub fn profile_apply_f(&self, v: &Array2<Complex64>, real: bool) -> Array2<Complex64> {
        self.apply_f(v, real)
    }

    fn apply_f(&self, v: &Array2<Complex64>, real: bool) -> Array2<Complex64> {
        if real {
            self.apply_f_real(v)
        } else {
            self.apply_f_complex(v)
        }
    }

    /// `F(η)[v]` for real fields: two real fields are packed per complex
    /// transform on the product grid, and adjacent levels share the forward
    /// transform.
    fn apply_f_real(&self, v: &Array2<Complex64>) -> Array2<Complex64> {
        let dyv = self.ctx.dy_all(v);
        let n_modes = self.ctx.trunc.len();
        let p = self.ctx.pg.size();
        let pp = p * p;
        let levels = v.nrows();
        let mut out = Array2::<Complex64>::zeros((levels, n_modes));
        out.as_slice_mut()
            .unwrap()
            .par_chunks_mut(2 * n_modes)
            .enumerate()
            .for_each_init(
                || {
                    (
                        vec![Complex64::default(); pp],
                        vec![Complex64::default(); pp],
                        vec![0.0f64; 2 * pp],
                        vec![Complex64::default(); self.ctx.pg.scratch_len()],
                    )
                },
                |(buf_a, buf_b, prod, scratch), (pair, rows)| {
                    let m = 2 * pair;
                    let two = rows.len() == 2 * n_modes;
                    for slot in 0..if two { 2 } else { 1 } {
                        let lev = m + slot;
                        buf_a.fill(Complex64::default());
                        buf_b.fill(Complex64::default());
                        for &idx in &self.ctx.active_idx {
                            let pos = self.ctx.perm[idx];
                            let vm = v[[lev, idx]];
                            let dym = dyv[[lev, idx]];
                            // pack (Δv, ∂_y v) and (∂₁∂_y v, ∂₂∂_y v)
                            buf_a[pos] =
                                vm * self.mults_lap[idx] + Complex64::new(0.0, 1.0) * dym;
                            buf_b[pos] = dym * self.mults_grad_pack[idx];
                        }
                        self.ctx.pg.process(buf_a, false, scratch);
                        self.ctx.pg.process(buf_b, false, scratch);
                        for q in 0..pp {
                            prod[2 * q + slot] = self.beta1p[q] * buf_a[q].re
                                + self.beta3p[q] * buf_a[q].im
                                + self.beta2xp[q] * buf_b[q].re
                                + self.beta2yp[q] * buf_b[q].im;
                        }
                        if !two {
                            for q in 0..pp {
                                prod[2 * q + 1] = 0.0;
                            }
                        }
                    }
                    for q in 0..pp {
                        buf_a[q] = Complex64::new(prod[2 * q], prod[2 * q + 1]);
                    }
                    self.ctx.pg.process(buf_a, true, scratch);
                    let scale = 1.0 / pp as f64;
                    for &idx in &self.ctx.active_idx {
                        let cj = buf_a[self.ctx.perm[idx]] * scale;
                        let cnj = buf_a[self.ctx.perm_neg[idx]].conj() * scale;
                        rows[idx] = 0.5 * (cj + cnj);
                        if two {
                            rows[n_modes + idx] = Complex64::new(0.0, -0.5) * (cj - cnj);
                        }
                    }
                },
            );
        out
    }

    /// `F(η)[v]` level by level via physical-space products on the product
    /// grid, projected onto the active (dealiased) mode set.
    fn apply_f_complex(&self, v: &Array2<Complex64>) -> Array2<Complex64> {
        let dyv = self.ctx.dy_all(v);
        let n_modes = self.ctx.trunc.len();
        let p = self.ctx.pg.size();
        let pp = p * p;
        let levels = v.nrows();
        let mut out = Array2::<Complex64>::zeros((levels, n_modes));
        out.as_slice_mut()
            .unwrap()
            .par_chunks_mut(n_modes)
            .enumerate()
            .for_each_init(
                || Workspace {
                    bufs: vec![vec![Complex64::default(); pp]; 4],
                    scratch: vec![Complex64::default(); self.ctx.pg.scratch_len()],
                },
                |ws, (m, row)| {
                    for b in ws.bufs.iter_mut() {
                        b.fill(Complex64::default());
                    }
                    for &idx in &self.ctx.active_idx {
                        let pos = self.ctx.perm[idx];
                        let vm = v[[m, idx]];
                        let dym = dyv[[m, idx]];
                        ws.bufs[0][pos] = vm * self.mults_lap[idx];
                        ws.bufs[1][pos] = dym * Complex64::new(0.0, self.mults_j1[idx]);
                        ws.bufs[2][pos] = dym * Complex64::new(0.0, self.mults_j2[idx]);
                        ws.bufs[3][pos] = dym;
                    }
                    for b in ws.bufs.iter_mut() {
                        self.ctx.pg.process(b, false, &mut ws.scratch);
                    }
                    let (lap, rest) = ws.bufs.split_first_mut().unwrap();
                    let (d1, rest) = rest.split_first_mut().unwrap();
                    let (d2, rest) = rest.split_first_mut().unwrap();
                    let dy = &mut rest[0];
                    for q in 0..pp {
                        lap[q] = self.beta1p[q] * lap[q]
                            + self.beta2xp[q] * d1[q]
                            + self.beta2yp[q] * d2[q]
                            + self.beta3p[q] * dy[q];
                    }
                    self.ctx.pg.process(lap, true, &mut ws.scratch);
                    let scale = 1.0 / pp as f64;
                    for &idx in &self.ctx.active_idx {
                        row[idx] = lap[self.ctx.perm[idx]] * scale;
                    }
                },
            );
        out
    }

    /// Run the fixed-point iteration, optionally warm-started.
    pub fn solve(
        &self,
        psi: &GridField,
        warm: Option<&Array2<Complex64>>,
    ) -> Result<StripSolution, DnoError> {
        let params = &self.ctx.params;
        let real = psi.is_real();
        let phi0 = self.ctx.flat_extension(psi);
        let scale = frob(&phi0).max(1e-300);
        let k0 = {
            let f = self.apply_f(&phi0, real);
            let mut k = self.ctx.flat_inverse(&f);
            k.mapv_inplace(|z| -z);
            k
        };
        let mut u = match warm {
            Some(w) if w.dim() == phi0.dim() => w.clone(),
            _ => k0.clone(),
        };
        let mut stats = Vec::new();
        let mut prev_update = f64::INFINITY;
        let mut high_ratio_streak = 0usize;
        let mut prev_delta: Option<Array2<Complex64>> = None;
        for it in 0..params.max_iter {
            let f = self.apply_f(&u, real);
            let mut next = self.ctx.flat_inverse(&f);
            next.mapv_inplace(|z| -z);
            next += &k0;
            let mut delta = next.clone();
            delta -= &u;
            let mut update = 0.0f64;
            for d in delta.iter() {
                update += d.norm_sqr();
            }
            let update = update.sqrt() / scale;
            let ratio = if prev_update.is_finite() && prev_update > 0.0 {
                update / prev_update
            } else {
                f64::NAN
            };
            stats.push(IterStat { iteration: it, residual: update, update_ratio: ratio });
            // secant acceleration of the linear fixed point: with updates
            // δ_n ≈ q δ_{n-1}, the limit is next + q/(1−q) δ_n
            if let Some(pd) = prev_delta.as_ref() {
                let mut num = Complex64::default();
                let mut den = 0.0f64;
                for (d, p) in delta.iter().zip(pd.iter()) {
                    num += d * p.conj();
                    den += p.norm_sqr();
                }
                if den > 0.0 {
                    let q = num / den;
                    let qn = q.norm();
                    if qn > 1e-3 && qn < 0.7 {
                        let gain = q / (Complex64::new(1.0, 0.0) - q);
                        let mut boosted = delta.clone();
                        boosted.mapv_inplace(|z| z * gain);
                        next += &boosted;
                    }
                }
            }
            prev_delta = Some(delta);
            u = next;
            if update <= params.tol {
                let phi = {
                    let mut total = phi0;
                    total += &u;
                    total
                };
                let top = row_norm(&phi, 0);
                let bottom = row_norm(&phi, phi.nrows() - 1);
                return Ok(StripSolution {
                    phi: StripField {
                        values: phi,
                        y: self.ctx.y.clone(),
                        decay_ok: bottom <= 1e-8 * top.max(1e-300),
                    },
                    correction: u,
                    stats,
                });
            }
            if ratio.is_finite() && ratio >= 0.95 {
                high_ratio_streak += 1;
                if high_ratio_streak >= 3 {
                    return Err(DnoError::NonContraction { iterations: it + 1, ratio });
                }
            } else {
                high_ratio_streak = 0;
            }
            prev_update = update;
        }
        Err(DnoError::MaxIterations(params.max_iter))
    }
}

fn frob(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn row_norm(a: &Array2<Complex64>, m: usize) -> f64 {
    a.row(m).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
