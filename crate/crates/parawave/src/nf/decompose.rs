use std::sync::Arc;

use num_complex::Complex64;

use crate::dispersion::dispersion_unchecked;
use crate::paracalc::{chi_scalar, x_derivative, Symbol};
use crate::spectral::{Grid, GridField, Truncation};

use super::NfParams;

/// `χ_k(ξ) = χ(2|k|^τ k·ξ / ⟨ξ⟩^δ)`: near 1 where the interaction is
/// quasi-resonant (k nearly orthogonal to ξ).
pub fn chi_k(k: (i64, i64), xi: [f64; 2], p: &NfParams) -> f64 {
    let kn = ((k.0 * k.0 + k.1 * k.1) as f64).sqrt();
    let dot = k.0 as f64 * xi[0] + k.1 as f64 * xi[1];
    let bracket = (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    chi_scalar(2.0 * kn.powf(p.tau) * dot / bracket.powf(p.delta))
}

/// `χ̃_k(ξ) = χ(|k| / ⟨ξ⟩^ν)`: cuts x-frequencies above `⟨ξ⟩^ν`.
pub fn chi_tilde_k(k: (i64, i64), xi: [f64; 2], p: &NfParams) -> f64 {
    let kn = ((k.0 * k.0 + k.1 * k.1) as f64).sqrt();
    let bracket = (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    chi_scalar(kn / bracket.powf(p.nu))
}

/// Quasi-resonant splitting of a symbol into x-average, resonant,
/// non-resonant, and smoothing parts; the four parts sum back to the symbol.
pub struct Decomposition {
    pub avg: Arc<Symbol>,
    pub res: Arc<Symbol>,
    pub nr: Arc<Symbol>,
    pub sm: Arc<Symbol>,
}

fn weighted_part(
    a: &Arc<Symbol>,
    p: NfParams,
    weight: impl Fn((i64, i64), [f64; 2], &NfParams) -> f64 + Send + Sync + 'static,
) -> Symbol {
    let inner = Arc::clone(a);
    let trunc = Arc::clone(a.truncation());
    Symbol::general(&trunc, a.order, move |xi| {
        let t = inner.truncation();
        let grid = inner.eval(xi);
        let mut coeffs = t.to_coeffs(&grid);
        for (idx, k) in t.freqs().enumerate() {
            let w = if k == (0, 0) { 0.0 } else { weight(k, xi, &p) };
            coeffs.as_slice_mut().unwrap()[idx] *= w;
        }
        t.to_grid(&coeffs)
    })
}

pub fn decompose(a: &Arc<Symbol>, p: &NfParams) -> Decomposition {
    let avg = {
        let inner = Arc::clone(a);
        let trunc = Arc::clone(a.truncation());
        Symbol::general(&trunc, a.order, move |xi| {
            let grid = inner.eval(xi);
            let mean = grid.iter().sum::<Complex64>() / grid.len() as f64;
            Grid::from_elem(grid.dim(), mean)
        })
    };
    let res = weighted_part(a, *p, |k, xi, p| chi_k(k, xi, p) * chi_tilde_k(k, xi, p));
    let nr = weighted_part(a, *p, |k, xi, p| (1.0 - chi_k(k, xi, p)) * chi_tilde_k(k, xi, p));
    let sm = weighted_part(a, *p, |k, xi, p| 1.0 - chi_tilde_k(k, xi, p));
    Decomposition { avg: Arc::new(avg), res: Arc::new(res), nr: Arc::new(nr), sm: Arc::new(sm) }
}

/// `∇_ξ Λ(ξ) = ξ (3κ|ξ|² + 1)/(2|ξ|Λ(ξ))` in closed form.
pub fn grad_lambda(xi: [f64; 2], kappa: f64) -> [f64; 2] {
    let r2 = xi[0] * xi[0] + xi[1] * xi[1];
    let r = r2.sqrt();
    if r == 0.0 {
        return [0.0, 0.0];
    }
    let lam = dispersion_unchecked(xi, kappa);
    let c = (3.0 * kappa * r2 + 1.0) / (2.0 * r * lam);
    [c * xi[0], c * xi[1]]
}

/// Homological solver for the non-resonant part: the symbol `g` with
/// `ĝ(k,ξ) = (2|ξ|Λ/(3κ|ξ|²+1)) (1−χ_k) χ̃_k â(k,ξ)/(i k·ξ)`, which yields
/// `a + {g, Λ} = ⟨a⟩ + res(a) + sm(a)`. The `(1−χ_k)` factor vanishes where
/// `k·ξ` is dangerously small, guarding the division.
pub fn g_solve(a: &Arc<Symbol>, p: &NfParams, kappa: f64) -> Symbol {
    let inner = Arc::clone(a);
    let trunc = Arc::clone(a.truncation());
    let p = *p;
    let mut g = Symbol::general(&trunc, a.order + 0.5 - p.delta, move |xi| {
        let t = inner.truncation();
        let grid = inner.eval(xi);
        let mut coeffs = t.to_coeffs(&grid);
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        let lam = dispersion_unchecked(xi, kappa);
        let front = 2.0 * r2.sqrt() * lam / (3.0 * kappa * r2 + 1.0);
        for (idx, k) in t.freqs().enumerate() {
            let c = &mut coeffs.as_slice_mut().unwrap()[idx];
            if k == (0, 0) {
                *c = Complex64::default();
                continue;
            }
            let w = (1.0 - chi_k(k, xi, &p)) * chi_tilde_k(k, xi, &p);
            if w == 0.0 {
                *c = Complex64::default();
                continue;
            }
            let dot = k.0 as f64 * xi[0] + k.1 as f64 * xi[1];
            *c = front * w * *c / Complex64::new(0.0, dot);
        }
        t.to_grid(&coeffs)
    });
    g.real_valued = a.real_valued;
    g.r_localized = a.r_localized;
    g
}

/// Transport generator `g^{1/2}(x,ξ) = ψ(x)·m^{1/2}(ξ)` with
/// `m^{1/2} = 2Λ/(3κ|ξ| + |ξ|^{-1})`, solving `∇ψ·ξ + {g^{1/2}, Λ} = 0`.
pub fn transport_generator(psi: &GridField, kappa: f64) -> Symbol {
    let grid = psi.to_grid();
    let mut s = Symbol::product(psi.truncation(), &grid, 0.5, move |xi| {
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        let lam = dispersion_unchecked(xi, kappa);
        Complex64::new(2.0 * r2.sqrt() * lam / (3.0 * kappa * r2 + 1.0), 0.0)
    });
    s.real_valued = psi.is_real();
    s.with_homogeneity(1)
}

/// Pointwise `{g, Λ}(·, ξ) = −∇_x g · ∇_ξ Λ` using the closed-form gradient.
pub fn poisson_with_lambda(g: &Symbol, kappa: f64, xi: [f64; 2]) -> Grid {
    let trunc = g.truncation();
    let grid = g.eval(xi);
    let gx = x_derivative(trunc, &grid, (1, 0));
    let gy = x_derivative(trunc, &grid, (0, 1));
    let gl = grad_lambda(xi, kappa);
    let mut out = gx;
    out.zip_mut_with(&gy, |a, b| *a = -(*a * gl[0] + b * gl[1]));
    out
}

/// Sup over the ξ-sample set and the x-grid of the homological defect
/// `a + {g,Λ} − ⟨a⟩ − res(a) − sm(a)`.
pub fn homological_residual(
    a: &Arc<Symbol>,
    g: &Symbol,
    p: &NfParams,
    kappa: f64,
    xi_samples: &[[f64; 2]],
) -> f64 {
    let d = decompose(a, p);
    let mut worst: f64 = 0.0;
    for &xi in xi_samples {
        let mut total = a.eval(xi);
        total += &poisson_with_lambda(g, kappa, xi);
        total -= &d.avg.eval(xi);
        total -= &d.res.eval(xi);
        total -= &d.sm.eval(xi);
        worst = worst.max(total.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    worst
}

/// Residual of the transport identity `∇ψ·ξ + {g^{1/2}, Λ} = 0`.
pub fn transport_residual(
    psi: &GridField,
    kappa: f64,
    xi_samples: &[[f64; 2]],
) -> f64 {
    let g = transport_generator(psi, kappa);
    let trunc = psi.truncation();
    let px = psi.differential(crate::spectral::DiffKind::GradX1).to_grid();
    let py = psi.differential(crate::spectral::DiffKind::GradX2).to_grid();
    let mut worst: f64 = 0.0;
    let n = trunc.n_grid();
    for &xi in xi_samples {
        let bracket = poisson_with_lambda(&g, kappa, xi);
        for r in 0..n {
            for c in 0..n {
                let lhs = px[[r, c]] * xi[0] + py[[r, c]] * xi[1] + bracket[[r, c]];
                worst = worst.max(lhs.norm());
            }
        }
    }
    worst
}

/// ξ samples on dyadic circles `|ξ| = 1, 2, 4, …` up to `n_max`, 16 angles.
pub fn sample_xi_dyadic(trunc: &Arc<Truncation>) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    let mut radius = 1.0;
    while radius <= trunc.n_max() as f64 {
        for i in 0..16 {
            let phi = std::f64::consts::PI * i as f64 / 8.0 + 0.0371;
            out.push([radius * phi.cos(), radius * phi.sin()]);
        }
        radius *= 2.0;
    }
    out
}

/// Random admissible 1-homogeneous-style real symbol supported on x-modes
/// `0 < |k| ≤ k_max` with radial ξ-profile of the given order.
pub fn random_real_symbol(
    trunc: &Arc<Truncation>,
    k_max: i64,
    order: f64,
    rng: &mut impl rand::Rng,
) -> Arc<Symbol> {
    let mut field = GridField::zeros(trunc);
    for k1 in -k_max..=k_max {
        for k2 in -k_max..=k_max {
            if (k1, k2) == (0, 0) || k1 * k1 + k2 * k2 > k_max * k_max {
                continue;
            }
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let cur = field.coeff((k1, k2));
            field.set_coeff((k1, k2), cur + c);
        }
    }
    field.symmetrize_real();
    field.project_mean_zero();
    let grid = field.to_grid();
    let mut s = Symbol::product(trunc, &grid, order, move |xi| {
        let b = (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        Complex64::new(b.powf(order), 0.0)
    });
    s.real_valued = true;
    Arc::new(s)
}
