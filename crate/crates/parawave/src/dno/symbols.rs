use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use crate::paracalc::{apply_bw, low_freq_bump, poisson, Symbol};
use crate::spectral::{DiffKind, Grid, GridField, Truncation, ZcsState};

use super::strip::flattened_coeffs;
use super::{
    dirichlet_neumann, good_unknown_from_b, taylor_coefficient, velocity_fields_from_g, DnoError,
};

/// Paralinearization symbols of the Dirichlet-Neumann operator and the
/// symmetrization data, together with the surface fields they are built from.
pub struct DnSymbols {
    /// `λ⁽¹⁾ = √((1+|∇η|²)|ξ|² − (∇η·ξ)²)`, the principal symbol.
    pub lambda1: Arc<Symbol>,
    /// Subprincipal symbol `λ⁽⁰⁾`, built from a Poisson bracket plus `½Δη`.
    pub lambda0: Arc<Symbol>,
    /// `h⁽²⁾ = b^{1/2}(|ξ|² − b(∇η·ξ)²)`.
    pub h2: Arc<Symbol>,
    /// Symmetrizer `Q = (λ⁽¹⁾/(κ h⁽²⁾ + 1))^{1/4}`.
    pub q: Arc<Symbol>,
    /// Modified dispersion `Σ^{(3/2)} = √(λ⁽¹⁾(κ h⁽²⁾ + 1))`.
    pub sigma32: Arc<Symbol>,
    pub b_coeff: GridField,
    pub beta1: GridField,
    pub beta2: (GridField, GridField),
    pub beta3: GridField,
    pub v: (GridField, GridField),
    pub b: GridField,
    pub a_taylor: GridField,
    pub omega: GridField,
}

struct EtaGrids {
    g1: Array2<f64>,
    g2: Array2<f64>,
    one_plus: Array2<f64>,
    b: Array2<f64>,
}

fn eta_grids(eta: &GridField) -> Arc<EtaGrids> {
    let c = flattened_coeffs(eta);
    Arc::new(EtaGrids { g1: c.grad1, g2: c.grad2, one_plus: c.one_plus, b: c.b })
}

fn lambda1_symbol(trunc: &Arc<Truncation>, grids: &Arc<EtaGrids>) -> Symbol {
    let g = Arc::clone(grids);
    let mut s = Symbol::general(trunc, 1.0, move |xi| {
        let n = g.g1.nrows();
        let mut out = Grid::zeros((n, n));
        let xi2 = xi[0] * xi[0] + xi[1] * xi[1];
        for r in 0..n {
            for c in 0..n {
                let dot = g.g1[[r, c]] * xi[0] + g.g2[[r, c]] * xi[1];
                let val = (g.one_plus[[r, c]] * xi2 - dot * dot).max(0.0);
                out[[r, c]] = Complex64::new(val.sqrt(), 0.0);
            }
        }
        out
    });
    s.real_valued = true;
    s.even_in_xi = true;
    s
}

fn h2_symbol(trunc: &Arc<Truncation>, grids: &Arc<EtaGrids>) -> Symbol {
    let g = Arc::clone(grids);
    let mut s = Symbol::general(trunc, 2.0, move |xi| {
        let n = g.g1.nrows();
        let mut out = Grid::zeros((n, n));
        let xi2 = xi[0] * xi[0] + xi[1] * xi[1];
        for r in 0..n {
            for c in 0..n {
                let b = g.b[[r, c]];
                let dot = g.g1[[r, c]] * xi[0] + g.g2[[r, c]] * xi[1];
                out[[r, c]] = Complex64::new(b.sqrt() * (xi2 - b * dot * dot), 0.0);
            }
        }
        out
    });
    s.real_valued = true;
    s.even_in_xi = true;
    s
}

fn lambda0_symbol(
    trunc: &Arc<Truncation>,
    grids: &Arc<EtaGrids>,
    eta: &GridField,
) -> Symbol {
    let arg1 = {
        let g = Arc::clone(grids);
        let lam1 = lambda1_symbol(trunc, grids);
        let lam1 = Arc::new(lam1);
        Arc::new(Symbol::general(trunc, 1.0, move |xi| {
            let mut grid = lam1.eval(xi);
            let n = grid.nrows();
            for r in 0..n {
                for c in 0..n {
                    grid[[r, c]] /= g.one_plus[[r, c]];
                }
            }
            grid
        }))
    };
    let arg2 = {
        let g = Arc::clone(grids);
        Arc::new(Symbol::general(trunc, 1.0, move |xi| {
            let n = g.g1.nrows();
            let mut out = Grid::zeros((n, n));
            for r in 0..n {
                for c in 0..n {
                    let dot = g.g1[[r, c]] * xi[0] + g.g2[[r, c]] * xi[1];
                    out[[r, c]] = Complex64::new(dot / g.one_plus[[r, c]], 0.0);
                }
            }
            out
        }))
    };
    let bracket = Arc::new(poisson(&arg1, &arg2));
    let lam1 = Arc::new(lambda1_symbol(trunc, grids));
    let half_lap = eta.differential(DiffKind::Laplacian).to_grid();
    let g = Arc::clone(grids);
    let mut s = Symbol::general(trunc, 0.0, move |xi| {
        let n = g.g1.nrows();
        let r2 = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        let cut = 1.0 - low_freq_bump(r2);
        let mut out = Grid::zeros((n, n));
        if cut == 0.0 {
            return out;
        }
        let br = bracket.eval(xi);
        let l1 = lam1.eval(xi);
        for r in 0..n {
            for c in 0..n {
                let op = g.one_plus[[r, c]];
                let coef = op * op / (2.0 * l1[[r, c]].re);
                out[[r, c]] = cut * (coef * br[[r, c]] + 0.5 * half_lap[[r, c]]);
            }
        }
        out
    });
    s.real_valued = true;
    s
}

fn q_symbol(trunc: &Arc<Truncation>, grids: &Arc<EtaGrids>, kappa: f64) -> Symbol {
    let lam1 = Arc::new(lambda1_symbol(trunc, grids));
    let h2 = Arc::new(h2_symbol(trunc, grids));
    let mut s = Symbol::general(trunc, -0.25, move |xi| {
        // radial clamp below |ξ| = 1/2 keeps the quotient positive, matching
        // the cut convention of the flat symmetrizer M(ξ)
        let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        let eval_at = |p: [f64; 2]| {
            let l1 = lam1.eval(p);
            let h = h2.eval(p);
            let n = l1.nrows();
            let mut out = Grid::zeros((n, n));
            for rr in 0..n {
                for cc in 0..n {
                    out[[rr, cc]] = Complex64::new(
                        (l1[[rr, cc]].re / (kappa * h[[rr, cc]].re + 1.0)).powf(0.25),
                        0.0,
                    );
                }
            }
            out
        };
        if r >= 0.5 {
            eval_at(xi)
        } else {
            let half_pt = if r > 0.0 {
                [xi[0] * 0.5 / r, xi[1] * 0.5 / r]
            } else {
                [0.5, 0.0]
            };
            let bump = low_freq_bump(r);
            let mut hi = eval_at(half_pt);
            if bump < 1.0 {
                let clamped = if r >= 0.25 { xi } else { half_pt };
                let lo = eval_at(clamped);
                hi.zip_mut_with(&lo, |h, l| *h = bump * *h + (1.0 - bump) * l);
            }
            hi
        }
    });
    s.real_valued = true;
    s.even_in_xi = true;
    s
}

fn sigma32_symbol(trunc: &Arc<Truncation>, grids: &Arc<EtaGrids>, kappa: f64) -> Symbol {
    let lam1 = Arc::new(lambda1_symbol(trunc, grids));
    let h2 = Arc::new(h2_symbol(trunc, grids));
    let mut s = Symbol::general(trunc, 1.5, move |xi| {
        let l1 = lam1.eval(xi);
        let h = h2.eval(xi);
        let n = l1.nrows();
        let mut out = Grid::zeros((n, n));
        for r in 0..n {
            for c in 0..n {
                out[[r, c]] = Complex64::new(
                    (l1[[r, c]].re * (kappa * h[[r, c]].re + 1.0)).max(0.0).sqrt(),
                    0.0,
                );
            }
        }
        out
    });
    s.real_valued = true;
    s.even_in_xi = true;
    s
}

/// Transport symbol `−i V·ξ − ½ div V` from the surface velocity field.
pub fn transport_symbol(trunc: &Arc<Truncation>, v: &(GridField, GridField)) -> Symbol {
    let v1 = v.0.to_grid();
    let v2 = v.1.to_grid();
    let div = v.0.differential(DiffKind::GradX1).add(&v.1.differential(DiffKind::GradX2));
    let p1 = Arc::new(Symbol::product(trunc, &v1, 1.0, |xi| Complex64::new(0.0, -xi[0])));
    let p2 = Arc::new(Symbol::product(trunc, &v2, 1.0, |xi| Complex64::new(0.0, -xi[1])));
    let p3 = Arc::new(Symbol::function(trunc, &div.scale(-0.5).to_grid()));
    Symbol::sum(vec![p1, p2, p3])
}

/// Build the full paralinearization data at a state. The Taylor coefficient
/// needs the flow direction, so this takes the state rather than `(η, ψ)`.
pub fn dn_symbols(state: &ZcsState, tol: f64) -> Result<DnSymbols, DnoError> {
    let trunc = state.truncation();
    let eta = &state.eta;
    let psi = &state.psi;
    let grids = eta_grids(eta);
    let coeffs = flattened_coeffs(eta);
    let g_val = dirichlet_neumann(eta, psi, tol)?;
    let fields = velocity_fields_from_g(eta, psi, &g_val);
    let omega = good_unknown_from_b(eta, psi, &fields.b)?;
    let a_taylor = taylor_coefficient(state, tol)?;

    let to_field = |g: &Array2<f64>| {
        let gg = g.mapv(|v| Complex64::new(v, 0.0));
        GridField::from_coeffs(trunc, trunc.to_coeffs(&gg))
    };

    Ok(DnSymbols {
        lambda1: Arc::new(lambda1_symbol(trunc, &grids)),
        lambda0: Arc::new(lambda0_symbol(trunc, &grids, eta)),
        h2: Arc::new(h2_symbol(trunc, &grids)),
        q: Arc::new(q_symbol(trunc, &grids, state.kappa)),
        sigma32: Arc::new(sigma32_symbol(trunc, &grids, state.kappa)),
        b_coeff: to_field(&coeffs.b),
        beta1: to_field(&coeffs.beta1),
        beta2: (to_field(&coeffs.beta2x), to_field(&coeffs.beta2y)),
        beta3: to_field(&coeffs.beta3),
        v: fields.v,
        b: fields.b,
        a_taylor,
        omega,
    })
}

/// Paralinearization remainder
/// `R = G(η)ψ − Op^{BW}(λ⁽¹⁾+λ⁽⁰⁾) ω − Op^{BW}(−iV·ξ − ½div V) η`.
pub fn paralin_remainder(
    eta: &GridField,
    psi: &GridField,
    tol: f64,
) -> Result<GridField, DnoError> {
    let trunc = eta.truncation();
    let grids = eta_grids(eta);
    let g_val = dirichlet_neumann(eta, psi, tol)?;
    let fields = velocity_fields_from_g(eta, psi, &g_val);
    let omega = good_unknown_from_b(eta, psi, &fields.b)?;
    let lam1 = Arc::new(lambda1_symbol(trunc, &grids));
    let lam0 = Arc::new(lambda0_symbol(trunc, &grids, eta));
    let lam = Symbol::sum(vec![lam1, lam0]);
    let transport = transport_symbol(trunc, &fields.v);
    let main = apply_bw(&lam, &omega)?;
    let trans = apply_bw(&transport, eta)?;
    Ok(g_val.sub(&main).sub(&trans))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Truncation;
    use approx::assert_relative_eq;

    #[test]
    fn flat_surface_symbols_collapse() {
        let t = Truncation::new(12);
        let eta = GridField::zeros(&t);
        let psi = GridField::cosine(&t, (1, 0), 0.2);
        let state = ZcsState::new(eta, psi, 1.0);
        let syms = dn_symbols(&state, 1e-10).unwrap();
        for xi in [[1.0f64, 0.0], [2.5, -1.0], [0.0, 4.0]] {
            let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            let l1 = syms.lambda1.eval(xi)[[0, 0]].re;
            assert_relative_eq!(l1, r, epsilon = 1e-12);
            let h2 = syms.h2.eval(xi)[[0, 0]].re;
            assert_relative_eq!(h2, r * r, epsilon = 1e-12);
            let q = syms.q.eval(xi)[[0, 0]].re;
            assert_relative_eq!(
                q,
                crate::dispersion::symmetrizer_m(xi, 1.0),
                epsilon = 1e-12
            );
            let s32 = syms.sigma32.eval(xi)[[0, 0]].re;
            assert_relative_eq!(
                s32,
                crate::dispersion::dispersion_unchecked(xi, 1.0),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn lambda1_hand_value_and_symmetries() {
        // η = 0.1 cos x₁ at ξ=(1,0): (1+0.01sin²)·1 − 0.01 sin² = 1 exactly
        let t = Truncation::new(16);
        let eta = GridField::cosine(&t, (1, 0), 0.1);
        let grids = eta_grids(&eta);
        let lam1 = lambda1_symbol(&t, &grids);
        let grid = lam1.eval([1.0, 0.0]);
        for v in grid.iter() {
            assert_relative_eq!(v.re, 1.0, epsilon = 1e-12);
            assert_eq!(v.im, 0.0);
        }
        // evenness in ξ and reality
        let a = lam1.eval([2.0, 3.0]);
        let b = lam1.eval([-2.0, -3.0]);
        let err = a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err == 0.0);
    }

    #[test]
    fn h2_matches_lambda1_squared_times_b32() {
        let t = Truncation::new(12);
        let eta = GridField::from_fn(&t, |x1, x2| 0.08 * (x1.cos() + (x1 + x2).sin()));
        let grids = eta_grids(&eta);
        let lam1 = lambda1_symbol(&t, &grids);
        let h2 = h2_symbol(&t, &grids);
        for xi in [[1.0, 0.0], [3.0, 2.0], [0.0, 5.0]] {
            let l = lam1.eval(xi);
            let h = h2.eval(xi);
            let mut worst: f64 = 0.0;
            for r in 0..l.nrows() {
                for c in 0..l.ncols() {
                    let b32 = grids.b[[r, c]].powf(1.5);
                    worst = worst.max((h[[r, c]].re - l[[r, c]].re.powi(2) * b32).abs());
                }
            }
            assert!(worst <= 1e-10, "h2 identity defect {worst} at ξ={xi:?}");
        }
    }

    #[test]
    fn paralin_remainder_flat_is_zero() {
        let t = Truncation::new(16);
        let eta = GridField::zeros(&t);
        let psi = GridField::from_fn(&t, |x1, x2| (3.0 * x1).cos() + (2.0 * x2).sin());
        let r = paralin_remainder(&eta, &psi, 1e-10).unwrap();
        assert!(r.l2_norm() <= 1e-10, "flat remainder {}", r.l2_norm());
    }
}
