use std::sync::Arc;

use num_complex::Complex64;

use crate::spectral::Grid;

use super::symbol::{x_derivative, xi_derivative, Symbol};
use super::ParacalcError;

fn factorial(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product::<f64>().max(1.0)
}

/// `p_n(a,b) = (2i)^{-n} Σ_{|α|+|β|=n} ((−1)^{|β|}/(α!β!}) (∂_x^β∂_ξ^α a)(∂_x^α∂_ξ^β b)`,
/// evaluated on the x-grid at a fixed ξ. `p_0 = ab`, `p_1 = (2i)^{-1}{a,b}`.
pub fn p_term(a: &Symbol, b: &Symbol, n: u32, xi: [f64; 2]) -> Grid {
    let trunc = a.truncation();
    let g = trunc.n_grid();
    let mut sum = Grid::zeros((g, g));
    for ta in 0..=n {
        let tb = n - ta; // |α| = ta, |β| = tb
        for a1 in 0..=ta {
            let alpha = (a1, ta - a1);
            for b1 in 0..=tb {
                let beta = (b1, tb - b1);
                let da = x_derivative(trunc, &xi_derivative(a, alpha, xi), beta);
                let db = x_derivative(trunc, &xi_derivative(b, beta, xi), alpha);
                let coef = (if tb % 2 == 0 { 1.0 } else { -1.0 })
                    / (factorial(alpha.0)
                        * factorial(alpha.1)
                        * factorial(beta.0)
                        * factorial(beta.1));
                sum.zip_mut_with(&(&da * &db), |s, t| *s += coef * t);
            }
        }
    }
    let scale = Complex64::new(0.0, 2.0).powu(n).finv();
    sum.mapv_inplace(|z| z * scale);
    sum
}

/// Truncated composition symbol `a #_ρ b = Σ_{n<ρ} p_n(a, b)`.
pub fn compose_expansion(
    a: &Arc<Symbol>,
    b: &Arc<Symbol>,
    rho: u32,
) -> Result<Symbol, ParacalcError> {
    if rho < 1 {
        return Err(ParacalcError::RhoTooSmall(rho));
    }
    let (ac, bc) = (Arc::clone(a), Arc::clone(b));
    let trunc = Arc::clone(a.truncation());
    let order = a.order + b.order;
    Ok(Symbol::general(&trunc, order, move |xi| {
        let mut grid = p_term(&ac, &bc, 0, xi);
        for n in 1..rho {
            grid += &p_term(&ac, &bc, n, xi);
        }
        grid
    }))
}

/// Moyal bracket `i(a #_ρ b − b #_ρ a) = Σ_{odd n<ρ} 2i·p_n(a,b)`; the
/// leading term is the Poisson bracket `{a, b}`.
pub fn moyal(a: &Arc<Symbol>, b: &Arc<Symbol>, rho: u32) -> Result<Symbol, ParacalcError> {
    if rho < 2 {
        return Err(ParacalcError::RhoTooSmall(rho));
    }
    let (ac, bc) = (Arc::clone(a), Arc::clone(b));
    let trunc = Arc::clone(a.truncation());
    let order = a.order + b.order - 1.0;
    Ok(Symbol::general(&trunc, order, move |xi| {
        let g = trunc_grid(&ac);
        let mut sum = Grid::zeros((g, g));
        let mut n = 1;
        while n < rho {
            let mut p = p_term(&ac, &bc, n, xi);
            p.mapv_inplace(|z| z * Complex64::new(0.0, 2.0));
            sum += &p;
            n += 2;
        }
        sum
    }))
}

fn trunc_grid(a: &Symbol) -> usize {
    a.truncation().n_grid()
}

/// Poisson bracket `{a,b} = ∇_ξ a · ∇_x b − ∇_x a · ∇_ξ b` as a symbol.
pub fn poisson(a: &Arc<Symbol>, b: &Arc<Symbol>) -> Symbol {
    let (ac, bc) = (Arc::clone(a), Arc::clone(b));
    let trunc = Arc::clone(a.truncation());
    let order = a.order + b.order - 1.0;
    Symbol::general(&trunc, order, move |xi| {
        let t = ac.truncation();
        let a_x1 = x_derivative(t, &ac.eval(xi), (1, 0));
        let a_x2 = x_derivative(t, &ac.eval(xi), (0, 1));
        let b_x1 = x_derivative(t, &bc.eval(xi), (1, 0));
        let b_x2 = x_derivative(t, &bc.eval(xi), (0, 1));
        let a_xi1 = xi_derivative(&ac, (1, 0), xi);
        let a_xi2 = xi_derivative(&ac, (0, 1), xi);
        let b_xi1 = xi_derivative(&bc, (1, 0), xi);
        let b_xi2 = xi_derivative(&bc, (0, 1), xi);
        &(&(&a_xi1 * &b_x1) + &(&a_xi2 * &b_x2)) - &(&(&a_x1 * &b_xi1) + &(&a_x2 * &b_xi2))
    })
}
