//! Bony-Weyl paradifferential calculus on the truncated lattice: symbols,
//! quantization, composition/Moyal expansions, real-to-real matrix operators,
//! and numerical probes of remainder smoothing orders.

mod compose;
mod cutoff;
mod probe;
mod quantize;
mod symbol;

pub use compose::{compose_expansion, moyal, p_term, poisson};
pub use cutoff::{
    chi_scalar, cutoff_chi, low_freq_bump, smoothstep4, theta_cut, theta_tilde, DELTA0,
};
pub use probe::{fit_loglog, smoothing_order_probe, ProbeFit};
pub use quantize::{apply_bw, conj_field, quantize, real_to_real_pack, FreqOperator, RealToRealOp};
pub use symbol::{fd_step, seminorm_diagnostic, x_derivative, xi_derivative, Symbol, SymbolKind};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParacalcError {
    #[error("composition truncation order must be ≥ 1, got {0}")]
    RhoTooSmall(u32),
    #[error("symbol evaluation failed (non-finite) at k={k:?}, ξ={xi:?}")]
    EvalFailed { k: (i64, i64), xi: [f64; 2] },
    #[error("probe frequency list must be strictly increasing with ≥ 3 entries")]
    BadFrequencyList,
    #[error("probe frequency {freq} exceeds the dealias margin {margin}")]
    FrequencyBeyondMargin { freq: i64, margin: i64 },
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::spectral::{GridField, Truncation};

    fn bracket(xi: [f64; 2]) -> f64 {
        (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).sqrt()
    }

    #[test]
    fn quantize_constant_is_identity() {
        let t = Truncation::new(8);
        let a = Symbol::constant(&t, 1.0);
        let op = quantize(&a, &t).unwrap();
        for j in [(0i64, 0i64), (3, -2), (8, 8)] {
            assert_relative_eq!((op.entry(j, j) - Complex64::new(1.0, 0.0)).norm(), 0.0);
        }
        let u = GridField::from_fn(&t, |x1, x2| (x1).cos() * (2.0 * x2).sin());
        let v = op.apply(&u);
        assert!(v.sub(&u).l2_norm() < 1e-13);
    }

    #[test]
    fn quantize_multiplier_is_diagonal() {
        let t = Truncation::new(8);
        let a = Symbol::radial_multiplier(&t, 1.0, |r| r);
        let op = quantize(&a, &t).unwrap();
        assert_relative_eq!(op.entry((3, 4), (3, 4)).re, 5.0, epsilon = 1e-14);
        assert_eq!(op.entry((3, 4), (3, 3)).norm(), 0.0);
    }

    #[test]
    fn quantize_single_x_mode_couples_neighbors() {
        // a = e^{i e1·x} on e^{i j·x} → χ(e1, j + e1/2) e^{i(j+e1)·x}
        let t = Truncation::new(24);
        let a = Symbol::fourier_modes(
            &t,
            0.0,
            vec![((1, 0), Arc::new(|_| Complex64::new(1.0, 0.0)) as _)],
        );
        let op = quantize(&a, &t).unwrap();
        for j in [(12i64, 0i64), (20, 3), (4, 0)] {
            let mid = [j.0 as f64 + 0.5, j.1 as f64];
            let expect = cutoff_chi([1.0, 0.0], mid);
            assert_relative_eq!(op.entry((j.0 + 1, j.1), j).re, expect, epsilon = 1e-13);
        }
        // mean-zero in, mean-zero out: the zero-mode row only sees â(0,0)
        let u = GridField::single_mode(&t, (15, 0));
        let v = op.apply(&u);
        assert_eq!(v.coeff((0, 0)).norm(), 0.0);
    }

    #[test]
    fn apply_bw_matches_assembled_operator() {
        let t = Truncation::new(16);
        let grid = GridField::from_fn(&t, |x1, x2| 1.0 + 0.4 * x1.cos() + 0.2 * (x2).sin());
        let a = Symbol::product(&t, &grid.to_grid(), 1.0, |xi| {
            Complex64::new(bracket(xi), 0.0)
        });
        let op = quantize(&a, &t).unwrap();
        let u = GridField::from_fn(&t, |x1, x2| (3.0 * x1).cos() + (x1 + 5.0 * x2).sin());
        let v1 = op.apply(&u);
        let v2 = apply_bw(&a, &u).unwrap();
        assert!(v1.sub(&v2).l2_norm() < 1e-12);
    }

    #[test]
    fn adjoint_conjugates_symbol() {
        let t = Truncation::new(12);
        // quantize(i sin x1)* = quantize(−i sin x1), entrywise
        let sin_grid = GridField::from_fn(&t, |x1, _| x1.sin()).to_grid();
        let a = Symbol::product(&t, &sin_grid, 0.0, |_| Complex64::new(0.0, 1.0));
        let b = Symbol::product(&t, &sin_grid, 0.0, |_| Complex64::new(0.0, -1.0));
        let opa = quantize(&a, &t).unwrap().adjoint();
        let opb = quantize(&b, &t).unwrap();
        assert!(opa.sub(&opb).max_entry() < 1e-13);
        // identity is self-adjoint
        let one = quantize(&Symbol::constant(&t, 1.0), &t).unwrap();
        assert!(one.adjoint().sub(&one).max_entry() == 0.0);
    }

    #[test]
    fn random_real_symbol_is_hermitian() {
        let t = Truncation::new(12);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut f = GridField::zeros(&t);
        for _ in 0..6 {
            let j = (rng.gen_range(-4..=4), rng.gen_range(-4..=4i64));
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let cur = f.coeff(j);
            f.set_coeff(j, cur + c);
        }
        f.symmetrize_real();
        let a = Symbol::product(&t, &f.to_grid(), 0.5, |xi| {
            Complex64::new(bracket(xi).sqrt(), 0.0)
        });
        let op = quantize(&a, &t).unwrap();
        assert!(op.hermitian_defect() <= 1e-12);
        // adjoint(quantize(a)) = quantize(a) for real a
        assert!(op.adjoint().sub(&op).max_entry() <= 1e-12);
    }

    #[test]
    fn compose_zeroth_order_is_product() {
        let t = Truncation::new(8);
        let ga = GridField::from_fn(&t, |x1, _| 1.0 + 0.3 * x1.cos()).to_grid();
        let gb = GridField::from_fn(&t, |_, x2| 2.0 - 0.1 * x2.sin()).to_grid();
        let a = Arc::new(Symbol::function(&t, &ga));
        let b = Arc::new(Symbol::function(&t, &gb));
        let ab = compose_expansion(&a, &b, 1).unwrap();
        let xi = [3.0, -1.0];
        let want = &a.eval(xi) * &b.eval(xi);
        let got = ab.eval(xi);
        let err = (&got - &want).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
        assert!(compose_expansion(&a, &b, 0).is_err());
    }

    #[test]
    fn compose_multipliers_all_orders() {
        let t = Truncation::new(8);
        let a = Arc::new(Symbol::radial_multiplier(&t, 1.0, |r| (1.0 + r * r).sqrt()));
        let b = Arc::new(Symbol::radial_multiplier(&t, -1.0, |r| 1.0 / (1.0 + r)));
        for rho in [1, 2, 3, 4] {
            let ab = compose_expansion(&a, &b, rho).unwrap();
            let xi = [2.0, 1.5];
            let want = a.eval(xi)[[0, 0]] * b.eval(xi)[[0, 0]];
            let got = ab.eval(xi)[[0, 0]];
            assert_relative_eq!(got.re, want.re, max_relative = 1e-7);
            assert!(got.im.abs() < 1e-10);
        }
    }

    #[test]
    fn compose_hand_value_p1() {
        // a = sin x1, b = ξ1: a#_2 b = sin(x1)ξ1 + (1/2i)(−cos x1)
        let t = Truncation::new(8);
        let sin_grid = GridField::from_fn(&t, |x1, _| x1.sin()).to_grid();
        let a = Arc::new(Symbol::function(&t, &sin_grid));
        let b = Arc::new(Symbol::multiplier(&t, 1.0, |xi| Complex64::new(xi[0], 0.0)));
        let ab = compose_expansion(&a, &b, 2).unwrap();
        let xi = [2.0, 0.0];
        let got = ab.eval(xi);
        let xs = t.grid_coords();
        for (m1, &x1) in xs.iter().enumerate() {
            let want = Complex64::new(x1.sin() * 2.0, 0.0)
                + Complex64::new(0.0, -0.5) * (-x1.cos());
            assert!((got[[m1, 0]] - want).norm() < 1e-9, "at x1={x1}");
        }
    }

    #[test]
    fn moyal_antisymmetry_and_poisson() {
        let t = Truncation::new(8);
        let sin_grid = GridField::from_fn(&t, |x1, _| x1.sin()).to_grid();
        let a = Arc::new(Symbol::function(&t, &sin_grid));
        // a = b → 0
        let zero = moyal(&a, &a, 3).unwrap();
        let sup = zero.eval([1.5, 0.3]).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(sup < 1e-12);
        // {ξ1, sin x1} = cos x1 at ρ = 2
        let b = Arc::new(Symbol::multiplier(&t, 1.0, |xi| Complex64::new(xi[0], 0.0)));
        let m = moyal(&b, &a, 2).unwrap();
        let got = m.eval([2.0, 0.0]);
        let xs = t.grid_coords();
        for (m1, &x1) in xs.iter().enumerate() {
            assert!((got[[m1, 0]].re - x1.cos()).abs() < 1e-9);
            assert!(got[[m1, 0]].im.abs() < 1e-9);
        }
        // Fourier-multiplier pair → 0
        let c = Arc::new(Symbol::radial_multiplier(&t, 1.0, |r| r));
        let d = Arc::new(Symbol::radial_multiplier(&t, 0.5, |r| (1.0 + r).sqrt()));
        let z = moyal(&c, &d, 4).unwrap();
        let sup = z.eval([3.0, 1.0]).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(sup < 1e-9);
    }

    #[test]
    fn real_to_real_preserves_conjugate_pairs() {
        let t = Truncation::new(12);
        let d = Arc::new(Symbol::radial_multiplier(&t, 1.5, |r| {
            (r * (1.0 + r * r)).sqrt()
        }));
        let o = Arc::new(Symbol::fourier_modes(
            &t,
            0.0,
            vec![((1, 0), Arc::new(|_| Complex64::new(1.0, 0.0)) as _)],
        ));
        let pack = real_to_real_pack(&d, &o, &t).unwrap();
        let v = GridField::from_fn(&t, |x1, x2| (2.0 * x1).cos() + (x2).sin() * 0.7);
        let w = conj_field(&v); // v real → w = v in coefficients
        let (first, second) = pack.apply_pair(&v, &w);
        let defect = conj_field(&first).sub(&second).l2_norm();
        assert!(defect <= 1e-12, "conjugate-pair defect {defect}");
        // d real multiplier, o = 0: block diag(Λ, Λ) keeps real fields real
        let zero = Arc::new(Symbol::constant(&t, 0.0));
        let pack2 = real_to_real_pack(&d, &zero, &t).unwrap();
        let (f2, _) = pack2.apply_pair(&v, &w);
        let max_im = f2.to_grid().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        assert!(max_im <= 1e-12);
    }

    #[test]
    fn quantize_r_localized_support() {
        let t = Truncation::new(24);
        let r_loc = 1.0;
        let a = Symbol::product(
            &t,
            &GridField::from_fn(&t, |x1, _| 1.0 + 0.5 * x1.cos()).to_grid(),
            0.0,
            move |xi| {
                let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
                Complex64::new(theta_cut(r / r_loc), 0.0)
            },
        )
        .with_r_localized(r_loc);
        let op = quantize(&a, &t).unwrap();
        for (j, k, v) in op.entries() {
            let mid = ((j.0 + k.0) as f64 / 2.0, (j.1 + k.1) as f64 / 2.0);
            let mid_r = (mid.0 * mid.0 + mid.1 * mid.1).sqrt();
            if mid_r > 11.0 * r_loc {
                assert_eq!(v.norm(), 0.0, "entry beyond 11R at mid {mid:?}");
            }
            let out_r = ((j.0 * j.0 + j.1 * j.1) as f64).sqrt();
            assert!(out_r <= 12.0 * r_loc, "output freq beyond 12R: {j:?}");
        }
    }

    // Composition-theorem order on single modes: the defect
    // ‖Op(a)Op(b) − Op(a#_ρ b)‖ decays at rate ≥ ρ − m1 − m2 (δ = 1).
    #[test]
    fn composition_defect_decay() {
        let t = Truncation::new(40);
        let freqs: [i64; 4] = [20, 24, 30, 36];
        for &(m1, m2, rho, want) in
            &[(1.0, 1.0, 1u32, -1.0), (1.0, 1.0, 2, 0.0), (1.5, 0.5, 3, 1.0)]
        {
            let fa = GridField::from_fn(&t, |x1, _| 1.0 + 0.5 * x1.cos()).to_grid();
            let fb = GridField::from_fn(&t, |_, x2| 1.0 + 0.5 * x2.sin()).to_grid();
            let a = Arc::new(Symbol::product(&t, &fa, m1, move |xi| {
                Complex64::new(bracket(xi).powf(m1), 0.0)
            }));
            let b = Arc::new(Symbol::product(&t, &fb, m2, move |xi| {
                Complex64::new(bracket(xi).powf(m2), 0.0)
            }));
            let ab = Arc::new(compose_expansion(&a, &b, rho).unwrap());
            let mut defects = Vec::new();
            let mut xs = Vec::new();
            for &n in &freqs {
                let u = GridField::single_mode(&t, (n, 0));
                let bu = apply_bw(&b, &u).unwrap();
                let abu = apply_bw(&a, &bu).unwrap();
                let cu = apply_bw(&ab, &u).unwrap();
                defects.push(abu.sub(&cu).l2_norm());
                xs.push(n as f64);
            }
            let (slope, _) = fit_loglog(&xs, &defects);
            let decay = -slope;
            assert!(
                decay >= want - 0.2,
                "(m1={m1}, m2={m2}, ρ={rho}): decay {decay:.3} < {want} − 0.2; defects {defects:?}"
            );
        }
    }

    #[test]
    fn coo_export_sorted() {
        let t = Truncation::new(4);
        let a = Symbol::radial_multiplier(&t, 0.0, |r| 1.0 / (1.0 + r));
        let op = quantize(&a, &t).unwrap();
        let text = op.export_coo();
        let lines: Vec<&str> = text.lines().collect();
        assert!(!lines.is_empty());
        let mut sorted = lines.clone();
        sorted.sort_by_key(|l| {
            let v: Vec<i64> = l.split_whitespace().take(4).map(|t| t.parse().unwrap()).collect();
            (v[0], v[1], v[2], v[3])
        });
        assert_eq!(lines, sorted);
    }
}
