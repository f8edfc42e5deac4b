use std::sync::Arc;

use num_complex::Complex64;

use crate::paracalc::{quantize, FreqOperator, Symbol};
use crate::spectral::GridField;

use super::NfError;

/// Integrate the paradifferential flow `∂_τ Φ = Op^{BW}(i g) Φ` applied to a
/// conjugate pair, by classical RK4 with step-doubling control on the first
/// step. For real `g` the generator is anti-Hermitian and the flow unitary.
pub fn flow_integrate(
    g: &Arc<Symbol>,
    u0: (&GridField, &GridField),
    tau_end: f64,
    n_steps: usize,
) -> Result<(GridField, GridField), NfError> {
    if n_steps < 16 {
        return Err(NfError::TooFewFlowSteps(n_steps));
    }
    let trunc = u0.0.truncation();
    let ig = g.scaled(Complex64::new(0.0, 1.0));
    let op_plus = quantize(&ig, trunc)?;
    let ig_arc = Arc::new(ig);
    let op_minus = quantize(&ig_arc.conj_reflect(), trunc)?;

    let mut n = n_steps;
    loop {
        // local-error estimate on the first step: one full step vs two halves
        let h = tau_end / n as f64;
        let full = rk4_step(&op_plus, &op_minus, (u0.0.clone(), u0.1.clone()), h);
        let half = {
            let mid = rk4_step(&op_plus, &op_minus, (u0.0.clone(), u0.1.clone()), h / 2.0);
            rk4_step(&op_plus, &op_minus, mid, h / 2.0)
        };
        let err = full.0.sub(&half.0).l2_norm() + full.1.sub(&half.1).l2_norm();
        if err <= 1e-6 {
            break;
        }
        n *= 2;
        if n > (1 << 22) {
            return Err(NfError::FlowStepRejected { error: err });
        }
    }
    let h = tau_end / n as f64;
    let mut state = (u0.0.clone(), u0.1.clone());
    for _ in 0..n {
        state = rk4_step(&op_plus, &op_minus, state, h);
    }
    Ok(state)
}

fn rk4_step(
    op_plus: &FreqOperator,
    op_minus: &FreqOperator,
    u: (GridField, GridField),
    h: f64,
) -> (GridField, GridField) {
    let f = |v: &(GridField, GridField)| (op_plus.apply(&v.0), op_minus.apply(&v.1));
    let k1 = f(&u);
    let u2 = (u.0.add(&k1.0.scale(h / 2.0)), u.1.add(&k1.1.scale(h / 2.0)));
    let k2 = f(&u2);
    let u3 = (u.0.add(&k2.0.scale(h / 2.0)), u.1.add(&k2.1.scale(h / 2.0)));
    let k3 = f(&u3);
    let u4 = (u.0.add(&k3.0.scale(h)), u.1.add(&k3.1.scale(h)));
    let k4 = f(&u4);
    let comb = |a: &GridField, b: &GridField, c: &GridField, d: &GridField| {
        a.scale(h / 6.0)
            .add(&b.scale(h / 3.0))
            .add(&c.scale(h / 3.0))
            .add(&d.scale(h / 6.0))
    };
    (u.0.add(&comb(&k1.0, &k2.0, &k3.0, &k4.0)), u.1.add(&comb(&k1.1, &k2.1, &k3.1, &k4.1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paracalc::conj_field;
    use crate::spectral::Truncation;

    #[test]
    fn zero_generator_is_identity() {
        let t = Truncation::new(8);
        let g = Arc::new(Symbol::constant(&t, 0.0));
        let v = GridField::from_fn(&t, |x1, x2| x1.cos() + (2.0 * x2).sin());
        let w = conj_field(&v);
        let (a, b) = flow_integrate(&g, (&v, &w), 1.0, 16).unwrap();
        assert!(a.sub(&v).l2_norm() == 0.0);
        assert!(b.sub(&w).l2_norm() == 0.0);
    }

    #[test]
    fn multiplier_generator_rotates_phases() {
        let t = Truncation::new(8);
        let g = Arc::new(Symbol::radial_multiplier(&t, 0.0, |r| 1.0 / (1.0 + r)));
        let v = GridField::single_mode(&t, (2, 1))
            .add(&GridField::single_mode(&t, (-1, 3)).scale(0.5));
        let w = conj_field(&v);
        let (a, _) = flow_integrate(&g, (&v, &w), 1.0, 64).unwrap();
        for j in [(2i64, 1i64), (-1, 3)] {
            let r = ((j.0 * j.0 + j.1 * j.1) as f64).sqrt();
            let phase = Complex64::new(0.0, 1.0 / (1.0 + r)).exp();
            let want = v.coeff(j) * phase;
            assert!((a.coeff(j) - want).norm() < 1e-10, "mode {j:?}");
        }
    }

    #[test]
    fn real_symbol_flow_is_unitary() {
        let t = Truncation::new(12);
        let grid = GridField::from_fn(&t, |x1, x2| 0.4 * (x1 + x2).cos()).to_grid();
        let mut sym = Symbol::product(&t, &grid, 0.0, |xi| {
            Complex64::new(1.0 / (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).sqrt(), 0.0)
        });
        sym.real_valued = true;
        let g = Arc::new(sym);
        let v = GridField::from_fn(&t, |x1, x2| (3.0 * x1).sin() * x2.cos() + 0.2 * x1.cos());
        let w = conj_field(&v);
        let (a, b) = flow_integrate(&g, (&v, &w), 1.0, 64).unwrap();
        let drift = (a.l2_norm() - v.l2_norm()).abs() / v.l2_norm();
        assert!(drift <= 1e-8, "L² drift {drift}");
        // conjugate-pair structure preserved
        assert!(conj_field(&a).sub(&b).l2_norm() <= 1e-9);
        // rejects too few steps
        assert!(flow_integrate(&g, (&v, &w), 1.0, 8).is_err());
    }
}
