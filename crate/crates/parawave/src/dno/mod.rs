//! Dirichlet-Neumann operator `G(η)ψ` by the flattened-strip fixed-point
//! solver, with analytic and recursion oracles, surface velocity fields, the
//! Taylor coefficient, Alinhac's good unknown, paralinearization symbols, and
//! the symmetrization data.

mod recursion;
mod strip;
mod symbols;

pub use recursion::dn_recursion_oracle;
pub use strip::{
    flattened_coeffs, FlattenedCoeffs, IterStat, StripContext, StripField, StripParams,
    StripSolution, StripSolver,
};
pub use symbols::{dn_symbols, paralin_remainder, transport_symbol, DnSymbols};

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

use crate::dispersion::symmetrizer_m_g;
use crate::paracalc::{apply_bw, conj_field, ParacalcError, Symbol};
use crate::spectral::{DiffKind, GridField, Truncation, ZcsState};

#[derive(Debug, Error)]
pub enum DnoError {
    #[error("fixed-point iteration not contracting after {iterations} iterations (ratio {ratio})")]
    NonContraction { iterations: usize, ratio: f64 },
    #[error("fixed-point iteration exceeded {0} iterations")]
    MaxIterations(usize),
    #[error("recursion oracle order {0} exceeds the supported maximum 6")]
    RecursionOrderTooLarge(usize),
    #[error(transparent)]
    Paracalc(#[from] ParacalcError),
}

/// Flat harmonic extension evaluated at depth `y ≤ 0`: `e^{y|j|} ψ̂_j`.
pub fn harmonic_flat(psi: &GridField, y: f64) -> GridField {
    psi.multiplier(|j| {
        let r = ((j.0 * j.0 + j.1 * j.1) as f64).sqrt();
        Complex64::new((y * r).exp(), 0.0)
    })
}

/// Result of a Dirichlet-Neumann solve with solver diagnostics.
pub struct DnOutput {
    pub g: GridField,
    pub solution: StripSolution,
    /// Mean of the assembled flux before the mean-zero projection; the
    /// continuous operator maps into mean-zero, so this measures solver
    /// consistency.
    pub raw_mean: f64,
}

/// `G(η)ψ` with a shared solver context and optional warm start.
pub fn dirichlet_neumann_with(
    ctx: &StripContext,
    eta: &GridField,
    psi: &GridField,
    warm: Option<&Array2<Complex64>>,
) -> Result<DnOutput, DnoError> {
    let solver = StripSolver::new(ctx, eta);
    solve_and_assemble(&solver, psi, warm)
}

pub fn solve_and_assemble(
    solver: &StripSolver,
    psi: &GridField,
    warm: Option<&Array2<Complex64>>,
) -> Result<DnOutput, DnoError> {
    let ctx = solver.ctx;
    let trunc = &ctx.trunc;
    let solution = solver.solve(psi, warm)?;
    // ∂_yφ|₀ = |D|ψ (exact on the flat part) + ∂_y u|₀ (one-sided stencil)
    let dy_u = ctx.surface_dy(&solution.correction);
    let mut dy_phi = psi.differential(DiffKind::AbsPower(1.0));
    {
        let flat = dy_phi.coeffs_mut().as_slice_mut().unwrap();
        for (idx, v) in dy_u.iter().enumerate() {
            flat[idx] += v;
        }
    }
    let coeffs = solver.coeffs();
    let p_dy = dy_phi.to_grid();
    let p_px = psi.differential(DiffKind::GradX1).to_grid();
    let p_py = psi.differential(DiffKind::GradX2).to_grid();
    let g = trunc.n_grid();
    let mut prod = Array2::<Complex64>::zeros((g, g));
    for r in 0..g {
        for c in 0..g {
            prod[[r, c]] = coeffs.one_plus[[r, c]] * p_dy[[r, c]]
                - coeffs.grad1[[r, c]] * p_px[[r, c]]
                - coeffs.grad2[[r, c]] * p_py[[r, c]];
        }
    }
    let mut out = GridField::from_coeffs(trunc, trunc.to_coeffs(&prod)).dealias();
    let raw_mean = out.coeff((0, 0)).norm();
    if psi.is_real() {
        out.symmetrize_real();
    }
    out.project_mean_zero();
    Ok(DnOutput { g: out, solution, raw_mean })
}

/// `G(η)ψ` with default strip parameters at the given tolerance.
pub fn dirichlet_neumann(
    eta: &GridField,
    psi: &GridField,
    tol: f64,
) -> Result<GridField, DnoError> {
    let ctx = StripContext::new(eta.truncation(), StripParams { tol, ..Default::default() });
    Ok(dirichlet_neumann_with(&ctx, eta, psi, None)?.g)
}

/// Horizontal and vertical components of the surface velocity:
/// `B = (G(η)ψ + ∇η·∇ψ)/(1+|∇η|²)`, `V = ∇ψ − B ∇η`.
pub struct VelocityFields {
    pub v: (GridField, GridField),
    pub b: GridField,
}

pub fn velocity_fields_from_g(
    eta: &GridField,
    psi: &GridField,
    g_val: &GridField,
) -> VelocityFields {
    let ex = eta.differential(DiffKind::GradX1);
    let ey = eta.differential(DiffKind::GradX2);
    let px = psi.differential(DiffKind::GradX1);
    let py = psi.differential(DiffKind::GradX2);
    let num = g_val.add(&ex.pointwise_mul(&px).add(&ey.pointwise_mul(&py)));
    let trunc = eta.truncation();
    let gsz = trunc.n_grid();
    let exg = ex.to_grid();
    let eyg = ey.to_grid();
    let numg = num.to_grid();
    let mut bg = Array2::<Complex64>::zeros((gsz, gsz));
    for r in 0..gsz {
        for c in 0..gsz {
            let d = 1.0 + exg[[r, c]].re * exg[[r, c]].re + eyg[[r, c]].re * eyg[[r, c]].re;
            bg[[r, c]] = numg[[r, c]] / d;
        }
    }
    let b = GridField::from_coeffs(trunc, trunc.to_coeffs(&bg)).dealias();
    let v1 = px.sub(&b.pointwise_mul(&ex)).dealias();
    let v2 = py.sub(&b.pointwise_mul(&ey)).dealias();
    VelocityFields { v: (v1, v2), b }
}

pub fn velocity_fields(
    eta: &GridField,
    psi: &GridField,
    tol: f64,
) -> Result<VelocityFields, DnoError> {
    let g_val = dirichlet_neumann(eta, psi, tol)?;
    Ok(velocity_fields_from_g(eta, psi, &g_val))
}

/// Alinhac's good unknown `ω = ψ − Op^{BW}(B) η`.
pub fn good_unknown(eta: &GridField, psi: &GridField, tol: f64) -> Result<GridField, DnoError> {
    let fields = velocity_fields(eta, psi, tol)?;
    good_unknown_from_b(eta, psi, &fields.b)
}

pub fn good_unknown_from_b(
    eta: &GridField,
    psi: &GridField,
    b: &GridField,
) -> Result<GridField, DnoError> {
    let sym = Symbol::function(eta.truncation(), &b.to_grid());
    let correction = apply_bw(&sym, eta)?;
    Ok(psi.sub(&correction))
}

/// Right-hand side of the water-wave system for `(η, ψ)`:
/// `η̇ = G(η)ψ`,
/// `ψ̇ = −gη − ½|∇ψ|² + ½(∇η·∇ψ + G(η)ψ)²/(1+|∇η|²) + κ∇·(∇η/√(1+|∇η|²))`.
pub fn zcs_rhs_with(
    ctx: &StripContext,
    state: &ZcsState,
    warm: Option<&Array2<Complex64>>,
) -> Result<(GridField, GridField, DnOutput), DnoError> {
    let eta = &state.eta;
    let psi = &state.psi;
    let trunc = state.truncation();
    let out = dirichlet_neumann_with(ctx, eta, psi, warm)?;

    let ex = eta.differential(DiffKind::GradX1).to_grid();
    let ey = eta.differential(DiffKind::GradX2).to_grid();
    let px = psi.differential(DiffKind::GradX1).to_grid();
    let py = psi.differential(DiffKind::GradX2).to_grid();
    let gg = out.g.to_grid();
    let gsz = trunc.n_grid();
    let mut quad = Array2::<Complex64>::zeros((gsz, gsz));
    let mut curv1 = Array2::<Complex64>::zeros((gsz, gsz));
    let mut curv2 = Array2::<Complex64>::zeros((gsz, gsz));
    for r in 0..gsz {
        for c in 0..gsz {
            let gx = ex[[r, c]].re;
            let gy = ey[[r, c]].re;
            let denom = 1.0 + gx * gx + gy * gy;
            let dot = gx * px[[r, c]] + gy * py[[r, c]];
            let num = dot + gg[[r, c]];
            quad[[r, c]] = -0.5 * (px[[r, c]] * px[[r, c]] + py[[r, c]] * py[[r, c]])
                + 0.5 * num * num / denom;
            let root = denom.sqrt();
            curv1[[r, c]] = Complex64::new(gx / root, 0.0);
            curv2[[r, c]] = Complex64::new(gy / root, 0.0);
        }
    }
    let quad = GridField::from_coeffs(trunc, trunc.to_coeffs(&quad)).dealias();
    let curv = GridField::from_coeffs(trunc, trunc.to_coeffs(&curv1))
        .differential(DiffKind::GradX1)
        .add(&GridField::from_coeffs(trunc, trunc.to_coeffs(&curv2)).differential(DiffKind::GradX2))
        .dealias();
    let mut psi_dot = eta.scale(-state.g).add(&quad).add(&curv.scale(state.kappa));
    psi_dot.symmetrize_real();
    psi_dot.project_mean_zero();
    Ok((out.g.clone(), psi_dot, out))
}

pub fn zcs_rhs(state: &ZcsState, tol: f64) -> Result<(GridField, GridField), DnoError> {
    let ctx = StripContext::new(state.truncation(), StripParams { tol, ..Default::default() });
    let (ed, pd, _) = zcs_rhs_with(&ctx, state, None)?;
    Ok((ed, pd))
}

/// Taylor coefficient `a = ∂_t B + V·∇B`, with `∂_t B` by a centered
/// difference of B along Euler substates of the flow (dt = 1e−4).
pub fn taylor_coefficient(state: &ZcsState, tol: f64) -> Result<GridField, DnoError> {
    let dt = 1e-4;
    let (eta_dot, psi_dot) = zcs_rhs(state, tol)?;
    let shift = |s: f64| {
        let mut st = state.clone();
        st.eta = st.eta.add(&eta_dot.scale(s));
        st.psi = st.psi.add(&psi_dot.scale(s));
        st
    };
    let plus = shift(dt);
    let minus = shift(-dt);
    let b_plus = velocity_fields(&plus.eta, &plus.psi, tol)?.b;
    let b_minus = velocity_fields(&minus.eta, &minus.psi, tol)?.b;
    let db_dt = b_plus.sub(&b_minus).scale(1.0 / (2.0 * dt));
    let fields = velocity_fields(&state.eta, &state.psi, tol)?;
    let bx = fields.b.differential(DiffKind::GradX1);
    let by = fields.b.differential(DiffKind::GradX2);
    let advect = fields.v.0.pointwise_mul(&bx).add(&fields.v.1.pointwise_mul(&by)).dealias();
    Ok(db_dt.add(&advect))
}

/// Complex Zakharov variable `ʒ = (M(D)^{-1}η + i M(D)ψ)/√2` and its
/// conjugate; the inverse recovers `(η, ψ)`. The symmetrizer uses the
/// state's gravity.
pub fn complexify(state: &ZcsState) -> (GridField, GridField) {
    let (kappa, g) = (state.kappa, state.g);
    let m_inv = state.eta.multiplier(|j| {
        if j == (0, 0) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0 / symmetrizer_m_g([j.0 as f64, j.1 as f64], g, kappa), 0.0)
        }
    });
    let m_psi = state.psi.multiplier(|j| {
        if j == (0, 0) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(symmetrizer_m_g([j.0 as f64, j.1 as f64], g, kappa), 0.0)
        }
    });
    let inv_sqrt2 = 1.0 / 2f64.sqrt();
    let z = m_inv.add(&m_psi.multiplier(|_| Complex64::new(0.0, 1.0))).scale(inv_sqrt2);
    let zbar = conj_field(&z);
    (z, zbar)
}

/// Inverse of [`complexify`]: `η = M(D)(ʒ + conj ʒ)/√2`, `ψ = M(D)^{-1}(ʒ − conj ʒ)/(i√2)`.
pub fn decomplexify(z: &GridField, kappa: f64) -> (GridField, GridField) {
    decomplexify_g(z, 1.0, kappa)
}

pub fn decomplexify_g(z: &GridField, g: f64, kappa: f64) -> (GridField, GridField) {
    let zbar = conj_field(z);
    let sum = z.add(&zbar);
    let diff = z.sub(&zbar);
    let inv_sqrt2 = 1.0 / 2f64.sqrt();
    let mut eta = sum
        .multiplier(|j| {
            if j == (0, 0) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(symmetrizer_m_g([j.0 as f64, j.1 as f64], g, kappa), 0.0)
            }
        })
        .scale(inv_sqrt2);
    let mut psi = diff
        .multiplier(|j| {
            if j == (0, 0) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -1.0 / symmetrizer_m_g([j.0 as f64, j.1 as f64], g, kappa))
            }
        })
        .scale(inv_sqrt2);
    eta.symmetrize_real();
    eta.project_mean_zero();
    psi.symmetrize_real();
    psi.project_mean_zero();
    (eta, psi)
}

/// Norm of the lifespan bound: `‖η‖_{s+1/4} + ‖ψ‖_{s−1/4}`.
pub fn state_norm(state: &ZcsState, s: f64) -> f64 {
    state.eta.sobolev_norm(s + 0.25, false) + state.psi.sobolev_norm(s - 0.25, false)
}

pub(crate) fn default_ctx(trunc: &Arc<Truncation>, tol: f64) -> StripContext {
    StripContext::new(trunc, StripParams { tol, ..Default::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Truncation;
    use approx::assert_relative_eq;

    #[test]
    fn harmonic_flat_cases() {
        let t = Truncation::new(8);
        let psi = GridField::from_fn(&t, |x1, _| x1.cos());
        // y = 0 is the identity
        let same = harmonic_flat(&psi, 0.0);
        assert!(same.sub(&psi).l2_norm() == 0.0);
        // e^{i(1,0)x} at y=−1 decays by e^{−1}
        let mode = GridField::single_mode(&t, (1, 0));
        let down = harmonic_flat(&mode, -1.0);
        assert_relative_eq!(down.coeff((1, 0)).re, (-1f64).exp(), epsilon = 1e-15);
        // constants unchanged at all depths
        let c = GridField::single_mode(&t, (0, 0));
        assert!(harmonic_flat(&c, -3.0).sub(&c).l2_norm() == 0.0);
    }

    #[test]
    fn flat_surface_dn_is_abs_d() {
        let t = Truncation::new(16);
        let eta = GridField::zeros(&t);
        let psi = GridField::from_fn(&t, |x1, x2| x1.cos() + 0.5 * (2.0 * x2).sin());
        let g = dirichlet_neumann(&eta, &psi, 1e-10).unwrap();
        let want = psi.differential(DiffKind::AbsPower(1.0)).dealias();
        let err = g.sub(&want).l2_norm();
        assert!(err <= 1e-10, "flat defect {err}");
    }

    #[test]
    fn analytic_extension_oracle() {
        // Φ = e^z cos x₁ restricted to z = η(x) gives the boundary data;
        // G(η)ψ = e^{0.1cos x₁}(cos x₁ − 0.1 sin²x₁).
        let t = Truncation::new(32);
        let eta = GridField::cosine(&t, (1, 0), 0.1);
        let psi = GridField::from_fn(&t, |x1, _| (0.1 * x1.cos()).exp() * x1.cos());
        let g = dirichlet_neumann(&eta, &psi, 1e-10).unwrap();
        let want = GridField::from_fn(&t, |x1, _| {
            (0.1 * x1.cos()).exp() * (x1.cos() - 0.1 * x1.sin() * x1.sin())
        })
        .dealias()
        .project(|j| j != (0, 0));
        let rel = g.sub(&want).l2_norm() / want.l2_norm();
        assert!(rel <= 1e-6, "oracle rel err {rel}");
    }

    #[test]
    fn complexify_roundtrip_and_norms() {
        let t = Truncation::new(12);
        let eta = GridField::from_fn(&t, |x1, x2| 0.1 * (x1.cos() + (2.0 * x2).sin()));
        let psi = GridField::from_fn(&t, |x1, x2| 0.2 * ((x1 + x2).sin()));
        let state = ZcsState::new(eta, psi, 1.0);
        let (z, zbar) = complexify(&state);
        // conjugate structure
        assert!(conj_field(&z).sub(&zbar).l2_norm() < 1e-14);
        let (eta2, psi2) = decomplexify(&z, 1.0);
        assert!(eta2.sub(&state.eta).l2_norm() <= 1e-12);
        assert!(psi2.sub(&state.psi).l2_norm() <= 1e-12);
        // zero state maps to zero
        let zero = ZcsState::zero(&t, 1.0);
        assert_eq!(complexify(&zero).0.l2_norm(), 0.0);
        // norm equivalence within [1/4, 4]
        for s in [0.5, 1.5] {
            let zn = z.sobolev_norm(s, false);
            let xn = state_norm(&state, s);
            let ratio = zn / xn;
            assert!((0.25..=4.0).contains(&ratio), "ratio {ratio} at s={s}");
        }
        // single mode η = cos x₁: ʒ picks up M⁻¹((1,0)) = 2^{1/4}
        let eta1 = GridField::cosine(&t, (1, 0), 1.0);
        let st = ZcsState::new(eta1, GridField::zeros(&t), 1.0);
        let (z1, _) = complexify(&st);
        assert_relative_eq!(
            z1.coeff((1, 0)).re,
            0.5 * 2f64.powf(0.25) / 2f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn good_unknown_flat_is_psi() {
        let t = Truncation::new(12);
        let eta = GridField::zeros(&t);
        let psi = GridField::from_fn(&t, |x1, _| (2.0 * x1).sin());
        let omega = good_unknown(&eta, &psi, 1e-10).unwrap();
        assert!(omega.sub(&psi).l2_norm() < 1e-12);
    }
}
