use std::sync::Arc;

use num_complex::Complex64;

use crate::dispersion::dispersion_unchecked;
use crate::paracalc::{apply_bw, theta_cut, theta_tilde, Symbol};
use crate::spectral::{Grid, GridField, Truncation};

use super::NfError;

/// `Ω(y) = √(κ y³ + y)`, the dispersion relation as a function of `|ξ|`.
pub fn omega_radial(y: f64, kappa: f64) -> f64 {
    (kappa * y * y * y + y).sqrt()
}

/// Multiply a symbol by `θ(⟨ξ⟩/R)` (low side) or `1 − θ(⟨ξ⟩/R)` (high side);
/// the low output is R-localized: it vanishes for `|ξ| ≥ 11R`.
pub enum LocalizeSide {
    Low,
    High,
}

pub fn r_localize(a: &Arc<Symbol>, r_loc: f64, side: LocalizeSide) -> Result<Symbol, NfError> {
    if r_loc <= 1.0 {
        return Err(NfError::InvalidLocalizationRadius(r_loc));
    }
    let inner = Arc::clone(a);
    let trunc = Arc::clone(a.truncation());
    let low = matches!(side, LocalizeSide::Low);
    let mut s = Symbol::general(&trunc, a.order, move |xi| {
        let bracket = (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        let theta = theta_cut(bracket / r_loc);
        let w = if low { theta } else { 1.0 - theta };
        if w == 0.0 {
            let g = inner.truncation().n_grid();
            return Grid::zeros((g, g));
        }
        let mut grid = inner.eval(xi);
        grid.mapv_inplace(|z| z * w);
        grid
    });
    s.real_valued = a.real_valued;
    s.even_in_xi = a.even_in_xi;
    if low {
        s.r_localized = Some(r_loc);
    }
    Ok(s)
}

/// Perturbation symbols entering the modified dispersion
/// `L^{(3/2)} = Λ + a^{(3/2)} + b^{(1/2)}`; either may be absent.
#[derive(Default)]
pub struct EnergySymbols {
    pub a32: Option<Arc<Symbol>>,
    pub b12: Option<Arc<Symbol>>,
}

fn l32_grid(syms: &EnergySymbols, trunc: &Arc<Truncation>, kappa: f64, xi: [f64; 2]) -> Grid {
    let g = trunc.n_grid();
    let lam = dispersion_unchecked(xi, kappa);
    let mut grid = Grid::from_elem((g, g), Complex64::new(lam, 0.0));
    if let Some(a) = &syms.a32 {
        grid += &a.eval(xi);
    }
    if let Some(b) = &syms.b12 {
        grid += &b.eval(xi);
    }
    grid
}

/// Modified high-frequency energy
/// `⟨Op^{BW}(L^{(2s)}·θ̃(L^{(3/2)}/Ω(1/ε))) z, z⟩` with
/// `L^{(2s)} = (L^{(3/2)})^{(4/3)s}`; the pairing is the coefficient inner
/// product `Σ_j (Op z)_j conj(z_j)`.
pub fn modified_energy(
    z: &GridField,
    syms: &EnergySymbols,
    kappa: f64,
    s: f64,
    eps: f64,
) -> Result<f64, NfError> {
    let trunc = z.truncation();
    // ellipticity: L^{(3/2)} ≥ Λ/2 on the sample grid
    for &xi in super::sample_xi_dyadic(trunc).iter() {
        let lam = dispersion_unchecked(xi, kappa);
        let grid = l32_grid(syms, trunc, kappa, xi);
        for v in grid.iter() {
            if v.re < 0.5 * lam {
                return Err(NfError::EllipticityFailure { xi, value: v.re, floor: 0.5 * lam });
            }
        }
    }
    let sym = energy_symbol(trunc, syms, kappa, s, eps);
    let op_z = apply_bw(&sym, z)?;
    let mut acc = Complex64::default();
    for (a, b) in op_z.coeffs().iter().zip(z.coeffs().iter()) {
        acc += a * b.conj();
    }
    Ok(acc.re)
}

/// The cut energy symbol `L^{(2s)}·θ̃(L^{(3/2)}/Ω(1/ε))`.
pub fn energy_symbol(
    trunc: &Arc<Truncation>,
    syms: &EnergySymbols,
    kappa: f64,
    s: f64,
    eps: f64,
) -> Symbol {
    let omega_eps = omega_radial(1.0 / eps, kappa);
    let a32 = syms.a32.clone();
    let b12 = syms.b12.clone();
    let t2 = Arc::clone(trunc);
    let mut sym = Symbol::general(trunc, 2.0 * s, move |xi| {
        let inner = EnergySymbols { a32: a32.clone(), b12: b12.clone() };
        let mut grid = l32_grid(&inner, &t2, kappa, xi);
        grid.mapv_inplace(|v| {
            let l = v.re.max(0.0);
            Complex64::new(l.powf(4.0 * s / 3.0) * theta_tilde(l / omega_eps), 0.0)
        });
        grid
    });
    sym.real_valued = true;
    sym
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paracalc::seminorm_diagnostic;
    use approx::assert_relative_eq;

    #[test]
    fn multiplier_skeleton_is_diagonal_sum() {
        let t = Truncation::new(16);
        let mut z = GridField::zeros(&t);
        for j in [(9i64, 0i64), (12, 3), (-14, -2)] {
            z.set_coeff(j, Complex64::new(0.3, -0.1));
        }
        let (kappa, s, eps) = (1.0, 2.0, 0.25);
        let e = modified_energy(&z, &EnergySymbols::default(), kappa, s, eps).unwrap();
        let mut want = 0.0;
        for j in t.freqs() {
            let lam = dispersion_unchecked([j.0 as f64, j.1 as f64], kappa);
            want += lam.powf(4.0 * s / 3.0)
                * theta_tilde(lam / omega_radial(1.0 / eps, kappa))
                * z.coeff(j).norm_sqr();
        }
        assert_relative_eq!(e, want, max_relative = 1e-10);
    }

    #[test]
    fn low_frequency_support_is_cut() {
        let t = Truncation::new(16);
        let (kappa, s) = (1.0, 1.5);
        let eps = 0.25;
        // support of the cut symbol is inside {|ξ| ≥ 1/(36ε)}
        let cut = 1.0 / (36.0 * eps);
        let z = GridField::single_mode(&t, (0, 0));
        let _ = z;
        let sym = energy_symbol(&t, &EnergySymbols::default(), kappa, s, eps);
        for r in [cut * 0.2, cut * 0.5, cut * 0.99] {
            let v = sym.eval([r, 0.0])[[0, 0]].norm();
            assert_eq!(v, 0.0, "symbol nonzero at |ξ|={r} < {cut}");
        }
        // fields supported below the cut have zero energy
        let mut zl = GridField::zeros(&t);
        zl.set_coeff((1, 0), Complex64::new(1.0, 0.0));
        let e = modified_energy(&zl, &EnergySymbols::default(), kappa, s, eps).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn equivalence_with_high_projection() {
        let t = Truncation::new(24);
        let (kappa, s, eps) = (1.0, 2.0, 0.1);
        let mut z = GridField::zeros(&t);
        // data well above the transition region of θ̃
        for j in [(16i64, 0i64), (0, 20), (15, 15), (-18, 6)] {
            z.set_coeff(j, Complex64::new(0.4, 0.2));
        }
        let e = modified_energy(&z, &EnergySymbols::default(), kappa, s, eps).unwrap();
        let hi = z.project(|j| ((j.0 * j.0 + j.1 * j.1) as f64).sqrt() > 1.0 / eps);
        let norm2 = hi.sobolev_norm(s, true).powi(2);
        // Λ^{4s/3} ≈ κ^{2s/3}|ξ|^{2s} at high frequency: compare modulo κ-power
        let ratio = e / (kappa.powf(2.0 * s / 3.0) * norm2);
        assert!((0.25..=4.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn ellipticity_guard_trips() {
        let t = Truncation::new(12);
        let z = GridField::single_mode(&t, (8, 0));
        let bad = Arc::new(Symbol::general(&t, 1.5, move |xi| {
            let g = 2 * 12 + 1;
            let lam = dispersion_unchecked(xi, 1.0);
            Grid::from_elem((g, g), Complex64::new(-0.9 * lam, 0.0))
        }));
        let syms = EnergySymbols { a32: Some(bad), b12: None };
        assert!(matches!(
            modified_energy(&z, &syms, 1.0, 1.0, 0.25),
            Err(NfError::EllipticityFailure { .. })
        ));
    }

    #[test]
    fn r_localization_support_and_recombination() {
        let t = Truncation::new(24);
        let base = Arc::new(Symbol::product(
            &t,
            &GridField::from_fn(&t, |x1, _| 1.0 + 0.3 * x1.cos()).to_grid(),
            1.0,
            |xi| Complex64::new((1.0 + xi[0] * xi[0] + xi[1] * xi[1]).sqrt(), 0.0),
        ));
        let r_loc = 1.5;
        let low = Arc::new(r_localize(&base, r_loc, LocalizeSide::Low).unwrap());
        let high = Arc::new(r_localize(&base, r_loc, LocalizeSide::High).unwrap());
        assert!(r_localize(&base, 0.5, LocalizeSide::Low).is_err());
        for xi in [[0.5f64, 0.0], [8.0, 3.0], [17.0, 0.0], [20.0, 5.0]] {
            let l = low.eval(xi);
            let h = high.eval(xi);
            let b = base.eval(xi);
            let err = l
                .iter()
                .zip(h.iter())
                .zip(b.iter())
                .map(|((x, y), z)| (x + y - z).norm())
                .fold(0.0, f64::max);
            assert!(err <= 1e-12, "recombination defect {err}");
            let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            if r >= 11.0 * r_loc {
                assert_eq!(l.iter().map(|v| v.norm()).fold(0.0, f64::max), 0.0);
            }
        }
        // order gain of the localized part, reported via the seminorm probe
        let full = seminorm_diagnostic(&low, 1.0, 1);
        let gained = seminorm_diagnostic(&low, 0.0, 1);
        assert!(gained.is_finite() && full.is_finite());
        assert!(gained <= 22.0 * r_loc * full.max(1e-300) * 10.0);
    }
}
