use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dno::{complexify, state_norm};
use crate::nf::{block_partition, low_energy, NfParams};
use crate::paracalc::fit_loglog;
use crate::spectral::{GridField, Truncation, ZcsState};

use super::integrator::Integrator;
use super::{RunConfig, SimError};

/// Random-phase initial data on the annulus `2 ≤ |j| ≤ 8`, scaled so the
/// lifespan norm `‖η‖_{s+1/4} + ‖ψ‖_{s−1/4}` equals ε. The RNG stream is
/// derived deterministically from `(seed, ε, κ)`.
pub fn random_annulus_state(
    trunc: &Arc<Truncation>,
    eps: f64,
    kappa: f64,
    s: f64,
    seed: u64,
) -> ZcsState {
    let mut key = seed;
    key ^= eps.to_bits().rotate_left(17);
    key ^= kappa.to_bits().rotate_left(41);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let mut eta = GridField::zeros(trunc);
    let mut psi = GridField::zeros(trunc);
    let n = trunc.n_max() as i64;
    for j1 in -n..=n {
        for j2 in -n..=n {
            let r2 = j1 * j1 + j2 * j2;
            if !(4..=64).contains(&r2) {
                continue;
            }
            let phase_e: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let phase_p: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            eta.set_coeff((j1, j2), Complex64::new(0.0, phase_e).exp());
            psi.set_coeff((j1, j2), Complex64::new(0.0, phase_p).exp());
        }
    }
    eta.symmetrize_real();
    eta.project_mean_zero();
    psi.symmetrize_real();
    psi.project_mean_zero();
    let state = ZcsState::new(eta, psi, kappa);
    let norm = state_norm(&state, s);
    let scale = eps / norm;
    ZcsState::new(state.eta.scale(scale), state.psi.scale(scale), kappa)
}

/// Evolve `(η, ψ)` with `(g, κ) = (1, κ)` to time `t` and `(η, λψ)` with
/// `(λ², λ²κ)` to `t/λ`; returns the sup-norm mismatch of the rescaled
/// states, which vanishes up to integrator tolerance by the scaling symmetry.
pub fn scaling_check(
    initial: &ZcsState,
    lambda: f64,
    t: f64,
    cfg: &RunConfig,
) -> Result<f64, SimError> {
    let trunc = initial.truncation();
    let n_steps = (t / cfg.dt).round().max(1.0) as usize;

    let mut cfg_a = cfg.clone();
    cfg_a.dt = t / n_steps as f64;
    let mut integ_a = Integrator::new(trunc, cfg_a, initial.g);
    let mut state_a = initial.clone();
    for _ in 0..n_steps {
        state_a = integ_a.step(&state_a)?;
    }

    let mut cfg_b = cfg.clone();
    cfg_b.dt = (t / lambda) / n_steps as f64;
    cfg_b.kappa = lambda * lambda * cfg.kappa;
    let g_b = lambda * lambda * initial.g;
    let initial_b = ZcsState::with_gravity(
        initial.eta.clone(),
        initial.psi.scale(lambda),
        cfg_b.kappa,
        g_b,
    );
    let mut integ_b = Integrator::new(trunc, cfg_b, g_b);
    let mut state_b = initial_b;
    for _ in 0..n_steps {
        state_b = integ_b.step(&state_b)?;
    }

    // compare η_B with η_A and ψ_B with λ·ψ_A in the sup norm
    let eta_diff = state_b.eta.sub(&state_a.eta).to_grid();
    let psi_diff = state_b.psi.sub(&state_a.psi.scale(lambda)).to_grid();
    let sup = eta_diff
        .iter()
        .chain(psi_diff.iter())
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    Ok(sup)
}

#[derive(Debug, Clone, Copy)]
pub struct LifespanRow {
    pub epsilon: f64,
    pub lifespan: f64,
    pub censored: bool,
}

#[derive(Debug, Clone)]
pub struct LifespanResult {
    pub rows: Vec<LifespanRow>,
    /// Least-squares slope of `log T` vs `log ε` (censored entries enter as
    /// lower bounds, making the fitted slope conservative).
    pub slope: f64,
}

/// For each ε, evolve seeded random data until the blow-up proxy
/// `‖ʒ(t)‖_{s₀}` (s₀ = 3) first exceeds `factor·ε`, or `t_cap` is reached
/// (censored entry).
pub fn lifespan_experiment(
    eps_list: &[f64],
    kappa: f64,
    s: f64,
    factor: f64,
    t_cap: f64,
    cfg: &RunConfig,
) -> Result<LifespanResult, SimError> {
    if eps_list.len() < 3 || eps_list.windows(2).any(|w| w[0] <= w[1]) {
        return Err(SimError::InvalidConfig(
            "lifespan needs a decreasing ε list with ≥ 3 entries".into(),
        ));
    }
    let s0 = 3.0;
    let trunc = Truncation::new(cfg.n_max);
    let mut rows = Vec::new();
    for &eps in eps_list {
        let initial = random_annulus_state(&trunc, eps, kappa, s, cfg.seed);
        let mut integ = Integrator::new(&trunc, cfg.clone(), initial.g);
        let mut state = initial;
        if cfg.dealias {
            state.eta = state.eta.dealias();
            state.psi = state.psi.dealias();
        }
        let threshold = factor * eps;
        let mut lifespan = t_cap;
        let mut censored = true;
        while state.t < t_cap {
            state = integ.step(&state)?;
            let (z, _) = complexify(&state);
            if z.sobolev_norm(s0, false) > threshold {
                lifespan = state.t;
                censored = false;
                break;
            }
        }
        rows.push(LifespanRow { epsilon: eps, lifespan, censored });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.lifespan).collect();
    let (slope, _) = fit_loglog(&xs, &ys);
    Ok(LifespanResult { rows, slope })
}

#[derive(Debug, Clone)]
pub struct DriftReport {
    pub eps_values: Vec<f64>,
    pub raw_drift: Vec<f64>,
    pub low_drift: Vec<f64>,
    /// Fitted exponents of |dE/dt| against ε.
    pub raw_exponent: f64,
    pub low_exponent: f64,
}

/// Along nonlinear runs at amplitudes `{ε, ε/2, ε/4}`, measure the drift
/// rates of the raw `‖ʒ‖²_s` and of the block energy `E^(s)_low`, and fit
/// their ε-exponents (the quadratic nonlinearity forces ≥ 2).
pub fn energy_drift_experiment(
    cfg: &RunConfig,
    s: f64,
    eps: f64,
    window: f64,
) -> Result<DriftReport, SimError> {
    let trunc = Truncation::new(cfg.n_max);
    let partition_ball = trunc.n_max() as i64;
    let partition = block_partition(&NfParams::default(), partition_ball);
    let probe_eps = eps.max(2.0 / partition_ball as f64);
    let eps_values = [eps, eps / 2.0, eps / 4.0];
    let mut raw_drift = Vec::new();
    let mut low_drift = Vec::new();
    for &e in &eps_values {
        let initial = random_annulus_state(&trunc, e, cfg.kappa, s, cfg.seed);
        let mut state = initial.clone();
        if cfg.dealias {
            state.eta = state.eta.dealias();
            state.psi = state.psi.dealias();
        }
        let (z0, _) = complexify(&state);
        let raw0 = z0.sobolev_norm(s, false).powi(2);
        let low0 = low_energy(&z0, s, probe_eps, &partition)?;
        let mut integ = Integrator::new(&trunc, cfg.clone(), state.g);
        let n_steps = (window / cfg.dt).round().max(1.0) as usize;
        for _ in 0..n_steps {
            state = integ.step(&state)?;
        }
        let (z1, _) = complexify(&state);
        let raw1 = z1.sobolev_norm(s, false).powi(2);
        let low1 = low_energy(&z1, s, probe_eps, &partition)?;
        let t = n_steps as f64 * cfg.dt;
        raw_drift.push(((raw1 - raw0).abs() / t).max(1e-300));
        low_drift.push(((low1 - low0).abs() / t).max(1e-300));
    }
    let (raw_exponent, _) = fit_loglog(&eps_values, &raw_drift);
    let (low_exponent, _) = fit_loglog(&eps_values, &low_drift);
    Ok(DriftReport {
        eps_values: eps_values.to_vec(),
        raw_drift,
        low_drift,
        raw_exponent,
        low_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annulus_data_is_normalized_and_seeded() {
        let t = Truncation::new(16);
        let a = random_annulus_state(&t, 0.05, 1.0, 3.0, 7);
        let b = random_annulus_state(&t, 0.05, 1.0, 3.0, 7);
        let c = random_annulus_state(&t, 0.05, 1.0, 3.0, 8);
        approx::assert_relative_eq!(state_norm(&a, 3.0), 0.05, max_relative = 1e-12);
        assert_eq!(a.eta.coeffs(), b.eta.coeffs());
        assert!(a.eta.sub(&c.eta).l2_norm() > 0.0);
        // supported on the annulus only
        for j in t.freqs() {
            let r2 = j.0 * j.0 + j.1 * j.1;
            if !(4..=64).contains(&r2) {
                assert_eq!(a.eta.coeff(j).norm(), 0.0);
            }
        }
    }
}
