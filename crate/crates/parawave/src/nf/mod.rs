//! Quasi-resonant normal-form machinery: symbol decompositions, homological
//! solvers, Birkhoff coefficient division, R-localization, the lattice block
//! partition, and the low/high frequency modified energies.

mod birkhoff;
mod blocks;
mod decompose;
mod energy;
mod flow;

pub use birkhoff::{
    amplification_ok, birkhoff_coeffs, conjugation_residual, BirkhoffOperators, CoeffTable,
};
pub use blocks::{admissible_coupling, block_partition, low_energy, BlockPartition};
pub use decompose::{
    chi_k, chi_tilde_k, decompose, g_solve, grad_lambda, homological_residual,
    poisson_with_lambda, random_real_symbol, sample_xi_dyadic, transport_generator,
    transport_residual, Decomposition,
};
pub use energy::{
    energy_symbol, modified_energy, omega_radial, r_localize, EnergySymbols, LocalizeSide,
};
pub use flow::flow_integrate;

use thiserror::Error;

/// Parameter regime of the quasi-resonant decomposition: the inequalities
/// `δ ∈ (7/8, 1)`, `τ > 2`, `0 < ν < δ/(τ+1)` are enforced at construction,
/// and `μ = 1 − δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NfParams {
    pub delta: f64,
    pub tau: f64,
    pub nu: f64,
    pub mu: f64,
    pub r_loc: f64,
    /// Target smoothing order of the iterated homological scheme.
    pub rho: f64,
}

impl NfParams {
    pub fn new(delta: f64, tau: f64, nu: f64, r_loc: f64, rho: f64) -> Result<Self, NfError> {
        if !(delta > 0.875 && delta < 1.0) {
            return Err(NfError::InvalidParams(format!("delta {delta} outside (7/8, 1)")));
        }
        if tau <= 2.0 {
            return Err(NfError::InvalidParams(format!("tau {tau} must exceed 2")));
        }
        if !(nu > 0.0 && nu < delta / (tau + 1.0)) {
            return Err(NfError::InvalidParams(format!(
                "nu {nu} outside (0, {})",
                delta / (tau + 1.0)
            )));
        }
        if r_loc <= 1.0 {
            return Err(NfError::InvalidLocalizationRadius(r_loc));
        }
        Ok(Self { delta, tau, nu, mu: 1.0 - delta, r_loc, rho })
    }
}

impl Default for NfParams {
    /// δ = 15/16, τ = 5/2, ν = 1/4 (which satisfies ν < δ/(τ+1) ≈ 0.268).
    fn default() -> Self {
        Self::new(15.0 / 16.0, 2.5, 0.25, 4.0, 2.0).unwrap()
    }
}

#[derive(Debug, Error)]
pub enum NfError {
    #[error("invalid normal-form parameters: {0}")]
    InvalidParams(String),
    #[error("localization radius must exceed 1, got {0}")]
    InvalidLocalizationRadius(f64),
    #[error("three-wave resonance at j={j:?}, k={k:?}: divisor {divisor}")]
    Resonance { j: (i64, i64), k: (i64, i64), divisor: f64 },
    #[error("degenerate triple at j={j:?}, k={k:?}")]
    DegenerateTriple { j: (i64, i64), k: (i64, i64) },
    #[error("block partition ball {ball} does not cover B(2/ε) = B({needed})")]
    PartitionTooSmall { ball: i64, needed: f64 },
    #[error("ellipticity failure at ξ={xi:?}: symbol {value} below floor {floor}")]
    EllipticityFailure { xi: [f64; 2], value: f64, floor: f64 },
    #[error("flow needs at least 16 steps, got {0}")]
    TooFewFlowSteps(usize),
    #[error("flow step rejected: local error estimate {error}")]
    FlowStepRejected { error: f64 },
    #[error(transparent)]
    Paracalc(#[from] crate::paracalc::ParacalcError),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validate() {
        assert!(NfParams::new(0.9375, 2.5, 0.25, 4.0, 2.0).is_ok());
        assert!(NfParams::new(0.8, 2.5, 0.25, 4.0, 2.0).is_err());
        assert!(NfParams::new(0.9375, 1.5, 0.25, 4.0, 2.0).is_err());
        assert!(NfParams::new(0.9375, 2.5, 0.3, 4.0, 2.0).is_err());
        let p = NfParams::default();
        assert!((p.mu - 0.0625).abs() < 1e-15);
    }
}
