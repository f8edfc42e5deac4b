//! Time integration of the Zakharov-Craig-Sulem system with conservation
//! diagnostics, modified-energy drift measurement, and lifespan experiments.

mod experiments;
mod integrator;

pub use experiments::{
    energy_drift_experiment, lifespan_experiment, random_annulus_state, scaling_check,
    DriftReport, LifespanResult, LifespanRow,
};
pub use integrator::{invariants, invariants_from_g, run, EnergyProbes, Integrator};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    LawsonRk4,
    Rk4,
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lawson_rk4" => Ok(Scheme::LawsonRk4),
            "rk4" => Ok(Scheme::Rk4),
            other => Err(format!("unknown scheme {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n_max: usize,
    pub kappa: f64,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub dealias: bool,
    pub dn_tol: f64,
    pub snapshot_every: usize,
    pub seed: u64,
    /// Vertical resolution of the strip solver.
    pub n_y: usize,
    /// ε defining the block set of the low-frequency energy probe.
    pub energy_eps: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_max: 32,
            kappa: 1.0,
            dt: 0.005,
            t_end: 1.0,
            scheme: Scheme::LawsonRk4,
            dealias: true,
            dn_tol: 1e-10,
            snapshot_every: 20,
            seed: 7,
            n_y: 80,
            energy_eps: 0.25,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0) {
            return Err(SimError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.t_end < self.dt && self.t_end != 0.0 {
            return Err(SimError::InvalidConfig(format!(
                "t_end {} below dt {}",
                self.t_end, self.dt
            )));
        }
        if !(self.kappa > 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        Ok(())
    }
}

/// One snapshot row; the CSV columns are exactly
/// `t, eta_norm, psi_norm, z_norm, H, mass, mom1, mom2, E_low, E_high`.
#[derive(Debug, Clone, Copy)]
pub struct RunRow {
    pub t: f64,
    pub eta_norm: f64,
    pub psi_norm: f64,
    pub z_norm: f64,
    pub hamiltonian: f64,
    pub mass: f64,
    pub mom1: f64,
    pub mom2: f64,
    pub e_low: f64,
    pub e_high: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunRecord {
    pub rows: Vec<RunRow>,
}

impl RunRecord {
    pub fn csv(&self) -> String {
        let mut out = String::from("t,eta_norm,psi_norm,z_norm,H,mass,mom1,mom2,E_low,E_high\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.t,
                r.eta_norm,
                r.psi_norm,
                r.z_norm,
                r.hamiltonian,
                r.mass,
                r.mom1,
                r.mom2,
                r.e_low,
                r.e_high
            ));
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("instability at t={t}: norm grew {norm_before} → {norm_after} in one step")]
    Instability { t: f64, norm_before: f64, norm_after: f64 },
    #[error("run aborted: {reason}")]
    Aborted {
        #[source]
        reason: Box<SimError>,
        partial: RunRecord,
    },
    #[error(transparent)]
    Dno(#[from] crate::dno::DnoError),
    #[error(transparent)]
    Nf(#[from] crate::nf::NfError),
}
