use ndarray::Array2;
use num_complex::Complex64;

use crate::dispersion::dispersion_g;
use crate::dno::{zcs_rhs_with, StripContext, StripParams};
use crate::dno::{complexify, decomplexify_g, state_norm};
use crate::nf::{block_partition, low_energy, modified_energy, BlockPartition, EnergySymbols, NfParams};
use crate::spectral::{DiffKind, GridField, Truncation, ZcsState};

use super::{RunConfig, RunRecord, RunRow, Scheme, SimError};

/// Stateful integrator: owns the strip context and per-stage warm starts.
pub struct Integrator {
    pub ctx: StripContext,
    cfg: RunConfig,
    /// Last two corrections per RK stage slot, for linear extrapolation.
    warm: Vec<[Option<Array2<Complex64>>; 2]>,
    /// `e^{−i Λ_g(j) τ}` multiplier rows for τ = dt/2 and dt.
    prop_half: Vec<Complex64>,
    prop_full: Vec<Complex64>,
}

impl Integrator {
    pub fn new(trunc: &std::sync::Arc<Truncation>, cfg: RunConfig, g: f64) -> Self {
        let ctx = StripContext::new(
            trunc,
            StripParams { tol: cfg.dn_tol, n_y: cfg.n_y, ..Default::default() },
        );
        let n_modes = trunc.len();
        let mut prop_half = vec![Complex64::default(); n_modes];
        let mut prop_full = vec![Complex64::default(); n_modes];
        for (idx, j) in trunc.freqs().enumerate() {
            let lam = dispersion_g([j.0 as f64, j.1 as f64], g, cfg.kappa);
            prop_half[idx] = Complex64::new(0.0, -lam * cfg.dt / 2.0).exp();
            prop_full[idx] = Complex64::new(0.0, -lam * cfg.dt).exp();
        }
        Self { ctx, cfg, warm: vec![[None, None]; 4], prop_half, prop_full }
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    fn rhs_stage(
        &mut self,
        state: &ZcsState,
        stage: usize,
    ) -> Result<(GridField, GridField), SimError> {
        let predicted = match &self.warm[stage] {
            [Some(a), Some(b)] => {
                let mut p = a.clone();
                p.mapv_inplace(|z| 2.0 * z);
                p -= b;
                Some(p)
            }
            [Some(a), None] => Some(a.clone()),
            _ => None,
        };
        let (eta_dot, psi_dot, out) = zcs_rhs_with(&self.ctx, state, predicted.as_ref())?;
        let prev = self.warm[stage][0].take();
        self.warm[stage] = [Some(out.solution.correction), prev];
        let (eta_dot, psi_dot) = if self.cfg.dealias {
            (eta_dot.dealias(), psi_dot.dealias())
        } else {
            (eta_dot, psi_dot)
        };
        Ok((eta_dot, psi_dot))
    }

    /// Advance one step of the configured scheme.
    pub fn step(&mut self, state: &ZcsState) -> Result<ZcsState, SimError> {
        let before = state_norm(state, 3.0);
        let mut next = match self.cfg.scheme {
            Scheme::Rk4 => self.step_rk4(state)?,
            Scheme::LawsonRk4 => self.step_lawson(state)?,
        };
        next.eta.symmetrize_real();
        next.eta.project_mean_zero();
        next.psi.symmetrize_real();
        next.psi.project_mean_zero();
        if self.cfg.dealias {
            next.eta = next.eta.dealias();
            next.psi = next.psi.dealias();
        }
        let after = state_norm(&next, 3.0);
        if !after.is_finite() || (before > 1e-14 && after > 10.0 * before) {
            return Err(SimError::Instability { t: state.t, norm_before: before, norm_after: after });
        }
        Ok(next)
    }

    fn step_rk4(&mut self, state: &ZcsState) -> Result<ZcsState, SimError> {
        let h = self.cfg.dt;
        let mk = |s: &ZcsState, eta: GridField, psi: GridField, t: f64| {
            let mut n = s.clone();
            n.eta = eta;
            n.psi = psi;
            n.t = t;
            n
        };
        let k1 = self.rhs_stage(state, 0)?;
        let s2 = mk(
            state,
            state.eta.add(&k1.0.scale(h / 2.0)),
            state.psi.add(&k1.1.scale(h / 2.0)),
            state.t + h / 2.0,
        );
        let k2 = self.rhs_stage(&s2, 1)?;
        let s3 = mk(
            state,
            state.eta.add(&k2.0.scale(h / 2.0)),
            state.psi.add(&k2.1.scale(h / 2.0)),
            state.t + h / 2.0,
        );
        let k3 = self.rhs_stage(&s3, 2)?;
        let s4 = mk(
            state,
            state.eta.add(&k3.0.scale(h)),
            state.psi.add(&k3.1.scale(h)),
            state.t + h,
        );
        let k4 = self.rhs_stage(&s4, 3)?;
        let comb = |a: &GridField, b: &GridField, c: &GridField, d: &GridField| {
            a.scale(h / 6.0)
                .add(&b.scale(h / 3.0))
                .add(&c.scale(h / 3.0))
                .add(&d.scale(h / 6.0))
        };
        Ok(mk(
            state,
            state.eta.add(&comb(&k1.0, &k2.0, &k3.0, &k4.0)),
            state.psi.add(&comb(&k1.1, &k2.1, &k3.1, &k4.1)),
            state.t + h,
        ))
    }

    /// Nonlinear part of the flow in the complex variable:
    /// `N(ʒ) = ż + iΛ_g ʒ` evaluated through the real variables.
    fn nonlinear_z(
        &mut self,
        z: &GridField,
        template: &ZcsState,
        stage: usize,
        t: f64,
    ) -> Result<GridField, SimError> {
        let (eta, psi) = decomplexify_g(z, template.g, template.kappa);
        let mut st = template.clone();
        st.eta = eta;
        st.psi = psi;
        st.t = t;
        let (eta_dot, psi_dot) = self.rhs_stage(&st, stage)?;
        let zdot_state = ZcsState { eta: eta_dot, psi: psi_dot, ..st.clone() };
        let (zdot, _) = complexify(&zdot_state);
        let (kappa, g) = (template.kappa, template.g);
        let linear = z.multiplier(|j| {
            Complex64::new(0.0, -dispersion_g([j.0 as f64, j.1 as f64], g, kappa))
        });
        Ok(zdot.sub(&linear))
    }

    fn step_lawson(&mut self, state: &ZcsState) -> Result<ZcsState, SimError> {
        let h = self.cfg.dt;
        let (z, _) = complexify(state);
        let apply_prop = |f: &GridField, prop: &[Complex64], conj: bool| {
            let mut out = f.clone();
            for (idx, c) in out.coeffs_mut().as_slice_mut().unwrap().iter_mut().enumerate() {
                *c *= if conj { prop[idx].conj() } else { prop[idx] };
            }
            out
        };
        let prop_half = self.prop_half.clone();
        let prop_full = self.prop_full.clone();
        let half = |f: &GridField| apply_prop(f, &prop_half, false);
        let full = |f: &GridField| apply_prop(f, &prop_full, false);
        let t = state.t;
        // RK4 on w(τ) = e^{iΛτ} z(t+τ): stage fields mapped back with the
        // exact linear propagator before each nonlinearity evaluation
        let f1 = self.nonlinear_z(&z, state, 0, t)?;
        let a2 = half(&z.add(&f1.scale(h / 2.0)));
        let f2 = self.nonlinear_z(&a2, state, 1, t + h / 2.0)?;
        // bring F back to w-coordinates at τ = h/2
        let f2b = apply_prop(&f2, &prop_half, true);
        let a3 = half(&z).add(&half(&f2b.scale(h / 2.0)));
        let f3 = self.nonlinear_z(&a3, state, 2, t + h / 2.0)?;
        let f3b = apply_prop(&f3, &prop_half, true);
        let a4 = full(&z.add(&f3b.scale(h)));
        let f4 = self.nonlinear_z(&a4, state, 3, t + h)?;
        let f4b = apply_prop(&f4, &prop_full, true);
        let w_next = z
            .add(&f1.scale(h / 6.0))
            .add(&f2b.scale(h / 3.0))
            .add(&f3b.scale(h / 3.0))
            .add(&f4b.scale(h / 6.0));
        let z_next = full(&w_next);
        let (eta, psi) = decomplexify_g(&z_next, state.g, state.kappa);
        let mut next = state.clone();
        next.eta = eta;
        next.psi = psi;
        next.t = t + h;
        Ok(next)
    }
}

/// Conserved quantities: Hamiltonian, mass, and the two momenta, by
/// collocation quadrature.
pub fn invariants(state: &ZcsState, ctx: &StripContext) -> Result<(f64, f64, f64, f64), SimError> {
    let (g_val, _, _) = zcs_rhs_with(ctx, state, None)?;
    invariants_from_g(state, &g_val)
}

pub fn invariants_from_g(
    state: &ZcsState,
    g_val: &GridField,
) -> Result<(f64, f64, f64, f64), SimError> {
    let four_pi2 = (2.0 * std::f64::consts::PI).powi(2);
    let grid_mean = |f: &crate::spectral::Grid| -> f64 {
        f.iter().map(|v| v.re).sum::<f64>() / f.len() as f64
    };
    let psi_g = state.psi.pointwise_mul(g_val);
    let kinetic = 0.5 * four_pi2 * grid_mean(&psi_g.to_grid());
    let eta2 = state.eta.pointwise_mul(&state.eta);
    let potential = 0.5 * state.g * four_pi2 * grid_mean(&eta2.to_grid());
    let ex = state.eta.differential(DiffKind::GradX1).to_grid();
    let ey = state.eta.differential(DiffKind::GradX2).to_grid();
    let mut surf = 0.0;
    for (a, b) in ex.iter().zip(ey.iter()) {
        surf += (1.0 + a.re * a.re + b.re * b.re).sqrt() - 1.0;
    }
    let surface = state.kappa * four_pi2 * surf / ex.len() as f64;
    let h = kinetic + potential + surface;
    let mass = state.eta.integral().re;
    let m1 = state
        .eta
        .differential(DiffKind::GradX1)
        .pointwise_mul(&state.psi)
        .integral()
        .re;
    let m2 = state
        .eta
        .differential(DiffKind::GradX2)
        .pointwise_mul(&state.psi)
        .integral()
        .re;
    Ok((h, mass, m1, m2))
}

/// Energy probes recorded along a run.
pub struct EnergyProbes {
    pub partition: BlockPartition,
    pub eps: f64,
    pub s: f64,
}

impl EnergyProbes {
    pub fn new(n_max: usize, eps: f64, s: f64) -> Self {
        let ball = n_max as i64;
        let eps = eps.max(2.0 / ball as f64);
        Self { partition: block_partition(&NfParams::default(), ball), eps, s }
    }
}

/// Step to `t_end`, recording rows every `snapshot_every` steps. On
/// instability the partial record is preserved in the error payload.
pub fn run(
    cfg: &RunConfig,
    initial: &ZcsState,
    s: f64,
) -> Result<RunRecord, SimError> {
    cfg.validate()?;
    let trunc = initial.truncation();
    let mut integ = Integrator::new(trunc, cfg.clone(), initial.g);
    let probes = EnergyProbes::new(trunc.n_max(), cfg.energy_eps, s);
    let mut state = initial.clone();
    if cfg.dealias {
        state.eta = state.eta.dealias();
        state.psi = state.psi.dealias();
    }
    let mut record = RunRecord { rows: Vec::new() };
    let n_steps = (cfg.t_end / cfg.dt).round() as usize;
    let snap = cfg.snapshot_every.max(1);
    push_row(&mut record, &state, &integ.ctx, &probes, s)?;
    for step_idx in 0..n_steps {
        match integ.step(&state) {
            Ok(next) => state = next,
            Err(e) => {
                return Err(SimError::Aborted {
                    reason: Box::new(e),
                    partial: record,
                })
            }
        }
        if (step_idx + 1) % snap == 0 || step_idx + 1 == n_steps {
            push_row(&mut record, &state, &integ.ctx, &probes, s)?;
        }
    }
    Ok(record)
}

fn push_row(
    record: &mut RunRecord,
    state: &ZcsState,
    ctx: &StripContext,
    probes: &EnergyProbes,
    s: f64,
) -> Result<(), SimError> {
    let (h, mass, m1, m2) = invariants(state, ctx)?;
    let (z, _) = complexify(state);
    let e_low = low_energy(&z, probes.s, probes.eps, &probes.partition)?;
    let e_high = modified_energy(&z, &EnergySymbols::default(), state.kappa, probes.s, probes.eps)?;
    record.rows.push(RunRow {
        t: state.t,
        eta_norm: state.eta.sobolev_norm(s + 0.25, false),
        psi_norm: state.psi.sobolev_norm(s - 0.25, false),
        z_norm: z.sobolev_norm(s, false),
        hamiltonian: h,
        mass,
        mom1: m1,
        mom2: m2,
        e_low,
        e_high,
    });
    Ok(())
}
