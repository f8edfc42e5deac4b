use std::collections::HashMap;

use num_complex::Complex64;

use crate::dispersion::{dispersion_lattice, three_wave_divisor, Sign};

use super::NfError;

/// Coefficient table `R_{j,k}^{σ1 σ2}` of a 1-homogeneous smoothing operator
/// on a small mode set: `(R(ʒ)V)⁺ = Σ R_{j,k}^{σ1σ2} ʒ_j^{σ1} v_k^{σ2}
/// e^{i(σ1 j + σ2 k)·x}`.
#[derive(Clone, Debug, Default)]
pub struct CoeffTable {
    pub entries: HashMap<((i64, i64), (i64, i64), Sign, Sign), Complex64>,
}

impl CoeffTable {
    pub fn insert(&mut self, j: (i64, i64), k: (i64, i64), s1: Sign, s2: Sign, v: Complex64) {
        self.entries.insert((j, k, s1, s2), v);
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.values().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Divide out the three-wave divisors:
/// `G_{j,k}^{σ1σ2} = −R_{j,k}^{σ1σ2} / (−i(σ1Λ(j)+σ2Λ(k)−Λ(σ1j+σ2k)))`.
/// Errors if any divisor modulus falls below 1e−12 (resonance) or the output
/// frequency degenerates.
pub fn birkhoff_coeffs(r: &CoeffTable, kappa: f64) -> Result<CoeffTable, NfError> {
    let mut g = CoeffTable::default();
    for (&(j, k, s1, s2), &val) in &r.entries {
        let divisor = three_wave_divisor(j, k, s1, s2, kappa)
            .map_err(|_| NfError::DegenerateTriple { j, k })?;
        if divisor.abs() < 1e-12 {
            return Err(NfError::Resonance { j, k, divisor });
        }
        g.insert(j, k, s1, s2, -val / Complex64::new(0.0, -divisor));
    }
    Ok(g)
}

/// Amplification factor implied by the small-divisor bound:
/// `|G| ≤ |R| · max(|j|,|k|)² min(|j|,|k|)⁴ / c_emp`.
pub fn amplification_ok(r: &CoeffTable, g: &CoeffTable, c_emp: f64) -> bool {
    for (&(j, k, s1, s2), &rv) in &r.entries {
        let gv = g.entries.get(&(j, k, s1, s2)).copied().unwrap_or_default();
        let nj = ((j.0 * j.0 + j.1 * j.1) as f64).sqrt();
        let nk = ((k.0 * k.0 + k.1 * k.1) as f64).sqrt();
        let (mx, mn) = if nj >= nk { (nj, nk) } else { (nk, nj) };
        let bound = rv.norm() * mx * mx * mn.powi(4) / c_emp;
        if gv.norm() > bound * (1.0 + 1e-9) {
            return false;
        }
    }
    true
}

/// Dense matrices (output modes in a ball of radius `2·K`) for the operators
/// in the conjugation identity, at a fixed coefficient vector ʒ.
pub struct BirkhoffOperators {
    pub out_modes: Vec<(i64, i64)>,
    pub in_modes: Vec<(i64, i64)>,
}

/// Residual of the conjugation identity
/// `R(ʒ) + G(−iΛ(D)ʒ) + [G(ʒ), −iΛ(D)] = 0` on a truncated mode set,
/// assembled as dense operators acting on stacked `(v⁺, v⁻)` data for a given
/// coefficient vector `ʒ` (map from mode to value, minus component conjugate).
pub fn conjugation_residual(
    r: &CoeffTable,
    g: &CoeffTable,
    z: &HashMap<(i64, i64), Complex64>,
    kappa: f64,
) -> f64 {
    // collect in/out mode sets from the tables
    let mut out_set: Vec<(i64, i64)> = Vec::new();
    let mut in_set: Vec<(i64, i64)> = Vec::new();
    for &(j, k, s1, s2) in r.entries.keys() {
        let out = (
            s1.apply(j).0 + s2.apply(k).0,
            s1.apply(j).1 + s2.apply(k).1,
        );
        if !out_set.contains(&out) {
            out_set.push(out);
        }
        if !in_set.contains(&k) {
            in_set.push(k);
        }
    }
    out_set.sort_unstable();
    in_set.sort_unstable();

    let z_of = |j: (i64, i64), s: Sign| -> Complex64 {
        let v = z.get(&j).copied().unwrap_or_default();
        match s {
            Sign::Plus => v,
            Sign::Minus => v.conj(),
        }
    };

    // apply: entry (out_row, (s2, k_col)) of Σ_table coeff·ʒ-weight
    let assemble = |table: &CoeffTable,
                    z_weight: &dyn Fn((i64, i64), Sign) -> Complex64|
     -> HashMap<((i64, i64), (i64, i64), Sign), Complex64> {
        let mut m = HashMap::new();
        for (&(j, k, s1, s2), &val) in &table.entries {
            let out = (
                s1.apply(j).0 + s2.apply(k).0,
                s1.apply(j).1 + s2.apply(k).1,
            );
            *m.entry((out, k, s2)).or_insert(Complex64::default()) += val * z_weight(j, s1);
        }
        m
    };

    let m_r = assemble(r, &|j, s| z_of(j, s));
    // G(−iΛ(D)ʒ): the σ1 coefficient picks up −i σ1 Λ(j)
    let m_g_shift = assemble(g, &|j, s| {
        z_of(j, s) * Complex64::new(0.0, -s.as_f64() * dispersion_lattice(j, kappa))
    });
    let m_g = assemble(g, &|j, s| z_of(j, s));

    // total = m_r + m_g_shift + m_g∘(−iΛ̂) − (−iΛ̂)∘m_g, with the diagonal
    // −iΛ̂ acting as −iσ2Λ(k) on inputs and −iΛ(out) on outputs
    let mut worst: f64 = 0.0;
    let mut keys: Vec<_> = m_r
        .keys()
        .chain(m_g_shift.keys())
        .chain(m_g.keys())
        .cloned()
        .collect();
    keys.sort_unstable_by_key(|&(o, k, s)| (o, k, s));
    keys.dedup();
    for key in keys {
        let (out, k, s2) = key;
        let r_v = m_r.get(&key).copied().unwrap_or_default();
        let gs_v = m_g_shift.get(&key).copied().unwrap_or_default();
        let g_v = m_g.get(&key).copied().unwrap_or_default();
        let comm = g_v * Complex64::new(0.0, -s2.as_f64() * dispersion_lattice(k, kappa))
            - Complex64::new(0.0, -dispersion_lattice(out, kappa)) * g_v;
        worst = worst.max((r_v + gs_v + comm).norm());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn zero_table_maps_to_zero() {
        let r = CoeffTable::default();
        let g = birkhoff_coeffs(&r, 1.0).unwrap();
        assert!(g.entries.is_empty());
    }

    #[test]
    fn single_entry_hand_value() {
        // R_{(1,0),(1,0)}^{++} = 1, κ=1: G = 1/(i(2√2−√10)) ≈ 2.9952 i
        let mut r = CoeffTable::default();
        r.insert((1, 0), (1, 0), Sign::Plus, Sign::Plus, Complex64::new(1.0, 0.0));
        let g = birkhoff_coeffs(&r, 1.0).unwrap();
        let v = g.entries[&((1, 0), (1, 0), Sign::Plus, Sign::Plus)];
        let divisor = 2.0 * 2f64.sqrt() - 10f64.sqrt();
        assert_relative_eq!(v.im, -1.0 / divisor, epsilon = 1e-12);
        assert_relative_eq!(v.im, 2.9952, epsilon = 1e-3);
        assert_relative_eq!(v.re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn resonance_is_signalled() {
        // κ = 1/2 puts (1,0)+(1,0)→(2,0) exactly on resonance
        let mut r = CoeffTable::default();
        r.insert((1, 0), (1, 0), Sign::Plus, Sign::Plus, Complex64::new(1.0, 0.0));
        assert!(matches!(birkhoff_coeffs(&r, 0.5), Err(NfError::Resonance { .. })));
        // degenerate output frequency is rejected as well
        let mut r2 = CoeffTable::default();
        r2.insert((1, 0), (1, 0), Sign::Plus, Sign::Minus, Complex64::new(1.0, 0.0));
        assert!(matches!(birkhoff_coeffs(&r2, 1.0), Err(NfError::DegenerateTriple { .. })));
    }

    #[test]
    fn conjugation_identity_on_truncation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let kappa = 0.7;
        let modes: Vec<(i64, i64)> = vec![(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1)];
        let mut r = CoeffTable::default();
        for &j in &modes {
            for &k in &modes {
                for s1 in [Sign::Plus, Sign::Minus] {
                    for s2 in [Sign::Plus, Sign::Minus] {
                        let out = (
                            s1.apply(j).0 + s2.apply(k).0,
                            s1.apply(j).1 + s2.apply(k).1,
                        );
                        if out == (0, 0) {
                            continue;
                        }
                        r.insert(
                            j,
                            k,
                            s1,
                            s2,
                            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        );
                    }
                }
            }
        }
        let g = birkhoff_coeffs(&r, kappa).unwrap();
        let mut z = HashMap::new();
        for &j in &modes {
            z.insert(j, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        let res = conjugation_residual(&r, &g, &z, kappa);
        assert!(res <= 1e-8, "conjugation residual {res}");
    }
}
