//! Gravity-capillary dispersion relation, symmetrizer multipliers, and
//! exhaustive three-wave small-divisor scans over the frequency lattice.

use rayon::prelude::*;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DispersionError {
    #[error("surface tension must be positive, got {0}")]
    NonPositiveKappa(f64),
    #[error("degenerate combination: σ1 j + σ2 k = 0")]
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    #[inline]
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    #[inline]
    pub fn apply(self, j: (i64, i64)) -> (i64, i64) {
        match self {
            Sign::Plus => j,
            Sign::Minus => (-j.0, -j.1),
        }
    }

    pub fn label(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// `Λ(ξ) = √(|ξ|(1 + κ|ξ|²))`, the linear frequency at wavevector ξ (g = 1).
pub fn dispersion(xi: [f64; 2], kappa: f64) -> Result<f64, DispersionError> {
    if kappa <= 0.0 {
        return Err(DispersionError::NonPositiveKappa(kappa));
    }
    Ok(dispersion_unchecked(xi, kappa))
}

#[inline]
pub fn dispersion_unchecked(xi: [f64; 2], kappa: f64) -> f64 {
    let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    (r * (1.0 + kappa * r * r)).sqrt()
}

/// Dispersion with explicit gravity, `√(|ξ|(g + κ|ξ|²))`.
#[inline]
pub fn dispersion_g(xi: [f64; 2], g: f64, kappa: f64) -> f64 {
    let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    (r * (g + kappa * r * r)).sqrt()
}

#[inline]
pub fn dispersion_lattice(j: (i64, i64), kappa: f64) -> f64 {
    dispersion_unchecked([j.0 as f64, j.1 as f64], kappa)
}

/// `M(ξ) = (|ξ|/(1+κ|ξ|²))^{1/4} = √(|ξ|/Λ(ξ))`, smoothly cut to its value at
/// `|ξ| = 1/2` below that radius (symbol identification near ξ = 0).
pub fn symmetrizer_m(xi: [f64; 2], kappa: f64) -> f64 {
    symmetrizer_m_g(xi, 1.0, kappa)
}

/// Symmetrizer with explicit gravity, `(|ξ|/(g+κ|ξ|²))^{1/4}`.
pub fn symmetrizer_m_g(xi: [f64; 2], g: f64, kappa: f64) -> f64 {
    let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    let m = |r: f64| (r / (g + kappa * r * r)).powf(0.25);
    if r >= 0.5 {
        m(r)
    } else {
        let bump = crate::paracalc::low_freq_bump(r);
        bump * m(0.5) + (1.0 - bump) * m(r.max(0.25))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceRecord {
    pub j: (i64, i64),
    pub k: (i64, i64),
    pub s1: Sign,
    pub s2: Sign,
    /// `σ1 Λ(j) + σ2 Λ(k) − Λ(σ1 j + σ2 k)`.
    pub divisor: f64,
    /// `max(|j|,|k|)² · min(|j|,|k|)⁴`.
    pub weight: f64,
}

/// Three-wave small divisor; errors on zero output frequency.
pub fn three_wave_divisor(
    j: (i64, i64),
    k: (i64, i64),
    s1: Sign,
    s2: Sign,
    kappa: f64,
) -> Result<f64, DispersionError> {
    if kappa <= 0.0 {
        return Err(DispersionError::NonPositiveKappa(kappa));
    }
    let out = (
        s1.apply(j).0 + s2.apply(k).0,
        s1.apply(j).1 + s2.apply(k).1,
    );
    if out == (0, 0) {
        return Err(DispersionError::Degenerate);
    }
    Ok(s1.as_f64() * dispersion_lattice(j, kappa) + s2.as_f64() * dispersion_lattice(k, kappa)
        - dispersion_lattice(out, kappa))
}

fn weight_of(j: (i64, i64), k: (i64, i64)) -> f64 {
    let nj = ((j.0 * j.0 + j.1 * j.1) as f64).sqrt();
    let nk = ((k.0 * k.0 + k.1 * k.1) as f64).sqrt();
    let (mx, mn) = if nj >= nk { (nj, nk) } else { (nk, nj) };
    mx * mx * mn.powi(4)
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub kappa: f64,
    pub k_radius: i64,
    /// Record minimizing `|divisor| · weight`.
    pub min_record: ResonanceRecord,
    /// Records with `|divisor| < γ / weight`, sorted deterministically.
    pub violations: Vec<ResonanceRecord>,
    /// `min |divisor| · weight` over the scan.
    pub empirical_c: f64,
}

/// Lattice points with `|j| ≤ radius` (Euclidean), lexicographic order.
pub fn lattice_ball(radius: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for j1 in -radius..=radius {
        for j2 in -radius..=radius {
            if j1 * j1 + j2 * j2 <= radius * radius && (j1, j2) != (0, 0) {
                out.push((j1, j2));
            }
        }
    }
    out
}

struct LambdaTable {
    radius: i64,
    values: Vec<f64>,
}

impl LambdaTable {
    fn new(radius: i64, kappa: f64) -> Self {
        let side = (2 * radius + 1) as usize;
        let mut values = vec![0.0; side * side];
        for a in -radius..=radius {
            for b in -radius..=radius {
                let idx = ((a + radius) as usize) * side + (b + radius) as usize;
                values[idx] = dispersion_lattice((a, b), kappa);
            }
        }
        Self { radius, values }
    }

    #[inline]
    fn get(&self, j: (i64, i64)) -> f64 {
        let side = (2 * self.radius + 1) as usize;
        self.values[((j.0 + self.radius) as usize) * side + (j.1 + self.radius) as usize]
    }
}

/// Exhaustive scan over `|j|, |k| ≤ K` and all sign pairs, skipping
/// degenerate (zero output frequency) combinations.
pub fn divisor_scan(k_radius: i64, kappa: f64, gamma: f64) -> ScanResult {
    assert!(k_radius >= 2, "scan radius must be at least 2");
    let ball = lattice_ball(k_radius);
    let table = LambdaTable::new(2 * k_radius, kappa);
    let signs = [
        (Sign::Plus, Sign::Plus),
        (Sign::Plus, Sign::Minus),
        (Sign::Minus, Sign::Plus),
        (Sign::Minus, Sign::Minus),
    ];

    #[derive(Clone)]
    struct Partial {
        best: Option<ResonanceRecord>,
        violations: Vec<ResonanceRecord>,
    }

    let merge_best = |a: Option<ResonanceRecord>, b: Option<ResonanceRecord>| match (a, b) {
        (None, r) => r,
        (r, None) => r,
        (Some(x), Some(y)) => {
            let cx = x.divisor.abs() * x.weight;
            let cy = y.divisor.abs() * y.weight;
            // deterministic tie-break on the record identity
            let key = |r: &ResonanceRecord| (r.j, r.k, r.s1, r.s2);
            if cx < cy || (cx == cy && key(&x) < key(&y)) {
                Some(x)
            } else {
                Some(y)
            }
        }
    };

    let partial = ball
        .par_iter()
        .map(|&j| {
            let mut p = Partial { best: None, violations: Vec::new() };
            let lj = table.get(j);
            for &k in &ball {
                let lk = table.get(k);
                for &(s1, s2) in &signs {
                    let out = (
                        s1.apply(j).0 + s2.apply(k).0,
                        s1.apply(j).1 + s2.apply(k).1,
                    );
                    if out == (0, 0) {
                        continue;
                    }
                    let divisor = s1.as_f64() * lj + s2.as_f64() * lk - table.get(out);
                    let weight = weight_of(j, k);
                    let rec = ResonanceRecord { j, k, s1, s2, divisor, weight };
                    p.best = merge_best(p.best, Some(rec));
                    if divisor.abs() < gamma / weight {
                        p.violations.push(rec);
                    }
                }
            }
            p
        })
        .reduce(
            || Partial { best: None, violations: Vec::new() },
            |mut a, mut b| {
                a.best = merge_best(a.best, b.best);
                a.violations.append(&mut b.violations);
                a
            },
        );

    let mut violations = partial.violations;
    violations.sort_by_key(|r| (r.j, r.k, r.s1, r.s2));
    let min_record = partial.best.expect("non-empty scan");
    ScanResult {
        kappa,
        k_radius,
        empirical_c: min_record.divisor.abs() * min_record.weight,
        min_record,
        violations,
    }
}

#[derive(Debug, Clone)]
pub struct KappaScanRow {
    pub kappa: f64,
    pub empirical_c: f64,
    pub count_below_gamma: usize,
    pub min_record: ResonanceRecord,
}

/// Per-κ divisor scan summary over a grid of surface tensions.
pub fn kappa_badset_scan(kappa_grid: &[f64], k_radius: i64, gamma: f64) -> Vec<KappaScanRow> {
    kappa_grid
        .iter()
        .map(|&kappa| {
            assert!(kappa > 0.0, "kappa grid must be positive");
            let scan = divisor_scan(k_radius, kappa, gamma);
            KappaScanRow {
                kappa,
                empirical_c: scan.empirical_c,
                count_below_gamma: scan.violations.len(),
                min_record: scan.min_record,
            }
        })
        .collect()
}

/// Least-squares fit of `log|divisor_min|` against `log max(|j|,|k|)` and
/// `log min(|j|,|k|)` over per-(max,min) buckets of an exhaustive scan.
/// Returns the exponents `(a_max, a_min)` of the model `d ≈ c·max^a·min^b`.
pub fn fit_divisor_exponents(k_radius: i64, kappa: f64) -> (f64, f64) {
    let ball = lattice_ball(k_radius);
    let table = LambdaTable::new(2 * k_radius, kappa);
    let signs = [
        (Sign::Plus, Sign::Plus),
        (Sign::Plus, Sign::Minus),
        (Sign::Minus, Sign::Plus),
        (Sign::Minus, Sign::Minus),
    ];
    // bucket key: (max |·|², min |·|²) — exact integers
    let buckets: HashMap<(i64, i64), f64> = ball
        .par_iter()
        .map(|&j| {
            let mut local: HashMap<(i64, i64), f64> = HashMap::new();
            let lj = table.get(j);
            let nj2 = j.0 * j.0 + j.1 * j.1;
            for &k in &ball {
                let nk2 = k.0 * k.0 + k.1 * k.1;
                let key = (nj2.max(nk2), nj2.min(nk2));
                let lk = table.get(k);
                for &(s1, s2) in &signs {
                    let out = (
                        s1.apply(j).0 + s2.apply(k).0,
                        s1.apply(j).1 + s2.apply(k).1,
                    );
                    if out == (0, 0) {
                        continue;
                    }
                    let d = (s1.as_f64() * lj + s2.as_f64() * lk - table.get(out)).abs();
                    local.entry(key).and_modify(|v| *v = v.min(d)).or_insert(d);
                }
            }
            local
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                a.entry(k).and_modify(|x| *x = x.min(v)).or_insert(v);
            }
            a
        });

    // 2-regressor least squares with intercept
    let (mut sxx, mut sxy, mut syy, mut sxd, mut syd) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut sx, mut sy, mut sd, mut n) = (0.0, 0.0, 0.0, 0.0);
    for (&(m2, n2), &d) in &buckets {
        if d <= 0.0 {
            continue;
        }
        let x = 0.5 * (m2 as f64).ln();
        let y = 0.5 * (n2 as f64).ln();
        let z = d.ln();
        sx += x;
        sy += y;
        sd += z;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        sxd += x * z;
        syd += y * z;
        n += 1.0;
    }
    let cxx = sxx - sx * sx / n;
    let cxy = sxy - sx * sy / n;
    let cyy = syy - sy * sy / n;
    let cxd = sxd - sx * sd / n;
    let cyd = syd - sy * sd / n;
    let det = cxx * cyy - cxy * cxy;
    let a = (cyy * cxd - cxy * cyd) / det;
    let b = (cxx * cyd - cxy * cxd) / det;
    (a, b)
}
