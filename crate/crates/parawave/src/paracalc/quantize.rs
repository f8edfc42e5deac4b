use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::spectral::{GridField, Truncation};

use super::cutoff::{cutoff_chi, DELTA0};
use super::symbol::Symbol;
use super::ParacalcError;

/// Sparse operator over the truncated frequency lattice. Entries vanish
/// unless `|j−k| ≤ δ₀⟨(j+k)/2⟩` (support of the quantization cutoff).
pub struct FreqOperator {
    trunc: Arc<Truncation>,
    /// `rows[j_idx]` holds `(k_idx, value)` sorted by `k_idx`.
    rows: Vec<Vec<(u32, Complex64)>>,
    pub hermitian: bool,
}

impl FreqOperator {
    pub fn empty(trunc: &Arc<Truncation>) -> Self {
        Self { trunc: Arc::clone(trunc), rows: vec![Vec::new(); trunc.len()], hermitian: false }
    }

    pub fn truncation(&self) -> &Arc<Truncation> {
        &self.trunc
    }

    pub fn entry(&self, j: (i64, i64), k: (i64, i64)) -> Complex64 {
        let (Some(jr), Some(kc)) = (self.trunc.index_of(j), self.trunc.index_of(k)) else {
            return Complex64::new(0.0, 0.0);
        };
        match self.rows[jr].binary_search_by_key(&(kc as u32), |e| e.0) {
            Ok(pos) => self.rows[jr][pos].1,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Iterate entries as `(j, k, value)` in lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = ((i64, i64), (i64, i64), Complex64)> + '_ {
        self.rows.iter().enumerate().flat_map(move |(jr, row)| {
            let j = self.trunc.freq_at(jr);
            row.iter().map(move |&(kc, v)| (j, self.trunc.freq_at(kc as usize), v))
        })
    }

    pub fn apply(&self, u: &GridField) -> GridField {
        let coeffs = self.apply_coeffs(u.coeffs());
        GridField::from_coeffs(&self.trunc, coeffs)
    }

    pub fn apply_coeffs(&self, coeffs: &Array2<Complex64>) -> Array2<Complex64> {
        let flat = coeffs.as_slice().expect("contiguous coeffs");
        let g = self.trunc.n_grid();
        let out: Vec<Complex64> = self
            .rows
            .par_iter()
            .map(|row| {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(kc, v) in row {
                    acc += v * flat[kc as usize];
                }
                acc
            })
            .collect();
        Array2::from_shape_vec((g, g), out).unwrap()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut rows = vec![Vec::new(); self.trunc.len()];
        for (jr, row) in self.rows.iter().enumerate() {
            for &(kc, v) in row {
                rows[kc as usize].push((jr as u32, v.conj()));
            }
        }
        for row in &mut rows {
            row.sort_by_key(|e| e.0);
        }
        Self { trunc: Arc::clone(&self.trunc), rows, hermitian: self.hermitian }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = Self::empty(&self.trunc);
        for (jr, row) in self.rows.iter().enumerate() {
            out.rows[jr] = row.clone();
        }
        for (jr, row) in other.rows.iter().enumerate() {
            for &(kc, v) in row {
                match out.rows[jr].binary_search_by_key(&kc, |e| e.0) {
                    Ok(pos) => out.rows[jr][pos].1 -= v,
                    Err(pos) => out.rows[jr].insert(pos, (kc, -v)),
                }
            }
        }
        out
    }

    /// Largest entry modulus.
    pub fn max_entry(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|e| e.1.norm()))
            .fold(0.0, f64::max)
    }

    /// Hermitian defect `max |T_{jk} − conj T_{kj}|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (jr, row) in self.rows.iter().enumerate() {
            let j = self.trunc.freq_at(jr);
            for &(kc, v) in row {
                let k = self.trunc.freq_at(kc as usize);
                worst = worst.max((v - self.entry(k, j).conj()).norm());
            }
        }
        worst
    }

    /// Coordinate-list text export: lines `j1 j2 k1 k2 re im`, lexicographic.
    pub fn export_coo(&self) -> String {
        let mut out = String::new();
        for (j, k, v) in self.entries() {
            out.push_str(&format!(
                "{} {} {} {} {:.16e} {:.16e}\n",
                j.0, j.1, k.0, k.1, v.re, v.im
            ));
        }
        out
    }
}

/// Offset radius within which the cutoff can be nonzero for rows near `j`:
/// `|d| ≤ δ₀⟨mid⟩` and `⟨mid⟩ ≤ ⟨j⟩ + |d|/2` force `|d| ≤ δ₀⟨j⟩/(1−δ₀/2)`.
fn offset_radius(bracket: f64) -> i64 {
    (DELTA0 * bracket / (1.0 - DELTA0 / 2.0)).ceil() as i64 + 1
}

/// Bony-Weyl quantization: `T_{j,k} = χ(j−k, (j+k)/2) â(j−k, (j+k)/2)`.
pub fn quantize(a: &Symbol, trunc: &Arc<Truncation>) -> Result<FreqOperator, ParacalcError> {
    let n = trunc.n_max() as i64;
    let rows: Result<Vec<_>, ParacalcError> = (0..trunc.len())
        .into_par_iter()
        .map(|jr| {
            let j = trunc.freq_at(jr);
            let bracket = (1.0 + (j.0 * j.0 + j.1 * j.1) as f64).sqrt();
            let rad = offset_radius(bracket);
            let mut row: Vec<(u32, Complex64)> = Vec::new();
            for d1 in -rad..=rad {
                for d2 in -rad..=rad {
                    let k = (j.0 - d1, j.1 - d2);
                    if k.0.abs() > n || k.1.abs() > n {
                        continue;
                    }
                    let mid = [(j.0 + k.0) as f64 / 2.0, (j.1 + k.1) as f64 / 2.0];
                    let chi = cutoff_chi([d1 as f64, d2 as f64], mid);
                    if chi == 0.0 {
                        continue;
                    }
                    let c = a.fourier_coeff((d1, d2), mid)?;
                    if c.norm() == 0.0 {
                        continue;
                    }
                    row.push((trunc.index_of(k).unwrap() as u32, chi * c));
                }
            }
            row.sort_by_key(|e| e.0);
            Ok(row)
        })
        .collect();
    Ok(FreqOperator { trunc: Arc::clone(trunc), rows: rows?, hermitian: a.real_valued })
}

/// Apply `Op^{BW}(a)` to a field without assembling the matrix; iterates the
/// nonzero input coefficients only.
pub fn apply_bw(a: &Symbol, u: &GridField) -> Result<GridField, ParacalcError> {
    let trunc = u.truncation();
    let n = trunc.n_max() as i64;
    let g = trunc.n_grid();
    let mut out = Array2::<Complex64>::zeros((g, g));
    let flat = u.coeffs().as_slice().expect("contiguous");
    for (kc, &c) in flat.iter().enumerate() {
        if c.norm() == 0.0 {
            continue;
        }
        let k = trunc.freq_at(kc);
        let bracket = (1.0 + (k.0 * k.0 + k.1 * k.1) as f64).sqrt();
        let rad = offset_radius(bracket);
        for d1 in -rad..=rad {
            for d2 in -rad..=rad {
                let j = (k.0 + d1, k.1 + d2);
                if j.0.abs() > n || j.1.abs() > n {
                    continue;
                }
                let mid = [(j.0 + k.0) as f64 / 2.0, (j.1 + k.1) as f64 / 2.0];
                let chi = cutoff_chi([d1 as f64, d2 as f64], mid);
                if chi == 0.0 {
                    continue;
                }
                let v = a.fourier_coeff((d1, d2), mid)?;
                if v.norm() == 0.0 {
                    continue;
                }
                out[trunc.box_index(j)] += chi * v * c;
            }
        }
    }
    Ok(GridField::from_coeffs(trunc, out))
}

/// 2×2 real-to-real block operator built from a diagonal symbol `d` and an
/// off-diagonal symbol `o`:
/// `[[Op(d), Op(o)], [Op(conj o(x,−ξ)), Op(conj d(x,−ξ))]]`.
pub struct RealToRealOp {
    pub diag: FreqOperator,
    pub off: FreqOperator,
    pub diag_conj: FreqOperator,
    pub off_conj: FreqOperator,
}

impl RealToRealOp {
    /// Apply to a pair `(v, w)`; on conjugate pairs `w = conj v` the output
    /// stays a conjugate pair.
    pub fn apply_pair(&self, v: &GridField, w: &GridField) -> (GridField, GridField) {
        let first = self.diag.apply(v).add(&self.off.apply(w));
        let second = self.off_conj.apply(v).add(&self.diag_conj.apply(w));
        (first, second)
    }
}

pub fn real_to_real_pack(
    d: &Arc<Symbol>,
    o: &Arc<Symbol>,
    trunc: &Arc<Truncation>,
) -> Result<RealToRealOp, ParacalcError> {
    Ok(RealToRealOp {
        diag: quantize(d, trunc)?,
        off: quantize(o, trunc)?,
        diag_conj: quantize(&d.conj_reflect(), trunc)?,
        off_conj: quantize(&o.conj_reflect(), trunc)?,
    })
}

/// Conjugate of a field's coefficients as a function: `conj(u)^(j) = conj û(−j)`.
pub fn conj_field(u: &GridField) -> GridField {
    let trunc = u.truncation();
    let g = trunc.n_grid();
    let mut coeffs = Array2::<Complex64>::zeros((g, g));
    for j in trunc.freqs() {
        coeffs[trunc.box_index(j)] = u.coeff((-j.0, -j.1)).conj();
    }
    GridField::from_coeffs(trunc, coeffs)
}
