use std::sync::Arc;

use crate::spectral::{GridField, Truncation};

use super::ParacalcError;

/// Least-squares slope and intercept of `log y` against `log x`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (lx, ly) = (x.ln(), y.max(1e-300).ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

#[derive(Debug, Clone)]
pub struct ProbeFit {
    /// Fitted slope of `log ‖R e_N‖_{H^s}` vs `log N`; `slope ≈ s − ρ`
    /// certifies ρ orders of smoothing relative to the identity.
    pub slope: f64,
    pub intercept: f64,
    pub freqs: Vec<f64>,
    pub norms: Vec<f64>,
}

/// Applies a black-box operator to unit single-mode fields `e^{i(N,0)·x}` and
/// fits the decay of the `H^s` output norm against the frequency.
pub fn smoothing_order_probe(
    op: impl Fn(&GridField) -> GridField,
    s: f64,
    n_list: &[i64],
    trunc: &Arc<Truncation>,
) -> Result<ProbeFit, ParacalcError> {
    if n_list.len() < 3 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ParacalcError::BadFrequencyList);
    }
    let margin = 2 * trunc.n_max() as i64 / 3;
    if let Some(&bad) = n_list.iter().find(|&&n| n > margin) {
        return Err(ParacalcError::FrequencyBeyondMargin { freq: bad, margin });
    }
    let mut freqs = Vec::with_capacity(n_list.len());
    let mut norms = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let u = GridField::single_mode(trunc, (n, 0));
        let out = op(&u);
        freqs.push(n as f64);
        norms.push(out.sobolev_norm(s, false));
    }
    let (slope, intercept) = fit_loglog(&freqs, &norms);
    Ok(ProbeFit { slope, intercept, freqs, norms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DiffKind;
    use approx::assert_relative_eq;

    #[test]
    fn loglog_exact_powerlaw() {
        let xs = [2.0f64, 4.0, 8.0, 16.0];
        let ys: Vec<f64> = xs.iter().map(|&x| 3.0 * x.powf(-1.5)).collect();
        let (slope, intercept) = fit_loglog(&xs, &ys);
        assert_relative_eq!(slope, -1.5, epsilon = 1e-12);
        assert_relative_eq!(intercept.exp(), 3.0, epsilon = 1e-10);
    }

    #[test]
    fn probe_on_exact_multipliers() {
        let trunc = Truncation::new(32);
        // R = |D|^{-2}, s = 0 → slope −2
        let fit = smoothing_order_probe(
            |u| u.differential(DiffKind::AbsPower(-2.0)),
            0.0,
            &[4, 8, 12, 16, 20],
            &trunc,
        )
        .unwrap();
        assert!((fit.slope + 2.0).abs() <= 0.05, "slope {}", fit.slope);
        // R = identity, s = 1 → slope +1
        let fit = smoothing_order_probe(|u| u.clone(), 1.0, &[4, 8, 12, 16, 20], &trunc).unwrap();
        assert!((fit.slope - 1.0).abs() <= 0.05, "slope {}", fit.slope);
    }

    #[test]
    fn probe_rejects_bad_lists() {
        let trunc = Truncation::new(16);
        assert!(smoothing_order_probe(|u| u.clone(), 0.0, &[4, 8], &trunc).is_err());
        // 12 > 2/3·16 = 10
        assert!(smoothing_order_probe(|u| u.clone(), 0.0, &[4, 8, 12], &trunc).is_err());
    }
}
