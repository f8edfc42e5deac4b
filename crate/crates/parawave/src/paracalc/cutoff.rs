/// Admissibility parameter of the paradifferential cutoff.
pub const DELTA0: f64 = 0.1;

/// C⁴ polynomial step: 0 at t ≤ 0, 1 at t ≥ 1, with four vanishing
/// derivatives at both ends.
pub fn smoothstep4(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let t2 = t * t;
        let t4 = t2 * t2;
        // 126 t^5 − 420 t^6 + 540 t^7 − 315 t^8 + 70 t^9
        t4 * t * (126.0 - 420.0 * t + 540.0 * t2 - 315.0 * t2 * t + 70.0 * t4)
    }
}

/// Paradifferential cutoff `χ(ξ', ξ)`: even in each argument, 1 for
/// `|ξ'| ≤ δ₀⟨ξ⟩/2`, 0 for `|ξ'| ≥ δ₀⟨ξ⟩`, monotone radial transition.
pub fn cutoff_chi(xi_prime: [f64; 2], xi: [f64; 2]) -> f64 {
    let r = (xi_prime[0] * xi_prime[0] + xi_prime[1] * xi_prime[1]).sqrt();
    let bracket = (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    let ratio = r / bracket;
    1.0 - smoothstep4((ratio - DELTA0 / 2.0) / (DELTA0 / 2.0))
}

/// Scalar even cutoff: 1 for |y| ≤ 1/2, 0 for |y| ≥ 1 (quasi-resonant weights).
pub fn chi_scalar(y: f64) -> f64 {
    1.0 - smoothstep4(2.0 * (y.abs() - 0.5))
}

/// Low-frequency identification bump: 1 for |ξ| ≤ 1/4, 0 for |ξ| ≥ 1/2.
/// Symbols singular at ξ = 0 are identified with `(1 − bump)·a`.
pub fn low_freq_bump(r: f64) -> f64 {
    1.0 - smoothstep4(4.0 * (r.abs() - 0.25))
}

/// θ cutoff for R-localization: 1 for |y| ≤ 10, 0 for |y| ≥ 11.
pub fn theta_cut(y: f64) -> f64 {
    1.0 - smoothstep4(y.abs() - 10.0)
}

/// Large-frequency cutoff θ̃: 0 for |y| ≤ 1/3, 1 for |y| ≥ 5/12.
pub fn theta_tilde(y: f64) -> f64 {
    smoothstep4((y.abs() - 1.0 / 3.0) * 12.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_plateaus() {
        // ξ'=0 is inside the inner radius for any ξ
        assert_eq!(cutoff_chi([0.0, 0.0], [0.0, 0.0]), 1.0);
        assert_eq!(cutoff_chi([0.0, 0.0], [100.0, -3.0]), 1.0);
        // |ξ'| = δ₀⟨ξ⟩ is outside the support
        let xi = [5.0, 2.0];
        let bracket = (1.0 + 25.0 + 4.0f64).sqrt();
        let r = DELTA0 * bracket;
        assert_eq!(cutoff_chi([r, 0.0], xi), 0.0);
        // evenness in the first argument
        let v = cutoff_chi([0.31, -0.1], xi);
        assert_eq!(cutoff_chi([-0.31, 0.1], xi), v);
    }

    #[test]
    fn chi_monotone_radial() {
        let xi = [10.0, 0.0];
        let bracket = (101.0f64).sqrt();
        let mut last = 1.0;
        for i in 0..=100 {
            let r = DELTA0 * bracket * i as f64 / 100.0;
            let v = cutoff_chi([r, 0.0], xi);
            assert!(v <= last + 1e-15);
            assert!((0.0..=1.0).contains(&v));
            last = v;
        }
    }

    #[test]
    fn smoothstep_c4_flatness() {
        // derivative estimated by finite differences is tiny near both ends
        let h = 1e-3;
        for t in [1e-4, 1.0 - 1e-4] {
            let d = (smoothstep4(t + h) - smoothstep4(t - h)) / (2.0 * h);
            assert!(d.abs() < 1e-8, "d({t}) = {d}");
        }
    }

    #[test]
    fn scalar_cutoffs_plateaus() {
        assert_eq!(chi_scalar(0.49), 1.0);
        assert_eq!(chi_scalar(-1.01), 0.0);
        assert_eq!(low_freq_bump(0.2), 1.0);
        assert_eq!(low_freq_bump(0.51), 0.0);
        assert_eq!(theta_cut(9.9), 1.0);
        assert_eq!(theta_cut(11.1), 0.0);
        assert_eq!(theta_tilde(0.3), 0.0);
        assert_eq!(theta_tilde(0.42), 1.0);
    }
}
