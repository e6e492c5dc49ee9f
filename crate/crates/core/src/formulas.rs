//! Closed-form outcome probabilities for the splitter chain and the derived
//! multi-photon detection statistics.
//!
//! These formulas assume a lossless chain with a blocking (or reflective)
//! object in the final segment. They double as a fast engine for parameter
//! sweeps and as the analytic cross-check on [`crate::chain::simulate`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Return / detect / reach probabilities for one photon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTriple {
    /// Photon returns to the source.
    pub p0: f64,
    /// Any detector clicks.
    pub p1: f64,
    /// Photon reaches (is absorbed by) the object.
    pub p2: f64,
}

impl ProbabilityTriple {
    pub fn validate(&self, tol: f64) -> Result<()> {
        for (name, v) in [("p0", self.p0), ("p1", self.p1), ("p2", self.p2)] {
            if !(-tol..=1.0 + tol).contains(&v) {
                return Err(Error::domain(format!("{name} = {v} outside [0, 1]")));
            }
        }
        let sum = self.p0 + self.p1 + self.p2;
        if (sum - 1.0).abs() > tol {
            return Err(Error::domain(format!("triple sums to {sum}, not 1")));
        }
        Ok(())
    }
}

/// Multi-photon detection statistics for one pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagingStats {
    /// False-negative rate: probability none of the `m` photons is detected
    /// although the object is present.
    pub epsilon: f64,
    /// Probability at least one of the `m` photons is absorbed by the object.
    pub p2_cumulative: f64,
    /// Photons per pixel.
    pub m: u32,
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) || !t.is_finite() {
        return Err(Error::domain(format!(
            "transmissivity must lie in (0, 1], got {t}"
        )));
    }
    Ok(())
}

/// Blocked-path probabilities for per-stage transmissivities.
///
/// `p0 = r_1^2 + sum_j (r_j * prod_{i<j} t_i)^2`, `p2 = prod t_i`,
/// `p1 = 1 - p0 - p2`. Terms are accumulated left to right with a running
/// prefix product; at the stage counts and transmissivities of interest this
/// is numerically benign, and a dedicated test pins the large-N sum against
/// the geometric closed form.
pub fn p_triple(transmissivities: &[f64]) -> Result<ProbabilityTriple> {
    if transmissivities.is_empty() {
        return Err(Error::domain("transmissivity list must not be empty"));
    }
    for &t in transmissivities {
        check_t(t)?;
    }
    let mut p0 = 0.0;
    let mut prefix = 1.0; // prod_{i<j} t_i
    for &t in transmissivities {
        let term = (1.0 - t) * prefix;
        p0 += term * term;
        prefix *= t;
    }
    let p2 = prefix;
    let p1 = 1.0 - p0 - p2;
    Ok(ProbabilityTriple { p0, p1, p2 })
}

/// Equal-transmissivity specialization of [`p_triple`].
///
/// Evaluates through the general per-stage accumulation so the result equals
/// `p_triple(&[t; n])` exactly, bit for bit.
pub fn p_triple_equal_t(t: f64, n: u32) -> Result<ProbabilityTriple> {
    if n < 1 {
        return Err(Error::domain("stage count must be at least 1"));
    }
    check_t(t)?;
    p_triple(&vec![t; n as usize])
}

/// Blocked-path probabilities when the object is a perfect reflector closer
/// than the end mirror: the early-returning packet cascades back through the
/// chain, adding `p2^2` to the source return; nothing is absorbed.
pub fn p_triple_reflective(transmissivities: &[f64]) -> Result<ProbabilityTriple> {
    let base = p_triple(transmissivities)?;
    Ok(ProbabilityTriple {
        p0: base.p0 + base.p2 * base.p2,
        p1: base.p1 + base.p2 - base.p2 * base.p2,
        p2: 0.0,
    })
}

/// Detector probability in the infinite-stage limit: `2 / (1 + 1/t)`.
pub fn p1_limit(t: f64) -> Result<f64> {
    check_t(t)?;
    Ok(2.0 / (1.0 + 1.0 / t))
}

/// Multi-photon statistics: false-negative rate `(1 - p1)^m` and cumulative
/// absorption probability `1 - (1 - t^n)^m`.
///
/// With `asymptotic` set, `p1` is taken from [`p1_limit`] instead of the
/// finite-chain formula; the caller chooses the formula family explicitly.
/// The cumulative absorption always uses the finite `n`.
pub fn imaging_stats(t: f64, n: u32, m: u32, asymptotic: bool) -> Result<ImagingStats> {
    if m < 1 {
        return Err(Error::domain("photon count m must be at least 1"));
    }
    let p1 = if asymptotic {
        p1_limit(t)?
    } else {
        p_triple_equal_t(t, n)?.p1
    };
    let p2 = t.powi(n as i32);
    Ok(ImagingStats {
        epsilon: (1.0 - p1).powi(m as i32),
        p2_cumulative: 1.0 - (1.0 - p2).powi(m as i32),
        m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn triple_single_half() {
        let p = p_triple(&[0.5]).unwrap();
        assert_eq!((p.p0, p.p1, p.p2), (0.25, 0.25, 0.5));
    }

    #[test]
    fn triple_fully_transmissive() {
        let p = p_triple(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((p.p0, p.p1, p.p2), (0.0, 0.0, 1.0));
    }

    #[test]
    fn triple_two_halves() {
        let p = p_triple(&[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(p.p0, 5.0 / 16.0, epsilon = 1e-16);
        assert_abs_diff_eq!(p.p1, 7.0 / 16.0, epsilon = 1e-16);
        assert_abs_diff_eq!(p.p2, 0.25, epsilon = 1e-16);
    }

    #[test]
    fn triple_rejects_bad_input() {
        assert!(p_triple(&[]).is_err());
        assert!(p_triple(&[0.0]).is_err());
        assert!(p_triple(&[0.5, 1.1]).is_err());
    }

    #[test]
    fn equal_t_p2_at_twenty_stages() {
        let p = p_triple_equal_t(0.5, 20).unwrap();
        assert_abs_diff_eq!(p.p2, 0.5f64.powi(20), epsilon = 0.0);
        assert_abs_diff_eq!(p.p2, 9.5367e-7, epsilon = 1e-11);
    }

    #[test]
    fn equal_t_converges_to_two_thirds() {
        let p = p_triple_equal_t(0.5, 500).unwrap();
        assert!((p.p1 - 2.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn equal_t_matches_general_exactly() {
        for (t, n) in [(0.5, 7), (0.31, 20), (0.93, 123)] {
            let a = p_triple_equal_t(t, n).unwrap();
            let b = p_triple(&vec![t; n as usize]).unwrap();
            assert_eq!((a.p0, a.p1, a.p2), (b.p0, b.p1, b.p2));
        }
    }

    #[test]
    fn large_n_sum_matches_geometric_form() {
        // Index-order accumulation versus (1-t)^2 (1-t^{2N}) / (1-t^2).
        let (t, n) = (0.5f64, 10_000u32);
        let p = p_triple_equal_t(t, n).unwrap();
        let geometric = (1.0 - t).powi(2) * (1.0 - t.powi(2 * n as i32)) / (1.0 - t * t);
        assert_abs_diff_eq!(p.p0, geometric, epsilon = 1e-12);
    }

    #[test]
    fn reflective_single_half() {
        let p = p_triple_reflective(&[0.5]).unwrap();
        assert_eq!((p.p0, p.p1, p.p2), (0.5, 0.5, 0.0));
    }

    #[test]
    fn reflective_fully_transmissive() {
        let p = p_triple_reflective(&[1.0]).unwrap();
        assert_eq!((p.p0, p.p1, p.p2), (1.0, 0.0, 0.0));
    }

    #[test]
    fn reflective_two_halves() {
        let p = p_triple_reflective(&[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(p.p0, 6.0 / 16.0, epsilon = 1e-16);
        assert_abs_diff_eq!(p.p1, 10.0 / 16.0, epsilon = 1e-16);
        assert_eq!(p.p2, 0.0);
    }

    #[test]
    fn limit_values() {
        assert_abs_diff_eq!(p1_limit(0.5).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(p1_limit(1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(p1_limit(0.25).unwrap(), 0.4, epsilon = 1e-15);
        assert!(p1_limit(0.0).is_err());
    }

    #[test]
    fn limit_convergence_is_monotone() {
        for t in [0.2, 0.5, 0.8] {
            let limit = p1_limit(t).unwrap();
            let mut prev = 0.0;
            for n in [1u32, 2, 5, 10, 50, 200, 1000, 10_000] {
                let p1 = p_triple_equal_t(t, n).unwrap().p1;
                assert!(p1 >= prev - 1e-15, "t={t} n={n}");
                assert!(p1 <= limit + 1e-12, "t={t} n={n}");
                prev = p1;
            }
            assert!((prev - limit).abs() < 1e-9);
        }
    }

    #[test]
    fn stats_asymptotic_error_rate() {
        let s = imaging_stats(0.5, 20, 10, true).unwrap();
        // powi lowering differs across opt levels; allow a few ulp.
        assert_abs_diff_eq!(s.epsilon, (1.0f64 / 3.0).powi(10), epsilon = 1e-15);
        assert_abs_diff_eq!(s.epsilon, 1.7e-5, epsilon = 1e-7);
    }

    #[test]
    fn stats_finite_dose() {
        let s = imaging_stats(0.5, 20, 10, false).unwrap();
        let expected = 1.0 - (1.0 - 0.5f64.powi(20)).powi(10);
        assert_abs_diff_eq!(s.p2_cumulative, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(s.p2_cumulative, 9.5e-6, epsilon = 1e-7);
    }

    #[test]
    fn stats_single_photon() {
        let s = imaging_stats(0.37, 9, 1, false).unwrap();
        let p1 = p_triple_equal_t(0.37, 9).unwrap().p1;
        assert_abs_diff_eq!(s.epsilon, 1.0 - p1, epsilon = 1e-15);
    }

    #[test]
    fn varying_t_keeps_reach_probability_low() {
        // Randomized t_i in [0.45, 0.55] at 20 stages: p2 is bounded by the
        // largest transmissivity to the 20th power.
        let mut state = 0x243F_6A88_85A3_08D3u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            0.45 + 0.1 * ((state >> 11) as f64 / (1u64 << 53) as f64)
        };
        for _ in 0..200 {
            let ts: Vec<f64> = (0..20).map(|_| next()).collect();
            let p = p_triple(&ts).unwrap();
            assert!(p.p2 <= 0.55f64.powi(20));
            p.validate(1e-12).unwrap();
        }
    }
}
