//! Photon-number statistics of a phase-randomised weak coherent source.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Signal intensity plus optional decoys and pulse-allocation bookkeeping.
///
/// The pulse counts are carried as metadata only; every rate in this crate is
/// asymptotic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub mu: f64,
    #[serde(default)]
    pub decoys: Vec<f64>,
    #[serde(default = "default_pulses")]
    pub pulses_total: u64,
    #[serde(default = "default_signal_fraction")]
    pub signal_fraction: f64,
    #[serde(default = "default_vacuum_fraction")]
    pub vacuum_fraction: f64,
}

fn default_pulses() -> u64 {
    100_000_000
}
fn default_signal_fraction() -> f64 {
    0.95
}
fn default_vacuum_fraction() -> f64 {
    0.05
}

impl SourceConfig {
    pub fn signal(mu: f64) -> Self {
        Self {
            mu,
            decoys: Vec::new(),
            pulses_total: default_pulses(),
            signal_fraction: default_signal_fraction(),
            vacuum_fraction: default_vacuum_fraction(),
        }
    }

    pub fn with_decoys(mut self, decoys: impl Into<Vec<f64>>) -> Self {
        self.decoys = decoys.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(domain(format!("mu must be non-negative, got {}", self.mu)));
        }
        if self.decoys.iter().any(|&v| !(v >= 0.0)) {
            return Err(domain("decoy intensities must be non-negative"));
        }
        if self.decoys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain("decoy intensities must be strictly increasing"));
        }
        let frac_ok = |x: f64| (0.0..=1.0).contains(&x);
        if !(frac_ok(self.signal_fraction)
            && frac_ok(self.vacuum_fraction)
            && self.signal_fraction + self.vacuum_fraction <= 1.0)
        {
            return Err(domain("signal and vacuum fractions must sum to at most 1"));
        }
        Ok(())
    }

    /// Weak (non-vacuum) decoys in increasing order.
    pub fn weak_decoys(&self) -> impl Iterator<Item = f64> + '_ {
        self.decoys.iter().copied().filter(|&v| v > 0.0)
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if mu >= 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("mean photon number must be non-negative, got {mu}")))
    }
}

/// `P_n(μ) = e^{-μ} μ^n / n!`, evaluated in log space.
pub fn poisson_pn(mu: f64, n: u32) -> Result<f64> {
    check_mu(mu)?;
    Ok(pn(mu, n))
}

pub(crate) fn pn(mu: f64, n: u32) -> f64 {
    if n == 0 {
        return (-mu).exp();
    }
    if mu == 0.0 {
        return 0.0;
    }
    let ln = -mu + n as f64 * mu.ln() - ln_factorial(n);
    ln.exp()
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `Σ_{n ≥ n_min} P_n(μ)`, as the exact complement of the head.
pub fn poisson_tail(mu: f64, n_min: u32) -> Result<f64> {
    check_mu(mu)?;
    Ok(tail(mu, n_min))
}

pub(crate) fn tail(mu: f64, n_min: u32) -> f64 {
    if n_min == 0 {
        return 1.0;
    }
    // For small μ the head is ~1 and the complement cancels badly; sum the
    // tail terms directly instead, they decay geometrically.
    if mu < 0.5 {
        let mut term = pn(mu, n_min);
        let mut sum = 0.0;
        let mut n = n_min;
        while term > sum * 1e-18 && term > 0.0 {
            sum += term;
            n += 1;
            term *= mu / n as f64;
        }
        return sum;
    }
    let head: f64 = (0..n_min).map(|n| pn(mu, n)).sum();
    (1.0 - head).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pn_examples() {
        assert_eq!(poisson_pn(0.0, 0).unwrap(), 1.0);
        assert_eq!(poisson_pn(0.0, 3).unwrap(), 0.0);
        assert_relative_eq!(poisson_pn(0.1, 0).unwrap(), (-0.1f64).exp(), max_relative = 1e-15);
        assert!((poisson_pn(0.1, 0).unwrap() - 0.904837).abs() < 1e-6);
        assert_relative_eq!(poisson_pn(0.2, 2).unwrap(), 0.02 * (-0.2f64).exp(), max_relative = 1e-14);
        assert!((poisson_pn(0.2, 2).unwrap() - 0.0163746).abs() < 1e-7);
        assert!(poisson_pn(-0.1, 1).is_err());
    }

    #[test]
    fn pn_large_n_is_finite() {
        let p = poisson_pn(1.0, 200).unwrap();
        assert!((0.0..1e-300).contains(&p));
    }

    #[test]
    fn tail_examples() {
        assert_eq!(poisson_tail(0.3, 0).unwrap(), 1.0);
        let t = poisson_tail(0.1, 2).unwrap();
        assert_relative_eq!(t, 1.0 - (-0.1f64).exp() * 1.1, max_relative = 1e-12);
        assert!((t - 0.00467884).abs() < 1e-8);
        let t = poisson_tail(0.2, 3).unwrap();
        assert_relative_eq!(t, 1.0 - (-0.2f64).exp() * 1.22, max_relative = 1e-11);
        assert!((t - 0.0011485).abs() < 1e-7);
        assert!(poisson_tail(-1.0, 2).is_err());
    }

    #[test]
    fn tail_branches_agree() {
        // the series branch and the complement branch meet at μ = 0.5
        for n in 1..6 {
            let below = tail(0.5 - 1e-12, n);
            let above = tail(0.5, n);
            assert_relative_eq!(below, above, max_relative = 1e-9);
        }
    }

    #[test]
    fn source_config_validation() {
        assert!(SourceConfig::signal(0.5).validate().is_ok());
        assert!(SourceConfig::signal(-0.5).validate().is_err());
        let s = SourceConfig::signal(0.5).with_decoys(vec![0.0, 0.1, 0.2]);
        assert!(s.validate().is_ok());
        assert_eq!(s.weak_decoys().collect::<Vec<_>>(), vec![0.1, 0.2]);
        assert!(SourceConfig::signal(0.5).with_decoys(vec![0.2, 0.1]).validate().is_err());
        let mut s = SourceConfig::signal(0.5);
        s.vacuum_fraction = 0.2;
        assert!(s.validate().is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn normalization(mu in 0.0f64..5.0, cutoff in 0u32..30) {
                let head: f64 = (0..=cutoff).map(|n| poisson_pn(mu, n).unwrap()).sum();
                let total = head + poisson_tail(mu, cutoff + 1).unwrap();
                prop_assert!((total - 1.0).abs() < 1e-12);
            }

            #[test]
            fn tail_monotone(mu in 0.001f64..3.0, n in 1u32..8) {
                let t = poisson_tail(mu, n).unwrap();
                prop_assert!(poisson_tail(mu * 1.01, n).unwrap() >= t);
                prop_assert!(poisson_tail(mu, n + 1).unwrap() <= t);
            }
        }
    }
}
