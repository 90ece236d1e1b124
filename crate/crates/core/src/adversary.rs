//! Eve's loss-matching strategies and the information they leak.
//!
//! BB84 is attacked by photon-number splitting: every multi-photon pulse is
//! tagged. SARG04 survives splitting of two-photon pulses, so Eve instead
//! blocks pulses and runs unambiguous state discrimination (IRUD) on pulses with
//! three or more photons, forwarding a fresh copy on conclusive outcomes. In
//! both cases she must hide behind the channel loss: the mean number of photons
//! Bob receives has to stay at `μδ`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::keyrate::binary_entropy;
use crate::source::{pn, tail};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Attack {
    Pns,
    Irud,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyRegime {
    /// Eve blocks a fraction `t` of single-photon pulses and keeps one photon
    /// of every two-photon pulse.
    TransparentBlockSingles,
    /// All single-photon pulses blocked; a fraction `s` of two-photon pulses
    /// blocked as well.
    BlockAllSinglesBlockSomeDoubles,
    /// Conclusive discrimination alone already delivers fewer photons than the
    /// channel would. Eve knows every bit Bob keeps.
    FullInfo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveStrategy {
    pub attack: Attack,
    pub t: f64,
    pub s: f64,
    pub chi: f64,
    pub regime: StrategyRegime,
    /// False when the channel is more transparent than anything Eve can
    /// imitate; she would have to add loss and be noticed.
    pub can_match: bool,
}

/// Probability that unambiguous discrimination on an `n`-photon pulse is
/// conclusive.
#[derive(Debug, Clone, Copy, Default)]
pub enum PokModel {
    #[default]
    ConstantHalf,
    Constant(f64),
    Custom(fn(u32) -> f64),
}

impl PokModel {
    pub fn p_ok(&self, n: u32) -> f64 {
        match *self {
            PokModel::ConstantHalf => 0.5,
            PokModel::Constant(p) => p,
            PokModel::Custom(f) => f(n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        // checked on the photon numbers that carry any weight for μ ≤ a few
        if (3..64).all(|n| (0.5..=1.0).contains(&self.p_ok(n))) {
            Ok(())
        } else {
            Err(domain("P_ok(n) must lie in [1/2, 1] for n >= 3"))
        }
    }
}

/// Eve's information from one photon of a two-photon pulse once the state
/// pair has been announced: the two candidate states overlap by `1/√2`, and the
/// best single-copy measurement errs with probability `(1 - 1/√2)/2`.
pub fn single_copy_information() -> f64 {
    let p_err = (1.0 - std::f64::consts::FRAC_1_SQRT_2) / 2.0;
    1.0 - binary_entropy(p_err).expect("p_err in [0, 1]")
}

#[derive(Debug, Clone, Copy)]
pub struct IrudParams {
    pub p_ok_model: PokModel,
    pub i2: f64,
}

impl Default for IrudParams {
    fn default() -> Self {
        Self {
            p_ok_model: PokModel::ConstantHalf,
            i2: single_copy_information(),
        }
    }
}

impl IrudParams {
    pub fn validate(&self) -> Result<()> {
        self.p_ok_model.validate()?;
        if !(0.0..=1.0).contains(&self.i2) {
            return Err(domain(format!("I_2 must be in [0, 1], got {}", self.i2)));
        }
        Ok(())
    }
}

/// `χ = Σ_{n≥3} P_n(μ) P_ok(n)`.
pub fn chi(mu: f64, model: &PokModel) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(domain(format!("mu must be non-negative, got {mu}")));
    }
    Ok(chi_unchecked(mu, model))
}

fn chi_unchecked(mu: f64, model: &PokModel) -> f64 {
    match *model {
        PokModel::ConstantHalf => 0.5 * tail(mu, 3),
        PokModel::Constant(p) => p * tail(mu, 3),
        PokModel::Custom(f) => {
            let mut sum = 0.0;
            let mut n = 3;
            // terms past the mode decay at least geometrically
            while n < 10_000 {
                let term = pn(mu, n);
                sum += term * f(n);
                if n as f64 > mu && term <= sum * 1e-17 {
                    break;
                }
                n += 1;
            }
            sum
        }
    }
}

fn check_link(mu: f64, transmittance: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(domain(format!("mu must be positive, got {mu}")));
    }
    if !(transmittance > 0.0 && transmittance <= 1.0) {
        return Err(domain(format!("transmittance must be in (0, 1], got {transmittance}")));
    }
    Ok(())
}

/// Pick the blocking fractions that make the IRUD attack reproduce the channel
/// loss exactly.
pub fn solve_irud_strategy(mu: f64, transmittance: f64, model: &PokModel) -> Result<EveStrategy> {
    check_link(mu, transmittance)?;
    Ok(solve_irud(mu, transmittance, model))
}

fn solve_irud(mu: f64, transmittance: f64, model: &PokModel) -> EveStrategy {
    let p1 = pn(mu, 1);
    let p2 = pn(mu, 2);
    let chi = chi_unchecked(mu, model);
    let received = mu * transmittance;
    let strategy = |t, s, regime, can_match| EveStrategy {
        attack: Attack::Irud,
        t,
        s,
        chi,
        regime,
        can_match,
    };
    if received >= p1 + p2 + chi {
        strategy(0.0, 0.0, StrategyRegime::TransparentBlockSingles, received == p1 + p2 + chi)
    } else if received >= p2 + chi {
        let t = 1.0 - (received - p2 - chi) / p1;
        strategy(t, 0.0, StrategyRegime::TransparentBlockSingles, true)
    } else if received >= chi {
        let s = 1.0 - (received - chi) / p2;
        strategy(1.0, s, StrategyRegime::BlockAllSinglesBlockSomeDoubles, true)
    } else {
        strategy(1.0, 1.0, StrategyRegime::FullInfo, true)
    }
}

impl EveStrategy {
    /// Mean photons per pulse Bob receives under this strategy, `μδ` in the
    /// two loss-matching regimes.
    pub fn received_photons(&self, mu: f64) -> f64 {
        (1.0 - self.t) * pn(mu, 1) + (1.0 - self.s) * pn(mu, 2) + self.chi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutualInfo {
    pub i_ab: f64,
    pub i_be: f64,
    /// `min(i_be / i_ab, 1)`.
    pub i_eve: f64,
    /// The unclamped ratio.
    pub i_eve_raw: f64,
}

impl MutualInfo {
    fn new(i_ab: f64, i_be: f64) -> Self {
        let raw = if i_ab > 0.0 { i_be / i_ab } else { f64::INFINITY };
        Self {
            i_ab,
            i_be,
            i_eve: raw.min(1.0),
            i_eve_raw: raw,
        }
    }

    /// Untagged fraction `Ω = 1 - I_Eve`.
    pub fn omega(&self) -> f64 {
        1.0 - self.i_eve
    }
}

/// BB84 under photon-number splitting.
pub fn mutual_info_bb84(mu: f64, transmittance: f64) -> Result<MutualInfo> {
    check_link(mu, transmittance)?;
    Ok(bb84_info(mu, transmittance))
}

pub(crate) fn bb84_info(mu: f64, transmittance: f64) -> MutualInfo {
    let i_ab = -(-mu * transmittance).exp_m1();
    MutualInfo::new(i_ab, tail(mu, 2))
}

/// SARG04 under the loss-matched IRUD attack.
pub fn mutual_info_sarg04(
    mu: f64,
    transmittance: f64,
    params: &IrudParams,
) -> Result<(MutualInfo, EveStrategy)> {
    check_link(mu, transmittance)?;
    params.validate()?;
    Ok(sarg04_info(mu, transmittance, params))
}

pub(crate) fn sarg04_info(mu: f64, transmittance: f64, params: &IrudParams) -> (MutualInfo, EveStrategy) {
    let st = solve_irud(mu, transmittance, &params.p_ok_model);
    let kept_doubles = pn(mu, 2) * (1.0 - st.s);
    let i_ab = pn(mu, 1) * (1.0 - st.t) + kept_doubles + st.chi;
    let i_be = kept_doubles * params.i2 + st.chi;
    (MutualInfo::new(i_ab, i_be), st)
}
