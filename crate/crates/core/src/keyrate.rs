//! Gains, error rates and asymptotic secret-key rates.
//!
//! Four protocol variants are covered: BB84 and SARG04 with the untagged
//! fraction `Ω` taken from the adversary model, BB84 with a vacuum and one weak
//! decoy, and SARG04 with a vacuum and two weak decoys. Dark counts are the only
//! error source, and decoy observables are simulated from the same detection
//! model rather than measured.

use serde::{Deserialize, Serialize};

use crate::adversary::{bb84_info, sarg04_info, IrudParams};
use crate::channel::LinkScenario;
use crate::error::{domain, Error, Result};
use crate::source::SourceConfig;

/// Efficiency of the Cascade reconciliation used for the leak term.
pub const CASCADE_EFFICIENCY: f64 = 1.22;

/// How dark counts combine with signal detections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum YieldModel {
    /// `Y_n = Y_0 + 1 - (1-δ)^n`. Not capped, so `Σ Y_n P_n` keeps its closed form.
    #[default]
    Additive,
    /// `Y_n = 1 - (1-δ)^n (1-Y_0)`.
    Multiplicative,
}

/// Detector-side constants, independent of the channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    pub y0: f64,
    pub e0: f64,
    #[serde(default)]
    pub yield_model: YieldModel,
}

impl Default for Detector {
    fn default() -> Self {
        Self {
            y0: 50e-6,
            e0: 0.5,
            yield_model: YieldModel::Additive,
        }
    }
}

impl Detector {
    pub fn with_dark_counts(y0: f64) -> Self {
        Self { y0, ..Self::default() }
    }

    pub fn at(&self, transmittance: f64) -> DetectionModel {
        DetectionModel {
            y0: self.y0,
            e0: self.e0,
            transmittance,
            yield_model: self.yield_model,
        }
    }
}

/// Detector behind a channel of known transmittance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionModel {
    pub y0: f64,
    pub e0: f64,
    pub transmittance: f64,
    pub yield_model: YieldModel,
}

impl DetectionModel {
    pub fn new(y0: f64, transmittance: f64) -> Self {
        Detector::with_dark_counts(y0).at(transmittance)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.y0) {
            return Err(domain(format!("dark count probability must be in [0, 1), got {}", self.y0)));
        }
        if !(0.0..=1.0).contains(&self.e0) {
            return Err(domain("dark count error rate must be in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.transmittance) {
            return Err(domain(format!(
                "transmittance must be in [0, 1], got {}",
                self.transmittance
            )));
        }
        Ok(())
    }

    /// Gain `Q_ν = Σ Y_n P_n(ν)` in closed form.
    pub fn gain(&self, intensity: f64) -> f64 {
        // 1 - e^{-νδ}, kept accurate for tiny νδ
        let click = -(-intensity * self.transmittance).exp_m1();
        match self.yield_model {
            YieldModel::Additive => self.y0 + click,
            YieldModel::Multiplicative => self.y0 + click * (1.0 - self.y0),
        }
    }

    /// `Σ e_n Y_n P_n(ν) = e_0 Y_0`: only dark counts err, independent of `ν`.
    pub fn error_mass(&self) -> f64 {
        self.e0 * self.y0
    }

    pub fn error_n(&self, n: u32) -> f64 {
        self.error_mass() / yield_n(n, self)
    }
}

/// Yield of an `n`-photon pulse.
pub fn yield_n(n: u32, det: &DetectionModel) -> f64 {
    // 1 - (1-δ)^n without cancellation for small nδ
    let click = if n == 0 {
        0.0
    } else {
        -(n as f64 * (-det.transmittance).ln_1p()).exp_m1()
    };
    match det.yield_model {
        YieldModel::Additive => det.y0 + click,
        YieldModel::Multiplicative => det.y0 + click * (1.0 - det.y0),
    }
}

/// Signal gain `Q_μ` and QBER `E_μ`.
pub fn gain_and_qber(mu: f64, det: &DetectionModel) -> Result<(f64, f64)> {
    if !(mu >= 0.0) {
        return Err(domain(format!("mu must be non-negative, got {mu}")));
    }
    det.validate()?;
    let q = det.gain(mu);
    if q <= 0.0 {
        return Err(Error::ZeroGain);
    }
    Ok((q, det.error_mass() / q))
}

/// `H₂(x)` in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!("binary entropy argument must be in [0, 1], got {x}")));
    }
    Ok(h2(x))
}

pub(crate) fn h2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

/// `1 - H₂(min(x, 1/2))`: the distillable fraction at error rate `x`.
fn privacy_factor(x: f64) -> f64 {
    1.0 - h2(x.min(0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProtocolKind {
    Bb84,
    Sarg04,
    Bb84VacuumWeakDecoy,
    Sarg04VacuumTwoWeakDecoy,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 4] = [
        ProtocolKind::Bb84,
        ProtocolKind::Sarg04,
        ProtocolKind::Bb84VacuumWeakDecoy,
        ProtocolKind::Sarg04VacuumTwoWeakDecoy,
    ];

    pub fn sifting(self) -> f64 {
        match self {
            ProtocolKind::Bb84 | ProtocolKind::Bb84VacuumWeakDecoy => 0.5,
            ProtocolKind::Sarg04 | ProtocolKind::Sarg04VacuumTwoWeakDecoy => 0.25,
        }
    }

    pub fn is_decoy(self) -> bool {
        matches!(
            self,
            ProtocolKind::Bb84VacuumWeakDecoy | ProtocolKind::Sarg04VacuumTwoWeakDecoy
        )
    }

    /// Short name used on the command line and in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Bb84 => "bb84",
            ProtocolKind::Sarg04 => "sarg04",
            ProtocolKind::Bb84VacuumWeakDecoy => "bb84-decoy",
            ProtocolKind::Sarg04VacuumTwoWeakDecoy => "sarg04-decoy",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::Unknown {
                kind: "protocol",
                name: name.to_owned(),
            })
    }
}

impl std::fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolVariant {
    pub kind: ProtocolKind,
    pub q: f64,
    pub f_ec: f64,
}

impl ProtocolVariant {
    pub fn new(kind: ProtocolKind) -> Self {
        Self {
            kind,
            q: kind.sifting(),
            f_ec: CASCADE_EFFICIENCY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q != self.kind.sifting() {
            return Err(domain(format!("sifting efficiency {} does not match {}", self.q, self.kind)));
        }
        if !(self.f_ec >= 1.0) {
            return Err(domain("error-correction inefficiency must be >= 1"));
        }
        Ok(())
    }

    /// Reconciliation leak `Q_μ f H₂(E_μ)`.
    fn leak(&self, gain: f64, qber: f64) -> f64 {
        gain * self.f_ec * h2(qber)
    }
}

impl From<ProtocolKind> for ProtocolVariant {
    fn from(kind: ProtocolKind) -> Self {
        Self::new(kind)
    }
}

/// Gain and QBER that Alice and Bob would record at one intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub intensity: f64,
    pub gain: f64,
    pub qber: f64,
}

impl Observation {
    pub fn simulate(intensity: f64, det: &DetectionModel) -> Self {
        let gain = det.gain(intensity);
        let qber = if gain > 0.0 { det.error_mass() / gain } else { det.e0 };
        Self { intensity, gain, qber }
    }

    fn error_mass(&self) -> f64 {
        self.gain * self.qber
    }
}

/// Asymptotic observables for each intensity under `det`.
pub fn simulate_decoy_observables(intensities: &[f64], det: &DetectionModel) -> Result<Vec<Observation>> {
    det.validate()?;
    if intensities.iter().any(|&v| !(v >= 0.0)) {
        return Err(domain("intensities must be non-negative"));
    }
    Ok(intensities.iter().map(|&v| Observation::simulate(v, det)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyEstimates {
    pub y0_est: f64,
    pub y1_lower: f64,
    pub y2_lower: f64,
    pub q1_lower: f64,
    pub q2_lower: f64,
    pub e1_upper: f64,
    pub e2_upper: f64,
    /// The single-photon yield bound is not positive; nothing is distillable.
    pub degenerate: bool,
}

fn clamp01(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// Vacuum + one weak decoy bounds on the single-photon yield and error.
pub fn decoy_bounds_bb84(signal: &Observation, weak: &Observation, vacuum: &Observation) -> Result<DecoyEstimates> {
    let (mu, nu) = (signal.intensity, weak.intensity);
    if !(nu > 0.0 && nu < mu) {
        return Err(domain(format!("weak decoy must satisfy 0 < nu < mu (mu={mu}, nu={nu})")));
    }
    if vacuum.intensity != 0.0 {
        return Err(domain("vacuum observation must have zero intensity"));
    }
    Ok(bb84_estimates(signal, weak, vacuum))
}

pub(crate) fn bb84_estimates(signal: &Observation, weak: &Observation, vacuum: &Observation) -> DecoyEstimates {
    let (mu, nu) = (signal.intensity, weak.intensity);
    let y0 = vacuum.gain;
    let y1 = mu / (mu * nu - nu * nu)
        * (weak.gain * nu.exp()
            - signal.gain * mu.exp() * (nu * nu) / (mu * mu)
            - (mu * mu - nu * nu) / (mu * mu) * y0);
    let degenerate = !(y1 > 0.0);
    let y1_lower = clamp01(y1);
    let e1 = if degenerate { 1.0 } else { clamp01(vacuum.error_mass() / y1) };
    DecoyEstimates {
        y0_est: clamp01(y0),
        y1_lower,
        y2_lower: 0.0,
        q1_lower: mu * (-mu).exp() * y1_lower,
        q2_lower: 0.0,
        e1_upper: e1,
        e2_upper: 1.0,
        degenerate,
    }
}

/// `Σ_{n≥3} x^{n-1}/n! = (e^x - 1 - x - x²/2) / x`.
fn tail_weight(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x > 0.5 {
        return (x.exp_m1() - x - 0.5 * x * x) / x;
    }
    // the closed form cancels catastrophically for small x
    let mut term = x * x / 6.0;
    let mut sum = 0.0;
    let mut n = 3.0;
    while term > sum * 1e-18 {
        sum += term;
        n += 1.0;
        term *= x / n;
    }
    sum
}

/// Vacuum + two weak decoy bounds on one- and two-photon yields and errors.
///
/// The single-photon bound eliminates the two-photon term between the two
/// decoys, leaving a non-positive remainder. The two-photon bound subtracts the
/// largest remainder compatible with `Y_n ≤ 1`.
pub fn decoy_bounds_sarg04(
    signal: &Observation,
    weak1: &Observation,
    weak2: &Observation,
    vacuum: &Observation,
) -> Result<DecoyEstimates> {
    let (mu, nu1, nu2) = (signal.intensity, weak1.intensity, weak2.intensity);
    if !(nu1 > 0.0 && nu1 < nu2 && nu1 + nu2 < mu) {
        return Err(Error::DecoyConstraint { mu, nu1, nu2 });
    }
    if vacuum.intensity != 0.0 {
        return Err(domain("vacuum observation must have zero intensity"));
    }
    Ok(sarg04_estimates(signal, weak1, weak2, vacuum))
}

pub(crate) fn sarg04_estimates(
    signal: &Observation,
    weak1: &Observation,
    weak2: &Observation,
    vacuum: &Observation,
) -> DecoyEstimates {
    let (mu, nu1, nu2) = (signal.intensity, weak1.intensity, weak2.intensity);
    let y0 = vacuum.gain;
    let dark_errors = vacuum.error_mass();
    let (x1, x2) = (nu1.exp(), nu2.exp());
    let g1 = weak1.gain * x1 - y0;
    let g2 = weak2.gain * x2 - y0;
    let w1 = weak1.error_mass() * x1 - dark_errors;
    let w2 = weak2.error_mass() * x2 - dark_errors;
    let spread = nu2 - nu1;

    let y1 = (nu2 * nu2 * g1 - nu1 * nu1 * g2) / (nu1 * nu2 * spread);
    let worst_tail = tail_weight(nu2) - tail_weight(nu1);
    let y2 = 2.0 * ((g2 / nu2 - g1 / nu1) - worst_tail) / spread;

    let degenerate = !(y1 > 0.0);
    let y1_lower = clamp01(y1);
    let y2_lower = clamp01(y2);
    let e1_upper = if degenerate { 1.0 } else { clamp01(w1 / (nu1 * y1)) };
    let e2_upper = if y2 > 0.0 {
        let slope = 2.0 * (w2 / nu2 - w1 / nu1) / (y2 * spread);
        clamp01(if slope > 0.0 { slope } else { 2.0 * w2 / (nu2 * nu2 * y2) })
    } else {
        1.0
    };
    let attenuation = (-mu).exp();
    DecoyEstimates {
        y0_est: clamp01(y0),
        y1_lower,
        y2_lower,
        q1_lower: mu * attenuation * y1_lower,
        q2_lower: 0.5 * mu * mu * attenuation * y2_lower,
        e1_upper,
        e2_upper,
        degenerate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RateBounds {
    /// Untagged fraction from the adversary model.
    Omega(f64),
    Decoy(DecoyEstimates),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateReport {
    pub protocol: ProtocolVariant,
    pub distance_m: Option<f64>,
    pub transmittance: f64,
    pub gain_q_mu: f64,
    pub qber_e_mu: f64,
    pub bounds: RateBounds,
    /// `max(formula, 0)`.
    pub rate_bits_per_pulse: f64,
    pub secure: bool,
}

impl KeyRateReport {
    fn new(
        protocol: ProtocolVariant,
        det: &DetectionModel,
        signal: &Observation,
        bounds: RateBounds,
        formula: f64,
    ) -> Self {
        Self {
            protocol,
            distance_m: None,
            transmittance: det.transmittance,
            gain_q_mu: signal.gain,
            qber_e_mu: signal.qber,
            bounds,
            rate_bits_per_pulse: formula.max(0.0),
            secure: formula > 0.0,
        }
    }
}

/// Formula value of the non-decoy rate, before clamping at zero.
pub(crate) fn nondecoy_value(protocol: &ProtocolVariant, signal: &Observation, omega: f64) -> f64 {
    let (q, e) = (signal.gain, signal.qber);
    let distilled = if omega > 0.0 && e / omega <= 0.5 {
        omega * q * privacy_factor(e / omega)
    } else {
        0.0
    };
    protocol.q * (distilled - protocol.leak(q, e))
}

/// Formula value of a decoy rate, before clamping at zero.
pub(crate) fn decoy_value(protocol: &ProtocolVariant, signal: &Observation, est: &DecoyEstimates) -> f64 {
    if est.degenerate {
        return -protocol.q * protocol.leak(signal.gain, signal.qber);
    }
    let single = est.q1_lower * privacy_factor(est.e1_upper);
    let double = if protocol.kind == ProtocolKind::Sarg04VacuumTwoWeakDecoy {
        est.q2_lower * privacy_factor(est.e2_upper)
    } else {
        0.0
    };
    protocol.q * (single + double - protocol.leak(signal.gain, signal.qber))
}

/// Rate with the untagged fraction supplied directly.
pub fn rate_nondecoy(protocol: ProtocolVariant, mu: f64, det: &DetectionModel, omega: f64) -> Result<KeyRateReport> {
    protocol.validate()?;
    if protocol.kind.is_decoy() {
        return Err(domain(format!("{} is a decoy protocol", protocol.kind)));
    }
    if !(0.0..=1.0).contains(&omega) {
        return Err(domain(format!("omega must be in [0, 1], got {omega}")));
    }
    gain_and_qber(mu, det)?;
    let signal = Observation::simulate(mu, det);
    let value = nondecoy_value(&protocol, &signal, omega);
    Ok(KeyRateReport::new(protocol, det, &signal, RateBounds::Omega(omega), value))
}

/// BB84 with vacuum and one weak decoy.
pub fn rate_bb84_decoy(mu: f64, nu: f64, det: &DetectionModel) -> Result<KeyRateReport> {
    det.validate()?;
    let obs = simulate_decoy_observables(&[mu, nu, 0.0], det)?;
    let est = decoy_bounds_bb84(&obs[0], &obs[1], &obs[2])?;
    let protocol = ProtocolVariant::new(ProtocolKind::Bb84VacuumWeakDecoy);
    let value = decoy_value(&protocol, &obs[0], &est);
    Ok(KeyRateReport::new(protocol, det, &obs[0], RateBounds::Decoy(est), value))
}

/// SARG04 with vacuum and two weak decoys.
pub fn rate_sarg04_decoy(mu: f64, nu1: f64, nu2: f64, det: &DetectionModel) -> Result<KeyRateReport> {
    det.validate()?;
    let obs = simulate_decoy_observables(&[mu, nu1, nu2, 0.0], det)?;
    let est = decoy_bounds_sarg04(&obs[0], &obs[1], &obs[2], &obs[3])?;
    let protocol = ProtocolVariant::new(ProtocolKind::Sarg04VacuumTwoWeakDecoy);
    let value = decoy_value(&protocol, &obs[0], &est);
    Ok(KeyRateReport::new(protocol, det, &obs[0], RateBounds::Decoy(est), value))
}

/// Untagged fraction for a non-decoy protocol at intensity `mu`.
pub fn untagged_fraction(kind: ProtocolKind, mu: f64, transmittance: f64, irud: &IrudParams) -> Result<f64> {
    match kind {
        ProtocolKind::Bb84 => Ok(crate::adversary::mutual_info_bb84(mu, transmittance)?.omega()),
        ProtocolKind::Sarg04 => Ok(crate::adversary::mutual_info_sarg04(mu, transmittance, irud)?.0.omega()),
        _ => Err(domain(format!("{kind} takes its bounds from decoy estimates"))),
    }
}

pub(crate) fn untagged_unchecked(kind: ProtocolKind, mu: f64, transmittance: f64, irud: &IrudParams) -> f64 {
    if kind == ProtocolKind::Sarg04 {
        sarg04_info(mu, transmittance, irud).0.omega()
    } else {
        bb84_info(mu, transmittance).omega()
    }
}

/// Join channel, adversary and rate formula for one configuration.
pub fn rate_for(
    protocol: ProtocolKind,
    scenario: &LinkScenario,
    detector: &Detector,
    source: &SourceConfig,
    irud: &IrudParams,
) -> Result<KeyRateReport> {
    source.validate()?;
    let transmittance = scenario.transmittance()?;
    let det = detector.at(transmittance);
    let weak: Vec<f64> = source.weak_decoys().collect();
    let mut report = match protocol {
        ProtocolKind::Bb84 | ProtocolKind::Sarg04 => {
            let omega = untagged_fraction(protocol, source.mu, transmittance, irud)?;
            rate_nondecoy(protocol.into(), source.mu, &det, omega)?
        }
        ProtocolKind::Bb84VacuumWeakDecoy => {
            let nu = *weak
                .first()
                .ok_or_else(|| domain("bb84-decoy needs one weak decoy intensity"))?;
            rate_bb84_decoy(source.mu, nu, &det)?
        }
        ProtocolKind::Sarg04VacuumTwoWeakDecoy => {
            if weak.len() < 2 {
                return Err(domain("sarg04-decoy needs two weak decoy intensities"));
            }
            rate_sarg04_decoy(source.mu, weak[0], weak[1], &det)?
        }
    };
    report.distance_m = Some(scenario.distance_m);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::pn;
    use approx::assert_relative_eq;

    const Y0: f64 = 5e-5;

    #[test]
    fn yield_examples() {
        let det = DetectionModel::new(Y0, 0.0561);
        assert_eq!(yield_n(0, &det), Y0);
        assert!((yield_n(1, &det) - 0.056150).abs() < 1e-6);
        assert_eq!(yield_n(3, &DetectionModel::new(Y0, 1.0)), 1.0 + Y0);
        let mut m = det;
        m.yield_model = YieldModel::Multiplicative;
        assert_relative_eq!(yield_n(0, &m), Y0, max_relative = 1e-12);
        assert_relative_eq!(yield_n(1, &m), 1.0 - (1.0 - 0.0561) * (1.0 - Y0), max_relative = 1e-14);
    }

    #[test]
    fn gain_and_qber_examples() {
        let (q, e) = gain_and_qber(0.0, &DetectionModel::new(Y0, 0.3)).unwrap();
        assert_eq!(q, Y0);
        assert_relative_eq!(e, 0.5);

        let (_, e) = gain_and_qber(0.4, &DetectionModel::new(0.0, 0.3)).unwrap();
        assert_eq!(e, 0.0);

        let (q, e) = gain_and_qber(0.1, &DetectionModel::new(Y0, 0.0561)).unwrap();
        let oracle_q = Y0 + 1.0 - (-0.1f64 * 0.0561).exp();
        assert_relative_eq!(q, oracle_q, max_relative = 1e-12);
        assert!((q - 5.6443e-3).abs() < 1e-7, "{q}");
        assert!((e - 4.4293e-3).abs() < 1e-7, "{e}");

        assert!(matches!(
            gain_and_qber(0.0, &DetectionModel::new(0.0, 0.3)),
            Err(Error::ZeroGain)
        ));
    }

    #[test]
    fn gain_matches_photon_sum() {
        for model in [YieldModel::Additive, YieldModel::Multiplicative] {
            for &d in &[1e-4, 0.0561, 0.3, 0.9] {
                for &mu in &[0.01, 0.3, 0.7, 1.0] {
                    let mut det = DetectionModel::new(Y0, d);
                    det.yield_model = model;
                    let sum: f64 = (0..=40).map(|n| yield_n(n, &det) * pn(mu, n)).sum();
                    assert!((det.gain(mu) - sum).abs() < 1e-12, "{model:?} {d} {mu}");
                }
            }
        }
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.11).unwrap() - 0.499916).abs() < 1e-6);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn nondecoy_edge_cases() {
        let det = DetectionModel::new(Y0, 0.05);
        let r = rate_nondecoy(ProtocolKind::Bb84.into(), 0.1, &det, 0.0).unwrap();
        assert_eq!(r.rate_bits_per_pulse, 0.0);
        assert!(!r.secure);

        let clean = DetectionModel::new(0.0, 0.05);
        let r = rate_nondecoy(ProtocolKind::Bb84.into(), 0.1, &clean, 1.0).unwrap();
        assert_relative_eq!(r.rate_bits_per_pulse, 0.5 * clean.gain(0.1), max_relative = 1e-14);
        let r = rate_nondecoy(ProtocolKind::Sarg04.into(), 0.1, &clean, 1.0).unwrap();
        assert_relative_eq!(r.rate_bits_per_pulse, 0.25 * clean.gain(0.1), max_relative = 1e-14);

        assert!(rate_nondecoy(ProtocolKind::Bb84.into(), 0.1, &det, 1.5).is_err());
        assert!(rate_nondecoy(ProtocolKind::Bb84VacuumWeakDecoy.into(), 0.1, &det, 0.5).is_err());
    }

    #[test]
    fn omega_too_small_for_error_rate() {
        // E/Ω > 1/2 leaves nothing to distill
        let det = DetectionModel::new(Y0, 1e-4);
        let (_, e) = gain_and_qber(0.5, &det).unwrap();
        let r = rate_nondecoy(ProtocolKind::Bb84.into(), 0.5, &det, e).unwrap();
        assert!(!r.secure);
    }

    #[test]
    fn protocol_variant_validation() {
        let mut v = ProtocolVariant::new(ProtocolKind::Sarg04);
        assert_eq!(v.q, 0.25);
        assert!(v.validate().is_ok());
        v.q = 0.5;
        assert!(v.validate().is_err());
        let mut v = ProtocolVariant::new(ProtocolKind::Bb84);
        v.f_ec = 0.9;
        assert!(v.validate().is_err());
        assert_eq!(ProtocolKind::from_name("sarg04-decoy").unwrap(), ProtocolKind::Sarg04VacuumTwoWeakDecoy);
        assert!(ProtocolKind::from_name("e91").is_err());
    }

    #[test]
    fn observable_examples() {
        let obs = simulate_decoy_observables(&[0.0], &DetectionModel::new(Y0, 0.2)).unwrap();
        assert_eq!(obs[0].gain, Y0);
        assert_eq!(obs[0].qber, 0.5);

        let opaque = DetectionModel::new(Y0, 0.0);
        for o in simulate_decoy_observables(&[0.0, 0.1, 0.5, 1.0], &opaque).unwrap() {
            assert_eq!(o.gain, Y0);
        }

        let o = simulate_decoy_observables(&[0.05], &DetectionModel::new(Y0, 0.1)).unwrap()[0];
        assert_relative_eq!(o.gain, Y0 + 1.0 - (-0.005f64).exp(), max_relative = 1e-12);
        assert!((o.gain - 5.0375e-3).abs() < 1e-7, "{}", o.gain);
        assert!((o.qber - 4.963e-3).abs() < 1e-6, "{}", o.qber);

        assert!(simulate_decoy_observables(&[-0.1], &opaque).is_err());
    }

    /// Brute-force per-photon-number truth, straight from the yield model.
    fn truth(det: &DetectionModel) -> (f64, f64, f64, f64) {
        let y1 = yield_n(1, det);
        let y2 = yield_n(2, det);
        (y1, y2, det.e0 * det.y0 / y1, det.e0 * det.y0 / y2)
    }

    #[test]
    fn bb84_bounds_sandwich() {
        let det = DetectionModel::new(Y0, 0.1);
        let obs = simulate_decoy_observables(&[0.48, 0.05, 0.0], &det).unwrap();
        let est = decoy_bounds_bb84(&obs[0], &obs[1], &obs[2]).unwrap();
        let (y1, _, e1, _) = truth(&det);
        assert!((y1 - 0.10005).abs() < 1e-12);
        assert!(est.y1_lower <= y1);
        assert!(est.e1_upper >= e1);
        assert!(!est.degenerate);
        assert_relative_eq!(est.q1_lower, 0.48 * (-0.48f64).exp() * est.y1_lower);
    }

    #[test]
    fn bb84_bounds_degenerate_without_signal() {
        let det = DetectionModel::new(0.0, 1e-9);
        let obs = simulate_decoy_observables(&[0.5, 0.1, 0.0], &det).unwrap();
        let est = decoy_bounds_bb84(&obs[0], &obs[1], &obs[2]).unwrap();
        assert!(est.y1_lower < 1e-8);

        let dark = DetectionModel::new(Y0, 0.0);
        let r = rate_bb84_decoy(0.5, 0.1, &dark).unwrap();
        assert!(!r.secure);
        assert_eq!(r.rate_bits_per_pulse, 0.0);

        let obs = simulate_decoy_observables(&[0.5, 0.5, 0.0], &det).unwrap();
        assert!(decoy_bounds_bb84(&obs[0], &obs[1], &obs[2]).is_err());
    }

    #[test]
    fn sarg04_bounds_sandwich() {
        let det = DetectionModel::new(Y0, 0.1);
        let obs = simulate_decoy_observables(&[0.5, 0.05, 0.10, 0.0], &det).unwrap();
        let est = decoy_bounds_sarg04(&obs[0], &obs[1], &obs[2], &obs[3]).unwrap();
        let (y1, y2, e1, e2) = truth(&det);
        assert!((y2 - 0.19005).abs() < 1e-12);
        assert!(est.y1_lower <= y1 && est.y1_lower > 0.0);
        assert!(est.y2_lower <= y2 && est.y2_lower > 0.0);
        assert!(est.e1_upper >= e1);
        assert!(est.e2_upper >= e2);
    }

    #[test]
    fn sarg04_bounds_dark_channel() {
        let det = DetectionModel::new(Y0, 0.0);
        let r = rate_sarg04_decoy(0.5, 0.05, 0.1, &det).unwrap();
        assert!(!r.secure);
        let RateBounds::Decoy(est) = r.bounds else { panic!() };
        // only dark counts click, so every true yield equals Y0
        assert!(est.y1_lower <= Y0 && est.y2_lower <= Y0);
    }

    #[test]
    fn sarg04_constraint_enforced() {
        let det = DetectionModel::new(Y0, 0.1);
        assert!(matches!(
            rate_sarg04_decoy(0.5, 0.3, 0.25, &det),
            Err(Error::DecoyConstraint { .. })
        ));
        assert!(matches!(
            rate_sarg04_decoy(0.5, 0.2, 0.35, &det),
            Err(Error::DecoyConstraint { .. })
        ));
    }

    #[test]
    fn two_photon_term_off_reduces_to_single_photon_formula() {
        let det = DetectionModel::new(Y0, 0.05);
        let r = rate_sarg04_decoy(0.6, 0.01, 0.02, &det).unwrap();
        let RateBounds::Decoy(mut est) = r.bounds else { panic!() };
        let signal = Observation::simulate(0.6, &det);
        let sarg = ProtocolVariant::new(ProtocolKind::Sarg04VacuumTwoWeakDecoy);
        est.q2_lower = 0.0;
        let expect = 0.25
            * (est.q1_lower * (1.0 - h2(est.e1_upper.min(0.5)))
                - signal.gain * CASCADE_EFFICIENCY * h2(signal.qber));
        assert_relative_eq!(decoy_value(&sarg, &signal, &est), expect, max_relative = 1e-12);
    }

    #[test]
    fn entropy_ceiling_kills_single_photon_term() {
        let signal = Observation {
            intensity: 0.5,
            gain: 0.01,
            qber: 0.0,
        };
        let est = DecoyEstimates {
            y0_est: 0.0,
            y1_lower: 0.1,
            y2_lower: 0.0,
            q1_lower: 0.03,
            q2_lower: 0.0,
            e1_upper: 0.5,
            e2_upper: 1.0,
            degenerate: false,
        };
        let bb84 = ProtocolVariant::new(ProtocolKind::Bb84VacuumWeakDecoy);
        assert_eq!(decoy_value(&bb84, &signal, &est), 0.0);
        let est = DecoyEstimates { e1_upper: 0.9, ..est };
        assert_eq!(decoy_value(&bb84, &signal, &est), 0.0);
    }

    #[test]
    fn tail_weight_series_matches_closed_form() {
        for &x in &[0.5f64, 0.3, 0.1] {
            let closed = (x.exp_m1() - x - 0.5 * x * x) / x;
            assert_relative_eq!(tail_weight(x), closed, max_relative = 1e-9);
        }
        assert_relative_eq!(tail_weight(1e-3), 1e-6 / 6.0, max_relative = 1e-3);
    }
}
