//! Grid search over source intensities, rate-versus-distance curves, and
//! critical distances.
//!
//! Intensities live on an integer lattice `k · step`, so grid points are exact
//! and comparisons between runs are bit-stable. The search maximises the
//! unclamped rate formula; a point is secure when that maximum is positive.
//!
//! Ties are broken toward the smaller signal intensity (then smaller decoys),
//! independent of the order in which workers finish.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{bb84_info, sarg04_info, IrudParams};
use crate::channel::LinkScenario;
use crate::error::{domain, Result};
use crate::keyrate::{
    bb84_estimates, decoy_value, nondecoy_value, sarg04_estimates, untagged_unchecked, DetectionModel,
    Detector, Observation, ProtocolKind, ProtocolVariant,
};

/// Uniform lattice `step, 2·step, …, max` of intensities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityGrid {
    pub step: f64,
    pub max: f64,
}

impl Default for IntensityGrid {
    fn default() -> Self {
        Self { step: 0.001, max: 1.0 }
    }
}

impl IntensityGrid {
    /// Number of positive lattice points.
    pub fn len(&self) -> usize {
        (self.max / self.step + 1e-9).floor() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, k: usize) -> f64 {
        k as f64 * self.step
    }
}

/// Coarse step for the two SARG04 decoys, and the half-width of the refinement
/// window around the coarse optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyGridPolicy {
    pub coarse_step: f64,
    pub refine_window: f64,
}

impl Default for DecoyGridPolicy {
    fn default() -> Self {
        Self {
            coarse_step: 0.01,
            refine_window: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceGrid {
    pub min_km: f64,
    pub max_km: f64,
    pub step_km: f64,
}

impl DistanceGrid {
    pub fn new(min_km: f64, max_km: f64, step_km: f64) -> Self {
        Self { min_km, max_km, step_km }
    }

    /// Grid with `points` evenly spaced distances from `min_km` to `max_km`.
    pub fn with_points(min_km: f64, max_km: f64, points: usize) -> Self {
        let step_km = if points > 1 {
            (max_km - min_km) / (points - 1) as f64
        } else {
            f64::INFINITY
        };
        Self { min_km, max_km, step_km }
    }

    pub fn distances_km(&self) -> Vec<f64> {
        if !(self.max_km >= self.min_km) || !(self.min_km > 0.0) {
            return Vec::new();
        }
        if !self.step_km.is_finite() {
            return vec![self.min_km];
        }
        let n = ((self.max_km - self.min_km) / self.step_km + 1e-9).floor() as usize;
        (0..=n).map(|i| self.min_km + i as f64 * self.step_km).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepSpec {
    pub protocol: ProtocolKind,
    pub scenario: LinkScenario,
    pub detector: Detector,
    pub irud: IrudParams,
    pub distances: DistanceGrid,
    pub mu_grid: IntensityGrid,
    pub nu_policy: DecoyGridPolicy,
    pub fixed_mu: Option<f64>,
}

impl SweepSpec {
    pub fn new(protocol: ProtocolKind, scenario: LinkScenario, detector: Detector, distances: DistanceGrid) -> Self {
        Self {
            protocol,
            scenario,
            detector,
            irud: IrudParams::default(),
            distances,
            mu_grid: IntensityGrid::default(),
            nu_policy: DecoyGridPolicy::default(),
            fixed_mu: None,
        }
    }

    pub fn with_fixed_mu(mut self, mu: Option<f64>) -> Self {
        self.fixed_mu = mu;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu_grid.is_empty() || !(self.mu_grid.step > 0.0) {
            return Err(domain("mu grid is empty"));
        }
        let ratio = self.nu_policy.coarse_step / self.mu_grid.step;
        if !(ratio >= 1.0) || (ratio - ratio.round()).abs() > 1e-9 {
            return Err(domain("coarse decoy step must be a multiple of the mu step"));
        }
        if let Some(mu) = self.fixed_mu {
            if !(mu > 0.0) {
                return Err(domain(format!("fixed mu must be positive, got {mu}")));
            }
        }
        self.irud.validate()?;
        self.scenario.transmitter.validate()?;
        self.scenario.receiver.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimumPoint {
    pub distance_m: f64,
    pub transmittance: f64,
    /// `None` when no evaluated point has a positive rate.
    pub best_mu: Option<f64>,
    pub best_nu1: Option<f64>,
    pub best_nu2: Option<f64>,
    pub best_rate: f64,
    pub eve_info_at_optimum: Option<f64>,
    pub qber_at_optimum: Option<f64>,
}

impl OptimumPoint {
    pub fn secure(&self) -> bool {
        self.best_rate > 0.0
    }
}

/// Lattice index of one candidate: (μ, ν₁, ν₂), zero meaning unused.
type Index = (usize, usize, usize);

#[derive(Debug, Clone, Copy)]
struct Best {
    value: f64,
    index: Index,
}

impl Best {
    const NONE: Best = Best {
        value: f64::NEG_INFINITY,
        index: (usize::MAX, usize::MAX, usize::MAX),
    };

    fn consider(&mut self, value: f64, index: Index) {
        if value > self.value || (value == self.value && index < self.index) {
            *self = Best { value, index };
        }
    }

    fn merge(mut self, other: Best) -> Best {
        self.consider(other.value, other.index);
        self
    }
}

/// Everything about one distance that does not depend on the intensities.
struct Evaluator<'a> {
    spec: &'a SweepSpec,
    det: DetectionModel,
    protocol: ProtocolVariant,
    /// Observations at every lattice intensity; index 0 is the vacuum.
    lattice: Vec<Observation>,
}

impl<'a> Evaluator<'a> {
    fn new(spec: &'a SweepSpec, transmittance: f64) -> Self {
        let det = spec.detector.at(transmittance);
        let lattice = (0..=spec.mu_grid.len())
            .map(|k| Observation::simulate(spec.mu_grid.value(k), &det))
            .collect();
        Self {
            spec,
            det,
            protocol: ProtocolVariant::new(spec.protocol),
            lattice,
        }
    }

    fn signal(&self, k: usize) -> Observation {
        match self.spec.fixed_mu {
            Some(mu) => Observation::simulate(mu, &self.det),
            None => self.lattice[k],
        }
    }

    fn mu_indices(&self) -> Vec<usize> {
        match self.spec.fixed_mu {
            Some(_) => vec![0],
            None => (1..=self.spec.mu_grid.len()).collect(),
        }
    }

    fn value(&self, (k, i, j): Index) -> f64 {
        let signal = self.signal(k);
        match self.spec.protocol {
            ProtocolKind::Bb84 | ProtocolKind::Sarg04 => {
                let omega = untagged_unchecked(self.spec.protocol, signal.intensity, self.det.transmittance, &self.spec.irud);
                nondecoy_value(&self.protocol, &signal, omega)
            }
            ProtocolKind::Bb84VacuumWeakDecoy => {
                let est = bb84_estimates(&signal, &self.lattice[i], &self.lattice[0]);
                decoy_value(&self.protocol, &signal, &est)
            }
            ProtocolKind::Sarg04VacuumTwoWeakDecoy => {
                let est = sarg04_estimates(&signal, &self.lattice[i], &self.lattice[j], &self.lattice[0]);
                decoy_value(&self.protocol, &signal, &est)
            }
        }
    }

    fn mu_of(&self, k: usize) -> f64 {
        self.spec.fixed_mu.unwrap_or_else(|| self.spec.mu_grid.value(k))
    }

    /// Largest lattice index strictly below intensity `x`.
    fn below(&self, x: f64) -> usize {
        let r = x / self.spec.mu_grid.step;
        let k = (r - 1e-9).ceil() as isize - 1;
        k.clamp(0, self.spec.mu_grid.len() as isize) as usize
    }

    fn search(&self) -> Best {
        match self.spec.protocol {
            ProtocolKind::Bb84 | ProtocolKind::Sarg04 => self
                .mu_indices()
                .into_par_iter()
                .map(|k| Best {
                    value: self.value((k, 0, 0)),
                    index: (k, 0, 0),
                })
                .reduce(|| Best::NONE, Best::merge),
            ProtocolKind::Bb84VacuumWeakDecoy => self
                .mu_indices()
                .into_par_iter()
                .map(|k| {
                    let mut best = Best::NONE;
                    for i in 1..=self.below(self.mu_of(k)) {
                        best.consider(self.value((k, i, 0)), (k, i, 0));
                    }
                    best
                })
                .reduce(|| Best::NONE, Best::merge),
            ProtocolKind::Sarg04VacuumTwoWeakDecoy => self.search_two_decoys(),
        }
    }

    fn two_decoy_ok(&self, (k, i, j): Index) -> bool {
        let mu = self.mu_of(k);
        let step = self.spec.mu_grid.step;
        i >= 1 && i < j && j <= self.spec.mu_grid.len() && (i + j) as f64 * step < mu - 1e-12
    }

    fn search_two_decoys(&self) -> Best {
        let stride = (self.spec.nu_policy.coarse_step / self.spec.mu_grid.step).round() as usize;
        let coarse = self
            .mu_indices()
            .into_par_iter()
            .map(|k| {
                let mut best = Best::NONE;
                let top = self.below(self.mu_of(k));
                for i in (stride..=top).step_by(stride) {
                    for j in ((i + stride)..=top).step_by(stride) {
                        if !self.two_decoy_ok((k, i, j)) {
                            break;
                        }
                        best.consider(self.value((k, i, j)), (k, i, j));
                    }
                }
                best
            })
            .reduce(|| Best::NONE, Best::merge);
        if coarse.index.0 == usize::MAX {
            return coarse;
        }
        self.refine(coarse)
    }

    /// Exhaustive lattice search in a window around `start`, re-centred until
    /// the optimum stops moving.
    fn refine(&self, start: Best) -> Best {
        let window = (self.spec.nu_policy.refine_window / self.spec.mu_grid.step).round() as isize;
        let n = self.spec.mu_grid.len() as isize;
        let fixed = self.spec.fixed_mu.is_some();
        let mut best = start;
        for _ in 0..64 {
            let (k0, i0, j0) = (best.index.0 as isize, best.index.1 as isize, best.index.2 as isize);
            let ks: Vec<usize> = if fixed {
                vec![0]
            } else {
                ((k0 - window).max(1)..=(k0 + window).min(n)).map(|k| k as usize).collect()
            };
            let local = ks
                .into_par_iter()
                .map(|k| {
                    let mut b = Best::NONE;
                    for i in (i0 - window).max(1)..=(i0 + window).min(n) {
                        for j in (j0 - window).max(i + 1)..=(j0 + window).min(n) {
                            let idx = (k, i as usize, j as usize);
                            if self.two_decoy_ok(idx) {
                                b.consider(self.value(idx), idx);
                            }
                        }
                    }
                    b
                })
                .reduce(|| Best::NONE, Best::merge);
            let next = best.merge(local);
            if next.index == best.index {
                return next;
            }
            best = next;
        }
        best
    }

    fn point(&self, distance_m: f64, best: Best) -> OptimumPoint {
        let mut out = OptimumPoint {
            distance_m,
            transmittance: self.det.transmittance,
            best_mu: None,
            best_nu1: None,
            best_nu2: None,
            best_rate: 0.0,
            eve_info_at_optimum: None,
            qber_at_optimum: None,
        };
        let mu_known = self.spec.fixed_mu.is_some();
        if best.value > 0.0 || mu_known {
            let (k, i, j) = best.index;
            let secure = best.value > 0.0;
            let mu = self.mu_of(k);
            out.best_mu = Some(mu);
            out.eve_info_at_optimum = Some(eve_information(self.spec.protocol, mu, self.det.transmittance, &self.spec.irud));
            out.qber_at_optimum = Some(self.signal(k).qber);
            if secure {
                out.best_rate = best.value;
                if i > 0 {
                    out.best_nu1 = Some(self.spec.mu_grid.value(i));
                }
                if j > 0 {
                    out.best_nu2 = Some(self.spec.mu_grid.value(j));
                }
            }
        }
        out
    }
}

/// Eve's information fraction at intensity `mu`: splitting for the BB84
/// family, loss-matched discrimination for the SARG04 family.
pub fn eve_information(protocol: ProtocolKind, mu: f64, transmittance: f64, irud: &IrudParams) -> f64 {
    if !(mu > 0.0 && transmittance > 0.0) {
        return 1.0;
    }
    match protocol {
        ProtocolKind::Bb84 | ProtocolKind::Bb84VacuumWeakDecoy => bb84_info(mu, transmittance).i_eve,
        ProtocolKind::Sarg04 | ProtocolKind::Sarg04VacuumTwoWeakDecoy => {
            sarg04_info(mu, transmittance.min(1.0), irud).0.i_eve
        }
    }
}

/// Best rate and the intensities achieving it at one distance.
pub fn optimize_at_distance(spec: &SweepSpec, distance_m: f64) -> Result<OptimumPoint> {
    spec.validate()?;
    optimize_unchecked(spec, distance_m)
}

fn optimize_unchecked(spec: &SweepSpec, distance_m: f64) -> Result<OptimumPoint> {
    let transmittance = spec.scenario.with_distance(distance_m).transmittance()?;
    let eval = Evaluator::new(spec, transmittance);
    let best = eval.search();
    Ok(eval.point(distance_m, best))
}

/// Largest secure distance, bracketed to within `tolerance_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalDistance {
    /// Secure end of the final bracket.
    pub distance_m: f64,
    /// First insecure distance found.
    pub insecure_m: f64,
    pub at_limit: OptimumPoint,
}

/// Bisection tolerance on the critical distance.
pub const CRITICAL_TOLERANCE_M: f64 = 1e3;

/// Largest distance with a positive optimised rate, or `None` when the link is
/// insecure even at its most transparent distance.
///
/// Scanning starts at the diffraction peak and doubles outward until the rate
/// vanishes, then bisects the last bracket.
pub fn critical_distance(spec: &SweepSpec) -> Result<Option<CriticalDistance>> {
    spec.validate()?;
    let start = spec.scenario.peak_distance_m();
    let first = optimize_unchecked(spec, start)?;
    if !first.secure() {
        return Ok(None);
    }
    let (mut lo, mut hi) = (first, None);
    let mut l = start;
    for _ in 0..40 {
        l *= 2.0;
        let p = optimize_unchecked(spec, l)?;
        if p.secure() {
            lo = p;
        } else {
            hi = Some(l);
            break;
        }
    }
    let Some(mut hi) = hi else {
        return Err(domain("rate stays positive beyond 2^40 peak distances"));
    };
    while hi - lo.distance_m > CRITICAL_TOLERANCE_M {
        let mid = 0.5 * (lo.distance_m + hi);
        let p = optimize_unchecked(spec, mid)?;
        if p.secure() {
            lo = p;
        } else {
            hi = mid;
        }
    }
    Ok(Some(CriticalDistance {
        distance_m: lo.distance_m,
        insecure_m: hi,
        at_limit: lo,
    }))
}

/// Optimum at every distance of the grid, in grid order.
pub fn sweep_curve(spec: &SweepSpec) -> Result<Vec<OptimumPoint>> {
    spec.validate()?;
    spec.distances
        .distances_km()
        .into_iter()
        .map(|km| optimize_unchecked(spec, km * 1e3))
        .collect()
}

/// Optimal signal intensity at the farthest secure distance of the grid.
pub fn max_distance_mu(spec: &SweepSpec) -> Result<Option<f64>> {
    let free = spec.with_fixed_mu(None);
    let curve = sweep_curve(&free)?;
    Ok(curve.iter().rev().find(|p| p.secure()).and_then(|p| p.best_mu))
}

/// Highest optimised rate on the link, reached at the diffraction peak.
pub fn max_rate(spec: &SweepSpec) -> Result<OptimumPoint> {
    optimize_at_distance(spec, spec.scenario.peak_distance_m())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::ScenarioPreset;

    fn spec(protocol: ProtocolKind) -> SweepSpec {
        let p = ScenarioPreset::Uplink5Db;
        SweepSpec::new(protocol, p.link(), p.detector(), DistanceGrid::new(200.0, 1000.0, 200.0))
    }

    #[test]
    fn lattice_sizes() {
        assert_eq!(IntensityGrid::default().len(), 1000);
        assert_eq!(IntensityGrid { step: 0.01, max: 1.0 }.len(), 100);
        assert_eq!(DistanceGrid::new(10.0, 30.0, 10.0).distances_km(), vec![10.0, 20.0, 30.0]);
        assert!(DistanceGrid::new(30.0, 10.0, 10.0).distances_km().is_empty());
        assert_eq!(DistanceGrid::with_points(100.0, 200.0, 5).distances_km().len(), 5);
    }

    #[test]
    fn ties_prefer_smaller_intensity() {
        let mut b = Best::NONE;
        b.consider(1.0, (5, 0, 0));
        b.consider(1.0, (3, 0, 0));
        b.consider(1.0, (4, 0, 0));
        assert_eq!(b.index, (3, 0, 0));
        b.consider(0.5, (1, 0, 0));
        assert_eq!(b.index, (3, 0, 0));
    }

    #[test]
    fn beyond_critical_is_zero() {
        let p = optimize_at_distance(&spec(ProtocolKind::Bb84), 5_000e3).unwrap();
        assert_eq!(p.best_rate, 0.0);
        assert!(p.best_mu.is_none());
    }

    #[test]
    fn nondecoy_optimum_is_exhaustive() {
        let s = spec(ProtocolKind::Bb84);
        let p = optimize_at_distance(&s, 400e3).unwrap();
        let det = s.detector.at(p.transmittance);
        for k in 1..=1000 {
            let mu = k as f64 * 0.001;
            let omega = crate::keyrate::untagged_fraction(ProtocolKind::Bb84, mu, p.transmittance, &s.irud).unwrap();
            let r = crate::keyrate::rate_nondecoy(ProtocolKind::Bb84.into(), mu, &det, omega).unwrap();
            assert!(r.rate_bits_per_pulse <= p.best_rate);
        }
    }

    #[test]
    fn bb84_optimum_mu_falls_with_distance() {
        let s = spec(ProtocolKind::Bb84);
        let near = optimize_at_distance(&s, 300e3).unwrap().best_mu.unwrap();
        let far = optimize_at_distance(&s, 700e3).unwrap().best_mu.unwrap();
        assert!(far < near, "{near} -> {far}");
    }

    #[test]
    fn fixed_mu_is_respected() {
        let s = spec(ProtocolKind::Bb84VacuumWeakDecoy).with_fixed_mu(Some(0.5));
        let p = optimize_at_distance(&s, 500e3).unwrap();
        assert_eq!(p.best_mu, Some(0.5));
        assert!(p.best_nu1.unwrap() < 0.5);
    }

    #[test]
    fn empty_sweep() {
        let mut s = spec(ProtocolKind::Bb84);
        s.distances = DistanceGrid::new(500.0, 100.0, 10.0);
        assert!(sweep_curve(&s).unwrap().is_empty());
    }

    #[test]
    fn invalid_specs() {
        let mut s = spec(ProtocolKind::Bb84);
        s.mu_grid = IntensityGrid { step: 0.001, max: 0.0 };
        assert!(optimize_at_distance(&s, 1e5).is_err());
        let mut s = spec(ProtocolKind::Bb84);
        s.nu_policy.coarse_step = 0.0015;
        assert!(optimize_at_distance(&s, 1e5).is_err());
        let s = spec(ProtocolKind::Bb84).with_fixed_mu(Some(-1.0));
        assert!(optimize_at_distance(&s, 1e5).is_err());
    }
}
