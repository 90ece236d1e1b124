//! Entry points behind the `satqkd` binary: CSV sweeps, the reference tables,
//! Eve-information crossings and single critical distances.
//!
//! Everything here returns data or writes to a caller-supplied sink, so the
//! binary stays a thin argument parser.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::adversary::{bb84_info, sarg04_info, IrudParams};
use crate::channel::{db_from_transmittance, transmittance_from_db};
use crate::error::{domain, Result};
use crate::keyrate::ProtocolKind;
use crate::optimizer::{
    critical_distance, max_distance_mu, max_rate, sweep_curve, CriticalDistance, DistanceGrid, OptimumPoint, SweepSpec,
};
use crate::presets::{Scenario, ScenarioPreset};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "SATQKD_THREADS";

/// Size the global worker pool from [`THREADS_ENV`] when it is set.
///
/// Returns the thread count in effect. A pool that was already initialised is
/// left alone.
pub fn init_thread_pool() -> Result<usize> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| domain(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(domain(format!("{THREADS_ENV} must be a positive integer, got 0")));
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}

/// Stable CSV columns of a sweep.
pub const SWEEP_HEADER: [&str; 10] = [
    "distance_km",
    "loss_db",
    "protocol",
    "mode",
    "mu",
    "nu1",
    "nu2",
    "rate_bits_per_pulse",
    "eve_info",
    "qber",
];

/// Column appended when a pulse rate is supplied.
pub const RATE_PER_SECOND_COLUMN: &str = "rate_bits_per_second";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Intensities re-optimised at every distance.
    Optimized,
    /// Signal intensity pinned, decoys still optimised.
    FixedMu,
}

impl SweepMode {
    pub fn name(self) -> &'static str {
        match self {
            SweepMode::Optimized => "optimized",
            SweepMode::FixedMu => "fixed-mu",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "optimized" => Ok(SweepMode::Optimized),
            "fixed-mu" => Ok(SweepMode::FixedMu),
            _ => Err(crate::Error::Unknown {
                kind: "mode",
                name: name.to_string(),
            }),
        }
    }
}

/// Parse `all` or a comma-separated list of protocol names.
pub fn parse_protocols(list: &str) -> Result<Vec<ProtocolKind>> {
    if list.trim() == "all" {
        return Ok(ProtocolKind::ALL.to_vec());
    }
    list.split(',').map(|s| ProtocolKind::from_name(s.trim())).collect()
}

#[derive(Debug, Clone)]
pub struct SweepRequest {
    pub scenario: Scenario,
    pub protocols: Vec<ProtocolKind>,
    pub mode: SweepMode,
    /// Pinned intensity for [`SweepMode::FixedMu`]; when absent, the optimum at
    /// the farthest secure grid distance is used.
    pub mu: Option<f64>,
    pub step_km: f64,
    pub pulse_rate_hz: Option<f64>,
    pub irud: IrudParams,
}

impl SweepRequest {
    pub fn new(scenario: Scenario, protocols: Vec<ProtocolKind>) -> Self {
        Self {
            scenario,
            protocols,
            mode: SweepMode::Optimized,
            mu: None,
            step_km: 10.0,
            pulse_rate_hz: None,
            irud: IrudParams::default(),
        }
    }

    pub fn spec(&self, protocol: ProtocolKind) -> SweepSpec {
        let mut spec = SweepSpec::new(
            protocol,
            self.scenario.link,
            self.scenario.detector,
            DistanceGrid::new(self.scenario.distance_min_km, self.scenario.distance_max_km, self.step_km),
        );
        spec.irud = self.irud;
        spec
    }

    fn validate(&self) -> Result<()> {
        if !(self.step_km > 0.0) {
            return Err(domain(format!("distance step must be positive, got {}", self.step_km)));
        }
        if let Some(r) = self.pulse_rate_hz {
            if !(r > 0.0 && r.is_finite()) {
                return Err(domain(format!("pulse rate must be positive, got {r}")));
            }
        }
        self.scenario.link.validate()
    }
}

/// One protocol's curve plus the intensity that was pinned, if any.
#[derive(Debug, Clone)]
pub struct SweepSeries {
    pub protocol: ProtocolKind,
    pub mode: SweepMode,
    pub fixed_mu: Option<f64>,
    pub points: Vec<OptimumPoint>,
}

pub fn run_sweep(req: &SweepRequest) -> Result<Vec<SweepSeries>> {
    req.validate()?;
    let mut protocols = req.protocols.clone();
    protocols.sort_by_key(|p| ProtocolKind::ALL.iter().position(|q| q == p));
    protocols.dedup();
    protocols
        .into_iter()
        .map(|protocol| {
            let spec = req.spec(protocol);
            let fixed_mu = match req.mode {
                SweepMode::Optimized => None,
                SweepMode::FixedMu => match req.mu {
                    Some(mu) => Some(mu),
                    None => max_distance_mu(&spec)?,
                },
            };
            let points = sweep_curve(&spec.with_fixed_mu(fixed_mu))?;
            Ok(SweepSeries {
                protocol,
                mode: req.mode,
                fixed_mu,
                points,
            })
        })
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write sweep rows ordered by protocol, then distance.
pub fn write_sweep_csv<W: Write>(series: &[SweepSeries], pulse_rate_hz: Option<f64>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = SWEEP_HEADER.to_vec();
    if pulse_rate_hz.is_some() {
        header.push(RATE_PER_SECOND_COLUMN);
    }
    w.write_record(&header)?;
    for s in series {
        for p in &s.points {
            let loss = db_from_transmittance(p.transmittance)?;
            let mut row = vec![
                (p.distance_m / 1e3).to_string(),
                loss.to_string(),
                s.protocol.name().to_string(),
                s.mode.name().to_string(),
                cell(p.best_mu),
                cell(p.best_nu1),
                cell(p.best_nu2),
                p.best_rate.to_string(),
                cell(p.eve_info_at_optimum),
                cell(p.qber_at_optimum),
            ];
            if let Some(hz) = pulse_rate_hz {
                row.push((p.best_rate * hz).to_string());
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Run a sweep and write it to `path`.
pub fn cmd_sweep(req: &SweepRequest, path: &Path) -> Result<()> {
    let series = run_sweep(req)?;
    let file = std::fs::File::create(path)?;
    write_sweep_csv(&series, req.pulse_rate_hz, std::io::BufWriter::new(file))
}

/// Reference critical distances in km, rows in [`ScenarioPreset::ALL`] order
/// and columns in [`ProtocolKind::ALL`] order. `None` marks a link that is
/// never secure.
pub const REFERENCE_CRITICAL_KM: [[Option<f64>; 4]; 4] = [
    [Some(1540.0), Some(3290.0), Some(9450.0), Some(14100.0)],
    [Some(430.0), Some(920.0), Some(2660.0), Some(3900.0)],
    [Some(460.0), Some(1520.0), Some(4650.0), Some(6980.0)],
    [None, Some(500.0), Some(2200.0), Some(3460.0)],
];

/// Reference maximum rates in bits per pulse, same layout as
/// [`REFERENCE_CRITICAL_KM`].
pub const REFERENCE_MAX_RATE: [[Option<f64>; 4]; 4] = [
    [Some(1.7e-2), Some(2.4e-2), Some(4.4e-2), Some(4.6e-2)],
    [Some(2.0e-2), Some(2.6e-2), Some(4.8e-2), Some(5.0e-2)],
    [Some(1.4e-4), Some(1.2e-3), Some(5.8e-3), Some(6.5e-3)],
    [None, Some(7.5e-5), Some(1.4e-3), Some(1.6e-3)],
];

#[derive(Debug, Clone, Copy)]
pub struct TableEntry {
    pub preset: ScenarioPreset,
    pub protocol: ProtocolKind,
    pub critical: Option<CriticalDistance>,
    pub max_rate: OptimumPoint,
    pub reference_critical_km: Option<f64>,
    pub reference_max_rate: Option<f64>,
}

impl TableEntry {
    pub fn critical_km(&self) -> Option<f64> {
        self.critical.map(|c| c.distance_m / 1e3)
    }

    /// Positive maximum rate, `None` when the link is never secure.
    pub fn rate(&self) -> Option<f64> {
        self.max_rate.secure().then_some(self.max_rate.best_rate)
    }
}

/// Relative deviation `(computed - reference) / reference`.
pub fn relative_deviation(computed: f64, reference: f64) -> f64 {
    (computed - reference) / reference
}

/// Critical distance and maximum rate for one preset and protocol.
pub fn table_entry(preset: ScenarioPreset, protocol: ProtocolKind, irud: &IrudParams) -> Result<TableEntry> {
    let row = ScenarioPreset::ALL.iter().position(|p| *p == preset).expect("preset listed");
    let col = ProtocolKind::ALL.iter().position(|p| *p == protocol).expect("protocol listed");
    let s = preset.scenario();
    let mut spec = SweepSpec::new(protocol, s.link, s.detector, DistanceGrid::new(1.0, 1.0, 1.0));
    spec.irud = *irud;
    Ok(TableEntry {
        preset,
        protocol,
        critical: critical_distance(&spec)?,
        max_rate: max_rate(&spec)?,
        reference_critical_km: REFERENCE_CRITICAL_KM[row][col],
        reference_max_rate: REFERENCE_MAX_RATE[row][col],
    })
}

/// All sixteen entries, scenarios outer and protocols inner.
pub fn compute_tables(irud: &IrudParams) -> Result<Vec<TableEntry>> {
    let mut out = Vec::with_capacity(16);
    for preset in ScenarioPreset::ALL {
        for protocol in ProtocolKind::ALL {
            out.push(table_entry(preset, protocol, irud)?);
        }
    }
    Ok(out)
}

fn compare(computed: Option<f64>, reference: Option<f64>, fmt: impl Fn(f64) -> String) -> String {
    let c = computed.map(&fmt).unwrap_or_else(|| "none".into());
    let r = reference.map(&fmt).unwrap_or_else(|| "none".into());
    let d = match (computed, reference) {
        (Some(c), Some(r)) => format!("{:+.1}%", 100.0 * relative_deviation(c, r)),
        (None, None) => "match".into(),
        _ => "mismatch".into(),
    };
    format!("{c:>10} {r:>10} {d:>9}")
}

/// Side-by-side text report of computed and reference values.
pub fn render_tables(entries: &[TableEntry]) -> String {
    let mut s = String::new();
    let head = format!(
        "{:<15} {:<13} {:>10} {:>10} {:>9}",
        "scenario", "protocol", "computed", "reference", "deviation"
    );
    let _ = writeln!(s, "Critical distance [km]\n{head}");
    for e in entries {
        let body = compare(e.critical_km(), e.reference_critical_km, |x| format!("{x:.0}"));
        let _ = writeln!(s, "{:<15} {:<13} {body}", e.preset.name(), e.protocol.name());
    }
    let _ = writeln!(s, "\nMaximum rate [bits/pulse]\n{head}");
    for e in entries {
        let body = compare(e.rate(), e.reference_max_rate, |x| format!("{x:.2e}"));
        let _ = writeln!(s, "{:<15} {:<13} {body}", e.preset.name(), e.protocol.name());
    }
    s
}

pub fn cmd_tables(irud: &IrudParams) -> Result<String> {
    Ok(render_tables(&compute_tables(irud)?))
}

/// Loss (dB) at which Eve's information first reaches one, for a fixed
/// intensity. `None` when it stays below one up to `max_loss_db`.
pub fn crossing_loss_db(protocol: ProtocolKind, mu: f64, irud: &IrudParams) -> Result<Option<f64>> {
    crossing_loss_db_within(protocol, mu, irud, 300.0)
}

pub fn crossing_loss_db_within(protocol: ProtocolKind, mu: f64, irud: &IrudParams, max_loss_db: f64) -> Result<Option<f64>> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(domain(format!("mu must be positive, got {mu}")));
    }
    irud.validate()?;
    let saturated = |db: f64| {
        let delta = transmittance_from_db(db);
        let raw = match protocol {
            ProtocolKind::Bb84 | ProtocolKind::Bb84VacuumWeakDecoy => bb84_info(mu, delta).i_eve_raw,
            _ => sarg04_info(mu, delta, irud).0.i_eve_raw,
        };
        raw >= 1.0
    };
    if saturated(0.0) {
        return Ok(Some(0.0));
    }
    if !saturated(max_loss_db) {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, max_loss_db);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if saturated(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Crossings at the reference intensities: BB84 at 0.1, SARG04 at 0.2.
pub fn cmd_crossing(irud: &IrudParams) -> Result<String> {
    let mut s = String::new();
    for (protocol, mu) in [(ProtocolKind::Bb84, 0.1), (ProtocolKind::Sarg04, 0.2)] {
        let line = match crossing_loss_db(protocol, mu, irud)? {
            Some(db) => format!("{protocol} mu={mu} crossing_loss_db={db:.3}"),
            None => format!("{protocol} mu={mu} crossing_loss_db=none"),
        };
        let _ = writeln!(s, "{line}");
    }
    Ok(s)
}

pub fn cmd_critical_distance(scenario: &Scenario, protocol: ProtocolKind, irud: &IrudParams) -> Result<String> {
    let mut spec = SweepSpec::new(protocol, scenario.link, scenario.detector, DistanceGrid::new(1.0, 1.0, 1.0));
    spec.irud = *irud;
    Ok(match critical_distance(&spec)? {
        Some(c) => format!(
            "{} {} critical_distance_km={:.0} bracket_km=[{:.3}, {:.3}]",
            scenario.name,
            protocol,
            c.distance_m / 1e3,
            c.distance_m / 1e3,
            c.insecure_m / 1e3
        ),
        None => format!("{} {} critical_distance_km=none", scenario.name, protocol),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protocol_lists() {
        assert_eq!(parse_protocols("all").unwrap().len(), 4);
        assert_eq!(
            parse_protocols("sarg04, bb84").unwrap(),
            vec![ProtocolKind::Sarg04, ProtocolKind::Bb84]
        );
        assert!(parse_protocols("e91").is_err());
        assert!(SweepMode::from_name("fixed-mu").is_ok());
        assert!(SweepMode::from_name("fixed").is_err());
    }

    #[test]
    fn bb84_crossing_closed_form() {
        let db = crossing_loss_db(ProtocolKind::Bb84, 0.1, &IrudParams::default()).unwrap().unwrap();
        let tail = crate::source::poisson_tail(0.1, 2).unwrap();
        let delta = -(1.0 - tail).ln() / 0.1;
        assert!((db - db_from_transmittance(delta).unwrap()).abs() < 1e-6);
        assert!((db - 13.3).abs() < 0.05);
    }

    #[test]
    fn crossing_grows_as_mu_shrinks() {
        let irud = IrudParams::default();
        let a = crossing_loss_db(ProtocolKind::Bb84, 0.1, &irud).unwrap().unwrap();
        let b = crossing_loss_db(ProtocolKind::Bb84, 0.01, &irud).unwrap().unwrap();
        let c = crossing_loss_db(ProtocolKind::Sarg04, 0.02, &irud).unwrap().unwrap();
        let d = crossing_loss_db(ProtocolKind::Sarg04, 0.2, &irud).unwrap().unwrap();
        assert!(b > a && c > d);
        assert!(crossing_loss_db(ProtocolKind::Bb84, 0.0, &irud).is_err());
    }

    #[test]
    fn empty_range_gives_header_only() {
        let mut s = ScenarioPreset::Uplink5Db.scenario();
        s.distance_min_km = 500.0;
        s.distance_max_km = 100.0;
        let req = SweepRequest::new(s, vec![ProtocolKind::Bb84]);
        let series = run_sweep(&req).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&series, None, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", SWEEP_HEADER.join(",")));
    }

    #[test]
    fn reference_tables_layout() {
        assert_eq!(REFERENCE_CRITICAL_KM[0], [Some(1540.0), Some(3290.0), Some(9450.0), Some(14100.0)]);
        assert!(REFERENCE_CRITICAL_KM[3][0].is_none() && REFERENCE_MAX_RATE[3][0].is_none());
        assert_eq!(REFERENCE_MAX_RATE[1], [Some(2.0e-2), Some(2.6e-2), Some(4.8e-2), Some(5.0e-2)]);
    }
}
