//! The four reference links and the TOML scenario file that overrides them.
//!
//! Precedence when resolving a scenario: explicit overrides, then the file,
//! then the named preset.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{AtmosphereKind, AtmosphereRegime, LinkScenario, TelescopeGeometry};
use crate::error::{domain, Error, Result};
use crate::keyrate::Detector;

pub const WAVELENGTH_M: f64 = 650e-9;
pub const RECEIVER_EFFICIENCY: f64 = 0.65;
pub const DARK_COUNT_YIELD: f64 = 50e-6;

/// 1 m ground telescope.
pub fn ground_telescope() -> TelescopeGeometry {
    TelescopeGeometry {
        primary_radius_m: 0.5,
        secondary_radius_m: 0.05,
    }
}

/// 30 cm satellite telescope.
pub fn satellite_telescope() -> TelescopeGeometry {
    TelescopeGeometry {
        primary_radius_m: 0.15,
        secondary_radius_m: 0.01,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioPreset {
    Downlink,
    Intersatellite,
    Uplink5Db,
    Uplink11Db,
}

impl ScenarioPreset {
    pub const ALL: [ScenarioPreset; 4] = [
        ScenarioPreset::Downlink,
        ScenarioPreset::Intersatellite,
        ScenarioPreset::Uplink5Db,
        ScenarioPreset::Uplink11Db,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioPreset::Downlink => "downlink",
            ScenarioPreset::Intersatellite => "intersatellite",
            ScenarioPreset::Uplink5Db => "uplink5db",
            ScenarioPreset::Uplink11Db => "uplink11db",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        let key = name.to_ascii_lowercase().replace(['-', '_'], "");
        Self::ALL
            .into_iter()
            .find(|p| p.name() == key || (key == "intersat" && *p == ScenarioPreset::Intersatellite))
            .ok_or_else(|| Error::Unknown {
                kind: "scenario",
                name: name.to_string(),
            })
    }

    pub fn atmosphere(self) -> AtmosphereRegime {
        match self {
            ScenarioPreset::Downlink => AtmosphereRegime::downlink_clear(1.0),
            ScenarioPreset::Intersatellite => AtmosphereRegime::vacuum(),
            ScenarioPreset::Uplink5Db => AtmosphereRegime::uplink(5.0, 1.0),
            ScenarioPreset::Uplink11Db => AtmosphereRegime::uplink(11.0, 1.0),
        }
    }

    /// Link at its diffraction peak.
    pub fn link(self) -> LinkScenario {
        let (transmitter, receiver) = match self {
            ScenarioPreset::Downlink => (satellite_telescope(), ground_telescope()),
            ScenarioPreset::Intersatellite => (satellite_telescope(), satellite_telescope()),
            ScenarioPreset::Uplink5Db | ScenarioPreset::Uplink11Db => (ground_telescope(), satellite_telescope()),
        };
        let link = LinkScenario {
            transmitter,
            receiver,
            wavelength_m: WAVELENGTH_M,
            atmosphere: self.atmosphere(),
            receiver_efficiency: RECEIVER_EFFICIENCY,
            distance_m: 1.0,
            extra_loss_db: 0.0,
        };
        link.with_distance(link.peak_distance_m())
    }

    pub fn detector(self) -> Detector {
        Detector::with_dark_counts(DARK_COUNT_YIELD)
    }

    /// Distance range beyond every critical distance of the link, starting at
    /// the diffraction peak where the rate is already monotone.
    pub fn default_range_km(self) -> (f64, f64) {
        let start = (self.link().peak_distance_m() / 1e3 / 10.0).ceil() * 10.0;
        let end = match self {
            ScenarioPreset::Downlink => 20_000.0,
            ScenarioPreset::Intersatellite => 6_000.0,
            ScenarioPreset::Uplink5Db => 10_000.0,
            ScenarioPreset::Uplink11Db => 6_000.0,
        };
        (start, end)
    }

    pub fn scenario(self) -> Scenario {
        let (distance_min_km, distance_max_km) = self.default_range_km();
        Scenario {
            name: self.name().to_string(),
            link: self.link(),
            detector: self.detector(),
            distance_min_km,
            distance_max_km,
        }
    }
}

impl std::fmt::Display for ScenarioPreset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

/// Resolved link, detector and distance range.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub link: LinkScenario,
    pub detector: Detector,
    pub distance_min_km: f64,
    pub distance_max_km: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.link.validate()?;
        if !(self.detector.y0 >= 0.0 && self.detector.y0 <= 1.0) {
            return Err(domain(format!("dark-count yield must be in [0, 1], got {}", self.detector.y0)));
        }
        if !(self.distance_min_km > 0.0 && self.distance_max_km >= self.distance_min_km) {
            return Err(domain("distance range must satisfy 0 < min <= max"));
        }
        Ok(())
    }
}

/// On-disk scenario description. Every key is optional; missing keys fall
/// back to the preset named by `base` (downlink when absent).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: Option<String>,
    pub base: Option<String>,
    pub atmosphere: Option<AtmosphereKind>,
    pub tx_primary_radius_m: Option<f64>,
    pub tx_secondary_radius_m: Option<f64>,
    pub rx_primary_radius_m: Option<f64>,
    pub rx_secondary_radius_m: Option<f64>,
    pub wavelength_nm: Option<f64>,
    pub turb_loss_db: Option<f64>,
    pub scatter_loss_db: Option<f64>,
    pub extra_loss_db: Option<f64>,
    pub receiver_efficiency: Option<f64>,
    pub dark_count_yield: Option<f64>,
    pub distance_min_km: Option<f64>,
    pub distance_max_km: Option<f64>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat config of scalars always serialises")
    }

    /// Fully populated config that resolves back to `scenario`.
    pub fn from_scenario(scenario: &Scenario) -> Self {
        let l = &scenario.link;
        Self {
            name: Some(scenario.name.clone()),
            base: None,
            atmosphere: Some(l.atmosphere.kind),
            tx_primary_radius_m: Some(l.transmitter.primary_radius_m),
            tx_secondary_radius_m: Some(l.transmitter.secondary_radius_m),
            rx_primary_radius_m: Some(l.receiver.primary_radius_m),
            rx_secondary_radius_m: Some(l.receiver.secondary_radius_m),
            wavelength_nm: Some(l.wavelength_m * 1e9),
            turb_loss_db: Some(l.atmosphere.turb_loss_db),
            scatter_loss_db: Some(l.atmosphere.scatter_abs_loss_db),
            extra_loss_db: Some(l.extra_loss_db),
            receiver_efficiency: Some(l.receiver_efficiency),
            dark_count_yield: Some(scenario.detector.y0),
            distance_min_km: Some(scenario.distance_min_km),
            distance_max_km: Some(scenario.distance_max_km),
        }
    }

    /// Apply every present key on top of `base`.
    pub fn overlay(&self, mut s: Scenario) -> Scenario {
        if let Some(n) = &self.name {
            s.name = n.clone();
        }
        let l = &mut s.link;
        if let Some(k) = self.atmosphere {
            l.atmosphere.kind = k;
        }
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut l.transmitter.primary_radius_m, self.tx_primary_radius_m);
        set(&mut l.transmitter.secondary_radius_m, self.tx_secondary_radius_m);
        set(&mut l.receiver.primary_radius_m, self.rx_primary_radius_m);
        set(&mut l.receiver.secondary_radius_m, self.rx_secondary_radius_m);
        if let Some(nm) = self.wavelength_nm {
            l.wavelength_m = nm * 1e-9;
        }
        set(&mut l.atmosphere.turb_loss_db, self.turb_loss_db);
        set(&mut l.atmosphere.scatter_abs_loss_db, self.scatter_loss_db);
        set(&mut l.extra_loss_db, self.extra_loss_db);
        set(&mut l.receiver_efficiency, self.receiver_efficiency);
        set(&mut s.detector.y0, self.dark_count_yield);
        set(&mut s.distance_min_km, self.distance_min_km);
        set(&mut s.distance_max_km, self.distance_max_km);
        s.link = s.link.with_distance(s.link.peak_distance_m());
        s
    }

    /// Resolve against the base preset and validate.
    pub fn resolve(&self) -> Result<Scenario> {
        let base = match &self.base {
            Some(b) => ScenarioPreset::from_name(b)?,
            None => ScenarioPreset::Downlink,
        };
        let s = self.overlay(base.scenario());
        s.validate()?;
        Ok(s)
    }
}
