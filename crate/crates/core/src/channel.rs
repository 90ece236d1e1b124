//! Free-space optical channel transmittance.
//!
//! Internal state is always a transmittance in `[0, 1]`. Anything reported in
//! decibels is a positive loss, `-10 log10(δ)`.
//!
//! The total budget is the product of three factors:
//!
//! ```text
//! δ = δ_diff · δ_atm · δ_rec
//! ```
//!
//! where `δ_diff` is the Gaussian-beam diffraction and Cassegrain obscuration
//! term between the two telescopes, `δ_atm` collects turbulence, scattering and
//! absorption, and `δ_rec` is the receiver (detector) efficiency.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Primary and secondary mirror radii of one Cassegrain telescope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelescopeGeometry {
    pub primary_radius_m: f64,
    pub secondary_radius_m: f64,
}

impl TelescopeGeometry {
    pub fn new(primary_radius_m: f64, secondary_radius_m: f64) -> Result<Self> {
        let g = Self {
            primary_radius_m,
            secondary_radius_m,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.secondary_radius_m > 0.0
            && self.secondary_radius_m < self.primary_radius_m
            && self.primary_radius_m.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Geometry {
                primary: self.primary_radius_m,
                secondary: self.secondary_radius_m,
            })
        }
    }

    /// Obscuration ratio `b / R`.
    pub fn obscuration(&self) -> f64 {
        self.secondary_radius_m / self.primary_radius_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtmosphereKind {
    /// No atmosphere on the path (intersatellite).
    Vacuum,
    /// Space-to-ground; turbulence is negligible because the beam is already
    /// wide when it reaches the atmosphere.
    DownlinkClear,
    /// Ground-to-space with a fixed turbulence loss.
    UplinkFixedTurb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtmosphereRegime {
    pub kind: AtmosphereKind,
    pub turb_loss_db: f64,
    pub scatter_abs_loss_db: f64,
}

impl AtmosphereRegime {
    pub fn vacuum() -> Self {
        Self {
            kind: AtmosphereKind::Vacuum,
            turb_loss_db: 0.0,
            scatter_abs_loss_db: 0.0,
        }
    }

    pub fn downlink_clear(scatter_abs_loss_db: f64) -> Self {
        Self {
            kind: AtmosphereKind::DownlinkClear,
            turb_loss_db: 0.0,
            scatter_abs_loss_db,
        }
    }

    pub fn uplink(turb_loss_db: f64, scatter_abs_loss_db: f64) -> Self {
        Self {
            kind: AtmosphereKind::UplinkFixedTurb,
            turb_loss_db,
            scatter_abs_loss_db,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.turb_loss_db >= 0.0 && self.scatter_abs_loss_db >= 0.0) {
            return Err(domain("atmospheric losses must be non-negative dB"));
        }
        match self.kind {
            AtmosphereKind::Vacuum if self.turb_loss_db != 0.0 || self.scatter_abs_loss_db != 0.0 => {
                Err(domain("vacuum path cannot carry atmospheric loss"))
            }
            AtmosphereKind::DownlinkClear if self.turb_loss_db != 0.0 => {
                Err(domain("downlink regime carries no turbulence loss"))
            }
            _ => Ok(()),
        }
    }

    /// `δ_atm = δ_scatt · δ_abs · δ_turb`.
    pub fn transmittance(&self) -> f64 {
        transmittance_from_db(self.turb_loss_db + self.scatter_abs_loss_db)
    }
}

/// Full description of one link at one distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkScenario {
    pub transmitter: TelescopeGeometry,
    pub receiver: TelescopeGeometry,
    pub wavelength_m: f64,
    pub atmosphere: AtmosphereRegime,
    pub receiver_efficiency: f64,
    pub distance_m: f64,
    /// Lumped pointing/misalignment loss folded into the geometric term.
    #[serde(default)]
    pub extra_loss_db: f64,
}

impl LinkScenario {
    pub fn validate(&self) -> Result<()> {
        self.transmitter.validate()?;
        self.receiver.validate()?;
        self.atmosphere.validate()?;
        if !(self.distance_m > 0.0) {
            return Err(domain(format!("distance must be positive, got {}", self.distance_m)));
        }
        if !(self.wavelength_m > 0.0) {
            return Err(domain("wavelength must be positive"));
        }
        if !(self.receiver_efficiency > 0.0 && self.receiver_efficiency <= 1.0) {
            return Err(domain(format!(
                "receiver efficiency must be in (0, 1], got {}",
                self.receiver_efficiency
            )));
        }
        if !(self.extra_loss_db >= 0.0) {
            return Err(domain("extra loss must be non-negative dB"));
        }
        Ok(())
    }

    pub fn with_distance(mut self, distance_m: f64) -> Self {
        self.distance_m = distance_m;
        self
    }

    pub fn with_distance_km(self, distance_km: f64) -> Self {
        self.with_distance(distance_km * 1e3)
    }

    pub fn diffraction(&self) -> Result<f64> {
        diffraction_transmittance(
            &self.transmitter,
            &self.receiver,
            self.wavelength_m,
            self.distance_m,
        )
    }

    /// Total transmittance `δ`.
    pub fn transmittance(&self) -> Result<f64> {
        total_transmittance(self)
    }

    /// Distance at which the diffraction term peaks.
    ///
    /// Closer than this the beam footprint shrinks into the receiver's
    /// secondary-mirror shadow, so the transmittance rises with distance.
    /// Beyond it every loss term is monotone in distance.
    pub fn peak_distance_m(&self) -> f64 {
        let g2 = self.receiver.obscuration().powi(2);
        // maximiser of exp(-2 g² x) - exp(-2 x) over x = α_r²
        let x = (1.0 / g2).ln() / (2.0 * (1.0 - g2));
        let alpha_r = x.sqrt();
        PI * self.transmitter.primary_radius_m * self.receiver.primary_radius_m
            / (SQRT_2 * self.wavelength_m * alpha_r)
    }
}

/// Diffraction and obscuration transmittance between two Cassegrain telescopes
/// for a Gaussian beam whose waist equals the transmitter primary radius.
pub fn diffraction_transmittance(
    tx: &TelescopeGeometry,
    rx: &TelescopeGeometry,
    wavelength_m: f64,
    distance_m: f64,
) -> Result<f64> {
    tx.validate()?;
    rx.validate()?;
    if !(distance_m > 0.0) {
        return Err(domain(format!("distance must be positive, got {distance_m}")));
    }
    if !(wavelength_m > 0.0) {
        return Err(domain("wavelength must be positive"));
    }
    let gamma_t = tx.obscuration();
    let gamma_r = rx.obscuration();
    let beam_tx = tx.primary_radius_m;
    let beam_rx = SQRT_2 * wavelength_m * distance_m / (PI * tx.primary_radius_m);
    let alpha_t = tx.primary_radius_m / beam_tx;
    let alpha_r = rx.primary_radius_m / beam_rx;
    Ok(annulus_factor(gamma_t, alpha_t) * annulus_factor(gamma_r, alpha_r))
}

/// Fraction of a Gaussian beam falling on an annular aperture.
fn annulus_factor(gamma: f64, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    (-2.0 * gamma * gamma * a2).exp() - (-2.0 * a2).exp()
}

/// Fried parameter at `wavelength_m`, scaled as `λ^{6/5}` from a reference.
pub fn fried_parameter(wavelength_m: f64, fried_ref_r0_m: f64, fried_ref_wavelength_m: f64) -> f64 {
    fried_ref_r0_m * (wavelength_m / fried_ref_wavelength_m).powf(1.2)
}

/// Uplink turbulence transmittance from the extra beam divergence `λ / r0`.
pub fn turbulence_transmittance_model(
    wavelength_m: f64,
    tx_primary_radius_m: f64,
    fried_ref_r0_m: f64,
    fried_ref_wavelength_m: f64,
) -> Result<f64> {
    if !(wavelength_m > 0.0
        && tx_primary_radius_m > 0.0
        && fried_ref_r0_m > 0.0
        && fried_ref_wavelength_m > 0.0)
    {
        return Err(domain("turbulence model lengths must be positive"));
    }
    let r0 = fried_parameter(wavelength_m, fried_ref_r0_m, fried_ref_wavelength_m);
    Ok(turbulence_transmittance_from_divergence(
        wavelength_m / tx_primary_radius_m,
        wavelength_m / r0,
    ))
}

/// `θ_d² / (θ_d² + θ_turb²)` for a diffraction divergence `θ_d = λ/R_t`.
pub fn turbulence_transmittance_from_divergence(diffraction_rad: f64, turbulence_rad: f64) -> f64 {
    let d2 = diffraction_rad * diffraction_rad;
    d2 / (d2 + turbulence_rad * turbulence_rad)
}

pub fn total_transmittance(scenario: &LinkScenario) -> Result<f64> {
    scenario.validate()?;
    let diff = scenario.diffraction()? * transmittance_from_db(scenario.extra_loss_db);
    Ok(diff * scenario.atmosphere.transmittance() * scenario.receiver_efficiency)
}

/// Parameters of the aperture-ratio uplink budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltUplinkParams {
    pub atm_loss_db: f64,
    pub tx_diameter_m: f64,
    pub rx_diameter_m: f64,
    pub atm_divergence_rad: f64,
    pub pointing_loss: f64,
    pub tx_transmission: f64,
    pub rx_transmission: f64,
}

impl Default for AltUplinkParams {
    fn default() -> Self {
        Self {
            atm_loss_db: 1.0,
            tx_diameter_m: 1.0,
            rx_diameter_m: 0.3,
            atm_divergence_rad: 0.0,
            pointing_loss: 0.0,
            tx_transmission: 0.8,
            rx_transmission: 0.8,
        }
    }
}

/// Aperture-ratio uplink budget, excluding detector efficiency.
///
/// Meant as a cross-check on [`total_transmittance`]; the presets do not use
/// it. The geometric ratio exceeds one at short range, so the result is
/// capped at 1.
pub fn alt_uplink_transmittance(distance_m: f64, wavelength_m: f64, p: &AltUplinkParams) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(domain(format!("distance must be positive, got {distance_m}")));
    }
    if !(0.0..1.0).contains(&p.pointing_loss) {
        return Err(domain("pointing loss must be in [0, 1)"));
    }
    let in_unit = |x: f64| x > 0.0 && x <= 1.0;
    if !(in_unit(p.tx_transmission) && in_unit(p.rx_transmission)) {
        return Err(domain("telescope transmissions must be in (0, 1]"));
    }
    if !(p.tx_diameter_m > 0.0 && p.rx_diameter_m > 0.0) {
        return Err(domain("telescope diameters must be positive"));
    }
    let theta_t = wavelength_m / p.tx_diameter_m;
    let spread = distance_m * distance_m * (theta_t * theta_t + p.atm_divergence_rad.powi(2))
        / (p.rx_diameter_m * p.rx_diameter_m);
    let optics = p.tx_transmission * (1.0 - p.pointing_loss) * p.rx_transmission;
    let loss = spread / optics * 10f64.powf(p.atm_loss_db / 10.0);
    Ok((1.0 / loss).min(1.0))
}

/// Positive loss in dB for a transmittance in `(0, 1]`.
pub fn db_from_transmittance(transmittance: f64) -> Result<f64> {
    if !(transmittance > 0.0) {
        return Err(domain(format!("transmittance must be positive, got {transmittance}")));
    }
    // adding 0.0 turns -0.0 into 0.0 at unit transmittance
    Ok(-10.0 * transmittance.log10() + 0.0)
}

pub fn transmittance_from_db(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}
