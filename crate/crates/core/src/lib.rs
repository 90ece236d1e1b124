//! Secret-key rates for satellite quantum key distribution.
//!
//! The crate chains four models:
//!
//! * [`channel`]: diffraction, atmosphere and detector losses of uplink,
//!   downlink and intersatellite optical links;
//! * [`source`]: Poisson photon statistics of a weak coherent source;
//! * [`adversary`]: photon-number splitting against BB84 and unambiguous state
//!   discrimination against SARG04;
//! * [`keyrate`]: asymptotic rates with and without decoy states.
//!
//! [`optimizer`] searches the source intensities at each distance and finds
//! critical distances; [`presets`] holds the four reference links and the
//! TOML scenario format; [`cli`] produces CSV sweeps and comparison reports.
//!
//! ```
//! use satqkd::keyrate::{rate_bb84_decoy, Detector};
//!
//! let det = Detector::default().at(1e-3);
//! let report = rate_bb84_decoy(0.5, 0.05, &det).unwrap();
//! assert!(report.secure);
//! ```

// `!(x > 0.0)` style guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod channel;
pub mod cli;
pub mod error;
pub mod keyrate;
pub mod optimizer;
pub mod presets;
pub mod source;

pub use error::{Error, Result};
pub use keyrate::ProtocolKind;
pub use presets::{Scenario, ScenarioConfig, ScenarioPreset};
