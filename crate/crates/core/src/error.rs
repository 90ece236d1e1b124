use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid telescope geometry: secondary radius {secondary} m must be in (0, {primary}) m")]
    Geometry { primary: f64, secondary: f64 },

    #[error("decoy intensities violate 0 < nu1 < nu2, nu1 + nu2 < mu (mu={mu}, nu1={nu1}, nu2={nu2})")]
    DecoyConstraint { mu: f64, nu1: f64, nu2: f64 },

    #[error("QBER undefined: zero gain")]
    ZeroGain,

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("config: {0}")]
    Config(#[from] toml::de::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
