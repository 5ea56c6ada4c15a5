use thiserror::Error;

use crate::energy::Profile;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("domain too long for weight (c*t_max = {0:.3} > 700)")]
    DomainTooLong(f64),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("profile tails are not flat over {needed} cells")]
    TailNotFlat { needed: usize },

    #[error("{what} did not converge (residual {residual:.3e})")]
    NonConvergence { what: &'static str, residual: f64, iterate: Vec<f64> },

    #[error("descent diverged: energy increased over {0} consecutive accepted steps")]
    Divergence(usize),

    #[error("line search failed at iteration {iteration}")]
    LineSearch { iteration: usize, profile: Box<Profile> },

    #[error("bracket invalid; increase domain or audit potential (m(c_lo)={m_lo:.3e}, m(c_hi)={m_hi:.3e})")]
    BracketInvalid { m_lo: f64, m_hi: f64 },

    #[error("degenerate profile: kinetic integral {0:.3e} below 1e-14")]
    DegenerateProfile(f64),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("no heteroclinic detected in [{lo}, {hi}]")]
    NoHeteroclinic { lo: f64, hi: f64 },

    #[error("domain too short: front at x={position:.3} reached the boundary at t={time:.3}")]
    DomainTooShort { position: f64, time: f64, trajectory: Vec<(f64, f64)> },

    #[error("audit failure: {0}")]
    Audit(String),

    #[error("missing audited input: {0}")]
    MissingConstant(&'static str),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Config(_) => "config_error",
            Error::DomainTooLong(_) => "domain_too_long",
            Error::InvalidProfile(_) => "invalid_profile",
            Error::TailNotFlat { .. } => "tail_not_flat",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Divergence(_) => "divergence",
            Error::LineSearch { .. } => "line_search",
            Error::BracketInvalid { .. } => "bracket_invalid",
            Error::DegenerateProfile(_) => "degenerate_profile",
            Error::Fit(_) => "fit",
            Error::NoHeteroclinic { .. } => "no_heteroclinic",
            Error::DomainTooShort { .. } => "domain_too_short",
            Error::Audit(_) => "audit",
            Error::MissingConstant(_) => "missing_constant",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
