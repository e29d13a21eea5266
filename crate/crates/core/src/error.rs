use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid surface parameters (r={r}, k={k}): {reason}")]
    InvalidParameters { r: i64, k: i64, reason: String },

    #[error("argument outside the domain of {function}: {value}")]
    Domain { function: &'static str, value: f64 },

    #[error("evaluation at y={y} is within {distance:e} of a pole (threshold {threshold:e})")]
    Pole { y: f64, distance: f64, threshold: f64 },

    #[error("degenerate Weierstrass invariants: g2={g2}, g3={g3} have vanishing discriminant")]
    DegenerateInvariants { g2: f64, g3: f64 },

    #[error("integration failed at t={t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("tolerance {value:e} outside the supported range [{min:e}, {max:e}]")]
    Tolerance { value: f64, min: f64, max: f64 },

    #[error("spectral anomaly at p={p}, lambda={lambda}: {reason}")]
    SpectralAnomaly { p: f64, lambda: f64, reason: String },

    #[error("eigenvalue count mismatch: numeric {numeric}, closed form {closed_form}\n{dump}")]
    CountMismatch { numeric: usize, closed_form: usize, dump: String },

    #[error("rank mismatch for (r={r}, k={k}): computed {computed}, expected {expected}")]
    RankMismatch { r: u32, k: u32, computed: usize, expected: usize },

    #[error("multiplicity of lambda=2 is {found}, expected {expected}")]
    Multiplicity { found: usize, expected: usize },

    #[error("{what}: quadrature {quadrature} vs closed form {closed_form} (relative {relative:e})")]
    QuadratureMismatch { what: &'static str, quadrature: f64, closed_form: f64, relative: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
