//! Numerical core for multi-illumination imaging.
//!
//! The library is organised around one object: the imaging kernel
//! `G(z,y) = f_ILF(z,y) · f_PSF(z−y)` of a blurred, structured-illumination
//! acquisition, and its translation-invariant form `PSF_multi(u)`.
//! Modules:
//!
//! - [`measures`] — discrete point-source measures and their Fourier transforms
//! - [`optics`] — PSF families, illumination patterns, autocorrelations
//! - [`operator`] — forward/adjoint imaging operator, discrete kernels, decoding
//! - [`spectral`] — `PSF_multi` synthesis, essential cutoffs, stability audits
//! - [`adversarial`] — worst-case indistinguishable measure pairs via moment systems
//! - [`limits`] — closed-form resolution-limit evaluators and the illumination
//!   incoherence functional
//!
//! All Fourier transforms in this crate use the `e^{+iξx}` sign convention:
//! `F[μ](ξ) = Σ_j a_j e^{i ξ·y_j}`.

pub mod adversarial;
pub mod grid;
pub mod limits;
pub mod measures;
pub mod numerics;
pub mod operator;
pub mod optics;
pub mod spectral;

pub use grid::{GridFunction, Point, UniformGrid};
pub use measures::{DiscreteMeasure, NoiseBound};
pub use optics::{IlluminationSequence, Pattern, Psf};
pub use spectral::{CutoffReport, PsfMulti};

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. Variants are grouped by failure class so callers
/// (notably the CLI) can map them onto exit codes: invalid input vs. numerical
/// breakdown vs. failed certification.
#[derive(Debug, Error)]
pub enum Error {
    // --- invalid input / construction errors ---
    #[error("empty measure")]
    EmptyMeasure,
    #[error("separation undefined: fewer than 2 sources")]
    SeparationUndefined,
    #[error("duplicate locations (closer than {0:e})")]
    DuplicateLocations(f64),
    #[error("length mismatch: {0}")]
    LengthMismatch(&'static str),
    #[error("positivity violated: amplitude {0} is not real and positive")]
    PositivityViolated(usize),
    #[error("zero amplitude at index {0}")]
    ZeroAmplitude(usize),
    #[error("dimension mismatch")]
    DimensionMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("out of domain")]
    OutOfDomain,
    #[error("index out of range: {0}")]
    IndexOutOfRange(usize),
    #[error("support violation: source extends outside [0,1]^d")]
    SupportViolation,
    #[error("noise exceeds admissible range (sigma >= m_min * b_upper)")]
    NoiseExceedsRange,
    #[error("cluster collision: spacing factor s must exceed 2")]
    ClusterCollision,
    #[error("degenerate illumination matrix (incoherence is zero)")]
    DegenerateIlluminationMatrix,
    #[error("threshold exceeds peak: b_lower > b_upper")]
    ThresholdExceedsPeak,

    // --- numerical failures ---
    #[error("quadrature truncation too small: estimated tail {tail:e} exceeds tolerance {tol:e}")]
    TruncationTooSmall { tail: f64, tol: f64 },
    #[error("Nyquist violation: lag grid step {step:e} cannot resolve cutoff {cutoff:e}")]
    NyquistViolation { step: f64, cutoff: f64 },
    #[error("ill-conditioned moment system")]
    IllConditioned,
    #[error("no usable bandpass: mask is empty")]
    NoUsableBandpass,
    #[error("frequency grid cannot bracket threshold {0:e}")]
    UnresolvedCutoff(f64),
    #[error("audit grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("pointwise map overflow (non-finite value)")]
    MapOverflow,

    // --- i/o ---
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::TruncationTooSmall { .. }
                | Error::NyquistViolation { .. }
                | Error::IllConditioned
                | Error::NoUsableBandpass
                | Error::UnresolvedCutoff(_)
                | Error::GridTooCoarse(_)
                | Error::MapOverflow
        )
    }
}
