use alloc::boxed::Box;
use alloc::string::String;

/// Errors raised anywhere in the core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("eigenvalue iteration did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("left/right eigenvector pairing is ambiguous near eigenvalue {0}")]
    DegeneratePairing(C64Display),
    #[error("expected a one-dimensional null space, found nullity {nullity}")]
    RankDeficiencyMismatch { nullity: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
    #[error("dipole separation k0*r12 must be positive")]
    ZeroSeparation,
    #[error("unphysical damping: gamma_s = {gamma_s}, gamma_a = {gamma_a}")]
    UnphysicalDamping { gamma_s: f64, gamma_a: f64 },
    #[error("V = 0 and delta = 0 leave the intermediate eigenbasis undefined")]
    DegenerateIntermediates,
    #[error("jump probability {0} in one step exceeds 0.1; reduce dt")]
    StepTooLarge(f64),
    #[error("adaptive step size underflowed at t = {0}")]
    SolverStall(f64),
    #[error("detector {0} received fewer than two photons")]
    EmptyDetector(u8),
    #[error("binning left no overlapping bins at tau = {0}")]
    DegenerateBins(f64),
    #[error("trajectory record contains no jumps on the selected channels")]
    NoJumps,
    #[error("steady state emits no photons")]
    ZeroEmission,
    #[error("eigenvector orthogonality defect {defect} exceeds gate {gate}")]
    OrthogonalityViolation { defect: f64, gate: f64 },
    #[error("decay-rate ratio {0} is below the light/dark separation threshold")]
    NoTimescaleSeparation(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("trajectory {index}: {source}")]
    Trajectory { index: usize, source: Box<Error> },
}

/// Complex value wrapper with a stable `Display` for error messages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C64Display(pub crate::C64);

impl core::fmt::Display for C64Display {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}{:+}i", self.0.re, self.0.im)
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors caused by bad configuration rather than numerics.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::ZeroSeparation
            | Error::UnphysicalDamping { .. }
            | Error::DegenerateIntermediates
            | Error::DimensionMismatch(_)
            | Error::InvalidInput(_) => true,
            Error::Trajectory { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

/// Crate result alias.
pub type Result<T> = core::result::Result<T, Error>;
