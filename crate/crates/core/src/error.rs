use thiserror::Error;

/// Invalid lattice, regulator or rotation data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("lattice spacing must be positive and finite, got {0}")]
    Spacing(f64),
    #[error("flow scale {a} lies below the lattice spacing {a0}")]
    ScaleBelowSpacing { a: f64, a0: f64 },
    #[error("mass must be positive and finite, got {0}")]
    Mass(f64),
    #[error("lattice spacing {a0} is not below the inverse mass {inv_m}")]
    SpacingTooCoarse { a0: f64, inv_m: f64 },
    #[error("coupling must be finite, got {0}")]
    Coupling(f64),
    #[error("matrix is not orthogonal (max deviation {0:e})")]
    NotOrthogonal(f64),
    #[error("non-finite momentum component")]
    NonFiniteMomentum,
}

/// A request that falls outside the implemented derivative or loop scope.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScopeError {
    #[error("derivative order {order} exceeds the cap {cap}")]
    DerivativeOrder { order: usize, cap: usize },
    #[error("coefficient function L({l},{n}) is not implemented")]
    Function { l: usize, n: usize },
    #[error("expected {expected} momenta, got {got}")]
    LegCount { expected: usize, got: usize },
    #[error("multi-index addresses leg {leg} but only {free} legs are independent")]
    DependentLeg { leg: usize, free: usize },
}

/// Quadrature that could not reach its tolerance within the resource cap.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("invalid quadrature spec: {0}")]
    Spec(String),
    #[error("no convergence: estimate {estimate:e} above tolerance {tolerance:e} at the resource cap")]
    NoConvergence { estimate: f64, tolerance: f64 },
    #[error("interval [{lo}, {hi}] leaves the flow range [0, {max}]")]
    Interval { lo: f64, hi: f64, max: f64 },
    #[error("interpolation estimate {estimate:e} above tolerance {tolerance:e}")]
    Resolution { estimate: f64, tolerance: f64 },
}

/// Everything the solver and the verification suites can fail with.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Scope(#[from] ScopeError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("momenta do not add up to zero modulo the reciprocal lattice (residual {0:e})")]
    Conservation(f64),
    #[error("sweep is degenerate: {0}")]
    Sweep(String),
}
