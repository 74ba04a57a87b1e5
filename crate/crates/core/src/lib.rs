//! Perturbative flow equations for lattice-regularized massive φ⁴ theory in
//! four Euclidean dimensions.

pub mod error;
pub mod flow;
pub mod lattice;
pub mod propagator;
pub mod quadrature;
pub mod verification;

pub use error::{FlowError, LatticeError, QuadratureError, ScopeError};
pub use flow::{
    rsy_channels, CasIndex, Channel, ChannelDecomposition, CountertermSet, FlowSolver, LoopEvaluation, MemoGrid,
    RotationContext, SolverConfig, TwoLoopResult,
};
pub use lattice::{
    hat_momentum, hat_momentum_sq, reduce_to_first_zone, rotate, BrillouinZone, FlowScale, LatticeParams, LegOrders,
    Momentum4, MultiIndex, Rotation4,
};
pub use verification::{
    cauchy_convergence, log_log_fit, periodic_delta_defect, power_counting_fit, rotation_defect, rotation_scaling_fit,
    verify_lemma1, verify_lemma2, GaussianTest, LogLogFit, RotationDefect, SlopeWindow, SweepReport, Verdict,
};
