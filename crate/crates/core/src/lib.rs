//! Sampled-data feedback for diagonal (modal) infinite-dimensional systems.
//!
//! A system is given by eigenvalues `lambda_n`, input coefficients `b_n` and
//! feedback coefficients `f_n`. Sampling with zero-order hold at period `tau`
//! gives the rank-one perturbed diagonal operator
//! `Delta(tau) = diag(e^{tau lambda_n}) + s f^T`,
//! `s_n = b_n (e^{tau lambda_n} - 1) / lambda_n`.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! bottom of this file fix `f64`.

pub mod decay;
pub mod error;
pub mod generators;
pub mod modal;
pub mod operator;
pub mod resolvent;
pub mod scalar;
pub mod stability;
pub mod state;

pub use decay::{
    equivalence_check, fit_decay, fit_decay_points, simulate_closed_loop, DecayFit, DecayModel, EquivalenceReport,
    FitWindow, Recording, SimulationOptions, Trajectory,
};
pub use error::{Error, Result};
pub use generators::{
    generate_explicit, generate_synthetic, generate_wave, synthetic_state, wave_state, ExtraMode, InitialLaw, PowerLaw,
    SyntheticParams, WaveInput, WaveParams,
};
pub use modal::{
    audit_assumptions, classify_eigenvalue, coupling_branch, dnorm, fractional_apply, AssumptionReport,
    CouplingBranch, ModeTriple, SectorClass, SectorParams, TailData, TruncatedSystem, Verdict,
};
pub use operator::{
    apply_delta, apply_feedback, apply_input_map, apply_semigroup, delta_orbit, g_tail_bound, resolvent_delta,
    resolvent_delta_norm_sqr, resolvent_t, spectral_radius_estimate, transfer_g, transfer_h, Orbit, OrbitRecord,
    SampledOperator, TransferValue,
};
pub use resolvent::{
    circle_integral, contour_power, default_r_sequence, parseval_check, scaled_scan, NodePolicy, ParsevalResult,
    ScanReport, ScanRow, Scaling,
};
pub use scalar::{phi1, Cx, Scalar};
pub use stability::{
    check_nonresonance, continuous_margin, design_feedback, discrete_margin, estimate_tau_star, exterior_min,
    gamma_constants, h_tail_bound, h_tail_for, holomorphic_bound_m1, sampling_gap, split_spectrum,
    verify_mode_bound, verify_mode_bound_pairs, BoundConstants, ContinuousMargin, DiscreteMargin, FeedbackDesign,
    MarginReport, ModeBoundCheck, SpectrumSplit, TauRow, TauStarReport,
};
pub use state::StateVec;

/// Relative distance below which a point counts as sitting on a pole.
pub const POLE_REL_TOL: f64 = 1e-14;
/// `|1 - f^T R s|` below this makes the rank-one resolvent update singular.
pub const SMW_DENOMINATOR_TOL: f64 = 1e-12;
pub const MIN_CIRCLE_NODES: usize = 256;
pub const MAX_CIRCLE_NODES: usize = 1 << 20;
pub const DISCRETE_MARGIN_REFINE_TOL: f64 = 1e-4;

pub type Complex = Cx<f64>;
pub type System = TruncatedSystem<f64>;
pub type Mode = ModeTriple<f64>;
pub type Sector = SectorParams<f64>;
pub type Tails = TailData<f64>;
pub type Operator = SampledOperator<f64>;
pub type State = StateVec<f64>;

pub type System32 = TruncatedSystem<f32>;
pub type Operator32 = SampledOperator<f32>;
pub type State32 = StateVec<f32>;
