//! Second-order flow of the bulk couplings `(ḡ, g, ν)` and the observable
//! couplings `(h, λ, q, t)`, plus the leading-order predictions built from
//! the resulting traces.

mod algebra;
mod flow;
mod predict;

pub use algebra::{a_matrix, chi, eigen_f, gamma_exponent, gbar_step, t_matrix, Branch, M2Matrix};
pub use flow::{
    observable_step, run_flow, step_inputs, BulkCouplings, DomainExit, ExitReason, FlowConfig,
    FlowMode, FlowRecord, FlowTrace, ObservableCouplings, StepInputs, StepRecord,
};
pub use predict::{
    constant_beta_flow, fit_log_exponent, predict_correlations, predict_massive_twopoint,
    predict_star_ratio, q_infinity, CorrelationAmplitudes, DeepPoint, LogFit, MassiveTwoPoint,
    StarPrediction,
};
