//! Age-of-information analysis for multi-source FCFS M/G/1 queues.

pub mod analytic;
pub mod distributions;
pub mod error;
pub mod quad;
pub mod sim;
pub mod specfun;
pub mod transient;

pub use analytic::{
    aoi_approx1, aoi_approx2, aoi_approx3, aoi_single_source_mg1, event_probabilities,
    laplace_system_time, mean_delay, mean_wait, p_brief, p_long, EventProbabilities, QueueConfig,
    SystemTimeTransform,
};
pub use distributions::{ServiceDistribution, ServiceKind, ServiceSampler};
pub use error::{Error, Result};
pub use sim::{
    simulate, simulate_conditional_moments, AoiEstimate, ConditionalMoments, Estimate, Horizon,
    SimReport, SimSpec, SourceReport,
};
pub use transient::{
    aoi_exact_mm1, ctmc_oracle, psi, transient_prob, PsiParams, PsiTruncation, TransientQuery,
};
