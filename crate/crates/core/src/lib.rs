//! Instance-optimal randomized social choice for the metric 1-median
//! problem.
//!
//! Given a preference profile (clients ranking facilities), the crate
//! computes the lottery over facilities whose worst-case distortion over all
//! consistent metrics is smallest, evaluates the distortion of any lottery,
//! and verifies lower-bound certificates made of one metric per facility.
//!
//! All numeric code is generic over [`Scalar`]; `f64` is the default and
//! [`Rational`] gives exact arithmetic. The `Exact*` aliases name the
//! rational instantiations.

pub mod adversary;
pub mod baselines;
pub mod certificate;
pub mod fixtures;
pub mod lp;
pub mod metric;
pub mod optimal;
pub mod profile;
pub mod scalar;
pub mod search;

pub use adversary::{distortion_of, solve_adversary, AdversaryValue, Distortion, Lottery};
pub use certificate::{verify_certificate, Certificate, CertificateReport};
pub use lp::{LinearProgram, LpSolution, LpStatus};
pub use metric::{metric_closure, Metric, MetricGraph, PointSpace};
pub use optimal::{optimal_dual_metrics, optimal_scf, DualMetricsResult, OptimalResult};
pub use profile::{parse_profile, PreferenceProfile};
pub use scalar::{Rational, Scalar};

pub type ExactMetric = Metric<Rational>;
pub type ExactMetricGraph = MetricGraph<Rational>;
pub type ExactLottery = Lottery<Rational>;
pub type ExactLinearProgram = LinearProgram<Rational>;
pub type ExactCertificate = Certificate<Rational>;
