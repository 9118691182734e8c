//! Serializable run and boost reports. Missing quantities are `null`,
//! never NaN.

use serde::{Deserialize, Serialize};

use crate::config::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesSummary {
    pub label: String,
    pub mass: f64,
    pub charge: f64,
    pub count: usize,
    pub total_weight: f64,
    /// Largest momentum magnitude in the ensemble.
    pub beta: f64,
    pub beta_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRecord {
    pub time: f64,
    pub max_abs_q: f64,
    pub total_charge: f64,
    /// Sup-norm difference to the previous extraction.
    pub cauchy: Option<f64>,
    /// `(2+t) cauchy / log⁵(2+t)` with `t` the previous extraction time.
    pub cauchy_scaled: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldProfileRecord {
    pub time: f64,
    pub max_abs_l: f64,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub species: String,
    pub particle: usize,
    pub v_inf: [f64; 3],
    pub momentum_cauchy: f64,
    pub slope: [f64; 3],
    pub slope_norm: f64,
    pub predicted: Option<[f64; 3]>,
    pub predicted_norm: Option<f64>,
    pub relative_error: Option<f64>,
    pub angle_deg: Option<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierRecord {
    pub verdict: String,
    pub max_q: f64,
    pub charge_indicator: f64,
    pub max_slope: f64,
    pub noise_q: f64,
    pub noise_slope: f64,
    pub tol_q: f64,
    pub tol_slope: f64,
    pub tol_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub delta: f64,
    pub lhs_quadrature: Option<f64>,
    /// Enclosed charge summed directly over particles.
    pub lhs_particles: f64,
    pub rhs: Option<f64>,
    pub abs_difference: Option<f64>,
    pub relative_difference: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestFrameRecord {
    pub v_star: Option<[f64; 3]>,
    pub q_star: Option<f64>,
    pub q_rest: Option<f64>,
    pub expected: Option<f64>,
    pub relative_error: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorSummary {
    /// Leapfrog steps taken.
    pub steps: usize,
    /// Monitor records.
    pub count: usize,
    pub charge_scale: f64,
    pub gauss_initial: f64,
    pub gauss_max: f64,
    pub gauss_final: f64,
    pub gauss_relative_drift: f64,
    pub div_b_max: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub energy_relative_drift: f64,
    pub decay_early_max: f64,
    pub decay_late_max: f64,
    pub decay_bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub scenario: String,
    pub config: Scenario,
    pub species: Vec<SpeciesSummary>,
    pub final_species: Vec<SpeciesSummary>,
    pub extraction: Vec<ExtractionRecord>,
    pub field_profile: FieldProfileRecord,
    pub fits: Vec<FitRecord>,
    pub control_max_slope: f64,
    pub classifier: ClassifierRecord,
    pub witness: Option<[f64; 3]>,
    pub identity: Vec<IdentityRecord>,
    pub rest_frame: RestFrameRecord,
    pub monitors: Option<MonitorSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostComparisonRecord {
    pub time: f64,
    pub weak_deviation: f64,
    pub pointwise_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostReport {
    pub version: String,
    pub scenario: String,
    pub config: Scenario,
    pub phi: f64,
    pub rotation: Option<[f64; 4]>,
    pub activation_time: f64,
    pub horizon: f64,
    pub comparisons: Vec<BoostComparisonRecord>,
    pub max_weak_deviation: f64,
    pub boosted_support_k: f64,
    pub max_boosted_speed: f64,
}
