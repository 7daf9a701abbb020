//! Manufactured solutions, convergence and consistency studies, operator
//! norm studies and run configuration.

pub mod cases;
pub mod config;
mod studies;

pub use cases::{tangential_force_check, ManufacturedCase, Perturbation, SideJets};
pub use config::{RunConfig, CONFIG_KEYS};
pub use studies::{
    consistency_study, convergence_study, error_modulo_constant, fit_log, fitted_order, measure_run, operator_norm_study, rate,
    ConsistencyReport, ConsistencyRow, ErrorReport, ErrorRow, LogFit, NormReport, NormRow, StudyOptions, CONSISTENCY_OPERATORS,
};
