//! Feature assembly, standardization and the RBF support vector machine.

mod features;
mod grid;
mod kernel;
mod standardize;
mod svm;

pub use features::{assemble_feature, FeatureLayout, FeatureMask, FeatureVector, DEFAULT_FISHER_DIM};
pub use grid::{
    default_c_grid, default_gamma_grid, grid_search, stratified_folds, GridPoint, GridSearchResult,
    GridSpec,
};
pub use kernel::{rbf_kernel, squared_distance};
pub use standardize::Standardizer;
pub use svm::{train_svm, train_svm_with, SmoReport, SolverSettings, SvmModel, SvmParams};
