//! End-to-end workflows: extraction, training, scoring, evaluation,
//! ablation and spectrum inspection.

mod bundle;
mod config;
mod extract;
mod inspect;
mod manifest;
mod run;

pub use bundle::{ModelBundle, TrainingSummary, BUNDLE_FORMAT_VERSION};
pub use config::PipelineConfig;
pub use extract::{
    extract_image, extract_manifest, extract_paths, full_feature, masked_features, spectrum_features,
    write_feature_table, write_raw_table, Extraction, Failure, ImageFeatures,
};
pub use inspect::{inspect_dataset, InspectOutput};
pub use manifest::{overlapping_paths, path_key, DatasetManifest, ManifestEntry};
pub use run::{
    ablation, ablation_from_rows, evaluate_dataset, evaluate_rows, fit_descriptor_gmm, predict_paths,
    score_rows, train_classifier, train_from_rows, train_pipeline, write_predictions, AblationReport,
    AblationRow, Evaluation, Prediction, TrainOutcome, TrainedClassifier,
};
