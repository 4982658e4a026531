//! Detection of style-transfer generated paintings from frequency-domain
//! features.
//!
//! An image is reduced to the normalized log-magnitude spectrum of its luma
//! channel. Three feature families are read off that spectrum:
//!
//! * [`stats`]: mean, standard deviation, skewness and kurtosis of all bins;
//! * [`hog`] + [`fisher`]: oriented-gradient histograms of a smoothed quarter
//!   of the spectrum, encoded as a Fisher vector against a [`gmm`] fitted on
//!   the training set;
//! * [`blob`]: the number of Difference-of-Gaussians blobs.
//!
//! The concatenated vector is standardized and classified by an RBF support
//! vector machine ([`classifier`]). [`pipeline`] ties the stages together
//! with persistent model bundles, and [`synth`] generates a labelled
//! synthetic corpus for end-to-end checks.

pub mod blob;
pub mod classifier;
pub mod error;
pub mod evaluation;
pub mod filter;
pub mod fisher;
pub mod gmm;
pub mod hog;
pub mod label;
pub mod pipeline;
pub mod plane;
pub mod spectrum;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use label::Label;
pub use plane::Plane;
