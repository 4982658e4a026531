//! Compiles the guide under `book/src` so every Rust block in it runs as a
//! doc-test. One module per chapter keeps failures traceable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/spectrum.md")]
pub mod spectrum {}
#[doc = include_str!("../../../book/src/statistics.md")]
pub mod statistics {}
#[doc = include_str!("../../../book/src/hog.md")]
pub mod hog {}
#[doc = include_str!("../../../book/src/fisher.md")]
pub mod fisher {}
#[doc = include_str!("../../../book/src/blobs.md")]
pub mod blobs {}
#[doc = include_str!("../../../book/src/svm.md")]
pub mod svm {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
