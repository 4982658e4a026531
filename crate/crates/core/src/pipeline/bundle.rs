use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use super::config::PipelineConfig;
use crate::classifier::{GridPoint, Standardizer, SvmModel};
use crate::error::{Error, Result};
use crate::gmm::GmmModel;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub real_count: usize,
    pub fake_count: usize,
    pub selected: GridPoint,
    /// Canonical paths of the training images, used to flag leakage at
    /// evaluation time.
    pub training_paths: Vec<String>,
}

/// A trained detector: everything needed to score a new image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub config: PipelineConfig,
    /// Absent when the oriented-gradient features are disabled.
    pub gmm: Option<GmmModel>,
    pub standardizer: Standardizer,
    pub svm: SvmModel,
    pub summary: TrainingSummary,
}

impl ModelBundle {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json()?;
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Indented JSON with every float written to 17 significant digits.
    pub fn to_json(&self) -> Result<String> {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits(PrettyFormatter::new()));
        self.serialize(&mut ser).map_err(|e| Error::Serialization(e.to_string()))?;
        String::from_utf8(buf).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        let found = raw.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != BUNDLE_FORMAT_VERSION {
            return Err(Error::BundleVersion {
                found,
                supported: BUNDLE_FORMAT_VERSION,
            });
        }
        let bundle: ModelBundle =
            serde_json::from_value(raw).map_err(|e| Error::Serialization(e.to_string()))?;
        bundle.check()?;
        Ok(bundle)
    }

    fn check(&self) -> Result<()> {
        self.config.validate()?;
        if let Some(g) = &self.gmm {
            g.validate()?;
        }
        if self.config.features.hog && self.gmm.is_none() {
            return Err(Error::Serialization("bundle enables hog features but has no mixture".into()));
        }
        if self.standardizer.dim() != self.svm.dim() {
            return Err(Error::mismatch(self.standardizer.dim(), self.svm.dim()));
        }
        Ok(())
    }
}

/// Pretty layout, but floats as `d.dddddddddddddddde±x` so every binary64
/// value survives a text round trip regardless of the reader.
struct SeventeenDigits<'a>(PrettyFormatter<'a>);

impl Formatter for SeventeenDigits<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}
