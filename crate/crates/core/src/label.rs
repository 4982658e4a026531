use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Ground-truth or predicted class. Real paintings are the positive class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Real,
    Fake,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Real, Label::Fake];

    /// `+1` for real, `-1` for fake.
    pub fn sign(self) -> f64 {
        match self {
            Label::Real => 1.0,
            Label::Fake => -1.0,
        }
    }

    /// Maps a decision value to a label; zero goes to the positive class.
    pub fn from_decision(value: f64) -> Label {
        if value >= 0.0 {
            Label::Real
        } else {
            Label::Fake
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Real => "real",
            Label::Fake => "fake",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "real" => Ok(Label::Real),
            "fake" => Ok(Label::Fake),
            other => Err(format!("unknown label {other:?} (expected real or fake)")),
        }
    }
}
