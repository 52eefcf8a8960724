use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The nine body-part names heard by the learner.
///
/// The declaration order is the canonical order used for indexing language
/// models, CSV columns and tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BodyPartLabel {
    Torso,
    UpperArm,
    Forearm,
    Palm,
    LittleFinger,
    RingFinger,
    MiddleFinger,
    IndexFinger,
    Thumb,
}

impl BodyPartLabel {
    pub const COUNT: usize = 9;

    pub const ALL: [BodyPartLabel; 9] = [
        BodyPartLabel::Torso,
        BodyPartLabel::UpperArm,
        BodyPartLabel::Forearm,
        BodyPartLabel::Palm,
        BodyPartLabel::LittleFinger,
        BodyPartLabel::RingFinger,
        BodyPartLabel::MiddleFinger,
        BodyPartLabel::IndexFinger,
        BodyPartLabel::Thumb,
    ];

    pub const FINGERTIPS: [BodyPartLabel; 5] = [
        BodyPartLabel::LittleFinger,
        BodyPartLabel::RingFinger,
        BodyPartLabel::MiddleFinger,
        BodyPartLabel::IndexFinger,
        BodyPartLabel::Thumb,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Spoken form, e.g. `"upper arm"`.
    pub fn name(self) -> &'static str {
        match self {
            BodyPartLabel::Torso => "torso",
            BodyPartLabel::UpperArm => "upper arm",
            BodyPartLabel::Forearm => "forearm",
            BodyPartLabel::Palm => "palm",
            BodyPartLabel::LittleFinger => "little finger",
            BodyPartLabel::RingFinger => "ring finger",
            BodyPartLabel::MiddleFinger => "middle finger",
            BodyPartLabel::IndexFinger => "index finger",
            BodyPartLabel::Thumb => "thumb",
        }
    }

    /// Whitespace-free key used in files and CSV column names.
    pub fn key(self) -> &'static str {
        match self {
            BodyPartLabel::Torso => "torso",
            BodyPartLabel::UpperArm => "upperarm",
            BodyPartLabel::Forearm => "forearm",
            BodyPartLabel::Palm => "palm",
            BodyPartLabel::LittleFinger => "little",
            BodyPartLabel::RingFinger => "ring",
            BodyPartLabel::MiddleFinger => "middle",
            BodyPartLabel::IndexFinger => "index",
            BodyPartLabel::Thumb => "thumb",
        }
    }

    pub fn is_fingertip(self) -> bool {
        self.index() >= BodyPartLabel::LittleFinger.index()
    }
}

impl fmt::Display for BodyPartLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BodyPartLabel {
    type Err = Error;

    /// Accepts either the key or the spoken name.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        BodyPartLabel::ALL
            .iter()
            .copied()
            .find(|l| l.key() == s || l.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown body part `{s}`")))
    }
}
