use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A reproducibility score on the four-level rubric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Score(u8);

impl Score {
    pub const IRREPRODUCIBLE: Score = Score(1);
    pub const CODE_ISSUES: Score = Score(2);
    pub const PRESENTATION_ISSUES: Score = Score(3);
    pub const FULLY_REPRODUCIBLE: Score = Score(4);

    pub const ALL: [Score; 4] = [Score(1), Score(2), Score(3), Score(4)];

    pub fn new(value: u8) -> Option<Self> {
        (1..=4).contains(&value).then_some(Score(value))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Scores 2 through 4 mean the package ran and produced usable results.
    pub fn is_executed(self) -> bool {
        self.0 >= 2
    }

    /// Zero-based index for 4-wide tables.
    pub fn index(self) -> usize {
        usize::from(self.0 - 1)
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<i64> for Score {
    type Error = String;

    fn try_from(value: i64) -> Result<Self, Self::Error> {
        u8::try_from(value)
            .ok()
            .and_then(Score::new)
            .ok_or_else(|| format!("score {value} is outside 1..=4"))
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.0)
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = i64::deserialize(deserializer)?;
        Score::try_from(raw).map_err(serde::de::Error::custom)
    }
}
