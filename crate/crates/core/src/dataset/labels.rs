//! Base and day/night-extended label vocabularies.
//!
//! Training uses six labels, `daytime_<c>` and `night_<c>` for each base
//! category `c`; evaluation merges them back into the three base labels.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::DatasetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseCategory {
    Pedestrian,
    Vehicle,
    Rider,
}

impl BaseCategory {
    pub const ALL: [BaseCategory; 3] = [Self::Pedestrian, Self::Vehicle, Self::Rider];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pedestrian => "pedestrian",
            Self::Vehicle => "vehicle",
            Self::Rider => "rider",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for BaseCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeOfDay {
    Daytime,
    Night,
}

impl TimeOfDay {
    pub const ALL: [TimeOfDay; 2] = [Self::Daytime, Self::Night];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Daytime => "daytime",
            Self::Night => "night",
        }
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelScheme {
    Base3,
    Extended6,
}

impl LabelScheme {
    /// Vocabulary in a fixed order: base order, daytime before night.
    pub fn vocabulary(self) -> Vec<String> {
        match self {
            Self::Base3 => BaseCategory::ALL.iter().map(|c| c.as_str().to_string()).collect(),
            Self::Extended6 => TimeOfDay::ALL
                .iter()
                .flat_map(|&t| BaseCategory::ALL.iter().map(move |&c| extended_name(c, t)))
                .collect(),
        }
    }

    pub fn contains(self, label: &str) -> bool {
        match self {
            Self::Base3 => BaseCategory::parse(label).is_some(),
            Self::Extended6 => parse_extended(label).is_some(),
        }
    }
}

pub fn extended_name(category: BaseCategory, time: TimeOfDay) -> String {
    format!("{}_{}", time.as_str(), category.as_str())
}

/// Splits `daytime_vehicle` into `(Daytime, Vehicle)`.
pub fn parse_extended(label: &str) -> Option<(TimeOfDay, BaseCategory)> {
    let (prefix, rest) = label.split_once('_')?;
    let time = TimeOfDay::ALL.into_iter().find(|t| t.as_str() == prefix)?;
    Some((time, BaseCategory::parse(rest)?))
}

/// Extends one base label with the time of day of its frame.
pub fn extend_label(label: &str, time: TimeOfDay) -> Result<String, DatasetError> {
    if let Some(base) = BaseCategory::parse(label) {
        return Ok(extended_name(base, time));
    }
    if parse_extended(label).is_some() {
        return Err(DatasetError::AlreadyExtended(label.to_string()));
    }
    Err(DatasetError::UnknownLabel(label.to_string()))
}

/// Merges one extended label back to its base category.
pub fn merge_label(label: &str) -> Result<BaseCategory, DatasetError> {
    if let Some((_, base)) = parse_extended(label) {
        return Ok(base);
    }
    if BaseCategory::parse(label).is_some() {
        return Err(DatasetError::NotExtended(label.to_string()));
    }
    Err(DatasetError::UnknownLabel(label.to_string()))
}
