//! Many-to-one category remapping with drops.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{DatasetError, FrameRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RemapRule {
    Map(String),
    Drop,
}

/// Rules from source categories to target categories. Names are
/// case-sensitive.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CategoryMap {
    rules: BTreeMap<String, RemapRule>,
}

/// On-disk form:
///
/// ```toml
/// drop = ["light", "sign"]
///
/// [map]
/// car = "vehicle"
/// ```
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    #[serde(default)]
    drop: Vec<String>,
    #[serde(default)]
    map: BTreeMap<String, String>,
}

impl CategoryMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn map(mut self, source: &str, target: &str) -> Self {
        self.rules.insert(source.to_string(), RemapRule::Map(target.to_string()));
        self
    }

    pub fn drop(mut self, source: &str) -> Self {
        self.rules.insert(source.to_string(), RemapRule::Drop);
        self
    }

    /// Ten BDD100K detection categories onto pedestrian/vehicle/rider.
    ///
    /// bus, truck, car -> vehicle; motor, rider -> rider; person ->
    /// pedestrian; light, sign, bike, train are dropped. The long-form names
    /// used by the public label files ("traffic light", "traffic sign") are
    /// accepted as aliases of light and sign.
    pub fn bdd100k() -> Self {
        Self::new()
            .map("bus", "vehicle")
            .map("truck", "vehicle")
            .map("car", "vehicle")
            .map("motor", "rider")
            .map("rider", "rider")
            .map("person", "pedestrian")
            .drop("light")
            .drop("sign")
            .drop("bike")
            .drop("train")
            .drop("traffic light")
            .drop("traffic sign")
    }

    /// Maps each listed category to itself.
    pub fn identity(categories: &[&str]) -> Self {
        categories.iter().fold(Self::new(), |m, c| m.map(c, c))
    }

    pub fn from_toml_str(s: &str) -> Result<Self, DatasetError> {
        let file: MapFile = toml::from_str(s).map_err(|e| DatasetError::CategoryMap(e.to_string()))?;
        let mut map = Self::new();
        for (src, dst) in file.map {
            map = map.map(&src, &dst);
        }
        for src in file.drop {
            if map.rules.contains_key(&src) {
                return Err(DatasetError::CategoryMap(format!(
                    "category {src:?} is both mapped and dropped"
                )));
            }
            map = map.drop(&src);
        }
        Ok(map)
    }

    pub fn rule(&self, source: &str) -> Option<&RemapRule> {
        self.rules.get(source)
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.rules.keys().map(String::as_str)
    }

    pub fn targets(&self) -> BTreeSet<&str> {
        self.rules
            .values()
            .filter_map(|r| match r {
                RemapRule::Map(t) => Some(t.as_str()),
                RemapRule::Drop => None,
            })
            .collect()
    }

    /// Remaps one record in place. On error the record is left unchanged.
    pub fn apply(&self, record: &mut FrameRecord, stats: &mut RemapStats) -> Result<(), DatasetError> {
        let unknown: BTreeSet<&str> = record
            .objects
            .iter()
            .map(|o| o.category.as_str())
            .filter(|c| !self.rules.contains_key(*c))
            .collect();
        if !unknown.is_empty() {
            return Err(DatasetError::UnknownCategories(unknown.into_iter().map(String::from).collect()));
        }
        let objects = std::mem::take(&mut record.objects);
        for mut obj in objects {
            match &self.rules[&obj.category] {
                RemapRule::Map(target) => {
                    *stats.kept.entry(target.clone()).or_default() += 1;
                    obj.category = target.clone();
                    record.objects.push(obj);
                }
                RemapRule::Drop => *stats.dropped.entry(obj.category).or_default() += 1,
            }
        }
        stats.frames += 1;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RemapStats {
    pub frames: usize,
    /// Objects kept, by target category.
    pub kept: BTreeMap<String, usize>,
    /// Objects removed, by source category.
    pub dropped: BTreeMap<String, usize>,
}

impl RemapStats {
    pub fn dropped_total(&self) -> usize {
        self.dropped.values().sum()
    }
}

/// Remaps every record. Frames emptied by drops are kept. Unknown categories
/// across the whole set are reported together.
pub fn remap_categories(
    mut records: Vec<FrameRecord>,
    map: &CategoryMap,
) -> Result<(Vec<FrameRecord>, RemapStats), DatasetError> {
    let unknown: BTreeSet<String> = records
        .iter()
        .flat_map(|r| r.objects.iter())
        .filter(|o| map.rule(&o.category).is_none())
        .map(|o| o.category.clone())
        .collect();
    if !unknown.is_empty() {
        return Err(DatasetError::UnknownCategories(unknown.into_iter().collect()));
    }
    let mut stats = RemapStats::default();
    for r in &mut records {
        map.apply(r, &mut stats)?;
    }
    Ok((records, stats))
}
