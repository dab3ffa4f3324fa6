use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geographic summary level, ordered from finest to coarsest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeoLevel {
    Block,
    Tract,
    County,
    State,
}

impl GeoLevel {
    pub const ALL: [GeoLevel; 4] = [
        GeoLevel::Block,
        GeoLevel::Tract,
        GeoLevel::County,
        GeoLevel::State,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeoLevel::Block => "block",
            GeoLevel::Tract => "tract",
            GeoLevel::County => "county",
            GeoLevel::State => "state",
        }
    }

    /// Level implied by a hierarchical code such as `01-001-0001`.
    pub fn of_code(code: &str) -> Option<GeoLevel> {
        match code.split('-').count() {
            4 => Some(GeoLevel::Block),
            3 => Some(GeoLevel::Tract),
            2 => Some(GeoLevel::County),
            1 => Some(GeoLevel::State),
            _ => None,
        }
    }
}

impl fmt::Display for GeoLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeoLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GeoLevel::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Schema(format!("unknown geography level {s:?}")))
    }
}

/// Strict block ⊂ tract ⊂ county ⊂ state tree.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Geography {
    block_tract: BTreeMap<String, String>,
    tract_county: BTreeMap<String, String>,
    county_state: BTreeMap<String, String>,
}

impl Geography {
    pub fn new() -> Self {
        Self::default()
    }

    /// Regular tree with the given fan-out at each level. Codes are
    /// hierarchical, e.g. block `01-002-0003-04`.
    pub fn grid(states: usize, counties: usize, tracts: usize, blocks: usize) -> Self {
        let mut geo = Geography::new();
        for s in 1..=states {
            for c in 1..=counties {
                for t in 1..=tracts {
                    for b in 1..=blocks {
                        geo.insert_code(&format!("{s:02}-{c:03}-{t:04}-{b:02}"))
                            .expect("grid codes are well formed");
                    }
                }
            }
        }
        geo
    }

    /// Adds a block given by a hierarchical code `state-county-tract-block`.
    pub fn insert_code(&mut self, block: &str) -> Result<()> {
        let parts: Vec<&str> = block.split('-').collect();
        if parts.len() != 4 || parts.iter().any(|p| p.is_empty()) {
            return Err(Error::Schema(format!(
                "block code {block:?} is not of the form state-county-tract-block"
            )));
        }
        let tract = parts[..3].join("-");
        let county = parts[..2].join("-");
        self.insert(block, &tract, &county, parts[0])
    }

    /// Adds a block with explicit ancestors; rejects anything that would
    /// give a unit two parents.
    pub fn insert(&mut self, block: &str, tract: &str, county: &str, state: &str) -> Result<()> {
        fn link(map: &mut BTreeMap<String, String>, child: &str, parent: &str) -> Result<()> {
            match map.get(child) {
                Some(existing) if existing != parent => Err(Error::Consistency(format!(
                    "{child:?} already belongs to {existing:?}, cannot also belong to {parent:?}"
                ))),
                Some(_) => Ok(()),
                None => {
                    map.insert(child.to_owned(), parent.to_owned());
                    Ok(())
                }
            }
        }
        link(&mut self.block_tract, block, tract)?;
        link(&mut self.tract_county, tract, county)?;
        link(&mut self.county_state, county, state)
    }

    pub fn from_block_codes<'a, I: IntoIterator<Item = &'a str>>(codes: I) -> Result<Self> {
        let mut geo = Geography::new();
        for code in codes {
            geo.insert_code(code)?;
        }
        Ok(geo)
    }

    pub fn contains_block(&self, block: &str) -> bool {
        self.block_tract.contains_key(block)
    }

    pub fn blocks(&self) -> impl Iterator<Item = &str> {
        self.block_tract.keys().map(String::as_str)
    }

    pub fn block_count(&self) -> usize {
        self.block_tract.len()
    }

    /// The unit containing `block` at `level` (the block itself at `Block`).
    pub fn ancestor<'a>(&'a self, block: &'a str, level: GeoLevel) -> Option<&'a str> {
        let tract = self.block_tract.get(block)?;
        Some(match level {
            GeoLevel::Block => block,
            GeoLevel::Tract => tract,
            GeoLevel::County => self.tract_county.get(tract)?,
            GeoLevel::State => {
                let county = self.tract_county.get(tract)?;
                self.county_state.get(county)?
            }
        })
    }

    pub fn units(&self, level: GeoLevel) -> BTreeSet<&str> {
        self.blocks()
            .filter_map(|b| self.ancestor(b, level))
            .collect()
    }

    pub fn blocks_in<'a>(
        &'a self,
        unit: &'a str,
        level: GeoLevel,
    ) -> impl Iterator<Item = &'a str> {
        self.blocks()
            .filter(move |b| self.ancestor(b, level) == Some(unit))
    }

    /// Whether `code` names a unit at `level`.
    pub fn has_unit(&self, code: &str, level: GeoLevel) -> bool {
        match level {
            GeoLevel::Block => self.block_tract.contains_key(code),
            GeoLevel::Tract => self.tract_county.contains_key(code),
            GeoLevel::County => self.county_state.contains_key(code),
            GeoLevel::State => self.county_state.values().any(|s| s == code),
        }
    }

    /// Merges another geography into this one.
    pub fn extend(&mut self, other: &Geography) -> Result<()> {
        for block in other.blocks() {
            let tract = other.ancestor(block, GeoLevel::Tract).unwrap_or_default();
            let county = other.ancestor(block, GeoLevel::County).unwrap_or_default();
            let state = other.ancestor(block, GeoLevel::State).unwrap_or_default();
            self.insert(block, tract, county, state)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_are_totally_ordered() {
        assert!(GeoLevel::Block < GeoLevel::Tract);
        assert!(GeoLevel::Tract < GeoLevel::County);
        assert!(GeoLevel::County < GeoLevel::State);
    }

    #[test]
    fn grid_builds_a_strict_tree() {
        let geo = Geography::grid(2, 2, 1, 3);
        assert_eq!(geo.block_count(), 12);
        assert_eq!(geo.units(GeoLevel::Tract).len(), 4);
        assert_eq!(geo.units(GeoLevel::State).len(), 2);
        let b = "02-001-0001-03";
        assert_eq!(geo.ancestor(b, GeoLevel::Tract), Some("02-001-0001"));
        assert_eq!(geo.ancestor(b, GeoLevel::County), Some("02-001"));
        assert_eq!(geo.ancestor(b, GeoLevel::State), Some("02"));
        assert_eq!(geo.blocks_in("02", GeoLevel::State).count(), 6);
        assert_eq!(GeoLevel::of_code(b), Some(GeoLevel::Block));
    }

    #[test]
    fn a_tract_cannot_have_two_counties() {
        let mut geo = Geography::new();
        geo.insert("b1", "t1", "c1", "s1").unwrap();
        assert!(matches!(
            geo.insert("b2", "t1", "c2", "s1"),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn malformed_codes_are_rejected() {
        assert!(Geography::new().insert_code("01-001-0001").is_err());
        assert!(Geography::new().insert_code("01--0001-01").is_err());
    }
}
