use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Attribute, GeoLevel, MicrodataSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapConfig {
    /// Target fraction of records whose values are exchanged.
    pub swap_rate: f64,
    pub swap_attributes: Vec<Attribute>,
    /// Pair records separately for each attribute instead of once for all.
    pub independent_per_attribute: bool,
    /// Population counts are held invariant for units at this level.
    pub invariant_level: GeoLevel,
}

impl SwapConfig {
    pub fn new(
        swap_rate: f64,
        swap_attributes: Vec<Attribute>,
        independent_per_attribute: bool,
        invariant_level: GeoLevel,
    ) -> Result<Self> {
        let cfg = Self {
            swap_rate,
            swap_attributes,
            independent_per_attribute,
            invariant_level,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.swap_rate) {
            return Err(Error::Parameter(format!(
                "swap_rate must be in [0, 1], got {}",
                self.swap_rate
            )));
        }
        if self.swap_attributes.is_empty() {
            return Err(Error::Parameter("swap_attributes must not be empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapStats {
    /// Records that took part in at least one exchange.
    pub swapped_records: usize,
    pub pairs: usize,
    /// Selected records for which no eligible partner existed.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwapOutcome {
    pub microdata: MicrodataSet,
    pub stats: SwapStats,
}

/// Exchanges attribute values between pairs of records in different blocks.
///
/// Above block level both partners lie in the same unit at `invariant_level`,
/// so that unit's total and voting-age counts are untouched while block-level
/// voting-age counts may move when `age` is swapped. At block level partners
/// may come from any other block but must share voting-age status, which
/// keeps every block's counts fixed.
pub fn swap<R: Rng + ?Sized>(
    md: &MicrodataSet,
    cfg: &SwapConfig,
    rng: &mut R,
) -> Result<SwapOutcome> {
    cfg.validate()?;
    let (mut records, geography) = md.clone().into_parts();
    let n = records.len();
    let geo = &geography;

    // Partner pools: by invariant unit, or by voting-age status at block level.
    let mut pools: BTreeMap<(&str, bool), Vec<usize>> = BTreeMap::new();
    let mut group_of = Vec::with_capacity(n);
    for (i, r) in md.records().iter().enumerate() {
        let unit = geo
            .ancestor(&r.block_id, cfg.invariant_level)
            .ok_or_else(|| {
                Error::Consistency(format!("block {:?} missing from geography", r.block_id))
            })?;
        let key = if cfg.invariant_level == GeoLevel::Block {
            ("", r.is_voting_age())
        } else {
            (unit, false)
        };
        pools.entry(key).or_default().push(i);
        group_of.push(key);
    }

    let passes: Vec<Vec<Attribute>> = if cfg.independent_per_attribute {
        cfg.swap_attributes.iter().map(|&a| vec![a]).collect()
    } else {
        vec![cfg.swap_attributes.clone()]
    };
    let initiators = ((cfg.swap_rate * n as f64) / 2.0).round() as usize;
    let mut touched = vec![false; n];
    let mut stats = SwapStats::default();
    let mut candidates = Vec::new();

    for attrs in passes {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut paired = vec![false; n];
        let mut started = 0;
        for &i in &order {
            if started == initiators {
                break;
            }
            if paired[i] {
                continue;
            }
            started += 1;
            let block_i = md.records()[i].block_id.as_str();
            candidates.clear();
            candidates.extend(
                pools[&group_of[i]]
                    .iter()
                    .copied()
                    .filter(|&j| !paired[j] && md.records()[j].block_id != block_i),
            );
            let Some(&j) = candidates.choose(rng) else {
                stats.skipped += 1;
                continue;
            };
            paired[i] = true;
            paired[j] = true;
            stats.pairs += 1;
            for &a in &attrs {
                let (vi, vj) = (records[i].get(a), records[j].get(a));
                records[i].set(a, vj)?;
                records[j].set(a, vi)?;
            }
            touched[i] = true;
            touched[j] = true;
        }
    }
    stats.swapped_records = touched.iter().filter(|&&t| t).count();
    Ok(SwapOutcome {
        microdata: MicrodataSet::new(records, geography)?,
        stats,
    })
}
