use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::attributes::Attribute;
use super::geography::GeoLevel;
use super::microdata::MicrodataSet;
use crate::error::{Error, Result};

/// Upper bound on the per-geography cell lattice `tabulate` will materialise.
const MAX_LATTICE: usize = 1 << 20;

/// Address of one table cell: a geographic unit plus one value code per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub geo: String,
    pub values: Vec<u16>,
}

impl CellKey {
    pub fn new(geo: impl Into<String>, values: Vec<u16>) -> Self {
        Self {
            geo: geo.into(),
            values,
        }
    }
}

/// Counts of persons by geography and a list of attributes.
///
/// Zero cells are stored explicitly; the key set is the table's cell lattice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    level: GeoLevel,
    dims: Vec<Attribute>,
    cells: BTreeMap<CellKey, u64>,
}

impl FrequencyTable {
    pub fn new(level: GeoLevel, dims: Vec<Attribute>) -> Result<Self> {
        let distinct: BTreeSet<_> = dims.iter().collect();
        if distinct.len() != dims.len() {
            return Err(Error::Schema("table dimensions must be distinct".into()));
        }
        Ok(Self {
            level,
            dims,
            cells: BTreeMap::new(),
        })
    }

    pub fn from_cells<I>(level: GeoLevel, dims: Vec<Attribute>, cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = (CellKey, u64)>,
    {
        let mut table = Self::new(level, dims)?;
        for (key, count) in cells {
            table.set(key, count)?;
        }
        Ok(table)
    }

    /// Sets (not adds) the count of a cell.
    pub fn set(&mut self, key: CellKey, count: u64) -> Result<()> {
        self.check_key(&key)?;
        self.cells.insert(key, count);
        Ok(())
    }

    fn check_key(&self, key: &CellKey) -> Result<()> {
        if key.values.len() != self.dims.len() {
            return Err(Error::Schema(format!(
                "cell has {} values but the table has {} dimensions",
                key.values.len(),
                self.dims.len()
            )));
        }
        for (&attr, &v) in self.dims.iter().zip(&key.values) {
            if v >= attr.domain_size() {
                return Err(Error::Schema(format!(
                    "code {v} is outside the {attr} domain"
                )));
            }
        }
        Ok(())
    }

    pub fn level(&self) -> GeoLevel {
        self.level
    }

    pub fn dims(&self) -> &[Attribute] {
        &self.dims
    }

    pub fn cells(&self) -> &BTreeMap<CellKey, u64> {
        &self.cells
    }

    pub fn count(&self, key: &CellKey) -> u64 {
        self.cells.get(key).copied().unwrap_or(0)
    }

    pub fn contains(&self, key: &CellKey) -> bool {
        self.cells.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn geo_codes(&self) -> BTreeSet<&str> {
        self.cells.keys().map(|k| k.geo.as_str()).collect()
    }

    /// Population of one geographic unit according to this table.
    pub fn total(&self, geo: &str) -> u64 {
        self.cells
            .iter()
            .filter(|(k, _)| k.geo == geo)
            .map(|(_, &c)| c)
            .sum()
    }

    pub fn grand_total(&self) -> u64 {
        self.cells.values().sum()
    }

    pub fn nonzero_cells(&self) -> impl Iterator<Item = (&CellKey, u64)> {
        self.cells
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| (k, c))
    }

    /// Same level, dimensions and counts, treating absent cells as zero.
    pub fn agrees_with(&self, other: &FrequencyTable) -> bool {
        self.level == other.level
            && self.dims == other.dims
            && self.nonzero_cells().eq(other.nonzero_cells())
    }

    /// Positions of `sub` within this table's dimensions.
    pub fn projection(&self, sub: &[Attribute]) -> Result<Vec<usize>> {
        sub.iter()
            .map(|a| {
                self.dims
                    .iter()
                    .position(|d| d == a)
                    .ok_or_else(|| Error::Schema(format!("{a} is not a dimension of this table")))
            })
            .collect()
    }

    /// Sums this table down to a subset of its dimensions at the same level.
    pub fn marginal(&self, sub: &[Attribute]) -> Result<FrequencyTable> {
        let positions = self.projection(sub)?;
        let mut out = FrequencyTable::new(self.level, sub.to_vec())?;
        for (key, &count) in &self.cells {
            let projected = CellKey::new(
                key.geo.clone(),
                positions.iter().map(|&p| key.values[p]).collect(),
            );
            *out.cells.entry(projected).or_insert(0) += count;
        }
        Ok(out)
    }

    fn header(&self) -> Vec<String> {
        std::iter::once("geo_code".to_owned())
            .chain(self.dims.iter().map(|d| d.name().to_owned()))
            .chain(std::iter::once("count".to_owned()))
            .collect()
    }

    fn row(&self, key: &CellKey, last: String) -> Vec<String> {
        std::iter::once(key.geo.clone())
            .chain(self.dims.iter().zip(&key.values).map(|(d, &v)| d.label(v)))
            .chain(std::iter::once(last))
            .collect()
    }

    /// `geo_code,<dim1>,...,<dimK>,count`, with `X` in place of the count
    /// for every cell in `suppressed`.
    pub fn write_csv_with<W: Write>(
        &self,
        writer: W,
        suppressed: &BTreeSet<CellKey>,
    ) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(self.header())?;
        for (key, count) in &self.cells {
            let shown = if suppressed.contains(key) {
                "X".to_owned()
            } else {
                count.to_string()
            };
            w.write_record(self.row(key, shown))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        self.write_csv_with(writer, &BTreeSet::new())
    }

    pub(crate) fn write_marked_csv<W: Write>(
        &self,
        writer: W,
        marks: &BTreeMap<&CellKey, &str>,
    ) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let mut header = self.header();
        *header.last_mut().expect("header has a count column") = "marker".into();
        w.write_record(header)?;
        for (key, mark) in marks {
            w.write_record(self.row(key, (*mark).to_owned()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a fully published table. The geography level is inferred from the
    /// hierarchical geo codes. Returns the table and the keys of any cells
    /// published as `X`; those cells are stored with count 0.
    pub fn read_csv<R: Read>(reader: R) -> Result<(Self, BTreeSet<CellKey>)> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let names: Vec<&str> = headers.iter().collect();
        if names.len() < 2 || names[0] != "geo_code" || names[names.len() - 1] != "count" {
            return Err(Error::Schema(
                "expected header geo_code,<dims...>,count".into(),
            ));
        }
        let dims = Attribute::parse_list(&names[1..names.len() - 1])?;
        let mut level = None;
        let mut cells = Vec::new();
        let mut suppressed = BTreeSet::new();
        for record in rdr.records() {
            let record = record?;
            let geo = record[0].to_owned();
            let row_level = GeoLevel::of_code(&geo)
                .ok_or_else(|| Error::Schema(format!("unrecognised geo code {geo:?}")))?;
            if *level.get_or_insert(row_level) != row_level {
                return Err(Error::Schema("table mixes geography levels".into()));
            }
            let values = dims
                .iter()
                .enumerate()
                .map(|(i, d)| d.parse_value(&record[i + 1]))
                .collect::<Result<Vec<_>>>()?;
            let key = CellKey::new(geo, values);
            let raw = &record[dims.len() + 1];
            let count = if raw == "X" {
                suppressed.insert(key.clone());
                0
            } else {
                raw.parse()
                    .map_err(|_| Error::Schema(format!("invalid count {raw:?}")))?
            };
            cells.push((key, count));
        }
        let table = Self::from_cells(level.unwrap_or(GeoLevel::Block), dims, cells)?;
        Ok((table, suppressed))
    }
}

/// Counts records by the unit at `level` and the values of `dims`.
///
/// Every geographic unit with at least one record gets the full cell lattice
/// (the product of the dimension domains), zeros included.
pub fn tabulate(md: &MicrodataSet, dims: &[Attribute], level: GeoLevel) -> Result<FrequencyTable> {
    let mut table = FrequencyTable::new(level, dims.to_vec())?;
    let lattice: usize = dims.iter().map(|d| usize::from(d.domain_size())).product();
    if lattice > MAX_LATTICE {
        return Err(Error::Capacity {
            what: "cells per geographic unit",
            requested: lattice,
            limit: MAX_LATTICE,
        });
    }
    let geo = md.geography();
    let mut counts: BTreeMap<&str, BTreeMap<Vec<u16>, u64>> = BTreeMap::new();
    for r in md.records() {
        let unit = geo.ancestor(&r.block_id, level).ok_or_else(|| {
            Error::Consistency(format!("block {:?} missing from geography", r.block_id))
        })?;
        *counts
            .entry(unit)
            .or_default()
            .entry(r.values(dims))
            .or_insert(0) += 1;
    }
    for (unit, observed) in counts {
        let mut values = vec![0u16; dims.len()];
        loop {
            let count = observed.get(&values).copied().unwrap_or(0);
            table
                .cells
                .insert(CellKey::new(unit, values.clone()), count);
            // Odometer increment over the lattice.
            let mut pos = dims.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                values[pos] += 1;
                if values[pos] < dims[pos].domain_size() {
                    break;
                }
                values[pos] = 0;
            }
            if values.iter().all(|&v| v == 0) {
                break;
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Ethnicity, Gender, Geography, PersonRecord, Race, Relationship};
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn person(i: usize, block: &str, age: u16, gender: Gender) -> PersonRecord {
        PersonRecord {
            person_id: format!("p{i}").as_str().into(),
            block_id: block.into(),
            age,
            gender,
            race: Race::White,
            ethnicity: Ethnicity::NotHispanic,
            relationship: Relationship::Householder,
        }
    }

    #[test]
    fn ten_identical_records_give_one_nonzero_cell() {
        let geo = Geography::grid(1, 1, 1, 1);
        let records = (0..10)
            .map(|i| person(i, "01-001-0001-01", 44, Gender::Male))
            .collect();
        let md = MicrodataSet::new(records, geo).unwrap();
        let t = tabulate(&md, &[Attribute::Age, Attribute::Gender], GeoLevel::Block).unwrap();
        let nonzero: Vec<_> = t.nonzero_cells().collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].0.values, vec![44, Gender::Male.code()]);
        assert_eq!(nonzero[0].1, 10);
        // Zero cells are explicit: the full age x gender lattice is present.
        assert_eq!(t.len(), 116 * 2);
    }

    #[test]
    fn empty_microdata_gives_empty_table() {
        let t = tabulate(
            &MicrodataSet::empty(),
            &[Attribute::Gender],
            GeoLevel::Block,
        )
        .unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn per_block_gender_counts_match_group_by() {
        let geo = Geography::grid(1, 1, 1, 3);
        let blocks: Vec<String> = geo.blocks().map(str::to_owned).collect();
        let mut rng = rng_from_seed(3);
        let records: Vec<PersonRecord> = (0..60)
            .map(|i| {
                let g = if rng.gen::<bool>() {
                    Gender::Male
                } else {
                    Gender::Female
                };
                person(i, &blocks[rng.gen_range(0..3)], rng.gen_range(0..90), g)
            })
            .collect();
        let md = MicrodataSet::new(records.clone(), geo).unwrap();
        let t = tabulate(&md, &[Attribute::Gender], GeoLevel::Block).unwrap();
        for b in &blocks {
            for g in Gender::ALL {
                let brute = records
                    .iter()
                    .filter(|r| &r.block_id == b && r.gender == *g)
                    .count() as u64;
                assert_eq!(t.count(&CellKey::new(b.as_str(), vec![g.code()])), brute);
            }
            let pop = records.iter().filter(|r| &r.block_id == b).count() as u64;
            assert_eq!(t.total(b), pop);
        }
        let by_tract = tabulate(&md, &[Attribute::Gender], GeoLevel::Tract).unwrap();
        assert_eq!(by_tract.total("01-001-0001"), 60);
    }

    #[test]
    fn duplicate_dimensions_are_rejected() {
        assert!(tabulate(
            &MicrodataSet::empty(),
            &[Attribute::Age, Attribute::Age],
            GeoLevel::Block
        )
        .is_err());
    }

    #[test]
    fn marginal_sums_out_dimensions() {
        let t = FrequencyTable::from_cells(
            GeoLevel::Block,
            vec![Attribute::Gender, Attribute::Ethnicity],
            [
                (CellKey::new("01-001-0001-01", vec![0, 0]), 3),
                (CellKey::new("01-001-0001-01", vec![0, 1]), 1),
                (CellKey::new("01-001-0001-01", vec![1, 1]), 4),
            ],
        )
        .unwrap();
        let m = t.marginal(&[Attribute::Ethnicity]).unwrap();
        assert_eq!(m.count(&CellKey::new("01-001-0001-01", vec![1])), 5);
        assert_eq!(m.count(&CellKey::new("01-001-0001-01", vec![0])), 3);
        assert!(t.marginal(&[Attribute::Age]).is_err());
    }

    #[test]
    fn csv_format_and_suppression_marker() {
        let t = FrequencyTable::from_cells(
            GeoLevel::Block,
            vec![Attribute::Gender],
            [
                (CellKey::new("01-001-0001-01", vec![0]), 1),
                (CellKey::new("01-001-0001-01", vec![1]), 4),
            ],
        )
        .unwrap();
        let hidden: BTreeSet<_> = [CellKey::new("01-001-0001-01", vec![0])].into();
        let mut buf = Vec::new();
        t.write_csv_with(&mut buf, &hidden).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "geo_code,gender,count\n01-001-0001-01,Male,X\n01-001-0001-01,Female,4\n"
        );
        let (back, suppressed) = FrequencyTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(suppressed, hidden);
        assert_eq!(back.count(&CellKey::new("01-001-0001-01", vec![1])), 4);
    }
}
