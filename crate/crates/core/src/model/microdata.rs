use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::attributes::{Attribute, Ethnicity, Gender, Race, Relationship, MAX_AGE, VOTING_AGE};
use super::geography::Geography;
use crate::error::{Error, Result};

/// Ground-truth identity key of a person. Only used to confirm links.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PersonId(pub String);

impl fmt::Display for PersonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PersonId {
    fn from(s: &str) -> Self {
        PersonId(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PersonRecord {
    pub person_id: PersonId,
    pub block_id: String,
    pub age: u16,
    pub gender: Gender,
    pub race: Race,
    pub ethnicity: Ethnicity,
    pub relationship: Relationship,
}

impl PersonRecord {
    pub fn get(&self, attr: Attribute) -> u16 {
        match attr {
            Attribute::Age => self.age,
            Attribute::Gender => self.gender.code(),
            Attribute::Race => self.race.code(),
            Attribute::Ethnicity => self.ethnicity.code(),
            Attribute::Relationship => self.relationship.code(),
        }
    }

    pub fn set(&mut self, attr: Attribute, code: u16) -> Result<()> {
        let bad = || Error::Schema(format!("code {code} is outside the {attr} domain"));
        match attr {
            Attribute::Age if code <= MAX_AGE => self.age = code,
            Attribute::Age => return Err(bad()),
            Attribute::Gender => self.gender = Gender::from_code(code).ok_or_else(bad)?,
            Attribute::Race => self.race = Race::from_code(code).ok_or_else(bad)?,
            Attribute::Ethnicity => self.ethnicity = Ethnicity::from_code(code).ok_or_else(bad)?,
            Attribute::Relationship => {
                self.relationship = Relationship::from_code(code).ok_or_else(bad)?
            }
        }
        Ok(())
    }

    pub fn values(&self, attrs: &[Attribute]) -> Vec<u16> {
        attrs.iter().map(|&a| self.get(a)).collect()
    }

    pub fn is_voting_age(&self) -> bool {
        self.age >= VOTING_AGE
    }
}

/// Flat file row: `person_id,block_id,age,gender,race,ethnicity,relationship`.
#[derive(Debug, Serialize, Deserialize)]
struct RecordRow {
    person_id: String,
    block_id: String,
    age: u16,
    gender: String,
    race: String,
    ethnicity: String,
    relationship: String,
}

impl From<&PersonRecord> for RecordRow {
    fn from(r: &PersonRecord) -> Self {
        RecordRow {
            person_id: r.person_id.0.clone(),
            block_id: r.block_id.clone(),
            age: r.age,
            gender: r.gender.label().to_owned(),
            race: r.race.label().to_owned(),
            ethnicity: r.ethnicity.label().to_owned(),
            relationship: r.relationship.label().to_owned(),
        }
    }
}

impl TryFrom<RecordRow> for PersonRecord {
    type Error = Error;

    fn try_from(row: RecordRow) -> Result<Self> {
        if row.age > MAX_AGE {
            return Err(Error::Schema(format!("age {} exceeds {MAX_AGE}", row.age)));
        }
        Ok(PersonRecord {
            person_id: PersonId(row.person_id),
            block_id: row.block_id,
            age: row.age,
            gender: row.gender.parse()?,
            race: row.race.parse()?,
            ethnicity: row.ethnicity.parse()?,
            relationship: row.relationship.parse()?,
        })
    }
}

/// Person-level records together with the geography they live in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MicrodataSet {
    records: Vec<PersonRecord>,
    geography: Geography,
}

impl MicrodataSet {
    /// Validates that every block is known and person ids are unique.
    pub fn new(records: Vec<PersonRecord>, geography: Geography) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for r in &records {
            if !geography.contains_block(&r.block_id) {
                return Err(Error::Consistency(format!(
                    "record {} is in unknown block {:?}",
                    r.person_id, r.block_id
                )));
            }
            if !seen.insert(&r.person_id) {
                return Err(Error::Consistency(format!(
                    "duplicate person_id {}",
                    r.person_id
                )));
            }
        }
        Ok(Self { records, geography })
    }

    pub fn empty() -> Self {
        Self {
            records: Vec::new(),
            geography: Geography::new(),
        }
    }

    pub fn records(&self) -> &[PersonRecord] {
        &self.records
    }

    pub fn geography(&self) -> &Geography {
        &self.geography
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn into_parts(self) -> (Vec<PersonRecord>, Geography) {
        (self.records, self.geography)
    }

    /// Record indices grouped by block, in block order.
    pub fn block_index(&self) -> std::collections::BTreeMap<&str, Vec<usize>> {
        let mut by_block: std::collections::BTreeMap<&str, Vec<usize>> = Default::default();
        for (i, r) in self.records.iter().enumerate() {
            by_block.entry(r.block_id.as_str()).or_default().push(i);
        }
        by_block
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        for r in &self.records {
            w.serialize(RecordRow::from(r))?;
        }
        // Header is only emitted with the first record.
        if self.records.is_empty() {
            w.write_record([
                "person_id",
                "block_id",
                "age",
                "gender",
                "race",
                "ethnicity",
                "relationship",
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads records; the geography is rebuilt from the hierarchical block codes.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let records = rdr
            .deserialize::<RecordRow>()
            .map(|row| PersonRecord::try_from(row?))
            .collect::<Result<Vec<_>>>()?;
        let geography = Geography::from_block_codes(records.iter().map(|r| r.block_id.as_str()))?;
        Self::new(records, geography)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn person(id: &str, block: &str, age: u16) -> PersonRecord {
        PersonRecord {
            person_id: id.into(),
            block_id: block.into(),
            age,
            gender: Gender::Female,
            race: Race::Asian,
            ethnicity: Ethnicity::Hispanic,
            relationship: Relationship::Grandchild,
        }
    }

    #[test]
    fn csv_round_trip_and_header() {
        let geo = Geography::grid(1, 1, 1, 2);
        let md = MicrodataSet::new(
            vec![
                person("p1", "01-001-0001-01", 7),
                person("p2", "01-001-0001-02", 90),
            ],
            geo,
        )
        .unwrap();
        let mut buf = Vec::new();
        md.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("person_id,block_id,age,gender,race,ethnicity,relationship\n"));
        assert!(text.contains("p1,01-001-0001-01,7,Female,Asian,Hispanic,Grandchild\n"));
        assert!(!text.contains('\r'));
        let back = MicrodataSet::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, md);
    }

    #[test]
    fn unknown_block_and_duplicate_ids_are_rejected() {
        let geo = Geography::grid(1, 1, 1, 1);
        assert!(MicrodataSet::new(vec![person("p", "01-001-0001-09", 1)], geo.clone()).is_err());
        assert!(MicrodataSet::new(
            vec![
                person("p", "01-001-0001-01", 1),
                person("p", "01-001-0001-01", 2)
            ],
            geo
        )
        .is_err());
    }

    #[test]
    fn set_rejects_out_of_domain_codes() {
        let mut p = person("p", "b", 1);
        assert!(p.set(Attribute::Relationship, 17).is_err());
        p.set(Attribute::Relationship, 16).unwrap();
        assert_eq!(p.relationship, Relationship::GroupQuarters);
        assert!(p.set(Attribute::Age, MAX_AGE + 1).is_err());
    }
}
