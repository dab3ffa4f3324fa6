use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Attribute, PersonId};

/// A named person at an address.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Identity {
    pub name: String,
    pub address: String,
}

/// Ground-truth mapping between person ids and identities.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityRegistry {
    by_person: BTreeMap<PersonId, Identity>,
}

impl IdentityRegistry {
    pub fn insert(&mut self, person: PersonId, identity: Identity) {
        self.by_person.insert(person, identity);
    }

    pub fn get(&self, person: &PersonId) -> Option<&Identity> {
        self.by_person.get(person)
    }

    /// Reverse lookup, identity → person id.
    pub fn person_of(&self, identity: &Identity) -> Option<&PersonId> {
        self.by_person
            .iter()
            .find(|(_, id)| *id == identity)
            .map(|(p, _)| p)
    }

    pub fn reverse(&self) -> BTreeMap<&Identity, &PersonId> {
        self.by_person.iter().map(|(p, i)| (i, p)).collect()
    }

    pub fn len(&self) -> usize {
        self.by_person.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_person.is_empty()
    }
}

/// One identified record; `values` holds codes for the database's fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalRecord {
    pub name: String,
    pub address: String,
    pub block_id: String,
    pub values: Vec<u16>,
}

impl ExternalRecord {
    pub fn identity(&self) -> Identity {
        Identity {
            name: self.name.clone(),
            address: self.address.clone(),
        }
    }
}

/// Identified external source (e.g. a commercial database).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalDatabase {
    fields: Vec<Attribute>,
    records: Vec<ExternalRecord>,
    coverage: f64,
}

impl ExternalDatabase {
    /// `fields` are kept in canonical attribute order; record values must
    /// follow the order given here and are re-ordered accordingly.
    pub fn new(
        fields: Vec<Attribute>,
        mut records: Vec<ExternalRecord>,
        coverage: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&coverage) {
            return Err(Error::Parameter(format!(
                "coverage must lie in [0, 1], got {coverage}"
            )));
        }
        let distinct: BTreeSet<_> = fields.iter().collect();
        if distinct.len() != fields.len() {
            return Err(Error::Schema(
                "external database fields must be distinct".into(),
            ));
        }
        let mut order: Vec<usize> = (0..fields.len()).collect();
        order.sort_by_key(|&i| fields[i]);
        let sorted_fields: Vec<Attribute> = order.iter().map(|&i| fields[i]).collect();

        let mut identities = BTreeSet::new();
        for r in &mut records {
            if r.values.len() != fields.len() {
                return Err(Error::Schema(format!(
                    "external record for {:?} has {} values, expected {}",
                    r.name,
                    r.values.len(),
                    fields.len()
                )));
            }
            r.values = order.iter().map(|&i| r.values[i]).collect();
            for (&attr, &v) in sorted_fields.iter().zip(&r.values) {
                if v >= attr.domain_size() {
                    return Err(Error::Schema(format!(
                        "code {v} is outside the {attr} domain"
                    )));
                }
            }
            if !identities.insert((r.name.clone(), r.address.clone())) {
                return Err(Error::Consistency(format!(
                    "duplicate external identity ({:?}, {:?})",
                    r.name, r.address
                )));
            }
        }
        Ok(Self {
            fields: sorted_fields,
            records,
            coverage,
        })
    }

    pub fn empty(fields: Vec<Attribute>) -> Result<Self> {
        Self::new(fields, Vec::new(), 0.0)
    }

    pub fn fields(&self) -> &[Attribute] {
        &self.fields
    }

    pub fn records(&self) -> &[ExternalRecord] {
        &self.records
    }

    pub fn coverage(&self) -> f64 {
        self.coverage
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn field_position(&self, attr: Attribute) -> Option<usize> {
        self.fields.iter().position(|&f| f == attr)
    }

    /// `name,address,block_id[,age][,gender][,race][,ethnicity][,relationship]`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let header: Vec<&str> = ["name", "address", "block_id"]
            .into_iter()
            .chain(self.fields.iter().map(|f| f.name()))
            .collect();
        w.write_record(&header)?;
        for r in &self.records {
            let row: Vec<String> = [r.name.clone(), r.address.clone(), r.block_id.clone()]
                .into_iter()
                .chain(self.fields.iter().zip(&r.values).map(|(f, &v)| f.label(v)))
                .collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Coverage is not part of the file; it is set to 1.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let names: Vec<&str> = headers.iter().collect();
        if names.len() < 3 || names[..3] != ["name", "address", "block_id"] {
            return Err(Error::Schema(
                "expected header name,address,block_id[,fields...]".into(),
            ));
        }
        let fields = Attribute::parse_list(&names[3..])?;
        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let values = fields
                .iter()
                .enumerate()
                .map(|(i, f)| f.parse_value(&row[i + 3]))
                .collect::<Result<Vec<_>>>()?;
            records.push(ExternalRecord {
                name: row[0].to_owned(),
                address: row[1].to_owned(),
                block_id: row[2].to_owned(),
                values,
            });
        }
        Self::new(fields, records, 1.0)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}
