//! Synthetic block populations, including the three single-block linkage
//! scenarios.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::attributes::{Attribute, Ethnicity, Gender, Race, Relationship, MAX_AGE};
use super::geography::Geography;
use super::microdata::{MicrodataSet, PersonId, PersonRecord};
use crate::error::{Error, Result};
use crate::linkage::{ExternalDatabase, ExternalRecord, Identity, IdentityRegistry};

/// Probability, per attribute, that a record takes its block's modal value
/// instead of a uniformly drawn one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homogeneity {
    pub age: f64,
    pub gender: f64,
    pub race: f64,
    pub ethnicity: f64,
    pub relationship: f64,
}

impl Homogeneity {
    pub fn uniform(p: f64) -> Self {
        Self {
            age: p,
            gender: p,
            race: p,
            ethnicity: p,
            relationship: p,
        }
    }

    fn get(&self, attr: Attribute) -> f64 {
        match attr {
            Attribute::Age => self.age,
            Attribute::Gender => self.gender,
            Attribute::Race => self.race,
            Attribute::Ethnicity => self.ethnicity,
            Attribute::Relationship => self.relationship,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub blocks: usize,
    pub block_size: usize,
    pub homogeneity: Homogeneity,
    /// Quasi-identifiers carried by the external database.
    pub external_fields: Vec<Attribute>,
    /// Fraction of persons present in the external database.
    pub coverage: f64,
    /// Fraction of external records whose age is off by 1..=`age_error_max`.
    pub age_error_rate: f64,
    pub age_error_max: u16,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            blocks: 10,
            block_size: 10,
            homogeneity: Homogeneity::uniform(0.5),
            external_fields: vec![Attribute::Age, Attribute::Gender],
            coverage: 1.0,
            age_error_rate: 0.0,
            age_error_max: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PopulationSpec {
    /// One of the three single-block scenarios (1, 2 or 3).
    Scenario(u8),
    Synthetic(SyntheticSpec),
}

/// Ground truth, the attacker's identified external source, and the
/// identity registry used to confirm links.
#[derive(Debug, Clone)]
pub struct GeneratedPopulation {
    pub microdata: MicrodataSet,
    pub external: ExternalDatabase,
    pub registry: IdentityRegistry,
}

const SCENARIO_BLOCK: &str = "01-001-0001-01";
const SCENARIO_SIZE: usize = 10;
const STREETS: [&str; 6] = ["Oak", "Maple", "Cedar", "Elm", "Pine", "Birch"];

fn identity_for(block_index: usize, k: usize) -> Identity {
    Identity {
        name: format!("Person {block_index}-{k}"),
        address: format!(
            "{} {} St",
            100 + 2 * k,
            STREETS[block_index % STREETS.len()]
        ),
    }
}

pub fn generate_block_population<R: Rng + ?Sized>(
    spec: &PopulationSpec,
    rng: &mut R,
) -> Result<GeneratedPopulation> {
    match spec {
        PopulationSpec::Scenario(id) => scenario(*id, rng),
        PopulationSpec::Synthetic(s) => synthetic(s, rng),
    }
}

fn scenario<R: Rng + ?Sized>(id: u8, rng: &mut R) -> Result<GeneratedPopulation> {
    if !(1..=3).contains(&id) {
        return Err(Error::InvalidScenario(id));
    }
    let geography = Geography::from_block_codes([SCENARIO_BLOCK])?;
    let mut relationships = Relationship::ALL.to_vec();
    relationships.shuffle(rng);
    let mut race_eth: Vec<(Race, Ethnicity)> = Race::ALL
        .iter()
        .flat_map(|&r| Ethnicity::ALL.iter().map(move |&e| (r, e)))
        .collect();
    race_eth.shuffle(rng);

    let mut registry = IdentityRegistry::default();
    let records: Vec<PersonRecord> = (0..SCENARIO_SIZE)
        .map(|k| {
            let person_id = PersonId(format!("S{id}-{k:02}"));
            registry.insert(person_id.clone(), identity_for(0, k));
            let (race, ethnicity) = match id {
                3 => race_eth[k],
                _ => (Race::White, Ethnicity::NotHispanic),
            };
            PersonRecord {
                person_id,
                block_id: SCENARIO_BLOCK.to_owned(),
                age: 44,
                gender: Gender::Male,
                race,
                ethnicity,
                relationship: match id {
                    2 => relationships[k],
                    _ => Relationship::Householder,
                },
            }
        })
        .collect();
    let microdata = MicrodataSet::new(records, geography)?;

    let fields = match id {
        3 => vec![Attribute::Race, Attribute::Ethnicity],
        _ => vec![Attribute::Age, Attribute::Gender],
    };
    let mut ext_records: Vec<ExternalRecord> = microdata
        .records()
        .iter()
        .map(|r| {
            let identity = registry.get(&r.person_id).expect("just registered");
            ExternalRecord {
                name: identity.name.clone(),
                address: identity.address.clone(),
                block_id: r.block_id.clone(),
                values: r.values(&fields),
            }
        })
        .collect();
    ext_records.shuffle(rng);
    let external = ExternalDatabase::new(fields, ext_records, 1.0)?;
    Ok(GeneratedPopulation {
        microdata,
        external,
        registry,
    })
}

fn draw_value<R: Rng + ?Sized>(attr: Attribute, rng: &mut R) -> u16 {
    match attr {
        // Uniform over ages 0..=90; the tail up to MAX_AGE is left empty.
        Attribute::Age => rng.gen_range(0..=90.min(MAX_AGE)),
        _ => rng.gen_range(0..attr.domain_size()),
    }
}

fn synthetic<R: Rng + ?Sized>(spec: &SyntheticSpec, rng: &mut R) -> Result<GeneratedPopulation> {
    if spec.blocks == 0 {
        return Err(Error::Parameter("blocks must be at least 1".into()));
    }
    for (name, p) in [
        ("coverage", spec.coverage),
        ("age_error_rate", spec.age_error_rate),
        ("homogeneity.age", spec.homogeneity.age),
        ("homogeneity.gender", spec.homogeneity.gender),
        ("homogeneity.race", spec.homogeneity.race),
        ("homogeneity.ethnicity", spec.homogeneity.ethnicity),
        ("homogeneity.relationship", spec.homogeneity.relationship),
    ] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Parameter(format!(
                "{name} must lie in [0, 1], got {p}"
            )));
        }
    }

    // Ten blocks per tract, one county, one state.
    let block_codes: Vec<String> = (0..spec.blocks)
        .map(|b| format!("01-001-{:04}-{:02}", b / 10 + 1, b % 10 + 1))
        .collect();
    let geography = Geography::from_block_codes(block_codes.iter().map(String::as_str))?;

    let mut registry = IdentityRegistry::default();
    let mut records = Vec::with_capacity(spec.blocks * spec.block_size);
    for (b, block) in block_codes.iter().enumerate() {
        let modal: Vec<u16> = Attribute::ALL.iter().map(|&a| draw_value(a, rng)).collect();
        for k in 0..spec.block_size {
            let person_id = PersonId(format!("P{b:04}-{k:03}"));
            registry.insert(person_id.clone(), identity_for(b, k));
            let mut record = PersonRecord {
                person_id,
                block_id: block.clone(),
                age: 0,
                gender: Gender::Male,
                race: Race::White,
                ethnicity: Ethnicity::Hispanic,
                relationship: Relationship::Householder,
            };
            for (i, &attr) in Attribute::ALL.iter().enumerate() {
                let v = if rng.gen_bool(spec.homogeneity.get(attr)) {
                    modal[i]
                } else {
                    draw_value(attr, rng)
                };
                record.set(attr, v)?;
            }
            records.push(record);
        }
    }
    let microdata = MicrodataSet::new(records, geography)?;

    let fields = spec.external_fields.clone();
    let age_pos = fields.iter().position(|&a| a == Attribute::Age);
    let mut ext_records = Vec::new();
    for r in microdata.records() {
        if !rng.gen_bool(spec.coverage) {
            continue;
        }
        let identity = registry.get(&r.person_id).expect("registered above");
        let mut values = r.values(&fields);
        if let Some(pos) = age_pos {
            if spec.age_error_max > 0 && rng.gen_bool(spec.age_error_rate) {
                let shift = rng.gen_range(1..=spec.age_error_max);
                values[pos] = if rng.gen::<bool>() || values[pos] < shift {
                    (values[pos] + shift).min(MAX_AGE)
                } else {
                    values[pos] - shift
                };
            }
        }
        ext_records.push(ExternalRecord {
            name: identity.name.clone(),
            address: identity.address.clone(),
            block_id: r.block_id.clone(),
            values,
        });
    }
    ext_records.shuffle(rng);
    let external = ExternalDatabase::new(fields, ext_records, spec.coverage)?;
    Ok(GeneratedPopulation {
        microdata,
        external,
        registry,
    })
}
