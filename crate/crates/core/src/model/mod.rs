//! Ground-truth objects shared by every mechanism and attack.

mod attributes;
mod database;
mod geography;
mod microdata;
mod population;
mod table;

pub use attributes::{Attribute, Ethnicity, Gender, Race, Relationship, MAX_AGE, VOTING_AGE};
pub use database::{
    enumerate_all_queries, sample_random_queries, true_count, BinaryDatabase, QueryAnswer,
    SubsetQuery, MAX_ENUMERATION_N,
};
pub use geography::{GeoLevel, Geography};
pub use microdata::{MicrodataSet, PersonId, PersonRecord};
pub use population::{
    generate_block_population, GeneratedPopulation, Homogeneity, PopulationSpec, SyntheticSpec,
};
pub use table::{tabulate, CellKey, FrequencyTable};
