//! Small published-table fixtures for regeneration experiments.

use crate::error::Result;
use crate::model::{Attribute, CellKey, FrequencyTable, GeoLevel, Geography};

/// Block that every fixture table describes.
pub const FIXTURE_BLOCK: &str = "01-001-0001-01";

#[derive(Debug, Clone)]
pub struct RegenerationFixture {
    pub name: &'static str,
    pub tables: Vec<FrequencyTable>,
    pub geography: Geography,
    /// The tables admit more than one microdata set.
    pub under_determined: bool,
}

fn block_table(dims: &[Attribute], cells: &[(&[u16], u64)]) -> Result<FrequencyTable> {
    FrequencyTable::from_cells(
        GeoLevel::Block,
        dims.to_vec(),
        cells
            .iter()
            .map(|(v, c)| (CellKey::new(FIXTURE_BLOCK, v.to_vec()), *c)),
    )
}

fn fixture(
    name: &'static str,
    tables: Vec<FrequencyTable>,
    under_determined: bool,
) -> RegenerationFixture {
    RegenerationFixture {
        name,
        tables,
        geography: Geography::grid(1, 1, 1, 1),
        under_determined,
    }
}

pub fn regeneration_fixtures() -> Result<Vec<RegenerationFixture>> {
    use Attribute::{Age, Gender, Race};
    Ok(vec![
        // Ten people sharing one age and gender.
        fixture(
            "homogeneous",
            vec![block_table(&[Age, Gender], &[(&[44, 0], 10)])?],
            false,
        ),
        fixture(
            "unit_counts",
            vec![block_table(
                &[Age, Gender],
                &[(&[44, 0], 1), (&[30, 1], 1)],
            )?],
            false,
        ),
        // Two men of different races: the race labels can be swapped between
        // the two records, but the resulting set is the same.
        fixture(
            "labeled_collapse",
            vec![
                block_table(&[Gender], &[(&[0], 2)])?,
                block_table(&[Race], &[(&[0], 1), (&[1], 1)])?,
            ],
            false,
        ),
        // Gender and race published separately; the cross-classification
        // is free within the margins.
        fixture(
            "separate_marginals",
            vec![
                block_table(&[Gender], &[(&[0], 2), (&[1], 2)])?,
                block_table(&[Race], &[(&[0], 2), (&[1], 2)])?,
            ],
            true,
        ),
    ])
}
