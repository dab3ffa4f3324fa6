use rand::Rng;
use serde::{Deserialize, Serialize};

use super::agreement::reconstruction_agreement;
use super::link::{confirm, link, LinkStatus, LinkageReport};
use crate::error::Result;
use crate::model::{generate_block_population, tabulate, Attribute, GeoLevel, PopulationSpec};
use crate::reconstruction::regenerate_from_tables;

/// Reconstruction accuracy and reidentification outcome for one of the
/// three single-block scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub scenario: u8,
    /// Agreement of the regenerated block with the truth over all attributes.
    pub agreement: f64,
    pub ambiguous: usize,
    pub putative_unique: usize,
    pub report: LinkageReport,
}

/// Publishes the scenario block's full cross-tabulation, regenerates
/// microdata from it, links the result to the scenario's external database
/// on that database's fields, and confirms against the truth.
pub fn evaluate_scenario<R: Rng + ?Sized>(
    id: u8,
    trials: usize,
    rng: &mut R,
) -> Result<ScenarioOutcome> {
    let pop = generate_block_population(&PopulationSpec::Scenario(id), rng)?;
    let truth = &pop.microdata;
    let table = tabulate(truth, &Attribute::ALL, GeoLevel::Block)?;
    let recon = regenerate_from_tables(&[table], truth.geography())?.microdata;
    let agreement = reconstruction_agreement(&recon, truth, &Attribute::ALL)?;
    let qis = pop.external.fields().to_vec();
    let mut results = link(&recon, &pop.external, &qis)?;
    let report = confirm(
        &mut results,
        &recon,
        &pop.external,
        truth,
        &pop.registry,
        &qis,
        trials,
        rng,
    )?;
    let count = |s| results.iter().filter(|r| r.status == s).count();
    Ok(ScenarioOutcome {
        scenario: id,
        agreement,
        ambiguous: count(LinkStatus::Ambiguous),
        putative_unique: count(LinkStatus::PutativeUnique),
        report,
    })
}
