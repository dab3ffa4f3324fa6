use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::agreement::match_blocks;
use super::external::{ExternalDatabase, Identity, IdentityRegistry};
use crate::error::{Error, Result};
use crate::model::{Attribute, MicrodataSet, PersonRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkStatus {
    Unmatched,
    Ambiguous,
    PutativeUnique,
}

/// Outcome of linking one reconstructed record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkResult {
    /// Index into the reconstructed microdata.
    pub record: usize,
    /// Indices into the external database.
    pub matched_external: Vec<usize>,
    pub status: LinkStatus,
    /// Set by [`confirm`].
    pub confirmed: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkageReport {
    pub quasi_identifiers: Vec<Attribute>,
    pub records: usize,
    pub external_records: usize,
    pub trials: usize,
    pub putative_match_rate: f64,
    pub confirmed_match_rate: f64,
    pub per_record_correct_probability: f64,
    /// Reconstructed records whose (block, quasi-identifier) combination is unique.
    pub unique_cell_count: usize,
    /// Share of external records confirmed against the reconstruction.
    pub r: f64,
    /// Share of the remaining external records reidentified directly
    /// against the confidential data.
    pub r_prime: Option<f64>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn qi_positions(ext: &ExternalDatabase, qis: &[Attribute]) -> Result<Vec<usize>> {
    qis.iter()
        .map(|&q| {
            ext.field_position(q).ok_or_else(|| {
                Error::Schema(format!(
                    "quasi-identifier {q} is not a field of the external database"
                ))
            })
        })
        .collect()
}

/// External record indices keyed by (block, quasi-identifier values).
fn external_index<'a>(
    ext: &'a ExternalDatabase,
    positions: &[usize],
) -> BTreeMap<(&'a str, Vec<u16>), Vec<usize>> {
    let mut index: BTreeMap<(&str, Vec<u16>), Vec<usize>> = BTreeMap::new();
    for (i, e) in ext.records().iter().enumerate() {
        let key = positions.iter().map(|&p| e.values[p]).collect();
        index.entry((e.block_id.as_str(), key)).or_default().push(i);
    }
    index
}

fn qi_counts<'a>(
    records: &'a [PersonRecord],
    qis: &[Attribute],
) -> BTreeMap<(&'a str, Vec<u16>), usize> {
    let mut counts = BTreeMap::new();
    for r in records {
        *counts
            .entry((r.block_id.as_str(), r.values(qis)))
            .or_insert(0) += 1;
    }
    counts
}

/// Links every reconstructed record to the external records in its block
/// that agree exactly on all quasi-identifiers.
///
/// A record is `PutativeUnique` when it has exactly one match and no other
/// reconstructed record in its block shares its quasi-identifiers;
/// otherwise any match makes it `Ambiguous`.
pub fn link(
    recon: &MicrodataSet,
    ext: &ExternalDatabase,
    quasi_identifiers: &[Attribute],
) -> Result<Vec<LinkResult>> {
    let positions = qi_positions(ext, quasi_identifiers)?;
    let index = external_index(ext, &positions);
    let counts = qi_counts(recon.records(), quasi_identifiers);
    Ok(recon
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let key = (r.block_id.as_str(), r.values(quasi_identifiers));
            let matched = index.get(&key).cloned().unwrap_or_default();
            let status = match matched.len() {
                0 => LinkStatus::Unmatched,
                1 if counts[&key] == 1 => LinkStatus::PutativeUnique,
                _ => LinkStatus::Ambiguous,
            };
            LinkResult {
                record: i,
                matched_external: matched,
                status,
                confirmed: None,
            }
        })
        .collect())
}

fn identity_of<'a>(registry: &'a IdentityRegistry, record: &PersonRecord) -> Result<&'a Identity> {
    registry.get(&record.person_id).ok_or_else(|| {
        Error::Data(format!(
            "no identity registered for person {}",
            record.person_id
        ))
    })
}

/// Checks putative links against ground truth and summarises the linkage.
///
/// Each reconstructed record stands for the true person it is paired with by
/// the best per-block matching on all attributes. A putative unique link is
/// confirmed when the external identity is that person's identity; ambiguous
/// and unmatched records are never confirmed. The per-record probability of
/// a correct identification picks uniformly among each record's matches,
/// averaged over `trials` draws.
#[allow(clippy::too_many_arguments)]
pub fn confirm<R: Rng + ?Sized>(
    results: &mut [LinkResult],
    recon: &MicrodataSet,
    ext: &ExternalDatabase,
    truth: &MicrodataSet,
    registry: &IdentityRegistry,
    quasi_identifiers: &[Attribute],
    trials: usize,
    rng: &mut R,
) -> Result<LinkageReport> {
    if trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    if results.len() != recon.len() {
        return Err(Error::LengthMismatch {
            left: results.len(),
            right: recon.len(),
        });
    }
    let partner = match_blocks(recon, truth, &Attribute::ALL)?;
    let identities = partner
        .iter()
        .map(|&j| identity_of(registry, &truth.records()[j]))
        .collect::<Result<Vec<_>>>()?;
    let correct = |i: usize, e: usize| ext.records()[e].identity() == *identities[i];

    let mut confirmed_ext = BTreeSet::new();
    for res in results.iter_mut() {
        let ok = res.status == LinkStatus::PutativeUnique
            && correct(res.record, res.matched_external[0]);
        if ok {
            confirmed_ext.insert(res.matched_external[0]);
        }
        res.confirmed = Some(ok);
    }
    let mut hits = 0usize;
    for _ in 0..trials {
        for res in results.iter() {
            if !res.matched_external.is_empty() {
                let pick = res.matched_external[rng.gen_range(0..res.matched_external.len())];
                hits += usize::from(correct(res.record, pick));
            }
        }
    }
    let n = results.len();
    Ok(LinkageReport {
        quasi_identifiers: quasi_identifiers.to_vec(),
        records: n,
        external_records: ext.len(),
        trials,
        putative_match_rate: ratio(
            results
                .iter()
                .filter(|r| r.status == LinkStatus::PutativeUnique)
                .count(),
            n,
        ),
        confirmed_match_rate: ratio(
            results.iter().filter(|r| r.confirmed == Some(true)).count(),
            n,
        ),
        per_record_correct_probability: ratio(hits, n * trials),
        unique_cell_count: qi_counts(recon.records(), quasi_identifiers)
            .values()
            .filter(|&&c| c == 1)
            .count(),
        r: ratio(confirmed_ext.len(), ext.len()),
        r_prime: None,
    })
}

/// Links the external database to the reconstruction (rate `r`), then links
/// the external records left unconfirmed directly to the confidential
/// microdata on the same block and quasi-identifier key (rate `r′`). A direct
/// link counts when exactly one true record matches and it is the same
/// person.
#[allow(clippy::too_many_arguments)]
pub fn r_vs_r_prime<R: Rng + ?Sized>(
    recon: &MicrodataSet,
    ext: &ExternalDatabase,
    truth: &MicrodataSet,
    registry: &IdentityRegistry,
    quasi_identifiers: &[Attribute],
    trials: usize,
    rng: &mut R,
) -> Result<LinkageReport> {
    let mut results = link(recon, ext, quasi_identifiers)?;
    let mut report = confirm(
        &mut results,
        recon,
        ext,
        truth,
        registry,
        quasi_identifiers,
        trials,
        rng,
    )?;
    let confirmed: BTreeSet<usize> = results
        .iter()
        .filter(|r| r.confirmed == Some(true))
        .map(|r| r.matched_external[0])
        .collect();

    let positions = qi_positions(ext, quasi_identifiers)?;
    let mut truth_index: BTreeMap<(&str, Vec<u16>), Vec<usize>> = BTreeMap::new();
    for (j, t) in truth.records().iter().enumerate() {
        truth_index
            .entry((t.block_id.as_str(), t.values(quasi_identifiers)))
            .or_default()
            .push(j);
    }
    let mut residual = 0usize;
    let mut reidentified = 0usize;
    for (i, e) in ext.records().iter().enumerate() {
        if confirmed.contains(&i) {
            continue;
        }
        residual += 1;
        let key = (
            e.block_id.as_str(),
            positions.iter().map(|&p| e.values[p]).collect(),
        );
        if let Some([j]) = truth_index.get(&key).map(Vec::as_slice) {
            if *identity_of(registry, &truth.records()[*j])? == e.identity() {
                reidentified += 1;
            }
        }
    }
    report.r_prime = Some(ratio(reidentified, residual));
    Ok(report)
}
