use std::collections::BTreeMap;

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

use crate::error::{Error, Result};
use crate::model::{Attribute, MicrodataSet, PersonRecord};

fn agreement(a: &PersonRecord, b: &PersonRecord, attrs: &[Attribute]) -> i64 {
    attrs.iter().filter(|&&x| a.get(x) == b.get(x)).count() as i64
}

/// Pairs each reconstructed record with a true record in the same block so
/// that the total number of agreeing `attrs` values is maximal.
///
/// Returns, for each record of `recon`, the index of its partner in `truth`.
pub fn match_blocks(
    recon: &MicrodataSet,
    truth: &MicrodataSet,
    attrs: &[Attribute],
) -> Result<Vec<usize>> {
    let recon_blocks = recon.block_index();
    let truth_blocks = truth.block_index();
    let sizes = |m: &BTreeMap<&str, Vec<usize>>| -> BTreeMap<String, usize> {
        m.iter().map(|(b, v)| ((*b).to_owned(), v.len())).collect()
    };
    if sizes(&recon_blocks) != sizes(&truth_blocks) {
        let diff = recon_blocks
            .keys()
            .chain(truth_blocks.keys())
            .find(|b| {
                recon_blocks.get(*b).map_or(0, Vec::len) != truth_blocks.get(*b).map_or(0, Vec::len)
            })
            .copied()
            .unwrap_or_default();
        return Err(Error::Consistency(format!(
            "block {diff:?} has {} reconstructed and {} true records",
            recon_blocks.get(diff).map_or(0, Vec::len),
            truth_blocks.get(diff).map_or(0, Vec::len)
        )));
    }
    let mut partner = vec![0; recon.len()];
    for (block, rs) in &recon_blocks {
        let ts = &truth_blocks[block];
        let weights = Matrix::from_fn(rs.len(), ts.len(), |(i, j)| {
            agreement(&recon.records()[rs[i]], &truth.records()[ts[j]], attrs)
        });
        let (_, assignment) = kuhn_munkres(&weights);
        for (i, j) in assignment.into_iter().enumerate() {
            partner[rs[i]] = ts[j];
        }
    }
    Ok(partner)
}

/// Fraction of `attrs` values that agree under the best per-block pairing
/// of reconstructed and true records.
pub fn reconstruction_agreement(
    recon: &MicrodataSet,
    truth: &MicrodataSet,
    attrs: &[Attribute],
) -> Result<f64> {
    if attrs.is_empty() {
        return Err(Error::Parameter(
            "at least one attribute is required".into(),
        ));
    }
    if truth.is_empty() {
        return Err(Error::Undefined(
            "agreement over an empty population".into(),
        ));
    }
    let partner = match_blocks(recon, truth, attrs)?;
    let agreeing: i64 = partner
        .iter()
        .enumerate()
        .map(|(i, &j)| agreement(&recon.records()[i], &truth.records()[j], attrs))
        .sum();
    Ok(agreeing as f64 / (recon.len() * attrs.len()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        generate_block_population, Ethnicity, Gender, Geography, PersonId, PopulationSpec, Race,
        Relationship,
    };
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn record(id: &str, block: &str, age: u16, race: Race) -> PersonRecord {
        PersonRecord {
            person_id: PersonId(id.into()),
            block_id: block.into(),
            age,
            gender: Gender::Female,
            race,
            ethnicity: Ethnicity::NotHispanic,
            relationship: Relationship::Householder,
        }
    }

    fn geo() -> Geography {
        Geography::grid(1, 1, 1, 2)
    }

    fn blocks() -> Vec<String> {
        geo().blocks().map(str::to_owned).collect()
    }

    /// Best agreement over every permutation within each block.
    fn brute_force(recon: &MicrodataSet, truth: &MicrodataSet, attrs: &[Attribute]) -> f64 {
        fn best(
            r: &[&PersonRecord],
            t: &mut Vec<&PersonRecord>,
            k: usize,
            attrs: &[Attribute],
        ) -> i64 {
            if k == t.len() {
                return r
                    .iter()
                    .zip(t.iter())
                    .map(|(a, b)| agreement(a, b, attrs))
                    .sum();
            }
            let mut top = i64::MIN;
            for i in k..t.len() {
                t.swap(k, i);
                top = top.max(best(r, t, k + 1, attrs));
                t.swap(k, i);
            }
            top
        }
        let rb = recon.block_index();
        let tb = truth.block_index();
        let total: i64 = rb
            .iter()
            .map(|(b, rs)| {
                let r: Vec<_> = rs.iter().map(|&i| &recon.records()[i]).collect();
                let mut t: Vec<_> = tb[b].iter().map(|&i| &truth.records()[i]).collect();
                best(&r, &mut t, 0, attrs)
            })
            .sum();
        total as f64 / (recon.len() * attrs.len()) as f64
    }

    #[test]
    fn identical_sets_agree_fully() {
        let truth = generate_block_population(&PopulationSpec::Scenario(2), &mut rng_from_seed(1))
            .unwrap()
            .microdata;
        let a = reconstruction_agreement(&truth, &truth, &Attribute::ALL).unwrap();
        assert_eq!(a, 1.0);
    }

    #[test]
    fn modal_fill_scores_the_modal_share() {
        let b = blocks();
        let races = [
            Race::White,
            Race::White,
            Race::White,
            Race::Black,
            Race::Asian,
        ];
        let truth = MicrodataSet::new(
            races
                .iter()
                .enumerate()
                .map(|(i, &r)| record(&format!("t{i}"), &b[0], 30, r))
                .collect(),
            geo(),
        )
        .unwrap();
        let recon = MicrodataSet::new(
            (0..5)
                .map(|i| record(&format!("r{i}"), &b[0], 30, Race::White))
                .collect(),
            geo(),
        )
        .unwrap();
        let a = reconstruction_agreement(&recon, &truth, &[Attribute::Race]).unwrap();
        assert!((a - 0.6).abs() < 1e-12);
    }

    #[test]
    fn matches_permutation_oracle() {
        let b = blocks();
        let mut rng = rng_from_seed(5);
        for _ in 0..30 {
            let make = |rng: &mut crate::LabRng, prefix: &str| {
                let mut recs = Vec::new();
                for (bi, block) in b.iter().enumerate() {
                    for k in 0..rng.gen_range(1..=6) {
                        let _ = k;
                        recs.push(record(
                            &format!("{prefix}{bi}-{}", recs.len()),
                            block,
                            rng.gen_range(20..23),
                            Race::ALL[rng.gen_range(0..3)],
                        ));
                    }
                }
                recs
            };
            let truth_recs = make(&mut rng, "t");
            // Same block sizes, fresh values.
            let recon_recs: Vec<_> = truth_recs
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    record(
                        &format!("r{i}"),
                        &t.block_id,
                        rng.gen_range(20..23),
                        Race::ALL[rng.gen_range(0..3)],
                    )
                })
                .collect();
            let truth = MicrodataSet::new(truth_recs, geo()).unwrap();
            let recon = MicrodataSet::new(recon_recs, geo()).unwrap();
            let attrs = [Attribute::Age, Attribute::Race];
            let a = reconstruction_agreement(&recon, &truth, &attrs).unwrap();
            assert!((a - brute_force(&recon, &truth, &attrs)).abs() < 1e-12);
        }
    }

    #[test]
    fn block_size_mismatch_is_an_error() {
        let b = blocks();
        let truth = MicrodataSet::new(vec![record("t0", &b[0], 1, Race::White)], geo()).unwrap();
        let recon = MicrodataSet::new(vec![record("r0", &b[1], 1, Race::White)], geo()).unwrap();
        assert!(matches!(
            reconstruction_agreement(&recon, &truth, &[Attribute::Age]),
            Err(Error::Consistency(_))
        ));
    }
}
