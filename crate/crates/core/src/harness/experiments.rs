use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::json;

use super::fixtures::regeneration_fixtures;
use super::params::{spec, Kind, ParamSpec, Params};
use crate::error::{Error, Result};
use crate::linkage::{evaluate_scenario, r_vs_r_prime, reconstruction_agreement};
use crate::mechanisms::{
    answer_bounded, answer_laplace, compose, laplace_tail, privacy_ratio, rr_estimate_proportion,
    rr_flip, rr_p_from_epsilon, zcdp_to_epsilon, BoundedNoiseMechanism, LaplaceMechanism,
    LedgerEntry, NoiseDistribution, PrivacyAccountant, RandomizedResponse, ZcdpParams,
};
use crate::model::{
    enumerate_all_queries, generate_block_population, sample_random_queries, tabulate, true_count,
    Attribute, BinaryDatabase, CellKey, FrequencyTable, GeoLevel, Geography, Homogeneity,
    MicrodataSet, PopulationSpec, QueryAnswer, SubsetQuery, SyntheticSpec,
};
use crate::reconstruction::{exhaustive_feasible_set, lp_reconstruct, regenerate_from_tables};
use crate::rng::SeedTree;
use crate::sdc::{
    audit_recoverable, primary_suppress, secondary_suppress, standard_marginals, swap, SwapConfig,
};

/// Everything an experiment produces apart from the config echo and timing.
#[derive(Debug, Default)]
pub(crate) struct Output {
    pub metrics: BTreeMap<String, f64>,
    pub tables: BTreeMap<String, String>,
    pub ledgers: BTreeMap<String, Vec<LedgerEntry>>,
}

impl Output {
    fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    fn count(&mut self, key: impl Into<String>, value: usize) {
        self.metric(key, value as f64);
    }
}

struct Csv(csv::Writer<Vec<u8>>);

impl Csv {
    fn new(header: &[&str]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        Ok(Self(w))
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, values: I) -> Result<()> {
        self.0
            .write_record(values.into_iter().collect::<Vec<_>>())?;
        Ok(())
    }

    fn finish(self) -> Result<String> {
        let bytes = self
            .0
            .into_inner()
            .map_err(|e| Error::Data(format!("csv buffer: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
    }
}

fn noise(name: &str) -> NoiseDistribution {
    match name {
        "integer" => NoiseDistribution::UniformInteger,
        _ => NoiseDistribution::UniformContinuous,
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(0.0, f64::max)
}

// ---------------------------------------------------------------- schemas

const NOISE: &[&str] = &["continuous", "integer"];

pub(crate) fn schema(experiment: &str) -> Option<Vec<ParamSpec>> {
    let s = match experiment {
        "dn_exhaustive" => vec![
            spec(
                "n",
                Kind::IntList { min: 1, max: 20 },
                json!([6, 8, 10]),
                "database sizes",
            ),
            spec(
                "bounds",
                Kind::FloatList { min: 0.0, max: 1e6 },
                json!([1, 2]),
                "noise bounds B",
            ),
            spec(
                "seeds",
                Kind::Int {
                    min: 1,
                    max: 100_000,
                },
                json!(20),
                "databases per (n, B)",
            ),
            spec(
                "queries",
                Kind::Int {
                    min: 0,
                    max: 1_000_000,
                },
                json!(0),
                "random queries per database; 0 asks all 2^n subsets",
            ),
            spec(
                "noise",
                Kind::Choice(NOISE),
                json!("continuous"),
                "noise distribution on [-B, B]",
            ),
        ],
        "dn_lp_sweep" => vec![
            spec(
                "n",
                Kind::Int { min: 1, max: 4096 },
                json!(256),
                "database size",
            ),
            spec(
                "m",
                Kind::Int {
                    min: 1,
                    max: 100_000,
                },
                json!(1024),
                "random queries",
            ),
            spec(
                "bounds",
                Kind::FloatList { min: 0.0, max: 1e9 },
                json!([0, 2, 8, 32, 128]),
                "noise bounds B",
            ),
            spec(
                "seeds",
                Kind::Int {
                    min: 1,
                    max: 100_000,
                },
                json!(20),
                "databases per B",
            ),
            spec(
                "noise",
                Kind::Choice(NOISE),
                json!("continuous"),
                "noise distribution on [-B, B]",
            ),
        ],
        "dp_budget" => vec![
            spec(
                "n",
                Kind::Int {
                    min: 1,
                    max: 1_000_000,
                },
                json!(1000),
                "database size",
            ),
            spec(
                "queries",
                Kind::Int {
                    min: 1,
                    max: 1_000_000,
                },
                json!(1000),
                "queries issued",
            ),
            spec(
                "epsilon",
                Kind::Positive { max: 1e6 },
                json!(1.0),
                "total budget",
            ),
        ],
        "rr_equivalence" => vec![
            spec(
                "epsilon",
                Kind::Positive { max: 700.0 },
                json!(19.61),
                "privacy-loss parameter",
            ),
            spec(
                "tail_bounds",
                Kind::FloatList { min: 0.0, max: 1e6 },
                json!([1, 0.5]),
                "bounds b for P(|X| ≤ b)",
            ),
            spec(
                "draws",
                Kind::Int {
                    min: 1,
                    max: 100_000_000,
                },
                json!(1_000_000),
                "Monte-Carlo draws",
            ),
            spec(
                "respondents",
                Kind::Int {
                    min: 1,
                    max: 100_000_000,
                },
                json!(100_000),
                "randomized-response sample",
            ),
            spec(
                "true_proportion",
                Kind::Float { min: 0.0, max: 1.0 },
                json!(0.3),
                "share of 1-bits",
            ),
            spec(
                "delta",
                Kind::Float {
                    min: 1e-300,
                    max: 0.5,
                },
                json!(1e-10),
                "zCDP conversion δ",
            ),
            spec(
                "reference_epsilon",
                Kind::Float {
                    min: 0.0,
                    max: 700.0,
                },
                json!(39.907),
                "ε compared against",
            ),
            spec(
                "compare_epsilons",
                Kind::FloatList {
                    min: 0.0,
                    max: 700.0,
                },
                json!([4.5, 14, 0]),
                "ε values whose ratio to the reference is reported",
            ),
        ],
        "swap_invariants" => vec![
            spec(
                "configs",
                Kind::Int {
                    min: 1,
                    max: 100_000,
                },
                json!(50),
                "random block-level configs",
            ),
            spec(
                "blocks",
                Kind::Int {
                    min: 2,
                    max: 10_000,
                },
                json!(20),
                "blocks in the fixture",
            ),
            spec(
                "block_size",
                Kind::Int { min: 1, max: 1000 },
                json!(15),
                "persons per block",
            ),
            spec(
                "homogeneity",
                Kind::Float { min: 0.0, max: 1.0 },
                json!(0.3),
                "modal-value probability",
            ),
            spec(
                "attributes",
                Kind::Attributes,
                json!(["age", "gender", "race", "ethnicity", "relationship"]),
                "pool of swappable attributes",
            ),
            spec(
                "state_swap_rate",
                Kind::Float { min: 0.0, max: 1.0 },
                json!(0.5),
                "rate for the state-level run",
            ),
            spec(
                "state_attributes",
                Kind::Attributes,
                json!(["age"]),
                "attributes for the state-level run",
            ),
        ],
        "suppression_audit" => vec![
            spec(
                "tables",
                Kind::Int {
                    min: 1,
                    max: 100_000,
                },
                json!(100),
                "random tables",
            ),
            spec(
                "max_dim",
                Kind::Int { min: 2, max: 6 },
                json!(5),
                "largest row or column count",
            ),
            spec(
                "max_count",
                Kind::Int { min: 1, max: 1000 },
                json!(20),
                "largest cell count",
            ),
            spec(
                "threshold",
                Kind::Int { min: 1, max: 1000 },
                json!(1),
                "primary suppression threshold",
            ),
            spec(
                "small_cell_probability",
                Kind::Float { min: 0.0, max: 1.0 },
                json!(0.25),
                "chance a cell is drawn from 0..=threshold",
            ),
        ],
        "scenario_suite" => vec![spec(
            "trials",
            Kind::Int {
                min: 1,
                max: 10_000_000,
            },
            json!(1000),
            "draws for the per-record probability",
        )],
        "r_vs_r_prime" => vec![
            spec(
                "blocks",
                Kind::Int {
                    min: 1,
                    max: 10_000,
                },
                json!(20),
                "blocks",
            ),
            spec(
                "block_size",
                Kind::Int { min: 1, max: 1000 },
                json!(10),
                "persons per block",
            ),
            spec(
                "homogeneity",
                Kind::Float { min: 0.0, max: 1.0 },
                json!(0.8),
                "modal-value probability",
            ),
            spec(
                "coverage",
                Kind::Float { min: 0.0, max: 1.0 },
                json!(0.8),
                "external coverage",
            ),
            spec(
                "external_fields",
                Kind::Attributes,
                json!(["age", "gender"]),
                "quasi-identifiers",
            ),
            spec(
                "age_error_rate",
                Kind::Float { min: 0.0, max: 1.0 },
                json!(0.0),
                "share of misreported ages",
            ),
            spec(
                "age_error_max",
                Kind::Int { min: 0, max: 115 },
                json!(1),
                "largest age error",
            ),
            spec(
                "published_tables",
                Kind::AttributeLists,
                json!([["age", "gender"], ["race", "ethnicity"], ["relationship"]]),
                "block-level tables released",
            ),
            spec(
                "trials",
                Kind::Int {
                    min: 1,
                    max: 1_000_000,
                },
                json!(100),
                "draws for the per-record probability",
            ),
        ],
        "regeneration_multiplicity" => vec![
            spec(
                "random_instances",
                Kind::Int {
                    min: 0,
                    max: 10_000,
                },
                json!(20),
                "random marginal pairs",
            ),
            spec(
                "max_population",
                Kind::Int { min: 1, max: 12 },
                json!(5),
                "largest random block",
            ),
        ],
        _ => return None,
    };
    Some(s)
}

pub(crate) fn run(experiment: &str, p: &Params, seeds: &SeedTree) -> Result<Output> {
    match experiment {
        "dn_exhaustive" => dn_exhaustive(p, seeds),
        "dn_lp_sweep" => dn_lp_sweep(p, seeds),
        "dp_budget" => dp_budget(p, seeds),
        "rr_equivalence" => rr_equivalence(p, seeds),
        "swap_invariants" => swap_invariants(p, seeds),
        "suppression_audit" => suppression_audit(p, seeds),
        "scenario_suite" => scenario_suite(p, seeds),
        "r_vs_r_prime" => r_vs_r_prime_experiment(p, seeds),
        "regeneration_multiplicity" => regeneration_multiplicity(p, seeds),
        other => Err(Error::Parameter(format!("unknown experiment {other:?}"))),
    }
}

// ------------------------------------------------------------ reconstruction

fn bounded_answers(
    db: &BinaryDatabase,
    queries: &[SubsetQuery],
    mech: &BoundedNoiseMechanism,
    rng: &mut impl Rng,
) -> Result<Vec<QueryAnswer>> {
    queries
        .iter()
        .enumerate()
        .map(|(i, q)| answer_bounded(db, q, i, mech, rng))
        .collect()
}

/// Exhaustive attack on every (n, B, seed). A seed counts as protected when
/// some feasible candidate lies farther than n/2 from the truth or at least
/// four candidates are feasible.
fn dn_exhaustive(p: &Params, seeds: &SeedTree) -> Result<Output> {
    let ns = p.usizes("n")?;
    let bounds = p.floats("bounds")?;
    let runs = p.usize("seeds")?;
    let m = p.usize("queries")?;
    let dist = noise(p.str("noise")?);
    let mut out = Output::default();
    let mut table = Csv::new(&["n", "B", "seed", "feasible_count", "max_distance"])?;
    let mut violations = 0;
    for &n in &ns {
        for &b in &bounds {
            let mech = BoundedNoiseMechanism::new(b, dist)?;
            let (mut max_d, mut counts, mut cell_violations, mut protected) =
                (0usize, vec![], 0, 0);
            for s in 0..runs {
                let tree = seeds.child(&format!("n{n}/B{b}/seed{s}"));
                let db = BinaryDatabase::random(n, &mut tree.stream("database"))?;
                let queries: Vec<SubsetQuery> = if m == 0 {
                    enumerate_all_queries(n)?.collect()
                } else {
                    sample_random_queries(n, m, &mut tree.stream("queries"))?
                };
                let answers = bounded_answers(&db, &queries, &mech, &mut tree.stream("noise"))?;
                let feasible = exhaustive_feasible_set(n, &queries, &answers, b)?;
                let distances = feasible
                    .iter()
                    .map(|c| c.hamming_distance(&db))
                    .collect::<Result<Vec<_>>>()?;
                let d = distances.iter().copied().max().unwrap_or(0);
                cell_violations += distances.iter().filter(|&&d| d as f64 > 4.0 * b).count();
                if 2 * d > n || feasible.len() >= 4 {
                    protected += 1;
                }
                max_d = max_d.max(d);
                counts.push(feasible.len() as f64);
                table.row([
                    n.to_string(),
                    b.to_string(),
                    s.to_string(),
                    feasible.len().to_string(),
                    d.to_string(),
                ])?;
            }
            violations += cell_violations;
            let key = format!("n{n}.B{b}");
            out.count(format!("{key}.max_distance"), max_d);
            out.count(format!("{key}.containment_violations"), cell_violations);
            out.metric(format!("{key}.mean_feasible_count"), mean(&counts));
            out.metric(format!("{key}.max_feasible_count"), max(&counts));
            out.count(format!("{key}.protected_seeds"), protected);
        }
    }
    out.count("containment_violations", violations);
    out.tables.insert("runs".into(), table.finish()?);
    Ok(out)
}

fn dn_lp_sweep(p: &Params, seeds: &SeedTree) -> Result<Output> {
    let n = p.usize("n")?;
    let m = p.usize("m")?;
    let bounds = p.floats("bounds")?;
    let runs = p.usize("seeds")?;
    let dist = noise(p.str("noise")?);
    let mut out = Output::default();
    let mut detail = Csv::new(&["B", "seed", "distance", "disagreement", "lp_violation"])?;
    let mut summary = Csv::new(&[
        "B",
        "mean_disagreement",
        "max_disagreement",
        "mean_lp_violation",
    ])?;
    let mut per_bound: Vec<Vec<f64>> = vec![Vec::new(); bounds.len()];
    let mut violation: Vec<Vec<f64>> = vec![Vec::new(); bounds.len()];
    for s in 0..runs {
        let tree = seeds.child(&format!("seed{s}"));
        let db = BinaryDatabase::random(n, &mut tree.stream("database"))?;
        let queries = sample_random_queries(n, m, &mut tree.stream("queries"))?;
        for (i, &b) in bounds.iter().enumerate() {
            let mech = BoundedNoiseMechanism::new(b, dist)?;
            let answers = bounded_answers(
                &db,
                &queries,
                &mech,
                &mut tree.stream(&format!("B{b}/noise")),
            )?;
            let result = lp_reconstruct(&queries, &answers, n, b)?.scored(&db)?;
            let frac = result.disagreement_fraction().unwrap_or(0.0);
            let v = result.lp_violation.unwrap_or(0.0);
            per_bound[i].push(frac);
            violation[i].push(v);
            detail.row([
                b.to_string(),
                s.to_string(),
                result.distance.unwrap_or(0).to_string(),
                frac.to_string(),
                v.to_string(),
            ])?;
        }
    }
    let means: Vec<f64> = per_bound.iter().map(|v| mean(v)).collect();
    for (i, &b) in bounds.iter().enumerate() {
        out.metric(format!("B{b}.mean_disagreement"), means[i]);
        out.metric(format!("B{b}.max_disagreement"), max(&per_bound[i]));
        out.metric(format!("B{b}.mean_lp_violation"), mean(&violation[i]));
        summary.row([
            b.to_string(),
            means[i].to_string(),
            max(&per_bound[i]).to_string(),
            mean(&violation[i]).to_string(),
        ])?;
    }
    let drops: Vec<f64> = means
        .windows(2)
        .map(|w| w[0] - w[1])
        .filter(|&d| d > 0.0)
        .collect();
    out.count("inversions", drops.len());
    out.metric("max_inversion", max(&drops));
    out.tables.insert("disagreement".into(), summary.finish()?);
    out.tables.insert("runs".into(), detail.finish()?);
    Ok(out)
}

// ----------------------------------------------------------------- mechanisms

/// Splits the budget evenly over the queries, answers them all through the
/// accountant, then checks that one more query is refused.
fn dp_budget(p: &Params, seeds: &SeedTree) -> Result<Output> {
    let n = p.usize("n")?;
    let m = p.usize("queries")?;
    let epsilon = p.float("epsilon")?;
    let per_query = epsilon / m as f64;
    let db = BinaryDatabase::random(n, &mut seeds.stream("database"))?;
    let queries = sample_random_queries(n, m, &mut seeds.stream("queries"))?;
    let mech = LaplaceMechanism::counting(per_query)?;
    let mut accountant = PrivacyAccountant::new(epsilon)?;
    let mut rng = seeds.stream("noise");
    let mut errors = Vec::with_capacity(m);
    for (i, q) in queries.iter().enumerate() {
        let a = answer_laplace(&db, q, i, &mech, &mut accountant, &mut rng)?;
        errors.push(a.value - true_count(&db, q)? as f64);
    }
    let refused = match answer_laplace(&db, &queries[0], m, &mech, &mut accountant, &mut rng) {
        Err(Error::Budget { .. }) => true,
        Err(e) => return Err(e),
        Ok(_) => false,
    };
    let ledger = accountant.ledger().to_vec();
    let epsilons: Vec<f64> = ledger.iter().map(|e| e.epsilon).collect();
    let empirical = (errors.iter().map(|e| e * e).sum::<f64>() / m as f64).sqrt();
    let mut out = Output::default();
    out.metric("per_query_epsilon", per_query);
    out.metric("laplace_scale", mech.scale());
    out.metric("noise_std", mech.std_dev());
    out.metric("expected_noise_std", 2f64.sqrt() * m as f64 / epsilon);
    out.metric("empirical_noise_std", empirical);
    out.metric("noise_std_over_n", mech.std_dev() / n as f64);
    out.count("ledger_entries", ledger.len());
    out.metric("ledger_total", compose(&epsilons)?);
    out.metric(
        "ledger_max_deviation",
        epsilons
            .iter()
            .map(|e| (e - per_query).abs())
            .fold(0.0, f64::max),
    );
    out.metric("spent", accountant.spent());
    out.metric("remaining", accountant.remaining());
    out.metric("extra_query_refused", if refused { 1.0 } else { 0.0 });
    out.ledgers.insert("accountant".into(), ledger);
    Ok(out)
}

/// Randomized response at ε, Laplace tail mass with a Monte-Carlo check,
/// the zCDP parameter equivalent to ε, and ratios e^(a−b).
fn rr_equivalence(p: &Params, seeds: &SeedTree) -> Result<Output> {
    let epsilon = p.float("epsilon")?;
    let draws = p.usize("draws")?;
    let respondents = p.usize("respondents")?;
    let truth_p = p.float("true_proportion")?;
    let delta = p.float("delta")?;
    let reference = p.float("reference_epsilon")?;
    let mut out = Output::default();

    let rr_p = rr_p_from_epsilon(epsilon);
    out.metric("rr_p", rr_p);
    let rr = RandomizedResponse::from_epsilon(epsilon)?;
    let mut rng = seeds.stream("respondents");
    let mut flipped = Vec::with_capacity(respondents);
    for _ in 0..respondents {
        let bit = u8::from(rng.gen_bool(truth_p));
        flipped.push(rr_flip(bit, &rr, &mut rng)?);
    }
    let estimate = rr_estimate_proportion(&flipped, rr_p)?;
    out.metric("rr_estimate", estimate);
    out.metric("rr_estimate_error", estimate - truth_p);

    let mech = LaplaceMechanism::counting(epsilon)?;
    let mut rng = seeds.stream("laplace");
    let samples: Vec<f64> = (0..draws).map(|_| mech.sample(&mut rng).abs()).collect();
    let mut tails = Csv::new(&["bound", "analytic", "monte_carlo", "standard_error", "z"])?;
    for b in p.floats("tail_bounds")? {
        let analytic = laplace_tail(epsilon, b);
        let hits = samples.iter().filter(|&&x| x <= b).count();
        let mc = hits as f64 / draws as f64;
        let se = (analytic * (1.0 - analytic) / draws as f64).sqrt();
        // A zero standard error leaves only exact agreement.
        let z = if se > 0.0 {
            (mc - analytic).abs() / se
        } else if mc == analytic {
            0.0
        } else {
            f64::INFINITY
        };
        out.metric(format!("tail.b{b}.analytic"), analytic);
        out.metric(format!("tail.b{b}.monte_carlo"), mc);
        out.metric(format!("tail.b{b}.standard_error"), se);
        out.metric(format!("tail.b{b}.z"), z);
        tails.row([
            b.to_string(),
            analytic.to_string(),
            mc.to_string(),
            se.to_string(),
            z.to_string(),
        ])?;
    }

    let zcdp = ZcdpParams::for_epsilon(epsilon, delta)?;
    out.metric("zcdp.rho", zcdp.rho());
    out.metric("zcdp.epsilon", zcdp_to_epsilon(&zcdp));

    let mut ratios = Csv::new(&["epsilon_a", "epsilon_b", "ratio"])?;
    for b in p.floats("compare_epsilons")? {
        let r = privacy_ratio(reference, b);
        out.metric(format!("ratio.{reference}_vs_{b}"), r);
        ratios.row([reference.to_string(), b.to_string(), r.to_string()])?;
    }
    out.tables.insert("laplace_tails".into(), tails.finish()?);
    out.tables.insert("privacy_ratios".into(), ratios.finish()?);
    Ok(out)
}

// ------------------------------------------------------------------------ sdc

/// (total, voting-age) per unit at `level`.
fn unit_counts(md: &MicrodataSet, level: GeoLevel) -> Result<BTreeMap<String, (usize, usize)>> {
    let mut out: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for r in md.records() {
        let unit = md.geography().ancestor(&r.block_id, level).ok_or_else(|| {
            Error::Consistency(format!("block {} has no {} unit", r.block_id, level.name()))
        })?;
        let e = out.entry(unit.to_owned()).or_default();
        e.0 += 1;
        e.1 += usize::from(r.is_voting_age());
    }
    Ok(out)
}

/// Units whose total or voting-age count differs.
fn changed_units(
    before: &BTreeMap<String, (usize, usize)>,
    after: &BTreeMap<String, (usize, usize)>,
) -> (usize, usize) {
    let total = before
        .iter()
        .filter(|(k, v)| after.get(*k).map(|a| a.0) != Some(v.0))
        .count();
    let voting = before
        .iter()
        .filter(|(k, v)| after.get(*k).map(|a| a.1) != Some(v.1))
        .count();
    (total, voting)
}

fn swap_invariants(p: &Params, seeds: &SeedTree) -> Result<Output> {
    let configs = p.usize("configs")?;
    let pool = p.attributes("attributes")?;
    let spec = PopulationSpec::Synthetic(SyntheticSpec {
        blocks: p.usize("blocks")?,
        block_size: p.usize("block_size")?,
        homogeneity: Homogeneity::uniform(p.float("homogeneity")?),
        ..SyntheticSpec::default()
    });
    let mut out = Output::default();
    let mut table = Csv::new(&[
        "config",
        "swap_rate",
        "attributes",
        "independent",
        "swapped_records",
        "pairs",
        "skipped",
        "block_total_changes",
        "block_voting_age_changes",
    ])?;
    let (mut total_bad, mut voting_bad, mut swapped) = (0, 0, 0);
    for c in 0..configs {
        let tree = seeds.child(&format!("config{c}"));
        let md = generate_block_population(&spec, &mut tree.stream("population"))?.microdata;
        let mut rng = tree.stream("config");
        let rate: f64 = rng.gen();
        let k = rng.gen_range(1..=pool.len());
        let attrs: Vec<Attribute> = pool.choose_multiple(&mut rng, k).copied().collect();
        let independent: bool = rng.gen();
        let cfg = SwapConfig::new(rate, attrs.clone(), independent, GeoLevel::Block)?;
        let result = swap(&md, &cfg, &mut tree.stream("swap"))?;
        let (t, v) = changed_units(
            &unit_counts(&md, GeoLevel::Block)?,
            &unit_counts(&result.microdata, GeoLevel::Block)?,
        );
        total_bad += t;
        voting_bad += v;
        swapped += result.stats.swapped_records;
        let names: Vec<&str> = attrs.iter().map(|a| a.name()).collect();
        table.row([
            c.to_string(),
            rate.to_string(),
            names.join("|"),
            independent.to_string(),
            result.stats.swapped_records.to_string(),
            result.stats.pairs.to_string(),
            result.stats.skipped.to_string(),
            t.to_string(),
            v.to_string(),
        ])?;
    }
    out.count("block.configs", configs);
    out.count("block.total_changes", total_bad);
    out.count("block.voting_age_changes", voting_bad);
    out.count("block.swapped_records", swapped);

    let tree = seeds.child("state");
    let md = generate_block_population(&spec, &mut tree.stream("population"))?.microdata;
    let cfg = SwapConfig::new(
        p.float("state_swap_rate")?,
        p.attributes("state_attributes")?,
        false,
        GeoLevel::State,
    )?;
    let result = swap(&md, &cfg, &mut tree.stream("swap"))?;
    let (t, v) = changed_units(
        &unit_counts(&md, GeoLevel::State)?,
        &unit_counts(&result.microdata, GeoLevel::State)?,
    );
    let (bt, bv) = changed_units(
        &unit_counts(&md, GeoLevel::Block)?,
        &unit_counts(&result.microdata, GeoLevel::Block)?,
    );
    out.count("state.total_changes", t);
    out.count("state.voting_age_changes", v);
    out.count("state.blocks_with_total_change", bt);
    out.count("state.blocks_with_voting_age_change", bv);
    out.count("state.blocks_changed", bt.max(bv));
    out.count("state.swapped_records", result.stats.swapped_records);
    out.count("state.pairs", result.stats.pairs);
    out.tables.insert("block_configs".into(), table.finish()?);
    Ok(out)
}

/// A random two-way table over Race × Relationship with small cells mixed in.
fn random_table(
    rng: &mut impl Rng,
    max_dim: usize,
    max_count: u64,
    threshold: u64,
    small: f64,
) -> Result<FrequencyTable> {
    // One-way tables are excluded: with published totals every cell is exposed.
    let rows = rng.gen_range(2..=max_dim) as u16;
    let cols = rng.gen_range(2..=max_dim) as u16;
    let mut cells = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let count = if rng.gen_bool(small) {
                rng.gen_range(0..=threshold)
            } else {
                rng.gen_range(0..=max_count)
            };
            cells.push((CellKey::new("01", vec![r, c]), count));
        }
    }
    FrequencyTable::from_cells(
        GeoLevel::State,
        vec![Attribute::Race, Attribute::Relationship],
        cells,
    )
}

fn suppression_audit(p: &Params, seeds: &SeedTree) -> Result<Output> {
    let n = p.usize("tables")?;
    let max_dim = p.usize("max_dim")?;
    let max_count = p.int("max_count")? as u64;
    let threshold = p.int("threshold")? as u64;
    let small = p.float("small_cell_probability")?;
    let mut rng = seeds.stream("tables");
    let mut table = Csv::new(&[
        "table",
        "cells",
        "total",
        "primary",
        "secondary",
        "recoverable",
        "degenerate",
    ])?;
    let (mut primary, mut secondary, mut recoverable, mut bad_tables, mut degenerate) =
        (0, 0, 0, 0, 0);
    let mut cells = 0;
    for i in 0..n {
        let t = random_table(&mut rng, max_dim, max_count, threshold, small)?;
        let plan = secondary_suppress(&t, &primary_suppress(&t, threshold)?)?;
        let left = audit_recoverable(&t, &plan, &standard_marginals(&t)?)?;
        primary += plan.primary_cells.len();
        secondary += plan.secondary_cells.len();
        recoverable += left.len();
        bad_tables += usize::from(!left.is_empty());
        degenerate += usize::from(plan.degenerate);
        cells += t.len();
        table.row([
            i.to_string(),
            t.len().to_string(),
            t.grand_total().to_string(),
            plan.primary_cells.len().to_string(),
            plan.secondary_cells.len().to_string(),
            left.len().to_string(),
            plan.degenerate.to_string(),
        ])?;
    }
    let mut out = Output::default();
    out.count("tables", n);
    out.count("primary_cells", primary);
    out.count("secondary_cells", secondary);
    out.count("recoverable_cells", recoverable);
    out.count("tables_with_recoverable_cells", bad_tables);
    out.count("degenerate_tables", degenerate);
    out.metric(
        "suppressed_fraction",
        (primary + secondary) as f64 / cells.max(1) as f64,
    );
    out.tables.insert("tables".into(), table.finish()?);
    Ok(out)
}

// -------------------------------------------------------------------- linkage

fn scenario_suite(p: &Params, seeds: &SeedTree) -> Result<Output> {
    let trials = p.usize("trials")?;
    let mut out = Output::default();
    let mut table = Csv::new(&[
        "scenario",
        "agreement",
        "putative_match_rate",
        "confirmed_match_rate",
        "per_record_correct_probability",
        "ambiguous",
        "putative_unique",
    ])?;
    for id in 1..=3u8 {
        let o = evaluate_scenario(id, trials, &mut seeds.stream(&format!("scenario{id}")))?;
        let key = format!("scenario{id}");
        out.metric(format!("{key}.agreement"), o.agreement);
        out.metric(
            format!("{key}.putative_match_rate"),
            o.report.putative_match_rate,
        );
        out.metric(
            format!("{key}.confirmed_match_rate"),
            o.report.confirmed_match_rate,
        );
        out.metric(
            format!("{key}.per_record_correct_probability"),
            o.report.per_record_correct_probability,
        );
        out.count(format!("{key}.ambiguous"), o.ambiguous);
        out.count(format!("{key}.putative_unique"), o.putative_unique);
        table.row([
            id.to_string(),
            o.agreement.to_string(),
            o.report.putative_match_rate.to_string(),
            o.report.confirmed_match_rate.to_string(),
            o.report.per_record_correct_probability.to_string(),
            o.ambiguous.to_string(),
            o.putative_unique.to_string(),
        ])?;
    }
    out.tables.insert("scenarios".into(), table.finish()?);
    Ok(out)
}

fn r_vs_r_prime_experiment(p: &Params, seeds: &SeedTree) -> Result<Output> {
    let fields = p.attributes("external_fields")?;
    let spec = PopulationSpec::Synthetic(SyntheticSpec {
        blocks: p.usize("blocks")?,
        block_size: p.usize("block_size")?,
        homogeneity: Homogeneity::uniform(p.float("homogeneity")?),
        external_fields: fields.clone(),
        coverage: p.float("coverage")?,
        age_error_rate: p.float("age_error_rate")?,
        age_error_max: p.int("age_error_max")? as u16,
    });
    let pop = generate_block_population(&spec, &mut seeds.stream("population"))?;
    let truth = &pop.microdata;
    let tables = p
        .attribute_lists("published_tables")?
        .iter()
        .map(|dims| tabulate(truth, dims, GeoLevel::Block))
        .collect::<Result<Vec<_>>>()?;
    let recon = regenerate_from_tables(&tables, truth.geography())?.microdata;
    let agreement = reconstruction_agreement(&recon, truth, &Attribute::ALL)?;
    let report = r_vs_r_prime(
        &recon,
        &pop.external,
        truth,
        &pop.registry,
        &fields,
        p.usize("trials")?,
        &mut seeds.stream("linkage"),
    )?;
    let r_prime = report.r_prime.unwrap_or(0.0);
    let mut out = Output::default();
    out.count("persons", truth.len());
    out.count("external_records", report.external_records);
    out.metric("agreement", agreement);
    out.metric("putative_match_rate", report.putative_match_rate);
    out.metric("confirmed_match_rate", report.confirmed_match_rate);
    out.metric(
        "per_record_correct_probability",
        report.per_record_correct_probability,
    );
    out.count("unique_cell_count", report.unique_cell_count);
    out.metric("r", report.r);
    out.metric("r_prime", r_prime);
    out.metric("r_minus_r_prime", report.r - r_prime);
    Ok(out)
}

/// Regenerates one instance; returns 1 when the round trip fails.
fn check_round_trip(
    name: &str,
    tables: &[FrequencyTable],
    geo: &Geography,
    out: &mut Output,
    table: &mut Csv,
) -> Result<usize> {
    let r = regenerate_from_tables(tables, geo)?;
    let mut ok = true;
    for t in tables {
        ok &= tabulate(&r.microdata, t.dims(), t.level())?.agrees_with(t);
    }
    let mult = r.multiplicity.map_or(-1.0, |m| m as f64);
    out.metric(format!("{name}.multiplicity"), mult);
    out.metric(format!("{name}.round_trip"), if ok { 1.0 } else { 0.0 });
    table.row([
        name.to_owned(),
        r.microdata.len().to_string(),
        mult.to_string(),
        ok.to_string(),
    ])?;
    Ok(usize::from(!ok))
}

/// Regenerates every fixture and a batch of random gender/race marginal
/// pairs, checking the round trip and recording multiplicities.
fn regeneration_multiplicity(p: &Params, seeds: &SeedTree) -> Result<Output> {
    let mut out = Output::default();
    let mut table = Csv::new(&["instance", "population", "multiplicity", "round_trip"])?;
    let mut failures = 0;
    for f in regeneration_fixtures()? {
        failures += check_round_trip(f.name, &f.tables, &f.geography, &mut out, &mut table)?;
        if f.under_determined {
            let m = out.metrics[&format!("{}.multiplicity", f.name)];
            out.metric("under_determined_multiplicity", m);
        }
    }
    let geo = Geography::grid(1, 1, 1, 1);
    let block = geo.blocks().next().map(str::to_owned).unwrap_or_default();
    let mut rng = seeds.stream("instances");
    let max_pop = p.usize("max_population")?;
    for i in 0..p.usize("random_instances")? {
        let n = rng.gen_range(1..=max_pop);
        let mut split = |attr: Attribute, k: u16| {
            let mut counts = vec![0u64; usize::from(k)];
            for _ in 0..n {
                counts[rng.gen_range(0..usize::from(k))] += 1;
            }
            FrequencyTable::from_cells(
                GeoLevel::Block,
                vec![attr],
                counts
                    .into_iter()
                    .enumerate()
                    .map(|(v, c)| (CellKey::new(block.clone(), vec![v as u16]), c)),
            )
        };
        let tables = [
            split(Attribute::Gender, 2)?,
            split(Attribute::Ethnicity, 2)?,
        ];
        failures += check_round_trip(
            &format!("random{i:03}"),
            &tables,
            &geo,
            &mut out,
            &mut table,
        )?;
    }
    out.count("round_trip_failures", failures);
    out.tables.insert("instances".into(), table.finish()?);
    Ok(out)
}
