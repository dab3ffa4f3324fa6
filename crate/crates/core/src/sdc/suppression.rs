use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Attribute, CellKey, FrequencyTable};

const MAX_AUDIT_NODES: usize = 5_000_000;

/// Cells withheld from publication.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SuppressionPlan {
    pub threshold: u64,
    pub primary_cells: BTreeSet<CellKey>,
    pub secondary_cells: BTreeSet<CellKey>,
    /// Set when some cell could not be protected by complementary
    /// suppression and whole rows or columns were withheld instead.
    pub degenerate: bool,
}

impl SuppressionPlan {
    pub fn suppressed(&self) -> BTreeSet<CellKey> {
        self.primary_cells
            .union(&self.secondary_cells)
            .cloned()
            .collect()
    }

    pub fn is_suppressed(&self, key: &CellKey) -> bool {
        self.primary_cells.contains(key) || self.secondary_cells.contains(key)
    }

    pub fn len(&self) -> usize {
        self.primary_cells.len() + self.secondary_cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sum of the true counts of every suppressed cell.
    pub fn suppressed_total(&self, table: &FrequencyTable) -> u64 {
        self.suppressed().iter().map(|k| table.count(k)).sum()
    }

    /// `geo_code,<dims...>,marker` with marker `P` or `S`.
    pub fn write_csv<W: Write>(&self, table: &FrequencyTable, writer: W) -> Result<()> {
        let mut marks: BTreeMap<&CellKey, &str> = BTreeMap::new();
        for k in &self.primary_cells {
            marks.insert(k, "P");
        }
        for k in &self.secondary_cells {
            marks.insert(k, "S");
        }
        table.write_marked_csv(writer, &marks)
    }

    pub fn read_csv<R: Read>(reader: R, threshold: u64) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let names: Vec<&str> = headers.iter().collect();
        if names.len() < 2 || names[0] != "geo_code" || names[names.len() - 1] != "marker" {
            return Err(Error::Schema(
                "suppression plan header must be geo_code,<dims...>,marker".into(),
            ));
        }
        let dims = Attribute::parse_list(&names[1..names.len() - 1])?;
        let mut plan = SuppressionPlan {
            threshold,
            ..Default::default()
        };
        for row in rdr.records() {
            let row = row?;
            let values = dims
                .iter()
                .zip(row.iter().skip(1))
                .map(|(d, v)| d.parse_value(v))
                .collect::<Result<Vec<_>>>()?;
            let key = CellKey::new(&row[0], values);
            match &row[names.len() - 1] {
                "P" => plan.primary_cells.insert(key),
                "S" => plan.secondary_cells.insert(key),
                other => return Err(Error::Schema(format!("unknown marker {other:?}"))),
            };
        }
        Ok(plan)
    }
}

/// Feasible integer values of a suppressed cell. `max` is `None` when no
/// published equation bounds the cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibleRange {
    pub min: u64,
    pub max: Option<u64>,
}

impl FeasibleRange {
    pub fn width(&self) -> Option<u64> {
        self.max.map(|m| m - self.min)
    }

    pub fn is_point(&self) -> bool {
        self.width() == Some(0)
    }
}

/// Marks every cell with `1 ≤ count ≤ threshold`. Zero cells are never marked.
pub fn primary_suppress(table: &FrequencyTable, threshold: u64) -> Result<SuppressionPlan> {
    if threshold < 1 {
        return Err(Error::Parameter(
            "suppression threshold must be at least 1".into(),
        ));
    }
    Ok(SuppressionPlan {
        threshold,
        primary_cells: table
            .nonzero_cells()
            .filter(|&(_, c)| c <= threshold)
            .map(|(k, _)| k.clone())
            .collect(),
        ..Default::default()
    })
}

/// Marginals published alongside a table: for each dimension, the table
/// summed over it (row and column totals for a two-way table, the unit
/// total for a one-way table).
pub fn standard_marginals(table: &FrequencyTable) -> Result<Vec<FrequencyTable>> {
    let dims = table.dims();
    (0..dims.len())
        .map(|i| {
            let rest: Vec<Attribute> = dims
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &d)| d)
                .collect();
            table.marginal(&rest)
        })
        .collect()
}

/// Published linear equations over the table cells: each marginal cell
/// states the sum of the table cells that project onto it.
struct Equations<'t> {
    /// (member cells, published total)
    list: Vec<(Vec<&'t CellKey>, u64)>,
    by_cell: BTreeMap<&'t CellKey, Vec<usize>>,
}

fn equations<'t>(table: &'t FrequencyTable, marginals: &[FrequencyTable]) -> Result<Equations<'t>> {
    let mut list = Vec::new();
    for m in marginals {
        if m.level() != table.level() {
            return Err(Error::Schema(format!(
                "marginal is at {} level but the table is at {} level",
                m.level().name(),
                table.level().name()
            )));
        }
        let positions = table.projection(m.dims())?;
        let mut groups: BTreeMap<CellKey, Vec<&CellKey>> = BTreeMap::new();
        for key in table.cells().keys() {
            let projected = CellKey::new(
                key.geo.clone(),
                positions.iter().map(|&p| key.values[p]).collect(),
            );
            groups.entry(projected).or_default().push(key);
        }
        for (mkey, &count) in m.cells() {
            let members = groups.remove(mkey).unwrap_or_default();
            let actual: u64 = members.iter().map(|k| table.count(k)).sum();
            if actual != count {
                return Err(Error::Consistency(format!(
                    "marginal cell {}:{:?} publishes {count} but the table sums to {actual}",
                    mkey.geo, mkey.values
                )));
            }
            list.push((members, count));
        }
    }
    let mut by_cell: BTreeMap<&CellKey, Vec<usize>> = BTreeMap::new();
    for (e, (members, _)) in list.iter().enumerate() {
        for &k in members {
            by_cell.entry(k).or_default().push(e);
        }
    }
    Ok(Equations { list, by_cell })
}

/// Integer system over the suppressed cells: Σ x_v = rhs, x ≥ 0.
struct System {
    eqs: Vec<(Vec<usize>, u64)>,
    /// Upper bound implied by the equations, `None` for unconstrained cells.
    cap: Vec<Option<u64>>,
    nodes: usize,
}

impl System {
    fn build(table: &FrequencyTable, eqs: &Equations<'_>, unknowns: &[&CellKey]) -> Result<Self> {
        let index: BTreeMap<&CellKey, usize> =
            unknowns.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let mut cap = vec![None; unknowns.len()];
        let mut list = Vec::new();
        for (members, total) in &eqs.list {
            let mut vars = Vec::new();
            let mut published = 0u64;
            for &k in members {
                match index.get(k) {
                    Some(&v) => vars.push(v),
                    None => published += table.count(k),
                }
            }
            let rhs = total - published;
            if vars.is_empty() {
                continue;
            }
            for &v in &vars {
                cap[v] = Some(cap[v].map_or(rhs, |c: u64| c.min(rhs)));
            }
            list.push((vars, rhs));
        }
        Ok(Self {
            eqs: list,
            cap,
            nodes: 0,
        })
    }

    fn propagate(&self, lo: &mut [u64], hi: &mut [u64]) -> bool {
        loop {
            let mut changed = false;
            for (vars, rhs) in &self.eqs {
                let sum_lo: u64 = vars.iter().map(|&v| lo[v]).sum();
                let sum_hi: u64 = vars.iter().map(|&v| hi[v]).sum();
                if sum_lo > *rhs || sum_hi < *rhs {
                    return false;
                }
                for &v in vars {
                    let new_hi = hi[v].min(rhs - (sum_lo - lo[v]));
                    let new_lo = lo[v].max(rhs.saturating_sub(sum_hi - hi[v]));
                    if new_lo > new_hi {
                        return false;
                    }
                    if new_hi != hi[v] || new_lo != lo[v] {
                        hi[v] = new_hi;
                        lo[v] = new_lo;
                        changed = true;
                    }
                }
            }
            if !changed {
                return true;
            }
        }
    }

    /// Whether some integer solution lies within the bounds.
    fn feasible(&mut self, mut lo: Vec<u64>, mut hi: Vec<u64>) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > MAX_AUDIT_NODES {
            return Err(Error::Capacity {
                what: "suppression audit search nodes",
                requested: self.nodes,
                limit: MAX_AUDIT_NODES,
            });
        }
        if !self.propagate(&mut lo, &mut hi) {
            return Ok(false);
        }
        let open = (0..lo.len())
            .filter(|&v| self.cap[v].is_some() && lo[v] < hi[v])
            .min_by_key(|&v| hi[v] - lo[v]);
        let Some(v) = open else {
            return Ok(true);
        };
        let mid = lo[v] + (hi[v] - lo[v]) / 2;
        let mut left_hi = hi.clone();
        left_hi[v] = mid;
        if self.feasible(lo.clone(), left_hi)? {
            return Ok(true);
        }
        lo[v] = mid + 1;
        self.feasible(lo, hi)
    }

    fn bounds(&self) -> (Vec<u64>, Vec<u64>) {
        let lo = vec![0; self.cap.len()];
        let hi = self.cap.iter().map(|c| c.unwrap_or(0)).collect();
        (lo, hi)
    }

    fn feasible_within(&mut self, v: usize, min: u64, max: u64) -> Result<bool> {
        let (mut lo, mut hi) = self.bounds();
        lo[v] = lo[v].max(min);
        hi[v] = hi[v].min(max);
        if lo[v] > hi[v] {
            return Ok(false);
        }
        self.feasible(lo, hi)
    }

    fn range(&mut self, v: usize, truth: u64) -> Result<FeasibleRange> {
        let Some(cap) = self.cap[v] else {
            return Ok(FeasibleRange { min: 0, max: None });
        };
        // Smallest feasible value: feasibility of [0, mid] is monotone in mid.
        let (mut a, mut b) = (0, truth);
        while a < b {
            let mid = a + (b - a) / 2;
            if self.feasible_within(v, 0, mid)? {
                b = mid;
            } else {
                a = mid + 1;
            }
        }
        let min = a;
        let (mut a, mut b) = (truth, cap);
        while a < b {
            let mid = a + (b - a).div_ceil(2);
            if self.feasible_within(v, mid, cap)? {
                a = mid;
            } else {
                b = mid - 1;
            }
        }
        Ok(FeasibleRange { min, max: Some(a) })
    }

    fn recoverable(&mut self, v: usize, truth: u64) -> Result<bool> {
        let Some(cap) = self.cap[v] else {
            return Ok(false);
        };
        let below = truth > 0 && self.feasible_within(v, 0, truth - 1)?;
        Ok(!below && !(truth < cap && self.feasible_within(v, truth + 1, cap)?))
    }
}

fn suppressed_in_table<'t>(
    table: &'t FrequencyTable,
    plan: &SuppressionPlan,
) -> Result<Vec<&'t CellKey>> {
    let keys: Vec<&CellKey> = table
        .cells()
        .keys()
        .filter(|k| plan.is_suppressed(k))
        .collect();
    if keys.len() != plan.len() {
        return Err(Error::Schema(
            "suppression plan names cells absent from the table".into(),
        ));
    }
    Ok(keys)
}

/// Feasible range of every suppressed cell given the published cells and
/// the marginal equations.
pub fn audit_ranges(
    table: &FrequencyTable,
    plan: &SuppressionPlan,
    published_marginals: &[FrequencyTable],
) -> Result<BTreeMap<CellKey, FeasibleRange>> {
    let eqs = equations(table, published_marginals)?;
    let unknowns = suppressed_in_table(table, plan)?;
    let mut system = System::build(table, &eqs, &unknowns)?;
    unknowns
        .iter()
        .enumerate()
        .map(|(v, &k)| Ok((k.clone(), system.range(v, table.count(k))?)))
        .collect()
}

/// Suppressed cells whose exact value follows from what is published.
pub fn audit_recoverable(
    table: &FrequencyTable,
    plan: &SuppressionPlan,
    published_marginals: &[FrequencyTable],
) -> Result<BTreeSet<CellKey>> {
    let eqs = equations(table, published_marginals)?;
    recoverable_with(table, plan, &eqs)
}

fn recoverable_with(
    table: &FrequencyTable,
    plan: &SuppressionPlan,
    eqs: &Equations<'_>,
) -> Result<BTreeSet<CellKey>> {
    let unknowns = suppressed_in_table(table, plan)?;
    let mut system = System::build(table, eqs, &unknowns)?;
    let mut out = BTreeSet::new();
    for (v, &k) in unknowns.iter().enumerate() {
        if system.recoverable(v, table.count(k))? {
            out.insert(k.clone());
        }
    }
    Ok(out)
}

/// Extends `plan` with complementary suppressions under the standard
/// marginals until no suppressed cell is recoverable.
pub fn secondary_suppress(
    table: &FrequencyTable,
    plan: &SuppressionPlan,
) -> Result<SuppressionPlan> {
    secondary_suppress_with(table, plan, &standard_marginals(table)?)
}

/// Greedy complementary suppression: while some suppressed cell is
/// recoverable, withhold the smallest-count published cell that shares an
/// equation with a recoverable cell. Cells in equations with a published total of zero are
/// never chosen, since their value is known regardless.
pub fn secondary_suppress_with(
    table: &FrequencyTable,
    plan: &SuppressionPlan,
    published_marginals: &[FrequencyTable],
) -> Result<SuppressionPlan> {
    let eqs = equations(table, published_marginals)?;
    let mut out = plan.clone();
    out.secondary_cells
        .retain(|k| !plan.primary_cells.contains(k));
    loop {
        let recoverable = recoverable_with(table, &out, &eqs)?;
        if recoverable.is_empty() {
            return Ok(out);
        }
        let choice = recoverable
            .iter()
            .flat_map(|t| eqs.by_cell.get(t).into_iter().flatten())
            .flat_map(|&e| eqs.list[e].0.iter().copied())
            .filter(|k| !out.is_suppressed(k))
            .filter(|k| eqs.by_cell[k].iter().all(|&e| eqs.list[e].1 > 0))
            .min_by_key(|k| (table.count(k), *k));
        if let Some(k) = choice {
            out.secondary_cells.insert(k.clone());
            continue;
        }
        // No usable complement: withhold every cell sharing an equation.
        out.degenerate = true;
        let before = out.len();
        let target_eqs: BTreeSet<usize> = recoverable
            .iter()
            .flat_map(|t| eqs.by_cell.get(t).into_iter().flatten().copied())
            .collect();
        for &e in &target_eqs {
            for &k in &eqs.list[e].0 {
                if !out.is_suppressed(k) {
                    out.secondary_cells.insert(k.clone());
                }
            }
        }
        if out.len() == before {
            return Ok(out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GeoLevel;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    const G: &str = "01-001-0001-01";

    /// Two-way table over (race, relationship) codes with the given rows.
    fn grid(rows: &[&[u64]]) -> FrequencyTable {
        let cells = rows.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(move |(j, &c)| (CellKey::new(G, vec![i as u16, j as u16]), c))
        });
        FrequencyTable::from_cells(
            GeoLevel::Block,
            vec![Attribute::Race, Attribute::Relationship],
            cells,
        )
        .unwrap()
    }

    fn key(i: u16, j: u16) -> CellKey {
        CellKey::new(G, vec![i, j])
    }

    fn plan(primary: &[CellKey]) -> SuppressionPlan {
        SuppressionPlan {
            threshold: 1,
            primary_cells: primary.iter().cloned().collect(),
            ..Default::default()
        }
    }

    /// Independent oracle: enumerate every assignment of the hidden cells
    /// (each capped by its row and column totals), keep those matching all
    /// row and column totals, and report cells that take a single value.
    fn brute_force_recoverable(
        table: &FrequencyTable,
        plan: &SuppressionPlan,
    ) -> BTreeSet<CellKey> {
        let (r, c) = table.cells().keys().fold((0, 0), |(r, c), k| {
            (
                r.max(k.values[0] as usize + 1),
                c.max(k.values[1] as usize + 1),
            )
        });
        let mut grid = vec![vec![0u64; c]; r];
        for (k, &v) in table.cells() {
            grid[k.values[0] as usize][k.values[1] as usize] = v;
        }
        let row_tot: Vec<u64> = grid.iter().map(|row| row.iter().sum()).collect();
        let col_tot: Vec<u64> = (0..c)
            .map(|j| grid.iter().map(|row| row[j]).sum())
            .collect();
        let hidden: Vec<(usize, usize)> = plan
            .suppressed()
            .iter()
            .map(|k| (k.values[0] as usize, k.values[1] as usize))
            .collect();
        let caps: Vec<u64> = hidden
            .iter()
            .map(|&(i, j)| row_tot[i].min(col_tot[j]))
            .collect();
        let mut seen: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); hidden.len()];
        let mut values = vec![0u64; hidden.len()];
        let mut work = grid.clone();
        loop {
            for (&(i, j), &v) in hidden.iter().zip(&values) {
                work[i][j] = v;
            }
            let ok = (0..r).all(|i| work[i].iter().sum::<u64>() == row_tot[i])
                && (0..c).all(|j| work.iter().map(|row| row[j]).sum::<u64>() == col_tot[j]);
            if ok {
                for (s, &v) in seen.iter_mut().zip(&values) {
                    s.insert(v);
                }
            }
            let mut i = 0;
            loop {
                if i == values.len() {
                    return hidden
                        .into_iter()
                        .zip(seen)
                        .filter(|(_, s)| s.len() == 1)
                        .map(|((i, j), _)| key(i as u16, j as u16))
                        .collect();
                }
                values[i] += 1;
                if values[i] <= caps[i] {
                    break;
                }
                values[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn primary_marks_small_nonzero_cells() {
        let t = grid(&[&[3, 1, 0]]);
        assert_eq!(
            primary_suppress(&t, 1).unwrap().primary_cells,
            [key(0, 1)].into()
        );
        assert!(primary_suppress(&grid(&[&[2, 5], &[3, 9]]), 1)
            .unwrap()
            .is_empty());
        let p = primary_suppress(&grid(&[&[1, 2, 3]]), 2).unwrap();
        assert_eq!(p.primary_cells, [key(0, 0), key(0, 1)].into());
        assert!(primary_suppress(&t, 0).is_err());
    }

    #[test]
    fn single_unknown_in_a_row_is_recoverable() {
        let t = grid(&[&[3, 1, 4]]);
        let row_total = t.marginal(&[Attribute::Race]).unwrap();
        let rec = audit_recoverable(&t, &plan(&[key(0, 1)]), &[row_total]).unwrap();
        assert_eq!(rec, [key(0, 1)].into());
    }

    #[test]
    fn two_unknowns_sharing_a_total_are_not() {
        let t = grid(&[&[1, 4]]);
        let row_total = t.marginal(&[Attribute::Race]).unwrap();
        let p = plan(&[key(0, 0), key(0, 1)]);
        assert!(audit_recoverable(&t, &p, std::slice::from_ref(&row_total))
            .unwrap()
            .is_empty());
        let ranges = audit_ranges(&t, &p, &[row_total]).unwrap();
        assert_eq!(
            ranges[&key(0, 0)],
            FeasibleRange {
                min: 0,
                max: Some(5)
            }
        );
        assert_eq!(
            ranges[&key(0, 1)],
            FeasibleRange {
                min: 0,
                max: Some(5)
            }
        );
    }

    #[test]
    fn fully_published_table_has_nothing_to_recover() {
        let t = grid(&[&[2, 3], &[4, 5]]);
        let m = standard_marginals(&t).unwrap();
        assert!(audit_recoverable(&t, &SuppressionPlan::default(), &m)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn unconstrained_cells_are_unbounded() {
        let t = grid(&[&[1, 4]]);
        let ranges = audit_ranges(&t, &plan(&[key(0, 0)]), &[]).unwrap();
        assert_eq!(ranges[&key(0, 0)], FeasibleRange { min: 0, max: None });
    }

    #[test]
    fn inconsistent_marginals_are_rejected() {
        let t = grid(&[&[1, 4]]);
        let wrong = FrequencyTable::from_cells(
            GeoLevel::Block,
            vec![Attribute::Race],
            [(CellKey::new(G, vec![0]), 6)],
        )
        .unwrap();
        assert!(matches!(
            audit_recoverable(&t, &plan(&[key(0, 0)]), &[wrong]),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn two_by_two_needs_all_four_cells() {
        let t = grid(&[&[1, 3], &[2, 5]]);
        let p = secondary_suppress(&t, &primary_suppress(&t, 1).unwrap()).unwrap();
        assert!(p.len() >= 3);
        assert_eq!(
            p.len(),
            4,
            "in a 2×2 table any three hidden cells leave the fourth determined"
        );
        assert!(brute_force_recoverable(&t, &p).is_empty());
        for hidden in [
            plan(&[key(0, 0)]),
            plan(&[key(0, 0), key(0, 1)]),
            plan(&[key(0, 0), key(0, 1), key(1, 0)]),
        ] {
            assert!(!brute_force_recoverable(&t, &hidden).is_empty());
        }
        assert!(!p.degenerate);
    }

    #[test]
    fn no_primary_means_no_secondary() {
        let t = grid(&[&[2, 3], &[4, 5]]);
        let p = secondary_suppress(&t, &primary_suppress(&t, 1).unwrap()).unwrap();
        assert!(p.is_empty());
    }

    #[test]
    fn three_by_three_interior_cell_gets_a_closed_pattern() {
        let t = grid(&[&[4, 3, 5], &[3, 1, 2], &[2, 2, 4]]);
        let p = secondary_suppress(&t, &primary_suppress(&t, 1).unwrap()).unwrap();
        let m = standard_marginals(&t).unwrap();
        let ranges = audit_ranges(&t, &p, &m).unwrap();
        assert!(
            ranges.values().all(|r| r.width().unwrap() >= 1),
            "{ranges:?}"
        );
        assert_eq!(brute_force_recoverable(&t, &p), BTreeSet::new());
        // Every row and column holds zero or at least two hidden cells.
        for line in 0..3u16 {
            let row = (0..3).filter(|&j| p.is_suppressed(&key(line, j))).count();
            let col = (0..3).filter(|&i| p.is_suppressed(&key(i, line))).count();
            assert!(row != 1 && col != 1);
        }
    }

    #[test]
    fn single_cell_rows_are_degenerate() {
        // Each row has one cell: its total reveals it whatever else is hidden.
        let t = grid(&[&[1], &[3]]);
        let p = secondary_suppress(&t, &primary_suppress(&t, 1).unwrap()).unwrap();
        assert!(p.degenerate);
    }

    #[test]
    fn audit_matches_brute_force_on_random_small_tables() {
        let mut rng = rng_from_seed(21);
        for _ in 0..60 {
            let r = rng.gen_range(2..=3);
            let c = rng.gen_range(2..=3);
            let rows: Vec<Vec<u64>> = (0..r)
                .map(|_| (0..c).map(|_| rng.gen_range(0..=3)).collect())
                .collect();
            let refs: Vec<&[u64]> = rows.iter().map(Vec::as_slice).collect();
            let t = grid(&refs);
            let keys: Vec<CellKey> = t.cells().keys().cloned().collect();
            let hidden: Vec<CellKey> = keys.into_iter().filter(|_| rng.gen_bool(0.4)).collect();
            let p = plan(&hidden);
            let m = standard_marginals(&t).unwrap();
            assert_eq!(
                audit_recoverable(&t, &p, &m).unwrap(),
                brute_force_recoverable(&t, &p),
                "{rows:?} hidden {hidden:?}"
            );
        }
    }

    #[test]
    fn secondary_protects_random_tables() {
        let mut rng = rng_from_seed(22);
        for _ in 0..40 {
            let r = rng.gen_range(2..=5);
            let c = rng.gen_range(2..=5);
            let rows: Vec<Vec<u64>> = (0..r)
                .map(|_| {
                    (0..c)
                        .map(|_| {
                            if rng.gen_bool(0.3) {
                                1
                            } else {
                                rng.gen_range(0..=20)
                            }
                        })
                        .collect()
                })
                .collect();
            let refs: Vec<&[u64]> = rows.iter().map(Vec::as_slice).collect();
            let t = grid(&refs);
            let primary = primary_suppress(&t, 1).unwrap();
            let p = secondary_suppress(&t, &primary).unwrap();
            assert!(p.primary_cells.is_disjoint(&p.secondary_cells));
            assert_eq!(p.primary_cells, primary.primary_cells);
            if !p.degenerate {
                let m = standard_marginals(&t).unwrap();
                assert!(
                    audit_recoverable(&t, &p, &m).unwrap().is_empty(),
                    "{rows:?}"
                );
            }
        }
    }

    #[test]
    fn plan_csv_round_trip() {
        let t = grid(&[&[1, 3], &[2, 5]]);
        let p = secondary_suppress(&t, &primary_suppress(&t, 1).unwrap()).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("geo_code,race,relationship,marker\n"));
        assert!(text.contains(",P\n") && text.contains(",S\n"));
        assert_eq!(SuppressionPlan::read_csv(&buf[..], 1).unwrap(), p);

        let mut published = Vec::new();
        t.write_csv_with(&mut published, &p.suppressed()).unwrap();
        let published = String::from_utf8(published).unwrap();
        assert_eq!(published.matches(",X\n").count(), 4);
    }
}
