use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{
    Attribute, CellKey, Ethnicity, FrequencyTable, Gender, GeoLevel, Geography, MicrodataSet,
    PersonId, PersonRecord, Race, Relationship,
};

/// Multiplicity is only counted when the total population is at most this.
pub const MAX_MULTIPLICITY_POPULATION: u64 = 12;
/// ... and the joint cell lattice has at most this many cells.
pub const MAX_MULTIPLICITY_CELLS: usize = 8;

const MAX_SEARCH_NODES: usize = 50_000_000;

/// One microdata set consistent with a list of tables.
#[derive(Debug, Clone, PartialEq)]
pub struct RegenerationResult {
    pub microdata: MicrodataSet,
    /// Number of distinct unordered microdata sets reproducing the tables,
    /// when the instance is small enough to enumerate.
    pub multiplicity: Option<u64>,
}

struct Constraint {
    residual: u64,
    unassigned: usize,
}

struct Search {
    /// Constraint indices touched by each variable.
    var_cons: Vec<Vec<usize>>,
    cons: Vec<Constraint>,
    nodes: usize,
}

impl Search {
    fn range(&self, var: usize) -> (u64, u64) {
        let mut hi = u64::MAX;
        let mut forced: Option<u64> = None;
        for &c in &self.var_cons[var] {
            let con = &self.cons[c];
            hi = hi.min(con.residual);
            if con.unassigned == 1 {
                match forced {
                    Some(f) if f != con.residual => return (1, 0),
                    _ => forced = Some(con.residual),
                }
            }
        }
        match forced {
            Some(f) if f <= hi => (f, f),
            Some(_) => (1, 0),
            None => (0, hi),
        }
    }

    fn apply(&mut self, var: usize, value: u64) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > MAX_SEARCH_NODES {
            return Err(Error::Capacity {
                what: "regeneration search nodes",
                requested: self.nodes,
                limit: MAX_SEARCH_NODES,
            });
        }
        let mut ok = true;
        for &c in &self.var_cons[var] {
            let con = &mut self.cons[c];
            con.residual -= value;
            con.unassigned -= 1;
            ok &= con.unassigned > 0 || con.residual == 0;
        }
        Ok(ok)
    }

    fn undo(&mut self, var: usize, value: u64) {
        for &c in &self.var_cons[var] {
            let con = &mut self.cons[c];
            con.residual += value;
            con.unassigned += 1;
        }
    }

    /// Depth-first search over variable values, largest first. Calls `found`
    /// on every complete assignment until it returns false.
    fn run(&mut self, found: impl FnMut(&[u64]) -> bool) -> Result<()> {
        let mut assigned = vec![None; self.var_cons.len()];
        let outcome = self.search(&mut assigned, found);
        for (var, v) in assigned.into_iter().enumerate() {
            if let Some(v) = v {
                self.undo(var, v);
            }
        }
        outcome
    }

    fn search(
        &mut self,
        assigned: &mut [Option<u64>],
        mut found: impl FnMut(&[u64]) -> bool,
    ) -> Result<()> {
        let nv = self.var_cons.len();
        if self
            .cons
            .iter()
            .any(|c| c.unassigned == 0 && c.residual != 0)
        {
            return Ok(());
        }
        if nv == 0 {
            found(&[]);
            return Ok(());
        }
        let mut next = vec![0u64; nv];
        let mut low = vec![0u64; nv];
        let mut exhausted = vec![false; nv];
        let enter = |s: &Search, d: usize, next: &mut [u64], low: &mut [u64], ex: &mut [bool]| {
            let (lo, hi) = s.range(d);
            low[d] = lo;
            next[d] = hi;
            ex[d] = lo > hi;
        };
        enter(self, 0, &mut next, &mut low, &mut exhausted);
        let mut d = 0usize;
        loop {
            if d == nv {
                if !found(&assigned.iter().map(|v| v.unwrap_or(0)).collect::<Vec<_>>()) {
                    return Ok(());
                }
                d -= 1;
                continue;
            }
            if let Some(v) = assigned[d].take() {
                self.undo(d, v);
            }
            if exhausted[d] {
                if d == 0 {
                    return Ok(());
                }
                d -= 1;
                continue;
            }
            let v = next[d];
            if v == low[d] {
                exhausted[d] = true;
            } else {
                next[d] -= 1;
            }
            let ok = self.apply(d, v)?;
            assigned[d] = Some(v);
            if ok {
                d += 1;
                if d < nv {
                    enter(self, d, &mut next, &mut low, &mut exhausted);
                }
            }
        }
    }
}

fn union_dims(tables: &[FrequencyTable]) -> Vec<Attribute> {
    let set: BTreeSet<Attribute> = tables
        .iter()
        .flat_map(|t| t.dims().iter().copied())
        .collect();
    Attribute::ALL
        .iter()
        .copied()
        .filter(|a| set.contains(a))
        .collect()
}

fn check_tables(tables: &[FrequencyTable], geo: &Geography) -> Result<()> {
    for t in tables {
        for (key, _) in t.nonzero_cells() {
            if !geo.has_unit(&key.geo, t.level()) {
                return Err(Error::Data(format!(
                    "table cell refers to unknown {} {:?}",
                    t.level().name(),
                    key.geo
                )));
            }
        }
    }
    // Each pair must agree on its shared dimensions at the coarser level.
    for (i, a) in tables.iter().enumerate() {
        for b in &tables[i + 1..] {
            let level = a.level().max(b.level());
            let shared: Vec<Attribute> = a
                .dims()
                .iter()
                .copied()
                .filter(|d| b.dims().contains(d))
                .collect();
            if aggregate(a, &shared, level, geo)? != aggregate(b, &shared, level, geo)? {
                return Err(Error::Consistency(format!(
                    "tables over {:?} and {:?} disagree on their shared {} totals",
                    names(a.dims()),
                    names(b.dims()),
                    level.name()
                )));
            }
        }
    }
    Ok(())
}

fn names(dims: &[Attribute]) -> Vec<&'static str> {
    dims.iter().map(|d| d.name()).collect()
}

fn unit_at<'a>(geo: &'a Geography, code: &'a str, from: GeoLevel, to: GeoLevel) -> Option<&'a str> {
    if from == to {
        return Some(code);
    }
    let block = geo.blocks_in(code, from).next()?;
    geo.ancestor(block, to)
}

fn aggregate(
    t: &FrequencyTable,
    sub: &[Attribute],
    level: GeoLevel,
    geo: &Geography,
) -> Result<BTreeMap<CellKey, u64>> {
    let positions = t.projection(sub)?;
    let mut out = BTreeMap::new();
    for (key, count) in t.nonzero_cells() {
        let unit = unit_at(geo, &key.geo, t.level(), level)
            .ok_or_else(|| Error::Data(format!("unit {:?} has no blocks", key.geo)))?;
        let values = positions.iter().map(|&p| key.values[p]).collect();
        *out.entry(CellKey::new(unit, values)).or_insert(0) += count;
    }
    Ok(out)
}

/// Joint value vectors (over `dims`) allowed in `block`: those whose
/// projection onto every table is a positive cell of the block's unit.
fn joint_cells(
    tables: &[FrequencyTable],
    dims: &[Attribute],
    geo: &Geography,
    block: &str,
) -> Result<Vec<Vec<u16>>> {
    let mut partial: Vec<Vec<Option<u16>>> = vec![vec![None; dims.len()]];
    for t in tables {
        let unit = geo.ancestor(block, t.level()).unwrap_or_default();
        let slots = dims_positions(dims, t.dims());
        let cells: Vec<&CellKey> = t
            .nonzero_cells()
            .filter(|(k, _)| k.geo == unit)
            .map(|(k, _)| k)
            .collect();
        let mut extended = Vec::new();
        for p in &partial {
            for cell in &cells {
                let compatible = slots
                    .iter()
                    .zip(&cell.values)
                    .all(|(&s, &v)| p[s].map_or(true, |x| x == v));
                if compatible {
                    let mut q = p.clone();
                    for (&s, &v) in slots.iter().zip(&cell.values) {
                        q[s] = Some(v);
                    }
                    extended.push(q);
                }
            }
        }
        partial = extended;
        if partial.is_empty() {
            break;
        }
    }
    let set: BTreeSet<Vec<u16>> = partial
        .into_iter()
        .map(|p| p.into_iter().map(|v| v.unwrap_or(0)).collect())
        .collect();
    Ok(set.into_iter().collect())
}

fn dims_positions(all: &[Attribute], sub: &[Attribute]) -> Vec<usize> {
    sub.iter()
        .map(|d| all.iter().position(|a| a == d).unwrap_or_default())
        .collect()
}

/// Builds one microdata set whose tabulations reproduce every table exactly.
///
/// Tables may be at different geographic levels; `geography` supplies the
/// blocks that make up each unit. Attributes that no table mentions are set
/// to their first code. For small instances the number of distinct solutions
/// is also counted.
pub fn regenerate_from_tables(
    tables: &[FrequencyTable],
    geography: &Geography,
) -> Result<RegenerationResult> {
    if tables.is_empty() {
        return Err(Error::Parameter("at least one table is required".into()));
    }
    check_tables(tables, geography)?;
    let dims = union_dims(tables);

    // Variables: (block, joint cell). Constraints: one per positive table cell.
    let mut vars: Vec<(String, Vec<u16>)> = Vec::new();
    for block in geography.blocks() {
        let populated = tables.iter().all(|t| {
            geography
                .ancestor(block, t.level())
                .is_some_and(|u| t.total(u) > 0)
        });
        if populated {
            for cell in joint_cells(tables, &dims, geography, block)? {
                vars.push((block.to_owned(), cell));
            }
        }
    }
    let mut con_index: BTreeMap<(usize, CellKey), usize> = BTreeMap::new();
    let mut cons = Vec::new();
    for (ti, t) in tables.iter().enumerate() {
        for (key, count) in t.nonzero_cells() {
            con_index.insert((ti, key.clone()), cons.len());
            cons.push(Constraint {
                residual: count,
                unassigned: 0,
            });
        }
    }
    let mut var_cons = Vec::with_capacity(vars.len());
    for (block, cell) in &vars {
        let mut touched = Vec::with_capacity(tables.len());
        for (ti, t) in tables.iter().enumerate() {
            let unit = geography.ancestor(block, t.level()).unwrap_or_default();
            let values = dims_positions(&dims, t.dims())
                .into_iter()
                .map(|p| cell[p])
                .collect();
            let c = con_index[&(ti, CellKey::new(unit, values))];
            cons[c].unassigned += 1;
            touched.push(c);
        }
        var_cons.push(touched);
    }
    let mut search = Search {
        var_cons,
        cons,
        nodes: 0,
    };

    let mut first: Option<Vec<u64>> = None;
    search.run(|x| {
        first = Some(x.to_vec());
        false
    })?;
    let solution = first.ok_or_else(|| {
        Error::Consistency("no microdata set reproduces all of the tables".into())
    })?;

    let population = tables
        .iter()
        .map(FrequencyTable::grand_total)
        .max()
        .unwrap_or(0);
    let multiplicity =
        if population <= MAX_MULTIPLICITY_POPULATION && vars.len() <= MAX_MULTIPLICITY_CELLS {
            let mut count = 0u64;
            search.nodes = 0;
            search.run(|_| {
                count += 1;
                true
            })?;
            Some(count)
        } else {
            None
        };

    let mut records = Vec::new();
    for ((block, cell), &x) in vars.iter().zip(&solution) {
        for _ in 0..x {
            let mut r = PersonRecord {
                person_id: PersonId(format!("R{:06}", records.len() + 1)),
                block_id: block.clone(),
                age: 0,
                gender: Gender::ALL[0],
                race: Race::ALL[0],
                ethnicity: Ethnicity::ALL[0],
                relationship: Relationship::ALL[0],
            };
            for (&d, &v) in dims.iter().zip(cell) {
                r.set(d, v)?;
            }
            records.push(r);
        }
    }
    Ok(RegenerationResult {
        microdata: MicrodataSet::new(records, geography.clone())?,
        multiplicity,
    })
}
