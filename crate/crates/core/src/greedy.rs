//! One covering phase: repeatedly pick the minimum-density star.
//!
//! A star is a head edge together with a set of leaf cores; each leaf is
//! priced by the cheapest legs that, with the head, cover that core's ring.
//! Its density is (head cost + leg prices) / leaves. Adding the star's edges
//! covers every leaf's ring, which removes at least half of the leaves' worth
//! of cores from the maximum-level family.

use std::cmp::Ordering;

use num_traits::Zero;

use crate::cost::Cost;
use crate::deficiency::{rooted_nu_at, rooted_state, CoreInfo};
use crate::error::{Error, Result};
use crate::instance::{EdgeId, Instance, IterationRecord, UnitId, UnitSet};
use crate::ring::{build_ring_context, primal_dual_ring_cover, LegPrice};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriceEntry {
    pub head: UnitId,
    pub head_edge: EdgeId,
    pub head_cost: Cost,
    /// Index into [`PriceTable::cores`].
    pub core: usize,
    pub price: LegPrice,
}

/// Prices of every (head, core) pair, ordered by head edge id then core
/// representative.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PriceTable {
    pub cores: Vec<CoreInfo>,
    pub entries: Vec<PriceEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leaf {
    pub core: CoreInfo,
    pub legs: Vec<UnitId>,
    pub leg_cost: Cost,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Star {
    pub center: UnitId,
    pub center_edge: EdgeId,
    pub center_cost: Cost,
    pub leaves: Vec<Leaf>,
    pub total_cost: Cost,
    pub density: Cost,
}

impl Star {
    /// Center plus the union of all legs.
    pub fn units(&self) -> UnitSet {
        std::iter::once(self.center)
            .chain(self.leaves.iter().flat_map(|l| l.legs.iter().copied()))
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PhaseResult {
    pub level: u32,
    /// Units in the order they were added.
    pub added: Vec<UnitId>,
    pub iterations: Vec<IterationRecord>,
}

/// Heads are all positive-cost edges with a copy not yet selected; the
/// lowest free copy stands for the edge.
pub fn price_star_edges(
    inst: &Instance,
    selected: &UnitSet,
    cores: &[CoreInfo],
    level: u32,
) -> PriceTable {
    let mut entries = Vec::new();
    for (idx, edge) in inst.edges().iter().enumerate() {
        if edge.cost.is_zero() {
            continue;
        }
        let Some(head) = inst.first_free_unit(idx, selected) else {
            continue;
        };
        for (ci, core) in cores.iter().enumerate() {
            let ctx = build_ring_context(inst, selected, cores, core, head, level);
            entries.push(PriceEntry {
                head,
                head_edge: edge.id,
                head_cost: edge.cost,
                core: ci,
                price: primal_dual_ring_cover(&ctx),
            });
        }
    }
    PriceTable {
        cores: cores.to_vec(),
        entries,
    }
}

struct Candidate<'t> {
    entry: &'t PriceEntry,
    leaves: Vec<&'t PriceEntry>,
    total: Cost,
    density: Cost,
    reps: Vec<usize>,
}

/// Lower density wins; then more leaves, smaller head id, smaller leaf
/// representatives.
fn better(a: &Candidate<'_>, b: &Candidate<'_>) -> bool {
    let ord = a
        .density
        .cmp(&b.density)
        .then_with(|| b.leaves.len().cmp(&a.leaves.len()))
        .then_with(|| a.entry.head_edge.cmp(&b.entry.head_edge))
        .then_with(|| a.reps.cmp(&b.reps));
    ord == Ordering::Less
}

pub fn best_star(table: &PriceTable) -> Option<Star> {
    let mut best: Option<Candidate<'_>> = None;
    let mut i = 0;
    while i < table.entries.len() {
        let head = table.entries[i].head;
        let group_end = table.entries[i..]
            .iter()
            .position(|e| e.head != head)
            .map_or(table.entries.len(), |p| i + p);
        let group = &table.entries[i..group_end];
        i = group_end;

        let mut priced: Vec<(&PriceEntry, Cost)> = group
            .iter()
            .filter_map(|e| e.price.cost().map(|c| (e, c)))
            .collect();
        priced.sort_by(|a, b| {
            a.1.cmp(&b.1).then_with(|| {
                table.cores[a.0.core]
                    .representative
                    .cmp(&table.cores[b.0.core].representative)
            })
        });
        let mut total = group[0].head_cost;
        for j in 0..priced.len() {
            total += priced[j].1;
            let leaves: Vec<&PriceEntry> = priced[..=j].iter().map(|p| p.0).collect();
            let mut reps: Vec<usize> = leaves
                .iter()
                .map(|e| table.cores[e.core].representative)
                .collect();
            reps.sort_unstable();
            let cand = Candidate {
                entry: priced[0].0,
                density: total / Cost::from_integer(j as i64 + 1),
                total,
                leaves,
                reps,
            };
            if best.as_ref().is_none_or(|b| better(&cand, b)) {
                best = Some(cand);
            }
        }
    }

    best.map(|c| Star {
        center: c.entry.head,
        center_edge: c.entry.head_edge,
        center_cost: c.entry.head_cost,
        leaves: c
            .leaves
            .iter()
            .map(|e| match &e.price {
                LegPrice::Finite(cover) => Leaf {
                    core: table.cores[e.core].clone(),
                    legs: cover.legs.clone(),
                    leg_cost: cover.cost,
                },
                LegPrice::Unpriceable => unreachable!("only priced leaves are kept"),
            })
            .collect(),
        total_cost: c.total,
        density: c.density,
    })
}

/// Covers the level-`level` family starting from `selected`. Stops once the
/// maximum residual level drops below `level`.
pub fn run_phase(inst: &Instance, selected: &UnitSet, level: u32) -> Result<PhaseResult> {
    let mut current = selected.clone();
    let mut result = PhaseResult {
        level,
        ..Default::default()
    };
    loop {
        let (max, cores) = rooted_state(inst, &current);
        if max < level {
            break;
        }
        if max > level {
            return Err(Error::Invariant(format!(
                "phase at level {level} started with residual level {max}"
            )));
        }
        let table = price_star_edges(inst, &current, &cores, level);
        let star = best_star(&table).ok_or(Error::NoPriceableStar(level))?;

        let fresh: Vec<UnitId> = star
            .units()
            .into_iter()
            .filter(|u| !current.contains(u))
            .collect();
        let added_cost = fresh
            .iter()
            .fold(Cost::zero(), |acc, &u| acc + inst.unit_cost(u));
        current.extend(fresh.iter().copied());
        let nu_after = rooted_nu_at(inst, &current, level);
        if nu_after >= cores.len() {
            return Err(Error::Invariant(format!(
                "core count did not drop at level {level}: {} -> {nu_after}",
                cores.len()
            )));
        }
        let fresh_set: UnitSet = fresh.iter().copied().collect();
        result.iterations.push(IterationRecord {
            phase_level: level,
            cores_before: cores.len(),
            cores_after: nu_after,
            star_center: star.center_edge,
            leaf_count: star.leaves.len(),
            added_cost,
            star_price: star.total_cost,
            added: inst.edge_multiset(&fresh_set),
        });
        log::debug!(
            "level {level}: center {} leaves {} density {}",
            star.center_edge,
            star.leaves.len(),
            star.density
        );
        result.added.extend(fresh);
    }
    Ok(result)
}
