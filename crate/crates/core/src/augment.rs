//! Backward augmentation: cover the deficiency levels from the top down.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::cost::{self, Cost};
use crate::deficiency::rooted_max_level;
use crate::error::{Error, Result};
use crate::greedy::run_phase;
use crate::instance::{EdgeId, Instance, IterationRecord, Solution, UnitId, UnitSet};
use crate::verify::{ratio_bound, BoundInterval};

#[derive(Clone, Copy, Debug, Default)]
pub struct SolveOptions {
    /// Also report a copy of the solution with redundant units removed.
    pub prune: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub level: u32,
    pub added: Vec<EdgeId>,
    #[serde(with = "cost::serde_str")]
    pub added_cost: Cost,
    pub iterations: Vec<IterationRecord>,
}

/// `2·H(k - ℓ0)·(1 + ln|T|)`, with the logarithm enclosed in an interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimedBound {
    /// `k - ℓ0`.
    pub levels: u32,
    pub terminals: usize,
    /// `2·H(k - ℓ0)`, exact.
    #[serde(with = "cost::serde_str")]
    pub harmonic_factor: Cost,
    pub interval: BoundInterval,
}

impl ClaimedBound {
    pub fn new(levels: u32, terminals: usize) -> Self {
        ClaimedBound {
            levels,
            terminals,
            harmonic_factor: harmonic(levels) * Cost::from_integer(2),
            interval: ratio_bound(levels, terminals),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: Solution,
    pub phases: Vec<PhaseReport>,
    pub claimed_ratio_bound: ClaimedBound,
    /// Present when pruning was requested; audits use the unpruned cost.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pruned: Option<Solution>,
}

/// `H(m) = 1 + 1/2 + … + 1/m`, `H(0) = 0`.
pub fn harmonic(m: u32) -> Cost {
    (1..=m as i64).fold(Cost::zero(), |acc, i| acc + Cost::new(1, i))
}

pub fn solve(inst: &Instance) -> Result<SolveReport> {
    solve_with(inst, SolveOptions::default())
}

pub fn solve_with(inst: &Instance, opts: SolveOptions) -> Result<SolveReport> {
    let full = inst.full_view();
    for &t in inst.terminals() {
        let lambda = full.max_flow_value(inst.root(), t);
        if lambda < inst.k() {
            return Err(Error::Infeasible {
                terminal: t,
                lambda,
                k: inst.k(),
            });
        }
    }

    let top = rooted_max_level(inst, &UnitSet::new());
    let mut selected = UnitSet::new();
    let mut order: Vec<UnitId> = Vec::new();
    let mut phases = Vec::new();
    let mut audit = Vec::new();

    for level in (1..=top).rev() {
        // a phase may have been made vacuous by an earlier one
        if rooted_max_level(inst, &selected) < level {
            continue;
        }
        let phase = run_phase(inst, &selected, level)?;
        selected.extend(phase.added.iter().copied());
        order.extend(phase.added.iter().copied());
        let after = rooted_max_level(inst, &selected);
        if after >= level {
            return Err(Error::Invariant(format!(
                "residual level {after} after phase {level}"
            )));
        }
        let added: UnitSet = phase.added.iter().copied().collect();
        phases.push(PhaseReport {
            level,
            added: inst.edge_multiset(&added),
            added_cost: inst.cost_of(&added),
            iterations: phase.iterations.clone(),
        });
        audit.extend(phase.iterations);
    }

    let solution = Solution::from_selection(inst, &selected, audit);
    if !solution.feasible {
        return Err(Error::Invariant("solver output is infeasible".into()));
    }
    let pruned = opts.prune.then(|| {
        let kept = prune(inst, &order);
        Solution::from_selection(inst, &kept, Vec::new())
    });

    Ok(SolveReport {
        solution,
        phases,
        claimed_ratio_bound: ClaimedBound::new(top, inst.terminals().len()),
        pruned,
    })
}

/// Drops units, latest first, while the selection stays feasible.
pub fn prune(inst: &Instance, order: &[UnitId]) -> UnitSet {
    let mut kept: UnitSet = order.iter().copied().collect();
    for u in order.iter().rev() {
        kept.remove(u);
        if !inst.is_feasible(&kept) {
            kept.insert(*u);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::{instance_a, instance_a_k2};
    use crate::instance::{parse_instance, Edge, ParseOptions};

    #[test]
    fn harmonic_numbers() {
        assert_eq!(harmonic(0), Cost::zero());
        assert_eq!(harmonic(1), Cost::from_integer(1));
        assert_eq!(harmonic(4), Cost::new(25, 12));
    }

    #[test]
    fn instance_a_solves_to_optimum() {
        let rep = solve(&instance_a()).unwrap();
        assert_eq!(rep.solution.total_cost, Cost::from_integer(4));
        assert_eq!(rep.solution.selected, vec![0, 1, 2]);
        assert_eq!(rep.phases.len(), 1);
        assert_eq!(rep.solution.audit.len(), 1);
        assert_eq!(rep.claimed_ratio_bound.levels, 1);
        assert_eq!(
            rep.claimed_ratio_bound.harmonic_factor,
            Cost::from_integer(2)
        );
    }

    #[test]
    fn feasible_g0_needs_nothing() {
        let inst = parse_instance(
            r#"{"n":2,"root":0,"terminals":[1],"k":1,
                "edges":[{"id":0,"tail":0,"head":1,"cost":"0"},{"id":1,"tail":0,"head":1,"cost":"3"}]}"#,
        )
        .unwrap();
        let rep = solve(&inst).unwrap();
        assert!(rep.solution.selected.is_empty());
        assert_eq!(rep.solution.total_cost, Cost::zero());
        assert!(rep.phases.is_empty());
        assert_eq!(rep.claimed_ratio_bound.harmonic_factor, Cost::zero());
    }

    #[test]
    fn k2_variant_augments_by_one_level() {
        let a2 = instance_a_k2();
        let rep = solve(&a2).unwrap();
        assert_eq!(rep.phases.len(), 1);
        assert_eq!(rep.phases[0].level, 1);
        assert_eq!(rep.solution.total_cost, Cost::from_integer(4));
        assert!(rep.solution.connectivity.values().all(|&l| l == 2));
    }

    #[test]
    fn infeasible_instance_names_witness() {
        let inst = parse_instance(
            r#"{"n":3,"root":0,"terminals":[1,2],"k":1,
                "edges":[{"id":0,"tail":0,"head":1,"cost":"1"}]}"#,
        )
        .unwrap();
        match solve(&inst) {
            Err(Error::Infeasible {
                terminal,
                lambda,
                k,
            }) => assert_eq!((terminal, lambda, k), (2, 0, 1)),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn multi_level_solution_is_feasible() {
        let inst = instance_a().with_k(3).unwrap();
        assert!(solve(&inst).is_err()); // only two paths into each terminal
        let mut edges = instance_a().edges().to_vec();
        edges.push(Edge {
            id: 9,
            tail: 0,
            head: 1,
            cost: Cost::from_integer(3),
            mult: 1,
        });
        edges.push(Edge {
            id: 10,
            tail: 2,
            head: 3,
            cost: Cost::from_integer(1),
            mult: 1,
        });
        edges.push(Edge {
            id: 11,
            tail: 3,
            head: 2,
            cost: Cost::from_integer(1),
            mult: 1,
        });
        let inst = Instance::new(4, 0, [2, 3], 2, edges, ParseOptions::default()).unwrap();
        let rep = solve_with(&inst, SolveOptions { prune: true }).unwrap();
        assert!(rep.solution.feasible);
        assert_eq!(
            rep.phases.iter().map(|p| p.level).collect::<Vec<_>>(),
            vec![2, 1]
        );
        let pruned = rep.pruned.unwrap();
        assert!(pruned.feasible && pruned.total_cost <= rep.solution.total_cost);
    }

    #[test]
    fn resolving_with_solution_in_g0_costs_nothing() {
        let a = instance_a();
        let rep = solve(&a).unwrap();
        let mut edges = a.edges().to_vec();
        for e in edges.iter_mut() {
            if rep.solution.selected.contains(&e.id) {
                e.cost = Cost::zero();
            }
        }
        let again = Instance::new(4, 0, [2, 3], 1, edges, ParseOptions::default()).unwrap();
        assert_eq!(solve(&again).unwrap().solution.total_cost, Cost::zero());
    }
}
