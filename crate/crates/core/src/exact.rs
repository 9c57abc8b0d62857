//! Brute-force ground truth at desk scale.
//!
//! * [`min_completion`] / [`brute_force_opt`]: exact minimum-cost feasible
//!   selection by branch and bound, ties broken toward the lexicographically
//!   smallest unit list.
//! * [`enumerate_family`]: every subset of the non-root nodes with its
//!   residual deficiency, the maximum-level family, its cores and the per-core
//!   rings.
//! * [`brute_force_ring_cover`], [`chain_certificate`], [`split_k_cover`]:
//!   exact checks on enumerated rings.

use num_traits::Zero;

use crate::augment::SolveReport;
use crate::cost::Cost;
use crate::deficiency::{entering, CoreInfo, ExplicitEdge, ExplicitSetFunction};
use crate::error::{Error, Result};
use crate::instance::{Instance, NodeSet, Solution, UnitId, UnitSet};

/// Default ceiling on positive-cost units for exact search.
pub const DEFAULT_UNIT_CEILING: usize = 22;

/// Largest universe [`enumerate_family`] will tabulate.
pub const FAMILY_UNIVERSE_CEILING: usize = 16;

/// Largest candidate list for [`brute_force_ring_cover`].
pub const RING_CANDIDATE_CEILING: usize = 22;

struct Search<'a> {
    inst: &'a Instance,
    fixed: &'a UnitSet,
    cands: Vec<UnitId>,
    state: Vec<Decision>,
    best: Option<(Cost, Vec<UnitId>)>,
    /// In probe mode the search stops at the first selection of cost
    /// `≤ limit`.
    limit: Option<Cost>,
    found: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Decision {
    Open,
    In,
    Out,
}

impl<'a> Search<'a> {
    fn new(inst: &'a Instance, fixed: &'a UnitSet) -> Self {
        let cands: Vec<UnitId> = inst
            .positive_units()
            .filter(|u| !fixed.contains(u))
            .collect();
        let state = vec![Decision::Open; cands.len()];
        Search {
            inst,
            fixed,
            cands,
            state,
            best: None,
            limit: None,
            found: false,
        }
    }

    fn selection(&self, with_open: bool) -> UnitSet {
        let mut sel = self.fixed.clone();
        for (i, &u) in self.cands.iter().enumerate() {
            if self.state[i] == Decision::In || (with_open && self.state[i] == Decision::Open) {
                sel.insert(u);
            }
        }
        sel
    }

    fn chosen(&self) -> Vec<UnitId> {
        self.cands
            .iter()
            .zip(&self.state)
            .filter(|(_, d)| **d == Decision::In)
            .map(|(u, _)| *u)
            .collect()
    }

    fn cutoff(&self) -> Option<Cost> {
        self.limit.or_else(|| self.best.as_ref().map(|b| b.0))
    }

    fn dfs(&mut self, cost: Cost) {
        if self.found {
            return;
        }
        let inst = self.inst;
        let root = inst.root();
        let view = inst.flow_view(&self.selection(false));
        // (need, terminal, closest cut)
        let mut deficits: Vec<(u32, usize, NodeSet)> = Vec::new();
        for &t in inst.terminals() {
            let (lambda, side) = view.closest_sink_cut(root, t);
            if lambda < inst.k() {
                deficits.push((inst.k() - lambda, t, side));
            }
        }
        if deficits.is_empty() {
            match self.limit {
                Some(limit) if cost <= limit => self.found = true,
                Some(_) => {}
                None => {
                    if self.best.as_ref().is_none_or(|b| cost < b.0) {
                        self.best = Some((cost, self.chosen()));
                    }
                }
            }
            return;
        }

        let upper = inst.flow_view(&self.selection(true));
        if inst
            .terminals()
            .iter()
            .any(|&t| upper.max_flow_value(root, t) < inst.k())
        {
            return;
        }

        let enters = |u: UnitId, side: &NodeSet| {
            let e = inst.unit_edge(u);
            side.contains(&e.head) && !side.contains(&e.tail)
        };
        let mut bound = Cost::zero();
        for (need, _, side) in &deficits {
            let mut costs: Vec<Cost> = (0..self.cands.len())
                .filter(|&i| self.state[i] == Decision::Open && enters(self.cands[i], side))
                .map(|i| inst.unit_cost(self.cands[i]))
                .collect();
            if costs.len() < *need as usize {
                return;
            }
            costs.sort_unstable();
            let lb = costs[..*need as usize]
                .iter()
                .fold(Cost::zero(), |a, c| a + c);
            bound = bound.max(lb);
        }
        if let Some(cut) = self.cutoff() {
            let total = cost + bound;
            let pruned = if self.limit.is_some() {
                total > cut
            } else {
                total >= cut
            };
            if pruned {
                return;
            }
        }

        // branch on the cheapest open unit entering the most deficient cut
        let (_, _, side) = deficits
            .iter()
            .min_by_key(|(need, t, _)| (std::cmp::Reverse(*need), *t))
            .expect("nonempty");
        let pick = (0..self.cands.len())
            .filter(|&i| self.state[i] == Decision::Open && enters(self.cands[i], side))
            .min_by_key(|&i| (inst.unit_cost(self.cands[i]), i))
            .expect("bound guarantees an entering unit");

        self.state[pick] = Decision::In;
        self.dfs(cost + inst.unit_cost(self.cands[pick]));
        self.state[pick] = Decision::Open;

        // Copies are interchangeable: excluding one open copy excludes them all.
        let edge = inst.units()[self.cands[pick]].edge;
        let twins: Vec<usize> = (0..self.cands.len())
            .filter(|&i| {
                self.state[i] == Decision::Open && inst.units()[self.cands[i]].edge == edge
            })
            .collect();
        for &i in &twins {
            self.state[i] = Decision::Out;
        }
        self.dfs(cost);
        for &i in &twins {
            self.state[i] = Decision::Open;
        }
    }

    fn fixed_cost(&self) -> Cost {
        (0..self.cands.len())
            .filter(|&i| self.state[i] == Decision::In)
            .fold(Cost::zero(), |a, i| a + self.inst.unit_cost(self.cands[i]))
    }
}

/// Cheapest set of positive units outside `fixed` that makes `G0 + fixed`
/// feasible; among equal costs the lexicographically smallest unit list.
pub fn min_completion(inst: &Instance, fixed: &UnitSet, ceiling: usize) -> Result<(Cost, UnitSet)> {
    let mut search = Search::new(inst, fixed);
    if search.cands.len() > ceiling {
        return Err(Error::TooLarge {
            units: search.cands.len(),
            ceiling,
        });
    }
    let all = search.selection(true);
    let full = inst.flow_view(&all);
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
    search.dfs(Cost::zero());
    let (opt, _) = search
        .best
        .clone()
        .expect("feasible instance has an optimum");

    // Lexicographic refinement: fix units in id order, keeping each one
    // whenever an optimal completion still exists.
    search.best = None;
    search.limit = Some(opt);
    for i in 0..search.cands.len() {
        if inst.is_feasible(&search.selection(false)) {
            for d in search.state.iter_mut().skip(i) {
                if *d == Decision::Open {
                    *d = Decision::Out;
                }
            }
            break;
        }
        search.state[i] = Decision::In;
        search.found = false;
        let base = search.fixed_cost();
        if base <= opt {
            search.dfs(base);
        }
        if !search.found {
            search.state[i] = Decision::Out;
        }
    }
    let chosen: UnitSet = search.chosen().into_iter().collect();
    debug_assert_eq!(inst.cost_of(&chosen), opt);
    Ok((opt, chosen))
}

pub fn brute_force_opt(inst: &Instance, ceiling: usize) -> Result<Solution> {
    let (_, sel) = min_completion(inst, &UnitSet::new(), ceiling)?;
    Ok(Solution::from_selection(inst, &sel, Vec::new()))
}

/// Pruning-free enumeration of every subset of positive units. Only for
/// cross-checking; exponential in the unit count.
pub fn exhaustive_opt(inst: &Instance, ceiling: usize) -> Result<(Cost, UnitSet)> {
    let cands: Vec<UnitId> = inst.positive_units().collect();
    if cands.len() > ceiling.min(24) {
        return Err(Error::TooLarge {
            units: cands.len(),
            ceiling: ceiling.min(24),
        });
    }
    let mut best: Option<(Cost, Vec<UnitId>)> = None;
    for mask in 0u32..(1 << cands.len()) {
        let sel: UnitSet = (0..cands.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| cands[i])
            .collect();
        if !inst.is_feasible(&sel) {
            continue;
        }
        let cost = inst.cost_of(&sel);
        let list: Vec<UnitId> = sel.iter().copied().collect();
        let better = match &best {
            None => true,
            Some((c, l)) => cost < *c || (cost == *c && list < *l),
        };
        if better {
            best = Some((cost, list));
        }
    }
    match best {
        Some((c, l)) => Ok((c, l.into_iter().collect())),
        None => {
            let conn = inst.connectivity(&inst.positive_units().collect());
            let (&terminal, &lambda) = conn
                .iter()
                .find(|(_, l)| **l < inst.k())
                .expect("some terminal short");
            Err(Error::Infeasible {
                terminal,
                lambda,
                k: inst.k(),
            })
        }
    }
}

/// Residual optimum `τ` before each greedy iteration of `report`, replaying
/// its additions.
pub fn residual_optima(inst: &Instance, report: &SolveReport, ceiling: usize) -> Result<Vec<Cost>> {
    let mut acc: Vec<u64> = Vec::new();
    let mut out = Vec::new();
    for rec in &report.solution.audit {
        let fixed = inst.units_for_multiset(&acc)?;
        out.push(min_completion(inst, &fixed, ceiling)?.0);
        acc.extend(rec.added.iter().copied());
    }
    Ok(out)
}

/// A ring `F(C)` read off an enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingInfo {
    pub core: u32,
    pub members: Vec<u32>,
    pub minimal: u32,
    pub maximal: u32,
    /// Closed under ∩ and ∪, with `minimal` and `maximal` among the members.
    pub is_ring: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumeratedFamily {
    /// Node id of each universe position.
    pub labels: Vec<usize>,
    pub terminals: u32,
    /// `f^I` of every subset, indexed by mask.
    pub values: Vec<u32>,
    pub level: u32,
    /// Sets attaining `level` (empty when `level == 0`).
    pub members: Vec<u32>,
    pub cores: Vec<u32>,
    pub rings: Vec<RingInfo>,
    pub t_intersecting: bool,
}

impl EnumeratedFamily {
    fn build(labels: Vec<usize>, terminals: u32, values: Vec<u32>) -> Self {
        let level = values.iter().copied().max().unwrap_or(0);
        let members: Vec<u32> = if level == 0 {
            Vec::new()
        } else {
            (0..values.len() as u32)
                .filter(|&m| values[m as usize] == level)
                .collect()
        };
        let in_family = |m: u32| level > 0 && values[m as usize] == level;

        let t_intersecting = members.iter().all(|&a| {
            members
                .iter()
                .all(|&b| a & b & terminals == 0 || (in_family(a & b) && in_family(a | b)))
        });

        let mut by_size = members.clone();
        by_size.sort_by_key(|m| (m.count_ones(), *m));
        let mut cores: Vec<u32> = Vec::new();
        for m in by_size {
            if !cores.iter().any(|&c| c & !m == 0) {
                cores.push(m);
            }
        }
        cores.sort_by_key(|&c| (c & terminals).trailing_zeros());

        let rings = cores
            .iter()
            .map(|&c| {
                let ring: Vec<u32> = members
                    .iter()
                    .copied()
                    .filter(|&a| cores.iter().all(|&o| o == c || o & a != o))
                    .collect();
                let minimal = ring.iter().fold(u32::MAX, |acc, &a| acc & a);
                let maximal = ring.iter().fold(0, |acc, &a| acc | a);
                let contains = |m: u32| ring.binary_search(&m).is_ok();
                let closed = ring
                    .iter()
                    .all(|&a| ring.iter().all(|&b| contains(a & b) && contains(a | b)));
                RingInfo {
                    core: c,
                    is_ring: closed && minimal == c && contains(minimal) && contains(maximal),
                    members: ring,
                    minimal,
                    maximal,
                }
            })
            .collect();

        EnumeratedFamily {
            labels,
            terminals,
            values,
            level,
            members,
            cores,
            rings,
            t_intersecting,
        }
    }

    pub fn to_nodes(&self, mask: u32) -> NodeSet {
        (0..self.labels.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| self.labels[i])
            .collect()
    }

    pub fn to_mask(&self, nodes: &NodeSet) -> u32 {
        nodes
            .iter()
            .filter_map(|v| self.labels.iter().position(|x| x == v))
            .fold(0, |acc, i| acc | (1 << i))
    }

    /// Edge with node ids mapped to universe positions; nodes outside the
    /// universe (the root) map past the end.
    pub fn edge(&self, tail: usize, head: usize) -> ExplicitEdge {
        let pos = |v: usize| {
            self.labels
                .iter()
                .position(|&x| x == v)
                .unwrap_or(self.labels.len())
        };
        ExplicitEdge {
            tail: pos(tail),
            head: pos(head),
        }
    }

    pub fn ring_of(&self, core: u32) -> Option<&RingInfo> {
        self.rings.iter().find(|r| r.core == core)
    }

    /// Maximal ring members pairwise share no terminal.
    pub fn maximal_sets_t_disjoint(&self) -> bool {
        self.rings.iter().enumerate().all(|(i, a)| {
            self.rings[i + 1..]
                .iter()
                .all(|b| a.maximal & b.maximal & self.terminals == 0)
        })
    }

    /// Cores as [`CoreInfo`] in node ids.
    pub fn core_infos(&self) -> Vec<CoreInfo> {
        self.cores
            .iter()
            .map(|&c| CoreInfo {
                members: self.to_nodes(c),
                representative: self.labels[(c & self.terminals).trailing_zeros() as usize],
                deficiency: self.level,
            })
            .collect()
    }
}

/// Enumerates `f^I` for the rooted deficiency of `inst` with selection
/// `selected`.
pub fn enumerate_family(inst: &Instance, selected: &UnitSet) -> Result<EnumeratedFamily> {
    let labels: Vec<usize> = (0..inst.node_count())
        .filter(|&v| v != inst.root())
        .collect();
    let u = labels.len();
    if u > FAMILY_UNIVERSE_CEILING {
        return Err(Error::UniverseTooLarge {
            size: u,
            ceiling: FAMILY_UNIVERSE_CEILING,
        });
    }
    let pos = |v: usize| labels.iter().position(|&x| x == v).unwrap_or(u);
    let arcs: Vec<(ExplicitEdge, u32)> = inst
        .flow_view(selected)
        .arcs()
        .iter()
        .map(|a| {
            (
                ExplicitEdge {
                    tail: pos(a.tail),
                    head: pos(a.head),
                },
                a.cap,
            )
        })
        .collect();
    let terminals = labels
        .iter()
        .enumerate()
        .filter(|(_, v)| inst.is_terminal(**v))
        .fold(0u32, |acc, (i, _)| acc | (1 << i));
    let values = (0..1u32 << u)
        .map(|m| {
            if m & terminals == 0 {
                return 0;
            }
            let d: u32 = arcs
                .iter()
                .filter(|(e, _)| e.enters(m))
                .map(|(_, c)| c)
                .sum();
            inst.k().saturating_sub(d)
        })
        .collect();
    Ok(EnumeratedFamily::build(labels, terminals, values))
}

/// Enumerates the residual of an explicit function.
pub fn enumerate_explicit(
    f: &ExplicitSetFunction,
    edges: &[ExplicitEdge],
) -> Result<EnumeratedFamily> {
    let u = f.universe();
    if u > FAMILY_UNIVERSE_CEILING {
        return Err(Error::UniverseTooLarge {
            size: u,
            ceiling: FAMILY_UNIVERSE_CEILING,
        });
    }
    let values = (0..1u32 << u)
        .map(|m| f.value(m).saturating_sub(entering(m, edges)))
        .collect();
    Ok(EnumeratedFamily::build(
        (0..u).collect(),
        f.terminal_mask(),
        values,
    ))
}

/// A priced candidate edge over the family's universe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateEdge {
    pub unit: UnitId,
    pub edge: ExplicitEdge,
    pub cost: Cost,
}

/// Cheapest legs covering every member of the ring of `core` not entered by
/// `head`. `None` when no cover exists.
pub fn brute_force_ring_cover(
    family: &EnumeratedFamily,
    core: u32,
    head: ExplicitEdge,
    candidates: &[CandidateEdge],
) -> Result<Option<(Cost, Vec<UnitId>)>> {
    if candidates.len() > RING_CANDIDATE_CEILING {
        return Err(Error::TooLarge {
            units: candidates.len(),
            ceiling: RING_CANDIDATE_CEILING,
        });
    }
    let ring = family
        .ring_of(core)
        .ok_or_else(|| Error::Invariant("no ring for core".into()))?;
    let open: Vec<u32> = ring
        .members
        .iter()
        .copied()
        .filter(|&a| !head.enters(a))
        .collect();
    let covers: Vec<Vec<bool>> = candidates
        .iter()
        .map(|c| open.iter().map(|&a| c.edge.enters(a)).collect())
        .collect();

    struct Cover<'c> {
        covers: &'c [Vec<bool>],
        costs: Vec<Cost>,
        best: Option<(Cost, Vec<usize>)>,
    }
    impl Cover<'_> {
        fn go(&mut self, covered: &mut Vec<u32>, chosen: &mut Vec<usize>, cost: Cost) {
            if self.best.as_ref().is_some_and(|b| cost >= b.0) {
                return;
            }
            let Some(first) = covered.iter().position(|&c| c == 0) else {
                self.best = Some((cost, chosen.clone()));
                return;
            };
            for i in 0..self.covers.len() {
                if !self.covers[i][first] || chosen.contains(&i) {
                    continue;
                }
                for (j, hit) in self.covers[i].iter().enumerate() {
                    covered[j] += *hit as u32;
                }
                chosen.push(i);
                self.go(covered, chosen, cost + self.costs[i]);
                chosen.pop();
                for (j, hit) in self.covers[i].iter().enumerate() {
                    covered[j] -= *hit as u32;
                }
            }
        }
    }

    let mut search = Cover {
        covers: &covers,
        costs: candidates.iter().map(|c| c.cost).collect(),
        best: None,
    };
    search.go(&mut vec![0; open.len()], &mut Vec::new(), Cost::zero());
    Ok(search.best.map(|(c, idx)| {
        let mut units: Vec<UnitId> = idx.iter().map(|&i| candidates[i].unit).collect();
        units.sort_unstable();
        (c, units)
    }))
}

/// For an inclusion-minimal cover of a ring, an ordering `e_1..e_q` of the
/// cover and a strictly nested chain `C_1 ⊂ … ⊂ C_q` of members starting at
/// the minimal member, with `e_j` the only cover edge entering `C_j`.
/// Returns `(cover index, set)` pairs. The chain need not reach the maximal
/// member: a single edge entering every member is a minimal cover with
/// `q = 1`.
pub fn chain_certificate(ring: &[u32], cover: &[ExplicitEdge]) -> Option<Vec<(usize, u32)>> {
    if ring.is_empty() || cover.is_empty() {
        return None;
    }
    let minimal = ring.iter().fold(u32::MAX, |a, &m| a & m);
    // private[e] = members entered by e alone
    let private: Vec<Vec<u32>> = (0..cover.len())
        .map(|e| {
            ring.iter()
                .copied()
                .filter(|&a| {
                    cover[e].enters(a) && cover.iter().filter(|c| c.enters(a)).count() == 1
                })
                .collect()
        })
        .collect();

    fn extend(
        private: &[Vec<u32>],
        current: u32,
        used: u32,
        chain: &mut Vec<(usize, u32)>,
        dead: &mut std::collections::HashSet<(u32, u32)>,
    ) -> bool {
        if used.count_ones() as usize == private.len() {
            return true;
        }
        if dead.contains(&(current, used)) {
            return false;
        }
        for e in 0..private.len() {
            if used & (1 << e) != 0 {
                continue;
            }
            for &a in &private[e] {
                if a != current && a & current == current {
                    chain.push((e, a));
                    if extend(private, a, used | (1 << e), chain, dead) {
                        return true;
                    }
                    chain.pop();
                }
            }
        }
        dead.insert((current, used));
        false
    }

    let mut dead = std::collections::HashSet::new();
    for e in 0..cover.len() {
        if private[e].contains(&minimal) {
            let mut chain = vec![(e, minimal)];
            if extend(&private, minimal, 1 << e, &mut chain, &mut dead) {
                return Some(chain);
            }
        }
    }
    None
}

/// Independent check of a chain certificate.
pub fn check_chain(ring: &[u32], cover: &[ExplicitEdge], chain: &[(usize, u32)]) -> bool {
    let minimal = ring.iter().fold(u32::MAX, |a, &m| a & m);
    let mut seen = vec![false; cover.len()];
    for &(e, _) in chain {
        if e >= cover.len() || seen[e] {
            return false;
        }
        seen[e] = true;
    }
    chain.len() == cover.len()
        && chain.first().map(|c| c.1) == Some(minimal)
        && chain
            .windows(2)
            .all(|w| w[0].1 != w[1].1 && w[0].1 & w[1].1 == w[0].1)
        && chain.iter().all(|&(e, a)| {
            ring.contains(&a)
                && cover[e].enters(a)
                && cover.iter().filter(|c| c.enters(a)).count() == 1
        })
}

/// Partition of a `k`-cover of `ring` into `k` covers: class index per
/// edge, or `None` if no partition exists.
pub fn split_k_cover(ring: &[u32], cover: &[ExplicitEdge], k: usize) -> Option<Vec<usize>> {
    fn assign(ring: &[u32], cover: &[ExplicitEdge], k: usize, classes: &mut Vec<usize>) -> bool {
        if classes.len() == cover.len() {
            return (0..k).all(|c| {
                ring.iter().all(|&a| {
                    cover
                        .iter()
                        .zip(classes.iter())
                        .any(|(e, &cls)| cls == c && e.enters(a))
                })
            });
        }
        // symmetry: a new class may only be opened in order
        let open = classes.iter().copied().max().map_or(0, |m| m + 1);
        for c in 0..k.min(open + 1) {
            classes.push(c);
            if assign(ring, cover, k, classes) {
                return true;
            }
            classes.pop();
        }
        false
    }
    let mut classes = Vec::with_capacity(cover.len());
    assign(ring, cover, k, &mut classes).then_some(classes)
}
