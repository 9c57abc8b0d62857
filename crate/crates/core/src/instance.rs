//! Problem instances and solutions: parsing, validation, serialization.
//!
//! An [`Instance`] is a rooted digraph whose zero-cost edges form the free
//! subgraph `G0`. Parallel edges are stored once with a multiplicity; each
//! copy is an independently selectable *unit*. Selections throughout the
//! crate are sets of unit indices ([`UnitSet`]).

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::cost::{self, Cost};
use crate::error::{Error, Result};
use crate::maxflow::{ArcTag, FlowView};

pub type EdgeId = u64;
pub type UnitId = usize;
pub type UnitSet = BTreeSet<UnitId>;
pub type NodeSet = BTreeSet<usize>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: EdgeId,
    pub tail: usize,
    pub head: usize,
    pub cost: Cost,
    pub mult: u32,
}

/// One selectable copy of an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Unit {
    /// Index into [`Instance::edges`].
    pub edge: usize,
    pub copy: u32,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Drop edges entering the root (with a warning) instead of rejecting.
    pub drop_root_edges: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    n: usize,
    root: usize,
    terminals: Vec<usize>,
    k: u32,
    edges: Vec<Edge>,
    units: Vec<Unit>,
}

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    id: EdgeId,
    tail: usize,
    head: usize,
    #[serde(with = "cost::serde_str")]
    cost: Cost,
    #[serde(default = "one")]
    mult: u32,
}

fn one() -> u32 {
    1
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    n: usize,
    root: usize,
    terminals: Vec<usize>,
    k: u32,
    edges: Vec<EdgeDoc>,
}

impl Instance {
    /// Builds and validates an instance. Edges are stored sorted by id;
    /// self-loops are dropped.
    pub fn new(
        n: usize,
        root: usize,
        terminals: impl IntoIterator<Item = usize>,
        k: u32,
        edges: Vec<Edge>,
        opts: ParseOptions,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance("node count must be positive".into()));
        }
        if root >= n {
            return Err(Error::InvalidInstance(format!("root {root} out of range")));
        }
        if k == 0 {
            return Err(Error::InvalidInstance("k must be positive".into()));
        }
        let mut terms = Vec::new();
        for t in terminals {
            if t >= n {
                return Err(Error::InvalidInstance(format!("terminal {t} out of range")));
            }
            if t == root {
                return Err(Error::TerminalIsRoot(t));
            }
            terms.push(t);
        }
        terms.sort_unstable();
        let before = terms.len();
        terms.dedup();
        if terms.len() != before {
            return Err(Error::InvalidInstance("duplicate terminal".into()));
        }
        if terms.is_empty() {
            return Err(Error::InvalidInstance("terminal set is empty".into()));
        }

        let mut kept = Vec::with_capacity(edges.len());
        let mut ids = BTreeSet::new();
        for e in edges {
            if !ids.insert(e.id) {
                return Err(Error::InvalidInstance(format!(
                    "duplicate edge id {}",
                    e.id
                )));
            }
            if e.tail >= n || e.head >= n {
                return Err(Error::InvalidInstance(format!(
                    "edge {} endpoint out of range",
                    e.id
                )));
            }
            if cost::is_negative(&e.cost) {
                return Err(Error::NegativeCost {
                    edge: e.id,
                    cost: e.cost.to_string(),
                });
            }
            if e.mult == 0 {
                return Err(Error::InvalidInstance(format!(
                    "edge {} has multiplicity 0",
                    e.id
                )));
            }
            if e.tail == e.head {
                continue;
            }
            if e.head == root {
                if opts.drop_root_edges {
                    log::warn!("dropping edge {} entering root", e.id);
                    continue;
                }
                return Err(Error::EdgeEntersRoot(e.id));
            }
            kept.push(e);
        }
        kept.sort_by_key(|e| e.id);

        let units = kept
            .iter()
            .enumerate()
            .flat_map(|(i, e)| (0..e.mult).map(move |copy| Unit { edge: i, copy }))
            .collect();

        Ok(Instance {
            n,
            root,
            terminals: terms,
            k,
            edges: kept,
            units,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn terminals(&self) -> &[usize] {
        &self.terminals
    }

    pub fn is_terminal(&self, v: usize) -> bool {
        self.terminals.binary_search(&v).is_ok()
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn unit_edge(&self, u: UnitId) -> &Edge {
        &self.edges[self.units[u].edge]
    }

    pub fn unit_cost(&self, u: UnitId) -> Cost {
        self.unit_edge(u).cost
    }

    pub fn edge_index(&self, id: EdgeId) -> Option<usize> {
        self.edges.binary_search_by_key(&id, |e| e.id).ok()
    }

    /// Units of positive cost, i.e. the candidates a solution may select.
    pub fn positive_units(&self) -> impl Iterator<Item = UnitId> + '_ {
        (0..self.units.len()).filter(move |&u| !self.unit_cost(u).is_zero())
    }

    pub fn zero_units(&self) -> impl Iterator<Item = UnitId> + '_ {
        (0..self.units.len()).filter(move |&u| self.unit_cost(u).is_zero())
    }

    /// Same instance with a different connectivity target.
    pub fn with_k(&self, k: u32) -> Result<Self> {
        Instance::new(
            self.n,
            self.root,
            self.terminals.iter().copied(),
            k,
            self.edges.clone(),
            ParseOptions::default(),
        )
    }

    /// Flow network of `G0` plus the selected units, one arc per edge with
    /// capacity equal to the number of copies present.
    pub fn flow_view(&self, selected: &UnitSet) -> FlowView {
        let mut copies = vec![0u32; self.edges.len()];
        for u in self.zero_units() {
            copies[self.units[u].edge] += 1;
        }
        for &u in selected {
            if !self.unit_cost(u).is_zero() {
                copies[self.units[u].edge] += 1;
            }
        }
        let mut view = FlowView::new(self.n);
        for (i, (e, &c)) in self.edges.iter().zip(&copies).enumerate() {
            view.push_arc(e.tail, e.head, c, ArcTag::Edge(i));
        }
        view
    }

    /// Flow network with every unit present.
    pub fn full_view(&self) -> FlowView {
        let all: UnitSet = (0..self.units.len()).collect();
        self.flow_view(&all)
    }

    /// λ(r, t) in `G0` plus `selected`, for every terminal.
    pub fn connectivity(&self, selected: &UnitSet) -> BTreeMap<usize, u32> {
        let view = self.flow_view(selected);
        self.terminals
            .iter()
            .map(|&t| (t, view.max_flow_value(self.root, t)))
            .collect()
    }

    pub fn is_feasible(&self, selected: &UnitSet) -> bool {
        self.connectivity(selected).values().all(|&l| l >= self.k)
    }

    pub fn cost_of(&self, selected: &UnitSet) -> Cost {
        selected
            .iter()
            .map(|&u| self.unit_cost(u))
            .fold(Cost::zero(), |a, c| a + c)
    }

    /// Sorted edge ids, one entry per selected unit.
    pub fn edge_multiset(&self, selected: &UnitSet) -> Vec<EdgeId> {
        let mut ids: Vec<EdgeId> = selected.iter().map(|&u| self.unit_edge(u).id).collect();
        ids.sort_unstable();
        ids
    }

    /// Inverse of [`edge_multiset`](Self::edge_multiset): takes the first
    /// `count` copies of each listed edge.
    pub fn units_for_multiset(&self, ids: &[EdgeId]) -> Result<UnitSet> {
        let mut counts: BTreeMap<EdgeId, usize> = BTreeMap::new();
        for &id in ids {
            *counts.entry(id).or_default() += 1;
        }
        let mut first_unit = vec![0usize; self.edges.len()];
        let mut acc = 0;
        for (i, e) in self.edges.iter().enumerate() {
            first_unit[i] = acc;
            acc += e.mult as usize;
        }
        let mut out = UnitSet::new();
        for (id, count) in counts {
            let idx = self
                .edge_index(id)
                .ok_or_else(|| Error::InvalidInstance(format!("unknown edge id {id}")))?;
            let mult = self.edges[idx].mult;
            if count > mult as usize {
                return Err(Error::BadSelection {
                    edge: id,
                    count,
                    mult,
                });
            }
            out.extend(first_unit[idx]..first_unit[idx] + count);
        }
        Ok(out)
    }

    /// Lowest-index unit of edge `edge` not in `taken`.
    pub fn first_free_unit(&self, edge: usize, taken: &UnitSet) -> Option<UnitId> {
        let start = self.units.iter().position(|u| u.edge == edge)?;
        (start..start + self.edges[edge].mult as usize).find(|u| !taken.contains(u))
    }

    /// `min_t λ_{G0}(r, t)` capped at `k`.
    pub fn connectivity_floor(&self) -> u32 {
        self.connectivity(&UnitSet::new())
            .values()
            .copied()
            .min()
            .unwrap_or(self.k)
            .min(self.k)
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    parse_instance_with(text, ParseOptions::default())
}

pub fn parse_instance_with(text: &str, opts: ParseOptions) -> Result<Instance> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    let edges = doc
        .edges
        .into_iter()
        .map(|e| Edge {
            id: e.id,
            tail: e.tail,
            head: e.head,
            cost: e.cost,
            mult: e.mult,
        })
        .collect();
    Instance::new(doc.n, doc.root, doc.terminals, doc.k, edges, opts)
}

pub fn serialize_instance(inst: &Instance) -> String {
    let doc = InstanceDoc {
        n: inst.n,
        root: inst.root,
        terminals: inst.terminals.clone(),
        k: inst.k,
        edges: inst
            .edges
            .iter()
            .map(|e| EdgeDoc {
                id: e.id,
                tail: e.tail,
                head: e.head,
                cost: e.cost,
                mult: e.mult,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("instance serializes")
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuasiBipartiteReport {
    pub ok: bool,
    pub offending: Vec<EdgeId>,
}

/// Every positive-cost edge must have its tail or head in `T ∪ {r}`.
/// Zero-cost edges are exempt.
pub fn validate_quasi_bipartite(inst: &Instance) -> QuasiBipartiteReport {
    let anchored = |v: usize| v == inst.root || inst.is_terminal(v);
    let offending: Vec<EdgeId> = inst
        .edges
        .iter()
        .filter(|e| !e.cost.is_zero() && !anchored(e.tail) && !anchored(e.head))
        .map(|e| e.id)
        .collect();
    QuasiBipartiteReport {
        ok: offending.is_empty(),
        offending,
    }
}

/// One greedy iteration: a star was chosen and its edges added.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub phase_level: u32,
    pub cores_before: usize,
    pub cores_after: usize,
    pub star_center: EdgeId,
    pub leaf_count: usize,
    /// Cost of the units actually added (shared legs counted once).
    #[serde(with = "cost::serde_str")]
    pub added_cost: Cost,
    /// Center cost plus summed leg prices.
    #[serde(with = "cost::serde_str")]
    pub star_price: Cost,
    pub added: Vec<EdgeId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    /// Selected edge ids, repeated once per copy used.
    pub selected: Vec<EdgeId>,
    #[serde(with = "cost::serde_str")]
    pub total_cost: Cost,
    pub connectivity: BTreeMap<usize, u32>,
    pub feasible: bool,
    #[serde(default)]
    pub audit: Vec<IterationRecord>,
}

impl Solution {
    pub fn empty() -> Self {
        Solution {
            selected: Vec::new(),
            total_cost: Cost::zero(),
            connectivity: BTreeMap::new(),
            feasible: false,
            audit: Vec::new(),
        }
    }

    pub fn from_selection(
        inst: &Instance,
        selected: &UnitSet,
        audit: Vec<IterationRecord>,
    ) -> Self {
        let connectivity = inst.connectivity(selected);
        let feasible = connectivity.values().all(|&l| l >= inst.k);
        Solution {
            selected: inst.edge_multiset(selected),
            total_cost: inst.cost_of(selected),
            connectivity,
            feasible,
            audit,
        }
    }
}

pub fn serialize_solution(sol: &Solution) -> String {
    serde_json::to_string_pretty(sol).expect("solution serializes")
}

pub fn parse_solution(text: &str) -> Result<Solution> {
    Ok(serde_json::from_str(text)?)
}
