//! Maximum residual deficiency and its cores.
//!
//! For a partial selection `I`, the residual deficiency of a set `A` is
//! `max(k - d_{G0+I}(A), 0)` when `A` holds a terminal. The sets attaining the
//! maximum level form a `T`-intersecting family; its inclusion-minimal members
//! (cores) are found from closest-to-terminal minimum cuts.
//!
//! [`ExplicitSetFunction`] is a tabulated backend over a small universe, used
//! for generic tests and as a cross-check of the rooted backend.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, NodeSet, UnitSet};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreInfo {
    pub members: NodeSet,
    pub representative: usize,
    pub deficiency: u32,
}

/// Query surface shared by the rooted and the explicit backend.
pub trait OracleBackend {
    type EdgeSet: ?Sized;

    fn max_level(&self, selected: &Self::EdgeSet) -> u32;

    /// Cores of the maximum-level family; empty when the level is 0.
    fn cores(&self, selected: &Self::EdgeSet) -> Vec<CoreInfo>;

    fn nu(&self, selected: &Self::EdgeSet) -> usize {
        self.cores(selected).len()
    }
}

pub struct RootedOracle<'a>(pub &'a Instance);

impl OracleBackend for RootedOracle<'_> {
    type EdgeSet = UnitSet;

    fn max_level(&self, selected: &UnitSet) -> u32 {
        rooted_max_level(self.0, selected)
    }

    fn cores(&self, selected: &UnitSet) -> Vec<CoreInfo> {
        rooted_cores(self.0, selected)
    }
}

/// `max_t max(k - λ_{G0+I}(r, t), 0)`.
pub fn rooted_max_level(inst: &Instance, selected: &UnitSet) -> u32 {
    inst.connectivity(selected)
        .values()
        .map(|&l| inst.k().saturating_sub(l))
        .max()
        .unwrap_or(0)
}

/// Maximum level and its cores in one pass.
pub fn rooted_state(inst: &Instance, selected: &UnitSet) -> (u32, Vec<CoreInfo>) {
    let view = inst.flow_view(selected);
    let cuts: Vec<(usize, u32, NodeSet)> = inst
        .terminals()
        .iter()
        .map(|&t| {
            let (lambda, side) = view.closest_sink_cut(inst.root(), t);
            (t, inst.k().saturating_sub(lambda), side)
        })
        .collect();
    let level = cuts.iter().map(|c| c.1).max().unwrap_or(0);
    if level == 0 {
        return (0, Vec::new());
    }
    let candidates = cuts
        .into_iter()
        .filter(|c| c.1 == level)
        .map(|(_, _, side)| side)
        .collect();
    let cores = minimal_sets(candidates)
        .into_iter()
        .map(|members| CoreInfo {
            representative: *members
                .iter()
                .find(|v| inst.is_terminal(**v))
                .expect("cut side holds its terminal"),
            members,
            deficiency: level,
        })
        .collect();
    (level, sorted_by_representative(cores))
}

pub fn rooted_cores(inst: &Instance, selected: &UnitSet) -> Vec<CoreInfo> {
    rooted_state(inst, selected).1
}

/// Number of cores of `{A : f^I(A) = level}`; 0 once the maximum drops
/// below `level`.
pub fn rooted_nu_at(inst: &Instance, selected: &UnitSet, level: u32) -> usize {
    let (max, cores) = rooted_state(inst, selected);
    if max == level {
        cores.len()
    } else {
        0
    }
}

/// Deduplicates and drops every candidate strictly containing another.
fn minimal_sets(mut candidates: Vec<NodeSet>) -> Vec<NodeSet> {
    candidates.sort();
    candidates.dedup();
    candidates
        .iter()
        .filter(|a| !candidates.iter().any(|b| b != *a && b.is_subset(a)))
        .cloned()
        .collect()
}

fn sorted_by_representative(mut cores: Vec<CoreInfo>) -> Vec<CoreInfo> {
    cores.sort_by_key(|c| c.representative);
    cores
}

/// Largest universe the explicit backend will tabulate.
pub const EXPLICIT_UNIVERSE_CEILING: usize = 20;

/// Edge over an explicit universe. `tail == universe` denotes the external
/// root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ExplicitEdge {
    pub tail: usize,
    pub head: usize,
}

impl ExplicitEdge {
    pub fn enters(&self, set: u32) -> bool {
        set & bit(self.head) != 0 && (self.tail >= 32 || set & bit(self.tail) == 0)
    }
}

fn bit(i: usize) -> u32 {
    if i < 32 {
        1 << i
    } else {
        0
    }
}

pub fn entering(set: u32, edges: &[ExplicitEdge]) -> u32 {
    edges.iter().filter(|e| e.enters(set)).count() as u32
}

pub fn mask_to_set(mask: u32) -> NodeSet {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

pub fn set_to_mask(set: &NodeSet) -> u32 {
    set.iter().map(|&i| 1u32 << i).fold(0, |a, b| a | b)
}

/// Tabulated set function, zero outside `table`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitSetFunction {
    universe: usize,
    terminals: u32,
    table: BTreeMap<u32, u32>,
}

#[derive(Serialize, Deserialize)]
struct ExplicitDoc {
    universe: usize,
    terminals: Vec<usize>,
    entries: Vec<EntryDoc>,
}

#[derive(Serialize, Deserialize)]
struct EntryDoc {
    set: Vec<usize>,
    value: u32,
}

impl ExplicitSetFunction {
    /// Validates the table: members inside the universe, positive sets meet
    /// the terminals, positively `T`-intersecting supermodular.
    pub fn new(
        universe: usize,
        terminals: impl IntoIterator<Item = usize>,
        entries: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Self> {
        if universe > EXPLICIT_UNIVERSE_CEILING {
            return Err(Error::UniverseTooLarge {
                size: universe,
                ceiling: EXPLICIT_UNIVERSE_CEILING,
            });
        }
        let full = if universe == 32 {
            u32::MAX
        } else {
            (1u32 << universe) - 1
        };
        let mut tmask = 0u32;
        for t in terminals {
            if t >= universe {
                return Err(Error::InvalidInstance(format!(
                    "terminal {t} outside universe"
                )));
            }
            tmask |= 1 << t;
        }
        let mut table = BTreeMap::new();
        for (set, value) in entries {
            if set & !full != 0 {
                return Err(Error::InvalidInstance(format!(
                    "set {set:#b} outside universe"
                )));
            }
            if value == 0 {
                continue;
            }
            if set & tmask == 0 {
                return Err(Error::NotSupermodular(format!(
                    "positive set {:?} holds no terminal",
                    mask_to_set(set)
                )));
            }
            table.insert(set, value);
        }
        let f = ExplicitSetFunction {
            universe,
            terminals: tmask,
            table,
        };
        f.check_supermodular()?;
        Ok(f)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ExplicitDoc = serde_json::from_str(text)?;
        let entries: Vec<(u32, u32)> = doc
            .entries
            .iter()
            .map(|e| {
                if e.set.iter().any(|&v| v >= doc.universe.min(32)) {
                    return Err(Error::InvalidInstance("entry outside universe".into()));
                }
                Ok((
                    e.set.iter().map(|&v| 1u32 << v).fold(0, |a, b| a | b),
                    e.value,
                ))
            })
            .collect::<Result<_>>()?;
        ExplicitSetFunction::new(doc.universe, doc.terminals, entries)
    }

    pub fn to_json(&self) -> String {
        let doc = ExplicitDoc {
            universe: self.universe,
            terminals: mask_to_set(self.terminals).into_iter().collect(),
            entries: self
                .table
                .iter()
                .map(|(&s, &v)| EntryDoc {
                    set: mask_to_set(s).into_iter().collect(),
                    value: v,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("table serializes")
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn terminal_mask(&self) -> u32 {
        self.terminals
    }

    pub fn value(&self, set: u32) -> u32 {
        self.table.get(&set).copied().unwrap_or(0)
    }

    pub fn is_positive(&self, set: u32) -> bool {
        self.value(set) > 0
    }

    /// Positive entries of the table.
    pub fn positive_sets(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.table.iter().map(|(&s, &v)| (s, v))
    }

    pub fn residual_value(&self, set: u32, edges: &[ExplicitEdge]) -> u32 {
        self.value(set).saturating_sub(entering(set, edges))
    }

    /// The residual function `f^I` as a new table; fails if it is not
    /// positively `T`-intersecting supermodular.
    pub fn residual(&self, edges: &[ExplicitEdge]) -> Result<Self> {
        let entries: Vec<(u32, u32)> = self
            .table
            .keys()
            .map(|&s| (s, self.residual_value(s, edges)))
            .collect();
        ExplicitSetFunction::new(self.universe, mask_to_set(self.terminals), entries)
    }

    pub fn check_supermodular(&self) -> Result<()> {
        let entries: Vec<(u32, u32)> = self.positive_sets().collect();
        for (i, &(a, fa)) in entries.iter().enumerate() {
            for &(b, fb) in &entries[i + 1..] {
                if a & b & self.terminals == 0 {
                    continue;
                }
                if fa + fb > self.value(a & b) + self.value(a | b) {
                    return Err(Error::NotSupermodular(format!(
                        "f({:?}) + f({:?}) = {} > f(A∩B) + f(A∪B) = {}",
                        mask_to_set(a),
                        mask_to_set(b),
                        fa + fb,
                        self.value(a & b) + self.value(a | b)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn explicit_max_level(&self, edges: &[ExplicitEdge]) -> u32 {
        self.table
            .keys()
            .map(|&s| self.residual_value(s, edges))
            .max()
            .unwrap_or(0)
    }

    pub fn explicit_cores(&self, edges: &[ExplicitEdge]) -> Vec<CoreInfo> {
        let level = self.explicit_max_level(edges);
        if level == 0 {
            return Vec::new();
        }
        let mut family: Vec<u32> = self
            .table
            .keys()
            .copied()
            .filter(|&s| self.residual_value(s, edges) == level)
            .collect();
        family.sort_by_key(|s| (s.count_ones(), *s));
        let mut minimal: Vec<u32> = Vec::new();
        for s in family {
            if !minimal.iter().any(|&m| m & !s == 0) {
                minimal.push(s);
            }
        }
        let cores = minimal
            .into_iter()
            .map(|s| CoreInfo {
                members: mask_to_set(s),
                representative: (s & self.terminals).trailing_zeros() as usize,
                deficiency: level,
            })
            .collect();
        sorted_by_representative(cores)
    }

    /// Tabulates `f(A) = max(k - d_{G0}(A), 0)` over subsets of the non-root
    /// nodes of `inst`. Returns the function and the node id of each
    /// universe position.
    pub fn from_rooted(inst: &Instance) -> Result<(Self, Vec<usize>)> {
        let labels: Vec<usize> = (0..inst.node_count())
            .filter(|&v| v != inst.root())
            .collect();
        let u = labels.len();
        if u > EXPLICIT_UNIVERSE_CEILING {
            return Err(Error::UniverseTooLarge {
                size: u,
                ceiling: EXPLICIT_UNIVERSE_CEILING,
            });
        }
        let g0: Vec<ExplicitEdge> = inst
            .zero_units()
            .map(|z| explicit_edge(inst, &labels, z))
            .collect();
        let tmask = labels
            .iter()
            .enumerate()
            .filter(|(_, v)| inst.is_terminal(**v))
            .map(|(i, _)| 1u32 << i)
            .fold(0, |a, b| a | b);
        let entries = (1u32..(1 << u))
            .filter(|s| s & tmask != 0)
            .map(|s| (s, inst.k().saturating_sub(entering(s, &g0))));
        let terms = (0..u).filter(|i| tmask & (1 << i) != 0);
        Ok((ExplicitSetFunction::new(u, terms, entries)?, labels))
    }
}

/// Unit `u` of `inst` as an edge over the universe described by `labels`.
pub fn explicit_edge(inst: &Instance, labels: &[usize], u: usize) -> ExplicitEdge {
    let e = inst.unit_edge(u);
    let pos = |v: usize| labels.iter().position(|&x| x == v).unwrap_or(labels.len());
    ExplicitEdge {
        tail: pos(e.tail),
        head: pos(e.head),
    }
}

impl OracleBackend for ExplicitSetFunction {
    type EdgeSet = [ExplicitEdge];

    fn max_level(&self, selected: &[ExplicitEdge]) -> u32 {
        self.explicit_max_level(selected)
    }

    fn cores(&self, selected: &[ExplicitEdge]) -> Vec<CoreInfo> {
        self.explicit_cores(selected)
    }
}
