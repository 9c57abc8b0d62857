//! Minimum-cost legs for one core and one head edge.
//!
//! For a core `C` of the maximum-level family `F`, the sets of `F` that hold
//! no other core form a ring `F(C)`. It is realized implicitly: the working
//! graph `G0 + I` gets a synthetic `r→t` arc of capacity `level` for every
//! terminal lying in another core, plus the head edge at zero cost. A member
//! of `F(C)` is left uncovered exactly when the closest-to-representative
//! minimum cut of that network still has value `k - level`.
//!
//! Legs are found by dual ascent on the minimal violated set followed by
//! reverse delete. The raised sets form a nested chain, and every dual set
//! ends up entered by exactly one leg, so the result is optimal; each call
//! carries its dual certificate.

use num_traits::Zero;

use crate::cost::Cost;
use crate::deficiency::CoreInfo;
use crate::instance::{Instance, NodeSet, UnitId, UnitSet};
use crate::maxflow::{ArcTag, FlowView};

#[derive(Clone, Debug)]
pub struct RingContext<'a> {
    inst: &'a Instance,
    base: FlowView,
    target: CoreInfo,
    level: u32,
    head: UnitId,
    candidates: Vec<UnitId>,
}

/// Dual values of the ascent, in raising order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DualCertificate {
    pub chain: Vec<(NodeSet, Cost)>,
}

impl DualCertificate {
    pub fn total(&self) -> Cost {
        self.chain.iter().fold(Cost::zero(), |acc, (_, y)| acc + y)
    }

    pub fn is_nested(&self) -> bool {
        self.chain
            .windows(2)
            .all(|w| w[0].0.is_subset(&w[1].0) && w[0].0 != w[1].0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LegCover {
    pub legs: Vec<UnitId>,
    pub cost: Cost,
    pub certificate: DualCertificate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LegPrice {
    Finite(LegCover),
    /// Some ring member cannot be covered by any candidate.
    Unpriceable,
}

impl LegPrice {
    pub fn cost(&self) -> Option<Cost> {
        match self {
            LegPrice::Finite(c) => Some(c.cost),
            LegPrice::Unpriceable => None,
        }
    }
}

fn enters(inst: &Instance, u: UnitId, set: &NodeSet) -> bool {
    let e = inst.unit_edge(u);
    set.contains(&e.head) && !set.contains(&e.tail)
}

pub fn build_ring_context<'a>(
    inst: &'a Instance,
    selected: &UnitSet,
    all_cores: &[CoreInfo],
    target: &CoreInfo,
    head: UnitId,
    level: u32,
) -> RingContext<'a> {
    debug_assert!(!selected.contains(&head));
    let mut base = inst.flow_view(selected);
    for other in all_cores.iter().filter(|c| c.members != target.members) {
        for &t in other.members.iter().filter(|v| inst.is_terminal(**v)) {
            base.push_arc(inst.root(), t, level, ArcTag::Synthetic);
        }
    }
    let h = inst.unit_edge(head);
    base.push_arc(h.tail, h.head, 1, ArcTag::Edge(inst.units()[head].edge));
    let candidates = inst
        .positive_units()
        .filter(|u| *u != head && !selected.contains(u))
        .collect();
    RingContext {
        inst,
        base,
        target: target.clone(),
        level,
        head,
        candidates,
    }
}

impl<'a> RingContext<'a> {
    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    pub fn target(&self) -> &CoreInfo {
        &self.target
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn head(&self) -> UnitId {
        self.head
    }

    pub fn candidates(&self) -> &[UnitId] {
        &self.candidates
    }

    /// The working network including saturating arcs and the head.
    pub fn base(&self) -> &FlowView {
        &self.base
    }

    fn threshold(&self) -> u32 {
        self.inst.k() - self.level + 1
    }

    /// Inclusion-minimal member of `F(C)` covered by neither `legs` nor the
    /// head.
    pub fn min_violated_set(&self, legs: &[UnitId]) -> Option<NodeSet> {
        let mut view = self.base.clone();
        for &u in legs {
            let e = self.inst.unit_edge(u);
            view.push_arc(e.tail, e.head, 1, ArcTag::Edge(self.inst.units()[u].edge));
        }
        view.min_violated_cut(
            self.inst.root(),
            self.target.representative,
            self.threshold(),
        )
    }

    /// Checks the dual certificate against this context: nested support,
    /// reduced costs stay nonnegative, and the dual total equals `cost`.
    pub fn certifies(&self, cover: &LegCover) -> bool {
        let cert = &cover.certificate;
        if !cert.is_nested() || cert.total() != cover.cost {
            return false;
        }
        if cert.chain.iter().any(|(_, y)| *y < Cost::zero()) {
            return false;
        }
        self.candidates.iter().all(|&u| {
            let load = cert
                .chain
                .iter()
                .filter(|(a, _)| enters(self.inst, u, a))
                .fold(Cost::zero(), |acc, (_, y)| acc + y);
            load <= self.inst.unit_cost(u)
        })
    }
}

pub fn primal_dual_ring_cover(ctx: &RingContext<'_>) -> LegPrice {
    let inst = ctx.inst;
    let mut reduced: Vec<Cost> = ctx.candidates.iter().map(|&u| inst.unit_cost(u)).collect();
    let mut in_cover = vec![false; ctx.candidates.len()];
    let mut order: Vec<usize> = Vec::new();
    let mut chain: Vec<(NodeSet, Cost)> = Vec::new();

    loop {
        let legs: Vec<UnitId> = order.iter().map(|&i| ctx.candidates[i]).collect();
        let Some(violated) = ctx.min_violated_set(&legs) else {
            break;
        };
        let entering: Vec<usize> = (0..ctx.candidates.len())
            .filter(|&i| !in_cover[i] && enters(inst, ctx.candidates[i], &violated))
            .collect();
        let Some(raise) = entering.iter().map(|&i| reduced[i]).min() else {
            return LegPrice::Unpriceable;
        };
        for &i in &entering {
            reduced[i] -= raise;
        }
        // candidates are in unit order, so the first tight one has the smallest id
        let tight = *entering
            .iter()
            .find(|&&i| reduced[i].is_zero())
            .expect("minimum attained");
        in_cover[tight] = true;
        order.push(tight);
        chain.push((violated, raise));
    }

    let mut kept = order.clone();
    for &i in order.iter().rev() {
        let trial: Vec<UnitId> = kept
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| ctx.candidates[j])
            .collect();
        if ctx.min_violated_set(&trial).is_none() {
            kept.retain(|&j| j != i);
        }
    }

    let mut legs: Vec<UnitId> = kept.iter().map(|&i| ctx.candidates[i]).collect();
    legs.sort_unstable();
    let cost = legs
        .iter()
        .fold(Cost::zero(), |acc, &u| acc + inst.unit_cost(u));
    LegPrice::Finite(LegCover {
        legs,
        cost,
        certificate: DualCertificate { chain },
    })
}
