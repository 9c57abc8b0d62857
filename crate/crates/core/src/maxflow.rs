//! Unit-capacity style max-flow / min-cut over small arc lists.
//!
//! Every query builds a private residual network from the immutable
//! [`FlowView`] and runs shortest augmenting paths (Edmonds-Karp). The
//! closest-to-sink minimum cut is the set of nodes that can still reach the
//! sink in the final residual network; it does not depend on which maximum
//! flow was found.

use std::collections::{BTreeSet, VecDeque};

use crate::instance::NodeSet;

/// Where an arc came from. Synthetic arcs never show up in reported covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArcTag {
    /// Index into the instance's edge list.
    Edge(usize),
    Synthetic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowArc {
    pub tail: usize,
    pub head: usize,
    pub cap: u32,
    pub tag: ArcTag,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FlowView {
    node_count: usize,
    arcs: Vec<FlowArc>,
}

/// A maximum flow together with the per-arc flow values (indexed like
/// [`FlowView::arcs`]).
#[derive(Clone, Debug)]
pub struct MaxFlow {
    pub value: u32,
    pub arc_flow: Vec<u32>,
    /// Nodes that can reach the sink in the residual network.
    pub sink_side: NodeSet,
}

struct Residual {
    // (to, cap, reverse index)
    adj: Vec<Vec<(usize, u32, usize)>>,
    // position of each view arc's forward residual edge
    handles: Vec<(usize, usize)>,
}

impl FlowView {
    pub fn new(node_count: usize) -> Self {
        FlowView {
            node_count,
            arcs: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arcs(&self) -> &[FlowArc] {
        &self.arcs
    }

    /// Adds an arc; zero-capacity arcs and self-loops are ignored.
    pub fn push_arc(&mut self, tail: usize, head: usize, cap: u32, tag: ArcTag) {
        assert!(
            tail < self.node_count && head < self.node_count,
            "arc endpoint out of range"
        );
        if cap == 0 || tail == head {
            return;
        }
        self.arcs.push(FlowArc {
            tail,
            head,
            cap,
            tag,
        });
    }

    /// Total capacity of arcs entering `set` from outside it.
    pub fn in_capacity(&self, set: &NodeSet) -> u32 {
        self.arcs
            .iter()
            .filter(|a| set.contains(&a.head) && !set.contains(&a.tail))
            .map(|a| a.cap)
            .sum()
    }

    fn residual(&self) -> Residual {
        let mut adj: Vec<Vec<(usize, u32, usize)>> = vec![Vec::new(); self.node_count];
        let mut handles = Vec::with_capacity(self.arcs.len());
        for arc in &self.arcs {
            let fwd = adj[arc.tail].len();
            let bwd = adj[arc.head].len();
            adj[arc.tail].push((arc.head, arc.cap, bwd));
            adj[arc.head].push((arc.tail, 0, fwd));
            handles.push((arc.tail, fwd));
        }
        Residual { adj, handles }
    }

    /// Runs Edmonds-Karp from `s` to `t`.
    pub fn max_flow(&self, s: usize, t: usize) -> MaxFlow {
        assert_ne!(s, t, "source equals sink");
        let mut res = self.residual();
        let n = self.node_count;
        let mut value = 0u32;
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
        loop {
            prev.iter_mut().for_each(|p| *p = None);
            let mut seen = vec![false; n];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for (i, &(v, cap, _)) in res.adj[u].iter().enumerate() {
                    if cap > 0 && !seen[v] {
                        seen[v] = true;
                        prev[v] = Some((u, i));
                        queue.push_back(v);
                    }
                }
            }
            if !seen[t] {
                break;
            }
            let mut bottleneck = u32::MAX;
            let mut v = t;
            while let Some((u, i)) = prev[v] {
                bottleneck = bottleneck.min(res.adj[u][i].1);
                v = u;
            }
            let mut v = t;
            while let Some((u, i)) = prev[v] {
                let (to, _, rev) = res.adj[u][i];
                res.adj[u][i].1 -= bottleneck;
                res.adj[to][rev].1 += bottleneck;
                v = u;
            }
            value += bottleneck;
        }

        let arc_flow = self
            .arcs
            .iter()
            .zip(&res.handles)
            .map(|(arc, &(u, i))| arc.cap - res.adj[u][i].1)
            .collect();

        // Reverse search from t: u reaches t if some residual edge u->v has
        // capacity and v reaches t.
        let mut reaches = vec![false; n];
        reaches[t] = true;
        let mut queue = VecDeque::from([t]);
        while let Some(v) = queue.pop_front() {
            for &(u, _, rev) in &res.adj[v] {
                if !reaches[u] && res.adj[u][rev].1 > 0 {
                    reaches[u] = true;
                    queue.push_back(u);
                }
            }
        }
        let sink_side = (0..n).filter(|&v| reaches[v]).collect();

        MaxFlow {
            value,
            arc_flow,
            sink_side,
        }
    }

    /// λ(s, t): maximum number of edge-disjoint s→t paths under the capacities.
    pub fn max_flow_value(&self, s: usize, t: usize) -> u32 {
        self.max_flow(s, t).value
    }

    /// Minimum cut value and the inclusion-minimal sink side of a minimum cut.
    pub fn closest_sink_cut(&self, s: usize, t: usize) -> (u32, NodeSet) {
        let flow = self.max_flow(s, t);
        (flow.value, flow.sink_side)
    }

    /// The closest-to-`t` minimum cut when λ(s, t) < `bound`, otherwise `None`.
    pub fn min_violated_cut(&self, s: usize, t: usize, bound: u32) -> Option<NodeSet> {
        let (value, side) = self.closest_sink_cut(s, t);
        (value < bound).then_some(side)
    }

    /// Splits a maximum s→t flow into arc-index paths, one per flow unit.
    pub fn decompose_paths(&self, s: usize, t: usize) -> Vec<Vec<usize>> {
        let flow = self.max_flow(s, t);
        let mut remaining = flow.arc_flow.clone();
        let mut paths = Vec::with_capacity(flow.value as usize);
        for _ in 0..flow.value {
            let mut path = Vec::new();
            let mut at = s;
            let mut visited = BTreeSet::from([s]);
            while at != t {
                let next = (0..self.arcs.len())
                    .find(|&i| remaining[i] > 0 && self.arcs[i].tail == at)
                    .expect("flow conservation");
                remaining[next] -= 1;
                path.push(next);
                at = self.arcs[next].head;
                if !visited.insert(at) {
                    // Strip the cycle just closed; its flow is already consumed.
                    while let Some(&last) = path.last() {
                        if self.arcs[last].tail == at {
                            path.pop();
                            break;
                        }
                        visited.remove(&self.arcs[last].tail);
                        path.pop();
                    }
                    // `at` stays in `visited`.
                }
            }
            paths.push(path);
        }
        paths
    }
}
