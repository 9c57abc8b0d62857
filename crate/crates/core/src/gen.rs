//! Seeded random instances.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{self, Cost};
use crate::error::{Error, Result};
use crate::instance::{validate_quasi_bipartite, Edge, Instance, ParseOptions};

pub const RETRY_CAP: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenMode {
    QuasiBipartite,
    /// Plant `ell` edge-disjoint zero-cost root-to-terminal paths first.
    Augmentation {
        ell: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenParams {
    pub n: usize,
    pub terminals: usize,
    pub k: u32,
    /// Fraction of eligible positive-cost pairs that receive an edge.
    #[serde(with = "cost::serde_str")]
    pub density: Cost,
    pub cost_min: i64,
    pub cost_max: i64,
    pub seed: u64,
    pub mode: GenMode,
    /// Cap on positive-cost units (copies included).
    pub max_units: usize,
    /// Extra zero-cost edges between random non-root nodes.
    pub zero_edges: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n: 6,
            terminals: 2,
            k: 1,
            density: Cost::new(1, 2),
            cost_min: 1,
            cost_max: 10,
            seed: 1,
            mode: GenMode::QuasiBipartite,
            max_units: 22,
            zero_edges: 0,
        }
    }
}

impl GenParams {
    /// Parameters of corpus instance `seed`, drawn from the seed itself:
    /// n ≤ 10, |T| ≤ 4, k ≤ 3, at most 22 positive units.
    pub fn corpus(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
        let n = rng.gen_range(4..=10);
        let terminals = rng.gen_range(1..=4.min(n - 1));
        let k = rng.gen_range(1..=3);
        let mode = if k >= 2 && rng.gen_bool(0.3) {
            GenMode::Augmentation {
                ell: rng.gen_range(1..k),
            }
        } else {
            GenMode::QuasiBipartite
        };
        let pairs = eligible_pairs(n, terminals).len() as i64;
        let target = rng.gen_range(8..=22).min(pairs);
        GenParams {
            n,
            terminals,
            k,
            density: Cost::new(target, pairs),
            cost_min: 1,
            cost_max: 10,
            seed,
            mode,
            max_units: 22,
            zero_edges: rng.gen_range(0..=n / 3),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::BadParams("need at least two nodes".into()));
        }
        if self.terminals == 0 || self.terminals >= self.n {
            return Err(Error::BadParams(format!(
                "terminal count {} must be in 1..{}",
                self.terminals, self.n
            )));
        }
        if self.k == 0 {
            return Err(Error::BadParams("k must be positive".into()));
        }
        if self.cost_min < 1 || self.cost_max < self.cost_min {
            return Err(Error::BadParams(
                "cost range must be a nonempty positive interval".into(),
            ));
        }
        if self.density < Cost::from_integer(0) || self.density > Cost::from_integer(1) {
            return Err(Error::BadParams("density must lie in [0, 1]".into()));
        }
        if let GenMode::Augmentation { ell } = self.mode {
            if ell >= self.k {
                return Err(Error::BadParams(
                    "augmentation level must be below k".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Root is node 0, terminals are nodes `1..=terminals`.
fn eligible_pairs(n: usize, terminals: usize) -> Vec<(usize, usize)> {
    let anchored = |v: usize| v <= terminals;
    let mut out = Vec::new();
    for u in 0..n {
        for v in 1..n {
            if u != v && (anchored(u) || anchored(v)) {
                out.push((u, v));
            }
        }
    }
    out
}

fn attempt(p: &GenParams, rng: &mut ChaCha8Rng) -> Result<Instance> {
    let mut edges: Vec<Edge> = Vec::new();
    let mut push = |tail: usize, head: usize, cost: Cost, mult: u32| {
        let id = edges.len() as u64;
        edges.push(Edge {
            id,
            tail,
            head,
            cost,
            mult,
        });
    };
    let zero = Cost::from_integer(0);

    if let GenMode::Augmentation { ell } = p.mode {
        for t in 1..=p.terminals {
            for _ in 0..ell {
                if p.n > p.terminals + 1 && rng.gen_bool(0.5) {
                    let s = rng.gen_range(p.terminals + 1..p.n);
                    push(0, s, zero, 1);
                    push(s, t, zero, 1);
                } else {
                    push(0, t, zero, 1);
                }
            }
        }
    }
    for _ in 0..p.zero_edges {
        let u = rng.gen_range(1..p.n);
        let v = rng.gen_range(1..p.n);
        if u != v {
            push(u, v, zero, 1);
        }
    }

    let mut pairs = eligible_pairs(p.n, p.terminals);
    pairs.shuffle(rng);
    let wanted = (p.density * Cost::from_integer(pairs.len() as i64))
        .round()
        .to_integer() as usize;
    let mut units = 0;
    for &(u, v) in pairs.iter().take(wanted) {
        if units >= p.max_units {
            break;
        }
        let mult = if units + 2 <= p.max_units && rng.gen_bool(0.1) {
            2
        } else {
            1
        };
        let cost = Cost::from_integer(rng.gen_range(p.cost_min..=p.cost_max));
        push(u, v, cost, mult);
        units += mult as usize;
    }

    Instance::new(p.n, 0, 1..=p.terminals, p.k, edges, ParseOptions::default())
}

/// Deterministic in `params`; retries until the instance is feasible.
pub fn generate(params: &GenParams) -> Result<Instance> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for _ in 0..RETRY_CAP {
        let inst = attempt(params, &mut rng)?;
        debug_assert!(validate_quasi_bipartite(&inst).ok);
        if inst.is_feasible(&inst.positive_units().collect()) {
            return Ok(inst);
        }
    }
    Err(Error::RetryCapExhausted(RETRY_CAP))
}

/// Corpus instance `seed`; on exhaustion, falls back to lowering k.
pub fn corpus_instance(seed: u64) -> Result<Instance> {
    let mut p = GenParams::corpus(seed);
    loop {
        match generate(&p) {
            Err(Error::RetryCapExhausted(_)) if p.k > 1 => {
                p.k -= 1;
                if let GenMode::Augmentation { ell } = p.mode {
                    if ell >= p.k {
                        p.mode = GenMode::QuasiBipartite;
                    }
                }
            }
            other => return other,
        }
    }
}
