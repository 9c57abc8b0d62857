//! Acceptance suite. Runs as a plain binary so the per-criterion lines are
//! always printed; exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use spidercover::augment::SolveReport;
use spidercover::cost::{to_f64, Cost};
use spidercover::deficiency::{rooted_cores, rooted_state, ExplicitEdge, ExplicitSetFunction};
use spidercover::exact::{
    brute_force_opt, brute_force_ring_cover, chain_certificate, check_chain, enumerate_family,
    residual_optima, CandidateEdge, EnumeratedFamily,
};
use spidercover::gen::corpus_instance;
use spidercover::instance::{serialize_instance, Edge, Instance, ParseOptions, UnitSet};
use spidercover::ring::{build_ring_context, primal_dual_ring_cover, LegPrice};
use spidercover::verify::{
    check_feasible, core_drop_violations, density_violations, within_ratio_bound,
};
use spidercover::{solve, Solution};

const SEEDS: std::ops::RangeInclusive<u64> = 1..=500;
const FEASIBILITY_BUDGET: Duration = Duration::from_secs(60);
const RING_BUDGET: Duration = Duration::from_secs(120);
const MIN_RING_CONTEXTS: usize = 2000;
const DENSITY_UNITS: usize = 16;
const FAMILY_INSTANCES: usize = 100;
const FAMILY_MAX_N: usize = 8;
const EXPLICIT_TABLES: usize = 200;
const RESIDUALS_PER_TABLE: usize = 5;
const MIN_CHAINS: usize = 200;

struct Case {
    seed: u64,
    inst: Instance,
    report: SolveReport,
}

/// Selection at the start of each greedy iteration, then the final one.
fn visited_states(inst: &Instance, report: &SolveReport) -> Vec<UnitSet> {
    let mut acc = Vec::new();
    let mut out = vec![UnitSet::new()];
    for rec in &report.solution.audit {
        acc.extend(rec.added.iter().copied());
        out.push(inst.units_for_multiset(&acc).unwrap());
    }
    out
}

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn line(o: &Outcome) {
    println!(
        "[{}] {}: {}",
        if o.pass { "PASS" } else { "FAIL" },
        o.name,
        o.detail
    );
}

fn main() {
    let mut outcomes = Vec::new();

    // 1. feasibility
    let start = Instant::now();
    let cases: Vec<Case> = SEEDS
        .into_par_iter()
        .map(|seed| {
            let inst = corpus_instance(seed).expect("corpus instance");
            let report = solve(&inst).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            Case { seed, inst, report }
        })
        .collect();
    let infeasible: Vec<u64> = cases
        .iter()
        .filter(|c| {
            !check_feasible(&c.inst, &c.report.solution)
                .unwrap()
                .feasible
        })
        .map(|c| c.seed)
        .collect();
    let elapsed = start.elapsed();
    outcomes.push(Outcome {
        name: "1 feasibility",
        pass: infeasible.is_empty() && elapsed < FEASIBILITY_BUDGET && cases.len() >= 500,
        detail: format!(
            "{} instances, {} infeasible {:?}, {:.2}s (budget {}s)",
            cases.len(),
            infeasible.len(),
            infeasible,
            elapsed.as_secs_f64(),
            FEASIBILITY_BUDGET.as_secs()
        ),
    });
    line(outcomes.last().unwrap());

    // 2. ratio bound
    let optima: Vec<Solution> = cases
        .par_iter()
        .map(|c| brute_force_opt(&c.inst, 22).expect("brute force"))
        .collect();
    let mut ratio_violations = Vec::new();
    let mut ratios = Vec::new();
    for (c, opt) in cases.iter().zip(&optima) {
        let cost = c.report.solution.total_cost;
        let b = &c.report.claimed_ratio_bound;
        if cost < opt.total_cost {
            ratio_violations.push(c.seed); // cheaper than the optimum: an oracle bug
        }
        if !within_ratio_bound(&cost, &opt.total_cost, b.levels, b.terminals) {
            ratio_violations.push(c.seed);
        }
        if opt.total_cost != Cost::from_integer(0) {
            ratios.push(to_f64(&(cost / opt.total_cost)));
        }
    }
    ratios.sort_by(f64::total_cmp);
    let pct = |p: f64| ratios[((ratios.len() - 1) as f64 * p).round() as usize];
    let optimal = ratios.iter().filter(|&&r| r == 1.0).count();
    outcomes.push(Outcome {
        name: "2 ratio bound",
        pass: ratio_violations.is_empty(),
        detail: format!(
            "{} violations {:?}; ratio over {} nonzero optima: min {:.3} median {:.3} p90 {:.3} max {:.3}, {} exactly optimal",
            ratio_violations.len(),
            ratio_violations,
            ratios.len(),
            ratios[0],
            pct(0.5),
            pct(0.9),
            ratios[ratios.len() - 1],
            optimal
        ),
    });
    line(outcomes.last().unwrap());

    // 3. ring cover exactness
    let start = Instant::now();
    let ring_results: Vec<(usize, Vec<String>)> = cases.par_iter().map(ring_contexts).collect();
    let ring_total: usize = ring_results.iter().map(|r| r.0).sum();
    let ring_failures: Vec<String> = ring_results.into_iter().flat_map(|r| r.1).collect();
    let elapsed = start.elapsed();
    outcomes.push(Outcome {
        name: "3 ring cover exactness",
        pass: ring_failures.is_empty() && ring_total >= MIN_RING_CONTEXTS && elapsed < RING_BUDGET,
        detail: format!(
            "{} contexts, {} mismatches {:?}, {:.2}s (budget {}s)",
            ring_total,
            ring_failures.len(),
            ring_failures.iter().take(5).collect::<Vec<_>>(),
            elapsed.as_secs_f64(),
            RING_BUDGET.as_secs()
        ),
    });
    line(outcomes.last().unwrap());

    // 4. core count drop
    let mut iterations = 0;
    let mut drop_failures = Vec::new();
    for c in &cases {
        let recs = &c.report.solution.audit;
        iterations += recs.len();
        // independent recount: ν before/after from enumeration
        for (state, rec) in visited_states(&c.inst, &c.report).windows(2).zip(recs) {
            let before = nu_by_enumeration(&c.inst, &state[0], rec.phase_level);
            let after = nu_by_enumeration(&c.inst, &state[1], rec.phase_level);
            if before != rec.cores_before
                || after != rec.cores_after
                || before - after < rec.leaf_count.div_ceil(2)
            {
                drop_failures.push(c.seed);
            }
        }
        if !core_drop_violations(recs).is_empty() {
            drop_failures.push(c.seed);
        }
    }
    drop_failures.dedup();
    outcomes.push(Outcome {
        name: "4 core count drop",
        pass: drop_failures.is_empty() && iterations > 0,
        detail: format!(
            "{} iterations, {} violations {:?}",
            iterations,
            drop_failures.len(),
            drop_failures
        ),
    });
    line(outcomes.last().unwrap());

    // 5. density
    let density: Vec<(u64, usize, usize)> = cases
        .par_iter()
        .filter(|c| c.inst.positive_units().count() <= DENSITY_UNITS)
        .map(|c| {
            let taus = residual_optima(&c.inst, &c.report, DENSITY_UNITS).unwrap();
            let v = density_violations(&c.report.solution.audit, &taus);
            (c.seed, c.report.solution.audit.len(), v.len())
        })
        .collect();
    let density_bad: Vec<u64> = density.iter().filter(|d| d.2 > 0).map(|d| d.0).collect();
    outcomes.push(Outcome {
        name: "5 density",
        pass: density_bad.is_empty() && !density.is_empty(),
        detail: format!(
            "{} instances, {} iterations, {} violating instances {:?}",
            density.len(),
            density.iter().map(|d| d.1).sum::<usize>(),
            density_bad.len(),
            density_bad
        ),
    });
    line(outcomes.last().unwrap());

    // 6. family structure
    let sub: Vec<&Case> = cases
        .iter()
        .filter(|c| c.inst.node_count() <= FAMILY_MAX_N)
        .take(FAMILY_INSTANCES)
        .collect();
    let mut states = 0;
    let mut family_failures = Vec::new();
    for c in &sub {
        for sel in visited_states(&c.inst, &c.report) {
            states += 1;
            let fam = enumerate_family(&c.inst, &sel).unwrap();
            if let Err(why) = family_ok(&c.inst, &sel, &fam) {
                family_failures.push(format!("seed {}: {why}", c.seed));
            }
        }
    }
    outcomes.push(Outcome {
        name: "6 family structure",
        pass: family_failures.is_empty() && sub.len() == FAMILY_INSTANCES,
        detail: format!(
            "{} instances, {} states, {} mismatches {:?}",
            sub.len(),
            states,
            family_failures.len(),
            family_failures.iter().take(5).collect::<Vec<_>>()
        ),
    });
    line(outcomes.last().unwrap());

    // 7. residual supermodularity
    let (tables, residuals, failures) = explicit_residuals();
    outcomes.push(Outcome {
        name: "7 residual supermodularity",
        pass: failures.is_empty()
            && tables >= EXPLICIT_TABLES
            && residuals >= tables * RESIDUALS_PER_TABLE,
        detail: format!(
            "{} tables, {} residuals, {} failures {:?}",
            tables,
            residuals,
            failures.len(),
            failures.iter().take(5).collect::<Vec<_>>()
        ),
    });
    line(outcomes.last().unwrap());

    // 8. chain structure
    let (chains, chain_failures) = chains(&cases);
    outcomes.push(Outcome {
        name: "8 chain structure",
        pass: chain_failures.is_empty() && chains >= MIN_CHAINS,
        detail: format!(
            "{} minimal covers, {} without certificate {:?}",
            chains,
            chain_failures.len(),
            chain_failures.iter().take(5).collect::<Vec<_>>()
        ),
    });
    line(outcomes.last().unwrap());

    // 9. phase postcondition
    let mut phases = 0;
    let mut phase_failures = Vec::new();
    for c in &cases {
        let mut acc = Vec::new();
        for p in &c.report.phases {
            phases += 1;
            acc.extend(p.added.iter().copied());
            let sel = c.inst.units_for_multiset(&acc).unwrap();
            let level = enumerate_family(&c.inst, &sel).unwrap().level;
            if level >= p.level {
                phase_failures.push((c.seed, p.level, level));
            }
        }
    }
    outcomes.push(Outcome {
        name: "9 phase postcondition",
        pass: phase_failures.is_empty() && phases > 0,
        detail: format!(
            "{} phases, {} violations {:?}",
            phases,
            phase_failures.len(),
            phase_failures
        ),
    });
    line(outcomes.last().unwrap());

    // 10. determinism
    outcomes.push(determinism(&cases));
    line(outcomes.last().unwrap());

    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!(
        "acceptance: {} of {} criteria passed",
        outcomes.len() - failed,
        outcomes.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

/// Number of minimal sets at `level` by direct enumeration.
fn nu_by_enumeration(inst: &Instance, sel: &UnitSet, level: u32) -> usize {
    let fam = enumerate_family(inst, sel).unwrap();
    if fam.level < level {
        0
    } else {
        fam.cores.len()
    }
}

fn ring_contexts(c: &Case) -> (usize, Vec<String>) {
    let mut count = 0;
    let mut failures = Vec::new();
    let states = visited_states(&c.inst, &c.report);
    for sel in &states[..states.len() - 1] {
        let (level, cores) = rooted_state(&c.inst, sel);
        let fam = enumerate_family(&c.inst, sel).unwrap();
        for (idx, edge) in c.inst.edges().iter().enumerate() {
            if edge.cost == Cost::from_integer(0) {
                continue;
            }
            let Some(head) = c.inst.first_free_unit(idx, sel) else {
                continue;
            };
            for core in &cores {
                count += 1;
                let ctx = build_ring_context(&c.inst, sel, &cores, core, head, level);
                let cands: Vec<CandidateEdge> = ctx
                    .candidates()
                    .iter()
                    .map(|&u| {
                        let e = c.inst.unit_edge(u);
                        CandidateEdge {
                            unit: u,
                            edge: fam.edge(e.tail, e.head),
                            cost: e.cost,
                        }
                    })
                    .collect();
                let want = brute_force_ring_cover(
                    &fam,
                    fam.to_mask(&core.members),
                    fam.edge(edge.tail, edge.head),
                    &cands,
                )
                .unwrap()
                .map(|w| w.0);
                let got = primal_dual_ring_cover(&ctx);
                let certified = match &got {
                    LegPrice::Finite(cover) => ctx.certifies(cover),
                    LegPrice::Unpriceable => true,
                };
                if got.cost() != want || !certified {
                    failures.push(format!(
                        "seed {} head {} core {:?}: got {:?} want {:?}",
                        c.seed,
                        edge.id,
                        core.members,
                        got.cost(),
                        want
                    ));
                }
            }
        }
    }
    (count, failures)
}

fn family_ok(inst: &Instance, sel: &UnitSet, fam: &EnumeratedFamily) -> Result<(), String> {
    let (level, cores) = rooted_state(inst, sel);
    if level != fam.level {
        return Err(format!("level {level} vs enumerated {}", fam.level));
    }
    if level == 0 {
        return Ok(());
    }
    if !fam.t_intersecting {
        return Err("family not T-intersecting".into());
    }
    if let Some(r) = fam.rings.iter().find(|r| !r.is_ring) {
        return Err(format!("F(C) for {:?} is not a ring", fam.to_nodes(r.core)));
    }
    if !fam.maximal_sets_t_disjoint() {
        return Err("maximal ring members share a terminal".into());
    }
    if cores != fam.core_infos() || cores != rooted_cores(inst, sel) {
        return Err(format!(
            "cores {:?} vs enumerated {:?}",
            cores,
            fam.core_infos()
        ));
    }
    Ok(())
}

/// Independent check of positive `T`-intersecting supermodularity.
fn supermodular(f: &ExplicitSetFunction) -> bool {
    let t = f.terminal_mask();
    let n = 1u32 << f.universe();
    (0..n).all(|a| {
        f.value(a) == 0
            || (0..n).all(|b| {
                f.value(b) == 0
                    || a & b & t == 0
                    || f.value(a) + f.value(b) <= f.value(a & b) + f.value(a | b)
            })
    })
}

fn random_digraph(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.gen_range(3..=9);
    let terms = rng.gen_range(1..n);
    let mut nodes: Vec<usize> = (1..n).collect();
    nodes.shuffle(rng);
    let k = rng.gen_range(1..=4);
    let m = rng.gen_range(0..=2 * n);
    let edges = (0..m)
        .map(|i| Edge {
            id: i as u64,
            tail: rng.gen_range(0..n),
            head: rng.gen_range(1..n),
            cost: Cost::from_integer(0),
            mult: rng.gen_range(1..=2),
        })
        .collect();
    Instance::new(
        n,
        0,
        nodes[..terms].iter().copied(),
        k,
        edges,
        ParseOptions::default(),
    )
    .unwrap()
}

fn explicit_residuals() -> (usize, usize, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();
    let mut residuals = 0;
    for table in 0..EXPLICIT_TABLES {
        let inst = random_digraph(&mut rng);
        let (f, _) = ExplicitSetFunction::from_rooted(&inst).unwrap();
        if !supermodular(&f) {
            failures.push(format!("table {table}: base not supermodular"));
        }
        let u = f.universe();
        for r in 0..RESIDUALS_PER_TABLE {
            let edges: Vec<ExplicitEdge> = (0..rng.gen_range(1..=4))
                .map(|_| ExplicitEdge {
                    tail: rng.gen_range(0..=u),
                    head: rng.gen_range(0..u),
                })
                .filter(|e| e.tail != e.head)
                .collect();
            residuals += 1;
            match f.residual(&edges) {
                Ok(g) => {
                    let values_ok = (0..1u32 << u).all(|s| {
                        let hits = edges.iter().filter(|e| e.enters(s)).count() as u32;
                        g.value(s) == f.value(s).saturating_sub(hits)
                    });
                    if !values_ok || !supermodular(&g) {
                        failures.push(format!("table {table} residual {r}: oracle disagrees"));
                    }
                }
                Err(e) => failures.push(format!("table {table} residual {r}: {e}")),
            }
        }
    }
    (EXPLICIT_TABLES, residuals, failures)
}

/// Inclusion-minimal covers of enumerated rings, built by random insertion
/// and reverse delete, each checked for a nested-chain certificate.
fn chains(cases: &[Case]) -> (usize, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut count = 0;
    let mut failures = Vec::new();
    for c in cases.iter().filter(|c| c.inst.node_count() <= FAMILY_MAX_N) {
        let fam = enumerate_family(&c.inst, &UnitSet::new()).unwrap();
        if fam.level == 0 {
            continue;
        }
        let pool: Vec<ExplicitEdge> = c
            .inst
            .positive_units()
            .map(|u| {
                let e = c.inst.unit_edge(u);
                fam.edge(e.tail, e.head)
            })
            .collect();
        for ring in &fam.rings {
            let covers = |set: &[ExplicitEdge]| {
                ring.members
                    .iter()
                    .all(|&a| set.iter().any(|e| e.enters(a)))
            };
            if !covers(&pool) {
                continue;
            }
            for _ in 0..2 {
                let mut order = pool.clone();
                order.shuffle(&mut rng);
                let mut cover = Vec::new();
                for e in order {
                    if covers(&cover) {
                        break;
                    }
                    cover.push(e);
                }
                for i in (0..cover.len()).rev() {
                    let mut trial = cover.clone();
                    trial.remove(i);
                    if covers(&trial) {
                        cover = trial;
                    }
                }
                count += 1;
                match chain_certificate(&ring.members, &cover) {
                    Some(chain) if check_chain(&ring.members, &cover, &chain) => {}
                    _ => failures.push(format!(
                        "seed {} core {:?}",
                        c.seed,
                        fam.to_nodes(ring.core)
                    )),
                }
            }
        }
    }
    (count, failures)
}

fn determinism(cases: &[Case]) -> Outcome {
    let bin = env!("CARGO_BIN_EXE_spidercover");
    let dir = tempfile::tempdir().unwrap();
    let mut in_process = 0;
    let mut differing = Vec::new();
    for c in cases {
        let again = solve(&corpus_instance(c.seed).unwrap()).unwrap();
        let a = serde_json::to_string(&c.report).unwrap();
        let b = serde_json::to_string(&again).unwrap();
        in_process += 1;
        if a != b {
            differing.push(c.seed);
        }
        fs::write(
            dir.path().join(format!("{}.json", c.seed)),
            serialize_instance(&c.inst),
        )
        .unwrap();
    }
    let runs: BTreeMap<u64, (Vec<u8>, Vec<u8>)> = cases
        .par_iter()
        .map(|c| {
            let path = dir.path().join(format!("{}.json", c.seed));
            let once = || {
                let out = Command::new(bin)
                    .args(["solve", "--no-timestamp", "--instance"])
                    .arg(&path)
                    .output()
                    .unwrap();
                assert!(
                    out.status.success(),
                    "seed {} exit {:?}",
                    c.seed,
                    out.status
                );
                out.stdout
            };
            (c.seed, (once(), once()))
        })
        .collect();
    differing.extend(runs.iter().filter(|(_, (a, b))| a != b).map(|(s, _)| *s));
    Outcome {
        name: "10 determinism",
        pass: differing.is_empty() && runs.len() == cases.len(),
        detail: format!(
            "{} in-process reruns, {} CLI double runs, {} differing {:?}",
            in_process,
            runs.len(),
            differing.len(),
            differing
        ),
    }
}
