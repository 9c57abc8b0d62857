//! Approximation for rooted subset k-edge-connectivity on quasi-bipartite
//! digraphs, with exact oracles and audits for desk-scale instances.

pub mod augment;
pub mod cli;
pub mod cost;
pub mod deficiency;
pub mod error;
pub mod exact;
pub mod gen;
pub mod greedy;
pub mod instance;
pub mod maxflow;
pub mod ring;
pub mod verify;

pub use augment::{solve, solve_with, SolveOptions, SolveReport};
pub use cost::Cost;
pub use error::{Error, Result};
pub use exact::brute_force_opt;
pub use instance::{
    parse_instance, parse_solution, serialize_instance, serialize_solution, Instance, Solution,
};
pub use verify::{audit_run, check_feasible, AuditReport};
