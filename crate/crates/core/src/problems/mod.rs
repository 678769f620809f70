//! Utility oracles for concrete problems encoded as complete bipartite matching.
//!
//! Scheduling, colouring and knapsack use `m * K` right vertices split into `K`
//! blocks of `m`; right vertex `u` (0-based) belongs to block `u / m`. Any
//! permutation of right vertices inside a block leaves the utility unchanged.

mod cnf;
mod colouring;
mod knapsack;
mod scheduling;
mod table;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;

pub use cnf::{
    assignment_coverage_check, brute_force_satisfiable, coverage_details, max_utility_over_matchings,
    sat_utility, Clause, CnfSpec, Coverage, Literal, COVERAGE_MAX_VARS,
};
pub use colouring::{colouring_utility, GraphColouringSpec};
pub use knapsack::{knapsack_utility, KnapsackSpec};
pub use scheduling::{scheduling_utility, SchedulingSpec};
pub use table::{TableEntry, TableSpec, TableUtility};

/// Block (machine, colour, knapsack) of right vertex `u` when blocks have size `m`.
pub fn block_of(u: usize, m: usize) -> usize {
    u / m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Scheduling,
    Colouring,
    Knapsack,
    Cnf,
    Table,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 5] = [
        ProblemKind::Scheduling,
        ProblemKind::Colouring,
        ProblemKind::Knapsack,
        ProblemKind::Cnf,
        ProblemKind::Table,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Scheduling => "scheduling",
            ProblemKind::Colouring => "colouring",
            ProblemKind::Knapsack => "knapsack",
            ProblemKind::Cnf => "cnf",
            ProblemKind::Table => "table",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coloring" => return Ok(ProblemKind::Colouring),
            "sat" => return Ok(ProblemKind::Cnf),
            _ => {}
        }
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown problem kind `{s}`")))
    }
}

fn parse<T: for<'de> Deserialize<'de>>(kind: ProblemKind, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidSpec(format!("{kind} file: {e}")))
}

/// Builds an instance from a JSON problem description.
pub fn load_problem(kind: ProblemKind, text: &str) -> Result<Instance> {
    Ok(match kind {
        ProblemKind::Scheduling => parse::<SchedulingSpec>(kind, text)?.into_instance(),
        ProblemKind::Colouring => parse::<GraphColouringSpec>(kind, text)?.into_instance(),
        ProblemKind::Knapsack => parse::<KnapsackSpec>(kind, text)?.into_instance(),
        ProblemKind::Cnf => parse::<CnfSpec>(kind, text)?.into_instance(),
        ProblemKind::Table => {
            let t = parse::<TableSpec>(kind, text)?.into_utility()?;
            Instance::new(t.shape(), t)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Matching;

    #[test]
    fn kind_names_round_trip() {
        for k in ProblemKind::ALL {
            assert_eq!(k.name().parse::<ProblemKind>().unwrap(), k);
        }
        assert_eq!("coloring".parse::<ProblemKind>().unwrap(), ProblemKind::Colouring);
        assert!("tsp".parse::<ProblemKind>().is_err());
    }

    #[test]
    fn loads_each_kind() {
        let cases = [
            (ProblemKind::Scheduling, r#"{"jobs":2,"machines":2,"service":[[1,10],[10,1]]}"#, (2, 4)),
            (ProblemKind::Colouring, r#"{"edges":[[0,1]],"colors":2,"c":1}"#, (2, 4)),
            (ProblemKind::Knapsack, r#"{"volumes":[3,3],"capacities":[4,4],"rewards":[[1,1],[1,1]],"kappa":5}"#, (2, 4)),
            (ProblemKind::Cnf, r#"{"vars":3,"clauses":[[1,-2,3]]}"#, (3, 6)),
            (ProblemKind::Table, r#"{"m":1,"n":2,"entries":[{"assign":[0],"utility":1},{"assign":[1],"utility":2}]}"#, (1, 2)),
        ];
        for (kind, text, (m, n)) in cases {
            let inst = load_problem(kind, text).unwrap();
            assert_eq!((inst.m(), inst.n()), (m, n), "{kind}");
            let u = inst.utility(&Matching::identity(inst.shape()));
            assert!(u.is_finite());
        }
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = load_problem(ProblemKind::Scheduling, "{\"jobs\": 2,\n \"machines\": }").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        let err = load_problem(ProblemKind::Cnf, r#"{"vars":1,"clauses":[[1,1,1]],"x":0}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
    }
}
