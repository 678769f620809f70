//! 3-CNF satisfiability as a matching problem.
//!
//! Variable `y_i` is left vertex `i`; there are `2m` right vertices. Matching
//! `y_i` into the low block `0..m` sets it false, the high block `m..2m` sets it
//! true. The utility is 1 when the induced assignment satisfies the formula and
//! 0 otherwise, so the optimum is 1 exactly when the formula is satisfiable.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, Matching, Shape, UtilityBounds, UtilityOracle};

/// Largest variable count accepted by [`assignment_coverage_check`].
pub const COVERAGE_MAX_VARS: usize = 8;

/// Above this many matchings the maximum is taken over block representatives.
const FULL_ENUMERATION_LIMIT: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    /// 0-based variable index.
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    /// From a DIMACS-style signed 1-based literal.
    pub fn from_dimacs(lit: i64) -> Result<Self> {
        if lit == 0 {
            return Err(Error::InvalidSpec("literal 0 is not allowed".into()));
        }
        Ok(Literal {
            var: (lit.unsigned_abs() - 1) as usize,
            positive: lit > 0,
        })
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.positive {
            v
        } else {
            -v
        }
    }

    pub fn holds(self, assignment: &[bool]) -> bool {
        assignment[self.var] == self.positive
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

pub type Clause = [Literal; 3];

/// JSON: `{"vars": m, "clauses": [[1, -2, 3], ...]}` with signed 1-based literals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCnf", into = "RawCnf")]
pub struct CnfSpec {
    vars: usize,
    clauses: Vec<Clause>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCnf {
    vars: usize,
    clauses: Vec<[i64; 3]>,
}

impl TryFrom<RawCnf> for CnfSpec {
    type Error = Error;

    fn try_from(raw: RawCnf) -> Result<Self> {
        let clauses = raw
            .clauses
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let mut out = [Literal { var: 0, positive: true }; 3];
                for (slot, &lit) in out.iter_mut().zip(c) {
                    *slot = Literal::from_dimacs(lit)
                        .map_err(|e| Error::InvalidSpec(format!("clauses[{k}]: {e}")))?;
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        CnfSpec::new(raw.vars, clauses)
    }
}

impl From<CnfSpec> for RawCnf {
    fn from(s: CnfSpec) -> Self {
        RawCnf {
            vars: s.vars,
            clauses: s.clauses.iter().map(|c| c.map(Literal::to_dimacs)).collect(),
        }
    }
}

impl CnfSpec {
    pub fn new(vars: usize, clauses: Vec<Clause>) -> Result<Self> {
        if vars == 0 {
            return Err(Error::InvalidSpec("formula needs at least one variable".into()));
        }
        for (k, c) in clauses.iter().enumerate() {
            if let Some(l) = c.iter().find(|l| l.var >= vars) {
                return Err(Error::InvalidSpec(format!(
                    "clauses[{k}]: literal {l} refers to a variable beyond {vars}"
                )));
            }
        }
        Ok(CnfSpec { vars, clauses })
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// `(m, 2m)`.
    pub fn shape(&self) -> Shape {
        Shape::new(self.vars, 2 * self.vars).expect("m <= 2m")
    }

    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| l.holds(assignment)))
    }

    /// Truth value of each variable under `matching`.
    pub fn assignment(&self, matching: &Matching) -> Vec<bool> {
        matching.assign().iter().map(|&u| u >= self.vars).collect()
    }

    /// A matching realizing `assignment`: `y_i -> i` if false, `y_i -> m + i` if true.
    pub fn lift(&self, assignment: &[bool]) -> Matching {
        let m = self.vars;
        let assign = assignment
            .iter()
            .enumerate()
            .map(|(i, &b)| if b { m + i } else { i })
            .collect();
        Matching::new(assign, self.shape()).expect("distinct slots per variable")
    }

    pub fn into_instance(self) -> Instance {
        Instance::new(self.shape(), self)
    }
}

/// 1 if the assignment read off `matching` satisfies the formula, else 0.
pub fn sat_utility(spec: &CnfSpec, matching: &Matching) -> f64 {
    if spec.satisfied_by(&spec.assignment(matching)) {
        1.0
    } else {
        0.0
    }
}

impl UtilityOracle for CnfSpec {
    fn evaluate(&self, matching: &Matching) -> f64 {
        sat_utility(self, matching)
    }

    fn bounds(&self) -> UtilityBounds {
        UtilityBounds { min: 0.0, max: 1.0 }
    }
}

fn bits(code: u64, m: usize) -> Vec<bool> {
    (0..m).map(|i| code >> i & 1 == 1).collect()
}

/// Truth-table satisfiability.
pub fn brute_force_satisfiable(spec: &CnfSpec) -> bool {
    let m = spec.vars;
    assert!(m < 64, "truth table over {m} variables");
    (0..1u64 << m).any(|code| spec.satisfied_by(&bits(code, m)))
}

/// `max_M U(M)`: over every matching when there are at most a million of them,
/// otherwise over one lifted representative per assignment (the utility only
/// depends on which block each variable lands in).
pub fn max_utility_over_matchings(spec: &CnfSpec) -> f64 {
    let shape = spec.shape();
    let full = shape
        .count_matchings()
        .is_some_and(|c| c <= FULL_ENUMERATION_LIMIT);
    let mut best = 0.0f64;
    if full {
        for mt in shape.matchings() {
            best = best.max(sat_utility(spec, &mt));
            if best == 1.0 {
                break;
            }
        }
    } else {
        for code in 0..1u64 << spec.vars {
            best = best.max(sat_utility(spec, &spec.lift(&bits(code, spec.vars))));
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Coverage {
    /// Every assignment in `{0,1}^m` is induced by some perfect matching.
    pub all_assignments_realized: bool,
    pub optimum_is_one: bool,
    pub satisfiable: bool,
}

impl Coverage {
    pub fn passes(&self) -> bool {
        self.all_assignments_realized && self.optimum_is_one == self.satisfiable
    }
}

pub fn coverage_details(spec: &CnfSpec) -> Result<Coverage> {
    let m = spec.vars;
    if m > COVERAGE_MAX_VARS {
        return Err(Error::InvalidParameter(format!(
            "coverage check supports at most {COVERAGE_MAX_VARS} variables, got {m}"
        )));
    }
    let all_assignments_realized = (0..1u64 << m).all(|code| {
        let want = bits(code, m);
        let mt = spec.lift(&want);
        mt.is_valid_for(spec.shape()) && spec.assignment(&mt) == want
    });
    Ok(Coverage {
        all_assignments_realized,
        optimum_is_one: max_utility_over_matchings(spec) == 1.0,
        satisfiable: brute_force_satisfiable(spec),
    })
}

/// Every assignment is realizable, and the matching optimum is 1 iff the formula is satisfiable.
pub fn assignment_coverage_check(spec: &CnfSpec) -> Result<bool> {
    coverage_details(spec).map(|c| c.passes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::enumerate_matchings;

    fn cnf(vars: usize, clauses: &[[i64; 3]]) -> CnfSpec {
        let json = serde_json::json!({ "vars": vars, "clauses": clauses });
        serde_json::from_value(json).unwrap()
    }

    #[test]
    fn single_positive_literal() {
        let f = cnf(1, &[[1, 1, 1]]);
        let s = f.shape();
        assert_eq!(sat_utility(&f, &Matching::new(vec![1], s).unwrap()), 1.0);
        assert_eq!(sat_utility(&f, &Matching::new(vec![0], s).unwrap()), 0.0);
    }

    #[test]
    fn two_clause_formula() {
        let f = cnf(3, &[[1, 2, 3], [-1, -2, -3]]);
        assert!(f.satisfied_by(&[true, false, false]));
        assert!(!f.satisfied_by(&[true, true, true]));
        assert_eq!(sat_utility(&f, &f.lift(&[true, false, false])), 1.0);
        assert_eq!(sat_utility(&f, &f.lift(&[true, true, true])), 0.0);
    }

    #[test]
    fn all_sign_patterns_are_unsatisfiable() {
        let mut clauses = Vec::new();
        for code in 0..8 {
            let s = |i: i64| if code >> (i - 1) & 1 == 1 { -i } else { i };
            clauses.push([s(1), s(2), s(3)]);
        }
        let f = cnf(3, &clauses);
        assert!(!brute_force_satisfiable(&f));
        let all = enumerate_matchings(f.shape()).unwrap();
        assert_eq!(all.len(), 120);
        assert!(all.iter().all(|mt| sat_utility(&f, mt) == 0.0));
        assert!(assignment_coverage_check(&f).unwrap());
    }

    #[test]
    fn coverage_small() {
        let f = cnf(1, &[[1, 1, 1]]);
        let c = coverage_details(&f).unwrap();
        assert!(c.all_assignments_realized && c.satisfiable && c.optimum_is_one);
        let f = cnf(2, &[[1, 2, 2]]);
        // (true, true) via y1 -> z2, y2 -> z3
        assert_eq!(f.lift(&[true, true]).assign(), [2, 3]);
        assert!(assignment_coverage_check(&f).unwrap());
    }

    #[test]
    fn coverage_rejects_large_formulas() {
        let f = cnf(9, &[[1, 2, 9]]);
        assert!(assignment_coverage_check(&f).is_err());
        let f = cnf(8, &[[1, -2, 8]]);
        assert!(assignment_coverage_check(&f).unwrap());
    }

    #[test]
    fn literal_parsing() {
        assert_eq!(Literal::from_dimacs(-3).unwrap(), Literal { var: 2, positive: false });
        assert!(Literal::from_dimacs(0).is_err());
        assert!(serde_json::from_value::<CnfSpec>(serde_json::json!({"vars": 2, "clauses": [[1, 2, 3]]})).is_err());
        assert!(serde_json::from_value::<CnfSpec>(serde_json::json!({"vars": 2, "clauses": [[1, 2]]})).is_err());
        let f = cnf(3, &[[1, -2, 3]]);
        let back: CnfSpec = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
    }
}
