//! Exact analysis of the chain on small instances.
//!
//! The transition matrix is assembled by enumerating all `m * n` draws from
//! every state, the same classification the sampler uses, so the matrix and the
//! sampler describe one chain. Everything else (stationarity, total variation,
//! conductance, spectral gap and the bound checks) is computed from that matrix.

mod conductance;
mod mixing;
mod report;
mod spectral;

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::instance::{enumerate_matchings, gibbs_weights, GibbsParams, Instance, Matching, Shape, UtilityBounds};
use crate::sampler::{Proposal, ProposalKind};

pub use conductance::{conductance_exhaustive, Cut, CONDUCTANCE_MAX_STATES};
pub use mixing::{mixing_time, tv_distance_curve, TvCurve, MIXING_SCAN_CAP};
pub use report::{diagnose, diagnose_chain, verify_bounds, BoundChecks, DiagnosticsReport, Violation};
pub use spectral::{second_eigenvalue, spectral_gap};

/// Largest state space for which a dense matrix is built.
pub const EXACT_MAX_STATES: usize = 2_000;

/// The chain on `N` with its dense row-stochastic matrix and Gibbs vector.
#[derive(Clone, Debug)]
pub struct ExactChain {
    shape: Shape,
    params: GibbsParams,
    bounds: UtilityBounds,
    lazy: bool,
    states: Vec<Matching>,
    utilities: Vec<f64>,
    p: Vec<f64>,
    pi: Vec<f64>,
}

impl ExactChain {
    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn params(&self) -> GibbsParams {
        self.params
    }

    pub fn bounds(&self) -> UtilityBounds {
        self.bounds
    }

    pub fn lazy(&self) -> bool {
        self.lazy
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Matching] {
        &self.states
    }

    pub fn utilities(&self) -> &[f64] {
        &self.utilities
    }

    /// Gibbs probabilities in state order.
    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.states.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.states.len();
        &self.p[i * n..(i + 1) * n]
    }

    /// `v P` for a row vector `v`.
    pub fn left_multiply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.states.len();
        let mut out = vec![0.0; n];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &pij) in out.iter_mut().zip(self.row(i)) {
                *o += vi * pij;
            }
        }
        out
    }

    pub fn pi_min(&self) -> f64 {
        self.pi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest `|1 - Σ_j P_ij|`.
    pub fn row_sum_error(&self) -> f64 {
        (0..self.n_states())
            .map(|i| (1.0 - self.row(i).iter().sum::<f64>()).abs())
            .fold(0.0, f64::max)
    }
}

/// `P_ij = (#draws proposing j from i) / (mn) * min{1, exp(β ΔU)}`, halved when lazy.
pub fn build_exact_chain(inst: &Instance, params: GibbsParams, lazy: bool) -> Result<ExactChain> {
    let shape = inst.shape();
    let count = shape.checked_count(EXACT_MAX_STATES).map_err(|e| match e {
        Error::CapExceeded { count, cap, .. } => Error::CapExceeded {
            what: "states for a dense transition matrix",
            count,
            cap,
        },
        other => other,
    })?;
    let states = enumerate_matchings(shape)?;
    debug_assert_eq!(states.len(), count);
    let utilities: Vec<f64> = states.iter().map(|s| inst.utility(s)).collect();
    let pi = gibbs_weights(&utilities, params);

    let (m, n) = (shape.m(), shape.n());
    let draw = 1.0 / (m * n) as f64;
    let hold = if lazy { 0.5 } else { 1.0 };
    let beta = params.beta();
    let mut p = vec![0.0; count * count];
    for (i, state) in states.iter().enumerate() {
        let row = &mut p[i * count..(i + 1) * count];
        for y in 0..m {
            for z in 0..n {
                let proposal = Proposal::classify(state, y, z);
                if proposal.kind == ProposalKind::Stay {
                    continue;
                }
                let j = shape.rank(&proposal.apply(state));
                let log_ratio = beta * (utilities[j] - utilities[i]);
                let accept = if log_ratio >= 0.0 { 1.0 } else { log_ratio.exp() };
                row[j] += hold * draw * accept;
            }
        }
        let off: f64 = row.iter().sum();
        row[i] = 1.0 - off;
    }
    Ok(ExactChain {
        shape,
        params,
        bounds: inst.bounds(),
        lazy,
        states,
        utilities,
        p,
        pi,
    })
}

/// `max_{i,j} |π_i P_ij - π_j P_ji|`.
pub fn verify_detailed_balance(chain: &ExactChain) -> f64 {
    let n = chain.n_states();
    let pi = chain.pi();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((pi[i] * chain.p(i, j) - pi[j] * chain.p(j, i)).abs());
        }
    }
    worst
}

/// `‖π P - π‖_∞` for the Gibbs vector.
pub fn stationary_residual(chain: &ExactChain) -> f64 {
    chain
        .left_multiply(chain.pi())
        .iter()
        .zip(chain.pi())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

pub const STATIONARY_TOLERANCE: f64 = 1e-13;
pub const STATIONARY_MAX_ITERATIONS: u64 = 1_000_000;

/// Left fixed vector of `P` by power iteration from the uniform vector.
pub fn stationary_distribution(chain: &ExactChain) -> Result<Vec<f64>> {
    let n = chain.n_states();
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..STATIONARY_MAX_ITERATIONS {
        let next = chain.left_multiply(&v);
        let change = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if change < STATIONARY_TOLERANCE {
            let total: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= total);
            return Ok(v);
        }
    }
    Err(Error::NoConvergence {
        what: "stationary power iteration",
        iterations: STATIONARY_MAX_ITERATIONS,
    })
}

fn reaches_all(n: usize, next: impl Fn(usize) -> Vec<usize>) -> Option<Vec<usize>> {
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for v in next(u) {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    level.iter().all(|&l| l != usize::MAX).then_some(level)
}

fn successors(chain: &ExactChain, u: usize) -> Vec<usize> {
    (0..chain.n_states()).filter(|&v| chain.p(u, v) > 0.0).collect()
}

/// Strong connectivity of the positive-entry digraph.
pub fn is_irreducible(chain: &ExactChain) -> bool {
    let n = chain.n_states();
    let forward = reaches_all(n, |u| successors(chain, u)).is_some();
    let backward = reaches_all(n, |u| (0..n).filter(|&v| chain.p(v, u) > 0.0).collect()).is_some();
    forward && backward
}

/// Period of an irreducible chain: gcd of `level(u) + 1 - level(v)` over positive edges.
pub fn period(chain: &ExactChain) -> Option<usize> {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    if !is_irreducible(chain) {
        return None;
    }
    let n = chain.n_states();
    let level = reaches_all(n, |u| successors(chain, u))?;
    let mut g = 0;
    for u in 0..n {
        for v in successors(chain, u) {
            g = gcd(g, (level[u] + 1).abs_diff(level[v]));
        }
    }
    Some(g)
}

pub fn is_aperiodic(chain: &ExactChain) -> bool {
    period(chain) == Some(1)
}
