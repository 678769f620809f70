//! Random instance generators and brute-force oracles shared by integration tests.
//! The oracles work on the original problems (assignment vectors), never on
//! matchings, so they stay independent of the adapters they check.
#![allow(dead_code)]

use mcmc_matching::problems::{
    CnfSpec, GraphColouringSpec, KnapsackSpec, Literal, SchedulingSpec, TableUtility,
};
use mcmc_matching::sampler::{chain_rng, ChainRng};
use mcmc_matching::{enumerate_matchings, Instance, Shape};
use rand::Rng;

pub fn rng(seed: u64) -> ChainRng {
    chain_rng(seed)
}

pub fn falling(n: usize, m: usize) -> usize {
    (n - m + 1..=n).product()
}

/// Every vector in `{0..k}^m`.
pub fn all_assignments(m: usize, k: usize) -> Vec<Vec<usize>> {
    let total = k.pow(m as u32);
    (0..total)
        .map(|mut code| {
            (0..m)
                .map(|_| {
                    let d = code % k;
                    code /= k;
                    d
                })
                .collect()
        })
        .collect()
}

pub fn random_table(shape: Shape, rng: &mut ChainRng, lo: f64, hi: f64) -> Instance {
    let count = falling(shape.n(), shape.m());
    let values = (0..count).map(|_| rng.gen_range(lo..hi)).collect();
    Instance::new(shape, TableUtility::from_values(shape, values).unwrap())
}

pub fn random_integer_table(shape: Shape, rng: &mut ChainRng, hi: i32) -> Instance {
    let count = falling(shape.n(), shape.m());
    let values = (0..count).map(|_| f64::from(rng.gen_range(0..=hi))).collect();
    Instance::new(shape, TableUtility::from_values(shape, values).unwrap())
}

pub fn random_scheduling(jobs: usize, machines: usize, rng: &mut ChainRng) -> SchedulingSpec {
    let service = (0..jobs)
        .map(|_| (0..machines).map(|_| f64::from(rng.gen_range(1..=9))).collect())
        .collect();
    SchedulingSpec::new(machines, service).unwrap()
}

pub fn random_knapsack(items: usize, sacks: usize, rng: &mut ChainRng) -> KnapsackSpec {
    let volumes: Vec<f64> = (0..items).map(|_| f64::from(rng.gen_range(1..=5))).collect();
    let capacities: Vec<f64> = (0..sacks).map(|_| f64::from(rng.gen_range(3..=8))).collect();
    let rewards: Vec<Vec<f64>> = (0..items)
        .map(|_| (0..sacks).map(|_| f64::from(rng.gen_range(1..=6))).collect())
        .collect();
    let total: f64 = rewards.iter().flatten().sum();
    KnapsackSpec::new(volumes, capacities, rewards, total + 1.0).unwrap()
}

pub fn random_graph(vertices: usize, colors: usize, density: f64, rng: &mut ChainRng) -> GraphColouringSpec {
    let mut edges = Vec::new();
    for a in 0..vertices {
        for b in a + 1..vertices {
            if rng.gen_bool(density) {
                edges.push((a, b));
            }
        }
    }
    GraphColouringSpec::new(vertices, edges, colors, 1.0).unwrap()
}

pub fn random_cnf(vars: usize, clauses: usize, rng: &mut ChainRng) -> CnfSpec {
    let cl = (0..clauses)
        .map(|_| {
            [0; 3].map(|_| Literal {
                var: rng.gen_range(0..vars),
                positive: rng.gen_bool(0.5),
            })
        })
        .collect();
    CnfSpec::new(vars, cl).unwrap()
}

/// Optimal (smallest) makespan over all job-to-machine assignments.
pub fn brute_force_makespan(service: &[Vec<f64>]) -> f64 {
    let k = service[0].len();
    all_assignments(service.len(), k)
        .into_iter()
        .map(|a| {
            let mut load = vec![0.0; k];
            for (job, &mach) in a.iter().enumerate() {
                load[mach] += service[job][mach];
            }
            load.into_iter().fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Best feasible reward, or `None` if nothing fits.
pub fn brute_force_knapsack(volumes: &[f64], capacities: &[f64], rewards: &[Vec<f64>]) -> Option<f64> {
    all_assignments(volumes.len(), capacities.len())
        .into_iter()
        .filter_map(|a| {
            let mut fill = vec![0.0; capacities.len()];
            let mut reward = 0.0;
            for (item, &sack) in a.iter().enumerate() {
                fill[sack] += volumes[item];
                reward += rewards[item][sack];
            }
            fill.iter().zip(capacities).all(|(f, c)| f <= c).then_some(reward)
        })
        .reduce(f64::max)
}

pub fn brute_force_colourable(vertices: usize, edges: &[(usize, usize)], colors: usize) -> bool {
    all_assignments(vertices, colors)
        .into_iter()
        .any(|c| edges.iter().all(|&(a, b)| c[a] != c[b]))
}

/// Truth-table satisfiability over raw clauses.
pub fn brute_force_sat(vars: usize, clauses: &[[Literal; 3]]) -> bool {
    (0..1u64 << vars).any(|code| {
        clauses
            .iter()
            .all(|c| c.iter().any(|l| (code >> l.var & 1 == 1) == l.positive))
    })
}

/// `max_M U(M)` by enumerating matchings.
pub fn enumerated_optimum(inst: &Instance) -> f64 {
    enumerate_matchings(inst.shape())
        .unwrap()
        .iter()
        .map(|m| inst.utility(m))
        .fold(f64::NEG_INFINITY, f64::max)
}
