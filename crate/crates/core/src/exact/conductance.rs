use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ExactChain;
use crate::error::{Error, Result};

/// Subset scans are exponential; refuse anything larger.
pub const CONDUCTANCE_MAX_STATES: usize = 22;

const CHUNK_BITS: u32 = 12;
const HALF_TOLERANCE: f64 = 1e-12;

/// A minimizing cut and its conductance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub phi: f64,
    /// State indices of `S`; empty when the chain has a single state.
    pub subset: Vec<usize>,
    /// `π(S)`.
    pub capacity: f64,
    /// `Q(S, S^c) = Σ_{i∈S, j∉S} π_i P_ij`.
    pub flow: f64,
}

#[derive(Clone, Copy)]
struct Best {
    ratio: f64,
    mask: u64,
    capacity: f64,
    flow: f64,
}

impl Best {
    const NONE: Best = Best {
        ratio: f64::INFINITY,
        mask: 0,
        capacity: 0.0,
        flow: 0.0,
    };

    fn better(self, other: Best) -> Best {
        if other.ratio < self.ratio || (other.ratio == self.ratio && other.mask < self.mask) {
            other
        } else {
            self
        }
    }
}

/// `Φ = min_{S: 0 < π(S) <= 1/2} Q(S, S^c) / π(S)` by scanning every subset.
///
/// Subsets are visited in Gray-code order so each one differs from its
/// predecessor by a single state, letting `π(S)` and `Q(S, S^c)` be updated in
/// `O(|N|)`. A chain with one state has no cut; its conductance is reported as 1.
pub fn conductance_exhaustive(chain: &ExactChain) -> Result<Cut> {
    let n = chain.n_states();
    if n > CONDUCTANCE_MAX_STATES {
        return Err(Error::CapExceeded {
            what: "states for the exhaustive conductance scan",
            count: n as u128,
            cap: CONDUCTANCE_MAX_STATES as u128,
        });
    }
    if n == 1 {
        return Ok(Cut {
            phi: 1.0,
            subset: Vec::new(),
            capacity: 1.0,
            flow: 0.0,
        });
    }
    let pi = chain.pi();
    // w[i][j] = π_i P_ij off the diagonal
    let w: Vec<f64> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            if i == j {
                0.0
            } else {
                pi[i] * chain.p(i, j)
            }
        })
        .collect();
    let total = 1u64 << n;
    let full = total - 1;
    let chunk = 1u64 << CHUNK_BITS.min(n as u32);
    let starts: Vec<u64> = (0..total).step_by(chunk as usize).collect();

    let best = starts
        .par_iter()
        .map(|&lo| {
            let hi = (lo + chunk).min(total);
            let mut mask = lo ^ (lo >> 1);
            let mut capacity: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| pi[i]).sum();
            let mut flow = 0.0;
            for i in (0..n).filter(|&i| mask >> i & 1 == 1) {
                for j in (0..n).filter(|&j| mask >> j & 1 == 0) {
                    flow += w[i * n + j];
                }
            }
            let mut best = Best::NONE;
            let consider = |mask: u64, capacity: f64, flow: f64, best: &mut Best| {
                if mask != 0 && mask != full && capacity <= 0.5 + HALF_TOLERANCE {
                    *best = best.better(Best {
                        ratio: flow / capacity,
                        mask,
                        capacity,
                        flow,
                    });
                }
            };
            consider(mask, capacity, flow, &mut best);
            for g in lo + 1..hi {
                let k = g.trailing_zeros() as usize;
                let adding = mask >> k & 1 == 0;
                let (mut into_k, mut out_of_k) = (0.0, 0.0);
                for j in 0..n {
                    if j == k {
                        continue;
                    }
                    if mask >> j & 1 == 1 {
                        into_k += w[j * n + k];
                    } else {
                        out_of_k += w[k * n + j];
                    }
                }
                if adding {
                    flow += out_of_k - into_k;
                    capacity += pi[k];
                } else {
                    flow += into_k - out_of_k;
                    capacity -= pi[k];
                }
                mask ^= 1 << k;
                consider(mask, capacity, flow, &mut best);
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Best::NONE, Best::better);

    Ok(Cut {
        phi: best.ratio,
        subset: (0..n).filter(|&i| best.mask >> i & 1 == 1).collect(),
        capacity: best.capacity,
        flow: best.flow,
    })
}
