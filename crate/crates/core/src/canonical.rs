//! Canonical paths between perfect matchings and their edge congestion.
//!
//! The path from `I` to `F` resolves left vertices in ascending index order.
//! At vertex `k`, if its partner `z` differs from its target `z'`, it either
//! moves to `z'` (when `z'` is free) or swaps partners with the current owner
//! of `z'`. Resolved vertices keep a repeated state so every path has exactly
//! `m + 1` states. The ascending order is what makes the path unique.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{enumerate_matchings, Matching, Shape};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalPath {
    states: Vec<Matching>,
}

impl CanonicalPath {
    pub fn states(&self) -> &[Matching] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Consecutive pairs that actually change state.
    pub fn transitions(&self) -> impl Iterator<Item = (&Matching, &Matching)> {
        self.states
            .windows(2)
            .filter(|w| w[0] != w[1])
            .map(|w| (&w[0], &w[1]))
    }
}

pub fn canonical_path(shape: Shape, from: &Matching, to: &Matching) -> Result<CanonicalPath> {
    for (name, mt) in [("initial", from), ("final", to)] {
        if !mt.is_valid_for(shape) {
            return Err(Error::InvalidMatching(format!(
                "{name} state {mt} is not a perfect matching of {shape}"
            )));
        }
    }
    Ok(build_path(from, to))
}

fn build_path(from: &Matching, to: &Matching) -> CanonicalPath {
    let m = from.m();
    let mut states = Vec::with_capacity(m + 1);
    let mut current = from.clone();
    states.push(current.clone());
    for k in 0..m {
        let target = to.partner(k);
        if current.partner(k) != target {
            match current.left_of(target) {
                Some(owner) => current.swap_partners(k, owner),
                None => current.set(k, target),
            }
        }
        states.push(current.clone());
    }
    debug_assert_eq!(&current, to);
    CanonicalPath { states }
}

/// Load carried by one directed transition `M -> M'`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Load {
    /// `|C_e|`: ordered pairs `(I, F)` whose canonical path uses the transition.
    pub pairs: u64,
    /// `Σ π_I π_F` over those pairs; zero when no weights were supplied.
    pub weight: f64,
}

/// Congestion of every transition used by some canonical path.
#[derive(Clone, Debug, PartialEq)]
pub struct Census {
    states: Vec<Matching>,
    loads: BTreeMap<(usize, usize), Load>,
}

impl Census {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Matching] {
        &self.states
    }

    /// Loads keyed by `(rank of M, rank of M')`.
    pub fn loads(&self) -> &BTreeMap<(usize, usize), Load> {
        &self.loads
    }

    pub fn get(&self, from: usize, to: usize) -> Option<Load> {
        self.loads.get(&(from, to)).copied()
    }

    pub fn max_pairs(&self) -> u64 {
        self.loads.values().map(|l| l.pairs).max().unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Matching, &Matching, Load)> {
        self.loads
            .iter()
            .map(|(&(a, b), &l)| (&self.states[a], &self.states[b], l))
    }
}

/// `|C_e|` for every transition, from all `|N|²` ordered pairs.
pub fn congestion_census(shape: Shape) -> Result<Census> {
    census_inner(shape, None)
}

/// Like [`congestion_census`], also accumulating `Σ π_I π_F` per transition.
/// `pi` is indexed by enumeration rank.
pub fn weighted_congestion_census(shape: Shape, pi: &[f64]) -> Result<Census> {
    census_inner(shape, Some(pi))
}

const CENSUS_CHUNK: usize = 16;

fn census_inner(shape: Shape, pi: Option<&[f64]>) -> Result<Census> {
    let states = enumerate_matchings(shape)?;
    if let Some(pi) = pi {
        if pi.len() != states.len() {
            return Err(Error::InvalidParameter(format!(
                "weight vector has {} entries for {} states",
                pi.len(),
                states.len()
            )));
        }
    }
    let starts: Vec<usize> = (0..states.len()).step_by(CENSUS_CHUNK).collect();
    // chunk results are collected in index order and merged sequentially so
    // floating sums do not depend on scheduling
    let partial: Vec<BTreeMap<(usize, usize), Load>> = starts
        .par_iter()
        .map(|&lo| {
            let hi = (lo + CENSUS_CHUNK).min(states.len());
            let mut local: BTreeMap<(usize, usize), Load> = BTreeMap::new();
            for i in lo..hi {
                for (f, target) in states.iter().enumerate() {
                    if i == f {
                        continue;
                    }
                    let w = pi.map_or(0.0, |pi| pi[i] * pi[f]);
                    let path = build_path(&states[i], target);
                    for (a, b) in path.transitions() {
                        let load = local.entry((shape.rank(a), shape.rank(b))).or_default();
                        load.pairs += 1;
                        load.weight += w;
                    }
                }
            }
            local
        })
        .collect();
    let mut loads: BTreeMap<(usize, usize), Load> = BTreeMap::new();
    for chunk in partial {
        for (key, l) in chunk {
            let slot = loads.entry(key).or_default();
            slot.pairs += l.pairs;
            slot.weight += l.weight;
        }
    }
    Ok(Census { states, loads })
}
