//! Complete bipartite graphs, perfect matchings and the Gibbs measure over them.
//!
//! The graph `K_{m,n}` with `m <= n` is never materialized: a [`Shape`] is enough
//! to describe it, and a [`Matching`] is stored as a left-indexed injective array
//! `assign[i] = right vertex of left vertex i`. Right vertices outside the image
//! are unmatched.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of matchings materialized by [`enumerate_matchings`].
pub const DEFAULT_ENUMERATION_CAP: usize = 500_000;

/// Side sizes of a complete bipartite graph, `1 <= m <= n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    m: usize,
    n: usize,
}

impl Shape {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInstance("left side must be nonempty".into()));
        }
        if m > n {
            return Err(Error::InvalidInstance(format!(
                "left side ({m}) larger than right side ({n})"
            )));
        }
        Ok(Shape { m, n })
    }

    /// Number of left vertices.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of right vertices.
    pub fn n(&self) -> usize {
        self.n
    }

    /// `|N| = n! / (n - m)!`, or `None` on `u128` overflow.
    pub fn count_matchings(&self) -> Option<u128> {
        falling_factorial(self.n, self.m)
    }

    /// Number of matchings if it does not exceed `cap`.
    pub fn checked_count(&self, cap: usize) -> Result<usize> {
        let count = self.count_matchings().unwrap_or(u128::MAX);
        if count > cap as u128 {
            return Err(Error::CapExceeded {
                what: "number of perfect matchings",
                count,
                cap: cap as u128,
            });
        }
        Ok(count as usize)
    }

    /// Position of `matching` in lexicographic order of assign arrays.
    pub fn rank(&self, matching: &Matching) -> usize {
        debug_assert!(matching.is_valid_for(*self));
        let assign = matching.assign();
        let mut rank = 0usize;
        for (i, &v) in assign.iter().enumerate() {
            let below = assign[..i].iter().filter(|&&w| w < v).count();
            let block = falling_factorial(self.n - i - 1, self.m - i - 1)
                .expect("rank is only taken on enumerable shapes") as usize;
            rank += (v - below) * block;
        }
        rank
    }

    /// Inverse of [`Shape::rank`].
    pub fn unrank(&self, mut rank: usize) -> Matching {
        let mut free: Vec<usize> = (0..self.n).collect();
        let mut assign = Vec::with_capacity(self.m);
        for i in 0..self.m {
            let block = falling_factorial(self.n - i - 1, self.m - i - 1)
                .expect("unrank is only taken on enumerable shapes") as usize;
            let pick = rank / block;
            rank %= block;
            assign.push(free.remove(pick));
        }
        Matching(assign)
    }

    /// Lazy lexicographic iterator over every perfect matching; no cap.
    pub fn matchings(&self) -> MatchingIter {
        MatchingIter::new(*self)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "K({},{})", self.m, self.n)
    }
}

/// `a * (a-1) * ... * (a-k+1)`.
pub fn falling_factorial(a: usize, k: usize) -> Option<u128> {
    if k > a {
        return Some(0);
    }
    (0..k).try_fold(1u128, |acc, i| acc.checked_mul((a - i) as u128))
}

/// A perfect matching of the left side into the right side.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Matching(Vec<usize>);

impl Matching {
    /// Validates injectivity and range against `shape`.
    pub fn new(assign: Vec<usize>, shape: Shape) -> Result<Self> {
        if assign.len() != shape.m() {
            return Err(Error::InvalidMatching(format!(
                "expected {} left vertices, got {}",
                shape.m(),
                assign.len()
            )));
        }
        let mut seen = vec![false; shape.n()];
        for (i, &v) in assign.iter().enumerate() {
            if v >= shape.n() {
                return Err(Error::InvalidMatching(format!(
                    "left vertex {i} matched to {v}, but n = {}",
                    shape.n()
                )));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidMatching(format!(
                    "right vertex {v} matched twice"
                )));
            }
        }
        Ok(Matching(assign))
    }

    /// Identity matching `i -> i`.
    pub fn identity(shape: Shape) -> Self {
        Matching((0..shape.m()).collect())
    }

    pub fn assign(&self) -> &[usize] {
        &self.0
    }

    pub fn into_assign(self) -> Vec<usize> {
        self.0
    }

    pub fn m(&self) -> usize {
        self.0.len()
    }

    /// Right partner of left vertex `left`.
    pub fn partner(&self, left: usize) -> usize {
        self.0[left]
    }

    /// Left vertex matched to `right`, if any.
    pub fn left_of(&self, right: usize) -> Option<usize> {
        self.0.iter().position(|&v| v == right)
    }

    pub fn is_valid_for(&self, shape: Shape) -> bool {
        if self.0.len() != shape.m() {
            return false;
        }
        self.0.iter().enumerate().all(|(i, &v)| {
            v < shape.n() && !self.0[..i].contains(&v)
        })
    }

    /// Number of edges in `self ⊕ other`; 0, 2 or 4 for one chain step.
    pub fn symmetric_difference(&self, other: &Matching) -> usize {
        2 * self
            .0
            .iter()
            .zip(&other.0)
            .filter(|(a, b)| a != b)
            .count()
    }

    pub(crate) fn set(&mut self, left: usize, right: usize) {
        self.0[left] = right;
    }

    pub(crate) fn swap_partners(&mut self, a: usize, b: usize) {
        self.0.swap(a, b);
    }
}

impl fmt::Display for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

/// Lexicographic iterator over injective maps `{0..m} -> {0..n}`.
pub struct MatchingIter {
    shape: Shape,
    assign: Vec<usize>,
    used: Vec<bool>,
    started: bool,
    done: bool,
}

impl MatchingIter {
    fn new(shape: Shape) -> Self {
        let mut used = vec![false; shape.n()];
        used[..shape.m()].iter_mut().for_each(|u| *u = true);
        MatchingIter {
            shape,
            assign: (0..shape.m()).collect(),
            used,
            started: false,
            done: false,
        }
    }

    fn advance(&mut self) -> bool {
        let (m, n) = (self.shape.m(), self.shape.n());
        for i in (0..m).rev() {
            let cur = self.assign[i];
            self.used[cur] = false;
            if let Some(next) = (cur + 1..n).find(|&v| !self.used[v]) {
                self.assign[i] = next;
                self.used[next] = true;
                // refill the tail with the smallest free values
                let mut v = 0;
                for slot in i + 1..m {
                    while self.used[v] {
                        v += 1;
                    }
                    self.assign[slot] = v;
                    self.used[v] = true;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for MatchingIter {
    type Item = Matching;

    fn next(&mut self) -> Option<Matching> {
        if self.done {
            return None;
        }
        if self.started && !self.advance() {
            self.done = true;
            return None;
        }
        self.started = true;
        Some(Matching(self.assign.clone()))
    }
}

/// Reported range of a utility oracle. Loose bounds only weaken the diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityBounds {
    pub min: f64,
    pub max: f64,
}

impl UtilityBounds {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min > max {
            return Err(Error::InvalidSpec(format!(
                "utility bounds [{min}, {max}] are not a finite interval"
            )));
        }
        Ok(UtilityBounds { min, max })
    }

    pub fn range(&self) -> f64 {
        self.max - self.min
    }

    /// `exp{β (U_max - U_min)}`.
    pub fn alpha(&self, params: GibbsParams) -> f64 {
        (params.beta() * self.range()).exp()
    }
}

/// A global utility `U(M)` over perfect matchings.
///
/// Implementations must be deterministic and safe to evaluate from several
/// threads at once.
pub trait UtilityOracle: Send + Sync {
    fn evaluate(&self, matching: &Matching) -> f64;

    /// Exact or enclosing `[U_min, U_max]`.
    fn bounds(&self) -> UtilityBounds;
}

/// Adapts a closure and a declared range into a [`UtilityOracle`].
pub struct FnUtility<F> {
    f: F,
    bounds: UtilityBounds,
}

impl<F> FnUtility<F>
where
    F: Fn(&Matching) -> f64 + Send + Sync,
{
    pub fn new(bounds: UtilityBounds, f: F) -> Self {
        FnUtility { f, bounds }
    }
}

impl<F> UtilityOracle for FnUtility<F>
where
    F: Fn(&Matching) -> f64 + Send + Sync,
{
    fn evaluate(&self, matching: &Matching) -> f64 {
        (self.f)(matching)
    }

    fn bounds(&self) -> UtilityBounds {
        self.bounds
    }
}

/// A complete bipartite graph together with its utility oracle.
#[derive(Clone)]
pub struct Instance {
    shape: Shape,
    utility: Arc<dyn UtilityOracle>,
}

impl Instance {
    pub fn new(shape: Shape, utility: impl UtilityOracle + 'static) -> Self {
        Instance {
            shape,
            utility: Arc::new(utility),
        }
    }

    pub fn from_arc(shape: Shape, utility: Arc<dyn UtilityOracle>) -> Self {
        Instance { shape, utility }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn m(&self) -> usize {
        self.shape.m()
    }

    pub fn n(&self) -> usize {
        self.shape.n()
    }

    pub fn utility(&self, matching: &Matching) -> f64 {
        self.utility.evaluate(matching)
    }

    pub fn bounds(&self) -> UtilityBounds {
        self.utility.bounds()
    }

    pub fn oracle(&self) -> &Arc<dyn UtilityOracle> {
        &self.utility
    }
}

impl fmt::Debug for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Instance")
            .field("shape", &self.shape)
            .field("bounds", &self.bounds())
            .finish()
    }
}

/// Inverse temperature of the Gibbs measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct GibbsParams {
    beta: f64,
}

impl GibbsParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "beta must be finite and nonnegative, got {beta}"
            )));
        }
        Ok(GibbsParams { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl TryFrom<f64> for GibbsParams {
    type Error = Error;

    fn try_from(beta: f64) -> Result<Self> {
        GibbsParams::new(beta)
    }
}

impl From<GibbsParams> for f64 {
    fn from(p: GibbsParams) -> f64 {
        p.beta
    }
}

/// All perfect matchings of `shape` in lexicographic order.
pub fn enumerate_matchings(shape: Shape) -> Result<Vec<Matching>> {
    enumerate_matchings_capped(shape, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_matchings_capped(shape: Shape, cap: usize) -> Result<Vec<Matching>> {
    let count = shape.checked_count(cap)?;
    let mut out = Vec::with_capacity(count);
    out.extend(shape.matchings());
    debug_assert_eq!(out.len(), count);
    Ok(out)
}

/// Softmax of `beta * utilities`, computed with max-subtraction.
pub fn gibbs_weights(utilities: &[f64], params: GibbsParams) -> Vec<f64> {
    let beta = params.beta();
    let logs: Vec<f64> = utilities.iter().map(|&u| beta * u).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logs.iter().map(|&l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    w
}

/// Gibbs probabilities `exp{β U(M)} / C` in [`enumerate_matchings`] order.
pub fn gibbs_distribution(inst: &Instance, params: GibbsParams) -> Result<Vec<f64>> {
    let states = enumerate_matchings(inst.shape())?;
    let utilities: Vec<f64> = states.iter().map(|s| inst.utility(s)).collect();
    Ok(gibbs_weights(&utilities, params))
}
