//! Metropolis chain over perfect matchings.
//!
//! Each step picks a left vertex `y` and a right vertex `z` uniformly and
//! independently. If `(y, z)` is already matched nothing happens; if `z` is free
//! the candidate rematches `y` to `z` (a move); otherwise `z`'s owner `y1` and
//! `y` exchange partners (a swap). The candidate is adopted with probability
//! `min{1, exp(β ΔU)}`.
//!
//! Randomness comes from [`ChainRng`] (ChaCha8 seeded with `seed_from_u64`),
//! whose output stream is fixed across platforms and releases of `rand_chacha`
//! 0.3, so a seed pins the whole trajectory.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{GibbsParams, Instance, Matching, Shape};

pub type ChainRng = ChaCha8Rng;

pub fn chain_rng(seed: u64) -> ChainRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Piecewise-constant inverse temperature: `(start_step, beta)` pairs.
///
/// This is an annealing extension; the fixed-β chain is the analysed one and
/// exact diagnostics never use a schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule(Vec<(u64, GibbsParams)>);

impl BetaSchedule {
    /// Breakpoints must start at step 0 and strictly increase.
    pub fn new(points: Vec<(u64, GibbsParams)>) -> Result<Self> {
        match points.first() {
            Some((0, _)) => {}
            _ => {
                return Err(Error::InvalidParameter(
                    "beta schedule must start at step 0".into(),
                ))
            }
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidParameter(
                "beta schedule steps must strictly increase".into(),
            ));
        }
        Ok(BetaSchedule(points))
    }

    /// Parses `"0:0.5,1000:2"`.
    pub fn parse(text: &str) -> Result<Self> {
        let points = text
            .split(',')
            .map(|piece| {
                let (step, beta) = piece.trim().split_once(':').ok_or_else(|| {
                    Error::InvalidParameter(format!("schedule entry `{piece}` is not step:beta"))
                })?;
                let step = step.trim().parse::<u64>().map_err(|e| {
                    Error::InvalidParameter(format!("schedule step `{step}`: {e}"))
                })?;
                let beta = beta.trim().parse::<f64>().map_err(|e| {
                    Error::InvalidParameter(format!("schedule beta `{beta}`: {e}"))
                })?;
                Ok((step, GibbsParams::new(beta)?))
            })
            .collect::<Result<Vec<_>>>()?;
        BetaSchedule::new(points)
    }

    /// β in force for the step that moves from `step` to `step + 1`.
    pub fn at(&self, step: u64) -> GibbsParams {
        let idx = self.0.partition_point(|(s, _)| *s <= step);
        self.0[idx - 1].1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig {
    pub params: GibbsParams,
    /// Number of steps `T`.
    pub steps: u64,
    pub seed: u64,
    /// Hold with probability 1/2 before each proposal.
    pub lazy: bool,
    pub schedule: Option<BetaSchedule>,
}

impl ChainConfig {
    pub fn new(params: GibbsParams, steps: u64, seed: u64) -> Self {
        ChainConfig {
            params,
            steps,
            seed,
            lazy: false,
            schedule: None,
        }
    }

    pub fn lazy(mut self, lazy: bool) -> Self {
        self.lazy = lazy;
        self
    }

    pub fn with_schedule(mut self, schedule: BetaSchedule) -> Self {
        self.schedule = Some(schedule);
        self
    }

    fn beta_at(&self, step: u64) -> f64 {
        match &self.schedule {
            Some(s) => s.at(step).beta(),
            None => self.params.beta(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub current: Matching,
    pub current_utility: f64,
    pub best: Matching,
    pub best_utility: f64,
    pub step: u64,
}

impl ChainState {
    pub fn new(inst: &Instance, start: Matching) -> Self {
        let u = inst.utility(&start);
        ChainState {
            current: start.clone(),
            current_utility: u,
            best: start,
            best_utility: u,
            step: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProposalKind {
    Stay,
    Move,
    Swap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Proposal {
    pub kind: ProposalKind,
    pub y: usize,
    pub z: usize,
    /// For a swap: `(y1, z1)` where `y1` currently owns `z` and `z1` is `y`'s partner.
    pub displaced: Option<(usize, usize)>,
}

impl Proposal {
    /// Classifies the draw `(y, z)` against `current`.
    pub fn classify(current: &Matching, y: usize, z: usize) -> Proposal {
        let z1 = current.partner(y);
        if z1 == z {
            return Proposal {
                kind: ProposalKind::Stay,
                y,
                z,
                displaced: None,
            };
        }
        match current.left_of(z) {
            None => Proposal {
                kind: ProposalKind::Move,
                y,
                z,
                displaced: None,
            },
            Some(y1) => Proposal {
                kind: ProposalKind::Swap,
                y,
                z,
                displaced: Some((y1, z1)),
            },
        }
    }

    /// The candidate matching this proposal leads to.
    pub fn apply(&self, current: &Matching) -> Matching {
        let mut next = current.clone();
        match (self.kind, self.displaced) {
            (ProposalKind::Stay, _) => {}
            (ProposalKind::Move, _) => next.set(self.y, self.z),
            (ProposalKind::Swap, Some((y1, _))) => next.swap_partners(self.y, y1),
            (ProposalKind::Swap, None) => unreachable!("swap without displaced pair"),
        }
        next
    }
}

/// Draws `(y, z)` uniformly and classifies it.
pub fn propose<R: Rng + ?Sized>(state: &ChainState, shape: Shape, rng: &mut R) -> Proposal {
    let y = rng.gen_range(0..shape.m());
    let z = rng.gen_range(0..shape.n());
    Proposal::classify(&state.current, y, z)
}

/// Metropolis test in log space: accept iff `ln u < β ΔU`.
fn accept<R: Rng + ?Sized>(beta: f64, delta: f64, rng: &mut R) -> bool {
    let log_ratio = beta * delta;
    if log_ratio >= 0.0 {
        return true;
    }
    let u: f64 = rng.gen();
    u.ln() < log_ratio
}

/// Outcome of a single transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepEvent {
    /// Lazy hold.
    Held,
    Proposed { kind: ProposalKind, accepted: bool },
}

impl StepEvent {
    pub fn accepted(&self) -> bool {
        matches!(
            self,
            StepEvent::Proposed {
                kind: ProposalKind::Move | ProposalKind::Swap,
                accepted: true
            }
        )
    }
}

/// Advances `state` by one step.
pub fn step<R: Rng + ?Sized>(
    state: &mut ChainState,
    inst: &Instance,
    cfg: &ChainConfig,
    rng: &mut R,
) -> StepEvent {
    let beta = cfg.beta_at(state.step);
    state.step += 1;
    if cfg.lazy && rng.gen::<bool>() {
        return StepEvent::Held;
    }
    let proposal = propose(state, inst.shape(), rng);
    if proposal.kind == ProposalKind::Stay {
        return StepEvent::Proposed {
            kind: ProposalKind::Stay,
            accepted: true,
        };
    }
    let candidate = proposal.apply(&state.current);
    let utility = inst.utility(&candidate);
    let accepted = accept(beta, utility - state.current_utility, rng);
    if accepted {
        debug_assert!(candidate.is_valid_for(inst.shape()));
        state.current = candidate;
        state.current_utility = utility;
        if utility > state.best_utility {
            state.best = state.current.clone();
            state.best_utility = utility;
        }
    }
    StepEvent::Proposed {
        kind: proposal.kind,
        accepted,
    }
}

/// Uniform perfect matching by sequential sampling without replacement.
pub fn random_matching<R: Rng + ?Sized>(shape: Shape, rng: &mut R) -> Matching {
    let mut pool: Vec<usize> = (0..shape.n()).collect();
    for i in 0..shape.m() {
        let j = rng.gen_range(i..shape.n());
        pool.swap(i, j);
    }
    pool.truncate(shape.m());
    Matching::new(pool, shape).expect("partial shuffle is injective")
}

#[derive(Clone, Debug, PartialEq)]
pub enum Initial {
    Random,
    Given(Matching),
}

/// One recorded step of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: u64,
    pub current_utility: f64,
    pub best_utility: f64,
    pub accepted: bool,
}

/// A seeded chain that can be stepped by hand or run to completion.
pub struct Sampler {
    inst: Instance,
    cfg: ChainConfig,
    rng: ChainRng,
    state: ChainState,
}

impl Sampler {
    pub fn new(inst: &Instance, cfg: ChainConfig, initial: Initial) -> Result<Self> {
        let mut rng = chain_rng(cfg.seed);
        let start = match initial {
            Initial::Random => random_matching(inst.shape(), &mut rng),
            Initial::Given(m) => {
                if !m.is_valid_for(inst.shape()) {
                    return Err(Error::InvalidMatching(format!(
                        "{m} is not a perfect matching of {}",
                        inst.shape()
                    )));
                }
                m
            }
        };
        let state = ChainState::new(inst, start);
        Ok(Sampler {
            inst: inst.clone(),
            cfg,
            rng,
            state,
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn step(&mut self) -> StepEvent {
        step(&mut self.state, &self.inst, &self.cfg, &mut self.rng)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub initial: Matching,
    pub state: ChainState,
    pub trace: Vec<TraceRow>,
    /// Move/swap proposals made (stays and lazy holds excluded).
    pub proposals: u64,
    pub accepted: u64,
}

impl RunOutput {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

/// Runs `cfg.steps` steps, keeping every `stride`-th trace row (stride 0 keeps none).
pub fn run(inst: &Instance, cfg: &ChainConfig, initial: Initial, stride: u64) -> Result<RunOutput> {
    let mut sampler = Sampler::new(inst, cfg.clone(), initial)?;
    let initial = sampler.state().current.clone();
    let mut trace = Vec::new();
    let (mut proposals, mut accepted) = (0, 0);
    for _ in 0..cfg.steps {
        let event = sampler.step();
        if let StepEvent::Proposed { kind, accepted: ok } = event {
            if kind != ProposalKind::Stay {
                proposals += 1;
                accepted += u64::from(ok);
            }
        }
        let s = sampler.state();
        if stride > 0 && s.step % stride == 0 {
            trace.push(TraceRow {
                step: s.step,
                current_utility: s.current_utility,
                best_utility: s.best_utility,
                accepted: event.accepted(),
            });
        }
    }
    Ok(RunOutput {
        initial,
        state: sampler.state,
        trace,
        proposals,
        accepted,
    })
}

/// Writes `step,current_utility,best_utility,accepted` with a header row.
pub fn write_trace_csv<W: Write>(mut out: W, rows: &[TraceRow]) -> io::Result<()> {
    writeln!(out, "step,current_utility,best_utility,accepted")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.step,
            r.current_utility,
            r.best_utility,
            u8::from(r.accepted)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::enumerate_matchings;
    use crate::problems::TableUtility;

    fn shape(m: usize, n: usize) -> Shape {
        Shape::new(m, n).unwrap()
    }

    fn mt(a: &[usize], s: Shape) -> Matching {
        Matching::new(a.to_vec(), s).unwrap()
    }

    fn two_state(beta: f64) -> (Instance, ChainConfig) {
        let s = shape(2, 2);
        let inst = Instance::new(s, TableUtility::from_values(s, vec![0.0, 1.0]).unwrap());
        (inst, ChainConfig::new(GibbsParams::new(beta).unwrap(), 0, 1))
    }

    /// Candidate for every (y, z) draw, computed from edge sets directly.
    fn neighbour_table(current: &Matching, n: usize) -> Vec<(usize, usize, Vec<usize>)> {
        let a = current.assign();
        let mut out = Vec::new();
        for y in 0..a.len() {
            for z in 0..n {
                let mut next = a.to_vec();
                if let Some(y1) = (0..a.len()).find(|&i| a[i] == z) {
                    next[y1] = a[y];
                }
                next[y] = z;
                out.push((y, z, next));
            }
        }
        out
    }

    #[test]
    fn classify_examples() {
        let s = shape(2, 2);
        let p = Proposal::classify(&mt(&[0, 1], s), 0, 0);
        assert_eq!(p.kind, ProposalKind::Stay);

        let s3 = shape(2, 3);
        let p = Proposal::classify(&mt(&[0, 1], s3), 0, 2);
        assert_eq!(p.kind, ProposalKind::Move);
        assert_eq!(p.apply(&mt(&[0, 1], s3)).assign(), [2, 1]);

        let p = Proposal::classify(&mt(&[0, 1], s), 0, 1);
        assert_eq!(p.kind, ProposalKind::Swap);
        assert_eq!(p.displaced, Some((1, 0)));
        assert_eq!(p.apply(&mt(&[0, 1], s)).assign(), [1, 0]);
    }

    #[test]
    fn classify_agrees_with_neighbour_table() {
        for m in 1..=3 {
            for n in m..=4 {
                let s = shape(m, n);
                for cur in enumerate_matchings(s).unwrap() {
                    for (y, z, want) in neighbour_table(&cur, n) {
                        let p = Proposal::classify(&cur, y, z);
                        let got = p.apply(&cur);
                        assert_eq!(got.assign(), &want[..]);
                        assert!(got.is_valid_for(s));
                        let diff = cur.symmetric_difference(&got);
                        let expected = match p.kind {
                            ProposalKind::Stay => 0,
                            ProposalKind::Move => 2,
                            ProposalKind::Swap => 4,
                        };
                        assert_eq!(diff, expected);
                    }
                }
            }
        }
    }

    #[test]
    fn proposal_counts_are_symmetric() {
        use std::collections::HashMap;
        for m in 1..=3 {
            for n in m..=4 {
                let s = shape(m, n);
                let mut counts: HashMap<(Vec<usize>, Vec<usize>), usize> = HashMap::new();
                for cur in enumerate_matchings(s).unwrap() {
                    for (_, _, next) in neighbour_table(&cur, n) {
                        if next != cur.assign() {
                            *counts.entry((cur.assign().to_vec(), next)).or_default() += 1;
                        }
                    }
                }
                for ((a, b), c) in &counts {
                    let back = counts.get(&(b.clone(), a.clone())).copied().unwrap_or(0);
                    assert_eq!(*c, back);
                    let differing = a.iter().zip(b).filter(|(x, y)| x != y).count();
                    assert_eq!(*c, if differing == 1 { 1 } else { 2 }, "{a:?}->{b:?}");
                }
            }
        }
    }

    #[test]
    fn uphill_moves_always_accepted() {
        let mut rng = chain_rng(7);
        for _ in 0..1000 {
            assert!(accept(3.0, 0.0, &mut rng));
            assert!(accept(3.0, 0.5, &mut rng));
        }
    }

    #[test]
    fn zero_steps_returns_start() {
        let (inst, cfg) = two_state(1.0);
        let start = mt(&[0, 1], inst.shape());
        let out = run(&inst, &cfg, Initial::Given(start.clone()), 1).unwrap();
        assert_eq!(out.state.current, start);
        assert_eq!(out.state.best, start);
        assert!(out.trace.is_empty());
    }

    #[test]
    fn finds_two_state_optimum() {
        let (inst, mut cfg) = two_state(4.0);
        cfg.steps = 100;
        for seed in 0..50 {
            cfg.seed = seed;
            let out = run(&inst, &cfg, Initial::Given(mt(&[0, 1], inst.shape())), 1).unwrap();
            assert_eq!(out.state.best.assign(), [1, 0]);
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let s = shape(3, 5);
        let values: Vec<f64> = (0..60).map(|i| ((i * 37) % 11) as f64).collect();
        let inst = Instance::new(s, TableUtility::from_values(s, values).unwrap());
        let cfg = ChainConfig::new(GibbsParams::new(0.7).unwrap(), 2000, 99).lazy(true);
        let a = run(&inst, &cfg, Initial::Random, 1).unwrap();
        let b = run(&inst, &cfg, Initial::Random, 1).unwrap();
        assert_eq!(a, b);
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        write_trace_csv(&mut buf_a, &a.trace).unwrap();
        write_trace_csv(&mut buf_b, &b.trace).unwrap();
        assert_eq!(buf_a, buf_b);
        let c = run(&inst, &ChainConfig { seed: 100, ..cfg }, Initial::Random, 1).unwrap();
        assert_ne!(a.trace, c.trace);
    }

    #[test]
    fn best_is_monotone_and_dominates_current() {
        let s = shape(3, 4);
        let values: Vec<f64> = (0..24).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let inst = Instance::new(s, TableUtility::from_values(s, values).unwrap());
        let cfg = ChainConfig::new(GibbsParams::new(0.3).unwrap(), 5000, 3);
        let out = run(&inst, &cfg, Initial::Random, 1).unwrap();
        assert_eq!(out.trace.len(), 5000);
        for w in out.trace.windows(2) {
            assert!(w[1].best_utility >= w[0].best_utility);
        }
        assert!(out.trace.iter().all(|r| r.best_utility >= r.current_utility));
    }

    #[test]
    fn stride_decimates_trace() {
        let (inst, mut cfg) = two_state(1.0);
        cfg.steps = 100;
        let out = run(&inst, &cfg, Initial::Random, 10).unwrap();
        assert_eq!(out.trace.iter().map(|r| r.step).collect::<Vec<_>>(), (1..=10).map(|i| i * 10).collect::<Vec<_>>());
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &out.trace).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("step,current_utility,best_utility,accepted\n10,"));
        assert_eq!(text.lines().count(), 11);
    }

    #[test]
    fn zero_beta_visits_uniformly() {
        let s = shape(2, 3);
        let inst = Instance::new(s, TableUtility::from_values(s, vec![0.0, 5.0, -1.0, 2.0, 3.0, 9.0]).unwrap());
        let cfg = ChainConfig::new(GibbsParams::new(0.0).unwrap(), 200_000, 11);
        let mut sampler = Sampler::new(&inst, cfg, Initial::Random).unwrap();
        let mut counts = [0u64; 6];
        for _ in 0..200_000 {
            sampler.step();
            counts[s.rank(&sampler.state().current)] += 1;
        }
        for c in counts {
            let freq = c as f64 / 200_000.0;
            assert!((freq - 1.0 / 6.0).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn random_matching_is_uniform() {
        let s = shape(2, 3);
        let mut rng = chain_rng(5);
        let mut counts = [0u32; 6];
        for _ in 0..60_000 {
            let m = random_matching(s, &mut rng);
            counts[s.rank(&m)] += 1;
        }
        assert!(counts.iter().all(|&c| (c as f64 - 10_000.0).abs() < 500.0), "{counts:?}");
    }

    #[test]
    fn schedule_parsing_and_lookup() {
        let s = BetaSchedule::parse("0:0.5, 100:2,1000:8").unwrap();
        assert_eq!(s.at(0).beta(), 0.5);
        assert_eq!(s.at(99).beta(), 0.5);
        assert_eq!(s.at(100).beta(), 2.0);
        assert_eq!(s.at(5000).beta(), 8.0);
        assert!(BetaSchedule::parse("5:1").is_err());
        assert!(BetaSchedule::parse("0:1,0:2").is_err());
        assert!(BetaSchedule::parse("0:-1").is_err());
        assert!(BetaSchedule::parse("0-1").is_err());
    }

    #[test]
    fn rejects_invalid_start() {
        let (inst, cfg) = two_state(1.0);
        let bad = Matching::new(vec![0, 1, 2], shape(3, 3)).unwrap();
        assert!(Sampler::new(&inst, cfg, Initial::Given(bad)).is_err());
    }
}
