use super::ExactChain;
use crate::error::{Error, Result};

/// Largest `t` scanned by [`mixing_time`].
pub const MIXING_SCAN_CAP: u64 = 1_000_000;

const ROW_CHECK_EVERY: u64 = 64;

/// Worst-start total variation distance `d(t)` for `t = 0, 1, 2, ...`.
///
/// Holds every row of `P^t` and advances by one multiplication with `P` per
/// step, so rounding error grows linearly in `t`.
pub struct TvCurve<'a> {
    chain: &'a ExactChain,
    rows: Vec<f64>,
    t: u64,
}

impl<'a> TvCurve<'a> {
    pub fn new(chain: &'a ExactChain) -> Self {
        let n = chain.n_states();
        let mut rows = vec![0.0; n * n];
        for i in 0..n {
            rows[i * n + i] = 1.0;
        }
        TvCurve { chain, rows, t: 0 }
    }

    fn distance(&self) -> f64 {
        let n = self.chain.n_states();
        let pi = self.chain.pi();
        self.rows
            .chunks_exact(n)
            .map(|row| 0.5 * row.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn advance(&mut self) {
        let n = self.chain.n_states();
        let mut next = vec![0.0; n * n];
        for (row, out) in self.rows.chunks_exact(n).zip(next.chunks_exact_mut(n)) {
            for (k, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &p) in out.iter_mut().zip(self.chain.row(k)) {
                    *o += a * p;
                }
            }
        }
        self.rows = next;
        self.t += 1;
        if self.t.is_multiple_of(ROW_CHECK_EVERY) {
            debug_assert!(
                self.rows
                    .chunks_exact(n)
                    .all(|r| (r.iter().sum::<f64>() - 1.0).abs() < 1e-9),
                "rows of P^{} drifted from stochastic",
                self.t
            );
        }
    }
}

impl Iterator for TvCurve<'_> {
    type Item = (u64, f64);

    fn next(&mut self) -> Option<(u64, f64)> {
        let out = (self.t, self.distance());
        self.advance();
        Some(out)
    }
}

/// `d(0), ..., d(t_max)`.
pub fn tv_distance_curve(chain: &ExactChain, t_max: u64) -> Vec<f64> {
    TvCurve::new(chain)
        .take(t_max as usize + 1)
        .map(|(_, d)| d)
        .collect()
}

/// `min { t : d(t) <= eps }`.
pub fn mixing_time(chain: &ExactChain, eps: f64) -> Result<u64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    TvCurve::new(chain)
        .take(MIXING_SCAN_CAP as usize + 1)
        .find(|&(_, d)| d <= eps)
        .map(|(t, _)| t)
        .ok_or(Error::NoConvergence {
            what: "total variation scan",
            iterations: MIXING_SCAN_CAP,
        })
}

#[cfg(test)]
mod tests {
    use super::super::tests::two_state;
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn initial_distance_is_identity_case() {
        let c = two_state(1.0, false);
        let d = tv_distance_curve(&c, 0);
        let want = c.pi().iter().map(|p| 1.0 - p).fold(0.0, f64::max);
        assert_eq!(d.len(), 1);
        assert!((d[0] - want).abs() < 1e-15);
    }

    #[test]
    fn two_state_geometric_decay() {
        // for two states d(t) = d(0) * |1 - p - q|^t
        let c = two_state(1.0, false);
        let (p, q) = (0.5, 0.5 / E);
        let ratio = (1.0 - p - q).abs();
        assert!((ratio - 0.3161).abs() < 1e-4);
        let d = tv_distance_curve(&c, 30);
        for (t, dt) in d.iter().enumerate() {
            let closed = d[0] * ratio.powi(t as i32);
            assert!((dt - closed).abs() < 1e-14, "t={t}: {dt} vs {closed}");
        }
        let tau = mixing_time(&c, 0.01).unwrap();
        let scan = d.iter().position(|&x| x <= 0.01).unwrap() as u64;
        assert_eq!(tau, scan);
        let closed = (0u64..).find(|&t| d[0] * ratio.powi(t as i32) <= 0.01).unwrap();
        assert_eq!(tau, closed);
    }

    #[test]
    fn curve_is_monotone() {
        for lazy in [false, true] {
            let d = tv_distance_curve(&two_state(2.0, lazy), 200);
            for w in d.windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
        }
    }

    #[test]
    fn already_mixed_gives_zero() {
        let c = two_state(1.0, false);
        let d0 = tv_distance_curve(&c, 0)[0];
        assert_eq!(mixing_time(&c, d0).unwrap(), 0);
        assert_eq!(mixing_time(&c, 0.99).unwrap(), 0);
    }

    #[test]
    fn laziness_slows_mixing_here() {
        let lazy = mixing_time(&two_state(1.0, true), 0.01).unwrap();
        let eager = mixing_time(&two_state(1.0, false), 0.01).unwrap();
        assert!(lazy >= eager, "{lazy} < {eager}");
    }

    #[test]
    fn eps_out_of_range() {
        let c = two_state(1.0, false);
        assert!(mixing_time(&c, 0.0).is_err());
        assert!(mixing_time(&c, 1.0).is_err());
    }
}
