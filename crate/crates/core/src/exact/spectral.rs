use nalgebra::{DMatrix, SymmetricEigen};

use super::ExactChain;

/// Second largest eigenvalue of a reversible `P`, via the symmetric matrix
/// `D^{1/2} P D^{-1/2}` with `D = diag(π)`. `None` for a one-state chain.
pub fn second_eigenvalue(chain: &ExactChain) -> Option<f64> {
    let n = chain.n_states();
    if n < 2 {
        return None;
    }
    let root: Vec<f64> = chain.pi().iter().map(|p| p.sqrt()).collect();
    let s = DMatrix::from_fn(n, n, |i, j| {
        let a = root[i] * chain.p(i, j) / root[j];
        let b = root[j] * chain.p(j, i) / root[i];
        0.5 * (a + b)
    });
    let mut eig: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    Some(eig[1])
}

/// `1 - λ₂`; 1 for a one-state chain.
pub fn spectral_gap(chain: &ExactChain) -> f64 {
    second_eigenvalue(chain).map_or(1.0, |l| 1.0 - l)
}
