//! Benchmark fixtures shared by the criterion benches.

use glassbox::data::{flip_labels, generate_covid_toy, split, Dataset};

/// Noisy Covid toy data split in half: (train, holdout).
pub fn covid_split(n: usize) -> (Dataset, Dataset) {
    let d = flip_labels(&generate_covid_toy(n, 42).expect("n >= 2"), 0.1, 1).expect("valid fraction");
    split(&d, 0.5, 7).expect("valid split")
}

/// Random binary (y, yhat, s) vectors from a fixed linear congruential stream.
pub fn fairness_vectors(n: usize) -> (Vec<u8>, Vec<u8>, Vec<u8>) {
    let mut state = 0x2545_f491_4f6c_dd1d_u64;
    let mut bit = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 63) as u8
    };
    let mut y = Vec::with_capacity(n);
    let mut yhat = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    for _ in 0..n {
        y.push(bit());
        yhat.push(bit());
        s.push(bit());
    }
    (y, yhat, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        assert_eq!(fairness_vectors(64), fairness_vectors(64));
        let (a, b) = covid_split(40);
        assert_eq!(a.n_rows() + b.n_rows(), 40);
    }
}
