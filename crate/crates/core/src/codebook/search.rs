use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Codebook, Codeword};
use crate::error::{domain, Error, Result};

/// Candidate draws before [`poisson_disk_search`] gives up.
pub const DEFAULT_SEARCH_BUDGET: u64 = 10_000_000;

/// Random dart-throwing search for a binary `(n, k)` code with distance ≥ `d_target`.
///
/// Uniform `n`-bit candidates are drawn from a ChaCha8 stream seeded with
/// `seed`; a candidate is kept only if it is at distance ≥ `d_target` from every
/// word kept so far. Succeeds once `2^k` words are accepted, in acceptance order.
pub fn poisson_disk_search(n: usize, k: usize, d_target: usize, seed: u64, budget: u64) -> Result<Codebook> {
    if n == 0 || n > 64 {
        return domain(format!("search supports 1 ≤ n ≤ 64, got {n}"));
    }
    if k > n || k > 20 {
        return domain(format!("k = {k} out of range for n = {n}"));
    }
    let wanted = 1usize << k;
    if d_target > n {
        return Err(Error::SearchFailure {
            found: 0,
            wanted,
            draws: 0,
        });
    }
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted: Vec<u64> = Vec::with_capacity(wanted);
    let mut draws = 0u64;
    while accepted.len() < wanted {
        if draws == budget {
            return Err(Error::SearchFailure {
                found: accepted.len(),
                wanted,
                draws,
            });
        }
        draws += 1;
        let candidate = rng.random::<u64>() & mask;
        if accepted
            .iter()
            .all(|&w| (w ^ candidate).count_ones() as usize >= d_target)
        {
            accepted.push(candidate);
        }
    }
    let words = accepted.into_iter().map(|w| Codeword::from_bits(w, n)).collect();
    Codebook::new(format!("search-{n}-{k}-{d_target}-s{seed}"), n, k, 2, words)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impossible_spacing_fails_immediately() {
        let err = poisson_disk_search(8, 2, 9, 1, 1000).unwrap_err();
        assert!(matches!(err, Error::SearchFailure { found: 0, draws: 0, .. }));
    }

    #[test]
    fn small_search_meets_target() {
        let book = poisson_disk_search(16, 5, 5, 3, 1_000_000).unwrap();
        assert_eq!(book.len(), 32);
        assert!(book.d_min() >= 5);
    }

    #[test]
    fn deterministic_in_seed() {
        let a = poisson_disk_search(20, 6, 6, 42, 1_000_000).unwrap();
        let b = poisson_disk_search(20, 6, 6, 42, 1_000_000).unwrap();
        assert_eq!(a.words(), b.words());
        let c = poisson_disk_search(20, 6, 6, 43, 1_000_000).unwrap();
        assert_ne!(a.words(), c.words());
    }

    #[test]
    fn exhausted_budget_reports_progress() {
        match poisson_disk_search(31, 10, 12, 7, 20_000) {
            Err(Error::SearchFailure { found, wanted, draws }) => {
                assert_eq!(wanted, 1024);
                assert_eq!(draws, 20_000);
                assert!(found > 0 && found < wanted);
            }
            other => panic!("expected search failure, got {other:?}"),
        }
    }
}
