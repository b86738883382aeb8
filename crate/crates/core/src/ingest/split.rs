//! Seeded random train/test partition of matched samples.

use super::IngestError;
use crate::seed::rng_for;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

const MIN_SAMPLES: usize = 10;

/// Disjoint train/test id sets; ids index the matched-sample file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndex {
    pub seed: u64,
    pub ratio: f64,
    pub n: usize,
    pub train_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
}

/// Uniform random permutation under the seed; the first `ceil(ratio * n)`
/// indices become the training set.
pub fn split_train_test(n: usize, ratio: f64, seed: u64) -> Result<SplitIndex, IngestError> {
    if n < MIN_SAMPLES {
        return Err(IngestError::TooFewSamples {
            need: MIN_SAMPLES,
            got: n,
        });
    }
    assert!(
        ratio > 0.0 && ratio < 1.0,
        "split ratio must be in (0, 1), got {ratio}"
    );
    let mut ids: Vec<usize> = (0..n).collect();
    let mut rng = rng_for(seed, "split");
    ids.shuffle(&mut rng);
    let n_train = ((ratio * n as f64).ceil() as usize).min(n);
    let mut train_ids: Vec<usize> = ids[..n_train].to_vec();
    let mut test_ids: Vec<usize> = ids[n_train..].to_vec();
    train_ids.sort_unstable();
    test_ids.sort_unstable();
    Ok(SplitIndex {
        seed,
        ratio,
        n,
        train_ids,
        test_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventy_thirty_on_ten() {
        let split = split_train_test(10, 0.7, 1).unwrap();
        assert_eq!(split.train_ids.len(), 7);
        assert_eq!(split.test_ids.len(), 3);
    }

    #[test]
    fn same_seed_same_split() {
        let a = split_train_test(100, 0.7, 99).unwrap();
        let b = split_train_test(100, 0.7, 99).unwrap();
        assert_eq!(a, b);
        let c = split_train_test(100, 0.7, 100).unwrap();
        assert_ne!(a.train_ids, c.train_ids);
    }

    #[test]
    fn partition_covers_everything_once() {
        let split = split_train_test(53, 0.7, 7).unwrap();
        let mut all: Vec<usize> = split
            .train_ids
            .iter()
            .chain(&split.test_ids)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..53).collect::<Vec<_>>());
    }

    #[test]
    fn too_few_samples_rejected() {
        assert!(matches!(
            split_train_test(9, 0.7, 1),
            Err(IngestError::TooFewSamples { need: 10, got: 9 })
        ));
    }
}
