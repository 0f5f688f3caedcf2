//! Seeded train/test splitting and near-equal sharding.

use super::processed::ProcessedDataset;
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub shard_count: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            shard_count: 3,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(
                "train_fraction must lie strictly between 0 and 1".into(),
            ));
        }
        if self.shard_count == 0 {
            return Err(Error::Config("shard_count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Shuffled index partition: first `floor(train_fraction * n)` indices train,
/// the rest test.
pub(crate) fn split_indices(n: usize, spec: &SplitSpec) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);
    let cut = (spec.train_fraction * n as f64).floor() as usize;
    let test = order.split_off(cut);
    (order, test)
}

/// Seeded uniform shuffle, then the first `floor(train_fraction * n)` rows
/// become the training set and the remainder the test set. The partition is
/// disjoint and exhaustive.
pub fn train_test_split(
    dataset: &ProcessedDataset,
    spec: &SplitSpec,
) -> Result<(ProcessedDataset, ProcessedDataset)> {
    spec.validate()?;
    let n = dataset.n_rows();
    if n < 2 {
        return Err(Error::Data(format!("need at least 2 rows to split, got {n}")));
    }
    let (train_idx, test_idx) = split_indices(n, spec);
    Ok((dataset.subset(&train_idx), dataset.subset(&test_idx)))
}

/// Seeded shuffle followed by `k` near-equal contiguous chunks (sizes differ
/// by at most one); disjoint and exhaustive.
pub fn shard(train: &ProcessedDataset, k: usize, seed: u64) -> Result<Vec<ProcessedDataset>> {
    if k == 0 {
        return Err(Error::Config("shard count must be at least 1".into()));
    }
    let n = train.n_rows();
    if n < k {
        return Err(Error::Data(format!("cannot cut {n} rows into {k} shards")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let base = n / k;
    let extra = n % k;
    let mut shards = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let size = base + usize::from(i < extra);
        shards.push(train.subset(&order[start..start + size]));
        start += size;
    }
    Ok(shards)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn dataset(n: usize) -> ProcessedDataset {
        let features = Array2::from_shape_fn((n, 2), |(i, j)| (i * 2 + j) as f64);
        let labels = (0..n).map(|i| (i % 2) as u8).collect();
        ProcessedDataset::from_parts(features, labels, vec!["a".into(), "b".into()]).unwrap()
    }

    fn row_ids(ds: &ProcessedDataset) -> Vec<u64> {
        (0..ds.n_rows()).map(|i| ds.features[(i, 0)] as u64).collect()
    }

    #[test]
    fn split_sizes_follow_the_fraction() {
        let ds = dataset(10);
        let (train, test) = train_test_split(&ds, &SplitSpec::default()).unwrap();
        assert_eq!(train.n_rows(), 8);
        assert_eq!(test.n_rows(), 2);
    }

    #[test]
    fn split_is_a_partition() {
        let ds = dataset(23);
        let (train, test) = train_test_split(&ds, &SplitSpec::default()).unwrap();
        let mut all: Vec<u64> = row_ids(&train).into_iter().chain(row_ids(&test)).collect();
        all.sort_unstable();
        let expected: Vec<u64> = (0..23).map(|i| i * 2).collect();
        assert_eq!(all, expected);
    }

    #[test]
    fn split_is_seed_deterministic() {
        let ds = dataset(40);
        let spec = SplitSpec {
            seed: 9,
            ..SplitSpec::default()
        };
        let (a, _) = train_test_split(&ds, &spec).unwrap();
        let (b, _) = train_test_split(&ds, &spec).unwrap();
        assert_eq!(a, b);
        let other = SplitSpec {
            seed: 10,
            ..SplitSpec::default()
        };
        let (c, _) = train_test_split(&ds, &other).unwrap();
        assert_ne!(row_ids(&a), row_ids(&c));
    }

    #[test]
    fn shard_sizes_differ_by_at_most_one() {
        let ds = dataset(10);
        let shards = shard(&ds, 3, 5).unwrap();
        let mut sizes: Vec<usize> = shards.iter().map(|s| s.n_rows()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 3, 4]);
    }

    #[test]
    fn single_shard_is_the_whole_input_reordered() {
        let ds = dataset(7);
        let shards = shard(&ds, 1, 5).unwrap();
        assert_eq!(shards.len(), 1);
        let mut ids = row_ids(&shards[0]);
        ids.sort_unstable();
        assert_eq!(ids, row_ids(&ds));
    }

    #[test]
    fn shards_partition_the_training_set() {
        let ds = dataset(11);
        let shards = shard(&ds, 3, 1).unwrap();
        let mut all: Vec<u64> = shards.iter().flat_map(row_ids).collect();
        all.sort_unstable();
        let expected: Vec<u64> = (0..11).map(|i| i * 2).collect();
        assert_eq!(all, expected);
    }

    #[test]
    fn degenerate_inputs_error() {
        let ds = dataset(1);
        assert!(train_test_split(&ds, &SplitSpec::default()).is_err());
        let ds = dataset(2);
        assert!(shard(&ds, 3, 0).is_err());
        assert!(shard(&ds, 0, 0).is_err());
    }
}
