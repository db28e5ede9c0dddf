//! Train/validation/test partitioning.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::SplitScheme;
use crate::error::{DtiError, Result};

pub const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub scheme: SplitScheme,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Seed for repeat `r`; distinct repeats get decorrelated streams.
fn repeat_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(r as u64)
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Largest-remainder apportionment of `n` by integer weights: every part
/// is within one of its exact quota. Equal remainders favour later parts,
/// so 4965 splits 8:1:1 as (3972, 496, 497).
pub fn ratio_sizes<const K: usize>(n: usize, weights: [usize; K]) -> [usize; K] {
    let total: usize = weights.iter().sum();
    let mut sizes = weights.map(|w| n * w / total);
    let mut order: Vec<usize> = (0..K).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(n * weights[i] % total), std::cmp::Reverse(i)));
    let short = n - sizes.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        sizes[i] += 1;
    }
    sizes
}

/// `repeats` seeded partitions of `0..n`.
///
/// The repeated scheme uses 8:1:1 sizes from [`ratio_sizes`]. The k-fold scheme uses
/// `repeats` folds as test sets in turn and carves an eighth of the
/// remaining indices as validation.
pub fn make_splits(n: usize, scheme: SplitScheme, seed: u64, repeats: usize) -> Result<Vec<DatasetSplit>> {
    if n < MIN_SAMPLES {
        return Err(DtiError::Invalid(format!("{n} samples, need at least {MIN_SAMPLES}")));
    }
    if repeats == 0 {
        return Err(DtiError::Config("repeats must be positive".into()));
    }
    match scheme {
        SplitScheme::Repeated811 => Ok((0..repeats)
            .map(|r| {
                let s = repeat_seed(seed, r);
                let p = permutation(n, s);
                let [n_train, n_val, _] = ratio_sizes(n, [8, 1, 1]);
                DatasetSplit {
                    train: p[..n_train].to_vec(),
                    val: p[n_train..n_train + n_val].to_vec(),
                    test: p[n_train + n_val..].to_vec(),
                    seed: s,
                    scheme,
                }
            })
            .collect()),
        SplitScheme::KFold => {
            if repeats < 2 || repeats > n {
                return Err(DtiError::Config(format!("k-fold needs 2 <= k <= n, got k={repeats}")));
            }
            let p = permutation(n, seed);
            Ok((0..repeats)
                .map(|f| {
                    let lo = f * n / repeats;
                    let hi = (f + 1) * n / repeats;
                    let rest: Vec<usize> = p[..lo].iter().chain(&p[hi..]).copied().collect();
                    let n_val = rest.len() / 8;
                    DatasetSplit {
                        train: rest[n_val..].to_vec(),
                        val: rest[..n_val].to_vec(),
                        test: p[lo..hi].to_vec(),
                        seed,
                        scheme,
                    }
                })
                .collect())
        }
        SplitScheme::GpcrFixed => Err(DtiError::Config(
            "the fixed scheme needs explicit train/test lists; use fixed_split".into(),
        )),
    }
}

/// Given train and test index lists, carve `floor(20%)` of train (seeded)
/// as validation.
pub fn fixed_split(train: &[usize], test: &[usize], seed: u64) -> Result<DatasetSplit> {
    if train.len() < 5 || test.is_empty() {
        return Err(DtiError::Invalid(format!(
            "fixed split needs >= 5 train and >= 1 test samples, got {} / {}",
            train.len(),
            test.len()
        )));
    }
    let mut t = train.to_vec();
    t.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = train.len() / 5;
    Ok(DatasetSplit {
        val: t[..n_val].to_vec(),
        train: t[n_val..].to_vec(),
        test: test.to_vec(),
        seed,
        scheme: SplitScheme::GpcrFixed,
    })
}
