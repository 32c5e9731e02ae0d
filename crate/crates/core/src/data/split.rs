use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::welllog::WellLog;
use crate::error::{Error, Result};

/// Test wells carry a letter label (A, B, ...) in split order.
#[derive(Clone, Debug)]
pub struct WellSplit {
    pub train: Vec<WellLog>,
    pub test: Vec<(String, WellLog)>,
}

pub fn well_label(i: usize) -> String {
    if i < 26 {
        char::from(b'A' + i as u8).to_string()
    } else {
        format!("T{}", i + 1)
    }
}

/// Seeded shuffle, then the first `n_test` wells become the test set.
pub fn split_wells(wells: &[WellLog], n_train: usize, n_test: usize, seed: u64) -> Result<WellSplit> {
    if n_train + n_test > wells.len() || n_train == 0 || n_test == 0 {
        return Err(Error::Data(format!(
            "cannot split {} wells into {n_train} train / {n_test} test",
            wells.len()
        )));
    }
    let mut order: Vec<usize> = (0..wells.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = order[..n_test]
        .iter()
        .enumerate()
        .map(|(i, &w)| (well_label(i), wells[w].clone()))
        .collect();
    let train = order[n_test..n_test + n_train].iter().map(|&w| wells[w].clone()).collect();
    Ok(WellSplit { train, test })
}
