use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, LineageEntry, Param, TabularError};

/// Seeded train/test partition. The test side gets `round(fraction * n)`
/// rows, floored at one and capped at `n - 1`; both halves keep original row
/// order.
pub fn split_train_test(
    ds: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), TabularError> {
    let n = ds.n_rows();
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(TabularError::DegenerateSplit(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    if n < 2 {
        return Err(TabularError::DegenerateSplit(format!(
            "{n} rows cannot be split"
        )));
    }
    let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test_idx = order[..n_test].to_vec();
    let mut train_idx = order[n_test..].to_vec();
    test_idx.sort_unstable();
    train_idx.sort_unstable();

    let entry = |part: &str| {
        let mut e = LineageEntry::new("split_train_test", Vec::new(), ds.id());
        e.params.insert("part".into(), Param::Text(part.into()));
        e.params
            .insert("test_fraction".into(), Param::Number(test_fraction));
        e.params.insert("seed".into(), Param::Number(seed as f64));
        e
    };
    let train = ds.select_rows(&train_idx, entry("train"))?;
    let test = ds.select_rows(&test_idx, entry("test"))?;
    let train = train.with_id(format!("{}-train", ds.id()));
    let test = test.with_id(format!("{}-test", ds.id()));
    Ok((train, test))
}
