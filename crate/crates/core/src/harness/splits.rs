use std::ops::Range;

use crate::error::{Error, Result};

/// Half-overlapping identity windows of width `universe` and stride
/// `universe / 2`, starting at 0 and staying inside `[0, dataset)`.
///
/// `make_splits(1000, 100)` yields 19 windows.
pub fn make_splits(dataset: usize, universe: usize) -> Result<Vec<Range<usize>>> {
    if universe == 0 {
        return Err(Error::InvalidConfig("universe size must be positive".into()));
    }
    if universe > dataset {
        return Err(Error::InvalidConfig(format!(
            "universe size {universe} exceeds dataset size {dataset}"
        )));
    }
    let stride = (universe / 2).max(1);
    let count = (dataset - universe) / stride + 1;
    Ok((0..count).map(|i| i * stride..i * stride + universe).collect())
}

/// Openness in percent for `known` enrolled identities queried by a universe
/// of `universe` identities: `100 (1 - sqrt(2N / (N + N_U)))`.
pub fn openness(known: usize, universe: usize) -> Result<f64> {
    if known == 0 || known > universe {
        return Err(Error::InvalidConfig(format!(
            "openness needs 1 <= N <= N_U, got N = {known}, N_U = {universe}"
        )));
    }
    let n = known as f64;
    Ok(100.0 * (1.0 - (2.0 * n / (n + universe as f64)).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_examples() {
        assert_eq!(make_splits(1000, 100).unwrap().len(), 19);
        assert_eq!(make_splits(100, 100).unwrap(), vec![0..100]);
        let starts: Vec<usize> = make_splits(300, 100).unwrap().iter().map(|r| r.start).collect();
        assert_eq!(starts, vec![0, 50, 100, 150, 200]);
        assert!(make_splits(50, 100).is_err());
    }

    #[test]
    fn openness_examples() {
        assert!((openness(50, 100).unwrap() - 18.35).abs() < 0.01);
        assert!((openness(50, 1000).unwrap() - 69.14).abs() < 0.01);
        assert_eq!(openness(50, 50).unwrap(), 0.0);
        assert!(openness(60, 50).is_err());
    }
}
