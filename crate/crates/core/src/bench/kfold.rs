use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One cross-validation split; both index lists are ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded K-fold partition of `labels.len()` samples, stratified by class.
///
/// Each class is shuffled and dealt round-robin into the folds, continuing
/// the rotation across classes, so fold sizes differ by at most one. When a
/// class has fewer samples than folds the split is unstratified.
pub fn kfold_split(labels: &[usize], folds: usize, seed: u64) -> Result<Vec<Fold>> {
    let m = labels.len();
    if folds < 2 || folds > m {
        return Err(Error::domain(format!("{folds} folds for {m} samples")));
    }
    let classes = labels.iter().copied().max().map_or(0, |c| c + 1);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        groups[l].push(i);
    }
    let stratify = groups.iter().all(|g| g.is_empty() || g.len() >= folds);
    if !stratify {
        log::warn!("a class has fewer samples than {folds} folds; splitting without stratification");
        groups = vec![(0..m).collect()];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; m];
    let mut next = 0usize;
    for g in groups.iter_mut() {
        g.shuffle(&mut rng);
        for &i in g.iter() {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    Ok((0..folds)
        .map(|k| Fold {
            train: (0..m).filter(|&i| assignment[i] != k).collect(),
            test: (0..m).filter(|&i| assignment[i] == k).collect(),
        })
        .collect())
}
