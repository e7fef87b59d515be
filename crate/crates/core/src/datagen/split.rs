use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Task;

/// Tolerance on realized split proportions.
pub const RATIO_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<Task>,
    pub dev: Vec<Task>,
    pub test: Vec<Task>,
}

impl DatasetSplit {
    pub fn parts(&self) -> [(&'static str, &[Task]); 3] {
        [("train", &self.train), ("dev", &self.dev), ("test", &self.test)]
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.dev.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error("ratios must be non-negative and sum to 1, got {0:?}")]
    BadRatios([f64; 3]),
    #[error("{forms} distinct surface forms cannot meet ratios {ratios:?} within {RATIO_TOLERANCE}")]
    TooFewSurfaceForms { forms: usize, ratios: [f64; 3] },
}

/// Assigns whole surface-form groups to train/dev/test. Groups are visited
/// largest first, ties in seeded random order, and each goes to the split furthest below its
/// target size.
pub fn split_dataset(tasks: Vec<Task>, ratios: [f64; 3], seed: u64) -> Result<DatasetSplit, SplitError> {
    if ratios.iter().any(|r| *r < 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(SplitError::BadRatios(ratios));
    }
    if tasks.is_empty() {
        return Ok(DatasetSplit::default());
    }
    let total = tasks.len();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<Vec<Task>> = Vec::new();
    for t in tasks {
        let g = *index.entry(t.surface_form.clone()).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(t);
    }
    let forms = groups.len();
    groups.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // large groups first so small ones can even out the proportions
    groups.sort_by_key(|g| std::cmp::Reverse(g.len()));

    let target: Vec<f64> = ratios.iter().map(|r| r * total as f64).collect();
    let mut parts: [Vec<Task>; 3] = Default::default();
    for group in groups {
        let i = (0..3)
            .filter(|&i| ratios[i] > 0.0)
            .max_by(|&x, &y| {
                let dx = target[x] - parts[x].len() as f64;
                let dy = target[y] - parts[y].len() as f64;
                dx.total_cmp(&dy).then(y.cmp(&x))
            })
            .expect("some ratio is positive");
        parts[i].extend(group);
    }
    for i in 0..3 {
        if (parts[i].len() as f64 / total as f64 - ratios[i]).abs() > RATIO_TOLERANCE {
            return Err(SplitError::TooFewSurfaceForms { forms, ratios });
        }
    }
    let [train, dev, test] = parts;
    Ok(DatasetSplit { train, dev, test })
}
