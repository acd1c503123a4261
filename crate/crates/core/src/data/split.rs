use crate::error::{Error, Result};
use crate::rng::SeededRng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Sample indices per split, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    pub fn get(&self, s: Split) -> &[usize] {
        match s {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    /// Split of every sample, in sample order.
    pub fn assignment(&self) -> Vec<Split> {
        let m = self.train.len() + self.val.len() + self.test.len();
        let mut out = vec![Split::Train; m];
        for &i in &self.val {
            out[i] = Split::Val;
        }
        for &i in &self.test {
            out[i] = Split::Test;
        }
        out
    }
}

/// Shuffles `m` condition indices with `seed` and cuts them into
/// train/val/test. Validation and test sizes are `floor(f·m)`; the
/// remainder goes to training.
pub fn split_conditions(m: usize, fractions: [f64; 3], seed: u64) -> Result<Splits> {
    if let Some(f) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::Config(format!("split fraction {f} outside [0, 1]")));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split fractions sum to {total}, not 1")));
    }
    // 1e-9 absorbs products such as 0.15·1000 = 149.99999…
    let size = |f: f64| (f * m as f64 + 1e-9).floor() as usize;
    let (n_val, n_test) = (size(fractions[1]), size(fractions[2]));
    let mut order: Vec<usize> = (0..m).collect();
    SeededRng::new(seed).shuffle(&mut order);
    let n_train = m - n_val - n_test;
    let cut = |range: std::ops::Range<usize>| {
        let mut v = order[range].to_vec();
        v.sort_unstable();
        v
    };
    Ok(Splits {
        train: cut(0..n_train),
        val: cut(n_train..n_train + n_val),
        test: cut(n_train + n_val..m),
    })
}

/// How a dataset is cut into splits; stored with checkpoints so evaluation
/// sees the same test conditions as training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default = "default_fractions")]
    pub fractions: [f64; 3],
    #[serde(default)]
    pub seed: u64,
}

fn default_fractions() -> [f64; 3] {
    [0.7, 0.15, 0.15]
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { fractions: default_fractions(), seed: 0 }
    }
}

impl SplitConfig {
    pub fn apply(&self, m: usize) -> Result<Splits> {
        split_conditions(m, self.fractions, self.seed)
    }
}
