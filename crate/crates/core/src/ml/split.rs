//! Train/test partitions: stratified 80/20, leave one session out, and
//! 80/20 within each session.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{LabeledSample, MlError};
use crate::expression::ExpressionLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SplitMode {
    /// One stratified 80/20 fold over everything.
    #[default]
    Overall,
    /// One fold per session, testing on that whole session.
    #[cfg_attr(feature = "serde", serde(alias = "inter"))]
    InterSession,
    /// One fold per session, stratified 80/20 inside the session.
    #[cfg_attr(feature = "serde", serde(alias = "intra"))]
    IntraSession,
}

/// Indices into the dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Fold {
    /// Held-out session for the session modes.
    pub session: Option<u32>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

const TEST_FRACTION: f64 = 0.2;

/// Shuffles each class of `indices` and moves round(20%) of it to test.
fn stratified(samples: &[LabeledSample], indices: &[usize], rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for label in ExpressionLabel::ALL {
        let mut class: Vec<usize> = indices.iter().copied().filter(|&i| samples[i].label == label).collect();
        class.shuffle(rng);
        let n_test = (class.len() as f64 * TEST_FRACTION).round() as usize;
        test.extend_from_slice(&class[..n_test]);
        train.extend_from_slice(&class[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn sessions(samples: &[LabeledSample]) -> Result<BTreeMap<u32, Vec<usize>>, MlError> {
    let mut map: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        let id = s.session.ok_or(MlError::MissingSession(i))?;
        map.entry(id).or_default().push(i);
    }
    Ok(map)
}

pub fn split(samples: &[LabeledSample], mode: SplitMode, seed: u64) -> Result<Vec<Fold>, MlError> {
    if samples.is_empty() {
        return Err(MlError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        SplitMode::Overall => {
            let all: Vec<usize> = (0..samples.len()).collect();
            let (train, test) = stratified(samples, &all, &mut rng);
            Ok(alloc::vec![Fold { session: None, train, test }])
        }
        SplitMode::InterSession => {
            let map = sessions(samples)?;
            if map.len() < 2 {
                return Err(MlError::TooFewSessions(map.len()));
            }
            Ok(map
                .iter()
                .map(|(&id, test)| Fold {
                    session: Some(id),
                    train: (0..samples.len()).filter(|&i| samples[i].session != Some(id)).collect(),
                    test: test.clone(),
                })
                .collect())
        }
        SplitMode::IntraSession => {
            let map = sessions(samples)?;
            Ok(map
                .iter()
                .map(|(&id, members)| {
                    let (train, test) = stratified(samples, members, &mut rng);
                    Fold { session: Some(id), train, test }
                })
                .collect())
        }
    }
}
