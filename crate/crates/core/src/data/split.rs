use crate::data::frame::InsertionRecording;
use crate::data::normalize::NormalizationStats;
use crate::error::{Error, Result};

/// One leave-one-insertion-out fold.
#[derive(Clone, Debug)]
pub struct Fold<'a> {
    pub index: usize,
    pub test: &'a InsertionRecording,
    pub train: Vec<&'a InsertionRecording>,
}

impl Fold<'_> {
    /// Statistics from the training recordings of this fold only.
    pub fn stats(&self) -> Result<NormalizationStats> {
        NormalizationStats::from_recordings(self.train.iter().copied())
    }
}

pub fn loocv_split(recordings: &[InsertionRecording]) -> Result<Vec<Fold<'_>>> {
    if recordings.len() < 2 {
        return Err(Error::contract(format!(
            "cross validation needs at least 2 recordings, got {}",
            recordings.len()
        )));
    }
    Ok((0..recordings.len())
        .map(|i| Fold {
            index: i,
            test: &recordings[i],
            train: recordings
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, r)| r)
                .collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn recs(n: usize) -> Vec<InsertionRecording> {
        (0..n)
            .map(|i| InsertionRecording {
                id: format!("ins{i}"),
                sample_rate: 6.0,
                frames: Vec::new(),
            })
            .collect()
    }

    #[test]
    fn eight_recordings_eight_folds_covering_each_once() {
        let r = recs(8);
        let folds = loocv_split(&r).unwrap();
        assert_eq!(folds.len(), 8);
        let tests: Vec<&str> = folds.iter().map(|f| f.test.id.as_str()).collect();
        let unique: BTreeSet<&str> = tests.iter().copied().collect();
        assert_eq!(tests.len(), unique.len());
        assert_eq!(unique, r.iter().map(|r| r.id.as_str()).collect());
        for f in &folds {
            assert_eq!(f.train.len(), 7);
            assert!(f.train.iter().all(|t| t.id != f.test.id));
        }
    }

    #[test]
    fn two_recordings_are_disjoint() {
        let r = recs(2);
        let folds = loocv_split(&r).unwrap();
        assert_eq!(folds[0].train[0].id, "ins1");
        assert_eq!(folds[1].train[0].id, "ins0");
    }

    #[test]
    fn single_recording_is_rejected() {
        assert!(loocv_split(&recs(1)).is_err());
    }
}
