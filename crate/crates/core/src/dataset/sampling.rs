//! Uniform one-in-N frame sampling within each sequence.

use std::collections::{HashMap, HashSet};

use super::{DatasetError, FrameRecord};

/// The set of frames kept by sampling, computed from frame keys alone so a
/// file can be sampled in two streaming passes.
#[derive(Debug, Clone, Default)]
pub struct SamplePlan {
    keep: HashSet<(String, u64)>,
}

impl SamplePlan {
    /// Within each sequence, sorts frame indices and keeps sorted positions
    /// `0, N, 2N, ...`.
    pub fn from_keys<'a>(
        keys: impl IntoIterator<Item = (&'a str, u64)>,
        rate_denominator: usize,
    ) -> Result<Self, DatasetError> {
        if rate_denominator == 0 {
            return Err(DatasetError::InvalidSamplingRate);
        }
        let mut by_sequence: HashMap<&str, Vec<u64>> = HashMap::new();
        for (seq, idx) in keys {
            by_sequence.entry(seq).or_default().push(idx);
        }
        let mut keep = HashSet::new();
        for (seq, mut indices) in by_sequence {
            indices.sort_unstable();
            keep.extend(
                indices
                    .into_iter()
                    .step_by(rate_denominator)
                    .map(|i| (seq.to_string(), i)),
            );
        }
        Ok(Self { keep })
    }

    pub fn keeps(&self, sequence_id: &str, frame_index: u64) -> bool {
        self.keep.contains(&(sequence_id.to_string(), frame_index))
    }

    pub fn len(&self) -> usize {
        self.keep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keep.is_empty()
    }
}

/// Parses a sampling rate written `N` or `1/N` (N >= 1) into N.
pub fn parse_sampling_rate(value: &str) -> Result<usize, DatasetError> {
    let bad = || DatasetError::BadSamplingRate(value.to_string());
    let denom = match value.trim().split_once('/') {
        Some((num, den)) if num.trim() == "1" => den.trim(),
        Some(_) => return Err(bad()),
        None => value.trim(),
    };
    match denom.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(bad()),
    }
}

/// Keeps one frame in every `rate_denominator` per sequence. Output keeps the
/// input order.
pub fn sample_sequences(records: Vec<FrameRecord>, rate_denominator: usize) -> Result<Vec<FrameRecord>, DatasetError> {
    let plan = SamplePlan::from_keys(records.iter().map(FrameRecord::key), rate_denominator)?;
    Ok(records
        .into_iter()
        .filter(|r| plan.keeps(&r.sequence_id, r.frame_index))
        .collect())
}
