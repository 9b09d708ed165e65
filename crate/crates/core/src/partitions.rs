//! Ordered interval partitions of `[k]` and the compatibility relation on
//! index sequences.
//!
//! An ordered interval partition `W_1 < W_2 < … < W_r` is determined by its
//! block sizes, so it is stored as a composition of `k`. A sequence `J` is
//! compatible with a partition when it is constant on every block and changes
//! value between consecutive blocks; equal values in non-adjacent blocks are
//! fine.

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct IntervalPartition {
    block_sizes: Vec<usize>,
}

impl IntervalPartition {
    pub fn new(block_sizes: Vec<usize>) -> Result<Self> {
        if block_sizes.is_empty() || block_sizes.contains(&0) {
            return Err(Error::InvalidSize(format!(
                "block sizes must be positive and nonempty, got {block_sizes:?}"
            )));
        }
        Ok(IntervalPartition { block_sizes })
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// The `k` being partitioned.
    pub fn size(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    /// Blocks as 0-based half-open position ranges.
    pub fn blocks(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.block_sizes
            .iter()
            .map(|&s| {
                let r = start..start + s;
                start += s;
                r
            })
            .collect()
    }
}

/// All `2^(k-1)` compositions of `k`.
///
/// Bit `b` of the enumeration counter marks a block boundary after position
/// `b + 1`.
pub fn enumerate_interval_partitions(k: usize) -> Result<Vec<IntervalPartition>> {
    if k == 0 {
        return Err(Error::InvalidSize("k must be at least 1".into()));
    }
    let cuts = k - 1;
    let out = (0u64..1u64 << cuts)
        .map(|mask| {
            let mut sizes = Vec::new();
            let mut run = 1;
            for b in 0..cuts {
                if mask >> b & 1 == 1 {
                    sizes.push(run);
                    run = 1;
                } else {
                    run += 1;
                }
            }
            sizes.push(run);
            IntervalPartition { block_sizes: sizes }
        })
        .collect();
    Ok(out)
}

pub fn compatible(seq: &[usize], partition: &IntervalPartition) -> Result<bool> {
    let k = partition.size();
    if seq.len() != k {
        return Err(Error::LengthMismatch {
            left: seq.len(),
            right: k,
        });
    }
    let blocks = partition.blocks();
    for b in &blocks {
        let v = seq[b.start];
        if seq[b.clone()].iter().any(|&x| x != v) {
            return Ok(false);
        }
    }
    // constant blocks, so comparing the boundary letters is enough
    Ok(blocks
        .windows(2)
        .all(|pair| seq[pair[0].end - 1] != seq[pair[1].start]))
}

/// The composition given by the maximal constant runs of `seq`.
pub fn canonical_partition(seq: &[usize]) -> Result<IntervalPartition> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    let sizes = crate::ncpoly::word_runs(seq)
        .into_iter()
        .map(|(_, len)| len)
        .collect();
    Ok(IntervalPartition { block_sizes: sizes })
}

/// `J1 ∼ J2`: both compatible with one common ordered interval partition.
pub fn equivalent(a: &[usize], b: &[usize]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(true);
    }
    Ok(canonical_partition(a)? == canonical_partition(b)?)
}
