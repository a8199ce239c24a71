//! Inclusive prefix sums over weight vectors and cumulative search.

use rayon::prelude::*;

use crate::error::Error;
use crate::weights::WeightSet;

/// Block width of the fixed-order scan. Inputs at or below this length reduce
/// in plain left-to-right order; longer inputs are processed block-by-block so
/// the reduction order (and therefore every bit of the result) is independent
/// of how many threads execute.
pub const SCAN_BLOCK: usize = 4096;

/// Inclusive prefix sums of a weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeWeights {
    cum: Vec<f64>,
}

impl CumulativeWeights {
    pub fn values(&self) -> &[f64] {
        &self.cum
    }

    pub fn len(&self) -> usize {
        self.cum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cum.is_empty()
    }

    /// Sum of all weights (the last prefix).
    pub fn total(&self) -> f64 {
        *self.cum.last().expect("cumulative weights are non-empty")
    }

    /// Smallest index `i` with `W_i >= position`.
    ///
    /// Strata are left-open: a position exactly on a boundary `W_i` selects
    /// particle `i`, and positions in `(0, total]` never select a zero-weight
    /// particle.
    pub fn lower_bound(&self, position: f64) -> Result<usize, Error> {
        if !(0.0..=self.total()).contains(&position) {
            return Err(Error::PositionOutOfRange {
                position,
                total: self.total(),
            });
        }
        Ok(self.cum.partition_point(|&c| c < position))
    }
}

/// Inclusive scan in the fixed block order, parallelised over blocks.
pub fn prefix_sum(weights: &WeightSet) -> CumulativeWeights {
    CumulativeWeights {
        cum: prefix_sum_slice(weights.weights()),
    }
}

pub(crate) fn prefix_sum_slice(w: &[f64]) -> Vec<f64> {
    if w.len() <= SCAN_BLOCK {
        return scan_from(0.0, w);
    }

    let block_sums: Vec<f64> = w
        .par_chunks(SCAN_BLOCK)
        .map(|block| block.iter().sum())
        .collect();

    // Exclusive scan of the block sums gives each block its starting offset.
    let mut offsets = Vec::with_capacity(block_sums.len());
    let mut running = 0.0;
    for &s in &block_sums {
        offsets.push(running);
        running += s;
    }

    let mut out = vec![0.0; w.len()];
    out.par_chunks_mut(SCAN_BLOCK)
        .zip(w.par_chunks(SCAN_BLOCK))
        .zip(offsets)
        .for_each(|((out_block, in_block), offset)| {
            let mut acc = offset;
            for (o, &x) in out_block.iter_mut().zip(in_block) {
                acc += x;
                *o = acc;
            }
        });
    out
}

fn scan_from(offset: f64, w: &[f64]) -> Vec<f64> {
    let mut acc = offset;
    w.iter()
        .map(|&x| {
            acc += x;
            acc
        })
        .collect()
}
