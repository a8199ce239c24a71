//! Importance weights and ancestry bookkeeping.

use crate::error::Error;

/// Pairwise (cascade) summation. Bounds accumulation error to O(log n) ulps,
/// which keeps the normalisation invariant tight up to `P = 2^16` and beyond.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// A set of `P` unnormalised, non-negative importance weights.
///
/// Construction validates that the vector is non-empty, every entry is finite
/// and non-negative, and at least one entry is positive; downstream operations
/// can then assume a usable weight set. Weights are immutable after
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    w: Vec<f64>,
}

impl WeightSet {
    pub fn new(w: Vec<f64>) -> Result<Self, Error> {
        if w.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector"));
        }
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidWeights("negative or non-finite weight"));
        }
        if w.iter().all(|x| *x == 0.0) {
            return Err(Error::InvalidWeights("all weights zero"));
        }
        Ok(Self { w })
    }

    /// Particle count `P`.
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        false // validated non-empty at construction
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// Sum of all weights, by pairwise summation.
    pub fn total(&self) -> f64 {
        pairwise_sum(&self.w)
    }

    /// Normalised weights `v_i = w_i / Σ_j w_j`.
    pub fn normalized(&self) -> Vec<f64> {
        let total = self.total();
        self.w.iter().map(|w| w / total).collect()
    }

    /// Largest normalised weight.
    pub fn max_normalized(&self) -> f64 {
        let max = self.w.iter().cloned().fold(0.0, f64::max);
        max / self.total()
    }

    /// Effective sample size `1 / Σ_i v_i²`, clamped to `[1, P]`.
    ///
    /// `P` for uniform weights, 1 when all weight sits on a single particle.
    pub fn ess(&self) -> f64 {
        let total = self.total();
        let sq: Vec<f64> = self
            .w
            .iter()
            .map(|w| {
                let v = w / total;
                v * v
            })
            .collect();
        (1.0 / pairwise_sum(&sq)).clamp(1.0, self.w.len() as f64)
    }
}

/// Per-particle replication counts; always sums to the particle count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffspringVector {
    counts: Vec<usize>,
}

impl OffspringVector {
    pub fn new(counts: Vec<usize>) -> Result<Self, Error> {
        let expected = counts.len();
        let got: usize = counts.iter().sum();
        if got != expected {
            return Err(Error::OffspringSum { got, expected });
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Per-slot parent indices; every entry is a valid particle index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AncestorVector {
    parents: Vec<usize>,
}

impl AncestorVector {
    pub fn new(parents: Vec<usize>) -> Result<Self, Error> {
        let particles = parents.len();
        if let Some(&index) = parents.iter().find(|&&a| a >= particles) {
            return Err(Error::AncestorOutOfRange { index, particles });
        }
        Ok(Self { parents })
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }
}

/// Expand offspring counts into ancestor indices by cumulative assignment:
/// particle `i`'s copies occupy `o_i` consecutive output slots, in
/// nondecreasing particle order.
pub fn offspring_to_ancestors(offspring: &OffspringVector) -> AncestorVector {
    let mut parents = Vec::with_capacity(offspring.len());
    for (particle, &count) in offspring.counts().iter().enumerate() {
        parents.extend(std::iter::repeat_n(particle, count));
    }
    AncestorVector { parents }
}

/// Count how many output slots chose each particle as parent.
pub fn ancestors_to_offspring(ancestors: &AncestorVector) -> OffspringVector {
    let mut counts = vec![0usize; ancestors.len()];
    for &parent in ancestors.parents() {
        counts[parent] += 1;
    }
    OffspringVector { counts }
}

/// Resampling error `Σ_i (o_i/P − v_i)²` between realised offspring counts and
/// normalised weights.
pub fn resampling_error(offspring: &OffspringVector, weights: &WeightSet) -> Result<f64, Error> {
    if offspring.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: offspring.len(),
            right: weights.len(),
        });
    }
    let particles = weights.len() as f64;
    let v = weights.normalized();
    let terms: Vec<f64> = offspring
        .counts()
        .iter()
        .zip(&v)
        .map(|(&o, &vi)| {
            let d = o as f64 / particles - vi;
            d * d
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_weight_vectors() {
        assert!(matches!(
            WeightSet::new(vec![]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(matches!(
            WeightSet::new(vec![0.0, 0.0]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(matches!(
            WeightSet::new(vec![1.0, -0.5]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(matches!(
            WeightSet::new(vec![f64::NAN]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(matches!(
            WeightSet::new(vec![f64::INFINITY, 1.0]),
            Err(Error::InvalidWeights(_))
        ));
    }

    #[test]
    fn normalize_matches_hand_cases() {
        let v = WeightSet::new(vec![1.0, 1.0, 1.0, 1.0]).unwrap().normalized();
        assert_eq!(v, vec![0.25, 0.25, 0.25, 0.25]);

        let v = WeightSet::new(vec![0.0, 0.0, 5.0, 0.0]).unwrap().normalized();
        assert_eq!(v, vec![0.0, 0.0, 1.0, 0.0]);

        let v = WeightSet::new(vec![2.0, 1.0, 1.0]).unwrap().normalized();
        assert_eq!(v, vec![0.5, 0.25, 0.25]);
    }

    #[test]
    fn normalized_sum_is_tight_at_large_p() {
        let mut s = crate::rng::Stream::new(11, 0);
        let w: Vec<f64> = (0..1 << 16).map(|_| s.next_f64() + 1e-3).collect();
        let set = WeightSet::new(w).unwrap();
        let sum = pairwise_sum(&set.normalized());
        assert!((sum - 1.0).abs() <= 1e-12, "sum {sum}");
    }

    #[test]
    fn ess_uniform_and_degenerate() {
        let uniform = WeightSet::new(vec![3.0; 8]).unwrap();
        assert!((uniform.ess() - 8.0).abs() < 1e-12);

        let single = WeightSet::new(vec![0.0, 0.0, 7.0]).unwrap();
        assert!((single.ess() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ess_is_scale_invariant() {
        let w = vec![0.3, 1.2, 0.01, 4.0, 2.2];
        let a = WeightSet::new(w.clone()).unwrap().ess();
        let b = WeightSet::new(w.iter().map(|x| x * 1024.0).collect()).unwrap().ess();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn conversion_hand_cases() {
        let o = OffspringVector::new(vec![2, 0, 1, 1]).unwrap();
        assert_eq!(offspring_to_ancestors(&o).parents(), &[0, 0, 2, 3]);

        let o = OffspringVector::new(vec![4, 0, 0, 0]).unwrap();
        assert_eq!(offspring_to_ancestors(&o).parents(), &[0, 0, 0, 0]);

        let o = OffspringVector::new(vec![0, 0, 0, 4]).unwrap();
        assert_eq!(offspring_to_ancestors(&o).parents(), &[3, 3, 3, 3]);

        let a = AncestorVector::new(vec![0, 0, 2, 3]).unwrap();
        assert_eq!(ancestors_to_offspring(&a).counts(), &[2, 0, 1, 1]);

        let a = AncestorVector::new(vec![0, 1, 2, 3]).unwrap();
        assert_eq!(ancestors_to_offspring(&a).counts(), &[1, 1, 1, 1]);
    }

    #[test]
    fn conversion_rejects_inconsistent_input() {
        assert!(matches!(
            OffspringVector::new(vec![2, 2, 1]),
            Err(Error::OffspringSum { got: 5, expected: 3 })
        ));
        assert!(matches!(
            AncestorVector::new(vec![0, 4, 1, 2]),
            Err(Error::AncestorOutOfRange { index: 4, particles: 4 })
        ));
    }

    #[test]
    fn resampling_error_hand_cases() {
        let w = WeightSet::new(vec![1.0; 4]).unwrap();
        let o = OffspringVector::new(vec![1, 1, 1, 1]).unwrap();
        assert_eq!(resampling_error(&o, &w).unwrap(), 0.0);

        let w = WeightSet::new(vec![1.0, 1.0]).unwrap();
        let o = OffspringVector::new(vec![2, 0]).unwrap();
        assert!((resampling_error(&o, &w).unwrap() - 0.5).abs() < 1e-15);

        let o = OffspringVector::new(vec![1, 1, 1]).unwrap();
        assert!(matches!(
            resampling_error(&o, &w),
            Err(Error::LengthMismatch { left: 3, right: 2 })
        ));
    }
}
