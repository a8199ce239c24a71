//! The four resampling schemes.
//!
//! All schemes are pure functions of `(weights, config, seed)`: every output
//! slot (or stratum, or Markov chain) draws from its own counter-based stream,
//! so results are identical however the per-particle work is scheduled, and
//! only weight ratios and normalised positions enter any decision, so scaling
//! all weights by a common factor leaves results unchanged.
//!
//! The multinomial and Metropolis resamplers produce ancestor indices; the
//! stratified and systematic resamplers produce offspring counts.

use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::rng::Stream;
use crate::scan::{prefix_sum, prefix_sum_slice, CumulativeWeights};
use crate::weights::{
    ancestors_to_offspring, offspring_to_ancestors, AncestorVector, OffspringVector, WeightSet,
};

/// Minimum slots per rayon task; keeps small inputs on one thread.
const PAR_MIN_LEN: usize = 1024;

/// Resampling scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Multinomial,
    Stratified,
    Systematic,
    Metropolis,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Scheme::Multinomial => "multinomial",
            Scheme::Stratified => "stratified",
            Scheme::Systematic => "systematic",
            Scheme::Metropolis => "metropolis",
        };
        f.write_str(name)
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "multinomial" => Ok(Scheme::Multinomial),
            "stratified" => Ok(Scheme::Stratified),
            "systematic" => Ok(Scheme::Systematic),
            "metropolis" => Ok(Scheme::Metropolis),
            _ => Err(Error::InvalidConfig("unknown scheme name")),
        }
    }
}

/// Configuration for [`resample`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResampleConfig {
    pub scheme: Scheme,
    /// Sort weights ascending before the cumulative search (multinomial only;
    /// output distribution is unchanged).
    pub presort: bool,
    /// Metropolis iteration count `B` (Metropolis only; must be >= 1).
    pub metropolis_iterations: u32,
    pub seed: u64,
}

impl ResampleConfig {
    pub fn new(scheme: Scheme, seed: u64) -> Self {
        Self {
            scheme,
            presort: false,
            metropolis_iterations: 0,
            seed,
        }
    }

    pub fn with_presort(mut self, presort: bool) -> Self {
        self.presort = presort;
        self
    }

    pub fn with_metropolis_iterations(mut self, iterations: u32) -> Self {
        self.metropolis_iterations = iterations;
        self
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.scheme == Scheme::Metropolis && self.metropolis_iterations == 0 {
            return Err(Error::InvalidConfig(
                "metropolis requires at least one iteration",
            ));
        }
        if self.presort && self.scheme != Scheme::Multinomial {
            return Err(Error::InvalidConfig(
                "presort applies to the multinomial scheme only",
            ));
        }
        Ok(())
    }
}

/// Output of [`resample`], in the representation native to the scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resampled {
    Ancestors(AncestorVector),
    Offspring(OffspringVector),
}

impl Resampled {
    /// Offspring counts, converting when the native output is ancestors.
    pub fn offspring(&self) -> OffspringVector {
        match self {
            Resampled::Ancestors(a) => ancestors_to_offspring(a),
            Resampled::Offspring(o) => o.clone(),
        }
    }

    /// Ancestor indices, converting (cumulative assignment) when the native
    /// output is offspring counts.
    pub fn ancestors(&self) -> AncestorVector {
        match self {
            Resampled::Ancestors(a) => a.clone(),
            Resampled::Offspring(o) => offspring_to_ancestors(o),
        }
    }
}

/// Run the configured scheme on a weight set.
pub fn resample(weights: &WeightSet, config: &ResampleConfig) -> Result<Resampled, Error> {
    config.validate()?;
    Ok(match config.scheme {
        Scheme::Multinomial => {
            Resampled::Ancestors(multinomial(weights, config.presort, config.seed))
        }
        Scheme::Stratified => Resampled::Offspring(stratified(weights, config.seed)),
        Scheme::Systematic => Resampled::Offspring(systematic(weights, config.seed)),
        Scheme::Metropolis => Resampled::Ancestors(metropolis(
            weights,
            config.metropolis_iterations,
            config.seed,
        )),
    })
}

/// Multinomial resampling: every output slot draws its ancestor independently
/// with probability proportional to weight.
///
/// Slot `i` draws `u_i` uniform on `(0, total]` from stream `i` and selects
/// the particle whose cumulative interval contains `u_i`; excluding zero keeps
/// zero-weight particles unselectable. With `presort`, the cumulative search
/// runs over weights sorted ascending and the hit is mapped back through the
/// sort permutation, which leaves the output distribution unchanged.
pub fn multinomial(weights: &WeightSet, presort: bool, seed: u64) -> AncestorVector {
    let particles = weights.len();
    let parents = if presort {
        let mut order: Vec<usize> = (0..particles).collect();
        order.sort_unstable_by(|&a, &b| {
            weights.weights()[a]
                .total_cmp(&weights.weights()[b])
                .then(a.cmp(&b))
        });
        let sorted: Vec<f64> = order.iter().map(|&i| weights.weights()[i]).collect();
        let cum = prefix_sum_slice(&sorted);
        let total = *cum.last().expect("non-empty");
        (0..particles)
            .into_par_iter()
            .with_min_len(PAR_MIN_LEN)
            .map(|slot| {
                let u = Stream::new(seed, slot as u64).next_f64_open_closed() * total;
                order[cum.partition_point(|&c| c < u)]
            })
            .collect()
    } else {
        let cum = prefix_sum(weights);
        let total = cum.total();
        (0..particles)
            .into_par_iter()
            .with_min_len(PAR_MIN_LEN)
            .map(|slot| {
                let u = Stream::new(seed, slot as u64).next_f64_open_closed() * total;
                cum.values().partition_point(|&c| c < u)
            })
            .collect()
    };
    AncestorVector::new(parents).expect("search returns in-range indices")
}

/// Stratified resampling: the cumulative scale is cut into `P` equal strata
/// and stratum `i` places one position at `(i + u_i)·total/P` with its own
/// `u_i` uniform on `(0, 1]`.
pub fn stratified(weights: &WeightSet, seed: u64) -> OffspringVector {
    let offsets: Vec<f64> = (0..weights.len())
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|stratum| Stream::new(seed, stratum as u64).next_f64_open_closed())
        .collect();
    strata_offspring(weights, &offsets)
}

/// Systematic resampling: as [`stratified`] but one shared offset for all
/// strata.
pub fn systematic(weights: &WeightSet, seed: u64) -> OffspringVector {
    let offset = Stream::new(seed, 0).next_f64_open_closed();
    systematic_with_offset(weights, offset)
}

fn systematic_with_offset(weights: &WeightSet, offset: f64) -> OffspringVector {
    let offsets = vec![offset; weights.len()];
    strata_offspring(weights, &offsets)
}

/// Count positions `(i + offset_i)·total/P` per cumulative interval.
///
/// Offsets lie in `(0, 1]`, so positions lie in `(0, total]` and the
/// left-open search never selects a zero-weight particle. Each stratum
/// contributes exactly one position, so the counts sum to `P` structurally.
fn strata_offspring(weights: &WeightSet, offsets: &[f64]) -> OffspringVector {
    let particles = weights.len();
    let cum = prefix_sum(weights);
    let total = cum.total();
    let width_scale = total / particles as f64;

    let hits: Vec<usize> = offsets
        .par_iter()
        .enumerate()
        .with_min_len(PAR_MIN_LEN)
        .map(|(stratum, &u)| {
            let position = ((stratum as f64 + u) * width_scale).min(total);
            cum.values().partition_point(|&c| c < position)
        })
        .collect();

    let mut counts = vec![0usize; particles];
    for hit in hits {
        counts[hit] += 1;
    }
    OffspringVector::new(counts).expect("one position per stratum")
}

/// Metropolis resampling: slot `i` runs an independent `iterations`-step
/// Markov chain over particle indices, started at `i`, with uniform proposals
/// and acceptance probability `min(1, w_j / w_k)`; the final state is the
/// ancestor.
///
/// Only pairwise weight ratios are evaluated, so no collective pass over the
/// weights is needed. A chain sitting on a zero-weight particle accepts any
/// proposal; a zero-weight proposal against a positive-weight state is
/// rejected. `iterations = 0` returns identity ancestry (useful in tests;
/// [`ResampleConfig::validate`] requires at least one iteration).
pub fn metropolis(weights: &WeightSet, iterations: u32, seed: u64) -> AncestorVector {
    let particles = weights.len();
    let w = weights.weights();
    let parents: Vec<usize> = (0..particles)
        .into_par_iter()
        .with_min_len(64)
        .map(|slot| {
            let mut stream = Stream::new(seed, slot as u64);
            metropolis_chain(w, slot, iterations, &mut stream)
        })
        .collect();
    AncestorVector::new(parents).expect("chain states are particle indices")
}

/// One Metropolis chain over particle indices; shared with the tuning module's
/// convergence checker. Consumes exactly two 64-bit draws per iteration.
pub(crate) fn metropolis_chain(
    weights: &[f64],
    start: usize,
    iterations: u32,
    stream: &mut Stream,
) -> usize {
    let particles = weights.len();
    let mut state = start;
    for _ in 0..iterations {
        let proposal = stream.next_index(particles);
        let u = stream.next_f64();
        let w_state = weights[state];
        let w_proposal = weights[proposal];
        let accept = if w_state == 0.0 {
            true
        } else if w_proposal == 0.0 {
            false
        } else {
            u <= w_proposal / w_state
        };
        if accept {
            state = proposal;
        }
    }
    state
}

/// Cumulative weights of a set, exposed for callers that reuse the scan.
pub fn cumulative(weights: &WeightSet) -> CumulativeWeights {
    prefix_sum(weights)
}
