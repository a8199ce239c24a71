//! Simulated weight sets.
//!
//! Benchmark weights are drawn from a symmetric Dirichlet distribution: `P`
//! independent Gamma(alpha, 1) variates, normalised. Small concentration
//! parameters give severely uneven weights (low effective sample size), large
//! ones give nearly uniform weights.

use rand_distr::{Distribution, Gamma};

use crate::error::Error;
use crate::rng::{derive_seed, Stream};
use crate::weights::WeightSet;

/// One cell of the simulated-weights design: a particle count, a symmetric
/// Dirichlet concentration and a seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletSpec {
    pub particles: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl DirichletSpec {
    pub fn new(particles: usize, alpha: f64, seed: u64) -> Result<Self, Error> {
        if particles < 2 {
            return Err(Error::Domain("particle count must be at least 2"));
        }
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::Domain("dirichlet alpha must be positive"));
        }
        Ok(Self {
            particles,
            alpha,
            seed,
        })
    }
}

/// Draw replicate 0 of the spec. See [`sample_dirichlet_replicate`].
pub fn sample_dirichlet(spec: &DirichletSpec) -> WeightSet {
    sample_dirichlet_replicate(spec, 0)
}

/// Draw one weight set; each `(spec, replicate)` pair has its own stream, so
/// draws are reproducible bit-for-bit and independent across replicates.
///
/// Gamma variates use the Marsaglia-Tsang rejection sampler, with the
/// `Gamma(alpha + 1) * U^(1/alpha)` boost for `alpha < 1`; both are exact, so
/// the severe small-alpha regime keeps its distribution. Weights are returned
/// normalised (resamplers are scale invariant regardless).
pub fn sample_dirichlet_replicate(spec: &DirichletSpec, replicate: u64) -> WeightSet {
    let mut stream = Stream::new(spec.seed, replicate);
    let gamma = Gamma::new(spec.alpha, 1.0).expect("alpha validated positive");
    let mut draws: Vec<f64> = (0..spec.particles)
        .map(|_| gamma.sample(&mut stream))
        .collect();
    let total: f64 = crate::weights::pairwise_sum(&draws);
    if total > 0.0 {
        for d in &mut draws {
            *d /= total;
        }
    } else {
        // all variates underflowed (only reachable at extreme alpha);
        // degenerate to a single surviving particle
        let winner = stream.next_index(spec.particles);
        draws.iter_mut().for_each(|d| *d = 0.0);
        draws[winner] = 1.0;
    }
    WeightSet::new(draws).expect("normalised draws are a valid weight set")
}

/// Particle-count / concentration grid for the simulated-weights experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// `P = 256, 512, ..., 65536` crossed with `alpha = 10, 1, 0.1, 0.01`.
    Paper,
    /// The same grid with `P` capped (laptop-friendly).
    Desk { max_particles: usize },
}

impl GridKind {
    /// Desk grid at the default cap.
    pub fn desk() -> Self {
        GridKind::Desk {
            max_particles: DESK_MAX_PARTICLES,
        }
    }
}

pub const DESK_MAX_PARTICLES: usize = 16_384;

/// Concentration values of the experiment grid, most to least uniform.
pub const GRID_ALPHAS: [f64; 4] = [10.0, 1.0, 0.1, 0.01];

const GRID_MIN_PARTICLES: usize = 256;
const GRID_MAX_PARTICLES: usize = 65_536;

/// Cross product of the grid, one [`DirichletSpec`] per cell with a seed
/// derived from `(seed, cell index)`. Cells iterate alpha-major in
/// [`GRID_ALPHAS`] order, particle counts ascending within each alpha.
pub fn grid(kind: GridKind, seed: u64) -> Vec<DirichletSpec> {
    let cap = match kind {
        GridKind::Paper => GRID_MAX_PARTICLES,
        GridKind::Desk { max_particles } => max_particles.min(GRID_MAX_PARTICLES),
    };
    let mut cells = Vec::new();
    for &alpha in &GRID_ALPHAS {
        let mut particles = GRID_MIN_PARTICLES;
        while particles <= cap {
            let cell_seed = derive_seed(seed, cells.len() as u64);
            cells.push(DirichletSpec {
                particles,
                alpha,
                seed: cell_seed,
            });
            particles *= 2;
        }
    }
    cells
}
