//! A small one-dimensional linear-Gaussian bootstrap particle filter.
//!
//! The state follows `x_t = phi * x_{t-1} + N(0, q^2)` and is observed through
//! `y_t = x_t + N(0, r^2)`. Proposals come from the transition itself, so each
//! step's incremental weight is just the observation likelihood. After every
//! resampling pass all weights reset to `1/P`. A closed-form Gaussian filter
//! over the same model gives exact posterior means to test against.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use resample_core::rng::{derive_seed, Stream};
use resample_core::{resample, Error, ResampleConfig, WeightSet};

/// Demo filter configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterDemoSpec {
    /// Number of observation steps `T`.
    pub steps: usize,
    pub particles: usize,
    /// State transition coefficient.
    pub transition: f64,
    /// Process noise standard deviation (zero gives the deterministic limit).
    pub process_std: f64,
    /// Observation noise standard deviation.
    pub observation_std: f64,
    pub initial_mean: f64,
    pub initial_std: f64,
    /// Resampler applied every step; `None` runs pure sequential importance
    /// sampling (weights accumulate, showing degeneracy).
    pub resampler: Option<ResampleConfig>,
    pub seed: u64,
}

impl FilterDemoSpec {
    fn validate(&self) -> Result<(), Error> {
        if self.steps == 0 {
            return Err(Error::Domain("need at least one step"));
        }
        if self.particles == 0 {
            return Err(Error::Domain("need at least one particle"));
        }
        for std in [self.process_std, self.observation_std, self.initial_std] {
            if !std.is_finite() || std < 0.0 {
                return Err(Error::Domain("noise deviations must be non-negative"));
            }
        }
        if !self.transition.is_finite() || !self.initial_mean.is_finite() {
            return Err(Error::Domain("model parameters must be finite"));
        }
        if let Some(cfg) = &self.resampler {
            cfg.validate()?;
        }
        Ok(())
    }
}

/// Per-step filter diagnostics, taken after weighting and before resampling.
#[derive(Debug, Clone, Copy)]
pub struct StepStats {
    /// 1-based time index.
    pub time: usize,
    pub truth: f64,
    pub observation: f64,
    /// Weighted posterior mean estimate.
    pub mean: f64,
    /// Weighted posterior variance estimate.
    pub variance: f64,
    pub ess: f64,
    /// All incremental weights underflowed; weights were reset to uniform.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct FilterDemoResult {
    pub steps: Vec<StepStats>,
}

impl FilterDemoResult {
    pub fn min_ess(&self) -> f64 {
        self.steps.iter().map(|s| s.ess).fold(f64::INFINITY, f64::min)
    }

    pub fn degenerate_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.degenerate).count()
    }
}

// sub-seed tags
const TAG_TRUTH: u64 = 0;
const TAG_INIT: u64 = 1;
const TAG_PROPAGATE: u64 = 2;

fn normal(stream: &mut Stream) -> f64 {
    StandardNormal.sample(stream)
}

/// Run the bootstrap filter over a simulated trajectory.
pub fn demo_filter(spec: &FilterDemoSpec) -> Result<FilterDemoResult, Error> {
    spec.validate()?;
    let particles = spec.particles;

    // simulate truth and observations
    let mut truth_stream = Stream::new(derive_seed(spec.seed, TAG_TRUTH), 0);
    let mut truth = Vec::with_capacity(spec.steps + 1);
    truth.push(spec.initial_mean + spec.initial_std * normal(&mut truth_stream));
    let mut observations = Vec::with_capacity(spec.steps);
    for t in 0..spec.steps {
        let next = spec.transition * truth[t] + spec.process_std * normal(&mut truth_stream);
        truth.push(next);
        observations.push(next + spec.observation_std * normal(&mut truth_stream));
    }

    let init_seed = derive_seed(spec.seed, TAG_INIT);
    let mut states: Vec<f64> = (0..particles)
        .into_par_iter()
        .with_min_len(1024)
        .map(|i| {
            let mut stream = Stream::new(init_seed, i as u64);
            spec.initial_mean + spec.initial_std * normal(&mut stream)
        })
        .collect();
    let mut carried = vec![1.0f64; particles];

    let propagate_seed = derive_seed(spec.seed, TAG_PROPAGATE);
    let mut steps = Vec::with_capacity(spec.steps);
    for t in 0..spec.steps {
        let y = observations[t];
        states
            .par_iter_mut()
            .enumerate()
            .with_min_len(1024)
            .for_each(|(i, x)| {
                let mut stream = Stream::new(propagate_seed, ((t as u64) << 32) | i as u64);
                *x = spec.transition * *x + spec.process_std * normal(&mut stream);
            });

        // incremental weight: observation likelihood (constants cancel)
        let likelihood = |x: f64| {
            if spec.observation_std == 0.0 {
                if x == y {
                    1.0
                } else {
                    0.0
                }
            } else {
                let z = (y - x) / spec.observation_std;
                (-0.5 * z * z).exp()
            }
        };
        let mut degenerate = false;
        let mut weights: Vec<f64> = states
            .iter()
            .zip(&carried)
            .map(|(&x, &c)| c * likelihood(x))
            .collect();
        if weights.iter().all(|&w| w == 0.0) {
            degenerate = true;
            weights.iter_mut().for_each(|w| *w = 1.0);
        }

        let weight_set = WeightSet::new(weights.clone()).expect("positive after reset");
        let v = weight_set.normalized();
        let mean: f64 = v.iter().zip(&states).map(|(vi, x)| vi * x).sum();
        let variance: f64 = v
            .iter()
            .zip(&states)
            .map(|(vi, x)| vi * (x - mean) * (x - mean))
            .sum();
        steps.push(StepStats {
            time: t + 1,
            truth: truth[t + 1],
            observation: y,
            mean,
            variance,
            ess: weight_set.ess(),
            degenerate,
        });

        match &spec.resampler {
            Some(cfg) => {
                let step_cfg = ResampleConfig {
                    seed: derive_seed(cfg.seed, t as u64),
                    ..*cfg
                };
                let ancestors = resample(&weight_set, &step_cfg)?.ancestors();
                states = ancestors.parents().iter().map(|&p| states[p]).collect();
                carried.iter_mut().for_each(|c| *c = 1.0);
            }
            None => {
                // carry normalised weights to keep magnitudes in range
                carried.copy_from_slice(&v);
            }
        }
    }

    Ok(FilterDemoResult { steps })
}
