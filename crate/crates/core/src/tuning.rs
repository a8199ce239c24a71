//! Choosing the Metropolis iteration count.
//!
//! Whether a Metropolis chain has mixed is governed by the heaviest particle:
//! track the binary process "the chain currently sits on the heaviest
//! particle". Under uniform proposals this process is a two-state Markov
//! chain: the chance of proposing (and always accepting) the heaviest particle
//! is `beta = 1/P`, and the chance of leaving it is
//! `alpha = (1 - w_max) / (P * w_max)` with `w_max` the largest normalised
//! weight. Requiring the chain's `B`-step distribution to sit within `epsilon`
//! of `w_max` gives the closed-form iteration count of
//! [`required_iterations`].
//!
//! [`verify_convergence`] checks the bound empirically by running real
//! Metropolis chains from both a heaviest-particle start and an
//! elsewhere start.

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::error::Error;
use crate::resamplers::metropolis_chain;
use crate::rng::Stream;
use crate::weights::WeightSet;

/// Two-state chain parameters for the heaviest-particle process.
///
/// State 0 of the transition matrix means "on the heaviest particle", state 1
/// means "elsewhere".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    pub particles: usize,
    /// Largest normalised weight (or an upper tolerance for it), in `[1/P, 1]`.
    pub w_max: f64,
    /// Convergence tolerance in `(0, 1)`.
    pub epsilon: f64,
    /// Probability of stepping off the heaviest particle.
    pub alpha: f64,
    /// Probability of stepping onto the heaviest particle; exactly `1/P`.
    pub beta: f64,
    /// `1 - alpha - beta`, the chain's second eigenvalue.
    pub lambda: f64,
}

/// Build [`ChainParams`] from a particle count, a `w_max` tolerance and a
/// convergence tolerance.
pub fn chain_params(particles: usize, w_max: f64, epsilon: f64) -> Result<ChainParams, Error> {
    if particles < 2 {
        return Err(Error::Domain("particle count must be at least 2"));
    }
    if !epsilon.is_finite() || epsilon <= 0.0 || epsilon >= 1.0 {
        return Err(Error::Domain("epsilon must lie in (0, 1)"));
    }
    if !w_max.is_finite() || w_max > 1.0 {
        return Err(Error::Domain("w_max must lie in [1/P, 1]"));
    }
    if w_max < 1.0 / particles as f64 {
        // the largest of P normalised weights cannot be below 1/P
        return Err(Error::Domain("w_max below 1/P"));
    }
    let alpha = (1.0 - w_max) / (particles as f64 * w_max);
    let beta = 1.0 / particles as f64;
    Ok(ChainParams {
        particles,
        w_max,
        epsilon,
        alpha,
        beta,
        lambda: 1.0 - alpha - beta,
    })
}

/// Closed-form `l`-step transition matrix of the two-state chain.
///
/// Row 0 conditions on starting at the heaviest particle, row 1 on starting
/// elsewhere; column 0 is the probability of being at the heaviest particle
/// after `l` steps. Equals the numerical `l`-th matrix power of the one-step
/// matrix.
pub fn l_step_matrix(params: &ChainParams, steps: u32) -> Result<[[f64; 2]; 2], Error> {
    let s = params.alpha + params.beta;
    if s == 0.0 {
        return Err(Error::DegenerateChain);
    }
    let (alpha, beta) = (params.alpha, params.beta);
    let decay = params.lambda.powi(steps as i32);
    Ok([
        [(beta + decay * alpha) / s, (alpha - decay * alpha) / s],
        [(beta - decay * beta) / s, (alpha + decay * beta) / s],
    ])
}

/// A particle count / tolerance pair resolved to an iteration count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetropolisSchedule {
    pub params: ChainParams,
    /// Iteration count `B`; always satisfies
    /// `lambda^B <= epsilon*(alpha+beta)/max(alpha,beta)` exactly.
    pub iterations: u32,
}

/// Smallest iteration count whose `B`-step distribution is within `epsilon`
/// of the stationary one: `B >= log(eps*(alpha+beta)/max(alpha,beta)) / log(lambda)`,
/// rounded up and clamped to at least 1.
///
/// `lambda <= 0` (uniform weights) mixes in a single step. The floating-point
/// ceiling is validated against the exact rational inequality and bumped if
/// rounding made it one short.
pub fn required_iterations(params: &ChainParams) -> MetropolisSchedule {
    let iterations = if params.lambda <= 0.0 {
        1
    } else {
        let margin = params.epsilon * (params.alpha + params.beta) / params.alpha.max(params.beta);
        if margin >= 1.0 {
            1
        } else {
            let mut b = (margin.ln() / params.lambda.ln()).ceil().max(1.0) as u32;
            while !decay_bound_holds(params, b) {
                b += 1;
            }
            b
        }
    };
    MetropolisSchedule {
        params: *params,
        iterations,
    }
}

/// Exact-rational check of `lambda^B <= epsilon*(alpha+beta)/max(alpha,beta)`.
///
/// All quantities are taken as the exact rationals of the stored `f64` fields,
/// with `lambda` recomputed exactly as `1 - alpha - beta`, so no floating-point
/// rounding can fake the inequality.
pub fn decay_bound_holds(params: &ChainParams, iterations: u32) -> bool {
    let (alpha_m, alpha_e) = decompose(params.alpha);
    let (beta_m, beta_e) = decompose(params.beta);
    let (eps_m, eps_e) = decompose(params.epsilon);
    let max_f = params.alpha.max(params.beta);
    let (max_m, max_e) = decompose(max_f);

    // common binary scale for alpha, beta and 1
    let e = alpha_e.min(beta_e).min(-1);
    let alpha_n = BigUint::from(alpha_m) << usize::try_from(alpha_e - e).expect("scaled up");
    let beta_n = BigUint::from(beta_m) << usize::try_from(beta_e - e).expect("scaled up");
    let one_n = BigUint::from(1u8) << usize::try_from(-e).expect("e <= -1");
    let ab_n = &alpha_n + &beta_n;
    if ab_n >= one_n {
        // lambda <= 0; within the valid domain this means lambda == 0
        return true;
    }
    let lambda_n = one_n - &ab_n;

    // lambda^B * max  vs  epsilon * (alpha + beta), as  X*2^p  vs  Y*2^q
    let x = lambda_n.pow(iterations) * BigUint::from(max_m);
    let y = BigUint::from(eps_m) * ab_n;
    let p = e * i64::from(iterations) + max_e;
    let q = eps_e + e;
    if p >= q {
        (x << usize::try_from(p - q).expect("non-negative")) <= y
    } else {
        x <= (y << usize::try_from(q - p).expect("non-negative"))
    }
}

/// Exact mantissa/exponent split of a non-negative finite `f64`:
/// `value = mantissa * 2^exponent`.
fn decompose(x: f64) -> (u64, i64) {
    debug_assert!(x.is_finite() && x >= 0.0);
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    let fraction = bits & ((1u64 << 52) - 1);
    if raw_exp == 0 {
        (fraction, -1074)
    } else {
        (fraction | (1 << 52), raw_exp - 1075)
    }
}

/// Outcome of a Monte Carlo convergence check.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceReport {
    /// Largest normalised weight observed in the checked weight set.
    pub w_max: f64,
    pub epsilon: f64,
    pub iterations: u32,
    pub trials: usize,
    /// Fraction of chains started on the heaviest particle that end on it.
    pub freq_from_heaviest: f64,
    /// Fraction of chains started elsewhere that end on the heaviest particle.
    pub freq_from_elsewhere: f64,
    /// Binomial standard error of the frequencies.
    pub mc_sigma: f64,
    pub pass_from_heaviest: bool,
    pub pass_from_elsewhere: bool,
    /// Set when `trials` is too small to resolve `epsilon` (`mc_sigma >= epsilon/2`).
    pub undersampled: bool,
}

impl ConvergenceReport {
    pub fn pass(&self) -> bool {
        self.pass_from_heaviest && self.pass_from_elsewhere
    }
}

/// Run `trials` independent Metropolis chains for the scheduled iteration
/// count from both a heaviest-particle start and an elsewhere start, and
/// compare the frequency of ending on the heaviest particle against `w_max`.
///
/// A frequency passes when `|freq - w_max| <= epsilon + 3*mc_sigma`.
pub fn verify_convergence(
    weights: &WeightSet,
    schedule: &MetropolisSchedule,
    trials: usize,
    seed: u64,
) -> Result<ConvergenceReport, Error> {
    if trials == 0 {
        return Err(Error::Domain("trials must be positive"));
    }
    if weights.len() != schedule.params.particles {
        return Err(Error::LengthMismatch {
            left: weights.len(),
            right: schedule.params.particles,
        });
    }
    let w_max = weights.max_normalized();
    if w_max > schedule.params.w_max * (1.0 + 1e-9) {
        return Err(Error::ScheduleMismatch {
            scheduled: schedule.params.w_max,
            observed: w_max,
        });
    }

    let w = weights.weights();
    let heaviest = w
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty");
    let particles = w.len();
    let iterations = schedule.iterations;

    let count_hits = |start_of: &(dyn Fn(usize) -> usize + Sync), stream_base: u64| -> usize {
        (0..trials)
            .into_par_iter()
            .with_min_len(256)
            .filter(|&t| {
                let mut stream = Stream::new(seed, stream_base + t as u64);
                metropolis_chain(w, start_of(t), iterations, &mut stream) == heaviest
            })
            .count()
    };

    let from_heaviest = count_hits(&|_| heaviest, 0);
    // spread elsewhere starts across the non-heaviest indices
    let elsewhere = move |t: usize| {
        let k = t % (particles - 1);
        if k >= heaviest {
            k + 1
        } else {
            k
        }
    };
    let from_elsewhere = count_hits(&elsewhere, trials as u64);

    let freq_from_heaviest = from_heaviest as f64 / trials as f64;
    let freq_from_elsewhere = from_elsewhere as f64 / trials as f64;
    let mc_sigma = (w_max * (1.0 - w_max) / trials as f64).sqrt();
    let band = schedule.params.epsilon + 3.0 * mc_sigma;
    Ok(ConvergenceReport {
        w_max,
        epsilon: schedule.params.epsilon,
        iterations,
        trials,
        freq_from_heaviest,
        freq_from_elsewhere,
        mc_sigma,
        pass_from_heaviest: (freq_from_heaviest - w_max).abs() <= band,
        pass_from_elsewhere: (freq_from_elsewhere - w_max).abs() <= band,
        undersampled: mc_sigma >= schedule.params.epsilon / 2.0,
    })
}
