//! Accuracy/runtime measurements over the simulated-weights grid.
//!
//! Every cell of the grid draws one fresh weight set per replicate and runs
//! every requested scheme on that same draw, so error comparisons between
//! schemes are paired. Timing wraps the resampling call alone (weight
//! generation and representation conversion are outside the clock) with a few
//! warm-up calls per cell, and cells run one after another so each measurement
//! has the worker pool to itself.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use resample_core::rng::derive_seed;
use resample_core::simdata::{grid, sample_dirichlet_replicate, DirichletSpec, GridKind};
use resample_core::tuning::{chain_params, required_iterations};
use resample_core::{resample, resampling_error, Error, ResampleConfig, Scheme};

/// A scheme plus its presort variant flag, as named on the command line
/// (`multinomial`, `multinomial-presort`, `stratified`, `systematic`,
/// `metropolis`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SchemeSpec {
    pub scheme: Scheme,
    pub presort: bool,
}

impl SchemeSpec {
    pub fn new(scheme: Scheme) -> Self {
        Self {
            scheme,
            presort: false,
        }
    }

    /// Stable ordering used for reports: multinomial, multinomial-presort,
    /// stratified, systematic, metropolis.
    pub fn rank(&self) -> u8 {
        match (self.scheme, self.presort) {
            (Scheme::Multinomial, false) => 0,
            (Scheme::Multinomial, true) => 1,
            (Scheme::Stratified, _) => 2,
            (Scheme::Systematic, _) => 3,
            (Scheme::Metropolis, _) => 4,
        }
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.presort {
            write!(f, "{}-presort", self.scheme)
        } else {
            write!(f, "{}", self.scheme)
        }
    }
}

impl FromStr for SchemeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let (name, presort) = match s.strip_suffix("-presort") {
            Some(base) => (base, true),
            None => (s, false),
        };
        let scheme = Scheme::from_str(name)?;
        if presort && scheme != Scheme::Multinomial {
            return Err(Error::InvalidConfig(
                "presort applies to the multinomial scheme only",
            ));
        }
        Ok(Self { scheme, presort })
    }
}

/// All five scheme variants in report order.
pub fn all_schemes() -> Vec<SchemeSpec> {
    vec![
        SchemeSpec::new(Scheme::Multinomial),
        SchemeSpec {
            scheme: Scheme::Multinomial,
            presort: true,
        },
        SchemeSpec::new(Scheme::Stratified),
        SchemeSpec::new(Scheme::Systematic),
        SchemeSpec::new(Scheme::Metropolis),
    ]
}

/// The four base schemes (no presort variant).
pub fn default_schemes() -> Vec<SchemeSpec> {
    vec![
        SchemeSpec::new(Scheme::Multinomial),
        SchemeSpec::new(Scheme::Stratified),
        SchemeSpec::new(Scheme::Systematic),
        SchemeSpec::new(Scheme::Metropolis),
    ]
}

/// Benchmark configuration.
#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub grid: GridKind,
    pub schemes: Vec<SchemeSpec>,
    /// Fresh weight draws per cell; error statistics use all of them.
    pub error_replicates: usize,
    /// Leading replicates whose wall times enter the timing statistics.
    pub timing_replicates: usize,
    pub seed: u64,
    /// Convergence tolerance handed to the Metropolis iteration bound.
    pub epsilon: f64,
    /// Pilot draws per cell for the `w_max` tolerance (its 99th percentile).
    pub pilot_draws: usize,
    /// Untimed calls per (cell, scheme) before measuring.
    pub warmup: usize,
}

impl BenchOptions {
    pub fn new(grid: GridKind, seed: u64) -> Self {
        Self {
            grid,
            schemes: default_schemes(),
            error_replicates: 1000,
            timing_replicates: 100,
            seed,
            epsilon: 0.01,
            pilot_draws: 100,
            warmup: 3,
        }
    }
}

/// One measurement: a scheme run once on one weight draw.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub scheme: SchemeSpec,
    pub particles: usize,
    pub alpha: f64,
    pub replicate: usize,
    pub error: f64,
    pub wall_ns: u64,
    /// Iteration count used, Metropolis only.
    pub metropolis_iterations: Option<u32>,
}

/// A cell that could not run a scheme; the benchmark continues without it.
#[derive(Debug, Clone)]
pub struct CellFailure {
    pub particles: usize,
    pub alpha: f64,
    pub scheme: SchemeSpec,
    pub message: String,
}

/// Everything a benchmark run produced.
#[derive(Debug, Clone)]
pub struct BenchRun {
    pub options: BenchOptions,
    pub records: Vec<TrialRecord>,
    pub failures: Vec<CellFailure>,
}

// sub-seed tags under each cell seed
const TAG_WEIGHTS: u64 = 0;
const TAG_RESAMPLE: u64 = 1;
const TAG_PILOT: u64 = 2;
const TAG_WARMUP: u64 = 3;

/// Nearest-rank 99th percentile of the largest normalised weight over the
/// cell's pilot draws; the Metropolis `w_max` tolerance for that cell.
fn pilot_w_max_tolerance(cell: &DirichletSpec, pilot_seed: u64, draws: usize) -> f64 {
    let pilot = DirichletSpec {
        seed: pilot_seed,
        ..*cell
    };
    let mut maxima: Vec<f64> = (0..draws as u64)
        .map(|r| sample_dirichlet_replicate(&pilot, r).max_normalized())
        .collect();
    maxima.sort_unstable_by(f64::total_cmp);
    let rank = ((0.99 * draws as f64).ceil() as usize).clamp(1, draws);
    maxima[rank - 1]
}

/// The Metropolis iteration count a benchmark run uses for this cell: pilot
/// draws set the `w_max` tolerance, the two-state bound turns it into an
/// iteration count.
pub fn cell_metropolis_iterations(
    cell: &DirichletSpec,
    epsilon: f64,
    pilot_draws: usize,
) -> Result<u32, Error> {
    let pilot_seed = derive_seed(cell.seed, TAG_PILOT);
    let tolerance = pilot_w_max_tolerance(cell, pilot_seed, pilot_draws);
    let params = chain_params(cell.particles, tolerance, epsilon)?;
    Ok(required_iterations(&params).iterations)
}

/// Run the full grid. Per-cell scheme failures are recorded and skipped; any
/// other cell keeps running.
pub fn run_benchmark(options: &BenchOptions) -> Result<BenchRun, Error> {
    if options.error_replicates == 0 {
        return Err(Error::Domain("at least one replicate is required"));
    }
    if options.schemes.is_empty() {
        return Err(Error::Domain("at least one scheme is required"));
    }

    let mut records = Vec::new();
    let mut failures = Vec::new();

    for cell in grid(options.grid, options.seed) {
        let weight_seed = derive_seed(cell.seed, TAG_WEIGHTS);
        let resample_seed = derive_seed(cell.seed, TAG_RESAMPLE);
        let warmup_seed = derive_seed(cell.seed, TAG_WARMUP);

        // resolve the Metropolis iteration count for this cell
        let needs_metropolis = options
            .schemes
            .iter()
            .any(|s| s.scheme == Scheme::Metropolis);
        let metropolis_iterations = if needs_metropolis {
            match cell_metropolis_iterations(&cell, options.epsilon, options.pilot_draws) {
                Ok(iterations) => Some(iterations),
                Err(err) => {
                    failures.push(CellFailure {
                        particles: cell.particles,
                        alpha: cell.alpha,
                        scheme: SchemeSpec::new(Scheme::Metropolis),
                        message: err.to_string(),
                    });
                    None
                }
            }
        } else {
            None
        };

        let configured: Vec<(SchemeSpec, ResampleConfig)> = options
            .schemes
            .iter()
            .filter(|spec| spec.scheme != Scheme::Metropolis || metropolis_iterations.is_some())
            .map(|spec| {
                let mut cfg = ResampleConfig::new(spec.scheme, 0).with_presort(spec.presort);
                if let Some(b) = metropolis_iterations {
                    if spec.scheme == Scheme::Metropolis {
                        cfg = cfg.with_metropolis_iterations(b);
                    }
                }
                (*spec, cfg)
            })
            .collect();

        let weight_spec = DirichletSpec {
            seed: weight_seed,
            ..cell
        };

        for warmup in 0..options.warmup as u64 {
            let w = sample_dirichlet_replicate(
                &DirichletSpec {
                    seed: warmup_seed,
                    ..cell
                },
                warmup,
            );
            for (_, cfg) in &configured {
                let cfg = ResampleConfig {
                    seed: derive_seed(warmup_seed, warmup),
                    ..*cfg
                };
                let _ = resample(&w, &cfg)?;
            }
        }

        for replicate in 0..options.error_replicates {
            let w = sample_dirichlet_replicate(&weight_spec, replicate as u64);
            for (index, (spec, cfg)) in configured.iter().enumerate() {
                let cfg = ResampleConfig {
                    seed: derive_seed(resample_seed, ((index as u64) << 32) | replicate as u64),
                    ..*cfg
                };
                let started = Instant::now();
                let out = resample(&w, &cfg)?;
                let wall_ns = (started.elapsed().as_nanos() as u64).max(1);
                let error = resampling_error(&out.offspring(), &w)?;
                records.push(TrialRecord {
                    scheme: *spec,
                    particles: cell.particles,
                    alpha: cell.alpha,
                    replicate,
                    error,
                    wall_ns,
                    metropolis_iterations: if spec.scheme == Scheme::Metropolis {
                        metropolis_iterations
                    } else {
                        None
                    },
                });
            }
        }
    }

    Ok(BenchRun {
        options: options.clone(),
        records,
        failures,
    })
}

/// Per-cell aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub scheme: SchemeSpec,
    pub particles: usize,
    pub alpha: f64,
    pub error_replicates: usize,
    pub mean_error: f64,
    pub error_se: f64,
    pub timing_replicates: usize,
    pub mean_wall_ns: f64,
    pub median_wall_ns: f64,
    pub wall_se: f64,
    pub metropolis_iterations: Option<u32>,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Aggregate records per (scheme, particles, alpha). Timing statistics use
/// only the leading `timing_replicates` replicates of each cell.
pub fn summarize(run: &BenchRun) -> Result<Vec<CellSummary>, Error> {
    if run.records.is_empty() {
        return Err(Error::Domain("no records to summarize"));
    }

    let mut keys: Vec<(u8, usize, u64)> = run
        .records
        .iter()
        .map(|r| (r.scheme.rank(), r.particles, r.alpha.to_bits()))
        .collect();
    keys.sort_unstable();
    keys.dedup();

    let mut summaries = Vec::with_capacity(keys.len());
    for (rank, particles, alpha_bits) in keys {
        let alpha = f64::from_bits(alpha_bits);
        let cell: Vec<&TrialRecord> = run
            .records
            .iter()
            .filter(|r| {
                r.scheme.rank() == rank && r.particles == particles && r.alpha == alpha
            })
            .collect();
        let errors: Vec<f64> = cell.iter().map(|r| r.error).collect();
        let (mean_error, error_se) = mean_and_se(&errors);

        let mut walls: Vec<f64> = cell
            .iter()
            .filter(|r| r.replicate < run.options.timing_replicates)
            .map(|r| r.wall_ns as f64)
            .collect();
        if walls.is_empty() {
            // fewer error replicates than the timing budget: use them all
            walls = cell.iter().map(|r| r.wall_ns as f64).collect();
        }
        let (mean_wall_ns, wall_se) = mean_and_se(&walls);
        walls.sort_unstable_by(f64::total_cmp);

        summaries.push(CellSummary {
            scheme: cell[0].scheme,
            particles,
            alpha,
            error_replicates: errors.len(),
            mean_error,
            error_se,
            timing_replicates: walls.len(),
            mean_wall_ns,
            median_wall_ns: median(&walls),
            wall_se,
            metropolis_iterations: cell[0].metropolis_iterations,
        });
    }

    // report order: alpha panels most-to-least uniform, then particle count,
    // then scheme rank
    summaries.sort_by(|a, b| {
        b.alpha
            .total_cmp(&a.alpha)
            .then(a.particles.cmp(&b.particles))
            .then(a.scheme.rank().cmp(&b.scheme.rank()))
    });
    Ok(summaries)
}
