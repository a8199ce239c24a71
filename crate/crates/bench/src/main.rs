use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use resample_bench::harness::{all_schemes, default_schemes, BenchOptions, SchemeSpec};
use resample_bench::report::{
    format_float, render_svg, write_error_csv, write_summary_csv, write_timing_csv, SvgMetric,
};
use resample_bench::{demo_filter, run_benchmark, summarize, FilterDemoSpec};
use resample_core::simdata::{sample_dirichlet_replicate, DirichletSpec, GridKind};
use resample_core::tuning::{chain_params, required_iterations};
use resample_core::{resample, ResampleConfig, Resampled, Scheme, WeightSet};

/// Particle filter resampling benchmarks and utilities.
#[derive(Parser)]
#[command(name = "resample-bench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a symmetric Dirichlet weight set and write it as a weight file.
    SimulateWeights {
        #[arg(long)]
        particles: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replicate index within the (particles, alpha, seed) stream.
        #[arg(long, default_value_t = 0)]
        replicate: u64,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Resample a weight file and write ancestor indices or offspring counts.
    Resample {
        /// Weight file as written by simulate-weights.
        #[arg(long)]
        weights: PathBuf,
        /// multinomial, multinomial-presort, stratified, systematic or metropolis.
        #[arg(long)]
        scheme: SchemeSpec,
        /// Metropolis iteration count; derived from the file's w_max when omitted.
        #[arg(long)]
        iterations: Option<u32>,
        /// Convergence tolerance used when deriving the iteration count.
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form Metropolis iteration count for a particle count and w_max tolerance.
    TuneB {
        #[arg(long)]
        particles: usize,
        #[arg(long)]
        wmax: f64,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
    },
    /// Run the accuracy/runtime benchmark over the simulated-weights grid.
    Bench {
        /// desk or paper.
        #[arg(long, default_value = "desk")]
        grid: String,
        /// Cap on the desk grid's particle count.
        #[arg(long)]
        max_particles: Option<usize>,
        /// Comma-separated scheme list, or "all" for every variant.
        #[arg(long, default_value = "multinomial,stratified,systematic,metropolis")]
        schemes: String,
        /// Weight draws per cell for error statistics.
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        /// Leading replicates used for timing statistics.
        #[arg(long, default_value_t = 100)]
        timing_replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Metropolis convergence tolerance.
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        /// Pilot draws per cell for the w_max tolerance.
        #[arg(long, default_value_t = 100)]
        pilot_draws: usize,
        /// Output directory for CSV and SVG reports.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the linear-Gaussian bootstrap filter demo and write per-step stats.
    DemoFilter {
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, default_value_t = 8192)]
        particles: usize,
        #[arg(long, default_value = "systematic")]
        scheme: SchemeSpec,
        /// Metropolis iteration count; derived from --wmax-tolerance when omitted.
        #[arg(long)]
        iterations: Option<u32>,
        #[arg(long, default_value_t = 0.05)]
        wmax_tolerance: f64,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.9)]
        transition: f64,
        #[arg(long, default_value_t = 0.5)]
        process_noise: f64,
        #[arg(long, default_value_t = 1.0)]
        observation_noise: f64,
        #[arg(long, default_value_t = 0.0)]
        initial_mean: f64,
        #[arg(long, default_value_t = 1.0)]
        initial_noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Disable resampling (sequential importance sampling).
        #[arg(long)]
        no_resample: bool,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SimulateWeights {
            particles,
            alpha,
            seed,
            replicate,
            out,
        } => {
            let spec = DirichletSpec::new(particles, alpha, seed)?;
            let weights = sample_dirichlet_replicate(&spec, replicate);
            with_output(out.as_deref(), |w| write_weight_file(&spec, &weights, w))
        }
        Command::Resample {
            weights,
            scheme,
            iterations,
            epsilon,
            seed,
            out,
        } => {
            let weight_set = read_weight_file(&weights)
                .with_context(|| format!("reading {}", weights.display()))?;
            let mut cfg = ResampleConfig::new(scheme.scheme, seed).with_presort(scheme.presort);
            if scheme.scheme == Scheme::Metropolis {
                let b = match iterations {
                    Some(b) => b,
                    None => {
                        let params =
                            chain_params(weight_set.len(), weight_set.max_normalized(), epsilon)?;
                        let b = required_iterations(&params).iterations;
                        eprintln!(
                            "derived metropolis iterations: {b} (w_max {}, epsilon {epsilon})",
                            params.w_max
                        );
                        b
                    }
                };
                cfg = cfg.with_metropolis_iterations(b);
            }
            let output = resample(&weight_set, &cfg)?;
            with_output(out.as_deref(), |w| write_resampled(&cfg, &output, w))
        }
        Command::TuneB {
            particles,
            wmax,
            epsilon,
        } => {
            let params = chain_params(particles, wmax, epsilon)?;
            let schedule = required_iterations(&params);
            println!("particles,w_max,epsilon,alpha,beta,lambda,iterations");
            println!(
                "{},{},{},{},{},{},{}",
                particles,
                format_float(params.w_max),
                format_float(params.epsilon),
                format_float(params.alpha),
                format_float(params.beta),
                format_float(params.lambda),
                schedule.iterations
            );
            Ok(())
        }
        Command::Bench {
            grid,
            max_particles,
            schemes,
            replicates,
            timing_replicates,
            seed,
            epsilon,
            pilot_draws,
            out,
        } => {
            let grid = parse_grid(&grid, max_particles)?;
            let schemes = parse_schemes(&schemes)?;
            let mut options = BenchOptions::new(grid, seed);
            options.schemes = schemes;
            options.error_replicates = replicates;
            options.timing_replicates = timing_replicates;
            options.epsilon = epsilon;
            options.pilot_draws = pilot_draws;

            let run = run_benchmark(&options)?;
            for failure in &run.failures {
                eprintln!(
                    "cell (P={}, alpha={}) skipped {}: {}",
                    failure.particles, failure.alpha, failure.scheme, failure.message
                );
            }
            let summaries = summarize(&run)?;

            fs::create_dir_all(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            write_file(&out.join("errors.csv"), |w| write_error_csv(&run, w))?;
            write_file(&out.join("timings.csv"), |w| write_timing_csv(&run, w))?;
            write_file(&out.join("summary.csv"), |w| {
                write_summary_csv(&summaries, w)
            })?;
            fs::write(
                out.join("error.svg"),
                render_svg(&summaries, SvgMetric::MeanError),
            )?;
            fs::write(
                out.join("runtime.svg"),
                render_svg(&summaries, SvgMetric::MeanWallNanos),
            )?;
            println!(
                "wrote errors.csv, timings.csv, summary.csv, error.svg, runtime.svg to {}",
                out.display()
            );
            Ok(())
        }
        Command::DemoFilter {
            steps,
            particles,
            scheme,
            iterations,
            wmax_tolerance,
            epsilon,
            transition,
            process_noise,
            observation_noise,
            initial_mean,
            initial_noise,
            seed,
            no_resample,
            out,
        } => {
            let resampler = if no_resample {
                None
            } else {
                let mut cfg =
                    ResampleConfig::new(scheme.scheme, derive_demo_seed(seed)).with_presort(scheme.presort);
                if scheme.scheme == Scheme::Metropolis {
                    let b = match iterations {
                        Some(b) => b,
                        None => {
                            let params = chain_params(particles, wmax_tolerance, epsilon)?;
                            let b = required_iterations(&params).iterations;
                            eprintln!(
                                "derived metropolis iterations: {b} (w_max tolerance {wmax_tolerance})"
                            );
                            b
                        }
                    };
                    cfg = cfg.with_metropolis_iterations(b);
                }
                Some(cfg)
            };
            let spec = FilterDemoSpec {
                steps,
                particles,
                transition,
                process_std: process_noise,
                observation_std: observation_noise,
                initial_mean,
                initial_std: initial_noise,
                resampler,
                seed,
            };
            let result = demo_filter(&spec)?;
            with_output(out.as_deref(), |w| write_filter_csv(&spec, &result, w))
        }
    }
}

fn derive_demo_seed(seed: u64) -> u64 {
    resample_core::rng::derive_seed(seed, 3)
}

fn parse_grid(name: &str, max_particles: Option<usize>) -> Result<GridKind> {
    match name {
        "paper" => {
            if max_particles.is_some() {
                bail!("--max-particles applies to the desk grid only");
            }
            Ok(GridKind::Paper)
        }
        "desk" => Ok(match max_particles {
            Some(cap) => GridKind::Desk { max_particles: cap },
            None => GridKind::desk(),
        }),
        other => bail!("unknown grid {other:?}; use desk or paper"),
    }
}

fn parse_schemes(list: &str) -> Result<Vec<SchemeSpec>> {
    if list == "all" {
        return Ok(all_schemes());
    }
    if list == "default" {
        return Ok(default_schemes());
    }
    list.split(',')
        .map(|name| {
            name.trim()
                .parse::<SchemeSpec>()
                .with_context(|| format!("scheme {name:?}"))
        })
        .collect()
}

fn with_output(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    match path {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut writer = BufWriter::new(file);
            write(&mut writer)?;
            writer.flush()?;
            Ok(())
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            Ok(())
        }
    }
}

fn write_file(path: &Path, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    write(&mut writer)?;
    writer.flush()?;
    Ok(())
}

/// Weight file: header `P alpha seed`, then one normalised weight per line.
fn write_weight_file(
    spec: &DirichletSpec,
    weights: &WeightSet,
    out: &mut dyn Write,
) -> io::Result<()> {
    writeln!(out, "{} {} {}", spec.particles, spec.alpha, spec.seed)?;
    for &w in weights.weights() {
        writeln!(out, "{}", format_float(w))?;
    }
    Ok(())
}

fn read_weight_file(path: &Path) -> Result<WeightSet> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().context("empty weight file")??;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        bail!("header must be `P alpha seed`, got {header:?}");
    }
    let particles: usize = fields[0].parse().context("particle count")?;
    let mut weights = Vec::with_capacity(particles);
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        weights.push(line.trim().parse::<f64>().context("weight value")?);
    }
    if weights.len() != particles {
        bail!(
            "header says {particles} weights, file holds {}",
            weights.len()
        );
    }
    Ok(WeightSet::new(weights)?)
}

fn write_resampled(
    cfg: &ResampleConfig,
    output: &Resampled,
    out: &mut dyn Write,
) -> io::Result<()> {
    writeln!(out, "# scheme = {}", cfg.scheme)?;
    writeln!(out, "# presort = {}", cfg.presort)?;
    writeln!(out, "# seed = {}", cfg.seed)?;
    if cfg.scheme == Scheme::Metropolis {
        writeln!(out, "# iterations = {}", cfg.metropolis_iterations)?;
    }
    match output {
        Resampled::Ancestors(ancestors) => {
            writeln!(out, "slot,ancestor")?;
            for (slot, &parent) in ancestors.parents().iter().enumerate() {
                writeln!(out, "{slot},{parent}")?;
            }
        }
        Resampled::Offspring(offspring) => {
            writeln!(out, "particle,offspring")?;
            for (particle, &count) in offspring.counts().iter().enumerate() {
                writeln!(out, "{particle},{count}")?;
            }
        }
    }
    Ok(())
}

fn write_filter_csv(
    spec: &FilterDemoSpec,
    result: &resample_bench::FilterDemoResult,
    out: &mut dyn Write,
) -> io::Result<()> {
    writeln!(out, "# particles = {}", spec.particles)?;
    writeln!(out, "# transition = {}", spec.transition)?;
    writeln!(out, "# process_std = {}", spec.process_std)?;
    writeln!(out, "# observation_std = {}", spec.observation_std)?;
    writeln!(out, "# seed = {}", spec.seed)?;
    writeln!(
        out,
        "# resampler = {}",
        spec.resampler
            .map(|cfg| cfg.scheme.to_string())
            .unwrap_or_else(|| "none".to_string())
    )?;
    writeln!(out, "step,truth,observation,mean,variance,ess,degenerate")?;
    for s in &result.steps {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.time,
            format_float(s.truth),
            format_float(s.observation),
            format_float(s.mean),
            format_float(s.variance),
            format_float(s.ess),
            s.degenerate
        )?;
    }
    Ok(())
}
