//! Shared oracles for integration tests.

/// Exact recursive Gaussian filter for the 1-D linear model
/// `x_t = phi x_{t-1} + N(0, q^2)`, `y_t = x_t + N(0, r^2)`.
///
/// Independent of the particle filter implementation: plain
/// predict/update recursions over the supplied observations.
pub struct GaussianFilter {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

pub fn exact_gaussian_filter(
    observations: &[f64],
    transition: f64,
    process_std: f64,
    observation_std: f64,
    initial_mean: f64,
    initial_std: f64,
) -> GaussianFilter {
    let q2 = process_std * process_std;
    let r2 = observation_std * observation_std;
    let mut mean = initial_mean;
    let mut var = initial_std * initial_std;
    let mut means = Vec::with_capacity(observations.len());
    let mut variances = Vec::with_capacity(observations.len());
    for &y in observations {
        let predicted_mean = transition * mean;
        let predicted_var = transition * transition * var + q2;
        if predicted_var + r2 == 0.0 {
            // deterministic limit: the prediction is exact
            mean = predicted_mean;
            var = 0.0;
        } else {
            let gain = predicted_var / (predicted_var + r2);
            mean = predicted_mean + gain * (y - predicted_mean);
            var = (1.0 - gain) * predicted_var;
        }
        means.push(mean);
        variances.push(var);
    }
    GaussianFilter { means, variances }
}
