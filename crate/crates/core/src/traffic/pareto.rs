use crate::rng::RngStream;

/// Scale `x_m` of a Pareto distribution with the given `shape` and `mean`.
pub fn pareto_scale(shape: f64, mean: f64) -> f64 {
    mean * (shape - 1.0) / shape
}

/// Inverse-CDF Pareto draw, in seconds. `shape` must exceed 1 for the mean
/// to exist; the config layer rejects anything else.
pub fn pareto_sample(rng: &mut RngStream, shape: f64, mean: f64) -> f64 {
    debug_assert!(shape > 1.0 && mean > 0.0);
    let u = rng.uniform_open_closed();
    pareto_scale(shape, mean) * u.powf(-1.0 / shape)
}
