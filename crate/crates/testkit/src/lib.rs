//! Reference computations for tests. Nothing here calls into `evogm-core`;
//! every oracle is computed from first principles so it can check the
//! library independently.

pub mod beta;
pub mod geometry;
pub mod monte_carlo;
pub mod quadrature;

/// |a − b| / max(|a|, |b|), with a floor on the denominator so that two
/// values that are both essentially zero compare as equal.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Central difference of `f` at `x` with step `h`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}
