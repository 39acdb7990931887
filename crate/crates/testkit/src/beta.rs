//! Binary Dirichlet (Beta) quantities by direct numerical integration.
//! The normalizer is integrated, never taken from a gamma function.

use crate::quadrature::tanh_sinh;

fn kernel(a: f64, b: f64, p: f64) -> f64 {
    p.powf(a - 1.0) * (1.0 - p).powf(b - 1.0)
}

/// B(a, b) = ∫₀¹ p^(a−1) (1−p)^(b−1) dp.
pub fn normalizer(a: f64, b: f64) -> f64 {
    tanh_sinh(|p| kernel(a, b, p), 0.0, 1.0)
}

/// Density of Dir((a, b)) at p_F = p.
pub fn density(a: f64, b: f64, p: f64) -> f64 {
    kernel(a, b, p) / normalizer(a, b)
}

/// KL[Dir(a1, b1) ‖ Dir(a2, b2)] = ∫ f₁ ln(f₁/f₂).
pub fn kl(a1: f64, b1: f64, a2: f64, b2: f64) -> f64 {
    let (z1, z2) = (normalizer(a1, b1), normalizer(a2, b2));
    tanh_sinh(
        |p| {
            let f1 = kernel(a1, b1, p) / z1;
            if f1 == 0.0 {
                return 0.0;
            }
            let log_ratio = (a1 - 1.0) * p.ln() + (b1 - 1.0) * (1.0 - p).ln() - z1.ln()
                - ((a2 - 1.0) * p.ln() + (b2 - 1.0) * (1.0 - p).ln() - z2.ln());
            f1 * log_ratio
        },
        0.0,
        1.0,
    )
}

/// E‖y − p‖² under Dir(a, b) by quadrature.
pub fn expected_sq_error(a: f64, b: f64, y: [f64; 2]) -> f64 {
    let z = normalizer(a, b);
    tanh_sinh(
        |p| kernel(a, b, p) / z * ((y[0] - p).powi(2) + (y[1] - (1.0 - p)).powi(2)),
        0.0,
        1.0,
    )
}
