//! Tanh-sinh (double exponential) quadrature. Handles integrable endpoint
//! singularities such as p·ln p at 0, which is what the Dirichlet
//! entropy-style integrals need.

/// Integrate `f` over `[a, b]`. `f` is never evaluated at the endpoints.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let h = 1.0 / 64.0;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut sum = 0.0;
    let mut k: i64 = -(7 * 64);
    while k <= 7 * 64 {
        let t = k as f64 * h;
        let u = half_pi * t.sinh();
        let x = u.tanh();
        let cosh_u = u.cosh();
        let w = half_pi * t.cosh() / (cosh_u * cosh_u);
        // Distance to the nearer endpoint, computed without cancellation.
        let gap = half / (u.abs().exp() * cosh_u);
        if gap > 0.0 && w > 0.0 {
            let point = if x < 0.0 { a + gap } else if x > 0.0 { b - gap } else { mid };
            let v = f(point);
            if v.is_finite() {
                sum += w * v;
            }
        }
        k += 1;
    }
    sum * h * half
}
