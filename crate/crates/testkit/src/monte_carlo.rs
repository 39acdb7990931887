//! Monte-Carlo estimates under a binary Dirichlet, sampled through
//! independent gamma draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

/// Mean and standard error of ‖y − p‖² for p ~ Dir(a, b).
pub fn expected_sq_error(a: f64, b: f64, y: [f64; 2], samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ga = Gamma::new(a, 1.0).expect("shape a > 0");
    let gb = Gamma::new(b, 1.0).expect("shape b > 0");
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let x = ga.sample(&mut rng);
        let z = gb.sample(&mut rng);
        let pf = x / (x + z);
        let v = (y[0] - pf).powi(2) + (y[1] - (1.0 - pf)).powi(2);
        sum += v;
        sum_sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}
