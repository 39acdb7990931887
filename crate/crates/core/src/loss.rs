//! Evidential training objective: expected squared error under the
//! predicted Dirichlet, an annealed KL penalty on misleading evidence and
//! extra weight on occupied cells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidential::{kl_from_uniform, kl_from_uniform_grad, DirichletBinary, EvidencePair};
use crate::grid::{EvidentialGrid, GroundTruthGrid, Label};

/// One-hot target of a cell; unknown cells are (0, 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellTarget {
    pub free: f64,
    pub occupied: f64,
}

impl CellTarget {
    pub const UNKNOWN: CellTarget = CellTarget {
        free: 0.0,
        occupied: 0.0,
    };

    pub fn from_label(label: Label) -> Self {
        match label {
            Label::Unknown => CellTarget::UNKNOWN,
            Label::Free => CellTarget {
                free: 1.0,
                occupied: 0.0,
            },
            Label::Occupied => CellTarget {
                free: 0.0,
                occupied: 1.0,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    /// Multiplies the whole term of every occupied cell.
    pub occupied_weight: f64,
    /// Epochs over which the KL weight ramps from 0 to 1.
    pub anneal_epochs: usize,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            occupied_weight: 100.0,
            anneal_epochs: 10,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.occupied_weight >= 1.0 && self.occupied_weight.is_finite()) {
            return Err(Error::Config(format!(
                "occupied weight must be at least 1, got {}",
                self.occupied_weight
            )));
        }
        Ok(())
    }

    /// KL weight at a zero-based epoch: `min(1, epoch / anneal_epochs)`.
    pub fn lambda(&self, epoch: usize) -> f64 {
        if self.anneal_epochs == 0 {
            1.0
        } else {
            (epoch as f64 / self.anneal_epochs as f64).min(1.0)
        }
    }

    fn weight(&self, label: Label) -> f64 {
        if label == Label::Occupied {
            self.occupied_weight
        } else {
            1.0
        }
    }
}

fn check(e: EvidencePair) -> Result<()> {
    if e.is_valid() {
        Ok(())
    } else {
        Err(Error::Domain(format!("invalid evidence {e:?}")))
    }
}

/// Expected squared error between the target and a probability drawn from
/// Dir(e + 1).
pub fn cell_loss(e: EvidencePair, y: CellTarget) -> Result<f64> {
    check(e)?;
    Ok(sq_error_with_grad(e, y).0)
}

/// KL divergence from the uniform Dirichlet after removing the evidence
/// for the true class.
pub fn kl_regularizer(e: EvidencePair, y: CellTarget) -> Result<f64> {
    check(e)?;
    Ok(kl_with_grad(e, y).0)
}

fn sq_error_with_grad(e: EvidencePair, y: CellTarget) -> (f64, [f64; 2]) {
    let alpha = [e.free + 1.0, e.occupied + 1.0];
    let target = [y.free, y.occupied];
    let s = alpha[0] + alpha[1];
    let p = [alpha[0] / s, alpha[1] / s];

    let mut value = 0.0;
    let mut d_p = [0.0; 2];
    let mut d_s = 0.0;
    for a in 0..2 {
        let var = p[a] * (1.0 - p[a]);
        value += (target[a] - p[a]).powi(2) + var / (s + 1.0);
        d_p[a] = -2.0 * (target[a] - p[a]) + (1.0 - 2.0 * p[a]) / (s + 1.0);
        d_s -= var / (s + 1.0).powi(2);
    }
    // p_a = α_a / S, so ∂p_a/∂α_b = (δ_ab − p_a) / S and ∂S/∂α_b = 1.
    let mut grad = [d_s; 2];
    for (b, g) in grad.iter_mut().enumerate() {
        for a in 0..2 {
            let delta = if a == b { 1.0 } else { 0.0 };
            *g += d_p[a] * (delta - p[a]) / s;
        }
    }
    (value, grad)
}

fn kl_with_grad(e: EvidencePair, y: CellTarget) -> (f64, [f64; 2]) {
    let keep = [1.0 - y.free, 1.0 - y.occupied];
    let a = [y.free + keep[0] * (e.free + 1.0), y.occupied + keep[1] * (e.occupied + 1.0)];
    if a == [1.0, 1.0] {
        return (0.0, [0.0, 0.0]);
    }
    let d = DirichletBinary::new(a[0], a[1]);
    let g = kl_from_uniform_grad(d);
    (kl_from_uniform(d), [keep[0] * g[0], keep[1] * g[1]])
}

/// Compensated (Neumaier) running sum, so totals do not depend on
/// rounding luck.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    sum: f64,
    carry: f64,
}

impl Accumulator {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Sums over all cells of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    /// Weighted objective: Σ w·(squared error + λ·KL).
    pub total: f64,
    /// Unweighted Σ squared error.
    pub squared_error: f64,
    /// Unweighted Σ KL regularizer.
    pub kl: f64,
    pub cells: usize,
}

impl LossParts {
    pub fn mean_per_cell(&self) -> f64 {
        self.total / self.cells.max(1) as f64
    }

    pub fn mean_kl(&self) -> f64 {
        self.kl / self.cells.max(1) as f64
    }
}

/// Loss over raw per-cell evidence `[e_F, e_O]`, optionally with its
/// gradient. This is the entry point the model uses.
pub fn evaluate(
    evidence: &[[f64; 2]],
    labels: &[Label],
    lambda: f64,
    cfg: &LossConfig,
    want_grad: bool,
) -> Result<(LossParts, Option<Vec<[f64; 2]>>)> {
    if evidence.len() != labels.len() {
        return Err(Error::Domain(format!(
            "{} predicted cells against {} labels",
            evidence.len(),
            labels.len()
        )));
    }
    let (mut total, mut sq, mut kl) = (Accumulator::default(), Accumulator::default(), Accumulator::default());
    let mut grad = want_grad.then(|| Vec::with_capacity(evidence.len()));
    for (i, (&[ef, eo], &label)) in evidence.iter().zip(labels).enumerate() {
        let e = EvidencePair::new(ef, eo);
        if !e.is_valid() {
            return Err(Error::Domain(format!("cell {i} has invalid evidence {e:?}")));
        }
        let y = CellTarget::from_label(label);
        let w = cfg.weight(label);
        let (l_sq, g_sq) = sq_error_with_grad(e, y);
        let (l_kl, g_kl) = kl_with_grad(e, y);
        total.add(w * (l_sq + lambda * l_kl));
        sq.add(l_sq);
        kl.add(l_kl);
        if let Some(g) = grad.as_mut() {
            g.push([w * (g_sq[0] + lambda * g_kl[0]), w * (g_sq[1] + lambda * g_kl[1])]);
        }
    }
    let parts = LossParts {
        total: total.value(),
        squared_error: sq.value(),
        kl: kl.value(),
        cells: evidence.len(),
    };
    Ok((parts, grad))
}

fn grid_inputs(pred: &EvidentialGrid, truth: &GroundTruthGrid) -> Result<Vec<[f64; 2]>> {
    if pred.spec() != truth.spec() {
        return Err(Error::Domain(format!(
            "prediction grid {:?} does not match label grid {:?}",
            pred.spec(),
            truth.spec()
        )));
    }
    Ok(pred.cells().iter().map(|e| [e.free, e.occupied]).collect())
}

/// Σ_i w_i·(cell_loss_i + λ_t·kl_regularizer_i) over the grid, with
/// λ_t from the zero-based `epoch`.
pub fn total_loss(pred: &EvidentialGrid, truth: &GroundTruthGrid, epoch: usize, cfg: &LossConfig) -> Result<f64> {
    cfg.validate()?;
    let ev = grid_inputs(pred, truth)?;
    Ok(evaluate(&ev, truth.cells(), cfg.lambda(epoch), cfg, false)?.0.total)
}

/// Gradient of [`total_loss`] with respect to each cell's (e_F, e_O).
pub fn loss_gradient(
    pred: &EvidentialGrid,
    truth: &GroundTruthGrid,
    epoch: usize,
    cfg: &LossConfig,
) -> Result<Vec<[f64; 2]>> {
    cfg.validate()?;
    let ev = grid_inputs(pred, truth)?;
    let (_, grad) = evaluate(&ev, truth.cells(), cfg.lambda(epoch), cfg, true)?;
    Ok(grad.expect("requested"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    const FREE: CellTarget = CellTarget {
        free: 1.0,
        occupied: 0.0,
    };

    #[test]
    fn cell_loss_examples() {
        assert!((cell_loss(EvidencePair::new(3.0, 1.0), FREE).unwrap() - 2.0 / 7.0).abs() < 1e-12);
        assert!((cell_loss(EvidencePair::ZERO, FREE).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((cell_loss(EvidencePair::ZERO, CellTarget::UNKNOWN).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_regularizer(EvidencePair::ZERO, FREE).unwrap(), 0.0);
        let v = kl_regularizer(EvidencePair::new(3.0, 1.0), FREE).unwrap();
        assert!((v - (2f64.ln() - 0.5)).abs() < 1e-12);
        let v = kl_regularizer(EvidencePair::new(3.0, 1.0), CellTarget::UNKNOWN).unwrap();
        assert!((v - kl_from_uniform(DirichletBinary::new(4.0, 2.0))).abs() < 1e-12);
    }

    #[test]
    fn lambda_schedule() {
        let cfg = LossConfig::default();
        assert_eq!(cfg.lambda(0), 0.0);
        assert_eq!(cfg.lambda(5), 0.5);
        assert_eq!(cfg.lambda(10), 1.0);
        assert_eq!(cfg.lambda(40), 1.0);
    }

    #[test]
    fn single_occupied_cell_total() {
        let spec = GridSpec::new(2, 2, 1.0).unwrap();
        let pred = EvidentialGrid::new(spec);
        let mut truth = GroundTruthGrid::new(spec);
        truth.set(0, 0, Label::Occupied);
        let ev: Vec<_> = pred.cells().iter().take(1).map(|e| [e.free, e.occupied]).collect();
        let (parts, _) = evaluate(&ev, &truth.cells()[..1], 1.0, &LossConfig::default(), false).unwrap();
        assert!((parts.total - 200.0 / 3.0).abs() < 1e-10);
        // Whole grid: the occupied cell plus three unknown cells at 2/3 each.
        let t = total_loss(&pred, &truth, 10, &LossConfig::default()).unwrap();
        assert!((t - (200.0 / 3.0 + 2.0)).abs() < 1e-10);
    }

    #[test]
    fn gradient_signs_and_symmetry() {
        let (_, g) = sq_error_with_grad(EvidencePair::ZERO, FREE);
        assert!(g[0] < 0.0);
        let (_, g) = evaluate(&[[7.5, 7.5]], &[Label::Unknown], 0.7, &LossConfig::default(), true).unwrap();
        let g = g.unwrap()[0];
        assert!((g[0] - g[1]).abs() < 1e-14);
    }

    #[test]
    fn mismatched_specs_fail() {
        let pred = EvidentialGrid::new(GridSpec::new(2, 2, 1.0).unwrap());
        let truth = GroundTruthGrid::new(GridSpec::new(4, 2, 1.0).unwrap());
        assert!(matches!(total_loss(&pred, &truth, 0, &LossConfig::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn compensated_sum_is_exact_on_cancelling_terms() {
        let mut acc = Accumulator::default();
        for v in [1e16, 1.0, -1e16, 1.0] {
            acc.add(v);
        }
        assert_eq!(acc.value(), 2.0);
    }
}
