//! Belief masses, subjective opinions and binary Dirichlet distributions over
//! the frame {Free, Occupied}, with the conversions between them.
//!
//! The four representations are equivalent descriptions of a single cell:
//!
//! ```text
//!   EvidencePair --(+1)--> DirichletBinary --(b = (α−1)/S, u = 2/S)--> SubjectiveOpinion <--> BeliefMass
//! ```
//!
//! All values are `f64`. Constructors are plain struct literals; each
//! conversion validates its input and reports a [`Error::Domain`] when an
//! invariant is broken.

mod special;

pub use special::{digamma, lgamma, trigamma};

pub(crate) use special::{digamma_unchecked, lgamma_unchecked, trigamma_unchecked};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of singletons in the frame of discernment.
pub const FRAME_SIZE: f64 = 2.0;

const SUM_TOL: f64 = 1e-9;

/// Dempster-Shafer belief masses on {F}, {O} and Θ = {F, O}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefMass {
    pub free: f64,
    pub occupied: f64,
    pub unknown: f64,
}

/// Subjective-logic opinion: beliefs for each singleton plus uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubjectiveOpinion {
    pub belief_free: f64,
    pub belief_occupied: f64,
    pub uncertainty: f64,
}

/// Nonnegative evidence for each singleton.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvidencePair {
    pub free: f64,
    pub occupied: f64,
}

/// Parameters of a two-class Dirichlet (i.e. Beta) distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirichletBinary {
    pub alpha_free: f64,
    pub alpha_occupied: f64,
}

impl BeliefMass {
    pub const IGNORANCE: BeliefMass = BeliefMass {
        free: 0.0,
        occupied: 0.0,
        unknown: 1.0,
    };

    fn validate(&self) -> Result<()> {
        let parts = [self.free, self.occupied, self.unknown];
        if parts.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::domain(format!("belief masses must be finite and nonnegative: {self:?}")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > SUM_TOL {
            return Err(Error::domain(format!("belief masses must sum to 1: {self:?}")));
        }
        Ok(())
    }
}

impl SubjectiveOpinion {
    fn validate(&self) -> Result<()> {
        let parts = [self.belief_free, self.belief_occupied, self.uncertainty];
        if parts.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::domain(format!("opinion components must be finite and nonnegative: {self:?}")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > SUM_TOL {
            return Err(Error::domain(format!("opinion components must sum to 1: {self:?}")));
        }
        Ok(())
    }
}

impl EvidencePair {
    pub const ZERO: EvidencePair = EvidencePair {
        free: 0.0,
        occupied: 0.0,
    };

    pub fn new(free: f64, occupied: f64) -> Self {
        EvidencePair { free, occupied }
    }

    pub fn is_valid(&self) -> bool {
        self.free.is_finite() && self.occupied.is_finite() && self.free >= 0.0 && self.occupied >= 0.0
    }
}

impl DirichletBinary {
    pub const UNIFORM: DirichletBinary = DirichletBinary {
        alpha_free: 1.0,
        alpha_occupied: 1.0,
    };

    pub fn new(alpha_free: f64, alpha_occupied: f64) -> Self {
        DirichletBinary {
            alpha_free,
            alpha_occupied,
        }
    }

    /// Dirichlet strength S.
    pub fn strength(&self) -> f64 {
        self.alpha_free + self.alpha_occupied
    }

    fn validate(&self) -> Result<()> {
        let ok = |a: f64| a.is_finite() && a >= 1.0;
        if ok(self.alpha_free) && ok(self.alpha_occupied) {
            Ok(())
        } else {
            Err(Error::domain(format!("Dirichlet parameters must be finite and >= 1: {self:?}")))
        }
    }
}

pub fn evidence_to_dirichlet(e: EvidencePair) -> Result<DirichletBinary> {
    if !e.is_valid() {
        return Err(Error::domain(format!("evidence must be finite and nonnegative: {e:?}")));
    }
    Ok(DirichletBinary::new(e.free + 1.0, e.occupied + 1.0))
}

pub fn dirichlet_to_opinion(d: DirichletBinary) -> Result<SubjectiveOpinion> {
    d.validate()?;
    let s = d.strength();
    Ok(SubjectiveOpinion {
        belief_free: (d.alpha_free - 1.0) / s,
        belief_occupied: (d.alpha_occupied - 1.0) / s,
        uncertainty: FRAME_SIZE / s,
    })
}

pub fn opinion_to_mass(o: SubjectiveOpinion) -> Result<BeliefMass> {
    o.validate()?;
    Ok(BeliefMass {
        free: o.belief_free,
        occupied: o.belief_occupied,
        unknown: o.uncertainty,
    })
}

pub fn mass_to_opinion(m: BeliefMass) -> Result<SubjectiveOpinion> {
    m.validate()?;
    Ok(SubjectiveOpinion {
        belief_free: m.free,
        belief_occupied: m.occupied,
        uncertainty: m.unknown,
    })
}

/// Inverts [`dirichlet_to_opinion`].
///
/// The uncertainty is clamped from below to `u_min`, rescaling the beliefs
/// so the opinion still sums to one; a dogmatic opinion (u = 0) would
/// otherwise need infinite evidence. `u_min = 0` disables the clamp and is
/// only valid for opinions with u > 0.
pub fn opinion_to_dirichlet(o: SubjectiveOpinion, u_min: f64) -> Result<DirichletBinary> {
    o.validate()?;
    if !(0.0..=1.0).contains(&u_min) {
        return Err(Error::domain(format!("u_min must lie in [0, 1], got {u_min}")));
    }
    let u = o.uncertainty.max(u_min);
    if u <= 0.0 {
        return Err(Error::domain("dogmatic opinion (u = 0) needs u_min > 0"));
    }
    let (mut bf, mut bo) = (o.belief_free, o.belief_occupied);
    if u > o.uncertainty {
        let total = bf + bo;
        let scale = (1.0 - u) / total;
        bf *= scale;
        bo *= scale;
    }
    let s = FRAME_SIZE / u;
    Ok(DirichletBinary::new(bf * s + 1.0, bo * s + 1.0))
}

/// Expected class probabilities (p_F, p_O) = α / S.
pub fn expected_probability(d: DirichletBinary) -> (f64, f64) {
    let s = d.strength();
    (d.alpha_free / s, d.alpha_occupied / s)
}

/// ln B(α) = Σ ln Γ(α_A) − ln Γ(S).
pub fn ln_beta(d: DirichletBinary) -> f64 {
    lgamma_unchecked(d.alpha_free) + lgamma_unchecked(d.alpha_occupied) - lgamma_unchecked(d.strength())
}

/// Dirichlet density at `p = (p_F, p_O)` on the probability simplex.
pub fn dirichlet_pdf(d: DirichletBinary, p: [f64; 2]) -> Result<f64> {
    if !(d.alpha_free > 0.0 && d.alpha_occupied > 0.0 && d.strength().is_finite()) {
        return Err(Error::domain(format!("Dirichlet parameters must be positive: {d:?}")));
    }
    if p.iter().any(|v| !(0.0..=1.0).contains(v)) || (p[0] + p[1] - 1.0).abs() > SUM_TOL {
        return Err(Error::domain(format!("{p:?} is not on the probability simplex")));
    }
    let mut log_density = -ln_beta(d);
    for (alpha, prob) in [(d.alpha_free, p[0]), (d.alpha_occupied, p[1])] {
        // 0^0 = 1 for the uniform factor.
        if alpha != 1.0 {
            log_density += (alpha - 1.0) * prob.ln();
        }
    }
    Ok(log_density.exp())
}

/// KL[Dir(α) ‖ Dir(1, 1)] for the binary frame.
pub fn kl_from_uniform(d: DirichletBinary) -> f64 {
    let (af, ao) = (d.alpha_free, d.alpha_occupied);
    let s = af + ao;
    let psi_s = digamma_unchecked(s);
    lgamma_unchecked(s) - lgamma_unchecked(FRAME_SIZE) - lgamma_unchecked(af) - lgamma_unchecked(ao)
        + (af - 1.0) * (digamma_unchecked(af) - psi_s)
        + (ao - 1.0) * (digamma_unchecked(ao) - psi_s)
}

/// Gradient of [`kl_from_uniform`] with respect to (α_F, α_O).
pub(crate) fn kl_from_uniform_grad(d: DirichletBinary) -> [f64; 2] {
    let (af, ao) = (d.alpha_free, d.alpha_occupied);
    let s = af + ao;
    let common = (s - 2.0) * trigamma_unchecked(s);
    [
        (af - 1.0) * trigamma_unchecked(af) - common,
        (ao - 1.0) * trigamma_unchecked(ao) - common,
    ]
}

/// KL[Dir(α₁) ‖ Dir(α₂)].
pub fn kl_dirichlet(d1: DirichletBinary, d2: DirichletBinary) -> f64 {
    let psi_s = digamma_unchecked(d1.strength());
    ln_beta(d2) - ln_beta(d1)
        + (d1.alpha_free - d2.alpha_free) * (digamma_unchecked(d1.alpha_free) - psi_s)
        + (d1.alpha_occupied - d2.alpha_occupied) * (digamma_unchecked(d1.alpha_occupied) - psi_s)
}

/// Evidence straight to belief masses; the path used for rendering and for
/// the mean-mass metric.
pub fn evidence_to_mass(e: EvidencePair) -> Result<BeliefMass> {
    opinion_to_mass(dirichlet_to_opinion(evidence_to_dirichlet(e)?)?)
}

/// Belief masses to evidence, clamping uncertainty at `u_min`.
pub fn mass_to_evidence(m: BeliefMass, u_min: f64) -> Result<EvidencePair> {
    let d = opinion_to_dirichlet(mass_to_opinion(m)?, u_min)?;
    Ok(EvidencePair::new(d.alpha_free - 1.0, d.alpha_occupied - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn evidence_to_dirichlet_adds_one() {
        let cases = [((0.0, 0.0), (1.0, 1.0)), ((3.0, 1.0), (4.0, 2.0)), ((100.0, 0.0), (101.0, 1.0))];
        for ((ef, eo), (af, ao)) in cases {
            let d = evidence_to_dirichlet(EvidencePair::new(ef, eo)).unwrap();
            assert_eq!(d, DirichletBinary::new(af, ao));
        }
        assert!(evidence_to_dirichlet(EvidencePair::new(-1.0, 0.0)).is_err());
        assert!(evidence_to_dirichlet(EvidencePair::new(f64::INFINITY, 0.0)).is_err());
    }

    #[test]
    fn dirichlet_to_opinion_examples() {
        let o = dirichlet_to_opinion(DirichletBinary::UNIFORM).unwrap();
        assert_eq!((o.belief_free, o.belief_occupied, o.uncertainty), (0.0, 0.0, 1.0));

        let o = dirichlet_to_opinion(DirichletBinary::new(4.0, 2.0)).unwrap();
        assert!(close(o.belief_free, 0.5, 1e-15));
        assert!(close(o.belief_occupied, 1.0 / 6.0, 1e-15));
        assert!(close(o.uncertainty, 1.0 / 3.0, 1e-15));

        let o = dirichlet_to_opinion(DirichletBinary::new(19.0, 1.0)).unwrap();
        assert!(close(o.belief_free, 0.9, 1e-15) && o.belief_occupied == 0.0 && close(o.uncertainty, 0.1, 1e-15));

        assert!(dirichlet_to_opinion(DirichletBinary::new(0.5, 1.0)).is_err());
    }

    #[test]
    fn belief_from_alpha_equals_belief_from_evidence() {
        for (ef, eo) in [(0.0, 0.0), (3.0, 1.0), (0.25, 17.5), (1e4, 2.0)] {
            let d = evidence_to_dirichlet(EvidencePair::new(ef, eo)).unwrap();
            let o = dirichlet_to_opinion(d).unwrap();
            let s = d.strength();
            assert!(close(o.belief_free, ef / s, 1e-15));
            assert!(close(o.belief_occupied, eo / s, 1e-15));
        }
    }

    #[test]
    fn mass_opinion_bijection() {
        let o = mass_to_opinion(BeliefMass::IGNORANCE).unwrap();
        assert_eq!((o.belief_free, o.belief_occupied, o.uncertainty), (0.0, 0.0, 1.0));

        let o = SubjectiveOpinion {
            belief_free: 0.5,
            belief_occupied: 1.0 / 6.0,
            uncertainty: 1.0 / 3.0,
        };
        let m = opinion_to_mass(o).unwrap();
        assert_eq!((m.free, m.occupied, m.unknown), (0.5, 1.0 / 6.0, 1.0 / 3.0));
        assert_eq!(mass_to_opinion(m).unwrap(), o);

        assert!(mass_to_opinion(BeliefMass {
            free: 0.5,
            occupied: 0.5,
            unknown: 0.5
        })
        .is_err());
    }

    #[test]
    fn opinion_to_dirichlet_examples() {
        let vacuous = SubjectiveOpinion {
            belief_free: 0.0,
            belief_occupied: 0.0,
            uncertainty: 1.0,
        };
        assert_eq!(opinion_to_dirichlet(vacuous, 0.1).unwrap(), DirichletBinary::UNIFORM);

        let d = opinion_to_dirichlet(
            SubjectiveOpinion {
                belief_free: 0.9,
                belief_occupied: 0.0,
                uncertainty: 0.1,
            },
            0.1,
        )
        .unwrap();
        assert!(close(d.alpha_free, 19.0, 1e-12) && d.alpha_occupied == 1.0);

        let dogmatic = SubjectiveOpinion {
            belief_free: 1.0,
            belief_occupied: 0.0,
            uncertainty: 0.0,
        };
        let d = opinion_to_dirichlet(dogmatic, 0.1).unwrap();
        assert!(close(d.alpha_free, 19.0, 1e-12) && d.alpha_occupied == 1.0);
        // Round trip through the forward map lands on the clamped opinion.
        let back = dirichlet_to_opinion(d).unwrap();
        assert!(close(back.belief_free, 0.9, 1e-12) && close(back.uncertainty, 0.1, 1e-12));

        assert!(opinion_to_dirichlet(dogmatic, 0.0).is_err());
        assert!(opinion_to_dirichlet(vacuous, -0.1).is_err());
    }

    #[test]
    fn expected_probability_examples() {
        assert_eq!(expected_probability(DirichletBinary::UNIFORM), (0.5, 0.5));
        let (pf, po) = expected_probability(DirichletBinary::new(4.0, 2.0));
        assert!(close(pf, 2.0 / 3.0, 1e-15) && close(po, 1.0 / 3.0, 1e-15));
        let (pf, po) = expected_probability(DirichletBinary::new(101.0, 1.0));
        assert!(close(pf, 101.0 / 102.0, 1e-15) && close(po, 1.0 / 102.0, 1e-15));
    }

    #[test]
    fn pdf_examples() {
        for p in [0.0, 0.3, 1.0] {
            assert!(close(dirichlet_pdf(DirichletBinary::UNIFORM, [p, 1.0 - p]).unwrap(), 1.0, 1e-14));
        }
        assert!(close(dirichlet_pdf(DirichletBinary::new(2.0, 2.0), [0.5, 0.5]).unwrap(), 1.5, 1e-13));
        assert!(close(dirichlet_pdf(DirichletBinary::new(2.0, 1.0), [1.0, 0.0]).unwrap(), 2.0, 1e-13));
        assert!(dirichlet_pdf(DirichletBinary::UNIFORM, [0.7, 0.7]).is_err());
        assert!(dirichlet_pdf(DirichletBinary::UNIFORM, [-0.1, 1.1]).is_err());
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_from_uniform(DirichletBinary::UNIFORM), 0.0);
        let want = 2f64.ln() - 0.5;
        assert!(close(kl_from_uniform(DirichletBinary::new(2.0, 1.0)), want, 1e-12));
        let d22 = DirichletBinary::new(2.0, 2.0);
        // ln Γ(4)/(Γ(2)Γ(2)Γ(2)) + 2(ψ(2) − ψ(4)), with ψ(2) − ψ(4) = −(1/2 + 1/3)
        let want = 6f64.ln() + 2.0 * (digamma(2.0).unwrap() - digamma(4.0).unwrap());
        assert!(close(kl_from_uniform(d22), want, 1e-12));
        assert!(close(kl_from_uniform(d22), 6f64.ln() - 5.0 / 3.0, 1e-12));

        let d = DirichletBinary::new(5.0, 3.0);
        assert_eq!(kl_dirichlet(d, d), 0.0);
        let d21 = DirichletBinary::new(2.0, 1.0);
        assert!(close(kl_dirichlet(d21, DirichletBinary::UNIFORM), kl_from_uniform(d21), 1e-14));

        let a = DirichletBinary::new(4.0, 2.0);
        let b = DirichletBinary::new(2.0, 4.0);
        let (ab, ba) = (kl_dirichlet(a, b), kl_dirichlet(b, a));
        assert!(ab > 0.0 && ba > 0.0);
    }

    #[test]
    fn kl_gradient_matches_finite_difference() {
        for (af, ao) in [(1.0, 1.0), (2.0, 1.0), (1.0, 7.5), (4.0, 2.0), (40.0, 3.0)] {
            let g = kl_from_uniform_grad(DirichletBinary::new(af, ao));
            let h = 1e-6;
            let fd_f = (kl_from_uniform(DirichletBinary::new(af + h, ao)) - kl_from_uniform(DirichletBinary::new(af - h, ao)))
                / (2.0 * h);
            let fd_o = (kl_from_uniform(DirichletBinary::new(af, ao + h)) - kl_from_uniform(DirichletBinary::new(af, ao - h)))
                / (2.0 * h);
            assert!(close(g[0], fd_f, 1e-7), "({af},{ao}) {g:?} vs {fd_f}");
            assert!(close(g[1], fd_o, 1e-7), "({af},{ao}) {g:?} vs {fd_o}");
        }
    }
}
