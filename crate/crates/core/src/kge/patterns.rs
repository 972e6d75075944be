//! Relation-pattern verification over phase vectors: symmetry,
//! antisymmetry, inversion, and composition as phase congruences mod 2π.
//!
//! For multi-component relations a pattern holds when SOME component pair
//! satisfies the congruence; antisymmetry holds when NO component is
//! symmetric.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kge::rotate::PhaseVector;
use crate::numeric::wrap_angle;

/// The pattern to verify, with the other relations it involves.
pub enum Pattern<'a> {
    /// `r ∘ r = 1`: every phase is 0 or π.
    Symmetric,
    /// Some coordinate violates the symmetry congruence.
    Antisymmetric,
    /// `θ_r1 + θ_r2 ≡ 0 (mod 2π)`.
    Inverse(&'a [PhaseVector]),
    /// `θ_r1 ≡ θ_r2 + θ_r3 (mod 2π)`.
    Composition(&'a [PhaseVector], &'a [PhaseVector]),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternVerdict {
    pub holds: bool,
    /// Per-coordinate residuals of the best component combination.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

fn residual_symmetric(p: &PhaseVector) -> Vec<f64> {
    p.phases().iter().map(|&th| wrap_angle(2.0 * th).abs()).collect()
}

fn best<I: Iterator<Item = Vec<f64>>>(candidates: I) -> (Vec<f64>, f64) {
    let mut best_res: Option<(Vec<f64>, f64)> = None;
    for res in candidates {
        let max = res.iter().cloned().fold(0.0, f64::max);
        if best_res.as_ref().is_none_or(|(_, m)| max < *m) {
            best_res = Some((res, max));
        }
    }
    best_res.expect("at least one candidate")
}

/// Verify a relation pattern on the components of `relation` within `tol`
/// radians per coordinate.
pub fn check_pattern(relation: &[PhaseVector], pattern: Pattern<'_>, tol: f64) -> Result<PatternVerdict> {
    if relation.is_empty() {
        return Err(Error::invalid("no phase vectors for the inspected relation"));
    }
    let dim = relation[0].dim();
    let same_dim = |others: &[PhaseVector]| -> Result<()> {
        if others.is_empty() {
            return Err(Error::invalid("no phase vectors for the counterpart relation"));
        }
        if others.iter().chain(relation.iter()).any(|p| p.dim() != dim) {
            return Err(Error::shape(format!("{dim} phases"), "mismatched phase vector"));
        }
        Ok(())
    };

    let (residuals, max_residual, holds) = match pattern {
        Pattern::Symmetric => {
            let (res, max) = best(relation.iter().map(residual_symmetric));
            (res, max, max <= tol)
        }
        Pattern::Antisymmetric => {
            // Report the most nearly symmetric component; antisymmetry holds
            // when even it violates the congruence somewhere.
            let (res, max) = best(relation.iter().map(residual_symmetric));
            (res, max, max > tol)
        }
        Pattern::Inverse(other) => {
            same_dim(other)?;
            let candidates = relation.iter().flat_map(|a| {
                other.iter().map(move |b| {
                    a.phases()
                        .iter()
                        .zip(b.phases().iter())
                        .map(|(&x, &y)| wrap_angle(x + y).abs())
                        .collect::<Vec<f64>>()
                })
            });
            let (res, max) = best(candidates);
            (res, max, max <= tol)
        }
        Pattern::Composition(r2, r3) => {
            same_dim(r2)?;
            same_dim(r3)?;
            let candidates = relation.iter().flat_map(|a| {
                r2.iter().flat_map(move |b| {
                    r3.iter().map(move |c| {
                        (0..dim)
                            .map(|j| wrap_angle(a.phases()[j] - b.phases()[j] - c.phases()[j]).abs())
                            .collect::<Vec<f64>>()
                    })
                })
            });
            let (res, max) = best(candidates);
            (res, max, max <= tol)
        }
    };
    Ok(PatternVerdict {
        holds,
        residuals,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pv(phases: &[f64]) -> PhaseVector {
        PhaseVector::new(phases.to_vec())
    }

    #[test]
    fn all_pi_phases_are_symmetric() {
        let r = [pv(&[PI, PI, PI])];
        let v = check_pattern(&r, Pattern::Symmetric, 0.05).unwrap();
        assert!(v.holds, "r∘r = 1 when every phase is π");
        assert!(v.max_residual < 1e-12);
    }

    #[test]
    fn mixed_zero_and_pi_symmetric() {
        let r = [pv(&[0.0, PI, 0.0, PI])];
        assert!(check_pattern(&r, Pattern::Symmetric, 0.05).unwrap().holds);
    }

    #[test]
    fn generic_phases_are_antisymmetric() {
        let r = [pv(&[0.7, -1.3])];
        assert!(!check_pattern(&r, Pattern::Symmetric, 0.05).unwrap().holds);
        assert!(check_pattern(&r, Pattern::Antisymmetric, 0.05).unwrap().holds);
    }

    #[test]
    fn inverse_verdict() {
        let r1 = [pv(&[0.4, -2.0])];
        let r2 = [pv(&[-0.4, 2.0])];
        let v = check_pattern(&r1, Pattern::Inverse(&r2), 0.05).unwrap();
        assert!(v.holds);
        let bad = [pv(&[-0.4, 1.0])];
        assert!(!check_pattern(&r1, Pattern::Inverse(&bad), 0.05).unwrap().holds);
    }

    #[test]
    fn composition_verdict_and_tolerance_flip() {
        let tol = 0.05;
        let r1 = [pv(&[0.9])];
        let r2 = [pv(&[0.4])];
        let r3 = [pv(&[0.5])];
        let v = check_pattern(&r1, Pattern::Composition(&r2, &r3), tol).unwrap();
        assert!(v.holds);
        // Perturb r1 by 2·tol: the verdict must flip.
        let r1_off = [pv(&[0.9 + 2.0 * tol])];
        let v = check_pattern(&r1_off, Pattern::Composition(&r2, &r3), tol).unwrap();
        assert!(!v.holds);
        assert!((v.max_residual - 2.0 * tol).abs() < 1e-12);
    }

    #[test]
    fn multi_component_some_pair_suffices() {
        // Only the second component of r1 inverts the first of r2.
        let r1 = [pv(&[2.0]), pv(&[0.4])];
        let r2 = [pv(&[-0.4])];
        assert!(check_pattern(&r1, Pattern::Inverse(&r2), 0.01).unwrap().holds);
        // Antisymmetric fails if any component is symmetric.
        let with_sym = [pv(&[0.7]), pv(&[PI])];
        assert!(!check_pattern(&with_sym, Pattern::Antisymmetric, 0.05).unwrap().holds);
    }

    #[test]
    fn wraparound_congruence() {
        // 3.0 + 3.4 = 6.4 ≡ 0.117 (mod 2π): not inverse. 3.0 + (2π−3.0): inverse.
        let r1 = [pv(&[3.0])];
        let r2 = [pv(&[2.0 * PI - 3.0])];
        assert!(check_pattern(&r1, Pattern::Inverse(&r2), 1e-9).unwrap().holds);
    }

    #[test]
    fn dim_mismatch_rejected() {
        let r1 = [pv(&[0.1, 0.2])];
        let r2 = [pv(&[0.1])];
        assert!(check_pattern(&r1, Pattern::Inverse(&r2), 0.1).is_err());
    }
}
