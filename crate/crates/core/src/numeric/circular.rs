//! Circular statistics for phase/angle data.

use crate::error::{Error, Result};

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut t = theta % tau;
    if t <= -std::f64::consts::PI {
        t += tau;
    } else if t > std::f64::consts::PI {
        t -= tau;
    }
    t
}

/// Circular mean of angles: `atan2(Σ sin, Σ cos)`, wrapped to `(-pi, pi]`.
///
/// Errors when the resultant vector is (numerically) zero, i.e. the angles
/// are perfectly dispersed and the mean is undefined.
pub fn circular_mean(angles: &[f64]) -> Result<f64> {
    if angles.is_empty() {
        return Err(Error::invalid("circular_mean of empty list"));
    }
    let (mut s, mut c) = (0.0, 0.0);
    for &a in angles {
        s += a.sin();
        c += a.cos();
    }
    let n = angles.len() as f64;
    let resultant = (s * s + c * c).sqrt() / n;
    if resultant < 1e-12 {
        return Err(Error::Degenerate(
            "circular mean undefined: angles perfectly dispersed (zero resultant)".into(),
        ));
    }
    Ok(wrap_angle(s.atan2(c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn constant_angles() {
        let m = circular_mean(&[0.1, 0.1, 0.1]).unwrap();
        assert!((m - 0.1).abs() < 1e-12);
    }

    #[test]
    fn wraparound_across_branch_cut() {
        // Mean of pi-0.1 and -pi+0.1 is pi, not 0.
        let m = circular_mean(&[PI - 0.1, -PI + 0.1]).unwrap();
        assert!((m.abs() - PI).abs() < 1e-9, "got {m}");
    }

    #[test]
    fn wrapped_normal_sample_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mu = 2.0;
        let sigma = 0.5;
        let angles: Vec<f64> = (0..1000)
            .map(|_| {
                let u1: f64 = rng.random::<f64>().max(1e-12);
                let u2: f64 = rng.random();
                let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                wrap_angle(mu + sigma * z)
            })
            .collect();
        // Independent resultant-vector oracle.
        let s: f64 = angles.iter().map(|a| a.sin()).sum();
        let c: f64 = angles.iter().map(|a| a.cos()).sum();
        let oracle = s.atan2(c);
        let m = circular_mean(&angles).unwrap();
        assert!((m - oracle).abs() < 1e-12);
        assert!((m - mu).abs() < 0.05, "mean {m} not within 0.05 of 2.0");
    }

    #[test]
    fn dispersed_angles_error() {
        let err = circular_mean(&[0.0, PI / 2.0, PI, -PI / 2.0]).unwrap_err();
        assert!(err.to_string().contains("undefined"), "{err}");
    }

    #[test]
    fn shift_by_two_pi_is_noop() {
        let base = [0.4, -1.3, 2.0];
        let shifted = [0.4 + std::f64::consts::TAU, -1.3, 2.0];
        let a = circular_mean(&base).unwrap();
        let b = circular_mean(&shifted).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn wrap_angle_range() {
        for k in -20..20 {
            let t = wrap_angle(0.37 * k as f64 * 3.0);
            assert!(t > -PI - 1e-15 && t <= PI + 1e-15);
        }
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12, "(-pi wraps to +pi]");
    }
}
