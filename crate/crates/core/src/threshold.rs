//! Closed-form loss thresholds and parameter sweeps.

use crate::error::{check_probability, Result};
use crate::fusion::p_ii;
use crate::ghz::effective_survival;

/// Survival seen by a measurement of the heralded state with the same
/// detectors: `eta_s eta_d / (2 - eta_s eta_d)`.
pub fn measured_survival(eta_s: f64, eta_d: f64) -> Result<f64> {
    check_probability("eta_s", eta_s)?;
    check_probability("eta_d", eta_d)?;
    let x = eta_s * eta_d;
    Ok(x / (2.0 - x))
}

/// Strictly above one half, i.e. `eta_s eta_d > 2/3`.
pub fn loss_tolerance_condition(eta_s: f64, eta_d: f64) -> Result<bool> {
    Ok(measured_survival(eta_s, eta_d)? > 0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRow {
    pub eta_s: f64,
    pub eta_d: f64,
    /// Loss rate of the heralded state, `1 - state_survival`.
    pub epsilon: f64,
    pub state_survival: f64,
    pub measured_survival: f64,
    pub p_ii: f64,
    pub tolerant: bool,
}

impl ThresholdRow {
    pub fn new(eta_s: f64, eta_d: f64) -> Result<Self> {
        let state_survival = effective_survival(eta_s, eta_d)?;
        let epsilon = 1.0 - state_survival;
        Ok(Self {
            eta_s,
            eta_d,
            epsilon,
            state_survival,
            measured_survival: measured_survival(eta_s, eta_d)?,
            p_ii: p_ii(epsilon, eta_d)?,
            tolerant: loss_tolerance_condition(eta_s, eta_d)?,
        })
    }
}

/// One row per grid point, `eta_s` varying slowest.
pub fn threshold_sweep(eta_s: &[f64], eta_d: &[f64]) -> Result<Vec<ThresholdRow>> {
    let mut rows = Vec::with_capacity(eta_s.len() * eta_d.len());
    for &s in eta_s {
        for &d in eta_d {
            rows.push(ThresholdRow::new(s, d)?);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn examples() {
        assert_eq!(measured_survival(1.0, 1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(measured_survival(2.0 / 3.0, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(measured_survival(0.9, 0.9).unwrap(), 0.81 / 1.19, epsilon = 1e-15);
        assert!(loss_tolerance_condition(1.0, 1.0).unwrap());
        assert!(loss_tolerance_condition(0.9, 0.8).unwrap());
        assert!(!loss_tolerance_condition(0.8, 0.8).unwrap());
        assert!(!loss_tolerance_condition(2.0 / 3.0, 1.0).unwrap());
        assert!(measured_survival(1.2, 0.5).is_err());
    }

    #[test]
    fn identity_with_state_survival() {
        for i in 0..=20 {
            for j in 0..=20 {
                let (s, d) = (i as f64 / 20.0, j as f64 / 20.0);
                let r = ThresholdRow::new(s, d).unwrap();
                assert_abs_diff_eq!(r.measured_survival, r.state_survival * d, epsilon = 1e-12);
                assert_abs_diff_eq!(r.p_ii, (r.state_survival * d).powi(2) / 2.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn criteria_agree_on_fine_grid() {
        // grid values are k/100, so s*d > 2/3 is 3*i*j > 20000 in integers
        for i in 0..=100u32 {
            for j in 0..=100u32 {
                let tol = loss_tolerance_condition(i as f64 / 100.0, j as f64 / 100.0).unwrap();
                assert_eq!(tol, 3 * i * j > 20000, "{i} {j}");
            }
        }
    }

    #[test]
    fn strictly_increasing() {
        for k in 1..100 {
            let a = k as f64 / 100.0;
            let b = (k + 1) as f64 / 100.0;
            assert!(measured_survival(b, 0.7).unwrap() > measured_survival(a, 0.7).unwrap());
            assert!(measured_survival(0.7, b).unwrap() > measured_survival(0.7, a).unwrap());
        }
    }

    #[test]
    fn sweep_order_and_edges() {
        let rows = threshold_sweep(&[0.5, 1.0], &[0.6, 0.8, 1.0]).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!((rows[1].eta_s, rows[1].eta_d), (0.5, 0.8));
        assert_eq!((rows[3].eta_s, rows[3].eta_d), (1.0, 0.6));
        let one = &threshold_sweep(&[1.0], &[1.0]).unwrap()[0];
        assert!(one.tolerant);
        assert_eq!(
            (one.state_survival, one.measured_survival, one.epsilon),
            (1.0, 1.0, 0.0)
        );
        assert!(!threshold_sweep(&[2.0 / 3.0], &[1.0]).unwrap()[0].tolerant);
    }
}
