//! Type-II fusion: a PBS rotated by 45 degrees followed by number-resolving
//! polarization detection of both of its outputs.
//!
//! Exactly one photon at each detector is a success; every other outcome is a
//! failure and the whole branch is discarded. The four successful patterns
//! project onto different Bell states, so each gets a Pauli correction on the
//! surviving modes. The correction table is found by exhaustive search: every
//! pattern's output is mapped onto the output of the first successful pattern
//! in canonical order.

use std::collections::{BTreeMap, BTreeSet};

use crate::detection::{detect, DetectionPattern, DetectorSpec};
use crate::error::{check_probability, Error, Result};
use crate::fock::{Density, PureState, WeightedEnsemble};
use crate::ghz::ghz_state;
use crate::optics::{apply_ensemble, apply_loss_ensemble, pbs45, LossModeAllocator};
use crate::pauli::PauliString;

/// Density tolerance for accepting a correction candidate.
const CORRECTION_TOL: f64 = 1e-9;

/// Largest number of surviving spatial modes the correction search will
/// enumerate (4^k candidates).
const MAX_SEARCH_MODES: usize = 8;

/// An ideal state whose every photon-carrying spatial mode passes through an
/// independent loss channel of rate `epsilon`.
#[derive(Debug, Clone)]
pub struct IdState {
    pub ideal: PureState,
    pub epsilon: f64,
}

/// Expands an ID state into an explicit ensemble. Branches with identical
/// states are merged, so `epsilon = 0` and `epsilon = 1` give single branches.
pub fn id_expand(state: &IdState) -> Result<WeightedEnsemble> {
    let eps = check_probability("epsilon", state.epsilon)?;
    let mut alloc = LossModeAllocator::new();
    let mut e = WeightedEnsemble::pure(state.ideal.clone());
    for s in state.ideal.spatial_modes() {
        e = apply_loss_ensemble(&e, s, 1.0 - eps, &mut alloc)?;
    }
    Ok(e.merge_identical(1e-12))
}

/// `(1 - epsilon)^2 eta_d^2 / 2`.
pub fn p_ii(epsilon: f64, eta_d: f64) -> Result<f64> {
    check_probability("epsilon", epsilon)?;
    check_probability("eta_d", eta_d)?;
    Ok((1.0 - epsilon).powi(2) * eta_d * eta_d / 2.0)
}

#[derive(Debug, Clone)]
pub struct FusionResult {
    pub success_probability: f64,
    pub failure_probability: f64,
    /// Normalized, corrected output; empty when the gate cannot succeed.
    pub fused: WeightedEnsemble,
    /// Probability and correction of each successful pattern.
    pub per_pattern: BTreeMap<DetectionPattern, (f64, PauliString)>,
}

/// Finds the first Pauli string on `modes` taking `rho` to `target`.
pub fn search_correction(rho: &Density, target: &Density, modes: &[u32]) -> Option<PauliString> {
    PauliString::enumerate(modes)
        .into_iter()
        .find(|p| p.apply_density(rho).max_abs_diff(target) <= CORRECTION_TOL)
}

/// Fuses spatial mode `mode_a` of `a` with `mode_b` of `b`.
pub fn type_ii_fuse(
    a: &WeightedEnsemble,
    mode_a: u32,
    b: &WeightedEnsemble,
    mode_b: u32,
    eta_d: f64,
) -> Result<FusionResult> {
    check_probability("eta_d", eta_d)?;
    let gate = pbs45(mode_a, mode_b)?;
    let joint = a.tensor(b)?;
    let input_weight = joint.total_weight();
    let joint = apply_ensemble(&joint, &gate)?;
    let detectors = [DetectorSpec::new(mode_a, eta_d)?, DetectorSpec::new(mode_b, eta_d)?];
    let outcomes = detect(&joint, &detectors, &mut LossModeAllocator::new())?;
    let successes: Vec<_> = outcomes.into_iter().filter(|o| o.pattern.one_photon_each()).collect();
    let success_probability: f64 = successes.iter().map(|o| o.probability).sum();

    let mut per_pattern = BTreeMap::new();
    let mut fused = WeightedEnsemble::new();
    if let Some(reference) = successes.first() {
        let modes: Vec<u32> = successes
            .iter()
            .flat_map(|o| o.conditional.branches().iter().flat_map(|(_, s)| s.spatial_modes()))
            .collect::<BTreeSet<u32>>()
            .into_iter()
            .collect();
        if modes.len() > MAX_SEARCH_MODES {
            return Err(Error::SearchTooLarge(modes.len()));
        }
        let target = reference.conditional.density();
        for o in &successes {
            let fix = search_correction(&o.conditional.density(), &target, &modes)
                .ok_or_else(|| Error::NoCorrection(o.pattern.to_string()))?;
            fused.extend(
                fix.apply_ensemble(&o.conditional)
                    .scaled(o.probability / success_probability),
            );
            per_pattern.insert(o.pattern.clone(), (o.probability, fix));
        }
    }
    Ok(FusionResult {
        success_probability,
        failure_probability: input_weight - success_probability,
        fused,
        per_pattern,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdPreservationReport {
    pub success_probability: f64,
    pub expected_success: f64,
    /// Entrywise density distance between the fused output and the ID
    /// expansion of the ideal `(n + m - 2)`-photon GHZ state.
    pub density_residual: f64,
    pub passed: bool,
}

impl IdPreservationReport {
    pub fn success_residual(&self) -> f64 {
        (self.success_probability - self.expected_success).abs()
    }
}

/// Fuses ID-GHZ states of sizes `n` and `m` (same loss rate) and checks that
/// the success-conditioned output is the ID-GHZ state of size `n + m - 2`
/// with the same rate, and that success occurs with probability
/// [`p_ii`]`(epsilon, eta_d)`.
pub fn verify_id_preservation(n: usize, m: usize, epsilon: f64, eta_d: f64, tol: f64) -> Result<IdPreservationReport> {
    if n < 2 || m < 2 {
        return Err(Error::InvalidArgument(format!(
            "GHZ sizes must be at least 2, got ({n}, {m})"
        )));
    }
    check_probability("epsilon", epsilon)?;
    if epsilon >= 1.0 {
        return Err(Error::InvalidArgument("epsilon must be below 1".into()));
    }
    let a_modes: Vec<u32> = (1..=n as u32).collect();
    let b_modes: Vec<u32> = (n as u32 + 1..=(n + m) as u32).collect();
    let a = id_expand(&IdState {
        ideal: ghz_state(&a_modes),
        epsilon,
    })?;
    let b = id_expand(&IdState {
        ideal: ghz_state(&b_modes),
        epsilon,
    })?;
    let fused = type_ii_fuse(&a, n as u32, &b, n as u32 + 1, eta_d)?;
    let survivors: Vec<u32> = a_modes[..n - 1].iter().chain(&b_modes[1..]).copied().collect();
    let expected = id_expand(&IdState {
        ideal: ghz_state(&survivors),
        epsilon,
    })?;
    let density_residual = fused.fused.density().max_abs_diff(&expected.density());
    let expected_success = p_ii(epsilon, eta_d)?;
    let success_residual = (fused.success_probability - expected_success).abs();
    Ok(IdPreservationReport {
        success_probability: fused.success_probability,
        expected_success,
        density_residual,
        passed: density_residual <= tol && success_residual <= tol,
    })
}
