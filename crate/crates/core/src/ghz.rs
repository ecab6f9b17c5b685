//! The six-photon heralded GHZ factory.
//!
//! Six H-polarized photons enter spatial modes 1..6. Three rotated PBSs act on
//! the pairs (1,2), (3,4), (5,6); two ordinary PBSs mix mode 1 with modes 4
//! and 6; 45 degree rotators and number-resolving detectors sit on modes 1, 4
//! and 6. Exactly one photon at each detector heralds a GHZ-type state on
//! modes 2, 3, 5. With lossy sources the heralded output is an
//! independently-degraded GHZ state whose per-photon survival is
//! `eta_s / (2 - eta_d * eta_s)`.
//!
//! Naming note: the loss parameter `f` in the ID-GHZ mixture is a loss rate,
//! so the survival `1 - f` is what equals `eta_s / (2 - eta_s)` for perfect
//! detectors. Functions here always take and return survivals.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::detection::{
    detect, presence_patterns, DetectionOutcome, DetectionPattern, DetectorSpec, PresencePattern, SourceBankSpec,
};
use crate::error::{check_probability, Error, Result};
use crate::fock::{Density, FockBasis, ModeLabel, PureState, WeightedEnsemble};
use crate::optics::{
    apply_ensemble, pbs, pbs45, rotate45, rotate45_with, LinearModeTransform, LossModeAllocator, RotatorConvention,
};
use crate::pauli::PauliString;

pub const INPUT_MODES: [u32; 6] = [1, 2, 3, 4, 5, 6];
pub const HERALD_MODES: [u32; 3] = [1, 4, 6];
pub const OUTPUT_MODES: [u32; 3] = [2, 3, 5];

/// Threshold on `|<GHZ|P psi>|` accepted by the correction search.
const CORRECTION_FIDELITY_TOL: f64 = 1e-10;

/// `(|H...H> + |V...V>)/sqrt2` on the given spatial modes.
pub fn ghz_state(modes: &[u32]) -> PureState {
    let hs = FockBasis::from_photons(modes.iter().map(|&m| ModeLabel::h(m)));
    let vs = FockBasis::from_photons(modes.iter().map(|&m| ModeLabel::v(m)));
    let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
    PureState::from_terms([(hs, a), (vs, a)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Element {
    Pbs45(u32, u32),
    Pbs(u32, u32),
    Rotate45(u32),
    Detector(u32),
}

impl Element {
    pub fn transform(&self, convention: RotatorConvention) -> Option<LinearModeTransform> {
        match *self {
            Element::Pbs45(i, j) => Some(pbs45(i, j).expect("distinct modes")),
            Element::Pbs(i, j) => Some(pbs(i, j).expect("distinct modes")),
            Element::Rotate45(i) => Some(rotate45_with(i, convention)),
            Element::Detector(_) => None,
        }
    }
}

/// The factory circuit in application order: 8 transforms, then 3 detectors.
pub fn build_ghz_circuit() -> Vec<Element> {
    use Element::*;
    vec![
        Pbs45(1, 2),
        Pbs45(3, 4),
        Pbs45(5, 6),
        Pbs(1, 4),
        Pbs(1, 6),
        Rotate45(1),
        Rotate45(4),
        Rotate45(6),
        Detector(1),
        Detector(4),
        Detector(6),
    ]
}

#[derive(Debug, Clone)]
pub struct PatternRecord {
    /// Joint probability of the input distribution and this pattern.
    pub probability: f64,
    /// Normalized output after the correction.
    pub conditional: WeightedEnsemble,
    pub correction: PauliString,
}

/// How one presence pattern of the sources contributed to heralding.
#[derive(Debug, Clone)]
pub struct PresenceContribution {
    pub presence: PresencePattern,
    pub weight: f64,
    /// Success probability given this input.
    pub herald_probability: f64,
}

#[derive(Debug, Clone)]
pub struct GhzFactoryResult {
    pub success_probability: f64,
    /// Normalized, corrected output on modes 2, 3, 5.
    pub output: WeightedEnsemble,
    pub per_pattern: BTreeMap<DetectionPattern, PatternRecord>,
    pub contributions: Vec<PresenceContribution>,
}

impl GhzFactoryResult {
    /// Output density scaled by the success probability.
    pub fn unnormalized_density(&self) -> Density {
        self.output.density().scaled(self.success_probability)
    }

    /// Unnormalized weight of the 0-, 1-, 2- and 3-photon output sectors.
    pub fn sector_weights(&self) -> [f64; 4] {
        let w = self.unnormalized_density().sector_weights();
        std::array::from_fn(|n| w.get(&(n as u32)).copied().unwrap_or(0.0))
    }

    pub fn mean_photon_number(&self) -> f64 {
        let w = self.output.density().sector_weights();
        w.iter().map(|(&n, &p)| f64::from(n) * p).sum()
    }

    /// Per-photon survival read off the output's mean photon number; for an
    /// ID-GHZ state on three photons this is exact.
    pub fn fitted_survival(&self) -> f64 {
        self.mean_photon_number() / 3.0
    }

    /// Largest density difference between any two corrected per-pattern
    /// outputs.
    pub fn correction_residual(&self) -> f64 {
        let mut it = self.per_pattern.values().map(|r| r.conditional.density());
        let Some(first) = it.next() else { return 0.0 };
        it.map(|d| d.max_abs_diff(&first)).fold(0.0, f64::max)
    }
}

/// The factory circuit together with its per-pattern correction table.
#[derive(Debug, Clone)]
pub struct GhzFactory {
    convention: RotatorConvention,
    transforms: Vec<LinearModeTransform>,
    corrections: BTreeMap<DetectionPattern, PauliString>,
}

impl GhzFactory {
    /// Builds the circuit and derives the correction table from the ideal
    /// six-photon run: each heralding pattern gets the first Pauli string on
    /// modes 2, 3, 5 that maps its output onto `|GHZ>`.
    pub fn new(convention: RotatorConvention) -> Result<Self> {
        let transforms = build_ghz_circuit()
            .iter()
            .filter_map(|e| e.transform(convention))
            .collect();
        let mut f = GhzFactory {
            convention,
            transforms,
            corrections: BTreeMap::new(),
        };
        let all = PresencePattern { present: vec![true; 6] };
        let outcomes = f.herald(&all, 1.0, &mut LossModeAllocator::new())?;
        let target = ghz_state(&OUTPUT_MODES);
        let candidates = PauliString::enumerate(&OUTPUT_MODES);
        for o in outcomes.iter().filter(|o| o.pattern.one_photon_each()) {
            let [(_, psi)] = o.conditional.branches() else {
                return Err(Error::NoCorrection(o.pattern.to_string()));
            };
            let fix = candidates
                .iter()
                .find(|p| (1.0 - target.inner(&p.apply_state(psi)).norm()).abs() < CORRECTION_FIDELITY_TOL)
                .ok_or_else(|| Error::NoCorrection(o.pattern.to_string()))?;
            f.corrections.insert(o.pattern.clone(), fix.clone());
        }
        if f.corrections.len() != 8 {
            return Err(Error::InvalidArgument(format!(
                "expected 8 heralding patterns, found {}",
                f.corrections.len()
            )));
        }
        Ok(f)
    }

    pub fn convention(&self) -> RotatorConvention {
        self.convention
    }

    pub fn corrections(&self) -> &BTreeMap<DetectionPattern, PauliString> {
        &self.corrections
    }

    pub fn local_correction_for_pattern(&self, pattern: &DetectionPattern) -> Result<PauliString> {
        self.corrections
            .get(pattern)
            .cloned()
            .ok_or_else(|| Error::UnknownPattern(pattern.to_string()))
    }

    /// All detection outcomes (uncorrected) for one definite input.
    pub fn herald(
        &self,
        presence: &PresencePattern,
        eta_d: f64,
        alloc: &mut LossModeAllocator,
    ) -> Result<Vec<DetectionOutcome>> {
        check_probability("eta_d", eta_d)?;
        let modes: Vec<ModeLabel> = INPUT_MODES.iter().map(|&s| ModeLabel::h(s)).collect();
        let mut state = presence
            .state(&modes)
            .with_modes(INPUT_MODES.iter().map(|&s| ModeLabel::v(s)));
        for t in &self.transforms {
            state = t.apply(&state)?;
        }
        let detectors: Vec<DetectorSpec> = HERALD_MODES
            .iter()
            .map(|&s| DetectorSpec::new(s, eta_d))
            .collect::<Result<_>>()?;
        detect(&WeightedEnsemble::pure(state), &detectors, alloc)
    }

    /// Runs the factory on lossy sources and detectors.
    pub fn run(&self, eta_s: f64, eta_d: f64) -> Result<GhzFactoryResult> {
        let bank = SourceBankSpec::horizontal(&INPUT_MODES, eta_s)?;
        let inputs: Vec<(PresencePattern, f64)> =
            presence_patterns(&bank).into_iter().filter(|(_, w)| *w > 0.0).collect();
        self.run_inputs(&inputs, eta_d)
    }

    /// Runs the factory on an arbitrary weighted set of definite inputs.
    /// Weights need not sum to one; probabilities are joint with them.
    pub fn run_inputs(&self, inputs: &[(PresencePattern, f64)], eta_d: f64) -> Result<GhzFactoryResult> {
        check_probability("eta_d", eta_d)?;
        let per_input: Vec<Vec<DetectionOutcome>> = inputs
            .par_iter()
            .map(|(p, _)| {
                let mut alloc = LossModeAllocator::new();
                self.herald(p, eta_d, &mut alloc)
                    .map(|os| os.into_iter().filter(|o| o.pattern.one_photon_each()).collect())
            })
            .collect::<Result<_>>()?;

        let mut acc: BTreeMap<DetectionPattern, (f64, WeightedEnsemble)> = BTreeMap::new();
        let mut contributions = Vec::with_capacity(inputs.len());
        for ((presence, w), outcomes) in inputs.iter().zip(per_input) {
            let mut herald_probability = 0.0;
            for o in outcomes {
                let fix = self.local_correction_for_pattern(&o.pattern)?;
                let joint = w * o.probability;
                herald_probability += o.probability;
                let slot = acc.entry(o.pattern).or_default();
                slot.0 += joint;
                slot.1.extend(fix.apply_ensemble(&o.conditional).scaled(joint));
            }
            contributions.push(PresenceContribution {
                presence: presence.clone(),
                weight: *w,
                herald_probability,
            });
        }

        let success_probability: f64 = acc.values().map(|(p, _)| p).sum();
        let mut output = WeightedEnsemble::new();
        let mut per_pattern = BTreeMap::new();
        for (pattern, (p, e)) in acc {
            output.extend(e.scaled(1.0 / success_probability));
            per_pattern.insert(
                pattern.clone(),
                PatternRecord {
                    probability: p,
                    conditional: e.scaled(1.0 / p),
                    correction: self.corrections[&pattern].clone(),
                },
            );
        }
        Ok(GhzFactoryResult {
            success_probability,
            output,
            per_pattern,
            contributions,
        })
    }
}

/// The factory with the standard rotator convention, built once.
pub fn standard_factory() -> &'static GhzFactory {
    static FACTORY: OnceLock<GhzFactory> = OnceLock::new();
    FACTORY.get_or_init(|| GhzFactory::new(RotatorConvention::Standard).expect("factory correction table"))
}

pub fn run_ghz_factory(eta_s: f64, eta_d: f64) -> Result<GhzFactoryResult> {
    standard_factory().run(eta_s, eta_d)
}

pub fn local_correction_for_pattern(pattern: &DetectionPattern) -> Result<PauliString> {
    standard_factory().local_correction_for_pattern(pattern)
}

/// The ID-GHZ mixture on modes 2, 3, 5 for per-photon survival `s`, as an
/// ensemble: `s^3` GHZ, `s^2 f / 2` on each of `|H_iH_j>`, `|V_iV_j>`,
/// `s f^2 / 2` on each single photon and `f^3` vacuum, with `f = 1 - s`.
pub fn analytic_id_ghz_ensemble(survival: f64) -> Result<WeightedEnsemble> {
    let s = check_probability("survival", survival)?;
    let f = 1.0 - s;
    let mut e = WeightedEnsemble::new();
    e.push(s.powi(3), ghz_state(&OUTPUT_MODES));
    for (a, &i) in OUTPUT_MODES.iter().enumerate() {
        for &j in &OUTPUT_MODES[a + 1..] {
            e.push(s * s * f / 2.0, PureState::photons([ModeLabel::h(i), ModeLabel::h(j)]));
            e.push(s * s * f / 2.0, PureState::photons([ModeLabel::v(i), ModeLabel::v(j)]));
        }
    }
    for &i in &OUTPUT_MODES {
        e.push(s * f * f / 2.0, PureState::photons([ModeLabel::h(i)]));
        e.push(s * f * f / 2.0, PureState::photons([ModeLabel::v(i)]));
    }
    e.push(f.powi(3), PureState::vacuum());
    Ok(e)
}

pub fn analytic_id_ghz(survival: f64) -> Result<Density> {
    Ok(analytic_id_ghz_ensemble(survival)?.density())
}

/// Per-photon survival of the heralded state itself:
/// `eta_s / (2 - eta_d * eta_s)`.
pub fn effective_survival(eta_s: f64, eta_d: f64) -> Result<f64> {
    check_probability("eta_s", eta_s)?;
    check_probability("eta_d", eta_d)?;
    Ok(eta_s / (2.0 - eta_d * eta_s))
}

/// Measurement basis for the output statistics used by the equivalence check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OutputBasis {
    Rectilinear,
    Diagonal,
}

type StatKey = (DetectionPattern, OutputBasis, DetectionPattern);

/// Joint distribution of (heralding pattern, basis, final pattern) when the
/// corrected outputs are measured with `eta_final`-efficient detectors.
pub fn heralded_statistics(result: &GhzFactoryResult, eta_final: f64) -> Result<BTreeMap<StatKey, f64>> {
    let detectors: Vec<DetectorSpec> = OUTPUT_MODES
        .iter()
        .map(|&s| DetectorSpec::new(s, eta_final))
        .collect::<Result<_>>()?;
    let mut alloc = LossModeAllocator::new();
    let mut out = BTreeMap::new();
    for (herald, rec) in &result.per_pattern {
        for basis in [OutputBasis::Rectilinear, OutputBasis::Diagonal] {
            let mut e = rec.conditional.clone();
            if basis == OutputBasis::Diagonal {
                for &m in &OUTPUT_MODES {
                    e = apply_ensemble(&e, &rotate45(m))?;
                }
            }
            for o in detect(&e, &detectors, &mut alloc)? {
                out.insert((herald.clone(), basis, o.pattern), rec.probability * o.probability);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    /// Success probability with sources `eta_s` and detectors `eta_d`.
    pub success_lossy_detectors: f64,
    /// Success probability with sources `eta_s * eta_d` and perfect detectors.
    pub success_lossy_sources: f64,
    /// Largest difference over success probability and all joint output
    /// statistics.
    pub residual: f64,
    pub passed: bool,
}

/// Compares the factory with (`eta_s`, detectors `eta_d`, final measurement
/// `eta_d`) against (`eta_s * eta_d`, perfect detectors, perfect final
/// measurement).
pub fn verify_equivalence(eta_s: f64, eta_d: f64, tol: f64) -> Result<EquivalenceReport> {
    check_probability("eta_s", eta_s)?;
    check_probability("eta_d", eta_d)?;
    let a = run_ghz_factory(eta_s, eta_d)?;
    let b = run_ghz_factory(eta_s * eta_d, 1.0)?;
    let sa = heralded_statistics(&a, eta_d)?;
    let sb = heralded_statistics(&b, 1.0)?;
    let mut residual = (a.success_probability - b.success_probability).abs();
    for k in sa.keys().chain(sb.keys()) {
        let pa = sa.get(k).copied().unwrap_or(0.0);
        let pb = sb.get(k).copied().unwrap_or(0.0);
        residual = residual.max((pa - pb).abs());
    }
    Ok(EquivalenceReport {
        success_lossy_detectors: a.success_probability,
        success_lossy_sources: b.success_probability,
        residual,
        passed: residual <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::PolCounts;
    use crate::fock::{ensembles_equal_as_density, DENSITY_TOL};

    fn hhh() -> DetectionPattern {
        DetectionPattern::new(HERALD_MODES.map(|s| (s, PolCounts { h: 1, v: 0 })))
    }

    fn presence(missing: &[u32]) -> PresencePattern {
        PresencePattern {
            present: INPUT_MODES.iter().map(|m| !missing.contains(m)).collect(),
        }
    }

    #[test]
    fn circuit_layout() {
        let c = build_ghz_circuit();
        assert_eq!(c.len(), 11);
        let transforms: Vec<_> = c
            .iter()
            .filter_map(|e| e.transform(RotatorConvention::Standard))
            .collect();
        assert_eq!(transforms.len(), 8);
        assert!(transforms.iter().all(|t| t.isometry_deviation() <= 1e-12));
        let detected: Vec<u32> = c
            .iter()
            .filter_map(|e| match e {
                Element::Detector(m) => Some(*m),
                _ => None,
            })
            .collect();
        assert_eq!(detected, HERALD_MODES);
    }

    #[test]
    fn ideal_run_gives_ghz() {
        let r = run_ghz_factory(1.0, 1.0).unwrap();
        assert!((r.success_probability - 1.0 / 32.0).abs() < 1e-12);
        assert_eq!(r.per_pattern.len(), 8);
        for rec in r.per_pattern.values() {
            assert!((rec.probability - 1.0 / 256.0).abs() < 1e-12);
        }
        let ghz = WeightedEnsemble::pure(ghz_state(&OUTPUT_MODES));
        assert!(ensembles_equal_as_density(&r.output, &ghz, DENSITY_TOL));
    }

    #[test]
    fn hhh_pattern_needs_no_correction() {
        assert!(local_correction_for_pattern(&hhh()).unwrap().is_identity());
        let bogus = DetectionPattern::new(HERALD_MODES.map(|s| (s, PolCounts { h: 2, v: 0 })));
        assert!(matches!(
            local_correction_for_pattern(&bogus),
            Err(Error::UnknownPattern(_))
        ));
    }

    #[test]
    fn corrections_restore_ghz_for_every_pattern() {
        let f = standard_factory();
        let outcomes = f.herald(&presence(&[]), 1.0, &mut LossModeAllocator::new()).unwrap();
        let ghz = ghz_state(&OUTPUT_MODES);
        for o in outcomes.iter().filter(|o| o.pattern.one_photon_each()) {
            let fix = f.local_correction_for_pattern(&o.pattern).unwrap();
            let psi = &o.conditional.branches()[0].1;
            assert!((ghz.inner(&fix.apply_state(psi)).norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn hhh_ideal_conditional_is_ghz_with_amplitude_one_sixteenth() {
        let f = standard_factory();
        let outcomes = f.herald(&presence(&[]), 1.0, &mut LossModeAllocator::new()).unwrap();
        let o = outcomes.iter().find(|o| o.pattern == hhh()).unwrap();
        assert!((o.probability - 1.0 / 256.0).abs() < 1e-14);
        let psi = &o.conditional.branches()[0].1;
        assert!((psi.inner(&ghz_state(&OUTPUT_MODES)) - 1.0).norm() < 1e-12);
    }

    #[test]
    fn five_photon_inputs_give_bell_pairs() {
        let f = standard_factory();
        // photon from mode 2 missing -> Phi+ on 3,5; from mode 1 -> Phi-
        for (missing, sign) in [(2, 1.0), (1, -1.0)] {
            let outcomes = f
                .herald(&presence(&[missing]), 1.0, &mut LossModeAllocator::new())
                .unwrap();
            let success: f64 = outcomes
                .iter()
                .filter(|o| o.pattern.one_photon_each())
                .map(|o| o.probability)
                .sum();
            assert!((success - 1.0 / 32.0).abs() < 1e-12);
            let o = outcomes.iter().find(|o| o.pattern == hhh()).unwrap();
            let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
            let bell = PureState::from_terms([
                (FockBasis::from_photons([ModeLabel::h(3), ModeLabel::h(5)]), a),
                (FockBasis::from_photons([ModeLabel::v(3), ModeLabel::v(5)]), a * sign),
            ]);
            assert!((o.conditional.branches()[0].1.inner(&bell).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rotator_convention_does_not_change_probabilities() {
        let alt = GhzFactory::new(RotatorConvention::Alternate).unwrap();
        for eta_s in [1.0, 0.8] {
            let a = run_ghz_factory(eta_s, 1.0).unwrap();
            let b = alt.run(eta_s, 1.0).unwrap();
            assert!((a.success_probability - b.success_probability).abs() < 1e-12);
            for (k, rec) in &a.per_pattern {
                assert!((rec.probability - b.per_pattern[k].probability).abs() < 1e-12);
            }
            assert!(ensembles_equal_as_density(&a.output, &b.output, DENSITY_TOL));
        }
    }

    #[test]
    fn analytic_mixture_edges() {
        let one = analytic_id_ghz(1.0).unwrap();
        let ghz = WeightedEnsemble::pure(ghz_state(&OUTPUT_MODES)).density();
        assert!(one.max_abs_diff(&ghz) < 1e-15);
        let zero = analytic_id_ghz(0.0).unwrap();
        let vac = WeightedEnsemble::pure(PureState::vacuum()).density();
        assert!(zero.max_abs_diff(&vac) < 1e-15);
        for s in [0.0, 0.3, 0.9 / 1.1, 1.0] {
            assert!((analytic_id_ghz(s).unwrap().trace() - 1.0).abs() < 1e-14);
        }
        assert!(analytic_id_ghz(1.1).is_err());
    }

    #[test]
    fn effective_survival_values() {
        assert_eq!(effective_survival(1.0, 1.0).unwrap(), 1.0);
        assert!((effective_survival(0.9, 1.0).unwrap() - 0.818_181_818_181_818_2).abs() < 1e-15);
        assert!((effective_survival(0.9, 0.9).unwrap() - 0.9 / 1.19).abs() < 1e-15);
        assert!(effective_survival(-0.1, 1.0).is_err());
    }

    #[test]
    fn sector_weights_follow_source_statistics() {
        let diag = |rho: &Density, photons: &[ModeLabel]| {
            let b = FockBasis::from_photons(photons.iter().copied());
            rho.get(&b, &b).re
        };
        for eta in [0.6, 0.75, 0.9, 1.0] {
            let r = run_ghz_factory(eta, 1.0).unwrap();
            let f = 1.0 - eta;
            let (c3, c2, c1, c0) = (
                eta.powi(6) / 32.0,
                eta.powi(5) * f / 32.0,
                eta.powi(4) * f * f / 16.0,
                eta.powi(3) * f.powi(3) / 4.0,
            );
            // six two-photon and six one-photon projectors carry c2 and c1 each
            let expected = [c0, 6.0 * c1, 6.0 * c2, c3];
            let w = r.sector_weights();
            for n in 0..4 {
                assert!((w[n] - expected[n]).abs() < 1e-14, "eta {eta} sector {n}");
            }
            let rho = r.unnormalized_density();
            assert!((diag(&rho, &[]) - c0).abs() < 1e-14);
            for &m in &OUTPUT_MODES {
                assert!((diag(&rho, &[ModeLabel::h(m)]) - c1).abs() < 1e-14);
                assert!((diag(&rho, &[ModeLabel::v(m)]) - c1).abs() < 1e-14);
            }
            for (a, &i) in OUTPUT_MODES.iter().enumerate() {
                for &j in &OUTPUT_MODES[a + 1..] {
                    assert!((diag(&rho, &[ModeLabel::h(i), ModeLabel::h(j)]) - c2).abs() < 1e-14);
                    assert!((diag(&rho, &[ModeLabel::v(i), ModeLabel::v(j)]) - c2).abs() < 1e-14);
                }
            }
            let hhh = OUTPUT_MODES.map(ModeLabel::h);
            assert!((diag(&rho, &hhh) - c3 / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn lossy_sources_give_id_ghz() {
        for eta in [0.6, 0.7, 0.8, 0.9, 1.0] {
            let r = run_ghz_factory(eta, 1.0).unwrap();
            let s = effective_survival(eta, 1.0).unwrap();
            assert!(r.output.density().max_abs_diff(&analytic_id_ghz(s).unwrap()) < DENSITY_TOL);
            assert!((r.fitted_survival() - s).abs() < 1e-12);
            assert!(r.correction_residual() < DENSITY_TOL);
        }
    }

    #[test]
    fn lossy_detectors_give_id_ghz_with_effective_survival() {
        for (es, ed) in [(0.9, 0.8), (0.7, 0.95), (1.0, 0.6)] {
            let r = run_ghz_factory(es, ed).unwrap();
            let s = effective_survival(es, ed).unwrap();
            assert!(r.output.density().max_abs_diff(&analytic_id_ghz(s).unwrap()) < DENSITY_TOL);
        }
    }

    #[test]
    fn equivalence_on_grid() {
        for es in [0.6, 0.8, 1.0] {
            for ed in [0.7, 0.9] {
                let rep = verify_equivalence(es, ed, 1e-10).unwrap();
                assert!(rep.passed, "{es} {ed} {rep:?}");
                assert!((rep.success_lossy_detectors - rep.success_lossy_sources).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn herald_probability_by_photon_number() {
        let r = run_ghz_factory(0.5, 1.0).unwrap();
        assert_eq!(r.contributions.len(), 64);
        let by = |n: usize| -> Vec<f64> {
            r.contributions
                .iter()
                .filter(|c| c.presence.count_present() == n)
                .map(|c| c.herald_probability)
                .collect()
        };
        // every heralding input succeeds with 1/32; count how many do
        let heralding = |n: usize| {
            let ps = by(n);
            assert!(ps.iter().all(|&p| p < 1e-14 || (p - 1.0 / 32.0).abs() < 1e-12));
            ps.iter().filter(|&&p| p > 1e-14).count()
        };
        assert_eq!(heralding(6), 1);
        assert_eq!(heralding(5), 6);
        assert_eq!(heralding(4), 12);
        assert_eq!(heralding(3), 8);
        assert!((by(3).iter().sum::<f64>() - 0.25).abs() < 1e-12);
        assert!(by(2).iter().chain(&by(1)).chain(&by(0)).all(|&p| p < 1e-14));
    }
}
