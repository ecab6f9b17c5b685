//! Lossy single-photon sources and inefficient number-resolving
//! polarization detectors.
//!
//! A source of efficiency `eta_s` emits `eta_s |1><1| + (1 - eta_s) |0><0|`.
//! A detector of efficiency `eta_d` is a perfect photon counter behind a
//! beamsplitter of transmissivity `eta_d`. All probabilities are exact sums
//! over branches; nothing is sampled.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{check_probability, Error, Result};
use crate::fock::{ModeLabel, PureState, WeightedEnsemble};
use crate::optics::{apply_loss_ensemble, LossModeAllocator};

#[derive(Debug, Clone, PartialEq)]
pub struct SourceBankSpec {
    modes: Vec<ModeLabel>,
    eta_s: f64,
}

impl SourceBankSpec {
    pub fn new(modes: Vec<ModeLabel>, eta_s: f64) -> Result<Self> {
        check_probability("eta_s", eta_s)?;
        let mut seen = BTreeSet::new();
        if let Some(m) = modes.iter().find(|m| !seen.insert(**m)) {
            return Err(Error::DuplicateMode(*m));
        }
        Ok(Self { modes, eta_s })
    }

    /// One H-polarized source on each listed spatial mode.
    pub fn horizontal(spatial: &[u32], eta_s: f64) -> Result<Self> {
        Self::new(spatial.iter().map(|&s| ModeLabel::h(s)).collect(), eta_s)
    }

    pub fn modes(&self) -> &[ModeLabel] {
        &self.modes
    }

    pub fn eta_s(&self) -> f64 {
        self.eta_s
    }
}

/// Which sources of a bank actually emitted a photon.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PresencePattern {
    pub present: Vec<bool>,
}

impl PresencePattern {
    pub fn count_present(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }

    /// `eta^k (1 - eta)^(n - k)`.
    pub fn weight(&self, eta_s: f64) -> f64 {
        let k = self.count_present() as i32;
        let n = self.present.len() as i32;
        eta_s.powi(k) * (1.0 - eta_s).powi(n - k)
    }

    pub fn state(&self, modes: &[ModeLabel]) -> PureState {
        PureState::photons(modes.iter().zip(&self.present).filter(|(_, &p)| p).map(|(m, _)| *m))
            .with_modes(modes.iter().copied())
    }
}

/// Every presence pattern of the bank with its weight, starting from "all
/// present".
pub fn presence_patterns(spec: &SourceBankSpec) -> Vec<(PresencePattern, f64)> {
    let n = spec.modes.len();
    (0..1u64 << n)
        .map(|mask| {
            let present = (0..n).map(|i| mask >> i & 1 == 0).collect();
            let p = PresencePattern { present };
            let w = p.weight(spec.eta_s);
            (p, w)
        })
        .collect()
}

/// The bank's output as an ensemble with one branch per presence pattern of
/// nonzero weight.
pub fn source_bank(spec: &SourceBankSpec) -> WeightedEnsemble {
    let mut e = WeightedEnsemble::new();
    for (p, w) in presence_patterns(spec) {
        if w > 0.0 {
            e.push(w, p.state(&spec.modes));
        }
    }
    e
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec {
    pub spatial: u32,
    pub eta_d: f64,
    pub number_resolving: bool,
}

impl DetectorSpec {
    pub fn new(spatial: u32, eta_d: f64) -> Result<Self> {
        check_probability("eta_d", eta_d)?;
        Ok(Self {
            spatial,
            eta_d,
            number_resolving: true,
        })
    }
}

/// Photon counts registered by one polarization-resolving detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PolCounts {
    pub h: u32,
    pub v: u32,
}

impl PolCounts {
    pub fn total(&self) -> u32 {
        self.h + self.v
    }
}

/// Counts per detector, sorted by spatial index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DetectionPattern(Vec<(u32, PolCounts)>);

impl DetectionPattern {
    pub fn new<I: IntoIterator<Item = (u32, PolCounts)>>(counts: I) -> Self {
        let mut v: Vec<_> = counts.into_iter().collect();
        v.sort_by_key(|&(s, _)| s);
        Self(v)
    }

    pub fn counts(&self) -> &[(u32, PolCounts)] {
        &self.0
    }

    pub fn at(&self, spatial: u32) -> PolCounts {
        self.0
            .iter()
            .find(|(s, _)| *s == spatial)
            .map(|&(_, c)| c)
            .unwrap_or_default()
    }

    /// True iff every detector saw exactly one photon.
    pub fn one_photon_each(&self) -> bool {
        self.0.iter().all(|(_, c)| c.total() == 1)
    }
}

impl fmt::Display for DetectionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (s, c)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{s}:")?;
            if c.total() == 0 {
                write!(f, "-")?;
            }
            for _ in 0..c.h {
                write!(f, "H")?;
            }
            for _ in 0..c.v {
                write!(f, "V")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DetectionOutcome {
    pub pattern: DetectionPattern,
    pub probability: f64,
    /// Normalized state of the undetected modes given this pattern.
    pub conditional: WeightedEnsemble,
}

/// Measures the listed spatial modes with lossy number-resolving
/// polarization detectors. Outcomes are returned in canonical pattern order;
/// their probabilities sum to the input's total weight.
pub fn detect(
    ensemble: &WeightedEnsemble,
    detectors: &[DetectorSpec],
    alloc: &mut LossModeAllocator,
) -> Result<Vec<DetectionOutcome>> {
    let mut seen = BTreeSet::new();
    for d in detectors {
        check_probability("eta_d", d.eta_d)?;
        if !d.number_resolving {
            return Err(Error::UnsupportedDetector);
        }
        if !seen.insert(d.spatial) {
            return Err(Error::InvalidArgument(format!(
                "detector on mode {} listed twice",
                d.spatial
            )));
        }
    }
    let mut detectors: Vec<DetectorSpec> = detectors.to_vec();
    detectors.sort_by_key(|d| d.spatial);
    let pattern_of = |b: &crate::fock::FockBasis| {
        DetectionPattern(
            detectors
                .iter()
                .map(|d| {
                    (
                        d.spatial,
                        PolCounts {
                            h: b.count(ModeLabel::h(d.spatial)),
                            v: b.count(ModeLabel::v(d.spatial)),
                        },
                    )
                })
                .collect(),
        )
    };
    let mut acc: BTreeMap<DetectionPattern, (f64, WeightedEnsemble)> = BTreeMap::new();
    for (w, s) in ensemble.branches() {
        let mut e = WeightedEnsemble::pure(s.clone());
        for d in &detectors {
            e = apply_loss_ensemble(&e, d.spatial, d.eta_d, alloc)?;
        }
        for (w2, s2) in e.branches() {
            for (pattern, part) in s2.split_by(pattern_of) {
                let joint = w * w2 * part.norm_sqr();
                if joint <= 0.0 {
                    continue;
                }
                let rest = part
                    .drop_modes(|m| detectors.iter().any(|d| d.spatial == m.spatial))
                    .normalized()
                    .expect("nonzero part");
                let slot = acc.entry(pattern).or_default();
                slot.0 += joint;
                slot.1.push(joint, rest);
            }
        }
    }
    Ok(acc
        .into_iter()
        .map(|(pattern, (p, e))| DetectionOutcome {
            pattern,
            probability: p,
            conditional: e.scaled(1.0 / p),
        })
        .collect())
}

/// Result of conditioning on a set of detection patterns.
#[derive(Debug, Clone)]
pub enum Herald {
    /// No outcome matching the predicate has nonzero probability.
    Empty,
    Success {
        probability: f64,
        state: WeightedEnsemble,
    },
}

impl Herald {
    pub fn probability(&self) -> f64 {
        match self {
            Herald::Empty => 0.0,
            Herald::Success { probability, .. } => *probability,
        }
    }
}

pub fn post_select<F: Fn(&DetectionPattern) -> bool>(outcomes: &[DetectionOutcome], pred: F) -> Herald {
    let matching: Vec<&DetectionOutcome> = outcomes.iter().filter(|o| pred(&o.pattern)).collect();
    let total: f64 = matching.iter().map(|o| o.probability).sum();
    if total <= 0.0 {
        return Herald::Empty;
    }
    let mut state = WeightedEnsemble::new();
    for o in matching {
        state.extend(o.conditional.scaled(o.probability / total));
    }
    Herald::Success {
        probability: total,
        state,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{ensembles_equal_as_density, DENSITY_TOL};

    fn single(s: PureState, detectors: &[DetectorSpec]) -> Vec<DetectionOutcome> {
        detect(&WeightedEnsemble::pure(s), detectors, &mut LossModeAllocator::new()).unwrap()
    }

    #[test]
    fn source_bank_examples() {
        let one = source_bank(&SourceBankSpec::horizontal(&[1], 0.8).unwrap());
        let expected = WeightedEnsemble::from_branches(vec![
            (0.8, PureState::photons([ModeLabel::h(1)])),
            (0.2, PureState::vacuum()),
        ])
        .unwrap();
        assert!(ensembles_equal_as_density(&one, &expected, 1e-15));

        let two = source_bank(&SourceBankSpec::horizontal(&[1, 2], 1.0).unwrap());
        assert_eq!(two.len(), 1);
        assert_eq!(two.branches()[0].1.photon_number(), Some(2));

        let six = source_bank(&SourceBankSpec::horizontal(&[1, 2, 3, 4, 5, 6], 0.37).unwrap());
        assert_eq!(six.len(), 64);
        assert!((six.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn source_bank_validation() {
        assert!(SourceBankSpec::horizontal(&[1], 1.5).is_err());
        assert!(matches!(
            SourceBankSpec::horizontal(&[1, 1], 0.5),
            Err(Error::DuplicateMode(_))
        ));
    }

    #[test]
    fn perfect_detector_on_single_photon() {
        let out = single(
            PureState::photons([ModeLabel::h(1)]),
            &[DetectorSpec::new(1, 1.0).unwrap()],
        );
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].pattern.at(1), PolCounts { h: 1, v: 0 });
        assert!((out[0].probability - 1.0).abs() < 1e-15);
    }

    #[test]
    fn half_efficient_detector() {
        let out = single(
            PureState::photons([ModeLabel::h(1)]),
            &[DetectorSpec::new(1, 0.5).unwrap()],
        );
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].pattern.at(1).total(), 0);
        assert!((out[0].probability - 0.5).abs() < 1e-14);
        assert_eq!(out[1].pattern.at(1), PolCounts { h: 1, v: 0 });
        assert!((out[1].probability - 0.5).abs() < 1e-14);
    }

    #[test]
    fn two_photons_one_mode_binomial_loss() {
        for eta in [0.0, 0.3, 0.9, 1.0] {
            let s = PureState::photons([ModeLabel::h(1), ModeLabel::h(1)]);
            let out = single(s, &[DetectorSpec::new(1, eta).unwrap()]);
            let p1: f64 = out
                .iter()
                .filter(|o| o.pattern.at(1).total() == 1)
                .map(|o| o.probability)
                .sum();
            assert!((p1 - 2.0 * eta * (1.0 - eta)).abs() < 1e-12, "eta={eta}");
        }
    }

    #[test]
    fn two_photons_in_one_mode_never_split_across_detectors() {
        let s = PureState::photons([ModeLabel::h(1), ModeLabel::h(1)]).with_modes([ModeLabel::h(2)]);
        let d = [DetectorSpec::new(1, 0.7).unwrap(), DetectorSpec::new(2, 0.7).unwrap()];
        let out = single(s, &d);
        assert!(out.iter().all(|o| !o.pattern.one_photon_each()));
    }

    #[test]
    fn probabilities_sum_to_input_weight() {
        let bank = source_bank(&SourceBankSpec::horizontal(&[1, 2, 3], 0.6).unwrap()).scaled(0.5);
        let d: Vec<_> = [1, 3].iter().map(|&s| DetectorSpec::new(s, 0.8).unwrap()).collect();
        let out = detect(&bank, &d, &mut LossModeAllocator::new()).unwrap();
        let total: f64 = out.iter().map(|o| o.probability).sum();
        assert!((total - 0.5).abs() < 1e-12);
        // canonical order
        assert!(out.windows(2).all(|w| w[0].pattern < w[1].pattern));
    }

    #[test]
    fn conditional_state_of_undetected_modes() {
        // (|H1 H2> + |V1 V2>)/sqrt2, detect mode 1 -> mode 2 collapses
        let s = PureState::from_terms([
            (
                crate::fock::FockBasis::from_photons([ModeLabel::h(1), ModeLabel::h(2)]),
                num_complex::Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            ),
            (
                crate::fock::FockBasis::from_photons([ModeLabel::v(1), ModeLabel::v(2)]),
                num_complex::Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            ),
        ]);
        let out = single(s, &[DetectorSpec::new(1, 1.0).unwrap()]);
        assert_eq!(out.len(), 2);
        let o = out.iter().find(|o| o.pattern.at(1).h == 1).unwrap();
        assert!((o.probability - 0.5).abs() < 1e-14);
        let h = WeightedEnsemble::pure(PureState::photons([ModeLabel::h(2)]));
        assert!(ensembles_equal_as_density(&o.conditional, &h, DENSITY_TOL));
    }

    #[test]
    fn post_select_cases() {
        let bank = source_bank(&SourceBankSpec::horizontal(&[1, 2], 0.5).unwrap());
        let out = detect(
            &bank,
            &[DetectorSpec::new(1, 1.0).unwrap()],
            &mut LossModeAllocator::new(),
        )
        .unwrap();
        match post_select(&out, |_| true) {
            Herald::Success { probability, state } => {
                assert!((probability - 1.0).abs() < 1e-14);
                assert!((state.total_weight() - 1.0).abs() < 1e-14);
            }
            Herald::Empty => panic!("expected success"),
        }
        assert!(matches!(post_select(&out, |_| false), Herald::Empty));
    }

    #[test]
    fn non_resolving_detector_rejected() {
        let mut d = DetectorSpec::new(1, 1.0).unwrap();
        d.number_resolving = false;
        let r = detect(
            &WeightedEnsemble::pure(PureState::vacuum()),
            &[d],
            &mut LossModeAllocator::new(),
        );
        assert!(matches!(r, Err(Error::UnsupportedDetector)));
    }

    #[test]
    fn pattern_display() {
        let p = DetectionPattern::new([
            (4, PolCounts { h: 0, v: 1 }),
            (1, PolCounts { h: 2, v: 0 }),
            (6, PolCounts::default()),
        ]);
        assert_eq!(p.to_string(), "1:HH 4:V 6:-");
    }
}
