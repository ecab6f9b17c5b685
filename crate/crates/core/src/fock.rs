//! Few-photon Fock states over labeled polarization modes.
//!
//! A [`PureState`] is a sparse map from occupation-number basis vectors to
//! complex amplitudes. Mixed states are carried as [`WeightedEnsemble`]s of
//! pure branches; density operators are only materialized for comparison.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Amplitudes below this magnitude are dropped.
pub const PRUNE_TOL: f64 = 1e-12;

/// Default entrywise tolerance for density-operator comparison.
pub const DENSITY_TOL: f64 = 1e-10;

/// Spatial indices at or above this value are reserved for loss modes.
pub const LOSS_MODE_BASE: u32 = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];
}

/// A single field mode: a spatial path together with a polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeLabel {
    pub spatial: u32,
    pub pol: Polarization,
}

impl ModeLabel {
    pub const fn new(spatial: u32, pol: Polarization) -> Self {
        Self { spatial, pol }
    }

    pub const fn h(spatial: u32) -> Self {
        Self::new(spatial, Polarization::H)
    }

    pub const fn v(spatial: u32) -> Self {
        Self::new(spatial, Polarization::V)
    }

    pub fn is_loss_mode(&self) -> bool {
        self.spatial >= LOSS_MODE_BASE
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.pol {
            Polarization::H => 'H',
            Polarization::V => 'V',
        };
        if self.is_loss_mode() {
            write!(f, "{p}_loss{}", self.spatial - LOSS_MODE_BASE)
        } else {
            write!(f, "{p}_{}", self.spatial)
        }
    }
}

/// Occupation numbers of a Fock basis vector. Only nonzero counts are
/// stored, sorted by mode, so equal vectors compare equal and the derived
/// ordering is lexicographic in (spatial, polarization, count).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FockBasis(Vec<(ModeLabel, u32)>);

impl FockBasis {
    pub fn vacuum() -> Self {
        Self(Vec::new())
    }

    /// Builds a basis vector from a list of photons; repeated labels mean
    /// multiple photons in that mode.
    pub fn from_photons<I: IntoIterator<Item = ModeLabel>>(photons: I) -> Self {
        let mut counts: BTreeMap<ModeLabel, u32> = BTreeMap::new();
        for m in photons {
            *counts.entry(m).or_default() += 1;
        }
        Self(counts.into_iter().collect())
    }

    pub fn from_counts<I: IntoIterator<Item = (ModeLabel, u32)>>(counts: I) -> Self {
        let mut map: BTreeMap<ModeLabel, u32> = BTreeMap::new();
        for (m, n) in counts {
            *map.entry(m).or_default() += n;
        }
        Self(map.into_iter().filter(|&(_, n)| n > 0).collect())
    }

    pub fn count(&self, mode: ModeLabel) -> u32 {
        self.0
            .binary_search_by(|(m, _)| m.cmp(&mode))
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn occupations(&self) -> &[(ModeLabel, u32)] {
        &self.0
    }

    pub fn photon_number(&self) -> u32 {
        self.0.iter().map(|&(_, n)| n).sum()
    }

    pub fn is_vacuum(&self) -> bool {
        self.0.is_empty()
    }

    /// Splits into (occupations of modes satisfying `pred`, the rest).
    pub fn partition<F: Fn(&ModeLabel) -> bool>(&self, pred: F) -> (FockBasis, FockBasis) {
        let (a, b): (Vec<_>, Vec<_>) = self.0.iter().partition(|(m, _)| pred(m));
        (FockBasis(a), FockBasis(b))
    }

    fn merged(&self, other: &FockBasis) -> FockBasis {
        FockBasis::from_counts(self.0.iter().chain(other.0.iter()).copied())
    }
}

impl fmt::Display for FockBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "|vac>");
        }
        write!(f, "|")?;
        for (i, (m, n)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            if *n == 1 {
                write!(f, "{m}")?;
            } else {
                write!(f, "{m}^{n}")?;
            }
        }
        write!(f, ">")
    }
}

/// A superposition of Fock basis vectors over an explicit mode universe.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PureState {
    modes: BTreeSet<ModeLabel>,
    amps: BTreeMap<FockBasis, Complex64>,
}

impl PureState {
    /// The vacuum with an empty mode universe.
    pub fn vacuum() -> Self {
        Self::vacuum_on(std::iter::empty())
    }

    pub fn vacuum_on<I: IntoIterator<Item = ModeLabel>>(modes: I) -> Self {
        let mut amps = BTreeMap::new();
        amps.insert(FockBasis::vacuum(), Complex64::new(1.0, 0.0));
        Self {
            modes: modes.into_iter().collect(),
            amps,
        }
    }

    /// The zero vector (used for annihilated post-selection branches).
    pub fn zero_on<I: IntoIterator<Item = ModeLabel>>(modes: I) -> Self {
        Self {
            modes: modes.into_iter().collect(),
            amps: BTreeMap::new(),
        }
    }

    /// A single basis vector with amplitude 1; the universe is the set of
    /// occupied modes.
    pub fn basis(basis: FockBasis) -> Self {
        Self::from_terms([(basis, Complex64::new(1.0, 0.0))])
    }

    /// Photons in the given modes (one per entry), amplitude 1.
    pub fn photons<I: IntoIterator<Item = ModeLabel>>(photons: I) -> Self {
        Self::basis(FockBasis::from_photons(photons))
    }

    /// A superposition from explicit terms. Duplicate basis vectors are
    /// summed. The universe is every occupied mode.
    pub fn from_terms<I: IntoIterator<Item = (FockBasis, Complex64)>>(terms: I) -> Self {
        let mut s = Self::zero_on(std::iter::empty());
        for (b, a) in terms {
            s.modes.extend(b.occupations().iter().map(|&(m, _)| m));
            *s.amps.entry(b).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        s.prune();
        s
    }

    /// Extends the mode universe with vacuum modes.
    pub fn with_modes<I: IntoIterator<Item = ModeLabel>>(mut self, modes: I) -> Self {
        self.modes.extend(modes);
        self
    }

    pub fn modes(&self) -> &BTreeSet<ModeLabel> {
        &self.modes
    }

    pub fn spatial_modes(&self) -> BTreeSet<u32> {
        self.modes.iter().map(|m| m.spatial).collect()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FockBasis, &Complex64)> {
        self.amps.iter()
    }

    pub fn amplitude(&self, basis: &FockBasis) -> Complex64 {
        self.amps.get(basis).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn term_count(&self) -> usize {
        self.amps.len()
    }

    pub fn is_zero(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    /// Rescaled to unit norm; `None` for the zero vector.
    pub fn normalized(&self) -> Option<PureState> {
        let n = self.norm_sqr();
        if n <= 0.0 {
            return None;
        }
        Some(self.scaled(Complex64::new(1.0 / n.sqrt(), 0.0)))
    }

    pub fn scaled(&self, c: Complex64) -> PureState {
        let mut s = PureState {
            modes: self.modes.clone(),
            amps: self.amps.iter().map(|(b, a)| (b.clone(), a * c)).collect(),
        };
        s.prune();
        s
    }

    /// Definite photon number if every term shares one sector.
    pub fn photon_number(&self) -> Option<u32> {
        let mut it = self.amps.keys().map(FockBasis::photon_number);
        let first = it.next()?;
        it.all(|n| n == first).then_some(first)
    }

    /// Tensor product of states on disjoint mode universes.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        if let Some(m) = self.modes.intersection(&other.modes).next() {
            return Err(Error::ModeOverlap(*m));
        }
        let mut amps = BTreeMap::new();
        for (ba, aa) in &self.amps {
            for (bb, ab) in &other.amps {
                amps.insert(ba.merged(bb), aa * ab);
            }
        }
        let mut s = PureState {
            modes: self.modes.union(&other.modes).copied().collect(),
            amps,
        };
        s.prune();
        Ok(s)
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        let (small, large, flip) = if self.amps.len() <= other.amps.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, a) in &small.amps {
            if let Some(c) = large.amps.get(b) {
                acc += if flip { c.conj() * a } else { a.conj() * c };
            }
        }
        acc
    }

    /// Splits terms by a key computed from each basis vector. Each part keeps
    /// the full universe.
    pub fn split_by<K: Ord, F: Fn(&FockBasis) -> K>(&self, key: F) -> BTreeMap<K, PureState> {
        let mut out: BTreeMap<K, PureState> = BTreeMap::new();
        for (b, a) in &self.amps {
            out.entry(key(b))
                .or_insert_with(|| PureState::zero_on(self.modes.iter().copied()))
                .amps
                .insert(b.clone(), *a);
        }
        out
    }

    /// Removes the listed modes from the universe and from every basis
    /// vector. Callers are responsible for having projected those modes first.
    pub fn drop_modes<F: Fn(&ModeLabel) -> bool>(&self, pred: F) -> PureState {
        let mut amps: BTreeMap<FockBasis, Complex64> = BTreeMap::new();
        for (b, a) in &self.amps {
            let (_, rest) = b.partition(&pred);
            *amps.entry(rest).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        let mut s = PureState {
            modes: self.modes.iter().filter(|m| !pred(m)).copied().collect(),
            amps,
        };
        s.prune();
        s
    }

    pub(crate) fn from_parts(modes: BTreeSet<ModeLabel>, amps: BTreeMap<FockBasis, Complex64>) -> Self {
        let mut s = PureState { modes, amps };
        s.prune();
        s
    }

    fn prune(&mut self) {
        self.amps.retain(|_, a| a.norm() >= PRUNE_TOL);
    }

    /// Amplitude-wise equality within `tol`.
    pub fn approx_eq(&self, other: &PureState, tol: f64) -> bool {
        let keys: BTreeSet<&FockBasis> = self.amps.keys().chain(other.amps.keys()).collect();
        keys.into_iter()
            .all(|b| (self.amplitude(b) - other.amplitude(b)).norm() <= tol)
    }
}

impl fmt::Display for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.amps.is_empty() {
            return write!(f, "0");
        }
        for (i, (b, a)) in self.amps.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i){b}", a.re, a.im)?;
        }
        Ok(())
    }
}

/// A classical mixture of pure branches. Weights may sum to less than one
/// when the ensemble represents a heralded (sub-normalized) branch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightedEnsemble {
    branches: Vec<(f64, PureState)>,
}

impl WeightedEnsemble {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pure(state: PureState) -> Self {
        Self {
            branches: vec![(1.0, state)],
        }
    }

    /// Builds an ensemble, rejecting negative weights.
    pub fn from_branches(branches: Vec<(f64, PureState)>) -> Result<Self> {
        if let Some(&(w, _)) = branches.iter().find(|(w, _)| w.is_nan() || *w < 0.0) {
            return Err(Error::InvalidWeight(w));
        }
        Ok(Self { branches })
    }

    pub fn push(&mut self, weight: f64, state: PureState) {
        debug_assert!(weight >= 0.0);
        self.branches.push((weight, state));
    }

    pub fn branches(&self) -> &[(f64, PureState)] {
        &self.branches
    }

    pub fn into_branches(self) -> Vec<(f64, PureState)> {
        self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Sum of `weight * |state|^2` over branches.
    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|(w, s)| w * s.norm_sqr()).sum()
    }

    /// Every branch state normalized, weights absorbing the norms; zero
    /// branches dropped.
    pub fn normalized_branches(&self) -> WeightedEnsemble {
        let branches = self
            .branches
            .iter()
            .filter_map(|(w, s)| {
                let n = s.norm_sqr();
                (w * n > 0.0).then(|| (w * n, s.normalized().expect("nonzero norm")))
            })
            .collect();
        WeightedEnsemble { branches }
    }

    /// Rescales weights so that the total weight is one.
    pub fn renormalized(&self) -> Option<WeightedEnsemble> {
        let t = self.total_weight();
        (t > 0.0).then(|| self.scaled(1.0 / t))
    }

    pub fn scaled(&self, factor: f64) -> WeightedEnsemble {
        WeightedEnsemble {
            branches: self.branches.iter().map(|(w, s)| (w * factor, s.clone())).collect(),
        }
    }

    pub fn extend(&mut self, other: WeightedEnsemble) {
        self.branches.extend(other.branches);
    }

    pub fn map_states<F: FnMut(&PureState) -> Result<PureState>>(&self, mut f: F) -> Result<WeightedEnsemble> {
        let branches = self
            .branches
            .iter()
            .map(|(w, s)| Ok((*w, f(s)?)))
            .collect::<Result<_>>()?;
        Ok(WeightedEnsemble { branches })
    }

    /// Product ensemble; branch universes must be disjoint.
    pub fn tensor(&self, other: &WeightedEnsemble) -> Result<WeightedEnsemble> {
        let mut out = WeightedEnsemble::new();
        for (wa, a) in &self.branches {
            for (wb, b) in &other.branches {
                out.push(wa * wb, a.tensor(b)?);
            }
        }
        Ok(out)
    }

    /// Merges branches whose normalized states coincide up to a global phase
    /// of +1 (amplitude-wise within `tol`).
    pub fn merge_identical(&self, tol: f64) -> WeightedEnsemble {
        let mut out: Vec<(f64, PureState)> = Vec::new();
        for (w, s) in self.normalized_branches().branches {
            match out.iter_mut().find(|(_, t)| t.approx_eq(&s, tol)) {
                Some((wt, _)) => *wt += w,
                None => out.push((w, s)),
            }
        }
        WeightedEnsemble { branches: out }
    }

    pub fn density(&self) -> Density {
        Density::from_ensemble(self)
    }
}

/// A density operator materialized sparsely over Fock basis vectors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Density {
    entries: BTreeMap<(FockBasis, FockBasis), Complex64>,
}

impl Density {
    pub fn from_ensemble(e: &WeightedEnsemble) -> Self {
        let mut d = Density::default();
        for (w, s) in e.branches() {
            d.add_pure(*w, s);
        }
        d
    }

    pub fn from_entries<I: IntoIterator<Item = ((FockBasis, FockBasis), Complex64)>>(entries: I) -> Self {
        let mut d = Density::default();
        for (k, v) in entries {
            *d.entries.entry(k).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        d
    }

    /// Adds `weight * |s><s|`.
    pub fn add_pure(&mut self, weight: f64, s: &PureState) {
        for (bi, ai) in s.terms() {
            for (bj, aj) in s.terms() {
                *self
                    .entries
                    .entry((bi.clone(), bj.clone()))
                    .or_insert(Complex64::new(0.0, 0.0)) += ai * aj.conj() * weight;
            }
        }
    }

    pub fn get(&self, row: &FockBasis, col: &FockBasis) -> Complex64 {
        self.entries
            .get(&(row.clone(), col.clone()))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(FockBasis, FockBasis), &Complex64)> {
        self.entries.iter()
    }

    pub fn trace(&self) -> f64 {
        self.entries
            .iter()
            .filter(|((r, c), _)| r == c)
            .map(|(_, v)| v.re)
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> Density {
        Density {
            entries: self.entries.iter().map(|(k, v)| (k.clone(), v * factor)).collect(),
        }
    }

    /// Largest entrywise modulus of `self - other` over the union of
    /// supports.
    pub fn max_abs_diff(&self, other: &Density) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, v) in &self.entries {
            let o = other.entries.get(k).copied().unwrap_or_default();
            worst = worst.max((v - o).norm());
        }
        for (k, v) in &other.entries {
            if !self.entries.contains_key(k) {
                worst = worst.max(v.norm());
            }
        }
        worst
    }

    /// Diagonal entries grouped by photon number of the basis vector.
    pub fn sector_weights(&self) -> BTreeMap<u32, f64> {
        let mut out = BTreeMap::new();
        for ((r, c), v) in &self.entries {
            if r == c {
                *out.entry(r.photon_number()).or_insert(0.0) += v.re;
            }
        }
        out
    }
}

/// True iff the density operators of the two ensembles agree entrywise
/// within `tol`.
pub fn ensembles_equal_as_density(e1: &WeightedEnsemble, e2: &WeightedEnsemble, tol: f64) -> bool {
    e1.density().max_abs_diff(&e2.density()) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn ghz() -> PureState {
        PureState::from_terms([
            (
                FockBasis::from_photons([ModeLabel::h(1), ModeLabel::h(2), ModeLabel::h(3)]),
                c(FRAC_1_SQRT_2),
            ),
            (
                FockBasis::from_photons([ModeLabel::v(1), ModeLabel::v(2), ModeLabel::v(3)]),
                c(FRAC_1_SQRT_2),
            ),
        ])
    }

    #[test]
    fn tensor_of_basis_states() {
        let s = PureState::photons([ModeLabel::h(1)])
            .tensor(&PureState::photons([ModeLabel::h(2)]))
            .unwrap();
        let b = FockBasis::from_photons([ModeLabel::h(1), ModeLabel::h(2)]);
        assert_eq!(s.term_count(), 1);
        assert_eq!(s.amplitude(&b), c(1.0));
    }

    #[test]
    fn tensor_with_vacuum_is_identity() {
        let h1 = PureState::photons([ModeLabel::h(1)]);
        assert_eq!(h1.tensor(&PureState::vacuum()).unwrap(), h1);
    }

    #[test]
    fn tensor_distributes() {
        let plus = PureState::from_terms([
            (FockBasis::from_photons([ModeLabel::h(1)]), c(FRAC_1_SQRT_2)),
            (FockBasis::from_photons([ModeLabel::v(1)]), c(FRAC_1_SQRT_2)),
        ]);
        let s = plus.tensor(&PureState::photons([ModeLabel::h(2)])).unwrap();
        let expected = PureState::from_terms([
            (
                FockBasis::from_photons([ModeLabel::h(1), ModeLabel::h(2)]),
                c(FRAC_1_SQRT_2),
            ),
            (
                FockBasis::from_photons([ModeLabel::v(1), ModeLabel::h(2)]),
                c(FRAC_1_SQRT_2),
            ),
        ]);
        assert!(s.approx_eq(&expected, 1e-15));
    }

    #[test]
    fn tensor_rejects_shared_modes() {
        let a = PureState::photons([ModeLabel::h(1)]);
        let err = a.tensor(&a).unwrap_err();
        assert!(matches!(err, Error::ModeOverlap(m) if m == ModeLabel::h(1)));
    }

    #[test]
    fn inner_products() {
        let h1 = PureState::photons([ModeLabel::h(1)]);
        let v1 = PureState::photons([ModeLabel::v(1)]);
        assert_eq!(h1.inner(&h1), c(1.0));
        assert_eq!(h1.inner(&v1), c(0.0));
        let hhh = PureState::photons([ModeLabel::h(1), ModeLabel::h(2), ModeLabel::h(3)]);
        assert!((ghz().inner(&hhh) - c(FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn inner_is_conjugate_linear_on_left() {
        let h1 = PureState::photons([ModeLabel::h(1)]);
        let ih1 = h1.scaled(Complex64::new(0.0, 1.0));
        assert_eq!(ih1.inner(&h1), Complex64::new(0.0, -1.0));
        assert_eq!(h1.inner(&ih1), Complex64::new(0.0, 1.0));
    }

    #[test]
    fn density_equality_examples() {
        let h = PureState::photons([ModeLabel::h(1)]);
        let v = PureState::photons([ModeLabel::v(1)]);
        let plus = PureState::from_terms([
            (FockBasis::from_photons([ModeLabel::h(1)]), c(FRAC_1_SQRT_2)),
            (FockBasis::from_photons([ModeLabel::v(1)]), c(FRAC_1_SQRT_2)),
        ]);
        let minus = PureState::from_terms([
            (FockBasis::from_photons([ModeLabel::h(1)]), c(FRAC_1_SQRT_2)),
            (FockBasis::from_photons([ModeLabel::v(1)]), c(-FRAC_1_SQRT_2)),
        ]);
        let pure_h = WeightedEnsemble::pure(h.clone());
        assert!(ensembles_equal_as_density(&pure_h, &pure_h, DENSITY_TOL));

        let mixed = WeightedEnsemble::from_branches(vec![(0.5, h), (0.5, v)]).unwrap();
        let coherent = WeightedEnsemble::pure(plus.clone());
        assert!(!ensembles_equal_as_density(&coherent, &mixed, DENSITY_TOL));

        let diag = WeightedEnsemble::from_branches(vec![(0.5, plus), (0.5, minus)]).unwrap();
        assert!(ensembles_equal_as_density(&mixed, &diag, DENSITY_TOL));
    }

    #[test]
    fn negative_weights_rejected() {
        let r = WeightedEnsemble::from_branches(vec![(-0.1, PureState::vacuum())]);
        assert!(matches!(r, Err(Error::InvalidWeight(_))));
    }

    #[test]
    fn pruning_drops_tiny_amplitudes() {
        let s = PureState::from_terms([
            (FockBasis::from_photons([ModeLabel::h(1)]), c(1.0)),
            (FockBasis::from_photons([ModeLabel::v(1)]), c(1e-13)),
        ]);
        assert_eq!(s.term_count(), 1);
        assert!(s.modes().contains(&ModeLabel::v(1)));
    }

    #[test]
    fn basis_ordering_is_lexicographic() {
        let a = FockBasis::from_photons([ModeLabel::h(1)]);
        let b = FockBasis::from_photons([ModeLabel::h(1), ModeLabel::h(1)]);
        let c_ = FockBasis::from_photons([ModeLabel::v(1)]);
        let d = FockBasis::from_photons([ModeLabel::h(2)]);
        let mut v = vec![d.clone(), c_.clone(), b.clone(), a.clone()];
        v.sort();
        assert_eq!(v, vec![a, b, c_, d]);
    }

    #[test]
    fn merge_identical_collapses_duplicates() {
        let h = PureState::photons([ModeLabel::h(1)]);
        let e = WeightedEnsemble::from_branches(vec![(0.25, h.clone()), (0.5, h.clone())]).unwrap();
        let m = e.merge_identical(1e-12);
        assert_eq!(m.len(), 1);
        assert!((m.branches()[0].0 - 0.75).abs() < 1e-15);
    }
}
