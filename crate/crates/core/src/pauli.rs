//! Products of single-path polarization Paulis, used as heralding
//! corrections.
//!
//! A Pauli maps each Fock basis vector to another basis vector times a phase,
//! so corrections can be applied to states and density operators without
//! going through the general transform engine.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::fock::{Density, FockBasis, ModeLabel, Polarization, PureState, WeightedEnsemble};
use crate::optics::LinearModeTransform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    /// Matrix over (H, V) creation operators, row-major.
    fn matrix(self) -> [Complex64; 4] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => [l, o, o, l],
            Pauli::X => [o, l, l, o],
            Pauli::Y => [o, -i, i, o],
            Pauli::Z => [l, o, o, -l],
        }
    }

    /// Image of `|nH, nV>` as `(nH', nV', phase)`.
    fn on_counts(self, nh: u32, nv: u32) -> (u32, u32, Complex64) {
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => (nh, nv, one),
            Pauli::X => (nv, nh, one),
            Pauli::Y => (nv, nh, i.powu(nh) * (-i).powu(nv)),
            Pauli::Z => (nh, nv, if nv.is_multiple_of(2) { one } else { -one }),
        }
    }
}

/// A tensor product of Paulis on distinct spatial modes. Identity factors are
/// not stored.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PauliString(BTreeMap<u32, Pauli>);

impl PauliString {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (u32, Pauli)>>(pairs: I) -> Self {
        Self(pairs.into_iter().filter(|&(_, p)| p != Pauli::I).collect())
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.0.len()
    }

    pub fn factors(&self) -> impl Iterator<Item = (u32, Pauli)> + '_ {
        self.0.iter().map(|(&s, &p)| (s, p))
    }

    /// All `4^k` strings over `modes`, ordered by weight, then by factors.
    pub fn enumerate(modes: &[u32]) -> Vec<PauliString> {
        let k = modes.len();
        let mut out: Vec<(usize, Vec<Pauli>)> = (0..4usize.pow(k as u32))
            .map(|mut code| {
                let ps: Vec<Pauli> = (0..k)
                    .map(|_| {
                        let p = Pauli::ALL[code % 4];
                        code /= 4;
                        p
                    })
                    .collect();
                (ps.iter().filter(|&&p| p != Pauli::I).count(), ps)
            })
            .collect();
        out.sort();
        out.into_iter()
            .map(|(_, ps)| PauliString::from_pairs(modes.iter().copied().zip(ps)))
            .collect()
    }

    pub fn apply_basis(&self, basis: &FockBasis) -> (FockBasis, Complex64) {
        let mut phase = Complex64::new(1.0, 0.0);
        let mut counts: Vec<(ModeLabel, u32)> = basis
            .occupations()
            .iter()
            .filter(|(m, _)| !self.0.contains_key(&m.spatial))
            .copied()
            .collect();
        for (&s, &p) in &self.0 {
            let nh = basis.count(ModeLabel::h(s));
            let nv = basis.count(ModeLabel::v(s));
            let (h, v, ph) = p.on_counts(nh, nv);
            phase *= ph;
            counts.push((ModeLabel::h(s), h));
            counts.push((ModeLabel::v(s), v));
        }
        (FockBasis::from_counts(counts), phase)
    }

    pub fn apply_state(&self, state: &PureState) -> PureState {
        let terms: Vec<_> = state
            .terms()
            .map(|(b, a)| {
                let (nb, ph) = self.apply_basis(b);
                (nb, a * ph)
            })
            .collect();
        PureState::from_terms(terms).with_modes(state.modes().iter().copied())
    }

    pub fn apply_ensemble(&self, e: &WeightedEnsemble) -> WeightedEnsemble {
        e.map_states(|s| Ok(self.apply_state(s))).expect("infallible")
    }

    /// `P rho P^dagger`.
    pub fn apply_density(&self, rho: &Density) -> Density {
        Density::from_entries(rho.entries().map(|((r, c), v)| {
            let (nr, pr) = self.apply_basis(r);
            let (nc, pc) = self.apply_basis(c);
            ((nr, nc), v * pr * pc.conj())
        }))
    }

    /// The same correction as explicit mode transforms.
    pub fn transforms(&self) -> Vec<LinearModeTransform> {
        self.0
            .iter()
            .map(|(&s, &p)| {
                let modes = vec![ModeLabel::new(s, Polarization::H), ModeLabel::new(s, Polarization::V)];
                LinearModeTransform::new(modes.clone(), modes, p.matrix().to_vec()).expect("Paulis are unitary")
            })
            .collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "I");
        }
        for (i, (s, p)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{p:?}{s}")?;
        }
        Ok(())
    }
}
