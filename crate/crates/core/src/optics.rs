//! Linear mode transformations and the optical elements built from them.
//!
//! A [`LinearModeTransform`] maps each input creation operator to a linear
//! combination of output creation operators. Applying it to a Fock state
//! substitutes every creation operator and re-expands the product in the
//! occupation-number basis with the usual `sqrt(n!)` normalization.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{check_probability, Error, Result};
use crate::fock::{FockBasis, ModeLabel, PureState, WeightedEnsemble, LOSS_MODE_BASE};

/// Tolerance of the column-orthonormality check.
pub const ISOMETRY_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Matrix over creation operators: column `c` is the image of `inputs[c]`
/// expressed over `outputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModeTransform {
    inputs: Vec<ModeLabel>,
    outputs: Vec<ModeLabel>,
    // row-major, outputs.len() x inputs.len()
    matrix: Vec<Complex64>,
}

impl LinearModeTransform {
    pub fn new(inputs: Vec<ModeLabel>, outputs: Vec<ModeLabel>, matrix: Vec<Complex64>) -> Result<Self> {
        if matrix.len() != inputs.len() * outputs.len() {
            return Err(Error::ShapeMismatch {
                got: matrix.len(),
                expected: (outputs.len(), inputs.len()),
            });
        }
        for list in [&inputs, &outputs] {
            let mut seen = BTreeSet::new();
            if let Some(m) = list.iter().find(|m| !seen.insert(**m)) {
                return Err(Error::DuplicateMode(*m));
            }
        }
        let t = Self {
            inputs,
            outputs,
            matrix,
        };
        let dev = t.isometry_deviation();
        if dev.is_nan() || dev > ISOMETRY_TOL {
            return Err(Error::NotIsometric(dev));
        }
        Ok(t)
    }

    fn from_real(inputs: Vec<ModeLabel>, outputs: Vec<ModeLabel>, matrix: &[f64]) -> Result<Self> {
        Self::new(
            inputs,
            outputs,
            matrix.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn identity(modes: Vec<ModeLabel>) -> Result<Self> {
        let n = modes.len();
        let mut m = vec![ZERO; n * n];
        for i in 0..n {
            m[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Self::new(modes.clone(), modes, m)
    }

    pub fn inputs(&self) -> &[ModeLabel] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[ModeLabel] {
        &self.outputs
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.inputs.len() + col]
    }

    pub fn is_square(&self) -> bool {
        self.inputs.len() == self.outputs.len()
    }

    /// `max |(M^dagger M - I)_{ij}|`.
    pub fn isometry_deviation(&self) -> f64 {
        let (rows, cols) = (self.outputs.len(), self.inputs.len());
        let mut worst: f64 = 0.0;
        for i in 0..cols {
            for j in 0..cols {
                let mut g = ZERO;
                for r in 0..rows {
                    g += self.entry(r, i).conj() * self.entry(r, j);
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }

    /// Applies the transform to every basis vector of `state`.
    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        let col_of: HashMap<ModeLabel, usize> = self.inputs.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        let input_set: BTreeSet<ModeLabel> = self.inputs.iter().copied().collect();
        for m in &self.outputs {
            if !input_set.contains(m) && state.modes().contains(m) {
                return Err(Error::ModeCollision(*m));
            }
        }
        let output_set: BTreeSet<ModeLabel> = self.outputs.iter().copied().collect();
        let modes: BTreeSet<ModeLabel> = state
            .modes()
            .iter()
            .filter(|m| !input_set.contains(m) || output_set.contains(m))
            .chain(self.outputs.iter())
            .copied()
            .collect();

        let rows = self.outputs.len();
        let mut amps: BTreeMap<FockBasis, Complex64> = BTreeMap::new();
        for (basis, amp) in state.terms() {
            let (moving, staying) = basis.partition(|m| col_of.contains_key(m));
            // polynomial in output creation operators, keyed by occupation
            let mut poly: HashMap<Vec<u32>, Complex64> = HashMap::new();
            poly.insert(vec![0; rows], *amp);
            let mut norm = 1.0;
            for &(mode, n) in moving.occupations() {
                let c = col_of[&mode];
                norm *= factorial_sqrt(n);
                for _ in 0..n {
                    let mut next: HashMap<Vec<u32>, Complex64> = HashMap::with_capacity(poly.len() * 2);
                    for (key, coeff) in &poly {
                        for r in 0..rows {
                            let u = self.entry(r, c);
                            if u == ZERO {
                                continue;
                            }
                            let mut k = key.clone();
                            k[r] += 1;
                            *next.entry(k).or_insert(ZERO) += coeff * u;
                        }
                    }
                    poly = next;
                }
            }
            for (key, coeff) in poly {
                let fac: f64 = key.iter().map(|&k| factorial_sqrt(k)).product();
                let out = FockBasis::from_counts(
                    staying
                        .occupations()
                        .iter()
                        .copied()
                        .chain(self.outputs.iter().copied().zip(key.iter().copied())),
                );
                *amps.entry(out).or_insert(ZERO) += coeff * (fac / norm);
            }
        }
        Ok(PureState::from_parts(modes, amps))
    }
}

fn factorial_sqrt(n: u32) -> f64 {
    (1..=n).map(f64::from).product::<f64>().sqrt()
}

fn two_modes(i: u32, j: u32) -> Result<Vec<ModeLabel>> {
    if i == j {
        return Err(Error::SameSpatialMode(i));
    }
    Ok(vec![ModeLabel::h(i), ModeLabel::v(i), ModeLabel::h(j), ModeLabel::v(j)])
}

/// Polarizing beamsplitter on spatial modes `i`, `j`: transmits H, reflects
/// V into the other path.
pub fn pbs(i: u32, j: u32) -> Result<LinearModeTransform> {
    let modes = two_modes(i, j)?;
    // columns: H_i, V_i, H_j, V_j
    #[rustfmt::skip]
    let m = [
        1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        0.0, 0.0, 1.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
    ];
    LinearModeTransform::from_real(modes.clone(), modes, &m)
}

/// Polarizing beamsplitter acting in the diagonal basis: diagonal photons are
/// transmitted and antidiagonal photons swap paths.
pub fn pbs45(i: u32, j: u32) -> Result<LinearModeTransform> {
    let modes = two_modes(i, j)?;
    // columns: H_i, V_i, H_j, V_j; rows: H_i, V_i, H_j, V_j
    #[rustfmt::skip]
    let m = [
        0.5,  0.5,  0.5, -0.5,
        0.5,  0.5, -0.5,  0.5,
        0.5, -0.5,  0.5,  0.5,
       -0.5,  0.5,  0.5,  0.5,
    ];
    LinearModeTransform::from_real(modes.clone(), modes, &m)
}

/// Sign convention of the 45 degree polarization rotator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RotatorConvention {
    /// H -> (H+V)/sqrt2, V -> (H-V)/sqrt2.
    #[default]
    Standard,
    /// H -> (H-V)/sqrt2, V -> (H+V)/sqrt2.
    Alternate,
}

pub fn rotate45(i: u32) -> LinearModeTransform {
    rotate45_with(i, RotatorConvention::Standard)
}

pub fn rotate45_with(i: u32, convention: RotatorConvention) -> LinearModeTransform {
    let s = FRAC_1_SQRT_2;
    let modes = vec![ModeLabel::h(i), ModeLabel::v(i)];
    let m = match convention {
        RotatorConvention::Standard => [s, s, s, -s],
        RotatorConvention::Alternate => [s, s, -s, s],
    };
    LinearModeTransform::from_real(modes.clone(), modes, &m).expect("rotator is unitary")
}

/// Hands out spatial indices for loss modes. Indices start at
/// [`LOSS_MODE_BASE`] and are never reused within one allocator.
#[derive(Debug, Clone)]
pub struct LossModeAllocator {
    next: u32,
}

impl Default for LossModeAllocator {
    fn default() -> Self {
        Self { next: LOSS_MODE_BASE }
    }
}

impl LossModeAllocator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self) -> u32 {
        let s = self.next;
        self.next += 1;
        s
    }
}

/// A loss beamsplitter together with the loss modes it feeds.
#[derive(Debug, Clone)]
pub struct VariableBs {
    pub transform: LinearModeTransform,
    pub loss_modes: [ModeLabel; 2],
}

/// Beamsplitter of transmissivity `t` on both polarizations of spatial mode
/// `i`; the reflected part goes to a fresh loss path.
pub fn variable_bs(i: u32, t: f64, alloc: &mut LossModeAllocator) -> Result<VariableBs> {
    check_probability("transmissivity", t)?;
    let loss = alloc.fresh();
    let (a, b) = (t.sqrt(), (1.0 - t).sqrt());
    let inputs = vec![ModeLabel::h(i), ModeLabel::v(i)];
    let loss_modes = [ModeLabel::h(loss), ModeLabel::v(loss)];
    let outputs = vec![inputs[0], inputs[1], loss_modes[0], loss_modes[1]];
    // columns: H_i, V_i; rows: H_i, V_i, H_loss, V_loss
    #[rustfmt::skip]
    let m = [
        a, 0.0,
        0.0, a,
        b, 0.0,
        0.0, b,
    ];
    Ok(VariableBs {
        transform: LinearModeTransform::from_real(inputs, outputs, &m)?,
        loss_modes,
    })
}

/// Traces out `loss_modes`: terms are grouped by their loss-mode occupation
/// and each group becomes one branch (weight = squared norm of the group).
pub fn discard_loss_modes(state: &PureState, loss_modes: &BTreeSet<ModeLabel>) -> WeightedEnsemble {
    let groups = state.split_by(|b| b.partition(|m| loss_modes.contains(m)).0);
    let mut out = WeightedEnsemble::new();
    for part in groups.into_values() {
        let w = part.norm_sqr();
        if w > 0.0 {
            let reduced = part.drop_modes(|m| loss_modes.contains(m));
            out.push(w, reduced.normalized().expect("nonzero group"));
        }
    }
    out
}

/// Passes spatial mode `spatial` through a loss channel of transmissivity
/// `t` and returns the resulting ensemble on the remaining modes.
pub fn apply_loss(state: &PureState, spatial: u32, t: f64, alloc: &mut LossModeAllocator) -> Result<WeightedEnsemble> {
    check_probability("transmissivity", t)?;
    if t == 1.0 {
        return Ok(WeightedEnsemble::pure(state.clone()));
    }
    let vbs = variable_bs(spatial, t, alloc)?;
    let lossy = vbs.transform.apply(state)?;
    Ok(discard_loss_modes(&lossy, &vbs.loss_modes.into_iter().collect()))
}

/// [`apply_loss`] over every branch of an ensemble.
pub fn apply_loss_ensemble(
    e: &WeightedEnsemble,
    spatial: u32,
    t: f64,
    alloc: &mut LossModeAllocator,
) -> Result<WeightedEnsemble> {
    let mut out = WeightedEnsemble::new();
    for (w, s) in e.branches() {
        out.extend(apply_loss(s, spatial, t, alloc)?.scaled(*w));
    }
    Ok(out)
}

pub fn apply_ensemble(e: &WeightedEnsemble, t: &LinearModeTransform) -> Result<WeightedEnsemble> {
    e.map_states(|s| t.apply(s))
}
