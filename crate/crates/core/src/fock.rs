//! Fock-space plumbing: occupation-number bases, state vectors, ladder
//! operators and density matrices.
//!
//! Basis elements are ordered lexicographically descending on their
//! occupation tuples, so `|2,0>`, `|1,1>`, `|0,2>` for two bosons in two modes.
//! Fermionic signs follow a Jordan-Wigner ordering by mode index: creating a
//! particle in mode `k` picks up `(-1)^(number of occupied modes j < k)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest basis that [`enumerate_basis`] will build unless told otherwise.
pub const DEFAULT_DIMENSION_CAP: usize = 1_000_000;

/// Tolerance for normalization, hermiticity and trace checks.
pub const AMPLITUDE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Boson,
    Fermion,
    /// Labelled particles. Their outcome space is the bosonic occupation
    /// space, but amplitudes never interfere between different labellings.
    Distinguishable,
}

impl fmt::Display for Statistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Statistics::Boson => "boson",
            Statistics::Fermion => "fermion",
            Statistics::Distinguishable => "distinguishable",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OccupationVector {
    occupations: Vec<u32>,
    statistics: Statistics,
}

impl OccupationVector {
    pub fn new(occupations: Vec<u32>, statistics: Statistics) -> Result<Self> {
        if occupations.is_empty() {
            return Err(Error::InvalidOccupation("at least one mode is required".into()));
        }
        if statistics == Statistics::Fermion && occupations.iter().any(|&n| n > 1) {
            return Err(Error::InvalidOccupation(format!(
                "fermionic occupations must be 0 or 1, got {occupations:?}"
            )));
        }
        Ok(Self {
            occupations,
            statistics,
        })
    }

    pub fn occupations(&self) -> &[u32] {
        &self.occupations
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn modes(&self) -> usize {
        self.occupations.len()
    }

    pub fn particles(&self) -> u32 {
        self.occupations.iter().sum()
    }

    /// Mode indices with multiplicity, e.g. `(2,0,1)` -> `[0,0,2]`.
    pub fn mode_list(&self) -> Vec<usize> {
        mode_list(&self.occupations)
    }
}

impl fmt::Display for OccupationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, n) in self.occupations.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}")?;
        }
        f.write_str(")")
    }
}

/// Largest entry modulus of a complex matrix or vector.
pub fn max_abs<R: nalgebra::Dim, C: nalgebra::Dim, S: nalgebra::RawStorage<Complex64, R, C>>(
    m: &nalgebra::Matrix<Complex64, R, C, S>,
) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub(crate) fn mode_list(occupations: &[u32]) -> Vec<usize> {
    occupations
        .iter()
        .enumerate()
        .flat_map(|(mode, &n)| std::iter::repeat_n(mode, n as usize))
        .collect()
}

/// Complete, ordered basis of a fixed-particle-number sector.
#[derive(Debug, Clone)]
pub struct FockBasis {
    modes: usize,
    particles: u32,
    statistics: Statistics,
    max_occupation: Option<u32>,
    elements: Vec<OccupationVector>,
    index: HashMap<Vec<u32>, usize>,
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        self.modes == other.modes
            && self.particles == other.particles
            && self.statistics == other.statistics
            && self.max_occupation == other.max_occupation
    }
}

pub fn enumerate_basis(modes: usize, particles: u32, statistics: Statistics) -> Result<FockBasis> {
    FockBasis::build(modes, particles, statistics, None, DEFAULT_DIMENSION_CAP)
}

impl FockBasis {
    pub fn with_cap(modes: usize, particles: u32, statistics: Statistics, cap: usize) -> Result<Self> {
        Self::build(modes, particles, statistics, None, cap)
    }

    /// Bosons restricted to at most one particle per mode.
    pub fn hard_core(modes: usize, particles: u32) -> Result<Self> {
        Self::build(modes, particles, Statistics::Boson, Some(1), DEFAULT_DIMENSION_CAP)
    }

    /// Basis with an explicit per-mode occupation ceiling.
    pub fn truncated(
        modes: usize,
        particles: u32,
        statistics: Statistics,
        max_occupation: Option<u32>,
        cap: usize,
    ) -> Result<Self> {
        Self::build(modes, particles, statistics, max_occupation, cap)
    }

    fn build(
        modes: usize,
        particles: u32,
        statistics: Statistics,
        max_occupation: Option<u32>,
        cap: usize,
    ) -> Result<Self> {
        if modes == 0 {
            return Err(Error::Domain {
                name: "modes",
                value: 0.0,
                reason: "at least one mode is required",
            });
        }
        let ceiling = effective_ceiling(statistics, max_occupation, particles);
        if statistics == Statistics::Fermion && particles as usize > modes {
            return Err(Error::Domain {
                name: "particles",
                value: particles as f64,
                reason: "more fermions than modes",
            });
        }
        let count = sector_dimension(modes, particles, ceiling);
        if count == 0 {
            return Err(Error::Domain {
                name: "particles",
                value: particles as f64,
                reason: "no configuration satisfies the occupation ceiling",
            });
        }
        if count > cap as u128 {
            return Err(Error::DimensionCap {
                requested: count,
                cap,
            });
        }

        let mut raw = Vec::with_capacity(count as usize);
        let mut current = vec![0u32; modes];
        fill_descending(&mut current, 0, particles, ceiling, &mut raw);
        debug_assert_eq!(raw.len() as u128, count);

        let index = raw.iter().enumerate().map(|(i, occ)| (occ.clone(), i)).collect();
        let elements = raw
            .into_iter()
            .map(|occupations| OccupationVector {
                occupations,
                statistics,
            })
            .collect();
        Ok(Self {
            modes,
            particles,
            statistics,
            max_occupation,
            elements,
            index,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn particles(&self) -> u32 {
        self.particles
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn max_occupation(&self) -> Option<u32> {
        self.max_occupation
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[OccupationVector] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &OccupationVector {
        &self.elements[i]
    }

    pub fn index_of(&self, occupations: &[u32]) -> Option<usize> {
        self.index.get(occupations).copied()
    }

    /// Same geometry, particle number shifted to `particles`.
    pub fn sector(&self, particles: u32) -> Result<FockBasis> {
        Self::build(
            self.modes,
            particles,
            self.statistics,
            self.max_occupation,
            DEFAULT_DIMENSION_CAP.max(self.len()),
        )
    }

    fn ceiling(&self) -> u32 {
        effective_ceiling(self.statistics, self.max_occupation, self.particles + 1)
    }

    /// Largest occupation any single mode can carry inside this sector.
    pub fn sector_ceiling(&self) -> u32 {
        effective_ceiling(self.statistics, self.max_occupation, self.particles)
    }
}

fn effective_ceiling(statistics: Statistics, max_occupation: Option<u32>, particles: u32) -> u32 {
    let stat_ceiling = match statistics {
        Statistics::Fermion => 1,
        _ => particles,
    };
    max_occupation.map_or(stat_ceiling, |m| m.min(stat_ceiling))
}

fn fill_descending(current: &mut [u32], mode: usize, remaining: u32, ceiling: u32, out: &mut Vec<Vec<u32>>) {
    let last = current.len() - 1;
    if mode == last {
        if remaining <= ceiling {
            current[mode] = remaining;
            out.push(current.to_vec());
        }
        return;
    }
    for n in (0..=remaining.min(ceiling)).rev() {
        current[mode] = n;
        fill_descending(current, mode + 1, remaining - n, ceiling, out);
    }
    current[mode] = 0;
}

/// Number of occupation vectors over `modes` modes with `particles` particles
/// and at most `ceiling` particles per mode.
pub fn sector_dimension(modes: usize, particles: u32, ceiling: u32) -> u128 {
    let n = particles as usize;
    let mut ways = vec![0u128; n + 1];
    ways[0] = 1;
    for _ in 0..modes {
        let mut next = vec![0u128; n + 1];
        for (total, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for k in 0..=(ceiling as usize).min(n - total) {
                next[total + k] = next[total + k].saturating_add(w);
            }
        }
        ways = next;
    }
    ways[n]
}

/// Coefficient and resulting occupations for one ladder operator on a basis
/// vector, or `None` if the component is annihilated.
fn ladder_on(
    occupations: &[u32],
    mode: usize,
    create: bool,
    statistics: Statistics,
    ceiling: u32,
) -> Option<(Vec<u32>, f64)> {
    let n = occupations[mode];
    let mut out = occupations.to_vec();
    let magnitude = if create {
        if n + 1 > ceiling {
            return None;
        }
        out[mode] = n + 1;
        ((n + 1) as f64).sqrt()
    } else {
        if n == 0 {
            return None;
        }
        out[mode] = n - 1;
        (n as f64).sqrt()
    };
    let sign = if statistics == Statistics::Fermion {
        let preceding: u32 = occupations[..mode].iter().sum();
        if preceding % 2 == 1 {
            -1.0
        } else {
            1.0
        }
    } else {
        1.0
    };
    Some((out, sign * magnitude))
}

/// Matrix element of `a_to^dagger a_from` on a basis vector.
pub(crate) fn hop_on(
    occupations: &[u32],
    to: usize,
    from: usize,
    statistics: Statistics,
    ceiling: u32,
) -> Option<(Vec<u32>, f64)> {
    let (mid, c1) = ladder_on(occupations, from, false, statistics, ceiling)?;
    let (out, c2) = ladder_on(&mid, to, true, statistics, ceiling)?;
    Some((out, c1 * c2))
}

#[derive(Debug, Clone)]
pub struct FockStateVector {
    basis: Arc<FockBasis>,
    amplitudes: DVector<Complex64>,
}

impl FockStateVector {
    pub fn new(basis: Arc<FockBasis>, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return Err(Error::Shape(format!(
                "{} amplitudes for a basis of {} elements",
                amplitudes.len(),
                basis.len()
            )));
        }
        Ok(Self { basis, amplitudes })
    }

    pub fn zero(basis: Arc<FockBasis>) -> Self {
        let n = basis.len();
        Self {
            basis,
            amplitudes: DVector::zeros(n),
        }
    }

    /// The normalized basis ket with the given occupations.
    pub fn basis_state(basis: Arc<FockBasis>, occupations: &[u32]) -> Result<Self> {
        let idx = basis.index_of(occupations).ok_or_else(|| {
            Error::InvalidOccupation(format!("{occupations:?} is not in the basis"))
        })?;
        let mut state = Self::zero(basis);
        state.amplitudes[idx] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    pub fn from_pairs(basis: Arc<FockBasis>, pairs: &[(&[u32], Complex64)]) -> Result<Self> {
        let mut state = Self::zero(basis);
        for (occ, amp) in pairs {
            let idx = state.basis.index_of(occ).ok_or_else(|| {
                Error::InvalidOccupation(format!("{occ:?} is not in the basis"))
            })?;
            state.amplitudes[idx] += amp;
        }
        Ok(state)
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<Complex64> {
        self.amplitudes
    }

    pub fn amplitude(&self, occupations: &[u32]) -> Option<Complex64> {
        self.basis.index_of(occupations).map(|i| self.amplitudes[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 {
            return Err(Error::Invalid("cannot normalize the zero vector".into()));
        }
        Ok(Self {
            basis: Arc::clone(&self.basis),
            amplitudes: self.amplitudes.unscale(norm),
        })
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= AMPLITUDE_TOL
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner_product(&self, other: &FockStateVector) -> Result<Complex64> {
        inner_product(self, other)
    }

    pub fn apply_creation(&self, mode: usize) -> Result<FockStateVector> {
        self.ladder(mode, true)
    }

    pub fn apply_annihilation(&self, mode: usize) -> Result<FockStateVector> {
        self.ladder(mode, false)
    }

    fn ladder(&self, mode: usize, create: bool) -> Result<FockStateVector> {
        let basis = &self.basis;
        if basis.statistics == Statistics::Distinguishable {
            return Err(Error::Unsupported(basis.statistics, "ladder operators"));
        }
        if mode >= basis.modes {
            return Err(Error::ModeOutOfRange {
                mode,
                modes: basis.modes,
            });
        }
        let target = if create {
            basis.particles + 1
        } else if basis.particles == 0 {
            return Err(Error::Invalid("cannot annihilate from the vacuum sector".into()));
        } else {
            basis.particles - 1
        };
        let target = Arc::new(basis.sector(target)?);
        let ceiling = effective_ceiling(basis.statistics, basis.max_occupation, target.particles.max(basis.particles));
        let mut out = FockStateVector::zero(Arc::clone(&target));
        for (i, amp) in self.amplitudes.iter().enumerate() {
            if *amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let occ = basis.element(i).occupations();
            if let Some((new_occ, coeff)) = ladder_on(occ, mode, create, basis.statistics, ceiling) {
                let j = target.index_of(&new_occ).expect("ladder result lies in target sector");
                out.amplitudes[j] += amp * coeff;
            }
        }
        Ok(out)
    }
}

pub fn inner_product(bra: &FockStateVector, ket: &FockStateVector) -> Result<Complex64> {
    if bra.basis != ket.basis {
        return Err(Error::BasisMismatch);
    }
    Ok(bra.amplitudes.dotc(&ket.amplitudes))
}

/// Matrix of a single creation (or annihilation) operator between two sectors.
pub fn ladder_matrix(from: &FockBasis, to: &FockBasis, mode: usize, create: bool) -> Result<DMatrix<Complex64>> {
    if from.modes != to.modes || from.statistics != to.statistics {
        return Err(Error::BasisMismatch);
    }
    if mode >= from.modes {
        return Err(Error::ModeOutOfRange {
            mode,
            modes: from.modes,
        });
    }
    let expected = if create {
        from.particles + 1
    } else {
        from.particles.wrapping_sub(1)
    };
    if to.particles != expected {
        return Err(Error::ParticleNumber {
            expected,
            found: to.particles,
        });
    }
    let ceiling = to.ceiling().min(from.ceiling());
    let mut m = DMatrix::zeros(to.len(), from.len());
    for (col, el) in from.elements.iter().enumerate() {
        if let Some((occ, c)) = ladder_on(el.occupations(), mode, create, from.statistics, ceiling) {
            if let Some(row) = to.index_of(&occ) {
                m[(row, col)] = Complex64::new(c, 0.0);
            }
        }
    }
    Ok(m)
}

/// Matrix of `a_to^dagger a_from` within one sector.
pub fn hopping_matrix(basis: &FockBasis, to: usize, from: usize) -> Result<DMatrix<Complex64>> {
    for mode in [to, from] {
        if mode >= basis.modes {
            return Err(Error::ModeOutOfRange {
                mode,
                modes: basis.modes,
            });
        }
    }
    let ceiling = basis.ceiling().min(effective_ceiling(basis.statistics, basis.max_occupation, basis.particles));
    let mut m = DMatrix::zeros(basis.len(), basis.len());
    for (col, el) in basis.elements.iter().enumerate() {
        if let Some((occ, c)) = hop_on(el.occupations(), to, from, basis.statistics, ceiling) {
            let row = basis.index_of(&occ).expect("hopping conserves the sector");
            m[(row, col)] += Complex64::new(c, 0.0);
        }
    }
    Ok(m)
}

/// Density matrix over an explicit list of labelled basis states.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    labels: Vec<OccupationVector>,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity (eigenvalue floor
    /// `-AMPLITUDE_TOL`).
    pub fn new(labels: Vec<OccupationVector>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let rho = Self::new_unchecked(labels, matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn new_unchecked(labels: Vec<OccupationVector>, matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != labels.len() {
            return Err(Error::Shape(format!(
                "{}x{} matrix for {} labels",
                matrix.nrows(),
                matrix.ncols(),
                labels.len()
            )));
        }
        Ok(Self { labels, matrix })
    }

    pub fn from_pure(state: &FockStateVector) -> Result<Self> {
        let psi = state.normalized()?;
        let m = &psi.amplitudes * psi.amplitudes.adjoint();
        Self::new(psi.basis.elements.clone(), m)
    }

    pub fn validate(&self) -> Result<()> {
        let herm = max_abs(&(&self.matrix - self.matrix.adjoint()));
        if herm > AMPLITUDE_TOL {
            return Err(Error::Invalid(format!("density matrix not Hermitian ({herm:e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > AMPLITUDE_TOL {
            return Err(Error::Invalid(format!("density matrix trace {tr} != 1")));
        }
        let min = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -AMPLITUDE_TOL {
            return Err(Error::Invalid(format!("density matrix has eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn labels(&self) -> &[OccupationVector] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `tr(rho^2)`, computed as the squared Frobenius norm.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.matrix + self.matrix.adjoint()).scale(0.5);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }
}
