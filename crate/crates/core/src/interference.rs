//! Linear mode networks and their action on many-particle Fock states.
//!
//! A [`ModeUnitary`] `U` maps input creation operators to output ones as
//! `a_i^dagger -> sum_j U[i][j] b_j^dagger`: rows index input modes, columns
//! output modes. Consecutive elements therefore compose by matrix product in
//! the order light passes through them.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{max_abs, mode_list, FockBasis, FockStateVector, OccupationVector, Statistics};
use crate::matrix::{determinant, permanent};

pub const UNITARITY_TOL: f64 = 1e-10;
pub const PROBABILITY_TOL: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct ModeUnitary {
    matrix: DMatrix<Complex64>,
}

pub fn unitarity_deviation(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    max_abs(&(m.adjoint() * m - DMatrix::<Complex64>::identity(n, n)))
}

impl ModeUnitary {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::Shape(format!("{}x{} mode matrix", matrix.nrows(), matrix.ncols())));
        }
        let deviation = unitarity_deviation(&matrix);
        if deviation > UNITARITY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { matrix })
    }

    /// For matrices that are unitary by construction up to roundoff.
    pub(crate) fn trusted(matrix: DMatrix<Complex64>) -> Self {
        debug_assert!(unitarity_deviation(&matrix) < 1e-8);
        Self { matrix }
    }

    pub fn identity(modes: usize) -> Self {
        Self::trusted(DMatrix::identity(modes, modes))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows()
    }

    /// Network in which `self` acts first and `next` second.
    pub fn then(&self, next: &ModeUnitary) -> Result<ModeUnitary> {
        if self.modes() != next.modes() {
            return Err(Error::Shape(format!("{} vs {} modes", self.modes(), next.modes())));
        }
        Ok(Self::trusted(&self.matrix * &next.matrix))
    }

    /// Block-diagonal combination acting on disjoint mode sets.
    pub fn direct_sum(&self, other: &ModeUnitary) -> ModeUnitary {
        let (a, b) = (self.modes(), other.modes());
        let mut m = DMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.matrix);
        m.view_mut((a, a), (b, b)).copy_from(&other.matrix);
        Self::trusted(m)
    }

    /// Embeds a two-mode element acting on modes `(p, q)` of a larger network.
    pub fn embed_pair(&self, modes: usize, p: usize, q: usize) -> Result<ModeUnitary> {
        if self.modes() != 2 {
            return Err(Error::Shape("embed_pair needs a 2x2 element".into()));
        }
        if p >= modes || q >= modes || p == q {
            return Err(Error::ModeOutOfRange { mode: p.max(q), modes });
        }
        let mut m = DMatrix::identity(modes, modes);
        let idx = [p, q];
        for (a, &ra) in idx.iter().enumerate() {
            for (b, &cb) in idx.iter().enumerate() {
                m[(ra, cb)] = self.matrix[(a, b)];
            }
        }
        Ok(Self::trusted(m))
    }
}

/// Two-mode beamsplitter with reflectivity `r` and reflection phase `varphi`:
/// `a1^dagger -> sqrt(T) b2^dagger + i e^{i varphi} sqrt(R) b1^dagger`,
/// `a2^dagger -> sqrt(T) b1^dagger + i e^{-i varphi} sqrt(R) b2^dagger`.
pub fn beamsplitter(r: f64, varphi: f64) -> Result<ModeUnitary> {
    check_reflectivity(r)?;
    let t = 1.0 - r;
    let (sr, st) = (Complex64::new(r.sqrt(), 0.0), Complex64::new(t.sqrt(), 0.0));
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[
            I * Complex64::from_polar(1.0, varphi) * sr,
            st,
            st,
            I * Complex64::from_polar(1.0, -varphi) * sr,
        ],
    );
    Ok(ModeUnitary::trusted(m))
}

pub(crate) fn check_reflectivity(r: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Domain {
            name: "R",
            value: r,
            reason: "reflectivity must lie in [0, 1]",
        });
    }
    Ok(())
}

/// `b_j^dagger -> e^{i phi_j} b_j^dagger`.
pub fn phase_shifter(phases: &[f64]) -> ModeUnitary {
    let d = DVector::from_iterator(phases.len(), phases.iter().map(|&p| Complex64::from_polar(1.0, p)));
    ModeUnitary::trusted(DMatrix::from_diagonal(&d))
}

/// Discrete Fourier network `U[j][k] = e^{2 pi i jk / L} / sqrt(L)`.
pub fn fourier(modes: usize) -> ModeUnitary {
    let norm = (modes as f64).sqrt();
    let m = DMatrix::from_fn(modes, modes, |j, k| {
        let angle = std::f64::consts::TAU * ((j * k) % modes) as f64 / modes as f64;
        Complex64::from_polar(1.0 / norm, angle)
    });
    ModeUnitary::trusted(m)
}

/// Two equal beamsplitters around a phase `phi` in the second arm.
pub fn mach_zehnder_unitary(r: f64, phi: f64) -> Result<ModeUnitary> {
    let bs = beamsplitter(r, 0.0)?;
    bs.then(&phase_shifter(&[0.0, phi]))?.then(&bs)
}

/// Closed-form `(P(1,0), P(0,1))` for a particle entering mode 1.
pub fn mach_zehnder_probs(r: f64, phi: f64) -> Result<(f64, f64)> {
    check_reflectivity(r)?;
    let t = 1.0 - r;
    let p10 = r * r + t * t - 2.0 * r * t * phi.cos();
    let p01 = 4.0 * r * t * (phi / 2.0).cos().powi(2);
    Ok((p10, p01))
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn occupation_norm(occ: &[u32]) -> f64 {
    occ.iter().map(|&n| factorial(n)).product()
}

fn submatrix(u: &DMatrix<Complex64>, rows: &[usize], cols: &[usize]) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows.len(), cols.len(), |a, b| u[(rows[a], cols[b])])
}

/// `<out| U |in>` for bosons or fermions.
pub fn transition_amplitude(input: &[u32], output: &[u32], u: &ModeUnitary, statistics: Statistics) -> Result<Complex64> {
    check_pair(input, output, u)?;
    let sub = submatrix(u.matrix(), &mode_list(input), &mode_list(output));
    match statistics {
        Statistics::Boson => {
            let norm = (occupation_norm(input) * occupation_norm(output)).sqrt();
            Ok(permanent(&sub)? / norm)
        }
        Statistics::Fermion => {
            if input.iter().chain(output).any(|&n| n > 1) {
                return Ok(Complex64::new(0.0, 0.0));
            }
            determinant(&sub)
        }
        Statistics::Distinguishable => Err(Error::Unsupported(statistics, "transition amplitudes")),
    }
}

fn check_pair(input: &[u32], output: &[u32], u: &ModeUnitary) -> Result<()> {
    if input.len() != u.modes() || output.len() != u.modes() {
        return Err(Error::Shape(format!(
            "occupations over {} and {} modes for a {}-mode network",
            input.len(),
            output.len(),
            u.modes()
        )));
    }
    let (ni, no) = (input.iter().sum::<u32>(), output.iter().sum::<u32>());
    if ni != no {
        return Err(Error::ParticleNumber { expected: ni, found: no });
    }
    Ok(())
}

pub fn transition_probability(
    input: &OccupationVector,
    output: &OccupationVector,
    u: &ModeUnitary,
    statistics: Statistics,
) -> Result<f64> {
    raw_transition_probability(input.occupations(), output.occupations(), u, statistics)
}

fn raw_transition_probability(input: &[u32], output: &[u32], u: &ModeUnitary, statistics: Statistics) -> Result<f64> {
    match statistics {
        Statistics::Boson | Statistics::Fermion => Ok(transition_amplitude(input, output, u, statistics)?.norm_sqr()),
        Statistics::Distinguishable => {
            check_pair(input, output, u)?;
            let sub = submatrix(u.matrix(), &mode_list(input), &mode_list(output)).map(|z| Complex64::new(z.norm_sqr(), 0.0));
            Ok(permanent(&sub)?.re / occupation_norm(output))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputDistribution {
    statistics: Statistics,
    entries: Vec<(OccupationVector, f64)>,
}

impl OutputDistribution {
    pub fn new(statistics: Statistics, entries: Vec<(OccupationVector, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Invalid("empty distribution".into()));
        }
        if let Some((occ, p)) = entries.iter().find(|(_, p)| !(*p >= -PROBABILITY_TOL)) {
            return Err(Error::Invalid(format!("negative probability {p} for {occ}")));
        }
        let total: f64 = entries.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::Invalid(format!("probabilities sum to {total}")));
        }
        Ok(Self { statistics, entries })
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn entries(&self) -> &[(OccupationVector, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn probability(&self, occupations: &[u32]) -> f64 {
        self.entries
            .iter()
            .find(|(o, _)| o.occupations() == occupations)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    /// Expected occupation of every mode.
    pub fn mean_occupations(&self) -> Vec<f64> {
        let modes = self.entries[0].0.modes();
        let mut out = vec![0.0; modes];
        for (occ, p) in &self.entries {
            for (m, &n) in occ.occupations().iter().enumerate() {
                out[m] += p * n as f64;
            }
        }
        out
    }
}

/// Full table of output probabilities for a definite input.
pub fn output_distribution(input: &OccupationVector, u: &ModeUnitary, statistics: Statistics) -> Result<OutputDistribution> {
    if input.modes() != u.modes() {
        return Err(Error::Shape(format!("{} input modes for a {}-mode network", input.modes(), u.modes())));
    }
    let basis_stats = match statistics {
        Statistics::Fermion => Statistics::Fermion,
        _ => Statistics::Boson,
    };
    let basis = crate::fock::enumerate_basis(u.modes(), input.particles(), basis_stats)?;
    let probs: Vec<f64> = basis
        .elements()
        .par_iter()
        .map(|out| raw_transition_probability(input.occupations(), out.occupations(), u, statistics))
        .collect::<Result<_>>()?;
    let entries = basis
        .elements()
        .iter()
        .zip(probs)
        .map(|(o, p)| (OccupationVector::new(o.occupations().to_vec(), statistics).expect("valid"), p))
        .collect();
    OutputDistribution::new(statistics, entries)
}

/// `n` particles in each input port of a beamsplitter with reflectivity `r`.
pub fn two_mode_nn_distribution(n: u32, r: f64, statistics: Statistics) -> Result<OutputDistribution> {
    let bs = beamsplitter(r, 0.0)?;
    let input = OccupationVector::new(vec![n, n], statistics)?;
    output_distribution(&input, &bs, statistics)
}

/// The Fock-space matrix `<m| U |n>` with rows indexed by output basis
/// elements and columns by input ones.
pub fn lift_to_fock(u: &ModeUnitary, basis: &FockBasis) -> Result<DMatrix<Complex64>> {
    let deviation = unitarity_deviation(u.matrix());
    if deviation > UNITARITY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    if basis.statistics() == Statistics::Distinguishable {
        return Err(Error::Unsupported(basis.statistics(), "lift_to_fock"));
    }
    if basis.max_occupation().is_some_and(|m| m < basis.particles()) && basis.statistics() == Statistics::Boson {
        return Err(Error::Invalid("linear networks do not preserve a truncated bosonic basis".into()));
    }
    if u.modes() != basis.modes() {
        return Err(Error::Shape(format!("{}-mode network on a {}-mode basis", u.modes(), basis.modes())));
    }
    let dim = basis.len();
    let columns: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|col| {
            let input = basis.element(col).occupations();
            basis
                .elements()
                .iter()
                .map(|out| transition_amplitude(input, out.occupations(), u, basis.statistics()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(dim, dim, |r, c| columns[c][r]))
}

/// Applies a mode network to a many-body state.
pub fn apply_unitary(state: &FockStateVector, u: &ModeUnitary) -> Result<FockStateVector> {
    let lifted = lift_to_fock(u, state.basis())?;
    FockStateVector::new(Arc::clone(state.basis()), lifted * state.amplitudes())
}

/// Fock lift of a 2x2 element on the `total`-boson sector, in descending
/// order, by expanding `(u00 b0 + u01 b1)^n0 (u10 b0 + u11 b1)^n1`.
fn two_mode_lift(u: &DMatrix<Complex64>, total: u32) -> DMatrix<Complex64> {
    let dim = total as usize + 1;
    let binom = |n: u32, k: u32| (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1));
    let mut lift = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let (n0, n1) = (total - col as u32, col as u32);
        let first: Vec<Complex64> = (0..=n0).map(|i| u[(0, 0)].powu(i) * u[(0, 1)].powu(n0 - i) * binom(n0, i)).collect();
        let second: Vec<Complex64> = (0..=n1).map(|j| u[(1, 0)].powu(j) * u[(1, 1)].powu(n1 - j) * binom(n1, j)).collect();
        let norm_in = (factorial(n0) * factorial(n1)).sqrt();
        for (i, a) in first.iter().enumerate() {
            for (j, b) in second.iter().enumerate() {
                // b0 power i + j, so the output is (i + j, total - i - j)
                let k = (i + j) as u32;
                lift[(dim - 1 - k as usize, col)] += a * b;
            }
        }
        for row in 0..dim {
            let k = total - row as u32;
            lift[(row, col)] *= (factorial(k) * factorial(total - k)).sqrt() / norm_in;
        }
    }
    lift
}

/// Applies a 2x2 element on modes `(p, q)` without building the full lift.
/// Only the occupations of `p` and `q` change, and the action on them
/// depends only on their total.
pub fn apply_mode_pair_unitary(state: &FockStateVector, p: usize, q: usize, u: &ModeUnitary) -> Result<FockStateVector> {
    let basis = state.basis();
    if basis.statistics() != Statistics::Boson || basis.max_occupation().is_some() {
        return Err(Error::Unsupported(basis.statistics(), "pairwise mode transforms"));
    }
    if u.modes() != 2 {
        return Err(Error::Shape("pairwise transform needs a 2x2 element".into()));
    }
    if p >= basis.modes() || q >= basis.modes() || p == q {
        return Err(Error::ModeOutOfRange { mode: p.max(q), modes: basis.modes() });
    }
    let mut lifts: HashMap<u32, DMatrix<Complex64>> = HashMap::new();
    let mut out = DVector::zeros(basis.len());
    for (idx, amp) in state.amplitudes().iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let occ = basis.element(idx).occupations();
        let total = occ[p] + occ[q];
        let lift = lifts.entry(total).or_insert_with(|| two_mode_lift(u.matrix(), total));
        // descending order: index r holds (total - r, r)
        let col = occ[q] as usize;
        let mut target = occ.to_vec();
        for row in 0..=total as usize {
            let c = lift[(row, col)];
            if c.norm_sqr() == 0.0 {
                continue;
            }
            target[p] = total - row as u32;
            target[q] = row as u32;
            let j = basis.index_of(&target).expect("pair transform stays in sector");
            out[j] += c * amp;
        }
    }
    FockStateVector::new(Arc::clone(basis), out)
}

/// `n! / prod_j r_j!` for an input with occupations `r`.
pub fn bunching_enhancement(occupations: &[u32]) -> f64 {
    let n: u32 = occupations.iter().sum();
    factorial(n) / occupation_norm(occupations)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BunchingCheck {
    pub boson: f64,
    pub distinguishable: f64,
    pub factor: f64,
}

impl BunchingCheck {
    pub fn holds(&self, tol: f64) -> bool {
        (self.boson - self.distinguishable * self.factor).abs() <= tol
    }
}

/// Compares bosonic and distinguishable probabilities of finding every
/// particle in `target` after `u`.
pub fn verify_bunching(input: &[u32], u: &ModeUnitary, target: usize) -> Result<BunchingCheck> {
    if target >= u.modes() {
        return Err(Error::ModeOutOfRange { mode: target, modes: u.modes() });
    }
    let n: u32 = input.iter().sum();
    let mut out = vec![0u32; u.modes()];
    out[target] = n;
    Ok(BunchingCheck {
        boson: raw_transition_probability(input, &out, u, Statistics::Boson)?,
        distinguishable: raw_transition_probability(input, &out, u, Statistics::Distinguishable)?,
        factor: bunching_enhancement(input),
    })
}
