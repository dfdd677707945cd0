//! Particle entanglement of two-particle states (Schmidt rank, CSOP) and
//! mode entanglement of Fock states (reduced states, Rényi entropies, the
//! twin-copy parity protocol).

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{enumerate_basis, max_abs, DensityMatrix, FockBasis, FockStateVector, OccupationVector, Statistics};
use crate::hubbard::{build_hamiltonian, HubbardParams, Propagator};
use crate::interference::{apply_mode_pair_unitary, apply_unitary, beamsplitter, ModeUnitary};

pub const SYMMETRY_TOL: f64 = 1e-12;
pub const DEFAULT_SCHMIDT_TOL: f64 = 1e-8;
pub const CSOP_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// First-quantized amplitude `v_{qj}` of `sum_{qj} v_{qj} |x_q>|x_j>`,
/// symmetric and normalized in the Frobenius norm.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoParticleAmplitude {
    v: DMatrix<Complex64>,
}

impl TwoParticleAmplitude {
    pub fn new(v: DMatrix<Complex64>) -> Result<Self> {
        if !v.is_square() || v.nrows() == 0 {
            return Err(Error::Shape(format!("{}x{} amplitude matrix", v.nrows(), v.ncols())));
        }
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Invalid("amplitude matrix has zero norm".into()));
        }
        let v = v.unscale(norm);
        let deviation = max_abs(&(&v - v.transpose()));
        if deviation > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { deviation });
        }
        Ok(Self { v })
    }

    /// Reads the amplitude of a two-boson Fock state: `|1_q 1_j>` contributes
    /// `c / sqrt 2` to `v_{qj}` and `v_{jq}`, `|2_q>` contributes `c` to `v_{qq}`.
    pub fn from_fock(state: &FockStateVector) -> Result<Self> {
        let basis = state.basis();
        if basis.statistics() != Statistics::Boson {
            return Err(Error::Unsupported(basis.statistics(), "two-particle amplitude extraction"));
        }
        if basis.particles() != 2 {
            return Err(Error::ParticleNumber { expected: 2, found: basis.particles() });
        }
        let d = basis.modes();
        let mut v = DMatrix::zeros(d, d);
        for (el, &c) in basis.elements().iter().zip(state.amplitudes().iter()) {
            match el.mode_list()[..] {
                [q, j] if q == j => v[(q, q)] += c,
                [q, j] => {
                    let h = c * std::f64::consts::FRAC_1_SQRT_2;
                    v[(q, j)] += h;
                    v[(j, q)] += h;
                }
                _ => unreachable!("two particles"),
            }
        }
        Self::new(v)
    }

    /// `(|a>|b> + |b>|a>)` normalized.
    pub fn symmetrized_product(a: &DVector<Complex64>, b: &DVector<Complex64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Shape("constituents have different dimensions".into()));
        }
        Self::new(a * b.transpose() + b * a.transpose())
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.v.nrows()
    }

    /// Amplitude after the single-particle map `|x> -> U|x>`, i.e. `U v U^T`.
    pub fn transformed(&self, u: &DMatrix<Complex64>) -> Result<Self> {
        if u.nrows() != self.dim() || !u.is_square() {
            return Err(Error::Shape("single-particle map has the wrong size".into()));
        }
        Self::new(u * &self.v * u.transpose())
    }

    /// `<psi| A (x) B |psi> = tr(v^dagger A v B^T)`.
    pub fn expectation(&self, a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
        (self.v.adjoint() * a * &self.v * b.transpose()).trace()
    }
}

/// Bosonic `Phi_x` over `(L down, L up, R down, R up)`.
pub fn phi_x() -> TwoParticleAmplitude {
    let mut v = DMatrix::zeros(4, 4);
    for k in 0..4 {
        v[(k, 3 - k)] = Complex64::new(0.5, 0.0);
    }
    TwoParticleAmplitude::new(v).expect("symmetric")
}

/// Autonne-Takagi factorization `v = W diag(s) W^T` of a complex symmetric
/// matrix, with `s` non-negative and descending and `W` unitary.
///
/// For `v = A + iB` the real symmetric matrix `[[A, B], [B, -A]]` has
/// eigenpairs `(s, [x; y])` with `v conj(x + iy) = s (x + iy)`.
pub fn takagi(v: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let d = v.nrows();
    let deviation = max_abs(&(v - v.transpose()));
    if deviation > SYMMETRY_TOL * v.norm().max(1.0) {
        return Err(Error::NotSymmetric { deviation });
    }
    let mut m = DMatrix::<f64>::zeros(2 * d, 2 * d);
    for r in 0..d {
        for c in 0..d {
            let z = v[(r, c)];
            m[(r, c)] = z.re;
            m[(r, c + d)] = z.im;
            m[(r + d, c)] = z.im;
            m[(r + d, c + d)] = -z.re;
        }
    }
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..2 * d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let floor = 1e-13 * scale;

    let mut values = Vec::with_capacity(d);
    let mut columns: Vec<DVector<Complex64>> = Vec::with_capacity(d);
    for &k in order.iter().take(d) {
        let s = eig.eigenvalues[k];
        if s <= floor {
            break;
        }
        let col = eig.eigenvectors.column(k);
        let w = DVector::from_fn(d, |i, _| Complex64::new(col[i], col[i + d]));
        if let Some(w) = orthonormalize(&columns, w) {
            values.push(s);
            columns.push(w);
        }
    }
    // The kernel of v is closed under multiplication by i, so its vectors do
    // not come in the pairs used above; complete W from the standard basis.
    for e in 0..d {
        if columns.len() == d {
            break;
        }
        let mut w = DVector::zeros(d);
        w[e] = Complex64::new(1.0, 0.0);
        if let Some(w) = orthonormalize(&columns, w) {
            values.push(0.0);
            columns.push(w);
        }
    }
    Ok((values, DMatrix::from_columns(&columns)))
}

fn orthonormalize(existing: &[DVector<Complex64>], mut w: DVector<Complex64>) -> Option<DVector<Complex64>> {
    for _ in 0..2 {
        for e in existing {
            let proj = e.dotc(&w);
            w -= e * proj;
        }
    }
    let n = w.norm();
    (n > 1e-6).then(|| w.unscale(n))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchmidtSpectrum {
    /// Non-negative, descending; squares sum to one.
    pub coefficients: Vec<f64>,
    pub rank: usize,
    /// Column `k` holds the single-particle state `|x_k>`.
    #[serde(skip)]
    pub basis: DMatrix<Complex64>,
}

impl SchmidtSpectrum {
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let s = DMatrix::from_diagonal(&DVector::from_iterator(
            self.coefficients.len(),
            self.coefficients.iter().map(|&c| Complex64::new(c, 0.0)),
        ));
        &self.basis * s * self.basis.transpose()
    }
}

pub fn schmidt_spectrum(v: &TwoParticleAmplitude, tol: f64) -> Result<SchmidtSpectrum> {
    let (coefficients, basis) = takagi(&v.v)?;
    let rank = coefficients.iter().filter(|&&c| c > tol).count().max(1);
    Ok(SchmidtSpectrum { coefficients, rank, basis })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ParticleEntanglement {
    SameState,
    SymmetrizedProduct,
    Entangled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classification {
    pub verdict: ParticleEntanglement,
    pub rank: usize,
    /// For rank two: whether the state is a symmetrized product of two
    /// orthogonal states, which happens exactly when both coefficients agree.
    pub orthogonal_constituents: Option<bool>,
}

pub fn particle_entangled(v: &TwoParticleAmplitude, tol: f64) -> Result<Classification> {
    let s = schmidt_spectrum(v, tol)?;
    let (verdict, orthogonal_constituents) = match s.rank {
        1 => (ParticleEntanglement::SameState, None),
        2 => (ParticleEntanglement::SymmetrizedProduct, Some((s.coefficients[0] - s.coefficients[1]).abs() <= tol)),
        _ => (ParticleEntanglement::Entangled, None),
    };
    Ok(Classification { verdict, rank: s.rank, orthogonal_constituents })
}

/// `<psi| P (x) (1-P) + (1-P) (x) P |psi>` for `P = |p><p|`, `|p|=1`.
pub fn csop_expectation(v: &TwoParticleAmplitude, p: &DVector<Complex64>) -> f64 {
    let (f, _) = csop_value_and_gradient(&v.v, p);
    f
}

/// With `g = ||v conj(p)||^2` and `h = p^T conj(v) p` the expectation is
/// `2 g - 2 |h|^2`; the returned gradient is with respect to `conj(p)`.
fn csop_value_and_gradient(v: &DMatrix<Complex64>, p: &DVector<Complex64>) -> (f64, DVector<Complex64>) {
    let vp = v * p.conjugate();
    let g = vp.norm_squared();
    let h = p.dotc(&vp).conj();
    let grad = v.conjugate() * &vp * Complex64::new(2.0, 0.0) - vp * (h * 4.0);
    let grad = grad.conjugate();
    (2.0 * g - 2.0 * h.norm_sqr(), grad)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CsopVerdict {
    /// Both particles occupy the same single-particle state.
    SameState,
    /// A projector `|p><p|` that assigns one particle to `p` with certainty.
    Projector {
        #[serde(skip)]
        vector: DVector<Complex64>,
        expectation: f64,
    },
    /// No projector exists; `best` is the largest expectation found by the
    /// numerical sweep.
    Absent { best: f64 },
}

pub fn csop_check(v: &TwoParticleAmplitude) -> Result<CsopVerdict> {
    let s = schmidt_spectrum(v, DEFAULT_SCHMIDT_TOL)?;
    match s.rank {
        1 => Ok(CsopVerdict::SameState),
        2 if (s.coefficients[0] - s.coefficients[1]).abs() <= DEFAULT_SCHMIDT_TOL => {
            let w1 = s.basis.column(0).into_owned();
            let w2 = s.basis.column(1).into_owned();
            let p = (w1 + w2 * Complex64::new(0.0, 1.0)).unscale(2f64.sqrt());
            let expectation = csop_expectation(v, &p);
            if (expectation - 1.0).abs() <= CSOP_TOL {
                Ok(CsopVerdict::Projector { vector: p, expectation })
            } else {
                Ok(CsopVerdict::Absent { best: csop_search(v, 64, 0)?.1 })
            }
        }
        _ => Ok(CsopVerdict::Absent { best: csop_search(v, 64, 0)?.1 }),
    }
}

/// Multistart projected gradient ascent of the CSOP expectation over unit
/// vectors, seeded deterministically.
pub fn csop_search(v: &TwoParticleAmplitude, starts: usize, seed: u64) -> Result<(DVector<Complex64>, f64)> {
    let d = v.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (DVector::zeros(d), f64::NEG_INFINITY);
    for start in 0..starts.max(1) {
        let mut p = if start < d {
            let mut e = DVector::zeros(d);
            e[start] = Complex64::new(1.0, 0.0);
            e
        } else {
            let raw = DVector::from_fn(d, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            raw.normalize()
        };
        let (mut f, mut grad) = csop_value_and_gradient(&v.v, &p);
        let mut step = 0.5;
        for _ in 0..500 {
            let tangent = &grad - &p * p.dotc(&grad);
            if tangent.norm() < 1e-13 {
                break;
            }
            let trial = (&p + tangent * Complex64::new(step, 0.0)).normalize();
            let (ft, gt) = csop_value_and_gradient(&v.v, &trial);
            if ft >= f {
                p = trial;
                f = ft;
                grad = gt;
                step = (step * 1.5).min(2.0);
            } else {
                step *= 0.5;
                if step < 1e-12 {
                    break;
                }
            }
        }
        if f > best.1 {
            best = (p, f);
        }
    }
    Ok(best)
}

/// Partition of the modes into a left and right subsystem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BipartiteCut {
    left: Vec<usize>,
    right: Vec<usize>,
}

impl BipartiteCut {
    pub fn new(modes: usize, left: &[usize]) -> Result<Self> {
        let mut l = left.to_vec();
        l.sort_unstable();
        l.dedup();
        if l.len() != left.len() {
            return Err(Error::InvalidCut("repeated mode in the left subsystem".into()));
        }
        if let Some(&m) = l.iter().find(|&&m| m >= modes) {
            return Err(Error::InvalidCut(format!("mode {m} does not exist in a {modes}-mode system")));
        }
        let right: Vec<usize> = (0..modes).filter(|m| !l.contains(m)).collect();
        if l.is_empty() || right.is_empty() {
            return Err(Error::InvalidCut("both subsystems must be non-empty".into()));
        }
        Ok(Self { left: l, right })
    }

    pub fn left(&self) -> &[usize] {
        &self.left
    }

    pub fn right(&self) -> &[usize] {
        &self.right
    }

    pub fn modes(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn swapped(&self) -> Self {
        Self { left: self.right.clone(), right: self.left.clone() }
    }
}

/// Reduced state of the left subsystem. Labels are the left-mode occupations
/// that carry weight, in descending lexicographic order. For fermions the sign from reordering the
/// creation operators into (left, right) blocks is included.
pub fn reduced_density_matrix(state: &FockStateVector, cut: &BipartiteCut) -> Result<DensityMatrix> {
    let basis = state.basis();
    if cut.modes() != basis.modes() {
        return Err(Error::InvalidCut(format!("cut covers {} modes, state has {}", cut.modes(), basis.modes())));
    }
    let psi = state.normalized()?;
    let fermions = basis.statistics() == Statistics::Fermion;
    let mut left_labels: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    let mut right_labels: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    let mut entries = Vec::with_capacity(basis.len());
    for (el, &c) in basis.elements().iter().zip(psi.amplitudes().iter()) {
        if c == ZERO {
            continue;
        }
        let occ = el.occupations();
        let l: Vec<u32> = cut.left.iter().map(|&m| occ[m]).collect();
        let r: Vec<u32> = cut.right.iter().map(|&m| occ[m]).collect();
        let mut sign = 1.0;
        if fermions {
            let crossings: u32 = cut
                .left
                .iter()
                .filter(|&&m| occ[m] == 1)
                .map(|&m| cut.right.iter().filter(|&&k| k < m && occ[k] == 1).count() as u32)
                .sum();
            if crossings % 2 == 1 {
                sign = -1.0;
            }
        }
        let nl = left_labels.len();
        left_labels.entry(l.clone()).or_insert(nl);
        let nr = right_labels.len();
        right_labels.entry(r.clone()).or_insert(nr);
        entries.push((l, r, c * sign));
    }
    // descending lexicographic order for the labels
    let order: Vec<Vec<u32>> = left_labels.keys().rev().cloned().collect();
    let row_of: BTreeMap<&Vec<u32>, usize> = order.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let mut m = DMatrix::<Complex64>::zeros(order.len(), right_labels.len());
    for (l, r, c) in &entries {
        m[(row_of[l], right_labels[r])] += *c;
    }
    let rho = &m * m.adjoint();
    let labels = order
        .into_iter()
        .map(|l| OccupationVector::new(l, basis.statistics()))
        .collect::<Result<Vec<_>>>()?;
    DensityMatrix::new(labels, rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Entropies {
    pub von_neumann: f64,
    /// `-log tr rho^2`, non-negative.
    pub renyi2: f64,
}

pub fn entropies(rho: &DensityMatrix) -> Entropies {
    let von_neumann = rho
        .eigenvalues()
        .into_iter()
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.ln())
        .sum::<f64>()
        .max(0.0);
    let renyi2 = (-rho.purity().ln()).max(0.0);
    Entropies { von_neumann, renyi2 }
}

/// How the two copies of each site are interfered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TwinBeamsplitter {
    /// `a1 -> (a1 + a2)/sqrt 2`, `a2 -> (a1 - a2)/sqrt 2`.
    Ideal,
    /// The balanced tunneling splitter `a_j -> (a_j - i a_{3-j})/sqrt 2`,
    /// optionally preceded by the phase `exp(i pi n/2)` on the second copy.
    Tunneling { corrected: bool },
}

fn ideal_twin_splitter() -> ModeUnitary {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ModeUnitary::new(DMatrix::from_row_slice(
        2,
        2,
        &[Complex64::new(h, 0.0), Complex64::new(h, 0.0), Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
    ))
    .expect("unitary")
}

/// Places `|psi> (x) |psi>` on `2L` modes, copy one on modes `0..L`.
pub fn twin_state(state: &FockStateVector) -> Result<FockStateVector> {
    let basis = state.basis();
    if basis.statistics() != Statistics::Boson || basis.max_occupation().is_some() {
        return Err(Error::Unsupported(basis.statistics(), "the twin-copy protocol"));
    }
    let l = basis.modes();
    let twin = Arc::new(enumerate_basis(2 * l, 2 * basis.particles(), Statistics::Boson)?);
    let mut amps = DVector::zeros(twin.len());
    let mut occ = vec![0u32; 2 * l];
    for (a, &ca) in basis.elements().iter().zip(state.amplitudes().iter()) {
        if ca == ZERO {
            continue;
        }
        occ[..l].copy_from_slice(a.occupations());
        for (b, &cb) in basis.elements().iter().zip(state.amplitudes().iter()) {
            occ[l..].copy_from_slice(b.occupations());
            amps[twin.index_of(&occ).expect("twin sector")] = ca * cb;
        }
    }
    FockStateVector::new(twin, amps)
}

/// The Fock-space phase correction `exp(i pi/2 n)` on the second copy of each
/// listed site.
pub fn hubbard_bs_phase_correction(twin: &FockStateVector, sites: &[usize]) -> Result<FockStateVector> {
    let modes = twin.basis().modes();
    if modes % 2 == 1 {
        return Err(Error::Shape("twin states have an even number of modes".into()));
    }
    let l = modes / 2;
    if let Some(&s) = sites.iter().find(|&&s| s >= l) {
        return Err(Error::ModeOutOfRange { mode: s, modes: l });
    }
    let basis = twin.basis();
    let amps = DVector::from_iterator(
        basis.len(),
        basis.elements().iter().zip(twin.amplitudes().iter()).map(|(el, &c)| {
            let n: u32 = sites.iter().map(|&s| el.occupations()[l + s]).sum();
            c * Complex64::new(0.0, 1.0).powu(n)
        }),
    );
    FockStateVector::new(Arc::clone(basis), amps)
}

/// Expectation of `prod_{s in sites} (-1)^{n_{2,s}}` after interfering the
/// two copies of every listed site. With the ideal or the corrected
/// tunneling splitter this equals `tr rho_S^2`.
pub fn twin_parity_purity(state: &FockStateVector, sites: &[usize], splitter: TwinBeamsplitter) -> Result<f64> {
    let psi = state.normalized()?;
    let l = psi.basis().modes();
    let mut sites = sites.to_vec();
    sites.sort_unstable();
    sites.dedup();
    if let Some(&s) = sites.iter().find(|&&s| s >= l) {
        return Err(Error::ModeOutOfRange { mode: s, modes: l });
    }
    let mut twin = twin_state(&psi)?;
    let element = match splitter {
        TwinBeamsplitter::Ideal => ideal_twin_splitter(),
        TwinBeamsplitter::Tunneling { corrected } => {
            if corrected {
                twin = hubbard_bs_phase_correction(&twin, &sites)?;
            }
            beamsplitter(0.5, -std::f64::consts::FRAC_PI_2)?
        }
    };
    for &s in &sites {
        twin = apply_mode_pair_unitary(&twin, s, l + s, &element)?;
    }
    let parity = twin
        .basis()
        .elements()
        .iter()
        .zip(twin.probabilities())
        .map(|(el, p)| {
            let n2: u32 = sites.iter().map(|&s| el.occupations()[l + s]).sum();
            if n2 % 2 == 0 {
                p
            } else {
                -p
            }
        })
        .sum();
    Ok(parity)
}

/// `tr(rho U rho U^dagger)` with `U = exp(i pi/2 n_S)`, the quantity the
/// uncorrected tunneling protocol measures.
pub fn rotated_overlap_purity(state: &FockStateVector, cut: &BipartiteCut) -> Result<f64> {
    let rho = reduced_density_matrix(state, cut)?;
    let phases: Vec<Complex64> = rho
        .labels()
        .iter()
        .map(|l| Complex64::new(0.0, 1.0).powu(l.particles()))
        .collect();
    let u = DMatrix::from_diagonal(&DVector::from_vec(phases));
    Ok((rho.matrix() * &u * rho.matrix() * u.adjoint()).trace().re)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuenchTrace {
    pub times: Vec<f64>,
    pub renyi2: Vec<f64>,
    /// Time of the largest entropy, refined between grid points.
    pub t_max: f64,
    pub renyi2_max: f64,
}

/// Left-site Rényi-2 entropy of the two-site, two-boson Hubbard chain
/// started in `|1,1>`.
pub fn quench_entropy_trace(j: f64, u: f64, times: &[f64]) -> Result<QuenchTrace> {
    if times.is_empty() {
        return Err(Error::Invalid("the time grid is empty".into()));
    }
    if u.abs() > j {
        log::warn!("quench with |U| = {} > J = {j}; the weak-interaction picture does not apply", u.abs());
    }
    let params = HubbardParams::bosons(2, 2, j, u, crate::hubbard::Boundary::Open);
    let basis = Arc::new(params.basis()?);
    let prop = Propagator::new(&build_hamiltonian(&params, &basis)?)?;
    let start = FockStateVector::basis_state(Arc::clone(&basis), &[1, 1])?;
    let cut = BipartiteCut::new(2, &[0])?;
    let s2 = |t: f64| -> Result<f64> { Ok(entropies(&reduced_density_matrix(&prop.evolve(&start, t)?, &cut)?).renyi2) };

    let renyi2 = times.iter().map(|&t| s2(t)).collect::<Result<Vec<_>>>()?;
    let k = (0..times.len()).max_by(|&a, &b| renyi2[a].total_cmp(&renyi2[b])).expect("non-empty");
    let (mut lo, mut hi) = (times[k.saturating_sub(1)], times[(k + 1).min(times.len() - 1)]);
    let mut t_max = times[k];
    let mut renyi2_max = renyi2[k];
    if hi > lo {
        // golden-section refinement of the bracketing interval
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut a = hi - g * (hi - lo);
        let mut b = lo + g * (hi - lo);
        let (mut fa, mut fb) = (s2(a)?, s2(b)?);
        while hi - lo > 1e-12 * hi.abs().max(1.0) {
            if fa > fb {
                hi = b;
                b = a;
                fb = fa;
                a = hi - g * (hi - lo);
                fa = s2(a)?;
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + g * (hi - lo);
                fb = s2(b)?;
            }
        }
        let t = (lo + hi) / 2.0;
        let v = s2(t)?;
        if v > renyi2_max {
            t_max = t;
            renyi2_max = v;
        }
    }
    Ok(QuenchTrace { times: times.to_vec(), renyi2, t_max, renyi2_max })
}

#[derive(Debug, Clone, Serialize)]
pub struct PostselectedSpin {
    pub success_probability: f64,
    pub singlet_fidelity: f64,
    pub conditional_rank: usize,
    pub unconditioned_rank: usize,
    pub unconditioned_csop: CsopVerdict,
    #[serde(skip)]
    pub conditional: FockStateVector,
}

/// Two atoms, spin up in the left well and spin down in the right well, on
/// a balanced splitter. Modes are `(L up, L down, R up, R down)`.
pub fn postselected_spin_entanglement() -> Result<PostselectedSpin> {
    let basis = Arc::new(enumerate_basis(4, 2, Statistics::Boson)?);
    let input = FockStateVector::basis_state(Arc::clone(&basis), &[1, 0, 0, 1])?;
    let bs = beamsplitter(0.5, 0.0)?;
    let network = bs.embed_pair(4, 0, 2)?.then(&bs.embed_pair(4, 1, 3)?)?;
    let out = apply_unitary(&input, &network)?;

    let mut kept = DVector::zeros(basis.len());
    for (i, el) in basis.elements().iter().enumerate() {
        let o = el.occupations();
        if o[0] + o[1] == 1 && o[2] + o[3] == 1 {
            kept[i] = out.amplitudes()[i];
        }
    }
    let success_probability = kept.norm_squared();
    let conditional = FockStateVector::new(Arc::clone(&basis), kept)?.normalized()?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let singlet = FockStateVector::from_pairs(
        Arc::clone(&basis),
        &[(&[1, 0, 0, 1], Complex64::new(h, 0.0)), (&[0, 1, 1, 0], Complex64::new(-h, 0.0))],
    )?;
    let singlet_fidelity = singlet.inner_product(&conditional)?.norm_sqr();
    let conditional_rank = schmidt_spectrum(&TwoParticleAmplitude::from_fock(&conditional)?, DEFAULT_SCHMIDT_TOL)?.rank;
    let whole = TwoParticleAmplitude::from_fock(&out)?;
    let unconditioned_rank = schmidt_spectrum(&whole, DEFAULT_SCHMIDT_TOL)?.rank;
    let unconditioned_csop = csop_check(&whole)?;
    Ok(PostselectedSpin {
        success_probability,
        singlet_fidelity,
        conditional_rank,
        unconditioned_rank,
        unconditioned_csop,
        conditional,
    })
}

/// Ground state of the Bose-Hubbard chain.
pub fn hubbard_ground_state(params: &HubbardParams) -> Result<FockStateVector> {
    let basis: Arc<FockBasis> = Arc::new(params.basis()?);
    let prop = Propagator::new(&build_hamiltonian(params, &basis)?)?;
    prop.ground_state(basis)
}
