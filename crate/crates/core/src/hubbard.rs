//! Interacting dynamics: Bose- and Fermi-Hubbard double wells, the
//! collective-spin (Lipkin-Meshkov-Glick) picture of many bosons in two
//! modes, and one-dimensional lattice walks.
//!
//! Time evolution always goes through a dense Hermitian eigendecomposition.

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_j, bessel_j_table};
use crate::error::{Error, Result};
use crate::fock::{enumerate_basis, hop_on, hopping_matrix, max_abs, FockBasis, FockStateVector, Statistics};
use crate::interference::ModeUnitary;
use crate::matrix::{determinant, permanent};

const I: Complex64 = Complex64::new(0.0, 1.0);
pub const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HubbardParams {
    pub j: f64,
    pub u: f64,
    pub sites: usize,
    pub particles: u32,
    pub boundary: Boundary,
    pub statistics: Statistics,
    /// Two spin states per site; modes are ordered `(site0 up, site0 down,
    /// site1 up, ...)`. Only meaningful for fermions.
    pub spinful: bool,
}

impl HubbardParams {
    pub fn bosons(sites: usize, particles: u32, j: f64, u: f64, boundary: Boundary) -> Self {
        Self {
            j,
            u,
            sites,
            particles,
            boundary,
            statistics: Statistics::Boson,
            spinful: false,
        }
    }

    pub fn spinful_fermions(sites: usize, particles: u32, j: f64, u: f64, boundary: Boundary) -> Self {
        Self {
            j,
            u,
            sites,
            particles,
            boundary,
            statistics: Statistics::Fermion,
            spinful: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j >= 0.0 && self.j.is_finite()) {
            return Err(Error::Domain { name: "J", value: self.j, reason: "tunneling must be finite and non-negative" });
        }
        if !self.u.is_finite() {
            return Err(Error::Domain { name: "U", value: self.u, reason: "interaction must be finite" });
        }
        if self.sites < 2 {
            return Err(Error::Domain { name: "L", value: self.sites as f64, reason: "at least two sites are required" });
        }
        if self.statistics == Statistics::Distinguishable {
            return Err(Error::Unsupported(self.statistics, "Hubbard models"));
        }
        if self.spinful && self.statistics != Statistics::Fermion {
            return Err(Error::Invalid("spinful models are implemented for fermions only".into()));
        }
        Ok(())
    }

    pub fn modes(&self) -> usize {
        if self.spinful {
            2 * self.sites
        } else {
            self.sites
        }
    }

    pub fn basis(&self) -> Result<FockBasis> {
        self.validate()?;
        enumerate_basis(self.modes(), self.particles, self.statistics)
    }
}

/// Nearest-neighbour bonds. A periodic two-site chain has a single bond.
pub fn bonds(sites: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut b: Vec<_> = (0..sites.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if boundary == Boundary::Periodic && sites > 2 {
        b.push((sites - 1, 0));
    }
    b
}

/// `H = -J sum_<ij> (a_i^dagger a_j + h.c.) + interaction`, with interaction
/// `U/2 sum n(n-1)` for bosons and `U sum n_up n_down` for spinful fermions.
pub fn build_hamiltonian(params: &HubbardParams, basis: &FockBasis) -> Result<DMatrix<Complex64>> {
    params.validate()?;
    if basis.modes() != params.modes() || basis.statistics() != params.statistics {
        return Err(Error::BasisMismatch);
    }
    let ceiling = basis.sector_ceiling();
    let spins = if params.spinful { 2 } else { 1 };
    let mode = |site: usize, spin: usize| site * spins + spin;
    let mut h = DMatrix::<Complex64>::zeros(basis.len(), basis.len());
    for (col, el) in basis.elements().iter().enumerate() {
        let occ = el.occupations();
        for &(a, b) in &bonds(params.sites, params.boundary) {
            for spin in 0..spins {
                for (to, from) in [(mode(a, spin), mode(b, spin)), (mode(b, spin), mode(a, spin))] {
                    if let Some((out, c)) = hop_on(occ, to, from, basis.statistics(), ceiling) {
                        let row = basis.index_of(&out).expect("hopping conserves the sector");
                        h[(row, col)] -= Complex64::new(params.j * c, 0.0);
                    }
                }
            }
        }
        let interaction = if params.spinful {
            (0..params.sites).map(|s| (occ[mode(s, 0)] * occ[mode(s, 1)]) as f64).sum::<f64>() * params.u
        } else if params.statistics == Statistics::Boson {
            occ.iter().map(|&n| (n * n.saturating_sub(1)) as f64).sum::<f64>() * params.u / 2.0
        } else {
            0.0
        };
        h[(col, col)] += Complex64::new(interaction, 0.0);
    }
    Ok(h)
}

/// Exact propagator `exp(-i H t)` from an eigendecomposition of `H`.
#[derive(Debug, Clone)]
pub struct Propagator {
    energies: DVector<f64>,
    vectors: DMatrix<Complex64>,
}

impl Propagator {
    pub fn new(h: &DMatrix<Complex64>) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::Shape("Hamiltonian must be square".into()));
        }
        let deviation = max_abs(&(h - h.adjoint()));
        if deviation > HERMITICITY_TOL {
            return Err(Error::Invalid(format!("Hamiltonian is not Hermitian ({deviation:e})")));
        }
        let eig = h.clone().symmetric_eigen();
        Ok(Self {
            energies: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    /// Eigenvalues in ascending order.
    pub fn energies(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.energies.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    pub fn ground_state(&self, basis: Arc<FockBasis>) -> Result<FockStateVector> {
        let k = (0..self.energies.len())
            .min_by(|&a, &b| self.energies[a].total_cmp(&self.energies[b]))
            .ok_or_else(|| Error::Shape("empty Hamiltonian".into()))?;
        FockStateVector::new(basis, self.vectors.column(k).into_owned())
    }

    pub fn evolve_amplitudes(&self, psi: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        let mut coeffs = self.vectors.adjoint() * psi;
        for (c, e) in coeffs.iter_mut().zip(self.energies.iter()) {
            *c *= Complex64::from_polar(1.0, -e * t);
        }
        &self.vectors * coeffs
    }

    pub fn evolve(&self, state: &FockStateVector, t: f64) -> Result<FockStateVector> {
        if state.amplitudes().len() != self.energies.len() {
            return Err(Error::Shape("state and Hamiltonian dimensions differ".into()));
        }
        FockStateVector::new(Arc::clone(state.basis()), self.evolve_amplitudes(state.amplitudes(), t))
    }
}

pub fn evolve(state: &FockStateVector, h: &DMatrix<Complex64>, t: f64) -> Result<FockStateVector> {
    Propagator::new(h)?.evolve(state, t)
}

pub fn energy(state: &FockStateVector, h: &DMatrix<Complex64>) -> Complex64 {
    state.amplitudes().dotc(&(h * state.amplitudes()))
}

/// `P_{1,1}(t) = 1 - (16 J^2 / Omega^2) sin^2(Omega t / 2)`, `Omega^2 = 16 J^2 + U^2`.
pub fn double_well_p11(j: f64, u: f64, t: f64) -> Result<f64> {
    if !(j > 0.0) {
        return Err(Error::Domain { name: "J", value: j, reason: "tunneling must be positive" });
    }
    let omega2 = 16.0 * j * j + u * u;
    let omega = omega2.sqrt();
    Ok(1.0 - 16.0 * j * j / omega2 * (omega * t / 2.0).sin().powi(2))
}

/// Lower bound `U^2 / (16 J^2 + U^2)` of the double-well coincidence probability.
pub fn double_well_p11_min(j: f64, u: f64) -> f64 {
    u * u / (16.0 * j * j + u * u)
}

/// Two-fermion double-well states with one spin up and one spin down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FermiDoubleWellState {
    Singlet,
    Triplet,
    Plus,
    Minus,
}

impl FromStr for FermiDoubleWellState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S" | "singlet" => Ok(Self::Singlet),
            "T" | "triplet" => Ok(Self::Triplet),
            "+" | "plus" => Ok(Self::Plus),
            "-" | "minus" => Ok(Self::Minus),
            other => Err(Error::Invalid(format!("unknown double-well state label {other:?}; expected S, T, + or -"))),
        }
    }
}

impl FermiDoubleWellState {
    pub const ALL: [FermiDoubleWellState; 4] = [Self::Singlet, Self::Triplet, Self::Plus, Self::Minus];

    /// Occupation vectors over `(1 up, 1 down, 2 up, 2 down)` with their
    /// coefficients. `|up, down> = c_{1 up}^dagger c_{2 down}^dagger |0>`,
    /// `|up down, 0> = c_{1 up}^dagger c_{1 down}^dagger |0>`.
    fn components(self) -> [([u32; 4], f64); 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let ud = [1, 0, 0, 1];
        let du = [0, 1, 1, 0];
        let left = [1, 1, 0, 0];
        let right = [0, 0, 1, 1];
        match self {
            Self::Singlet => [(ud, h), (du, -h)],
            Self::Triplet => [(ud, h), (du, h)],
            Self::Plus => [(left, h), (right, h)],
            Self::Minus => [(left, h), (right, -h)],
        }
    }

    pub fn ket(self, basis: Arc<FockBasis>) -> Result<FockStateVector> {
        let comps = self.components();
        let pairs: Vec<(&[u32], Complex64)> = comps.iter().map(|(o, c)| (&o[..], Complex64::new(*c, 0.0))).collect();
        FockStateVector::from_pairs(basis, &pairs)
    }
}

/// Overlaps of the evolved state with `|S>, |T>, |+>, |->` (in that order).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FermiDoubleWellAmplitudes(pub [Complex64; 4]);

impl FermiDoubleWellAmplitudes {
    pub fn probability(&self, state: FermiDoubleWellState) -> f64 {
        let k = FermiDoubleWellState::ALL.iter().position(|s| *s == state).expect("listed");
        self.0[k].norm_sqr()
    }
}

pub fn fermi_double_well_dynamics(j: f64, u: f64, initial: FermiDoubleWellState, t: f64) -> Result<FermiDoubleWellAmplitudes> {
    let params = HubbardParams::spinful_fermions(2, 2, j, u, Boundary::Open);
    let basis = Arc::new(params.basis()?);
    let h = build_hamiltonian(&params, &basis)?;
    let psi = Propagator::new(&h)?.evolve(&initial.ket(Arc::clone(&basis))?, t)?;
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for (slot, s) in out.iter_mut().zip(FermiDoubleWellState::ALL) {
        *slot = s.ket(Arc::clone(&basis))?.inner_product(&psi)?;
    }
    Ok(FermiDoubleWellAmplitudes(out))
}

/// Collective spin operators of `n` bosons in two modes, over the two-mode
/// Fock basis `|n, 0>, |n-1, 1>, ..., |0, n>`.
#[derive(Debug, Clone)]
pub struct SpinRepresentation {
    pub n: u32,
    pub sx: DMatrix<Complex64>,
    pub sy: DMatrix<Complex64>,
    pub sz: DMatrix<Complex64>,
    basis: Arc<FockBasis>,
}

impl SpinRepresentation {
    pub fn new(n: u32) -> Result<Self> {
        let basis = Arc::new(enumerate_basis(2, n, Statistics::Boson)?);
        let h12 = hopping_matrix(&basis, 0, 1)?;
        let h21 = hopping_matrix(&basis, 1, 0)?;
        let sx = (&h12 + &h21).scale(0.5);
        let sy = (&h12 - &h21) * Complex64::new(0.0, -0.5);
        let sz = DMatrix::from_diagonal(&DVector::from_iterator(
            basis.len(),
            basis.elements().iter().map(|e| {
                let o = e.occupations();
                Complex64::new((o[0] as f64 - o[1] as f64) / 2.0, 0.0)
            }),
        ));
        Ok(Self { n, sx, sy, sz, basis })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `H = -2J S_x + U S_z^2`.
    pub fn hamiltonian(&self, j: f64, u: f64) -> DMatrix<Complex64> {
        self.sx.scale(-2.0 * j) + (&self.sz * &self.sz).scale(u)
    }

    /// Basis index of the state with `n1` particles in the first mode.
    pub fn index_of_n1(&self, n1: u32) -> usize {
        (self.n - n1) as usize
    }
}

pub const LMG_MAX_N: u32 = 40;
pub const MOMENT_INVERSION_MAX_N: u32 = 12;

/// `P_{m, N-m}` indexed by `m = 0..=N`, from direct evolution and from
/// inverting the moments `<S_z^k(t)>`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LmgDistribution {
    pub n: u32,
    pub direct: Vec<f64>,
    pub from_moments: Vec<f64>,
    pub moments: Vec<f64>,
}

/// Bosonic double well started from `|N/2, N/2>`.
pub fn lmg_distribution(n: u32, j: f64, u: f64, t: f64) -> Result<LmgDistribution> {
    if n % 2 == 1 {
        return Err(Error::Domain { name: "N", value: n as f64, reason: "balanced start needs an even particle number" });
    }
    lmg_distribution_from(n, n / 2, j, u, t)
}

pub fn lmg_distribution_from(n: u32, n1: u32, j: f64, u: f64, t: f64) -> Result<LmgDistribution> {
    if n > LMG_MAX_N {
        return Err(Error::SizeLimit { what: "LMG dimension", n: n as usize, max: LMG_MAX_N as usize });
    }
    if n1 > n {
        return Err(Error::InvalidOccupation(format!("{n1} particles in mode 1 of {n}")));
    }
    if n > MOMENT_INVERSION_MAX_N {
        log::warn!("moment inversion for N = {n} exceeds the conditioning cap of {MOMENT_INVERSION_MAX_N}; treat it as indicative only");
    }
    let spin = SpinRepresentation::new(n)?;
    let dim = spin.dim();
    let mut psi0 = DVector::zeros(dim);
    psi0[spin.index_of_n1(n1)] = Complex64::new(1.0, 0.0);
    let h = spin.hamiltonian(j, u);
    let psi = Propagator::new(&h)?.evolve_amplitudes(&psi0, t);

    let direct: Vec<f64> = (0..=n).map(|m| psi[spin.index_of_n1(m)].norm_sqr()).collect();

    // At U = 0 the Heisenberg-picture S_z(t) is a rotation of S_z and S_y,
    // so the moments follow from the initial state alone.
    let (op, state) = if u == 0.0 {
        let (s, c) = (2.0 * j * t).sin_cos();
        (spin.sz.scale(c) - spin.sy.scale(s), psi0)
    } else {
        (spin.sz.clone(), psi)
    };
    let mut moments = Vec::with_capacity(dim);
    let mut v = state.clone();
    for k in 0..=n {
        if k > 0 {
            v = &op * v;
        }
        moments.push(state.dotc(&v).re);
    }
    let nodes: Vec<f64> = (0..=n).map(|m| m as f64 - n as f64 / 2.0).collect();
    let from_moments = solve_vandermonde(&nodes, &moments);
    Ok(LmgDistribution { n, direct, from_moments, moments })
}

/// Solves `sum_m x_m^k p_m = b_k` for `k = 0..n` (Björck-Pereyra).
pub fn solve_vandermonde(x: &[f64], b: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut z = b.to_vec();
    if n == 0 {
        return z;
    }
    let last = n - 1;
    for k in 0..last {
        for i in (k + 1..=last).rev() {
            z[i] -= x[k] * z[i - 1];
        }
    }
    for k in (0..last).rev() {
        for i in k + 1..=last {
            z[i] /= x[i] - x[i - k - 1];
        }
        for i in k..last {
            z[i] -= z[i + 1];
        }
    }
    z
}

/// Where a lattice walk takes place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Geometry {
    Infinite,
    Finite { sites: usize, boundary: Boundary },
}

impl Geometry {
    fn check_site(&self, s: i64) -> Result<()> {
        match self {
            Geometry::Infinite => Ok(()),
            Geometry::Finite { sites, .. } => {
                if s < 0 || s as usize >= *sites {
                    Err(Error::ModeOutOfRange { mode: s.max(0) as usize, modes: *sites })
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Single-particle amplitude `A_m^n(t) = <m| e^{-iHt} |n>` for free
/// tunneling `H = -J sum (a_i^dagger a_{i+1} + h.c.)`.
pub fn lattice_propagator(n: i64, m: i64, t: f64, j: f64, geometry: Geometry) -> Result<Complex64> {
    geometry.check_site(n)?;
    geometry.check_site(m)?;
    let d = m - n;
    Ok(match geometry {
        Geometry::Infinite => I.powi((d.rem_euclid(4)) as i32) * bessel_j(d, 2.0 * j * t),
        Geometry::Finite { sites, boundary: Boundary::Periodic } => {
            let l = sites as f64;
            (0..sites)
                .map(|k| {
                    let q = 2.0 * PI * k as f64 / l;
                    Complex64::from_polar(1.0, q * d as f64 + 2.0 * j * t * q.cos())
                })
                .sum::<Complex64>()
                / l
        }
        Geometry::Finite { sites, boundary: Boundary::Open } => {
            let l1 = (sites + 1) as f64;
            (1..=sites)
                .map(|k| {
                    let kk = PI * k as f64 / l1;
                    let phi = |s: i64| (2.0 / l1).sqrt() * (kk * (s + 1) as f64).sin();
                    Complex64::from_polar(phi(m) * phi(n), 2.0 * j * t * kk.cos())
                })
                .sum()
        }
    })
}

/// The propagator of a finite chain as a mode network, `U[n][m] = A_m^n(t)`.
pub fn lattice_propagator_matrix(t: f64, j: f64, sites: usize, boundary: Boundary) -> Result<ModeUnitary> {
    let geometry = Geometry::Finite { sites, boundary };
    let mut m = DMatrix::zeros(sites, sites);
    for a in 0..sites {
        for b in 0..sites {
            m[(a, b)] = lattice_propagator(a as i64, b as i64, t, j, geometry)?;
        }
    }
    ModeUnitary::new(m)
}

/// Bessel-function propagator row for a walker starting at the origin:
/// amplitudes at `-radius..=radius`.
pub fn bessel_row(radius: usize, x: f64) -> Vec<Complex64> {
    let table = bessel_j_table(radius, x);
    (-(radius as i64)..=radius as i64)
        .map(|d| {
            let k = d.unsigned_abs() as usize;
            let jv = if d < 0 && k % 2 == 1 { -table[k] } else { table[k] };
            I.powi(d.rem_euclid(4) as i32) * jv
        })
        .collect()
}

fn multiplicity_norm(sites: &[i64]) -> f64 {
    let mut sorted = sites.to_vec();
    sorted.sort_unstable();
    let mut norm = 1.0;
    let mut run = 1.0;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1.0;
            norm *= run;
        } else {
            run = 1.0;
        }
    }
    norm
}

/// Probability to find the particles started at `initial` at `final_sites`
/// after free evolution: `|perm A|^2 / prod n! prod m!` for bosons and
/// `|det A|^2` for fermions or hard-core bosons.
pub fn correlator(initial: &[i64], final_sites: &[i64], t: f64, j: f64, geometry: Geometry, statistics: Statistics) -> Result<f64> {
    if initial.len() != final_sites.len() {
        return Err(Error::ParticleNumber { expected: initial.len() as u32, found: final_sites.len() as u32 });
    }
    let k = initial.len();
    let mut a = DMatrix::zeros(k, k);
    for (r, &n) in initial.iter().enumerate() {
        for (c, &m) in final_sites.iter().enumerate() {
            a[(r, c)] = lattice_propagator(n, m, t, j, geometry)?;
        }
    }
    match statistics {
        Statistics::Boson => Ok(permanent(&a)?.norm_sqr() / (multiplicity_norm(initial) * multiplicity_norm(final_sites))),
        Statistics::Fermion => Ok(determinant(&a)?.norm_sqr()),
        Statistics::Distinguishable => Err(Error::Unsupported(statistics, "lattice correlators")),
    }
}

/// Site densities of non-interacting fermions from summed determinant
/// correlators over all final configurations of a finite chain.
pub fn fermionic_density(initial: &[i64], t: f64, j: f64, sites: usize, boundary: Boundary) -> Result<Vec<f64>> {
    let geometry = Geometry::Finite { sites, boundary };
    let basis = enumerate_basis(sites, initial.len() as u32, Statistics::Fermion)?;
    let mut density = vec![0.0; sites];
    for el in basis.elements() {
        let fin: Vec<i64> = el.mode_list().into_iter().map(|s| s as i64).collect();
        let p = correlator(initial, &fin, t, j, geometry, Statistics::Fermion)?;
        for &s in &fin {
            density[s as usize] += p;
        }
    }
    Ok(density)
}

/// Mean occupation of each mode.
pub fn site_densities(state: &FockStateVector) -> Vec<f64> {
    let basis = state.basis();
    let mut out = vec![0.0; basis.modes()];
    for (el, p) in basis.elements().iter().zip(state.probabilities()) {
        for (o, &n) in out.iter_mut().zip(el.occupations()) {
            *o += p * n as f64;
        }
    }
    out
}

/// Probability that each site holds exactly two particles.
pub fn double_occupancy(state: &FockStateVector) -> Vec<f64> {
    let basis = state.basis();
    let mut out = vec![0.0; basis.modes()];
    for (el, p) in basis.elements().iter().zip(state.probabilities()) {
        for (o, &n) in out.iter_mut().zip(el.occupations()) {
            if n == 2 {
                *o += p;
            }
        }
    }
    out
}

/// Minimum `U/J` for which the bound-pair picture is trusted.
pub const DOUBLON_MIN_U_OVER_J: f64 = 10.0;

/// Effective bound-pair state `sum_n i^n J_n(4 J^2 t / U) (a_n^dagger)^2 / sqrt(2) |0>`
/// on `sites` sites (odd) centred on the starting site. The Bessel series is
/// truncated at the chain ends and not renormalized.
pub fn doublon_walk(j: f64, u: f64, t: f64, sites: usize) -> Result<FockStateVector> {
    if sites % 2 == 0 || sites == 0 {
        return Err(Error::Domain { name: "L", value: sites as f64, reason: "the doublon chain needs an odd number of sites" });
    }
    if !(u > 0.0) || !(j >= 0.0) {
        return Err(Error::Domain { name: "U", value: u, reason: "a bound pair needs repulsive U > 0 and J >= 0" });
    }
    if u < DOUBLON_MIN_U_OVER_J * j {
        log::warn!("U/J = {} is below {DOUBLON_MIN_U_OVER_J}; the effective doublon model is unreliable", u / j);
    }
    let basis = Arc::new(enumerate_basis(sites, 2, Statistics::Boson)?);
    let radius = sites / 2;
    let row = bessel_row(radius, 4.0 * j * j * t / u);
    let mut psi = FockStateVector::zero(Arc::clone(&basis));
    let mut amps = psi.amplitudes().clone();
    for (s, c) in row.into_iter().enumerate() {
        let mut occ = vec![0u32; sites];
        occ[s] = 2;
        amps[basis.index_of(&occ).expect("doubly occupied site")] = c;
    }
    psi = FockStateVector::new(basis, amps)?;
    Ok(psi)
}

/// Exact Bose-Hubbard evolution of two bosons started on the central site.
pub fn doublon_exact(j: f64, u: f64, t: f64, sites: usize, boundary: Boundary) -> Result<FockStateVector> {
    let params = HubbardParams::bosons(sites, 2, j, u, boundary);
    let basis = Arc::new(params.basis()?);
    let mut occ = vec![0u32; sites];
    occ[sites / 2] = 2;
    let start = FockStateVector::basis_state(Arc::clone(&basis), &occ)?;
    evolve(&start, &build_hamiltonian(&params, &basis)?, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn hom_basis() -> (HubbardParams, Arc<FockBasis>) {
        let p = HubbardParams::bosons(2, 2, 1.0, 3.0, Boundary::Open);
        let b = Arc::new(p.basis().unwrap());
        (p, b)
    }

    #[test]
    fn double_well_reduced_matrix() {
        let (p, b) = hom_basis();
        let h = build_hamiltonian(&p, &b).unwrap();
        let h11 = FockStateVector::basis_state(Arc::clone(&b), &[1, 1]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let plus = FockStateVector::from_pairs(Arc::clone(&b), &[(&[2, 0], Complex64::new(r, 0.0)), (&[0, 2], Complex64::new(r, 0.0))]).unwrap();
        let minus = FockStateVector::from_pairs(Arc::clone(&b), &[(&[2, 0], Complex64::new(r, 0.0)), (&[0, 2], Complex64::new(-r, 0.0))]).unwrap();
        let el = |a: &FockStateVector, c: &FockStateVector| a.amplitudes().dotc(&(&h * c.amplitudes()));
        assert!((el(&h11, &h11)).norm() < 1e-14);
        assert!((el(&h11, &plus) - Complex64::new(-2.0 * p.j, 0.0)).norm() < 1e-14);
        assert!((el(&plus, &plus) - Complex64::new(p.u, 0.0)).norm() < 1e-14);
        assert!(el(&minus, &h11).norm() < 1e-14 && el(&minus, &plus).norm() < 1e-14);
    }

    #[test]
    fn periodic_two_site_has_one_bond() {
        assert_eq!(bonds(2, Boundary::Periodic), vec![(0, 1)]);
        assert_eq!(bonds(4, Boundary::Periodic).len(), 4);
        assert_eq!(bonds(4, Boundary::Open).len(), 3);
    }

    #[test]
    fn free_ring_spectrum() {
        for l in [3usize, 5, 6] {
            let p = HubbardParams::bosons(l, 1, 0.7, 2.0, Boundary::Periodic);
            let b = p.basis().unwrap();
            let e = Propagator::new(&build_hamiltonian(&p, &b).unwrap()).unwrap().energies();
            let mut expect: Vec<f64> = (0..l).map(|k| -2.0 * 0.7 * (2.0 * PI * k as f64 / l as f64).cos()).collect();
            expect.sort_by(f64::total_cmp);
            for (a, b) in e.iter().zip(&expect) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_tunneling_is_diagonal() {
        let p = HubbardParams::bosons(3, 3, 0.0, 1.5, Boundary::Periodic);
        let b = p.basis().unwrap();
        let h = build_hamiltonian(&p, &b).unwrap();
        for (i, el) in b.elements().iter().enumerate() {
            let expect: f64 = el.occupations().iter().map(|&n| 0.75 * (n * n.saturating_sub(1)) as f64).sum();
            assert!((h[(i, i)].re - expect).abs() < 1e-15);
            for k in 0..b.len() {
                if k != i {
                    assert_eq!(h[(i, k)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn double_well_closed_form_examples() {
        assert!(double_well_p11(1.0, 0.0, FRAC_PI_4).unwrap().abs() < 1e-15);
        assert_eq!(double_well_p11(1.0, 3.0, 0.0).unwrap(), 1.0);
        let omega = (16.0f64 + 16.0).sqrt();
        let tmin = PI / omega;
        assert!((double_well_p11(1.0, 4.0, tmin).unwrap() - double_well_p11_min(1.0, 4.0)).abs() < 1e-15);
        assert!(double_well_p11(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn evolution_matches_double_well_closed_form() {
        for &u in &[0.0, 1.0, 4.0] {
            let p = HubbardParams::bosons(2, 2, 1.0, u, Boundary::Open);
            let b = Arc::new(p.basis().unwrap());
            let h = build_hamiltonian(&p, &b).unwrap();
            let prop = Propagator::new(&h).unwrap();
            let start = FockStateVector::basis_state(Arc::clone(&b), &[1, 1]).unwrap();
            let e0 = energy(&start, &h);
            for k in 0..40 {
                let t = k as f64 * 0.25;
                let psi = prop.evolve(&start, t).unwrap();
                assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
                assert!((energy(&psi, &h) - e0).norm() < 1e-9);
                let p11 = psi.amplitude(&[1, 1]).unwrap().norm_sqr();
                assert!((p11 - double_well_p11(1.0, u, t).unwrap()).abs() < 1e-10);
            }
            assert!(max_abs(&(prop.evolve(&start, 0.0).unwrap().amplitudes() - start.amplitudes())) < 1e-14);
        }
    }

    #[test]
    fn eigenstate_only_acquires_phase() {
        let p = HubbardParams::bosons(3, 2, 1.0, 2.0, Boundary::Open);
        let b = Arc::new(p.basis().unwrap());
        let prop = Propagator::new(&build_hamiltonian(&p, &b).unwrap()).unwrap();
        let g = prop.ground_state(Arc::clone(&b)).unwrap();
        let later = prop.evolve(&g, 3.7).unwrap();
        for (a, c) in g.probabilities().iter().zip(later.probabilities()) {
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn minus_state_is_stationary() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for &(j, u) in &[(1.0, 0.0), (0.3, 5.0), (2.0, -1.0)] {
            let p = HubbardParams::bosons(2, 2, j, u, Boundary::Open);
            let b = Arc::new(p.basis().unwrap());
            let minus = FockStateVector::from_pairs(Arc::clone(&b), &[(&[2, 0], Complex64::new(r, 0.0)), (&[0, 2], Complex64::new(-r, 0.0))]).unwrap();
            let psi = evolve(&minus, &build_hamiltonian(&p, &b).unwrap(), 1.3).unwrap();
            assert!((minus.inner_product(&psi).unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fermi_double_well() {
        for k in 0..20 {
            let t = k as f64 * 0.3;
            let a = fermi_double_well_dynamics(1.0, 2.5, FermiDoubleWellState::Triplet, t).unwrap();
            assert!((a.probability(FermiDoubleWellState::Triplet) - 1.0).abs() < 1e-12);
            let m = fermi_double_well_dynamics(1.0, 2.5, FermiDoubleWellState::Minus, t).unwrap();
            assert!((m.probability(FermiDoubleWellState::Minus) - 1.0).abs() < 1e-12);
            let s = fermi_double_well_dynamics(1.0, 2.5, FermiDoubleWellState::Singlet, t).unwrap();
            let ps = s.probability(FermiDoubleWellState::Singlet);
            assert!((ps - double_well_p11(1.0, 2.5, t).unwrap()).abs() < 1e-10);
            let strong = fermi_double_well_dynamics(1.0, 50.0, FermiDoubleWellState::Singlet, t).unwrap();
            assert!(strong.probability(FermiDoubleWellState::Singlet) >= 0.98);
        }
        let s = fermi_double_well_dynamics(1.0, 0.0, FermiDoubleWellState::Singlet, FRAC_PI_4).unwrap();
        assert!(s.probability(FermiDoubleWellState::Singlet) < 1e-12);
        assert!("Q".parse::<FermiDoubleWellState>().is_err());
    }

    #[test]
    fn spin_algebra() {
        for n in 1..=8 {
            let s = SpinRepresentation::new(n).unwrap();
            let comm = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| a * b - b * a;
            assert!(max_abs(&(comm(&s.sx, &s.sy) - &s.sz * I)) < 1e-12);
            assert!(max_abs(&(comm(&s.sy, &s.sz) - &s.sx * I)) < 1e-12);
            assert!(max_abs(&(comm(&s.sz, &s.sx) - &s.sy * I)) < 1e-12);
            let mut spec: Vec<f64> = s.sz.diagonal().iter().map(|z| z.re).collect();
            spec.sort_by(f64::total_cmp);
            for (k, v) in spec.iter().enumerate() {
                assert_eq!(*v, k as f64 - n as f64 / 2.0);
            }
        }
    }

    #[test]
    fn lmg_two_particles_at_hom_time() {
        let d = lmg_distribution(2, 1.0, 0.0, FRAC_PI_4).unwrap();
        assert!(d.direct[1] < 1e-15);
        assert!((d.direct[0] - 0.5).abs() < 1e-12);
        assert!(lmg_distribution(3, 1.0, 0.0, 1.0).is_err());
        assert!(lmg_distribution(42, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn lmg_moment_inversion_small_n() {
        for n in (2..=12).step_by(2) {
            for &(u, t) in &[(0.0, FRAC_PI_4), (0.0, 0.31), (1.5, 0.7)] {
                let d = lmg_distribution(n, 1.0, u, t).unwrap();
                for (a, b) in d.direct.iter().zip(&d.from_moments) {
                    assert!((a - b).abs() < 1e-8, "n={n} u={u} t={t}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn heisenberg_mapping_at_hom_time() {
        for n in 1..=10u32 {
            let s = SpinRepresentation::new(n).unwrap();
            let prop = Propagator::new(&s.hamiltonian(1.0, 0.0)).unwrap();
            for n1 in 0..=n {
                let mut psi0 = DVector::zeros(s.dim());
                psi0[s.index_of_n1(n1)] = Complex64::new(1.0, 0.0);
                let psi = prop.evolve_amplitudes(&psi0, FRAC_PI_4);
                let (mut vz, mut vy) = (psi.clone(), psi0.clone());
                for _ in 1..=4 {
                    vz = &s.sz * vz;
                    vy = &s.sy * vy;
                    let mz = psi.dotc(&vz);
                    let my = psi0.dotc(&vy);
                    assert!((mz - my).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn vandermonde_solver() {
        let x: [f64; 4] = [-1.5, -0.5, 0.5, 1.5];
        let p = [0.1, 0.2, 0.3, 0.4];
        let b: Vec<f64> = (0..4).map(|k| x.iter().zip(&p).map(|(xi, pi)| xi.powi(k) * pi).sum()).collect();
        let z = solve_vandermonde(&x, &b);
        for (a, c) in z.iter().zip(&p) {
            assert!((a - c).abs() < 1e-14);
        }
    }

    #[test]
    fn propagator_basics() {
        for geometry in [Geometry::Infinite, Geometry::Finite { sites: 9, boundary: Boundary::Periodic }, Geometry::Finite { sites: 9, boundary: Boundary::Open }] {
            assert!((lattice_propagator(4, 4, 0.0, 1.0, geometry).unwrap() - 1.0).norm() < 1e-14);
            assert!(lattice_propagator(4, 5, 0.0, 1.0, geometry).unwrap().norm() < 1e-14);
        }
        for geometry in [Geometry::Finite { sites: 9, boundary: Boundary::Periodic }, Geometry::Finite { sites: 9, boundary: Boundary::Open }] {
            let u = match geometry {
                Geometry::Finite { sites, boundary } => lattice_propagator_matrix(1.3, 0.8, sites, boundary).unwrap(),
                Geometry::Infinite => unreachable!(),
            };
            assert!(crate::interference::unitarity_deviation(u.matrix()) < 1e-12);
        }
        let row = bessel_row(40, 6.0);
        let total: f64 = row.iter().map(|z| z.norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-13);
        assert!(lattice_propagator(0, 9, 1.0, 1.0, Geometry::Finite { sites: 9, boundary: Boundary::Open }).is_err());
    }

    #[test]
    fn propagator_is_schroedinger_evolution() {
        // compare the open-chain formula with exact one-particle evolution
        let l = 7;
        let p = HubbardParams::bosons(l, 1, 0.9, 0.0, Boundary::Open);
        let b = Arc::new(p.basis().unwrap());
        let h = build_hamiltonian(&p, &b).unwrap();
        for n in 0..l {
            let mut occ = vec![0u32; l];
            occ[n] = 1;
            let psi = evolve(&FockStateVector::basis_state(Arc::clone(&b), &occ).unwrap(), &h, 1.7).unwrap();
            for m in 0..l {
                let mut o = vec![0u32; l];
                o[m] = 1;
                let a = lattice_propagator(n as i64, m as i64, 1.7, 0.9, Geometry::Finite { sites: l, boundary: Boundary::Open }).unwrap();
                assert!((psi.amplitude(&o).unwrap() - a).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn two_particle_correlators_closed_forms() {
        for k in 0..15 {
            let t = 0.2 * k as f64;
            let (j0, j1) = (bessel_j(0, 2.0 * t), bessel_j(1, 2.0 * t));
            let b = correlator(&[0, 1], &[0, 1], t, 1.0, Geometry::Infinite, Statistics::Boson).unwrap();
            assert!((b - (j0 * j0 - j1 * j1).powi(2)).abs() < 1e-12);
            let f = correlator(&[0, 1], &[0, 1], t, 1.0, Geometry::Infinite, Statistics::Fermion).unwrap();
            assert!((f - (j0 * j0 + j1 * j1).powi(2)).abs() < 1e-12);
        }
        assert_eq!(correlator(&[3, 4], &[3, 4], 0.0, 1.0, Geometry::Infinite, Statistics::Boson).unwrap(), 1.0);
        assert!(correlator(&[0, 1], &[0], 1.0, 1.0, Geometry::Infinite, Statistics::Boson).is_err());
    }

    #[test]
    fn doublon_initial_and_norm() {
        let psi = doublon_walk(1.0, 20.0, 0.0, 7).unwrap();
        let d = double_occupancy(&psi);
        assert!((d[3] - 1.0).abs() < 1e-15);
        for t in [1.0, 5.0, 10.0] {
            let psi = doublon_walk(1.0, 20.0, t, 41).unwrap();
            assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        }
        assert!(doublon_walk(1.0, 20.0, 1.0, 6).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn evolution_conserves_norm_and_energy(
                sites in 2usize..5,
                n in 1u32..4,
                u in -5.0f64..20.0,
                t in 0.0f64..20.0,
                periodic in any::<bool>(),
                seed in any::<u64>(),
            ) {
                let boundary = if periodic { Boundary::Periodic } else { Boundary::Open };
                let params = HubbardParams::bosons(sites, n, 1.0, u, boundary);
                let basis = Arc::new(params.basis().unwrap());
                let h = build_hamiltonian(&params, &basis).unwrap();
                let mut x = seed;
                let amps = DVector::from_fn(basis.len(), |_, _| {
                    x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    Complex64::new((x >> 33) as f64 / 2f64.powi(31) - 1.0, (x & 0xffff) as f64 / 65536.0 - 0.5)
                });
                let psi = FockStateVector::new(Arc::clone(&basis), amps).unwrap().normalized().unwrap();
                let out = evolve(&psi, &h, t).unwrap();
                prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
                let (e0, e1) = (energy(&psi, &h), energy(&out, &h));
                prop_assert!((e0 - e1).norm() < 1e-9 * (1.0 + e0.norm()));
            }

            #[test]
            fn minus_state_stationary(j in 0.1f64..3.0, u in -10.0f64..10.0, t in 0.0f64..10.0) {
                let amps = fermi_double_well_dynamics(j, u, FermiDoubleWellState::Minus, t).unwrap();
                prop_assert!((amps.probability(FermiDoubleWellState::Minus) - 1.0).abs() < 1e-12);
            }

            #[test]
            fn correlator_matches_lift(l in 2usize..7, n in 1u32..4, t in 0.0f64..3.0, pick in any::<prop::sample::Index>()) {
                let u = lattice_propagator_matrix(t, 1.0, l, Boundary::Open).unwrap();
                let basis = enumerate_basis(l, n, Statistics::Boson).unwrap();
                let input = basis.element(pick.index(basis.len())).clone();
                let lift = crate::interference::lift_to_fock(&u, &basis).unwrap();
                let col = basis.index_of(input.occupations()).unwrap();
                let initial: Vec<i64> = input.mode_list().into_iter().map(|s| s as i64).collect();
                let geometry = Geometry::Finite { sites: l, boundary: Boundary::Open };
                for (row, out) in basis.elements().iter().enumerate() {
                    let fin: Vec<i64> = out.mode_list().into_iter().map(|s| s as i64).collect();
                    let c = correlator(&initial, &fin, t, 1.0, geometry, Statistics::Boson).unwrap();
                    prop_assert!((c - lift[(row, col)].norm_sqr()).abs() < 1e-12);
                }
            }
        }
    }
}
