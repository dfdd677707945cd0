//! Partial distinguishability and beamsplitter phase noise in two-particle
//! interference.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{enumerate_basis, DensityMatrix, FockStateVector, Statistics};
use crate::interference::{apply_unitary, beamsplitter, check_reflectivity};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Mixing angle between the overlapping and the non-overlapping component of
/// the second particle: `theta = 0` is perfectly indistinguishable,
/// `theta = pi/2` fully distinguishable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapParam {
    theta: f64,
}

impl OverlapParam {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=FRAC_PI_2).contains(&theta) {
            return Err(Error::Domain {
                name: "theta",
                value: theta,
                reason: "mixing angle must lie in [0, pi/2]",
            });
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// `(P(2,0), P(1,1), P(0,2))` for one particle per input port whose second
/// particle has overlap `cos(theta)` with the first.
pub fn partial_overlap_probs(r: f64, theta: f64, statistics: Statistics) -> Result<(f64, f64, f64)> {
    check_reflectivity(r)?;
    let theta = OverlapParam::new(theta)?.theta();
    let t = 1.0 - r;
    let (c2, s2) = (theta.cos().powi(2), theta.sin().powi(2));
    Ok(match statistics {
        Statistics::Boson => {
            let bunched = r * t * (1.0 + c2);
            (bunched, (r - t).powi(2) + 2.0 * r * t * s2, bunched)
        }
        Statistics::Fermion => {
            let bunched = r * t * s2;
            (bunched, r + t - 2.0 * r * t * s2, bunched)
        }
        Statistics::Distinguishable => (r * t, r * r + t * t, r * t),
    })
}

/// Exact simulation of the same experiment with an explicit internal label:
/// modes are ordered `(b1, b2, b1~, b2~)` and the beamsplitter acts
/// identically on both label sectors.
pub fn simulate_partial_overlap(r: f64, varphi: f64, theta: f64, statistics: Statistics) -> Result<(f64, f64, f64)> {
    let theta = OverlapParam::new(theta)?.theta();
    if statistics == Statistics::Distinguishable {
        return Err(Error::Unsupported(statistics, "labelled-mode simulation"));
    }
    let bs = beamsplitter(r, varphi)?;
    let network = bs.direct_sum(&bs);
    let basis = Arc::new(enumerate_basis(4, 2, statistics)?);
    let input = FockStateVector::from_pairs(
        Arc::clone(&basis),
        &[
            (&[1, 1, 0, 0], Complex64::new(theta.cos(), 0.0)),
            (&[1, 0, 0, 1], Complex64::new(theta.sin(), 0.0)),
        ],
    )?;
    let out = apply_unitary(&input, &network)?;
    let mut probs = [0.0; 3];
    for (el, p) in basis.elements().iter().zip(out.probabilities()) {
        let o = el.occupations();
        let first = o[0] + o[2];
        probs[2 - first as usize] += p;
    }
    Ok((probs[0], probs[1], probs[2]))
}

/// Inverts the bosonic coincidence probability for the mixing angle.
pub fn overlap_from_dip(p11: f64, r: f64) -> Result<f64> {
    check_reflectivity(r)?;
    let t = 1.0 - r;
    let rt = r * t;
    if rt == 0.0 {
        return Err(Error::Domain {
            name: "R",
            value: r,
            reason: "a lossless splitter with R = 0 or 1 carries no overlap information",
        });
    }
    let s2 = (p11 - (r - t).powi(2)) / (2.0 * rt);
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=1.0 + SLACK).contains(&s2) {
        return Err(Error::Domain {
            name: "P11",
            value: p11,
            reason: "no mixing angle in [0, pi/2] reproduces this coincidence probability",
        });
    }
    Ok(s2.clamp(0.0, 1.0).sqrt().asin())
}

/// Shot-to-shot distribution of the beamsplitter reflection phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PhaseDistribution {
    Delta { phase: f64 },
    /// Flat on `[center - width/2, center + width/2]`.
    Uniform { center: f64, width: f64 },
    /// Weighted samples; weights are normalized internally.
    Discrete { phases: Vec<f64>, weights: Vec<f64> },
}

/// Quadrature order for continuous distributions.
const QUADRATURE_NODES: usize = 48;

impl PhaseDistribution {
    pub fn validate(&self) -> Result<()> {
        match self {
            PhaseDistribution::Delta { .. } => Ok(()),
            PhaseDistribution::Uniform { width, .. } => {
                if !(*width >= 0.0 && width.is_finite()) {
                    return Err(Error::Domain {
                        name: "width",
                        value: *width,
                        reason: "width must be finite and non-negative",
                    });
                }
                Ok(())
            }
            PhaseDistribution::Discrete { phases, weights } => {
                if phases.is_empty() || phases.len() != weights.len() {
                    return Err(Error::Invalid("discrete phases and weights must be non-empty and equally long".into()));
                }
                if weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
                    return Err(Error::Invalid("weights must be non-negative with positive sum".into()));
                }
                Ok(())
            }
        }
    }

    /// `int dmu(phi) e^{-i k phi}` in closed form.
    pub fn moment(&self, k: i32) -> Complex64 {
        let k = k as f64;
        match self {
            PhaseDistribution::Delta { phase } => Complex64::from_polar(1.0, -k * phase),
            PhaseDistribution::Uniform { center, width } => {
                let x = k * width / 2.0;
                let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
                Complex64::from_polar(sinc, -k * center)
            }
            PhaseDistribution::Discrete { phases, weights } => {
                let total: f64 = weights.iter().sum();
                phases
                    .iter()
                    .zip(weights)
                    .map(|(p, w)| Complex64::from_polar(w / total, -k * p))
                    .sum()
            }
        }
    }

    /// `alpha = int dmu(phi) e^{-i phi}`.
    pub fn alpha(&self) -> Complex64 {
        self.moment(1)
    }

    /// Weighted phase samples that integrate trigonometric polynomials of
    /// moderate degree exactly.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        match self {
            PhaseDistribution::Delta { phase } => vec![(*phase, 1.0)],
            PhaseDistribution::Uniform { center, width } => {
                if *width == 0.0 {
                    return vec![(*center, 1.0)];
                }
                gauss_legendre(QUADRATURE_NODES)
                    .into_iter()
                    .map(|(x, w)| (center + 0.5 * width * x, 0.5 * w))
                    .collect()
            }
            PhaseDistribution::Discrete { phases, weights } => {
                let total: f64 = weights.iter().sum();
                phases.iter().zip(weights).map(|(p, w)| (*p, w / total)).collect()
            }
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

/// Two-particle output state of a beamsplitter with reflection phase
/// `varphi` for input `|1,1>`, in the basis `|2,0>, |1,1>, |0,2>`.
pub fn hom_output_state(r: f64, varphi: f64) -> Result<FockStateVector> {
    check_reflectivity(r)?;
    let t = 1.0 - r;
    let s = I * (2.0 * r * t).sqrt();
    let basis = Arc::new(enumerate_basis(2, 2, Statistics::Boson)?);
    let amps = DVector::from_vec(vec![
        s * Complex64::from_polar(1.0, varphi),
        Complex64::new(t - r, 0.0),
        s * Complex64::from_polar(1.0, -varphi),
    ]);
    FockStateVector::new(basis, amps)
}

/// Closed-form phase-averaged state from the first two phase moments
/// `alpha = <e^{-i phi}>` and `alpha2 = <e^{-2 i phi}>`.
pub fn rho_alpha(r: f64, alpha: Complex64, alpha2: Complex64) -> Result<DensityMatrix> {
    check_reflectivity(r)?;
    if alpha.norm() > 1.0 + 1e-12 || alpha2.norm() > 1.0 + 1e-12 {
        return Err(Error::Invalid("phase moments must have modulus at most 1".into()));
    }
    let t = 1.0 - r;
    let q = t - r;
    let b = 2.0 * r * t;
    let s = I * b.sqrt() * q;
    let (ac, a2c) = (alpha.conj(), alpha2.conj());
    let re = |x: f64| Complex64::new(x, 0.0);
    let m = DMatrix::from_row_slice(
        3,
        3,
        &[
            re(b),
            s * ac,
            a2c * b,
            -s * alpha,
            re(q * q),
            -s * ac,
            alpha2 * b,
            s * alpha,
            re(b),
        ],
    );
    let labels = enumerate_basis(2, 2, Statistics::Boson)?.elements().to_vec();
    DensityMatrix::new(labels, m)
}

/// Phase-averaged HOM output state for a given distribution, via the
/// closed form in its moments.
pub fn phase_averaged_state(r: f64, dist: &PhaseDistribution) -> Result<DensityMatrix> {
    dist.validate()?;
    rho_alpha(r, dist.alpha(), dist.moment(2))
}

/// The same state obtained by explicitly averaging pure-state projectors.
pub fn phase_averaged_state_by_quadrature(r: f64, dist: &PhaseDistribution) -> Result<DensityMatrix> {
    dist.validate()?;
    let mut m = DMatrix::<Complex64>::zeros(3, 3);
    for (phi, w) in dist.nodes() {
        let psi = hom_output_state(r, phi)?;
        let v = psi.amplitudes();
        m += (v * v.adjoint()).scale(w);
    }
    let labels = enumerate_basis(2, 2, Statistics::Boson)?.elements().to_vec();
    DensityMatrix::new(labels, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::max_abs;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn overlap_limits() {
        let (a, b, c) = partial_overlap_probs(0.5, 0.0, Statistics::Boson).unwrap();
        assert!((a - 0.5).abs() < 1e-15 && b.abs() < 1e-15 && (c - 0.5).abs() < 1e-15);
        let (a, b, c) = partial_overlap_probs(0.5, FRAC_PI_2, Statistics::Boson).unwrap();
        assert!((a - 0.25).abs() < 1e-15 && (b - 0.5).abs() < 1e-15 && (c - 0.25).abs() < 1e-15);
        for r in [0.0, 0.3, 0.5, 1.0] {
            let (a, b, c) = partial_overlap_probs(r, 0.0, Statistics::Fermion).unwrap();
            assert!(a.abs() < 1e-15 && (b - 1.0).abs() < 1e-15 && c.abs() < 1e-15);
        }
        assert!(partial_overlap_probs(0.5, 2.0, Statistics::Boson).is_err());
        assert!(partial_overlap_probs(1.5, 0.2, Statistics::Boson).is_err());
    }

    #[test]
    fn labelled_simulation_matches_closed_forms() {
        for &r in &[0.1, 0.5, 0.83] {
            for &theta in &[0.0, 0.4, 1.1, FRAC_PI_2] {
                for s in [Statistics::Boson, Statistics::Fermion] {
                    let a = partial_overlap_probs(r, theta, s).unwrap();
                    let b = simulate_partial_overlap(r, 0.37, theta, s).unwrap();
                    assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12 && (a.2 - b.2).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dip_inversion() {
        assert!(overlap_from_dip(0.0, 0.5).unwrap().abs() < 1e-15);
        assert!((overlap_from_dip(0.5, 0.5).unwrap() - FRAC_PI_2).abs() < 1e-7);
        let theta = overlap_from_dip(0.25, 0.5).unwrap();
        assert!((theta - FRAC_PI_4).abs() < 1e-12);
        let (_, p11, _) = partial_overlap_probs(0.5, theta, Statistics::Boson).unwrap();
        assert!((p11 - 0.25).abs() < 1e-12);
        assert!(overlap_from_dip(0.7, 0.5).is_err());
        assert!(overlap_from_dip(0.01, 0.3).is_err());
    }

    #[test]
    fn quadrature_is_exact_for_polynomials() {
        let nodes = gauss_legendre(12);
        let total: f64 = nodes.iter().map(|(_, w)| w).sum();
        assert!((total - 2.0).abs() < 1e-14);
        let x10: f64 = nodes.iter().map(|(x, w)| w * x.powi(10)).sum();
        assert!((x10 - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn delta_gives_pure_state() {
        for r in [0.2, 0.5, 0.9] {
            let rho = phase_averaged_state(r, &PhaseDistribution::Delta { phase: 0.0 }).unwrap();
            assert!((rho.purity() - 1.0).abs() < 1e-12);
            let pure = DensityMatrix::from_pure(&hom_output_state(r, 0.0).unwrap()).unwrap();
            assert!(max_abs(&(rho.matrix() - pure.matrix())) < 1e-14);
        }
    }

    #[test]
    fn maximal_noise_at_balance() {
        let rho = rho_alpha(0.5, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.5, 0.0),
        ]));
        assert!(max_abs(&(rho.matrix() - expected)) < 1e-15);
        assert!((rho.purity() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_averaging() {
        let dists = [
            PhaseDistribution::Delta { phase: 0.8 },
            PhaseDistribution::Uniform { center: 0.3, width: 1.7 },
            PhaseDistribution::Uniform { center: -1.0, width: 2.0 * PI },
            PhaseDistribution::Discrete { phases: vec![0.1, 2.0, -0.5], weights: vec![1.0, 3.0, 0.5] },
        ];
        for d in &dists {
            for r in [0.15, 0.5, 0.7] {
                let a = phase_averaged_state(r, d).unwrap();
                let b = phase_averaged_state_by_quadrature(r, d).unwrap();
                assert!(max_abs(&(a.matrix() - b.matrix())) < 1e-12, "{d:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn trace_is_one(r in 0.0..=1.0f64, mag in 0.0..=1.0f64, arg in -PI..PI) {
            let alpha = Complex64::from_polar(mag, arg);
            let rho = rho_alpha(r, alpha, alpha * alpha).unwrap();
            prop_assert!((rho.trace() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn populations_ignore_noise(r in 0.0..=1.0f64, mag in 0.0..=1.0f64, arg in -PI..PI) {
            let a = rho_alpha(r, Complex64::from_polar(mag, arg), Complex64::from_polar(mag * mag, 2.0 * arg)).unwrap();
            let b = rho_alpha(r, Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)).unwrap();
            for k in 0..3 {
                prop_assert!((a.matrix()[(k, k)] - b.matrix()[(k, k)]).norm() < 1e-15);
            }
        }

        #[test]
        fn purity_grows_with_coherence(r in 0.0..=1.0f64, m1 in 0.0..=1.0f64, m2 in 0.0..=1.0f64, arg in -PI..PI) {
            let (lo, hi) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
            let rho = |m: f64| {
                let a = Complex64::from_polar(m, arg);
                rho_alpha(r, a, a * a).unwrap().purity()
            };
            prop_assert!(rho(lo) <= rho(hi) + 1e-14);
        }

        #[test]
        fn probabilities_sum_to_one(r in 0.0..=1.0f64, theta in 0.0..=FRAC_PI_2) {
            for s in [Statistics::Boson, Statistics::Fermion, Statistics::Distinguishable] {
                let (a, b, c) = partial_overlap_probs(r, theta, s).unwrap();
                prop_assert!((a + b + c - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn full_distinguishability_is_classical() {
        for r in [0.2, 0.5, 0.6] {
            let d = partial_overlap_probs(r, 0.0, Statistics::Distinguishable).unwrap();
            let b = partial_overlap_probs(r, FRAC_PI_2, Statistics::Boson).unwrap();
            let f = partial_overlap_probs(r, FRAC_PI_2, Statistics::Fermion).unwrap();
            let bs = beamsplitter(r, 0.0).unwrap();
            let input = crate::fock::OccupationVector::new(vec![1, 1], Statistics::Distinguishable).unwrap();
            let sim = crate::interference::output_distribution(&input, &bs, Statistics::Distinguishable).unwrap();
            for x in [b, f] {
                assert!((x.0 - d.0).abs() < 1e-15 && (x.1 - d.1).abs() < 1e-15);
            }
            assert!((sim.probability(&[1, 1]) - d.1).abs() < 1e-15);
            assert!((sim.probability(&[2, 0]) - d.0).abs() < 1e-15);
        }
    }
}
