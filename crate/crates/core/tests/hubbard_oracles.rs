use std::sync::Arc;

use fock_interfere::hubbard::{
    build_hamiltonian, correlator, double_occupancy, doublon_exact, doublon_walk, fermionic_density, lattice_propagator_matrix, lmg_distribution,
    site_densities, Boundary, Geometry, HubbardParams, Propagator,
};
use fock_interfere::interference::transition_probability;
use fock_interfere::{enumerate_basis, FockBasis, FockStateVector, OccupationVector, Statistics};

fn start_state(basis: &Arc<FockBasis>, sites: &[usize]) -> FockStateVector {
    let mut occ = vec![0u32; basis.modes()];
    for &s in sites {
        occ[s] += 1;
    }
    FockStateVector::basis_state(Arc::clone(basis), &occ).unwrap()
}

#[test]
fn strongly_repulsive_bosons_fermionize() {
    let (l, sites) = (7usize, [2usize, 3, 4]);
    let params = HubbardParams::bosons(l, 3, 1.0, 1e4, Boundary::Open);
    let basis = Arc::new(params.basis().unwrap());
    let prop = Propagator::new(&build_hamiltonian(&params, &basis).unwrap()).unwrap();
    let start = start_state(&basis, &sites);
    let initial: Vec<i64> = sites.iter().map(|&s| s as i64).collect();
    for t in [0.3, 0.8, 1.5, 3.0] {
        let bosons = site_densities(&prop.evolve(&start, t).unwrap());
        let fermions = fermionic_density(&initial, t, 1.0, l, Boundary::Open).unwrap();
        for (b, f) in bosons.iter().zip(&fermions) {
            assert!((b - f).abs() < 2e-3, "t={t}: {b} vs {f}");
        }
    }
}

#[test]
fn hard_core_basis_matches_determinant() {
    let l = 8;
    let params = HubbardParams::bosons(l, 2, 1.0, 0.0, Boundary::Open);
    let basis = Arc::new(FockBasis::hard_core(l, 2).unwrap());
    let prop = Propagator::new(&build_hamiltonian(&params, &basis).unwrap()).unwrap();
    let start = start_state(&basis, &[3, 4]);
    let geometry = Geometry::Finite { sites: l, boundary: Boundary::Open };
    for t in [0.2, 0.9, 2.1] {
        let psi = prop.evolve(&start, t).unwrap();
        for el in basis.elements() {
            let fin: Vec<i64> = el.mode_list().into_iter().map(|s| s as i64).collect();
            let det = correlator(&[3, 4], &fin, t, 1.0, geometry, Statistics::Fermion).unwrap();
            let exact = psi.amplitude(el.occupations()).unwrap().norm_sqr();
            assert!((det - exact).abs() < 1e-10);
        }
    }
}

#[test]
fn permanent_correlator_matches_full_lift() {
    for l in 2..=6usize {
        for n in 1..=3u32 {
            let u = lattice_propagator_matrix(0.7, 1.0, l, Boundary::Open).unwrap();
            let geometry = Geometry::Finite { sites: l, boundary: Boundary::Open };
            let basis = enumerate_basis(l, n, Statistics::Boson).unwrap();
            let input = basis.element(basis.len() / 2).clone();
            let initial: Vec<i64> = input.mode_list().into_iter().map(|s| s as i64).collect();
            for out in basis.elements() {
                let fin: Vec<i64> = out.mode_list().into_iter().map(|s| s as i64).collect();
                let c = correlator(&initial, &fin, 0.7, 1.0, geometry, Statistics::Boson).unwrap();
                let p = transition_probability(&input, out, &u, Statistics::Boson).unwrap();
                assert!((c - p).abs() < 1e-12, "L={l} N={n} {out}");
            }
        }
    }
}

#[test]
fn correlator_matches_exact_bosonic_evolution() {
    let l = 11;
    let params = HubbardParams::bosons(l, 2, 1.0, 0.0, Boundary::Periodic);
    let basis = Arc::new(params.basis().unwrap());
    let prop = Propagator::new(&build_hamiltonian(&params, &basis).unwrap()).unwrap();
    let start = start_state(&basis, &[5, 6]);
    let geometry = Geometry::Finite { sites: l, boundary: Boundary::Periodic };
    let psi = prop.evolve(&start, 1.1).unwrap();
    for el in basis.elements() {
        let fin: Vec<i64> = el.mode_list().into_iter().map(|s| s as i64).collect();
        let c = correlator(&[5, 6], &fin, 1.1, 1.0, geometry, Statistics::Boson).unwrap();
        assert!((c - psi.amplitude(el.occupations()).unwrap().norm_sqr()).abs() < 1e-8);
    }
}

#[test]
fn strong_interaction_freezes_lmg_distribution() {
    let initial = lmg_distribution(10, 1.0, 100.0, 0.0).unwrap().direct;
    for k in 0..=20 {
        let t = k as f64 * 0.5;
        let d = lmg_distribution(10, 1.0, 100.0, t).unwrap().direct;
        let tvd: f64 = d.iter().zip(&initial).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
        assert!(tvd < 0.05, "t={t}: {tvd}");
    }
}

#[test]
fn lmg_balanced_start_has_no_odd_weight_at_hom_time() {
    let d = lmg_distribution(22, 1.0, 0.0, std::f64::consts::FRAC_PI_4).unwrap();
    for (m, p) in d.direct.iter().enumerate() {
        if m % 2 == 1 {
            assert!(*p < 1e-10);
        }
    }
    // bimodal: the edges carry more weight than the centre
    assert!(d.direct[0] > d.direct[11]);
}

#[test]
fn doublon_stays_bound() {
    let (j, u) = (1.0, 20.0);
    for k in 0..=8 {
        let t = k as f64 * (2.0 * u / (j * j)) / 8.0;
        let w: f64 = double_occupancy(&doublon_exact(j, u, t, 7, Boundary::Open).unwrap()).iter().sum();
        assert!(w >= 0.9, "t={t}: {w}");
    }
}

#[test]
fn doublon_effective_profile_matches_exact() {
    let (j, u) = (1.0, 20.0);
    // 4 J^2 t / U up to 2
    for k in 0..=10 {
        let t = k as f64 * 1.0;
        let eff = double_occupancy(&doublon_walk(j, u, t, 7).unwrap());
        let exact = double_occupancy(&doublon_exact(j, u, t, 7, Boundary::Open).unwrap());
        for (a, b) in eff.iter().zip(&exact) {
            assert!((a - b).abs() < 0.05, "t={t}: {a} vs {b}");
        }
    }
}

#[test]
fn free_fermion_densities_sum_to_particle_number() {
    let d = fermionic_density(&[1, 2, 5], 0.9, 1.0, 7, Boundary::Open).unwrap();
    assert!((d.iter().sum::<f64>() - 3.0).abs() < 1e-12);
    let occ = OccupationVector::new(vec![1, 1, 0], Statistics::Fermion).unwrap();
    assert_eq!(occ.particles(), 2);
}
