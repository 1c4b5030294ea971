use lightcone::evolve::{
    commutator_norm, deformed_evolution_norm, evolve_density, heisenberg_evolve, lc_truncation, leakage_norm,
    localize_observable, otoc, state_region_probability, transferred_probability, truncation_error,
};
use lightcone::lattice::{build_deformed_hamiltonian, build_hamiltonian};
use lightcone::linalg::{expm, PowerOptions};
use lightcone::{
    DensityOperator, DispersionRelation, Execution, LatticeBox, LatticeHamiltonian, Observable, PropagationMethod,
    Potential, Propagator, Region,
};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn chain_h(len: usize) -> LatticeHamiltonian {
    let lattice = LatticeBox::centered_chain(len).unwrap();
    build_hamiltonian(
        &DispersionRelation::nearest_neighbor_chain(),
        &Potential::Delta { site: vec![1], strength: 0.7 },
        &lattice,
    )
    .unwrap()
}

fn propagator(h: &LatticeHamiltonian, method: PropagationMethod) -> Propagator {
    Propagator::new(h.matrix(), method, Execution::Sequential).unwrap()
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    (a * b).trace()
}

fn oracle_unitary(h: &LatticeHamiltonian, t: f64) -> DMatrix<C64> {
    expm(&(h.to_dense() * C64::new(0.0, -t)))
}

#[test]
fn propagation_methods_agree_with_the_matrix_exponential() {
    let h = chain_h(41);
    let want = oracle_unitary(&h, 3.5);
    for method in [PropagationMethod::Chebyshev, PropagationMethod::Eigendecomposition, PropagationMethod::DenseExponential] {
        let u = propagator(&h, method).evolution_operator(3.5);
        assert!(max_abs(&(u - &want)) < 1e-11, "{method:?}");
    }
}

#[test]
fn evolution_is_unitary_and_a_group() {
    let h = chain_h(31);
    let p = propagator(&h, PropagationMethod::Chebyshev);
    let (s, t) = (1.3, 2.4);
    let u = p.evolution_operator(s + t);
    let us = p.evolution_operator(s);
    let ut = p.evolution_operator(t);
    assert!(max_abs(&(&u - &us * &ut)) < 1e-12);
    let id = DMatrix::<C64>::identity(h.dim(), h.dim());
    assert!(max_abs(&(u.adjoint() * &u - id)) < 1e-12);
    let back = p.evolution_operator(-t);
    assert!(max_abs(&(&ut * back - DMatrix::identity(h.dim(), h.dim()))) < 1e-12);
}

#[test]
fn parallel_columns_match_sequential() {
    let h = chain_h(61);
    let seq = propagator(&h, PropagationMethod::Chebyshev);
    let par = Propagator::new(h.matrix(), PropagationMethod::Chebyshev, Execution::Parallel).unwrap();
    let cols: Vec<usize> = (0..20).collect();
    assert_eq!(seq.columns(&cols, 2.0), par.columns(&cols, 2.0));
}

#[test]
fn non_hermitian_matrices_need_the_dense_exponential() {
    let h = chain_h(11);
    let hz = build_deformed_hamiltonian(&h, &[C64::new(0.0, 0.5)]).unwrap();
    assert!(Propagator::new(hz.matrix(), PropagationMethod::Chebyshev, Execution::Sequential).is_err());
    let p = Propagator::for_hamiltonian(&hz, Execution::Sequential).unwrap();
    assert_eq!(p.method(), PropagationMethod::DenseExponential);
}

#[test]
fn heisenberg_evolution_matches_dense_conjugation() {
    let h = chain_h(31);
    let lattice = h.lattice().clone();
    let x = Region::interval("X", &lattice, -3, 2).unwrap();
    let a = Observable::random_localized(&x, h.dim(), 7).unwrap();
    let u = oracle_unitary(&h, 2.5);
    let want = u.adjoint() * a.matrix() * &u;
    let p = propagator(&h, PropagationMethod::Chebyshev);
    let a_t = heisenberg_evolve(&p, &a, 2.5).unwrap();
    assert!(max_abs(&(a_t.matrix() - want)) < 1e-11);
    assert!((a_t.norm() - a.norm()).abs() < 1e-12);
}

#[test]
fn heisenberg_and_schroedinger_pictures_agree() {
    let h = chain_h(25);
    let lattice = h.lattice().clone();
    let x = Region::interval("X", &lattice, -2, 2).unwrap();
    let a = Observable::random_localized(&x, h.dim(), 3).unwrap();
    let rho = DensityOperator::random_mixed(&Region::whole(&lattice), h.dim(), 4, 11).unwrap();
    let p = propagator(&h, PropagationMethod::Chebyshev);
    let a_t = heisenberg_evolve(&p, &a, 1.7).unwrap();
    let rho_t = evolve_density(&p, &rho, 1.7).unwrap();
    let lhs = trace_product(&a_t.matrix(), rho.matrix());
    let rhs = trace_product(&a.matrix(), rho_t.matrix());
    assert!((lhs - rhs).norm() < 1e-12);
    assert!(rho_t.validate().is_ok());
}

#[test]
fn localized_observable_is_bounded_by_twice_the_norm() {
    let h = chain_h(21);
    let x = Region::interval("X", h.lattice(), 0, 4).unwrap();
    let a = Observable::random_localized(&x, h.dim(), 5).unwrap();
    let tilde = localize_observable(&a).unwrap();
    assert!(tilde.norm() <= 2.0 * a.norm() + 1e-12);
    assert!(localize_observable(&Observable::global(DMatrix::identity(h.dim(), h.dim())).unwrap()).is_err());
}

#[test]
fn truncation_error_matches_the_explicit_difference() {
    let h = chain_h(41);
    let x = Region::interval("X", h.lattice(), -2, 2).unwrap();
    let u = Region::interval("U", h.lattice(), -8, 8).unwrap();
    let a = Observable::random_localized(&x, h.dim(), 9).unwrap();
    let a_t = heisenberg_evolve(&propagator(&h, PropagationMethod::Chebyshev), &a, 2.0).unwrap();
    let explicit = a_t.matrix() - lc_truncation(&a_t, &u).matrix();
    let want = explicit.singular_values().max();
    let got = truncation_error(&a_t, &u, &PowerOptions::default());
    assert!((got - want).abs() < 1e-12 * want.max(1e-3));
    assert!(truncation_error(&a_t, &Region::whole(h.lattice()), &PowerOptions::default()) == 0.0);
}

#[test]
fn commutator_vanishes_for_disjoint_supports_at_time_zero() {
    let h = chain_h(21);
    let x = Region::interval("X", h.lattice(), -8, -4).unwrap();
    let y = Region::interval("Y", h.lattice(), 4, 8).unwrap();
    let a = Observable::random_localized(&x, h.dim(), 1).unwrap();
    let b = Observable::random_localized(&y, h.dim(), 2).unwrap();
    assert_eq!(commutator_norm(&a, &b, &PowerOptions::default()).unwrap(), 0.0);
    let rho = DensityOperator::maximally_mixed(h.dim());
    assert_eq!(otoc(&rho, &a, &b).unwrap(), 0.0);
}

#[test]
fn transferred_probability_matches_the_evolved_state() {
    let h = chain_h(31);
    let x = Region::interval("X", h.lattice(), -15, -5).unwrap();
    let y = Region::interval("Y", h.lattice(), 5, 15).unwrap();
    let rho = DensityOperator::random_mixed(&x, h.dim(), 3, 4).unwrap();
    let p = propagator(&h, PropagationMethod::Chebyshev);
    let rho_t = evolve_density(&p, &rho, 4.0).unwrap();
    let a = transferred_probability(&p, &rho, &x, &y, 4.0);
    let b = state_region_probability(&rho_t, &y);
    assert!((a - b).abs() < 1e-13);
    assert!(a <= leakage_norm(&p, &y, &x, 4.0, &PowerOptions::default()).powi(2) + 1e-14);
}

#[test]
fn density_operators_are_validated() {
    let n = 4;
    let mut m = DMatrix::<C64>::identity(n, n);
    assert!(DensityOperator::new(m.clone(), None).is_err());
    m /= C64::from(n as f64);
    assert!(DensityOperator::new(m.clone(), None).is_ok());
    m[(0, 1)] = C64::new(0.1, 0.0);
    assert!(DensityOperator::new(m, None).is_err());
    let lattice = LatticeBox::centered_chain(4).unwrap();
    let x = Region::interval("X", &lattice, -2, -1).unwrap();
    assert!(DensityOperator::pure(&[C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)], Some(x)).is_err());
}

#[test]
fn acting_on_rejects_matrices_with_outside_coupling() {
    let h = chain_h(7);
    let x = Region::interval("X", h.lattice(), -1, 1).unwrap();
    let mut m = DMatrix::<C64>::identity(h.dim(), h.dim());
    m[(3, 3)] = C64::new(2.0, 0.0);
    assert!(Observable::from_matrix_on(&m, &x).is_ok());
    m[(0, 3)] = C64::new(0.5, 0.0);
    assert!(Observable::from_matrix_on(&m, &x).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn leakage_is_symmetric_for_real_hamiltonians(lo in -20i64..-5, hi in 5i64..20, t in 0.1f64..6.0) {
        // U^T = U for real symmetric H, so the block norms agree.
        let h = chain_h(51);
        let p = propagator(&h, PropagationMethod::Chebyshev);
        let x = Region::interval("X", h.lattice(), lo, lo + 4).unwrap();
        let y = Region::interval("Y", h.lattice(), hi - 3, hi).unwrap();
        let power = PowerOptions::default();
        let a = leakage_norm(&p, &x, &y, t, &power);
        let b = leakage_norm(&p, &y, &x, t, &power);
        prop_assert!((a - b).abs() <= 1e-12 + 1e-9 * a);
        prop_assert!(a <= 1.0 + 1e-12);
    }

    #[test]
    fn deformed_norm_is_submultiplicative(mu in 0.05f64..1.5, s in 0.1f64..2.0, t in 0.1f64..2.0) {
        let h = chain_h(21);
        let hz = build_deformed_hamiltonian(&h, &[C64::new(0.0, mu)]).unwrap();
        let power = PowerOptions::default();
        let n = |x: f64| deformed_evolution_norm(&hz, x, &power).unwrap();
        prop_assert!(n(s + t) <= n(s) * n(t) * (1.0 + 1e-10));
        prop_assert!(n(t) <= (2.0 * mu.sinh() * t).exp() * (1.0 + 1e-10));
    }

    #[test]
    fn otoc_is_bounded_by_the_squared_commutator(seed in 0u64..1000, t in 0.5f64..4.0) {
        let h = chain_h(21);
        let x = Region::interval("X", h.lattice(), -8, -5).unwrap();
        let y = Region::interval("Y", h.lattice(), 2, 6).unwrap();
        let a = Observable::random_localized(&x, h.dim(), seed).unwrap();
        let b = Observable::random_localized(&y, h.dim(), seed + 1).unwrap();
        let rho = DensityOperator::random_mixed(&Region::whole(h.lattice()), h.dim(), 2, seed + 2).unwrap();
        let a_t = heisenberg_evolve(&propagator(&h, PropagationMethod::Chebyshev), &a, t).unwrap();
        let c = commutator_norm(&a_t, &b, &PowerOptions::default()).unwrap();
        let o = otoc(&rho, &a_t, &b).unwrap();
        prop_assert!(o >= -1e-14);
        prop_assert!(o <= c * c * (1.0 + 1e-9) + 1e-14);
        prop_assert!(c <= 2.0 * a.norm() * b.norm() + 1e-12);
    }

    #[test]
    fn region_probabilities_partition_unity(seed in 0u64..1000, lo in -10i64..0, len in 0i64..10) {
        let lattice = LatticeBox::centered_chain(21).unwrap();
        let rho = DensityOperator::random_mixed(&Region::whole(&lattice), lattice.len(), 3, seed).unwrap();
        let x = Region::interval("X", &lattice, lo, lo + len).unwrap();
        let total = state_region_probability(&rho, &x) + state_region_probability(&rho, &x.complement(&lattice));
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}
