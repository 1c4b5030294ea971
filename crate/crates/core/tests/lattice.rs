use lightcone::dispersion::HoppingTerm;
use lightcone::lattice::{
    build_deformed_hamiltonian, build_hamiltonian, build_n_particle_hamiltonian, check_boundary_window,
    conjugation_diagonal, half_space_gap, neighborhood, region_distance, sector_dimension, PairInteraction, Sector,
    MANY_BODY_DIMENSION_CAP,
};
use lightcone::{DispersionRelation, LatticeBox, Potential, Region, Symbol};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn sorted_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

fn chain(len: usize) -> LatticeBox {
    LatticeBox::centered_chain(len).unwrap()
}

#[test]
fn open_chain_spectrum() {
    let l = 40;
    let h = build_hamiltonian(&DispersionRelation::nearest_neighbor_chain(), &Potential::Zero, &chain(l)).unwrap();
    let got = sorted_eigenvalues(&h.to_dense());
    let mut want: Vec<f64> =
        (1..=l).map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (l as f64 + 1.0)).cos()).collect();
    want.sort_by(f64::total_cmp);
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(h.hermiticity_defect(), 0.0);
}

#[test]
fn two_dimensional_box_has_product_spectrum() {
    let lattice = LatticeBox::new(vec![[0, 5], [0, 3]]).unwrap();
    let disp = DispersionRelation::closed_form(2, Symbol::DiscreteLaplacian, f64::INFINITY).unwrap();
    let h = build_hamiltonian(&disp, &Potential::Zero, &lattice).unwrap();
    let one = |l: usize| -> Vec<f64> {
        (1..=l).map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (l as f64 + 1.0)).cos()).collect()
    };
    let mut want: Vec<f64> = one(6).iter().flat_map(|a| one(4).into_iter().map(move |b| a + b)).collect();
    want.sort_by(f64::total_cmp);
    let got = sorted_eigenvalues(&h.to_dense());
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn potentials_sit_on_the_diagonal() {
    let lattice = chain(11);
    let h = build_hamiltonian(
        &DispersionRelation::closed_form(1, Symbol::Constant { energy: 0.0 }, f64::INFINITY).unwrap(),
        &Potential::Linear { slope: vec![0.5] },
        &lattice,
    )
    .unwrap();
    assert!(h.is_diagonal());
    for (i, x) in lattice.sites().enumerate() {
        assert_eq!(h.matrix().get(i, i).re, 0.5 * x[0] as f64);
    }
    assert!(Potential::Delta { site: vec![100], strength: 1.0 }.sample(&lattice).is_err());
}

#[test]
fn semi_relativistic_symbol_has_no_lattice_matrix() {
    let disp = DispersionRelation::closed_form(1, Symbol::SemiRelativistic { mass: 1.0 }, 1.0).unwrap();
    assert!(build_hamiltonian(&disp, &Potential::Zero, &chain(5)).is_err());
}

#[test]
fn deformation_outside_the_strip_is_rejected() {
    let disp = DispersionRelation::hopping(
        1,
        vec![
            HoppingTerm { displacement: vec![1], amplitude: -1.0 },
            HoppingTerm { displacement: vec![-1], amplitude: -1.0 },
        ],
        0.5,
    )
    .unwrap();
    let h = build_hamiltonian(&disp, &Potential::Zero, &chain(9)).unwrap();
    assert!(build_deformed_hamiltonian(&h, &[C64::new(0.0, 0.6)]).is_err());
    assert!(build_deformed_hamiltonian(&h, &[C64::new(0.0, 0.4)]).is_ok());
}

#[test]
fn imaginary_part_of_deformed_chain() {
    // (H_ζ - H_ζ*)/2i is tridiagonal with off-diagonal modulus sinh μ.
    let l = 30;
    let mu = 0.8;
    let h = build_hamiltonian(&DispersionRelation::nearest_neighbor_chain(), &Potential::Zero, &chain(l)).unwrap();
    let hz = build_deformed_hamiltonian(&h, &[C64::new(0.0, mu)]).unwrap().to_dense();
    let im = (&hz - hz.adjoint()) * C64::new(0.0, -0.5);
    let top = *sorted_eigenvalues(&im).last().unwrap();
    let exact = 2.0 * mu.sinh() * (std::f64::consts::PI / (l as f64 + 1.0)).cos();
    assert!((top - exact).abs() < 1e-12, "{top} vs {exact}");
    assert!(top <= 2.0 * mu.sinh());
}

#[test]
fn real_deformation_preserves_the_spectrum() {
    let h = build_hamiltonian(
        &DispersionRelation::nearest_neighbor_chain(),
        &Potential::Delta { site: vec![0], strength: 1.5 },
        &chain(21),
    )
    .unwrap();
    let hz = build_deformed_hamiltonian(&h, &[C64::new(0.7, 0.0)]).unwrap();
    assert!(hz.hermiticity_defect() < 1e-15);
    let a = sorted_eigenvalues(&h.to_dense());
    let b = sorted_eigenvalues(&hz.to_dense());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn deformation_is_a_similarity_transform() {
    let lattice = chain(15);
    let h = build_hamiltonian(&DispersionRelation::nearest_neighbor_chain(), &Potential::Zero, &lattice).unwrap();
    let zeta = [C64::new(0.2, 0.3)];
    let t = conjugation_diagonal(&lattice, &zeta);
    let dense = h.to_dense();
    let want = DMatrix::from_fn(dense.nrows(), dense.ncols(), |i, j| t[i] * dense[(i, j)] / t[j]);
    let got = build_deformed_hamiltonian(&h, &zeta).unwrap().to_dense();
    assert!((got - want).iter().all(|z| z.norm() < 1e-14));
}

#[test]
fn two_free_particles_have_pairwise_energies() {
    let lattice = chain(7);
    let disp = DispersionRelation::nearest_neighbor_chain();
    let single = sorted_eigenvalues(&build_hamiltonian(&disp, &Potential::Zero, &lattice).unwrap().to_dense());
    for sector in [Sector::Distinguishable, Sector::Bosonic] {
        let hn = build_n_particle_hamiltonian(
            &disp,
            &Potential::Zero,
            &PairInteraction::None,
            2,
            &lattice,
            sector,
            MANY_BODY_DIMENSION_CAP,
        )
        .unwrap();
        assert_eq!(hn.dim() as f64, sector_dimension(7, 2, sector));
        let mut want = Vec::new();
        for (i, a) in single.iter().enumerate() {
            for (j, b) in single.iter().enumerate() {
                if sector == Sector::Distinguishable || i <= j {
                    want.push(a + b);
                }
            }
        }
        want.sort_by(f64::total_cmp);
        let got = sorted_eigenvalues(&hn.matrix().to_dense());
        assert_eq!(got.len(), want.len());
        for (x, y) in got.iter().zip(&want) {
            assert!((x - y).abs() < 1e-11);
        }
    }
}

#[test]
fn transpositions_commute_with_the_many_body_hamiltonian() {
    let lattice = chain(5);
    let hn = build_n_particle_hamiltonian(
        &DispersionRelation::nearest_neighbor_chain(),
        &Potential::Linear { slope: vec![0.3] },
        &PairInteraction::OnSite { strength: 2.0 },
        3,
        &lattice,
        Sector::Distinguishable,
        MANY_BODY_DIMENSION_CAP,
    )
    .unwrap();
    let h = hn.matrix().to_dense();
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        let p = hn.transposition(i, j).unwrap();
        for (k, conf) in hn.basis().iter().enumerate() {
            let mut swapped = conf.clone();
            swapped.swap(i, j);
            assert_eq!(hn.basis()[p[k]], swapped);
        }
        let permuted = DMatrix::from_fn(h.nrows(), h.ncols(), |a, b| h[(p[a], p[b])]);
        assert!((permuted - &h).iter().all(|z| z.norm() < 1e-12));
    }
}

#[test]
fn product_cutoff_is_the_nth_power() {
    let lattice = chain(6);
    let hn = build_n_particle_hamiltonian(
        &DispersionRelation::nearest_neighbor_chain(),
        &Potential::Zero,
        &PairInteraction::None,
        2,
        &lattice,
        Sector::Bosonic,
        MANY_BODY_DIMENSION_CAP,
    )
    .unwrap();
    let x = Region::interval("X", &lattice, -3, -1).unwrap();
    // three sites, two bosons: 6 states
    assert_eq!(hn.product_cutoff(&x).len(), 6);
}

#[test]
fn dimension_cap_is_enforced() {
    let err = build_n_particle_hamiltonian(
        &DispersionRelation::nearest_neighbor_chain(),
        &Potential::Zero,
        &PairInteraction::None,
        3,
        &chain(40),
        Sector::Distinguishable,
        MANY_BODY_DIMENSION_CAP,
    );
    assert!(matches!(err, Err(lightcone::LightconeError::Resource(_))));
}

#[test]
fn boundary_window() {
    let lattice = chain(101);
    let x = Region::interval("X", &lattice, -5, 5).unwrap();
    assert!(check_boundary_window(&lattice, &x, 2.0, 10.0).is_ok());
    assert!(check_boundary_window(&lattice, &x, 2.0, 21.0).is_err());
    let edge = Region::interval("E", &lattice, -50, -40).unwrap();
    assert!(check_boundary_window(&lattice, &edge, 2.0, 10.0).is_ok());
}

#[test]
fn half_space_direction_in_one_dimension() {
    let lattice = chain(101);
    let x = Region::interval("X", &lattice, -50, -10).unwrap();
    let y = Region::interval("Y", &lattice, 10, 50).unwrap();
    let sep = half_space_gap(&lattice, &x, &y).unwrap().unwrap();
    assert_eq!(sep.direction, vec![-1.0]);
    assert_eq!(sep.gap, 20.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_symmetric_and_dominates_the_axis_gap(
        a in -6i64..6, b in 0i64..4, c in -6i64..6, d in 0i64..4, e in -6i64..6, f in -6i64..6,
    ) {
        let lattice = LatticeBox::new(vec![[-10, 10], [-10, 10]]).unwrap();
        let x = Region::cuboid("X", &lattice, &[[a, a + b], [e, e + 1]]).unwrap();
        let y = Region::cuboid("Y", &lattice, &[[c, c + d], [f, f + 2]]).unwrap();
        let dxy = region_distance(&lattice, &x, &y).unwrap();
        prop_assert_eq!(dxy, region_distance(&lattice, &y, &x).unwrap());
        if let Some(sep) = half_space_gap(&lattice, &x, &y).unwrap() {
            prop_assert!(sep.gap <= dxy + 1e-12);
            prop_assert!(!x.intersects(&y));
        }
    }

    #[test]
    fn neighbourhoods_are_nested(lo in -20i64..0, len in 0i64..10, eta in 0.0f64..15.0, extra in 0.0f64..10.0) {
        let lattice = chain(61);
        let x = Region::interval("X", &lattice, lo, lo + len).unwrap();
        let small = neighborhood(&x, eta, &lattice).unwrap();
        let big = neighborhood(&x, eta + extra, &lattice).unwrap();
        prop_assert!(x.sites().iter().all(|&s| small.contains(s)));
        prop_assert!(small.sites().iter().all(|&s| big.contains(s)));
        let outside = small.complement(&lattice);
        if !outside.is_empty() {
            prop_assert!(region_distance(&lattice, &x, &outside).unwrap() >= eta);
        }
        prop_assert_eq!(small.len() + outside.len(), lattice.len());
    }

    #[test]
    fn box_indexing_round_trips(i in 0usize..(9 * 5 * 4)) {
        let lattice = LatticeBox::new(vec![[-4, 4], [0, 4], [2, 5]]).unwrap();
        let x = lattice.site(i);
        prop_assert!(lattice.contains(&x));
        prop_assert_eq!(lattice.index_of(&x), Some(i));
    }
}
