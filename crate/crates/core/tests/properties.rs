//! Property tests of algebraic invariants across random inputs.

use ecs_core::geodesics::{geodesic, null_velocity};
use ecs_core::homogeneous::HomogeneousModel;
use ecs_core::isometry_group::{iso_compose, iso_distance, random_iso_element};
use ecs_core::pseudo_linear::canonical_nilpotent;
use ecs_core::report::Check;
use ecs_core::solution_space::{omega, propagate};
use ecs_core::{
    Complex64, DMatrix, DVector, Endo, HeisenbergElement, ModelManifold, ProfileF, PseudoEuclideanSpace, SolutionE,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn homogeneous(m: usize, c: f64) -> ModelManifold {
    ModelManifold::new(canonical_nilpotent(m, 1.0), ProfileF::homogeneous(Complex64::new(c, 0.0)).unwrap()).unwrap()
}

fn solution(rng: &mut ChaCha8Rng, m: usize, t0: f64) -> SolutionE {
    SolutionE::new(
        t0,
        DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0)),
        DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0)),
    )
}

fn signs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(1.0), Just(-1.0)], 2..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn genericity_is_invariant_under_isometric_conjugation(diag in signs(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = PseudoEuclideanSpace::diagonal(&diag);
        let a = space.random_traceless_selfadjoint(&mut rng, 1.0);
        let c = space.random_isometry(&mut rng, 0.5);
        let conj = &c * &a * c.clone().try_inverse().unwrap();
        let g1 = Endo::new(space.clone(), a).genericity_test().unwrap();
        let g2 = Endo::new(space, conj).genericity_test().unwrap();
        prop_assert_eq!(g1.generic, g2.generic);
        prop_assert_eq!(g1.isotropy_algebra_dim, g2.isotropy_algebra_dim);
    }

    #[test]
    fn every_nonzero_a_is_generic_in_dimension_two(neutral in any::<bool>(), norm in 1e-3..10.0_f64, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = if neutral { PseudoEuclideanSpace::antidiagonal(2, 1.0) } else { PseudoEuclideanSpace::euclidean(2) };
        let a = space.random_traceless_selfadjoint(&mut rng, norm);
        prop_assert!(Endo::new(space, a).genericity_test().unwrap().generic);
    }

    #[test]
    fn scaling_isometries_form_a_homomorphism(m in 2usize..=5, lq in -1.5..1.5_f64, lr in -1.5..1.5_f64) {
        let basis = canonical_nilpotent(m, 1.0).fit_basis().unwrap();
        let (q, r) = (lq.exp(), lr.exp());
        let cq = basis.scaling_isometry(q, 1.0).unwrap().matrix;
        let cr = basis.scaling_isometry(r, 1.0).unwrap().matrix;
        let cqr = basis.scaling_isometry(q * r, 1.0).unwrap().matrix;
        let prod = &cq * &cr;
        let scale = prod.amax().max(1.0);
        prop_assert!((prod - cqr).amax() / scale < 1e-12);
    }

    #[test]
    fn heisenberg_group_axioms(seed in any::<u64>(), m in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gram = PseudoEuclideanSpace::antidiagonal(m, 1.0).gram().clone();
        let el = |rng: &mut ChaCha8Rng| HeisenbergElement::new(rng.gen_range(-1.0..1.0), solution(rng, m, 1.0));
        let (a, b, c) = (el(&mut rng), el(&mut rng), el(&mut rng));
        let ab_c = a.mul(&gram, &b).unwrap().mul(&gram, &c).unwrap();
        let a_bc = a.mul(&gram, &b.mul(&gram, &c).unwrap()).unwrap();
        prop_assert!((ab_c.r - a_bc.r).abs() < 1e-12);
        prop_assert!((ab_c.u.cauchy() - a_bc.u.cauchy()).amax() < 1e-12);
        let e = a.mul(&gram, &a.inverse()).unwrap();
        prop_assert!(e.r.abs() < 1e-12 && e.u.cauchy().amax() < 1e-12);
        // the commutator is central with r-part −2Ω(a, b)
        let comm = a.mul(&gram, &b).unwrap().mul(&gram, &a.inverse()).unwrap().mul(&gram, &b.inverse()).unwrap();
        let w = omega(&gram, &a.u, &b.u).unwrap();
        prop_assert!((comm.r + 2.0 * w).abs() < 1e-12);
    }

    #[test]
    fn omega_is_skew(seed in any::<u64>(), m in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gram = PseudoEuclideanSpace::antidiagonal(m, -1.0).gram().clone();
        let (u, w) = (solution(&mut rng, m, 0.5), solution(&mut rng, m, 0.5));
        prop_assert!((omega(&gram, &u, &w).unwrap() + omega(&gram, &w, &u).unwrap()).abs() < 1e-14);
        prop_assert!(omega(&gram, &u, &u).unwrap().abs() < 1e-14);
    }

    #[test]
    fn isometry_composition_is_associative(seed in any::<u64>()) {
        let model = homogeneous(2, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (random_iso_element(&model, &mut rng), random_iso_element(&model, &mut rng), random_iso_element(&model, &mut rng));
        let lhs = iso_compose(&model, &iso_compose(&model, &a, &b).unwrap(), &c).unwrap();
        let rhs = iso_compose(&model, &a, &iso_compose(&model, &b, &c).unwrap()).unwrap();
        let scale = lhs.u.cauchy().amax().max(1.0);
        prop_assert!(iso_distance(&lhs, &rhs) / scale < 1e-9);
    }

    #[test]
    fn check_passes_iff_residual_within_tolerance(residual in prop::num::f64::ANY, tolerance in 0.0..1.0_f64) {
        let c = Check::new("x", "y", residual, tolerance);
        prop_assert_eq!(c.pass, residual <= tolerance);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn propagation_is_linear(seed in any::<u64>(), a in -2.0..2.0_f64, b in -2.0..2.0_f64, t1 in 0.3..3.0_f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = PseudoEuclideanSpace::diagonal(&[1.0, -1.0, 1.0]);
        let endo = Endo::new(space, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, -3.0])));
        let f = ProfileF::polynomial(vec![0.2, -0.3, 0.1], ecs_core::Interval::REAL_LINE).unwrap();
        let model = ModelManifold::new(endo, f).unwrap();
        let (u, w) = (solution(&mut rng, 3, 1.0), solution(&mut rng, 3, 1.0));
        let combo = u.scale(a).add(&w.scale(b)).unwrap();
        let (pu, du) = propagate(&model, &u, t1).unwrap();
        let (pw, dw) = propagate(&model, &w, t1).unwrap();
        let (pc, dc) = propagate(&model, &combo, t1).unwrap();
        let scale = pc.amax().max(dc.amax()).max(1.0);
        prop_assert!((pc - (pu * a + pw * b)).amax() / scale < 1e-8);
        prop_assert!((dc - (du * a + dw * b)).amax() / scale < 1e-8);
    }

    #[test]
    fn dilations_preserve_the_sigma_spectrum_shape(lq in -1.2..1.2_f64) {
        let q = lq.exp();
        let hm = HomogeneousModel::canonical(2, 1.0, Complex64::new(0.3, 0.0)).unwrap();
        prop_assert!(hm.spectrum_sigma_q(q).unwrap().max_rel_err < 1e-6);
    }

    #[test]
    fn null_geodesics_stay_null(seed in any::<u64>()) {
        let model = homogeneous(2, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = model.random_point(&mut rng);
        let xv = DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0));
        let v = null_velocity(&model, &p, &xv).unwrap();
        let r = geodesic(&model, &p, &v, (0.0, 0.5), 6).unwrap();
        for s in &r.samples {
            let e = model.inner_at(&s.point, s.velocity.as_slice(), s.velocity.as_slice()).unwrap();
            prop_assert!(e.abs() < 1e-8 * s.velocity.amax().powi(2).max(1.0));
        }
        prop_assert!(r.t_affinity().unwrap().relative < 1e-8);
    }
}
