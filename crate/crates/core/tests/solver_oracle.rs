use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;

use uep::linalg::{self, ComplexMatrix, MatrixPolynomial, Tolerances};
use uep::oracle::generators::{
    ginibre, haar_unitary, haar_unitary_in_algebra, random_integer_instance, random_yes_instance, rng_from_seed,
};
use uep::oracle::rational::{exact_nullspace_dimension, exact_relaxed_system, int_factor_basis, IntMatrix};
use uep::solver::{
    build_linear_system, extract_unitaries, sample_invertible, singular_value_prefilter, solve_solution_space,
    Prefilter, SampleOutcome,
};
use uep::{
    c64, decide_invertible_equivalence, decide_uep, factor_algebra, full_algebra, verify_algebra, AlgebraKind,
    Certainty, MatrixAlgebra, SamplerConfig, UepInstance, Verdict,
};

fn tol() -> Tolerances<f64> {
    Tolerances::default()
}

fn int_identity(d: usize) -> IntMatrix {
    (0..d).map(|i| (0..d).map(|j| ((i == j) as i64, 0)).collect()).collect()
}

#[test]
fn closure_checks_on_standard_algebras() {
    let t = tol();
    for g in [full_algebra::<f64>(3).unwrap(), factor_algebra(2, 2).unwrap(), factor_algebra(2, 3).unwrap()] {
        let r = verify_algebra(&g, &t);
        assert!(r.unital && r.multiplicatively_closed && r.star_closed);
    }
    assert_eq!(factor_algebra::<f64>(2, 2).unwrap().len(), 4);
}

#[test]
fn span_membership_agrees_with_projection() {
    let t = tol();
    let mut rng = rng_from_seed(11);
    // Block-diagonal algebra C^{2x2} ⊕ C on C^3, given as a raw span.
    let e = |j: usize, k: usize| {
        let mut m = ComplexMatrix::<f64>::zeros(3, 3);
        m[(j, k)] = c64::new(1.0, 0.0);
        m
    };
    let basis = vec![e(0, 0), e(0, 1), e(1, 0), e(1, 1), e(2, 2)];
    let g = MatrixAlgebra::from_span(3, basis.clone(), &t).unwrap();
    assert!(verify_algebra(&g, &t).is_usable());
    for _ in 0..10 {
        let member = basis
            .iter()
            .fold(ComplexMatrix::<f64>::zeros(3, 3), |acc, b| acc + b * uep::oracle::generators::complex_gaussian::<f64, _>(&mut rng));
        assert!(g.membership_residual(&member) <= 1e-12);
        let outsider = ginibre::<f64, _>(3, 3, &mut rng);
        let off_block = outsider[(0, 2)].norm_sqr() + outsider[(1, 2)].norm_sqr() + outsider[(2, 0)].norm_sqr()
            + outsider[(2, 1)].norm_sqr();
        assert!((g.membership_residual(&outsider) - off_block.sqrt()).abs() <= 1e-12);
    }
}

#[test]
fn identity_pair_space_matches_rational_oracle() {
    let t = tol();
    for d in 1..=3 {
        let id = linalg::identity::<f64>(d);
        let inst = UepInstance::unconstrained(vec![(id.clone(), id)]).unwrap();
        let space = solve_solution_space(&build_linear_system(&inst, &t).unwrap(), &t).unwrap();
        let exact = exact_nullspace_dimension(&exact_relaxed_system(
            &[(int_identity(d), int_identity(d))],
            &int_factor_basis(d, 1),
            &int_factor_basis(d, 1),
        ));
        assert_eq!(space.real_dimension(), 2 * d * d);
        assert_eq!(exact, 2 * d * d);
    }
}

#[test]
fn small_integer_instances_match_rational_oracle() {
    let t = tol();
    for seed in 0..20 {
        let int = random_integer_instance(2, 2, 1, 500 + seed);
        let inst = UepInstance::unconstrained(int.to_float::<f64>()).unwrap();
        let space = solve_solution_space(&build_linear_system(&inst, &t).unwrap(), &t).unwrap();
        let exact = exact_nullspace_dimension(&exact_relaxed_system(
            &int.pairs,
            &int_factor_basis(2, 1),
            &int_factor_basis(2, 1),
        ));
        assert_eq!(space.real_dimension(), exact, "seed {seed}");
    }
}

#[test]
fn factor_algebra_spaces_match_rational_oracle() {
    let t = tol();
    for seed in 0..10 {
        let int = random_integer_instance(4, 2, 1, 700 + seed);
        let g1 = factor_algebra::<f64>(2, 2).unwrap();
        let g2 = full_algebra::<f64>(2).unwrap();
        let inst = UepInstance::new(int.to_float::<f64>(), g1, g2).unwrap();
        let space = solve_solution_space(&build_linear_system(&inst, &t).unwrap(), &t).unwrap();
        let exact = exact_nullspace_dimension(&exact_relaxed_system(
            &int.pairs,
            &int_factor_basis(2, 2),
            &int_factor_basis(2, 1),
        ));
        assert_eq!(space.real_dimension(), exact, "seed {seed}");
    }
}

#[test]
fn yes_instances_have_at_least_the_planted_directions() {
    let t = tol();
    for seed in 0..20 {
        let p = random_yes_instance::<f64>(3, 2, 2, AlgebraKind::Full, AlgebraKind::Full, seed).unwrap();
        let space = solve_solution_space(&build_linear_system(&p.instance, &t).unwrap(), &t).unwrap();
        assert!(space.real_dimension() >= 2);
    }
}

#[test]
fn extraction_chain_on_sampled_candidates() {
    let t = tol();
    for seed in 0..20 {
        let p = random_yes_instance::<f64>(3, 3, 1, AlgebraKind::Full, AlgebraKind::Factor { a: 1, b: 3 }, seed)
            .unwrap();
        let space = solve_solution_space(&build_linear_system(&p.instance, &t).unwrap(), &t).unwrap();
        let SampleOutcome::Found { a, b, .. } = sample_invertible(&space, &SamplerConfig::with_seed(seed), &t).unwrap()
        else {
            panic!("no invertible candidate for seed {seed}");
        };
        let (u, v) = extract_unitaries(&a, &b, &t).unwrap();
        assert!(linalg::unitarity_defect(&u) <= 1e-8 && linalg::unitarity_defect(&v) <= 1e-8);
        assert!(p.instance.pair_residual(&u, &v) <= 1e-8);
    }
}

#[test]
fn yes_instance_pairs_pass_the_prefilter() {
    for seed in 0..30 {
        let mut rng = rng_from_seed(seed);
        let (d1, d2) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let p = random_yes_instance::<f64>(d1, d2, 3, AlgebraKind::Full, AlgebraKind::Full, seed).unwrap();
        assert_eq!(singular_value_prefilter(p.instance.pairs()).unwrap(), Prefilter::Pass);
    }
}

#[test]
fn haar_first_moment_vanishes() {
    let mut rng = rng_from_seed(99);
    let draws = 10_000;
    let d = 3;
    let mut sum = ComplexMatrix::<f64>::zeros(d, d);
    for _ in 0..draws {
        sum += haar_unitary::<f64, _>(d, &mut rng);
    }
    // Each entry has E|u|² = 1/d, so the real and imaginary parts of the mean
    // have standard error sqrt(1/(2 d N)).
    let se = (1.0 / (2.0 * d as f64 * draws as f64)).sqrt();
    for z in (sum / c64::new(draws as f64, 0.0)).iter() {
        assert!(z.re.abs() <= 3.0 * se && z.im.abs() <= 3.0 * se, "{z}");
    }
}

#[test]
fn haar_in_trivial_factor_is_a_global_phase() {
    let mut rng = rng_from_seed(5);
    let g = factor_algebra::<f64>(1, 3).unwrap();
    let u = haar_unitary_in_algebra(&g, &mut rng).unwrap();
    let phase = u[(0, 0)];
    assert!((phase.norm() - 1.0).abs() < 1e-14);
    assert!((u - linalg::identity::<f64>(3) * phase).norm() < 1e-14);
}

#[test]
fn matrix_polynomial_examples() {
    let t = tol();
    let cfg = SamplerConfig::with_seed(4);
    let mut rng = rng_from_seed(8);
    let coeffs: Vec<_> = (0..3).map(|_| ginibre::<f64, _>(2, 3, &mut rng)).collect();
    let p = MatrixPolynomial::new(coeffs.clone()).unwrap();
    let same = decide_invertible_equivalence(&p, &p, &cfg, &t).unwrap();
    assert_eq!(same.verdict, Verdict::Yes);
    assert!(same.residual <= 1e-10);

    // Random invertible (non-unitary) A, B.
    let a = ginibre::<f64, _>(2, 2, &mut rng);
    let b = ginibre::<f64, _>(3, 3, &mut rng);
    let b_inv = b.clone().try_inverse().unwrap();
    let q = MatrixPolynomial::new(coeffs.iter().map(|x| &a * x * &b_inv).collect()).unwrap();
    let v = decide_invertible_equivalence(&p, &q, &cfg, &t).unwrap();
    assert_eq!(v.verdict, Verdict::Yes);
    let (ca, cb) = (v.u.unwrap(), v.v.unwrap().try_inverse().unwrap());
    for (x, y) in p.coefficients().iter().zip(q.coefficients()) {
        assert!((&ca * x * &cb - y).norm() <= 1e-8 * y.norm().max(1.0));
    }

    // Coefficient ranks (2, 1) against (1, 1).
    let diag = |a: f64, b: f64| ComplexMatrix::from_diagonal(&DVector::from_vec(vec![c64::new(a, 0.0), c64::new(b, 0.0)]));
    let p = MatrixPolynomial::new(vec![diag(1.0, 2.0), diag(1.0, 0.0)]).unwrap();
    let q = MatrixPolynomial::new(vec![diag(1.0, 0.0), diag(0.0, 3.0)]).unwrap();
    let v = decide_invertible_equivalence(&p, &q, &cfg, &t).unwrap();
    assert_eq!((v.verdict, v.certainty), (Verdict::No, Certainty::Exact));
}

#[test]
fn f32_instances_decide() {
    let t = Tolerances::<f32>::default();
    let p = random_yes_instance::<f32>(2, 3, 1, AlgebraKind::Full, AlgebraKind::Full, 3).unwrap();
    let v = decide_uep(&p.instance, &SamplerConfig::with_seed(1), &t).unwrap();
    assert_eq!(v.verdict, Verdict::Yes);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// The constraint map is real-linear: M(αz₁ + βz₂) = αMz₁ + βMz₂, and
    /// unpacking is real-linear too.
    #[test]
    fn constraint_system_is_real_linear(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let p = random_yes_instance::<f64>(2, 2, 1, AlgebraKind::Full, AlgebraKind::Full, seed).unwrap();
        let sys = build_linear_system(&p.instance, &tol()).unwrap();
        let mut rng = rng_from_seed(seed ^ 1);
        let n = sys.unknowns();
        let z1 = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
        let z2 = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
        let lhs = &sys.matrix * (&z1 * alpha + &z2 * beta);
        let rhs = &sys.matrix * &z1 * alpha + &sys.matrix * &z2 * beta;
        prop_assert!((lhs - rhs).norm() <= 1e-12);
        let (a, b) = sys.unpack((&z1 * alpha + &z2 * beta).as_slice());
        let (a1, b1) = sys.unpack(z1.as_slice());
        let (a2, b2) = sys.unpack(z2.as_slice());
        let ca = c64::new(alpha, 0.0);
        let cb = c64::new(beta, 0.0);
        prop_assert!((a - (a1 * ca + a2 * cb)).norm() <= 1e-12);
        prop_assert!((b - (b1 * ca + b2 * cb)).norm() <= 1e-12);
    }

    /// Scaling every pair leaves the solution space and the verdict unchanged.
    #[test]
    fn scaling_invariance(seed in any::<u64>(), exponent in -6i32..6) {
        let t = tol();
        let p = random_yes_instance::<f64>(2, 3, 1, AlgebraKind::Full, AlgebraKind::Full, seed).unwrap();
        let scaled = p.instance.scaled(10f64.powi(exponent));
        let dim = |inst: &UepInstance<f64>| {
            solve_solution_space(&build_linear_system(inst, &t).unwrap(), &t).unwrap().real_dimension()
        };
        prop_assert_eq!(dim(&p.instance), dim(&scaled));
        let cfg = SamplerConfig::with_seed(seed);
        prop_assert_eq!(decide_uep(&scaled, &cfg, &t).unwrap().verdict, Verdict::Yes);
    }

    /// Every YES verdict carries unitaries that solve the original system.
    #[test]
    fn yes_certificates_verify(seed in any::<u64>(), d1 in 1usize..4, d2 in 1usize..4, m in 0usize..3) {
        let t = tol();
        let p = random_yes_instance::<f64>(d1, d2, m, AlgebraKind::Full, AlgebraKind::Full, seed).unwrap();
        let v = decide_uep(&p.instance, &SamplerConfig::with_seed(seed), &t).unwrap();
        prop_assert_eq!(v.verdict, Verdict::Yes);
        let (u, w) = (v.u.unwrap(), v.v.unwrap());
        prop_assert!(p.instance.pair_residual(&u, &w) <= 1e-8);
        prop_assert!(linalg::unitarity_defect(&u) <= 1e-8);
    }
}
