//! Seeded instance generators with known answers.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{factor_algebra, full_algebra, AlgebraKind, MatrixAlgebra};
use crate::error::{Result, UepError};
use crate::linalg::{self, ComplexMatrix, Tolerances};
use crate::quantum::{DensityOperator, PureState};
use crate::scalar::{cx, cx_real, Cx, Real};
use crate::solver::UepInstance;

/// Generator seeded from a 64-bit value.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian: real and imaginary parts independent `N(0, 1/2)`.
pub fn complex_gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Cx<T> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    cx(T::lit(re * s), T::lit(im * s))
}

pub fn ginibre<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix<T> {
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of the
/// triangular diagonal moved into `Q`.
pub fn haar_unitary<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix<T> {
    let z = ginibre::<T, R>(d, d, rng);
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let rjj = r[(j, j)];
        let modulus = (rjj.re * rjj.re + rjj.im * rjj.im).sqrt();
        let phase = if modulus > T::zero() {
            cx(rjj.re / modulus, rjj.im / modulus)
        } else {
            cx_real(T::one())
        };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar unitary inside a full or factor algebra; `M ⊗ I_b` for factors.
pub fn haar_unitary_in_algebra<T: Real, R: Rng + ?Sized>(
    g: &MatrixAlgebra<T>,
    rng: &mut R,
) -> Result<ComplexMatrix<T>> {
    match g.kind() {
        AlgebraKind::Full => Ok(haar_unitary(g.ambient_dim(), rng)),
        AlgebraKind::Factor { a, b } => Ok(haar_unitary::<T, R>(a, rng).kronecker(&linalg::identity(b))),
        AlgebraKind::Span => Err(UepError::InvalidAlgebra(
            "no canonical Haar measure for a custom span".into(),
        )),
    }
}

/// Algebra kinds the generators know how to sample from.
pub fn algebra_of_kind<T: Real>(kind: AlgebraKind, d: usize) -> Result<MatrixAlgebra<T>> {
    match kind {
        AlgebraKind::Full => full_algebra(d),
        AlgebraKind::Factor { a, b } if a * b == d => factor_algebra(a, b),
        AlgebraKind::Factor { a, b } => Err(UepError::InvalidInput(format!(
            "factor {a}x{b} does not match dimension {d}"
        ))),
        AlgebraKind::Span => Err(UepError::InvalidAlgebra("custom spans cannot be generated".into())),
    }
}

/// A YES instance together with its planted witness.
#[derive(Debug, Clone)]
pub struct PlantedInstance<T: Real> {
    pub instance: UepInstance<T>,
    pub u: ComplexMatrix<T>,
    pub v: ComplexMatrix<T>,
}

fn witness_tolerance<T: Real>() -> T {
    T::tolerance_floor(1e-12)
}

/// `m + 1` Gaussian pairs `Y_i = U₀ X_i V₀†` with `U₀`, `V₀` Haar in their algebras.
pub fn random_yes_instance<T: Real>(
    d1: usize,
    d2: usize,
    m: usize,
    g1: AlgebraKind,
    g2: AlgebraKind,
    seed: u64,
) -> Result<PlantedInstance<T>> {
    if d1 == 0 || d2 == 0 {
        return Err(UepError::InvalidInput("dimensions must be positive".into()));
    }
    let g1 = algebra_of_kind::<T>(g1, d1)?;
    let g2 = algebra_of_kind::<T>(g2, d2)?;
    let mut rng = rng_from_seed(seed);
    let u = haar_unitary_in_algebra(&g1, &mut rng)?;
    let v = haar_unitary_in_algebra(&g2, &mut rng)?;
    let v_adj = v.adjoint();
    let pairs = (0..=m)
        .map(|_| {
            let x = ginibre::<T, _>(d1, d2, &mut rng);
            let y = &u * &x * &v_adj;
            (x, y)
        })
        .collect();
    let instance = UepInstance::new(pairs, g1, g2)?;
    let tol = witness_tolerance::<T>();
    let defect = linalg::unitarity_defect(&u)
        .max(linalg::unitarity_defect(&v))
        .max(instance.g1().membership_residual(&u))
        .max(instance.g2().membership_residual(&v))
        .max(instance.pair_residual(&u, &v));
    if defect > tol {
        return Err(UepError::InvalidInput(format!(
            "planted witness fails its own check ({:.3e})",
            defect.as_f64()
        )));
    }
    Ok(PlantedInstance { instance, u, v })
}

/// Draws a factor algebra kind `factor(a, d/a)` with `a` a random divisor of `d`.
pub fn random_factor_kind<R: Rng + ?Sized>(d: usize, rng: &mut R) -> AlgebraKind {
    let divisors: Vec<usize> = (1..=d).filter(|a| d % a == 0).collect();
    let a = divisors[rng.random_range(0..divisors.len())];
    AlgebraKind::Factor { a, b: d / a }
}

/// NO instance: a YES instance over the full algebras with one `Y_i` whose
/// largest singular value has been doubled. Returns the modified index.
pub fn random_no_instance<T: Real>(d1: usize, d2: usize, m: usize, seed: u64) -> Result<(UepInstance<T>, usize)> {
    let planted = random_yes_instance::<T>(d1, d2, m, AlgebraKind::Full, AlgebraKind::Full, seed)?;
    let mut rng = rng_from_seed(seed ^ 0x9e37_79b9_7f4a_7c15);
    let index = rng.random_range(0..=m);
    let mut pairs = planted.instance.pairs().to_vec();
    pairs[index].1 = double_top_singular_value(&pairs[index].1)?;
    let inst = UepInstance::new(pairs, planted.instance.g1().clone(), planted.instance.g2().clone())?;
    Ok((inst, index))
}

/// `W diag(2σ₁, σ₂, …) Z†` for `M = W diag(σ) Z†`.
pub fn double_top_singular_value<T: Real>(m: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let svd = m
        .clone()
        .try_svd(true, true, T::default_epsilon(), 10_000)
        .ok_or(UepError::NoConvergence("singular value decomposition"))?;
    let top = svd
        .singular_values
        .iter()
        .enumerate()
        .fold(0, |best, (k, s)| if *s > svd.singular_values[best] { k } else { best });
    let u = svd.u.as_ref().expect("requested");
    // Adding σ₁ u₁ v₁† doubles exactly the top singular value.
    let v_t = svd.v_t.as_ref().expect("requested");
    let rank_one = u.column(top) * v_t.row(top) * cx_real(svd.singular_values[top]);
    Ok(m + rank_one)
}

/// Integer-entried instance for exact cross-checks.
#[derive(Debug, Clone)]
pub struct IntegerInstance {
    pub d1: usize,
    pub d2: usize,
    pub pairs: Vec<(Vec<Vec<(i64, i64)>>, Vec<Vec<(i64, i64)>>)>,
}

impl IntegerInstance {
    pub fn to_float<T: Real>(&self) -> Vec<(ComplexMatrix<T>, ComplexMatrix<T>)> {
        let conv = |m: &Vec<Vec<(i64, i64)>>| {
            DMatrix::from_fn(self.d1, self.d2, |i, j| {
                let (re, im) = m[i][j];
                cx(T::lit(re as f64), T::lit(im as f64))
            })
        };
        self.pairs.iter().map(|(x, y)| (conv(x), conv(y))).collect()
    }
}

/// Small Gaussian-integer instances. Half of them are built as `Y = P X Q`
/// with signed permutations (unitary with integer entries), so nontrivial
/// solution spaces are common; the rest have unrelated random `Y`.
pub fn random_integer_instance(d1: usize, d2: usize, m: usize, seed: u64) -> IntegerInstance {
    let mut rng = rng_from_seed(seed);
    let entry = |rng: &mut ChaCha8Rng| (rng.random_range(-2..=2), rng.random_range(-2..=2));
    let related = rng.random_bool(0.5);
    let p = signed_permutation(d1, &mut rng);
    let q = signed_permutation(d2, &mut rng);
    let pairs = (0..=m)
        .map(|_| {
            let x: Vec<Vec<(i64, i64)>> =
                (0..d1).map(|_| (0..d2).map(|_| entry(&mut rng)).collect()).collect();
            let y = if related {
                int_mul(&int_mul(&p, &x), &q)
            } else {
                (0..d1).map(|_| (0..d2).map(|_| entry(&mut rng)).collect()).collect()
            };
            (x, y)
        })
        .collect();
    IntegerInstance { d1, d2, pairs }
}

fn signed_permutation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<Vec<(i64, i64)>> {
    let mut perm: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let units = [(1, 0), (-1, 0), (0, 1), (0, -1)];
    let mut m = vec![vec![(0, 0); d]; d];
    for (i, &j) in perm.iter().enumerate() {
        m[i][j] = units[rng.random_range(0..4)];
    }
    m
}

fn int_mul(a: &[Vec<(i64, i64)>], b: &[Vec<(i64, i64)>]) -> Vec<Vec<(i64, i64)>> {
    let n = a.len();
    let k = b.len();
    let m = b[0].len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    (0..k).fold((0, 0), |(re, im), l| {
                        let (ar, ai) = a[i][l];
                        let (br, bi) = b[l][j];
                        (re + ar * br - ai * bi, im + ar * bi + ai * br)
                    })
                })
                .collect()
        })
        .collect()
}

/// Haar-random pure state on `C^{d1} ⊗ C^{d2}`.
pub fn random_pure_state<T: Real, R: Rng + ?Sized>(d1: usize, d2: usize, rng: &mut R) -> PureState<T> {
    let v = DVector::from_fn(d1 * d2, |_, _| complex_gaussian::<T, R>(rng));
    let norm = v.norm();
    PureState::new(d1, d2, v / cx_real(norm)).expect("a Gaussian vector is nonzero")
}

/// `(U₀ ⊗ V₀)|ψ⟩` applied through the explicit Kronecker product.
pub fn apply_product<T: Real>(u: &ComplexMatrix<T>, v: &ComplexMatrix<T>, s: &PureState<T>) -> PureState<T> {
    let out = u.kronecker(v) * s.amplitudes();
    PureState::new(s.d1(), s.d2(), out).expect("unitary image of a state is a state")
}

/// Sets of states related by a Haar-random product unitary, with the planted `(U₀, V₀)`.
#[derive(Debug, Clone)]
pub struct PlantedStates<T: Real> {
    pub inputs: Vec<PureState<T>>,
    pub outputs: Vec<PureState<T>>,
    pub u: ComplexMatrix<T>,
    pub v: ComplexMatrix<T>,
}

pub fn random_lu_state_sets<T: Real>(d1: usize, d2: usize, count: usize, seed: u64) -> PlantedStates<T> {
    let mut rng = rng_from_seed(seed);
    let u = haar_unitary::<T, _>(d1, &mut rng);
    let v = haar_unitary::<T, _>(d2, &mut rng);
    let inputs: Vec<_> = (0..count).map(|_| random_pure_state(d1, d2, &mut rng)).collect();
    let outputs = inputs.iter().map(|s| apply_product(&u, &v, s)).collect();
    PlantedStates { inputs, outputs, u, v }
}

/// Density operator `Q diag(p) Q†` with Haar `Q` and a spectrum whose
/// consecutive gaps all exceed `min_gap`.
pub fn random_density_with_gaps<T: Real, R: Rng + ?Sized>(
    d1: usize,
    d2: usize,
    min_gap: f64,
    rng: &mut R,
) -> DensityOperator<T> {
    let n = d1 * d2;
    // Ascending spectrum c, c + g_1, c + g_1 + g_2, … with every gap above
    // 1.5·min_gap and the smallest level c fixed by the unit trace.
    let weight = (n * (n - 1) / 2) as f64;
    let spread = if weight > 0.0 { (0.8 / weight - 1.5 * min_gap).max(0.0) } else { 0.0 };
    let gaps: Vec<f64> = (1..n).map(|_| 1.5 * min_gap + rng.random::<f64>() * spread).collect();
    let climb: f64 = gaps.iter().enumerate().map(|(k, g)| (n - 1 - k) as f64 * g).sum();
    let base = (1.0 - climb) / n as f64;
    assert!(base > 0.0, "gap {min_gap} too large for dimension {n}");
    let mut spectrum = vec![base];
    for g in &gaps {
        let last = *spectrum.last().expect("non-empty");
        spectrum.push(last + g);
    }
    let q = haar_unitary::<T, R>(n, rng);
    let d = DMatrix::from_diagonal(&DVector::from_iterator(n, spectrum.iter().map(|p| cx_real(T::lit(*p)))));
    let rho = &q * d * q.adjoint();
    DensityOperator::new(d1, d2, hermitize(&rho), &Tolerances::default()).expect("valid density operator")
}

/// `(H + H†)/2`, removing rounding asymmetry.
pub fn hermitize<T: Real>(h: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    (h + h.adjoint()) * cx_real(T::lit(0.5))
}

/// `(U ⊗ V) ρ (U ⊗ V)†`.
pub fn conjugate_density<T: Real>(
    u: &ComplexMatrix<T>,
    v: &ComplexMatrix<T>,
    rho: &DensityOperator<T>,
) -> DensityOperator<T> {
    let w = u.kronecker(v);
    let sigma = hermitize(&(&w * rho.matrix() * w.adjoint()));
    DensityOperator::new(rho.d1(), rho.d2(), sigma, &Tolerances::default()).expect("unitary conjugate of a state")
}

/// Generic mixed-state pair `σ = (U₀ ⊗ V₀) ρ (U₀ ⊗ V₀)†`.
#[derive(Debug, Clone)]
pub struct PlantedMixed<T: Real> {
    pub rho: DensityOperator<T>,
    pub sigma: DensityOperator<T>,
    pub u: ComplexMatrix<T>,
    pub v: ComplexMatrix<T>,
}

pub fn random_generic_mixed_pair<T: Real>(d1: usize, d2: usize, min_gap: f64, seed: u64) -> PlantedMixed<T> {
    let mut rng = rng_from_seed(seed);
    let rho = random_density_with_gaps::<T, _>(d1, d2, min_gap, &mut rng);
    let u = haar_unitary::<T, _>(d1, &mut rng);
    let v = haar_unitary::<T, _>(d2, &mut rng);
    let sigma = conjugate_density(&u, &v, &rho);
    PlantedMixed { rho, sigma, u, v }
}

/// Shifts the largest eigenvalue of `σ` up by `shift` and renormalises the trace.
pub fn perturb_top_eigenvalue<T: Real>(sigma: &DensityOperator<T>, shift: f64) -> Result<DensityOperator<T>> {
    let tol = Tolerances::default();
    let eig = linalg::hermitian_eigendecomposition(sigma.matrix(), &tol)?;
    let total = 1.0 + shift;
    let spectrum: Vec<Cx<T>> = eig
        .values
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let c = c.as_f64() + if k == 0 { shift } else { 0.0 };
            cx_real(T::lit(c / total))
        })
        .collect();
    let d = DMatrix::from_diagonal(&DVector::from_vec(spectrum));
    let m = &eig.vectors * d * eig.vectors.adjoint();
    DensityOperator::new(sigma.d1(), sigma.d2(), hermitize(&m), &tol)
}

/// Unilocal pairs `σ_i = (U₀ ⊗ I) ρ_i (U₀ ⊗ I)†` over random density operators.
#[derive(Debug, Clone)]
pub struct PlantedUnilocal<T: Real> {
    pub rhos: Vec<DensityOperator<T>>,
    pub sigmas: Vec<DensityOperator<T>>,
    pub u: ComplexMatrix<T>,
}

pub fn random_unilocal_sets<T: Real>(d1: usize, d2: usize, count: usize, seed: u64) -> PlantedUnilocal<T> {
    let mut rng = rng_from_seed(seed);
    let u = haar_unitary::<T, _>(d1, &mut rng);
    let id = linalg::identity::<T>(d2);
    let rhos: Vec<_> = (0..count)
        .map(|_| random_density_with_gaps::<T, _>(d1, d2, 1e-3, &mut rng))
        .collect();
    let sigmas = rhos.iter().map(|r| conjugate_density(&u, &id, r)).collect();
    PlantedUnilocal { rhos, sigmas, u }
}

/// Fresh 64-bit child seed.
pub fn child_seed(rng: &mut ChaCha8Rng) -> u64 {
    rng.next_u64()
}
