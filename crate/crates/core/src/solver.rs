//! Randomized decision procedure for simultaneous unitary equivalence.
//!
//! The quadratic problem `U X_i V† = Y_i` (U, V unitary inside prescribed
//! algebras) is relaxed to the real-linear system
//!
//! ```text
//! A X_i = Y_i B,    X_i B† = A† Y_i,    A ∈ G₁, B ∈ G₂ (and A† ∈ G₁, B† ∈ G₂)
//! ```
//!
//! whose invertible solutions are exactly the ones that yield unitaries by
//! polar extraction `U = A (A†A)^{-1/2}`, `V = B (B†B)^{-1/2}`. Invertible
//! elements of the solution space are found by evaluating random integer
//! combinations of a basis; a space containing any invertible element yields a
//! singular sample with probability at most `2(d₁+d₂)/S` per trial.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{full_algebra, verify_algebra, MatrixAlgebra};
use crate::error::{Result, UepError};
use crate::linalg::{
    self, check_finite, determinant_magnitude_sq, inverse_sqrt_psd, numerical_rank, sigma_ratio,
    singular_values, ComplexMatrix, MatrixPolynomial, Tolerances,
};
use crate::scalar::{cx, cx_real, Cx, Real};

/// The pairs `(X_i, Y_i)` together with the algebras `U` and `V` must lie in.
#[derive(Debug, Clone)]
pub struct UepInstance<T: Real> {
    d1: usize,
    d2: usize,
    pairs: Vec<(ComplexMatrix<T>, ComplexMatrix<T>)>,
    g1: MatrixAlgebra<T>,
    g2: MatrixAlgebra<T>,
}

impl<T: Real> UepInstance<T> {
    pub fn new(
        pairs: Vec<(ComplexMatrix<T>, ComplexMatrix<T>)>,
        g1: MatrixAlgebra<T>,
        g2: MatrixAlgebra<T>,
    ) -> Result<Self> {
        let (d1, d2) = pairs
            .first()
            .map(|(x, _)| x.shape())
            .ok_or_else(|| UepError::InvalidInput("instance needs at least one pair".into()))?;
        for (i, (x, y)) in pairs.iter().enumerate() {
            if x.shape() != (d1, d2) || y.shape() != (d1, d2) {
                return Err(UepError::ShapeMismatch(format!(
                    "pair {i} has shapes {:?} and {:?}, expected ({d1}, {d2})",
                    x.shape(),
                    y.shape()
                )));
            }
            check_finite(x)?;
            check_finite(y)?;
        }
        if g1.ambient_dim() != d1 || g2.ambient_dim() != d2 {
            return Err(UepError::ShapeMismatch(format!(
                "algebras act on dimensions ({}, {}), pairs are {d1}x{d2}",
                g1.ambient_dim(),
                g2.ambient_dim()
            )));
        }
        Ok(Self { d1, d2, pairs, g1, g2 })
    }

    /// Instance over the full matrix algebras on both sides.
    pub fn unconstrained(pairs: Vec<(ComplexMatrix<T>, ComplexMatrix<T>)>) -> Result<Self> {
        let (d1, d2) = pairs
            .first()
            .map(|(x, _)| x.shape())
            .ok_or_else(|| UepError::InvalidInput("instance needs at least one pair".into()))?;
        Self::new(pairs, full_algebra(d1)?, full_algebra(d2)?)
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn pairs(&self) -> &[(ComplexMatrix<T>, ComplexMatrix<T>)] {
        &self.pairs
    }

    pub fn g1(&self) -> &MatrixAlgebra<T> {
        &self.g1
    }

    pub fn g2(&self) -> &MatrixAlgebra<T> {
        &self.g2
    }

    /// Largest residual `‖U X_i V† − Y_i‖_F / max(1, ‖Y_i‖_F)` over all pairs.
    pub fn pair_residual(&self, u: &ComplexMatrix<T>, v: &ComplexMatrix<T>) -> T {
        let v_adj = v.adjoint();
        self.pairs
            .iter()
            .map(|(x, y)| (u * x * &v_adj - y).norm() / y.norm().max(T::one()))
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Same instance with every matrix multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        let f = cx_real(factor);
        Self {
            pairs: self.pairs.iter().map(|(x, y)| (x * f, y * f)).collect(),
            ..self.clone()
        }
    }
}

/// Real-linear constraint matrix of the relaxed system plus the data needed
/// to turn nullspace vectors back into matrix pairs.
///
/// Unknowns are ordered `Re s_1, Im s_1, …, Re s_g1, Im s_g1, Re t_1, Im t_1, …`
/// where `A = Σ s_j E_j` over the basis of G₁ and `B = Σ t_k F_k` over G₂.
#[derive(Debug, Clone)]
pub struct LinearSystem<T: Real> {
    pub matrix: DMatrix<T>,
    /// Rows coming from the pair equations (both families).
    pub equation_rows: usize,
    /// Rows enforcing `A† ∈ G₁` / `B† ∈ G₂` for algebras not closed under adjoints.
    pub membership_rows: usize,
    d1: usize,
    d2: usize,
    g1_basis: Vec<ComplexMatrix<T>>,
    g2_basis: Vec<ComplexMatrix<T>>,
}

impl<T: Real> LinearSystem<T> {
    pub fn unknowns(&self) -> usize {
        self.matrix.ncols()
    }

    /// Matrix pair encoded by a real parameter vector.
    pub fn unpack(&self, z: &[T]) -> (ComplexMatrix<T>, ComplexMatrix<T>) {
        let combine = |basis: &[ComplexMatrix<T>], offset: usize, d: usize| {
            basis
                .iter()
                .enumerate()
                .fold(ComplexMatrix::zeros(d, d), |acc, (j, e)| {
                    acc + e * cx(z[offset + 2 * j], z[offset + 2 * j + 1])
                })
        };
        let off = 2 * self.g1_basis.len();
        (
            combine(&self.g1_basis, 0, self.d1),
            combine(&self.g2_basis, off, self.d2),
        )
    }
}

fn realify<T: Real>(blocks: &[DMatrix<Cx<T>>], ncols: usize) -> DMatrix<T> {
    let rows: usize = blocks.iter().map(|b| 2 * b.nrows()).sum();
    let mut m = DMatrix::zeros(rows, ncols);
    let mut r0 = 0;
    for b in blocks {
        let h = b.nrows();
        for i in 0..h {
            for j in 0..ncols {
                m[(r0 + i, j)] = b[(i, j)].re;
                m[(r0 + h + i, j)] = b[(i, j)].im;
            }
        }
        r0 += 2 * h;
    }
    m
}

/// Stacks `[Re v; Im v]` for every column of a complex matrix.
fn stack_real_imag<T: Real>(m: &DMatrix<Cx<T>>) -> DMatrix<T> {
    let h = m.nrows();
    DMatrix::from_fn(2 * h, m.ncols(), |i, j| {
        if i < h {
            m[(i, j)].re
        } else {
            m[(i - h, j)].im
        }
    })
}

/// Rows `C · [Re vec(M†); Im vec(M†)]` where `M = Σ s_j E_j` is parameterised
/// by the `2·len(basis)` reals starting at `offset`.
fn adjoint_membership_rows<T: Real>(
    g: &MatrixAlgebra<T>,
    offset: usize,
    ncols: usize,
    tol: &Tolerances<T>,
) -> Result<DMatrix<T>> {
    let c = g.membership_constraints(tol)?;
    let d2 = g.ambient_dim() * g.ambient_dim();
    let mut map = DMatrix::<Cx<T>>::zeros(d2, ncols);
    let minus_i = cx(T::zero(), -T::one());
    for (j, e) in g.basis().iter().enumerate() {
        let col = linalg::vectorize(&e.adjoint());
        map.set_column(offset + 2 * j, &col);
        map.set_column(offset + 2 * j + 1, &(col * minus_i));
    }
    Ok(c * stack_real_imag(&map))
}

/// Builds the real-linear system for `A X_i = Y_i B`, `X_i B† = A† Y_i` and,
/// for algebras not closed under adjoints, `A† ∈ G₁`, `B† ∈ G₂`.
///
/// All pair matrices are divided by the largest Frobenius norm among them so
/// that the system (and thus the decision) is invariant under rescaling.
pub fn build_linear_system<T: Real>(inst: &UepInstance<T>, tol: &Tolerances<T>) -> Result<LinearSystem<T>> {
    let report1 = verify_algebra(&inst.g1, tol);
    let report2 = verify_algebra(&inst.g2, tol);
    for (name, report) in [("G1", report1), ("G2", report2)] {
        if !report.is_usable() {
            return Err(UepError::InvalidAlgebra(format!(
                "{name} is not a unital multiplicatively closed algebra (unital: {}, closed: {})",
                report.unital, report.multiplicatively_closed
            )));
        }
    }

    let (d1, d2) = (inst.d1, inst.d2);
    let g1 = inst.g1.basis();
    let g2 = inst.g2.basis();
    let off = 2 * g1.len();
    let n = 2 * (g1.len() + g2.len());
    let i_unit = cx(T::zero(), T::one());

    let scale = inst
        .pairs
        .iter()
        .map(|(x, y)| x.norm().max(y.norm()))
        .fold(T::zero(), |a, b| a.max(b));
    let inv_scale = cx_real(if scale > T::zero() { T::one() / scale } else { T::one() });

    let mut blocks = Vec::with_capacity(2 * inst.pairs.len());
    for (x, y) in &inst.pairs {
        let x = x * inv_scale;
        let y = y * inv_scale;

        // A X − Y B
        let mut lin = DMatrix::<Cx<T>>::zeros(d1 * d2, n);
        for (j, e) in g1.iter().enumerate() {
            let col = linalg::vectorize(&(e * &x));
            lin.set_column(2 * j + 1, &(&col * i_unit));
            lin.set_column(2 * j, &col);
        }
        for (k, f) in g2.iter().enumerate() {
            let col = -linalg::vectorize(&(&y * f));
            lin.set_column(off + 2 * k + 1, &(&col * i_unit));
            lin.set_column(off + 2 * k, &col);
        }
        blocks.push(lin);

        // X B† − A† Y; conjugation flips the sign of the imaginary-part columns.
        let mut anti = DMatrix::<Cx<T>>::zeros(d1 * d2, n);
        for (k, f) in g2.iter().enumerate() {
            let col = linalg::vectorize(&(&x * f.adjoint()));
            anti.set_column(off + 2 * k + 1, &(&col * -i_unit));
            anti.set_column(off + 2 * k, &col);
        }
        for (j, e) in g1.iter().enumerate() {
            let col = -linalg::vectorize(&(e.adjoint() * &y));
            anti.set_column(2 * j + 1, &(&col * -i_unit));
            anti.set_column(2 * j, &col);
        }
        blocks.push(anti);
    }
    let equations = realify(&blocks, n);
    let equation_rows = equations.nrows();

    let mut extra = Vec::new();
    if !report1.star_closed {
        extra.push(adjoint_membership_rows(&inst.g1, 0, n, tol)?);
    }
    if !report2.star_closed {
        extra.push(adjoint_membership_rows(&inst.g2, off, n, tol)?);
    }
    let membership_rows: usize = extra.iter().map(|m| m.nrows()).sum();
    let mut matrix = DMatrix::zeros(equation_rows + membership_rows, n);
    matrix.view_mut((0, 0), (equation_rows, n)).copy_from(&equations);
    let mut r0 = equation_rows;
    for m in &extra {
        matrix.view_mut((r0, 0), (m.nrows(), n)).copy_from(m);
        r0 += m.nrows();
    }

    Ok(LinearSystem {
        matrix,
        equation_rows,
        membership_rows,
        d1,
        d2,
        g1_basis: g1.to_vec(),
        g2_basis: g2.to_vec(),
    })
}

/// Real-linear space of matrix pairs `(A, B)` solving the relaxed system.
#[derive(Debug, Clone)]
pub struct SolutionSpace<T: Real> {
    pub d1: usize,
    pub d2: usize,
    pub basis: Vec<(ComplexMatrix<T>, ComplexMatrix<T>)>,
}

impl<T: Real> SolutionSpace<T> {
    pub fn real_dimension(&self) -> usize {
        self.basis.len()
    }

    /// `Σ c_j (A_j, B_j)`.
    pub fn combine(&self, coeffs: &[T]) -> (ComplexMatrix<T>, ComplexMatrix<T>) {
        let mut a = ComplexMatrix::zeros(self.d1, self.d1);
        let mut b = ComplexMatrix::zeros(self.d2, self.d2);
        for (c, (aj, bj)) in coeffs.iter().zip(&self.basis) {
            a += aj * cx_real(*c);
            b += bj * cx_real(*c);
        }
        (a, b)
    }
}

pub fn solve_solution_space<T: Real>(system: &LinearSystem<T>, tol: &Tolerances<T>) -> Result<SolutionSpace<T>> {
    let null = linalg::nullspace_basis(&system.matrix, tol)?;
    Ok(SolutionSpace {
        d1: system.d1,
        d2: system.d2,
        basis: null.iter().map(|z| system.unpack(z.as_slice())).collect(),
    })
}

/// Residual of the relaxed equations for a candidate pair, relative to
/// `max(1, ‖X_i‖, ‖Y_i‖) · max(‖A‖, ‖B‖)`.
pub fn relaxed_residual<T: Real>(inst: &UepInstance<T>, a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> T {
    let ab = a.norm().max(b.norm());
    let ab = if ab > T::zero() { ab } else { T::one() };
    inst.pairs
        .iter()
        .map(|(x, y)| {
            let scale = x.norm().max(y.norm()).max(T::one()) * ab;
            let lin = (a * x - y * b).norm();
            let anti = (x * b.adjoint() - a.adjoint() * y).norm();
            lin.max(anti) / scale
        })
        .fold(T::zero(), |acc, r| acc.max(r))
}

/// Sampling parameters: coefficients are drawn uniformly from `{1, …, sample_max}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    pub sample_max: u64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            sample_max: 1_000_000,
            trials: 32,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// Degree of `|det A|² |det B|²` as a polynomial in the real coefficients.
    pub fn determinant_degree(d1: usize, d2: usize) -> usize {
        2 * (d1 + d2)
    }

    /// Per-trial probability of hitting a singular element when an invertible one exists.
    pub fn per_trial_bound(&self, d1: usize, d2: usize) -> f64 {
        (Self::determinant_degree(d1, d2) as f64 / self.sample_max as f64).min(1.0)
    }

    /// Bound on wrongly reporting "no invertible element" after all trials.
    pub fn failure_bound(&self, d1: usize, d2: usize) -> f64 {
        self.per_trial_bound(d1, d2).powi(self.trials as i32)
    }

    /// The same bound computed with a `2·d²` degree estimate, `d = max(d₁, d₂)`.
    pub fn coarse_failure_bound(&self, d1: usize, d2: usize) -> f64 {
        let d = d1.max(d2) as f64;
        (2.0 * d * d / self.sample_max as f64).min(1.0).powi(self.trials as i32)
    }

    /// Requires a per-trial bound below one half and at least one trial.
    pub fn validate(&self, d1: usize, d2: usize) -> Result<()> {
        if self.trials == 0 {
            return Err(UepError::InvalidConfig("at least one trial is required".into()));
        }
        let need = 2 * Self::determinant_degree(d1, d2) as u64;
        if self.sample_max < need {
            return Err(UepError::InvalidConfig(format!(
                "sample_max {} is below {need} = 2·2(d1+d2) for d1={d1}, d2={d2}",
                self.sample_max
            )));
        }
        Ok(())
    }
}

/// Deterministic generator for one trial: the stream index separates trials.
fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Candidate of trial `trial` (1-based): integer coefficients in `{1, …, sample_max}`.
pub fn draw_candidate<T: Real>(
    space: &SolutionSpace<T>,
    sample_max: u64,
    seed: u64,
    trial: usize,
) -> (ComplexMatrix<T>, ComplexMatrix<T>) {
    let mut rng = trial_rng(seed, trial);
    let coeffs: Vec<T> = (0..space.real_dimension())
        .map(|_| T::lit(rng.random_range(1..=sample_max.max(1)) as f64))
        .collect();
    space.combine(&coeffs)
}

/// Both blocks pass `σ_min / σ_max > rank_rel`.
pub fn candidate_is_invertible<T: Real>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
    tol: &Tolerances<T>,
) -> Result<bool> {
    Ok(sigma_ratio(a)? > tol.rank_rel && sigma_ratio(b)? > tol.rank_rel)
}

#[derive(Debug, Clone)]
pub enum SampleOutcome<T: Real> {
    Found {
        a: ComplexMatrix<T>,
        b: ComplexMatrix<T>,
        /// 1-based index of the successful trial.
        trial: usize,
        /// `|det A|² · |det B|²` of the accepted candidate.
        det_magnitude_sq: T,
    },
    Exhausted {
        trials: usize,
        failure_bound: f64,
    },
}

/// Draws up to `cfg.trials` random elements of the space and returns the
/// first one whose blocks are both numerically invertible.
pub fn sample_invertible<T: Real>(
    space: &SolutionSpace<T>,
    cfg: &SamplerConfig,
    tol: &Tolerances<T>,
) -> Result<SampleOutcome<T>> {
    sample_from(space, cfg, tol, 1)
}

fn sample_from<T: Real>(
    space: &SolutionSpace<T>,
    cfg: &SamplerConfig,
    tol: &Tolerances<T>,
    first_trial: usize,
) -> Result<SampleOutcome<T>> {
    for trial in first_trial..=cfg.trials {
        let (a, b) = draw_candidate(space, cfg.sample_max, cfg.seed, trial);
        if candidate_is_invertible(&a, &b, tol)? {
            let det = determinant_magnitude_sq(&a)?.magnitude_sq * determinant_magnitude_sq(&b)?.magnitude_sq;
            return Ok(SampleOutcome::Found {
                a,
                b,
                trial,
                det_magnitude_sq: det,
            });
        }
    }
    Ok(SampleOutcome::Exhausted {
        trials: cfg.trials,
        failure_bound: cfg.failure_bound(space.d1, space.d2),
    })
}

/// Unitary factors `U = A (A†A)^{-1/2}`, `V = B (B†B)^{-1/2}`.
pub fn extract_unitaries<T: Real>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
    tol: &Tolerances<T>,
) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>)> {
    Ok((polar_unitary(a, tol)?, polar_unitary(b, tol)?))
}

fn polar_unitary<T: Real>(a: &ComplexMatrix<T>, tol: &Tolerances<T>) -> Result<ComplexMatrix<T>> {
    if !a.is_square() {
        return Err(UepError::ShapeMismatch(format!("{:?} is not square", a.shape())));
    }
    let ratio = sigma_ratio(a)?;
    if ratio <= tol.rank_rel {
        return Err(UepError::DegenerateCandidate(format!(
            "singular value ratio {:.3e}",
            ratio.as_f64()
        )));
    }
    // The unitary factor does not depend on the scale of A.
    let a = a * cx_real(T::one() / a.norm());
    let s = inverse_sqrt_psd(&(a.adjoint() * &a), tol).map_err(|e| match e {
        UepError::NotPositiveDefinite(r) => {
            UepError::DegenerateCandidate(format!("A†A eigenvalue ratio {r:.3e}"))
        }
        other => other,
    })?;
    Ok(a * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certainty {
    Exact,
    Probabilistic,
}

/// Outcome of a decision together with its certificate and accounting.
#[derive(Debug, Clone)]
pub struct UepVerdict<T: Real> {
    pub verdict: Verdict,
    pub certainty: Certainty,
    /// Left transformation (unitary, or invertible for matrix-polynomial equivalence).
    pub u: Option<ComplexMatrix<T>>,
    /// Right transformation.
    pub v: Option<ComplexMatrix<T>>,
    /// Largest relative pair residual of the certificate (zero without one).
    pub residual: T,
    pub trials_used: usize,
    /// Probability bound on a wrong NO; zero for exact answers and certified YES.
    pub failure_bound: f64,
    /// The bound recomputed with the coarse `2·max(d₁,d₂)²` degree.
    pub coarse_failure_bound: f64,
    pub solution_dimension: Option<usize>,
    pub unitarity_defect: Option<T>,
    pub membership_residual: Option<T>,
    pub diagnostic: Option<String>,
}

impl<T: Real> UepVerdict<T> {
    fn bare(verdict: Verdict, certainty: Certainty) -> Self {
        Self {
            verdict,
            certainty,
            u: None,
            v: None,
            residual: T::zero(),
            trials_used: 0,
            failure_bound: 0.0,
            coarse_failure_bound: 0.0,
            solution_dimension: None,
            unitarity_defect: None,
            membership_residual: None,
            diagnostic: None,
        }
    }

    pub(crate) fn exact_no(diagnostic: String) -> Self {
        Self {
            diagnostic: Some(diagnostic),
            ..Self::bare(Verdict::No, Certainty::Exact)
        }
    }

    /// INCONCLUSIVE without a certificate.
    pub fn inconclusive(diagnostic: String) -> Self {
        Self {
            diagnostic: Some(diagnostic),
            ..Self::bare(Verdict::Inconclusive, Certainty::Probabilistic)
        }
    }

    pub fn is_yes(&self) -> bool {
        self.verdict == Verdict::Yes
    }
}

/// Outcome of comparing per-pair invariants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prefilter {
    Pass,
    Fail { index: usize },
}

/// Compares sorted singular values of each pair; a deviation above
/// `1e-8 · max(1, σ_max)` fails at that pair.
pub fn singular_value_prefilter<T: Real>(pairs: &[(ComplexMatrix<T>, ComplexMatrix<T>)]) -> Result<Prefilter> {
    let rel = T::tolerance_floor(1e-8);
    for (index, (x, y)) in pairs.iter().enumerate() {
        if x.shape() != y.shape() {
            return Ok(Prefilter::Fail { index });
        }
        let sx = singular_values(x)?;
        let sy = singular_values(y)?;
        let top = sx.first().copied().unwrap_or_else(T::zero).max(T::one());
        if sx.iter().zip(&sy).any(|(a, b)| (*a - *b).abs() > rel * top) {
            return Ok(Prefilter::Fail { index });
        }
    }
    Ok(Prefilter::Pass)
}

/// Decides whether unitaries `U ∈ G₁`, `V ∈ G₂` with `U X_i V† = Y_i` exist.
pub fn decide_uep<T: Real>(inst: &UepInstance<T>, cfg: &SamplerConfig, tol: &Tolerances<T>) -> Result<UepVerdict<T>> {
    cfg.validate(inst.d1, inst.d2)?;
    let system = build_linear_system(inst, tol)?;

    if let Prefilter::Fail { index } = singular_value_prefilter(&inst.pairs)? {
        return Ok(UepVerdict::exact_no(format!("singular values differ at pair {index}")));
    }

    let space = solve_solution_space(&system, tol)?;
    if space.real_dimension() == 0 {
        let mut verdict = UepVerdict::exact_no("relaxed system has only the zero solution".into());
        verdict.solution_dimension = Some(0);
        return Ok(verdict);
    }
    log::debug!(
        "solution space of real dimension {} ({} constraint rows)",
        space.real_dimension(),
        system.matrix.nrows()
    );

    let mut first = 1;
    loop {
        match sample_from(&space, cfg, tol, first)? {
            SampleOutcome::Exhausted { trials, failure_bound } => {
                return Ok(UepVerdict {
                    trials_used: trials,
                    failure_bound,
                    coarse_failure_bound: cfg.coarse_failure_bound(inst.d1, inst.d2),
                    solution_dimension: Some(space.real_dimension()),
                    diagnostic: Some(format!("no invertible element in {trials} trials")),
                    ..UepVerdict::bare(Verdict::No, Certainty::Probabilistic)
                });
            }
            SampleOutcome::Found { a, b, trial, .. } => match extract_unitaries(&a, &b, tol) {
                Err(UepError::DegenerateCandidate(why)) => {
                    log::debug!("trial {trial}: degenerate candidate ({why}), resampling");
                    first = trial + 1;
                }
                Err(e) => return Err(e),
                Ok((u, v)) => return Ok(certify(inst, u, v, trial, space.real_dimension(), tol)),
            },
        }
    }
}

fn certify<T: Real>(
    inst: &UepInstance<T>,
    u: ComplexMatrix<T>,
    v: ComplexMatrix<T>,
    trial: usize,
    dimension: usize,
    tol: &Tolerances<T>,
) -> UepVerdict<T> {
    let residual = inst.pair_residual(&u, &v);
    let unitarity = linalg::unitarity_defect(&u).max(linalg::unitarity_defect(&v));
    let membership = inst.g1.membership_residual(&u).max(inst.g2.membership_residual(&v));
    let ok = residual <= tol.residual_abs && unitarity <= tol.residual_abs && membership <= tol.residual_abs;
    UepVerdict {
        verdict: if ok { Verdict::Yes } else { Verdict::Inconclusive },
        certainty: Certainty::Probabilistic,
        u: Some(u),
        v: Some(v),
        residual,
        trials_used: trial,
        solution_dimension: Some(dimension),
        unitarity_defect: Some(unitarity),
        membership_residual: Some(membership),
        diagnostic: (!ok).then(|| {
            format!(
                "certificate failed verification (residual {:.3e}, unitarity {:.3e}, membership {:.3e})",
                residual.as_f64(),
                unitarity.as_f64(),
                membership.as_f64()
            )
        }),
        ..UepVerdict::bare(Verdict::Yes, Certainty::Probabilistic)
    }
}

/// Complex-linear system `A X_i = Y_i B` over all of `C^{d₁×d₁} ⊕ C^{d₂×d₂}`;
/// unknowns are `vec(A)` followed by `vec(B)` (column-major).
pub fn build_invertible_system<T: Real>(p: &MatrixPolynomial<T>, q: &MatrixPolynomial<T>) -> Result<DMatrix<Cx<T>>> {
    if p.shape() != q.shape() || p.degree() != q.degree() {
        return Err(UepError::ShapeMismatch(format!(
            "polynomials differ: shapes {:?} / {:?}, degrees {} / {}",
            p.shape(),
            q.shape(),
            p.degree(),
            q.degree()
        )));
    }
    let (d1, d2) = p.shape();
    let scale = p
        .coefficients()
        .iter()
        .chain(q.coefficients())
        .map(|m| m.norm())
        .fold(T::zero(), |a, b| a.max(b));
    let inv = cx_real(if scale > T::zero() { T::one() / scale } else { T::one() });
    let id1 = linalg::identity::<T>(d1);
    let id2 = linalg::identity::<T>(d2);
    let rows = d1 * d2 * (p.degree() + 1);
    let mut m = DMatrix::zeros(rows, d1 * d1 + d2 * d2);
    for (i, (x, y)) in p.coefficients().iter().zip(q.coefficients()).enumerate() {
        // vec(A X) = (Xᵀ ⊗ I) vec(A),  vec(Y B) = (I ⊗ Y) vec(B)
        let left = (x * inv).transpose().kronecker(&id1);
        let right = -id2.kronecker(&(y * inv));
        let r0 = i * d1 * d2;
        m.view_mut((r0, 0), (d1 * d2, d1 * d1)).copy_from(&left);
        m.view_mut((r0, d1 * d1), (d1 * d2, d2 * d2)).copy_from(&right);
    }
    Ok(m)
}

/// Decides `P ∼ Q`: invertible `A`, `B` with `A X_i B^{-1} = Y_i` for all coefficients.
/// The certificate `(A, B)` is returned in the `u`, `v` slots.
pub fn decide_invertible_equivalence<T: Real>(
    p: &MatrixPolynomial<T>,
    q: &MatrixPolynomial<T>,
    cfg: &SamplerConfig,
    tol: &Tolerances<T>,
) -> Result<UepVerdict<T>> {
    let system = build_invertible_system(p, q)?;
    let (d1, d2) = p.shape();
    cfg.validate(d1, d2)?;

    for (i, (x, y)) in p.coefficients().iter().zip(q.coefficients()).enumerate() {
        let (rx, ry) = (numerical_rank(x, tol)?, numerical_rank(y, tol)?);
        if rx != ry {
            return Ok(UepVerdict::exact_no(format!(
                "coefficient {i} has rank {rx} in P and {ry} in Q"
            )));
        }
    }

    let null = linalg::nullspace_generic(&system, tol.rank_rel)?;
    if null.is_empty() {
        let mut verdict = UepVerdict::exact_no("A X_i = Y_i B has only the zero solution".into());
        verdict.solution_dimension = Some(0);
        return Ok(verdict);
    }
    // Real basis of the complex solution space: w and i·w for each complex vector.
    let i_unit = cx(T::zero(), T::one());
    let mut basis = Vec::with_capacity(2 * null.len());
    for w in &null {
        let a = linalg::unvectorize(&w.as_slice()[..d1 * d1], d1, d1);
        let b = linalg::unvectorize(&w.as_slice()[d1 * d1..], d2, d2);
        basis.push((&a * i_unit, &b * i_unit));
        basis.push((a, b));
    }
    let space = SolutionSpace { d1, d2, basis };

    match sample_invertible(&space, cfg, tol)? {
        SampleOutcome::Exhausted { trials, failure_bound } => Ok(UepVerdict {
            trials_used: trials,
            failure_bound,
            coarse_failure_bound: cfg.coarse_failure_bound(d1, d2),
            solution_dimension: Some(space.real_dimension()),
            diagnostic: Some(format!("no invertible element in {trials} trials")),
            ..UepVerdict::bare(Verdict::No, Certainty::Probabilistic)
        }),
        SampleOutcome::Found { a, b, trial, .. } => {
            let s = cx_real(T::one() / a.norm());
            let (a, b) = (a * s, b * s);
            let residual = match b.clone().try_inverse() {
                Some(b_inv) => p
                    .coefficients()
                    .iter()
                    .zip(q.coefficients())
                    .map(|(x, y)| (&a * x * &b_inv - y).norm() / y.norm().max(T::one()))
                    .fold(T::zero(), |acc, r| acc.max(r)),
                None => T::max_value().unwrap_or_else(T::one),
            };
            let ok = residual <= tol.residual_abs;
            Ok(UepVerdict {
                verdict: if ok { Verdict::Yes } else { Verdict::Inconclusive },
                certainty: Certainty::Probabilistic,
                u: Some(a),
                v: Some(b),
                residual,
                trials_used: trial,
                solution_dimension: Some(space.real_dimension()),
                diagnostic: (!ok).then(|| format!("certificate residual {:.3e}", residual.as_f64())),
                ..UepVerdict::bare(Verdict::Yes, Certainty::Probabilistic)
            })
        }
    }
}

/// Inverse square roots of `A†A` and `B†B` computed as one interpolating
/// polynomial evaluated at both matrices.
pub fn polynomial_inverse_sqrt_pair<T: Real>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
    tol: &Tolerances<T>,
) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>)> {
    let ha = a.adjoint() * a;
    let hb = b.adjoint() * b;
    let mut out = linalg::vandermonde_inverse_sqrt(&[&ha, &hb], tol)?;
    let pb = out.pop().expect("two outputs");
    let pa = out.pop().expect("two outputs");
    Ok((pa, pb))
}

/// Column vector helper used by callers assembling parameter vectors.
pub fn params_to_pair<T: Real>(system: &LinearSystem<T>, z: &DVector<T>) -> (ComplexMatrix<T>, ComplexMatrix<T>) {
    system.unpack(z.as_slice())
}
