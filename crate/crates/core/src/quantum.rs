//! Bipartite states and the local-unitary equivalence problems that reduce to
//! simultaneous unitary equivalence.
//!
//! A pure state `|ψ⟩ ∈ C^{d1} ⊗ C^{d2}` with amplitudes `ψ_{(i,j)}` at index
//! `i·d2 + j` is identified with the `d1 × d2` matrix `ψ[i, j] = ψ_{(i,j)}`.
//! Under this identification `(A ⊗ B)|ψ⟩ ↔ A ψ Bᵀ`, so a solver certificate
//! `U ψ W† = φ` corresponds to the local unitary `U ⊗ conj(W)`.

use nalgebra::DVector;

use crate::algebra::factor_algebra;
use crate::error::{Result, UepError};
use crate::linalg::{self, check_finite, hermitian_eigendecomposition, ComplexMatrix, Tolerances};
use crate::scalar::{cx, cx_real, Cx, Real};
use crate::solver::{decide_uep, Certainty, SamplerConfig, UepInstance, UepVerdict, Verdict};

const NORM_TOLERANCE: f64 = 1e-10;

/// Unit vector in `C^{d1} ⊗ C^{d2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T: Real> {
    d1: usize,
    d2: usize,
    amplitudes: DVector<Cx<T>>,
    rescaled: bool,
}

impl<T: Real> PureState<T> {
    /// Normalises the amplitudes if their norm is off by more than `1e-10`
    /// (logging a warning); the zero vector is rejected.
    pub fn new(d1: usize, d2: usize, amplitudes: DVector<Cx<T>>) -> Result<Self> {
        if d1 == 0 || d2 == 0 || amplitudes.len() != d1 * d2 {
            return Err(UepError::ShapeMismatch(format!(
                "state on {d1}x{d2} needs {} amplitudes, got {}",
                d1 * d2,
                amplitudes.len()
            )));
        }
        if let Some(k) = amplitudes.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(UepError::NonFinite { row: k, col: 0 });
        }
        let norm = amplitudes.norm();
        if norm == T::zero() {
            return Err(UepError::InvalidInput("zero vector is not a state".into()));
        }
        let rescaled = (norm - T::one()).abs() > T::tolerance_floor(NORM_TOLERANCE);
        let amplitudes = if rescaled {
            log::warn!("state norm {} rescaled to one", norm);
            amplitudes / cx_real(norm)
        } else {
            amplitudes
        };
        Ok(Self {
            d1,
            d2,
            amplitudes,
            rescaled,
        })
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn amplitudes(&self) -> &DVector<Cx<T>> {
        &self.amplitudes
    }

    /// Whether construction had to normalise the input.
    pub fn was_rescaled(&self) -> bool {
        self.rescaled
    }
}

/// Hermitian, unit-trace, positive semidefinite operator on `C^{d1} ⊗ C^{d2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator<T: Real> {
    d1: usize,
    d2: usize,
    matrix: ComplexMatrix<T>,
}

impl<T: Real> DensityOperator<T> {
    pub fn new(d1: usize, d2: usize, matrix: ComplexMatrix<T>, tol: &Tolerances<T>) -> Result<Self> {
        let n = d1 * d2;
        if n == 0 || matrix.shape() != (n, n) {
            return Err(UepError::ShapeMismatch(format!(
                "density operator on {d1}x{d2} must be {n}x{n}, got {:?}",
                matrix.shape()
            )));
        }
        check_finite(&matrix)?;
        let eps = T::tolerance_floor(NORM_TOLERANCE);
        let asym = (&matrix - matrix.adjoint()).norm();
        if asym > eps {
            return Err(UepError::NotHermitian(asym.as_f64()));
        }
        let trace = matrix.trace();
        if (trace.re - T::one()).abs() > eps || trace.im.abs() > eps {
            return Err(UepError::InvalidInput(format!(
                "trace {}{:+}i differs from one",
                trace.re, trace.im
            )));
        }
        let eig = hermitian_eigendecomposition(&matrix, tol)?;
        if let Some(low) = eig.values.last() {
            if *low < -eps {
                return Err(UepError::InvalidInput(format!("negative eigenvalue {low}")));
            }
        }
        Ok(Self { d1, d2, matrix })
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }
}

/// `ψ[i, j] = ⟨i j|ψ⟩`.
pub fn state_to_matrix<T: Real>(s: &PureState<T>) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(s.d1, s.d2, |i, j| s.amplitudes[i * s.d2 + j])
}

/// Inverse of [`state_to_matrix`] (normalising if needed).
pub fn matrix_to_state<T: Real>(m: &ComplexMatrix<T>) -> Result<PureState<T>> {
    let (d1, d2) = m.shape();
    let amps = DVector::from_fn(d1 * d2, |k, _| m[(k / d2, k % d2)]);
    PureState::new(d1, d2, amps)
}

fn uniform_dims<T: Real>(states: &[PureState<T>]) -> Result<(usize, usize)> {
    let first = states
        .first()
        .ok_or_else(|| UepError::InvalidInput("empty state list".into()))?;
    let dims = (first.d1, first.d2);
    if let Some(k) = states.iter().position(|s| (s.d1, s.d2) != dims) {
        return Err(UepError::ShapeMismatch(format!(
            "state {k} is {}x{}, expected {}x{}",
            states[k].d1, states[k].d2, dims.0, dims.1
        )));
    }
    Ok(dims)
}

/// Largest `‖(U ⊗ V)|ψ_i⟩ − |φ_i⟩‖` using the explicit Kronecker product.
pub fn product_action_residual<T: Real>(
    u: &ComplexMatrix<T>,
    v: &ComplexMatrix<T>,
    states_in: &[PureState<T>],
    states_out: &[PureState<T>],
) -> T {
    let w = u.kronecker(v);
    states_in
        .iter()
        .zip(states_out)
        .map(|(a, b)| (&w * &a.amplitudes - &b.amplitudes).norm())
        .fold(T::zero(), |x, y| x.max(y))
}

/// Decides whether one product unitary `U ⊗ V` maps every `|ψ_i⟩` to `|φ_i⟩`.
/// On YES, `u` and `v` hold the physical local unitaries.
pub fn simultaneous_lu_pure<T: Real>(
    states_in: &[PureState<T>],
    states_out: &[PureState<T>],
    cfg: &SamplerConfig,
    tol: &Tolerances<T>,
) -> Result<UepVerdict<T>> {
    if states_in.len() != states_out.len() {
        return Err(UepError::ShapeMismatch(format!(
            "{} input states but {} output states",
            states_in.len(),
            states_out.len()
        )));
    }
    let dims = uniform_dims(states_in)?;
    if uniform_dims(states_out)? != dims {
        return Err(UepError::ShapeMismatch("input and output states live on different spaces".into()));
    }
    let pairs = states_in
        .iter()
        .zip(states_out)
        .map(|(a, b)| (state_to_matrix(a), state_to_matrix(b)))
        .collect();
    let inst = UepInstance::unconstrained(pairs)?;
    let mut verdict = decide_uep(&inst, cfg, tol)?;
    if verdict.verdict != Verdict::Yes {
        return Ok(verdict);
    }
    let u = verdict.u.take().expect("YES carries a certificate");
    let v = linalg::conjugate(&verdict.v.take().expect("YES carries a certificate"));
    let residual = product_action_residual(&u, &v, states_in, states_out);
    if residual > tol.residual_abs {
        verdict.verdict = Verdict::Inconclusive;
        verdict.diagnostic = Some(format!("product unitary misses the states by {:.3e}", residual.as_f64()));
    }
    verdict.residual = residual;
    verdict.u = Some(u);
    verdict.v = Some(v);
    Ok(verdict)
}

fn uniform_density_dims<T: Real>(ops: &[DensityOperator<T>]) -> Result<(usize, usize)> {
    let first = ops
        .first()
        .ok_or_else(|| UepError::InvalidInput("empty density operator list".into()))?;
    let dims = (first.d1, first.d2);
    if let Some(k) = ops.iter().position(|r| (r.d1, r.d2) != dims) {
        return Err(UepError::ShapeMismatch(format!("density operator {k} has different dimensions")));
    }
    Ok(dims)
}

/// Instance `{(ρ_i, σ_i)} ∪ {(I, I)}` over `{M ⊗ I_{d2}}` on both sides. The
/// identity pair forces the left and right unitaries to coincide.
pub fn unilocal_instance<T: Real>(rhos: &[DensityOperator<T>], sigmas: &[DensityOperator<T>]) -> Result<UepInstance<T>> {
    if rhos.len() != sigmas.len() {
        return Err(UepError::ShapeMismatch(format!(
            "{} input operators but {} output operators",
            rhos.len(),
            sigmas.len()
        )));
    }
    let (d1, d2) = uniform_density_dims(rhos)?;
    if uniform_density_dims(sigmas)? != (d1, d2) {
        return Err(UepError::ShapeMismatch("input and output operators differ in dimensions".into()));
    }
    let mut pairs: Vec<_> = rhos
        .iter()
        .zip(sigmas)
        .map(|(r, s)| (r.matrix.clone(), s.matrix.clone()))
        .collect();
    let id = linalg::identity::<T>(d1 * d2);
    pairs.push((id.clone(), id));
    let g = factor_algebra(d1, d2)?;
    UepInstance::new(pairs, g.clone(), g)
}

/// `M` from `M ⊗ I_b`, by block traces.
pub fn local_factor<T: Real>(full: &ComplexMatrix<T>, a: usize, b: usize) -> ComplexMatrix<T> {
    let inv_b = cx_real(T::one() / T::lit(b as f64));
    ComplexMatrix::from_fn(a, a, |j, k| {
        (0..b).fold(Cx::new(T::zero(), T::zero()), |acc, l| acc + full[(j * b + l, k * b + l)]) * inv_b
    })
}

/// Decides whether one unitary `U` on the first factor satisfies
/// `(U ⊗ I) ρ_i (U ⊗ I)† = σ_i` for all `i`. The second factor stands for
/// every party that does not act. On YES, `u` and `v` are the local factors of
/// the solver's left and right unitaries (equal up to the residual).
pub fn unilocal_mixed_equivalence<T: Real>(
    rhos: &[DensityOperator<T>],
    sigmas: &[DensityOperator<T>],
    cfg: &SamplerConfig,
    tol: &Tolerances<T>,
) -> Result<UepVerdict<T>> {
    let inst = unilocal_instance(rhos, sigmas)?;
    let (d1, d2) = (rhos[0].d1, rhos[0].d2);
    let mut verdict = decide_uep(&inst, cfg, tol)?;
    if verdict.verdict != Verdict::Yes {
        return Ok(verdict);
    }
    let u = local_factor(verdict.u.as_ref().expect("certificate"), d1, d2);
    let v = local_factor(verdict.v.as_ref().expect("certificate"), d1, d2);
    let full = u.kronecker(&linalg::identity(d2));
    let residual = rhos
        .iter()
        .zip(sigmas)
        .map(|(r, s)| (&full * &r.matrix * full.adjoint() - &s.matrix).norm() / s.matrix.norm().max(T::one()))
        .fold(T::zero(), |a, b| a.max(b));
    if residual > tol.residual_abs {
        verdict.verdict = Verdict::Inconclusive;
        verdict.diagnostic = Some(format!("local unitary misses the operators by {:.3e}", residual.as_f64()));
    }
    verdict.residual = residual;
    verdict.u = Some(u);
    verdict.v = Some(v);
    Ok(verdict)
}

/// Smallest quartic-trace magnitude used to relate two eigenvector phases.
const PHASE_TRACE_FLOOR: f64 = 1e-6;
/// Allowed deviation of `|tr_ψ / tr_φ|` from one.
const PHASE_MODULUS_SLACK: f64 = 1e-4;

/// Relative phases `λ_j` with `U ψ_j V† = λ_j φ_j`, one gauge-fixed class per
/// connected component of the trace graph.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseResolution<T: Real> {
    /// `λ_j`, equal to one at the root of each class.
    pub phases: Vec<Cx<T>>,
    /// Class index of each matrix; class 0 contains index 0.
    pub class_of: Vec<usize>,
    pub classes: usize,
}

impl<T: Real> PhaseResolution<T> {
    /// `{λ_j e^{iθ_c(j)} φ_j}` with one extra phase per class beyond the first.
    pub fn rephase(&self, phis: &[ComplexMatrix<T>], extra: &[T]) -> Vec<ComplexMatrix<T>> {
        phis.iter()
            .zip(&self.phases)
            .zip(&self.class_of)
            .map(|((phi, lambda), &c)| {
                let theta = if c == 0 { T::zero() } else { extra[c - 1] };
                let shift = cx(theta.cos(), theta.sin());
                phi * (*lambda * shift)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseOutcome<T: Real> {
    Resolved(PhaseResolution<T>),
    /// The trace ratio at `index` is not unimodular, so no phase fits.
    Unresolved { index: usize, modulus: f64 },
}

/// Matches the per-matrix phase freedom between two lists using
/// `tr(ψ_i†ψ_jψ_k†ψ_i) = λ_j λ̄_k · tr(φ_i†φ_jφ_k†φ_i)`, valid whenever
/// `U ψ_j V† = λ_j φ_j` with unitary `U`, `V` and `|λ_j| = 1`.
pub fn resolve_eigenvector_phases<T: Real>(
    psis: &[ComplexMatrix<T>],
    phis: &[ComplexMatrix<T>],
) -> Result<PhaseOutcome<T>> {
    let n = psis.len();
    if phis.len() != n {
        return Err(UepError::ShapeMismatch(format!("{n} matrices against {}", phis.len())));
    }
    if n == 0 {
        return Ok(PhaseOutcome::Resolved(PhaseResolution {
            phases: vec![],
            class_of: vec![],
            classes: 0,
        }));
    }
    let shape = psis[0].shape();
    if psis.iter().chain(phis).any(|m| m.shape() != shape) {
        return Err(UepError::ShapeMismatch("matrices differ in shape".into()));
    }
    let grams = |ms: &[ComplexMatrix<T>]| -> Vec<Vec<ComplexMatrix<T>>> {
        ms.iter().map(|a| ms.iter().map(|b| a.adjoint() * b).collect()).collect()
    };
    let g_psi = grams(psis);
    let g_phi = grams(phis);
    // tr(M_i† M_j M_k† M_i) = tr(G_ij G_ki)
    let quartic = |g: &Vec<Vec<ComplexMatrix<T>>>, i: usize, j: usize, k: usize| (&g[i][j] * &g[k][i]).trace();

    let floor = T::lit(PHASE_TRACE_FLOOR);
    let slack = T::lit(PHASE_MODULUS_SLACK);
    let mut phases: Vec<Option<Cx<T>>> = vec![None; n];
    let mut class_of = vec![0; n];
    phases[0] = Some(cx_real(T::one()));
    let mut classes = 1;

    while phases.iter().any(Option::is_none) {
        let mut progressed = false;
        for j in 0..n {
            if phases[j].is_some() {
                continue;
            }
            let mut best: Option<(T, usize, usize)> = None;
            for k in (0..n).filter(|&k| phases[k].is_some()) {
                for i in 0..n {
                    let mag = linalg_modulus(quartic(&g_phi, i, j, k));
                    if mag > floor && best.is_none_or(|(m, _, _)| mag > m) {
                        best = Some((mag, i, k));
                    }
                }
            }
            if let Some((_, i, k)) = best {
                let ratio = quartic(&g_psi, i, j, k) / quartic(&g_phi, i, j, k);
                let modulus = linalg_modulus(ratio);
                if (modulus - T::one()).abs() > slack {
                    return Ok(PhaseOutcome::Unresolved {
                        index: j,
                        modulus: modulus.as_f64(),
                    });
                }
                let lambda = phases[k].expect("resolved") * ratio / cx_real(modulus);
                phases[j] = Some(lambda);
                class_of[j] = class_of[k];
                progressed = true;
            }
        }
        if !progressed {
            let root = phases.iter().position(Option::is_none).expect("some unresolved");
            phases[root] = Some(cx_real(T::one()));
            class_of[root] = classes;
            classes += 1;
        }
    }
    Ok(PhaseOutcome::Resolved(PhaseResolution {
        phases: phases.into_iter().map(|p| p.expect("all resolved")).collect(),
        class_of,
        classes,
    }))
}

fn linalg_modulus<T: Real>(z: Cx<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

/// Options for the generic mixed-state reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseGrid {
    /// Points per circle tried for each phase class that the traces leave free;
    /// zero disables the search.
    pub points: usize,
    /// Largest number of grid candidates attempted.
    pub max_candidates: usize,
}

impl Default for PhaseGrid {
    fn default() -> Self {
        Self {
            points: 12,
            max_candidates: 100_000,
        }
    }
}

/// Decides LU equivalence `(U ⊗ V) ρ (U ⊗ V)† = σ` for operators with
/// pairwise distinct eigenvalues, by matching spectra and then deciding
/// simultaneous equivalence of the phase-aligned eigenvectors.
pub fn generic_mixed_lu<T: Real>(
    rho: &DensityOperator<T>,
    sigma: &DensityOperator<T>,
    cfg: &SamplerConfig,
    tol: &Tolerances<T>,
    grid: PhaseGrid,
) -> Result<UepVerdict<T>> {
    if (rho.d1, rho.d2) != (sigma.d1, sigma.d2) {
        return Err(UepError::ShapeMismatch("operators act on different spaces".into()));
    }
    let (d1, d2) = (rho.d1, rho.d2);
    let er = hermitian_eigendecomposition(&rho.matrix, tol)?;
    let es = hermitian_eigendecomposition(&sigma.matrix, tol)?;
    for (name, e) in [("rho", &er), ("sigma", &es)] {
        if let Some(w) = e.values.windows(2).find(|w| w[0] - w[1] <= tol.degenerate_gap) {
            return Err(UepError::NotGeneric(format!(
                "{name} has eigenvalues {} and {} closer than {}",
                w[0], w[1], tol.degenerate_gap
            )));
        }
    }
    let gap = er
        .values
        .iter()
        .zip(&es.values)
        .map(|(a, b)| (*a - *b).abs())
        .fold(T::zero(), |a, b| a.max(b));
    if gap > tol.residual_abs {
        return Ok(UepVerdict::exact_no(format!(
            "spectra differ by {:.3e}",
            gap.as_f64()
        )));
    }

    let column_states = |q: &ComplexMatrix<T>| -> Result<Vec<PureState<T>>> {
        (0..q.ncols()).map(|k| PureState::new(d1, d2, q.column(k).into_owned())).collect()
    };
    let psi_states = column_states(&er.vectors)?;
    let psis: Vec<_> = psi_states.iter().map(state_to_matrix).collect();
    let phis: Vec<_> = column_states(&es.vectors)?.iter().map(state_to_matrix).collect();

    let resolution = match resolve_eigenvector_phases(&psis, &phis)? {
        PhaseOutcome::Resolved(r) => r,
        PhaseOutcome::Unresolved { index, modulus } => {
            return Ok(UepVerdict::inconclusive(format!(
                "eigenvector phase {index} unresolved (trace ratio modulus {modulus:.6})"
            )));
        }
    };

    let free = resolution.classes - 1;
    if free > 0 && grid.points == 0 {
        return Ok(UepVerdict::inconclusive(format!(
            "{free} phase classes left free and the grid search is disabled"
        )));
    }
    let candidates = (grid.points.max(1) as f64).powi(free as i32);
    if candidates > grid.max_candidates as f64 {
        return Ok(UepVerdict::inconclusive(format!(
            "{candidates} phase grid candidates exceed the limit of {}",
            grid.max_candidates
        )));
    }
    let candidates = candidates as usize;
    let step = T::two_pi() / T::lit(grid.points.max(1) as f64);

    let mut last = None;
    for index in 0..candidates {
        let mut rest = index;
        let extra: Vec<T> = (0..free)
            .map(|_| {
                let digit = rest % grid.points.max(1);
                rest /= grid.points.max(1);
                step * T::lit(digit as f64)
            })
            .collect();
        let targets: Vec<PureState<T>> = resolution
            .rephase(&phis, &extra)
            .iter()
            .map(matrix_to_state)
            .collect::<Result<_>>()?;
        let verdict = simultaneous_lu_pure(&psi_states, &targets, cfg, tol)?;
        if verdict.verdict == Verdict::Yes {
            return Ok(check_density_certificate(verdict, rho, sigma, tol));
        }
        last = Some(verdict);
    }
    let last = last.expect("at least one candidate");
    if free == 0 {
        return Ok(last);
    }
    Ok(UepVerdict::inconclusive(format!(
        "none of {candidates} phase grid candidates produced a certificate"
    )))
}

/// Final check `‖(U ⊗ V) ρ (U ⊗ V)† − σ‖_F ≤ residual_abs · max(1, ‖σ‖_F)`.
fn check_density_certificate<T: Real>(
    mut verdict: UepVerdict<T>,
    rho: &DensityOperator<T>,
    sigma: &DensityOperator<T>,
    tol: &Tolerances<T>,
) -> UepVerdict<T> {
    let w = verdict.u.as_ref().expect("certificate").kronecker(verdict.v.as_ref().expect("certificate"));
    let residual = (&w * &rho.matrix * w.adjoint() - &sigma.matrix).norm();
    verdict.residual = residual;
    if residual > tol.residual_bound(sigma.matrix.norm()) {
        verdict.verdict = Verdict::Inconclusive;
        verdict.certainty = Certainty::Probabilistic;
        verdict.diagnostic = Some(format!("density residual {:.3e}", residual.as_f64()));
    }
    verdict
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    fn state(d1: usize, d2: usize, amps: &[(f64, f64)]) -> PureState<f64> {
        PureState::new(d1, d2, DVector::from_iterator(amps.len(), amps.iter().map(|(a, b)| cx(*a, *b)))).unwrap()
    }

    #[test]
    fn maximally_entangled_state_is_scaled_identity() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = state(2, 2, &[(h, 0.0), (0.0, 0.0), (0.0, 0.0), (h, 0.0)]);
        let m = state_to_matrix(&s);
        assert!((m - linalg::identity::<f64>(2) * cx(h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn product_basis_state() {
        let s = state(2, 3, &[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        let m = state_to_matrix(&s);
        assert_eq!(m.shape(), (2, 3));
        assert_eq!(m[(0, 0)], cx(1.0, 0.0));
        assert_eq!(m.iter().filter(|z| **z != cx(0.0, 0.0)).count(), 1);
    }

    #[test]
    fn singlet_matrix() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = state(2, 2, &[(0.0, 0.0), (h, 0.0), (-h, 0.0), (0.0, 0.0)]);
        let m = state_to_matrix(&s);
        assert_eq!(m[(0, 1)], cx(h, 0.0));
        assert_eq!(m[(1, 0)], cx(-h, 0.0));
        assert_eq!(m[(0, 0)], cx(0.0, 0.0));
    }

    #[test]
    fn unnormalised_state_is_rescaled() {
        let s = state(1, 2, &[(3.0, 0.0), (0.0, 4.0)]);
        assert!(s.was_rescaled());
        assert!((s.amplitudes().norm() - 1.0).abs() < 1e-15);
        assert!(PureState::<f64>::new(1, 2, DVector::zeros(2)).is_err());
        assert!(PureState::<f64>::new(2, 2, DVector::zeros(3)).is_err());
    }

    #[test]
    fn density_operator_validation() {
        let t = Tolerances::default();
        let mixed = linalg::identity::<f64>(4) * cx(0.25, 0.0);
        assert!(DensityOperator::new(2, 2, mixed.clone(), &t).is_ok());
        assert!(DensityOperator::new(2, 2, &mixed * cx(2.0, 0.0), &t).is_err());
        let mut bad = mixed.clone();
        bad[(0, 1)] = cx(0.1, 0.0);
        assert!(matches!(DensityOperator::new(2, 2, bad, &t), Err(UepError::NotHermitian(_))));
        let neg = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![cx(1.5, 0.0), cx(-0.5, 0.0)]));
        assert!(DensityOperator::new(1, 2, neg, &t).is_err());
        assert!(DensityOperator::new(2, 3, mixed, &t).is_err());
    }

    #[test]
    fn identical_phases_resolve_to_one() {
        let a = linalg::from_row_major(2, 2, vec![cx(1.0, 0.5), cx(0.2, 0.0), cx(-0.3, 0.1), cx(0.7, 0.0)]).unwrap();
        let b = linalg::from_row_major(2, 2, vec![cx(0.1, 0.0), cx(0.9, -0.4), cx(0.6, 0.0), cx(0.0, 0.3)]).unwrap();
        let list = vec![a, b];
        match resolve_eigenvector_phases(&list, &list).unwrap() {
            PhaseOutcome::Resolved(r) => {
                assert_eq!(r.classes, 1);
                for p in r.phases {
                    assert!((p - cx(1.0, 0.0)).norm() < 1e-12);
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn orthogonal_product_vectors_form_separate_classes() {
        let e = |j: usize, k: usize| {
            let mut m = ComplexMatrix::<f64>::zeros(2, 2);
            m[(j, k)] = cx(1.0, 0.0);
            m
        };
        let list = vec![e(0, 0), e(1, 1)];
        match resolve_eigenvector_phases(&list, &list).unwrap() {
            PhaseOutcome::Resolved(r) => {
                assert_eq!(r.classes, 2);
                assert_eq!(r.class_of, vec![0, 1]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mismatched_moduli_are_unresolved() {
        let one = |z: f64| linalg::from_row_major(1, 1, vec![cx(z, 0.0)]).unwrap();
        let psis = vec![one(1.0), one(0.5)];
        let phis = vec![one(1.0), one(1.0)];
        assert!(matches!(
            resolve_eigenvector_phases(&psis, &phis).unwrap(),
            PhaseOutcome::Unresolved { index: 1, .. }
        ));
    }

    #[test]
    fn local_factor_recovers_block() {
        let m = linalg::from_row_major(2, 2, vec![cx(1.0, 2.0), cx(3.0, 0.0), cx(0.0, -1.0), cx(0.5, 0.5)]).unwrap();
        let full = m.kronecker(&linalg::identity(3));
        assert!((local_factor(&full, 2, 3) - m).norm() < 1e-15);
    }

    #[test]
    fn maximally_mixed_is_unilocally_invariant() {
        let t = Tolerances::default();
        let rho = DensityOperator::new(2, 2, linalg::identity::<f64>(4) * cx(0.25, 0.0), &t).unwrap();
        let v = unilocal_mixed_equivalence(&[rho.clone()], &[rho], &SamplerConfig::with_seed(1), &t).unwrap();
        assert_eq!(v.verdict, Verdict::Yes);
        assert!(linalg::unitarity_defect(v.u.as_ref().unwrap()) < 1e-10);
    }

    #[test]
    fn identical_state_lists_are_equivalent() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let states = vec![
            state(2, 2, &[(h, 0.0), (0.0, 0.0), (0.0, 0.0), (h, 0.0)]),
            state(2, 2, &[(0.6, 0.0), (0.0, 0.8), (0.0, 0.0), (0.0, 0.0)]),
        ];
        let v = simultaneous_lu_pure(&states, &states, &SamplerConfig::with_seed(7), &Tolerances::default()).unwrap();
        assert_eq!(v.verdict, Verdict::Yes);
        assert!(v.residual <= 1e-8);
    }

    #[test]
    fn different_schmidt_coefficients_are_exact_no() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let a = state(2, 2, &[(h, 0.0), (0.0, 0.0), (0.0, 0.0), (h, 0.0)]);
        let b = state(2, 2, &[(0.6, 0.0), (0.0, 0.0), (0.0, 0.0), (0.8, 0.0)]);
        let v = simultaneous_lu_pure(&[a], &[b], &SamplerConfig::default(), &Tolerances::default()).unwrap();
        assert_eq!((v.verdict, v.certainty), (Verdict::No, Certainty::Exact));
    }

    #[test]
    fn degenerate_spectrum_is_not_generic() {
        let t = Tolerances::default();
        let rho = DensityOperator::new(2, 2, linalg::identity::<f64>(4) * cx(0.25, 0.0), &t).unwrap();
        assert!(matches!(
            generic_mixed_lu(&rho, &rho, &SamplerConfig::default(), &t, PhaseGrid::default()),
            Err(UepError::NotGeneric(_))
        ));
    }

    #[test]
    fn diagonal_generic_state_uses_phase_grid() {
        // Product eigenvectors leave every phase class disconnected.
        let t = Tolerances::default();
        let diag = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![
            cx(0.4, 0.0),
            cx(0.3, 0.0),
            cx(0.2, 0.0),
            cx(0.1, 0.0),
        ]));
        let rho = DensityOperator::new(2, 2, diag, &t).unwrap();
        let v = generic_mixed_lu(&rho, &rho, &SamplerConfig::with_seed(3), &t, PhaseGrid::default()).unwrap();
        assert_eq!(v.verdict, Verdict::Yes);
        let off = generic_mixed_lu(
            &rho,
            &rho,
            &SamplerConfig::with_seed(3),
            &t,
            PhaseGrid {
                points: 0,
                ..PhaseGrid::default()
            },
        )
        .unwrap();
        assert_eq!(off.verdict, Verdict::Inconclusive);
    }
}
