use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use nalgebra::DVector;
use uep::{
    decide_invertible_equivalence, decide_uep, factor_algebra, full_algebra, generic_mixed_lu, simultaneous_lu_pure,
    unilocal_mixed_equivalence, Certainty, ComplexMatrix64, DensityOperator64, MatrixAlgebra64, MatrixPolynomial,
    PhaseGrid, PureState64, SamplerConfig, Tolerances64, UepError, UepInstance64, UepVerdict64, Verdict,
};

use crate::format::{
    matrix, parse_json, to_json_matrix, vector, AlgebraJson, InputError, InstanceFile, JsonMatrix, Mode, Timing,
    VerdictDocument,
};
use crate::Failure;

#[derive(Debug, Args)]
pub struct DecideArgs {
    /// Instance file.
    pub path: PathBuf,
    /// Pipeline to run; defaults to the file's `mode` field, then matrix-pairs.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Sampling trials T.
    #[arg(long, default_value_t = 32)]
    pub trials: usize,
    /// Coefficients are drawn from {1, ..., S}.
    #[arg(long, default_value_t = 1_000_000)]
    pub sample_max: u64,
    /// Relative singular-value threshold for rank and invertibility.
    #[arg(long, default_value_t = 1e-10)]
    pub tol_rank: f64,
    /// Residual threshold for accepting a certificate.
    #[arg(long, default_value_t = 1e-8)]
    pub tol_residual: f64,
    /// Sampler seed (recorded in the verdict).
    #[arg(long)]
    pub seed: u64,
    /// Grid points per free eigenvector phase class (generic-mixed only).
    #[arg(long, default_value_t = 12)]
    pub phase_grid: usize,
    /// Print failure bounds and progress to stderr.
    #[arg(long, short)]
    pub verbose: bool,
    /// Write the verdict document here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parsed and validated input for one pipeline.
pub enum Problem {
    Pairs(UepInstance64),
    Matpoly(MatrixPolynomial<f64>, MatrixPolynomial<f64>),
    Pure(Vec<PureState64>, Vec<PureState64>),
    Unilocal(Vec<DensityOperator64>, Vec<DensityOperator64>),
    Generic(DensityOperator64, DensityOperator64),
}

impl Problem {
    /// Dimensions of the matrices the sampler works on.
    fn sampler_dims(&self) -> (usize, usize) {
        match self {
            Problem::Pairs(inst) => (inst.d1(), inst.d2()),
            Problem::Matpoly(p, _) => p.shape(),
            Problem::Pure(s, _) => (s[0].d1(), s[0].d2()),
            Problem::Unilocal(r, _) => (r[0].d1() * r[0].d2(), r[0].d1() * r[0].d2()),
            Problem::Generic(r, _) => (r.d1(), r.d2()),
        }
    }
}

pub fn read_instance(path: &PathBuf) -> Result<InstanceFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

pub fn resolve_mode(flag: Option<Mode>, file: &InstanceFile) -> Mode {
    if let (Some(f), Some(m)) = (flag, file.mode) {
        if f != m {
            log::warn!("--mode {f} overrides the file's mode {m}");
        }
    }
    flag.or(file.mode).unwrap_or(Mode::MatrixPairs)
}

fn input(e: InputError) -> Failure {
    Failure::Input(e.to_string())
}

/// Library errors raised while assembling `field`.
fn library(field: &str, e: UepError) -> Failure {
    match e {
        UepError::InvalidAlgebra(m) => Failure::Algebra(format!("field `{field}`: {m}")),
        UepError::InvalidConfig(m) => Failure::Usage(m),
        other => Failure::Input(format!("field `{field}`: {other}")),
    }
}

pub fn algebra(desc: Option<&AlgebraJson>, d: usize, field: &str, tol: &Tolerances64) -> Result<MatrixAlgebra64, Failure> {
    match desc.unwrap_or(&AlgebraJson::Full) {
        AlgebraJson::Full => full_algebra(d).map_err(|e| library(field, e)),
        AlgebraJson::Factor { a, b } => {
            if a * b != d {
                return Err(Failure::Algebra(format!(
                    "field `{field}`: factor {a}x{b} does not act on dimension {d}"
                )));
            }
            factor_algebra(*a, *b).map_err(|e| library(field, e))
        }
        AlgebraJson::Span { basis } => {
            let mats = basis
                .iter()
                .enumerate()
                .map(|(k, m)| matrix(m, d, d, &format!("{field}.basis[{k}]")))
                .collect::<Result<Vec<_>, _>>()
                .map_err(input)?;
            MatrixAlgebra64::from_span(d, mats, tol).map_err(|e| library(field, e))
        }
    }
}

fn density_list(ms: &[JsonMatrix], d1: usize, d2: usize, name: &str, tol: &Tolerances64) -> Result<Vec<DensityOperator64>, Failure> {
    ms.iter()
        .enumerate()
        .map(|(k, m)| density(m, d1, d2, &format!("{name}[{k}]"), tol))
        .collect()
}

fn density(m: &JsonMatrix, d1: usize, d2: usize, field: &str, tol: &Tolerances64) -> Result<DensityOperator64, Failure> {
    let n = d1 * d2;
    let mat = matrix(m, n, n, field).map_err(input)?;
    DensityOperator64::new(d1, d2, mat, tol).map_err(|e| library(field, e))
}

fn require(present: bool, field: &str, mode: Mode) -> Result<(), Failure> {
    if present {
        Ok(())
    } else {
        Err(Failure::Input(format!("field `{field}`: required for mode {mode}")))
    }
}

pub fn pair_matrices(file: &InstanceFile) -> Result<Vec<(ComplexMatrix64, ComplexMatrix64)>, Failure> {
    file.pairs
        .iter()
        .enumerate()
        .map(|(k, p)| {
            Ok((
                matrix(&p.x, file.d1, file.d2, &format!("pairs[{k}].X")).map_err(input)?,
                matrix(&p.y, file.d1, file.d2, &format!("pairs[{k}].Y")).map_err(input)?,
            ))
        })
        .collect()
}

pub fn state_list(vs: &[Vec<[f64; 2]>], d1: usize, d2: usize, name: &str) -> Result<Vec<PureState64>, Failure> {
    vs.iter()
        .enumerate()
        .map(|(k, v)| {
            let field = format!("{name}[{k}]");
            let amps = vector(v, d1 * d2, &field).map_err(input)?;
            PureState64::new(d1, d2, DVector::from_vec(amps)).map_err(|e| library(&field, e))
        })
        .collect()
}

pub fn load_problem(file: &InstanceFile, mode: Mode, tol: &Tolerances64) -> Result<Problem, Failure> {
    let (d1, d2) = (file.d1, file.d2);
    if d1 == 0 || d2 == 0 {
        return Err(Failure::Input("field `d1`/`d2`: dimensions must be positive".into()));
    }
    match mode {
        Mode::MatrixPairs => {
            let g1 = algebra(file.g1.as_ref(), d1, "G1", tol)?;
            let g2 = algebra(file.g2.as_ref(), d2, "G2", tol)?;
            let inst = UepInstance64::new(pair_matrices(file)?, g1, g2).map_err(|e| library("pairs", e))?;
            Ok(Problem::Pairs(inst))
        }
        Mode::Matpoly => {
            require(!file.pairs.is_empty(), "pairs", mode)?;
            let (xs, ys): (Vec<_>, Vec<_>) = pair_matrices(file)?.into_iter().unzip();
            let p = MatrixPolynomial::new(xs).map_err(|e| library("pairs", e))?;
            let q = MatrixPolynomial::new(ys).map_err(|e| library("pairs", e))?;
            Ok(Problem::Matpoly(p, q))
        }
        Mode::PureSets => {
            require(!file.states_in.is_empty(), "states_in", mode)?;
            if file.states_in.len() != file.states_out.len() {
                return Err(Failure::Input(format!(
                    "field `states_out`: {} states for {} inputs",
                    file.states_out.len(),
                    file.states_in.len()
                )));
            }
            Ok(Problem::Pure(
                state_list(&file.states_in, d1, d2, "states_in")?,
                state_list(&file.states_out, d1, d2, "states_out")?,
            ))
        }
        Mode::UnilocalMixed => {
            require(!file.rhos.is_empty(), "rhos", mode)?;
            if file.rhos.len() != file.sigmas.len() {
                return Err(Failure::Input(format!(
                    "field `sigmas`: {} operators for {} inputs",
                    file.sigmas.len(),
                    file.rhos.len()
                )));
            }
            Ok(Problem::Unilocal(
                density_list(&file.rhos, d1, d2, "rhos", tol)?,
                density_list(&file.sigmas, d1, d2, "sigmas", tol)?,
            ))
        }
        Mode::GenericMixed => {
            let rho = file.rho.as_ref().ok_or_else(|| Failure::Input("field `rho`: required for mode generic-mixed".into()))?;
            let sigma = file
                .sigma
                .as_ref()
                .ok_or_else(|| Failure::Input("field `sigma`: required for mode generic-mixed".into()))?;
            Ok(Problem::Generic(density(rho, d1, d2, "rho", tol)?, density(sigma, d1, d2, "sigma", tol)?))
        }
    }
}

pub fn run_problem(problem: &Problem, cfg: &SamplerConfig, tol: &Tolerances64, grid: PhaseGrid) -> Result<UepVerdict64, UepError> {
    match problem {
        Problem::Pairs(inst) => decide_uep(inst, cfg, tol),
        Problem::Matpoly(p, q) => decide_invertible_equivalence(p, q, cfg, tol),
        Problem::Pure(a, b) => simultaneous_lu_pure(a, b, cfg, tol),
        Problem::Unilocal(a, b) => unilocal_mixed_equivalence(a, b, cfg, tol),
        Problem::Generic(a, b) => generic_mixed_lu(a, b, cfg, tol, grid),
    }
}

pub fn verdict_label(v: Verdict) -> &'static str {
    match v {
        Verdict::Yes => "YES",
        Verdict::No => "NO",
        Verdict::Inconclusive => "INCONCLUSIVE",
    }
}

fn document(v: &UepVerdict64, mode: Mode, seed: u64, seconds: f64) -> VerdictDocument {
    VerdictDocument {
        verdict: verdict_label(v.verdict).into(),
        certainty: match v.certainty {
            Certainty::Exact => "exact",
            Certainty::Probabilistic => "probabilistic",
        }
        .into(),
        mode,
        seed,
        u: v.u.as_ref().map(to_json_matrix),
        v: v.v.as_ref().map(to_json_matrix),
        residual: v.residual,
        trials_used: v.trials_used,
        failure_bound: v.failure_bound,
        coarse_failure_bound: v.coarse_failure_bound,
        solution_dimension: v.solution_dimension,
        diagnostic: v.diagnostic.clone(),
        timing: Timing { seconds },
    }
}

pub fn cmd_decide(args: &DecideArgs) -> Result<Verdict, Failure> {
    let tol = Tolerances64::new(args.tol_rank, args.tol_residual, Tolerances64::default().degenerate_gap)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let cfg = SamplerConfig {
        sample_max: args.sample_max,
        trials: args.trials,
        seed: args.seed,
    };
    let grid = PhaseGrid {
        points: args.phase_grid,
        ..PhaseGrid::default()
    };
    let file = read_instance(&args.path)?;
    let mode = resolve_mode(args.mode, &file);
    let problem = load_problem(&file, mode, &tol)?;

    let (d1, d2) = problem.sampler_dims();
    if args.verbose {
        eprintln!("mode {mode}, sampler dimensions {d1}x{d2}, S = {}, T = {}", cfg.sample_max, cfg.trials);
        eprintln!(
            "failure bound (2(d1+d2)/S)^T = {:.3e}, coarse (2 max(d1,d2)^2/S)^T = {:.3e}",
            cfg.failure_bound(d1, d2),
            cfg.coarse_failure_bound(d1, d2)
        );
    }

    let start = Instant::now();
    let verdict = match run_problem(&problem, &cfg, &tol, grid) {
        Ok(v) => v,
        Err(UepError::NoConvergence(what)) => UepVerdict64::inconclusive(format!("{what} did not converge")),
        Err(e) => return Err(library("<instance>", e)),
    };
    let seconds = start.elapsed().as_secs_f64();

    if args.verbose {
        eprintln!(
            "{} ({}) after {} trial(s), residual {:.3e}, solution dimension {:?}",
            verdict_label(verdict.verdict),
            if verdict.certainty == Certainty::Exact { "exact" } else { "probabilistic" },
            verdict.trials_used,
            verdict.residual,
            verdict.solution_dimension
        );
        if let Some(d) = &verdict.diagnostic {
            eprintln!("{d}");
        }
    }

    let doc = document(&verdict, mode, args.seed, seconds);
    let text = serde_json::to_string_pretty(&doc).expect("verdict documents serialise") + "\n";
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(verdict.verdict)
}
