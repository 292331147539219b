use std::path::PathBuf;

use clap::{ArgGroup, Args};
use uep::oracle::generators::{
    double_top_singular_value, ginibre, perturb_top_eigenvalue, random_generic_mixed_pair, random_lu_state_sets,
    random_no_instance, random_unilocal_sets, random_yes_instance, rng_from_seed,
};
use uep::quantum::{matrix_to_state, state_to_matrix};
use uep::{c64, AlgebraKind, ComplexMatrix64};

use crate::format::{to_json_matrix, to_json_vector, AlgebraJson, Certificate, InstanceFile, Mode, PairJson};
use crate::Failure;

/// Largest subsystem dimension accepted by `gen`.
const MAX_DIM: usize = 16;
/// Largest joint dimension for generated density operators.
const MAX_JOINT_DIM: usize = 36;

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("answer").required(true).args(["yes", "no"])))]
pub struct GenArgs {
    /// Generate an equivalent instance (with a planted witness).
    #[arg(long)]
    pub yes: bool,
    /// Generate an instance that fails an invariant check.
    #[arg(long)]
    pub no: bool,
    #[arg(long, value_enum, default_value_t = Mode::MatrixPairs)]
    pub mode: Mode,
    #[arg(long)]
    pub d1: usize,
    #[arg(long)]
    pub d2: usize,
    /// Number of pairs (or states / operators) minus one.
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long)]
    pub seed: u64,
    /// Algebra for the left unitary: `full` or `factor:a,b`.
    #[arg(long, default_value = "full")]
    pub g1: String,
    /// Algebra for the right unitary: `full` or `factor:a,b`.
    #[arg(long, default_value = "full")]
    pub g2: String,
    /// Write the instance here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the planted (U, V) of a YES instance here.
    #[arg(long)]
    pub witness: Option<PathBuf>,
}

fn parse_kind(text: &str, d: usize, flag: &str) -> Result<AlgebraKind, Failure> {
    if text == "full" {
        return Ok(AlgebraKind::Full);
    }
    let bad = || Failure::Usage(format!("{flag} expects `full` or `factor:a,b`, got `{text}`"));
    let rest = text.strip_prefix("factor:").ok_or_else(bad)?;
    let (a, b) = rest.split_once(',').ok_or_else(bad)?;
    let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a == 0 || b == 0 || a * b != d {
        return Err(Failure::Usage(format!("{flag} factor:{a},{b} does not act on dimension {d}")));
    }
    Ok(AlgebraKind::Factor { a, b })
}

fn descriptor(kind: AlgebraKind) -> AlgebraJson {
    match kind {
        AlgebraKind::Factor { a, b } => AlgebraJson::Factor { a, b },
        _ => AlgebraJson::Full,
    }
}

fn generated(e: uep::UepError) -> Failure {
    Failure::Usage(format!("cannot generate this instance: {e}"))
}

/// Zeroes the smallest singular value, lowering the rank by one.
fn drop_rank(m: &ComplexMatrix64) -> ComplexMatrix64 {
    let svd = m.clone().svd(true, true);
    let (u, v_t) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    let mut s = svd.singular_values.clone();
    let (k, _) = s.iter().enumerate().fold((0, f64::MAX), |best, (i, x)| if *x < best.1 { (i, *x) } else { best });
    s[k] = 0.0;
    let s = ComplexMatrix64::from_diagonal(&s.map(|x| c64::new(x, 0.0)));
    u * s * v_t
}

pub fn generate(args: &GenArgs) -> Result<(InstanceFile, Option<Certificate>), Failure> {
    let (d1, d2, m, seed) = (args.d1, args.d2, args.m, args.seed);
    if d1 == 0 || d2 == 0 || d1 > MAX_DIM || d2 > MAX_DIM {
        return Err(Failure::Usage(format!("--d1 and --d2 must lie in 1..={MAX_DIM}")));
    }
    let g1 = parse_kind(&args.g1, d1, "--g1")?;
    let g2 = parse_kind(&args.g2, d2, "--g2")?;
    if args.mode != Mode::MatrixPairs && (g1 != AlgebraKind::Full || g2 != AlgebraKind::Full) {
        return Err(Failure::Usage("--g1/--g2 apply to matrix-pairs only".into()));
    }
    if matches!(args.mode, Mode::UnilocalMixed | Mode::GenericMixed) && d1 * d2 > MAX_JOINT_DIM {
        return Err(Failure::Usage(format!("d1·d2 must not exceed {MAX_JOINT_DIM} for density operators")));
    }
    let mut file = InstanceFile::empty(args.mode, d1, d2, Some(seed));
    let cert = |u: &ComplexMatrix64, v: &ComplexMatrix64| Certificate {
        u: Some(to_json_matrix(u)),
        v: Some(to_json_matrix(v)),
    };

    let witness = match args.mode {
        Mode::MatrixPairs => {
            let (pairs, w) = if args.yes {
                let p = random_yes_instance::<f64>(d1, d2, m, g1, g2, seed).map_err(generated)?;
                (p.instance.pairs().to_vec(), Some(cert(&p.u, &p.v)))
            } else {
                if g1 != AlgebraKind::Full || g2 != AlgebraKind::Full {
                    return Err(Failure::Usage("--no instances use the full algebras".into()));
                }
                let (inst, _) = random_no_instance::<f64>(d1, d2, m, seed).map_err(generated)?;
                (inst.pairs().to_vec(), None)
            };
            file.pairs = pairs
                .iter()
                .map(|(x, y)| PairJson {
                    x: to_json_matrix(x),
                    y: to_json_matrix(y),
                })
                .collect();
            file.g1 = Some(descriptor(g1));
            file.g2 = Some(descriptor(g2));
            w
        }
        Mode::Matpoly => {
            let mut rng = rng_from_seed(seed);
            let a = ginibre::<f64, _>(d1, d1, &mut rng);
            let b = ginibre::<f64, _>(d2, d2, &mut rng);
            let b_inv = b.clone().try_inverse().ok_or_else(|| Failure::Usage("singular draw; try another seed".into()))?;
            let xs: Vec<_> = (0..=m).map(|_| ginibre::<f64, _>(d1, d2, &mut rng)).collect();
            let mut ys: Vec<_> = xs.iter().map(|x| &a * x * &b_inv).collect();
            if args.no {
                ys[0] = drop_rank(&ys[0]);
            }
            file.pairs = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| PairJson {
                    x: to_json_matrix(x),
                    y: to_json_matrix(y),
                })
                .collect();
            args.yes.then(|| cert(&a, &b))
        }
        Mode::PureSets => {
            if args.no && d1.min(d2) < 2 {
                return Err(Failure::Usage("--no pure-sets instances need d1, d2 >= 2".into()));
            }
            let mut p = random_lu_state_sets::<f64>(d1, d2, m + 1, seed);
            if args.no {
                let changed = double_top_singular_value(&state_to_matrix(&p.outputs[0])).map_err(generated)?;
                let norm = changed.norm();
                p.outputs[0] = matrix_to_state(&(changed / c64::new(norm, 0.0))).map_err(generated)?;
            }
            file.states_in = p.inputs.iter().map(|s| to_json_vector(s.amplitudes().iter())).collect();
            file.states_out = p.outputs.iter().map(|s| to_json_vector(s.amplitudes().iter())).collect();
            args.yes.then(|| cert(&p.u, &p.v))
        }
        Mode::UnilocalMixed => {
            let mut p = random_unilocal_sets::<f64>(d1, d2, m + 1, seed);
            if args.no {
                p.sigmas[0] = perturb_top_eigenvalue(&p.sigmas[0], 1e-3).map_err(generated)?;
            }
            file.rhos = p.rhos.iter().map(|r| to_json_matrix(r.matrix())).collect();
            file.sigmas = p.sigmas.iter().map(|r| to_json_matrix(r.matrix())).collect();
            args.yes.then(|| cert(&p.u, &p.u))
        }
        Mode::GenericMixed => {
            let mut p = random_generic_mixed_pair::<f64>(d1, d2, 1e-3, seed);
            if args.no {
                p.sigma = perturb_top_eigenvalue(&p.sigma, 1e-3).map_err(generated)?;
            }
            file.rho = Some(to_json_matrix(p.rho.matrix()));
            file.sigma = Some(to_json_matrix(p.sigma.matrix()));
            args.yes.then(|| cert(&p.u, &p.v))
        }
    };
    Ok((file, witness))
}

pub fn cmd_gen(args: &GenArgs) -> Result<(), Failure> {
    if args.witness.is_some() && args.no {
        return Err(Failure::Usage("--witness requires --yes".into()));
    }
    let (file, witness) = generate(args)?;
    let text = serde_json::to_string_pretty(&file).expect("instances serialise") + "\n";
    let write = |path: &PathBuf, text: &str| {
        std::fs::write(path, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
    };
    match &args.out {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    if let (Some(path), Some(w)) = (&args.witness, witness) {
        write(path, &(serde_json::to_string_pretty(&w).expect("certificates serialise") + "\n"))?;
    }
    Ok(())
}
