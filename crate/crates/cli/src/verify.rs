//! Standalone certificate checker. It recomputes every quantity from the
//! instance file with plain matrix arithmetic and does not call the solver.

use std::path::PathBuf;

use clap::Args;
use uep::{c64, ComplexMatrix64};

use crate::decide::{read_instance, resolve_mode};
use crate::format::{matrix, parse_json, vector, AlgebraJson, Certificate, InstanceFile, JsonMatrix, Mode};
use crate::Failure;

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Instance file.
    pub instance: PathBuf,
    /// Verdict document or witness file holding `U` and `V`.
    pub certificate: PathBuf,
    /// Largest accepted residual or defect.
    #[arg(long, default_value_t = 1e-8)]
    pub tol_residual: f64,
    /// Pipeline the certificate answers; defaults to the instance's `mode`.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
}

fn input(e: crate::format::InputError) -> Failure {
    Failure::Input(e.to_string())
}

fn identity(d: usize) -> ComplexMatrix64 {
    ComplexMatrix64::identity(d, d)
}

fn unitarity(u: &ComplexMatrix64) -> f64 {
    (u.adjoint() * u - identity(u.ncols())).norm()
}

fn relative(diff: f64, target: &ComplexMatrix64) -> f64 {
    diff / target.norm().max(1.0)
}

/// Distance from `M ⊗ I_b` structure, relative to `‖M‖`.
fn factor_residual(m: &ComplexMatrix64, a: usize, b: usize) -> f64 {
    let mut local = ComplexMatrix64::zeros(a, a);
    for j in 0..a {
        for k in 0..a {
            let trace: c64 = (0..b).map(|l| m[(j * b + l, k * b + l)]).sum();
            local[(j, k)] = trace / c64::new(b as f64, 0.0);
        }
    }
    relative((m - local.kronecker(&identity(b))).norm(), m)
}

/// Distance from a span, by Gram–Schmidt on the vectorised basis.
fn span_residual(m: &ComplexMatrix64, basis: &[ComplexMatrix64]) -> f64 {
    let mut frame: Vec<nalgebra::DVector<c64>> = Vec::new();
    for b in basis {
        let mut v = nalgebra::DVector::from_column_slice(b.as_slice());
        for _ in 0..2 {
            for q in &frame {
                let c = q.dotc(&v);
                v -= q * c;
            }
        }
        let n = v.norm();
        if n > 1e-12 {
            frame.push(v / c64::new(n, 0.0));
        }
    }
    let mut r = nalgebra::DVector::from_column_slice(m.as_slice());
    for q in &frame {
        let c = q.dotc(&r);
        r -= q * c;
    }
    relative(r.norm(), m)
}

fn membership(m: &ComplexMatrix64, desc: Option<&AlgebraJson>, field: &str) -> Result<f64, Failure> {
    let d = m.nrows();
    Ok(match desc.unwrap_or(&AlgebraJson::Full) {
        AlgebraJson::Full => 0.0,
        AlgebraJson::Factor { a, b } => {
            if a * b != d {
                return Err(Failure::Algebra(format!("field `{field}`: factor {a}x{b} on dimension {d}")));
            }
            factor_residual(m, *a, *b)
        }
        AlgebraJson::Span { basis } => {
            let mats = basis
                .iter()
                .enumerate()
                .map(|(k, b)| matrix(b, d, d, &format!("{field}.basis[{k}]")))
                .collect::<Result<Vec<_>, _>>()
                .map_err(input)?;
            span_residual(m, &mats)
        }
    })
}

fn certificate_matrix(m: Option<&JsonMatrix>, d: usize, name: &str) -> Result<ComplexMatrix64, Failure> {
    let m = m.ok_or_else(|| Failure::Input(format!("certificate has no `{name}` (was the verdict YES?)")))?;
    matrix(m, d, d, name).map_err(input)
}

fn unit(v: Vec<c64>) -> nalgebra::DVector<c64> {
    let v = nalgebra::DVector::from_vec(v);
    let n = v.norm();
    if n > 0.0 {
        v / c64::new(n, 0.0)
    } else {
        v
    }
}

fn pairs(file: &InstanceFile) -> Result<Vec<(ComplexMatrix64, ComplexMatrix64)>, Failure> {
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

fn densities(ms: &[JsonMatrix], n: usize, name: &str) -> Result<Vec<ComplexMatrix64>, Failure> {
    ms.iter()
        .enumerate()
        .map(|(k, m)| matrix(m, n, n, &format!("{name}[{k}]")).map_err(input))
        .collect()
}

/// Named checks; the certificate passes when every value is within tolerance.
pub fn checks(file: &InstanceFile, cert: &Certificate, mode: Mode) -> Result<Vec<(String, f64)>, Failure> {
    let (d1, d2) = (file.d1, file.d2);
    let n = d1 * d2;
    let mut out = Vec::new();
    match mode {
        Mode::MatrixPairs => {
            let u = certificate_matrix(cert.u.as_ref(), d1, "U")?;
            let v = certificate_matrix(cert.v.as_ref(), d2, "V")?;
            out.push(("unitarity U".into(), unitarity(&u)));
            out.push(("unitarity V".into(), unitarity(&v)));
            out.push(("membership U in G1".into(), membership(&u, file.g1.as_ref(), "G1")?));
            out.push(("membership V in G2".into(), membership(&v, file.g2.as_ref(), "G2")?));
            for (k, (x, y)) in pairs(file)?.iter().enumerate() {
                out.push((format!("pair {k}"), relative((&u * x * v.adjoint() - y).norm(), y)));
            }
        }
        Mode::Matpoly => {
            let a = certificate_matrix(cert.u.as_ref(), d1, "U")?;
            let b = certificate_matrix(cert.v.as_ref(), d2, "V")?;
            // Singular factors fail outright; otherwise only the coefficient residuals matter.
            let invertible = |m: &ComplexMatrix64| {
                let s = m.singular_values();
                s.max() > 0.0 && s.min() / s.max() > 1e-12
            };
            for (name, m) in [("singular A", &a), ("singular B", &b)] {
                out.push((name.into(), if invertible(m) { 0.0 } else { f64::INFINITY }));
            }
            if let Some(b_inv) = b.clone().try_inverse() {
                for (k, (x, y)) in pairs(file)?.iter().enumerate() {
                    out.push((format!("coefficient {k}"), relative((&a * x * &b_inv - y).norm(), y)));
                }
            }
        }
        Mode::PureSets => {
            let u = certificate_matrix(cert.u.as_ref(), d1, "U")?;
            let v = certificate_matrix(cert.v.as_ref(), d2, "V")?;
            out.push(("unitarity U".into(), unitarity(&u)));
            out.push(("unitarity V".into(), unitarity(&v)));
            if file.states_in.len() != file.states_out.len() {
                return Err(Failure::Input("field `states_out`: length differs from `states_in`".into()));
            }
            let w = u.kronecker(&v);
            for (k, (a, b)) in file.states_in.iter().zip(&file.states_out).enumerate() {
                let a = unit(vector(a, n, &format!("states_in[{k}]")).map_err(input)?);
                let b = unit(vector(b, n, &format!("states_out[{k}]")).map_err(input)?);
                out.push((format!("state {k}"), (&w * a - b).norm()));
            }
        }
        Mode::UnilocalMixed => {
            let u = certificate_matrix(cert.u.as_ref(), d1, "U")?;
            out.push(("unitarity U".into(), unitarity(&u)));
            if let Some(v) = cert.v.as_ref() {
                let v = matrix(v, d1, d1, "V").map_err(input)?;
                out.push(("left/right agreement".into(), (&u - v).norm()));
            }
            let w = u.kronecker(&identity(d2));
            let rhos = densities(&file.rhos, n, "rhos")?;
            let sigmas = densities(&file.sigmas, n, "sigmas")?;
            if rhos.len() != sigmas.len() {
                return Err(Failure::Input("field `sigmas`: length differs from `rhos`".into()));
            }
            for (k, (r, s)) in rhos.iter().zip(&sigmas).enumerate() {
                out.push((format!("operator {k}"), relative((&w * r * w.adjoint() - s).norm(), s)));
            }
        }
        Mode::GenericMixed => {
            let u = certificate_matrix(cert.u.as_ref(), d1, "U")?;
            let v = certificate_matrix(cert.v.as_ref(), d2, "V")?;
            out.push(("unitarity U".into(), unitarity(&u)));
            out.push(("unitarity V".into(), unitarity(&v)));
            let get = |m: &Option<JsonMatrix>, name: &str| {
                let m = m.as_ref().ok_or_else(|| Failure::Input(format!("field `{name}`: missing")))?;
                matrix(m, n, n, name).map_err(input)
            };
            let (rho, sigma) = (get(&file.rho, "rho")?, get(&file.sigma, "sigma")?);
            let w = u.kronecker(&v);
            out.push(("density".into(), relative((&w * rho * w.adjoint() - &sigma).norm(), &sigma)));
        }
    }
    Ok(out)
}

/// Returns whether the certificate passes.
pub fn cmd_verify(args: &VerifyArgs) -> Result<bool, Failure> {
    let file = read_instance(&args.instance)?;
    let text = std::fs::read_to_string(&args.certificate)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", args.certificate.display())))?;
    let cert: Certificate =
        parse_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", args.certificate.display())))?;
    let mode = resolve_mode(args.mode, &file);
    let results = checks(&file, &cert, mode)?;
    let worst = results.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    for (name, value) in &results {
        println!("{name:<24} {value:.3e}");
    }
    println!("{:<24} {worst:.3e}", "max residual");
    Ok(worst <= args.tol_residual)
}
