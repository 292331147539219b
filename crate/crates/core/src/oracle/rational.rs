//! Exact arithmetic over the Gaussian rationals `Q(i)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

/// Complex number with exact rational real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussianRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn from_integers(re: i64, im: i64) -> Self {
        Self {
            re: BigRational::from_integer(BigInt::from(re)),
            im: BigRational::from_integer(BigInt::from(im)),
        }
    }

    pub fn zero() -> Self {
        Self::from_integers(0, 0)
    }

    pub fn one() -> Self {
        Self::from_integers(1, 0)
    }

    pub fn i() -> Self {
        Self::from_integers(0, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// `|z|²`, exact.
    pub fn norm_sq(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Exact quotient; panics on division by zero.
    pub fn div(&self, other: &Self) -> Self {
        let den = other.norm_sq();
        assert!(!den.is_zero(), "division by zero Gaussian rational");
        let num = self * &other.conj();
        Self {
            re: num.re / &den,
            im: num.im / den,
        }
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        use num_traits::ToPrimitive;
        (
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}i", self.re, self.im)
    }
}

impl<'a> Add<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn add(self, o: &GaussianRational) -> GaussianRational {
        GaussianRational {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }
}

impl<'a> Sub<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn sub(self, o: &GaussianRational) -> GaussianRational {
        GaussianRational {
            re: &self.re - &o.re,
            im: &self.im - &o.im,
        }
    }
}

impl<'a> Mul<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn mul(self, o: &GaussianRational) -> GaussianRational {
        GaussianRational {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
}

impl Neg for GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational {
            re: -self.re,
            im: -self.im,
        }
    }
}

/// Dense matrix of Gaussian rationals, row-major.
pub type RationalMatrix = Vec<Vec<GaussianRational>>;

/// Fraction-free (Bareiss) elimination. Returns the rank and, for square
/// input, the determinant.
fn bareiss(m: &RationalMatrix) -> (usize, Option<GaussianRational>) {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut a = m.clone();
    let mut prev = GaussianRational::one();
    let mut rank = 0;
    let mut sign_flips = 0usize;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        if p != rank {
            a.swap(p, rank);
            sign_flips += 1;
        }
        let pivot = a[rank][col].clone();
        for r in rank + 1..rows {
            for c in col + 1..cols {
                let t = &(&pivot * &a[r][c]) - &(&a[r][col] * &a[rank][c]);
                a[r][c] = t.div(&prev);
            }
            a[r][col] = GaussianRational::zero();
        }
        prev = pivot;
        rank += 1;
    }
    let det = (rows == cols).then(|| {
        if rank < rows {
            GaussianRational::zero()
        } else if sign_flips % 2 == 1 {
            -prev.clone()
        } else {
            prev.clone()
        }
    });
    (rank, det)
}

pub fn exact_rank(m: &RationalMatrix) -> usize {
    bareiss(m).0
}

/// Dimension of the right nullspace: columns minus rank.
pub fn exact_nullspace_dimension(m: &RationalMatrix) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    cols - exact_rank(m)
}

/// Exact determinant of a square matrix.
pub fn exact_determinant(m: &RationalMatrix) -> GaussianRational {
    let n = m.len();
    assert!(m.iter().all(|r| r.len() == n), "determinant of a non-square matrix");
    if n == 0 {
        return GaussianRational::one();
    }
    bareiss(m).1.expect("square")
}

/// Integer matrix with Gaussian-integer entries `(re, im)`, row-major.
pub type IntMatrix = Vec<Vec<(i64, i64)>>;

pub fn to_rational(m: &IntMatrix) -> RationalMatrix {
    m.iter()
        .map(|row| row.iter().map(|&(re, im)| GaussianRational::from_integers(re, im)).collect())
        .collect()
}

fn mat_mul(a: &RationalMatrix, b: &RationalMatrix) -> RationalMatrix {
    let n = a.len();
    let k = b.len();
    let m = b.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    (0..k).fold(GaussianRational::zero(), |acc, l| &acc + &(&a[i][l] * &b[l][j]))
                })
                .collect()
        })
        .collect()
}

fn adjoint(a: &RationalMatrix) -> RationalMatrix {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    (0..cols).map(|j| (0..rows).map(|i| a[i][j].conj()).collect()).collect()
}

/// Exact real-split constraint matrix of the relaxed system
/// `A X_i = Y_i B`, `X_i B† = A† Y_i` for `A = Σ s_j E_j`, `B = Σ t_k F_k`
/// with both bases closed under adjoints. Each complex equation contributes
/// its real part then its imaginary part; the unknown order is
/// `Re s_1, Im s_1, …, Re t_1, Im t_1, …`.
pub fn exact_relaxed_system(
    pairs: &[(IntMatrix, IntMatrix)],
    g1_basis: &[IntMatrix],
    g2_basis: &[IntMatrix],
) -> RationalMatrix {
    let g1: Vec<RationalMatrix> = g1_basis.iter().map(to_rational).collect();
    let g2: Vec<RationalMatrix> = g2_basis.iter().map(to_rational).collect();
    let n = 2 * (g1.len() + g2.len());
    let off = 2 * g1.len();
    let i_unit = GaussianRational::i();
    let mut rows: RationalMatrix = Vec::new();

    // Each unknown contributes a complex matrix to the equation; emit one real
    // row per entry and part.
    let mut emit = |contrib: Vec<(usize, RationalMatrix)>| {
        let (h, w) = (contrib[0].1.len(), contrib[0].1[0].len());
        for r in 0..h {
            for c in 0..w {
                let mut re_row = vec![GaussianRational::zero(); n];
                let mut im_row = vec![GaussianRational::zero(); n];
                for (u, m) in &contrib {
                    let z = &m[r][c];
                    re_row[*u] = GaussianRational::new(z.re.clone(), num_rational::BigRational::zero());
                    im_row[*u] = GaussianRational::new(z.im.clone(), num_rational::BigRational::zero());
                }
                rows.push(re_row);
                rows.push(im_row);
            }
        }
    };
    let scale = |m: &RationalMatrix, z: &GaussianRational| -> RationalMatrix {
        m.iter().map(|row| row.iter().map(|e| e * z).collect()).collect()
    };
    let minus_one = GaussianRational::from_integers(-1, 0);
    let minus_i = GaussianRational::from_integers(0, -1);

    for (x, y) in pairs {
        let x = to_rational(x);
        let y = to_rational(y);
        let mut lin = Vec::new();
        for (j, e) in g1.iter().enumerate() {
            let ex = mat_mul(e, &x);
            lin.push((2 * j + 1, scale(&ex, &i_unit)));
            lin.push((2 * j, ex));
        }
        for (k, f) in g2.iter().enumerate() {
            let yf = scale(&mat_mul(&y, f), &minus_one);
            lin.push((off + 2 * k + 1, scale(&yf, &i_unit)));
            lin.push((off + 2 * k, yf));
        }
        emit(lin);

        let mut anti = Vec::new();
        for (k, f) in g2.iter().enumerate() {
            let xf = mat_mul(&x, &adjoint(f));
            anti.push((off + 2 * k + 1, scale(&xf, &minus_i)));
            anti.push((off + 2 * k, xf));
        }
        for (j, e) in g1.iter().enumerate() {
            let ey = scale(&mat_mul(&adjoint(e), &y), &minus_one);
            anti.push((2 * j + 1, scale(&ey, &minus_i)));
            anti.push((2 * j, ey));
        }
        emit(anti);
    }
    rows
}

/// Matrix units `E_jk ⊗ I_b` of the factor algebra on `a·b` (the full algebra when `b = 1`).
pub fn int_factor_basis(a: usize, b: usize) -> Vec<IntMatrix> {
    let d = a * b;
    let mut out = Vec::with_capacity(a * a);
    for j in 0..a {
        for k in 0..a {
            let mut m = vec![vec![(0, 0); d]; d];
            for l in 0..b {
                m[j * b + l][k * b + l] = (1, 0);
            }
            out.push(m);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(rows: &[&[i64]]) -> RationalMatrix {
        rows.iter()
            .map(|r| r.iter().map(|&v| GaussianRational::from_integers(v, 0)).collect())
            .collect()
    }

    #[test]
    fn identity_and_zero_nullity() {
        assert_eq!(exact_nullspace_dimension(&ints(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]])), 0);
        assert_eq!(exact_nullspace_dimension(&ints(&[&[0; 5], &[0; 5]])), 5);
    }

    #[test]
    fn determinant_small_cases() {
        let d = exact_determinant(&ints(&[&[2, 1], &[7, 4]]));
        assert_eq!(d, GaussianRational::from_integers(1, 0));
        let d = exact_determinant(&ints(&[&[0, 1], &[1, 0]]));
        assert_eq!(d, GaussianRational::from_integers(-1, 0));
        let d = exact_determinant(&ints(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]));
        assert!(d.is_zero());
        let d = exact_determinant(&ints(&[&[2, 0, 1], &[1, 3, 2], &[1, 1, 1]]));
        // 2(3-2) - 0 + 1(1-3) = 0
        assert!(d.is_zero());
        let d = exact_determinant(&ints(&[&[2, 0, 1], &[1, 3, 2], &[1, 1, 4]]));
        // 2(12-2) + 1(1-3) = 18
        assert_eq!(d, GaussianRational::from_integers(18, 0));
    }

    #[test]
    fn complex_determinant() {
        let m = vec![
            vec![GaussianRational::from_integers(1, 1), GaussianRational::from_integers(0, 2)],
            vec![GaussianRational::from_integers(3, 0), GaussianRational::from_integers(1, -1)],
        ];
        // (1+i)(1-i) - 2i·3 = 2 - 6i
        assert_eq!(exact_determinant(&m), GaussianRational::from_integers(2, -6));
    }

    #[test]
    fn rank_of_dependent_rows() {
        let m = ints(&[&[1, 2, 3, 4], &[2, 4, 6, 8], &[0, 1, 0, 1]]);
        assert_eq!(exact_rank(&m), 2);
        assert_eq!(exact_nullspace_dimension(&m), 2);
    }

    #[test]
    fn scalar_relaxed_system() {
        let pairs = vec![(vec![vec![(2, 0)]], vec![vec![(2, 0)]])];
        let basis = int_factor_basis(1, 1);
        let sys = exact_relaxed_system(&pairs, &basis, &basis);
        assert_eq!(sys.len(), 4);
        assert_eq!(exact_nullspace_dimension(&sys), 2);
    }
}
