//! Dense matrices and rank computations over the scalar fields in use.
//!
//! Three scalar types implement [`Field`]:
//! - [`Rational`]: exact, ranks by fraction-free (Bareiss) elimination,
//! - `f64`: singular values, rank = number of `σ > tol · σ_max`,
//! - [`ModP`]: arithmetic modulo a 32-bit prime, used by the Jacobian oracle.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub type Rational = BigRational;

/// Scalar kind of a tensor, as named in JSON.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arith {
    Rational,
    Float,
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data has the wrong length");
        Matrix { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r).clone())
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: Field> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::new(rows, cols, vec![T::zero(); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |r, c| if r == c { T::one() } else { T::zero() })
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let v = out.get(r, c).clone() + a.clone() * other.get(k, c).clone();
                    out.set(r, c, v);
                }
            }
        }
        out
    }
}

/// Scalar field with the rank-related primitives the crate needs.
///
/// `tol` is `0` for exact fields and a positive relative singular-value
/// cutoff for floats; passing the wrong kind is an invalid argument.
pub trait Field:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;

    fn rank(m: &Matrix<Self>, tol: f64) -> Result<usize>;

    /// A basis of the column space, one basis vector per column:
    /// reduced echelon for exact fields, orthonormal for floats.
    fn column_basis(m: &Matrix<Self>, tol: f64) -> Result<Matrix<Self>>;

    /// Coordinates `C` with `basis · C = rhs`, or `None` if some column of
    /// `rhs` lies outside the span of `basis` (beyond tolerance for floats).
    fn solve(basis: &Matrix<Self>, rhs: &Matrix<Self>, tol: f64) -> Result<Option<Matrix<Self>>>;

    fn check_tolerance(tol: f64) -> Result<()> {
        match (Self::EXACT, tol) {
            (true, 0.0) => Ok(()),
            (true, t) => invalid(format!("exact arithmetic needs tolerance 0, got {t}")),
            (false, t) if t > 0.0 && t.is_finite() => Ok(()),
            (false, t) => invalid(format!("float arithmetic needs a positive tolerance, got {t}")),
        }
    }
}

// ---------------------------------------------------------------------------
// Exact elimination shared by Rational and ModP.

/// In-place Gauss-Jordan to reduced row echelon form; returns pivot columns.
fn gauss_jordan<T: Field>(m: &mut Matrix<T>) -> Vec<usize> {
    let (rows, cols) = (m.rows, m.cols);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m.get(i, c).is_zero()) else {
            continue;
        };
        if p != r {
            for j in 0..cols {
                m.data.swap(p * cols + j, r * cols + j);
            }
        }
        let inv = T::one() / m.get(r, c).clone();
        for j in c..cols {
            let v = m.get(r, j).clone() * inv.clone();
            m.set(r, j, v);
        }
        for i in 0..rows {
            if i == r || m.get(i, c).is_zero() {
                continue;
            }
            let factor = m.get(i, c).clone();
            for j in c..cols {
                let v = m.get(i, j).clone() - factor.clone() * m.get(r, j).clone();
                m.set(i, j, v);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

fn exact_column_basis<T: Field>(m: &Matrix<T>) -> Matrix<T> {
    let mut t = m.transpose();
    let pivots = gauss_jordan(&mut t);
    Matrix::from_fn(m.rows, pivots.len(), |r, c| t.get(c, r).clone())
}

fn exact_solve<T: Field>(basis: &Matrix<T>, rhs: &Matrix<T>) -> Option<Matrix<T>> {
    assert_eq!(basis.rows, rhs.rows, "solve shape mismatch");
    let (p, q) = (basis.cols, rhs.cols);
    let mut aug = Matrix::from_fn(basis.rows, p + q, |r, c| {
        if c < p {
            basis.get(r, c).clone()
        } else {
            rhs.get(r, c - p).clone()
        }
    });
    let pivots = gauss_jordan(&mut aug);
    if pivots.iter().any(|&c| c >= p) {
        return None;
    }
    let mut out = Matrix::zeros(p, q);
    for (r, &c) in pivots.iter().enumerate() {
        for j in 0..q {
            out.set(c, j, aug.get(r, p + j).clone());
        }
    }
    Some(out)
}

// ---------------------------------------------------------------------------
// Rationals.

/// Scale each row by the lcm of its denominators.
fn integer_rows(m: &Matrix<Rational>) -> Vec<Vec<BigInt>> {
    (0..m.rows)
        .map(|r| {
            let row = m.row(r);
            let lcm = row
                .iter()
                .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            row.iter()
                .map(|x| x.numer() * (&lcm / x.denom()))
                .collect()
        })
        .collect()
}

/// Rank by fraction-free elimination over the integers. Tries `i128` with
/// overflow checks first and falls back to big integers.
pub fn integer_rank(rows: &[Vec<BigInt>]) -> usize {
    let small: Option<Vec<Vec<i128>>> = rows
        .iter()
        .map(|r| r.iter().map(|x| x.to_i128()).collect())
        .collect();
    if let Some(mut a) = small {
        if let Some(rank) = bareiss_i128(&mut a) {
            return rank;
        }
    }
    bareiss_big(&mut rows.to_vec())
}

fn bareiss_i128(a: &mut [Vec<i128>]) -> Option<usize> {
    let nrows = a.len();
    let ncols = a.first().map_or(0, |r| r.len());
    let mut prev: i128 = 1;
    let mut rank = 0;
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        let Some(p) = (rank..nrows).find(|&i| a[i][col] != 0) else {
            continue;
        };
        a.swap(p, rank);
        let (head, tail) = a.split_at_mut(rank + 1);
        let pivot_row = &head[rank];
        let pivot = pivot_row[col];
        for row in tail.iter_mut() {
            let lead = row[col];
            for j in col + 1..ncols {
                let x = pivot.checked_mul(row[j])?;
                let y = lead.checked_mul(pivot_row[j])?;
                row[j] = x.checked_sub(y)? / prev;
            }
            row[col] = 0;
        }
        prev = pivot;
        rank += 1;
    }
    Some(rank)
}

fn bareiss_big(a: &mut [Vec<BigInt>]) -> usize {
    let nrows = a.len();
    let ncols = a.first().map_or(0, |r| r.len());
    let mut prev = BigInt::one();
    let mut rank = 0;
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        let Some(p) = (rank..nrows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(p, rank);
        let (head, tail) = a.split_at_mut(rank + 1);
        let pivot_row = &head[rank];
        let pivot = &pivot_row[col];
        for row in tail.iter_mut() {
            let lead = std::mem::take(&mut row[col]);
            if lead.is_zero() {
                for x in &mut row[col + 1..] {
                    *x = &*x * pivot / &prev;
                }
                continue;
            }
            for j in col + 1..ncols {
                row[j] = (pivot * &row[j] - &lead * &pivot_row[j]) / &prev;
            }
        }
        prev = pivot.clone();
        rank += 1;
    }
    rank
}

impl Field for Rational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn rank(m: &Matrix<Self>, tol: f64) -> Result<usize> {
        Self::check_tolerance(tol)?;
        if m.rows == 0 || m.cols == 0 {
            return Ok(0);
        }
        // Eliminate along the longer side: fewer pivot steps.
        let rows = if m.rows <= m.cols {
            integer_rows(m)
        } else {
            integer_rows(&m.transpose())
        };
        Ok(integer_rank(&rows))
    }

    fn column_basis(m: &Matrix<Self>, tol: f64) -> Result<Matrix<Self>> {
        Self::check_tolerance(tol)?;
        Ok(exact_column_basis(m))
    }

    fn solve(basis: &Matrix<Self>, rhs: &Matrix<Self>, tol: f64) -> Result<Option<Matrix<Self>>> {
        Self::check_tolerance(tol)?;
        Ok(exact_solve(basis, rhs))
    }
}

/// Parse `"p"`, `"-p/q"` or a decimal like `"1.25"` into a rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().or_else(|_| invalid(format!("bad numerator in {s:?}")))?;
        let d: BigInt = d.trim().parse().or_else(|_| invalid(format!("bad denominator in {s:?}")))?;
        if d.is_zero() {
            return invalid(format!("zero denominator in {s:?}"));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let n: BigInt = digits.parse().or_else(|_| invalid(format!("bad decimal {s:?}")))?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rational::new(n, d);
        return Ok(if neg { -r } else { r });
    }
    let n: BigInt = s.parse().or_else(|_| invalid(format!("bad rational {s:?}")))?;
    Ok(Rational::from_integer(n))
}

/// Canonical text form: `"p"` for integers, `"p/q"` otherwise.
pub fn format_rational(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn rational_to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        if x.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

// ---------------------------------------------------------------------------
// Floats.

fn to_dmatrix(m: &Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows, m.cols, &m.data)
}

fn from_dmatrix(d: &DMatrix<f64>) -> Matrix<f64> {
    Matrix::from_fn(d.nrows(), d.ncols(), |r, c| d[(r, c)])
}

/// Singular values in descending order.
pub fn singular_values(m: &Matrix<f64>) -> Vec<f64> {
    if m.rows == 0 || m.cols == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = to_dmatrix(m).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn count_above(sv: &[f64], tol: f64) -> usize {
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * top).count()
}

impl Field for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn rank(m: &Matrix<Self>, tol: f64) -> Result<usize> {
        Self::check_tolerance(tol)?;
        Ok(count_above(&singular_values(m), tol))
    }

    fn column_basis(m: &Matrix<Self>, tol: f64) -> Result<Matrix<Self>> {
        Self::check_tolerance(tol)?;
        if m.rows == 0 || m.cols == 0 {
            return Ok(Matrix::zeros(m.rows, 0));
        }
        let svd = to_dmatrix(m).svd(true, false);
        let u = svd.u.as_ref().expect("u requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
        let keep = count_above(&sv, tol);
        Ok(Matrix::from_fn(m.rows, keep, |r, c| u[(r, order[c])]))
    }

    fn solve(basis: &Matrix<Self>, rhs: &Matrix<Self>, tol: f64) -> Result<Option<Matrix<Self>>> {
        Self::check_tolerance(tol)?;
        assert_eq!(basis.rows, rhs.rows, "solve shape mismatch");
        if basis.cols == 0 {
            let ok = rhs.data.iter().all(|x| x.abs() <= tol.sqrt());
            return Ok(ok.then(|| Matrix::zeros(0, rhs.cols)));
        }
        let b = to_dmatrix(basis);
        let r = to_dmatrix(rhs);
        let svd = b.clone().svd(true, true);
        let top = svd.singular_values.max();
        let Ok(c) = svd.solve(&r, tol * top) else {
            return invalid("least-squares solve failed");
        };
        let residual = (&b * &c - &r).norm();
        let scale = r.norm().max(1.0);
        Ok((residual <= tol.sqrt() * scale).then(|| from_dmatrix(&c)))
    }
}

// ---------------------------------------------------------------------------
// Integers modulo a prime.

/// The largest prime below `2^32`; products of two residues fit in `u64`.
pub const MODULUS: u64 = 4_294_967_291;

/// Residue modulo [`MODULUS`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ModP(u64);

impl ModP {
    pub fn new(v: u64) -> Self {
        ModP(v % MODULUS)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn pow(self, mut e: u64) -> Self {
        let mut base = self;
        let mut acc = ModP(1);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    pub fn inverse(self) -> Self {
        assert!(self.0 != 0, "inverse of zero mod p");
        self.pow(MODULUS - 2)
    }
}

impl fmt::Debug for ModP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for ModP {
    type Output = ModP;
    fn add(self, o: ModP) -> ModP {
        let s = self.0 + o.0;
        ModP(if s >= MODULUS { s - MODULUS } else { s })
    }
}

impl Sub for ModP {
    type Output = ModP;
    fn sub(self, o: ModP) -> ModP {
        ModP(if self.0 >= o.0 {
            self.0 - o.0
        } else {
            self.0 + MODULUS - o.0
        })
    }
}

impl Mul for ModP {
    type Output = ModP;
    fn mul(self, o: ModP) -> ModP {
        ModP(self.0 * o.0 % MODULUS)
    }
}

impl Div for ModP {
    type Output = ModP;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: ModP) -> ModP {
        self * o.inverse()
    }
}

impl Neg for ModP {
    type Output = ModP;
    fn neg(self) -> ModP {
        ModP(if self.0 == 0 { 0 } else { MODULUS - self.0 })
    }
}

impl Zero for ModP {
    fn zero() -> Self {
        ModP(0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}

impl One for ModP {
    fn one() -> Self {
        ModP(1)
    }
}

impl Field for ModP {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        ModP(v.rem_euclid(MODULUS as i64) as u64)
    }

    fn rank(m: &Matrix<Self>, tol: f64) -> Result<usize> {
        Self::check_tolerance(tol)?;
        let mut a = if m.rows <= m.cols { m.clone() } else { m.transpose() };
        Ok(row_echelon_rank_modp(&mut a))
    }

    fn column_basis(m: &Matrix<Self>, tol: f64) -> Result<Matrix<Self>> {
        Self::check_tolerance(tol)?;
        Ok(exact_column_basis(m))
    }

    fn solve(basis: &Matrix<Self>, rhs: &Matrix<Self>, tol: f64) -> Result<Option<Matrix<Self>>> {
        Self::check_tolerance(tol)?;
        Ok(exact_solve(basis, rhs))
    }
}

/// Forward elimination only; rows are the short side. `row + factor · pivot`
/// stays below `2^64` before reduction since both residues are below `2^32`.
fn row_echelon_rank_modp(m: &mut Matrix<ModP>) -> usize {
    let (rows, cols) = (m.rows, m.cols);
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&i| m.get(i, c).0 != 0) else {
            continue;
        };
        if p != rank {
            for j in 0..cols {
                m.data.swap(p * cols + j, rank * cols + j);
            }
        }
        let inv = m.get(rank, c).inverse();
        let (head, tail) = m.data.split_at_mut((rank + 1) * cols);
        let pivot_row = &head[rank * cols..];
        for row in tail.chunks_mut(cols) {
            let lead = row[c];
            if lead.0 == 0 {
                continue;
            }
            // row -= (lead / pivot) * pivot_row
            let factor = MODULUS - (lead * inv).0;
            for j in c..cols {
                row[j] = ModP((row[j].0 + factor * pivot_row[j].0) % MODULUS);
            }
        }
        rank += 1;
    }
    rank
}
