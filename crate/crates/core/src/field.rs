//! Prime-field arithmetic and dense linear algebra over GF(p).
//!
//! Everything downstream (encoders, effective receiver matrices, decoders)
//! is expressed with [`Matrix`], which stores reduced residues of a single
//! [`Field`]. Elimination always takes the first nonzero pivot in column
//! order, so reduced forms are reproducible.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest modulus accepted; keeps every product inside `u64`.
pub const MAX_MODULUS: u32 = 1 << 31;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u32),
    #[error("modulus {0} is out of range (must be in 2..2^31)")]
    ModulusOutOfRange(u32),
    #[error("zero has no multiplicative inverse")]
    InverseOfZero,
    #[error("operands belong to different fields: GF({0}) and GF({1})")]
    MixedFields(u32, u32),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("column index {index} out of range for {cols} columns")]
    ColumnOutOfRange { index: usize, cols: usize },
    #[error("inconsistent linear system: observation lies outside the column image")]
    InconsistentSystem,
}

/// A prime field GF(p).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Field {
    p: u32,
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let n = n as u64;
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl Field {
    pub fn new(p: u32) -> Result<Self, FieldError> {
        if !(2..MAX_MODULUS).contains(&p) {
            return Err(FieldError::ModulusOutOfRange(p));
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(Field { p })
    }

    #[inline]
    pub fn modulus(self) -> u32 {
        self.p
    }

    /// The capacity results assume a field larger than GF(2); with p = 2 the
    /// topology bit is already perfect CSIT.
    pub fn meets_theorem_preconditions(self) -> bool {
        self.p > 2
    }

    #[inline]
    pub fn reduce(self, v: u64) -> u32 {
        (v % self.p as u64) as u32
    }

    /// Reduces a signed integer into `[0, p)`.
    #[inline]
    pub fn reduce_signed(self, v: i64) -> u32 {
        v.rem_euclid(self.p as i64) as u32
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        let s = a as u64 + b as u64;
        if s >= self.p as u64 {
            (s - self.p as u64) as u32
        } else {
            s as u32
        }
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            (a as u64 + self.p as u64 - b as u64) as u32
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    /// Multiplicative inverse by Fermat's little theorem.
    pub fn inv(self, a: u32) -> Result<u32, FieldError> {
        let a = a % self.p;
        if a == 0 {
            return Err(FieldError::InverseOfZero);
        }
        Ok(self.pow(a, (self.p - 2) as u64))
    }

    pub fn pow(self, mut base: u32, mut exp: u64) -> u32 {
        let mut acc = 1 % self.p;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    pub fn element(self, v: u64) -> FieldElement {
        FieldElement {
            value: self.reduce(v),
            field: self,
        }
    }

    pub fn zero(self) -> FieldElement {
        self.element(0)
    }

    pub fn one(self) -> FieldElement {
        self.element(1)
    }

    /// The p - 1 nonzero residues in increasing order.
    pub fn nonzero_elements(self) -> impl Iterator<Item = u32> {
        1..self.p
    }
}

impl TryFrom<u32> for Field {
    type Error = FieldError;
    fn try_from(p: u32) -> Result<Self, Self::Error> {
        Field::new(p)
    }
}

impl From<Field> for u32 {
    fn from(f: Field) -> u32 {
        f.p
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.p)
    }
}

/// A residue tagged with its field. Arithmetic between elements of different
/// fields is rejected rather than silently reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u32,
    field: Field,
}

// Checked arithmetic: mixing fields is an error, so these return Result
// rather than implementing the operator traits.
#[allow(clippy::should_implement_trait)]
impl FieldElement {
    #[inline]
    pub fn value(self) -> u32 {
        self.value
    }

    #[inline]
    pub fn field(self) -> Field {
        self.field
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    fn same_field(self, other: Self) -> Result<Field, FieldError> {
        if self.field != other.field {
            return Err(FieldError::MixedFields(self.field.p, other.field.p));
        }
        Ok(self.field)
    }

    pub fn add(self, other: Self) -> Result<Self, FieldError> {
        let f = self.same_field(other)?;
        Ok(FieldElement {
            value: f.add(self.value, other.value),
            field: f,
        })
    }

    pub fn sub(self, other: Self) -> Result<Self, FieldError> {
        let f = self.same_field(other)?;
        Ok(FieldElement {
            value: f.sub(self.value, other.value),
            field: f,
        })
    }

    pub fn mul(self, other: Self) -> Result<Self, FieldError> {
        let f = self.same_field(other)?;
        Ok(FieldElement {
            value: f.mul(self.value, other.value),
            field: f,
        })
    }

    pub fn neg(self) -> Self {
        FieldElement {
            value: self.field.neg(self.value),
            field: self.field,
        }
    }

    pub fn inv(self) -> Result<Self, FieldError> {
        Ok(FieldElement {
            value: self.field.inv(self.value)?,
            field: self.field,
        })
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Dense row-major matrix over a single prime field.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

/// Reduced row echelon form together with its pivot columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rref {
    pub matrix: Matrix,
    pub pivots: Vec<usize>,
}

impl Matrix {
    pub fn zeros(field: Field, rows: usize, cols: usize) -> Self {
        Matrix {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: Field, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % field.p;
        }
        m
    }

    /// Builds a matrix from integer rows, reducing each entry mod p.
    pub fn from_rows<R: AsRef<[i64]>>(field: Field, rows: &[R]) -> Result<Self, FieldError> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(FieldError::DimensionMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            data.extend(row.iter().map(|&v| field.reduce_signed(v)));
        }
        Ok(Matrix {
            field,
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Wraps already-reduced residues. Entries >= p are reduced.
    pub fn from_residues(field: Field, rows: usize, cols: usize, mut data: Vec<u32>) -> Result<Self, FieldError> {
        if data.len() != rows * cols {
            return Err(FieldError::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        for v in &mut data {
            *v %= field.p;
        }
        Ok(Matrix {
            field,
            rows,
            cols,
            data,
        })
    }

    #[inline]
    pub fn field(&self) -> Field {
        self.field
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    pub fn element(&self, r: usize, c: usize) -> FieldElement {
        FieldElement {
            value: self.get(r, c),
            field: self.field,
        }
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        self.data[r * self.cols + c] = v % self.field.p;
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    /// Returns a copy with `v` appended as an extra row.
    pub fn with_row(&self, v: &[u32]) -> Result<Matrix, FieldError> {
        if v.len() != self.cols {
            return Err(FieldError::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        let mut data = self.data.clone();
        data.extend(v.iter().map(|&x| x % self.field.p));
        Ok(Matrix {
            field: self.field,
            rows: self.rows + 1,
            cols: self.cols,
            data,
        })
    }

    /// Matrix-vector product `self * x`.
    pub fn mul_vec(&self, x: &[u32]) -> Result<Vec<u32>, FieldError> {
        if x.len() != self.cols {
            return Err(FieldError::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        let f = self.field;
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .fold(0u32, |acc, (&a, &b)| f.add(acc, f.mul(a, b)))
            })
            .collect())
    }

    pub fn rref(&self) -> Rref {
        let mut m = self.clone();
        let pivots = rref_in_place(self.field, &mut m.data, self.rows, self.cols);
        Rref { matrix: m, pivots }
    }

    pub fn rank(&self) -> usize {
        let mut scratch = self.data.clone();
        rref_in_place(self.field, &mut scratch, self.rows, self.cols).len()
    }

    /// True iff `v` lies in the row space, decided by comparing
    /// `rank(self)` with the rank of `self` extended by `v`.
    pub fn rowspace_member(&self, v: &[u32]) -> Result<bool, FieldError> {
        let extended = self.with_row(v)?;
        Ok(self.rank() == extended.rank())
    }

    /// For each wanted unknown of `y = self * s`, returns its value when `y`
    /// pins it down uniquely and `None` otherwise.
    pub fn solve_for(&self, y: &[u32], wanted: &[usize]) -> Result<Vec<Option<FieldElement>>, FieldError> {
        if y.len() != self.rows {
            return Err(FieldError::DimensionMismatch {
                expected: self.rows,
                got: y.len(),
            });
        }
        if let Some(&bad) = wanted.iter().find(|&&i| i >= self.cols) {
            return Err(FieldError::ColumnOutOfRange {
                index: bad,
                cols: self.cols,
            });
        }
        let width = self.cols + 1;
        let mut aug = Vec::with_capacity(self.rows * width);
        for (r, &yr) in y.iter().enumerate() {
            aug.extend_from_slice(self.row(r));
            aug.push(yr % self.field.p);
        }
        // Pivot selection is restricted to the coefficient columns; a pivot in
        // the augmented column means y is outside the column image.
        let pivots = rref_in_place_limited(self.field, &mut aug, self.rows, width, self.cols);
        let rank = pivots.len();
        if aug[rank * width..].iter().any(|&v| v != 0) {
            return Err(FieldError::InconsistentSystem);
        }
        let is_pivot = pivot_mask(&pivots, self.cols);
        Ok(wanted
            .iter()
            .map(|&i| {
                let row = pivots.iter().position(|&c| c == i)?;
                let r = &aug[row * width..row * width + self.cols];
                let isolated = r
                    .iter()
                    .enumerate()
                    .all(|(c, &v)| c == i || v == 0 || is_pivot[c]);
                isolated.then(|| FieldElement {
                    value: aug[row * width + self.cols],
                    field: self.field,
                })
            })
            .collect())
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|v| v.to_string()).collect();
            writeln!(f, "[{}]", row.join(" "))?;
        }
        Ok(())
    }
}

fn pivot_mask(pivots: &[usize], cols: usize) -> Vec<bool> {
    let mut mask = vec![false; cols];
    for &c in pivots {
        mask[c] = true;
    }
    mask
}

/// Gauss-Jordan elimination on a row-major buffer; returns pivot columns.
pub(crate) fn rref_in_place(field: Field, data: &mut [u32], rows: usize, cols: usize) -> Vec<usize> {
    rref_in_place_limited(field, data, rows, cols, cols)
}

/// Like [`rref_in_place`] but only columns `< pivot_cols` may hold pivots.
pub(crate) fn rref_in_place_limited(
    field: Field,
    data: &mut [u32],
    rows: usize,
    cols: usize,
    pivot_cols: usize,
) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..pivot_cols {
        if row == rows {
            break;
        }
        let Some(sel) = (row..rows).find(|&r| data[r * cols + col] != 0) else {
            continue;
        };
        if sel != row {
            for c in 0..cols {
                data.swap(sel * cols + c, row * cols + c);
            }
        }
        let inv = field.inv(data[row * cols + col]).expect("pivot is nonzero");
        for c in col..cols {
            data[row * cols + c] = field.mul(data[row * cols + c], inv);
        }
        for r in 0..rows {
            if r == row {
                continue;
            }
            let factor = data[r * cols + col];
            if factor == 0 {
                continue;
            }
            for c in col..cols {
                let sub = field.mul(factor, data[row * cols + c]);
                data[r * cols + c] = field.sub(data[r * cols + c], sub);
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

/// After [`rref_in_place`], decides whether the unit vector `e_col` lies in
/// the row space: `col` must be a pivot whose row vanishes on every
/// non-pivot column.
pub(crate) fn unit_in_rowspace(data: &[u32], cols: usize, pivots: &[usize], col: usize) -> bool {
    let Some(row) = pivots.iter().position(|&c| c == col) else {
        return false;
    };
    let r = &data[row * cols..(row + 1) * cols];
    r.iter()
        .enumerate()
        .all(|(c, &v)| v == 0 || c == col || pivots.contains(&c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(p: u32) -> Field {
        Field::new(p).unwrap()
    }

    #[test]
    fn construction_checks_primality() {
        assert!(Field::new(7).is_ok());
        assert_eq!(Field::new(9), Err(FieldError::NotPrime(9)));
        assert_eq!(Field::new(1), Err(FieldError::ModulusOutOfRange(1)));
        assert!(!gf(2).meets_theorem_preconditions());
        assert!(gf(3).meets_theorem_preconditions());
    }

    #[test]
    fn element_examples() {
        let f7 = gf(7);
        assert_eq!(f7.element(3).inv().unwrap().value(), 5);
        let f5 = gf(5);
        assert_eq!(f5.element(4).add(f5.element(3)).unwrap().value(), 2);
        assert_eq!(gf(3).element(1).neg().value(), 2);
    }

    #[test]
    fn element_errors() {
        assert_eq!(gf(5).zero().inv(), Err(FieldError::InverseOfZero));
        assert_eq!(
            gf(5).one().mul(gf(7).one()),
            Err(FieldError::MixedFields(5, 7))
        );
    }

    #[test]
    fn rank_examples() {
        assert_eq!(Matrix::identity(gf(5), 3).rank(), 3);
        let m = Matrix::from_rows(gf(5), &[[1, 2], [2, 4]]).unwrap();
        assert_eq!(m.rank(), 1);
        assert_eq!(Matrix::zeros(gf(3), 2, 4).rank(), 0);
    }

    #[test]
    fn rowspace_examples() {
        let f = gf(3);
        let id = Matrix::identity(f, 3);
        assert!(id.rowspace_member(&[1, 0, 0]).unwrap());
        let m = Matrix::from_rows(f, &[[0, 1, 0], [0, 0, 1]]).unwrap();
        assert!(!m.rowspace_member(&[1, 0, 0]).unwrap());
        assert!(m.rowspace_member(&[0, 2, 1]).unwrap());
        assert_eq!(
            m.rowspace_member(&[1, 0]),
            Err(FieldError::DimensionMismatch { expected: 3, got: 2 })
        );
    }

    #[test]
    fn solve_examples() {
        let f = gf(5);
        let id = Matrix::identity(f, 3);
        let got = id.solve_for(&[4, 0, 2], &[0, 1, 2]).unwrap();
        let vals: Vec<u32> = got.iter().map(|v| v.unwrap().value()).collect();
        assert_eq!(vals, vec![4, 0, 2]);

        let m = Matrix::from_rows(f, &[[1, 1]]).unwrap();
        assert_eq!(m.solve_for(&[3], &[0]).unwrap(), vec![None]);
    }

    #[test]
    fn solve_rejects_inconsistent_input() {
        let f = gf(3);
        let m = Matrix::from_rows(f, &[[1, 1], [1, 1]]).unwrap();
        assert_eq!(m.solve_for(&[1, 2], &[0]), Err(FieldError::InconsistentSystem));
        assert!(matches!(
            m.solve_for(&[1], &[0]),
            Err(FieldError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            m.solve_for(&[1, 1], &[2]),
            Err(FieldError::ColumnOutOfRange { .. })
        ));
    }

    #[test]
    fn partial_recovery_from_triangular_system() {
        // s0 + s1 = y0, s1 = y1, s2 + s3 = y2
        let f = gf(7);
        let m = Matrix::from_rows(f, &[[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 1]]).unwrap();
        let s = [3, 5, 1, 6];
        let y = m.mul_vec(&s).unwrap();
        let got = m.solve_for(&y, &[0, 1, 2, 3]).unwrap();
        assert_eq!(got[0].map(|v| v.value()), Some(3));
        assert_eq!(got[1].map(|v| v.value()), Some(5));
        assert_eq!(got[2], None);
        assert_eq!(got[3], None);
    }

    #[test]
    fn unit_membership_matches_rank_route() {
        let f = gf(3);
        let m = Matrix::from_rows(f, &[[1, 2, 0, 1], [0, 0, 1, 1], [1, 2, 1, 2]]).unwrap();
        let r = m.rref();
        for col in 0..4 {
            let mut e = vec![0; 4];
            e[col] = 1;
            assert_eq!(
                unit_in_rowspace(r.matrix.as_slice(), 4, &r.pivots, col),
                m.rowspace_member(&e).unwrap()
            );
        }
    }
}
