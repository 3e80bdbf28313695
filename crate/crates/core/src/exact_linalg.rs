//! Exact integer and rational linear algebra.
//!
//! Every quantity here is computed without floating point. Ranks use
//! fraction-free (Bareiss) elimination, first in checked `i128` arithmetic and
//! falling back to arbitrary precision when an intermediate minor overflows.
//! Null spaces and particular solutions go through a reduced row echelon form
//! over the rationals, and integer solvability through a column echelon form
//! built from unimodular column operations.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense integer matrix with arbitrary-precision entries, stored row-major.
///
/// A matrix may have zero columns (the result of keeping no columns of
/// another matrix); such a matrix has rank 0.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigInt>) -> Result<Self> {
        if rows == 0 {
            return Err(Error::BadMatrix("a matrix needs at least one row".into()));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: entries.len(),
            });
        }
        Ok(IntMatrix {
            rows,
            cols,
            entries,
        })
    }

    /// Builds a matrix from equally long rows of machine integers.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: row.len(),
                });
            }
            entries.extend(row.iter().map(|&v| BigInt::from(v)));
        }
        IntMatrix::new(rows.len(), cols, entries)
    }

    pub fn from_big_rows(rows: Vec<Vec<BigInt>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(rows.len() * cols);
        let nrows = rows.len();
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: row.len(),
                });
            }
            entries.extend(row);
        }
        IntMatrix::new(nrows, cols, entries)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0, "a matrix needs at least one row");
        IntMatrix {
            rows,
            cols,
            entries: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: BigInt) {
        self.entries[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> IntMatrix {
        if self.cols == 0 {
            // A transpose with zero rows is not representable; its rank is 0 either way.
            return self.clone();
        }
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).clone());
            }
        }
        IntMatrix {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    /// Returns the matrix with `row` appended at the bottom.
    pub fn with_row(&self, row: &[BigInt]) -> Result<IntMatrix> {
        if row.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: row.len(),
            });
        }
        let mut entries = self.entries.clone();
        entries.extend_from_slice(row);
        Ok(IntMatrix {
            rows: self.rows + 1,
            cols: self.cols,
            entries,
        })
    }

    /// Stacks `self` over `other`; both need the same column count.
    pub fn vstack(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if other.cols != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: other.cols,
            });
        }
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        Ok(IntMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            entries,
        })
    }

    /// Multiplies by an integer vector.
    pub fn mul_int(&self, x: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, v)| a * v).sum())
            .collect()
    }

    pub fn mul_i64(&self, x: &[i64]) -> Vec<BigInt> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .map(|(a, &v)| a * BigInt::from(v))
                    .sum()
            })
            .collect()
    }

    /// Multiplies by a rational vector.
    pub fn mul_rational(&self, x: &RationalVector) -> Vec<BigRational> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x.entries())
                    .fold(BigRational::zero(), |acc, (a, v)| {
                        acc + BigRational::from_integer(a.clone()) * v
                    })
            })
            .collect()
    }

    /// Rank over the rationals.
    pub fn rank(&self) -> usize {
        rank(self)
    }

    /// Keeps the columns listed in `q`, in the order of `q`.
    pub fn select_columns(&self, q: &ColSet) -> Result<IntMatrix> {
        select_columns(self, q)
    }

    /// Keeps the columns whose bit is set in `mask`. Requires `cols <= 64`.
    pub fn select_mask(&self, mask: u64) -> IntMatrix {
        let keep: Vec<usize> = (0..self.cols).filter(|&j| mask >> j & 1 == 1).collect();
        self.select_indices(&keep)
    }

    pub(crate) fn select_indices(&self, keep: &[usize]) -> IntMatrix {
        let mut entries = Vec::with_capacity(self.rows * keep.len());
        for i in 0..self.rows {
            for &j in keep {
                entries.push(self.get(i, j).clone());
            }
        }
        IntMatrix {
            rows: self.rows,
            cols: keep.len(),
            entries,
        }
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntMatrix{:?}", self.to_rows())
    }
}

/// Space-separated rows, one per line.
impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(ToString::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Strictly increasing set of 0-based column indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColSet(Vec<usize>);

impl ColSet {
    /// Validates and sorts `indices` against a matrix with `cols` columns.
    pub fn new(mut indices: Vec<usize>, cols: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&bad) = indices.iter().find(|&&i| i >= cols) {
            return Err(Error::IndexOutOfRange { index: bad, cols });
        }
        Ok(ColSet(indices))
    }

    pub fn empty() -> Self {
        ColSet(Vec::new())
    }

    pub fn full(cols: usize) -> Self {
        ColSet((0..cols).collect())
    }

    pub fn from_mask(mask: u64) -> Self {
        ColSet((0..64).filter(|&j| mask >> j & 1 == 1).collect())
    }

    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0, |acc, &j| acc | 1 << j)
    }

    pub fn complement(&self, cols: usize) -> ColSet {
        ColSet((0..cols).filter(|j| !self.contains(*j)).collect())
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn union(&self, other: &ColSet) -> ColSet {
        let mut v: Vec<usize> = self.0.iter().chain(&other.0).copied().collect();
        v.sort_unstable();
        v.dedup();
        ColSet(v)
    }

    /// 1-based rendering used by every text surface.
    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|j| j + 1).collect()
    }
}

/// Vector of exact rationals in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalVector(Vec<BigRational>);

impl RationalVector {
    pub fn new(entries: Vec<BigRational>) -> Self {
        RationalVector(entries)
    }

    pub fn zeros(len: usize) -> Self {
        RationalVector(vec![BigRational::zero(); len])
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Scales by the lcm of the denominators, giving a primitive-ish integer vector
    /// with the same direction.
    pub fn clear_denominators(&self) -> Vec<BigInt> {
        let lcm = self
            .0
            .iter()
            .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        self.0
            .iter()
            .map(|q| q.numer() * (&lcm / q.denom()))
            .collect()
    }
}

pub fn rank(a: &IntMatrix) -> usize {
    if a.cols == 0 || a.is_zero() {
        return 0;
    }
    rank_i128(a).unwrap_or_else(|| rank_big(a))
}

/// Bareiss elimination in checked `i128`; `None` on overflow.
fn rank_i128(a: &IntMatrix) -> Option<usize> {
    let (rows, cols) = (a.rows, a.cols);
    let mut m: Vec<i128> = Vec::with_capacity(rows * cols);
    for v in &a.entries {
        m.push(v.to_i128()?);
    }
    let mut rank = 0;
    let mut prev: i128 = 1;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&i| m[i * cols + col] != 0) else {
            continue;
        };
        if piv != rank {
            for j in 0..cols {
                m.swap(piv * cols + j, rank * cols + j);
            }
        }
        let p = m[rank * cols + col];
        for i in rank + 1..rows {
            let f = m[i * cols + col];
            for j in col + 1..cols {
                let v = p
                    .checked_mul(m[i * cols + j])?
                    .checked_sub(f.checked_mul(m[rank * cols + j])?)?;
                m[i * cols + j] = v / prev;
            }
            m[i * cols + col] = 0;
        }
        prev = p;
        rank += 1;
    }
    Some(rank)
}

fn rank_big(a: &IntMatrix) -> usize {
    let (rows, cols) = (a.rows, a.cols);
    let mut m = a.entries.clone();
    let mut rank = 0;
    let mut prev = BigInt::one();
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&i| !m[i * cols + col].is_zero()) else {
            continue;
        };
        if piv != rank {
            for j in 0..cols {
                m.swap(piv * cols + j, rank * cols + j);
            }
        }
        let p = m[rank * cols + col].clone();
        for i in rank + 1..rows {
            let f = m[i * cols + col].clone();
            for j in col + 1..cols {
                let v = &p * &m[i * cols + j] - &f * &m[rank * cols + j];
                m[i * cols + j] = v / &prev;
            }
            m[i * cols + col] = BigInt::zero();
        }
        prev = p;
        rank += 1;
    }
    rank
}

pub fn select_columns(a: &IntMatrix, q: &ColSet) -> Result<IntMatrix> {
    if let Some(bad) = q.iter().find(|&j| j >= a.cols) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            cols: a.cols,
        });
    }
    Ok(a.select_indices(q.indices()))
}

/// `r_Q = rank(A) - rank(A^{Q̄})`.
pub fn rank_deficit(a: &IntMatrix, q: &ColSet) -> Result<usize> {
    if q.is_empty() {
        return Err(Error::EmptyQ);
    }
    let rest = select_columns(a, &q.complement(a.cols))?;
    Ok(a.rank() - rest.rank())
}

/// Reduced row echelon form over the rationals. Returns the reduced rows and
/// the pivot column of each nonzero row, in increasing order.
pub(crate) fn rref(
    rows: Vec<Vec<BigRational>>,
    cols: usize,
) -> (Vec<Vec<BigRational>>, Vec<usize>) {
    let mut m = rows;
    let nrows = m.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..cols {
        if r == nrows {
            break;
        }
        let Some(piv) = (r..nrows).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(piv, r);
        let inv = m[r][col].recip();
        for v in m[r].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..nrows {
            if i != r && !m[i][col].is_zero() {
                let f = m[i][col].clone();
                for j in col..m[i].len() {
                    let delta = &f * &m[r][j];
                    m[i][j] -= delta;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    (m, pivots)
}

fn rational_rows(a: &IntMatrix) -> Vec<Vec<BigRational>> {
    (0..a.rows)
        .map(|i| {
            a.row(i)
                .iter()
                .map(|v| BigRational::from_integer(v.clone()))
                .collect()
        })
        .collect()
}

/// The lexicographically first set of linearly independent columns of
/// maximal size (the pivot columns of the echelon form).
pub fn pivot_columns(a: &IntMatrix) -> ColSet {
    let (_, pivots) = rref(rational_rows(a), a.cols);
    ColSet(pivots)
}

/// Basis of `{x : Ax = 0}`; one vector per free column of the echelon form.
pub fn null_space_basis(a: &IntMatrix) -> Vec<RationalVector> {
    let (m, pivots) = rref(rational_rows(a), a.cols);
    let free: Vec<usize> = (0..a.cols).filter(|j| !pivots.contains(j)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); a.cols];
            v[f] = BigRational::one();
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -m[row][f].clone();
            }
            RationalVector(v)
        })
        .collect()
}

/// Some rational solution of `Ax = b`, or `None` when the system is inconsistent.
pub fn solve_particular(a: &IntMatrix, b: &[BigInt]) -> Result<Option<RationalVector>> {
    if b.len() != a.rows {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            actual: b.len(),
        });
    }
    let mut rows = rational_rows(a);
    for (row, bi) in rows.iter_mut().zip(b) {
        row.push(BigRational::from_integer(bi.clone()));
    }
    let (m, pivots) = rref(rows, a.cols + 1);
    if pivots.last() == Some(&a.cols) {
        return Ok(None);
    }
    let mut x = vec![BigRational::zero(); a.cols];
    for (row, &p) in pivots.iter().enumerate() {
        x[p] = m[row][a.cols].clone();
    }
    Ok(Some(RationalVector(x)))
}

/// Decides whether `Ax = b` has an integer solution.
///
/// Unimodular column operations bring `A` to a lower column echelon form
/// `H = AU`; `Ax = b` is solvable over the integers iff `Hy = b` is, and the
/// latter is decided by forward substitution.
pub fn solvable_over_integers(a: &IntMatrix, b: &[BigInt]) -> Result<bool> {
    if b.len() != a.rows {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            actual: b.len(),
        });
    }
    let h = column_echelon(a);
    let (rows, cols) = (a.rows, a.cols);
    let at = |i: usize, j: usize| &h[i * cols + j];
    let mut y: Vec<BigInt> = Vec::new();
    let mut k = 0;
    for (i, bi) in b.iter().enumerate().take(rows) {
        let mut residual = bi.clone();
        for (j, yj) in y.iter().enumerate() {
            residual -= at(i, j) * yj;
        }
        if k < cols && !at(i, k).is_zero() {
            let (q, r) = residual.div_rem(at(i, k));
            if !r.is_zero() {
                return Ok(false);
            }
            y.push(q);
            k += 1;
        } else if !residual.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Lower column echelon form via extended-gcd column operations.
fn column_echelon(a: &IntMatrix) -> Vec<BigInt> {
    let (rows, cols) = (a.rows, a.cols);
    let mut h = a.entries.clone();
    let mut k = 0;
    for i in 0..rows {
        if k == cols {
            break;
        }
        for j in k + 1..cols {
            if h[i * cols + j].is_zero() {
                continue;
            }
            let x = h[i * cols + k].clone();
            let y = h[i * cols + j].clone();
            let eg = x.extended_gcd(&y);
            let (g, s, t) = (eg.gcd, eg.x, eg.y);
            let (xg, yg) = (&x / &g, &y / &g);
            // [col_k, col_j] <- [s col_k + t col_j, -yg col_k + xg col_j]; determinant 1.
            for r in 0..rows {
                let ck = h[r * cols + k].clone();
                let cj = h[r * cols + j].clone();
                h[r * cols + k] = &s * &ck + &t * &cj;
                h[r * cols + j] = &xg * &cj - &yg * &ck;
            }
        }
        if !h[i * cols + k].is_zero() {
            if h[i * cols + k].is_negative() {
                for r in 0..rows {
                    let v = -h[r * cols + k].clone();
                    h[r * cols + k] = v;
                }
            }
            k += 1;
        }
    }
    h
}
