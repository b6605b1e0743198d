//! Dense matrices, permutations, and the text format shared by every tool.
//!
//! Storage is row-major `f64`; triangular structure is a property of the
//! values (checked where an operation requires it), not a packed layout.
//! All types are immutable values after construction, so they can be shared
//! across threads freely.

use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::ops::{Index, IndexMut};
use std::path::Path;

use crate::error::{Error, FileError};
use crate::ledger::FlopLedger;

/// Scale-aware zero test: `d` counts as zero iff `|d| < 2^-40 * max(1, scale)`.
///
/// Far above round-off, below any intended pivot.
pub fn zero_threshold(scale: f64) -> f64 {
    2.0_f64.powi(-40) * scale.max(1.0)
}

/// Row-major rectangular matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// The n-by-n identity.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        assert!(!rows.is_empty());
        let cols = rows[0].len();
        assert!(cols > 0);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        DenseMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copy-on-extract rectangular view.
    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> DenseMatrix {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols);
        assert!(rows > 0 && cols > 0);
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            data.extend_from_slice(&self.row(r0 + i)[c0..c0 + cols]);
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn paste(&mut self, r0: usize, c0: usize, block: &DenseMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            self.row_mut(r0 + i)[c0..c0 + block.cols].copy_from_slice(block.row(i));
        }
    }

    /// Embed into a larger identity: the result is `n`-by-`n` with `self` in
    /// the top-left corner and exact identity elsewhere. For triangular (and
    /// block-triangular) inputs the padding block decouples, so the top-left
    /// corner of the padded inverse is the inverse of `self`.
    pub fn embed_identity(&self, n: usize) -> DenseMatrix {
        assert!(self.is_square() && n >= self.rows);
        let mut p = DenseMatrix::identity(n);
        p.paste(0, 0, self);
        p
    }

    pub fn scaled(&self, s: f64) -> DenseMatrix {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix, Error> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix, Error> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &DenseMatrix) -> Result<(), Error> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn sub_assign(&mut self, other: &DenseMatrix) -> Result<(), Error> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        Ok(())
    }

    pub fn check_same_shape(&self, other: &DenseMatrix) -> Result<(), Error> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ShapeMismatch {
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        Ok(())
    }

    pub fn check_square(&self) -> Result<usize, Error> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(self.rows)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let mut sep = "";
            for j in 0..self.cols {
                write!(f, "{sep}{}", self[(i, j)])?;
                sep = " ";
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Triangular structure tags.
///
/// `UpperUnit`/`LowerUnit` require an exact 1.0 diagonal and exact 0.0 in the
/// strict opposite triangle; `Upper`/`Lower` require only the exact zero
/// region (a nonzero diagonal is checked by the inversion routines, not
/// here).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangularShape {
    UpperUnit,
    Upper,
    LowerUnit,
    Lower,
}

impl TriangularShape {
    /// Structural test; zero regions must hold exactly.
    pub fn matches(&self, m: &DenseMatrix) -> bool {
        if !m.is_square() {
            return false;
        }
        let n = m.rows();
        let unit = matches!(self, TriangularShape::UpperUnit | TriangularShape::LowerUnit);
        let upper = matches!(self, TriangularShape::Upper | TriangularShape::UpperUnit);
        for i in 0..n {
            if unit && m[(i, i)] != 1.0 {
                return false;
            }
            for j in 0..n {
                let in_zero_region = if upper { i > j } else { j > i };
                if in_zero_region && m[(i, j)] != 0.0 {
                    return false;
                }
            }
        }
        true
    }

    pub fn require(&self, m: &DenseMatrix) -> Result<(), Error> {
        if self.matches(m) {
            Ok(())
        } else {
            Err(Error::NotTriangular {
                expected: match self {
                    TriangularShape::UpperUnit => "unit upper triangular",
                    TriangularShape::Upper => "upper triangular",
                    TriangularShape::LowerUnit => "unit lower triangular",
                    TriangularShape::Lower => "lower triangular",
                },
            })
        }
    }
}

/// `max_{i,j} |A_{i,j} - B_{i,j}|`, the verification metric used everywhere.
pub fn max_abs_residual(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64, Error> {
    a.check_same_shape(b)?;
    Ok(a.data
        .iter()
        .zip(&b.data)
        .fold(0.0, |m, (x, y)| m.max((x - y).abs())))
}

/// Split an upper triangular `T` into `D * Tunit` with `D` diagonal and
/// `Tunit` unit upper triangular (each row divided by its diagonal entry).
pub fn split_diag_unit(t: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix), Error> {
    let n = t.check_square()?;
    TriangularShape::Upper.require(t)?;
    let tol = zero_threshold(t.max_abs());
    let mut d = DenseMatrix::zeros(n, n);
    let mut unit = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let di = t[(i, i)];
        if di.abs() < tol {
            return Err(Error::SingularDiagonal { index: i });
        }
        d[(i, i)] = di;
        unit[(i, i)] = 1.0;
        for j in i + 1..n {
            unit[(i, j)] = t[(i, j)] / di;
        }
    }
    Ok((d, unit))
}

/// Column permutation stored as an index map: column `j` of `A * P` is column
/// `map[j]` of `A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            map: (0..n).collect(),
        }
    }

    pub fn from_map(map: Vec<usize>) -> Result<Self, Error> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            if v >= n || seen[v] {
                return Err(Error::InvalidParameter {
                    name: "permutation map",
                    value: v,
                });
            }
            seen[v] = true;
        }
        Ok(Permutation { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.map.len()];
        for (j, &v) in self.map.iter().enumerate() {
            inv[v] = j;
        }
        Permutation { map: inv }
    }

    /// `self` applied first, then `other`: `(A * P_self) * P_other = A * composed`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.map.len(), other.map.len());
        Permutation {
            map: other.map.iter().map(|&j| self.map[j]).collect(),
        }
    }

    /// `A * P`.
    pub fn apply_cols(&self, a: &DenseMatrix) -> DenseMatrix {
        assert_eq!(a.cols(), self.map.len());
        let mut out = DenseMatrix::zeros(a.rows(), a.cols());
        for i in 0..a.rows() {
            let src = a.row(i);
            let dst = out.row_mut(i);
            for (j, &s) in self.map.iter().enumerate() {
                dst[j] = src[s];
            }
        }
        out
    }

    /// `P * A` (rows permuted: row `map[k]` of the result is row `k` of `A`).
    pub fn apply_left(&self, a: &DenseMatrix) -> DenseMatrix {
        assert_eq!(a.rows(), self.map.len());
        let mut out = DenseMatrix::zeros(a.rows(), a.cols());
        for k in 0..a.rows() {
            out.row_mut(self.map[k]).copy_from_slice(a.row(k));
        }
        out
    }

    /// The explicit permutation matrix `P` with `P[i][j] = 1` iff `i = map[j]`.
    pub fn to_matrix(&self) -> DenseMatrix {
        let n = self.map.len();
        let mut p = DenseMatrix::zeros(n, n);
        for (j, &i) in self.map.iter().enumerate() {
            p[(i, j)] = 1.0;
        }
        p
    }

    /// `A * P` computed in place by column transpositions, metering one swap
    /// per element pair interchanged (n per column transposition).
    pub fn apply_cols_in_place_metered(&self, a: &mut DenseMatrix, ledger: &mut FlopLedger) {
        assert_eq!(a.cols(), self.map.len());
        let n = self.map.len();
        // Decompose into cycles; each cycle of length L costs L-1 column
        // transpositions. Chasing the inverse map leaves column map[j] in
        // slot j.
        let mut placed: Vec<usize> = self.inverse().map;
        for start in 0..n {
            while placed[start] != start {
                let other = placed[start];
                for i in 0..a.rows() {
                    let r = a.row_mut(i);
                    r.swap(start, other);
                }
                ledger.swap(a.rows() as u64);
                placed.swap(start, other);
            }
        }
    }
}

/// Greedy diagonalizing column permutation.
///
/// For each diagonal position in ascending order: keep the natural column
/// when it is still available and its candidate diagonal clears the
/// singularity tolerance; otherwise scan the remaining columns (metering the
/// pairwise magnitude comparisons) and take the one maximizing the candidate
/// diagonal magnitude, lowest index on ties. Fails when the best candidate is
/// below tolerance.
pub fn greedy_diagonalize(
    a: &DenseMatrix,
    ledger: &mut FlopLedger,
) -> Result<Permutation, Error> {
    let n = a.check_square()?;
    let tol = zero_threshold(a.max_abs());
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut map = vec![0usize; n];
    for i in 0..n {
        let natural = remaining.iter().position(|&c| c == i);
        let chosen = match natural {
            Some(pos) if a[(i, i)].abs() >= tol => pos,
            _ => {
                if remaining.len() > 1 {
                    ledger.cmp(remaining.len() as u64 - 1);
                }
                let mut best = 0;
                for (pos, &c) in remaining.iter().enumerate().skip(1) {
                    if a[(i, c)].abs() > a[(i, remaining[best])].abs() {
                        best = pos;
                    }
                }
                if a[(i, remaining[best])].abs() < tol {
                    return Err(Error::SplitFailed);
                }
                best
            }
        };
        map[i] = remaining.swap_remove(chosen);
    }
    Permutation::from_map(map)
}

// ---------------------------------------------------------------------------
// Text format: first line "rows cols", then one line per row of decimal
// floats separated by single spaces. The writer emits shortest round-trip
// decimals, so write-then-read is value-exact for all finite doubles.
// ---------------------------------------------------------------------------

pub fn read_matrix_from(reader: impl Read) -> Result<DenseMatrix, FileError> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or(FileError::Format {
            line: 1,
            msg: "empty file".into(),
        })??;
    let mut parts = header.split_whitespace();
    let rows: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or(FileError::Format {
            line: 1,
            msg: "expected \"rows cols\" header".into(),
        })?;
    let cols: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or(FileError::Format {
            line: 1,
            msg: "expected \"rows cols\" header".into(),
        })?;
    if rows == 0 || cols == 0 || parts.next().is_some() {
        return Err(FileError::Format {
            line: 1,
            msg: "expected \"rows cols\" header with positive sizes".into(),
        });
    }
    let mut m = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        let line = lines.next().ok_or(FileError::Format {
            line: i + 2,
            msg: "missing row".into(),
        })??;
        let mut count = 0;
        for (j, tok) in line.split_whitespace().enumerate() {
            if j >= cols {
                return Err(FileError::Format {
                    line: i + 2,
                    msg: format!("expected {cols} values"),
                });
            }
            let v: f64 = tok.parse().map_err(|_| FileError::Format {
                line: i + 2,
                msg: format!("bad float {tok:?}"),
            })?;
            if !v.is_finite() {
                return Err(FileError::Format {
                    line: i + 2,
                    msg: "entries must be finite".into(),
                });
            }
            m[(i, j)] = v;
            count += 1;
        }
        if count != cols {
            return Err(FileError::Format {
                line: i + 2,
                msg: format!("expected {cols} values, got {count}"),
            });
        }
    }
    Ok(m)
}

pub fn write_matrix_to(w: impl Write, m: &DenseMatrix) -> Result<(), FileError> {
    let mut w = BufWriter::new(w);
    writeln!(w, "{} {}", m.rows(), m.cols())?;
    write!(w, "{m}")?;
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix, FileError> {
    read_matrix_from(std::fs::File::open(path)?)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<(), FileError> {
    write_matrix_to(std::fs::File::create(path)?, m)
}
