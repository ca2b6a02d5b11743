use std::fmt;
use std::ops::{Index, IndexMut};

use super::{GeoError, Rational};

/// A point or direction in Q^d.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RatVector(Vec<Rational>);

impl RatVector {
    pub fn new(entries: Vec<Rational>) -> Self {
        RatVector(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        RatVector(vec![Rational::zero(); dim])
    }

    pub fn unit(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[k] = Rational::one();
        v
    }

    pub fn from_ints(xs: &[i64]) -> Self {
        RatVector(xs.iter().map(|&x| Rational::from_int(x)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[Rational] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<Rational> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rational> {
        self.0.iter()
    }

    pub fn dot(&self, other: &RatVector) -> Rational {
        debug_assert_eq!(self.dim(), other.dim());
        let mut acc = Rational::zero();
        for (a, b) in self.0.iter().zip(&other.0) {
            if !a.is_zero() && !b.is_zero() {
                acc += a * b;
            }
        }
        acc
    }

    pub fn add(&self, other: &RatVector) -> RatVector {
        RatVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &RatVector) -> RatVector {
        RatVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, k: &Rational) -> RatVector {
        RatVector(self.0.iter().map(|a| a * k).collect())
    }

    pub fn neg(&self) -> RatVector {
        RatVector(self.0.iter().map(|a| -a).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Rational::is_zero)
    }

    /// Appends a trailing coordinate (used for homogeneous coordinates).
    pub fn extended(&self, last: Rational) -> RatVector {
        let mut v = self.0.clone();
        v.push(last);
        RatVector(v)
    }

    pub fn size(&self) -> u64 {
        self.0.iter().map(Rational::size).max().unwrap_or(1)
    }

    /// True when every coordinate lies in [0, 1].
    pub fn in_unit_cube(&self) -> bool {
        let one = Rational::one();
        self.0.iter().all(|x| !x.is_negative() && *x <= one)
    }
}

impl Index<usize> for RatVector {
    type Output = Rational;
    fn index(&self, i: usize) -> &Rational {
        &self.0[i]
    }
}

impl IndexMut<usize> for RatVector {
    fn index_mut(&mut self, i: usize) -> &mut Rational {
        &mut self.0[i]
    }
}

impl From<Vec<Rational>> for RatVector {
    fn from(v: Vec<Rational>) -> Self {
        RatVector(v)
    }
}

impl FromIterator<Rational> for RatVector {
    fn from_iter<I: IntoIterator<Item = Rational>>(iter: I) -> Self {
        RatVector(iter.into_iter().collect())
    }
}

impl fmt::Display for RatVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for RatVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}

/// Dense row-major rational matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, GeoError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(GeoError::Ragged);
        }
        Ok(RatMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_int_rows(rows: &[&[i64]]) -> Result<Self, GeoError> {
        Self::from_rows(
            rows.iter().map(|r| r.iter().map(|&x| Rational::from_int(x)).collect()).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> RatVector {
        RatVector::new(self.data[i * self.cols..(i + 1) * self.cols].to_vec())
    }

    pub fn row_slice(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> RatVector {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn entries(&self) -> &[Rational] {
        &self.data
    }

    pub fn mul(&self, other: &RatMatrix) -> Result<RatMatrix, GeoError> {
        if self.cols != other.rows {
            return Err(GeoError::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = RatMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &RatVector) -> Result<RatVector, GeoError> {
        if self.cols != v.dim() {
            return Err(GeoError::DimensionMismatch { expected: self.cols, found: v.dim() });
        }
        Ok((0..self.rows).map(|i| self.row(i).dot(v)).collect())
    }

    /// `v^T M`
    pub fn left_mul_vec(&self, v: &RatVector) -> Result<RatVector, GeoError> {
        if self.rows != v.dim() {
            return Err(GeoError::DimensionMismatch { expected: self.rows, found: v.dim() });
        }
        Ok((0..self.cols)
            .map(|j| {
                let mut acc = Rational::zero();
                for i in 0..self.rows {
                    if !v[i].is_zero() && !self[(i, j)].is_zero() {
                        acc += &v[i] * &self[(i, j)];
                    }
                }
                acc
            })
            .collect())
    }

    pub fn sub(&self, other: &RatMatrix) -> RatMatrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn size(&self) -> u64 {
        self.data.iter().map(Rational::size).max().unwrap_or(1)
    }

    /// Inverse by Gauss-Jordan elimination, `None` when singular.
    pub fn inverse(&self) -> Option<RatMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = RatMatrix::identity(n);
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a[(r, col)].is_zero())?;
            if pivot != col {
                a.swap_rows(pivot, col);
                inv.swap_rows(pivot, col);
            }
            let p = a[(col, col)].recip().ok()?;
            a.scale_row(col, &p);
            inv.scale_row(col, &p);
            for r in 0..n {
                if r != col && !a[(r, col)].is_zero() {
                    let f = a[(r, col)].clone();
                    a.axpy_row(r, col, &f);
                    inv.axpy_row(r, col, &f);
                }
            }
        }
        Some(inv)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    fn scale_row(&mut self, i: usize, k: &Rational) {
        for c in 0..self.cols {
            let v = &self.data[i * self.cols + c] * k;
            self.data[i * self.cols + c] = v;
        }
    }

    /// row_i -= f * row_j
    fn axpy_row(&mut self, i: usize, j: usize, f: &Rational) {
        for c in 0..self.cols {
            let d = f * &self.data[j * self.cols + c];
            self.data[i * self.cols + c] -= &d;
        }
    }
}

impl Index<(usize, usize)> for RatMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for i in 0..self.rows {
            writeln!(f, "  {}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Square `(d+1)x(d+1)` matrix with last row `(0, ..., 0, 1)`: an affine map
/// of Q^d acting on homogeneous coordinates `(x, 1)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct HomogeneousMatrix(RatMatrix);

impl HomogeneousMatrix {
    pub fn identity(d: usize) -> Self {
        HomogeneousMatrix(RatMatrix::identity(d + 1))
    }

    pub fn from_matrix(m: RatMatrix) -> Result<Self, GeoError> {
        let n = m.rows();
        if n == 0 || m.cols() != n {
            return Err(GeoError::NotHomogeneous);
        }
        for j in 0..n {
            let want = if j + 1 == n { Rational::one() } else { Rational::zero() };
            if m[(n - 1, j)] != want {
                return Err(GeoError::NotHomogeneous);
            }
        }
        Ok(HomogeneousMatrix(m))
    }

    /// Block form `(A b; 0 1)`.
    pub fn from_affine(linear: &RatMatrix, offset: &RatVector) -> Result<Self, GeoError> {
        let d = linear.rows();
        if linear.cols() != d || offset.dim() != d {
            return Err(GeoError::DimensionMismatch { expected: d, found: offset.dim() });
        }
        let mut m = RatMatrix::identity(d + 1);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = linear[(i, j)].clone();
            }
            m[(i, d)] = offset[i].clone();
        }
        Ok(HomogeneousMatrix(m))
    }

    /// Ambient dimension d (the matrix is `(d+1)x(d+1)`).
    pub fn dim(&self) -> usize {
        self.0.rows() - 1
    }

    pub fn matrix(&self) -> &RatMatrix {
        &self.0
    }

    /// Upper-left `d x d` block.
    pub fn linear_part(&self) -> RatMatrix {
        let d = self.dim();
        let mut m = RatMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = self.0[(i, j)].clone();
            }
        }
        m
    }

    /// Last column without its final entry.
    pub fn offset_part(&self) -> RatVector {
        let d = self.dim();
        (0..d).map(|i| self.0[(i, d)].clone()).collect()
    }

    /// Applies the map to `x` via `(x, 1)` and drops the trailing coordinate.
    pub fn apply(&self, x: &RatVector) -> Result<RatVector, GeoError> {
        let d = self.dim();
        if x.dim() != d {
            return Err(GeoError::DimensionMismatch { expected: d, found: x.dim() });
        }
        let y = self.0.mul_vec(&x.extended(Rational::one()))?;
        Ok(y.entries()[..d].iter().cloned().collect())
    }

    /// `self * rhs`: apply `rhs` first, then `self`.
    pub fn then_after(&self, rhs: &HomogeneousMatrix) -> Result<HomogeneousMatrix, GeoError> {
        Ok(HomogeneousMatrix(self.0.mul(&rhs.0)?))
    }

    pub fn size(&self) -> u64 {
        self.0.size()
    }
}

/// Ordered product of homogeneous matrices: the result applies `ms[0]` first
/// and the last element last. The empty sequence yields the identity of
/// dimension `dim`.
pub fn homogeneous_compose(
    ms: &[HomogeneousMatrix],
    dim: usize,
) -> Result<HomogeneousMatrix, GeoError> {
    let mut acc = HomogeneousMatrix::identity(dim);
    for m in ms {
        if m.dim() != dim {
            return Err(GeoError::DimensionMismatch { expected: dim, found: m.dim() });
        }
        acc = m.then_after(&acc)?;
    }
    Ok(acc)
}
