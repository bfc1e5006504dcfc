//! Sparse and dense linear-algebra substrate.
//!
//! [`DenseVector`] is a fixed-length owned vector, [`CsrMatrix`] a compressed
//! sparse row matrix with strictly increasing column indices per row, and
//! [`Ilu0Factors`] the zero fill-in incomplete LU factorization used as a
//! right preconditioner for GMRES.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector must have at least one entry")]
    EmptyVector,
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("invalid CSR structure: {0}")]
    InvalidStructure(String),
    #[error("row {row} has no stored diagonal entry")]
    MissingDiagonal { row: usize },
    #[error("zero or non-finite pivot in row {row}")]
    ZeroPivot { row: usize },
}

/// Euclidean norm of a slice.
pub fn norm2<T: Real>(x: &[T]) -> T {
    // scaled accumulation so 1e200-sized entries do not overflow
    let scale = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() || !scale.is_finite() {
        return scale;
    }
    let sum: T = x
        .iter()
        .map(|&v| {
            let s = v / scale;
            s * s
        })
        .sum();
    scale * sum.sqrt()
}

pub fn dot<T: Real>(x: &[T], y: &[T]) -> T {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(&a, &b)| a * b).sum()
}

/// `y += alpha * x`
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

/// Owned vector of fixed length `n >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DenseVector<T: Real>(Vec<T>);

impl<T: Real> DenseVector<T> {
    pub fn from_vec(values: Vec<T>) -> Result<Self, LinalgError> {
        if values.is_empty() {
            return Err(LinalgError::EmptyVector);
        }
        Ok(Self(values))
    }

    /// # Panics
    /// If `n == 0`.
    pub fn zeros(n: usize) -> Self {
        Self::filled(n, T::zero())
    }

    pub fn ones(n: usize) -> Self {
        Self::filled(n, T::one())
    }

    pub fn filled(n: usize, value: T) -> Self {
        assert!(n > 0, "DenseVector length must be positive");
        Self(vec![value; n])
    }

    pub fn norm2(&self) -> T {
        norm2(&self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    /// `alpha * self + beta * other`
    pub fn lin_comb(&self, alpha: T, other: &Self, beta: T) -> Result<Self, LinalgError> {
        if self.len() != other.len() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| alpha * a + beta * b)
                .collect(),
        ))
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Self(self.0.iter().map(|&v| alpha * v).collect())
    }
}

impl<T: Real> Deref for DenseVector<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

// Mutable access goes through a slice so the length can never change.
impl<T: Real> DerefMut for DenseVector<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.0
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix<T: Real> {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Validates and wraps raw CSR arrays.
    pub fn try_from_csr(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self, LinalgError> {
        let bad = |msg: String| Err(LinalgError::InvalidStructure(msg));
        if n_rows == 0 || n_cols == 0 {
            return bad("matrix dimensions must be positive".into());
        }
        if row_offsets.len() != n_rows + 1 {
            return bad(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n_rows + 1
            ));
        }
        if row_offsets[0] != 0 {
            return bad("row_offsets[0] must be 0".into());
        }
        if col_indices.len() != values.len() {
            return bad("col_indices and values differ in length".into());
        }
        if row_offsets[n_rows] != col_indices.len() {
            return bad("row_offsets[n_rows] must equal nnz".into());
        }
        for i in 0..n_rows {
            let (start, end) = (row_offsets[i], row_offsets[i + 1]);
            if end < start {
                return bad(format!("row_offsets decreases at row {i}"));
            }
            let cols = &col_indices[start..end];
            if cols.iter().any(|&c| c >= n_cols) {
                return bad(format!("column index out of range in row {i}"));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("column indices not strictly increasing in row {i}"));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, T)],
    ) -> Result<Self, LinalgError> {
        if n_rows == 0 || n_cols == 0 {
            return Err(LinalgError::InvalidStructure(
                "matrix dimensions must be positive".into(),
            ));
        }
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n_rows];
        for &(i, j, v) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(LinalgError::InvalidStructure(format!(
                    "triplet ({i}, {j}) outside {n_rows}x{n_cols}"
                )));
            }
            rows[i].push((j, v));
        }
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                if col_indices.len() > *row_offsets.last().unwrap()
                    && *col_indices.last().unwrap() == j
                {
                    let last = values.last_mut().unwrap();
                    *last = *last + v;
                } else {
                    col_indices.push(j);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![T::one(); n])
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        assert!(n > 0, "matrix dimensions must be positive");
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Dense row-major input; exact zeros are not stored.
    pub fn from_dense(rows: &[Vec<T>]) -> Result<Self, LinalgError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(LinalgError::DimensionMismatch {
                    expected: n_cols,
                    found: row.len(),
                });
            }
            triplets.extend(
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != T::zero())
                    .map(|(j, &v)| (i, j, v)),
            );
        }
        Self::from_triplets(n_rows, n_cols, &triplets)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Stored `(col, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> T {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => T::zero(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut dense = vec![vec![T::zero(); self.n_cols]; self.n_rows];
        for (i, row) in dense.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        dense
    }

    /// Sparse matrix-vector product `A x`.
    pub fn spmv(&self, x: &[T]) -> Result<DenseVector<T>, LinalgError> {
        let mut y = vec![T::zero(); self.n_rows];
        self.spmv_into(x, &mut y)?;
        Ok(DenseVector(y))
    }

    pub fn spmv_into(&self, x: &[T], y: &mut [T]) -> Result<(), LinalgError> {
        if x.len() != self.n_cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n_cols,
                found: x.len(),
            });
        }
        if y.len() != self.n_rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n_rows,
                found: y.len(),
            });
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let range = self.row_offsets[i]..self.row_offsets[i + 1];
            *yi = self.col_indices[range.clone()]
                .iter()
                .zip(&self.values[range])
                .map(|(&j, &v)| v * x[j])
                .sum();
        }
        Ok(())
    }

    fn diagonal_positions(&self) -> Result<Vec<usize>, LinalgError> {
        (0..self.n_rows)
            .map(|i| {
                let range = self.row_offsets[i]..self.row_offsets[i + 1];
                self.col_indices[range.clone()]
                    .binary_search(&i)
                    .map(|k| range.start + k)
                    .map_err(|_| LinalgError::MissingDiagonal { row: i })
            })
            .collect()
    }
}

/// ILU(0) factors stored on the sparsity pattern of the source matrix.
///
/// The strictly lower part holds `L` (unit diagonal implied), the rest holds `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ilu0Factors<T: Real> {
    lu: CsrMatrix<T>,
    diag: Vec<usize>,
}

impl<T: Real> Ilu0Factors<T> {
    pub fn factorize(a: &CsrMatrix<T>) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare {
                rows: a.n_rows,
                cols: a.n_cols,
            });
        }
        let diag = a.diagonal_positions()?;
        let mut lu = a.clone();
        let n = lu.n_rows;
        let mut marker = vec![usize::MAX; n];

        for i in 0..n {
            let (start, end) = (lu.row_offsets[i], lu.row_offsets[i + 1]);
            for p in start..end {
                marker[lu.col_indices[p]] = p;
            }
            for p in start..diag[i] {
                let k = lu.col_indices[p];
                let l_ik = lu.values[p] / lu.values[diag[k]];
                lu.values[p] = l_ik;
                for q in diag[k] + 1..lu.row_offsets[k + 1] {
                    let slot = marker[lu.col_indices[q]];
                    if slot != usize::MAX {
                        lu.values[slot] = lu.values[slot] - l_ik * lu.values[q];
                    }
                }
            }
            let pivot = lu.values[diag[i]];
            if pivot == T::zero() || !pivot.is_finite() {
                return Err(LinalgError::ZeroPivot { row: i });
            }
            for p in start..end {
                marker[lu.col_indices[p]] = usize::MAX;
            }
        }
        Ok(Self { lu, diag })
    }

    pub fn dim(&self) -> usize {
        self.lu.n_rows
    }

    /// Combined `L\U` storage.
    pub fn combined(&self) -> &CsrMatrix<T> {
        &self.lu
    }

    /// Solves `L U z = r`.
    pub fn apply(&self, r: &[T]) -> Result<DenseVector<T>, LinalgError> {
        let mut z = r.to_vec();
        self.apply_in_place(&mut z)?;
        DenseVector::from_vec(z)
    }

    pub fn apply_in_place(&self, z: &mut [T]) -> Result<(), LinalgError> {
        let n = self.dim();
        if z.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: z.len(),
            });
        }
        let lu = &self.lu;
        for i in 0..n {
            let mut acc = z[i];
            for p in lu.row_offsets[i]..self.diag[i] {
                acc = acc - lu.values[p] * z[lu.col_indices[p]];
            }
            z[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = z[i];
            for p in self.diag[i] + 1..lu.row_offsets[i + 1] {
                acc = acc - lu.values[p] * z[lu.col_indices[p]];
            }
            z[i] = acc / lu.values[self.diag[i]];
        }
        Ok(())
    }
}

/// 1D Laplacian `tridiag(-1, 2, -1)`.
pub fn laplacian_1d<T: Real>(n: usize) -> CsrMatrix<T> {
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        if i > 0 {
            t.push((i, i - 1, -T::one()));
        }
        t.push((i, i, T::lit(2.0)));
        if i + 1 < n {
            t.push((i, i + 1, -T::one()));
        }
    }
    CsrMatrix::from_triplets(n, n, &t).expect("valid laplacian pattern")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Dense Gaussian elimination with partial pivoting; test oracle only.
    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a
            .iter()
            .zip(b)
            .map(|(row, &bi)| {
                let mut r = row.clone();
                r.push(bi);
                r
            })
            .collect();
        for k in 0..n {
            let piv = (k..n)
                .max_by(|&x, &y| m[x][k].abs().total_cmp(&m[y][k].abs()))
                .unwrap();
            m.swap(k, piv);
            for i in k + 1..n {
                let f = m[i][k] / m[k][k];
                let pivot_row = m[k].clone();
                for (x, p) in m[i][k..].iter_mut().zip(&pivot_row[k..]) {
                    *x -= f * p;
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
            x[i] = (m[i][n] - s) / m[i][i];
        }
        x
    }

    #[test]
    fn spmv_identity_and_zero() {
        let i3 = CsrMatrix::<f64>::identity(3);
        assert_eq!(
            i3.spmv(&[1.0, 2.0, 3.0]).unwrap().as_slice(),
            &[1.0, 2.0, 3.0]
        );

        let z = CsrMatrix::<f64>::from_triplets(3, 3, &[]).unwrap();
        assert_eq!(z.spmv(&[4.0, -1.0, 7.0]).unwrap().as_slice(), &[0.0; 3]);
    }

    #[test]
    fn spmv_hand_example() {
        let a = CsrMatrix::from_dense(&[vec![2.0, 0.0], vec![1.0, 3.0]]).unwrap();
        assert_eq!(a.spmv(&[1.0, 1.0]).unwrap().as_slice(), &[2.0, 4.0]);
    }

    #[test]
    fn spmv_dimension_mismatch() {
        let a = CsrMatrix::<f64>::identity(3);
        assert_eq!(
            a.spmv(&[1.0, 2.0]),
            Err(LinalgError::DimensionMismatch {
                expected: 3,
                found: 2
            })
        );
    }

    #[test]
    fn norm2_examples() {
        assert_eq!(norm2(&[0.0f64, 0.0, 0.0]), 0.0);
        assert_eq!(norm2(&[3.0f64, 4.0]), 5.0);
        assert_eq!(norm2(&[1.0f64]), 1.0);
        assert_relative_eq!(norm2(&[3e200f64, 4e200]), 5e200, max_relative = 1e-15);
    }

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let a =
            CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 0.5), (1, 1, 4.0)])
                .unwrap();
        assert_eq!(a.row_offsets(), &[0, 2, 3]);
        assert_eq!(a.col_indices(), &[0, 2, 1]);
        assert_eq!(a.values(), &[2.0, 1.5, 4.0]);
    }

    #[test]
    fn raw_csr_validation() {
        assert!(
            CsrMatrix::<f64>::try_from_csr(2, 2, vec![0, 1, 2], vec![0, 1], vec![1.0, 1.0]).is_ok()
        );
        // unsorted columns
        assert!(
            CsrMatrix::<f64>::try_from_csr(1, 2, vec![0, 2], vec![1, 0], vec![1.0, 1.0]).is_err()
        );
        // nnz mismatch
        assert!(
            CsrMatrix::<f64>::try_from_csr(1, 2, vec![0, 1], vec![0, 1], vec![1.0, 1.0]).is_err()
        );
        // column out of range
        assert!(CsrMatrix::<f64>::try_from_csr(1, 2, vec![0, 1], vec![2], vec![1.0]).is_err());
    }

    #[test]
    fn ilu0_diagonal_is_exact() {
        let d = CsrMatrix::from_diagonal(&[2.0, 4.0]);
        let f = Ilu0Factors::factorize(&d).unwrap();
        assert_eq!(f.combined(), &d);
        assert_eq!(f.apply(&[2.0, 4.0]).unwrap().as_slice(), &[1.0, 1.0]);

        let id = Ilu0Factors::factorize(&CsrMatrix::<f64>::identity(3)).unwrap();
        assert_eq!(
            id.apply(&[5.0, -2.0, 0.5]).unwrap().as_slice(),
            &[5.0, -2.0, 0.5]
        );
    }

    #[test]
    fn ilu0_lower_triangular_reproduces_matrix() {
        let a = CsrMatrix::from_dense(&[
            vec![2.0, 0.0, 0.0],
            vec![4.0, 3.0, 0.0],
            vec![-1.0, 6.0, 5.0],
        ])
        .unwrap();
        let f = Ilu0Factors::factorize(&a).unwrap();
        let lu = f.combined();
        // U diagonal = A diagonal, L = A's strictly lower part scaled by the pivots
        assert_eq!(lu.get(0, 0), 2.0);
        assert_eq!(lu.get(1, 1), 3.0);
        assert_eq!(lu.get(2, 2), 5.0);
        assert_eq!(lu.get(1, 0), 2.0);
        assert_eq!(lu.get(2, 0), -0.5);
        assert_eq!(lu.get(2, 1), 2.0);
        let b = [1.0, 2.0, 3.0];
        let x = f.apply(&b).unwrap();
        let ax = a.spmv(&x).unwrap();
        for (u, v) in ax.iter().zip(b) {
            assert_relative_eq!(*u, v, max_relative = 1e-14);
        }
    }

    #[test]
    fn ilu0_tridiagonal_matches_dense_lu() {
        let a = laplacian_1d::<f64>(4);
        let f = Ilu0Factors::factorize(&a).unwrap();
        let b = [1.0, -2.0, 0.5, 3.0];
        let z = f.apply(&b).unwrap();
        let expected = dense_solve(&a.to_dense(), &b);
        for (u, v) in z.iter().zip(&expected) {
            assert_relative_eq!(*u, *v, max_relative = 1e-12);
        }
        let ones = a.spmv(&[1.0; 4]).unwrap();
        let back = f.apply(&ones).unwrap();
        for v in back.iter() {
            assert_relative_eq!(*v, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn ilu0_drops_fill_on_five_point_stencil() {
        // 2x2 grid laplacian: fill at (1,2) and (2,1) is dropped, so LU != A
        let a = CsrMatrix::from_dense(&[
            vec![4.0, -1.0, -1.0, 0.0],
            vec![-1.0, 4.0, 0.0, -1.0],
            vec![-1.0, 0.0, 4.0, -1.0],
            vec![0.0, -1.0, -1.0, 4.0],
        ])
        .unwrap();
        let f = Ilu0Factors::factorize(&a).unwrap();
        assert_eq!(f.combined().nnz(), a.nnz());
        assert_eq!(f.combined().col_indices(), a.col_indices());
    }

    #[test]
    fn ilu0_errors() {
        let missing = CsrMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(
            Ilu0Factors::factorize(&missing),
            Err(LinalgError::MissingDiagonal { row: 0 })
        );
        // stored pivot that cancels to zero in row 1
        let singular =
            CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)])
                .unwrap();
        assert_eq!(
            Ilu0Factors::factorize(&singular),
            Err(LinalgError::ZeroPivot { row: 1 })
        );
        let rect = CsrMatrix::<f64>::from_triplets(2, 3, &[(0, 0, 1.0)]).unwrap();
        assert!(matches!(
            Ilu0Factors::factorize(&rect),
            Err(LinalgError::NotSquare { .. })
        ));
    }

    #[test]
    fn generic_over_f32() {
        let a = laplacian_1d::<f32>(5);
        let f = Ilu0Factors::factorize(&a).unwrap();
        let r = a.spmv(&[1.0f32; 5]).unwrap();
        let z = f.apply(&r).unwrap();
        assert!(z.iter().all(|v| (v - 1.0).abs() < 1e-5));
    }

    fn random_sparse() -> impl Strategy<Value = CsrMatrix<f64>> {
        (1usize..8, 1usize..8).prop_flat_map(|(r, c)| {
            proptest::collection::vec((0..r, 0..c, -10.0f64..10.0), 0..20)
                .prop_map(move |t| CsrMatrix::from_triplets(r, c, &t).unwrap())
        })
    }

    proptest! {
        #[test]
        fn spmv_is_linear(
            a in random_sparse(),
            alpha in -5.0f64..5.0,
            beta in -5.0f64..5.0,
            seed in proptest::collection::vec(-10.0f64..10.0, 16),
        ) {
            let n = a.n_cols();
            let x = &seed[..n];
            let y = &seed[8..8 + n];
            let combo: Vec<f64> = x.iter().zip(y).map(|(a, b)| alpha * a + beta * b).collect();
            let lhs = a.spmv(&combo).unwrap();
            let ax = a.spmv(x).unwrap();
            let ay = a.spmv(y).unwrap();
            let rhs = ax.lin_comb(alpha, &ay, beta).unwrap();
            let scale = 1.0 + rhs.norm2() + ax.norm2() * alpha.abs() + ay.norm2() * beta.abs();
            let diff = lhs.lin_comb(1.0, &rhs, -1.0).unwrap().norm2();
            prop_assert!(diff <= 1e-12 * scale);
        }

        #[test]
        fn ilu0_inverts_tridiagonal(
            n in 1usize..30,
            diag in proptest::collection::vec(3.0f64..10.0, 30),
            off in proptest::collection::vec(-1.0f64..1.0, 60),
        ) {
            let mut t = Vec::new();
            for i in 0..n {
                t.push((i, i, diag[i]));
                if i > 0 { t.push((i, i - 1, off[i])); }
                if i + 1 < n { t.push((i, i + 1, off[30 + i])); }
            }
            let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
            let f = Ilu0Factors::factorize(&a).unwrap();
            let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() + 1.5).collect();
            let z = f.apply(&a.spmv(&x).unwrap()).unwrap();
            let err = z.lin_comb(1.0, &DenseVector::from_vec(x.clone()).unwrap(), -1.0).unwrap().norm2();
            prop_assert!(err <= 1e-10 * norm2(&x));
        }

        #[test]
        fn norm2_triangle_and_homogeneity(
            x in proptest::collection::vec(-1e3f64..1e3, 1..20),
            shift in -1e3f64..1e3,
            alpha in -1e3f64..1e3,
        ) {
            let y: Vec<f64> = x.iter().map(|v| v * 0.5 + shift).collect();
            let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            prop_assert!(norm2(&s) <= (norm2(&x) + norm2(&y)) * (1.0 + 1e-14));
            let ax: Vec<f64> = x.iter().map(|v| alpha * v).collect();
            let lhs = norm2(&ax);
            let rhs = alpha.abs() * norm2(&x);
            prop_assert!((lhs - rhs).abs() <= 1e-13 * (1.0 + rhs));
        }
    }
}
