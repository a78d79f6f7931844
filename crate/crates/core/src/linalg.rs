//! Exact linear algebra over Gaussian rationals.
//!
//! Everything here is exact: ranks, null spaces and solutions carry no
//! tolerance. Sparse rows are sorted `(column, value)` lists with no stored
//! zeros.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::scalar::GaussRat;

pub type SparseVec = Vec<(usize, GaussRat)>;

/// `acc += factor * v` for sorted sparse vectors.
pub fn sparse_axpy(acc: &SparseVec, factor: &GaussRat, v: &SparseVec) -> SparseVec {
    let mut out = Vec::with_capacity(acc.len() + v.len());
    let (mut i, mut j) = (0, 0);
    while i < acc.len() || j < v.len() {
        let take_acc = j >= v.len() || (i < acc.len() && acc[i].0 < v[j].0);
        let take_v = i >= acc.len() || (j < v.len() && v[j].0 < acc[i].0);
        if take_acc {
            out.push(acc[i].clone());
            i += 1;
        } else if take_v {
            let val = factor * &v[j].1;
            if !val.is_zero() {
                out.push((v[j].0, val));
            }
            j += 1;
        } else {
            let mut val = acc[i].1.clone();
            val.add_mul(factor, &v[j].1);
            if !val.is_zero() {
                out.push((acc[i].0, val));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

fn sparse_get(v: &SparseVec, col: usize) -> Option<&GaussRat> {
    v.binary_search_by_key(&col, |(c, _)| *c).ok().map(|k| &v[k].1)
}

fn sparse_scale(v: &SparseVec, factor: &GaussRat) -> SparseVec {
    v.iter().map(|(c, x)| (*c, x * factor)).collect()
}

/// Accumulates a sparse linear combination keyed by column.
#[derive(Default)]
struct Accumulator {
    values: BTreeMap<usize, GaussRat>,
}

impl Accumulator {
    fn add(&mut self, col: usize, factor: &GaussRat, value: &GaussRat) {
        self.values.entry(col).or_insert_with(GaussRat::zero).add_mul(factor, value);
    }

    fn finish(self) -> SparseVec {
        self.values.into_iter().filter(|(_, v)| !v.is_zero()).collect()
    }
}

/// Dense matrix, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<GaussRat>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self[(r, c)].to_string()).collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = GaussRat;
    fn index(&self, (r, c): (usize, usize)) -> &GaussRat {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut GaussRat {
        &mut self.data[r * self.cols + c]
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![GaussRat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = GaussRat::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<GaussRat>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_columns(rows: usize, columns: &[SparseVec]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (c, col) in columns.iter().enumerate() {
            for (r, v) in col {
                m[(*r, c)] = v.clone();
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

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn row(&self, r: usize) -> &[GaussRat] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> SparseVec {
        (0..self.rows)
            .filter_map(|r| {
                let v = &self[(r, c)];
                (!v.is_zero()).then(|| (r, v.clone()))
            })
            .collect()
    }

    pub fn column_dense(&self, c: usize) -> Vec<GaussRat> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn sparse_row(&self, r: usize) -> SparseVec {
        self.row(r)
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(c, v)| (c, v.clone()))
            .collect()
    }

    pub fn mul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in product");
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs[(k, j)];
                    if !b.is_zero() {
                        out.data[i * rhs.cols + j].add_mul(a, b);
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[GaussRat]) -> Vec<GaussRat> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| {
                let mut acc = GaussRat::zero();
                for (a, b) in self.row(r).iter().zip(v) {
                    if !a.is_zero() && !b.is_zero() {
                        acc.add_mul(a, b);
                    }
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        DenseMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        DenseMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, factor: &GaussRat) -> DenseMatrix {
        let data = self.data.iter().map(|a| a * factor).collect();
        DenseMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn commutator(&self, rhs: &DenseMatrix) -> DenseMatrix {
        self.mul(rhs).sub(&rhs.mul(self))
    }

    pub fn trace(&self) -> GaussRat {
        let mut acc = GaussRat::zero();
        for i in 0..self.rows.min(self.cols) {
            acc += &self[(i, i)];
        }
        acc
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].clone();
            }
        }
        out
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows * rhs.rows, self.cols * rhs.cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = &self[(r1, c1)];
                if a.is_zero() {
                    continue;
                }
                for r2 in 0..rhs.rows {
                    for c2 in 0..rhs.cols {
                        out[(r1 * rhs.rows + r2, c1 * rhs.cols + c2)] = a * &rhs[(r2, c2)];
                    }
                }
            }
        }
        out
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        SparseMatrix { rows: self.rows, cols: self.cols, data: (0..self.rows).map(|r| self.sparse_row(r)).collect() }
    }

    pub fn rank(&self) -> usize {
        let mut ech = Echelon::new(self.cols);
        for r in 0..self.rows {
            ech.insert(self.sparse_row(r));
        }
        ech.rank()
    }

    /// Basis of `{v : self · v = 0}` as sparse column vectors.
    pub fn nullspace(&self) -> Vec<SparseVec> {
        let mut ech = Echelon::new(self.cols);
        for r in 0..self.rows {
            ech.insert(self.sparse_row(r));
        }
        ech.nullspace()
    }

    /// Inverse of a square matrix, or `None` when singular.
    pub fn inverse(&self) -> Option<DenseMatrix> {
        assert!(self.is_square());
        let n = self.rows;
        let mut ech = Echelon::with_tracking(n);
        for r in 0..n {
            if !ech.insert(self.sparse_row(r)) {
                return None;
            }
        }
        // e_k = Σ_r c_r A_r (rows of A), so c is row k of the inverse.
        let mut out = DenseMatrix::zeros(n, n);
        for k in 0..n {
            let coords = ech.solve(&vec![(k, GaussRat::one())]).expect("full rank");
            for (r, v) in coords {
                out[(k, r)] = v;
            }
        }
        Some(out)
    }
}

/// Sparse matrix stored by rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<SparseVec>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Vec::new(); rows] }
    }

    pub fn identity(n: usize) -> Self {
        Self { rows: n, cols: n, data: (0..n).map(|i| vec![(i, GaussRat::one())]).collect() }
    }

    pub fn from_rows(cols: usize, data: Vec<SparseVec>) -> Self {
        debug_assert!(data.iter().all(|r| r.iter().all(|(c, v)| *c < cols && !v.is_zero())));
        Self { rows: data.len(), cols, data }
    }

    pub fn from_columns(rows: usize, columns: &[SparseVec]) -> Self {
        let mut data: Vec<SparseVec> = vec![Vec::new(); rows];
        for (c, col) in columns.iter().enumerate() {
            for (r, v) in col {
                assert!(*r < rows, "row index out of range");
                if !v.is_zero() {
                    data[*r].push((c, v.clone()));
                }
            }
        }
        Self { rows, cols: columns.len(), data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &SparseVec {
        &self.data[r]
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(Vec::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Vec::is_empty)
    }

    pub fn get(&self, r: usize, c: usize) -> GaussRat {
        sparse_get(&self.data[r], c).cloned().unwrap_or_else(GaussRat::zero)
    }

    pub fn column(&self, c: usize) -> SparseVec {
        self.data
            .iter()
            .enumerate()
            .filter_map(|(r, row)| sparse_get(row, c).map(|v| (r, v.clone())))
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for (r, row) in self.data.iter().enumerate() {
            for (c, v) in row {
                m[(r, *c)] = v.clone();
            }
        }
        m
    }

    pub fn mul(&self, rhs: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in product");
        let data = self
            .data
            .iter()
            .map(|row| {
                let mut acc = Accumulator::default();
                for (k, a) in row {
                    for (j, b) in &rhs.data[*k] {
                        acc.add(*j, a, b);
                    }
                }
                acc.finish()
            })
            .collect();
        SparseMatrix { rows: self.rows, cols: rhs.cols, data }
    }

    pub fn mul_vec(&self, v: &SparseVec) -> SparseVec {
        let dense: BTreeMap<usize, &GaussRat> = v.iter().map(|(c, x)| (*c, x)).collect();
        self.data
            .iter()
            .enumerate()
            .filter_map(|(r, row)| {
                let mut acc = GaussRat::zero();
                for (c, a) in row {
                    if let Some(x) = dense.get(c) {
                        acc.add_mul(a, x);
                    }
                }
                (!acc.is_zero()).then_some((r, acc))
            })
            .collect()
    }

    pub fn add(&self, rhs: &SparseMatrix) -> SparseMatrix {
        self.axpy(&GaussRat::one(), rhs)
    }

    pub fn sub(&self, rhs: &SparseMatrix) -> SparseMatrix {
        self.axpy(&GaussRat::int(-1), rhs)
    }

    /// `self + factor * rhs`.
    pub fn axpy(&self, factor: &GaussRat, rhs: &SparseMatrix) -> SparseMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| sparse_axpy(a, factor, b)).collect();
        SparseMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, factor: &GaussRat) -> SparseMatrix {
        if factor.is_zero() {
            return SparseMatrix::zeros(self.rows, self.cols);
        }
        let data = self.data.iter().map(|r| sparse_scale(r, factor)).collect();
        SparseMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn rank(&self) -> usize {
        let mut ech = Echelon::new(self.cols);
        for row in &self.data {
            ech.insert(row.clone());
        }
        ech.rank()
    }

    pub fn nullspace(&self) -> Vec<SparseVec> {
        let mut ech = Echelon::new(self.cols);
        for row in &self.data {
            ech.insert(row.clone());
        }
        ech.nullspace()
    }

    /// Flattened nonzero entries keyed by `(row, col)`; used to set up
    /// linear systems whose unknowns scale whole matrices.
    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), &GaussRat)> {
        self.data.iter().enumerate().flat_map(|(r, row)| row.iter().map(move |(c, v)| ((r, *c), v)))
    }
}

/// Incrementally maintained reduced row echelon form.
///
/// Optionally tracks how every stored row is combined from the inserted
/// vectors, which turns it into a coordinate solver for a spanning set.
#[derive(Clone, Debug)]
pub struct Echelon {
    ncols: usize,
    rows: Vec<SparseVec>,
    pivots: BTreeMap<usize, usize>,
    combos: Option<Vec<SparseVec>>,
    inserted: usize,
}

impl Echelon {
    pub fn new(ncols: usize) -> Self {
        Self { ncols, rows: Vec::new(), pivots: BTreeMap::new(), combos: None, inserted: 0 }
    }

    pub fn with_tracking(ncols: usize) -> Self {
        Self { combos: Some(Vec::new()), ..Self::new(ncols) }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn inserted(&self) -> usize {
        self.inserted
    }

    pub fn pivot_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.pivots.keys().copied()
    }

    /// Reduces `v` against the stored rows. Returns the residual and the
    /// combination (over stored rows) that was subtracted.
    fn reduce(&self, v: &SparseVec) -> (SparseVec, Vec<(usize, GaussRat)>) {
        let mut residual = v.clone();
        let mut used = Vec::new();
        for (col, val) in v {
            if let Some(&ri) = self.pivots.get(col) {
                residual = sparse_axpy(&residual, &-val, &self.rows[ri]);
                used.push((ri, val.clone()));
            }
        }
        (residual, used)
    }

    /// Inserts a vector; returns whether it was independent of the rows so far.
    pub fn insert(&mut self, v: SparseVec) -> bool {
        debug_assert!(v.iter().all(|(c, _)| *c < self.ncols));
        let index = self.inserted;
        self.inserted += 1;
        let (residual, used) = self.reduce(&v);
        if residual.is_empty() {
            return false;
        }
        let lead = residual[0].0;
        let inv = residual[0].1.inv();
        let new_row = sparse_scale(&residual, &inv);
        let new_combo = self.combos.as_ref().map(|combos| {
            let mut acc = vec![(index, GaussRat::one())];
            for (ri, val) in &used {
                acc = sparse_axpy(&acc, &-val, &combos[*ri]);
            }
            sparse_scale(&acc, &inv)
        });
        // Keep the form reduced: clear the new pivot column from older rows.
        for ri in 0..self.rows.len() {
            if let Some(f) = sparse_get(&self.rows[ri], lead).cloned() {
                self.rows[ri] = sparse_axpy(&self.rows[ri], &-&f, &new_row);
                if let (Some(combos), Some(nc)) = (self.combos.as_mut(), new_combo.as_ref()) {
                    combos[ri] = sparse_axpy(&combos[ri], &-&f, nc);
                }
            }
        }
        self.pivots.insert(lead, self.rows.len());
        self.rows.push(new_row);
        if let (Some(combos), Some(nc)) = (self.combos.as_mut(), new_combo) {
            combos.push(nc);
        }
        true
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v).0.is_empty()
    }

    /// Coordinates of `v` over the inserted vectors, if `v` lies in their
    /// span. Requires tracking.
    pub fn solve(&self, v: &SparseVec) -> Option<SparseVec> {
        let combos = self.combos.as_ref().expect("Echelon::solve needs tracking");
        let (residual, used) = self.reduce(v);
        if !residual.is_empty() {
            return None;
        }
        let mut acc = Vec::new();
        for (ri, val) in used {
            acc = sparse_axpy(&acc, &val, &combos[ri]);
        }
        Some(acc)
    }

    /// Basis of the null space of the stored rows.
    pub fn nullspace(&self) -> Vec<SparseVec> {
        let free: Vec<usize> = (0..self.ncols).filter(|c| !self.pivots.contains_key(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v: BTreeMap<usize, GaussRat> = BTreeMap::new();
                v.insert(f, GaussRat::one());
                for (&pc, &ri) in &self.pivots {
                    if let Some(x) = sparse_get(&self.rows[ri], f) {
                        v.insert(pc, -x);
                    }
                }
                v.into_iter().collect()
            })
            .collect()
    }
}

/// Solves `A x = b` exactly. Returns one particular solution (free variables
/// set to zero) and a null space basis, or `None` when inconsistent.
pub fn solve_affine(a: &SparseMatrix, b: &SparseVec) -> Option<(SparseVec, Vec<SparseVec>)> {
    // Augment with b as an extra column and look for a null vector with
    // last coordinate -1.
    let n = a.cols();
    let bmap: BTreeMap<usize, &GaussRat> = b.iter().map(|(r, v)| (*r, v)).collect();
    let mut ech = Echelon::new(n + 1);
    for r in 0..a.rows() {
        let mut row = a.row(r).clone();
        if let Some(v) = bmap.get(&r) {
            row.push((n, (*v).clone()));
        }
        ech.insert(row);
    }
    assert!(bmap.keys().all(|r| *r < a.rows()), "right-hand side longer than matrix");
    if ech.pivots.contains_key(&n) {
        return None;
    }
    let mut particular = Vec::new();
    for (&pc, &ri) in &ech.pivots {
        if let Some(x) = sparse_get(&ech.rows[ri], n) {
            particular.push((pc, x.clone()));
        }
    }
    let homogeneous = ech
        .nullspace()
        .into_iter()
        .filter(|v| v.iter().all(|(c, _)| *c != n))
        .collect();
    Some((particular, homogeneous))
}
