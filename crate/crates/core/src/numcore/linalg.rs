//! Dense linear algebra for matrices up to 6×6.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 6;

/// Row-major dense matrix with at most 6 rows and 6 columns.
#[derive(Clone, Copy, PartialEq)]
pub struct SmallMatrix {
    rows: usize,
    cols: usize,
    data: [f64; MAX_DIM * MAX_DIM],
}

impl fmt::Debug for SmallMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SmallMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| format!("{:12.6e}", self[(i, j)])).collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl SmallMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows <= MAX_DIM && cols <= MAX_DIM, "SmallMatrix is limited to 6x6");
        SmallMatrix { rows, cols, data: [0.0; MAX_DIM * MAX_DIM] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// Builds from row-major entries.
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count does not match dimensions");
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = entries[i * cols + j];
            }
        }
        m
    }

    pub fn from_rows<const N: usize>(rows: &[[f64; N]]) -> Self {
        let mut m = Self::zeros(rows.len(), N);
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                m[(i, j)] = *v;
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

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] *= s;
            }
        }
        m
    }

    /// Largest absolute entry.
    pub fn norm_max(&self) -> f64 {
        let mut n: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                n = n.max(self[(i, j)].abs());
            }
        }
        n
    }

    pub fn norm_frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                s += self[(i, j)] * self[(i, j)];
            }
        }
        s.sqrt()
    }

    /// Largest absolute entry off the main diagonal.
    pub fn off_diagonal_max(&self) -> f64 {
        let mut n: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    n = n.max(self[(i, j)].abs());
                }
            }
        }
        n
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum()).collect()
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::identity(self.rows);
        for _ in 0..k {
            acc = acc * *self;
        }
        acc
    }

    fn require_square(&self, what: &str) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::Dimension(format!("{what} needs a square matrix, got {}x{}", self.rows, self.cols)))
        }
    }

    /// LU factorization with partial pivoting. Returns (lu, permutation, sign).
    fn lu(&self) -> (Self, [usize; MAX_DIM], f64) {
        let n = self.rows;
        let mut a = *self;
        let mut perm = [0usize; MAX_DIM];
        for (i, p) in perm.iter_mut().enumerate() {
            *p = i;
        }
        let mut sign = 1.0;
        for k in 0..n {
            let mut piv = k;
            for i in k + 1..n {
                if a[(i, k)].abs() > a[(piv, k)].abs() {
                    piv = i;
                }
            }
            if piv != k {
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(piv, j)];
                    a[(piv, j)] = t;
                }
                perm.swap(k, piv);
                sign = -sign;
            }
            let d = a[(k, k)];
            if d == 0.0 {
                continue;
            }
            for i in k + 1..n {
                let f = a[(i, k)] / d;
                a[(i, k)] = f;
                for j in k + 1..n {
                    a[(i, j)] -= f * a[(k, j)];
                }
            }
        }
        (a, perm, sign)
    }

    pub fn det(&self) -> Result<f64> {
        self.require_square("determinant")?;
        let (lu, _, sign) = self.lu();
        Ok((0..self.rows).fold(sign, |acc, i| acc * lu[(i, i)]))
    }

    /// Solves `self · x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.require_square("solve")?;
        let n = self.rows;
        if b.len() != n {
            return Err(Error::Dimension(format!("rhs length {} for {}x{} system", b.len(), n, n)));
        }
        let (lu, perm, _) = self.lu();
        let scale = self.norm_max();
        for i in 0..n {
            if lu[(i, i)].abs() <= f64::EPSILON * scale * n as f64 {
                return Err(Error::SingularPoint("singular linear system".into()));
            }
        }
        let mut y: Vec<f64> = (0..n).map(|i| b[perm[i]]).collect();
        for i in 0..n {
            for j in 0..i {
                y[i] -= lu[(i, j)] * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                y[i] -= lu[(i, j)] * y[j];
            }
            y[i] /= lu[(i, i)];
        }
        Ok(y)
    }

    pub fn inverse(&self) -> Result<Self> {
        self.require_square("inverse")?;
        let n = self.rows;
        let mut inv = Self::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }

    /// Row echelon reduction with complete pivoting. Returns (rank, reduced
    /// matrix, column order); pivots at or below `tol·‖m‖` count as zero.
    fn echelon(&self, tol: f64) -> (usize, Self, [usize; MAX_DIM]) {
        let (n, m) = (self.rows, self.cols);
        let mut a = *self;
        let mut cols = [0usize; MAX_DIM];
        for (j, c) in cols.iter_mut().enumerate() {
            *c = j;
        }
        let threshold = tol * self.norm_max();
        let mut rank = 0;
        while rank < n.min(m) {
            let (mut pi, mut pj, mut best) = (rank, rank, -1.0);
            for i in rank..n {
                for j in rank..m {
                    if a[(i, j)].abs() > best {
                        best = a[(i, j)].abs();
                        pi = i;
                        pj = j;
                    }
                }
            }
            if best <= threshold {
                break;
            }
            for j in 0..m {
                let t = a[(rank, j)];
                a[(rank, j)] = a[(pi, j)];
                a[(pi, j)] = t;
            }
            for i in 0..n {
                let t = a[(i, rank)];
                a[(i, rank)] = a[(i, pj)];
                a[(i, pj)] = t;
            }
            cols.swap(rank, pj);
            let d = a[(rank, rank)];
            for j in 0..m {
                a[(rank, j)] /= d;
            }
            for i in 0..n {
                if i != rank {
                    let f = a[(i, rank)];
                    if f != 0.0 {
                        for j in 0..m {
                            a[(i, j)] -= f * a[(rank, j)];
                        }
                    }
                }
            }
            rank += 1;
        }
        (rank, a, cols)
    }

    /// Numerical rank with threshold `tol·‖m‖`.
    pub fn rank(&self, tol: f64) -> usize {
        self.echelon(tol).0
    }

    /// Orthonormal basis of the numerical null space.
    pub fn kernel_basis(&self, tol: f64) -> Vec<Vec<f64>> {
        let m = self.cols;
        let (rank, a, cols) = self.echelon(tol);
        let mut raw = Vec::new();
        for free in rank..m {
            let mut v = vec![0.0; m];
            v[cols[free]] = 1.0;
            for r in 0..rank {
                v[cols[r]] = -a[(r, free)];
            }
            raw.push(v);
        }
        orthonormalize(raw)
    }

    /// Real eigenvalues clustered within `tol` (relative to the matrix norm),
    /// with algebraic multiplicities and kernel dimensions of `m − λI`.
    pub fn eig_real(&self, tol: f64) -> Result<EigenResult> {
        self.require_square("eigenvalues")?;
        let n = self.rows;
        let scale = self.norm_max().max(1.0);
        let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| self[(i, j)]);
        let raw = dm.complex_eigenvalues();
        let mut reals = Vec::with_capacity(n);
        for z in raw.iter() {
            if z.im.abs() > tol * scale {
                return Err(Error::NonRealSpectrum(z.im));
            }
            reals.push(z.re);
        }
        reals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let mut clusters: Vec<Vec<f64>> = Vec::new();
        for v in reals {
            match clusters.last_mut() {
                Some(c) if (v - c[c.len() - 1]).abs() <= tol * scale => c.push(v),
                _ => clusters.push(vec![v]),
            }
        }
        let mut eigenvalues = Vec::with_capacity(clusters.len());
        for c in clusters {
            let lambda = c.iter().sum::<f64>() / c.len() as f64;
            let shifted = *self - Self::identity(n).scale(lambda);
            let multiplicity = c.len();
            let kernel_dim = n - shifted.rank(tol);
            let mut riesz = None;
            for rho in 1..=multiplicity as u32 {
                if n - shifted.pow(rho).rank(tol) >= multiplicity {
                    riesz = Some(rho as usize);
                    break;
                }
            }
            eigenvalues.push(Eigenvalue { value: lambda, multiplicity, kernel_dim, riesz_index: riesz });
        }
        Ok(EigenResult { eigenvalues })
    }
}

fn orthonormalize(vs: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mut v in vs {
        for _ in 0..2 {
            for u in &out {
                let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= d * ui;
                }
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            out.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    out
}

/// One eigenvalue cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigenvalue {
    pub value: f64,
    pub multiplicity: usize,
    pub kernel_dim: usize,
    /// Smallest ρ with dim ker (m − λI)^ρ equal to the multiplicity.
    pub riesz_index: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult {
    pub eigenvalues: Vec<Eigenvalue>,
}

impl EigenResult {
    /// True when every eigenvalue has Riesz index 1.
    pub fn is_semisimple(&self) -> bool {
        self.eigenvalues.iter().all(|e| e.riesz_index == Some(1))
    }

    pub fn total_multiplicity(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.multiplicity).sum()
    }
}

impl Index<(usize, usize)> for SmallMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * MAX_DIM + j]
    }
}

impl IndexMut<(usize, usize)> for SmallMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * MAX_DIM + j]
    }
}

impl Mul for SmallMatrix {
    type Output = SmallMatrix;
    fn mul(self, o: SmallMatrix) -> SmallMatrix {
        assert_eq!(self.cols, o.rows, "matrix product dimension mismatch");
        let mut m = SmallMatrix::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a != 0.0 {
                    for j in 0..o.cols {
                        m[(i, j)] += a * o[(k, j)];
                    }
                }
            }
        }
        m
    }
}

impl Add for SmallMatrix {
    type Output = SmallMatrix;
    fn add(self, o: SmallMatrix) -> SmallMatrix {
        assert!(self.rows == o.rows && self.cols == o.cols);
        let mut m = self;
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] += o[(i, j)];
            }
        }
        m
    }
}

impl Sub for SmallMatrix {
    type Output = SmallMatrix;
    fn sub(self, o: SmallMatrix) -> SmallMatrix {
        assert!(self.rows == o.rows && self.cols == o.cols);
        let mut m = self;
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] -= o[(i, j)];
            }
        }
        m
    }
}
