//! Compressed-row complex sparse matrices and a few dense-vector kernels.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    /// `Aᴴ = A`.
    Hermitian,
    /// `Aᵀ = A` without conjugation.
    ComplexSymmetric,
    None,
}

/// Row-compressed matrix. Column indices are sorted within each row and no
/// explicit zeros are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
    symmetry: Symmetry,
}

/// Accumulates `(row, col, value)` entries; duplicates are summed.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: C64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.entries.push((i, j, v));
    }

    pub fn push_real(&mut self, i: usize, j: usize, v: f64) {
        self.push(i, j, C64::new(v, 0.0));
    }

    pub fn build(mut self, symmetry: Symmetry) -> CsrMatrix {
        // Stable sort keeps the summation order deterministic.
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<C64> = Vec::with_capacity(self.entries.len());
        let mut k = 0;
        while k < self.entries.len() {
            let (i, j, mut v) = self.entries[k];
            k += 1;
            while k < self.entries.len() && self.entries[k].0 == i && self.entries[k].1 == j {
                v += self.entries[k].2;
                k += 1;
            }
            if v != ZERO {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
            }
        }
        for i in 0..self.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
            symmetry,
        }
    }
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        TripletBuilder::new(nrows, ncols).build(Symmetry::Hermitian)
    }

    pub fn identity(n: usize) -> Self {
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, ONE);
        }
        b.build(Symmetry::Hermitian)
    }

    pub fn from_diagonal(d: &[C64]) -> Self {
        let mut b = TripletBuilder::new(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            b.push(i, i, v);
        }
        let sym = if d.iter().all(|v| v.im == 0.0) {
            Symmetry::Hermitian
        } else {
            Symmetry::ComplexSymmetric
        };
        b.build(sym)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    /// `Aᵀ x` (no conjugation).
    pub fn matvec_transpose(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![ZERO; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
        y
    }

    /// `xᴴ A x`.
    pub fn quad_form(&self, x: &[C64]) -> C64 {
        let ax = self.matvec(x);
        dotc(x, &ax)
    }

    pub fn scaled(&self, s: C64) -> Self {
        CsrMatrix::lincomb(&[(s, self)]).expect("single term")
    }

    pub fn transpose(&self) -> Self {
        let mut b = TripletBuilder::new(self.ncols, self.nrows);
        for (i, j, v) in self.triplets() {
            b.push(j, i, v);
        }
        b.build(self.symmetry)
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    /// `Σ c_k A_k` over matrices of equal shape. The symmetry flag is the
    /// strongest one that the inputs guarantee.
    pub fn lincomb(terms: &[(C64, &CsrMatrix)]) -> Result<Self> {
        let (nrows, ncols) = match terms.first() {
            Some((_, m)) => (m.nrows, m.ncols),
            None => return Err(Error::arg("empty linear combination")),
        };
        if terms.iter().any(|(_, m)| m.nrows != nrows || m.ncols != ncols) {
            return Err(Error::arg("shape mismatch in linear combination"));
        }
        let mut b = TripletBuilder::new(nrows, ncols);
        let mut all_real_sym = true;
        let mut all_cs = true;
        let mut all_herm_real_coeff = true;
        for (c, m) in terms {
            if *c == ZERO {
                continue;
            }
            let real_sym = m.symmetry == Symmetry::Hermitian && m.is_real();
            all_real_sym &= real_sym;
            all_cs &= real_sym || m.symmetry == Symmetry::ComplexSymmetric;
            all_herm_real_coeff &= m.symmetry == Symmetry::Hermitian && c.im == 0.0;
            for (i, j, v) in m.triplets() {
                b.push(i, j, *c * v);
            }
        }
        let complex_coeff = terms.iter().any(|(c, m)| *c != ZERO && c.im != 0.0 && m.nnz() > 0);
        let sym = if all_real_sym && !complex_coeff {
            Symmetry::Hermitian
        } else if all_cs {
            Symmetry::ComplexSymmetric
        } else if all_herm_real_coeff {
            Symmetry::Hermitian
        } else {
            Symmetry::None
        };
        Ok(b.build(sym))
    }

    /// Keeps the listed rows and columns (in the given order).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut b = TripletBuilder::new(rows.len(), cols.len());
        for (ri, &r) in rows.iter().enumerate() {
            for (j, v) in self.row(r) {
                let cj = col_map[j];
                if cj != usize::MAX {
                    b.push(ri, cj, v);
                }
            }
        }
        let sym = if rows == cols { self.symmetry } else { Symmetry::None };
        b.build(sym)
    }

    /// Checks the symmetry flag against the stored entries.
    pub fn verify_symmetry(&self, tol: f64) -> bool {
        if self.nrows != self.ncols {
            return self.symmetry == Symmetry::None;
        }
        let scale = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        match self.symmetry {
            Symmetry::None => true,
            Symmetry::Hermitian => self.triplets().all(|(i, j, v)| (v - self.get(j, i).conj()).norm() <= tol * scale),
            Symmetry::ComplexSymmetric => self.triplets().all(|(i, j, v)| (v - self.get(j, i)).norm() <= tol * scale),
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(self.nrows, self.ncols, ZERO);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    /// Coordinate text format: one `row col re im` line per stored entry
    /// (zero-based indices), preceded by a `rows cols nnz` header.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(w, "{i} {j} {:e} {:e}", v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_coordinate<R: BufRead>(r: R, symmetry: Symmetry) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))??;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header {header:?}"))))
            .collect::<Result<_>>()?;
        if dims.len() != 3 {
            return Err(Error::Parse(format!("bad header {header:?}")));
        }
        let mut b = TripletBuilder::new(dims[0], dims[1]);
        for line in lines {
            let line = line?;
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 4 {
                return Err(Error::Parse(format!("bad entry {line:?}")));
            }
            let p = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}")));
            let i: usize = t[0].parse().map_err(|_| Error::Parse(line.clone()))?;
            let j: usize = t[1].parse().map_err(|_| Error::Parse(line.clone()))?;
            if i >= dims[0] || j >= dims[1] {
                return Err(Error::Parse(format!("entry out of range {line:?}")));
            }
            b.push(i, j, C64::new(p(t[2])?, p(t[3])?));
        }
        Ok(b.build(symmetry))
    }
}

/// `Σ conj(x_i) y_i`.
pub fn dotc(x: &[C64], y: &[C64]) -> C64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// `Σ x_i y_i` (bilinear, no conjugation).
pub fn dotu(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `y += a x`.
pub fn axpy(a: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scale(a: C64, x: &mut [C64]) {
    x.iter_mut().for_each(|v| *v *= a);
}

pub fn conj_vec(x: &[C64]) -> Vec<C64> {
    x.iter().map(|v| v.conj()).collect()
}

pub fn real_vec(x: &[f64]) -> Vec<C64> {
    x.iter().map(|&v| C64::new(v, 0.0)).collect()
}

/// `xᴴ M y` for a weight matrix `M`.
pub fn inner_m(m: &CsrMatrix, x: &[C64], y: &[C64]) -> C64 {
    dotc(x, &m.matvec(y))
}

pub fn norm_m(m: &CsrMatrix, x: &[C64]) -> f64 {
    inner_m(m, x, x).re.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> CsrMatrix {
        let mut b = TripletBuilder::new(3, 3);
        b.push_real(0, 0, 2.0);
        b.push_real(0, 1, -1.0);
        b.push_real(1, 0, -1.0);
        b.push_real(1, 1, 2.0);
        b.push_real(1, 1, 0.5);
        b.push_real(2, 2, 1.0);
        b.push_real(2, 0, 0.0);
        b.build(Symmetry::Hermitian)
    }

    #[test]
    fn build_sums_duplicates_and_drops_zeros() {
        let m = sample();
        assert_eq!(m.nnz(), 5);
        assert_eq!(m.get(1, 1), C64::new(2.5, 0.0));
        assert_eq!(m.get(2, 0), ZERO);
        assert!(m.verify_symmetry(0.0));
        for i in 0..3 {
            let cols: Vec<usize> = m.row(i).map(|(j, _)| j).collect();
            assert!(cols.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn lincomb_symmetry_flags() {
        let m = sample();
        let h = CsrMatrix::lincomb(&[(ONE, &m), (C64::new(2.0, 0.0), &m)]).unwrap();
        assert_eq!(h.symmetry(), Symmetry::Hermitian);
        let cs = CsrMatrix::lincomb(&[(ONE, &m), (C64::new(1.0, 1.0), &m)]).unwrap();
        assert_eq!(cs.symmetry(), Symmetry::ComplexSymmetric);
        assert!(cs.verify_symmetry(0.0));
        assert!(!cs.conj().to_dense().eq(&cs.to_dense()));
    }

    #[test]
    fn submatrix_and_coordinate_io() {
        let m = sample();
        let s = m.submatrix(&[0, 1], &[0, 1]);
        assert_eq!(s.nrows(), 2);
        assert_eq!(s.get(1, 1), C64::new(2.5, 0.0));
        let mut buf = Vec::new();
        m.write_coordinate(&mut buf).unwrap();
        let back = CsrMatrix::read_coordinate(&buf[..], Symmetry::Hermitian).unwrap();
        assert_eq!(back, m);
    }

    proptest! {
        #[test]
        fn matvec_matches_dense(xs in proptest::collection::vec(-5.0f64..5.0, 6)) {
            let m = CsrMatrix::lincomb(&[(C64::new(0.3, -2.0), &sample())]).unwrap();
            let x: Vec<C64> = xs.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
            let y = m.matvec(&x);
            let d = m.to_dense() * nalgebra::DVector::from_vec(x.clone());
            for i in 0..3 {
                prop_assert!((y[i] - d[i]).norm() < 1e-12);
            }
            let yt = m.matvec_transpose(&x);
            let dt = m.to_dense().transpose() * nalgebra::DVector::from_vec(x);
            for i in 0..3 {
                prop_assert!((yt[i] - dt[i]).norm() < 1e-12);
            }
        }
    }
}
