//! Sparse `L D Lᵀ` factorization without pivoting for complex symmetric
//! (`Aᵀ = A`) matrices, which covers every operator assembled here: real
//! symmetric `K, M, R` combined with complex scalars.
//!
//! Up-looking elimination-tree algorithm on a nested-dissection ordering.

use super::ordering::{invert, nested_dissection, Graph};
use crate::error::{Error, Result, SolverFailure};
use crate::sparse::{CsrMatrix, Symmetry, C64, ZERO};

#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    perm: Vec<usize>,
    pinv: Vec<usize>,
    /// Column pointers of `L` (strictly lower part, unit diagonal implied).
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<C64>,
    d: Vec<C64>,
    real: bool,
}

/// Reusable symbolic analysis (ordering, elimination tree, column counts).
#[derive(Debug, Clone)]
pub struct Symbolic {
    perm: Vec<usize>,
    pinv: Vec<usize>,
    parent: Vec<usize>,
    lp: Vec<usize>,
}

const NONE: usize = usize::MAX;

/// Lower triangle of `P A Pᵀ`, stored by rows (equivalently the upper
/// triangle by columns).
fn permuted_lower(a: &CsrMatrix, perm: &[usize], pinv: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<C64>) {
    let n = a.nrows();
    let mut ptr = vec![0; n + 1];
    let mut idx = Vec::with_capacity(a.nnz() / 2 + n);
    let mut val = Vec::with_capacity(a.nnz() / 2 + n);
    let mut row: Vec<(usize, C64)> = Vec::new();
    for k in 0..n {
        row.clear();
        for (j, v) in a.row(perm[k]) {
            let nj = pinv[j];
            if nj <= k {
                row.push((nj, v));
            }
        }
        row.sort_unstable_by_key(|e| e.0);
        for &(j, v) in &row {
            idx.push(j);
            val.push(v);
        }
        ptr[k + 1] = idx.len();
    }
    (ptr, idx, val)
}

impl Symbolic {
    pub fn analyze(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::arg("factorization needs a square matrix"));
        }
        let real_sym = a.symmetry() == Symmetry::Hermitian && a.is_real();
        if !(real_sym || a.symmetry() == Symmetry::ComplexSymmetric) {
            return Err(Error::arg("LDLᵀ needs a complex symmetric matrix"));
        }
        let perm = nested_dissection(&Graph::from_matrix(a));
        let pinv = invert(&perm);
        let n = a.nrows();
        let (ap, ai, _) = permuted_lower(a, &perm, &pinv);
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &i0 in &ai[ap[k]..ap[k + 1]] {
                let mut i = i0;
                while i < k && flag[i] != k {
                    if parent[i] == NONE {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut lp = vec![0; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        Ok(Self { perm, pinv, parent, lp })
    }

    pub fn nnz_l(&self) -> usize {
        *self.lp.last().unwrap()
    }

    /// Numeric factorization. Fails on a pivot smaller than
    /// `pivot_tol · max|A_kk|`.
    pub fn factor(&self, a: &CsrMatrix, pivot_tol: f64) -> Result<LdlFactor> {
        let n = a.nrows();
        if n != self.perm.len() {
            return Err(Error::arg("symbolic analysis belongs to another matrix"));
        }
        let (ap, ai, ax) = permuted_lower(a, &self.perm, &self.pinv);
        let scale = a.diagonal().iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let nnz = self.nnz_l();
        let mut li = vec![0usize; nnz];
        let mut lx = vec![ZERO; nnz];
        let mut d = vec![ZERO; n];
        let mut y = vec![ZERO; n];
        let mut pattern = vec![0usize; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            for p in ap[k]..ap[k + 1] {
                let mut i = ai[p];
                y[i] += ax[p];
                let mut len = 0;
                while i < k && flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = self.parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = ZERO;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = ZERO;
                let p2 = self.lp[i] + lnz[i];
                for p in self.lp[i]..p2 {
                    y[li[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                li[p2] = k;
                lx[p2] = l_ki;
                lnz[i] += 1;
            }
            if !(d[k].norm() > pivot_tol * scale) || !d[k].re.is_finite() || !d[k].im.is_finite() {
                return Err(Error::solver(
                    format!("pivot {k} of {n} is {:.3e} (too small for a factorization without pivoting)", d[k].norm()),
                    SolverFailure {
                        iterations: k,
                        residual: d[k].norm() / scale,
                        best_estimate: None,
                    },
                ));
            }
        }
        Ok(LdlFactor {
            n,
            perm: self.perm.clone(),
            pinv: self.pinv.clone(),
            lp: self.lp.clone(),
            li,
            lx,
            d,
            real: a.is_real(),
        })
    }
}

impl LdlFactor {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        Symbolic::analyze(a)?.factor(a, 1e-13)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz_l(&self) -> usize {
        self.li.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x: Vec<C64> = (0..n).map(|k| b[self.perm[k]]).collect();
        for j in 0..n {
            let xj = x[j];
            if xj != ZERO {
                for p in self.lp[j]..self.lp[j + 1] {
                    x[self.li[p]] -= self.lx[p] * xj;
                }
            }
        }
        for j in 0..n {
            x[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut s = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                s -= self.lx[p] * x[self.li[p]];
            }
            x[j] = s;
        }
        (0..n).map(|i| x[self.pinv[i]]).collect()
    }

    /// Solves `Aᴴ x = b`; for `Aᵀ = A` this is `conj(A⁻¹ conj(b))`.
    pub fn solve_adjoint(&self, b: &[C64]) -> Vec<C64> {
        let cb: Vec<C64> = b.iter().map(|v| v.conj()).collect();
        self.solve(&cb).into_iter().map(|v| v.conj()).collect()
    }

    /// Number of negative pivots, which for a real symmetric matrix equals the
    /// number of negative eigenvalues (Sylvester's law of inertia).
    pub fn negative_pivots(&self) -> Option<usize> {
        self.real.then(|| self.d.iter().filter(|v| v.re < 0.0).count())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{norm2, TripletBuilder};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cs(n: usize, seed: u64, complex: bool) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            let mut diag = C64::new(4.0, if complex { 1.0 } else { 0.0 });
            for _ in 0..3 {
                let j = rng.gen_range(0..n);
                if j != i {
                    let v = C64::new(rng.gen_range(-1.0..1.0), if complex { rng.gen_range(-1.0..1.0) } else { 0.0 });
                    b.push(i, j, v);
                    b.push(j, i, v);
                    diag += C64::new(2.0, 0.0);
                }
            }
            b.push(i, i, diag);
        }
        b.build(if complex { Symmetry::ComplexSymmetric } else { Symmetry::Hermitian })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn solves_random_systems(n in 1usize..150, seed in 0u64..1000, complex in any::<bool>()) {
            let a = random_cs(n, seed, complex);
            let f = LdlFactor::new(&a).unwrap();
            let b: Vec<C64> = (0..n).map(|i| C64::new(i as f64 + 1.0, (i % 3) as f64)).collect();
            let x = f.solve(&b);
            let r: Vec<C64> = a.matvec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
            prop_assert!(norm2(&r) <= 1e-12 * norm2(&b));
            let y = f.solve_adjoint(&b);
            let ah = a.conj().transpose();
            let r: Vec<C64> = ah.matvec(&y).iter().zip(&b).map(|(p, q)| p - q).collect();
            prop_assert!(norm2(&r) <= 1e-12 * norm2(&b));
        }
    }

    #[test]
    fn inertia_counts_negative_eigenvalues() {
        // diag(1..=10) shifted by 4.5 has four negative eigenvalues.
        let d: Vec<C64> = (1..=10).map(|k| C64::new(k as f64 - 4.5, 0.0)).collect();
        let a = CsrMatrix::from_diagonal(&d);
        let f = LdlFactor::new(&a).unwrap();
        assert_eq!(f.negative_pivots(), Some(4));
    }

    #[test]
    fn zero_pivot_is_reported() {
        let a = CsrMatrix::from_diagonal(&[C64::new(1.0, 0.0), ZERO]);
        assert_eq!(LdlFactor::new(&a).unwrap_err().kind(), "solver");
    }
}
