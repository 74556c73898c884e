//! Banded LU factorization with partial pivoting (LAPACK `dgbtrf` layout).
//!
//! The Newton systems of the Killing-graph solver couple each grid unknown
//! to at most its 9-point stencil neighbors; with row-major unknown
//! numbering the Jacobian is banded with half-bandwidth about one grid row.

/// Banded matrix with `kl` subdiagonals and `ku` superdiagonals.
///
/// Column-major band storage with `kl` extra rows for pivoting fill:
/// `A(i, j)` lives at `data[j * ldab + (kl + ku + i - j)]`.
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
#[error("singular band matrix at pivot column {col}")]
pub struct Singular {
    pub col: usize,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ldab,
            data: vec![0.0; ldab * n],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        // after pivoting, U entries reach ku + kl above the diagonal
        debug_assert!(
            i + self.ku + self.kl >= j && j + self.kl >= i,
            "({i},{j}) outside band"
        );
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let id = self.idx(i, j);
        self.data[id] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    /// In-place LU with partial pivoting; returns the pivot row per column.
    pub fn factor(&mut self) -> Result<Vec<usize>, Singular> {
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            // pivot search in column k, rows k..=k+kl
            let reach = (k + kl).min(n - 1);
            let mut p = k;
            let mut pmax = self.get(k, k).abs();
            for i in k + 1..=reach {
                let v = self.get(i, k).abs();
                if v > pmax {
                    pmax = v;
                    p = i;
                }
            }
            if pmax == 0.0 {
                return Err(Singular { col: k });
            }
            piv[k] = p;
            // swap rows k and p across the active columns
            let col_hi = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=col_hi {
                    let a = j * ldab + (kl + ku + k - j);
                    let b = j * ldab + (kl + ku + p - j);
                    self.data.swap(a, b);
                }
            }
            // eliminate below the pivot
            let pivot = self.get(k, k);
            for i in k + 1..=reach {
                let m = self.get(i, k) / pivot;
                let id = self.idx(i, k);
                self.data[id] = m;
                if m != 0.0 {
                    for j in k + 1..=col_hi {
                        let upper = self.data[j * ldab + (kl + ku + k - j)];
                        if upper != 0.0 {
                            self.data[j * ldab + (kl + ku + i - j)] -= m * upper;
                        }
                    }
                }
            }
        }
        Ok(piv)
    }

    /// Solve `A x = b` given the factorization from [`BandMatrix::factor`].
    pub fn solve(&self, piv: &[usize], b: &mut [f64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        // forward: apply permutation and L
        for k in 0..n {
            b.swap(k, piv[k]);
            let reach = (k + kl).min(n - 1);
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=reach {
                    b[i] -= self.get(i, k) * bk;
                }
            }
        }
        // back substitution with U (bandwidth ku + kl after pivoting)
        for k in (0..n).rev() {
            let col_hi = (k + ku + kl).min(n - 1);
            let mut s = b[k];
            for j in k + 1..=col_hi {
                s -= self.get(k, j) * b[j];
            }
            b[k] = s / self.get(k, k);
        }
    }
}
