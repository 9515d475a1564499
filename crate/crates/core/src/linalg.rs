//! Small dense/banded/iterative linear-algebra kernels used by the solvers.

/// Banded matrix in LAPACK-like band storage with room for fill-in from
/// partial pivoting. Row `i`, column `j` with `|i - j| <= kl` (lower) or
/// `j - i <= ku` (upper) is addressable; factorization widens the upper band
/// to `kl + ku`.
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// `ab[row_in_band * n + j]` where `row_in_band = kl + ku + i - j`.
    ab: Vec<f64>,
    ipiv: Vec<usize>,
    factored: bool,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let rows = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            ab: vec![0.0; rows * n],
            ipiv: vec![0; n],
            factored: false,
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        let band_row = self.kl + self.ku + i - j;
        band_row * self.n + j
    }

    /// Add `v` to entry `(i, j)`. Panics outside the declared band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(
            j + self.ku >= i && i + self.kl >= j,
            "entry ({i},{j}) outside band"
        );
        let k = self.idx(i, j);
        self.ab[k] += v;
    }

    /// LU factorization with partial pivoting (band version, in place).
    /// Returns `false` when a pivot underflows (singular to working precision).
    pub fn factor(&mut self) -> bool {
        let n = self.n;
        let kl = self.kl;
        let ku_eff = self.kl + self.ku; // widened upper band after fill-in
        for k in 0..n {
            // Pivot search in column k among rows k..=min(k+kl, n-1).
            let last = (k + kl).min(n - 1);
            let mut piv_row = k;
            let mut piv_val = self.ab[self.idx(k, k)].abs();
            for i in (k + 1)..=last {
                let v = self.ab[self.idx(i, k)].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = i;
                }
            }
            if piv_val < 1e-300 {
                return false;
            }
            self.ipiv[k] = piv_row;
            // Swap rows k and piv_row across the accessible columns.
            if piv_row != k {
                let jmax = (k + ku_eff).min(n - 1);
                for j in k..=jmax {
                    let a = self.idx(k, j);
                    let b = self.idx(piv_row, j);
                    self.ab.swap(a, b);
                }
            }
            // Eliminate below the pivot.
            let pivot = self.ab[self.idx(k, k)];
            for i in (k + 1)..=last {
                let idx_ik = self.idx(i, k);
                let lik = self.ab[idx_ik] / pivot;
                self.ab[idx_ik] = lik;
                if lik != 0.0 {
                    let jmax = (k + ku_eff).min(n - 1);
                    for j in (k + 1)..=jmax {
                        let akj = self.ab[self.idx(k, j)];
                        if akj != 0.0 {
                            let idx_ij = self.idx(i, j);
                            self.ab[idx_ij] -= lik * akj;
                        }
                    }
                }
            }
        }
        self.factored = true;
        true
    }

    /// Solve `A x = b` in place using the stored factorization.
    pub fn solve(&self, b: &mut [f64]) {
        assert!(self.factored, "solve() before factor()");
        let n = self.n;
        let kl = self.kl;
        let ku_eff = self.kl + self.ku;
        // Forward substitution with row swaps.
        for k in 0..n {
            let p = self.ipiv[k];
            if p != k {
                b.swap(k, p);
            }
            let last = (k + kl).min(n - 1);
            let bk = b[k];
            if bk != 0.0 {
                for i in (k + 1)..=last {
                    b[i] -= self.ab[self.idx(i, k)] * bk;
                }
            }
        }
        // Back substitution.
        for k in (0..n).rev() {
            let jmax = (k + ku_eff).min(n - 1);
            let mut s = b[k];
            for j in (k + 1)..=jmax {
                s -= self.ab[self.idx(k, j)] * b[j];
            }
            b[k] = s / self.ab[self.idx(k, k)];
        }
    }
}

/// Sparse symmetric positive-definite matrix in CSR form for CG solves.
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from triplets, summing duplicates. Rows need not be sorted.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            per_row[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut per_row {
            row.sort_unstable_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == j {
                    v += row[k].1;
                    k += 1;
                }
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == i {
                    d[i] = self.values[k];
                }
            }
        }
        d
    }
}

/// Jacobi-preconditioned conjugate gradients for SPD systems.
///
/// Returns the iteration count on success; `None` if `max_iter` is exhausted
/// before the residual 2-norm drops under `tol * max(1, |b|)`.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Option<usize> {
    let n = a.n;
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d.abs() > 1e-300 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = vec![0.0; n];
    a.mul_vec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= tol * bnorm {
            return Some(it);
        }
        a.mul_vec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            // Not SPD to working precision; bail out rather than diverge.
            return None;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if rnorm <= tol * bnorm {
        Some(max_iter)
    } else {
        None
    }
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`.
/// Returns the abscissa of the best sample after the interval shrinks
/// below `tol` or `max_iter` evalu, whichever comes first.
pub fn golden_section_min(
    mut f: impl FnMut(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_iter: usize,
) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (b - a).abs() < tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        c
    } else {
        d
    }
}

/// Bisection root finder on `[a, b]`; requires a sign change.
/// Returns the midpoint after the bracket shrinks below `tol`.
#[cfg_attr(not(test), allow(dead_code))]
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}
