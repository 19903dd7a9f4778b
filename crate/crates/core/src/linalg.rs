//! Small linear-algebra toolkit: row-sparse complex operators, a cached
//! Hermitian eigendecomposition propagator and a Lanczos `exp(-iHt)v`.

use ndarray::{Array1, Array2, ArrayView1, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Row-major sparse matrix. Each row keeps its entries sorted by column.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOp {
    dim: usize,
    rows: Vec<Vec<(usize, C64)>>,
}

impl SparseOp {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, rows: vec![Vec::new(); dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![ONE; dim])
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let rows = diag
            .iter()
            .enumerate()
            .map(|(i, &v)| if v == ZERO { Vec::new() } else { vec![(i, v)] })
            .collect();
        Self { dim: diag.len(), rows }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut op = Self::zeros(dim);
        for (r, c, v) in triplets {
            op.rows[r].push((c, v));
        }
        for row in op.rows.iter_mut() {
            compact_row(row);
        }
        op
    }

    pub fn from_dense(m: &Array2<C64>) -> Self {
        let dim = m.nrows();
        let rows = (0..dim)
            .map(|r| (0..dim).filter_map(|c| (m[[r, c]] != ZERO).then(|| (c, m[[r, c]]))).collect())
            .collect();
        Self { dim, rows }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn rows(&self) -> &[Vec<(usize, C64)>] {
        &self.rows
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.rows[r]
            .binary_search_by_key(&c, |&(col, _)| col)
            .map(|k| self.rows[r][k].1)
            .unwrap_or(ZERO)
    }

    pub fn scale(&self, s: C64) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| (c, v * s)).collect())
            .collect();
        Self { dim: self.dim, rows }
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, other: &SparseOp, s: C64) {
        assert_eq!(self.dim, other.dim);
        for (row, orow) in self.rows.iter_mut().zip(&other.rows) {
            if orow.is_empty() {
                continue;
            }
            row.extend(orow.iter().map(|&(c, v)| (c, v * s)));
            compact_row(row);
        }
    }

    pub fn matmul(&self, other: &SparseOp) -> SparseOp {
        assert_eq!(self.dim, other.dim);
        let mut out = SparseOp::zeros(self.dim);
        let mut acc = vec![ZERO; self.dim];
        let mut touched: Vec<usize> = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            for &(k, a) in row {
                for &(c, b) in &other.rows[k] {
                    if acc[c] == ZERO {
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            touched.dedup();
            let orow = &mut out.rows[r];
            for &c in &touched {
                if acc[c] != ZERO {
                    orow.push((c, acc[c]));
                }
                acc[c] = ZERO;
            }
            touched.clear();
        }
        out
    }

    pub fn adjoint(&self) -> SparseOp {
        SparseOp::from_triplets(
            self.dim,
            self.rows
                .iter()
                .enumerate()
                .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (c, r, v.conj()))),
        )
    }

    pub fn apply(&self, v: ArrayView1<C64>) -> Array1<C64> {
        debug_assert_eq!(v.len(), self.dim);
        self.rows
            .iter()
            .map(|row| row.iter().fold(ZERO, |acc, &(c, a)| acc + a * v[c]))
            .collect()
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut m = Array2::zeros((self.dim, self.dim));
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[[r, c]] = v;
            }
        }
        m
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                worst = worst.max((v - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.rows.iter().flatten().fold(0.0, |m, &(_, v)| m.max(v.norm()))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &SparseOp) -> SparseOp {
        let dim = self.dim * other.dim;
        let mut rows = Vec::with_capacity(dim);
        for arow in &self.rows {
            for brow in &other.rows {
                let mut row = Vec::with_capacity(arow.len() * brow.len());
                for &(ac, av) in arow {
                    for &(bc, bv) in brow {
                        row.push((ac * other.dim + bc, av * bv));
                    }
                }
                rows.push(row);
            }
        }
        SparseOp { dim, rows }
    }

    /// Hermitian part `(A + A†)/2`.
    pub fn hermitize(&self) -> SparseOp {
        let mut h = self.scale(C64::new(0.5, 0.0));
        h.add_scaled(&self.adjoint(), C64::new(0.5, 0.0));
        h
    }
}

fn compact_row(row: &mut Vec<(usize, C64)>) {
    row.sort_by_key(|&(c, _)| c);
    let mut out: Vec<(usize, C64)> = Vec::with_capacity(row.len());
    for &(c, v) in row.iter() {
        match out.last_mut() {
            Some((lc, lv)) if *lc == c => *lv += v,
            _ => out.push((c, v)),
        }
    }
    out.retain(|&(_, v)| v != ZERO);
    *row = out;
}

/// Eigendecomposition `H = V diag(λ) V†` of a Hermitian matrix, used to apply
/// `exp(-iHt)` exactly for any `t`.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub values: Array1<f64>,
    pub vectors: Array2<C64>,
}

impl HermitianEig {
    pub fn new(h: &Array2<C64>) -> Result<Self> {
        let (values, vectors) = eigh_hermitian(h)?;
        Ok(Self { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `exp(-iHt) v`
    pub fn propagate(&self, t: f64, v: ArrayView1<C64>) -> Array1<C64> {
        let coeffs = self.vectors.t().mapv(|x| x.conj()).dot(&v);
        let phased: Array1<C64> = coeffs
            .iter()
            .zip(self.values.iter())
            .map(|(&c, &l)| c * C64::from_polar(1.0, -l * t))
            .collect();
        self.vectors.dot(&phased)
    }

    /// Dense `f(H) = V diag(f(λ)) V†`.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> Array2<C64> {
        let fd: Array1<C64> = self.values.iter().map(|&l| f(l)).collect();
        let scaled = &self.vectors * &fd.view().insert_axis(ndarray::Axis(0));
        scaled.dot(&self.vectors.t().mapv(|x| x.conj()))
    }
}

/// LAPACK reads row-major input as its transpose, which for a complex
/// Hermitian matrix is the conjugate; copy into column-major first.
pub fn eigh_hermitian(h: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let mut f = Array2::zeros(h.raw_dim().f());
    f.assign(h);
    Ok(f.eigh(UPLO::Lower)?)
}

pub fn norm(v: ArrayView1<C64>) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨a|b⟩`
pub fn inner(a: ArrayView1<C64>, b: ArrayView1<C64>) -> C64 {
    a.iter().zip(b.iter()).fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}

pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|x| x.conj())
}

pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

/// Frobenius-style maximum entry deviation between two matrices.
pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// Spectral norm of a dense matrix via the largest eigenvalue of `A†A`.
pub fn spectral_norm(a: &Array2<C64>) -> Result<f64> {
    let gram = dagger(a).dot(a);
    let (vals, _) = eigh_hermitian(&gram)?;
    Ok(vals.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt())
}

const KRYLOV_MAX_DIM: usize = 40;

/// Computes `exp(-iHt) v` for Hermitian `H` given only its action, with
/// adaptive substeps so that the Lanczos truncation estimate summed over the
/// whole interval stays below `tol` (in 2-norm).
pub fn expmv_lanczos<F>(apply: F, v: ArrayView1<C64>, t: f64, tol: f64) -> Result<Array1<C64>>
where
    F: Fn(ArrayView1<C64>) -> Array1<C64>,
{
    let mut w = v.to_owned();
    if t == 0.0 {
        return Ok(w);
    }
    let total = t.abs();
    let sign = t.signum();
    let mut done = 0.0;
    let mut step = total;
    let mut guard = 0usize;
    while done < total {
        guard += 1;
        if guard > 100_000 {
            return Err(Error::NoConvergence { iterations: guard, residual: f64::NAN });
        }
        let beta0 = norm(w.view());
        if beta0 == 0.0 {
            return Ok(w);
        }
        let (basis, alpha, beta, breakdown) = lanczos_basis(&apply, w.view(), beta0);
        let m = alpha.len();
        let tri = tridiag(&alpha, &beta[..m - 1]);
        let eig = tri.eigh(UPLO::Lower)?;
        loop {
            let h = step.min(total - done);
            let coeffs = small_expm_e1(&eig, sign * h);
            let err = if breakdown { 0.0 } else { beta0 * beta[m - 1] * coeffs[m - 1].norm() };
            let budget = tol * h / total;
            if err <= budget || h < 1e-14 * total {
                let mut next = Array1::<C64>::zeros(w.len());
                for (k, q) in basis.iter().enumerate() {
                    next.scaled_add(coeffs[k] * beta0, q);
                }
                w = next;
                done += h;
                if err < 0.1 * budget {
                    step = h * 1.5;
                } else {
                    step = h;
                }
                break;
            }
            step = h * 0.5;
        }
    }
    Ok(w)
}

type LanczosOut = (Vec<Array1<C64>>, Vec<f64>, Vec<f64>, bool);

fn lanczos_basis<F>(apply: &F, v: ArrayView1<C64>, beta0: f64) -> LanczosOut
where
    F: Fn(ArrayView1<C64>) -> Array1<C64>,
{
    let n = v.len();
    let mdim = KRYLOV_MAX_DIM.min(n);
    let mut basis: Vec<Array1<C64>> = Vec::with_capacity(mdim);
    let mut alpha = Vec::with_capacity(mdim);
    let mut beta = Vec::with_capacity(mdim);
    basis.push(v.mapv(|x| x / beta0));
    let mut breakdown = false;
    for j in 0..mdim {
        let mut w = apply(basis[j].view());
        let a = inner(basis[j].view(), w.view()).re;
        alpha.push(a);
        // full reorthogonalization, twice
        for _ in 0..2 {
            for q in basis.iter() {
                let c = inner(q.view(), w.view());
                w.scaled_add(-c, q);
            }
        }
        let b = norm(w.view());
        beta.push(b);
        if b < 1e-13 * (1.0 + a.abs()) {
            breakdown = true;
            break;
        }
        if j + 1 < mdim {
            basis.push(w.mapv(|x| x / b));
        }
    }
    if basis.len() > alpha.len() {
        basis.truncate(alpha.len());
    }
    if alpha.len() == n {
        breakdown = true;
    }
    (basis, alpha, beta, breakdown)
}

fn tridiag(alpha: &[f64], beta: &[f64]) -> Array2<f64> {
    let m = alpha.len();
    let mut t = Array2::zeros((m, m));
    for i in 0..m {
        t[[i, i]] = alpha[i];
        if i + 1 < m {
            t[[i, i + 1]] = beta[i];
            t[[i + 1, i]] = beta[i];
        }
    }
    t
}

fn small_expm_e1(eig: &(Array1<f64>, Array2<f64>), t: f64) -> Vec<C64> {
    let (vals, vecs) = eig;
    let m = vals.len();
    (0..m)
        .map(|i| {
            (0..m).fold(ZERO, |acc, k| {
                acc + vecs[[i, k]] * vecs[[0, k]] * C64::from_polar(1.0, -vals[k] * t)
            })
        })
        .collect()
}

/// Extremal eigenvalue magnitude of a Hermitian operator given by its action,
/// via Lanczos with full reorthogonalization.
pub fn hermitian_norm_lanczos<F>(apply: F, dim: usize, seed_vec: ArrayView1<C64>, max_iter: usize) -> Result<f64>
where
    F: Fn(ArrayView1<C64>) -> Array1<C64>,
{
    let m = max_iter.min(dim);
    let beta0 = norm(seed_vec);
    if beta0 == 0.0 {
        return Ok(0.0);
    }
    let mut basis: Vec<Array1<C64>> = vec![seed_vec.mapv(|x| x / beta0)];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    for j in 0..m {
        let mut w = apply(basis[j].view());
        alpha.push(inner(basis[j].view(), w.view()).re);
        for _ in 0..2 {
            for q in basis.iter() {
                let c = inner(q.view(), w.view());
                w.scaled_add(-c, q);
            }
        }
        let b = norm(w.view());
        if b < 1e-12 || j + 1 == m {
            break;
        }
        beta.push(b);
        basis.push(w.mapv(|x| x / b));
    }
    let k = alpha.len();
    let t = tridiag(&alpha, &beta[..k - 1]);
    let (vals, _) = t.eigh(UPLO::Lower)?;
    Ok(vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn pauli_y() -> Array2<C64> {
        array![[ZERO, -I], [I, ZERO]]
    }

    #[test]
    fn sparse_product_matches_dense() {
        let a = SparseOp::from_triplets(3, [(0, 1, ONE), (1, 2, I), (2, 0, C64::new(2.0, 0.0))]);
        let b = SparseOp::from_triplets(3, [(1, 1, C64::new(3.0, 0.0)), (2, 0, ONE), (0, 2, -I)]);
        let dense = a.to_dense().dot(&b.to_dense());
        assert!(max_abs_diff(&a.matmul(&b).to_dense(), &dense) < 1e-15);
        assert!(max_abs_diff(&a.adjoint().to_dense(), &dagger(&a.to_dense())) < 1e-15);
    }

    #[test]
    fn kron_matches_dense() {
        let y = SparseOp::from_dense(&pauli_y());
        let z = SparseOp::from_diag(&[ONE, -ONE]);
        let k = y.kron(&z).to_dense();
        assert_eq!(k[[0, 2]], -I);
        assert_eq!(k[[1, 3]], I);
        assert_eq!(k[[2, 0]], I);
        assert_eq!(k.nrows(), 4);
    }

    #[test]
    fn eig_propagator_rotates_spin() {
        let eig = HermitianEig::new(&pauli_y()).unwrap();
        // exp(-i θ Y)|0> = cos θ |0> + sin θ |1>
        let out = eig.propagate(0.3, array![ONE, ZERO].view());
        assert!((out[0] - C64::new(0.3f64.cos(), 0.0)).norm() < 1e-14);
        assert!((out[1] - C64::new(0.3f64.sin(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn lanczos_matches_eig_route() {
        let n = 60;
        let h = Array2::from_shape_fn((n, n), |(i, j)| {
            let d = i as f64 - j as f64;
            C64::new((1.0 + i.min(j) as f64).sqrt() / (1.0 + d * d), 0.1 * d)
        });
        let h = (&h + &dagger(&h)).mapv(|x| x * 0.5);
        let v = Array1::from_shape_fn(n, |i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos()));
        let v = &v / C64::new(norm(v.view()), 0.0);
        let exact = HermitianEig::new(&h).unwrap().propagate(2.5, v.view());
        let kry = expmv_lanczos(|x| h.dot(&x), v.view(), 2.5, 1e-12).unwrap();
        let diff = norm((&exact - &kry).view());
        assert!(diff < 1e-10, "diff {diff}");
    }

    #[test]
    fn spectral_norm_of_pauli_commutator() {
        let x = array![[ZERO, ONE], [ONE, ZERO]];
        let c = commutator(&x, &pauli_y());
        assert!((spectral_norm(&c).unwrap() - 2.0).abs() < 1e-12);
    }
}
