//! Dense symmetric-definite generalized eigensolver `A x = λ M x`.
//!
//! The pair is reduced to the standard problem `L⁻¹ A L⁻ᵀ y = λ y` with the
//! Cholesky factor `M = L Lᵀ`, brought to tridiagonal form by Householder
//! reflections, and the wanted smallest eigenvalues are isolated by Sturm
//! bisection. Eigenvectors come from inverse iteration on the tridiagonal
//! matrix, with Gram–Schmidt inside clusters of close eigenvalues, followed by
//! the back transformations `y = Q z`, `x = L⁻ᵀ y`.
//!
//! Only the `q` requested pairs are computed, so the cost is dominated by the
//! reduction (about `3 n³` flops) and the method stays usable as a direct
//! oracle for a few thousand unknowns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{Cholesky, DenseMatrix};
use crate::error::{Error, Result};
use crate::sparse::{axpy, dot, norm2, CsrMatrix};

/// Symmetric `A` with symmetric positive definite `M`, both dense.
#[derive(Debug, Clone)]
pub struct DenseSymPair {
    a: DenseMatrix,
    m: DenseMatrix,
}

impl DenseSymPair {
    pub fn new(a: DenseMatrix, m: DenseMatrix) -> Result<Self> {
        let n = a.nrows();
        for (op, mat) in [("pair A", &a), ("pair M", &m)] {
            if mat.nrows() != n || mat.ncols() != n {
                return Err(Error::DimensionMismatch {
                    op,
                    expected: n,
                    got: if mat.nrows() != n {
                        mat.nrows()
                    } else {
                        mat.ncols()
                    },
                });
            }
            let asymmetry = mat.asymmetry();
            if asymmetry > 1e-12 * mat.max_abs() {
                return Err(Error::NotSymmetric { asymmetry });
            }
        }
        Ok(Self { a, m })
    }

    pub fn from_sparse(a: &CsrMatrix, m: &CsrMatrix) -> Result<Self> {
        Self::new(DenseMatrix::from_sparse(a), DenseMatrix::from_sparse(m))
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn m(&self) -> &DenseMatrix {
        &self.m
    }
}

/// Eigenvalues in ascending order with `M`-orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenpairSet {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl EigenpairSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }
}

/// Flips `v` so that its first component of magnitude above `1e-8` is positive.
pub fn fix_sign(v: &mut [f64]) {
    if let Some(&first) = v.iter().find(|x| x.abs() > 1e-8) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// The `q` algebraically smallest eigenpairs of `A x = λ M x`.
pub fn generalized_eig(pair: &DenseSymPair, q: usize) -> Result<EigenpairSet> {
    let n = pair.dim();
    if q > n {
        return Err(Error::InvalidParameter(format!(
            "requested {q} eigenpairs of a {n}-dimensional pair"
        )));
    }
    if q == 0 {
        return Ok(EigenpairSet {
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    let chol = Cholesky::factor(pair.m())?;
    let mut c = reduce_to_standard(pair.a(), &chol);
    let tri = Tridiagonal::householder(&mut c);
    let values = tri.smallest_eigenvalues(q);
    let ritz = tri.eigenvectors(&values);

    let mut vectors = Vec::with_capacity(q);
    for z in ritz {
        let mut y = z;
        tri.apply_q(&c, &mut y);
        chol.solve_upper_in_place(&mut y);
        let mnorm = dot(&y, &pair.m().matvec(&y)).sqrt();
        y.iter_mut().for_each(|v| *v /= mnorm);
        fix_sign(&mut y);
        vectors.push(y);
    }
    Ok(EigenpairSet { values, vectors })
}

/// Rayleigh quotient `uᵀ A u / uᵀ M u` in compensated arithmetic.
pub fn rayleigh_quotient(a: &CsrMatrix, m: &CsrMatrix, u: &[f64]) -> Result<f64> {
    Ok(a.quadratic_form(u)? / m.quadratic_form(u)?)
}

/// Replaces each eigenvalue by the accurate Rayleigh quotient of its vector
/// and restores ascending order.
pub fn refine_values(a: &CsrMatrix, m: &CsrMatrix, set: &mut EigenpairSet) -> Result<()> {
    for (value, u) in set.values.iter_mut().zip(&set.vectors) {
        *value = rayleigh_quotient(a, m, u)?;
    }
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&i, &j| set.values[i].total_cmp(&set.values[j]));
    set.values = order.iter().map(|&i| set.values[i]).collect();
    set.vectors = order.iter().map(|&i| set.vectors[i].clone()).collect();
    Ok(())
}

/// `L⁻¹ A L⁻ᵀ`, symmetrized.
fn reduce_to_standard(a: &DenseMatrix, chol: &Cholesky) -> DenseMatrix {
    let mut work = a.clone();
    chol.solve_lower_matrix_in_place(&mut work);
    // (L⁻¹ A)ᵀ = A L⁻ᵀ, so one more solve gives L⁻¹ A L⁻ᵀ.
    let mut work = work.transpose();
    chol.solve_lower_matrix_in_place(&mut work);
    work.symmetrize();
    work
}

/// Symmetric tridiagonal matrix together with the Householder reflectors that
/// produced it.
struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    betas: Vec<f64>,
}

impl Tridiagonal {
    /// Reduces `c` in place. Reflector `k` acts on indices `k+1..n`; its vector
    /// is left in the upper part of row `k`.
    fn householder(c: &mut DenseMatrix) -> Self {
        let n = c.nrows();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        let mut betas = vec![0.0; n.saturating_sub(1)];
        let mut p = vec![0.0; n];
        let mut v = vec![0.0; n];

        for k in 0..n.saturating_sub(2) {
            diag[k] = c[(k, k)];
            let m = n - k - 1;
            v[..m].copy_from_slice(&c.row(k)[k + 1..]);
            let tail = dot(&v[1..m], &v[1..m]);
            if tail == 0.0 {
                off[k] = v[0];
                betas[k] = 0.0;
                continue;
            }
            let x0 = v[0];
            let norm = (x0 * x0 + tail).sqrt();
            let alpha = if x0 >= 0.0 { -norm } else { norm };
            v[0] = x0 - alpha;
            let beta = 2.0 / (v[0] * v[0] + tail);
            off[k] = alpha;
            betas[k] = beta;
            c.row_mut(k)[k + 1..].copy_from_slice(&v[..m]);

            // p = beta * C22 v from the upper triangle of the trailing block.
            let (v, p) = (&v[..m], &mut p[..m]);
            p.iter_mut().for_each(|x| *x = 0.0);
            for i in 0..m {
                let row = &c.row(k + 1 + i)[k + 1 + i..];
                p[i] += dot(row, &v[i..]);
                axpy(v[i], &row[1..], &mut p[i + 1..]);
            }
            p.iter_mut().for_each(|x| *x *= beta);
            let kk = 0.5 * beta * dot(p, v);
            axpy(-kk, v, p);
            // C22 -= v wᵀ + w vᵀ on the upper triangle (p now holds w).
            for i in 0..m {
                let (vi, wi) = (v[i], p[i]);
                let row = &mut c.row_mut(k + 1 + i)[k + 1 + i..];
                for ((cij, &vj), &wj) in row.iter_mut().zip(&v[i..]).zip(&p[i..]) {
                    *cij -= vi * wj + wi * vj;
                }
            }
        }
        if n >= 2 {
            diag[n - 2] = c[(n - 2, n - 2)];
            off[n - 2] = c[(n - 2, n - 1)];
        }
        if n >= 1 {
            diag[n - 1] = c[(n - 1, n - 1)];
        }
        Self { diag, off, betas }
    }

    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn norm_bound(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
                self.diag[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    fn count_below(&self, x: f64, pivmin: f64) -> usize {
        let mut count = 0;
        let mut d = self.diag[0] - x;
        if d.abs() < pivmin {
            d = -pivmin;
        }
        if d < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            d = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / d;
            if d.abs() < pivmin {
                d = -pivmin;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn smallest_eigenvalues(&self, q: usize) -> Vec<f64> {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        let max_off2 = self.off.iter().fold(0.0f64, |m, e| m.max(e * e));
        let pivmin = f64::MIN_POSITIVE * max_off2.max(1.0);
        lo -= 2.0 * f64::EPSILON * scale * n as f64 + pivmin;
        hi += 2.0 * f64::EPSILON * scale * n as f64 + pivmin;

        let mut values = Vec::with_capacity(q);
        for j in 0..q {
            // Eigenvalue j (0-based) is the smallest x with count_below(x) > j.
            let mut a = lo;
            let mut b = hi;
            while b - a > 2.0 * f64::EPSILON * (a.abs().max(b.abs())) + pivmin {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if self.count_below(mid, pivmin) > j {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            values.push(0.5 * (a + b));
        }
        values
    }

    /// Inverse iteration for each eigenvalue in ascending `values`.
    fn eigenvectors(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let n = self.dim();
        let tnorm = self.norm_bound().max(f64::MIN_POSITIVE);
        let eps = f64::EPSILON;
        let separation = 10.0 * eps * tnorm;
        let cluster_gap = 1e-3 * tnorm;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);

        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(values.len());
        let mut cluster_start = 0;
        let mut prev_shift = f64::NEG_INFINITY;
        for (j, &lambda) in values.iter().enumerate() {
            if j > 0 && lambda - values[j - 1] > cluster_gap {
                cluster_start = j;
            }
            // Coincident shifts would yield the same vector twice.
            let mut shift = lambda;
            if j > 0 && shift - prev_shift < separation {
                shift = prev_shift + separation;
            }
            prev_shift = shift;

            let lu = TridiagonalLu::factor(self, shift, eps * tnorm);
            let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for _ in 0..5 {
                lu.solve(&mut x);
                for prev in &vectors[cluster_start..j] {
                    let proj = dot(prev, &x);
                    axpy(-proj, prev, &mut x);
                }
                let nrm = norm2(&x);
                if !(nrm.is_finite() && nrm > 0.0) {
                    x = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    continue;
                }
                x.iter_mut().for_each(|v| *v /= nrm);
            }
            vectors.push(x);
        }
        vectors
    }

    /// `y ← H_0 H_1 ⋯ H_{n-3} y`, reflector vectors read from `c`.
    fn apply_q(&self, c: &DenseMatrix, y: &mut [f64]) {
        let n = self.dim();
        for k in (0..n.saturating_sub(2)).rev() {
            let beta = self.betas[k];
            if beta == 0.0 {
                continue;
            }
            let v = &c.row(k)[k + 1..];
            let s = beta * dot(v, &y[k + 1..]);
            axpy(-s, v, &mut y[k + 1..]);
        }
    }
}

/// LU factorization with partial pivoting of `T - shift I`.
struct TridiagonalLu {
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    dl: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(t: &Tridiagonal, shift: f64, tiny: f64) -> Self {
        let n = t.dim();
        let mut d: Vec<f64> = t.diag.iter().map(|x| x - shift).collect();
        let mut du = t.off.clone();
        let mut dl = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                } else {
                    dl[i] = 0.0;
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        // Exact singularity is expected at an eigenvalue; perturb the pivot.
        let floor = tiny.max(f64::MIN_POSITIVE);
        for di in d.iter_mut() {
            if di.abs() < floor {
                *di = if *di < 0.0 { -floor } else { floor };
            }
        }
        Self {
            d,
            du,
            du2,
            dl,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.dl[i] * b[i];
        }
        b[n - 1] /= self.d[n - 1];
        if n >= 2 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: &[&[f64]], m: &[&[f64]]) -> DenseSymPair {
        DenseSymPair::new(DenseMatrix::from_rows(a), DenseMatrix::from_rows(m)).unwrap()
    }

    fn residual(p: &DenseSymPair, lambda: f64, x: &[f64]) -> f64 {
        let ax = p.a().matvec(x);
        let mx = p.m().matvec(x);
        ax.iter()
            .zip(&mx)
            .map(|(a, m)| (a - lambda * m).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn diagonal_pair() {
        let p = pair(&[&[2.0, 0.0], &[0.0, 6.0]], &[&[1.0, 0.0], &[0.0, 1.0]]);
        let e = generalized_eig(&p, 2).unwrap();
        assert!((e.values[0] - 2.0).abs() < 1e-14);
        assert!((e.values[1] - 6.0).abs() < 1e-14);
        assert!((e.vectors[0][0] - 1.0).abs() < 1e-12 && e.vectors[0][1].abs() < 1e-12);
        assert!((e.vectors[1][1] - 1.0).abs() < 1e-12 && e.vectors[1][0].abs() < 1e-12);
    }

    #[test]
    fn two_by_two_laplacian() {
        let p = pair(&[&[2.0, -1.0], &[-1.0, 2.0]], &[&[1.0, 0.0], &[0.0, 1.0]]);
        let e = generalized_eig(&p, 2).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        let s = 0.5f64.sqrt();
        assert!((e.vectors[0][0] - s).abs() < 1e-12 && (e.vectors[0][1] - s).abs() < 1e-12);
        assert!((e.vectors[1][0] - s).abs() < 1e-12 && (e.vectors[1][1] + s).abs() < 1e-12);
    }

    #[test]
    fn decoupled_ratios_sorted() {
        let p = pair(&[&[3.0, 0.0], &[0.0, 3.0]], &[&[1.0, 0.0], &[0.0, 3.0]]);
        let e = generalized_eig(&p, 2).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn indefinite_mass_names_pivot() {
        let p = pair(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[1.0, 0.0], &[0.0, -1.0]]);
        assert!(matches!(
            generalized_eig(&p, 1),
            Err(Error::NotPositiveDefinite { pivot: 1 })
        ));
    }

    #[test]
    fn too_many_requested() {
        let p = pair(&[&[1.0]], &[&[1.0]]);
        assert!(generalized_eig(&p, 2).is_err());
        assert!(generalized_eig(&p, 0).unwrap().is_empty());
    }

    #[test]
    fn repeated_eigenvalues_get_orthonormal_vectors() {
        // Identity-scaled blocks give a fourfold eigenvalue.
        let n = 6;
        let mut a = DenseMatrix::identity(n);
        a[(4, 4)] = 2.0;
        a[(5, 5)] = 3.0;
        let m = DenseMatrix::identity(n);
        let p = DenseSymPair::new(a, m).unwrap();
        let e = generalized_eig(&p, 5).unwrap();
        for j in 0..5 {
            assert!(residual(&p, e.values[j], &e.vectors[j]) < 1e-12);
            for i in 0..j {
                assert!(dot(&e.vectors[i], &e.vectors[j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn laplacian_matches_closed_form() {
        let n = 40;
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 2.0;
            if i + 1 < n {
                a[(i, i + 1)] = -1.0;
                a[(i + 1, i)] = -1.0;
            }
        }
        let p = DenseSymPair::new(a, DenseMatrix::identity(n)).unwrap();
        let e = generalized_eig(&p, n).unwrap();
        for (j, &lam) in e.values.iter().enumerate() {
            let theta = (j + 1) as f64 * std::f64::consts::PI / (n + 1) as f64;
            assert!((lam - (2.0 - 2.0 * theta.cos())).abs() < 1e-12);
            assert!(residual(&p, lam, &e.vectors[j]) < 1e-11);
        }
    }
}
