//! Linear AMG iteration: CG smoothing inside V-cycles over a [`Hierarchy`].

use crate::amg::Hierarchy;
use crate::dense::{Cholesky, DenseMatrix};
use crate::error::{Error, Result};
use crate::sparse::{axpy, dot, CsrMatrix};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum CycleType {
    #[default]
    V,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveParams {
    pub pre_smooth_steps: usize,
    pub post_smooth_steps: usize,
    pub cycle: CycleType,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            pre_smooth_steps: 2,
            post_smooth_steps: 2,
            cycle: CycleType::V,
        }
    }
}

/// Result of a fixed number of CG steps.
#[derive(Debug, Clone, PartialEq)]
pub struct CgSmoothed {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Set when a search direction had non-positive curvature.
    pub breakdown: bool,
}

/// Exactly `steps` conjugate gradient iterations on `A x = b` from `x0`.
///
/// Stops early only on breakdown or an exactly zero residual.
pub fn cg_smooth(a: &CsrMatrix, b: &[f64], x0: &[f64], steps: usize) -> Result<CgSmoothed> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n || x0.len() != n {
        return Err(Error::DimensionMismatch {
            op: "cg_smooth",
            expected: n,
            got: if b.len() != n {
                b.len()
            } else {
                x0.len().max(a.ncols())
            },
        });
    }
    let mut x = x0.to_vec();
    if steps == 0 {
        return Ok(CgSmoothed {
            x,
            iterations: 0,
            breakdown: false,
        });
    }
    let mut r = a.spmv(&x)?;
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    for it in 0..steps {
        if rr == 0.0 {
            return Ok(CgSmoothed {
                x,
                iterations: it,
                breakdown: false,
            });
        }
        a.spmv_into(&p, &mut ap)?;
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Ok(CgSmoothed {
                x,
                iterations: it,
                breakdown: true,
            });
        }
        let alpha = rr / curvature;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for (pi, &ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_next;
    }
    Ok(CgSmoothed {
        x,
        iterations: steps,
        breakdown: false,
    })
}

/// Dense Cholesky solve of a symmetric positive definite system.
pub fn coarse_direct_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if !a.is_square() || b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            op: "coarse_direct_solve",
            expected: a.nrows(),
            got: b.len(),
        });
    }
    let factor = Cholesky::factor(&DenseMatrix::from_sparse(a)).map_err(|e| match e {
        Error::NotPositiveDefinite { pivot } => Error::Singular { pivot },
        other => other,
    })?;
    Ok(factor.solve(b))
}

/// One V-cycle on level `k` for `A_k x = b` starting at `x0`.
pub fn vcycle(h: &Hierarchy, k: usize, b: &[f64], x0: &[f64], p: &SolveParams) -> Result<Vec<f64>> {
    h.check_level(k)?;
    let level = h.level(k);
    if b.len() != level.dim() || x0.len() != level.dim() {
        return Err(Error::DimensionMismatch {
            op: "vcycle",
            expected: level.dim(),
            got: if b.len() != level.dim() {
                b.len()
            } else {
                x0.len()
            },
        });
    }
    if k == h.coarsest_index() {
        return Ok(h.coarsest().a_factor.solve(b));
    }
    let mut x = cg_smooth(&level.a, b, x0, p.pre_smooth_steps)?.x;
    let mut r = level.a.spmv(&x)?;
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let prolongation = h.prolongation(k);
    let coarse_rhs = prolongation.spmv_transpose(&r)?;
    let zero = vec![0.0; coarse_rhs.len()];
    let correction = vcycle(h, k + 1, &coarse_rhs, &zero, p)?;
    let fine_correction = prolongation.spmv(&correction)?;
    axpy(1.0, &fine_correction, &mut x);
    Ok(cg_smooth(&level.a, b, &x, p.post_smooth_steps)?.x)
}

/// `m` V-cycles on level `k` for `A_k x = rhs`, starting at `x0`.
pub fn amg_iterate(
    h: &Hierarchy,
    k: usize,
    rhs: &[f64],
    x0: &[f64],
    m: usize,
    p: &SolveParams,
) -> Result<Vec<f64>> {
    h.check_level(k)?;
    let mut x = x0.to_vec();
    if m == 0 {
        if x.len() != h.level(k).dim() {
            return Err(Error::DimensionMismatch {
                op: "amg_iterate",
                expected: h.level(k).dim(),
                got: x.len(),
            });
        }
        return Ok(x);
    }
    for _ in 0..m {
        x = match p.cycle {
            CycleType::V => vcycle(h, k, rhs, &x, p)?,
        };
    }
    Ok(x)
}
