//! Multilevel correction eigensolver.
//!
//! A correction step on level `k` smooths the current eigenvector block with
//! a few AMG iterations and solves a small Rayleigh–Ritz problem on the
//! coarsest space augmented by the smoothed block. The nested solver starts
//! from a dense solve on a coarse level and corrects on every finer level.

use crate::amg::Hierarchy;
use crate::dense::DenseMatrix;
use crate::eig::{fix_sign, generalized_eig, refine_values, DenseSymPair, EigenpairSet};
use crate::error::{Error, Result};
use crate::solve::{amg_iterate, SolveParams};
use crate::sparse::{dot, CsrMatrix};

/// Smoothed columns with an M-norm below this fraction of their original
/// M-norm are dropped from the augmented basis.
const DROP_TOL: f64 = 1e-10;

/// Correction steps per level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sweeps {
    Uniform(usize),
    /// `per_level[k]` steps on level `k`.
    PerLevel(Vec<usize>),
}

impl Sweeps {
    pub fn on_level(&self, k: usize) -> usize {
        match self {
            Self::Uniform(p) => *p,
            Self::PerLevel(v) => v.get(k).copied().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionParams {
    /// Number of wanted eigenpairs.
    pub q: usize,
    /// AMG iterations per smoothed column.
    pub m: usize,
    pub sweeps: Sweeps,
    /// Level of the initial dense solve, 0-based. `None` picks the default.
    pub start_level: Option<usize>,
    pub solve: SolveParams,
}

impl Default for CorrectionParams {
    fn default() -> Self {
        Self {
            q: 13,
            m: 2,
            sweeps: Sweeps::Uniform(1),
            start_level: None,
            solve: SolveParams::default(),
        }
    }
}

/// Second coarsest level, or the coarsest one when the hierarchy has only
/// two levels, so that at least one level is corrected whenever possible.
pub fn default_start_level(num_levels: usize) -> usize {
    if num_levels <= 1 {
        0
    } else {
        num_levels.saturating_sub(2).max(1)
    }
}

impl CorrectionParams {
    pub fn start_level(&self, h: &Hierarchy) -> usize {
        self.start_level
            .unwrap_or_else(|| default_start_level(h.num_levels()))
    }

    pub fn validate(&self, h: &Hierarchy) -> Result<()> {
        if self.q == 0 {
            return Err(Error::InvalidParameter("q must be at least 1".into()));
        }
        let start = self.start_level(h);
        h.check_level(start)?;
        if self.q > h.level(start).dim() {
            return Err(Error::InvalidParameter(format!(
                "q = {} exceeds the dimension {} of start level {start}",
                self.q,
                h.level(start).dim()
            )));
        }
        for k in 0..start {
            if self.sweeps.on_level(k) == 0 {
                return Err(Error::InvalidParameter(format!(
                    "level {k} needs at least one correction step"
                )));
            }
        }
        Ok(())
    }
}

fn check_block(h: &Hierarchy, k: usize, columns: &[Vec<f64>], op: &'static str) -> Result<()> {
    h.check_level(k)?;
    let d = h.level(k).dim();
    if let Some(bad) = columns.iter().find(|c| c.len() != d) {
        return Err(Error::DimensionMismatch {
            op,
            expected: d,
            got: bad.len(),
        });
    }
    Ok(())
}

/// Column `j` is `m` AMG iterations on `A_k x = λ_j M_k u_j` started at `u_j`.
pub fn smoothed_basis(
    h: &Hierarchy,
    k: usize,
    pairs: &EigenpairSet,
    m: usize,
    solve: &SolveParams,
) -> Result<Vec<Vec<f64>>> {
    check_block(h, k, &pairs.vectors, "smoothed_basis")?;
    let mk = &h.level(k).m;
    pairs
        .values
        .iter()
        .zip(&pairs.vectors)
        .map(|(&lambda, u)| {
            let mut rhs = mk.spmv(u)?;
            rhs.iter_mut().for_each(|r| *r *= lambda);
            amg_iterate(h, k, &rhs, u, m, solve)
        })
        .collect()
}

/// Removes the coarse-range component of each column in the `M_k` inner
/// product, then `M_k`-orthonormalizes the rest. Nearly dependent columns
/// are dropped.
pub fn orthonormalize_against_coarse(
    h: &Hierarchy,
    k: usize,
    columns: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    check_block(h, k, columns, "orthonormalize_against_coarse")?;
    let mk = &h.level(k).m;
    let p = h.to_coarsest(k);
    let m_factor = &h.coarsest().m_factor;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(columns.len());
    let mut basis_m: Vec<Vec<f64>> = Vec::with_capacity(columns.len());
    for col in columns {
        let mut v = col.clone();
        let mut mv = mk.spmv(&v)?;
        let original = dot(&v, &mv).max(0.0).sqrt();
        if original == 0.0 {
            continue;
        }
        // Two passes keep the result orthogonal to working precision.
        for _ in 0..2 {
            let coeffs = m_factor.solve(&p.spmv_transpose(&mv)?);
            let coarse = p.spmv(&coeffs)?;
            v.iter_mut().zip(&coarse).for_each(|(x, c)| *x -= c);
            for (b, bm) in basis.iter().zip(&basis_m) {
                let c = dot(bm, &v);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            mk.spmv_into(&v, &mut mv)?;
        }
        let norm = dot(&v, &mv).max(0.0).sqrt();
        if norm < DROP_TOL * original {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        mv.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
        basis_m.push(mv);
    }
    Ok(basis)
}

/// Rayleigh–Ritz pair on `range(I_n^k) + span(V)`, `n` the coarsest level.
#[derive(Debug, Clone)]
pub struct AugmentedPair {
    pub pair: DenseSymPair,
    /// Dimension of the coarsest level.
    pub coarse_dim: usize,
}

fn augmented_block(
    dense_coarse: &DenseMatrix,
    op: &CsrMatrix,
    p: &CsrMatrix,
    columns: &[Vec<f64>],
) -> Result<DenseMatrix> {
    let dn = dense_coarse.nrows();
    let r = columns.len();
    let mut out = DenseMatrix::zeros(dn + r, dn + r);
    for i in 0..dn {
        out.row_mut(i)[..dn].copy_from_slice(dense_coarse.row(i));
    }
    for (j, v) in columns.iter().enumerate() {
        let ov = op.spmv(v)?;
        let coupling = p.spmv_transpose(&ov)?;
        for (i, c) in coupling.into_iter().enumerate() {
            out[(i, dn + j)] = c;
            out[(dn + j, i)] = c;
        }
        for (l, w) in columns.iter().enumerate() {
            out[(dn + l, dn + j)] = dot(w, &ov);
        }
    }
    let mut sym = out;
    sym.symmetrize();
    // The coarse block is symmetric already; keep it bit-exact.
    for i in 0..dn {
        sym.row_mut(i)[..dn].copy_from_slice(dense_coarse.row(i));
    }
    Ok(sym)
}

/// Block pair `[[A_n, I_k^n A_k V], [Vᵀ A_k I_n^k, Vᵀ A_k V]]` and its `M` twin.
pub fn assemble_augmented(h: &Hierarchy, k: usize, columns: &[Vec<f64>]) -> Result<AugmentedPair> {
    check_block(h, k, columns, "assemble_augmented")?;
    let level = h.level(k);
    let p = h.to_coarsest(k);
    let coarsest = h.coarsest();
    let a = augmented_block(&coarsest.a, &level.a, p, columns)?;
    let m = augmented_block(&coarsest.m, &level.m, p, columns)?;
    Ok(AugmentedPair {
        pair: DenseSymPair::new(a, m)?,
        coarse_dim: coarsest.a.nrows(),
    })
}

fn m_normalize(m: &CsrMatrix, u: &mut [f64]) -> Result<()> {
    let norm = dot(u, &m.spmv(u)?).sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Conditioning("eigenvector with zero M-norm".into()));
    }
    u.iter_mut().for_each(|x| *x /= norm);
    fix_sign(u);
    Ok(())
}

/// One multilevel correction of the `q` pairs on level `k`.
pub fn correction_step(
    h: &Hierarchy,
    k: usize,
    pairs: &EigenpairSet,
    params: &CorrectionParams,
) -> Result<EigenpairSet> {
    let smoothed = smoothed_basis(h, k, pairs, params.m, &params.solve)?;
    let basis = orthonormalize_against_coarse(h, k, &smoothed)?;
    let aug = assemble_augmented(h, k, &basis)?;
    let q = pairs.len();
    if q > aug.pair.dim() {
        return Err(Error::Conditioning(format!(
            "augmented space of dimension {} cannot hold {q} eigenpairs",
            aug.pair.dim()
        )));
    }
    let small = generalized_eig(&aug.pair, q).map_err(|e| match e {
        Error::NotPositiveDefinite { pivot } => Error::Conditioning(format!(
            "augmented mass matrix not positive definite at pivot {pivot}"
        )),
        other => other,
    })?;
    let p = h.to_coarsest(k);
    let dn = aug.coarse_dim;
    let mk = &h.level(k).m;
    let mut vectors = Vec::with_capacity(q);
    for x in &small.vectors {
        let mut u = p.spmv(&x[..dn])?;
        for (coef, v) in x[dn..].iter().zip(&basis) {
            u.iter_mut().zip(v).for_each(|(a, b)| *a += coef * b);
        }
        m_normalize(mk, &mut u)?;
        vectors.push(u);
    }
    let mut out = EigenpairSet {
        values: small.values,
        vectors,
    };
    // Same values as the Ritz values, without the roundoff of the Galerkin blocks.
    refine_values(&h.level(k).a, mk, &mut out)?;
    Ok(out)
}

/// Eigenvalue estimates after a given correction step.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub level: usize,
    /// 0 is the prolongated start, `s ≥ 1` the result of step `s`.
    pub sweep: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EigensolveOutput {
    pub pairs: EigenpairSet,
    pub start_level: usize,
    pub history: Vec<SweepRecord>,
}

/// Dense solve on the start level followed by correction steps on every finer
/// level. Returns finest-level pairs.
pub fn amg_eigensolve(h: &Hierarchy, params: &CorrectionParams) -> Result<EigensolveOutput> {
    params.validate(h)?;
    let start = params.start_level(h);
    let pair = if start == h.coarsest_index() {
        DenseSymPair::new(h.coarsest().a.clone(), h.coarsest().m.clone())?
    } else {
        DenseSymPair::from_sparse(&h.level(start).a, &h.level(start).m)?
    };
    let mut pairs = generalized_eig(&pair, params.q)?;
    refine_values(&h.level(start).a, &h.level(start).m, &mut pairs)?;
    let mut history = vec![SweepRecord {
        level: start,
        sweep: 0,
        values: pairs.values.clone(),
    }];
    for k in (0..start).rev() {
        let prolongation = h.prolongation(k);
        let mk = &h.level(k).m;
        let mut vectors = Vec::with_capacity(pairs.len());
        for u in &pairs.vectors {
            let mut fine = prolongation.spmv(u)?;
            m_normalize(mk, &mut fine)?;
            vectors.push(fine);
        }
        pairs.vectors = vectors;
        history.push(SweepRecord {
            level: k,
            sweep: 0,
            values: pairs.values.clone(),
        });
        for s in 1..=params.sweeps.on_level(k) {
            pairs = correction_step(h, k, &pairs, params)?;
            history.push(SweepRecord {
                level: k,
                sweep: s,
                values: pairs.values.clone(),
            });
        }
    }
    Ok(EigensolveOutput {
        pairs,
        start_level: start,
        history,
    })
}
