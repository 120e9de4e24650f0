use super::coarsen::{coarsen_preliminary, CfSplit};
use super::interp::{assemble_prolongation, finalize_interpolation, Interpolation};
use super::strength::{strength_sets, StrengthGraph};
use crate::dense::{Cholesky, DenseMatrix};
use crate::error::{Error, Result};
use crate::sparse::{rap, CsrMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SetupParams {
    /// Strength threshold θ in (0, 1).
    pub theta: f64,
    /// Stop coarsening once a level has at most this many points.
    pub max_coarse_dim: usize,
    pub max_levels: usize,
    /// A coarse level larger than this fraction of its parent counts as a
    /// stall and is discarded.
    pub min_coarsening_ratio: f64,
}

impl Default for SetupParams {
    fn default() -> Self {
        Self {
            theta: 0.25,
            max_coarse_dim: 500,
            max_levels: 25,
            min_coarsening_ratio: 0.9,
        }
    }
}

impl SetupParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta = {} outside (0, 1)",
                self.theta
            )));
        }
        if self.max_levels == 0 {
            return Err(Error::InvalidParameter(
                "max_levels must be at least 1".into(),
            ));
        }
        if !(self.min_coarsening_ratio > 0.0 && self.min_coarsening_ratio <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "min_coarsening_ratio = {} outside (0, 1]",
                self.min_coarsening_ratio
            )));
        }
        Ok(())
    }
}

/// One grid of the hierarchy: the Galerkin pair `(A_k, M_k)`.
#[derive(Debug, Clone)]
pub struct Level {
    pub a: CsrMatrix,
    pub m: CsrMatrix,
}

impl Level {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Setup record of a coarsened level, kept for diagnostics and invariant checks.
#[derive(Debug, Clone)]
pub struct CoarseningRecord {
    pub graph: StrengthGraph,
    pub split: CfSplit,
    pub interpolation: Interpolation,
}

/// Dense data of the coarsest level, factored once.
#[derive(Debug, Clone)]
pub struct CoarsestLevel {
    pub a: DenseMatrix,
    pub m: DenseMatrix,
    pub a_factor: Cholesky,
    pub m_factor: Cholesky,
}

/// Multilevel hierarchy. Level 0 is the finest grid; `prolongations[k]`
/// maps level `k + 1` to level `k`.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    levels: Vec<Level>,
    prolongations: Vec<CsrMatrix>,
    records: Vec<CoarseningRecord>,
    to_coarsest: Vec<CsrMatrix>,
    coarsest: CoarsestLevel,
    params: SetupParams,
}

impl Hierarchy {
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn coarsest_index(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, k: usize) -> &Level {
        &self.levels[k]
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Prolongation from level `k + 1` to level `k`.
    pub fn prolongation(&self, k: usize) -> &CsrMatrix {
        &self.prolongations[k]
    }

    pub fn prolongations(&self) -> &[CsrMatrix] {
        &self.prolongations
    }

    pub fn records(&self) -> &[CoarseningRecord] {
        &self.records
    }

    pub fn dims(&self) -> Vec<usize> {
        self.levels.iter().map(Level::dim).collect()
    }

    pub fn params(&self) -> &SetupParams {
        &self.params
    }

    pub fn coarsest(&self) -> &CoarsestLevel {
        &self.coarsest
    }

    /// Cached composite prolongation from the coarsest level to level `k`.
    pub fn to_coarsest(&self, k: usize) -> &CsrMatrix {
        &self.to_coarsest[k]
    }

    pub fn check_level(&self, k: usize) -> Result<()> {
        if k >= self.levels.len() {
            return Err(Error::LevelOutOfRange {
                level: k,
                levels: self.levels.len(),
            });
        }
        Ok(())
    }
}

/// Builds the hierarchy from the finest pair. Both matrices are coarsened
/// with the transfer operators derived from `a`.
pub fn build_hierarchy(a: &CsrMatrix, m: &CsrMatrix, params: &SetupParams) -> Result<Hierarchy> {
    params.validate()?;
    if a.nrows() != m.nrows() || !m.is_square() {
        return Err(Error::DimensionMismatch {
            op: "build_hierarchy",
            expected: a.nrows(),
            got: m.nrows(),
        });
    }
    a.check_symmetric(1e-12)?;
    m.check_symmetric(1e-12)?;

    let mut levels = vec![Level {
        a: a.clone(),
        m: m.clone(),
    }];
    let mut prolongations = Vec::new();
    let mut records = Vec::new();
    while levels.len() < params.max_levels {
        let fine = levels.last().unwrap();
        let dim = fine.dim();
        if dim <= params.max_coarse_dim {
            break;
        }
        let graph = strength_sets(&fine.a, params.theta)?;
        let preliminary = coarsen_preliminary(&graph);
        let (split, interpolation) = finalize_interpolation(&fine.a, &graph, &preliminary)?;
        let p = assemble_prolongation(&split, &interpolation)?;
        let coarse_dim = p.ncols();
        if coarse_dim == 0 || coarse_dim as f64 > params.min_coarsening_ratio * dim as f64 {
            break;
        }
        let coarse = Level {
            a: rap(&p, &fine.a)?,
            m: rap(&p, &fine.m)?,
        };
        levels.push(coarse);
        prolongations.push(p);
        records.push(CoarseningRecord {
            graph,
            split,
            interpolation,
        });
    }

    let last = levels.last().unwrap();
    let dense_a = DenseMatrix::from_sparse(&last.a);
    let dense_m = DenseMatrix::from_sparse(&last.m);
    let coarsest = CoarsestLevel {
        a_factor: Cholesky::factor(&dense_a)?,
        m_factor: Cholesky::factor(&dense_m)?,
        a: dense_a,
        m: dense_m,
    };

    let nlev = levels.len();
    let mut to_coarsest = vec![CsrMatrix::identity(levels[nlev - 1].dim())];
    for k in (0..nlev - 1).rev() {
        let next = prolongations[k].matmul(to_coarsest.last().unwrap())?;
        to_coarsest.push(next);
    }
    to_coarsest.reverse();

    Ok(Hierarchy {
        levels,
        prolongations,
        records,
        to_coarsest,
        coarsest,
        params: params.clone(),
    })
}

/// Composite prolongation from level `n` to level `k` (`k ≤ n`), the product
/// of the stored prolongations in between. Its transpose restricts from `k`
/// to `n`.
pub fn composite_transfer(h: &Hierarchy, k: usize, n: usize) -> Result<CsrMatrix> {
    h.check_level(n)?;
    if k > n {
        return Err(Error::LevelOutOfRange {
            level: k,
            levels: n + 1,
        });
    }
    if n == h.coarsest_index() {
        return Ok(h.to_coarsest(k).clone());
    }
    let mut out = CsrMatrix::identity(h.level(n).dim());
    for j in (k..n).rev() {
        out = h.prolongation(j).matmul(&out)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    fn small_params() -> SetupParams {
        SetupParams {
            max_coarse_dim: 4,
            ..SetupParams::default()
        }
    }

    #[test]
    fn line_hierarchy_shrinks() {
        let a = tridiag(63);
        let h = build_hierarchy(&a, &CsrMatrix::identity(63), &small_params()).unwrap();
        let dims = h.dims();
        assert!(dims.windows(2).all(|w| w[1] < w[0]), "{dims:?}");
        assert!(*dims.last().unwrap() <= 4);
        for k in 0..h.num_levels() - 1 {
            let p = h.prolongation(k);
            assert_eq!(h.level(k + 1).a, rap(p, &h.level(k).a).unwrap());
            assert_eq!(h.level(k + 1).m, rap(p, &h.level(k).m).unwrap());
        }
    }

    #[test]
    fn small_input_gives_single_level() {
        let h = build_hierarchy(
            &tridiag(10),
            &CsrMatrix::identity(10),
            &SetupParams::default(),
        )
        .unwrap();
        assert_eq!(h.num_levels(), 1);
        assert!(h.prolongations().is_empty());
    }

    #[test]
    fn composite_transfers() {
        let h = build_hierarchy(&tridiag(31), &CsrMatrix::identity(31), &small_params()).unwrap();
        let n = h.coarsest_index();
        assert!(n >= 2);
        assert_eq!(
            composite_transfer(&h, n, n).unwrap(),
            CsrMatrix::identity(h.level(n).dim())
        );
        assert_eq!(
            composite_transfer(&h, n - 1, n).unwrap(),
            *h.prolongation(n - 1)
        );
        let c = composite_transfer(&h, 0, n).unwrap();
        let an = rap(&c, &h.level(0).a).unwrap();
        let scale = h.level(n).a.max_abs();
        for i in 0..h.level(n).dim() {
            for j in 0..h.level(n).dim() {
                assert!((an.get(i, j) - h.level(n).a.get(i, j)).abs() <= 1e-10 * scale);
            }
        }
        assert!(composite_transfer(&h, 0, n + 1).is_err());
        assert!(composite_transfer(&h, 2, 1).is_err());
    }

    #[test]
    fn rejects_nonsymmetric_input() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 1, 2.0)]).unwrap();
        assert!(matches!(
            build_hierarchy(&a, &CsrMatrix::identity(2), &SetupParams::default()),
            Err(Error::NotSymmetric { .. })
        ));
    }
}
