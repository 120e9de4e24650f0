use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Strong dependence sets `S_i`, their duals `S_iᵀ = { j : i ∈ S_j }`, and the
/// sparsity neighborhoods `N_i = { j ≠ i : a_ij ≠ 0 }`. All sets are sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthGraph {
    pub theta: f64,
    pub strong: Vec<Vec<usize>>,
    pub influence: Vec<Vec<usize>>,
    pub neighbors: Vec<Vec<usize>>,
}

impl StrengthGraph {
    pub fn len(&self) -> usize {
        self.strong.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strong.is_empty()
    }

    pub fn is_strong(&self, i: usize, j: usize) -> bool {
        self.strong[i].binary_search(&j).is_ok()
    }
}

/// `j ∈ S_i ⇔ j ≠ i and |a_ij| ≥ θ max_{ℓ≠i} |a_iℓ|`.
pub fn strength_sets(a: &CsrMatrix, theta: f64) -> Result<StrengthGraph> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "strength threshold theta = {theta} outside (0, 1)"
        )));
    }
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            op: "strength_sets",
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let n = a.nrows();
    let mut strong = vec![Vec::new(); n];
    let mut neighbors = vec![Vec::new(); n];
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let max_off = cols
            .iter()
            .zip(vals)
            .filter(|(&j, _)| j != i)
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i || v == 0.0 {
                continue;
            }
            neighbors[i].push(j);
            if v.abs() >= theta * max_off {
                strong[i].push(j);
            }
        }
    }
    let mut influence = vec![Vec::new(); n];
    for (i, s) in strong.iter().enumerate() {
        for &j in s {
            // i visited in increasing order keeps each list sorted.
            influence[j].push(i);
        }
    }
    Ok(StrengthGraph {
        theta,
        strong,
        influence,
        neighbors,
    })
}
