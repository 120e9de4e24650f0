use super::coarsen::{CfSplit, PointLabel};
use super::strength::StrengthGraph;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Interpolation stencil of one F point: fine indices of its interpolatory
/// C points and the matching weights `w_ik`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Stencil {
    pub points: Vec<usize>,
    pub weights: Vec<f64>,
}

/// Per-point stencils; only F points carry one, C points interpolate by
/// injection.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolation {
    pub stencils: Vec<Option<Stencil>>,
}

enum Outcome {
    Interpolated {
        stencil: Stencil,
        promoted: Option<usize>,
    },
    BecomesCoarse,
}

/// Final C-point choice and interpolation weights.
///
/// Every F point `i` interpolates from `C_i = S_i ∩ C`. Weak couplings are
/// lumped into the diagonal; each strong F neighbor `j` is distributed onto
/// `C_i` in proportion to `a_jk`. A strong F neighbor sharing no point of
/// `C_i` is tentatively made coarse; a second such neighbor turns `i` itself
/// into a C point instead.
pub fn finalize_interpolation(
    a: &CsrMatrix,
    g: &StrengthGraph,
    split: &CfSplit,
) -> Result<(CfSplit, Interpolation)> {
    let n = g.len();
    let mut split = split.clone();
    let mut stencils: Vec<Option<Stencil>> = vec![None; n];

    for i in 0..n {
        if split.label[i] != PointLabel::F {
            continue;
        }
        match interpolate_point(a, g, &split, i)? {
            Outcome::BecomesCoarse => split.label[i] = PointLabel::C,
            Outcome::Interpolated { stencil, promoted } => {
                if let Some(j) = promoted {
                    split.label[j] = PointLabel::C;
                    stencils[j] = None;
                }
                stencils[i] = Some(stencil);
            }
        }
    }
    // C points never lose their label, so stencils built earlier stay valid;
    // only those of points promoted later are dropped.
    for (i, s) in stencils.iter_mut().enumerate() {
        if split.label[i] == PointLabel::C {
            *s = None;
        }
    }
    Ok((split, Interpolation { stencils }))
}

fn interpolate_point(
    a: &CsrMatrix,
    g: &StrengthGraph,
    split: &CfSplit,
    i: usize,
) -> Result<Outcome> {
    let strong = &g.strong[i];
    let mut coarse: Vec<usize> = strong
        .iter()
        .copied()
        .filter(|&j| split.is_coarse(j))
        .collect();
    let mut strong_fine: Vec<usize> = strong
        .iter()
        .copied()
        .filter(|&j| !split.is_coarse(j))
        .collect();
    let mut tentative: Option<usize> = None;
    let (row_cols, row_vals) = a.row(i);
    let row_max = row_vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    'weights: loop {
        let mut d_i = a.get(i, i);
        for (&j, &v) in row_cols.iter().zip(row_vals) {
            if j != i && v != 0.0 && !g.is_strong(i, j) {
                d_i += v;
            }
        }
        let mut d: Vec<f64> = coarse.iter().map(|&k| a.get(i, k)).collect();

        for &j in &strong_fine {
            let shares = g.strong[j].iter().any(|l| coarse.contains(l));
            if !shares {
                if tentative.is_some() {
                    return Ok(Outcome::BecomesCoarse);
                }
                tentative = Some(j);
                coarse.push(j);
                strong_fine.retain(|&x| x != j);
                continue 'weights;
            }
            let a_ij = a.get(i, j);
            let (jcols, jvals) = a.row(j);
            let jrow_max = jvals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let denom: f64 = coarse.iter().map(|&l| a.get(j, l)).sum();
            if denom.abs() < 1e-12 * jrow_max {
                return Ok(Outcome::BecomesCoarse);
            }
            for (dk, &k) in d.iter_mut().zip(&coarse) {
                let a_jk = match jcols.binary_search(&k) {
                    Ok(p) => jvals[p],
                    Err(_) => 0.0,
                };
                *dk += a_ij * a_jk / denom;
            }
        }

        if d_i.abs() < 1e-12 * row_max || !d_i.is_finite() {
            return Err(Error::DegenerateDiagonal {
                point: i,
                value: d_i,
            });
        }
        let mut order: Vec<usize> = (0..coarse.len()).collect();
        order.sort_by_key(|&p| coarse[p]);
        let stencil = Stencil {
            points: order.iter().map(|&p| coarse[p]).collect(),
            weights: order.iter().map(|&p| -d[p] / d_i).collect(),
        };
        return Ok(Outcome::Interpolated {
            stencil,
            promoted: tentative,
        });
    }
}

/// Prolongation `d_fine × |C|`: unit rows at C points, stencil weights at F
/// points. Coarse indices follow ascending fine index.
pub fn assemble_prolongation(split: &CfSplit, interp: &Interpolation) -> Result<CsrMatrix> {
    let n = split.len();
    let mut coarse_index = vec![usize::MAX; n];
    let mut nc = 0;
    for i in 0..n {
        match split.label[i] {
            PointLabel::C => {
                coarse_index[i] = nc;
                nc += 1;
            }
            PointLabel::U => {
                return Err(Error::InvalidParameter(format!(
                    "point {i} is still undecided"
                )))
            }
            PointLabel::F => {}
        }
    }
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_offsets.push(0);
    for i in 0..n {
        if split.label[i] == PointLabel::C {
            cols.push(coarse_index[i]);
            vals.push(1.0);
        } else {
            let stencil = interp.stencils[i]
                .as_ref()
                .filter(|s| !s.points.is_empty())
                .ok_or(Error::EmptyInterpolation { point: i })?;
            for (&k, &w) in stencil.points.iter().zip(&stencil.weights) {
                if coarse_index[k] == usize::MAX {
                    return Err(Error::InvalidParameter(format!(
                        "F point {i} interpolates from non-coarse point {k}"
                    )));
                }
                cols.push(coarse_index[k]);
                vals.push(w);
            }
        }
        row_offsets.push(cols.len());
    }
    CsrMatrix::new(n, nc, row_offsets, cols, vals)
}
