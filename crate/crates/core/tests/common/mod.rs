#![allow(dead_code)]

use amg_eig::amg::{Hierarchy, PointLabel};
use amg_eig::dense::DenseMatrix;
use amg_eig::fem::{discretize, structured_mesh, DiscreteProblem, ProblemSpec};
use amg_eig::sparse::CsrMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn poisson(n: usize) -> DiscreteProblem {
    discretize(&structured_mesh(n), &ProblemSpec::laplace()).unwrap()
}

pub fn tridiag(n: usize, diag: f64, off: f64) -> CsrMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, diag));
        if i > 0 {
            t.push((i, i - 1, off));
        }
        if i + 1 < n {
            t.push((i, i + 1, off));
        }
    }
    CsrMatrix::from_triplets(n, n, &t).unwrap()
}

/// Random sparse symmetric M-matrix on a chain with extra random edges,
/// strictly diagonally dominant.
pub fn random_stiffness(rng: &mut ChaCha8Rng, n: usize) -> CsrMatrix {
    let mut off = vec![vec![0.0; n]; n];
    for i in 1..n {
        let w = rng.gen_range(0.5..1.5);
        off[i][i - 1] = -w;
        off[i - 1][i] = -w;
    }
    for _ in 0..n / 2 {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i != j {
            let w = rng.gen_range(0.1..1.0);
            off[i][j] = -w;
            off[j][i] = -w;
        }
    }
    let mut t = Vec::new();
    for i in 0..n {
        let mut d = rng.gen_range(0.01..0.5);
        for j in 0..n {
            if off[i][j] != 0.0 {
                t.push((i, j, off[i][j]));
                d -= off[i][j];
            }
        }
        t.push((i, i, d));
    }
    CsrMatrix::from_triplets(n, n, &t).unwrap()
}

/// Random lumped-plus-consistent mass on the same chain.
pub fn random_mass(rng: &mut ChaCha8Rng, n: usize) -> CsrMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, rng.gen_range(2.0..4.0)));
        if i + 1 < n {
            let w = rng.gen_range(0.2..0.9);
            t.push((i, i + 1, w));
            t.push((i + 1, i, w));
        }
    }
    CsrMatrix::from_triplets(n, n, &t).unwrap()
}

pub fn random_spd3(rng: &mut ChaCha8Rng) -> DenseMatrix {
    let b: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b = DenseMatrix::from_row_major(3, 3, b);
    let mut a = b.matmul(&b.transpose());
    for i in 0..3 {
        a[(i, i)] += 0.1;
    }
    a
}

fn det3(m: &DenseMatrix) -> f64 {
    m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

/// Roots of `det(A - t M)` from its cubic coefficients, Newton polished.
pub fn charpoly_roots(a: &DenseMatrix, m: &DenseMatrix) -> [f64; 3] {
    let f = |t: f64| det3(&a.add_scaled(-t, m));
    // det(A - tM) = c0 + c1 t + c2 t² + c3 t³, read off from four samples.
    let (f0, f1, fm1, f2) = (f(0.0), f(1.0), f(-1.0), f(2.0));
    let c0 = f0;
    let c2 = 0.5 * (f1 + fm1) - f0;
    let odd = 0.5 * (f1 - fm1);
    let c3 = ((f2 - c0 - 4.0 * c2) / 2.0 - odd) / 3.0;
    let c1 = odd - c3;
    // Monic depressed cubic via the trigonometric form.
    let (b, c, d) = (c2 / c3, c1 / c3, c0 / c3);
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let r = (-p / 3.0).max(0.0).sqrt();
    let arg = if r > 0.0 {
        (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let phi = arg.acos();
    let mut roots = [0.0; 3];
    for (k, root) in roots.iter_mut().enumerate() {
        let mut t = 2.0 * r * ((phi - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos() - b / 3.0;
        for _ in 0..3 {
            let h = 1e-7 * t.abs().max(1e-3);
            let slope = (f(t + h) - f(t - h)) / (2.0 * h);
            if slope != 0.0 {
                let step = f(t) / slope;
                if step.is_finite() && step.abs() < 0.1 * t.abs().max(1e-3) {
                    t -= step;
                }
            }
        }
        *root = t;
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    roots
}

/// Coarsening invariants of every coarsened level: complete C/F partition,
/// a non-empty stencil of strong C neighbors for each F point, a shared
/// coarse point for each strong F neighbor, unit prolongation rows at C
/// points.
pub fn check_coarsening_invariants(h: &Hierarchy) -> Result<(), String> {
    for (k, rec) in h.records().iter().enumerate() {
        let n = h.level(k).dim();
        let split = &rec.split;
        if split.len() != n || rec.graph.len() != n {
            return Err(format!("level {k}: record size differs from {n}"));
        }
        if let Some(i) = split.label.iter().position(|&l| l == PointLabel::U) {
            return Err(format!("level {k}: point {i} left undecided"));
        }
        let p = h.prolongation(k);
        if p.ncols() != split.num_coarse() || p.nrows() != n {
            return Err(format!("level {k}: prolongation shape mismatch"));
        }
        let mut coarse_index = vec![usize::MAX; n];
        for (c, i) in split.coarse_points().into_iter().enumerate() {
            coarse_index[i] = c;
        }
        for i in 0..n {
            let (cols, vals) = p.row(i);
            if split.is_coarse(i) {
                if rec.interpolation.stencils[i].is_some()
                    || cols != [coarse_index[i]]
                    || vals != [1.0]
                {
                    return Err(format!("level {k}: C point {i} is not a unit row"));
                }
                continue;
            }
            let stencil = rec.interpolation.stencils[i]
                .as_ref()
                .ok_or(format!("level {k}: F point {i} has no stencil"))?;
            if stencil.points.is_empty() {
                return Err(format!("level {k}: F point {i} has an empty stencil"));
            }
            for &c in &stencil.points {
                if !split.is_coarse(c) || !rec.graph.is_strong(i, c) {
                    return Err(format!("level {k}: F point {i} interpolates from {c}"));
                }
            }
            for &j in &rec.graph.strong[i] {
                if split.is_coarse(j) {
                    continue;
                }
                if !rec.graph.strong[j]
                    .iter()
                    .any(|l| stencil.points.contains(l))
                {
                    return Err(format!(
                        "level {k}: strong F neighbors {i} and {j} share no coarse point"
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Largest relative Frobenius gap between stored coarse pairs and dense
/// `Pᵀ X P`.
pub fn galerkin_gap(h: &Hierarchy) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..h.num_levels() - 1 {
        let p = DenseMatrix::from_sparse(h.prolongation(k));
        let pt = p.transpose();
        for (fine, coarse) in [
            (&h.level(k).a, &h.level(k + 1).a),
            (&h.level(k).m, &h.level(k + 1).m),
        ] {
            let want = pt.matmul(&DenseMatrix::from_sparse(fine)).matmul(&p);
            let got = DenseMatrix::from_sparse(coarse);
            let gap = got.add_scaled(-1.0, &want).frobenius_norm() / want.frobenius_norm();
            worst = worst.max(gap);
        }
    }
    worst
}
