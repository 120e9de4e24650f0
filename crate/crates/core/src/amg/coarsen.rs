use std::cmp::Reverse;
use std::collections::BTreeSet;

use super::strength::StrengthGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointLabel {
    C,
    F,
    U,
}

/// C/F labels with the selection weights `q_i` left by the preliminary pass.
#[derive(Debug, Clone, PartialEq)]
pub struct CfSplit {
    pub label: Vec<PointLabel>,
    pub weight: Vec<i64>,
}

impl CfSplit {
    pub fn len(&self) -> usize {
        self.label.len()
    }

    pub fn is_empty(&self) -> bool {
        self.label.is_empty()
    }

    pub fn is_coarse(&self, i: usize) -> bool {
        self.label[i] == PointLabel::C
    }

    pub fn coarse_points(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_coarse(i)).collect()
    }

    pub fn fine_points(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.label[i] == PointLabel::F)
            .collect()
    }

    pub fn num_coarse(&self) -> usize {
        self.label.iter().filter(|&&l| l == PointLabel::C).count()
    }
}

/// Preliminary C-point choice.
///
/// Starting from `q_i = |S_iᵀ|`, repeatedly takes the undecided point of
/// largest weight (lowest index on ties) as C, makes its undecided strong
/// influencees F, raises the weights of the undecided points those new F
/// points depend on, and lowers the weights of the undecided points the new C
/// point depends on.
pub fn coarsen_preliminary(g: &StrengthGraph) -> CfSplit {
    let n = g.len();
    let mut label = vec![PointLabel::U; n];
    let mut weight: Vec<i64> = g.influence.iter().map(|s| s.len() as i64).collect();
    // Ordered by (largest weight, smallest index).
    let mut queue: BTreeSet<(Reverse<i64>, usize)> =
        (0..n).map(|i| (Reverse(weight[i]), i)).collect();

    let bump =
        |queue: &mut BTreeSet<(Reverse<i64>, usize)>, weight: &mut [i64], i: usize, by: i64| {
            queue.remove(&(Reverse(weight[i]), i));
            weight[i] += by;
            queue.insert((Reverse(weight[i]), i));
        };

    while let Some((_, i)) = queue.pop_first() {
        label[i] = PointLabel::C;
        for &j in &g.influence[i] {
            if label[j] != PointLabel::U {
                continue;
            }
            label[j] = PointLabel::F;
            queue.remove(&(Reverse(weight[j]), j));
            for &l in &g.strong[j] {
                if label[l] == PointLabel::U {
                    bump(&mut queue, &mut weight, l, 1);
                }
            }
        }
        for &j in &g.strong[i] {
            if label[j] == PointLabel::U {
                bump(&mut queue, &mut weight, j, -1);
            }
        }
    }
    CfSplit { label, weight }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amg::strength::strength_sets;
    use crate::sparse::CsrMatrix;

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

    fn split_of(n: usize) -> CfSplit {
        coarsen_preliminary(&strength_sets(&tridiag(n), 0.25).unwrap())
    }

    #[test]
    fn three_point_line() {
        let s = split_of(3);
        assert_eq!(s.coarse_points(), vec![1]);
        assert_eq!(s.fine_points(), vec![0, 2]);
    }

    #[test]
    fn five_point_line() {
        let s = split_of(5);
        assert_eq!(s.coarse_points(), vec![1, 3]);
        assert_eq!(s.fine_points(), vec![0, 2, 4]);
    }

    #[test]
    fn diagonal_matrix_is_all_coarse() {
        let a = CsrMatrix::identity(4);
        let s = coarsen_preliminary(&strength_sets(&a, 0.25).unwrap());
        assert_eq!(s.num_coarse(), 4);
    }

    #[test]
    fn no_undecided_points_remain() {
        for n in 1..30 {
            let s = split_of(n);
            assert!(s.label.iter().all(|&l| l != PointLabel::U));
        }
    }
}
