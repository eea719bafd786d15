//! Proximity and intersection matrices of a cluster, and the triangular
//! solves relating multiplicities, values and excesses.
//!
//! With `P` the proximity matrix, multiplicities and values satisfy
//! `nu = P v`, excesses are `rho = P^t nu`, and the intersection matrix of
//! the exceptional divisor is `A = -P^t P`, so `rho = -A v`.

use num_traits::{One, Zero};

use crate::linalg::{Int, IntMatrix};
use crate::tree::ClusterTree;

pub fn proximity_matrix(tree: &ClusterTree) -> IntMatrix {
    let n = tree.len();
    let mut p = IntMatrix::identity(n);
    for i in 0..n {
        for j in tree.targets(i) {
            p.set(i, j, -Int::one());
        }
    }
    p
}

pub fn intersection_matrix(tree: &ClusterTree) -> IntMatrix {
    let p = proximity_matrix(tree);
    p.transpose().mul(&p).neg()
}

/// `v = P^{-1} nu` by forward substitution.
pub fn values_from_mults(tree: &ClusterTree, nu: &[Int]) -> Vec<Int> {
    let mut v: Vec<Int> = Vec::with_capacity(nu.len());
    for (p, m) in nu.iter().enumerate() {
        let mut x = m.clone();
        for q in tree.targets(p) {
            x += &v[q];
        }
        v.push(x);
    }
    v
}

/// `nu = P v`.
pub fn mults_from_values(tree: &ClusterTree, v: &[Int]) -> Vec<Int> {
    (0..tree.len())
        .map(|p| {
            let mut x = v[p].clone();
            for q in tree.targets(p) {
                x -= &v[q];
            }
            x
        })
        .collect()
}

/// `rho = P^t nu`: `rho_p = nu_p - sum_{q -> p} nu_q`.
pub fn excesses_from_mults(tree: &ClusterTree, nu: &[Int]) -> Vec<Int> {
    (0..tree.len())
        .map(|p| {
            let mut x = nu[p].clone();
            for &q in tree.proximate_to(p) {
                x -= &nu[q];
            }
            x
        })
        .collect()
}

/// `nu = P^{-t} rho` by back substitution: the multiplicities of the cluster
/// with the given excesses.
pub fn mults_from_excesses(tree: &ClusterTree, rho: &[Int]) -> Vec<Int> {
    let n = tree.len();
    let mut nu = vec![Int::zero(); n];
    for p in (0..n).rev() {
        let mut x = rho[p].clone();
        for &q in tree.proximate_to(p) {
            x += &nu[q];
        }
        nu[p] = x;
    }
    nu
}

/// Adjacency of the dual graph of the exceptional divisor, read off the
/// off-diagonal entries of the intersection matrix. Edges are `(p, q)` with
/// `p < q`, sorted.
pub fn dual_graph(tree: &ClusterTree) -> Vec<(usize, usize)> {
    let n = tree.len();
    let mut edges = Vec::new();
    for q in 0..n {
        for p in tree.targets(q) {
            // E_p and E_q meet unless a later point is proximate to both
            let separated = tree.proximate_to(q).iter().any(|&r| tree.is_proximate(r, p));
            if !separated {
                edges.push((p.min(q), p.max(q)));
            }
        }
    }
    edges.sort_unstable();
    edges
}

pub fn neighbours(tree: &ClusterTree, p: usize) -> Vec<usize> {
    let mut out: Vec<usize> = dual_graph(tree)
        .into_iter()
        .filter_map(|(a, b)| {
            if a == p {
                Some(b)
            } else if b == p {
                Some(a)
            } else {
                None
            }
        })
        .collect();
    out.sort_unstable();
    out
}

/// Connected components of the dual graph restricted to `mask`, each sorted,
/// listed by smallest member.
pub fn components(tree: &ClusterTree, mask: &[bool]) -> Vec<Vec<usize>> {
    let n = tree.len();
    let edges = dual_graph(tree);
    let mut adj = vec![Vec::new(); n];
    for (a, b) in edges {
        if mask[a] && mask[b] {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if !mask[s] || seen[s] {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    comp.push(y);
                    stack.push(y);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::PointRecord;

    fn ints(xs: &[i64]) -> Vec<Int> {
        xs.iter().map(|&x| Int::from(x)).collect()
    }

    fn free_pair() -> ClusterTree {
        ClusterTree::new(&[PointRecord::root("O"), PointRecord::free("p1", "O")]).unwrap()
    }

    fn three_point() -> ClusterTree {
        ClusterTree::new(&[
            PointRecord::root("O"),
            PointRecord::free("p1", "O"),
            PointRecord::satellite("p2", "p1", "O"),
        ])
        .unwrap()
    }

    #[test]
    fn proximity_matrices_of_fixtures() {
        assert_eq!(proximity_matrix(&free_pair()), IntMatrix::from_rows(&[vec![1, 0], vec![-1, 1]]));
        assert_eq!(
            proximity_matrix(&three_point()),
            IntMatrix::from_rows(&[vec![1, 0, 0], vec![-1, 1, 0], vec![-1, -1, 1]])
        );
        assert_eq!(proximity_matrix(&ClusterTree::single("O")), IntMatrix::from_rows(&[vec![1]]));
    }

    #[test]
    fn value_multiplicity_conversions() {
        assert_eq!(values_from_mults(&free_pair(), &ints(&[2, 1])), ints(&[2, 3]));
        assert_eq!(values_from_mults(&three_point(), &ints(&[3, 2, 1])), ints(&[3, 5, 9]));
        assert_eq!(values_from_mults(&three_point(), &ints(&[0, 0, 0])), ints(&[0, 0, 0]));
        assert_eq!(mults_from_values(&free_pair(), &ints(&[2, 3])), ints(&[2, 1]));
        assert_eq!(mults_from_values(&three_point(), &ints(&[3, 5, 9])), ints(&[3, 2, 1]));
        // column of the root: 1 at O, -1 at every point proximate to O
        assert_eq!(mults_from_values(&three_point(), &ints(&[1, 0, 0])), ints(&[1, -1, -1]));
    }

    #[test]
    fn excesses_of_fixtures() {
        assert_eq!(excesses_from_mults(&free_pair(), &ints(&[2, 1])), ints(&[1, 1]));
        assert_eq!(excesses_from_mults(&three_point(), &ints(&[3, 2, 1])), ints(&[0, 1, 1]));
        assert_eq!(excesses_from_mults(&free_pair(), &ints(&[1, 2])), ints(&[-1, 2]));
        assert_eq!(mults_from_excesses(&three_point(), &ints(&[0, 1, 1])), ints(&[3, 2, 1]));
    }

    #[test]
    fn dual_graph_of_fixtures() {
        assert_eq!(dual_graph(&free_pair()), vec![(0, 1)]);
        assert_eq!(dual_graph(&three_point()), vec![(0, 2), (1, 2)]);
        assert!(dual_graph(&ClusterTree::single("O")).is_empty());
        let a = intersection_matrix(&three_point());
        assert_eq!(a, IntMatrix::from_rows(&[vec![-3, 0, 1], vec![0, -2, 1], vec![1, 1, -1]]));
    }
}
