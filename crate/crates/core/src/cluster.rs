//! Weighted clusters: a cluster tree with integral virtual multiplicities.

use std::sync::{Arc, OnceLock};

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::Int;
use crate::proximity;
use crate::tree::ClusterTree;

/// Multiplicities are the stored data; values and excesses are derived lazily.
#[derive(Debug, Clone)]
pub struct WeightedCluster {
    tree: Arc<ClusterTree>,
    nu: Vec<Int>,
    values: OnceLock<Vec<Int>>,
    excesses: OnceLock<Vec<Int>>,
}

impl PartialEq for WeightedCluster {
    fn eq(&self, other: &Self) -> bool {
        self.nu == other.nu && (Arc::ptr_eq(&self.tree, &other.tree) || self.tree == other.tree)
    }
}

impl Eq for WeightedCluster {}

impl WeightedCluster {
    pub fn new(tree: Arc<ClusterTree>, nu: Vec<Int>) -> Result<Self> {
        if nu.len() != tree.len() {
            return Err(Error::precondition(format!(
                "{} multiplicities for {} points",
                nu.len(),
                tree.len()
            )));
        }
        Ok(WeightedCluster {
            tree,
            nu,
            values: OnceLock::new(),
            excesses: OnceLock::new(),
        })
    }

    pub fn from_i64(tree: Arc<ClusterTree>, nu: &[i64]) -> Result<Self> {
        WeightedCluster::new(tree, nu.iter().map(|&x| Int::from(x)).collect())
    }

    pub fn zero(tree: Arc<ClusterTree>) -> Self {
        let n = tree.len();
        WeightedCluster::new(tree, vec![Int::zero(); n]).expect("sizes agree")
    }

    pub fn from_values(tree: Arc<ClusterTree>, v: Vec<Int>) -> Result<Self> {
        let nu = proximity::mults_from_values(&tree, &v);
        let wc = WeightedCluster::new(tree, nu)?;
        let _ = wc.values.set(v);
        Ok(wc)
    }

    pub fn from_excesses(tree: Arc<ClusterTree>, rho: &[Int]) -> Result<Self> {
        let nu = proximity::mults_from_excesses(&tree, rho);
        WeightedCluster::new(tree, nu)
    }

    pub fn tree(&self) -> &Arc<ClusterTree> {
        &self.tree
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    pub fn multiplicities(&self) -> &[Int] {
        &self.nu
    }

    pub fn multiplicity(&self, p: usize) -> &Int {
        &self.nu[p]
    }

    pub fn values(&self) -> &[Int] {
        self.values
            .get_or_init(|| proximity::values_from_mults(&self.tree, &self.nu))
    }

    pub fn excesses(&self) -> &[Int] {
        self.excesses.get_or_init(|| {
            let rho = proximity::excesses_from_mults(&self.tree, &self.nu);
            debug_assert_eq!(rho, {
                let a = proximity::intersection_matrix(&self.tree);
                a.mul_vec(self.values()).into_iter().map(|x| -x).collect::<Vec<_>>()
            });
            rho
        })
    }

    pub fn is_consistent(&self) -> bool {
        self.excesses().iter().all(|r| !r.is_negative())
    }

    /// Consistent with every multiplicity positive.
    pub fn is_strictly_consistent(&self) -> bool {
        self.is_consistent() && self.nu.iter().all(|m| m.is_positive())
    }

    /// Points with positive excess, in tree order.
    pub fn dicritical_points(&self) -> Vec<usize> {
        self.excesses()
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_positive())
            .map(|(p, _)| p)
            .collect()
    }

    /// Virtual codimension `sum nu (nu + 1) / 2`.
    pub fn codimension(&self) -> Int {
        self.nu
            .iter()
            .map(|m| m * (m + 1u32) / 2u32)
            .sum()
    }

    pub fn self_intersection(&self) -> Int {
        self.nu.iter().map(|m| m * m).sum()
    }

    /// `sum nu (nu - 1) / 2`, equal to `K^2 - c(K)`.
    pub fn delta(&self) -> Int {
        self.nu.iter().map(|m| m * (m - 1u32) / 2u32).sum()
    }

    /// Same multiplicities on a cluster that contains this one; extra points
    /// get multiplicity zero.
    pub fn extend_to(&self, bigger: &Arc<ClusterTree>) -> Result<WeightedCluster> {
        let map = bigger.embedding_of(&self.tree)?;
        let mut nu = vec![Int::zero(); bigger.len()];
        for (p, &q) in map.iter().enumerate() {
            nu[q] = self.nu[p].clone();
        }
        WeightedCluster::new(bigger.clone(), nu)
    }

    /// Restriction of the multiplicities to a sub-cluster.
    pub fn restrict_to(&self, smaller: &Arc<ClusterTree>) -> Result<WeightedCluster> {
        let map = self.tree.embedding_of(smaller)?;
        WeightedCluster::new(smaller.clone(), map.iter().map(|&q| self.nu[q].clone()).collect())
    }

    /// The sub-cluster of points with non-zero multiplicity, which must be
    /// closed under preceding points.
    pub fn support(&self) -> Result<WeightedCluster> {
        let keep: Vec<bool> = self.nu.iter().map(|m| !m.is_zero()).collect();
        let sub = Arc::new(self.tree.subtree(&keep)?);
        self.restrict_to(&sub)
    }

    pub fn with_multiplicities(&self, nu: Vec<Int>) -> Result<WeightedCluster> {
        WeightedCluster::new(self.tree.clone(), nu)
    }
}

/// Points shared by two clusters, as `(index in a, index in b)` pairs.
/// Shared labels must have identical proximities.
pub fn shared_points(a: &ClusterTree, b: &ClusterTree) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for p in 0..a.len() {
        if let Some(q) = b.index_of(a.id(p)) {
            let pa = a.parent(p).map(|x| a.id(x));
            let pb = b.parent(q).map(|x| b.id(x));
            let sa = a.satellite_of(p).map(|x| a.id(x));
            let sb = b.satellite_of(q).map(|x| b.id(x));
            if pa != pb || sa != sb {
                return Err(Error::TreeMismatch(format!(
                    "point `{}` has different proximities in the two clusters",
                    a.id(p)
                )));
            }
            out.push((p, q));
        }
    }
    if out.is_empty() {
        return Err(Error::TreeMismatch("clusters share no point".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::PointRecord;

    fn ints(xs: &[i64]) -> Vec<Int> {
        xs.iter().map(|&x| Int::from(x)).collect()
    }

    pub(crate) fn three_point() -> Arc<ClusterTree> {
        Arc::new(
            ClusterTree::new(&[
                PointRecord::root("O"),
                PointRecord::free("p1", "O"),
                PointRecord::satellite("p2", "p1", "O"),
            ])
            .unwrap(),
        )
    }

    fn free_pair() -> Arc<ClusterTree> {
        Arc::new(ClusterTree::new(&[PointRecord::root("O"), PointRecord::free("p1", "O")]).unwrap())
    }

    #[test]
    fn codimension_and_squares() {
        let k1 = WeightedCluster::from_i64(free_pair(), &[2, 1]).unwrap();
        assert_eq!(k1.codimension(), Int::from(4));
        assert_eq!(k1.self_intersection(), Int::from(5));
        let k3 = WeightedCluster::from_i64(three_point(), &[3, 2, 1]).unwrap();
        assert_eq!(k3.codimension(), Int::from(10));
        assert_eq!(k3.delta(), Int::from(4));
        assert_eq!(WeightedCluster::zero(three_point()).codimension(), Int::from(0));
    }

    #[test]
    fn consistency_flags() {
        let k3 = WeightedCluster::from_i64(three_point(), &[3, 2, 1]).unwrap();
        assert!(k3.is_strictly_consistent());
        assert_eq!(k3.dicritical_points(), vec![1, 2]);
        let k2 = WeightedCluster::from_i64(free_pair(), &[1, 2]).unwrap();
        assert!(!k2.is_consistent());
        assert_eq!(k2.excesses(), ints(&[-1, 2]).as_slice());
    }

    #[test]
    fn support_drops_zero_points() {
        let big = Arc::new(
            ClusterTree::new(&[
                PointRecord::root("O"),
                PointRecord::free("p1", "O"),
                PointRecord::free("q", "O"),
            ])
            .unwrap(),
        );
        let wc = WeightedCluster::from_i64(big, &[2, 1, 0]).unwrap();
        let s = wc.support().unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.tree().ids(), &["O".to_string(), "p1".to_string()]);
    }
}
