//! Curves as weighted sums of branches. A branch is a chain of points from
//! the root; its multiplicities follow from the proximity equalities.

use std::sync::Arc;

use num_traits::{One, Zero};

use crate::cluster::{shared_points, WeightedCluster};
use crate::error::{Error, Result};
use crate::linalg::Int;
use crate::proximity;
use crate::tree::{ClusterTree, PointRecord};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub name: String,
    /// Indices into the owning curve's tree, root first.
    pub chain: Vec<usize>,
}

/// Multiplicities of a single branch: 1 at its last point, and at earlier
/// points the sum over later chain points proximate to them.
pub fn branch_multiplicities(tree: &ClusterTree, chain: &[usize]) -> Vec<Int> {
    let mut e = vec![Int::zero(); tree.len()];
    if let Some(&last) = chain.last() {
        e[last] = Int::one();
    }
    for i in (0..chain.len().saturating_sub(1)).rev() {
        let p = chain[i];
        let mut x = Int::zero();
        for &q in &chain[i + 1..] {
            if tree.is_proximate(q, p) {
                x += &e[q];
            }
        }
        e[p] = x;
    }
    e
}

fn check_chain(tree: &ClusterTree, name: &str, chain: &[usize]) -> Result<()> {
    let bad = |message: String| Error::InvalidBranch {
        branch: name.to_string(),
        message,
    };
    match chain.first() {
        None => return Err(bad("empty chain".into())),
        Some(&p) if tree.parent(p).is_some() => {
            return Err(bad(format!("chain starts at `{}`, not at the root", tree.id(p))))
        }
        _ => {}
    }
    for w in chain.windows(2) {
        if tree.parent(w[1]) != Some(w[0]) {
            return Err(bad(format!(
                "`{}` is not a child of `{}`",
                tree.id(w[1]),
                tree.id(w[0])
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Curve {
    tree: Arc<ClusterTree>,
    branches: Vec<(Branch, u64)>,
}

impl Curve {
    pub fn new(tree: Arc<ClusterTree>, branches: Vec<(Branch, u64)>) -> Result<Self> {
        for (b, k) in &branches {
            check_chain(&tree, &b.name, &b.chain)?;
            if *k == 0 {
                return Err(Error::InvalidBranch {
                    branch: b.name.clone(),
                    message: "coefficient must be positive".into(),
                });
            }
        }
        Ok(Curve { tree, branches })
    }

    pub fn empty(tree: Arc<ClusterTree>) -> Self {
        Curve {
            tree,
            branches: Vec::new(),
        }
    }

    /// Builds a curve from `(name, chain ids, coefficient)` triples.
    pub fn from_ids<S: AsRef<str>>(
        tree: Arc<ClusterTree>,
        branches: &[(&str, &[S], u64)],
    ) -> Result<Self> {
        let mut out = Vec::with_capacity(branches.len());
        for (name, ids, k) in branches {
            let chain = ids
                .iter()
                .map(|id| tree.require(id.as_ref()))
                .collect::<Result<Vec<_>>>()?;
            out.push((
                Branch {
                    name: name.to_string(),
                    chain,
                },
                *k,
            ));
        }
        Curve::new(tree, out)
    }

    pub fn tree(&self) -> &Arc<ClusterTree> {
        &self.tree
    }

    pub fn branches(&self) -> &[(Branch, u64)] {
        &self.branches
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// `e_p(C)` for every point of the curve's tree.
    pub fn multiplicities(&self) -> Vec<Int> {
        let mut e = vec![Int::zero(); self.tree.len()];
        for (b, k) in &self.branches {
            let k = Int::from(*k);
            for (acc, x) in e.iter_mut().zip(branch_multiplicities(&self.tree, &b.chain)) {
                *acc += &k * x;
            }
        }
        e
    }

    pub fn values(&self) -> Vec<Int> {
        proximity::values_from_mults(&self.tree, &self.multiplicities())
    }

    /// The sub-curve made of the selected branches, on the same tree.
    pub fn select(&self, indices: &[usize]) -> Curve {
        Curve {
            tree: self.tree.clone(),
            branches: indices.iter().map(|&i| self.branches[i].clone()).collect(),
        }
    }

    pub fn scaled(&self, k: u64) -> Result<Curve> {
        if k == 0 {
            return Err(Error::precondition("curve multiple must be positive"));
        }
        Ok(Curve {
            tree: self.tree.clone(),
            branches: self
                .branches
                .iter()
                .map(|(b, c)| (b.clone(), c * k))
                .collect(),
        })
    }

    /// The same curve on a tree containing this one's.
    pub fn rebase(&self, bigger: &Arc<ClusterTree>) -> Result<Curve> {
        let map = bigger.embedding_of(&self.tree)?;
        let branches = self
            .branches
            .iter()
            .map(|(b, k)| {
                (
                    Branch {
                        name: b.name.clone(),
                        chain: b.chain.iter().map(|&p| map[p]).collect(),
                    },
                    *k,
                )
            })
            .collect();
        Ok(Curve {
            tree: bigger.clone(),
            branches,
        })
    }

    /// Sum of two curves, on the union of their trees.
    pub fn plus(&self, other: &Curve) -> Result<Curve> {
        let tree = Arc::new(self.tree.merge(&other.tree)?);
        let mut a = self.rebase(&tree)?;
        let b = other.rebase(&tree)?;
        a.branches.extend(b.branches);
        Ok(a)
    }

    /// Chain of branch `i` as point ids.
    pub fn chain_ids(&self, i: usize) -> Vec<&str> {
        self.branches[i].0.chain.iter().map(|&p| self.tree.id(p)).collect()
    }
}

/// `[C1, C2]_O = sum e_p(C1) e_p(C2)` over shared points.
pub fn noether_pairing(c1: &Curve, c2: &Curve) -> Result<Int> {
    let e1 = c1.multiplicities();
    let e2 = c2.multiplicities();
    Ok(shared_points(&c1.tree, &c2.tree)?
        .into_iter()
        .map(|(p, q)| &e1[p] * &e2[q])
        .sum())
}

/// `[K, C]_O = sum nu_p e_p(C)` over shared points.
pub fn pair_with_curve(wc: &WeightedCluster, c: &Curve) -> Result<Int> {
    let e = c.multiplicities();
    Ok(shared_points(wc.tree(), &c.tree)?
        .into_iter()
        .map(|(p, q)| &wc.multiplicities()[p] * &e[q])
        .sum())
}

pub fn delta_origin(c: &Curve) -> Int {
    c.multiplicities()
        .iter()
        .map(|m| m * (m - 1u32) / 2u32)
        .sum()
}

pub fn delta_cluster(wc: &WeightedCluster) -> Int {
    wc.delta()
}

/// A branch through the chain to `p` continued by a new free point, and the
/// extended tree.
pub fn generic_branch(tree: &ClusterTree, p: usize, name: &str) -> Result<(ClusterTree, Branch)> {
    let tail = tree.fresh_id(tree.id(p));
    let (t, idx) = tree.with_point(PointRecord::free(tail, tree.id(p)))?;
    let mut chain = t.chain_to(p);
    chain.push(idx);
    Ok((
        t,
        Branch {
            name: name.to_string(),
            chain,
        },
    ))
}

/// A curve going sharply through a consistent cluster: `rho_p` branches
/// through each dicritical point `p`, each continued by its own new free point.
pub fn generic_curve(wc: &WeightedCluster) -> Result<Curve> {
    if !wc.is_consistent() {
        let p = wc
            .excesses()
            .iter()
            .position(|r| r < &Int::zero())
            .unwrap_or(0);
        return Err(Error::precondition(format!(
            "cluster is not consistent at `{}`",
            wc.tree().id(p)
        )));
    }
    let mut tree: ClusterTree = (**wc.tree()).clone();
    let mut branches = Vec::new();
    for p in wc.dicritical_points() {
        let count = wc.excesses()[p].clone();
        let mut k = Int::zero();
        while k < count {
            let name = format!("g{}", branches.len() + 1);
            let (t, b) = generic_branch(&tree, p, &name)?;
            tree = t;
            branches.push((b, 1));
            k += 1;
        }
    }
    let curve = Curve::new(Arc::new(tree), branches)?;
    debug_assert_eq!(&curve.multiplicities()[..wc.len()], wc.multiplicities());
    Ok(curve)
}

/// For each branch, the point `p_i`: the first chain point outside `k` from
/// which on every chain point is free and has curve multiplicity one.
/// Indices refer to the curve's tree.
pub fn tail_points(c: &Curve, k: &ClusterTree) -> Result<Vec<usize>> {
    tail_points_lenient(c, k)?
        .into_iter()
        .zip(&c.branches)
        .map(|(t, (b, _))| {
            t.ok_or_else(|| Error::InvalidBranch {
                branch: b.name.clone(),
                message: "no free simple point outside the cluster; extend the chain with a free tail point"
                    .into(),
            })
        })
        .collect()
}

/// As `tail_points`, with `None` for branches that have no such point.
pub fn tail_points_lenient(c: &Curve, k: &ClusterTree) -> Result<Vec<Option<usize>>> {
    let map = c.tree.embedding_of(k)?;
    let mut in_k = vec![false; c.tree.len()];
    for q in map {
        in_k[q] = true;
    }
    let e = c.multiplicities();
    Ok(c.branches
        .iter()
        .map(|(b, _)| {
            let mut found = None;
            for &p in b.chain.iter().rev() {
                if !c.tree.is_free(p) || !e[p].is_one() {
                    break;
                }
                if !in_k[p] {
                    found = Some(p);
                }
            }
            found
        })
        .collect())
}
