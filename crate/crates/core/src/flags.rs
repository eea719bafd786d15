//! Flags of clusters `T_0 < T_1 < ... < T_n` attached to a surface and a
//! curve, built by unit increments at the branch tail points followed by
//! partial unloading relative to the dicritical points.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::cluster::WeightedCluster;
use crate::curve::{tail_points, Curve};
use crate::error::{Error, Result};
use crate::linalg::Int;
use crate::surface::SurfaceModel;
use crate::tree::ClusterTree;
use crate::unloading::{partial_unload, FixedSet};

const FLAG_CAP: usize = 100_000;

/// `K` together with the branch points up to each tail point.
#[derive(Debug, Clone)]
pub struct ExtendedTree {
    pub tree: Arc<ClusterTree>,
    /// Index in `tree` of every point of `K`.
    pub k_map: Vec<usize>,
    /// Tail point of each branch, as an index in `tree`.
    pub p_points: Vec<usize>,
    /// Curve multiplicities on `tree`.
    pub curve_mults: Vec<Int>,
}

pub fn extend_tree(surface: &SurfaceModel, c: &Curve) -> Result<ExtendedTree> {
    let tails = tail_points(c, surface.tree())?;
    let ct = c.tree();
    let mut keep = vec![false; ct.len()];
    for q in ct.embedding_of(surface.tree())? {
        keep[q] = true;
    }
    for ((b, _), &tail) in c.branches().iter().zip(&tails) {
        for &p in &b.chain {
            keep[p] = true;
            if p == tail {
                break;
            }
        }
    }
    let tree = Arc::new(ct.subtree(&keep)?);
    let k_map = tree.embedding_of(surface.tree())?;
    let cmap = ct.embedding_of(&tree)?;
    let p_points = tails
        .iter()
        .map(|&t| tree.require(ct.id(t)))
        .collect::<Result<Vec<_>>>()?;
    let e = c.multiplicities();
    let curve_mults = cmap.iter().map(|&q| e[q].clone()).collect();
    Ok(ExtendedTree {
        tree,
        k_map,
        p_points,
        curve_mults,
    })
}

#[derive(Debug, Clone)]
pub struct Flag {
    pub extended: ExtendedTree,
    /// Dicritical points as indices in the extended tree.
    pub kplus: Vec<usize>,
    pub clusters: Vec<WeightedCluster>,
    /// Excesses of `T_0` on `K_+`.
    pub m: Vec<Int>,
    /// `m - rho(T_n)` on `K_+`.
    pub omega: Vec<Int>,
    pub n: usize,
    /// `v(T_n) - v(T_0)` on the extended tree.
    pub n_p: Vec<Int>,
}

impl Flag {
    pub fn tree(&self) -> &Arc<ClusterTree> {
        &self.extended.tree
    }

    pub fn first(&self) -> &WeightedCluster {
        &self.clusters[0]
    }

    pub fn last(&self) -> &WeightedCluster {
        self.clusters.last().expect("a flag has at least one cluster")
    }

    /// `[T_j, C]_O` for every cluster of the flag.
    pub fn curve_pairings(&self) -> Vec<Int> {
        self.clusters
            .iter()
            .map(|t| {
                t.multiplicities()
                    .iter()
                    .zip(&self.extended.curve_mults)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn all_consistent(&self) -> bool {
        self.clusters.iter().all(|t| t.is_consistent())
    }
}

/// The cluster on the extended tree with excess `m` on `K_+` and 0 elsewhere.
pub fn initial_cluster(ext: &ExtendedTree, kplus: &[usize], m: &[Int]) -> Result<WeightedCluster> {
    let mut rho = vec![Int::zero(); ext.tree.len()];
    for (&u, x) in kplus.iter().zip(m) {
        rho[u] = x.clone();
    }
    WeightedCluster::from_excesses(ext.tree.clone(), &rho)
}

pub fn build_flag(surface: &SurfaceModel, c: &Curve, m: &[Int]) -> Result<Flag> {
    let order: Vec<usize> = (0..c.branches().len()).collect();
    build_flag_ordered(surface, c, m, &order)
}

/// As `build_flag`, incrementing deficient tail points in the given branch order.
pub fn build_flag_ordered(surface: &SurfaceModel, c: &Curve, m: &[Int], order: &[usize]) -> Result<Flag> {
    if m.len() != surface.kplus().len() {
        return Err(Error::precondition(format!(
            "{} excesses given for {} dicritical points",
            m.len(),
            surface.kplus().len()
        )));
    }
    if let Some(x) = m.iter().find(|x| x.is_negative()) {
        return Err(Error::precondition(format!("negative excess {x}")));
    }
    let ext = extend_tree(surface, c)?;
    let kplus: Vec<usize> = surface.kplus().iter().map(|&u| ext.k_map[u]).collect();
    let fixed = FixedSet::from_indices(&ext.tree, &kplus);
    let t0 = initial_cluster(&ext, &kplus, m)?;
    let mut clusters = vec![t0];
    loop {
        let cur = clusters.last().expect("non-empty");
        let deficient = order
            .iter()
            .map(|&b| ext.p_points[b])
            .find(|&p| cur.multiplicities()[p] < Int::one());
        let Some(p) = deficient else { break };
        if clusters.len() > FLAG_CAP {
            return Err(Error::internal("flag construction did not terminate"));
        }
        let mut nu = cur.multiplicities().to_vec();
        nu[p] += 1u32;
        let (next, _) = partial_unload(&cur.with_multiplicities(nu)?, &fixed)?;
        clusters.push(next);
    }
    let n = clusters.len() - 1;
    let last = clusters.last().expect("non-empty");
    if let Some(&p) = ext.p_points.iter().find(|&&p| !last.multiplicities()[p].is_one()) {
        return Err(Error::internal(format!(
            "flag ends with multiplicity {} at tail point `{}`",
            last.multiplicities()[p],
            ext.tree.id(p)
        )));
    }
    let omega = kplus
        .iter()
        .zip(m)
        .map(|(&u, x)| x - &last.excesses()[u])
        .collect();
    let n_p = last
        .values()
        .iter()
        .zip(clusters[0].values())
        .map(|(a, b)| a - b)
        .collect();
    Ok(Flag {
        extended: ext,
        kplus,
        clusters,
        m: m.to_vec(),
        omega,
        n,
        n_p,
    })
}

/// Learns `omega` from a flag with `m = 0`, then builds the flag at `m = omega`,
/// all of whose clusters are consistent.
pub fn build_default_flag(surface: &SurfaceModel, c: &Curve) -> Result<Flag> {
    let zero = vec![Int::zero(); surface.kplus().len()];
    let probe = build_flag(surface, c, &zero)?;
    build_flag(surface, c, &probe.omega)
}

/// `(K', tau^n - e(C))`, consistent with dicritical points inside `K` when
/// `m >= omega`.
pub fn companion_cluster(flag: &Flag) -> Result<WeightedCluster> {
    if flag.m.iter().zip(&flag.omega).any(|(m, w)| m < w) {
        let omega: Vec<String> = flag.omega.iter().map(|x| x.to_string()).collect();
        return Err(Error::precondition(format!(
            "the flag needs m >= omega = ({})",
            omega.join(",")
        )));
    }
    let nu: Vec<Int> = flag
        .last()
        .multiplicities()
        .iter()
        .zip(&flag.extended.curve_mults)
        .map(|(t, e)| t - e)
        .collect();
    let comp = WeightedCluster::new(flag.tree().clone(), nu)?;
    if !comp.is_consistent() {
        return Err(Error::internal("companion cluster is not consistent"));
    }
    let mut in_k = vec![false; flag.tree().len()];
    for &q in &flag.extended.k_map {
        in_k[q] = true;
    }
    if let Some(p) = comp.dicritical_points().into_iter().find(|&p| !in_k[p]) {
        return Err(Error::internal(format!(
            "companion cluster is dicritical at `{}` outside the ideal's cluster",
            flag.tree().id(p)
        )));
    }
    Ok(comp)
}

/// Number of unloadings performed at each point of the extended tree.
pub fn dbar(flag: &Flag) -> Vec<Int> {
    flag.n_p.clone()
}

/// Codimension of `T_n` in `T_0` counted through the virtual codimension.
pub fn codimension_drop(flag: &Flag) -> Int {
    flag.last().codimension() - flag.first().codimension()
}

/// `e(C)` on the extended tree as a weighted cluster.
pub fn curve_cluster(flag: &Flag) -> Result<WeightedCluster> {
    WeightedCluster::new(flag.tree().clone(), flag.extended.curve_mults.clone())
}
