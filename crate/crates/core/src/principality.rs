//! Whether the strict transform of a curve on the blown-up surface is a
//! Cartier divisor, globally or near one singularity, and the rational
//! intersection numbers that go with it.

use std::sync::Arc;

use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::cluster::WeightedCluster;
use crate::curve::{generic_branch, noether_pairing, pair_with_curve, Curve};
use crate::error::{Error, Result};
use crate::linalg::{rat, solve_columns, Int, Rational};
use crate::proximity;
use crate::surface::{l_vector_of_curve, simple_cluster, Singularity, SurfaceModel};
use crate::tree::ClusterTree;
use crate::unloading::unload;

pub fn all_integral(xs: &[Rational]) -> bool {
    xs.iter().all(|x| x.is_integer())
}

/// Coefficients `a` with `sum a_i vectors[i] = target`, if the system has a
/// unique solution.
pub fn decompose(vectors: &[Vec<Int>], target: &[Int]) -> Option<Vec<Rational>> {
    let cols: Vec<Vec<Rational>> = vectors
        .iter()
        .map(|v| v.iter().map(rat).collect())
        .collect();
    let b: Vec<Rational> = target.iter().map(rat).collect();
    solve_columns(&cols, &b)
}

/// Decomposition of a vector indexed by `K_+` in the `L_u`, `u` in `support`.
pub fn decompose_l(surface: &SurfaceModel, target: &[Int], support: &[usize]) -> Option<Vec<Rational>> {
    let vectors: Vec<Vec<Int>> = support.iter().map(|&u| surface.l_vector(u)).collect();
    decompose(&vectors, target)
}

/// Index map from `K` into the curve's tree.
fn k_in_curve(surface: &SurfaceModel, c: &Curve) -> Result<Vec<usize>> {
    c.tree().embedding_of(surface.tree())
}

/// The complete ideal generated by the functions whose values at `K_+` are
/// at least those of the curve, as a cluster on `K`.
pub fn ideal_cluster_qc(surface: &SurfaceModel, c: &Curve) -> Result<WeightedCluster> {
    let tree = surface.tree().clone();
    let mut v = vec![Int::zero(); tree.len()];
    for (u, x) in surface.kplus().iter().zip(l_vector_of_curve(surface, c)?) {
        v[*u] = x;
    }
    let t_c = WeightedCluster::from_values(tree.clone(), v)?;
    let (qc, _) = unload(&t_c)?;
    for &u in surface.kplus() {
        if qc.values()[u] != t_c.values()[u] {
            return Err(Error::precondition(format!(
                "unloading raised the value at `{}`; the curve is not realisable on this cluster",
                tree.id(u)
            )));
        }
    }
    Ok(qc)
}

/// Exceptional part of the pull-back of the strict transform, on a
/// resolution that blows up `tree`; coefficients only on the contracted
/// (non-dicritical) points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MumfordDivisor {
    pub tree: Arc<ClusterTree>,
    /// Contracted points of `tree`, increasing.
    pub points: Vec<usize>,
    pub coefficients: Vec<Rational>,
}

impl MumfordDivisor {
    pub fn is_integral(&self) -> bool {
        all_integral(&self.coefficients)
    }

    pub fn coefficient(&self, id: &str) -> Option<&Rational> {
        let p = self.tree.index_of(id)?;
        let i = self.points.iter().position(|&x| x == p)?;
        Some(&self.coefficients[i])
    }
}

/// `|C~ . E_p|` on the surface blowing up `tree`, for each point of `tree`.
/// `e` holds the curve multiplicities on `tree`.
fn strict_meets(tree: &ClusterTree, e: &[Int]) -> Vec<Int> {
    proximity::excesses_from_mults(tree, e)
}

/// Sub-tree of the curve's tree made of `K` and the chain points of the
/// given curves (all of them, or up to each branch's tail point).
fn resolution_tree(surface: &SurfaceModel, curves: &[&Curve], cut_at_tail: bool) -> Result<ClusterTree> {
    let tree = curves[0].tree();
    let mut keep = vec![false; tree.len()];
    for q in tree.embedding_of(surface.tree())? {
        keep[q] = true;
    }
    for c in curves {
        let map = tree.embedding_of(c.tree())?;
        let tails = if cut_at_tail {
            crate::curve::tail_points_lenient(c, surface.tree())?
        } else {
            vec![None; c.branches().len()]
        };
        for ((b, _), tail) in c.branches().iter().zip(tails) {
            for &p in &b.chain {
                keep[map[p]] = true;
                if Some(p) == tail {
                    break;
                }
            }
        }
    }
    tree.subtree(&keep)
}

fn mumford_on(surface: &SurfaceModel, c: &Curve, tree: Arc<ClusterTree>) -> Result<MumfordDivisor> {
    let kmap = tree.embedding_of(surface.tree())?;
    let mut dicritical = vec![false; tree.len()];
    for &u in surface.kplus() {
        dicritical[kmap[u]] = true;
    }
    let points: Vec<usize> = (0..tree.len()).filter(|&p| !dicritical[p]).collect();
    let cmap = c.tree().embedding_of(&tree)?;
    let ce = c.multiplicities();
    let e: Vec<Int> = cmap.iter().map(|&q| ce[q].clone()).collect();
    let meets = strict_meets(&tree, &e);
    let a = proximity::intersection_matrix(&tree);
    let cols: Vec<Vec<Rational>> = points
        .iter()
        .map(|&q| points.iter().map(|&p| rat(a.get(p, q))).collect())
        .collect();
    let b: Vec<Rational> = points.iter().map(|&p| rat(&-&meets[p])).collect();
    let coefficients = solve_columns(&cols, &b)
        .ok_or_else(|| Error::internal("intersection matrix restricted to contracted points is singular"))?;
    Ok(MumfordDivisor {
        tree,
        points,
        coefficients,
    })
}

pub fn mumford_divisor(surface: &SurfaceModel, c: &Curve) -> Result<MumfordDivisor> {
    let tree = Arc::new(resolution_tree(surface, &[c], true)?);
    mumford_on(surface, c, tree)
}

#[derive(Debug, Clone)]
pub struct CartierVerdict {
    pub cartier: bool,
    /// `a_u` with `L_C = sum a_u L_u`, over `K_+`.
    pub coefficients: Vec<Rational>,
    pub qc: WeightedCluster,
    pub mumford: MumfordDivisor,
    pub by_coefficients: bool,
    pub by_ideal_cluster: bool,
    pub by_mumford: bool,
}

pub fn is_cartier(surface: &SurfaceModel, c: &Curve) -> Result<CartierVerdict> {
    let target = l_vector_of_curve(surface, c)?;
    let coefficients = decompose_l(surface, &target, surface.kplus())
        .ok_or_else(|| Error::internal("the L-vectors of the dicritical points are not a basis"))?;
    if let Some(i) = coefficients.iter().position(|a| a.is_negative()) {
        return Err(Error::internal(format!(
            "negative intersection {} with the component of `{}`",
            coefficients[i],
            surface.tree().id(surface.kplus()[i])
        )));
    }
    let qc = ideal_cluster_qc(surface, c)?;
    let mumford = mumford_divisor(surface, c)?;
    let by_coefficients = all_integral(&coefficients);
    let by_ideal_cluster = qc.dicritical_points().iter().all(|&p| surface.is_dicritical(p));
    let by_mumford = mumford.is_integral();
    if by_coefficients != by_ideal_cluster || by_coefficients != by_mumford {
        return Err(Error::internal(format!(
            "Cartier criteria disagree: coefficients {by_coefficients}, ideal cluster {by_ideal_cluster}, Mumford {by_mumford}"
        )));
    }
    Ok(CartierVerdict {
        cartier: by_coefficients,
        coefficients,
        qc,
        mumford,
        by_coefficients,
        by_ideal_cluster,
        by_mumford,
    })
}

/// Where the strict transform of a branch meets the exceptional locus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attachment {
    /// At a smooth point of the surface.
    Smooth,
    /// At the singularity with this index in `SurfaceModel::singularities`.
    Singular(usize),
}

/// A branch reaches `Q` when its first point outside `K` (or a generic free
/// point after its last point, if the chain stays in `K`) is proximate to a
/// point of `T_Q`.
pub fn attachment(surface: &SurfaceModel, c: &Curve, branch: usize) -> Result<Attachment> {
    let kmap = k_in_curve(surface, c)?;
    let tree = c.tree();
    let mut from_curve = vec![None; tree.len()];
    for (p, &q) in kmap.iter().enumerate() {
        from_curve[q] = Some(p);
    }
    let chain = &c.branches()[branch].0.chain;
    let targets: Vec<usize> = match chain.iter().find(|&&p| from_curve[p].is_none()) {
        Some(&first) => tree.targets(first).filter_map(|q| from_curve[q]).collect(),
        None => vec![from_curve[*chain.last().expect("chains are non-empty")].expect("inside K")],
    };
    for (i, s) in surface.singularities().iter().enumerate() {
        if targets.iter().any(|t| s.t_q.contains(t)) {
            return Ok(Attachment::Singular(i));
        }
    }
    Ok(Attachment::Smooth)
}

#[derive(Debug, Clone)]
pub struct LocalVerdict {
    pub principal: bool,
    /// Branches of the curve whose strict transforms pass through `Q`.
    pub branches: Vec<usize>,
    /// Dicritical points whose components pass through `Q`.
    pub support: Vec<usize>,
    pub target: Vec<Int>,
    pub coefficients: Option<Vec<Rational>>,
}

pub fn local_principality(surface: &SurfaceModel, c: &Curve, sing: &Singularity) -> Result<LocalVerdict> {
    let index = surface
        .singularities()
        .iter()
        .position(|s| s == sing)
        .ok_or_else(|| Error::precondition(format!("`{}` is not a singularity of this surface", sing.label)))?;
    let mut branches = Vec::new();
    for i in 0..c.branches().len() {
        if attachment(surface, c, i)? == Attachment::Singular(index) {
            branches.push(i);
        }
    }
    let target = l_vector_of_curve(surface, &c.select(&branches))?;
    let support = surface.kplus_at(sing);
    let coefficients = decompose_l(surface, &target, &support);
    let principal = coefficients.as_deref().is_some_and(all_integral);
    Ok(LocalVerdict {
        principal,
        branches,
        support,
        target,
        coefficients,
    })
}

/// `lcm(v, s) / v`.
pub fn minimal_cartier_multiple_from(value: &Int, square: &Int) -> Result<Int> {
    if !value.is_positive() || !square.is_positive() {
        return Err(Error::precondition("value and self-intersection must be positive"));
    }
    Ok(value.lcm(square) / value)
}

/// Least `m` with `m C~` Cartier, on the blow-up of a simple ideal.
pub fn minimal_cartier_multiple(surface: &SurfaceModel, c: &Curve) -> Result<Int> {
    let [p] = surface.kplus() else {
        return Err(Error::precondition("the ideal must be simple (one dicritical point)"));
    };
    if surface.cluster().excesses()[*p] != Int::from(1) {
        return Err(Error::precondition("the ideal must be simple (excess one)"));
    }
    let square = surface.simple_values(*p)[*p].clone();
    let value = c.values()[k_in_curve(surface, c)?[*p]].clone();
    let m = minimal_cartier_multiple_from(&value, &square)?;
    let k: u64 = (&m)
        .try_into()
        .map_err(|_| Error::precondition("multiple too large"))?;
    if !is_cartier(surface, &c.scaled(k)?)?.cartier {
        return Err(Error::internal(format!("{m} times the curve is not Cartier")));
    }
    if k > 1 && is_cartier(surface, c)?.cartier {
        return Err(Error::internal("the curve itself is already Cartier"));
    }
    Ok(m)
}

/// `[C1, C2]_O - [Q_{C1}, C2]_O`.
pub fn intersection_via_qc(surface: &SurfaceModel, c1: &Curve, c2: &Curve) -> Result<Int> {
    let qc = ideal_cluster_qc(surface, c1)?;
    Ok(noether_pairing(c1, c2)? - pair_with_curve(&qc, c2)?)
}

/// Intersection of the strict transforms on the blown-up surface, which is
/// rational when neither is Cartier.
pub fn intersection_on_x(surface: &SurfaceModel, c1: &Curve, c2: &Curve) -> Result<Rational> {
    let merged = Arc::new(c1.tree().merge(c2.tree())?);
    let a = c1.rebase(&merged)?;
    let b = c2.rebase(&merged)?;
    let tree = Arc::new(resolution_tree(surface, &[&a, &b], false)?);
    let d = mumford_on(surface, &a, tree.clone())?;
    let bmap = merged.embedding_of(&tree)?;
    let be = b.multiplicities();
    let e: Vec<Int> = bmap.iter().map(|&q| be[q].clone()).collect();
    let meets = strict_meets(&tree, &e);
    let total: Rational = d
        .points
        .iter()
        .zip(&d.coefficients)
        .map(|(&p, x)| x * rat(&meets[p]))
        .sum();
    if all_integral(&decompose_l(surface, &l_vector_of_curve(surface, &a)?, surface.kplus()).unwrap_or_default())
    {
        let direct = intersection_via_qc(surface, &a, &b)?;
        if rat(&direct) != total {
            return Err(Error::internal(format!(
                "intersection on the surface is {total} by pull-back but {direct} through the ideal cluster"
            )));
        }
    }
    Ok(total)
}

/// `[C, D]_O - [Q_C, D]_O` from its two terms.
pub fn intersection_from_pairings(total: &Int, cluster_pairing: &Int) -> Int {
    total - cluster_pairing
}

/// `C + sum a_p C^p`, where `C^p` adds one generic branch through `K(q)` for
/// every `q` whose component meets `E_p`.
pub fn exceptional_reduction(surface: &SurfaceModel, c: &Curve, coefficients: &[(usize, u64)]) -> Result<Curve> {
    let kmap = k_in_curve(surface, c)?;
    let mut tree: ClusterTree = (**c.tree()).clone();
    let mut extra = Vec::new();
    for &(p, a) in coefficients {
        if p >= surface.tree().len() {
            return Err(Error::UnknownPoint(format!("#{p}")));
        }
        if !surface.is_dicritical(p) {
            return Err(Error::precondition(format!(
                "`{}` is not dicritical",
                surface.tree().id(p)
            )));
        }
        if a == 0 {
            continue;
        }
        for q in proximity::neighbours(surface.tree(), p) {
            let name = format!("gamma_{}", surface.tree().id(q));
            let (t, b) = generic_branch(&tree, kmap[q], &name)?;
            tree = t;
            extra.push((b, a));
        }
    }
    if extra.is_empty() {
        return Ok(c.clone());
    }
    let tree = Arc::new(tree);
    let mut out: Vec<_> = c.rebase(&tree)?.branches().to_vec();
    out.extend(extra);
    Curve::new(tree, out)
}

/// `K(p)` as a curve: one generic branch through the chain to `p`.
pub fn simple_branch(surface: &SurfaceModel, p: usize) -> Result<Curve> {
    let k = simple_cluster(surface.tree(), p)?;
    let (t, b) = generic_branch(surface.tree(), p, &format!("gamma_{}", surface.tree().id(p)))?;
    let curve = Curve::new(Arc::new(t), vec![(b, 1)])?;
    debug_assert_eq!(k.len(), surface.tree().chain_to(p).len());
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::build_surface;
    use crate::tree::PointRecord;

    fn ints(xs: &[i64]) -> Vec<Int> {
        xs.iter().map(|&x| Int::from(x)).collect()
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(Int::from(n), Int::from(d))
    }

    fn three_point_branch() -> (SurfaceModel, Curve) {
        let full = Arc::new(
            ClusterTree::new(&[
                PointRecord::root("O"),
                PointRecord::free("p1", "O"),
                PointRecord::satellite("p2", "p1", "O"),
                PointRecord::free("q'", "O"),
            ])
            .unwrap(),
        );
        let k = Arc::new(ClusterTree::new(&full.records()[..3]).unwrap());
        let s = build_surface(&WeightedCluster::from_i64(k, &[3, 2, 1]).unwrap()).unwrap();
        let d = Curve::from_ids(full, &[("delta", &["O", "q'"][..], 1)]).unwrap();
        (s, d)
    }

    #[test]
    fn example_bases() {
        let l = vec![ints(&[1, 1, 2, 2]), ints(&[1, 4, 4, 4]), ints(&[2, 4, 12, 10]), ints(&[2, 4, 10, 12])];
        let a = decompose(&l, &ints(&[9, 21, 42, 44])).unwrap();
        assert_eq!(a, vec![r(1, 1), r(2, 1), r(1, 1), r(2, 1)]);
        let local = decompose(&[ints(&[2, 2, 2]), ints(&[2, 4, 2])], &ints(&[4, 6, 4])).unwrap();
        assert_eq!(local, vec![r(1, 1), r(1, 1)]);
        assert!(decompose(&[ints(&[2, 2, 2]), ints(&[2, 4, 2])], &ints(&[4, 6, 5])).is_none());
        let three_point_branch = decompose(&[ints(&[2, 3]), ints(&[3, 6])], &ints(&[1, 2])).unwrap();
        assert_eq!(three_point_branch, vec![r(0, 1), r(1, 3)]);
    }

    #[test]
    fn three_point_branch_is_not_cartier() {
        let (s, d) = three_point_branch();
        let v = is_cartier(&s, &d).unwrap();
        assert!(!v.cartier);
        assert_eq!(v.coefficients, vec![r(0, 1), r(1, 3)]);
        assert_eq!(v.qc.values(), ints(&[1, 1, 2]).as_slice());
        assert_eq!(v.qc.multiplicities(), ints(&[1, 0, 0]).as_slice());
        assert_eq!(v.qc.dicritical_points(), vec![0]);
        assert_eq!(v.mumford.coefficient("O"), Some(&r(1, 3)));
        assert_eq!(v.mumford.coefficient("q'"), Some(&r(4, 3)));
        let q = &s.singularities()[0];
        let local = local_principality(&s, &d, q).unwrap();
        assert!(!local.principal);
        assert_eq!(local.branches, vec![0]);
        assert_eq!(local.coefficients, Some(vec![r(1, 3)]));
    }

    #[test]
    fn intersections_with_a_second_smooth_branch() {
        let (s, d) = three_point_branch();
        let (t, _) = d.tree().with_point(PointRecord::free("q''", "O")).unwrap();
        let t = Arc::new(t);
        let d2 = Curve::from_ids(t.clone(), &[("delta2", &["O", "q''"][..], 1)]).unwrap();
        let d1 = d.rebase(&t).unwrap();
        assert_eq!(noether_pairing(&d1, &d2).unwrap(), Int::from(1));
        assert_eq!(intersection_via_qc(&s, &d1, &d2).unwrap(), Int::from(0));
        assert_eq!(intersection_on_x(&s, &d1, &d2).unwrap(), r(1, 3));
        assert_eq!(intersection_on_x(&s, &d2, &d1).unwrap(), r(1, 3));
        assert_eq!(intersection_from_pairings(&Int::from(88), &Int::from(82)), Int::from(6));
    }

    #[test]
    fn hypersharp_curve_is_cartier() {
        let (s, _) = three_point_branch();
        let q = &s.singularities()[0];
        let kq = WeightedCluster::new(s.tree().clone(), q.nu_q.clone()).unwrap();
        let g = crate::curve::generic_curve(&kq).unwrap();
        let v = is_cartier(&s, &g).unwrap();
        assert!(v.cartier);
        assert_eq!(v.coefficients, vec![r(1, 1), r(1, 1)]);
        assert!(v.mumford.is_integral());
    }

    #[test]
    fn cartier_multiples() {
        assert_eq!(minimal_cartier_multiple_from(&Int::from(3), &Int::from(2)).unwrap(), Int::from(2));
        assert_eq!(minimal_cartier_multiple_from(&Int::from(4), &Int::from(6)).unwrap(), Int::from(3));
        assert_eq!(minimal_cartier_multiple_from(&Int::from(6), &Int::from(6)).unwrap(), Int::from(1));
        let t = Arc::new(
            ClusterTree::new(&[
                PointRecord::root("O"),
                PointRecord::free("p1", "O"),
                PointRecord::free("q", "O"),
                PointRecord::free("t", "p1"),
            ])
            .unwrap(),
        );
        let k = Arc::new(ClusterTree::new(&t.records()[..2]).unwrap());
        let s = build_surface(&WeightedCluster::from_i64(k, &[1, 1]).unwrap()).unwrap();
        let c = Curve::from_ids(t, &[("a", &["O", "q"][..], 1), ("b", &["O", "p1", "t"][..], 1)]).unwrap();
        assert_eq!(c.values()[1], Int::from(3));
        assert_eq!(minimal_cartier_multiple(&s, &c).unwrap(), Int::from(2));
    }

    #[test]
    fn reduction_adds_neighbour_branches() {
        let (s, d) = three_point_branch();
        let same = exceptional_reduction(&s, &d, &[(2, 0)]).unwrap();
        assert_eq!(same, d);
        let red = exceptional_reduction(&s, &d, &[(2, 1)]).unwrap();
        let names: Vec<&str> = red.branches().iter().map(|(b, _)| b.name.as_str()).collect();
        assert_eq!(names, vec!["delta", "gamma_O", "gamma_p1"]);
        assert!(exceptional_reduction(&s, &d, &[(0, 1)]).is_err());
    }
}
