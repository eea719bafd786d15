//! The surface obtained by blowing up a complete ideal: its dicritical
//! points, exceptional components and sandwiched singularities.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::cluster::WeightedCluster;
use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::linalg::{Int, IntMatrix};
use crate::proximity;
use crate::tree::{ClusterTree, PointRecord};
use crate::unloading::unload;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Singularity {
    pub label: String,
    /// Connected zero-excess component, increasing.
    pub t_q: Vec<usize>,
    pub o_q: usize,
    /// Multiplicities of `K_Q` on the points of `K`.
    pub nu_q: Vec<Int>,
    pub b_q: Vec<usize>,
    pub multiplicity: usize,
}

#[derive(Debug, Clone)]
pub struct SurfaceModel {
    k: WeightedCluster,
    kplus: Vec<usize>,
    simple_values: Vec<Vec<Int>>,
    singularities: Vec<Singularity>,
    a: IntMatrix,
}

impl SurfaceModel {
    pub fn cluster(&self) -> &WeightedCluster {
        &self.k
    }

    pub fn tree(&self) -> &Arc<ClusterTree> {
        self.k.tree()
    }

    /// Dicritical points, in tree order.
    pub fn kplus(&self) -> &[usize] {
        &self.kplus
    }

    pub fn is_dicritical(&self, p: usize) -> bool {
        self.kplus.binary_search(&p).is_ok()
    }

    /// `v(I_p)` on all points of `K`.
    pub fn simple_values(&self, p: usize) -> &[Int] {
        &self.simple_values[p]
    }

    /// `L_u = (v_q(I_u))` for `q` in `K_+`.
    pub fn l_vector(&self, u: usize) -> Vec<Int> {
        self.kplus
            .iter()
            .map(|&q| self.simple_values[u][q].clone())
            .collect()
    }

    pub fn l_vectors(&self) -> Vec<Vec<Int>> {
        self.kplus.iter().map(|&u| self.l_vector(u)).collect()
    }

    pub fn singularities(&self) -> &[Singularity] {
        &self.singularities
    }

    /// Looks a singularity up by label or by the id of its minimal point.
    pub fn singularity(&self, name: &str) -> Result<&Singularity> {
        self.singularities
            .iter()
            .find(|s| s.label == name || self.tree().id(s.o_q) == name)
            .ok_or_else(|| Error::precondition(format!("no singularity `{name}`")))
    }

    pub fn intersection_matrix(&self) -> &IntMatrix {
        &self.a
    }

    /// Dicritical points whose components pass through the singularity.
    pub fn kplus_at(&self, sing: &Singularity) -> Vec<usize> {
        let edges = proximity::dual_graph(self.tree());
        self.kplus
            .iter()
            .copied()
            .filter(|&u| {
                edges.iter().any(|&(a, b)| {
                    (a == u && sing.t_q.contains(&b)) || (b == u && sing.t_q.contains(&a))
                })
            })
            .collect()
    }
}

/// Multiplicities of the simple cluster `K(p)` on the whole tree:
/// excess 1 at `p` and 0 elsewhere.
fn simple_mults(tree: &ClusterTree, p: usize) -> Vec<Int> {
    let mut rho = vec![Int::zero(); tree.len()];
    rho[p] = Int::one();
    proximity::mults_from_excesses(tree, &rho)
}

/// `K(p)` on the chain of points up to `p`.
pub fn simple_cluster(tree: &Arc<ClusterTree>, p: usize) -> Result<WeightedCluster> {
    if p >= tree.len() {
        return Err(Error::UnknownPoint(format!("#{p}")));
    }
    WeightedCluster::new(tree.clone(), simple_mults(tree, p))?.support()
}

pub fn build_surface(k: &WeightedCluster) -> Result<SurfaceModel> {
    let tree = k.tree().clone();
    if let Some(p) = (0..k.len()).find(|&p| !k.multiplicities()[p].is_positive()) {
        return Err(Error::precondition(format!(
            "point `{}` has multiplicity {}; the cluster must be strictly consistent",
            tree.id(p),
            k.multiplicities()[p]
        )));
    }
    if let Some(p) = (0..k.len()).find(|&p| k.excesses()[p].is_negative()) {
        return Err(Error::precondition(format!(
            "excess at `{}` is {}; the cluster must be strictly consistent",
            tree.id(p),
            k.excesses()[p]
        )));
    }
    let a = proximity::intersection_matrix(&tree);
    let mut simple_values = Vec::with_capacity(tree.len());
    for p in 0..tree.len() {
        let v = proximity::values_from_mults(&tree, &simple_mults(&tree, p));
        let av = a.mul_vec(&v);
        let ok = av
            .iter()
            .enumerate()
            .all(|(q, x)| if q == p { *x == -Int::one() } else { x.is_zero() });
        if !ok || v.iter().any(|x| !x.is_positive()) {
            return Err(Error::internal(format!(
                "values of the simple ideal at `{}` do not solve A v = -1_p",
                tree.id(p)
            )));
        }
        simple_values.push(v);
    }
    let kplus = k.dicritical_points();
    let mut surface = SurfaceModel {
        k: k.clone(),
        kplus,
        simple_values,
        singularities: Vec::new(),
        a,
    };
    let zero: Vec<bool> = k.excesses().iter().map(|r| r.is_zero()).collect();
    let comps = proximity::components(&tree, &zero);
    let count = comps.len();
    for (i, t_q) in comps.into_iter().enumerate() {
        let label = if count == 1 {
            "Q".to_string()
        } else {
            format!("Q{}", i + 1)
        };
        surface.singularities.push(singularity(&surface, label, t_q)?);
    }
    Ok(surface)
}

/// Exponents of the factorization into simple ideals: `rho_p` at each
/// dicritical point.
pub fn zariski_factorization(k: &WeightedCluster) -> Result<Vec<(usize, Int)>> {
    let s = build_surface(k)?;
    Ok(s.kplus
        .iter()
        .map(|&p| (p, k.excesses()[p].clone()))
        .collect())
}

/// `K_Q` restricted to `K`, computed by adding a free point of multiplicity
/// one after `attach` and unloading.
pub fn kq_from(surface: &SurfaceModel, attach: usize) -> Result<Vec<Int>> {
    let k = surface.cluster();
    let tree = k.tree();
    let q = tree.fresh_id(tree.id(attach));
    let (big, qi) = tree.with_point(PointRecord::free(q, tree.id(attach)))?;
    let big = Arc::new(big);
    let mut nu = k.multiplicities().to_vec();
    nu.push(Int::one());
    let (out, _) = unload(&WeightedCluster::new(big, nu)?)?;
    if out.codimension() - k.codimension() != Int::one() {
        return Err(Error::internal(format!(
            "adding a point after `{}` changed the codimension by {}",
            tree.id(attach),
            out.codimension() - k.codimension()
        )));
    }
    debug_assert_eq!(qi, k.len());
    Ok(out.multiplicities()[..k.len()].to_vec())
}

fn singularity(surface: &SurfaceModel, label: String, t_q: Vec<usize>) -> Result<Singularity> {
    let k = surface.cluster();
    let tree = k.tree();
    let nu = k.multiplicities();
    let minimal: Vec<usize> = t_q
        .iter()
        .copied()
        .filter(|&p| !t_q.iter().any(|&r| r != p && tree.precedes_or_eq(r, p)))
        .collect();
    let [o_q] = minimal[..] else {
        return Err(Error::internal(format!(
            "{label} has {} minimal points",
            minimal.len()
        )));
    };
    let mut nu_q: Option<Vec<Int>> = None;
    for &p in &t_q {
        let cand = kq_from(surface, p)?;
        match &nu_q {
            None => nu_q = Some(cand),
            Some(prev) if *prev != cand => {
                return Err(Error::internal(format!(
                    "{label}: attaching after `{}` and `{}` gives different clusters",
                    tree.id(t_q[0]),
                    tree.id(p)
                )))
            }
            _ => {}
        }
    }
    let nu_q = nu_q.expect("components are non-empty");
    for p in 0..k.len() {
        let ok = if p == o_q {
            nu_q[p] == &nu[p] + 1u32
        } else {
            nu_q[p] <= nu[p] && nu_q[p] >= &nu[p] - 1u32
        };
        if !ok {
            return Err(Error::internal(format!(
                "{label}: multiplicity of K_Q at `{}` is {} against {}",
                tree.id(p),
                nu_q[p],
                nu[p]
            )));
        }
    }
    let b_q: Vec<usize> = (0..k.len()).filter(|&p| nu_q[p] == &nu[p] - 1u32).collect();
    let sum: Int = b_q.iter().map(|&p| nu[p].clone()).sum();
    if sum != nu[o_q] {
        return Err(Error::internal(format!(
            "{label}: multiplicity at `{}` is {} but B_Q sums to {sum}",
            tree.id(o_q),
            nu[o_q]
        )));
    }
    let multiplicity = 1 + b_q.len();
    Ok(Singularity {
        label,
        t_q,
        o_q,
        nu_q,
        b_q,
        multiplicity,
    })
}

/// `(v_u(C))` for `u` in `K_+`.
pub fn l_vector_of_curve(surface: &SurfaceModel, c: &Curve) -> Result<Vec<Int>> {
    let map = c.tree().embedding_of(surface.tree())?;
    let v = c.values();
    Ok(surface.kplus.iter().map(|&u| v[map[u]].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(xs: &[i64]) -> Vec<Int> {
        xs.iter().map(|&x| Int::from(x)).collect()
    }

    fn free_pair() -> WeightedCluster {
        let t = Arc::new(ClusterTree::new(&[PointRecord::root("O"), PointRecord::free("p1", "O")]).unwrap());
        WeightedCluster::from_i64(t, &[2, 1]).unwrap()
    }

    fn three_point() -> WeightedCluster {
        let t = Arc::new(
            ClusterTree::new(&[
                PointRecord::root("O"),
                PointRecord::free("p1", "O"),
                PointRecord::satellite("p2", "p1", "O"),
            ])
            .unwrap(),
        );
        WeightedCluster::from_i64(t, &[3, 2, 1]).unwrap()
    }

    #[test]
    fn smooth_surfaces() {
        let s = build_surface(&free_pair()).unwrap();
        assert_eq!(s.kplus(), &[0, 1]);
        assert!(s.singularities().is_empty());
        let single = WeightedCluster::from_i64(Arc::new(ClusterTree::single("O")), &[1]).unwrap();
        let s = build_surface(&single).unwrap();
        assert_eq!(s.kplus(), &[0]);
        assert!(s.singularities().is_empty());
    }

    #[test]
    fn three_point_singularity() {
        let s = build_surface(&three_point()).unwrap();
        assert_eq!(s.kplus(), &[1, 2]);
        let [q] = s.singularities() else { panic!() };
        assert_eq!(q.label, "Q");
        assert_eq!(q.t_q, vec![0]);
        assert_eq!(q.o_q, 0);
        assert_eq!(q.nu_q, ints(&[4, 1, 0]));
        assert_eq!(q.b_q, vec![1, 2]);
        assert_eq!(q.multiplicity, 3);
        assert_eq!(s.kplus_at(q), vec![2]);
        assert_eq!(s.singularity("O").unwrap().label, "Q");
    }

    #[test]
    fn simple_ideals() {
        let s = build_surface(&three_point()).unwrap();
        assert_eq!(s.l_vector(1), ints(&[2, 3]));
        assert_eq!(s.l_vector(2), ints(&[3, 6]));
        let k1 = simple_cluster(free_pair().tree(), 1).unwrap();
        assert_eq!(k1.multiplicities(), ints(&[1, 1]).as_slice());
        assert_eq!(k1.self_intersection(), Int::from(2));
        let k2 = simple_cluster(three_point().tree(), 2).unwrap();
        assert_eq!(k2.multiplicities(), ints(&[2, 1, 1]).as_slice());
        assert_eq!(k2.self_intersection(), Int::from(6));
        let k0 = simple_cluster(three_point().tree(), 0).unwrap();
        assert_eq!(k0.multiplicities(), ints(&[1]).as_slice());
    }

    #[test]
    fn factorization_exponents() {
        assert_eq!(
            zariski_factorization(&free_pair()).unwrap(),
            vec![(0, Int::from(1)), (1, Int::from(1))]
        );
        assert_eq!(
            zariski_factorization(&three_point()).unwrap(),
            vec![(1, Int::from(1)), (2, Int::from(1))]
        );
        let two = WeightedCluster::from_i64(Arc::new(ClusterTree::single("O")), &[2]).unwrap();
        assert_eq!(zariski_factorization(&two).unwrap(), vec![(0, Int::from(2))]);
        let bad = WeightedCluster::from_i64(free_pair().tree().clone(), &[1, 2]).unwrap();
        assert!(matches!(build_surface(&bad), Err(Error::Precondition(_))));
    }
}
