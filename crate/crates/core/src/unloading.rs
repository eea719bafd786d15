//! Tame unloading: raising values at points of negative excess until the
//! cluster is consistent, optionally keeping the values on a fixed set.

use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cluster::WeightedCluster;
use crate::error::{Error, Result};
use crate::linalg::Int;
use crate::tree::ClusterTree;

pub const STEP_CAP: usize = 1_000_000;

/// Points whose values partial unloading must not change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedSet {
    mask: Vec<bool>,
}

impl FixedSet {
    pub fn empty(tree: &ClusterTree) -> Self {
        FixedSet {
            mask: vec![false; tree.len()],
        }
    }

    pub fn from_indices(tree: &ClusterTree, points: &[usize]) -> Self {
        let mut mask = vec![false; tree.len()];
        for &p in points {
            mask[p] = true;
        }
        FixedSet { mask }
    }

    pub fn from_ids<S: AsRef<str>>(tree: &ClusterTree, ids: &[S]) -> Result<Self> {
        let idx = ids
            .iter()
            .map(|id| tree.require(id.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(FixedSet::from_indices(tree, &idx))
    }

    pub fn contains(&self, p: usize) -> bool {
        self.mask[p]
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&p| self.mask[p]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepSize {
    /// `ceil(-rho_p / omega(p))`: the least increment making `rho_p >= 0`.
    #[default]
    Ceiling,
    /// Always 1.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepOrder {
    #[default]
    EarliestFirst,
    /// Uniformly random eligible point, from a seeded generator.
    Seeded(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UnloadOptions {
    pub step: StepSize,
    pub order: StepOrder,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnloadingTrace {
    /// `(point, increment)` in execution order.
    pub steps: Vec<(usize, Int)>,
    pub initial: Vec<Int>,
    pub final_values: Vec<Int>,
}

impl UnloadingTrace {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Total increment per point.
    pub fn displacement(&self) -> Vec<Int> {
        self.final_values
            .iter()
            .zip(&self.initial)
            .map(|(a, b)| a - b)
            .collect()
    }
}

fn ceil_div(a: &Int, b: usize) -> Int {
    a.div_ceil(&Int::from(b))
}

/// Mutable working state: multiplicities, values and excesses kept in sync.
struct State<'a> {
    tree: &'a ClusterTree,
    nu: Vec<Int>,
    v: Vec<Int>,
    rho: Vec<Int>,
}

impl<'a> State<'a> {
    fn new(wc: &'a WeightedCluster) -> Self {
        State {
            tree: wc.tree(),
            nu: wc.multiplicities().to_vec(),
            v: wc.values().to_vec(),
            rho: wc.excesses().to_vec(),
        }
    }

    fn recompute_rho(&mut self, s: usize) {
        let mut x = self.nu[s].clone();
        for &q in self.tree.proximate_to(s) {
            x -= &self.nu[q];
        }
        self.rho[s] = x;
    }

    fn apply(&mut self, p: usize, n: &Int) {
        let tree = self.tree;
        self.v[p] += n;
        self.nu[p] += n;
        for &q in tree.proximate_to(p) {
            self.nu[q] -= n;
        }
        let mut touched: Vec<usize> = vec![p];
        touched.extend(tree.targets(p));
        for &q in tree.proximate_to(p) {
            touched.push(q);
            touched.extend(tree.targets(q));
        }
        touched.sort_unstable();
        touched.dedup();
        for s in touched {
            self.recompute_rho(s);
        }
    }
}

/// One tame unloading step at `p`, which must have negative excess.
pub fn tame_step(wc: &WeightedCluster, p: usize) -> Result<(WeightedCluster, Int)> {
    let rho = &wc.excesses()[p];
    if !rho.is_negative() {
        return Err(Error::precondition(format!(
            "excess at `{}` is {rho}, not negative",
            wc.tree().id(p)
        )));
    }
    let n = ceil_div(&-rho, wc.tree().omega(p));
    let mut st = State::new(wc);
    st.apply(p, &n);
    Ok((WeightedCluster::new(wc.tree().clone(), st.nu)?, n))
}

pub fn unload(wc: &WeightedCluster) -> Result<(WeightedCluster, UnloadingTrace)> {
    partial_unload_with(wc, &FixedSet::empty(wc.tree()), UnloadOptions::default())
}

pub fn partial_unload(
    wc: &WeightedCluster,
    fixed: &FixedSet,
) -> Result<(WeightedCluster, UnloadingTrace)> {
    partial_unload_with(wc, fixed, UnloadOptions::default())
}

pub fn partial_unload_with(
    wc: &WeightedCluster,
    fixed: &FixedSet,
    options: UnloadOptions,
) -> Result<(WeightedCluster, UnloadingTrace)> {
    if fixed.len() != wc.len() {
        return Err(Error::precondition("fixed set belongs to another cluster"));
    }
    let mut st = State::new(wc);
    let initial = st.v.clone();
    let mut steps = Vec::new();
    let mut rng = match options.order {
        StepOrder::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        StepOrder::EarliestFirst => None,
    };
    loop {
        let p = match &mut rng {
            None => (0..st.rho.len()).find(|&p| !fixed.contains(p) && st.rho[p].is_negative()),
            Some(rng) => {
                let eligible: Vec<usize> = (0..st.rho.len())
                    .filter(|&p| !fixed.contains(p) && st.rho[p].is_negative())
                    .collect();
                eligible.choose(rng).copied()
            }
        };
        let Some(p) = p else { break };
        if steps.len() >= STEP_CAP {
            return Err(Error::internal(format!(
                "unloading did not terminate within {STEP_CAP} steps"
            )));
        }
        let n = match options.step {
            StepSize::Ceiling => ceil_div(&-&st.rho[p], st.tree.omega(p)),
            StepSize::Unit => Int::one(),
        };
        st.apply(p, &n);
        steps.push((p, n));
    }
    let final_values = st.v.clone();
    let tree: Arc<ClusterTree> = wc.tree().clone();
    let out = WeightedCluster::from_values(tree, st.v)?;
    debug_assert_eq!(out.multiplicities(), st.nu.as_slice());
    Ok((
        out,
        UnloadingTrace {
            steps,
            initial,
            final_values,
        },
    ))
}

/// Per-point value increase performed by partial unloading.
pub fn unload_displacement(wc: &WeightedCluster, fixed: &FixedSet) -> Result<Vec<Int>> {
    let (_, trace) = partial_unload(wc, fixed)?;
    let d = trace.displacement();
    debug_assert!(d.iter().all(|x| !x.is_negative()));
    debug_assert!((0..d.len()).all(|p| !fixed.contains(p) || d[p].is_zero()));
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::PointRecord;

    fn ints(xs: &[i64]) -> Vec<Int> {
        xs.iter().map(|&x| Int::from(x)).collect()
    }

    fn free_pair() -> Arc<ClusterTree> {
        Arc::new(ClusterTree::new(&[PointRecord::root("O"), PointRecord::free("p1", "O")]).unwrap())
    }

    fn three_point() -> Arc<ClusterTree> {
        Arc::new(
            ClusterTree::new(&[
                PointRecord::root("O"),
                PointRecord::free("p1", "O"),
                PointRecord::satellite("p2", "p1", "O"),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn tame_step_on_unbalanced_pair() {
        let wc = WeightedCluster::from_i64(free_pair(), &[1, 2]).unwrap();
        let (out, n) = tame_step(&wc, 0).unwrap();
        assert_eq!(n, Int::from(1));
        assert_eq!(out.multiplicities(), ints(&[2, 1]).as_slice());
        assert_eq!(out.excesses(), ints(&[1, 1]).as_slice());
        assert!(tame_step(&out, 0).is_err());
    }

    #[test]
    fn tame_step_with_added_free_point() {
        let (t, _) = three_point().with_point(PointRecord::free("q", "O")).unwrap();
        let wc = WeightedCluster::from_i64(Arc::new(t), &[3, 2, 1, 1]).unwrap();
        assert_eq!(wc.excesses()[0], Int::from(-1));
        let (out, n) = tame_step(&wc, 0).unwrap();
        assert_eq!(n, Int::from(1));
        assert_eq!(out.multiplicities(), ints(&[4, 1, 0, 0]).as_slice());
    }

    #[test]
    fn ceiling_step_size() {
        assert_eq!(ceil_div(&Int::from(4), 3), Int::from(2));
        assert_eq!(ceil_div(&Int::from(1), 4), Int::from(1));
        assert_eq!(ceil_div(&Int::from(6), 3), Int::from(2));
    }

    #[test]
    fn unload_fixtures() {
        let unbalanced_pair = WeightedCluster::from_i64(free_pair(), &[1, 2]).unwrap();
        let (out, trace) = unload(&unbalanced_pair).unwrap();
        assert_eq!(out.multiplicities(), ints(&[2, 1]).as_slice());
        assert_eq!(trace.displacement(), ints(&[1, 0]));

        let consistent = WeightedCluster::from_i64(free_pair(), &[2, 1]).unwrap();
        let (out, trace) = unload(&consistent).unwrap();
        assert_eq!(out, consistent);
        assert!(trace.is_empty());

        let t_delta = WeightedCluster::from_values(three_point(), ints(&[0, 1, 2])).unwrap();
        let (out, trace) = unload(&t_delta).unwrap();
        assert_eq!(out.values(), ints(&[1, 1, 2]).as_slice());
        assert_eq!(out.multiplicities(), ints(&[1, 0, 0]).as_slice());
        assert_eq!(out.excesses(), ints(&[1, 0, 0]).as_slice());
        assert_eq!(trace.steps, vec![(0, Int::from(1))]);
    }

    #[test]
    fn partial_unload_fixtures() {
        let unbalanced_pair = WeightedCluster::from_i64(free_pair(), &[1, 2]).unwrap();
        let fixed = FixedSet::from_ids(unbalanced_pair.tree(), &["p1"]).unwrap();
        let (out, _) = partial_unload(&unbalanced_pair, &fixed).unwrap();
        assert_eq!(out.multiplicities(), ints(&[2, 1]).as_slice());
        assert!(FixedSet::from_ids(unbalanced_pair.tree(), &["nope"]).is_err());
        assert_eq!(unload_displacement(&unbalanced_pair, &fixed).unwrap(), ints(&[1, 0]));
    }

    #[test]
    fn unit_steps_reach_the_same_cluster() {
        let wc = WeightedCluster::from_i64(three_point(), &[0, 3, 5]).unwrap();
        let (a, _) = unload(&wc).unwrap();
        let opts = UnloadOptions {
            step: StepSize::Unit,
            order: StepOrder::Seeded(7),
        };
        let (b, _) = partial_unload_with(&wc, &FixedSet::empty(wc.tree()), opts).unwrap();
        assert_eq!(a, b);
        assert!(a.is_consistent());
    }
}
