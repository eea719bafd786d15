//! Random generators and brute-force oracles for differential testing.
//!
//! The minimality oracle recomputes multiplicities and excesses straight
//! from parent and satellite links and never touches the unloading engine.

use std::sync::Arc;

use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cluster::WeightedCluster;
use crate::curve::{noether_pairing, Branch, Curve};
use crate::error::{Error, Result};
use crate::flags::{build_flag, Flag};
use crate::invariants::{delta_of_flag, semigroup_at_q};
use crate::linalg::{rat, Int, IntMatrix, Rational};
use crate::principality::{intersection_on_x, is_cartier};
use crate::proximity;
use crate::scene::{serialize_scene, Scene};
use crate::surface::{build_surface, kq_from, l_vector_of_curve, SurfaceModel};
use crate::tree::{validate_tree, ClusterTree, PointRecord};
use crate::unloading::{partial_unload_with, FixedSet, StepOrder, StepSize, UnloadOptions};

pub type CaseRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomClusterSpec {
    pub max_points: usize,
    /// Bound on generated multiplicities, and on excesses for surfaces.
    pub max_multiplicity: i64,
    pub satellite_probability: f64,
    pub seed: u64,
}

impl Default for RandomClusterSpec {
    fn default() -> Self {
        RandomClusterSpec {
            max_points: 8,
            max_multiplicity: 3,
            satellite_probability: 0.35,
            seed: 0,
        }
    }
}

impl RandomClusterSpec {
    pub fn with_seed(self, seed: u64) -> Self {
        RandomClusterSpec { seed, ..self }
    }

    pub fn with_max_points(self, max_points: usize) -> Self {
        RandomClusterSpec { max_points, ..self }
    }

    pub fn rng(&self) -> CaseRng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// A random child of `tree` after `parent`: a satellite with the given
/// probability when a free slot exists, free otherwise.
fn random_child(tree: &ClusterTree, parent: usize, base: &str, p_sat: f64, rng: &mut CaseRng) -> PointRecord {
    let id = tree.fresh_id(base);
    let pid = tree.id(parent).to_string();
    if rng.gen_bool(p_sat) {
        let taken: Vec<usize> = tree
            .children(parent)
            .iter()
            .filter_map(|&c| tree.satellite_of(c))
            .collect();
        let slots: Vec<usize> = tree
            .targets(parent)
            .filter(|t| !taken.contains(t))
            .collect();
        if let Some(&s) = slots.choose(rng) {
            return PointRecord::satellite(id, pid, tree.id(s));
        }
    }
    PointRecord::free(id, pid)
}

/// Trees with `1..=max_points` points labelled `O, p1, p2, ...`.
pub fn random_tree(spec: &RandomClusterSpec, rng: &mut CaseRng) -> ClusterTree {
    let n = rng.gen_range(1..=spec.max_points.max(1));
    let mut records = vec![PointRecord::root("O")];
    // (parent, satellite target) slots in use
    let mut slots: Vec<(usize, usize)> = Vec::new();
    let mut targets: Vec<Vec<usize>> = vec![Vec::new()];
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        let id = format!("p{i}");
        let free: Vec<usize> = targets[parent]
            .iter()
            .copied()
            .filter(|&t| !slots.contains(&(parent, t)))
            .collect();
        let sat = if !free.is_empty() && rng.gen_bool(spec.satellite_probability) {
            free.choose(rng).copied()
        } else {
            None
        };
        let pid = records[parent].id.clone();
        match sat {
            Some(s) => {
                slots.push((parent, s));
                records.push(PointRecord::satellite(id, pid, records[s].id.clone()));
                targets.push(vec![parent, s]);
            }
            None => {
                records.push(PointRecord::free(id, pid));
                targets.push(vec![parent]);
            }
        }
    }
    debug_assert!(validate_tree(&records).is_empty());
    ClusterTree::new(&records).expect("generated trees are valid")
}

/// Multiplicities in `-1..=max_multiplicity`, consistent or not.
pub fn random_weighting(spec: &RandomClusterSpec, tree: &Arc<ClusterTree>, rng: &mut CaseRng) -> WeightedCluster {
    let nu: Vec<Int> = (0..tree.len())
        .map(|_| Int::from(rng.gen_range(-1..=spec.max_multiplicity)))
        .collect();
    WeightedCluster::new(tree.clone(), nu).expect("lengths match")
}

/// A strictly consistent cluster: random excesses, positive at the leaves
/// and zero at about half of the other points.
pub fn random_ideal_cluster(spec: &RandomClusterSpec, rng: &mut CaseRng) -> WeightedCluster {
    let tree = Arc::new(random_tree(spec, rng));
    let top = spec.max_multiplicity.max(1);
    let rho: Vec<Int> = (0..tree.len())
        .map(|p| {
            let x = if tree.children(p).is_empty() {
                rng.gen_range(1..=top)
            } else if rng.gen_bool(0.5) {
                0
            } else {
                rng.gen_range(0..=top)
            };
            Int::from(x)
        })
        .collect();
    WeightedCluster::from_excesses(tree, &rho).expect("lengths match")
}

pub fn random_surface(spec: &RandomClusterSpec, rng: &mut CaseRng) -> SurfaceModel {
    build_surface(&random_ideal_cluster(spec, rng)).expect("generated clusters are strictly consistent")
}

/// Up to three branches, each through a random point of `K`, continued by up
/// to two random points and closed by a fresh free tail point.
pub fn random_curve(spec: &RandomClusterSpec, surface: &SurfaceModel, rng: &mut CaseRng) -> Curve {
    let count = rng.gen_range(1..=3);
    random_curve_on(spec, surface, surface.tree(), count, "c", rng)
}

/// As `random_curve`, with a given number of branches, on a tree extending
/// `K`; new points are labelled `{prefix}~k`.
pub fn random_curve_on(
    spec: &RandomClusterSpec,
    surface: &SurfaceModel,
    base: &Arc<ClusterTree>,
    branches: usize,
    prefix: &str,
    rng: &mut CaseRng,
) -> Curve {
    let k = surface.tree();
    let mut tree: ClusterTree = (**base).clone();
    let mut out = Vec::new();
    for b in 0..branches {
        let start = tree.require(k.id(rng.gen_range(0..k.len()))).expect("K is in the base tree");
        let mut chain = tree.chain_to(start);
        for _ in 0..rng.gen_range(0..=2) {
            let last = *chain.last().expect("non-empty");
            let rec = random_child(&tree, last, prefix, spec.satellite_probability, rng);
            let (t, i) = tree.with_point(rec).expect("random children are valid");
            tree = t;
            chain.push(i);
        }
        let last = *chain.last().expect("non-empty");
        let rec = PointRecord::free(tree.fresh_id(prefix), tree.id(last));
        let (t, i) = tree.with_point(rec).expect("free children are valid");
        tree = t;
        chain.push(i);
        out.push((
            Branch {
                name: format!("{prefix}{}", b + 1),
                chain,
            },
            1,
        ));
    }
    Curve::new(Arc::new(tree), out).expect("generated chains are valid")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleAnswer {
    /// The componentwise minimum of the feasible values, itself feasible.
    Minimum(Vec<i64>),
    /// No feasible point in the box.
    Empty,
    /// The componentwise minimum is not feasible.
    NotUnique,
}

/// `nu_p = v_p - sum_{p -> q} v_q`, with `p -> q` read off the links.
fn naive_mults(tree: &ClusterTree, v: &[i64]) -> Vec<i64> {
    (0..tree.len())
        .map(|p| {
            let mut x = v[p];
            if let Some(q) = tree.parent(p) {
                x -= v[q];
            }
            if let Some(q) = tree.satellite_of(p) {
                x -= v[q];
            }
            x
        })
        .collect()
}

/// `rho_p = nu_p - sum_{q -> p} nu_q`.
fn naive_excesses(tree: &ClusterTree, nu: &[i64]) -> Vec<i64> {
    let mut rho = nu.to_vec();
    for (q, &m) in nu.iter().enumerate() {
        if let Some(p) = tree.parent(q) {
            rho[p] -= m;
        }
        if let Some(p) = tree.satellite_of(q) {
            rho[p] -= m;
        }
    }
    rho
}

fn feasible(tree: &ClusterTree, v: &[i64], fixed: &[bool]) -> bool {
    let rho = naive_excesses(tree, &naive_mults(tree, v));
    rho.iter().zip(fixed).all(|(r, &f)| f || *r >= 0)
}

/// Exhaustive search over `v' in [v, v + bound]`, equal to `v` on `fixed`,
/// with nonnegative excess off `fixed`.
pub fn minimality_oracle(tree: &ClusterTree, v: &[i64], fixed: &[bool], bound: i64) -> OracleAnswer {
    let free: Vec<usize> = (0..tree.len()).filter(|&p| !fixed[p]).collect();
    let mut cur = v.to_vec();
    let mut min: Option<Vec<i64>> = None;
    loop {
        if feasible(tree, &cur, fixed) {
            min = Some(match min {
                None => cur.clone(),
                Some(m) => m.iter().zip(&cur).map(|(a, b)| *a.min(b)).collect(),
            });
        }
        // odometer over the free coordinates
        let mut i = 0;
        loop {
            if i == free.len() {
                return match min {
                    None => OracleAnswer::Empty,
                    Some(m) if feasible(tree, &m, fixed) => OracleAnswer::Minimum(m),
                    Some(_) => OracleAnswer::NotUnique,
                };
            }
            let p = free[i];
            if cur[p] < v[p] + bound {
                cur[p] += 1;
                break;
            }
            cur[p] = v[p];
            i += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CaseOutcome {
    Pass,
    Inconclusive(String),
    Fail {
        message: String,
        /// Replay scene; only the ideal and curves carry the case data.
        scene: Option<String>,
    },
}

impl CaseOutcome {
    pub fn is_fail(&self) -> bool {
        matches!(self, CaseOutcome::Fail { .. })
    }

    fn fail(message: impl Into<String>, scene: Option<&Scene>) -> Self {
        CaseOutcome::Fail {
            message: message.into(),
            scene: scene.map(serialize_scene),
        }
    }
}

fn scene_of(tree: &Arc<ClusterTree>, ideal: Option<&WeightedCluster>, curves: &[(&str, &Curve)], note: String) -> Scene {
    let ideal = ideal.map(|k| {
        let map = tree.embedding_of(k.tree()).expect("ideal lives on the scene tree");
        let mut nu = vec![Int::zero(); tree.len()];
        for (p, &q) in map.iter().enumerate() {
            nu[q] = k.multiplicities()[p].clone();
        }
        WeightedCluster::new(tree.clone(), nu).expect("lengths match")
    });
    Scene {
        tree: tree.clone(),
        ideal,
        curves: curves
            .iter()
            .map(|(n, c)| (n.to_string(), c.rebase(tree).expect("curve lives on the scene tree")))
            .collect(),
        metadata: vec![note],
    }
}

fn to_i64(xs: &[Int]) -> Option<Vec<i64>> {
    xs.iter().map(|x| x.to_i64()).collect()
}

/// Fault injection for the unloading check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mutation {
    #[default]
    None,
    /// Undo the engine's last step before comparing.
    SkipLastStep,
}

/// Partial unloading of a random weighting relative to a random fixed set
/// against the exhaustive oracle.
pub fn case_unloading_oracle(spec: &RandomClusterSpec, bound: i64, mutation: Mutation) -> CaseOutcome {
    let mut rng = spec.rng();
    let tree = Arc::new(random_tree(spec, &mut rng));
    let wc = random_weighting(spec, &tree, &mut rng);
    let mask: Vec<bool> = (0..tree.len()).map(|_| rng.gen_bool(0.2)).collect();
    let fixed_ids: Vec<&str> = (0..tree.len()).filter(|&p| mask[p]).map(|p| tree.id(p)).collect();
    let note = format!("unloading case, seed {}, fixed: {}", spec.seed, fixed_ids.join(" "));
    let scene = scene_of(&tree, Some(&wc), &[], note);
    let fixed = FixedSet::from_indices(&tree, &(0..tree.len()).filter(|&p| mask[p]).collect::<Vec<_>>());
    let (out, trace) = match partial_unload_with(&wc, &fixed, UnloadOptions::default()) {
        Ok(x) => x,
        Err(e) => return CaseOutcome::fail(format!("engine error: {e}"), Some(&scene)),
    };
    let mut engine = out.values().to_vec();
    if mutation == Mutation::SkipLastStep {
        if let Some((p, n)) = trace.steps.last() {
            engine[*p] -= n;
        }
    }
    let (Some(v), Some(engine)) = (to_i64(wc.values()), to_i64(&engine)) else {
        return CaseOutcome::Inconclusive("values out of range".into());
    };
    let in_box = engine
        .iter()
        .zip(&v)
        .all(|(e, x)| *e >= *x && *e <= *x + bound);
    match minimality_oracle(&tree, &v, &mask, bound) {
        OracleAnswer::Minimum(m) if m == engine => CaseOutcome::Pass,
        OracleAnswer::Minimum(m) => CaseOutcome::fail(
            format!("engine values {engine:?}, oracle minimum {m:?}"),
            Some(&scene),
        ),
        OracleAnswer::NotUnique => CaseOutcome::fail("feasible set has no minimum", Some(&scene)),
        OracleAnswer::Empty if in_box => CaseOutcome::fail(
            format!("engine values {engine:?} are not feasible"),
            Some(&scene),
        ),
        OracleAnswer::Empty => CaseOutcome::Inconclusive("minimum outside the search box".into()),
    }
}

/// Unit steps and `orders` seeded random orders against the default engine.
pub fn case_step_orders(spec: &RandomClusterSpec, orders: u64) -> CaseOutcome {
    let mut rng = spec.rng();
    let tree = Arc::new(random_tree(spec, &mut rng));
    let wc = random_weighting(spec, &tree, &mut rng);
    let scene = scene_of(&tree, Some(&wc), &[], format!("step order case, seed {}", spec.seed));
    let fixed = FixedSet::empty(&tree);
    let reference = match partial_unload_with(&wc, &fixed, UnloadOptions::default()) {
        Ok((out, _)) => out.values().to_vec(),
        Err(e) => return CaseOutcome::fail(format!("engine error: {e}"), Some(&scene)),
    };
    let mut options = vec![UnloadOptions {
        step: StepSize::Unit,
        order: StepOrder::EarliestFirst,
    }];
    for k in 0..orders {
        let seed = spec.seed.wrapping_mul(1_000_003).wrapping_add(k);
        options.push(UnloadOptions {
            step: StepSize::Ceiling,
            order: StepOrder::Seeded(seed),
        });
        options.push(UnloadOptions {
            step: StepSize::Unit,
            order: StepOrder::Seeded(seed),
        });
    }
    for opt in options {
        match partial_unload_with(&wc, &fixed, opt) {
            Ok((out, _)) if out.values() == reference.as_slice() => {}
            Ok((out, _)) => {
                return CaseOutcome::fail(
                    format!("{opt:?} gives values {:?}, expected {reference:?}", out.values()),
                    Some(&scene),
                )
            }
            Err(e) => return CaseOutcome::fail(format!("{opt:?}: {e}"), Some(&scene)),
        }
    }
    CaseOutcome::Pass
}

fn surface_and_curve(spec: &RandomClusterSpec, branches: Option<usize>) -> (SurfaceModel, Curve, CaseRng) {
    let mut rng = spec.rng();
    let s = random_surface(spec, &mut rng);
    let c = match branches {
        None => random_curve(spec, &s, &mut rng),
        Some(n) => random_curve_on(spec, &s, s.tree(), n, "c", &mut rng),
    };
    (s, c, rng)
}

fn curve_scene(s: &SurfaceModel, curves: &[(&str, &Curve)], note: String) -> Scene {
    scene_of(curves[0].1.tree(), Some(s.cluster()), curves, note)
}

/// Criteria (ii), (iv) and the Mumford test agree.
pub fn case_cartier_criteria(spec: &RandomClusterSpec) -> CaseOutcome {
    let (s, c, _) = surface_and_curve(spec, None);
    let scene = curve_scene(&s, &[("c", &c)], format!("Cartier criteria case, seed {}", spec.seed));
    match is_cartier(&s, &c) {
        Ok(v) if v.by_coefficients == v.by_ideal_cluster && v.by_coefficients == v.by_mumford => CaseOutcome::Pass,
        Ok(v) => CaseOutcome::fail(
            format!(
                "criteria disagree: coefficients {}, ideal cluster {}, Mumford {}",
                v.by_coefficients, v.by_ideal_cluster, v.by_mumford
            ),
            Some(&scene),
        ),
        Err(e) => CaseOutcome::fail(e.to_string(), Some(&scene)),
    }
}

const SEMIGROUP_REDRAWS: usize = 12;

/// Gap count equals delta, the conductor is at most `alpha^n`, and the
/// represented elements are closed under addition.
pub fn case_semigroup(spec: &RandomClusterSpec) -> CaseOutcome {
    let (s, mut c, mut rng) = surface_and_curve(spec, Some(1));
    // most random branches are smooth on the surface; redraw a few times
    // looking for a singular one
    let mut sg = semigroup_at_q(&s, &c);
    for _ in 0..SEMIGROUP_REDRAWS {
        if !matches!(&sg, Ok(g) if g.delta.is_zero()) {
            break;
        }
        c = random_curve_on(spec, &s, s.tree(), 1, "c", &mut rng);
        sg = semigroup_at_q(&s, &c);
    }
    let scene = curve_scene(&s, &[("c", &c)], format!("semigroup case, seed {}", spec.seed));
    let sg = match sg {
        Ok(sg) => sg,
        Err(e) => return CaseOutcome::fail(e.to_string(), Some(&scene)),
    };
    let top = *sg.alphas.last().expect("non-empty");
    if Int::from(sg.semigroup.gaps().len()) != sg.delta {
        return CaseOutcome::fail(
            format!("{} gaps against delta {}", sg.semigroup.gaps().len(), sg.delta),
            Some(&scene),
        );
    }
    if sg.semigroup.conductor() > top {
        return CaseOutcome::fail(
            format!("conductor {} exceeds alpha^n = {top}", sg.semigroup.conductor()),
            Some(&scene),
        );
    }
    if !sg.semigroup.is_closed_in_range() {
        return CaseOutcome::fail("the semigroup is not closed below the conductor", Some(&scene));
    }
    for &a in &sg.alphas {
        for &b in &sg.alphas {
            if !sg.semigroup.contains(a + b) {
                return CaseOutcome::fail(format!("{a} + {b} is not in the semigroup"), Some(&scene));
            }
        }
    }
    CaseOutcome::Pass
}

/// Two flags of one curve, at independent random excess vectors.
pub fn random_flag_pair(spec: &RandomClusterSpec) -> Result<(SurfaceModel, Curve, Flag, Flag)> {
    let (s, c, mut rng) = surface_and_curve(spec, None);
    let mut m = || -> Vec<Int> {
        (0..s.kplus().len())
            .map(|_| Int::from(rng.gen_range(0..=6)))
            .collect()
    };
    let (m1, m2) = (m(), m());
    let f1 = build_flag(&s, &c, &m1)?;
    let f2 = build_flag(&s, &c, &m2)?;
    Ok((s, c, f1, f2))
}

/// `tau^j - tau^0` for every cluster of the flag.
pub fn flag_increments(f: &Flag) -> Vec<Vec<Int>> {
    let t0 = f.first().multiplicities();
    f.clusters
        .iter()
        .map(|t| t.multiplicities().iter().zip(t0).map(|(a, b)| a - b).collect())
        .collect()
}

/// Multiplicities of `T_n` at the points outside `skip`.
pub fn last_multiplicities_outside(f: &Flag, skip: &[usize]) -> Vec<Int> {
    f.last()
        .multiplicities()
        .iter()
        .enumerate()
        .filter(|(p, _)| !skip.contains(p))
        .map(|(_, x)| x.clone())
        .collect()
}

/// Everything the flag construction promises not to depend on `m`:
/// `n`, `omega`, `n_p`, the increments, delta, and `T_n` outside `K`.
pub fn case_flag_independence(spec: &RandomClusterSpec) -> CaseOutcome {
    let (s, c, f1, f2) = match random_flag_pair(spec) {
        Ok(x) => x,
        Err(e) => return CaseOutcome::fail(e.to_string(), None),
    };
    let scene = curve_scene(&s, &[("c", &c)], format!("flag case, seed {}", spec.seed));
    let checks = [
        ("n", f1.n == f2.n),
        ("omega", f1.omega == f2.omega),
        ("n_p", f1.n_p == f2.n_p),
        ("increments", flag_increments(&f1) == flag_increments(&f2)),
        ("delta", delta_of_flag(&f1) == delta_of_flag(&f2)),
        (
            "multiplicities outside K",
            last_multiplicities_outside(&f1, &f1.extended.k_map) == last_multiplicities_outside(&f2, &f2.extended.k_map),
        ),
    ];
    match checks.iter().find(|(_, ok)| !ok) {
        None => CaseOutcome::Pass,
        Some((what, _)) => CaseOutcome::fail(
            format!("{what} differs between m = {:?} and m = {:?}", f1.m, f2.m),
            Some(&scene),
        ),
    }
}

/// `K_Q` does not depend on which point of `T_Q` the new point follows.
pub fn case_kq_choice(spec: &RandomClusterSpec) -> CaseOutcome {
    let mut rng = spec.rng();
    let k = random_ideal_cluster(spec, &mut rng);
    let scene = scene_of(k.tree(), Some(&k), &[], format!("K_Q case, seed {}", spec.seed));
    let s = match build_surface(&k) {
        Ok(s) => s,
        Err(e) => return CaseOutcome::fail(e.to_string(), Some(&scene)),
    };
    for q in s.singularities() {
        for &p in &q.t_q {
            match kq_from(&s, p) {
                Ok(nu) if nu == q.nu_q => {}
                Ok(nu) => {
                    return CaseOutcome::fail(
                        format!("{}: attaching after `{}` gives {nu:?}", q.label, k.tree().id(p)),
                        Some(&scene),
                    )
                }
                Err(e) => return CaseOutcome::fail(e.to_string(), Some(&scene)),
            }
        }
    }
    CaseOutcome::Pass
}

/// Two random curves on one tree over a random surface.
pub fn random_curve_pair(spec: &RandomClusterSpec) -> (SurfaceModel, Curve, Curve) {
    let mut rng = spec.rng();
    let s = random_surface(spec, &mut rng);
    let nc = rng.gen_range(1..=2);
    let c = random_curve_on(spec, &s, s.tree(), nc, "c", &mut rng);
    let nd = rng.gen_range(1..=2);
    let d = random_curve_on(spec, &s, c.tree(), nd, "d", &mut rng);
    let c = c.rebase(d.tree()).expect("d's tree extends c's");
    (s, c, d)
}

/// `[C, D]_O = C~ . D~ + sum_u v_u(C) a_u(D)`.
pub fn projection_terms(s: &SurfaceModel, c: &Curve, d: &Curve) -> Result<(Int, Rational, Rational)> {
    let total = noether_pairing(c, d)?;
    let on_x = intersection_on_x(s, c, d)?;
    let a = is_cartier(s, d)?.coefficients;
    let v = l_vector_of_curve(s, c)?;
    let correction: Rational = v.iter().zip(&a).map(|(x, y)| rat(x) * y).sum();
    Ok((total, on_x, correction))
}

pub fn case_projection_formula(spec: &RandomClusterSpec) -> CaseOutcome {
    let (s, c, d) = random_curve_pair(spec);
    let scene = curve_scene(&s, &[("c", &c), ("d", &d)], format!("projection case, seed {}", spec.seed));
    match projection_terms(&s, &c, &d) {
        Ok((total, on_x, corr)) if rat(&total) == &on_x + &corr => CaseOutcome::Pass,
        Ok((total, on_x, corr)) => CaseOutcome::fail(
            format!("[C,D] = {total} but C~.D~ = {on_x} and the correction is {corr}"),
            Some(&scene),
        ),
        Err(e) => CaseOutcome::fail(e.to_string(), Some(&scene)),
    }
}

/// Naive `v_p = nu_p + sum_{p -> q} v_q`.
fn naive_values(tree: &ClusterTree, nu: &[Int]) -> Vec<Int> {
    let mut v: Vec<Int> = Vec::with_capacity(nu.len());
    for (p, m) in nu.iter().enumerate() {
        let mut x = m.clone();
        if let Some(q) = tree.parent(p) {
            x += &v[q];
        }
        if let Some(q) = tree.satellite_of(p) {
            x += &v[q];
        }
        v.push(x);
    }
    v
}

/// `det P = 1`, `V (-A) = I` for the matrix `V` of simple-ideal values,
/// `rho = P^t nu = -A v`, and `nu -> v -> nu` is the identity.
pub fn case_structural(spec: &RandomClusterSpec) -> CaseOutcome {
    let mut rng = spec.rng();
    let tree = Arc::new(random_tree(spec, &mut rng));
    let wc = random_weighting(spec, &tree, &mut rng);
    let scene = scene_of(&tree, Some(&wc), &[], format!("structural case, seed {}", spec.seed));
    let n = tree.len();
    let p = proximity::proximity_matrix(&tree);
    if !p.determinant().is_one() {
        return CaseOutcome::fail(format!("det P = {}", p.determinant()), Some(&scene));
    }
    let a = proximity::intersection_matrix(&tree);
    let mut v_rows = IntMatrix::zeros(n, n);
    for q in 0..n {
        let mut rho = vec![Int::zero(); n];
        rho[q] = Int::one();
        let vals = naive_values(&tree, &proximity::mults_from_excesses(&tree, &rho));
        for (j, x) in vals.into_iter().enumerate() {
            v_rows.set(q, j, x);
        }
    }
    if v_rows.mul(&a.neg()) != IntMatrix::identity(n) {
        return CaseOutcome::fail("[v(I_p)] (-A) is not the identity", Some(&scene));
    }
    let nu = wc.multiplicities();
    let v = naive_values(&tree, nu);
    if wc.values() != v.as_slice() {
        return CaseOutcome::fail("values differ from the naive recursion", Some(&scene));
    }
    let rho_p = p.transpose().mul_vec(nu);
    let rho_a: Vec<Int> = a.mul_vec(&v).into_iter().map(|x| -x).collect();
    if rho_p != rho_a || wc.excesses() != rho_p.as_slice() {
        return CaseOutcome::fail("P^t nu, -A v and the excesses differ", Some(&scene));
    }
    if proximity::mults_from_values(&tree, &v) != nu {
        return CaseOutcome::fail("nu -> v -> nu is not the identity", Some(&scene));
    }
    CaseOutcome::Pass
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SuiteResult {
    pub name: String,
    pub passed: usize,
    pub inconclusive: usize,
    pub failures: Vec<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub seed: u64,
    pub max_points: usize,
    pub message: String,
    pub scene: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SuiteReport {
    pub suites: Vec<SuiteResult>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(|s| s.failures.is_empty())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            out.push_str(&format!(
                "{}: {} passed, {} failed, {} inconclusive\n",
                s.name,
                s.passed,
                s.failures.len(),
                s.inconclusive
            ));
            for f in &s.failures {
                out.push_str(&format!("  seed {} ({} points max): {}\n", f.seed, f.max_points, f.message));
                if let Some(scene) = &f.scene {
                    for line in scene.lines() {
                        out.push_str(&format!("    {line}\n"));
                    }
                }
            }
        }
        out
    }
}

pub type CaseFn = fn(&RandomClusterSpec) -> CaseOutcome;

/// Runs `case` on every seed; failures are shrunk by lowering the point
/// bound while the case still fails.
pub fn run_suite(name: &str, spec: &RandomClusterSpec, seeds: &[u64], case: CaseFn) -> SuiteResult {
    let mut result = SuiteResult {
        name: name.to_string(),
        ..Default::default()
    };
    for &seed in seeds {
        let s = spec.with_seed(seed);
        match case(&s) {
            CaseOutcome::Pass => result.passed += 1,
            CaseOutcome::Inconclusive(_) => result.inconclusive += 1,
            CaseOutcome::Fail { message, scene } => {
                let mut best = Counterexample {
                    seed,
                    max_points: s.max_points,
                    message,
                    scene,
                };
                for m in (1..s.max_points).rev() {
                    if let CaseOutcome::Fail { message, scene } = case(&s.with_max_points(m)) {
                        best = Counterexample {
                            seed,
                            max_points: m,
                            message,
                            scene,
                        };
                    }
                }
                result.failures.push(best);
            }
        }
    }
    result
}

pub const ORACLE_BOUND: i64 = 6;

fn unloading_case(spec: &RandomClusterSpec) -> CaseOutcome {
    case_unloading_oracle(&spec.with_max_points(spec.max_points.min(6)), ORACLE_BOUND, Mutation::None)
}

fn step_order_case(spec: &RandomClusterSpec) -> CaseOutcome {
    case_step_orders(spec, 20)
}

/// Every cross-check, one case per seed and suite.
pub fn differential_suite(seeds: &[u64], spec: &RandomClusterSpec) -> SuiteReport {
    if seeds.is_empty() {
        return SuiteReport::default();
    }
    let suites: [(&str, CaseFn); 8] = [
        ("unloading vs minimality oracle", unloading_case),
        ("unit and seeded step orders", step_order_case),
        ("Cartier criteria agreement", case_cartier_criteria),
        ("delta vs semigroup gaps", case_semigroup),
        ("flag m-independence", case_flag_independence),
        ("K_Q choice independence", case_kq_choice),
        ("projection formula", case_projection_formula),
        ("structural identities", case_structural),
    ];
    SuiteReport {
        suites: suites
            .iter()
            .map(|(name, case)| run_suite(name, spec, seeds, *case))
            .collect(),
    }
}

/// Checks the values of a weighted cluster against the oracle, for callers
/// holding an arbitrary cluster rather than a seed.
pub fn check_against_oracle(wc: &WeightedCluster, fixed: &[bool], bound: i64) -> Result<OracleAnswer> {
    let v = to_i64(wc.values()).ok_or_else(|| Error::Precondition("values out of range".into()))?;
    Ok(minimality_oracle(wc.tree(), &v, fixed, bound))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_points() -> Arc<ClusterTree> {
        Arc::new(ClusterTree::new(&[PointRecord::root("O"), PointRecord::free("p1", "O")]).unwrap())
    }

    #[test]
    fn oracle_on_small_clusters() {
        let t = two_points();
        let wc = WeightedCluster::from_i64(t.clone(), &[1, 2]).unwrap();
        assert_eq!(
            check_against_oracle(&wc, &[false, false], 3).unwrap(),
            OracleAnswer::Minimum(vec![2, 3])
        );
        let wc = WeightedCluster::from_i64(t, &[2, 1]).unwrap();
        assert_eq!(
            check_against_oracle(&wc, &[false, false], 3).unwrap(),
            OracleAnswer::Minimum(vec![2, 3])
        );
        let t3 = Arc::new(
            ClusterTree::new(&[
                PointRecord::root("O"),
                PointRecord::free("p1", "O"),
                PointRecord::satellite("p2", "p1", "O"),
            ])
            .unwrap(),
        );
        let wc = WeightedCluster::from_values(t3, vec![Int::from(0), Int::from(1), Int::from(2)]).unwrap();
        assert_eq!(
            check_against_oracle(&wc, &[false; 3], 6).unwrap(),
            OracleAnswer::Minimum(vec![1, 1, 2])
        );
    }

    #[test]
    fn generators_are_deterministic() {
        let spec = RandomClusterSpec::default().with_seed(7);
        let a = random_tree(&spec, &mut spec.rng());
        let b = random_tree(&spec, &mut spec.rng());
        assert_eq!(a, b);
        let free = RandomClusterSpec {
            satellite_probability: 0.0,
            ..spec
        };
        for seed in 0..20 {
            let t = random_tree(&free.with_seed(seed), &mut free.with_seed(seed).rng());
            assert!((0..t.len()).all(|p| t.is_free(p)));
        }
    }

    #[test]
    fn generated_surfaces_and_curves_are_valid() {
        for seed in 0..30 {
            let spec = RandomClusterSpec::default().with_seed(seed);
            let mut rng = spec.rng();
            let s = random_surface(&spec, &mut rng);
            let c = random_curve(&spec, &s, &mut rng);
            assert!(crate::curve::tail_points(&c, s.tree()).is_ok());
        }
    }

    #[test]
    fn mutation_is_caught() {
        let spec = RandomClusterSpec::default().with_max_points(5);
        let mut caught = 0;
        for seed in 0..40 {
            let s = spec.with_seed(seed);
            if case_unloading_oracle(&s, 6, Mutation::SkipLastStep).is_fail() {
                caught += 1;
                assert!(!case_unloading_oracle(&s, 6, Mutation::None).is_fail());
            }
        }
        assert!(caught > 0);
    }

    #[test]
    fn empty_seed_list() {
        assert_eq!(differential_suite(&[], &RandomClusterSpec::default()), SuiteReport::default());
    }

    #[test]
    fn small_differential_run() {
        let seeds: Vec<u64> = (0..8).collect();
        let report = differential_suite(&seeds, &RandomClusterSpec::default());
        assert!(report.all_passed(), "{}", report.render());
    }
}
