//! Numerical invariants of strict transforms: multiplicity at a singular
//! point, order of singularity and the value semigroup of a branch.

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::curve::{delta_origin, Curve};
use crate::error::{Error, Result};
use crate::flags::{build_default_flag, build_flag, Flag};
use crate::linalg::Int;
use crate::principality::{attachment, ideal_cluster_qc, is_cartier, Attachment};
use crate::surface::{Singularity, SurfaceModel};

/// `e_{O_Q}(C) - sum_{p in B_Q} e_p(C)`.
pub fn mult_at_q(surface: &SurfaceModel, c: &Curve, sing: &Singularity) -> Result<Int> {
    let map = c.tree().embedding_of(surface.tree())?;
    let e = c.multiplicities();
    let b: Int = sing.b_q.iter().map(|&p| e[map[p]].clone()).sum();
    let m = &e[map[sing.o_q]] - b;
    if m < Int::zero() {
        return Err(Error::internal(format!("negative multiplicity {m} at {}", sing.label)));
    }
    Ok(m)
}

/// `[T_n, C]_O - [T_0, C]_O - n`.
pub fn delta_from_pairings(last: &Int, first: &Int, n: &Int) -> Int {
    last - first - n
}

/// `delta_O(C) - delta_O(Q_C)`, the Cartier case.
pub fn delta_from_deltas(curve_delta: &Int, cluster_delta: &Int) -> Int {
    curve_delta - cluster_delta
}

pub fn delta_of_flag(flag: &Flag) -> Int {
    let pairings = flag.curve_pairings();
    delta_from_pairings(
        pairings.last().expect("non-empty"),
        &pairings[0],
        &Int::from(flag.n),
    )
}

/// Total order of singularity of the strict transform, summed over the
/// singular points of the surface.
pub fn delta_on_x(surface: &SurfaceModel, c: &Curve, m: Option<&[Int]>) -> Result<Int> {
    let flag = match m {
        Some(m) => build_flag(surface, c, m)?,
        None => build_default_flag(surface, c)?,
    };
    Ok(delta_of_flag(&flag))
}

/// Order of singularity of a Cartier strict transform, by both closed
/// formulas, which must agree.
pub fn delta_cartier_case(surface: &SurfaceModel, c: &Curve) -> Result<Int> {
    if !is_cartier(surface, c)?.cartier {
        return Err(Error::precondition("the strict transform is not Cartier"));
    }
    let qc = ideal_cluster_qc(surface, c)?;
    let first = delta_from_deltas(&delta_origin(c), &qc.delta());
    let map = c.tree().embedding_of(surface.tree())?;
    let mut tau = vec![Int::zero(); c.tree().len()];
    for (p, &q) in map.iter().enumerate() {
        tau[q] = qc.multiplicities()[p].clone();
    }
    let second: Int = c
        .multiplicities()
        .iter()
        .zip(&tau)
        .map(|(e, t)| {
            let d = e - t;
            &d * (&d - 1u32) / 2u32
        })
        .sum();
    if first != second {
        return Err(Error::internal(format!(
            "Cartier delta formulas disagree: {first} against {second}"
        )));
    }
    Ok(first)
}

/// A numerical semigroup, stored as its elements below the conductor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Semigroup {
    elements: Vec<u64>,
    conductor: u64,
}

impl Semigroup {
    /// `{0, 1, 2, ...}`.
    pub fn natural() -> Self {
        Semigroup {
            elements: Vec::new(),
            conductor: 0,
        }
    }

    /// The set `elements ∪ [tail_start, ∞)`, with the conductor recomputed.
    pub fn from_elements(elements: &[u64], tail_start: u64) -> Self {
        let set: BTreeSet<u64> = elements.iter().copied().filter(|&x| x < tail_start).collect();
        let mut conductor = tail_start;
        while conductor > 0 && set.contains(&(conductor - 1)) {
            conductor -= 1;
        }
        Semigroup {
            elements: set.into_iter().filter(|&x| x < conductor).collect(),
            conductor,
        }
    }

    pub fn elements_below_conductor(&self) -> &[u64] {
        &self.elements
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn contains(&self, z: u64) -> bool {
        z >= self.conductor || self.elements.binary_search(&z).is_ok()
    }

    pub fn gaps(&self) -> Vec<u64> {
        (0..self.conductor).filter(|&z| !self.contains(z)).collect()
    }

    /// `z ∈ S` iff `c - 1 - z ∉ S`, for every `z < c`.
    pub fn is_symmetric(&self) -> bool {
        let c = self.conductor;
        (0..c).all(|z| self.contains(z) != self.contains(c - 1 - z))
    }

    /// Sums of pairs of stored elements below the conductor stay in the set.
    pub fn is_closed_in_range(&self) -> bool {
        self.elements.iter().all(|&a| {
            self.elements
                .iter()
                .all(|&b| a + b >= self.conductor || self.contains(a + b))
        })
    }
}

pub fn is_symmetric(s: &Semigroup) -> bool {
    s.is_symmetric()
}

/// Semigroup data read off a flag: `alpha^i = [T_i, C]_O - [T_0, C]_O`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchSemigroup {
    pub alphas: Vec<u64>,
    pub semigroup: Semigroup,
    pub delta: Int,
}

pub fn semigroup_of_flag(flag: &Flag) -> Result<BranchSemigroup> {
    let pairings = flag.curve_pairings();
    let alphas = pairings
        .iter()
        .map(|x| {
            u64::try_from(x - &pairings[0]).map_err(|_| Error::internal("semigroup element out of range"))
        })
        .collect::<Result<Vec<u64>>>()?;
    if alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::internal("pairings along the flag are not increasing"));
    }
    let top = *alphas.last().expect("non-empty");
    let semigroup = Semigroup::from_elements(&alphas, top);
    let delta = delta_of_flag(flag);
    if Int::from(semigroup.gaps().len()) != delta {
        return Err(Error::internal(format!(
            "semigroup has {} gaps but the order of singularity is {delta}",
            semigroup.gaps().len()
        )));
    }
    Ok(BranchSemigroup {
        alphas,
        semigroup,
        delta,
    })
}

/// Value semigroup of the strict transform of an irreducible curve at the
/// point where it meets the exceptional locus.
pub fn semigroup_at_q(surface: &SurfaceModel, c: &Curve) -> Result<BranchSemigroup> {
    if c.branches().len() != 1 || c.branches()[0].1 != 1 {
        return Err(Error::precondition("the semigroup needs a single branch with coefficient 1"));
    }
    let flag = build_default_flag(surface, c)?;
    let computed = semigroup_of_flag(&flag)?;
    if attachment(surface, c, 0)? == Attachment::Smooth {
        if !computed.delta.is_zero() {
            return Err(Error::internal("branch through a smooth point has positive delta"));
        }
        return Ok(BranchSemigroup {
            alphas: computed.alphas,
            semigroup: Semigroup::natural(),
            delta: Int::zero(),
        });
    }
    Ok(computed)
}
