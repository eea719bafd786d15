//! Clusters of infinitely near points.
//!
//! A point is described by its parent (the point it lies in the first
//! neighbourhood of) and, for satellite points, by the second point it is
//! proximate to. Points are stored ancestor-first, so every proximity target
//! of a point has a smaller index than the point itself.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// One line of a cluster description, with references still by label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointRecord {
    pub id: String,
    pub parent: Option<String>,
    pub satellite_of: Option<String>,
}

impl PointRecord {
    pub fn root(id: impl Into<String>) -> Self {
        PointRecord {
            id: id.into(),
            parent: None,
            satellite_of: None,
        }
    }

    pub fn free(id: impl Into<String>, parent: impl Into<String>) -> Self {
        PointRecord {
            id: id.into(),
            parent: Some(parent.into()),
            satellite_of: None,
        }
    }

    pub fn satellite(
        id: impl Into<String>,
        parent: impl Into<String>,
        satellite_of: impl Into<String>,
    ) -> Self {
        PointRecord {
            id: id.into(),
            parent: Some(parent.into()),
            satellite_of: Some(satellite_of.into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    DuplicateId,
    NoRoot,
    ExtraRoot,
    UnknownParent,
    ParentNotBefore,
    UnknownSatelliteTarget,
    SatelliteWithoutParent,
    /// `satellite_of` is not a proximity target of the parent.
    SatelliteNotProximate,
    /// Two points claim the same intersection of exceptional components.
    DuplicateSatellite,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub point: String,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.point, self.message)
    }
}

/// Checks every structural rule and returns all violations found, in record order.
pub fn validate_tree(records: &[PointRecord]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let all: HashMap<&str, usize> = records
        .iter()
        .enumerate()
        .rev()
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();
    // proximity targets of already accepted points, by label
    let mut targets: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut satellite_slots: Vec<(&str, &str)> = Vec::new();
    let mut roots = 0usize;

    let mut push = |point: &str, kind: ViolationKind, message: String| {
        out.push(Violation {
            point: point.to_string(),
            kind,
            message,
        })
    };

    for r in records {
        let id = r.id.as_str();
        if seen.contains_key(id) {
            push(id, ViolationKind::DuplicateId, format!("duplicate point id `{id}`"));
            continue;
        }
        seen.insert(id, 0);
        let mut own_targets = Vec::new();
        match &r.parent {
            None => {
                roots += 1;
                if roots > 1 {
                    push(id, ViolationKind::ExtraRoot, "a cluster has exactly one root".into());
                }
                if r.satellite_of.is_some() {
                    push(
                        id,
                        ViolationKind::SatelliteWithoutParent,
                        "the root cannot be a satellite point".into(),
                    );
                }
            }
            Some(parent) => {
                let parent = parent.as_str();
                if !all.contains_key(parent) {
                    push(id, ViolationKind::UnknownParent, format!("parent `{parent}` is not declared"));
                } else if !targets.contains_key(parent) {
                    push(
                        id,
                        ViolationKind::ParentNotBefore,
                        format!("parent `{parent}` must be listed before `{id}`"),
                    );
                } else {
                    own_targets.push(parent);
                    if let Some(sat) = &r.satellite_of {
                        let sat = sat.as_str();
                        if !all.contains_key(sat) {
                            push(
                                id,
                                ViolationKind::UnknownSatelliteTarget,
                                format!("satellite target `{sat}` is not declared"),
                            );
                        } else if !targets[parent].contains(&sat) {
                            push(
                                id,
                                ViolationKind::SatelliteNotProximate,
                                format!("parent `{parent}` is not proximate to `{sat}`"),
                            );
                        } else if satellite_slots.contains(&(parent, sat)) {
                            push(
                                id,
                                ViolationKind::DuplicateSatellite,
                                format!("another point already lies on both `{parent}` and `{sat}`"),
                            );
                        } else {
                            satellite_slots.push((parent, sat));
                            own_targets.push(sat);
                        }
                    }
                }
            }
        }
        targets.insert(id, own_targets);
    }
    if roots == 0 && !records.is_empty() {
        push("", ViolationKind::NoRoot, "no root point".into());
    }
    if records.is_empty() {
        push("", ViolationKind::NoRoot, "empty cluster".into());
    }
    out
}

/// A validated cluster. Index 0 is the root; indices follow file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterTree {
    ids: Vec<String>,
    parent: Vec<Option<usize>>,
    satellite_of: Vec<Option<usize>>,
    /// `proximate[p]` lists the points proximate to `p`, increasing.
    proximate: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    index: HashMap<String, usize>,
}

impl ClusterTree {
    pub fn new(records: &[PointRecord]) -> Result<Self> {
        if let Some(v) = validate_tree(records).into_iter().next() {
            return Err(Error::InvalidTree(v.to_string()));
        }
        let index: HashMap<String, usize> = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.clone(), i))
            .collect();
        let n = records.len();
        let mut tree = ClusterTree {
            ids: records.iter().map(|r| r.id.clone()).collect(),
            parent: records.iter().map(|r| r.parent.as_ref().map(|p| index[p])).collect(),
            satellite_of: records
                .iter()
                .map(|r| r.satellite_of.as_ref().map(|p| index[p]))
                .collect(),
            proximate: vec![Vec::new(); n],
            children: vec![Vec::new(); n],
            index,
        };
        for p in 0..n {
            if let Some(par) = tree.parent[p] {
                tree.children[par].push(p);
            }
            let targets: Vec<usize> = tree.targets(p).collect();
            for q in targets {
                tree.proximate[q].push(p);
            }
        }
        Ok(tree)
    }

    /// Single-point cluster.
    pub fn single(root: impl Into<String>) -> Self {
        ClusterTree::new(&[PointRecord::root(root)]).expect("single point is valid")
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, p: usize) -> &str {
        &self.ids[p]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require(&self, id: &str) -> Result<usize> {
        self.index_of(id).ok_or_else(|| Error::UnknownPoint(id.to_string()))
    }

    pub fn parent(&self, p: usize) -> Option<usize> {
        self.parent[p]
    }

    pub fn satellite_of(&self, p: usize) -> Option<usize> {
        self.satellite_of[p]
    }

    pub fn is_free(&self, p: usize) -> bool {
        self.satellite_of[p].is_none()
    }

    pub fn children(&self, p: usize) -> &[usize] {
        &self.children[p]
    }

    /// Points `p` is proximate to: its parent and, if satellite, one more.
    pub fn targets(&self, p: usize) -> impl Iterator<Item = usize> + '_ {
        self.parent[p].into_iter().chain(self.satellite_of[p])
    }

    pub fn is_proximate(&self, p: usize, q: usize) -> bool {
        self.parent[p] == Some(q) || self.satellite_of[p] == Some(q)
    }

    /// Points proximate to `p`.
    pub fn proximate_to(&self, p: usize) -> &[usize] {
        &self.proximate[p]
    }

    /// `1 + #{q -> p}`, minus the self-intersection of `E_p`.
    pub fn omega(&self, p: usize) -> usize {
        1 + self.proximate[p].len()
    }

    /// Root-to-`p` chain, inclusive.
    pub fn chain_to(&self, p: usize) -> Vec<usize> {
        let mut chain = vec![p];
        let mut cur = p;
        while let Some(par) = self.parent[cur] {
            chain.push(par);
            cur = par;
        }
        chain.reverse();
        chain
    }

    /// `a` precedes or equals `b` (`b` is infinitely near to `a`).
    pub fn precedes_or_eq(&self, a: usize, b: usize) -> bool {
        let mut cur = Some(b);
        while let Some(c) = cur {
            if c == a {
                return true;
            }
            if c < a {
                return false;
            }
            cur = self.parent[c];
        }
        false
    }

    pub fn records(&self) -> Vec<PointRecord> {
        (0..self.len())
            .map(|p| PointRecord {
                id: self.ids[p].clone(),
                parent: self.parent[p].map(|q| self.ids[q].clone()),
                satellite_of: self.satellite_of[p].map(|q| self.ids[q].clone()),
            })
            .collect()
    }

    /// Sub-cluster on the given points, which must be closed under preceding points.
    pub fn subtree(&self, keep: &[bool]) -> Result<ClusterTree> {
        let records: Vec<PointRecord> = self
            .records()
            .into_iter()
            .enumerate()
            .filter(|(p, _)| keep[*p])
            .map(|(_, r)| r)
            .collect();
        for (p, k) in keep.iter().enumerate() {
            if *k {
                if let Some(par) = self.parent[p] {
                    if !keep[par] {
                        return Err(Error::precondition(format!(
                            "point `{}` kept without its parent `{}`",
                            self.ids[p], self.ids[par]
                        )));
                    }
                }
            }
        }
        ClusterTree::new(&records)
    }

    /// Appends a point and returns the extended tree with the new index.
    pub fn with_point(&self, record: PointRecord) -> Result<(ClusterTree, usize)> {
        let mut records = self.records();
        records.push(record);
        let tree = ClusterTree::new(&records)?;
        let idx = tree.len() - 1;
        Ok((tree, idx))
    }

    /// An id of the form `{base}~{k}` not used in this tree.
    pub fn fresh_id(&self, base: &str) -> String {
        let mut k = 1usize;
        loop {
            let candidate = format!("{base}~{k}");
            if !self.index.contains_key(&candidate) {
                return candidate;
            }
            k += 1;
        }
    }

    /// For every point of `sub`, its index in `self`. Shared labels must
    /// carry the same parent and satellite target.
    pub fn embedding_of(&self, sub: &ClusterTree) -> Result<Vec<usize>> {
        let map: Vec<usize> = sub
            .ids
            .iter()
            .map(|id| self.require(id))
            .collect::<Result<_>>()?;
        for (p, &q) in map.iter().enumerate() {
            let same_parent = sub.parent[p].map(|x| map[x]) == self.parent[q];
            let same_sat = sub.satellite_of[p].map(|x| map[x]) == self.satellite_of[q];
            if !same_parent || !same_sat {
                return Err(Error::TreeMismatch(format!(
                    "point `{}` has different proximities in the two clusters",
                    sub.ids[p]
                )));
            }
        }
        Ok(map)
    }

    /// Union of two clusters, matched by label. The result lists `self`
    /// first, then the points only `other` has.
    pub fn merge(&self, other: &ClusterTree) -> Result<ClusterTree> {
        let mut records = self.records();
        for r in other.records() {
            match self.index_of(&r.id) {
                Some(p) => {
                    let mine = &records[p];
                    if mine.parent != r.parent || mine.satellite_of != r.satellite_of {
                        return Err(Error::TreeMismatch(format!(
                            "point `{}` has different proximities in the two clusters",
                            r.id
                        )));
                    }
                }
                None => records.push(r),
            }
        }
        ClusterTree::new(&records)
    }
}
