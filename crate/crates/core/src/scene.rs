//! The line-oriented scene format.
//!
//! ```text
//! # comment
//! point O
//! point p1 parent O
//! point p2 parent p1 sat O
//! ideal O=3 p1=2 p2=1
//! branch delta coeff 1 chain O p1
//! ```
//!
//! Branch lines sharing a name form one curve, in file order.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use num_traits::Zero;

use crate::cluster::WeightedCluster;
use crate::curve::{Branch, Curve};
use crate::error::{Error, Result};
use crate::linalg::Int;
use crate::tree::{validate_tree, ClusterTree, PointRecord};

#[derive(Debug, Clone)]
pub struct Scene {
    pub tree: Arc<ClusterTree>,
    pub ideal: Option<WeightedCluster>,
    pub curves: Vec<(String, Curve)>,
    /// Comment lines, without the leading `#`, in file order.
    pub metadata: Vec<String>,
}

impl PartialEq for Scene {
    fn eq(&self, other: &Self) -> bool {
        self.tree == other.tree
            && self.ideal.as_ref().map(|w| w.multiplicities())
                == other.ideal.as_ref().map(|w| w.multiplicities())
            && self.curves == other.curves
            && self.metadata == other.metadata
    }
}

impl Scene {
    pub fn curve(&self, name: &str) -> Result<&Curve> {
        self.curves
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c)
            .ok_or_else(|| Error::Precondition(format!("no curve named `{name}`")))
    }

    pub fn require_ideal(&self) -> Result<&WeightedCluster> {
        self.ideal
            .as_ref()
            .ok_or_else(|| Error::Precondition("the scene has no `ideal` line".into()))
    }

    /// The ideal's cluster restricted to its support.
    pub fn ideal_cluster(&self) -> Result<WeightedCluster> {
        self.require_ideal()?.support()
    }
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokens(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(Token {
                    text: &line[s..i],
                    column: line[..s].chars().count() + 1,
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            column: line[..s].chars().count() + 1,
        });
    }
    out
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty() && !s.contains(['=', '#', ','])
}

struct Parser {
    records: Vec<PointRecord>,
    point_line: HashMap<String, usize>,
    ideal: Option<(usize, Vec<(String, Int)>)>,
    branches: Vec<(usize, String, u64, Vec<String>)>,
    metadata: Vec<String>,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn semantic(line: usize, message: impl Into<String>) -> Error {
    Error::Semantic {
        line,
        message: message.into(),
    }
}

impl Parser {
    fn identifier(&self, line: usize, tok: Option<&Token<'_>>, what: &str, end: usize) -> Result<String> {
        match tok {
            None => Err(syntax(line, end, format!("expected {what}"))),
            Some(t) if !is_identifier(t.text) => {
                Err(syntax(line, t.column, format!("`{}` is not a valid {what}", t.text)))
            }
            Some(t) => Ok(t.text.to_string()),
        }
    }

    fn declared(&self, line: usize, id: &str) -> Result<()> {
        if self.point_line.contains_key(id) {
            Ok(())
        } else {
            Err(semantic(line, format!("point `{id}` is not declared")))
        }
    }

    fn keyword(line: usize, tok: Option<&Token<'_>>, kw: &str, end: usize) -> Result<()> {
        match tok {
            Some(t) if t.text == kw => Ok(()),
            Some(t) => Err(syntax(line, t.column, format!("expected `{kw}`, found `{}`", t.text))),
            None => Err(syntax(line, end, format!("expected `{kw}`"))),
        }
    }

    fn point(&mut self, line: usize, toks: &[Token<'_>], end: usize) -> Result<()> {
        let id = self.identifier(line, toks.get(1), "point id", end)?;
        let record = match toks.len() {
            2 => PointRecord::root(&id),
            4 | 6 => {
                Self::keyword(line, toks.get(2), "parent", end)?;
                let parent = self.identifier(line, toks.get(3), "point id", end)?;
                self.declared(line, &parent)?;
                if toks.len() == 6 {
                    Self::keyword(line, toks.get(4), "sat", end)?;
                    let sat = self.identifier(line, toks.get(5), "point id", end)?;
                    self.declared(line, &sat)?;
                    PointRecord::satellite(&id, parent, sat)
                } else {
                    PointRecord::free(&id, parent)
                }
            }
            3 | 5 => return Err(syntax(line, end, "expected a point id")),
            _ => return Err(syntax(line, toks[6].column, "unexpected token")),
        };
        if let Some(first) = self.point_line.get(&id) {
            return Err(semantic(
                line,
                format!("duplicate point id `{id}` (first declared on line {first})"),
            ));
        }
        if record.parent.is_none() {
            if let Some(root) = self.records.iter().find(|r| r.parent.is_none()) {
                return Err(semantic(
                    line,
                    format!("second root `{id}`; `{}` is already the root", root.id),
                ));
            }
        }
        self.point_line.insert(id, line);
        self.records.push(record);
        Ok(())
    }

    fn ideal(&mut self, line: usize, toks: &[Token<'_>], end: usize) -> Result<()> {
        if let Some((first, _)) = &self.ideal {
            return Err(semantic(line, format!("second `ideal` line (first on line {first})")));
        }
        if toks.len() < 2 {
            return Err(syntax(line, end, "expected `<id>=<int>`"));
        }
        let mut weights: Vec<(String, Int)> = Vec::new();
        for t in &toks[1..] {
            let Some((id, w)) = t.text.split_once('=') else {
                return Err(syntax(line, t.column, format!("expected `<id>=<int>`, found `{}`", t.text)));
            };
            if !is_identifier(id) {
                return Err(syntax(line, t.column, format!("`{id}` is not a valid point id")));
            }
            let w: Int = w.parse().map_err(|_| {
                syntax(line, t.column + id.chars().count() + 1, format!("`{w}` is not an integer"))
            })?;
            self.declared(line, id)?;
            if weights.iter().any(|(x, _)| x == id) {
                return Err(semantic(line, format!("point `{id}` weighted twice")));
            }
            weights.push((id.to_string(), w));
        }
        self.ideal = Some((line, weights));
        Ok(())
    }

    fn branch(&mut self, line: usize, toks: &[Token<'_>], end: usize) -> Result<()> {
        let name = self.identifier(line, toks.get(1), "branch name", end)?;
        Self::keyword(line, toks.get(2), "coeff", end)?;
        let k = match toks.get(3) {
            None => return Err(syntax(line, end, "expected a coefficient")),
            Some(t) => match t.text.parse::<u64>() {
                Ok(k) if k > 0 => k,
                _ => {
                    return Err(syntax(
                        line,
                        t.column,
                        format!("coefficient `{}` is not a positive integer", t.text),
                    ))
                }
            },
        };
        Self::keyword(line, toks.get(4), "chain", end)?;
        if toks.len() < 6 {
            return Err(syntax(line, end, "expected at least one point in the chain"));
        }
        let mut chain = Vec::new();
        for t in &toks[5..] {
            let id = self.identifier(line, Some(t), "point id", end)?;
            self.declared(line, &id)?;
            chain.push(id);
        }
        self.branches.push((line, name, k, chain));
        Ok(())
    }

    fn finish(self) -> Result<Scene> {
        if self.records.is_empty() {
            return Err(semantic(1, "the scene declares no points"));
        }
        if let Some(v) = validate_tree(&self.records).into_iter().next() {
            let line = self.point_line.get(&v.point).copied().unwrap_or(1);
            return Err(semantic(line, v.to_string()));
        }
        let tree = Arc::new(ClusterTree::new(&self.records)?);
        let ideal = match self.ideal {
            None => None,
            Some((line, weights)) => {
                let mut nu = vec![Int::zero(); tree.len()];
                for (id, w) in weights {
                    nu[tree.require(&id)?] = w;
                }
                Some(WeightedCluster::new(tree.clone(), nu).map_err(|e| semantic(line, e.to_string()))?)
            }
        };
        // name, first line, branches with coefficients
        let mut grouped: Vec<CurveLines> = Vec::new();
        for (line, name, k, ids) in self.branches {
            let chain = ids.iter().map(|id| tree.require(id)).collect::<Result<Vec<_>>>()?;
            let branch = Branch {
                name: name.clone(),
                chain,
            };
            // validate each branch on its own line
            Curve::new(tree.clone(), vec![(branch.clone(), k)]).map_err(|e| semantic(line, e.to_string()))?;
            match grouped.iter_mut().find(|(n, _, _)| *n == name) {
                Some((_, _, bs)) => bs.push((branch, k)),
                None => grouped.push((name, line, vec![(branch, k)])),
            }
        }
        let curves = grouped
            .into_iter()
            .map(|(name, line, bs)| {
                Curve::new(tree.clone(), bs)
                    .map(|c| (name, c))
                    .map_err(|e| semantic(line, e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Scene {
            tree,
            ideal,
            curves,
            metadata: self.metadata,
        })
    }
}

type CurveLines = (String, usize, Vec<(Branch, u64)>);

pub fn parse_scene(text: &str) -> Result<Scene> {
    let mut parser = Parser {
        records: Vec::new(),
        point_line: HashMap::new(),
        ideal: None,
        branches: Vec::new(),
        metadata: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let (body, comment) = match raw.split_once('#') {
            Some((b, c)) => (b, Some(c)),
            None => (raw, None),
        };
        if let Some(c) = comment {
            parser.metadata.push(c.trim().to_string());
        }
        let toks = tokens(body);
        let end = body.trim_end().chars().count() + 1;
        let Some(head) = toks.first() else { continue };
        match head.text {
            "point" => parser.point(line, &toks, end)?,
            "ideal" => parser.ideal(line, &toks, end)?,
            "branch" => parser.branch(line, &toks, end)?,
            other => {
                return Err(syntax(
                    line,
                    head.column,
                    format!("unknown directive `{other}`; expected `point`, `ideal` or `branch`"),
                ))
            }
        }
    }
    parser.finish()
}

/// Canonical text: comments, points in tree order, the ideal's nonzero
/// weights, then branches grouped by curve.
pub fn serialize_scene(scene: &Scene) -> String {
    let mut out = String::new();
    for m in &scene.metadata {
        if m.is_empty() {
            out.push_str("#\n");
        } else {
            let _ = writeln!(out, "# {m}");
        }
    }
    for r in scene.tree.records() {
        match (&r.parent, &r.satellite_of) {
            (None, _) => {
                let _ = writeln!(out, "point {}", r.id);
            }
            (Some(p), None) => {
                let _ = writeln!(out, "point {} parent {p}", r.id);
            }
            (Some(p), Some(s)) => {
                let _ = writeln!(out, "point {} parent {p} sat {s}", r.id);
            }
        }
    }
    if let Some(ideal) = &scene.ideal {
        let nu = ideal.multiplicities();
        let mut parts: Vec<String> = nu
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(p, w)| format!("{}={w}", scene.tree.id(p)))
            .collect();
        if parts.is_empty() {
            parts.push(format!("{}=0", scene.tree.id(0)));
        }
        let _ = writeln!(out, "ideal {}", parts.join(" "));
    }
    for (name, c) in &scene.curves {
        for (i, (_, k)) in c.branches().iter().enumerate() {
            let _ = writeln!(out, "branch {name} coeff {k} chain {}", c.chain_ids(i).join(" "));
        }
    }
    out
}
