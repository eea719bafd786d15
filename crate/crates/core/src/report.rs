//! Deterministic reports for every batch command, in a human-readable text
//! form and a line-based `key=value` record form.

use std::fmt::Display;

use num_traits::Zero;

use crate::cluster::WeightedCluster;
use crate::curve::{noether_pairing, Curve};
use crate::error::{Error, Result};
use crate::flags::{build_default_flag, build_flag, companion_cluster, Flag};
use crate::invariants::{delta_cartier_case, delta_of_flag, mult_at_q, semigroup_at_q};
use crate::linalg::{format_rational, Int, Rational};
use crate::principality::{
    attachment, intersection_on_x, is_cartier, local_principality, Attachment,
};
use crate::scene::Scene;
use crate::surface::{build_surface, zariski_factorization, SurfaceModel};
use crate::tree::ClusterTree;
use crate::unloading::{partial_unload, FixedSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Records,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn extend_prefixed(&mut self, prefix: &str, other: Report) {
        for (k, v) in other.entries {
            self.entries.push((format!("{prefix}.{k}"), v));
        }
    }

    pub fn extend(&mut self, other: Report) {
        self.entries.extend(other.entries);
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Records => self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect(),
            Format::Text => {
                let width = self.entries.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                self.entries
                    .iter()
                    .map(|(k, v)| format!("{k:<width$}  {}\n", if v.is_empty() { "-" } else { v }))
                    .collect()
            }
        }
    }
}

pub fn join_ints(xs: &[Int]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn join_rationals(xs: &[Rational]) -> String {
    xs.iter().map(format_rational).collect::<Vec<_>>().join(",")
}

pub fn join_ids(tree: &ClusterTree, ps: &[usize]) -> String {
    ps.iter().map(|&p| tree.id(p)).collect::<Vec<_>>().join(",")
}

fn cluster_entries(r: &mut Report, prefix: &str, wc: &WeightedCluster) {
    r.push(format!("{prefix}nu"), join_ints(wc.multiplicities()));
    r.push(format!("{prefix}values"), join_ints(wc.values()));
    r.push(format!("{prefix}excesses"), join_ints(wc.excesses()));
}

pub fn surface_of(scene: &Scene) -> Result<SurfaceModel> {
    build_surface(&scene.ideal_cluster()?)
}

pub fn validate_report(scene: &Scene) -> Result<Report> {
    let t = &scene.tree;
    let mut r = Report::new();
    r.push("points", t.len());
    r.push("ids", t.ids().join(","));
    let satellites: Vec<usize> = (0..t.len()).filter(|&p| !t.is_free(p)).collect();
    r.push("satellites", join_ids(t, &satellites));
    match &scene.ideal {
        None => r.push("ideal", "none"),
        Some(ideal) => {
            r.push("ideal.nu", join_ints(ideal.multiplicities()));
            r.push("ideal.consistent", ideal.is_consistent());
            let support = ideal.support()?;
            r.push("ideal.support", support.tree().ids().join(","));
            r.push("ideal.strictly_consistent", support.is_strictly_consistent());
        }
    }
    let names: Vec<&str> = scene.curves.iter().map(|(n, _)| n.as_str()).collect();
    r.push("curves", names.join(","));
    for (name, c) in &scene.curves {
        r.push(format!("curve.{name}.branches"), c.branches().len());
        r.push(format!("curve.{name}.e"), join_ints(&c.multiplicities()));
    }
    Ok(r)
}

pub fn unload_report(scene: &Scene, fixed: &[String]) -> Result<Report> {
    let ideal = scene.require_ideal()?;
    let fixed = FixedSet::from_ids(&scene.tree, fixed)?;
    let (out, trace) = partial_unload(ideal, &fixed)?;
    let mut r = Report::new();
    r.push("fixed", join_ids(&scene.tree, &fixed.indices()));
    cluster_entries(&mut r, "input.", ideal);
    r.push("steps", trace.steps.len());
    for (i, (p, n)) in trace.steps.iter().enumerate() {
        r.push(format!("step.{}", i + 1), format!("{}:{n}", scene.tree.id(*p)));
    }
    r.push("displacement", join_ints(&trace.displacement()));
    cluster_entries(&mut r, "output.", &out);
    r.push("output.consistent", out.is_consistent());
    r.push("output.codimension", out.codimension());
    Ok(r)
}

pub fn factorize_report(scene: &Scene) -> Result<Report> {
    let k = scene.ideal_cluster()?;
    let factors = zariski_factorization(&k)?;
    let mut r = Report::new();
    let t = k.tree();
    r.push("factors", factors.len());
    for (p, e) in &factors {
        r.push(format!("factor.{}", t.id(*p)), e);
    }
    let s = build_surface(&k)?;
    for (p, _) in &factors {
        r.push(format!("simple.{}.values", t.id(*p)), join_ints(s.simple_values(*p)));
    }
    Ok(r)
}

fn singularity_entries(r: &mut Report, s: &SurfaceModel) {
    let t = s.tree();
    r.push("singularities", s.singularities().len());
    for q in s.singularities() {
        let key = |f: &str| format!("sing.{}.{f}", q.label);
        r.push(key("t_q"), join_ids(t, &q.t_q));
        r.push(key("o_q"), t.id(q.o_q));
        r.push(key("nu_q"), join_ints(&q.nu_q));
        r.push(key("b_q"), join_ids(t, &q.b_q));
        r.push(key("multiplicity"), q.multiplicity);
        r.push(key("kplus"), join_ids(t, &s.kplus_at(q)));
    }
}

pub fn surface_report(scene: &Scene) -> Result<Report> {
    let s = surface_of(scene)?;
    let t = s.tree();
    let k = s.cluster();
    let mut r = Report::new();
    r.push("k", t.ids().join(","));
    r.push("nu", join_ints(k.multiplicities()));
    r.push("kplus", join_ids(t, s.kplus()));
    r.push("codimension", k.codimension());
    r.push("self_intersection", k.self_intersection());
    for &u in s.kplus() {
        r.push(format!("l.{}", t.id(u)), join_ints(&s.l_vector(u)));
    }
    singularity_entries(&mut r, &s);
    Ok(r)
}

pub fn cartier_report(scene: &Scene, curve: &str) -> Result<Report> {
    let s = surface_of(scene)?;
    let c = scene.curve(curve)?;
    cartier_entries(&s, c)
}

fn cartier_entries(s: &SurfaceModel, c: &Curve) -> Result<Report> {
    let v = is_cartier(s, c)?;
    let t = s.tree();
    let mut r = Report::new();
    r.push("cartier", v.cartier);
    r.push("kplus", join_ids(t, s.kplus()));
    r.push("a", join_rationals(&v.coefficients));
    r.push("criterion.coefficients", v.by_coefficients);
    r.push("criterion.ideal_cluster", v.by_ideal_cluster);
    r.push("criterion.mumford", v.by_mumford);
    r.push("qc.nu", join_ints(v.qc.multiplicities()));
    r.push("qc.dicritical", join_ids(t, &v.qc.dicritical_points()));
    r.push("mumford.points", join_ids(&v.mumford.tree, &v.mumford.points));
    r.push("mumford.coefficients", join_rationals(&v.mumford.coefficients));
    for (i, _) in c.branches().iter().enumerate() {
        let at = match attachment(s, c, i)? {
            Attachment::Smooth => "smooth".to_string(),
            Attachment::Singular(j) => s.singularities()[j].label.clone(),
        };
        r.push(format!("branch.{}.meets", i + 1), at);
    }
    Ok(r)
}

pub fn local_report(scene: &Scene, curve: &str, sing: &str) -> Result<Report> {
    let s = surface_of(scene)?;
    let c = scene.curve(curve)?;
    let q = s.singularity(sing)?;
    let v = local_principality(&s, c, q)?;
    let t = s.tree();
    let mut r = Report::new();
    r.push("sing", &q.label);
    r.push("principal", v.principal);
    let branches: Vec<String> = v.branches.iter().map(|b| (b + 1).to_string()).collect();
    r.push("branches", branches.join(","));
    r.push("support", join_ids(t, &v.support));
    r.push("target", join_ints(&v.target));
    r.push(
        "coefficients",
        v.coefficients.as_deref().map(join_rationals).unwrap_or_else(|| "none".into()),
    );
    r.push("mult", mult_at_q(&s, c, q)?);
    Ok(r)
}

/// Parses `p=m,...` into excesses on `K_+`; unlisted dicritical points get 0.
pub fn parse_excess(surface: &SurfaceModel, spec: &str) -> Result<Vec<Int>> {
    let t = surface.tree();
    let mut m = vec![Int::zero(); surface.kplus().len()];
    for part in spec.split(',').filter(|s| !s.is_empty()) {
        let (id, x) = part
            .split_once('=')
            .ok_or_else(|| Error::Precondition(format!("expected `<id>=<int>`, found `{part}`")))?;
        let p = t.require(id)?;
        let i = surface
            .kplus()
            .iter()
            .position(|&u| u == p)
            .ok_or_else(|| Error::Precondition(format!("`{id}` is not a dicritical point")))?;
        m[i] = x
            .parse()
            .map_err(|_| Error::Precondition(format!("`{x}` is not an integer")))?;
    }
    Ok(m)
}

fn flag_entries(r: &mut Report, s: &SurfaceModel, f: &Flag) {
    let t = f.tree();
    r.push("tree", t.ids().join(","));
    r.push("kplus", join_ids(s.tree(), s.kplus()));
    r.push("p", join_ids(t, &f.extended.p_points));
    r.push("m", join_ints(&f.m));
    r.push("n", f.n);
    r.push("omega", join_ints(&f.omega));
    r.push("n_p", join_ints(&f.n_p));
    for (i, c) in f.clusters.iter().enumerate() {
        r.push(format!("t.{i}"), join_ints(c.multiplicities()));
    }
    r.push("pairings", join_ints(&f.curve_pairings()));
    r.push("delta", delta_of_flag(f));
}

pub fn flag_report(scene: &Scene, curve: &str, excess: Option<&str>) -> Result<Report> {
    let s = surface_of(scene)?;
    let c = scene.curve(curve)?;
    let f = match excess {
        Some(spec) => build_flag(&s, c, &parse_excess(&s, spec)?)?,
        None => build_default_flag(&s, c)?,
    };
    let mut r = Report::new();
    flag_entries(&mut r, &s, &f);
    match companion_cluster(&f) {
        Ok(comp) => r.push("companion", join_ints(comp.multiplicities())),
        Err(Error::Precondition(_)) => r.push("companion", "none"),
        Err(e) => return Err(e),
    }
    Ok(r)
}

pub fn delta_report(scene: &Scene, curve: &str) -> Result<Report> {
    let s = surface_of(scene)?;
    let c = scene.curve(curve)?;
    let mut r = Report::new();
    r.push("cartier", is_cartier(&s, c)?.cartier);
    r.extend(delta_entries(&s, c)?);
    Ok(r)
}

fn delta_entries(s: &SurfaceModel, c: &Curve) -> Result<Report> {
    let f = build_default_flag(s, c)?;
    let mut r = Report::new();
    r.push("delta", delta_of_flag(&f));
    if is_cartier(s, c)?.cartier {
        r.push("delta.cartier", delta_cartier_case(s, c)?);
    }
    for q in s.singularities() {
        r.push(format!("mult.{}", q.label), mult_at_q(s, c, q)?);
    }
    Ok(r)
}

pub fn semigroup_report(scene: &Scene, branch: &str) -> Result<Report> {
    let s = surface_of(scene)?;
    let c = scene.curve(branch)?;
    let sg = semigroup_at_q(&s, c)?;
    let mut r = Report::new();
    let meets = match attachment(&s, c, 0)? {
        Attachment::Smooth => "smooth".to_string(),
        Attachment::Singular(j) => s.singularities()[j].label.clone(),
    };
    r.push("meets", meets);
    let alphas: Vec<String> = sg.alphas.iter().map(|a| a.to_string()).collect();
    r.push("alpha", alphas.join(","));
    let elems: Vec<String> = sg
        .semigroup
        .elements_below_conductor()
        .iter()
        .map(|a| a.to_string())
        .collect();
    r.push("elements", elems.join(","));
    r.push("conductor", sg.semigroup.conductor());
    r.push("gaps", sg.semigroup.gaps().len());
    r.push("delta", &sg.delta);
    r.push("symmetric", sg.semigroup.is_symmetric());
    Ok(r)
}

pub fn intersect_report(scene: &Scene, a: &str, b: &str) -> Result<Report> {
    let s = surface_of(scene)?;
    let ca = scene.curve(a)?;
    let cb = scene.curve(b)?;
    let mut r = Report::new();
    r.push("noether", noether_pairing(ca, cb)?);
    r.push("on_x", format_rational(&intersection_on_x(&s, ca, cb)?));
    Ok(r)
}

/// Everything computable from the scene: structure, surface, factorization,
/// and per-curve principality and delta.
pub fn full_report(scene: &Scene) -> Result<Report> {
    let mut r = Report::new();
    r.extend_prefixed("scene", validate_report(scene)?);
    if scene.ideal.is_none() {
        return Ok(r);
    }
    r.extend_prefixed("surface", surface_report(scene)?);
    r.extend_prefixed("factorize", factorize_report(scene)?);
    let s = surface_of(scene)?;
    for (name, c) in &scene.curves {
        r.extend_prefixed(&format!("curve.{name}"), cartier_entries(&s, c)?);
        match delta_entries(&s, c) {
            Ok(d) => r.extend_prefixed(&format!("curve.{name}"), d),
            Err(e) if !e.is_internal() => r.push(format!("curve.{name}.delta"), format!("unavailable: {e}")),
            Err(e) => return Err(e),
        }
    }
    Ok(r)
}
