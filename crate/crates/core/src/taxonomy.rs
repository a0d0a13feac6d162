//! Category posets as rooted DAGs and their unfolding into pipelines.
//!
//! A [`Taxonomy`] is built once through [`Taxonomy::validate`] and is
//! immutable afterwards. Covering edges optionally carry the conditional
//! probability `f = p(child | parent)` used by the pipeline model.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of a category. Non-empty, not whitespace-only, and free of `/`
/// (slash is the pipeline path separator).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CategoryId(String);

impl CategoryId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.trim().is_empty() || name.contains('/') {
            return Err(Error::InvalidCategoryName(name));
        }
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for CategoryId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Self::new(value)
    }
}

impl From<CategoryId> for String {
    fn from(value: CategoryId) -> Self {
        value.0
    }
}

impl fmt::Display for CategoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// How structural queries evaluate the covering relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Indicator semantics: 1 for covering edges, 0 otherwise.
    Crisp,
    /// Edge conditional probabilities; missing values are an error.
    Probabilistic,
}

/// Unvalidated covering edge `child ≺ parent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEdge {
    pub child: String,
    pub parent: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
}

impl RawEdge {
    pub fn new(child: &str, parent: &str, f: Option<f64>) -> Self {
        Self {
            child: child.to_owned(),
            parent: parent.to_owned(),
            f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Link {
    node: usize,
    f: Option<f64>,
}

/// Validated rooted DAG of categories.
#[derive(Debug, Clone, PartialEq)]
pub struct Taxonomy {
    names: Vec<CategoryId>,
    index: BTreeMap<CategoryId, usize>,
    parents: Vec<Vec<Link>>,
    children: Vec<Vec<Link>>,
    root: usize,
}

/// Ancestor, offspring and children sets of one category.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RelativeSets {
    pub ancestors: BTreeSet<CategoryId>,
    pub offspring: BTreeSet<CategoryId>,
    pub children: BTreeSet<CategoryId>,
}

impl Taxonomy {
    /// Builds a taxonomy, enforcing the poset constraints and a unique root.
    ///
    /// `declared_root`, when given, must coincide with the only category
    /// that has no parent.
    pub fn validate<S: AsRef<str>>(
        categories: &[S],
        edges: &[RawEdge],
        declared_root: Option<&str>,
    ) -> Result<Self> {
        let mut names = Vec::with_capacity(categories.len());
        let mut index = BTreeMap::new();
        for raw in categories {
            let id = CategoryId::new(raw.as_ref())?;
            if index.insert(id.clone(), names.len()).is_some() {
                return Err(Error::DuplicateCategory(id.0));
            }
            names.push(id);
        }
        if names.is_empty() {
            return Err(Error::NoRoot);
        }

        let lookup = |name: &str| -> Result<usize> {
            CategoryId::new(name)
                .ok()
                .and_then(|id| index.get(&id).copied())
                .ok_or_else(|| Error::UnknownCategory(name.to_owned()))
        };

        let n = names.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for edge in edges {
            let c = lookup(&edge.child)?;
            let p = lookup(&edge.parent)?;
            if c == p {
                return Err(Error::SelfLoop(edge.child.clone()));
            }
            if !seen.insert((c, p)) {
                return Err(Error::DuplicateEdge {
                    child: edge.child.clone(),
                    parent: edge.parent.clone(),
                });
            }
            if let Some(f) = edge.f {
                if !(0.0..=1.0).contains(&f) {
                    return Err(Error::OutOfRangeProbability {
                        location: format!("edge {} -> {}", edge.child, edge.parent),
                        value: f,
                        reason: "conditional probability must lie in [0,1]".into(),
                    });
                }
            }
            parents[c].push(Link { node: p, f: edge.f });
            children[p].push(Link { node: c, f: edge.f });
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_by(|a, b| names[a.node].cmp(&names[b.node]));
        }

        // Kahn's algorithm over parent -> child.
        let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut visited = 0;
        while let Some(u) = queue.pop_front() {
            visited += 1;
            for link in &children[u] {
                indegree[link.node] -= 1;
                if indegree[link.node] == 0 {
                    queue.push_back(link.node);
                }
            }
        }
        if visited < n {
            let culprit = (0..n)
                .filter(|&i| indegree[i] > 0)
                .map(|i| names[i].clone())
                .min()
                .expect("unvisited node exists");
            return Err(Error::CycleDetected(culprit.0));
        }

        let roots: Vec<usize> = (0..n).filter(|&i| parents[i].is_empty()).collect();
        let root = match roots.as_slice() {
            [] => return Err(Error::NoRoot),
            [only] => *only,
            many => {
                let mut listed: Vec<String> = many.iter().map(|&i| names[i].0.clone()).collect();
                listed.sort();
                return Err(Error::MultipleRoots(listed));
            }
        };
        if let Some(declared) = declared_root {
            let d = lookup(declared)?;
            if d != root {
                return Err(Error::RootMismatch {
                    declared: declared.to_owned(),
                    found: names[root].0.clone(),
                });
            }
        }

        let taxonomy = Self {
            names,
            index,
            parents,
            children,
            root,
        };
        let reach = taxonomy.descendants_of(root);
        if let Some(i) = (0..n).find(|&i| i != root && !reach.contains(&i)) {
            return Err(Error::Unreachable(taxonomy.names[i].0.clone()));
        }
        Ok(taxonomy)
    }

    pub fn root(&self) -> &CategoryId {
        &self.names[self.root]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Categories in declaration order.
    pub fn categories(&self) -> &[CategoryId] {
        &self.names
    }

    pub fn contains(&self, name: &str) -> bool {
        self.id(name).is_ok()
    }

    /// Edges as `(child, parent, f)`, sorted by child then parent.
    pub fn edges(&self) -> Vec<(CategoryId, CategoryId, Option<f64>)> {
        let mut out = Vec::new();
        for (c, links) in self.parents.iter().enumerate() {
            for link in links {
                out.push((self.names[c].clone(), self.names[link.node].clone(), link.f));
            }
        }
        out.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        out
    }

    pub fn is_leaf(&self, name: &str) -> Result<bool> {
        Ok(self.children[self.id(name)?].is_empty())
    }

    /// Number of covering edges.
    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// True when some category has more than one parent.
    pub fn is_dag(&self) -> bool {
        self.parents.iter().any(|p| p.len() > 1)
    }

    pub fn parent_count(&self, name: &str) -> Result<usize> {
        Ok(self.parents[self.id(name)?].len())
    }

    fn id(&self, name: &str) -> Result<usize> {
        CategoryId::new(name)
            .ok()
            .and_then(|id| self.index.get(&id).copied())
            .ok_or_else(|| Error::UnknownCategory(name.to_owned()))
    }

    fn link(&self, child: usize, parent: usize) -> Option<Link> {
        self.parents[child]
            .iter()
            .copied()
            .find(|l| l.node == parent)
    }

    fn descendants_of(&self, start: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<usize> = self.children[start].iter().map(|l| l.node).collect();
        while let Some(u) = stack.pop() {
            if out.insert(u) {
                stack.extend(self.children[u].iter().map(|l| l.node));
            }
        }
        out
    }

    fn ancestors_of(&self, start: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<usize> = self.parents[start].iter().map(|l| l.node).collect();
        while let Some(u) = stack.pop() {
            if out.insert(u) {
                stack.extend(self.parents[u].iter().map(|l| l.node));
            }
        }
        out
    }

    fn to_names(&self, ids: impl IntoIterator<Item = usize>) -> BTreeSet<CategoryId> {
        ids.into_iter().map(|i| self.names[i].clone()).collect()
    }

    /// Ancestors, offspring and immediate children of `r`.
    pub fn relative_sets(&self, r: &str) -> Result<RelativeSets> {
        let i = self.id(r)?;
        Ok(RelativeSets {
            ancestors: self.to_names(self.ancestors_of(i)),
            offspring: self.to_names(self.descendants_of(i)),
            children: self.to_names(self.children[i].iter().map(|l| l.node)),
        })
    }

    /// Characteristic function of the covering relation `b ≺ a`.
    pub fn covering_char(&self, b: &str, a: &str, mode: Mode) -> Result<f64> {
        let (bi, ai) = (self.id(b)?, self.id(a)?);
        match (self.link(bi, ai), mode) {
            (None, _) => Ok(0.0),
            (Some(_), Mode::Crisp) => Ok(1.0),
            (Some(Link { f: Some(f), .. }), Mode::Probabilistic) => Ok(f),
            (Some(Link { f: None, .. }), Mode::Probabilistic) => {
                Err(Error::MissingEdgeProbability {
                    child: b.to_owned(),
                    parent: a.to_owned(),
                })
            }
        }
    }

    /// Characteristic function of well-formed strings: the product of the
    /// covering characteristic along consecutive pairs. The empty string and
    /// single categories evaluate to 1.
    pub fn wfs_char<S: AsRef<str>>(&self, s: &[S], mode: Mode) -> Result<f64> {
        for c in s {
            self.id(c.as_ref())?;
        }
        let mut value = 1.0;
        for pair in s.windows(2) {
            let step = self.covering_char(pair[1].as_ref(), pair[0].as_ref(), mode)?;
            if step == 0.0 && mode == Mode::Crisp {
                return Ok(0.0);
            }
            value *= step;
        }
        Ok(value)
    }

    /// All rooted well-formed strings in lexicographic order of their
    /// category sequences. With `leaf_only`, only strings ending at a leaf.
    pub fn enumerate_pipelines(&self, leaf_only: bool) -> Vec<Pipeline> {
        let mut out = Vec::new();
        let mut path = vec![self.root];
        let mut fs = vec![Some(1.0)];
        self.unfold(&mut path, &mut fs, leaf_only, &mut out);
        out.sort_by(|a, b| a.nodes.cmp(&b.nodes));
        out
    }

    fn unfold(
        &self,
        path: &mut Vec<usize>,
        fs: &mut Vec<Option<f64>>,
        leaf_only: bool,
        out: &mut Vec<Pipeline>,
    ) {
        let last = *path.last().expect("non-empty path");
        if !leaf_only || self.children[last].is_empty() {
            out.push(Pipeline {
                nodes: path.iter().map(|&i| self.names[i].clone()).collect(),
                fs: fs.clone(),
            });
        }
        for link in &self.children[last] {
            path.push(link.node);
            fs.push(link.f);
            self.unfold(path, fs, leaf_only, out);
            path.pop();
            fs.pop();
        }
    }

    /// Resolves a slash-joined path such as `A/B/D` into a pipeline.
    pub fn pipeline(&self, path: &str) -> Result<Pipeline> {
        let parts: Vec<&str> = path.split('/').collect();
        self.pipeline_from(&parts).map_err(|e| match e {
            Error::NotAPipeline(_) => Error::NotAPipeline(path.to_owned()),
            other => other,
        })
    }

    pub fn pipeline_from<S: AsRef<str>>(&self, nodes: &[S]) -> Result<Pipeline> {
        let joined = || {
            nodes
                .iter()
                .map(|s| s.as_ref())
                .collect::<Vec<_>>()
                .join("/")
        };
        let ids = nodes
            .iter()
            .map(|s| self.id(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        if ids.first() != Some(&self.root) {
            return Err(Error::NotAPipeline(joined()));
        }
        let mut fs = vec![Some(1.0)];
        for pair in ids.windows(2) {
            match self.link(pair[1], pair[0]) {
                Some(link) => fs.push(link.f),
                None => return Err(Error::NotAPipeline(joined())),
            }
        }
        Ok(Pipeline {
            nodes: ids.iter().map(|&i| self.names[i].clone()).collect(),
            fs,
        })
    }

    /// Checks that every label's ancestors are also present.
    pub fn check_label_consistency(&self, labels: &LabelSet) -> Result<LabelConsistency> {
        let mut violations = BTreeMap::new();
        for label in &labels.0 {
            let i = self.id(label.as_str())?;
            let missing: BTreeSet<CategoryId> = self
                .to_names(self.ancestors_of(i))
                .into_iter()
                .filter(|a| !labels.0.contains(a))
                .collect();
            if !missing.is_empty() {
                violations.insert(label.clone(), missing);
            }
        }
        Ok(LabelConsistency { violations })
    }

    /// Instances of `a` or of any of its offspring.
    pub fn domain<'l>(&self, labeling: &'l InstanceLabeling, a: &str) -> Result<BTreeSet<&'l str>> {
        let ai = self.id(a)?;
        let mut accepted = self.descendants_of(ai);
        accepted.insert(ai);
        let mut out = BTreeSet::new();
        for (instance, labels) in &labeling.instances {
            for label in labels {
                if accepted.contains(&self.id(label.as_str())?) {
                    out.insert(instance.as_str());
                    break;
                }
            }
        }
        Ok(out)
    }

    /// Membership of `instance` in the relevance set of `b` given `a`:
    /// the domain of `a` when `b ≤ a`, empty otherwise.
    pub fn relevance(
        &self,
        labeling: &InstanceLabeling,
        instance: &str,
        b: &str,
        a: &str,
    ) -> Result<bool> {
        let (bi, ai) = (self.id(b)?, self.id(a)?);
        if !labeling.instances.contains_key(instance) {
            return Err(Error::UnknownInstance(instance.to_owned()));
        }
        let b_le_a = bi == ai || self.descendants_of(ai).contains(&bi);
        if !b_le_a {
            return Ok(false);
        }
        Ok(self.domain(labeling, a)?.contains(instance))
    }

    pub(crate) fn parent_names(&self, name: &CategoryId) -> Vec<CategoryId> {
        let i = self.index[name];
        self.parents[i]
            .iter()
            .map(|l| self.names[l.node].clone())
            .collect()
    }

    /// Categories in a parents-before-children order.
    pub(crate) fn topological_order(&self) -> Vec<CategoryId> {
        let n = self.names.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut queue = VecDeque::from([self.root]);
        let mut order = Vec::with_capacity(n);
        while let Some(u) = queue.pop_front() {
            order.push(self.names[u].clone());
            for link in &self.children[u] {
                indegree[link.node] -= 1;
                if indegree[link.node] == 0 {
                    queue.push_back(link.node);
                }
            }
        }
        order
    }
}

/// A rooted well-formed string `c_0 … c_L` with the edge probabilities
/// `f_0 = 1, f_1 … f_L` read off the traversed covering edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    nodes: Vec<CategoryId>,
    fs: Vec<Option<f64>>,
}

impl Pipeline {
    pub fn nodes(&self) -> &[CategoryId] {
        &self.nodes
    }

    /// Number of classifiers below the root.
    pub fn depth(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Slash-joined path, e.g. `A/B/D`.
    pub fn path(&self) -> String {
        self.nodes
            .iter()
            .map(CategoryId::as_str)
            .collect::<Vec<_>>()
            .join("/")
    }

    /// Raw edge probabilities, `None` where the taxonomy gives none.
    pub fn edge_probabilities(&self) -> &[Option<f64>] {
        &self.fs
    }

    /// The chain `f_0 = 1, f_1 … f_L`; fails on a missing edge probability.
    pub fn conditional_profile(&self) -> Result<ConditionalProfile> {
        let mut fs = Vec::with_capacity(self.fs.len());
        for (k, f) in self.fs.iter().enumerate() {
            match f {
                Some(v) => fs.push(*v),
                None => {
                    return Err(Error::MissingEdgeProbability {
                        child: self.nodes[k].0.clone(),
                        parent: self.nodes[k - 1].0.clone(),
                    })
                }
            }
        }
        Ok(ConditionalProfile(fs))
    }

    /// The subpipeline `c_0 … c_k`.
    pub fn prefix(&self, k: usize) -> Pipeline {
        Pipeline {
            nodes: self.nodes[..=k].to_vec(),
            fs: self.fs[..=k].to_vec(),
        }
    }

    /// Prefix order: `self ≤ other` iff `other` extends `self`.
    pub fn leq(&self, other: &Pipeline) -> bool {
        other.nodes.starts_with(&self.nodes)
    }
}

/// Pipeline partial order (prefix relation).
pub fn pipeline_leq(p1: &Pipeline, p2: &Pipeline) -> bool {
    p1.leq(p2)
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.path())
    }
}

/// Conditional probabilities `f_0 = 1, f_1 … f_L` along a pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ConditionalProfile(Vec<f64>);

impl ConditionalProfile {
    /// Builds a profile from `f_1 … f_L`; `f_0 = 1` is prepended.
    pub fn from_steps(steps: &[f64]) -> Result<Self> {
        for (k, &f) in steps.iter().enumerate() {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::OutOfRangeProbability {
                    location: format!("f_{}", k + 1),
                    value: f,
                    reason: "conditional probability must lie in [0,1]".into(),
                });
            }
        }
        let mut fs = Vec::with_capacity(steps.len() + 1);
        fs.push(1.0);
        fs.extend_from_slice(steps);
        Ok(Self(fs))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// `F_k`, the probability of traversing the first `k` steps.
    pub fn traversal(&self, k: usize) -> f64 {
        self.0[..=k].iter().product()
    }
}

/// Categories assigned to one instance.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelSet(pub BTreeSet<CategoryId>);

impl LabelSet {
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        names
            .iter()
            .map(|n| CategoryId::new(n.as_ref()))
            .collect::<Result<_>>()
            .map(Self)
    }
}

/// Outcome of a hierarchical-consistency check.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelConsistency {
    /// Label -> ancestors missing from the set.
    pub violations: BTreeMap<CategoryId, BTreeSet<CategoryId>>,
}

impl LabelConsistency {
    pub fn is_consistent(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn missing(&self) -> BTreeSet<CategoryId> {
        self.violations.values().flatten().cloned().collect()
    }
}

/// Instance ids mapped to their deepest true categories.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InstanceLabeling {
    pub instances: BTreeMap<String, BTreeSet<CategoryId>>,
}

impl InstanceLabeling {
    pub fn insert<S: AsRef<str>>(&mut self, instance: &str, labels: &[S]) -> Result<()> {
        let labels = labels
            .iter()
            .map(|n| CategoryId::new(n.as_ref()))
            .collect::<Result<_>>()?;
        self.instances.insert(instance.to_owned(), labels);
        Ok(())
    }

    /// Fails if any labeled category is absent from `taxonomy`.
    pub fn check_against(&self, taxonomy: &Taxonomy) -> Result<()> {
        for labels in self.instances.values() {
            for label in labels {
                taxonomy.id(label.as_str())?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3() -> Taxonomy {
        // A; B, C under A; C, D under B.
        Taxonomy::validate(
            &["A", "B", "C", "D"],
            &[
                RawEdge::new("B", "A", Some(0.6)),
                RawEdge::new("C", "A", Some(0.3)),
                RawEdge::new("C", "B", Some(0.5)),
                RawEdge::new("D", "B", Some(0.4)),
            ],
            Some("A"),
        )
        .unwrap()
    }

    fn chain() -> Taxonomy {
        Taxonomy::validate(
            &["A", "B", "D"],
            &[
                RawEdge::new("B", "A", Some(0.8)),
                RawEdge::new("D", "B", Some(0.5)),
            ],
            None,
        )
        .unwrap()
    }

    fn ids(names: &[&str]) -> BTreeSet<CategoryId> {
        names.iter().map(|n| CategoryId::new(*n).unwrap()).collect()
    }

    fn paths(ps: &[Pipeline]) -> Vec<String> {
        ps.iter().map(Pipeline::path).collect()
    }

    #[test]
    fn smallest_branching_tree() {
        let t = Taxonomy::validate(
            &["A", "B", "C"],
            &[RawEdge::new("B", "A", None), RawEdge::new("C", "A", None)],
            None,
        )
        .unwrap();
        assert_eq!(t.root().as_str(), "A");
    }

    #[test]
    fn two_cycle_rejected() {
        let err = Taxonomy::validate(
            &["A", "B"],
            &[RawEdge::new("B", "A", None), RawEdge::new("A", "B", None)],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::CycleDetected(_)));
    }

    #[test]
    fn structural_errors() {
        let e = Taxonomy::validate(&["A", "B"], &[], None).unwrap_err();
        assert_eq!(e, Error::MultipleRoots(vec!["A".into(), "B".into()]));
        let e = Taxonomy::validate(
            &["A", "B"],
            &[RawEdge::new("B", "A", None), RawEdge::new("B", "A", None)],
            None,
        )
        .unwrap_err();
        assert!(matches!(e, Error::DuplicateEdge { .. }));
        let e = Taxonomy::validate(&["A"], &[RawEdge::new("Z", "A", None)], None).unwrap_err();
        assert_eq!(e, Error::UnknownCategory("Z".into()));
        let e = Taxonomy::validate(&["A"], &[RawEdge::new("A", "A", None)], None).unwrap_err();
        assert!(matches!(e, Error::SelfLoop(_)));
        let e = Taxonomy::validate(&["A", " "], &[], None).unwrap_err();
        assert!(matches!(e, Error::InvalidCategoryName(_)));
        let e = Taxonomy::validate(&["A", "B"], &[RawEdge::new("B", "A", Some(1.5))], None)
            .unwrap_err();
        assert!(matches!(e, Error::OutOfRangeProbability { .. }));
        let e = Taxonomy::validate(&["A", "B"], &[RawEdge::new("B", "A", None)], Some("B"))
            .unwrap_err();
        assert!(matches!(e, Error::RootMismatch { .. }));
    }

    #[test]
    fn fig3_is_valid_with_root_a() {
        let t = fig3();
        assert_eq!(t.root().as_str(), "A");
        assert!(t.is_dag());
    }

    #[test]
    fn relative_sets_on_chain_and_fig3() {
        let t = chain();
        assert_eq!(t.relative_sets("D").unwrap().ancestors, ids(&["A", "B"]));
        assert!(t.relative_sets("A").unwrap().ancestors.is_empty());
        assert!(t.relative_sets("D").unwrap().children.is_empty());
        let t = fig3();
        assert_eq!(
            t.relative_sets("A").unwrap().offspring,
            ids(&["B", "C", "D"])
        );
        assert_eq!(t.relative_sets("B").unwrap().children, ids(&["C", "D"]));
        assert_eq!(t.relative_sets("C").unwrap().ancestors, ids(&["A", "B"]));
        assert!(matches!(
            t.relative_sets("Q"),
            Err(Error::UnknownCategory(_))
        ));
    }

    #[test]
    fn covering_characteristic() {
        let t = fig3();
        assert_eq!(t.covering_char("B", "A", Mode::Crisp).unwrap(), 1.0);
        assert_eq!(t.covering_char("D", "A", Mode::Crisp).unwrap(), 0.0);
        for x in ["A", "B", "C", "D"] {
            assert_eq!(t.covering_char(x, x, Mode::Crisp).unwrap(), 0.0);
        }
        assert_eq!(t.covering_char("B", "A", Mode::Probabilistic).unwrap(), 0.6);
        let bare = Taxonomy::validate(&["A", "B"], &[RawEdge::new("B", "A", None)], None).unwrap();
        assert!(matches!(
            bare.covering_char("B", "A", Mode::Probabilistic),
            Err(Error::MissingEdgeProbability { .. })
        ));
    }

    #[test]
    fn well_formed_strings() {
        let t = chain();
        assert_eq!(t.wfs_char(&["A", "B", "D"], Mode::Crisp).unwrap(), 1.0);
        assert_eq!(t.wfs_char::<&str>(&[], Mode::Crisp).unwrap(), 1.0);
        assert_eq!(t.wfs_char(&["D"], Mode::Probabilistic).unwrap(), 1.0);
        assert_eq!(t.wfs_char(&["A", "D"], Mode::Crisp).unwrap(), 0.0);
        assert_eq!(t.wfs_char(&["A", "D"], Mode::Probabilistic).unwrap(), 0.0);
        let expected = 0.8 * 0.5;
        let got = t.wfs_char(&["A", "B", "D"], Mode::Probabilistic).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.4).abs() < 1e-15);
    }

    #[test]
    fn fig3_unfolding() {
        let t = fig3();
        assert_eq!(
            paths(&t.enumerate_pipelines(true)),
            ["A/B/C", "A/B/D", "A/C"]
        );
        assert_eq!(
            paths(&t.enumerate_pipelines(false)),
            ["A", "A/B", "A/B/C", "A/B/D", "A/C"]
        );
        let single = Taxonomy::validate(&["A"], &[], None).unwrap();
        assert_eq!(paths(&single.enumerate_pipelines(false)), ["A"]);
        assert_eq!(paths(&single.enumerate_pipelines(true)), ["A"]);
    }

    #[test]
    fn diamond_pipelines_through_shared_node() {
        let t = Taxonomy::validate(
            &["A", "B", "C", "D"],
            &[
                RawEdge::new("B", "A", None),
                RawEdge::new("C", "A", None),
                RawEdge::new("D", "B", None),
                RawEdge::new("D", "C", None),
            ],
            None,
        )
        .unwrap();
        let through_d: Vec<String> = t
            .enumerate_pipelines(false)
            .iter()
            .filter(|p| p.nodes().last().unwrap().as_str() == "D")
            .map(Pipeline::path)
            .collect();
        assert_eq!(through_d, ["A/B/D", "A/C/D"]);
    }

    #[test]
    fn pipeline_order() {
        let t = fig3();
        let p = |s| t.pipeline(s).unwrap();
        assert!(pipeline_leq(&p("A/B"), &p("A/B/C")));
        assert!(pipeline_leq(&p("A"), &p("A/B/C")));
        assert!(pipeline_leq(&p("A/B/C"), &p("A/B/C")));
        assert!(!pipeline_leq(&p("A/C"), &p("A/B/D")));
        assert!(matches!(t.pipeline("B/D"), Err(Error::NotAPipeline(_))));
        assert!(matches!(t.pipeline("A/D"), Err(Error::NotAPipeline(_))));
    }

    #[test]
    fn pipeline_profile() {
        let t = fig3();
        let p = t.pipeline("A/B/D").unwrap();
        let d = p.conditional_profile().unwrap();
        assert_eq!(d.values(), &[1.0, 0.6, 0.4]);
        assert!((d.traversal(2) - 0.24).abs() < 1e-15);
        assert_eq!(p.prefix(1).path(), "A/B");
    }

    #[test]
    fn label_consistency() {
        let t = chain();
        let ok = t.check_label_consistency(&LabelSet::from_names(&["A", "B", "D"]).unwrap());
        assert!(ok.unwrap().is_consistent());
        let empty = t.check_label_consistency(&LabelSet::default()).unwrap();
        assert!(empty.is_consistent());
        let bad = t
            .check_label_consistency(&LabelSet::from_names(&["A", "D"]).unwrap())
            .unwrap();
        assert!(!bad.is_consistent());
        assert_eq!(bad.missing(), ids(&["B"]));
    }

    #[test]
    fn relevance_sets() {
        let t = chain();
        let mut labeling = InstanceLabeling::default();
        labeling.insert("i1", &["D"]).unwrap();
        labeling.insert("i2", &["B"]).unwrap();
        assert!(t.relevance(&labeling, "i2", "B", "B").unwrap());
        assert!(t.relevance(&labeling, "i1", "D", "B").unwrap());
        // A is not ≤ B.
        assert!(!t.relevance(&labeling, "i1", "A", "B").unwrap());
        assert!(!t.relevance(&labeling, "i2", "D", "D").unwrap());
        assert!(matches!(
            t.relevance(&labeling, "zz", "B", "B"),
            Err(Error::UnknownInstance(_))
        ));
        assert!(matches!(
            t.relevance(&labeling, "i1", "Q", "B"),
            Err(Error::UnknownCategory(_))
        ));
    }
}
