use std::collections::BTreeSet;

use super::VarId;
use crate::error::{Error, Result};

/// Directed acyclic graph over named nodes.
///
/// Parent lists are kept sorted by node index, so the parent order of a node
/// follows the declaration order of the nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    names: Vec<String>,
    parents: Vec<Vec<VarId>>,
    children: Vec<Vec<VarId>>,
    order: Vec<VarId>,
}

/// Kahn's algorithm; among ready nodes the lexicographically smallest name goes first.
pub fn topological_sort(names: &[String], edges: &[(VarId, VarId)]) -> Result<Vec<VarId>> {
    let n = names.len();
    let mut indegree = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for &(p, c) in edges {
        if p >= n || c >= n {
            return Err(Error::Schema(format!("edge ({p}, {c}) references an undeclared node")));
        }
        children[p].push(c);
        indegree[c] += 1;
    }
    let mut ready: BTreeSet<(&str, VarId)> = (0..n)
        .filter(|&i| indegree[i] == 0)
        .map(|i| (names[i].as_str(), i))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(first) = ready.pop_first() {
        let node = first.1;
        order.push(node);
        for &c in &children[node] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert((names[c].as_str(), c));
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n)
            .filter(|&i| indegree[i] > 0)
            .map(|i| names[i].as_str())
            .min()
            .unwrap_or_default();
        return Err(Error::Cycle(stuck.to_string()));
    }
    Ok(order)
}

impl Dag {
    pub fn new(names: Vec<String>, edges: &[(VarId, VarId)]) -> Result<Self> {
        super::check_unique_names(names.iter().map(String::as_str))?;
        let order = topological_sort(&names, edges)?;
        let n = names.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(p, c) in edges {
            if p == c {
                return Err(Error::Cycle(names[p].clone()));
            }
            if !parents[c].contains(&p) {
                parents[c].push(p);
                children[p].push(c);
            }
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        Ok(Self {
            names,
            parents,
            children,
            order,
        })
    }

    /// Builds a DAG from node names and `(parent, child)` name pairs.
    pub fn from_named_edges<S: AsRef<str>>(names: &[S], edges: &[(S, S)]) -> Result<Self> {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        let find = |s: &str| {
            names
                .iter()
                .position(|n| n == s)
                .ok_or_else(|| Error::Schema(format!("edge endpoint {s} is not a declared node")))
        };
        let idx = edges
            .iter()
            .map(|(p, c)| Ok((find(p.as_ref())?, find(c.as_ref())?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(names, &idx)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.names[id]
    }

    pub fn index(&self, name: &str) -> Option<VarId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn parents(&self, id: VarId) -> &[VarId] {
        &self.parents[id]
    }

    pub fn children(&self, id: VarId) -> &[VarId] {
        &self.children[id]
    }

    pub fn edges(&self) -> Vec<(VarId, VarId)> {
        (0..self.len())
            .flat_map(|c| self.parents[c].iter().map(move |&p| (p, c)))
            .collect()
    }

    /// Deterministic topological order (lexicographic tie-break).
    pub fn topological_order(&self) -> &[VarId] {
        &self.order
    }

    /// Strict ancestors of `id`.
    pub fn ancestors(&self, id: VarId) -> BTreeSet<VarId> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<VarId> = self.parents[id].clone();
        while let Some(v) = stack.pop() {
            if seen.insert(v) {
                stack.extend_from_slice(&self.parents[v]);
            }
        }
        seen
    }

    /// `roots` together with all of their ancestors.
    pub fn ancestral_closure(&self, roots: impl IntoIterator<Item = VarId>) -> BTreeSet<VarId> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<VarId> = roots.into_iter().collect();
        while let Some(v) = stack.pop() {
            if seen.insert(v) {
                stack.extend_from_slice(&self.parents[v]);
            }
        }
        seen
    }
}
