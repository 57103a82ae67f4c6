//! Structural causal models over discrete variables.
//!
//! An [`Scm`] holds endogenous variables, exogenous variables, one structural
//! equation per endogenous variable and (optionally) a marginal prior per
//! exogenous variable. It compiles to a [`BayesNet`] whose endogenous CPTs
//! are 0/1 tables.
//!
//! # Canonical enumeration order
//!
//! For a child with parents `P1..Pk`, exogenous state `u_{n+1}` (0-based `n`)
//! is read as a number in base `|child|` with one digit per parent
//! configuration. Digits are assigned to configurations enumerated with the
//! *first* parent varying fastest, and the first such configuration holds the
//! most significant digit. Digit value `d` means "the child takes its `d`-th
//! declared state". With binary `yes/no` variables this makes `u_1` the
//! constant-`yes` function and the last state the constant-`no` function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pgm::{decode, encode, BayesNet, Cpt, Dag, VarId, Variable};

/// Default bound on canonical exogenous cardinality.
pub const DEFAULT_CARDINALITY_GUARD: u64 = 1 << 20;

const PRIOR_TOLERANCE: f64 = 1e-9;

/// Deterministic mechanism `child = f(endo_parents, exo_parent)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralEquation {
    child: usize,
    endo_parents: Vec<usize>,
    exo_parent: Option<usize>,
    exo_card: usize,
    /// `table[u * n_configs + cfg]`, configurations row-major over `endo_parents`.
    table: Vec<usize>,
}

impl StructuralEquation {
    /// `endo_parents` must be sorted by endogenous index; `table` has
    /// `exo_card × n_configs` entries.
    pub fn new(child: usize, endo_parents: Vec<usize>, exo_parent: usize, exo_card: usize, table: Vec<usize>) -> Self {
        Self {
            child,
            endo_parents,
            exo_parent: Some(exo_parent),
            exo_card,
            table,
        }
    }

    /// Constant equation with no parents at all (the post-intervention form).
    pub fn constant(child: usize, state: usize) -> Self {
        Self {
            child,
            endo_parents: Vec::new(),
            exo_parent: None,
            exo_card: 1,
            table: vec![state],
        }
    }

    pub fn child(&self) -> usize {
        self.child
    }

    pub fn endo_parents(&self) -> &[usize] {
        &self.endo_parents
    }

    pub fn exo_parent(&self) -> Option<usize> {
        self.exo_parent
    }

    pub fn exo_card(&self) -> usize {
        self.exo_card
    }

    pub fn n_configs(&self) -> usize {
        self.table.len() / self.exo_card
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn is_constant(&self) -> bool {
        self.exo_parent.is_none()
    }

    /// Child state for exogenous state `u` and a row-major parent configuration index.
    pub fn apply(&self, u: usize, config: usize) -> usize {
        let u = if self.exo_parent.is_some() { u } else { 0 };
        self.table[u * self.n_configs() + config]
    }

    /// The function realized by exogenous state `u`, one child state per parent configuration.
    pub fn function(&self, u: usize) -> &[usize] {
        let n = self.n_configs();
        &self.table[u * n..(u + 1) * n]
    }
}

/// Classification of the exogenous structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarkovClass {
    Markovian,
    SemiMarkovian,
    NonMarkovian,
}

/// `⟨U, X, F, P_U⟩` with optional priors.
#[derive(Debug, Clone, PartialEq)]
pub struct Scm {
    endogenous: Vec<Variable>,
    exogenous: Vec<Variable>,
    equations: Vec<StructuralEquation>,
    priors: Option<Vec<Vec<f64>>>,
    exogenous_links: Vec<(usize, usize)>,
    dag: Dag,
}

impl Scm {
    pub fn new(
        endogenous: Vec<Variable>,
        exogenous: Vec<Variable>,
        equations: Vec<StructuralEquation>,
        priors: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        Self::with_links(endogenous, exogenous, equations, priors, Vec::new())
    }

    /// Like [`Scm::new`] but also records dependencies between exogenous
    /// variables. Such models can be classified but not evaluated.
    pub fn with_links(
        endogenous: Vec<Variable>,
        exogenous: Vec<Variable>,
        equations: Vec<StructuralEquation>,
        priors: Option<Vec<Vec<f64>>>,
        exogenous_links: Vec<(usize, usize)>,
    ) -> Result<Self> {
        crate::pgm::check_unique_names(endogenous.iter().chain(&exogenous).map(Variable::name))?;
        if equations.len() != endogenous.len() {
            return Err(Error::InvalidModel(format!(
                "{} equations for {} endogenous variables",
                equations.len(),
                endogenous.len()
            )));
        }
        let mut edges = Vec::new();
        for (i, eq) in equations.iter().enumerate() {
            let name = endogenous[i].name();
            if eq.child != i {
                return Err(Error::InvalidModel(format!(
                    "equation {i} is for variable {}",
                    eq.child
                )));
            }
            if eq.endo_parents.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidModel(format!(
                    "parents of {name} must be sorted and distinct"
                )));
            }
            for &p in &eq.endo_parents {
                if p >= endogenous.len() {
                    return Err(Error::InvalidModel(format!("parent {p} of {name} does not exist")));
                }
                edges.push((p, i));
            }
            let n_cfg: usize = eq.endo_parents.iter().map(|&p| endogenous[p].card()).product();
            match eq.exo_parent {
                Some(u) => {
                    let Some(exo) = exogenous.get(u) else {
                        return Err(Error::InvalidModel(format!(
                            "exogenous parent {u} of {name} does not exist"
                        )));
                    };
                    if exo.card() != eq.exo_card {
                        return Err(Error::InvalidModel(format!(
                            "equation of {name} assumes {} exogenous states, {} has {}",
                            eq.exo_card,
                            exo.name(),
                            exo.card()
                        )));
                    }
                }
                None => {
                    if !eq.endo_parents.is_empty() || eq.exo_card != 1 {
                        return Err(Error::InvalidModel(format!(
                            "{name} has no exogenous parent but is not a constant"
                        )));
                    }
                }
            }
            if eq.table.len() != eq.exo_card * n_cfg {
                return Err(Error::InvalidModel(format!(
                    "equation table of {name} has {} entries, expected {}",
                    eq.table.len(),
                    eq.exo_card * n_cfg
                )));
            }
            if let Some(bad) = eq.table.iter().find(|&&s| s >= endogenous[i].card()) {
                return Err(Error::InvalidModel(format!(
                    "equation of {name} yields state {bad} out of range"
                )));
            }
        }
        for &(a, b) in &exogenous_links {
            if a >= exogenous.len() || b >= exogenous.len() || a == b {
                return Err(Error::InvalidModel("invalid exogenous link".into()));
            }
        }
        let dag = Dag::new(endogenous.iter().map(|v| v.name().to_string()).collect(), &edges)?;
        let scm = Self {
            endogenous,
            exogenous,
            equations,
            priors: None,
            exogenous_links,
            dag,
        };
        match priors {
            Some(p) => scm.with_priors(p),
            None => Ok(scm),
        }
    }

    /// Returns a copy carrying `priors` (one distribution per exogenous variable).
    pub fn with_priors(&self, priors: Vec<Vec<f64>>) -> Result<Self> {
        if priors.len() != self.exogenous.len() {
            return Err(Error::InvalidModel(format!(
                "{} priors for {} exogenous variables",
                priors.len(),
                self.exogenous.len()
            )));
        }
        for (u, p) in self.exogenous.iter().zip(&priors) {
            if p.len() != u.card() {
                return Err(Error::InvalidModel(format!(
                    "prior of {} has {} entries, expected {}",
                    u.name(),
                    p.len(),
                    u.card()
                )));
            }
            if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidModel(format!(
                    "prior of {} has invalid entries",
                    u.name()
                )));
            }
            let s: f64 = p.iter().sum();
            if (s - 1.0).abs() > PRIOR_TOLERANCE {
                return Err(Error::InvalidModel(format!("prior of {} sums to {s}", u.name())));
            }
        }
        let mut out = self.clone();
        out.priors = Some(priors);
        Ok(out)
    }

    pub fn without_priors(&self) -> Self {
        let mut out = self.clone();
        out.priors = None;
        out
    }

    pub fn endogenous(&self) -> &[Variable] {
        &self.endogenous
    }

    pub fn exogenous(&self) -> &[Variable] {
        &self.exogenous
    }

    pub fn equations(&self) -> &[StructuralEquation] {
        &self.equations
    }

    pub fn equation(&self, endo: usize) -> &StructuralEquation {
        &self.equations[endo]
    }

    pub fn priors(&self) -> Option<&[Vec<f64>]> {
        self.priors.as_deref()
    }

    pub fn require_priors(&self) -> Result<&[Vec<f64>]> {
        self.priors.as_deref().ok_or_else(|| {
            Error::MissingPrior(self.exogenous.first().map(|u| u.name().to_string()).unwrap_or_default())
        })
    }

    pub fn exogenous_links(&self) -> &[(usize, usize)] {
        &self.exogenous_links
    }

    /// Graph over endogenous variables only.
    pub fn endogenous_dag(&self) -> &Dag {
        &self.dag
    }

    pub fn endo_index(&self, name: &str) -> Result<usize> {
        self.dag
            .index(name)
            .ok_or_else(|| Error::Schema(format!("unknown endogenous variable {name}")))
    }

    pub fn exo_index(&self, name: &str) -> Option<usize> {
        self.exogenous.iter().position(|u| u.name() == name)
    }

    /// Endogenous children of exogenous variable `u`.
    pub fn exo_children(&self, u: usize) -> Vec<usize> {
        self.equations
            .iter()
            .filter(|eq| eq.exo_parent == Some(u))
            .map(|eq| eq.child)
            .collect()
    }

    /// Row-major index of the parent configuration of `endo` inside a full endogenous assignment.
    pub fn parent_config(&self, endo: usize, endo_states: &[usize]) -> usize {
        let eq = &self.equations[endo];
        eq.endo_parents
            .iter()
            .fold(0, |acc, &p| acc * self.endogenous[p].card() + endo_states[p])
    }

    /// Solves the equations in topological order for one exogenous assignment.
    pub fn solve(&self, exo_states: &[usize]) -> Vec<usize> {
        let mut x = vec![0; self.endogenous.len()];
        for &i in self.dag.topological_order() {
            let eq = &self.equations[i];
            let u = eq.exo_parent.map_or(0, |u| exo_states[u]);
            x[i] = eq.apply(u, self.parent_config(i, &x));
        }
        x
    }

    /// Same model with some equations replaced by constants.
    pub(crate) fn replace_equations(&self, replacements: impl IntoIterator<Item = StructuralEquation>) -> Result<Self> {
        let mut eqs = self.equations.clone();
        for eq in replacements {
            let i = eq.child;
            eqs[i] = eq;
        }
        Self::with_links(
            self.endogenous.clone(),
            self.exogenous.clone(),
            eqs,
            self.priors.clone(),
            self.exogenous_links.clone(),
        )
    }
}

/// Canonical exogenous cardinality: `|child|` without parents, `|child|^(∏ |parent|)` otherwise.
pub fn canonical_cardinality(child_card: u64, parent_cards: &[u64], guard: u64) -> Result<u64> {
    let overflow = |exponent| Error::CardinalityOverflow {
        variable: String::new(),
        child_card,
        exponent,
        guard,
    };
    if child_card == 0 || parent_cards.contains(&0) {
        return Err(Error::InvalidModel("cardinalities must be positive".into()));
    }
    let exponent = if parent_cards.is_empty() {
        1
    } else {
        parent_cards
            .iter()
            .try_fold(1u64, |acc, &c| acc.checked_mul(c))
            .ok_or_else(|| overflow(None))?
    };
    let size = u32::try_from(exponent)
        .ok()
        .and_then(|e| child_card.checked_pow(e))
        .ok_or_else(|| overflow(Some(exponent)))?;
    if size > guard {
        return Err(overflow(Some(exponent)));
    }
    Ok(size)
}

/// Function table (one child state per row-major parent configuration) of canonical state `k`.
pub fn canonical_function(k: usize, child_card: usize, parent_cards: &[usize]) -> Vec<usize> {
    let n_cfg: usize = parent_cards.iter().product();
    let mut states = vec![0; parent_cards.len()];
    (0..n_cfg)
        .map(|cfg| {
            decode(cfg, parent_cards, &mut states);
            // position in the first-parent-fastest enumeration
            let mut pos = 0;
            let mut weight = 1;
            for (s, c) in states.iter().zip(parent_cards) {
                pos += s * weight;
                weight *= c;
            }
            let shift = n_cfg - 1 - pos;
            (k / child_card.pow(shift as u32)) % child_card
        })
        .collect()
}

/// Canonical Markovian SCM for an endogenous DAG: one fresh exogenous
/// variable `U_<name>` per node, states `u1..uK`, priors absent.
pub fn build_canonical_scm(endogenous: &[Variable], dag: &Dag, guard: u64) -> Result<Scm> {
    if endogenous.len() != dag.len() {
        return Err(Error::InvalidModel("variable list does not match the DAG".into()));
    }
    let mut exogenous = Vec::with_capacity(endogenous.len());
    let mut equations = Vec::with_capacity(endogenous.len());
    for (i, var) in endogenous.iter().enumerate() {
        if var.name() != dag.name(i) {
            return Err(Error::InvalidModel(format!(
                "variable {} does not match DAG node {}",
                var.name(),
                dag.name(i)
            )));
        }
        let parents = dag.parents(i).to_vec();
        let parent_cards: Vec<usize> = parents.iter().map(|&p| endogenous[p].card()).collect();
        let k = canonical_cardinality(
            var.card() as u64,
            &parent_cards.iter().map(|&c| c as u64).collect::<Vec<_>>(),
            guard,
        )
        .map_err(|e| match e {
            Error::CardinalityOverflow {
                child_card,
                exponent,
                guard,
                ..
            } => Error::CardinalityOverflow {
                variable: var.name().to_string(),
                child_card,
                exponent,
                guard,
            },
            other => other,
        })? as usize;
        let mut table = Vec::with_capacity(k * parent_cards.iter().product::<usize>());
        for u in 0..k {
            table.extend(canonical_function(u, var.card(), &parent_cards));
        }
        exogenous.push(Variable::new(
            format!("U_{}", var.name()),
            (1..=k).map(|j| format!("u{j}")),
        )?);
        equations.push(StructuralEquation::new(i, parents, i, k, table));
    }
    Scm::new(endogenous.to_vec(), exogenous, equations, None)
}

/// Markovian: every exogenous variable with children has exactly one.
/// Semi-Markovian: some has two or more, but exogenous variables are unlinked.
/// Non-Markovian: exogenous variables depend on each other.
pub fn classify(scm: &Scm) -> MarkovClass {
    if !scm.exogenous_links.is_empty() {
        return MarkovClass::NonMarkovian;
    }
    let shared = (0..scm.exogenous.len()).any(|u| scm.exo_children(u).len() > 1);
    if shared {
        MarkovClass::SemiMarkovian
    } else {
        MarkovClass::Markovian
    }
}

/// Variable layout of [`scm_to_bn`]: endogenous first, then exogenous.
pub fn exo_bn_id(scm: &Scm, u: usize) -> VarId {
    scm.endogenous.len() + u
}

/// 0/1 CPT of an equation for arbitrary variable ids. Parents are ordered by id.
pub(crate) fn equation_cpt(
    scm: &Scm,
    endo: usize,
    child_id: VarId,
    endo_ids: &[VarId],
    exo_ids: &[VarId],
) -> Result<Cpt> {
    let eq = &scm.equations[endo];
    let child_card = scm.endogenous[endo].card();
    // (bn id, card, role) with role = Some(endo parent position) or None for the exogenous parent
    let mut parents: Vec<(VarId, usize, Option<usize>)> = eq
        .endo_parents
        .iter()
        .enumerate()
        .map(|(k, &p)| (endo_ids[p], scm.endogenous[p].card(), Some(k)))
        .collect();
    if let Some(u) = eq.exo_parent {
        parents.push((exo_ids[u], eq.exo_card, None));
    }
    parents.sort_by_key(|p| p.0);
    let ids: Vec<VarId> = parents.iter().map(|p| p.0).collect();
    let cards: Vec<usize> = parents.iter().map(|p| p.1).collect();
    let endo_cards: Vec<usize> = eq.endo_parents.iter().map(|&p| scm.endogenous[p].card()).collect();
    let n_rows: usize = cards.iter().product();
    let mut values = vec![0.0; n_rows * child_card];
    let mut states = vec![0; ids.len()];
    let mut endo_states = vec![0; endo_cards.len()];
    for row in 0..n_rows {
        decode(row, &cards, &mut states);
        let mut u = 0;
        for (k, p) in parents.iter().enumerate() {
            match p.2 {
                Some(pos) => endo_states[pos] = states[k],
                None => u = states[k],
            }
        }
        let x = eq.apply(u, encode(&endo_states, &endo_cards));
        values[row * child_card + x] = 1.0;
    }
    Cpt::new(child_id, child_card, ids, cards, values)
}

/// The deterministic CPT `P(X | Pa_X, U_X)` of one equation, in the [`scm_to_bn`] layout.
pub fn se_to_cpt(scm: &Scm, endo: usize) -> Result<Cpt> {
    let endo_ids: Vec<VarId> = (0..scm.endogenous.len()).collect();
    let exo_ids: Vec<VarId> = (0..scm.exogenous.len()).map(|u| exo_bn_id(scm, u)).collect();
    equation_cpt(scm, endo, endo, &endo_ids, &exo_ids)
}

/// Compiles the SCM to a Bayesian network over `X ∪ U` (endogenous ids first).
pub fn scm_to_bn(scm: &Scm) -> Result<BayesNet> {
    if classify(scm) == MarkovClass::NonMarkovian {
        return Err(Error::Unsupported("non-Markovian models cannot be compiled".into()));
    }
    let priors = scm.require_priors()?;
    let n = scm.endogenous.len();
    let mut variables: Vec<Variable> = scm.endogenous.clone();
    variables.extend(scm.exogenous.iter().cloned());
    let mut edges = Vec::new();
    for eq in &scm.equations {
        edges.extend(eq.endo_parents.iter().map(|&p| (p, eq.child)));
        if let Some(u) = eq.exo_parent {
            edges.push((n + u, eq.child));
        }
    }
    let dag = Dag::new(variables.iter().map(|v| v.name().to_string()).collect(), &edges)?;
    let mut cpts = Vec::with_capacity(variables.len());
    for i in 0..n {
        cpts.push(se_to_cpt(scm, i)?);
    }
    for (u, p) in priors.iter().enumerate() {
        cpts.push(Cpt::marginal(n + u, p.clone())?);
    }
    BayesNet::new(variables, dag, cpts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pgm::{variable_elimination, Evidence};

    fn mia() -> (Vec<Variable>, Dag) {
        (
            vec![Variable::binary("M"), Variable::binary("I"), Variable::binary("A")],
            Dag::from_named_edges(&["M", "I", "A"], &[("M", "I"), ("M", "A"), ("I", "A")]).unwrap(),
        )
    }

    #[test]
    fn cardinality_formula() {
        assert_eq!(canonical_cardinality(2, &[], DEFAULT_CARDINALITY_GUARD).unwrap(), 2);
        assert_eq!(
            canonical_cardinality(2, &[2, 2], DEFAULT_CARDINALITY_GUARD).unwrap(),
            16
        );
        assert_eq!(
            canonical_cardinality(2, &[2, 2, 2], DEFAULT_CARDINALITY_GUARD).unwrap(),
            256
        );
        assert_eq!(canonical_cardinality(3, &[2], DEFAULT_CARDINALITY_GUARD).unwrap(), 9);
        let err = canonical_cardinality(2, &[2; 5], DEFAULT_CARDINALITY_GUARD).unwrap_err();
        match &err {
            Error::CardinalityOverflow { exponent, .. } => assert_eq!(*exponent, Some(32)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("2^32 = 4294967296"));
        let six = canonical_cardinality(2, &[2; 6], u64::MAX).unwrap_err();
        assert!(six.to_string().contains("2^64 = 18446744073709551616"));
    }

    #[test]
    fn guard_is_configurable() {
        assert!(canonical_cardinality(2, &[2, 2], 15).is_err());
        assert_eq!(canonical_cardinality(2, &[2; 5], 1 << 33).unwrap(), 1 << 32);
    }

    #[test]
    fn running_example_cardinalities() {
        let (vars, dag) = mia();
        let scm = build_canonical_scm(&vars, &dag, DEFAULT_CARDINALITY_GUARD).unwrap();
        let cards: Vec<usize> = scm.exogenous().iter().map(Variable::card).collect();
        assert_eq!(cards, vec![2, 4, 16]);
        assert_eq!(classify(&scm), MarkovClass::Markovian);
    }

    #[test]
    fn single_root_is_identity() {
        let vars = vec![Variable::binary("X")];
        let dag = Dag::from_named_edges(&["X"], &[] as &[(&str, &str)]).unwrap();
        let scm = build_canonical_scm(&vars, &dag, DEFAULT_CARDINALITY_GUARD).unwrap();
        assert_eq!(scm.equation(0).table(), &[0, 1]);
    }

    #[test]
    fn one_parent_functions_are_the_four_boolean_maps() {
        let vars = vec![Variable::binary("X"), Variable::binary("Y")];
        let dag = Dag::from_named_edges(&["X", "Y"], &[("X", "Y")]).unwrap();
        let scm = build_canonical_scm(&vars, &dag, DEFAULT_CARDINALITY_GUARD).unwrap();
        let eq = scm.equation(1);
        let fs: Vec<&[usize]> = (0..4).map(|u| eq.function(u)).collect();
        // const-yes, identity, negation, const-no
        assert_eq!(fs, vec![&[0, 0][..], &[0, 1], &[1, 0], &[1, 1]]);
    }

    #[test]
    fn se_to_cpt_identity_for_root() {
        let (vars, dag) = mia();
        let scm = build_canonical_scm(&vars, &dag, DEFAULT_CARDINALITY_GUARD).unwrap();
        let cpt = se_to_cpt(&scm, 0).unwrap();
        assert_eq!(cpt.parents(), &[3]);
        assert_eq!(cpt.factor().values(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn constant_equation_cpt() {
        let vars = vec![Variable::new("X", ["a", "b", "c"]).unwrap()];
        let scm = Scm::new(vars, vec![], vec![StructuralEquation::constant(0, 2)], Some(vec![])).unwrap();
        let cpt = se_to_cpt(&scm, 0).unwrap();
        assert_eq!(cpt.factor().values(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn shared_and_linked_exogenous_classes() {
        let endo = vec![Variable::binary("M"), Variable::binary("I"), Variable::binary("A")];
        let exo = vec![
            Variable::new("W", ["w1", "w2"]).unwrap(),
            Variable::new("U", ["u1", "u2"]).unwrap(),
        ];
        let eqs = vec![
            StructuralEquation::new(0, vec![], 0, 2, vec![0, 1]),
            StructuralEquation::new(1, vec![0], 1, 2, vec![0, 0, 1, 1]),
            StructuralEquation::new(2, vec![0, 1], 1, 2, vec![0, 0, 0, 1, 1, 1, 1, 0]),
        ];
        let semi = Scm::new(endo.clone(), exo.clone(), eqs.clone(), None).unwrap();
        assert_eq!(classify(&semi), MarkovClass::SemiMarkovian);
        let non = Scm::with_links(endo, exo, eqs, None, vec![(0, 1)]).unwrap();
        assert_eq!(classify(&non), MarkovClass::NonMarkovian);
        assert!(matches!(scm_to_bn(&non), Err(Error::Unsupported(_))));
    }

    #[test]
    fn scm_to_bn_requires_priors() {
        let (vars, dag) = mia();
        let scm = build_canonical_scm(&vars, &dag, DEFAULT_CARDINALITY_GUARD).unwrap();
        assert!(matches!(scm_to_bn(&scm), Err(Error::MissingPrior(_))));
    }

    #[test]
    fn point_mass_priors_give_single_atom() {
        let (vars, dag) = mia();
        let scm = build_canonical_scm(&vars, &dag, DEFAULT_CARDINALITY_GUARD).unwrap();
        let priors: Vec<Vec<f64>> = scm
            .exogenous()
            .iter()
            .map(|u| {
                let mut p = vec![0.0; u.card()];
                p[u.card() / 2] = 1.0;
                p
            })
            .collect();
        let scm = scm.with_priors(priors).unwrap();
        let bn = scm_to_bn(&scm).unwrap();
        let joint = variable_elimination(&bn, &[0, 1, 2], &Evidence::new()).unwrap();
        assert_eq!(joint.values().iter().filter(|&&p| p == 1.0).count(), 1);
        assert_eq!(joint.values().iter().filter(|&&p| p == 0.0).count(), 7);
    }

    #[test]
    fn rejects_bad_priors_and_tables() {
        let (vars, dag) = mia();
        let scm = build_canonical_scm(&vars, &dag, DEFAULT_CARDINALITY_GUARD).unwrap();
        assert!(scm
            .with_priors(vec![vec![0.5, 0.6], vec![0.25; 4], vec![1.0 / 16.0; 16]])
            .is_err());
        assert!(scm.with_priors(vec![vec![0.5, 0.5], vec![0.25; 4]]).is_err());
        let bad = Scm::new(
            vec![Variable::binary("X")],
            vec![Variable::new("U", ["a", "b"]).unwrap()],
            vec![StructuralEquation::new(0, vec![], 0, 2, vec![0, 2])],
            None,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn five_binary_parents_overflow_names_variable() {
        let names = ["A", "B", "C", "D", "E", "Y"];
        let vars: Vec<Variable> = names.iter().map(|n| Variable::binary(*n)).collect();
        let edges: Vec<(&str, &str)> = names[..5].iter().map(|p| (*p, "Y")).collect();
        let dag = Dag::from_named_edges(&names, &edges).unwrap();
        match build_canonical_scm(&vars, &dag, DEFAULT_CARDINALITY_GUARD).unwrap_err() {
            Error::CardinalityOverflow { variable, exponent, .. } => {
                assert_eq!(variable, "Y");
                assert_eq!(exponent, Some(32));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
