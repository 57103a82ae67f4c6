use super::{Dag, Factor, VarId, Variable};
use crate::error::{Error, Result};

const ROW_TOLERANCE: f64 = 1e-9;

/// Conditional probability table `P(child | parents)`.
///
/// The factor scope is `parents ++ [child]`, so each consecutive run of
/// `card(child)` entries is one parent configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    child: VarId,
    parents: Vec<VarId>,
    factor: Factor,
}

impl Cpt {
    pub fn new(
        child: VarId,
        child_card: usize,
        parents: Vec<VarId>,
        parent_cards: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let mut scope = parents.clone();
        scope.push(child);
        let mut cards = parent_cards;
        cards.push(child_card);
        let factor = Factor::new(scope, cards, values)?;
        for (row, chunk) in factor.values().chunks(child_card).enumerate() {
            let s: f64 = chunk.iter().sum();
            if (s - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::InvalidModel(format!(
                    "CPT row {row} of variable {child} sums to {s}"
                )));
            }
        }
        Ok(Self { child, parents, factor })
    }

    /// Parentless distribution.
    pub fn marginal(child: VarId, probabilities: Vec<f64>) -> Result<Self> {
        let card = probabilities.len();
        Self::new(child, card, Vec::new(), Vec::new(), probabilities)
    }

    /// Point mass on `state`.
    pub fn point_mass(child: VarId, card: usize, state: usize) -> Result<Self> {
        let mut p = vec![0.0; card];
        p[state] = 1.0;
        Self::marginal(child, p)
    }

    pub fn child(&self) -> VarId {
        self.child
    }

    pub fn parents(&self) -> &[VarId] {
        &self.parents
    }

    pub fn factor(&self) -> &Factor {
        &self.factor
    }

    pub fn child_card(&self) -> usize {
        *self.factor.cards().last().unwrap()
    }

    /// Row of child probabilities for a parent configuration given in parent order.
    pub fn row(&self, parent_states: &[usize]) -> &[f64] {
        let cards = self.factor.cards();
        let cc = self.child_card();
        let cfg = super::encode(parent_states, &cards[..cards.len() - 1]);
        &self.factor.values()[cfg * cc..(cfg + 1) * cc]
    }

    pub fn prob(&self, parent_states: &[usize], child_state: usize) -> f64 {
        self.row(parent_states)[child_state]
    }
}

/// Discrete Bayesian network: variables, DAG and one CPT per node.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    variables: Vec<Variable>,
    dag: Dag,
    cpts: Vec<Cpt>,
}

impl BayesNet {
    pub fn new(variables: Vec<Variable>, dag: Dag, cpts: Vec<Cpt>) -> Result<Self> {
        if variables.len() != dag.len() || cpts.len() != dag.len() {
            return Err(Error::InvalidModel(
                "variables, DAG nodes and CPTs must have the same count".into(),
            ));
        }
        for (i, v) in variables.iter().enumerate() {
            if v.name() != dag.name(i) {
                return Err(Error::InvalidModel(format!(
                    "variable {} does not match DAG node {}",
                    v.name(),
                    dag.name(i)
                )));
            }
        }
        for (i, cpt) in cpts.iter().enumerate() {
            if cpt.child != i {
                return Err(Error::InvalidModel(format!("CPT {i} is for variable {}", cpt.child)));
            }
            if cpt.parents != dag.parents(i) {
                return Err(Error::InvalidModel(format!(
                    "CPT parents of {} differ from its DAG parents",
                    variables[i].name()
                )));
            }
            let expected: Vec<usize> = cpt
                .parents
                .iter()
                .chain(std::iter::once(&i))
                .map(|&p| variables[p].card())
                .collect();
            if cpt.factor.cards() != expected.as_slice() {
                return Err(Error::InvalidModel(format!(
                    "CPT of {} has cardinalities {:?}, expected {:?}",
                    variables[i].name(),
                    cpt.factor.cards(),
                    expected
                )));
            }
        }
        Ok(Self { variables, dag, cpts })
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id]
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, id: VarId) -> &Cpt {
        &self.cpts[id]
    }

    pub fn index(&self, name: &str) -> Result<VarId> {
        self.dag
            .index(name)
            .ok_or_else(|| Error::Schema(format!("unknown variable {name}")))
    }

    /// Resolves `(name, state label)` to indices.
    pub fn assign(&self, name: &str, state: &str) -> Result<(VarId, usize)> {
        let id = self.index(name)?;
        Ok((id, self.variables[id].require_state(state)?))
    }

    /// Probability of a complete assignment (one state per variable, by index).
    pub fn joint_probability(&self, states: &[usize]) -> f64 {
        let mut buf = Vec::new();
        self.cpts
            .iter()
            .map(|cpt| {
                buf.clear();
                buf.extend(cpt.parents.iter().map(|&p| states[p]));
                cpt.prob(&buf, states[cpt.child])
            })
            .product()
    }
}
