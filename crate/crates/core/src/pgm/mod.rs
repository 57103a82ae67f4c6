//! Discrete variables, DAGs, factors and exact inference.
//!
//! Everything above this layer (SCMs, twin networks, EM) compiles down to a
//! [`BayesNet`] and asks [`variable_elimination`] for answers.

mod bayesnet;
mod dag;
mod factor;
mod inference;
mod learn;

pub use bayesnet::{BayesNet, Cpt};
pub use dag::{topological_sort, Dag};
pub use factor::Factor;
pub use inference::{posterior_with_mass, variable_elimination, Evidence, Posterior};
pub use learn::{log_likelihood, mle_cpts};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a variable inside the model that owns it.
pub type VarId = usize;

/// A named discrete variable with an ordered list of state labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Variable {
    name: String,
    states: Vec<String>,
}

impl Variable {
    /// Builds a variable. At least one state is required and labels must be unique.
    pub fn new<S: Into<String>>(name: impl Into<String>, states: impl IntoIterator<Item = S>) -> Result<Self> {
        let name = name.into();
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        if name.is_empty() {
            return Err(Error::Schema("variable name must not be empty".into()));
        }
        if states.is_empty() {
            return Err(Error::Schema(format!("variable {name} has no states")));
        }
        for (i, s) in states.iter().enumerate() {
            if states[..i].contains(s) {
                return Err(Error::Schema(format!("variable {name} repeats state {s:?}")));
            }
        }
        Ok(Self { name, states })
    }

    /// Binary variable with states `["yes", "no"]`.
    pub fn binary(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            states: vec!["yes".into(), "no".into()],
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn card(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }

    /// Like [`Variable::state_index`] but reports an unknown label as a schema error.
    pub fn require_state(&self, label: &str) -> Result<usize> {
        self.state_index(label)
            .ok_or_else(|| Error::Schema(format!("state {label:?} is not in the domain of {}", self.name)))
    }

    pub(crate) fn renamed(&self, name: String) -> Self {
        Self {
            name,
            states: self.states.clone(),
        }
    }
}

/// Checks that names are unique within a model.
pub(crate) fn check_unique_names<'a>(names: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(Error::Schema(format!("duplicate variable name {n}")));
        }
    }
    Ok(())
}

/// Row-major strides for a list of cardinalities (last index fastest).
pub(crate) fn strides(cards: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * cards[i + 1];
    }
    strides
}

/// Decodes a row-major linear index into per-position states.
pub(crate) fn decode(mut index: usize, cards: &[usize], out: &mut [usize]) {
    for i in (0..cards.len()).rev() {
        out[i] = index % cards[i];
        index /= cards[i];
    }
}

/// Encodes per-position states into a row-major linear index.
pub(crate) fn encode(states: &[usize], cards: &[usize]) -> usize {
    states.iter().zip(cards).fold(0, |acc, (&s, &c)| acc * c + s)
}

/// Neumaier compensated sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}
