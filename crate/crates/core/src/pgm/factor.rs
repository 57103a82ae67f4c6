use super::{decode, encode, KahanSum, VarId};
use crate::error::{Error, Result};

/// Dense non-negative table over an ordered scope, row-major (last variable fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    scope: Vec<VarId>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    pub fn new(scope: Vec<VarId>, cards: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if scope.len() != cards.len() {
            return Err(Error::InvalidModel(
                "factor scope and cardinalities differ in length".into(),
            ));
        }
        for (i, v) in scope.iter().enumerate() {
            if scope[..i].contains(v) {
                return Err(Error::InvalidModel(format!("factor scope repeats variable {v}")));
            }
        }
        let expected: usize = cards.iter().product();
        if values.len() != expected {
            return Err(Error::InvalidModel(format!(
                "factor table has {} entries, expected {expected}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidModel(format!(
                "factor entry {bad} is negative or not finite"
            )));
        }
        Ok(Self { scope, cards, values })
    }

    /// Constant factor with empty scope.
    pub fn scalar(value: f64) -> Self {
        Self {
            scope: Vec::new(),
            cards: Vec::new(),
            values: vec![value],
        }
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entry at a full assignment given in scope order.
    pub fn get(&self, states: &[usize]) -> f64 {
        self.values[encode(states, &self.cards)]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().copied().collect::<KahanSum>().value()
    }

    pub fn normalized(&self) -> Self {
        let z = self.sum();
        let mut out = self.clone();
        if z > 0.0 {
            out.values.iter_mut().for_each(|x| *x /= z);
        }
        out
    }

    pub fn product(&self, other: &Factor) -> Factor {
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        for (v, c) in other.scope.iter().zip(&other.cards) {
            if !scope.contains(v) {
                scope.push(*v);
                cards.push(*c);
            }
        }
        let pos_a: Vec<usize> = self
            .scope
            .iter()
            .map(|v| scope.iter().position(|s| s == v).unwrap())
            .collect();
        let pos_b: Vec<usize> = other
            .scope
            .iter()
            .map(|v| scope.iter().position(|s| s == v).unwrap())
            .collect();
        let total: usize = cards.iter().product();
        let mut states = vec![0; scope.len()];
        let mut sa = vec![0; self.scope.len()];
        let mut sb = vec![0; other.scope.len()];
        let mut values = Vec::with_capacity(total);
        for i in 0..total {
            decode(i, &cards, &mut states);
            for (k, &p) in pos_a.iter().enumerate() {
                sa[k] = states[p];
            }
            for (k, &p) in pos_b.iter().enumerate() {
                sb[k] = states[p];
            }
            values.push(self.get(&sa) * other.get(&sb));
        }
        Factor { scope, cards, values }
    }

    /// Sums out `var`; a factor without `var` is returned unchanged.
    pub fn sum_out(&self, var: VarId) -> Factor {
        let Some(pos) = self.scope.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        let total: usize = cards.iter().product();
        let mut acc = vec![KahanSum::default(); total];
        let mut states = vec![0; self.scope.len()];
        let mut reduced = vec![0; scope.len()];
        for (i, &x) in self.values.iter().enumerate() {
            decode(i, &self.cards, &mut states);
            let mut k = 0;
            for (j, &s) in states.iter().enumerate() {
                if j != pos {
                    reduced[k] = s;
                    k += 1;
                }
            }
            acc[encode(&reduced, &cards)].add(x);
        }
        Factor {
            scope,
            cards,
            values: acc.iter().map(KahanSum::value).collect(),
        }
    }

    /// Restricts `var` to `state` and drops it from the scope.
    pub fn reduce(&self, var: VarId, state: usize) -> Factor {
        let Some(pos) = self.scope.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        let mut states = vec![0; self.scope.len()];
        let values = self
            .values
            .iter()
            .enumerate()
            .filter_map(|(i, &x)| {
                decode(i, &self.cards, &mut states);
                (states[pos] == state).then_some(x)
            })
            .collect();
        Factor { scope, cards, values }
    }

    /// Sums out everything outside `keep` and reorders the scope to `keep`.
    pub fn marginal(&self, keep: &[VarId]) -> Result<Factor> {
        let mut f = self.clone();
        for &v in &self.scope {
            if !keep.contains(&v) {
                f = f.sum_out(v);
            }
        }
        f.permuted(keep)
    }

    /// Reorders the scope. `order` must be a permutation of the current scope.
    pub fn permuted(&self, order: &[VarId]) -> Result<Factor> {
        if order.len() != self.scope.len() || order.iter().any(|v| !self.scope.contains(v)) {
            return Err(Error::InvalidModel("permutation does not match factor scope".into()));
        }
        let pos: Vec<usize> = order
            .iter()
            .map(|v| self.scope.iter().position(|s| s == v).unwrap())
            .collect();
        let cards: Vec<usize> = pos.iter().map(|&p| self.cards[p]).collect();
        let mut states = vec![0; order.len()];
        let mut orig = vec![0; order.len()];
        let values = (0..self.values.len())
            .map(|i| {
                decode(i, &cards, &mut states);
                for (k, &p) in pos.iter().enumerate() {
                    orig[p] = states[k];
                }
                self.get(&orig)
            })
            .collect();
        Ok(Factor {
            scope: order.to_vec(),
            cards,
            values,
        })
    }
}
