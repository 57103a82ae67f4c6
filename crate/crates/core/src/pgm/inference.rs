//! Exact inference by variable elimination.
//!
//! Intermediate tables carry a log-scale exponent (so long products of small
//! probabilities do not underflow) and a support mask recording which entries
//! are structurally non-zero. The mask lets a true zero-probability event be
//! told apart from numerical underflow.

use std::collections::{BTreeMap, BTreeSet};

use super::{decode, encode, BayesNet, Factor, KahanSum, VarId};
use crate::error::{Error, Result};

/// Observed states, keyed by variable index.
pub type Evidence = BTreeMap<VarId, usize>;

/// Normalized posterior together with the log-probability of the evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub factor: Factor,
    /// Natural log of `P(evidence)`.
    pub log_evidence: f64,
}

#[derive(Debug, Clone)]
struct WorkFactor {
    scope: Vec<VarId>,
    cards: Vec<usize>,
    values: Vec<f64>,
    support: Vec<bool>,
    log_scale: f64,
}

impl WorkFactor {
    fn from_factor(f: &Factor) -> Self {
        Self {
            scope: f.scope().to_vec(),
            cards: f.cards().to_vec(),
            values: f.values().to_vec(),
            support: f.values().iter().map(|&x| x > 0.0).collect(),
            log_scale: 0.0,
        }
    }

    fn reduce(&self, var: VarId, state: usize) -> Self {
        let Some(pos) = self.scope.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        let mut states = vec![0; self.scope.len()];
        let mut values = Vec::new();
        let mut support = Vec::new();
        for i in 0..self.values.len() {
            decode(i, &self.cards, &mut states);
            if states[pos] == state {
                values.push(self.values[i]);
                support.push(self.support[i]);
            }
        }
        Self {
            scope,
            cards,
            values,
            support,
            log_scale: self.log_scale,
        }
    }

    fn product(&self, other: &Self) -> Self {
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        for (v, c) in other.scope.iter().zip(&other.cards) {
            if !scope.contains(v) {
                scope.push(*v);
                cards.push(*c);
            }
        }
        let strides = super::strides(&cards);
        let map = |f: &Self| -> Vec<usize> {
            let mut s = vec![0; scope.len()];
            let own = super::strides(&f.cards);
            for (k, v) in f.scope.iter().enumerate() {
                let p = scope.iter().position(|x| x == v).unwrap();
                s[p] = own[k];
            }
            s
        };
        let sa = map(self);
        let sb = map(other);
        let total: usize = cards.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut support = Vec::with_capacity(total);
        let mut states = vec![0; scope.len()];
        for i in 0..total {
            let mut rem = i;
            for (k, st) in strides.iter().enumerate() {
                states[k] = rem / st;
                rem %= st;
            }
            let ia: usize = states.iter().zip(&sa).map(|(s, w)| s * w).sum();
            let ib: usize = states.iter().zip(&sb).map(|(s, w)| s * w).sum();
            values.push(self.values[ia] * other.values[ib]);
            support.push(self.support[ia] && other.support[ib]);
        }
        let mut out = Self {
            scope,
            cards,
            values,
            support,
            log_scale: self.log_scale + other.log_scale,
        };
        out.rescale();
        out
    }

    fn sum_out(&self, var: VarId) -> Self {
        let pos = self.scope.iter().position(|&v| v == var).expect("variable in scope");
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        let total: usize = cards.iter().product();
        let mut acc = vec![KahanSum::default(); total];
        let mut support = vec![false; total];
        let mut states = vec![0; self.scope.len()];
        let mut reduced = vec![0; scope.len()];
        for i in 0..self.values.len() {
            decode(i, &self.cards, &mut states);
            let mut k = 0;
            for (j, &s) in states.iter().enumerate() {
                if j != pos {
                    reduced[k] = s;
                    k += 1;
                }
            }
            let t = encode(&reduced, &cards);
            acc[t].add(self.values[i]);
            support[t] |= self.support[i];
        }
        let mut out = Self {
            scope,
            cards,
            values: acc.iter().map(KahanSum::value).collect(),
            support,
            log_scale: self.log_scale,
        };
        out.rescale();
        out
    }

    fn rescale(&mut self) {
        let max = self.values.iter().copied().fold(0.0, f64::max);
        if max > 0.0 && max != 1.0 {
            self.values.iter_mut().for_each(|x| *x /= max);
            self.log_scale += max.ln();
        }
    }
}

fn validate_query(net: &BayesNet, targets: &[VarId], evidence: &Evidence) -> Result<()> {
    for (i, &t) in targets.iter().enumerate() {
        if t >= net.len() {
            return Err(Error::Schema(format!("target {t} is not a variable of the network")));
        }
        if targets[..i].contains(&t) {
            return Err(Error::Schema(format!(
                "target {} requested twice",
                net.variable(t).name()
            )));
        }
        if evidence.contains_key(&t) {
            return Err(Error::Schema(format!(
                "variable {} is both a target and evidence",
                net.variable(t).name()
            )));
        }
    }
    for (&v, &s) in evidence {
        if v >= net.len() {
            return Err(Error::Schema(format!("evidence variable {v} is not in the network")));
        }
        if s >= net.variable(v).card() {
            return Err(Error::Schema(format!(
                "evidence state {s} out of range for {}",
                net.variable(v).name()
            )));
        }
    }
    Ok(())
}

/// Picks the next variable by min-fill, ties broken by variable name.
fn next_min_fill(net: &BayesNet, factors: &[WorkFactor], pending: &BTreeSet<VarId>) -> VarId {
    let mut best: Option<(usize, &str, VarId)> = None;
    for &v in pending {
        let mut neighbours = BTreeSet::new();
        for f in factors.iter().filter(|f| f.scope.contains(&v)) {
            neighbours.extend(f.scope.iter().copied().filter(|&u| u != v));
        }
        let nb: Vec<VarId> = neighbours.into_iter().collect();
        let mut fill = 0;
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if !factors.iter().any(|f| f.scope.contains(&a) && f.scope.contains(&b)) {
                    fill += 1;
                }
            }
        }
        let key = (fill, net.variable(v).name(), v);
        if best.is_none_or(|b| (key.0, key.1) < (b.0, b.1)) {
            best = Some(key);
        }
    }
    best.expect("pending set is non-empty").2
}

/// Posterior over `targets` given `evidence`, plus `ln P(evidence)`.
pub fn posterior_with_mass(net: &BayesNet, targets: &[VarId], evidence: &Evidence) -> Result<Posterior> {
    validate_query(net, targets, evidence)?;
    let relevant = net
        .dag()
        .ancestral_closure(targets.iter().copied().chain(evidence.keys().copied()));

    let mut factors: Vec<WorkFactor> = relevant
        .iter()
        .map(|&v| {
            let mut f = WorkFactor::from_factor(net.cpt(v).factor());
            for (&e, &s) in evidence {
                f = f.reduce(e, s);
            }
            f
        })
        .collect();

    let mut pending: BTreeSet<VarId> = relevant
        .iter()
        .copied()
        .filter(|v| !targets.contains(v) && !evidence.contains_key(v))
        .collect();

    while !pending.is_empty() {
        let v = next_min_fill(net, &factors, &pending);
        pending.remove(&v);
        let (with, without): (Vec<_>, Vec<_>) = factors.into_iter().partition(|f| f.scope.contains(&v));
        factors = without;
        if let Some(prod) = with.into_iter().reduce(|a, b| a.product(&b)) {
            factors.push(prod.sum_out(v));
        }
    }

    let joint = factors.into_iter().reduce(|a, b| a.product(&b)).unwrap_or(WorkFactor {
        scope: Vec::new(),
        cards: Vec::new(),
        values: vec![1.0],
        support: vec![true],
        log_scale: 0.0,
    });

    if !joint.support.iter().any(|&s| s) {
        return Err(Error::ZeroEvidence);
    }
    let mass = joint.values.iter().copied().collect::<KahanSum>().value();
    if mass <= 0.0 {
        return Err(Error::Underflow);
    }
    let log_evidence = mass.ln() + joint.log_scale;
    let factor = Factor::new(joint.scope, joint.cards, joint.values)?
        .normalized()
        .permuted(targets)?;
    Ok(Posterior { factor, log_evidence })
}

/// Normalized posterior `P(targets | evidence)`, scope in the order of `targets`.
pub fn variable_elimination(net: &BayesNet, targets: &[VarId], evidence: &Evidence) -> Result<Factor> {
    posterior_with_mass(net, targets, evidence).map(|p| p.factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pgm::{Cpt, Dag, Variable};

    fn chain() -> BayesNet {
        let vars = vec![Variable::binary("X"), Variable::binary("Y")];
        let dag = Dag::from_named_edges(&["X", "Y"], &[("X", "Y")]).unwrap();
        BayesNet::new(
            vars,
            dag,
            vec![
                Cpt::marginal(0, vec![0.2, 0.8]).unwrap(),
                Cpt::new(1, 2, vec![0], vec![2], vec![1.0, 0.0, 0.5, 0.5]).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn bayes_rule_on_chain() {
        let net = chain();
        let post = posterior_with_mass(&net, &[0], &Evidence::from([(1, 0)])).unwrap();
        // P(Y=yes) = 0.2 + 0.4
        assert!((post.log_evidence - 0.6f64.ln()).abs() < 1e-12);
        assert!((post.factor.values()[0] - 0.2 / 0.6).abs() < 1e-12);
    }

    #[test]
    fn structural_zero_is_reported() {
        let vars = vec![Variable::binary("X"), Variable::binary("Y")];
        let dag = Dag::from_named_edges(&["X", "Y"], &[("X", "Y")]).unwrap();
        let net = BayesNet::new(
            vars,
            dag,
            vec![
                Cpt::marginal(0, vec![1.0, 0.0]).unwrap(),
                Cpt::new(1, 2, vec![0], vec![2], vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            ],
        )
        .unwrap();
        let err = variable_elimination(&net, &[0], &Evidence::from([(1, 1)])).unwrap_err();
        assert_eq!(err, Error::ZeroEvidence);
    }

    #[test]
    fn target_in_evidence_is_rejected() {
        let net = chain();
        assert!(variable_elimination(&net, &[1], &Evidence::from([(1, 0)])).is_err());
    }

    #[test]
    fn tiny_probabilities_do_not_underflow() {
        // 60-node chain where every link keeps the state with probability 1e-6.
        let n = 60;
        let names: Vec<String> = (0..n).map(|i| format!("V{i:02}")).collect();
        let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        let dag = Dag::new(names.clone(), &edges).unwrap();
        let vars: Vec<Variable> = names.iter().map(|s| Variable::binary(s.clone())).collect();
        let eps = 1e-6;
        let mut cpts = vec![Cpt::marginal(0, vec![0.5, 0.5]).unwrap()];
        for i in 1..n {
            cpts.push(Cpt::new(i, 2, vec![i - 1], vec![2], vec![eps, 1.0 - eps, 1.0 - eps, eps]).unwrap());
        }
        let net = BayesNet::new(vars, dag, cpts).unwrap();
        let evidence: Evidence = (1..n).map(|i| (i, 0)).collect();
        let post = posterior_with_mass(&net, &[0], &evidence).unwrap();
        // X0=yes keeps yes 59 times (eps^59), X0=no flips once then keeps (eps^58 (1-eps)).
        assert!(post.log_evidence.is_finite());
        assert!(post.log_evidence < -700.0);
        let ratio = post.factor.values()[0] / post.factor.values()[1];
        assert!((ratio - eps / (1.0 - eps)).abs() < 1e-12);
    }
}
