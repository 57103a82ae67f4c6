use super::{encode, BayesNet, Cpt, Dag, KahanSum, Variable};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Column of each DAG node in the dataset.
fn column_map(names: &[String], data: &Dataset) -> Result<Vec<usize>> {
    names.iter().map(|n| data.require_column(n)).collect()
}

/// Unsmoothed maximum-likelihood CPTs. Parent configurations that never
/// occur get the uniform distribution.
pub fn mle_cpts(dag: &Dag, data: &Dataset) -> Result<BayesNet> {
    let cols = column_map(dag.names(), data)?;
    let variables: Vec<Variable> = cols.iter().map(|&c| data.schema()[c].clone()).collect();
    let mut cpts = Vec::with_capacity(dag.len());
    for node in 0..dag.len() {
        let parents = dag.parents(node).to_vec();
        let parent_cards: Vec<usize> = parents.iter().map(|&p| variables[p].card()).collect();
        let child_card = variables[node].card();
        let n_cfg: usize = parent_cards.iter().product();
        let mut counts = vec![KahanSum::default(); n_cfg * child_card];
        let mut cfg_states = vec![0; parents.len()];
        for row in data.rows() {
            for (k, &p) in parents.iter().enumerate() {
                cfg_states[k] = row.states[cols[p]];
            }
            let cfg = encode(&cfg_states, &parent_cards);
            counts[cfg * child_card + row.states[cols[node]]].add(row.weight);
        }
        let mut values = Vec::with_capacity(counts.len());
        for chunk in counts.chunks(child_card) {
            let row: Vec<f64> = chunk.iter().map(KahanSum::value).collect();
            let total: f64 = row.iter().copied().collect::<KahanSum>().value();
            if total > 0.0 {
                values.extend(row.iter().map(|c| c / total));
            } else {
                values.extend(std::iter::repeat_n(1.0 / child_card as f64, child_card));
            }
        }
        cpts.push(Cpt::new(node, child_card, parents, parent_cards, values)?);
    }
    BayesNet::new(variables, dag.clone(), cpts)
}

/// `Σ weight · ln P(record)`; `-∞` when a positively weighted record has probability 0.
pub fn log_likelihood(net: &BayesNet, data: &Dataset) -> Result<f64> {
    let cols = column_map(net.dag().names(), data)?;
    for (id, &c) in cols.iter().enumerate() {
        if data.schema()[c].states() != net.variable(id).states() {
            return Err(Error::Schema(format!(
                "states of {} differ between data and model",
                net.variable(id).name()
            )));
        }
    }
    let mut acc = KahanSum::default();
    let mut states = vec![0; net.len()];
    for row in data.rows() {
        if row.weight == 0.0 {
            continue;
        }
        for (id, &c) in cols.iter().enumerate() {
            states[id] = row.states[c];
        }
        let mut lp = 0.0;
        for cpt in net.cpts() {
            let parent_states: Vec<usize> = cpt.parents().iter().map(|&p| states[p]).collect();
            let p = cpt.prob(&parent_states, states[cpt.child()]);
            if p == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            lp += p.ln();
        }
        acc.add(row.weight * lp);
    }
    Ok(acc.value())
}
