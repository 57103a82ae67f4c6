//! Canonical structural equations for a DAG: one exogenous state per
//! function from parent configurations to child states, and the guard that
//! refuses to build them once that count explodes.

use causal_twin::pgm::{Dag, Variable};
use causal_twin::scm::{build_canonical_scm, DEFAULT_CARDINALITY_GUARD};
use causal_twin::{running_example, Error};

pub fn run_example() -> causal_twin::Result<String> {
    let scm = running_example::canonical();
    let mut out = String::new();
    for u in scm.exogenous() {
        out += &format!("{} has {} states\n", u.name(), u.card());
    }
    let a = scm.equation(2);
    out += "f_A, one column per exogenous state; rows (M,I) = yy, yn, ny, nn\n";
    for cfg in 0..a.n_configs() {
        let row: String = (0..a.exo_card())
            .map(|u| if a.apply(u, cfg) == 0 { 'y' } else { 'n' })
            .collect();
        out += &format!("  {row}\n");
    }
    let names: Vec<String> = (1..=6).map(|i| format!("P{i}")).chain(["C".to_string()]).collect();
    for parents in [5usize, 6] {
        let edges: Vec<(usize, usize)> = (0..parents).map(|p| (p, 6)).collect();
        let dag = Dag::new(names.clone(), &edges)?;
        let vars: Vec<Variable> = names.iter().map(|n| Variable::binary(n.clone())).collect();
        match build_canonical_scm(&vars, &dag, DEFAULT_CARDINALITY_GUARD) {
            Err(e @ Error::CardinalityOverflow { .. }) => out += &format!("{parents} parents: {e}\n"),
            other => out += &format!("{parents} parents: unexpected {other:?}\n"),
        }
    }
    Ok(out)
}

fn main() -> causal_twin::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
