//! The three-variable treatment example: M (sex), I (treatment) and A
//! (recovery), all yes/no, with M→I, M→A, I→A and 830 patients.

use crate::data::{parse_counts, Dataset};
use crate::pgm::{Dag, Variable};
use crate::scm::{build_canonical_scm, Scm, StructuralEquation, DEFAULT_CARDINALITY_GUARD};

pub const COUNTS_CSV: &str = "\
M,I,A,counts
yes,yes,yes,95
yes,yes,no,244
yes,no,yes,80
yes,no,no,183
no,yes,yes,121
no,yes,no,52
no,no,yes,47
no,no,no,8
";

pub fn variables() -> Vec<Variable> {
    ["M", "I", "A"].into_iter().map(Variable::binary).collect()
}

pub fn dag() -> Dag {
    Dag::from_named_edges(&["M", "I", "A"], &[("M", "I"), ("M", "A"), ("I", "A")]).expect("acyclic")
}

pub fn dataset() -> Dataset {
    parse_counts(COUNTS_CSV.as_bytes(), Some(&variables())).expect("embedded table is valid")
}

/// Canonical SCM without priors; exogenous cardinalities (2, 4, 16).
pub fn canonical() -> Scm {
    build_canonical_scm(&variables(), &dag(), DEFAULT_CARDINALITY_GUARD).expect("small model")
}

/// A compact, fully specified SCM compatible with the observed data: W
/// drives M, V drives I and a 10-state U drives A.
pub fn reference_scm() -> Scm {
    const Y: usize = 0;
    const N: usize = 1;
    let exogenous = vec![
        Variable::new("W", ["w1", "w2"]).expect("distinct"),
        Variable::new("V", ["v1", "v2", "v3", "v4"]).expect("distinct"),
        Variable::new("U", (1..=10).map(|k| format!("u{k}"))).expect("distinct"),
    ];
    let f_m = StructuralEquation::new(0, vec![], 0, 2, vec![Y, N]);
    // table[v * 2 + m]
    let i_rows = [[Y, Y], [Y, N], [N, Y], [N, N]];
    let f_i = StructuralEquation::new(1, vec![0], 1, 4, i_rows.concat());
    // one string per (M, I) configuration, listing u1..u10
    let a_by_cfg = ["yyyyynnnnn", "ynyynynnyn", "yynnnyyynn", "yyynyyynyy"];
    let mut a_table = vec![0; 40];
    for (cfg, row) in a_by_cfg.iter().enumerate() {
        for (u, c) in row.chars().enumerate() {
            a_table[u * 4 + cfg] = if c == 'y' { Y } else { N };
        }
    }
    let f_a = StructuralEquation::new(2, vec![0, 1], 2, 10, a_table);
    let priors = vec![
        vec![0.7253, 0.2747],
        vec![0.56312, 0.0, 0.19565, 0.24123],
        vec![0.0, 0.24979, 0.0, 0.0, 0.03045, 0.30418, 0.0, 0.14545, 0.0, 0.27013],
    ];
    Scm::new(variables(), exogenous, vec![f_m, f_i, f_a], Some(priors)).expect("well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterfactual::{evaluate, CausalQuery, QueryKind};
    use crate::emcc::scm_log_likelihood;
    use crate::oracle::exact_query;
    use crate::pgm::{log_likelihood, mle_cpts};

    // Values obtained by exact enumeration of the reference model in an
    // independent script.
    const GOLDEN: [(QueryKind, f64); 6] = [
        (QueryKind::CondDiff, 0.022507448732847),
        (QueryKind::Ace, -0.059977893),
        (QueryKind::Pn, 0.556311463150080),
        (QueryKind::Pnrc, 0.760089846253601),
        (QueryKind::Ps, 0.427762975324395),
        (QueryKind::Pns, 0.243213187),
    ];

    #[test]
    fn reference_model_query_values() {
        let scm = reference_scm();
        for (kind, want) in GOLDEN {
            let q = CausalQuery::yes_no(kind, "I", "A");
            let got = evaluate(&scm, &q).unwrap();
            let oracle = exact_query(&scm, &q).unwrap();
            assert!((got - want).abs() < 1e-9, "{kind}: {got} vs {want}");
            assert!((oracle - want).abs() < 1e-9, "{kind}: oracle {oracle} vs {want}");
        }
    }

    #[test]
    fn reference_model_nearly_attains_mle() {
        let data = dataset();
        let mle = log_likelihood(&mle_cpts(&dag(), &data).unwrap(), &data).unwrap();
        assert!((mle - (-1517.6100842415)).abs() < 1e-8);
        let ll = scm_log_likelihood(&reference_scm(), &data).unwrap();
        assert!((ll - (-1517.610084280899)).abs() < 1e-8);
        assert!(mle - ll < 1e-6);
    }

    #[test]
    fn canonical_cardinalities() {
        let cards: Vec<usize> = canonical().exogenous().iter().map(Variable::card).collect();
        assert_eq!(cards, vec![2, 4, 16]);
        assert_eq!(dataset().total_weight(), 830.0);
    }
}
