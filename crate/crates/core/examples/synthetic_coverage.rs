//! Draw a ground-truth SCM, sample data from it, and check whether EMCC
//! brackets the true PN, PS and PNS.

use causal_twin::oracle::{dirichlet_uniform, exact_query, forward_sample};
use causal_twin::{emcc_bounds, running_example, CausalQuery, EmConfig, QueryKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> causal_twin::Result<String> {
    let skeleton = running_example::canonical();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let priors = skeleton
        .exogenous()
        .iter()
        .map(|u| dirichlet_uniform(&mut rng, u.card()))
        .collect();
    let truth = skeleton.with_priors(priors)?;
    let data = forward_sample(&truth, 5000, 12)?;
    let queries: Vec<CausalQuery> = [QueryKind::Pn, QueryKind::Ps, QueryKind::Pns]
        .into_iter()
        .map(|k| CausalQuery::yes_no(k, "I", "A"))
        .collect();
    let config = EmConfig {
        runs: 30,
        ..EmConfig::default()
    };
    let report = emcc_bounds(&skeleton, &data, &queries, &config)?;
    let mut out = String::new();
    for iv in &report.intervals {
        let t = exact_query(&truth, &iv.query)?;
        out += &format!(
            "{:<9} truth {t:.4} interval [{:.4}, {:.4}] {}\n",
            iv.query.to_string(),
            iv.lower.unwrap_or(f64::NAN),
            iv.upper.unwrap_or(f64::NAN),
            if iv.contains(t, 0.0) { "covered" } else { "missed" }
        );
    }
    Ok(out)
}

fn main() -> causal_twin::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
