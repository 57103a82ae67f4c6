//! EMCC on the treatment data: 100 EM restarts on the canonical SCM, each
//! query evaluated under every converged run. ACE is identified and
//! collapses; the counterfactual probabilities stay wide.

use causal_twin::oracle::backdoor_ace;
use causal_twin::{emcc_bounds, running_example, CausalQuery, EmConfig, QueryKind};

pub fn run_example() -> causal_twin::Result<String> {
    let data = running_example::dataset();
    let base = CausalQuery::yes_no(QueryKind::Ace, "I", "A");
    let queries: Vec<CausalQuery> = QueryKind::ALL.iter().map(|&k| base.with_kind(k)).collect();
    let report = emcc_bounds(&running_example::canonical(), &data, &queries, &EmConfig::default())?;
    let converged = report.runs.iter().filter(|r| r.converged).count();
    let mut out = format!("{converged}/{} runs converged\n", report.runs.len());
    for iv in &report.intervals {
        out += &format!(
            "{:<14} [{:+.4}, {:+.4}]\n",
            iv.query.to_string(),
            iv.lower.unwrap_or(f64::NAN),
            iv.upper.unwrap_or(f64::NAN)
        );
    }
    out += &format!("backdoor ACE  {:+.4}\n", backdoor_ace(&data, &base, &["M"])?);
    Ok(out)
}

fn main() -> causal_twin::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
