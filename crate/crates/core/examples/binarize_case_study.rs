//! Municipality records with multi-state categories: collapse them to
//! positive/negative per the land-use binarization map, then bound the
//! effect of migration on population growth.

use std::path::Path;

use causal_twin::data::read_records;
use causal_twin::model::{load_queries, Model};
use causal_twin::scm::DEFAULT_CARDINALITY_GUARD;
use causal_twin::{binarize, emcc_bounds, BinarizationMap, EmConfig};

pub fn run_example() -> causal_twin::Result<String> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let map = BinarizationMap::load(dir.join("land_use_binarization.json"))?;
    let model = Model::load(dir.join("case_study_model.json"))?;
    let raw = read_records(dir.join("case_study_records.csv"), None)?;
    let data = binarize(&raw.project(&["MGU", "IME", "EGR"])?, &map)?;
    let queries = load_queries(dir.join("case_study_queries.json"), &model.variables, Some(&map))?;
    let config = EmConfig {
        runs: 20,
        base_seed: 1,
        ..EmConfig::default()
    };
    let report = emcc_bounds(&model.skeleton(DEFAULT_CARDINALITY_GUARD)?, &data, &queries, &config)?;
    let mut out = format!(
        "{} records, {} distinct binarized rows\n",
        raw.total_weight(),
        data.rows().len()
    );
    for iv in &report.intervals {
        out += &format!(
            "{:<16} [{:.4}, {:.4}]\n",
            iv.query.to_string(),
            iv.lower.unwrap_or(f64::NAN),
            iv.upper.unwrap_or(f64::NAN)
        );
    }
    Ok(out)
}

fn main() -> causal_twin::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
