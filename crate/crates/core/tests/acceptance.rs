//! Acceptance suite. Run with `cargo test --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion. Every tolerance and time budget
//! is pinned here.

use std::path::Path;
use std::time::{Duration, Instant};

use causal_twin::cli::{cmd_learn, Overrides};
use causal_twin::emcc::{em_runs, EmRunResult};
use causal_twin::oracle::{backdoor_ace, dirichlet_uniform, exact_query, forward_sample, random_small_scm};
use causal_twin::pgm::{mle_cpts, variable_elimination, Evidence};
use causal_twin::scm::DEFAULT_CARDINALITY_GUARD;
use causal_twin::{
    build_canonical_scm, emcc_bounds, evaluate, running_example, CausalQuery, Dag, EmConfig, Error, QueryKind, Scm,
    Variable,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const C1_TOL: f64 = 0.01;
const C1_BUDGET: Duration = Duration::from_secs(1);
const C2_TOL: f64 = 0.005;
const C2_ROOT: f64 = 0.7253;
const C2_ROOT_TOL: f64 = 1e-4;
const C2_BUDGET: Duration = Duration::from_secs(1);
const C3_BUDGET: Duration = Duration::from_secs(1);
const C4_TOL: f64 = 1e-9;
const C4_RANDOM_SCMS: usize = 200;
const C4_BUDGET: Duration = Duration::from_secs(120);
const C5_MAX_WIDTH: f64 = 0.02;
const C5_BUDGET: Duration = Duration::from_secs(600);
const C6_SLACK: f64 = 1e-9;
const C6_MAX_ITER: usize = 300;
const C7_REPS: usize = 100;
const C7_MIN_COVERED: usize = 95;
const C7_N: usize = 5000;
const C7_TRUTH_SEED: u64 = 2024;
const C7_BUDGET: Duration = Duration::from_secs(1800);

struct Outcome {
    id: &'static str,
    pass: bool,
}

fn report(id: &'static str, title: &str, pass: bool, detail: String) -> Outcome {
    println!("[{}] {id} {title}: {detail}", if pass { "PASS" } else { "FAIL" });
    Outcome { id, pass }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn c1_simpson() -> Outcome {
    let (checks, took) = timed(|| {
        let net = mle_cpts(&running_example::dag(), &running_example::dataset()).unwrap();
        let (i, a) = (net.index("I").unwrap(), net.index("A").unwrap());
        let given_i = |state: usize| {
            let ev: Evidence = [(i, state)].into_iter().collect();
            variable_elimination(&net, &[a], &ev).unwrap().normalized().get(&[0])
        };
        let cpt = net.cpt(a);
        vec![
            ("P(A=yes|I=yes)", given_i(0), 0.42),
            ("P(A=yes|I=no)", given_i(1), 0.40),
            ("P(A=yes|M=yes,I=yes)", cpt.prob(&[0, 0], 0), 0.28),
            ("P(A=yes|M=yes,I=no)", cpt.prob(&[0, 1], 0), 0.30),
            ("P(A=yes|M=no,I=yes)", cpt.prob(&[1, 0], 0), 0.70),
            ("P(A=yes|M=no,I=no)", cpt.prob(&[1, 1], 0), 0.85),
        ]
    });
    let worst = checks
        .iter()
        .map(|(_, got, want)| (got - want).abs())
        .fold(0.0, f64::max);
    let reversal = checks[0].1 > checks[1].1 && checks[2].1 < checks[3].1 && checks[4].1 < checks[5].1;
    let pass = worst <= C1_TOL && reversal && took < C1_BUDGET;
    let listed: Vec<String> = checks.iter().map(|(l, g, _)| format!("{l}={g:.4}")).collect();
    report(
        "C1",
        "Simpson's paradox conditionals",
        pass,
        format!(
            "{}; max |err| {worst:.4} <= {C1_TOL}; reversal {reversal}; {took:.2?} < {C1_BUDGET:?}",
            listed.join(" ")
        ),
    )
}

fn c2_cpts() -> Outcome {
    let (net, took) = timed(|| mle_cpts(&running_example::dag(), &running_example::dataset()).unwrap());
    let (m, i, a) = (0, 1, 2);
    // (cpt, parent states, child state, figure value)
    let figure: [(usize, &[usize], usize, f64); 14] = [
        (m, &[], 0, 0.73),
        (m, &[], 1, 0.27),
        (i, &[0], 0, 0.56),
        (i, &[0], 1, 0.44),
        (i, &[1], 0, 0.76),
        (i, &[1], 1, 0.24),
        (a, &[0, 0], 0, 0.28),
        (a, &[0, 0], 1, 0.72),
        (a, &[0, 1], 0, 0.30),
        (a, &[0, 1], 1, 0.70),
        (a, &[1, 0], 0, 0.70),
        (a, &[1, 0], 1, 0.30),
        (a, &[1, 1], 0, 0.85),
        (a, &[1, 1], 1, 0.15),
    ];
    let worst = figure
        .iter()
        .map(|&(v, pa, s, want)| (net.cpt(v).prob(pa, s) - want).abs())
        .fold(0.0, f64::max);
    let root = net.cpt(m).prob(&[], 0);
    let pass = worst <= C2_TOL && (root - C2_ROOT).abs() <= C2_ROOT_TOL && took < C2_BUDGET;
    report(
        "C2",
        "MLE CPTs",
        pass,
        format!(
            "{} entries max |err| {worst:.4} <= {C2_TOL}; P(M=yes)={root:.6} vs {C2_ROOT} +- {C2_ROOT_TOL}; {took:.2?} < {C2_BUDGET:?}",
            figure.len()
        ),
    )
}

fn c3_canonical() -> Outcome {
    const A_ROWS: [&str; 4] = [
        "yyyyyyyynnnnnnnn",
        "yynnyynnyynnyynn",
        "yyyynnnnyyyynnnn",
        "ynynynynynynynyn",
    ];
    let ((cards, rows, guard), took) = timed(|| {
        let scm = running_example::canonical();
        let cards: Vec<usize> = scm.exogenous().iter().map(|u| u.card()).collect();
        let f_a = scm.equation(2);
        let rows: Vec<String> = (0..f_a.n_configs())
            .map(|cfg| {
                (0..f_a.exo_card())
                    .map(|u| if f_a.apply(u, cfg) == 0 { 'y' } else { 'n' })
                    .collect()
            })
            .collect();
        let names: Vec<String> = ["P1", "P2", "P3", "P4", "P5", "C"].map(String::from).to_vec();
        let edges: Vec<(usize, usize)> = (0..5).map(|p| (p, 5)).collect();
        let vars: Vec<Variable> = names.iter().map(|n| Variable::binary(n.clone())).collect();
        let guard = build_canonical_scm(&vars, &Dag::new(names, &edges).unwrap(), DEFAULT_CARDINALITY_GUARD);
        (cards, rows, guard)
    });
    let guard_msg = match &guard {
        Err(e @ Error::CardinalityOverflow { .. }) => e.to_string(),
        other => format!("unexpected {other:?}"),
    };
    let pass = cards == [2, 4, 16] && rows == A_ROWS && guard_msg.contains("2^32") && took < C3_BUDGET;
    report(
        "C3",
        "canonical construction",
        pass,
        format!(
            "cardinalities {cards:?}; f_A rows {}; guard \"{guard_msg}\"; {took:.2?} < {C3_BUDGET:?}",
            if rows == A_ROWS { "match" } else { "differ" }
        ),
    )
}

fn agree(scm: &Scm, q: &CausalQuery) -> (bool, bool) {
    match (evaluate(scm, q), exact_query(scm, q)) {
        (Ok(a), Ok(b)) => ((a - b).abs() <= C4_TOL, true),
        (Err(Error::UndefinedQuery(_)), Err(Error::UndefinedQuery(_))) => (true, false),
        _ => (false, false),
    }
}

fn c4_oracle() -> Outcome {
    let ((reference_ok, agreed, compared, defined), took) = timed(|| {
        let reference = running_example::reference_scm();
        let reference_ok = QueryKind::ALL
            .iter()
            .all(|&k| matches!(agree(&reference, &CausalQuery::yes_no(k, "I", "A")), (true, true)));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (mut agreed, mut compared, mut defined) = (0, 0, 0);
        for _ in 0..C4_RANDOM_SCMS {
            let scm = random_small_scm(&mut rng, 4);
            let n = scm.endogenous().len();
            let effect = rng.random_range(1..n);
            let cause = rng.random_range(0..effect);
            let (c, e) = (scm.endogenous()[cause].name(), scm.endogenous()[effect].name());
            for k in QueryKind::ALL {
                let (ok, def) = agree(&scm, &CausalQuery::yes_no(k, c, e));
                agreed += ok as usize;
                defined += def as usize;
                compared += 1;
            }
        }
        (reference_ok, agreed, compared, defined)
    });
    let pass = reference_ok && agreed == compared && took < C4_BUDGET;
    report(
        "C4",
        "twin network vs enumeration",
        pass,
        format!(
            "reference model 6/6 {}; {C4_RANDOM_SCMS} random SCMs {agreed}/{compared} agree within {C4_TOL:e} ({defined} defined); {took:.2?} < {C4_BUDGET:?}",
            if reference_ok { "agree" } else { "DISAGREE" }
        ),
    )
}

fn all_queries(cause: &str, effect: &str) -> Vec<CausalQuery> {
    QueryKind::ALL
        .iter()
        .map(|&k| CausalQuery::yes_no(k, cause, effect))
        .collect()
}

fn c5_and_pn_note() -> Outcome {
    let data = running_example::dataset();
    let config = EmConfig::default();
    let (report_, took) =
        timed(|| emcc_bounds(&running_example::canonical(), &data, &all_queries("I", "A"), &config).unwrap());
    let backdoor = backdoor_ace(&data, &CausalQuery::yes_no(QueryKind::Ace, "I", "A"), &["M"]).unwrap();
    let find = |k: QueryKind| report_.intervals.iter().find(|iv| iv.query.kind == k).unwrap();
    let ace = find(QueryKind::Ace);
    let width = ace.width().unwrap_or(f64::INFINITY);
    let pass = config.runs == 100
        && config.max_iterations == 300
        && width < C5_MAX_WIDTH
        && ace.contains(backdoor, 0.0)
        && took < C5_BUDGET;
    let outcome = report(
        "C5",
        "identifiable ACE collapses",
        pass,
        format!(
            "{} runs, cap {}; ACE [{:.6}, {:.6}] width {width:.2e} < {C5_MAX_WIDTH}; backdoor {backdoor:.7} {}; {took:.2?} < {C5_BUDGET:?}",
            config.runs,
            config.max_iterations,
            ace.lower.unwrap_or(f64::NAN),
            ace.upper.unwrap_or(f64::NAN),
            if ace.contains(backdoor, 0.0) { "inside" } else { "OUTSIDE" }
        ),
    );

    // Per-stratum Frechet bounds on P(A_{I=no}=no, A_{I=yes}=yes | M) give
    // PN in [0, (95 + 173*8/55)/216]. The reference SCM sits just below that
    // vertex, so a restart-based inner interval is not expected to reach it.
    let pn = find(QueryKind::Pn);
    let pn_upper = (95.0 + 173.0 * 8.0 / 55.0) / 216.0;
    let reference_pn = exact_query(&running_example::reference_scm(), &pn.query).unwrap();
    let (lo, hi) = (pn.lower.unwrap(), pn.upper.unwrap());
    let place = if pn.contains(reference_pn, 0.0) {
        "inside"
    } else {
        "outside"
    };
    println!(
        "[INFO] reference-SCM PN {reference_pn:.7} is {place} EMCC [{lo:.4}, {hi:.4}]; analytic PN bounds [0, {pn_upper:.7}], vertex gap {:.1e}",
        pn_upper - reference_pn
    );
    assert!(
        0.0 <= lo && hi <= pn_upper + 1e-12,
        "EMCC PN interval escapes the analytic bounds"
    );
    outcome
}

fn bits(r: &EmRunResult) -> (Vec<u64>, Vec<u64>) {
    (
        r.loglik_trajectory.iter().map(|x| x.to_bits()).collect(),
        r.priors.iter().flatten().map(|x| x.to_bits()).collect(),
    )
}

fn c6_em_properties() -> Outcome {
    let skeleton = running_example::canonical();
    let data = running_example::dataset();
    let config = EmConfig::default();
    let (runs, _) = em_runs(&skeleton, &data, &config).unwrap();
    let (again, _) = em_runs(
        &skeleton,
        &data,
        &EmConfig {
            workers: 1,
            ..config.clone()
        },
    )
    .unwrap();
    let monotone = runs
        .iter()
        .all(|r| r.loglik_trajectory.windows(2).all(|w| w[1] >= w[0] - C6_SLACK));
    let capped = runs.iter().all(|r| r.iterations_used <= C6_MAX_ITER);
    let identical = runs.len() == again.len() && runs.iter().zip(&again).all(|(a, b)| bits(a) == bits(b));
    let max_iter = runs.iter().map(|r| r.iterations_used).max().unwrap_or(0);
    report(
        "C6",
        "EM properties",
        monotone && capped && identical,
        format!(
            "{} runs; non-decreasing (slack {C6_SLACK:e}) {monotone}; max iterations {max_iter} <= {C6_MAX_ITER}; bit-identical rerun {identical}",
            runs.len()
        ),
    )
}

fn c7_coverage() -> Outcome {
    let kinds = [QueryKind::Pn, QueryKind::Ps, QueryKind::Pns];
    let ((truth_values, covered), took) = timed(|| {
        let skeleton = running_example::canonical();
        let mut rng = ChaCha8Rng::seed_from_u64(C7_TRUTH_SEED);
        let priors = skeleton
            .exogenous()
            .iter()
            .map(|u| dirichlet_uniform(&mut rng, u.card()))
            .collect();
        let truth = skeleton.with_priors(priors).unwrap();
        let queries: Vec<CausalQuery> = kinds.iter().map(|&k| CausalQuery::yes_no(k, "I", "A")).collect();
        let truth_values: Vec<f64> = queries.iter().map(|q| exact_query(&truth, q).unwrap()).collect();
        let mut covered = [0usize; 3];
        for rep in 0..C7_REPS as u64 {
            let data = forward_sample(&truth, C7_N, 1000 + rep).unwrap();
            let config = EmConfig {
                base_seed: rep * 1000,
                ..EmConfig::default()
            };
            let r = emcc_bounds(&skeleton, &data, &queries, &config).unwrap();
            for (j, iv) in r.intervals.iter().enumerate() {
                covered[j] += iv.contains(truth_values[j], 0.0) as usize;
            }
        }
        (truth_values, covered)
    });
    let pass = covered.iter().all(|&c| c >= C7_MIN_COVERED) && took < C7_BUDGET;
    let listed: Vec<String> = kinds
        .iter()
        .zip(&truth_values)
        .zip(&covered)
        .map(|((k, t), c)| format!("{k} truth {t:.4} covered {c}/{C7_REPS}"))
        .collect();
    report(
        "C7",
        "synthetic coverage",
        pass,
        format!(
            "N={C7_N}; {}; need >= {C7_MIN_COVERED}; {took:.2?} < {C7_BUDGET:?}",
            listed.join(", ")
        ),
    )
}

fn c8_case_study() -> Outcome {
    let data_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.json");
    let abs = |f: &str| data_dir.join(f).display().to_string();
    let doc = serde_json::json!({
        "model": abs("case_study_model.json"),
        "data": abs("case_study_records.csv"),
        "binarization": abs("land_use_binarization.json"),
        "queries": abs("case_study_queries.json"),
        "config": {"runs": 20, "base_seed": 1},
        "output_dir": dir.path().join("out").display().to_string(),
    });
    std::fs::write(&manifest, doc.to_string()).unwrap();
    let outcome = cmd_learn(&manifest, &Overrides::default(), false).unwrap();
    let in_range = outcome.report.intervals.iter().all(|iv| {
        let (lo, hi) = iv.query.kind.range();
        match (iv.lower, iv.upper) {
            (Some(l), Some(u)) => lo <= l && l <= u && u <= hi,
            _ => false,
        }
    });
    let files = ["intervals.json", "intervals.csv", "runs.json", "intervals_EGR.svg"];
    let written = files.iter().all(|f| dir.path().join("out").join(f).exists());
    let csv_rows = std::fs::read_to_string(dir.path().join("out/intervals.csv"))
        .map(|s| s.lines().count())
        .unwrap_or(0);
    let shape = outcome.report.intervals.len() == 7 && outcome.report.runs.len() == 20 && csv_rows == 8;
    report(
        "C8",
        "case-study pipeline smoke test",
        in_range && written && shape,
        format!(
            "ingest+binarize+learn on MGU,IME,EGR; {} intervals within kind ranges {in_range}; reports written {written}; csv rows {csv_rows}",
            outcome.report.intervals.len()
        ),
    )
}

#[test]
fn acceptance() {
    let outcomes = [
        c1_simpson(),
        c2_cpts(),
        c3_canonical(),
        c4_oracle(),
        c5_and_pn_note(),
        c6_em_properties(),
        c7_coverage(),
        c8_case_study(),
    ];
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!(
        "acceptance: {}/{} criteria pass",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
