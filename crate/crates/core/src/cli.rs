//! Command-line surface. Each subcommand is a plain function writing to a
//! caller-supplied sink and returning the process exit code, so the binary
//! stays a thin shell and tests drive commands in-process.
//!
//! Exit codes: 0 success, 1 usage, 2 validation, 3 resource guard,
//! 4 computation.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::counterfactual::{evaluate, CausalQuery, QueryKind};
use crate::data::{binarize, read_counts, read_records, BinarizationMap, Dataset};
use crate::emcc::{emcc_bounds, scm_log_likelihood, EmConfig, EmccReport};
use crate::error::{Error, Result};
use crate::model::{load_queries, DataFormat, Model, ModelFile, RunManifest};
use crate::oracle::{backdoor_ace, exact_query, forward_sample};
use crate::pgm::{log_likelihood, mle_cpts};
use crate::report::write_reports;
use crate::running_example;
use crate::scm::{canonical_cardinality, classify, MarkovClass, DEFAULT_CARDINALITY_GUARD};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "causal-twin",
    version,
    about = "Counterfactual bounds for discrete structural causal models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model file and print JSON diagnostics.
    Validate {
        model: PathBuf,
        #[arg(long)]
        guard: Option<u64>,
    },
    /// Replace a model's equations with the canonical ones.
    Canonicalize {
        model: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        guard: Option<u64>,
    },
    /// Run EMCC as described by a manifest and write interval reports.
    Learn {
        manifest: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Skip the SVG charts.
        #[arg(long)]
        no_plot: bool,
    },
    /// Evaluate queries on a fully specified model.
    Query { model: PathBuf, queries: PathBuf },
    /// Compare twin-network evaluation against exhaustive enumeration.
    Verify { model: PathBuf, queries: PathBuf },
    /// Reproduce the built-in treatment example end to end.
    Replicate {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Forward-sample records from a fully specified model as CSV.
    Sample {
        model: PathBuf,
        #[arg(short = 'n', long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Aggregate identical rows into a `counts` column.
        #[arg(long)]
        counts: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Command-line values win over manifest values, which win over defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Number of EM restarts.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Iteration cap per run.
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// Convergence threshold on the log-likelihood change.
    #[arg(long = "tol")]
    pub tol: Option<f64>,
    /// Base seed; run r uses seed + r.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Largest exogenous cardinality allowed when canonicalizing.
    #[arg(long)]
    pub guard: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, mut config: EmConfig) -> Result<EmConfig> {
        if let Some(v) = self.runs {
            config.runs = v;
        }
        if let Some(v) = self.max_iter {
            config.max_iterations = v;
        }
        if let Some(v) = self.tol {
            config.tolerance = v;
        }
        if let Some(v) = self.seed {
            config.base_seed = v;
        }
        if let Some(v) = self.workers {
            config.workers = v;
        }
        config.validate()?;
        Ok(config)
    }
}

fn emit(out: &mut dyn Write, text: impl AsRef<str>) -> Result<()> {
    out.write_all(text.as_ref().as_bytes())
        .map_err(|e| Error::io("<output>", e))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<u8> {
    match cli.command {
        Command::Validate { model, guard } => {
            let v = cmd_validate(&model, guard.unwrap_or(DEFAULT_CARDINALITY_GUARD));
            emit(out, serde_json::to_string_pretty(&v).expect("serializable") + "\n")?;
            Ok(v.exit_code)
        }
        Command::Canonicalize { model, output, guard } => {
            let file = cmd_canonicalize(&model, guard.unwrap_or(DEFAULT_CARDINALITY_GUARD))?;
            let text = file.to_json() + "\n";
            match output {
                Some(p) => std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?,
                None => emit(out, text)?,
            }
            Ok(EXIT_OK)
        }
        Command::Learn {
            manifest,
            overrides,
            no_plot,
        } => {
            let outcome = cmd_learn(&manifest, &overrides, no_plot)?;
            emit(out, summary_table(&outcome.report))?;
            for p in &outcome.written {
                emit(out, format!("wrote {}\n", p.display()))?;
            }
            Ok(EXIT_OK)
        }
        Command::Query { model, queries } => {
            let rows = cmd_query(&model, &queries)?;
            let mut text = String::from("query_kind,cause,effect,value\n");
            let mut undefined = false;
            for (q, v) in &rows {
                let v = v.map(|v| v.to_string()).unwrap_or_else(|| {
                    undefined = true;
                    "undefined".into()
                });
                text += &format!("{},{},{},{v}\n", q.kind, q.cause, q.effect);
            }
            emit(out, text)?;
            Ok(if undefined {
                Error::UndefinedQuery(String::new()).exit_code() as u8
            } else {
                EXIT_OK
            })
        }
        Command::Verify { model, queries } => {
            let rows = cmd_verify(&model, &queries)?;
            let mut ok = true;
            for r in &rows {
                ok &= r.agree;
                emit(
                    out,
                    format!(
                        "[{}] {} twin={} enumeration={}\n",
                        if r.agree { "AGREE" } else { "DISAGREE" },
                        r.query,
                        fmt_opt(r.twin),
                        fmt_opt(r.enumeration)
                    ),
                )?;
            }
            Ok(if ok { EXIT_OK } else { 4 })
        }
        Command::Replicate { overrides, output_dir } => {
            let rep = cmd_replicate(&overrides)?;
            emit(out, rep.render())?;
            if let Some(dir) = output_dir {
                for p in write_reports(&dir, &rep.emcc, &rep.config, true)? {
                    emit(out, format!("wrote {}\n", p.display()))?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Sample {
            model,
            n,
            seed,
            counts,
            output,
        } => {
            let data = cmd_sample(&model, n, seed)?;
            let data = if counts { data.aggregated() } else { data };
            let mut buf = Vec::new();
            data.write_csv(&mut buf, counts)?;
            match output {
                Some(p) => std::fs::write(&p, buf).map_err(|e| Error::io(&p, e))?,
                None => out.write_all(&buf).map_err(|e| Error::io("<output>", e))?,
            }
            Ok(EXIT_OK)
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.12}")).unwrap_or_else(|| "undefined".into())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: u8,
}

impl From<&Error> for Diagnostic {
    fn from(e: &Error) -> Self {
        let kind = match e {
            Error::Cycle(_) => "Cycle",
            Error::Schema(_) => "Schema",
            Error::InvalidModel(_) => "InvalidModel",
            Error::CardinalityOverflow { .. } => "CardinalityOverflow",
            Error::MissingPrior(_) => "MissingPrior",
            Error::Parse(_) => "Parse",
            Error::Io { .. } => "Io",
            _ => "Other",
        };
        Self {
            kind,
            message: e.to_string(),
            exit_code: e.exit_code() as u8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CardinalityEntry {
    pub variable: String,
    /// `None` when the guard fires.
    pub canonical_cardinality: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validation {
    pub valid: bool,
    pub markov_class: Option<MarkovClass>,
    pub has_equations: bool,
    pub has_priors: bool,
    pub canonical_cardinalities: Vec<CardinalityEntry>,
    pub diagnostics: Vec<Diagnostic>,
    pub exit_code: u8,
}

pub fn cmd_validate(path: &Path, guard: u64) -> Validation {
    let mut v = Validation {
        valid: false,
        markov_class: None,
        has_equations: false,
        has_priors: false,
        canonical_cardinalities: Vec::new(),
        diagnostics: Vec::new(),
        exit_code: 0,
    };
    let fail = |v: &mut Validation, e: &Error| v.diagnostics.push(Diagnostic::from(e));
    let file = match ModelFile::load(path) {
        Ok(f) => f,
        Err(e) => {
            fail(&mut v, &e);
            return finish(v);
        }
    };
    v.has_equations = file.equations.is_some();
    v.has_priors = file.priors.is_some();
    let (vars, dag) = match file.variables().and_then(|vars| Ok((vars, file.dag()?))) {
        Ok(x) => x,
        Err(e) => {
            fail(&mut v, &e);
            return finish(v);
        }
    };
    for (i, var) in vars.iter().enumerate() {
        let parent_cards: Vec<u64> = dag.parents(i).iter().map(|&p| vars[p].card() as u64).collect();
        let card = match canonical_cardinality(var.card() as u64, &parent_cards, guard) {
            Ok(c) => Some(c),
            Err(Error::CardinalityOverflow {
                child_card, exponent, ..
            }) => {
                fail(
                    &mut v,
                    &Error::CardinalityOverflow {
                        variable: var.name().to_string(),
                        child_card,
                        exponent,
                        guard,
                    },
                );
                None
            }
            Err(e) => {
                fail(&mut v, &e);
                None
            }
        };
        v.canonical_cardinalities.push(CardinalityEntry {
            variable: var.name().to_string(),
            canonical_cardinality: card,
        });
    }
    match file.build() {
        Ok(Model { scm: Some(scm), .. }) => v.markov_class = Some(classify(&scm)),
        Ok(_) => v.markov_class = Some(MarkovClass::Markovian),
        Err(e) => fail(&mut v, &e),
    }
    finish(v)
}

fn finish(mut v: Validation) -> Validation {
    v.valid = v.diagnostics.is_empty();
    v.exit_code = v.diagnostics.first().map_or(EXIT_OK, |d| d.exit_code);
    v
}

pub fn cmd_canonicalize(path: &Path, guard: u64) -> Result<ModelFile> {
    let model = Model::load(path)?;
    let scm = crate::scm::build_canonical_scm(&model.variables, &model.dag, guard)?;
    Ok(ModelFile::from_scm(&scm))
}

pub struct LearnOutcome {
    pub report: EmccReport,
    pub config: EmConfig,
    pub written: Vec<PathBuf>,
}

/// Loads the manifest's data, binarized when a map is given.
pub fn load_data(manifest: &RunManifest, model: &Model, binarization: Option<&BinarizationMap>) -> Result<Dataset> {
    let read = |schema| match manifest.data_format {
        DataFormat::Records => read_records(&manifest.data, schema),
        DataFormat::Counts => read_counts(&manifest.data, schema),
    };
    match binarization {
        Some(map) => {
            let raw = read(None)?;
            let names: Vec<&str> = model.variables.iter().map(|v| v.name()).collect();
            binarize(&raw.project(&names)?, map)
        }
        None => read(Some(&model.variables)),
    }
}

pub fn cmd_learn(manifest_path: &Path, overrides: &Overrides, no_plot: bool) -> Result<LearnOutcome> {
    let manifest = RunManifest::load(manifest_path)?;
    let config = overrides.apply(manifest.config.clone())?;
    let guard = overrides.guard.or(manifest.guard).unwrap_or(DEFAULT_CARDINALITY_GUARD);
    let model = Model::load(&manifest.model)?;
    let binarization = manifest.binarization.as_ref().map(BinarizationMap::load).transpose()?;
    let skeleton = model.skeleton(guard)?;
    let data = load_data(&manifest, &model, binarization.as_ref())?;
    let queries = load_queries(&manifest.queries, &model.variables, binarization.as_ref())?;
    let report = emcc_bounds(&skeleton, &data, &queries, &config)?;
    let written = write_reports(&manifest.output_dir, &report, &config, manifest.plot && !no_plot)?;
    Ok(LearnOutcome {
        report,
        config,
        written,
    })
}

pub fn summary_table(report: &EmccReport) -> String {
    let mut s = format!(
        "{:<22} {:>10} {:>10} {:>6} {:>9}\n",
        "query", "lower", "upper", "runs", "undefined"
    );
    for iv in &report.intervals {
        s += &format!(
            "{:<22} {:>10} {:>10} {:>6} {:>9}\n",
            iv.query.to_string(),
            iv.lower.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
            iv.upper.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
            iv.per_run_values.len() + iv.undefined_runs,
            iv.undefined_runs
        );
    }
    s
}

/// Query values on a fully specified model; `None` where undefined.
pub fn cmd_query(model_path: &Path, queries_path: &Path) -> Result<Vec<(CausalQuery, Option<f64>)>> {
    let model = Model::load(model_path)?;
    let scm = model.fully_specified()?;
    let queries = load_queries(queries_path, &model.variables, None)?;
    queries
        .into_iter()
        .map(|q| match evaluate(scm, &q) {
            Ok(v) => Ok((q, Some(v))),
            Err(Error::UndefinedQuery(_)) => Ok((q, None)),
            Err(e) => Err(e),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub query: CausalQuery,
    pub twin: Option<f64>,
    pub enumeration: Option<f64>,
    pub agree: bool,
}

pub const VERIFY_TOLERANCE: f64 = 1e-9;

pub fn cmd_verify(model_path: &Path, queries_path: &Path) -> Result<Vec<VerifyRow>> {
    let model = Model::load(model_path)?;
    let scm = model.fully_specified()?;
    let queries = load_queries(queries_path, &model.variables, None)?;
    let defined = |r: Result<f64>| match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedQuery(_)) => Ok(None),
        Err(e) => Err(e),
    };
    queries
        .into_iter()
        .map(|q| {
            let enumeration = defined(exact_query(scm, &q))?;
            let twin = defined(evaluate(scm, &q))?;
            let agree = match (twin, enumeration) {
                (Some(a), Some(b)) => (a - b).abs() <= VERIFY_TOLERANCE,
                (None, None) => true,
                _ => false,
            };
            Ok(VerifyRow {
                query: q,
                twin,
                enumeration,
                agree,
            })
        })
        .collect()
}

pub fn cmd_sample(model_path: &Path, n: usize, seed: u64) -> Result<Dataset> {
    let model = Model::load(model_path)?;
    forward_sample(model.fully_specified()?, n, seed)
}

/// Everything `replicate` reports about the built-in example.
pub struct Replication {
    /// `(label, estimate)` in display order.
    pub conditionals: Vec<(String, f64)>,
    pub sign_reversal: bool,
    pub backdoor_ace: f64,
    pub mle_log_likelihood: f64,
    pub reference_log_likelihood: f64,
    pub reference_pn: f64,
    pub config: EmConfig,
    pub emcc: EmccReport,
}

impl Replication {
    pub fn conditional(&self, label: &str) -> f64 {
        self.conditionals
            .iter()
            .find(|(l, _)| l == label)
            .map(|c| c.1)
            .unwrap_or(f64::NAN)
    }

    pub fn render(&self) -> String {
        let mut s = String::from("Recovery rates\n");
        for (label, v) in &self.conditionals {
            s += &format!("  {label:<24} {v:.4}\n");
        }
        s += &format!(
            "Sign reversal (aggregate favors treatment, every stratum opposes it): {}\n",
            if self.sign_reversal { "yes" } else { "no" }
        );
        s += &format!("Backdoor ACE(I, A) over M: {:.6}\n", self.backdoor_ace);
        s += &format!(
            "Log-likelihood: MLE {:.6}, reference SCM {:.6}, gap {:.2e}\n",
            self.mle_log_likelihood,
            self.reference_log_likelihood,
            self.mle_log_likelihood - self.reference_log_likelihood
        );
        s += &format!("\nEMCC intervals ({} runs)\n", self.config.runs);
        s += &summary_table(&self.emcc);
        if let Some(pn) = self.emcc.intervals.iter().find(|iv| iv.query.kind == QueryKind::Pn) {
            s += &format!(
                "Reference SCM PN = {:.6}: {} the EMCC interval\n",
                self.reference_pn,
                if pn.contains(self.reference_pn, 0.0) {
                    "inside"
                } else {
                    "outside"
                }
            );
        }
        s
    }
}

pub fn cmd_replicate(overrides: &Overrides) -> Result<Replication> {
    let data = running_example::dataset();
    let net = mle_cpts(&running_example::dag(), &data)?;
    let (m, i, a) = (0, 1, 2);
    let (yes, no) = (0, 1);
    let p = |cond: &[(usize, usize)]| {
        let mut with_a = cond.to_vec();
        with_a.push((a, yes));
        data.count(&with_a) / data.count(cond)
    };
    let conditionals: Vec<(String, f64)> = vec![
        ("P(A=yes | I=yes)".into(), p(&[(i, yes)])),
        ("P(A=yes | I=no)".into(), p(&[(i, no)])),
        ("P(A=yes | M=yes, I=yes)".into(), p(&[(m, yes), (i, yes)])),
        ("P(A=yes | M=yes, I=no)".into(), p(&[(m, yes), (i, no)])),
        ("P(A=yes | M=no, I=yes)".into(), p(&[(m, no), (i, yes)])),
        ("P(A=yes | M=no, I=no)".into(), p(&[(m, no), (i, no)])),
    ];
    let c = |k: usize| conditionals[k].1;
    let sign_reversal = c(0) - c(1) > 0.0 && c(2) - c(3) < 0.0 && c(4) - c(5) < 0.0;
    let ace = CausalQuery::yes_no(QueryKind::Ace, "I", "A");
    let backdoor = backdoor_ace(&data, &ace, &["M"])?;
    let reference = running_example::reference_scm();
    let config = overrides.apply(EmConfig::default())?;
    let queries: Vec<CausalQuery> = [QueryKind::Ace, QueryKind::Pn, QueryKind::Ps, QueryKind::Pns]
        .into_iter()
        .map(|k| ace.with_kind(k))
        .collect();
    let guard = overrides.guard.unwrap_or(DEFAULT_CARDINALITY_GUARD);
    let skeleton = crate::scm::build_canonical_scm(&running_example::variables(), &running_example::dag(), guard)?;
    let emcc = emcc_bounds(&skeleton, &data, &queries, &config)?;
    Ok(Replication {
        conditionals,
        sign_reversal,
        backdoor_ace: backdoor,
        mle_log_likelihood: log_likelihood(&net, &data)?,
        reference_log_likelihood: scm_log_likelihood(&reference, &data)?,
        reference_pn: exact_query(&reference, &ace.with_kind(QueryKind::Pn))?,
        config,
        emcc,
    })
}
