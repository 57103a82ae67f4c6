//! Exogenous prior learning by EM, and interval bounds from many restarts.
//!
//! With every endogenous variable observed, the likelihood of a record
//! factorizes over exogenous variables: `P(x) = Π_u Σ_{s ∈ C_u(x)} θ_u(s)`
//! where `C_u(x)` holds the states of `u` whose equations reproduce the
//! record at every child of `u`. The posterior of `u` is the prior
//! restricted to `C_u(x)`. The sets depend only on the skeleton, so they are
//! computed once per dataset.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counterfactual::{evaluate, CausalQuery};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::oracle::dirichlet_uniform;
use crate::pgm::{posterior_with_mass, Evidence, KahanSum};
use crate::scm::{exo_bn_id, scm_to_bn, Scm};

/// How the E-step computes exogenous posteriors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EStep {
    /// Closed-form compatible-set restriction.
    #[default]
    Factorized,
    /// Variable elimination on the compiled network, one query per record
    /// and exogenous variable. Slow; kept as a cross-check.
    VariableElimination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmConfig {
    pub runs: usize,
    pub max_iterations: usize,
    /// Convergence threshold on the absolute log-likelihood change.
    pub tolerance: f64,
    pub base_seed: u64,
    /// Applied to the random initial priors only.
    pub min_probability_floor: f64,
    /// Worker threads; 0 uses the available parallelism.
    pub workers: usize,
    pub estep: EStep,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            runs: 100,
            max_iterations: 300,
            tolerance: 1e-6,
            base_seed: 0,
            min_probability_floor: 1e-9,
            workers: 0,
            estep: EStep::Factorized,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 || self.max_iterations == 0 {
            return Err(Error::InvalidModel("runs and max_iterations must be at least 1".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !(self.min_probability_floor > 0.0 && self.min_probability_floor < 1.0) {
            return Err(Error::InvalidModel(format!(
                "min_probability_floor must lie in (0, 1), got {}",
                self.min_probability_floor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmRunResult {
    pub run_index: usize,
    pub seed: u64,
    pub priors: Vec<Vec<f64>>,
    /// Log-likelihood of the initial priors followed by one entry per M-step.
    pub loglik_trajectory: Vec<f64>,
    pub converged: bool,
    pub iterations_used: usize,
}

impl EmRunResult {
    pub fn final_log_likelihood(&self) -> f64 {
        *self
            .loglik_trajectory
            .last()
            .expect("trajectory starts with the initial value")
    }
}

/// Records of a dataset mapped onto the model's state indices, with
/// structurally impossible records split off.
#[derive(Debug, Clone)]
pub struct PreparedData {
    records: Vec<Vec<usize>>,
    weights: Vec<f64>,
    /// `compat[r][u]`: states of exogenous `u` consistent with record `r`.
    compat: Vec<Vec<Vec<usize>>>,
    excluded_weight: f64,
}

impl PreparedData {
    pub fn new(scm: &Scm, data: &Dataset) -> Result<Self> {
        data.require_nonempty()?;
        let endo = scm.endogenous();
        let mut maps = Vec::with_capacity(endo.len());
        for v in endo {
            let col = data.require_column(v.name())?;
            let map = data.schema()[col]
                .states()
                .iter()
                .map(|s| {
                    v.require_state(s)
                        .map_err(|_| Error::Schema(format!("{}: state {s} is not in the model", v.name())))
                })
                .collect::<Result<Vec<_>>>()?;
            maps.push((col, map));
        }
        let exo_children: Vec<Vec<usize>> = (0..scm.exogenous().len()).map(|u| scm.exo_children(u)).collect();
        let mut out = Self {
            records: Vec::new(),
            weights: Vec::new(),
            compat: Vec::new(),
            excluded_weight: 0.0,
        };
        for row in data.aggregated().rows() {
            if row.weight == 0.0 {
                continue;
            }
            let states: Vec<usize> = maps.iter().map(|(c, m)| m[row.states[*c]]).collect();
            let constants_hold = scm
                .equations()
                .iter()
                .filter(|eq| eq.exo_parent().is_none())
                .all(|eq| eq.apply(0, 0) == states[eq.child()]);
            let compat: Vec<Vec<usize>> = exo_children
                .iter()
                .enumerate()
                .map(|(u, children)| {
                    (0..scm.exogenous()[u].card())
                        .filter(|&s| {
                            children.iter().all(|&c| {
                                let eq = scm.equation(c);
                                eq.apply(s, scm.parent_config(c, &states)) == states[c]
                            })
                        })
                        .collect()
                })
                .collect();
            if !constants_hold || compat.iter().any(Vec::is_empty) {
                out.excluded_weight += row.weight;
                continue;
            }
            out.records.push(states);
            out.weights.push(row.weight);
            out.compat.push(compat);
        }
        if out.records.is_empty() {
            return Err(Error::EmDegenerate(
                "every record has probability zero under the structural equations".into(),
            ));
        }
        if out.excluded_weight > 0.0 {
            log::warn!(
                "excluding weight {} of records the structural equations cannot produce",
                out.excluded_weight
            );
        }
        Ok(out)
    }

    pub fn excluded_weight(&self) -> f64 {
        self.excluded_weight
    }

    pub fn included_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Expected exogenous counts and the log-likelihood under `theta`.
    fn estep_factorized(&self, theta: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
        let mut counts: Vec<Vec<KahanSum>> = theta.iter().map(|t| vec![KahanSum::default(); t.len()]).collect();
        let mut ll = KahanSum::default();
        for (r, sets) in self.compat.iter().enumerate() {
            let w = self.weights[r];
            let mut lp = 0.0;
            for (u, set) in sets.iter().enumerate() {
                let mass: f64 = set.iter().map(|&s| theta[u][s]).sum();
                lp += mass.ln();
                if mass > 0.0 {
                    for &s in set {
                        counts[u][s].add(w * theta[u][s] / mass);
                    }
                }
            }
            ll.add(w * lp);
        }
        let counts = counts
            .into_iter()
            .map(|c| c.iter().map(KahanSum::value).collect())
            .collect();
        (counts, ll.value())
    }

    fn estep_ve(&self, scm: &Scm, theta: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, f64)> {
        let bn = scm_to_bn(&scm.with_priors(theta.to_vec())?)?;
        let mut counts: Vec<Vec<KahanSum>> = theta.iter().map(|t| vec![KahanSum::default(); t.len()]).collect();
        let mut ll = KahanSum::default();
        for (r, states) in self.records.iter().enumerate() {
            let w = self.weights[r];
            let evidence: Evidence = states.iter().copied().enumerate().collect();
            for (u, c) in counts.iter_mut().enumerate() {
                let post = match posterior_with_mass(&bn, &[exo_bn_id(scm, u)], &evidence) {
                    Ok(p) => p,
                    Err(Error::ZeroEvidence) => {
                        ll.add(f64::NEG_INFINITY);
                        break;
                    }
                    Err(e) => return Err(e),
                };
                if u == 0 {
                    ll.add(w * post.log_evidence);
                }
                for (s, &p) in post.factor.values().iter().enumerate() {
                    c[s].add(w * p);
                }
            }
            if theta.is_empty() {
                ll.add(w * posterior_with_mass(&bn, &[], &evidence)?.log_evidence);
            }
        }
        let counts = counts
            .into_iter()
            .map(|c| c.iter().map(KahanSum::value).collect())
            .collect();
        Ok((counts, ll.value()))
    }

    /// `Σ_r w_r ln P(x_r)` over the included records.
    pub fn log_likelihood(&self, theta: &[Vec<f64>]) -> f64 {
        self.estep_factorized(theta).1
    }
}

fn normalize(counts: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    counts
        .into_iter()
        .map(|c| {
            let total: f64 = c.iter().copied().collect::<KahanSum>().value();
            c.into_iter().map(|x| x / total).collect()
        })
        .collect()
}

/// Seeded Dirichlet(1) draw per exogenous variable, floored and renormalized.
pub fn initial_priors(scm: &Scm, seed: u64, floor: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = scm
        .exogenous()
        .iter()
        .map(|u| {
            dirichlet_uniform(&mut rng, u.card())
                .into_iter()
                .map(|p| p.max(floor))
                .collect()
        })
        .collect();
    normalize(raw)
}

/// Observational log-likelihood of `data` under a fully specified SCM.
/// Records the equations cannot produce make it `-∞`.
pub fn scm_log_likelihood(scm: &Scm, data: &Dataset) -> Result<f64> {
    let priors = scm.require_priors()?;
    let prepared = match PreparedData::new(scm, data) {
        Ok(p) => p,
        Err(Error::EmDegenerate(_)) => return Ok(f64::NEG_INFINITY),
        Err(e) => return Err(e),
    };
    if prepared.excluded_weight > 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(prepared.log_likelihood(priors))
}

/// One EM run from a seeded random start.
pub fn em_fit(skeleton: &Scm, data: &Dataset, seed: u64, config: &EmConfig) -> Result<EmRunResult> {
    config.validate()?;
    let prepared = PreparedData::new(skeleton, data)?;
    em_fit_prepared(skeleton, &prepared, 0, seed, config)
}

fn em_fit_prepared(
    skeleton: &Scm,
    prepared: &PreparedData,
    run_index: usize,
    seed: u64,
    config: &EmConfig,
) -> Result<EmRunResult> {
    let estep = |theta: &[Vec<f64>]| match config.estep {
        EStep::Factorized => Ok(prepared.estep_factorized(theta)),
        EStep::VariableElimination => prepared.estep_ve(skeleton, theta),
    };
    let mut theta = initial_priors(skeleton, seed, config.min_probability_floor);
    let (mut counts, mut ll) = estep(&theta)?;
    let mut trajectory = vec![ll];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        theta = normalize(counts);
        iterations += 1;
        let (next_counts, next_ll) = estep(&theta)?;
        trajectory.push(next_ll);
        let delta = (next_ll - ll).abs();
        counts = next_counts;
        ll = next_ll;
        if delta < config.tolerance {
            converged = true;
            break;
        }
    }
    Ok(EmRunResult {
        run_index,
        seed,
        priors: theta,
        loglik_trajectory: trajectory,
        converged,
        iterations_used: iterations,
    })
}

/// Per-query bounds over the runs retained for interval formation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub query: CausalQuery,
    /// `None` when the query was undefined under every retained run.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub mean: Option<f64>,
    /// Defined values, in run order.
    pub per_run_values: Vec<f64>,
    pub undefined_runs: usize,
    pub n_runs: usize,
    pub n_converged: usize,
}

impl IntervalEstimate {
    /// Collapses per-run values (`None` = undefined) into min/max bounds.
    pub fn from_values(query: CausalQuery, values: &[Option<f64>], n_runs: usize, n_converged: usize) -> Self {
        let defined: Vec<f64> = values.iter().flatten().copied().collect();
        let lower = defined.iter().copied().reduce(f64::min);
        let upper = defined.iter().copied().reduce(f64::max);
        let mean =
            (!defined.is_empty()).then(|| defined.iter().copied().collect::<KahanSum>().value() / defined.len() as f64);
        Self {
            query,
            lower,
            upper,
            mean,
            undefined_runs: values.len() - defined.len(),
            per_run_values: defined,
            n_runs,
            n_converged,
        }
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        matches!((self.lower, self.upper), (Some(l), Some(u)) if l - slack <= x && x <= u + slack)
    }

    pub fn width(&self) -> Option<f64> {
        Some(self.upper? - self.lower?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmccReport {
    pub runs: Vec<EmRunResult>,
    pub intervals: Vec<IntervalEstimate>,
    /// Weight of records no exogenous assignment can produce.
    pub excluded_weight: f64,
    /// True when no run converged and capped runs were used instead.
    pub used_unconverged_runs: bool,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Unsupported(format!("cannot start worker pool: {e}")))
}

/// All EM runs of `config`, in run-index order.
pub fn em_runs(skeleton: &Scm, data: &Dataset, config: &EmConfig) -> Result<(Vec<EmRunResult>, f64)> {
    config.validate()?;
    let prepared = PreparedData::new(skeleton, data)?;
    let runs = pool(config.workers)?.install(|| {
        (0..config.runs)
            .into_par_iter()
            .map(|r| em_fit_prepared(skeleton, &prepared, r, config.base_seed.wrapping_add(r as u64), config))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok((runs, prepared.excluded_weight))
}

/// Indices of the runs used for interval formation, and whether the
/// unconverged fallback was taken.
pub fn retained_runs(runs: &[EmRunResult]) -> Result<(Vec<usize>, bool)> {
    let converged: Vec<usize> = runs.iter().filter(|r| r.converged).map(|r| r.run_index).collect();
    if !converged.is_empty() {
        return Ok((converged, false));
    }
    let capped: Vec<usize> = runs
        .iter()
        .filter(|r| r.final_log_likelihood().is_finite())
        .map(|r| r.run_index)
        .collect();
    if capped.is_empty() {
        return Err(Error::NoConvergedRuns);
    }
    log::warn!(
        "no EM run converged; bounding with {} runs that hit the iteration cap",
        capped.len()
    );
    Ok((capped, true))
}

/// Evaluates every query under each retained run's priors.
pub fn intervals_from_runs(
    skeleton: &Scm,
    runs: &[EmRunResult],
    queries: &[CausalQuery],
    workers: usize,
) -> Result<(Vec<IntervalEstimate>, bool)> {
    let (retained, fallback) = retained_runs(runs)?;
    let n_converged = runs.iter().filter(|r| r.converged).count();
    let values: Vec<Vec<Option<f64>>> = pool(workers)?.install(|| {
        retained
            .par_iter()
            .map(|&r| {
                let fitted = skeleton.with_priors(runs[r].priors.clone())?;
                queries
                    .iter()
                    .map(|q| match evaluate(&fitted, q) {
                        Ok(v) => Ok(Some(v)),
                        Err(Error::UndefinedQuery(_)) => Ok(None),
                        Err(e) => Err(e),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let intervals = queries
        .iter()
        .enumerate()
        .map(|(k, q)| {
            let column: Vec<Option<f64>> = values.iter().map(|row| row[k]).collect();
            IntervalEstimate::from_values(q.clone(), &column, runs.len(), n_converged)
        })
        .collect();
    Ok((intervals, fallback))
}

/// Runs EMCC: `config.runs` EM fits, then min/max of each query over them.
pub fn emcc_bounds(skeleton: &Scm, data: &Dataset, queries: &[CausalQuery], config: &EmConfig) -> Result<EmccReport> {
    for q in queries {
        crate::counterfactual::resolve(skeleton, q)?;
    }
    let (runs, excluded_weight) = em_runs(skeleton, data, config)?;
    let (intervals, used_unconverged_runs) = intervals_from_runs(skeleton, &runs, queries, config.workers)?;
    Ok(EmccReport {
        runs,
        intervals,
        excluded_weight,
        used_unconverged_runs,
    })
}
