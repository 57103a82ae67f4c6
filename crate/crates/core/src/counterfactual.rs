//! Interventions, twin networks and the six query kinds.
//!
//! Every query is answered by compiling a (possibly twinned, possibly
//! mutilated) SCM into a [`BayesNet`] and running variable elimination on it.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pgm::{posterior_with_mass, BayesNet, Dag, Evidence, VarId, Variable};
use crate::scm::{classify, equation_cpt, scm_to_bn, MarkovClass, Scm, StructuralEquation};

/// `do(variable = value)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intervention {
    pub variable: String,
    pub value: String,
}

impl Intervention {
    pub fn new(variable: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            variable: variable.into(),
            value: value.into(),
        }
    }

    fn resolve(&self, scm: &Scm) -> Result<(usize, usize)> {
        let i = scm.endo_index(&self.variable)?;
        Ok((i, scm.endogenous()[i].require_state(&self.value)?))
    }
}

impl fmt::Display for Intervention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "do({}={})", self.variable, self.value)
    }
}

/// Post-intervention model: the intervened variable loses all incoming arcs
/// and its equation becomes the constant `value`.
pub fn mutilate(scm: &Scm, iv: &Intervention) -> Result<Scm> {
    let (i, s) = iv.resolve(scm)?;
    scm.replace_equations([StructuralEquation::constant(i, s)])
}

fn mutilate_all(scm: &Scm, ivs: &[Intervention]) -> Result<Scm> {
    let eqs = ivs
        .iter()
        .map(|iv| iv.resolve(scm).map(|(i, s)| StructuralEquation::constant(i, s)))
        .collect::<Result<Vec<_>>>()?;
    scm.replace_equations(eqs)
}

/// SCM with one endogenous copy per world, all sharing the exogenous layer.
///
/// World 0 is the real (unintervened) world. Variables of world `k` carry
/// `k` primes: `A`, `A'`, `A''`, ...
#[derive(Debug, Clone)]
pub struct TwinNetwork {
    base: Scm,
    worlds: Vec<Vec<Intervention>>,
    compiled: BayesNet,
}

impl TwinNetwork {
    pub fn base(&self) -> &Scm {
        &self.base
    }

    /// Interventions per world; index 0 is the real world (empty).
    pub fn worlds(&self) -> &[Vec<Intervention>] {
        &self.worlds
    }

    pub fn compiled(&self) -> &BayesNet {
        &self.compiled
    }

    /// Id in [`TwinNetwork::compiled`] of endogenous variable `name` in `world`.
    pub fn var(&self, world: usize, name: &str) -> Result<VarId> {
        if world >= self.worlds.len() {
            return Err(Error::Schema(format!("world {world} does not exist")));
        }
        let i = self.base.endo_index(name)?;
        Ok(twin_endo_id(&self.base, world, i))
    }

    /// Id of exogenous variable `u` (shared by all worlds).
    pub fn exo_var(&self, u: usize) -> VarId {
        self.base.endogenous().len() + u
    }
}

fn twin_endo_id(scm: &Scm, world: usize, endo: usize) -> VarId {
    let n = scm.endogenous().len();
    let m = scm.exogenous().len();
    match world {
        0 => endo,
        k => n + m + (k - 1) * n + endo,
    }
}

/// Builds the twin network for `worlds` (hypothetical worlds only; the real
/// world is added as world 0).
pub fn build_twin(scm: &Scm, worlds: &[Vec<Intervention>]) -> Result<TwinNetwork> {
    let priors = scm.require_priors()?;
    if classify(scm) == MarkovClass::NonMarkovian {
        return Err(Error::Unsupported("non-Markovian models cannot be twinned".into()));
    }
    let n = scm.endogenous().len();
    let m = scm.exogenous().len();
    let mut all_worlds = vec![Vec::new()];
    all_worlds.extend(worlds.iter().cloned());

    let mut variables: Vec<Variable> = scm.endogenous().to_vec();
    variables.extend(scm.exogenous().iter().cloned());
    for k in 1..all_worlds.len() {
        let primes = "'".repeat(k);
        variables.extend(
            scm.endogenous()
                .iter()
                .map(|v| v.renamed(format!("{}{primes}", v.name()))),
        );
    }
    let exo_ids: Vec<VarId> = (0..m).map(|u| n + u).collect();

    let mut cpts = Vec::with_capacity(variables.len());
    let mut edges = Vec::new();
    let mut world_cpts = Vec::with_capacity(all_worlds.len());
    for (k, ivs) in all_worlds.iter().enumerate() {
        let world_scm = mutilate_all(scm, ivs)?;
        let endo_ids: Vec<VarId> = (0..n).map(|i| twin_endo_id(scm, k, i)).collect();
        let mut list = Vec::with_capacity(n);
        for i in 0..n {
            let cpt = equation_cpt(&world_scm, i, endo_ids[i], &endo_ids, &exo_ids)?;
            edges.extend(cpt.parents().iter().map(|&p| (p, endo_ids[i])));
            list.push(cpt);
        }
        world_cpts.push(list);
    }
    let mut world_iter = world_cpts.into_iter();
    cpts.extend(world_iter.next().unwrap());
    for (u, p) in priors.iter().enumerate() {
        cpts.push(crate::pgm::Cpt::marginal(n + u, p.clone())?);
    }
    for list in world_iter {
        cpts.extend(list);
    }
    let dag = Dag::new(variables.iter().map(|v| v.name().to_string()).collect(), &edges)?;
    let compiled = BayesNet::new(variables, dag, cpts)?;
    Ok(TwinNetwork {
        base: scm.clone(),
        worlds: all_worlds,
        compiled,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum QueryKind {
    CondDiff,
    Ace,
    Pn,
    Pnrc,
    Ps,
    Pns,
}

impl TryFrom<String> for QueryKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<QueryKind> for String {
    fn from(k: QueryKind) -> String {
        k.as_str().to_string()
    }
}

impl QueryKind {
    pub const ALL: [QueryKind; 6] = [
        QueryKind::CondDiff,
        QueryKind::Ace,
        QueryKind::Pn,
        QueryKind::Pnrc,
        QueryKind::Ps,
        QueryKind::Pns,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QueryKind::CondDiff => "CondDiff",
            QueryKind::Ace => "ACE",
            QueryKind::Pn => "PN",
            QueryKind::Pnrc => "PNrc",
            QueryKind::Ps => "PS",
            QueryKind::Pns => "PNS",
        }
    }

    /// Closed range of attainable values.
    pub fn range(self) -> (f64, f64) {
        match self {
            QueryKind::CondDiff | QueryKind::Ace => (-1.0, 1.0),
            _ => (0.0, 1.0),
        }
    }
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for QueryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        QueryKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown query kind {s:?}")))
    }
}

/// A query about cause `X` (states `x`, `x'`) and effect `Y` (states `y`, `y'`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalQuery {
    pub kind: QueryKind,
    pub cause: String,
    pub cause_positive: String,
    pub cause_negative: String,
    pub effect: String,
    pub effect_positive: String,
    pub effect_negative: String,
}

impl CausalQuery {
    pub fn new(
        kind: QueryKind,
        cause: impl Into<String>,
        (cause_positive, cause_negative): (&str, &str),
        effect: impl Into<String>,
        (effect_positive, effect_negative): (&str, &str),
    ) -> Self {
        Self {
            kind,
            cause: cause.into(),
            cause_positive: cause_positive.into(),
            cause_negative: cause_negative.into(),
            effect: effect.into(),
            effect_positive: effect_positive.into(),
            effect_negative: effect_negative.into(),
        }
    }

    /// Query on `yes/no` variables with `yes` as the positive state.
    pub fn yes_no(kind: QueryKind, cause: &str, effect: &str) -> Self {
        Self::new(kind, cause, ("yes", "no"), effect, ("yes", "no"))
    }

    /// Same cause, effect and states with a different kind.
    pub fn with_kind(&self, kind: QueryKind) -> Self {
        Self { kind, ..self.clone() }
    }
}

impl fmt::Display for CausalQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.kind, self.cause, self.effect)
    }
}

/// Indices of a query resolved against an SCM's endogenous variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ResolvedQuery {
    pub cause: usize,
    pub x: usize,
    pub x_neg: usize,
    pub effect: usize,
    pub y: usize,
    pub y_neg: usize,
}

pub(crate) fn resolve(scm: &Scm, q: &CausalQuery) -> Result<ResolvedQuery> {
    let cause = scm.endo_index(&q.cause)?;
    let effect = scm.endo_index(&q.effect)?;
    if cause == effect {
        return Err(Error::Schema(format!("cause and effect are both {}", q.cause)));
    }
    let cv = &scm.endogenous()[cause];
    let ev = &scm.endogenous()[effect];
    let r = ResolvedQuery {
        cause,
        x: cv.require_state(&q.cause_positive)?,
        x_neg: cv.require_state(&q.cause_negative)?,
        effect,
        y: ev.require_state(&q.effect_positive)?,
        y_neg: ev.require_state(&q.effect_negative)?,
    };
    if r.x == r.x_neg || r.y == r.y_neg {
        return Err(Error::Schema(format!("{q}: positive and negative states must differ")));
    }
    if !scm.endogenous_dag().ancestors(effect).contains(&cause) {
        log::warn!("{q}: {} is not an ancestor of {}", q.cause, q.effect);
    }
    Ok(r)
}

fn undefined<'a>(q: &'a CausalQuery, what: &'a str) -> impl FnOnce(Error) -> Error + 'a {
    let what = what.to_string();
    move |e| match e {
        Error::ZeroEvidence => Error::UndefinedQuery(format!("{q}: {what} has probability zero")),
        other => other,
    }
}

/// `P(targets = states | evidence)` on `net`.
fn prob(net: &BayesNet, targets: &[(VarId, usize)], evidence: &Evidence) -> Result<f64> {
    let ids: Vec<VarId> = targets.iter().map(|t| t.0).collect();
    let states: Vec<usize> = targets.iter().map(|t| t.1).collect();
    let post = posterior_with_mass(net, &ids, evidence)?;
    Ok(post.factor.get(&states))
}

fn interventional(scm: &Scm, iv: (usize, usize), target: (usize, usize)) -> Result<f64> {
    let mutilated = scm.replace_equations([StructuralEquation::constant(iv.0, iv.1)])?;
    let bn = scm_to_bn(&mutilated)?;
    prob(&bn, &[target], &Evidence::new())
}

/// Exact value of `q` on a fully specified SCM.
pub fn evaluate(scm: &Scm, q: &CausalQuery) -> Result<f64> {
    scm.require_priors()?;
    let r = resolve(scm, q)?;
    let cause = &q.cause;
    let x_pos = Intervention::new(cause, &q.cause_positive);
    let x_neg = Intervention::new(cause, &q.cause_negative);
    let value = match q.kind {
        QueryKind::CondDiff => {
            let bn = scm_to_bn(scm)?;
            let given = |x: usize| {
                prob(&bn, &[(r.effect, r.y)], &Evidence::from([(r.cause, x)]))
                    .map_err(undefined(q, "the conditioning event"))
            };
            given(r.x)? - given(r.x_neg)?
        }
        QueryKind::Ace => {
            interventional(scm, (r.cause, r.x), (r.effect, r.y))?
                - interventional(scm, (r.cause, r.x_neg), (r.effect, r.y))?
        }
        QueryKind::Pns => {
            let twin = build_twin(scm, &[vec![x_pos], vec![x_neg]])?;
            let y1 = twin.var(1, &q.effect)?;
            let y2 = twin.var(2, &q.effect)?;
            prob(twin.compiled(), &[(y1, r.y), (y2, r.y_neg)], &Evidence::new())?
        }
        QueryKind::Pn | QueryKind::Pnrc | QueryKind::Ps => {
            // (hypothetical intervention, observed cause, observed effect, target effect state)
            let (iv, obs_x, obs_y, target) = match q.kind {
                QueryKind::Pn => (x_neg, r.x, r.y, r.y_neg),
                QueryKind::Pnrc => (x_pos, r.x_neg, r.y, r.y_neg),
                _ => (x_pos, r.x_neg, r.y_neg, r.y),
            };
            let twin = build_twin(scm, &[vec![iv]])?;
            let y1 = twin.var(1, &q.effect)?;
            let evidence = Evidence::from([(r.cause, obs_x), (r.effect, obs_y)]);
            prob(twin.compiled(), &[(y1, target)], &evidence).map_err(undefined(q, "the observed event"))?
        }
    };
    let (lo, hi) = q.kind.range();
    Ok(value.clamp(lo, hi))
}
