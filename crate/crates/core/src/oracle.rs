//! Brute-force ground truth.
//!
//! Nothing in here touches the factor/elimination code: query values come
//! from summing over every joint exogenous assignment and solving the
//! structural equations directly, and backdoor estimates come straight from
//! weighted counts. Agreement with [`crate::counterfactual::evaluate`] is
//! therefore evidence rather than tautology.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::counterfactual::{resolve, CausalQuery, QueryKind};
use crate::data::{Dataset, Record};
use crate::error::{Error, Result};
use crate::pgm::{Dag, KahanSum, Variable};
use crate::scm::{build_canonical_scm, Scm, DEFAULT_CARDINALITY_GUARD};

/// Largest joint exogenous state space [`exact_query`] will enumerate.
pub const ENUMERATION_CAP: u64 = 10_000_000;

/// One joint exogenous assignment with its probability and the endogenous
/// values it induces in every world.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldRow {
    pub exogenous: Vec<usize>,
    pub probability: f64,
    /// `endogenous[w][i]`: state of endogenous `i` in world `w`.
    pub endogenous: Vec<Vec<usize>>,
}

/// Enumeration of all exogenous assignments with positive prior mass.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldTable {
    pub rows: Vec<WorldRow>,
}

/// Solves the equations with some variables held fixed.
fn solve_with(scm: &Scm, exo: &[usize], fixed: &[(usize, usize)]) -> Vec<usize> {
    let n = scm.endogenous().len();
    let mut x = vec![0; n];
    for &i in scm.endogenous_dag().topological_order() {
        if let Some(&(_, s)) = fixed.iter().find(|f| f.0 == i) {
            x[i] = s;
            continue;
        }
        let eq = scm.equation(i);
        let mut cfg = 0;
        for &p in eq.endo_parents() {
            cfg = cfg * scm.endogenous()[p].card() + x[p];
        }
        let u = eq.exo_parent().map_or(0, |u| exo[u]);
        x[i] = eq.table()[u * eq.n_configs() + cfg];
    }
    x
}

impl WorldTable {
    /// `worlds[w]` lists `(endogenous index, forced state)` pairs; pass an
    /// empty list for the real world.
    pub fn build(scm: &Scm, worlds: &[Vec<(usize, usize)>], cap: u64) -> Result<Self> {
        let priors = scm.require_priors()?;
        let cards: Vec<usize> = scm.exogenous().iter().map(Variable::card).collect();
        let size = cards
            .iter()
            .try_fold(1u64, |acc, &c| acc.checked_mul(c as u64))
            .filter(|&s| s <= cap)
            .ok_or_else(|| Error::TooLarge {
                size: cards.iter().map(usize::to_string).collect::<Vec<_>>().join("x"),
                cap,
            })?;
        let mut rows = Vec::new();
        let mut exo = vec![0usize; cards.len()];
        for _ in 0..size {
            let structural = exo.iter().enumerate().all(|(u, &s)| priors[u][s] > 0.0);
            if structural {
                let probability = exo.iter().enumerate().map(|(u, &s)| priors[u][s]).product();
                let endogenous = worlds.iter().map(|w| solve_with(scm, &exo, w)).collect();
                rows.push(WorldRow {
                    exogenous: exo.clone(),
                    probability,
                    endogenous,
                });
            }
            // odometer, last exogenous fastest
            for u in (0..cards.len()).rev() {
                exo[u] += 1;
                if exo[u] < cards[u] {
                    break;
                }
                exo[u] = 0;
            }
        }
        Ok(Self { rows })
    }

    pub fn total_mass(&self) -> f64 {
        self.rows.iter().map(|r| r.probability).collect::<KahanSum>().value()
    }

    /// Probability mass of rows satisfying `pred`, and whether any row did.
    fn mass(&self, pred: impl Fn(&WorldRow) -> bool) -> (f64, bool) {
        let mut acc = KahanSum::default();
        let mut any = false;
        for r in self.rows.iter().filter(|r| pred(r)) {
            acc.add(r.probability);
            any = true;
        }
        (acc.value(), any)
    }
}

/// Exact value of `q` by exogenous enumeration.
pub fn exact_query(scm: &Scm, q: &CausalQuery) -> Result<f64> {
    exact_query_capped(scm, q, ENUMERATION_CAP)
}

pub fn exact_query_capped(scm: &Scm, q: &CausalQuery, cap: u64) -> Result<f64> {
    let r = resolve(scm, q)?;
    const REAL: usize = 0;
    const DO_POS: usize = 1;
    const DO_NEG: usize = 2;
    let table = WorldTable::build(scm, &[vec![], vec![(r.cause, r.x)], vec![(r.cause, r.x_neg)]], cap)?;
    let (x, xn, y, yn, cx, ey) = (r.x, r.x_neg, r.y, r.y_neg, r.cause, r.effect);
    let ratio = |num: (f64, bool), den: (f64, bool), what: &str| {
        if !den.1 {
            return Err(Error::UndefinedQuery(format!("{q}: {what} has probability zero")));
        }
        Ok(num.0 / den.0)
    };
    let value = match q.kind {
        QueryKind::CondDiff => {
            let cond = |xs: usize| {
                ratio(
                    table.mass(|w| w.endogenous[REAL][cx] == xs && w.endogenous[REAL][ey] == y),
                    table.mass(|w| w.endogenous[REAL][cx] == xs),
                    "the conditioning event",
                )
            };
            cond(x)? - cond(xn)?
        }
        QueryKind::Ace => {
            table.mass(|w| w.endogenous[DO_POS][ey] == y).0 - table.mass(|w| w.endogenous[DO_NEG][ey] == y).0
        }
        QueryKind::Pns => {
            table
                .mass(|w| w.endogenous[DO_POS][ey] == y && w.endogenous[DO_NEG][ey] == yn)
                .0
        }
        QueryKind::Pn | QueryKind::Pnrc | QueryKind::Ps => {
            let (world, obs_x, obs_y, target) = match q.kind {
                QueryKind::Pn => (DO_NEG, x, y, yn),
                QueryKind::Pnrc => (DO_POS, xn, y, yn),
                _ => (DO_POS, xn, yn, y),
            };
            let observed = |w: &WorldRow| w.endogenous[REAL][cx] == obs_x && w.endogenous[REAL][ey] == obs_y;
            ratio(
                table.mass(|w| observed(w) && w.endogenous[world][ey] == target),
                table.mass(observed),
                "the observed event",
            )?
        }
    };
    Ok(value)
}

/// Backdoor-adjusted ACE from empirical frequencies:
/// `Σ_z P̂(y|x,z)P̂(z) − Σ_z P̂(y|x',z)P̂(z)`.
pub fn backdoor_ace(data: &Dataset, q: &CausalQuery, adjustment: &[&str]) -> Result<f64> {
    data.require_nonempty()?;
    let cause = data.require_column(&q.cause)?;
    let effect = data.require_column(&q.effect)?;
    let cv = &data.schema()[cause];
    let ev = &data.schema()[effect];
    let x = cv.require_state(&q.cause_positive)?;
    let xn = cv.require_state(&q.cause_negative)?;
    let y = ev.require_state(&q.effect_positive)?;
    let z_cols = adjustment
        .iter()
        .map(|n| data.require_column(n))
        .collect::<Result<Vec<_>>>()?;
    let z_cards: Vec<usize> = z_cols.iter().map(|&c| data.schema()[c].card()).collect();
    let n_z: usize = z_cards.iter().product();
    let total = data.total_weight();

    let adjusted = |xs: usize| -> Result<f64> {
        let mut acc = KahanSum::default();
        let mut z = vec![0; z_cols.len()];
        for cfg in 0..n_z {
            crate::pgm::decode(cfg, &z_cards, &mut z);
            let mut cond: Vec<(usize, usize)> = z_cols.iter().copied().zip(z.iter().copied()).collect();
            let n_z_cfg = data.count(&cond);
            if n_z_cfg == 0.0 {
                continue;
            }
            cond.push((cause, xs));
            let n_xz = data.count(&cond);
            if n_xz == 0.0 {
                return Err(Error::UndefinedQuery(format!(
                    "{q}: no records with {}={} in an adjustment stratum",
                    q.cause,
                    cv.states()[xs]
                )));
            }
            cond.push((effect, y));
            let n_yxz = data.count(&cond);
            acc.add(n_yxz / n_xz * (n_z_cfg / total));
        }
        Ok(acc.value())
    };
    Ok(adjusted(x)? - adjusted(xn)?)
}

/// Draws a state by inverse CDF over the declared state order.
fn draw(rng: &mut ChaCha8Rng, p: &[f64]) -> usize {
    let r: f64 = rng.random();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &pi) in p.iter().enumerate() {
        if pi > 0.0 {
            cum += pi;
            last_positive = i;
            if r < cum {
                return i;
            }
        }
    }
    last_positive
}

/// `n` i.i.d. unit-weight records of the endogenous variables.
pub fn forward_sample(scm: &Scm, n: usize, seed: u64) -> Result<Dataset> {
    let priors = scm.require_priors()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exo = vec![0; priors.len()];
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        for (u, p) in priors.iter().enumerate() {
            exo[u] = draw(&mut rng, p);
        }
        rows.push(Record {
            states: solve_with(scm, &exo, &[]),
            weight: 1.0,
        });
    }
    Dataset::new(scm.endogenous().to_vec(), rows)
}

/// Uniform draw from the probability simplex of dimension `k`.
pub fn dirichlet_uniform<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / total).collect()
}

/// Random canonical SCM over 2..=`max_nodes` binary variables `V0, V1, ...`
/// with a random DAG (each forward edge present with probability 1/2,
/// at most three parents) and Dirichlet-uniform priors.
pub fn random_small_scm<R: Rng + ?Sized>(rng: &mut R, max_nodes: usize) -> Scm {
    let n = rng.random_range(2..=max_nodes.max(2));
    let names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
    let mut edges = Vec::new();
    for j in 1..n {
        let mut parents = 0;
        for i in 0..j {
            if parents < 3 && rng.random_bool(0.5) {
                edges.push((i, j));
                parents += 1;
            }
        }
    }
    let dag = Dag::new(names.clone(), &edges).expect("forward edges are acyclic");
    let vars: Vec<Variable> = names.into_iter().map(Variable::binary).collect();
    let skeleton = build_canonical_scm(&vars, &dag, DEFAULT_CARDINALITY_GUARD).expect("at most 3 binary parents");
    let priors = skeleton
        .exogenous()
        .iter()
        .map(|u| dirichlet_uniform(rng, u.card()))
        .collect();
    skeleton.with_priors(priors).expect("Dirichlet draws are normalized")
}
