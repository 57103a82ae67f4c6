//! On-disk formats: model files, query files and run manifests.
//!
//! A model file is JSON with `variables` (name → ordered states) and
//! `edges` ([parent, child] pairs). Optional `equations` give one explicit
//! table per endogenous variable and optional `priors` give the exogenous
//! marginals. Parent configurations are enumerated row-major over the
//! parents in variable declaration order (last parent fastest).

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::counterfactual::{CausalQuery, QueryKind};
use crate::data::BinarizationMap;
use crate::emcc::EmConfig;
use crate::error::{Error, Result};
use crate::pgm::{Dag, Variable};
use crate::scm::{build_canonical_scm, Scm, StructuralEquation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSpec {
    pub exogenous: String,
    /// Defaults to `u1..uK` with `K = table.len()`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exogenous_states: Option<Vec<String>>,
    /// `table[u][cfg]`: child state label.
    pub table: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub variables: IndexMap<String, Vec<String>>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equations: Option<IndexMap<String, EquationSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priors: Option<IndexMap<String, Vec<f64>>>,
}

/// A parsed model: always a DAG, plus an SCM when equations were given.
#[derive(Debug, Clone)]
pub struct Model {
    pub variables: Vec<Variable>,
    pub dag: Dag,
    pub scm: Option<Scm>,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("model file: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files serialize")
    }

    pub fn variables(&self) -> Result<Vec<Variable>> {
        self.variables
            .iter()
            .map(|(name, states)| Variable::new(name.clone(), states.iter().cloned()))
            .collect()
    }

    pub fn dag(&self) -> Result<Dag> {
        let names: Vec<&str> = self.variables.keys().map(String::as_str).collect();
        let edges: Vec<(&str, &str)> = self.edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        Dag::from_named_edges(&names, &edges)
    }

    /// Parses everything, validating equations and priors against the DAG.
    pub fn build(&self) -> Result<Model> {
        let variables = self.variables()?;
        let dag = self.dag()?;
        let scm = match &self.equations {
            None => {
                if self.priors.is_some() {
                    return Err(Error::InvalidModel("priors given without equations".into()));
                }
                None
            }
            Some(eqs) => Some(self.build_scm(&variables, &dag, eqs)?),
        };
        Ok(Model { variables, dag, scm })
    }

    fn build_scm(&self, variables: &[Variable], dag: &Dag, eqs: &IndexMap<String, EquationSpec>) -> Result<Scm> {
        for name in eqs.keys() {
            if dag.index(name).is_none() {
                return Err(Error::InvalidModel(format!("equation for unknown variable {name}")));
            }
        }
        let mut exogenous: Vec<Variable> = Vec::new();
        let mut equations = Vec::with_capacity(variables.len());
        for (i, var) in variables.iter().enumerate() {
            let spec = eqs
                .get(var.name())
                .ok_or_else(|| Error::InvalidModel(format!("no equation for {}", var.name())))?;
            let parents = dag.parents(i).to_vec();
            let n_cfg: usize = parents.iter().map(|&p| variables[p].card()).product();
            let k = spec.table.len();
            if k == 0 {
                return Err(Error::InvalidModel(format!(
                    "equation of {} has no exogenous states",
                    var.name()
                )));
            }
            let states = spec
                .exogenous_states
                .clone()
                .unwrap_or_else(|| (1..=k).map(|j| format!("u{j}")).collect());
            let exo = Variable::new(spec.exogenous.clone(), states)?;
            if exo.card() != k {
                return Err(Error::InvalidModel(format!(
                    "{} declares {} states but the table of {} has {k} rows",
                    exo.name(),
                    exo.card(),
                    var.name()
                )));
            }
            let u = match exogenous.iter().position(|e| e.name() == exo.name()) {
                Some(u) if exogenous[u] == exo => u,
                Some(_) => {
                    return Err(Error::InvalidModel(format!(
                        "exogenous {} is declared with different states",
                        exo.name()
                    )))
                }
                None => {
                    exogenous.push(exo);
                    exogenous.len() - 1
                }
            };
            let mut table = vec![0; k * n_cfg];
            for (s, row) in spec.table.iter().enumerate() {
                if row.len() != n_cfg {
                    return Err(Error::InvalidModel(format!(
                        "row {s} of the equation of {} has {} entries, expected {n_cfg}",
                        var.name(),
                        row.len()
                    )));
                }
                for (cfg, label) in row.iter().enumerate() {
                    table[s * n_cfg + cfg] = var.require_state(label)?;
                }
            }
            equations.push(StructuralEquation::new(i, parents, u, k, table));
        }
        let priors = match &self.priors {
            None => None,
            Some(p) => {
                for name in p.keys() {
                    if !exogenous.iter().any(|u| u.name() == name) {
                        return Err(Error::InvalidModel(format!("prior for unknown exogenous {name}")));
                    }
                }
                Some(
                    exogenous
                        .iter()
                        .map(|u| {
                            p.get(u.name())
                                .cloned()
                                .ok_or_else(|| Error::MissingPrior(u.name().into()))
                        })
                        .collect::<Result<Vec<_>>>()?,
                )
            }
        };
        Scm::new(variables.to_vec(), exogenous, equations, priors)
    }

    /// Writes an SCM back out. Equation tables use state labels.
    pub fn from_scm(scm: &Scm) -> Self {
        let endo = scm.endogenous();
        let variables = endo
            .iter()
            .map(|v| (v.name().to_string(), v.states().to_vec()))
            .collect();
        let edges = scm
            .endogenous_dag()
            .edges()
            .into_iter()
            .map(|(a, b)| (endo[a].name().to_string(), endo[b].name().to_string()))
            .collect();
        let equations = scm
            .equations()
            .iter()
            .map(|eq| {
                let var = &endo[eq.child()];
                let (exogenous, exogenous_states) = match eq.exo_parent() {
                    Some(u) => {
                        let u = &scm.exogenous()[u];
                        let default: Vec<String> = (1..=u.card()).map(|j| format!("u{j}")).collect();
                        let states = (u.states() != default.as_slice()).then(|| u.states().to_vec());
                        (u.name().to_string(), states)
                    }
                    None => (format!("U_{}", var.name()), None),
                };
                let table = (0..eq.exo_card())
                    .map(|u| eq.function(u).iter().map(|&s| var.states()[s].clone()).collect())
                    .collect();
                (
                    var.name().to_string(),
                    EquationSpec {
                        exogenous,
                        exogenous_states,
                        table,
                    },
                )
            })
            .collect();
        let priors = scm.priors().map(|p| {
            scm.exogenous()
                .iter()
                .zip(p)
                .map(|(u, p)| (u.name().to_string(), p.clone()))
                .collect()
        });
        Self {
            variables,
            edges,
            equations: Some(equations),
            priors,
        }
    }
}

impl Model {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ModelFile::load(path)?.build()
    }

    /// The given SCM without priors, or the canonical one when the file
    /// only has a skeleton.
    pub fn skeleton(&self, guard: u64) -> Result<Scm> {
        match &self.scm {
            Some(scm) => Ok(scm.without_priors()),
            None => build_canonical_scm(&self.variables, &self.dag, guard),
        }
    }

    /// The SCM with priors, for direct query evaluation.
    pub fn fully_specified(&self) -> Result<&Scm> {
        let scm = self
            .scm
            .as_ref()
            .ok_or_else(|| Error::InvalidModel("model has no equations".into()))?;
        scm.require_priors()?;
        Ok(scm)
    }
}

/// One entry of a query file. State fields default to the binarization
/// labels of the variable, else to its first and second declared states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    pub kind: QueryKind,
    pub cause: String,
    pub effect: String,
    #[serde(default)]
    pub cause_positive_state: Option<String>,
    #[serde(default)]
    pub cause_negative_state: Option<String>,
    #[serde(default)]
    pub effect_positive_state: Option<String>,
    #[serde(default)]
    pub effect_negative_state: Option<String>,
}

fn default_states(
    name: &str,
    variables: &[Variable],
    binarization: Option<&BinarizationMap>,
) -> Result<(String, String)> {
    if let Some(split) = binarization.and_then(|m| m.get(name)) {
        return Ok((split.positive_label.clone(), split.negative_label.clone()));
    }
    let var = variables
        .iter()
        .find(|v| v.name() == name)
        .ok_or_else(|| Error::Schema(format!("unknown variable {name}")))?;
    match var.states() {
        [pos, neg, ..] => Ok((pos.clone(), neg.clone())),
        _ => Err(Error::Schema(format!("{name} needs at least two states"))),
    }
}

impl QuerySpec {
    pub fn resolve(&self, variables: &[Variable], binarization: Option<&BinarizationMap>) -> Result<CausalQuery> {
        let (x, xn) = default_states(&self.cause, variables, binarization)?;
        let (y, yn) = default_states(&self.effect, variables, binarization)?;
        Ok(CausalQuery::new(
            self.kind,
            &self.cause,
            (
                self.cause_positive_state.as_deref().unwrap_or(&x),
                self.cause_negative_state.as_deref().unwrap_or(&xn),
            ),
            &self.effect,
            (
                self.effect_positive_state.as_deref().unwrap_or(&y),
                self.effect_negative_state.as_deref().unwrap_or(&yn),
            ),
        ))
    }
}

pub fn parse_queries(
    text: &str,
    variables: &[Variable],
    binarization: Option<&BinarizationMap>,
) -> Result<Vec<CausalQuery>> {
    let specs: Vec<QuerySpec> = serde_json::from_str(text).map_err(|e| Error::Parse(format!("query file: {e}")))?;
    if specs.is_empty() {
        return Err(Error::Schema("query file lists no queries".into()));
    }
    specs.iter().map(|s| s.resolve(variables, binarization)).collect()
}

pub fn load_queries(
    path: impl AsRef<Path>,
    variables: &[Variable],
    binarization: Option<&BinarizationMap>,
) -> Result<Vec<CausalQuery>> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
    parse_queries(&text, variables, binarization)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    /// One row per record.
    #[default]
    Records,
    /// A trailing `counts` column holds the weight of each row.
    Counts,
}

/// Everything `learn` needs. Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub model: PathBuf,
    pub data: PathBuf,
    #[serde(default)]
    pub data_format: DataFormat,
    #[serde(default)]
    pub binarization: Option<PathBuf>,
    pub queries: PathBuf,
    #[serde(default)]
    pub config: EmConfig,
    #[serde(default)]
    pub guard: Option<u64>,
    pub output_dir: PathBuf,
    #[serde(default = "yes")]
    pub plot: bool,
}

fn yes() -> bool {
    true
}

impl RunManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: Self = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("manifest: {e}")))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut m.model, &mut m.data, &mut m.queries, &mut m.output_dir] {
            *p = base.join(&*p);
        }
        if let Some(b) = m.binarization.as_mut() {
            *b = base.join(&*b);
        }
        m.config.validate()?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::running_example;

    #[test]
    fn round_trip_through_json() {
        for scm in [running_example::reference_scm(), running_example::canonical()] {
            let file = ModelFile::from_scm(&scm);
            let back = ModelFile::from_json(&file.to_json()).unwrap().build().unwrap();
            assert_eq!(back.scm.unwrap(), scm);
        }
    }

    #[test]
    fn skeleton_only_model() {
        let m =
            ModelFile::from_json(r#"{"variables": {"X": ["a", "b"], "Y": ["c", "d", "e"]}, "edges": [["X", "Y"]]}"#)
                .unwrap()
                .build()
                .unwrap();
        assert!(m.scm.is_none());
        let sk = m.skeleton(1 << 20).unwrap();
        assert_eq!(sk.exogenous()[1].card(), 9);
        assert!(m.fully_specified().is_err());
    }

    #[test]
    fn rejects_malformed_models() {
        let cases = [
            r#"{"variables": {"X": ["a", "b"]}, "edges": [["X", "Z"]]}"#,
            r#"{"variables": {"X": ["a", "a"]}}"#,
            r#"{"variables": {"X": ["a", "b"]}, "priors": {"U": [1.0]}}"#,
            r#"{"variables": {"X": ["a", "b"]}, "equations": {"X": {"exogenous": "U", "table": [["c"]]}}}"#,
            r#"{"variables": {"X": ["a", "b"]}, "equations": {"X": {"exogenous": "U", "table": [["a"], ["b"]]}}, "priors": {"U": [0.5, 0.6]}}"#,
            r#"{"variables": {"X": ["a", "b"]}, "equations": {"X": {"exogenous": "U", "table": [["a"], ["b"]]}}, "priors": {"V": [0.5, 0.5]}}"#,
            r#"{"variables": {"X": ["a", "b"]}, "extra": 1}"#,
        ];
        for c in cases {
            assert!(ModelFile::from_json(c).and_then(|f| f.build()).is_err(), "{c}");
        }
        let cyclic = r#"{"variables": {"X": ["a", "b"], "Y": ["a", "b"]}, "edges": [["X", "Y"], ["Y", "X"]]}"#;
        assert!(matches!(
            ModelFile::from_json(cyclic).unwrap().build(),
            Err(Error::Cycle(_))
        ));
    }

    #[test]
    fn shared_exogenous_is_semi_markovian() {
        let text = r#"{
            "variables": {"X": ["a", "b"], "Y": ["a", "b"]},
            "edges": [["X", "Y"]],
            "equations": {
                "X": {"exogenous": "U", "table": [["a"], ["b"]]},
                "Y": {"exogenous": "U", "table": [["a", "b"], ["b", "a"]]}
            },
            "priors": {"U": [0.3, 0.7]}
        }"#;
        let scm = ModelFile::from_json(text).unwrap().build().unwrap().scm.unwrap();
        assert_eq!(crate::scm::classify(&scm), crate::scm::MarkovClass::SemiMarkovian);
        assert_eq!(scm.exogenous().len(), 1);
    }

    #[test]
    fn query_defaults() {
        let vars = running_example::variables();
        let qs = parse_queries(r#"[{"kind": "PN", "cause": "I", "effect": "A"}]"#, &vars, None).unwrap();
        assert_eq!(qs[0], CausalQuery::yes_no(QueryKind::Pn, "I", "A"));
        let mut map = BinarizationMap::default();
        map.insert("A", crate::data::BinarySplit::new(["x"], ["z"], "hi", "lo"));
        let qs = parse_queries(
            r#"[{"kind": "ps", "cause": "I", "effect": "A", "cause_negative_state": "yes"}]"#,
            &vars,
            Some(&map),
        )
        .unwrap();
        assert_eq!(qs[0].effect_positive, "hi");
        assert_eq!(qs[0].cause_negative, "yes");
        assert!(parse_queries("[]", &vars, None).is_err());
        assert!(parse_queries(r#"[{"kind": "PN", "cause": "Q", "effect": "A"}]"#, &vars, None).is_err());
    }

    #[test]
    fn manifest_paths_are_relative_to_the_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"model": "m.json", "data": "d.csv", "queries": "q.json", "output_dir": "out", "config": {"runs": 3}}"#,
        )
        .unwrap();
        let m = RunManifest::load(&path).unwrap();
        assert_eq!(m.model, dir.path().join("m.json"));
        assert_eq!(m.config.runs, 3);
        assert_eq!(m.config.max_iterations, 300);
        assert!(m.plot);
        assert_eq!(m.data_format, DataFormat::Records);
    }
}
