//! Counterfactual queries over discrete structural causal models.
//!
//! The pipeline: a DAG over categorical variables is turned into a canonical
//! SCM, exogenous priors are fitted to data by many randomly initialized EM
//! runs, and each query is evaluated on a twin network for every run. The
//! spread across runs brackets the partially identified quantity.

pub mod cli;
pub mod counterfactual;
pub mod data;
pub mod emcc;
pub mod error;
pub mod model;
pub mod oracle;
pub mod pgm;
pub mod report;
pub mod running_example;
pub mod scm;

pub use counterfactual::{build_twin, evaluate, mutilate, CausalQuery, Intervention, QueryKind, TwinNetwork};
pub use data::{binarize, BinarizationMap, BinarySplit, Dataset, Record};
pub use emcc::{em_fit, emcc_bounds, EmConfig, EmRunResult, EmccReport, IntervalEstimate};
pub use error::{Error, Result};
pub use pgm::{BayesNet, Dag, Factor, Variable};
pub use scm::{build_canonical_scm, canonical_cardinality, scm_to_bn, MarkovClass, Scm, StructuralEquation};
