//! Datasets of weighted categorical records, CSV ingestion and binarization.
//!
//! Count files are read as exact integer weights stored in `f64` (exact up
//! to 2^53), so sums of counts stay exact until the final division.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pgm::{Factor, KahanSum, Variable};

/// One complete assignment over the schema, with a non-negative weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub states: Vec<usize>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Vec<Variable>,
    rows: Vec<Record>,
    total_weight: f64,
}

impl Dataset {
    /// Validates every row against the schema. An empty row list is allowed
    /// here; consumers that need mass call [`Dataset::require_nonempty`].
    pub fn new(schema: Vec<Variable>, rows: Vec<Record>) -> Result<Self> {
        crate::pgm::check_unique_names(schema.iter().map(Variable::name))?;
        for (i, row) in rows.iter().enumerate() {
            if row.states.len() != schema.len() {
                return Err(Error::Schema(format!(
                    "row {i} has {} values, schema has {}",
                    row.states.len(),
                    schema.len()
                )));
            }
            for (v, &s) in schema.iter().zip(&row.states) {
                if s >= v.card() {
                    return Err(Error::Schema(format!(
                        "row {i}: state {s} out of range for {}",
                        v.name()
                    )));
                }
            }
            if !row.weight.is_finite() || row.weight < 0.0 {
                return Err(Error::Schema(format!("row {i} has invalid weight {}", row.weight)));
            }
        }
        let total_weight = rows.iter().map(|r| r.weight).collect::<KahanSum>().value();
        Ok(Self {
            schema,
            rows,
            total_weight,
        })
    }

    /// Builds a dataset from label rows and weights.
    pub fn from_labels<S: AsRef<str>>(schema: Vec<Variable>, rows: &[(Vec<S>, f64)]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|(labels, weight)| {
                if labels.len() != schema.len() {
                    return Err(Error::Schema("row length does not match schema".into()));
                }
                let states = schema
                    .iter()
                    .zip(labels)
                    .map(|(v, l)| v.require_state(l.as_ref()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Record {
                    states,
                    weight: *weight,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(schema, rows)
    }

    pub fn schema(&self) -> &[Variable] {
        &self.schema
    }

    pub fn rows(&self) -> &[Record] {
        &self.rows
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|v| v.name() == name)
    }

    pub fn require_column(&self, name: &str) -> Result<usize> {
        self.column(name)
            .ok_or_else(|| Error::Schema(format!("dataset has no column {name}")))
    }

    pub fn require_nonempty(&self) -> Result<()> {
        if self.total_weight > 0.0 {
            Ok(())
        } else {
            Err(Error::Schema("dataset has zero total weight".into()))
        }
    }

    /// True when every weight is an integer (count data).
    pub fn is_integral(&self) -> bool {
        self.rows.iter().all(|r| r.weight.fract() == 0.0)
    }

    /// Merges rows with identical assignments, keeping first-appearance order.
    pub fn aggregated(&self) -> Dataset {
        let mut index: HashMap<&[usize], usize> = HashMap::new();
        let mut rows: Vec<Record> = Vec::new();
        for r in &self.rows {
            match index.get(r.states.as_slice()) {
                Some(&i) => rows[i].weight += r.weight,
                None => {
                    index.insert(&r.states, rows.len());
                    rows.push(r.clone());
                }
            }
        }
        Dataset {
            schema: self.schema.clone(),
            rows,
            total_weight: self.total_weight,
        }
    }

    /// Keeps only the named columns, in the given order.
    pub fn project(&self, names: &[&str]) -> Result<Dataset> {
        let cols = names
            .iter()
            .map(|n| self.require_column(n))
            .collect::<Result<Vec<_>>>()?;
        let schema = cols.iter().map(|&c| self.schema[c].clone()).collect();
        let rows = self
            .rows
            .iter()
            .map(|r| Record {
                states: cols.iter().map(|&c| r.states[c]).collect(),
                weight: r.weight,
            })
            .collect();
        Dataset::new(schema, rows)
    }

    /// Weighted count of rows matching every `(column, state)` pair.
    pub fn count(&self, conditions: &[(usize, usize)]) -> f64 {
        self.rows
            .iter()
            .filter(|r| conditions.iter().all(|&(c, s)| r.states[c] == s))
            .map(|r| r.weight)
            .collect::<KahanSum>()
            .value()
    }

    /// Writes one CSV line per unit record (weights must be integral) or,
    /// with `counts`, one line per row plus a trailing `counts` column.
    pub fn write_csv<W: std::io::Write>(&self, out: W, counts: bool) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .quote_style(csv::QuoteStyle::Never)
            .from_writer(out);
        let mut header: Vec<&str> = self.schema.iter().map(Variable::name).collect();
        if counts {
            header.push("counts");
        }
        w.write_record(&header).map_err(|e| Error::Parse(e.to_string()))?;
        for r in &self.rows {
            let mut line: Vec<String> = self
                .schema
                .iter()
                .zip(&r.states)
                .map(|(v, &s)| v.states()[s].clone())
                .collect();
            if counts {
                line.push(format!("{}", r.weight));
                w.write_record(&line).map_err(|e| Error::Parse(e.to_string()))?;
            } else {
                if r.weight.fract() != 0.0 {
                    return Err(Error::Schema("records output needs integral weights".into()));
                }
                for _ in 0..r.weight as u64 {
                    w.write_record(&line).map_err(|e| Error::Parse(e.to_string()))?;
                }
            }
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(())
    }
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    // Quoting is off: a label containing a comma splits the row and is rejected.
    csv::ReaderBuilder::new()
        .has_headers(true)
        .quoting(false)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn parse_csv<R: Read>(input: R, schema: Option<&[Variable]>, with_counts: bool) -> Result<Dataset> {
    let mut reader = csv_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Schema(format!("cannot read CSV header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();

    let count_col = if with_counts {
        let pos = header
            .iter()
            .position(|h| h == "counts")
            .ok_or_else(|| Error::Schema("counts file has no `counts` column".into()))?;
        if pos != header.len() - 1 {
            return Err(Error::Schema("`counts` must be the last column".into()));
        }
        Some(pos)
    } else {
        None
    };

    // (header column, schema position)
    let columns: Vec<(usize, String)> = match schema {
        Some(schema) => schema
            .iter()
            .map(|v| {
                header
                    .iter()
                    .position(|h| h == v.name())
                    .map(|c| (c, v.name().to_string()))
                    .ok_or_else(|| Error::Schema(format!("missing column {}", v.name())))
            })
            .collect::<Result<_>>()?,
        None => header
            .iter()
            .enumerate()
            .filter(|(c, _)| Some(*c) != count_col)
            .map(|(c, h)| (c, h.clone()))
            .collect(),
    };
    if columns.is_empty() {
        return Err(Error::Schema("no variable columns".into()));
    }

    let mut inferred: Vec<Vec<String>> = vec![Vec::new(); columns.len()];
    let mut raw_rows: Vec<(Vec<usize>, f64)> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Schema(format!("line {}: {e}", line + 2)))?;
        if rec.len() != header.len() {
            return Err(Error::Schema(format!(
                "line {} has {} fields, header has {}",
                line + 2,
                rec.len(),
                header.len()
            )));
        }
        let mut states = Vec::with_capacity(columns.len());
        for (k, (c, name)) in columns.iter().enumerate() {
            let label = &rec[*c];
            if label.is_empty() {
                return Err(Error::Schema(format!("line {}: missing value for {name}", line + 2)));
            }
            let s = match schema {
                Some(schema) => schema[k]
                    .state_index(label)
                    .ok_or_else(|| Error::Schema(format!("line {}: unknown state {label:?} for {name}", line + 2)))?,
                None => match inferred[k].iter().position(|s| s == label) {
                    Some(s) => s,
                    None => {
                        inferred[k].push(label.to_string());
                        inferred[k].len() - 1
                    }
                },
            };
            states.push(s);
        }
        let weight = match count_col {
            Some(c) => {
                let w: f64 = rec[c]
                    .parse::<u64>()
                    .map(|x| x as f64)
                    .map_err(|_| Error::Schema(format!("line {}: invalid count {:?}", line + 2, &rec[c])))?;
                w
            }
            None => 1.0,
        };
        raw_rows.push((states, weight));
    }
    if raw_rows.is_empty() {
        return Err(Error::Schema("data section is empty".into()));
    }

    let schema: Vec<Variable> = match schema {
        Some(s) => s.to_vec(),
        None => columns
            .iter()
            .zip(inferred)
            .map(|((_, name), states)| Variable::new(name.clone(), states))
            .collect::<Result<_>>()?,
    };
    let rows = raw_rows
        .into_iter()
        .map(|(states, weight)| Record { states, weight })
        .collect();
    Dataset::new(schema, rows)
}

/// Reads a records CSV (one unit-weight row per line).
///
/// With a schema, columns are matched by name, extra columns are ignored and
/// labels must belong to the declared domains. Without one, every column is
/// a variable whose states are listed in order of first appearance.
pub fn read_records(path: impl AsRef<Path>, schema: Option<&[Variable]>) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| Error::io(&path, e))?;
    parse_csv(file, schema, false)
}

/// Reads a counts CSV: like [`read_records`] plus a final `counts` column.
pub fn read_counts(path: impl AsRef<Path>, schema: Option<&[Variable]>) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| Error::io(&path, e))?;
    parse_csv(file, schema, true)
}

pub fn parse_records<R: Read>(input: R, schema: Option<&[Variable]>) -> Result<Dataset> {
    parse_csv(input, schema, false)
}

pub fn parse_counts<R: Read>(input: R, schema: Option<&[Variable]>) -> Result<Dataset> {
    parse_csv(input, schema, true)
}

/// How one categorical variable collapses to two states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySplit {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
    #[serde(default = "default_positive_label")]
    pub positive_label: String,
    #[serde(default = "default_negative_label")]
    pub negative_label: String,
}

fn default_positive_label() -> String {
    "positive".into()
}

fn default_negative_label() -> String {
    "negative".into()
}

impl BinarySplit {
    pub fn new<S: Into<String>>(
        positive: impl IntoIterator<Item = S>,
        negative: impl IntoIterator<Item = S>,
        positive_label: impl Into<String>,
        negative_label: impl Into<String>,
    ) -> Self {
        Self {
            positive: positive.into_iter().map(Into::into).collect(),
            negative: negative.into_iter().map(Into::into).collect(),
            positive_label: positive_label.into(),
            negative_label: negative_label.into(),
        }
    }

    /// The binary variable produced by this split: `[positive_label, negative_label]`.
    pub fn target(&self, name: &str) -> Result<Variable> {
        Variable::new(name, [self.positive_label.clone(), self.negative_label.clone()])
    }
}

/// Variable name to split. Variables not in the map pass through unchanged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BinarizationMap(pub IndexMap<String, BinarySplit>);

impl BinarizationMap {
    pub fn from_json(text: &str) -> Result<Self> {
        let map: Self = serde_json::from_str(text).map_err(|e| Error::Parse(format!("binarization map: {e}")))?;
        for (name, split) in &map.0 {
            if split.positive.is_empty() || split.negative.is_empty() {
                return Err(Error::Schema(format!(
                    "binarization of {name} needs both partitions non-empty"
                )));
            }
            if split.positive.iter().any(|s| split.negative.contains(s)) {
                return Err(Error::Schema(format!(
                    "binarization of {name} has overlapping partitions"
                )));
            }
            if split.positive_label == split.negative_label {
                return Err(Error::Schema(format!(
                    "binarization of {name} reuses one label for both states"
                )));
            }
        }
        Ok(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Self::from_json(&text)
    }

    pub fn get(&self, name: &str) -> Option<&BinarySplit> {
        self.0.get(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, split: BinarySplit) {
        self.0.insert(name.into(), split);
    }
}

/// Collapses mapped variables to two states and merges rows that become identical.
pub fn binarize(data: &Dataset, map: &BinarizationMap) -> Result<Dataset> {
    let mut schema = Vec::with_capacity(data.schema().len());
    // per column: old state -> new state
    let mut recode: Vec<Vec<usize>> = Vec::with_capacity(data.schema().len());
    for var in data.schema() {
        match map.get(var.name()) {
            None => {
                schema.push(var.clone());
                recode.push((0..var.card()).collect());
            }
            Some(split) => {
                schema.push(split.target(var.name())?);
                for s in split.positive.iter().chain(&split.negative) {
                    if var.state_index(s).is_none() {
                        return Err(Error::Schema(format!(
                            "binarization of {} names unknown state {s:?}",
                            var.name()
                        )));
                    }
                }
                let codes = var
                    .states()
                    .iter()
                    .map(|s| {
                        if split.positive.contains(s) {
                            Ok(0)
                        } else if split.negative.contains(s) {
                            Ok(1)
                        } else {
                            Err(Error::Schema(format!(
                                "state {s:?} of {} is in neither partition",
                                var.name()
                            )))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                recode.push(codes);
            }
        }
    }
    let rows = data
        .rows()
        .iter()
        .map(|r| Record {
            states: r.states.iter().zip(&recode).map(|(&s, map)| map[s]).collect(),
            weight: r.weight,
        })
        .collect();
    Ok(Dataset::new(schema, rows)?.aggregated())
}

/// Normalized joint frequency table over the schema (column order = scope order).
pub fn empirical_distribution(data: &Dataset) -> Result<Factor> {
    data.require_nonempty()?;
    let cards: Vec<usize> = data.schema().iter().map(Variable::card).collect();
    let size: usize = cards.iter().product();
    let mut acc = vec![KahanSum::default(); size];
    for r in data.rows() {
        acc[crate::pgm::encode(&r.states, &cards)].add(r.weight);
    }
    let total = data.total_weight();
    let values = acc.iter().map(|a| a.value() / total).collect();
    Factor::new((0..cards.len()).collect(), cards, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TREATMENT_COUNTS: &str = "M,I,A,counts\nyes,yes,yes,95\nyes,yes,no,244\nyes,no,yes,80\nyes,no,no,183\nno,yes,yes,121\nno,yes,no,52\nno,no,yes,47\nno,no,no,8\n";

    fn mia() -> Vec<Variable> {
        vec![Variable::binary("M"), Variable::binary("I"), Variable::binary("A")]
    }

    #[test]
    fn parse_treatment_counts() {
        let d = parse_counts(TREATMENT_COUNTS.as_bytes(), Some(&mia())).unwrap();
        assert_eq!(d.rows().len(), 8);
        assert_eq!(d.total_weight(), 830.0);
        assert!(d.is_integral());
    }

    #[test]
    fn inferred_schema_uses_first_appearance() {
        let d = parse_counts(TREATMENT_COUNTS.as_bytes(), None).unwrap();
        assert_eq!(d.schema()[0].states(), &["yes", "no"]);
    }

    #[test]
    fn empty_data_section_is_rejected() {
        let err = parse_counts("M,I,A,counts\n".as_bytes(), Some(&mia())).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn unknown_state_and_negative_count_are_rejected() {
        assert!(parse_counts("M,I,A,counts\nmaybe,yes,yes,3\n".as_bytes(), Some(&mia())).is_err());
        assert!(parse_counts("M,I,A,counts\nyes,yes,yes,-3\n".as_bytes(), Some(&mia())).is_err());
        assert!(parse_counts("M,I,counts\nyes,yes,3\n".as_bytes(), Some(&mia())).is_err());
        assert!(parse_records("M,I,A\nyes,,yes\n".as_bytes(), Some(&mia())).is_err());
    }

    #[test]
    fn comma_in_label_is_rejected() {
        let err = parse_records("M,I,A\n\"ye,s\",yes,yes\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn identical_records_share_one_configuration() {
        let d = parse_records("M,I,A\nyes,no,yes\nyes,no,yes\nyes,no,yes\n".as_bytes(), Some(&mia())).unwrap();
        assert_eq!(d.total_weight(), 3.0);
        assert_eq!(d.aggregated().rows().len(), 1);
    }

    #[test]
    fn extra_columns_are_ignored_with_schema() {
        let d = parse_records("id,M,I,A\n1,yes,no,yes\n2,no,no,no\n".as_bytes(), Some(&mia())).unwrap();
        assert_eq!(d.schema().len(), 3);
        assert_eq!(d.rows()[1].states, vec![1, 1, 1]);
    }

    #[test]
    fn binarize_land_use_rows() {
        let mgu = Variable::new(
            "MGU",
            ["Littoral", "Baetic Depression", "Baetic System", "Sierra Morena"],
        )
        .unwrap();
        let pop = Variable::new("Pop", ["Low", "Moderate", "High"]).unwrap();
        let data = Dataset::from_labels(
            vec![mgu, pop],
            &[
                (vec!["Littoral", "High"], 2.0),
                (vec!["Sierra Morena", "Low"], 3.0),
                (vec!["Baetic System", "Moderate"], 4.0),
                (vec!["Baetic Depression", "High"], 1.0),
            ],
        )
        .unwrap();
        let mut map = BinarizationMap::default();
        map.insert(
            "MGU",
            BinarySplit::new(
                ["Littoral", "Baetic Depression"],
                ["Baetic System", "Sierra Morena"],
                "yes",
                "no",
            ),
        );
        map.insert("Pop", BinarySplit::new(["High"], ["Low", "Moderate"], "yes", "no"));
        let b = binarize(&data, &map).unwrap();
        assert_eq!(b.total_weight(), 10.0);
        assert_eq!(b.rows().len(), 2);
        assert_eq!(
            b.rows()[0],
            Record {
                states: vec![0, 0],
                weight: 3.0
            }
        );
        assert_eq!(
            b.rows()[1],
            Record {
                states: vec![1, 1],
                weight: 7.0
            }
        );
    }

    #[test]
    fn binarize_rejects_unpartitioned_state() {
        let v = Variable::new("Pop", ["Low", "Moderate", "High"]).unwrap();
        let data = Dataset::from_labels(vec![v], &[(vec!["Low"], 1.0)]).unwrap();
        let mut map = BinarizationMap::default();
        map.insert("Pop", BinarySplit::new(["High"], ["Low"], "yes", "no"));
        assert!(matches!(binarize(&data, &map), Err(Error::Schema(_))));
    }

    #[test]
    fn identity_binarization_leaves_data_unchanged() {
        let d = parse_counts(TREATMENT_COUNTS.as_bytes(), Some(&mia())).unwrap();
        let mut map = BinarizationMap::default();
        map.insert("I", BinarySplit::new(["yes"], ["no"], "yes", "no"));
        assert_eq!(binarize(&d, &map).unwrap(), d);
    }

    #[test]
    fn empirical_distribution_cells() {
        let d = parse_counts(TREATMENT_COUNTS.as_bytes(), Some(&mia())).unwrap();
        let f = empirical_distribution(&d).unwrap();
        assert_eq!(f.get(&[0, 0, 0]), 95.0 / 830.0);
        assert!((f.sum() - 1.0).abs() < 1e-12);

        let single = Dataset::from_labels(mia(), &[(vec!["no", "yes", "no"], 1.0)]).unwrap();
        let f = empirical_distribution(&single).unwrap();
        assert_eq!(f.get(&[1, 0, 1]), 1.0);

        let two = Dataset::from_labels(vec![Variable::binary("X")], &[(vec!["yes"], 1.0), (vec!["no"], 1.0)]).unwrap();
        assert_eq!(empirical_distribution(&two).unwrap().values(), &[0.5, 0.5]);
    }

    #[test]
    fn map_json_round_trip() {
        let text = r#"{"Pop": {"positive": ["High"], "negative": ["Low", "Moderate"], "positive_label": "yes", "negative_label": "no"}}"#;
        let map = BinarizationMap::from_json(text).unwrap();
        assert_eq!(map.get("Pop").unwrap().negative, vec!["Low", "Moderate"]);
        let bad = r#"{"Pop": {"positive": ["High"], "negative": []}}"#;
        assert!(BinarizationMap::from_json(bad).is_err());
    }
}
