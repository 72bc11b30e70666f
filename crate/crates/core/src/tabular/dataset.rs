use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::llm::Demonstration;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

impl core::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "classification" | "cls" => Ok(Task::Classification),
            "regression" | "reg" => Ok(Task::Regression),
            other => Err(Error::Config(format!("unknown task `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// Column storage. Categorical labels are interned into `levels`, kept in
/// natural order (numeric order when every label parses as a number,
/// lexicographic otherwise).
#[derive(Clone, Debug, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Categorical {
        levels: Vec<String>,
        codes: Vec<Option<u32>>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn numeric(name: impl Into<String>, values: Vec<Option<f64>>) -> Result<Self> {
        let name = name.into();
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "numeric column `{name}` holds a non-finite value"
            )));
        }
        Ok(Column {
            name,
            data: ColumnData::Numeric(values),
        })
    }

    pub fn categorical<S: AsRef<str>>(name: impl Into<String>, labels: &[Option<S>]) -> Self {
        let distinct: BTreeSet<&str> = labels.iter().flatten().map(|s| s.as_ref()).collect();
        let mut levels: Vec<String> = distinct.into_iter().map(ToString::to_string).collect();
        sort_levels(&mut levels);
        let lookup: BTreeMap<&str, u32> = levels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i as u32))
            .collect();
        let codes = labels
            .iter()
            .map(|v| v.as_ref().map(|s| lookup[s.as_ref()]))
            .collect();
        Column {
            name: name.into(),
            data: ColumnData::Categorical { levels, codes },
        }
    }

    pub fn kind(&self) -> ColumnKind {
        match self.data {
            ColumnData::Numeric(_) => ColumnKind::Numeric,
            ColumnData::Categorical { .. } => ColumnKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match &self.data {
            ColumnData::Numeric(v) => v[row].is_none(),
            ColumnData::Categorical { codes, .. } => codes[row].is_none(),
        }
    }

    pub fn missing_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_missing(i)).count()
    }

    /// Raw string form of a cell: categorical labels verbatim, numbers in
    /// shortest round-trip decimal form. `None` for a missing cell.
    pub fn render(&self, row: usize) -> Option<String> {
        match &self.data {
            ColumnData::Numeric(v) => v[row].map(|x| format!("{x}")),
            ColumnData::Categorical { levels, codes } => {
                codes[row].map(|c| levels[c as usize].clone())
            }
        }
    }

    fn take_rows(&self, rows: &[usize]) -> Column {
        let data = match &self.data {
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Categorical { levels, codes } => ColumnData::Categorical {
                levels: levels.clone(),
                codes: rows.iter().map(|&r| codes[r]).collect(),
            },
        };
        Column {
            name: self.name.clone(),
            data,
        }
    }
}

fn sort_levels(levels: &mut [String]) {
    let numeric: Option<Vec<f64>> = levels.iter().map(|l| parse_finite(l)).collect();
    if numeric.is_some() {
        levels.sort_by(|a, b| {
            let (x, y) = (parse_finite(a).unwrap(), parse_finite(b).unwrap());
            x.partial_cmp(&y).unwrap_or(Ordering::Equal).then_with(|| a.cmp(b))
        });
    } else {
        levels.sort();
    }
}

pub(crate) fn parse_finite(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

/// A typed table of features plus one target column.
///
/// Storage is column-major; `rows` of the logical table are the shared
/// indices into every column.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    features: Vec<Column>,
    target: Column,
    task: Task,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Vec<Column>, target: Column, task: Task) -> Result<Self> {
        let ds = Dataset {
            name: name.into(),
            features,
            target,
            task,
        };
        ds.validate(true)?;
        Ok(ds)
    }

    fn validate(&self, require_classes: bool) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::InvalidDataset("dataset has no feature columns".into()));
        }
        let n = self.target.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut seen = BTreeSet::new();
        for col in &self.features {
            if col.len() != n {
                return Err(Error::InvalidDataset(format!(
                    "column `{}` has {} values, expected {n}",
                    col.name,
                    col.len()
                )));
            }
            if !seen.insert(col.name.as_str()) || col.name == self.target.name {
                return Err(Error::DuplicateFeature(col.name.clone()));
            }
        }
        if self.target.missing_count() > 0 {
            return Err(Error::InvalidDataset(format!(
                "target `{}` has missing values",
                self.target.name
            )));
        }
        match (self.task, &self.target.data) {
            (Task::Classification, ColumnData::Categorical { codes, .. }) => {
                let present: BTreeSet<u32> = codes.iter().flatten().copied().collect();
                if require_classes && present.len() < 2 {
                    return Err(Error::InvalidDataset(
                        "classification target needs at least two classes".into(),
                    ));
                }
            }
            (Task::Regression, ColumnData::Numeric(_)) => {}
            (Task::Classification, _) => {
                return Err(Error::InvalidDataset("classification target must be categorical".into()))
            }
            (Task::Regression, _) => {
                return Err(Error::InvalidDataset("regression target must be numeric".into()))
            }
        }
        Ok(())
    }

    /// Builds a dataset from string cells. Empty (or whitespace-only) cells
    /// are missing. Column kinds are inferred (every present value parses as
    /// a finite number → numeric) unless listed in `kinds`.
    pub fn from_records(
        name: impl Into<String>,
        header: &[String],
        rows: &[Vec<String>],
        target: &str,
        task: Task,
        kinds: &BTreeMap<String, ColumnKind>,
    ) -> Result<Self> {
        if header.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let target_idx = header
            .iter()
            .position(|h| h == target)
            .ok_or_else(|| Error::MissingTarget(target.to_string()))?;
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != header.len() {
                return Err(Error::InvalidDataset(format!(
                    "row {} has {} cells, header has {}",
                    i + 1,
                    row.len(),
                    header.len()
                )));
            }
        }
        for name in kinds.keys() {
            if !header.iter().any(|h| h == name) {
                return Err(Error::UnknownFeature(name.clone()));
            }
        }

        let cells = |j: usize| -> Vec<Option<&str>> {
            rows.iter()
                .map(|r| {
                    let s = r[j].trim();
                    (!s.is_empty()).then_some(s)
                })
                .collect()
        };

        let mut features = Vec::with_capacity(header.len() - 1);
        let mut target_col = None;
        for (j, col_name) in header.iter().enumerate() {
            let raw = cells(j);
            let col = if j == target_idx {
                match task {
                    Task::Classification => Column::categorical(col_name.clone(), &raw),
                    Task::Regression => numeric_column(col_name, &raw)?,
                }
            } else {
                match kinds.get(col_name) {
                    Some(ColumnKind::Numeric) => numeric_column(col_name, &raw)?,
                    Some(ColumnKind::Categorical) => Column::categorical(col_name.clone(), &raw),
                    None if raw.iter().flatten().all(|s| parse_finite(s).is_some()) => {
                        numeric_column(col_name, &raw)?
                    }
                    None => Column::categorical(col_name.clone(), &raw),
                }
            };
            if j == target_idx {
                target_col = Some(col);
            } else {
                features.push(col);
            }
        }
        Dataset::new(name, features, target_col.expect("target index in range"), task)
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[Column] {
        &self.features
    }

    pub fn feature(&self, idx: usize) -> &Column {
        &self.features[idx]
    }

    pub fn target(&self) -> &Column {
        &self.target
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.features.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.features
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    /// Class labels for a classification target, in code order.
    pub fn classes(&self) -> Option<&[String]> {
        match (&self.task, &self.target.data) {
            (Task::Classification, ColumnData::Categorical { levels, .. }) => Some(levels),
            _ => None,
        }
    }

    /// Class code per row for a classification target.
    pub fn class_codes(&self) -> Option<Vec<u32>> {
        match (&self.task, &self.target.data) {
            (Task::Classification, ColumnData::Categorical { codes, .. }) => {
                Some(codes.iter().map(|c| c.expect("target has no missing values")).collect())
            }
            _ => None,
        }
    }

    /// Numeric target per row: the value for regression, the class code for
    /// classification.
    pub fn target_values(&self) -> Vec<f64> {
        match &self.target.data {
            ColumnData::Numeric(v) => v.iter().map(|x| x.expect("target has no missing values")).collect(),
            ColumnData::Categorical { codes, .. } => codes
                .iter()
                .map(|c| f64::from(c.expect("target has no missing values")))
                .collect(),
        }
    }

    /// A new dataset holding only `rows`, in the given order. Category
    /// levels are preserved so codes stay comparable with the parent; the
    /// at-least-two-classes check is not re-applied to the subset.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        if rows.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = self.n_rows();
        if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
            return Err(Error::RowOutOfRange(bad));
        }
        let ds = Dataset {
            name: self.name.clone(),
            features: self.features.iter().map(|c| c.take_rows(rows)).collect(),
            target: self.target.take_rows(rows),
            task: self.task,
        };
        ds.validate(false)?;
        Ok(ds)
    }

    /// A new dataset with only the named features, in the given order.
    pub fn select_features<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset> {
        let features = names
            .iter()
            .map(|n| self.feature_index(n.as_ref()).map(|i| self.features[i].clone()))
            .collect::<Result<Vec<_>>>()?;
        let ds = Dataset {
            name: self.name.clone(),
            features,
            target: self.target.clone(),
            task: self.task,
        };
        ds.validate(false)?;
        Ok(ds)
    }
}

fn numeric_column(name: &str, raw: &[Option<&str>]) -> Result<Column> {
    let values = raw
        .iter()
        .enumerate()
        .map(|(i, v)| match v {
            None => Ok(None),
            Some(s) => parse_finite(s).map(Some).ok_or_else(|| {
                Error::InvalidDataset(format!(
                    "column `{name}` row {}: `{s}` is not a finite number",
                    i + 1
                ))
            }),
        })
        .collect::<Result<Vec<_>>>()?;
    Column::numeric(name, values)
}

/// Free-text context for text-based prompting.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub dataset_description: String,
    #[serde(default, rename = "features")]
    pub feature_descriptions: BTreeMap<String, String>,
    /// Phrase naming what is predicted, e.g. "whether an individual carries
    /// high credit risk".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_description: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub column_kinds: BTreeMap<String, ColumnKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demonstration: Option<Demonstration>,
}

impl Descriptor {
    /// Every described name must be a feature (or the target) of `d`.
    pub fn validate_against(&self, d: &Dataset) -> Result<()> {
        for name in self.feature_descriptions.keys().chain(self.column_kinds.keys()) {
            if name != &d.target().name && d.feature_index(name).is_err() {
                return Err(Error::UnknownFeature(name.clone()));
            }
        }
        Ok(())
    }

    pub fn description_of(&self, feature: &str) -> Option<&str> {
        self.feature_descriptions
            .get(feature)
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
    }
}
