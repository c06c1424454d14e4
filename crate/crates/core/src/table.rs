//! Typed learning tables: numeric and nominal attributes plus a class label.

use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{ColumnKind, DatasetSchema};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("class column {0:?} not found")]
    MissingClassColumn(String),
    #[error("class column {0:?} cannot also be excluded")]
    ClassColumnExcluded(String),
    #[error("row {row}: attribute count {found} does not match header ({expected})")]
    RowWidth {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: class index {label} out of range")]
    LabelRange { row: usize, label: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum AttributeKind {
    Numeric,
    Nominal { values: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    #[serde(flatten)]
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn numeric(name: impl Into<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Numeric,
        }
    }

    pub fn nominal<S: Into<String>>(
        name: impl Into<String>,
        values: impl IntoIterator<Item = S>,
    ) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Nominal {
                values: values.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, AttributeKind::Numeric)
    }

    /// Number of nominal values; zero for numeric attributes.
    pub fn arity(&self) -> usize {
        match &self.kind {
            AttributeKind::Numeric => 0,
            AttributeKind::Nominal { values } => values.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Missing,
    Num(f64),
    Nom(u32),
    /// A nominal value that does not occur in the header.
    Unseen,
}

impl Value {
    pub fn is_missing(self) -> bool {
        matches!(self, Value::Missing)
    }
}

/// Attribute and class definitions shared by a table and the models
/// trained on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub attributes: Vec<Attribute>,
    pub class_name: String,
    pub classes: Vec<String>,
}

fn is_missing_text(s: &str) -> bool {
    let s = s.trim();
    s.is_empty() || s == "?"
}

impl Header {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    /// Encodes one row given a lookup from column name to raw text.
    /// Columns the lookup cannot find are treated as missing.
    pub fn encode_row<'a>(&self, get: impl Fn(&str) -> Option<&'a str>) -> Vec<Value> {
        self.attributes
            .iter()
            .map(|a| match get(&a.name) {
                None => Value::Missing,
                Some(s) if is_missing_text(s) => Value::Missing,
                Some(s) => match &a.kind {
                    AttributeKind::Numeric => s
                        .trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .map_or(Value::Missing, Value::Num),
                    AttributeKind::Nominal { values } => {
                        let s = s.trim();
                        values
                            .iter()
                            .position(|v| v == s)
                            .map_or(Value::Unseen, |i| Value::Nom(i as u32))
                    }
                },
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub header: Header,
    pub rows: Vec<Vec<Value>>,
    pub labels: Vec<usize>,
}

/// Options for reading a table from CSV.
#[derive(Debug, Clone, Default)]
pub struct CsvOptions<'a> {
    pub class_column: &'a str,
    pub exclude: &'a [String],
    /// Known column kinds; text, date and time columns are dropped. Columns
    /// the schema does not mention are inferred (numeric when every present
    /// value parses as a finite number).
    pub schema: Option<&'a DatasetSchema>,
    /// Preferred class order; labels not listed follow in order of appearance.
    pub class_order: &'a [String],
}

impl Dataset {
    pub fn new(
        header: Header,
        rows: Vec<Vec<Value>>,
        labels: Vec<usize>,
    ) -> Result<Self, TableError> {
        for (i, (row, &label)) in rows.iter().zip(&labels).enumerate() {
            if row.len() != header.attributes.len() {
                return Err(TableError::RowWidth {
                    row: i + 1,
                    expected: header.attributes.len(),
                    found: row.len(),
                });
            }
            if label >= header.classes.len() {
                return Err(TableError::LabelRange { row: i + 1, label });
            }
        }
        assert_eq!(rows.len(), labels.len(), "rows and labels differ in length");
        Ok(Dataset {
            header,
            rows,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.header.classes.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            header: self.header.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Reads a labelled table. Rows whose class cell is empty are skipped
    /// and counted in the second return value.
    pub fn from_csv<R: Read>(
        source: R,
        opts: &CsvOptions<'_>,
    ) -> Result<(Dataset, usize), TableError> {
        if opts.exclude.iter().any(|e| e == opts.class_column) {
            return Err(TableError::ClassColumnExcluded(
                opts.class_column.to_string(),
            ));
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(source);
        let names: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let class_pos = names
            .iter()
            .position(|n| n == opts.class_column)
            .ok_or_else(|| TableError::MissingClassColumn(opts.class_column.to_string()))?;

        let mut raw: Vec<csv::StringRecord> = Vec::new();
        let mut skipped = 0;
        for rec in reader.records() {
            let rec = rec?;
            if is_missing_text(rec.get(class_pos).unwrap_or("")) {
                skipped += 1;
            } else {
                raw.push(rec);
            }
        }

        let mut attr_cols = Vec::new();
        let mut attributes = Vec::new();
        for (pos, name) in names.iter().enumerate() {
            if pos == class_pos || opts.exclude.iter().any(|e| e == name) {
                continue;
            }
            let known = opts.schema.and_then(|s| s.kind_of(name));
            let numeric = match known {
                Some(ColumnKind::Text | ColumnKind::Date | ColumnKind::Time) => continue,
                Some(ColumnKind::Numeric) => true,
                Some(ColumnKind::Nominal) => false,
                None => raw.iter().all(|r| {
                    let s = r.get(pos).unwrap_or("");
                    is_missing_text(s) || s.trim().parse::<f64>().is_ok_and(f64::is_finite)
                }),
            };
            let kind = if numeric {
                AttributeKind::Numeric
            } else {
                let mut values: Vec<String> = Vec::new();
                let mut seen = HashMap::new();
                for r in &raw {
                    let s = r.get(pos).unwrap_or("").trim();
                    if !is_missing_text(s) && seen.insert(s.to_string(), ()).is_none() {
                        values.push(s.to_string());
                    }
                }
                AttributeKind::Nominal { values }
            };
            attr_cols.push(pos);
            attributes.push(Attribute {
                name: name.clone(),
                kind,
            });
        }

        let mut classes: Vec<String> = Vec::new();
        let present: Vec<&str> = raw
            .iter()
            .map(|r| r.get(class_pos).unwrap_or("").trim())
            .collect();
        for c in opts.class_order {
            if present.contains(&c.as_str()) && !classes.contains(c) {
                classes.push(c.clone());
            }
        }
        for c in &present {
            if !classes.iter().any(|k| k == c) {
                classes.push(c.to_string());
            }
        }

        let header = Header {
            attributes,
            class_name: opts.class_column.to_string(),
            classes,
        };
        let mut rows = Vec::with_capacity(raw.len());
        let mut labels = Vec::with_capacity(raw.len());
        let col_index: HashMap<&str, usize> = header
            .attributes
            .iter()
            .zip(&attr_cols)
            .map(|(a, &p)| (a.name.as_str(), p))
            .collect();
        for (r, label) in raw.iter().zip(&present) {
            rows.push(header.encode_row(|name| col_index.get(name).and_then(|&p| r.get(p))));
            labels.push(header.class_index(label).expect("class collected above"));
        }
        Ok((
            Dataset {
                header,
                rows,
                labels,
            },
            skipped,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_mixed_columns() {
        let csv = "id,amount,colour,class\n\
                   a,1.5,red,yes\n\
                   b,?,blue,no\n\
                   c,3,red,\n\
                   d,4,,yes\n";
        let schema = DatasetSchema::new(
            vec![crate::ingest::Column {
                name: "id".into(),
                kind: ColumnKind::Text,
            }],
            None,
        )
        .unwrap();
        let (ds, skipped) = Dataset::from_csv(
            csv.as_bytes(),
            &CsvOptions {
                class_column: "class",
                schema: Some(&schema),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(skipped, 1);
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.header.attributes.len(), 2);
        assert!(ds.header.attributes[0].is_numeric());
        assert_eq!(ds.header.attributes[1].arity(), 2);
        assert_eq!(ds.header.classes, vec!["yes", "no"]);
        assert_eq!(ds.rows[1][0], Value::Missing);
        assert_eq!(ds.rows[2][1], Value::Missing);
        assert_eq!(ds.labels, vec![0, 1, 0]);
    }

    #[test]
    fn class_order_and_exclusion() {
        let csv = "x,y,class\n1,2,b\n3,4,a\n";
        let exclude = vec!["y".to_string()];
        let order = vec!["a".to_string(), "zzz".to_string()];
        let (ds, _) = Dataset::from_csv(
            csv.as_bytes(),
            &CsvOptions {
                class_column: "class",
                exclude: &exclude,
                class_order: &order,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(ds.header.classes, vec!["a", "b"]);
        assert_eq!(ds.header.attributes.len(), 1);
        assert_eq!(ds.labels, vec![1, 0]);

        let bad = vec!["class".to_string()];
        assert!(matches!(
            Dataset::from_csv(
                csv.as_bytes(),
                &CsvOptions {
                    class_column: "class",
                    exclude: &bad,
                    ..Default::default()
                }
            ),
            Err(TableError::ClassColumnExcluded(_))
        ));
    }

    #[test]
    fn encode_unseen_nominal() {
        let header = Header {
            attributes: vec![Attribute::nominal("c", ["x", "y"]), Attribute::numeric("n")],
            class_name: "k".into(),
            classes: vec!["a".into()],
        };
        let row = header.encode_row(|n| match n {
            "c" => Some("z"),
            "n" => Some("oops"),
            _ => None,
        });
        assert_eq!(row, vec![Value::Unseen, Value::Missing]);
    }
}
