use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{FeatureKind, FeatureSchema};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitTag {
    Full,
    Train,
    Test,
}

/// Raw rows in engineering units. Categorical cells hold the level index
/// (as `f64`) into the schema's level list.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub schema: Arc<FeatureSchema>,
    pub split: SplitTag,
}

impl Dataset {
    pub const CLASSES: usize = 2;

    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<usize>, schema: Arc<FeatureSchema>) -> Result<Self> {
        let d = schema.len();
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: r.len(),
            });
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= Self::CLASSES) {
            return Err(Error::LabelOutOfRange {
                label: l,
                classes: Self::CLASSES,
            });
        }
        Ok(Dataset {
            rows,
            labels,
            schema,
            split: SplitTag::Full,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; Self::CLASSES];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn subset(&self, indices: &[usize], split: SplitTag) -> Dataset {
        Dataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            schema: self.schema.clone(),
            split,
        }
    }

    /// Human-readable cell value (level name for categoricals).
    pub fn format_value(schema: &FeatureSchema, feature: usize, value: f64) -> String {
        match &schema.features[feature].kind {
            FeatureKind::Continuous => format!("{value}"),
            FeatureKind::Categorical { levels } => levels
                .get(value as usize)
                .cloned()
                .unwrap_or_else(|| format!("?{value}")),
        }
    }
}

/// Loads a comma-separated file with a header row. Columns are matched by
/// name; the label column is `schema.label` with values in {0, 1}.
pub fn load_csv(path: impl AsRef<Path>, schema: Arc<FeatureSchema>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, &path.display().to_string(), schema)
}

pub(crate) fn read_csv<R: std::io::Read>(
    reader: R,
    source: &str,
    schema: Arc<FeatureSchema>,
) -> Result<Dataset> {
    let (rows, labels) = read_table(reader, source, &schema, true)?;
    Dataset::new(rows, labels.unwrap_or_default(), schema)
}

/// Reads feature rows for ad-hoc cases. A label column is optional and
/// ignored when present.
pub fn load_case_rows(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(read_table(file, &path.display().to_string(), schema, false)?.0)
}

fn read_table<R: std::io::Read>(
    reader: R,
    source: &str,
    schema: &FeatureSchema,
    need_label: bool,
) -> Result<(Vec<Vec<f64>>, Option<Vec<usize>>)> {
    let csv_err = |line: u64, message: String| Error::Csv {
        path: source.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_err(1, e.to_string()))?.clone();
    let mut positions: HashMap<&str, usize> = HashMap::new();
    for (i, h) in header.iter().enumerate() {
        if positions.insert(h, i).is_some() {
            return Err(csv_err(1, format!("duplicate column `{h}`")));
        }
    }
    let mut columns = Vec::with_capacity(schema.len());
    for f in &schema.features {
        match positions.get(f.name.as_str()) {
            Some(&i) => columns.push(i),
            None => return Err(csv_err(1, format!("missing column `{}`", f.name))),
        }
    }
    let label_col = positions.get(schema.label.as_str()).copied();
    if need_label && label_col.is_none() {
        return Err(csv_err(1, format!("missing label column `{}`", schema.label)));
    }
    if header.len() != schema.len() + usize::from(label_col.is_some()) {
        let extra: Vec<&str> = header
            .iter()
            .filter(|h| *h != schema.label && schema.index_of(h).is_none())
            .collect();
        return Err(csv_err(1, format!("unexpected columns {extra:?}")));
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            csv_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let mut row = Vec::with_capacity(schema.len());
        for (f, &col) in schema.features.iter().zip(&columns) {
            let cell = record.get(col).unwrap_or("");
            if cell.is_empty() {
                return Err(csv_err(line, format!("blank cell in `{}`", f.name)));
            }
            let value = match &f.kind {
                FeatureKind::Continuous => match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => v,
                    _ => {
                        return Err(csv_err(
                            line,
                            format!("`{}`: cannot parse `{cell}` as a number", f.name),
                        ))
                    }
                },
                FeatureKind::Categorical { levels } => match levels.iter().position(|l| l == cell) {
                    Some(i) => i as f64,
                    None => {
                        return Err(Error::UnknownLevel {
                            feature: f.name.clone(),
                            level: cell.to_string(),
                        })
                    }
                },
            };
            row.push(value);
        }
        if need_label {
            let label = match label_col.and_then(|c| record.get(c)).unwrap_or("") {
                "0" => 0,
                "1" => 1,
                other => return Err(csv_err(line, format!("label `{other}` is not 0 or 1"))),
            };
            labels.push(label);
        }
        rows.push(row);
    }
    Ok((rows, need_label.then_some(labels)))
}

/// Upsamples every class to the largest class count by drawing rows of that
/// class with replacement. Original rows keep their order; copies follow.
pub fn balance_upsample(data: &Dataset, seed: u64) -> Result<Dataset> {
    let counts = data.class_counts();
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::EmptyClass(c));
    }
    let target = *counts.iter().max().unwrap_or(&0);
    let mut rng = rng::derive(seed, 0x6261_6c61_6e63_65);
    let mut out = data.clone();
    for class in 0..Dataset::CLASSES {
        let members: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == class).collect();
        for _ in counts[class]..target {
            let pick = members[rng.random_range(0..members.len())];
            out.rows.push(data.rows[pick].clone());
            out.labels.push(class);
        }
    }
    Ok(out)
}

/// Shuffled index partition; the train side has `round(n * fraction)` rows.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction {train_fraction} must lie in (0, 1)"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::derive(seed, 0x7370_6c69_74));
    let n_train = (n as f64 * train_fraction).round() as usize;
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

pub fn split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(data.len(), train_fraction, seed)?;
    Ok((
        data.subset(&train, SplitTag::Train),
        data.subset(&test, SplitTag::Test),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSpec;

    fn schema() -> Arc<FeatureSchema> {
        Arc::new(
            FeatureSchema::new(vec![
                FeatureSpec::continuous("a").ranked(1),
                FeatureSpec::categorical("b", &["x", "y", "z"]),
            ])
            .unwrap(),
        )
    }

    fn parse(text: &str) -> Result<Dataset> {
        read_csv(text.as_bytes(), "mem.csv", schema())
    }

    #[test]
    fn loads_toy_csv() {
        let d = parse("a,b,target\n1.5,x,0\n2,z,1\n-3,y,0\n").unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.rows[1], vec![2.0, 2.0]);
        assert_eq!(d.labels, vec![0, 1, 0]);
        // column order in the file does not matter
        let d = parse("target,b,a\n1,y,4\n").unwrap();
        assert_eq!(d.rows[0], vec![4.0, 1.0]);
    }

    #[test]
    fn rejects_bad_input_with_line_numbers() {
        let err = parse("a,b,target\n1,x,0\nabc,y,1\n").unwrap_err();
        match err {
            Error::Csv { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("abc"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("a,target\n1,0\n"), Err(Error::Csv { line: 1, .. })));
        assert!(matches!(parse("a,b,target\n1,w,0\n"), Err(Error::UnknownLevel { .. })));
        assert!(matches!(parse("a,b,target\n,x,0\n"), Err(Error::Csv { line: 2, .. })));
        assert!(matches!(parse("a,b,target\n1,x,2\n"), Err(Error::Csv { line: 2, .. })));
        assert!(parse("a,b,c,target\n1,x,3,0\n").is_err());
    }

    fn with_counts(n0: usize, n1: usize) -> Dataset {
        let rows = (0..n0 + n1).map(|i| vec![i as f64, 0.0]).collect();
        let labels = (0..n0 + n1).map(|i| usize::from(i >= n0)).collect();
        Dataset::new(rows, labels, schema()).unwrap()
    }

    #[test]
    fn upsampling_examples() {
        let d = balance_upsample(&with_counts(500, 268), 1).unwrap();
        assert_eq!(d.class_counts(), vec![500, 500]);
        let same = balance_upsample(&with_counts(4, 4), 1).unwrap();
        assert_eq!(same.rows, with_counts(4, 4).rows);
        let forced = balance_upsample(&with_counts(10, 1), 1).unwrap();
        assert_eq!(forced.class_counts(), vec![10, 10]);
        assert!(forced.rows[10..].iter().all(|r| r[0] == 10.0));
        assert!(matches!(
            balance_upsample(&with_counts(3, 0), 1),
            Err(Error::EmptyClass(1))
        ));
    }

    #[test]
    fn split_sizes_round_to_nearest() {
        for (n, f, train) in [(918, 0.7, 643), (768, 0.8, 614), (10, 0.5, 5), (303, 0.7, 212)] {
            let (a, b) = split_indices(n, f, 7).unwrap();
            assert_eq!((a.len(), b.len()), (train, n - train), "n={n} f={f}");
        }
        assert!(split_indices(10, 1.0, 0).is_err());
        assert!(split_indices(10, 0.0, 0).is_err());
    }
}
