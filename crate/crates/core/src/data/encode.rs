use std::sync::Arc;

use super::{Dataset, FeatureKind, FeatureSchema};
use crate::error::{check_len, Error, Result};

/// Columns occupied by one schema feature in the encoded vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub feature: usize,
    pub start: usize,
    pub len: usize,
    pub categorical: bool,
}

impl Block {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

/// Map from schema features to encoded columns, plus the block-wise
/// operations the boundary and intervention code need.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub blocks: Vec<Block>,
    width: usize,
}

impl Layout {
    pub fn from_schema(schema: &FeatureSchema) -> Self {
        let mut start = 0;
        let blocks = schema
            .features
            .iter()
            .enumerate()
            .map(|(feature, f)| {
                let b = Block {
                    feature,
                    start,
                    len: f.cardinality(),
                    categorical: f.is_categorical(),
                };
                start += b.len;
                b
            })
            .collect();
        Layout {
            blocks,
            width: start,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn features(&self) -> usize {
        self.blocks.len()
    }

    pub fn categorical_blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(|b| b.categorical)
    }

    pub fn continuous_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().filter(|b| !b.categorical).map(|b| b.start)
    }

    /// Level index of a categorical block (argmax, ties to the lowest level).
    pub fn level(&self, x: &[f64], feature: usize) -> usize {
        let b = self.blocks[feature];
        let block = &x[b.range()];
        let mut best = 0;
        for (i, &v) in block.iter().enumerate() {
            if v > block[best] {
                best = i;
            }
        }
        best
    }

    /// Replaces every categorical block by the one-hot vector of its argmax.
    pub fn snap(&self, x: &mut [f64]) {
        for b in self.categorical_blocks() {
            let level = self.level(x, b.feature);
            for (i, v) in x[b.range()].iter_mut().enumerate() {
                *v = if i == level { 1.0 } else { 0.0 };
            }
        }
    }

    /// Clips continuous columns to the training range, which is `[0, 1]` in
    /// encoded units.
    pub fn clip(&self, x: &mut [f64]) {
        for c in self.continuous_columns() {
            x[c] = x[c].clamp(0.0, 1.0);
        }
    }

    pub fn same_categoricals(&self, a: &[f64], b: &[f64]) -> bool {
        self.categorical_blocks().all(|blk| a[blk.range()] == b[blk.range()])
    }

    /// Copies the categorical blocks of `src` into `dst`.
    pub fn copy_categoricals(&self, dst: &mut [f64], src: &[f64]) {
        for b in self.categorical_blocks() {
            dst[b.range()].copy_from_slice(&src[b.range()]);
        }
    }

    pub fn copy_feature(&self, dst: &mut [f64], src: &[f64], feature: usize) {
        let r = self.blocks[feature].range();
        dst[r.clone()].copy_from_slice(&src[r]);
    }

    /// Continuous: `|a - b| > tau`. Categorical: level mismatch.
    pub fn feature_changed(&self, a: &[f64], b: &[f64], feature: usize, tau: f64) -> bool {
        let blk = self.blocks[feature];
        if blk.categorical {
            self.level(a, feature) != self.level(b, feature)
        } else {
            (a[blk.start] - b[blk.start]).abs() > tau
        }
    }
}

/// Training-split statistics for one feature.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureRange {
    Continuous { min: f64, max: f64 },
    /// `seen[level]` is true when the level occurs in the training split.
    Categorical { seen: Vec<bool> },
}

impl FeatureRange {
    pub fn contains(&self, raw: f64) -> bool {
        match self {
            FeatureRange::Continuous { min, max } => raw >= *min && raw <= *max,
            FeatureRange::Categorical { seen } => seen.get(raw as usize).copied().unwrap_or(false),
        }
    }
}

/// One-hot categoricals and min-max scaled continuous features, fitted on
/// the training split.
#[derive(Debug, Clone)]
pub struct Encoder {
    pub schema: Arc<FeatureSchema>,
    pub ranges: Vec<FeatureRange>,
    pub layout: Layout,
}

#[derive(Debug, Clone)]
pub struct EncodedDataset {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl EncodedDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn of_class(&self, class: usize) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == class)
            .map(|(r, _)| r.clone())
            .collect()
    }
}

impl Encoder {
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyBatch("cannot fit an encoder on zero rows"));
        }
        let schema = train.schema.clone();
        let ranges = schema
            .features
            .iter()
            .enumerate()
            .map(|(j, f)| match &f.kind {
                FeatureKind::Continuous => {
                    let (min, max) = train.rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                        (lo.min(r[j]), hi.max(r[j]))
                    });
                    FeatureRange::Continuous { min, max }
                }
                FeatureKind::Categorical { levels } => {
                    let mut seen = vec![false; levels.len()];
                    for r in &train.rows {
                        seen[r[j] as usize] = true;
                    }
                    FeatureRange::Categorical { seen }
                }
            })
            .collect();
        let layout = Layout::from_schema(&schema);
        Ok(Encoder {
            schema,
            ranges,
            layout,
        })
    }

    pub fn width(&self) -> usize {
        self.layout.width()
    }

    fn span(min: f64, max: f64) -> f64 {
        if max > min {
            max - min
        } else {
            1.0
        }
    }

    /// Test rows may land outside `[0, 1]`; nothing is clipped here.
    pub fn encode_row(&self, raw: &[f64]) -> Result<Vec<f64>> {
        check_len(self.schema.len(), raw.len())?;
        let mut out = vec![0.0; self.width()];
        for (j, (range, block)) in self.ranges.iter().zip(&self.layout.blocks).enumerate() {
            match range {
                FeatureRange::Continuous { min, max } => {
                    out[block.start] = (raw[j] - min) / Self::span(*min, *max);
                }
                FeatureRange::Categorical { .. } => {
                    let level = raw[j];
                    if level < 0.0 || level.fract() != 0.0 || level as usize >= block.len {
                        return Err(Error::UnknownLevel {
                            feature: self.schema.features[j].name.clone(),
                            level: format!("{level}"),
                        });
                    }
                    out[block.start + level as usize] = 1.0;
                }
            }
        }
        Ok(out)
    }

    pub fn decode_row(&self, encoded: &[f64]) -> Result<Vec<f64>> {
        check_len(self.width(), encoded.len())?;
        Ok(self
            .ranges
            .iter()
            .zip(&self.layout.blocks)
            .map(|(range, block)| match range {
                FeatureRange::Continuous { min, max } => {
                    let v = encoded[block.start];
                    let raw = min + v * Self::span(*min, *max);
                    // keep in-range codes in range despite rounding in min + v * span
                    if (0.0..=1.0).contains(&v) && max >= min {
                        raw.clamp(*min, *max)
                    } else {
                        raw
                    }
                }
                FeatureRange::Categorical { .. } => self.layout.level(encoded, block.feature) as f64,
            })
            .collect())
    }

    pub fn encode(&self, data: &Dataset) -> Result<EncodedDataset> {
        Ok(EncodedDataset {
            rows: data
                .rows
                .iter()
                .map(|r| self.encode_row(r))
                .collect::<Result<_>>()?,
            labels: data.labels.clone(),
        })
    }

    /// Every continuous value within the training range and every
    /// categorical level seen in training.
    pub fn in_range(&self, raw: &[f64]) -> bool {
        self.ranges.iter().zip(raw).all(|(r, &v)| r.contains(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSpec;

    fn fixture() -> (Dataset, Encoder) {
        let schema = Arc::new(
            FeatureSchema::new(vec![
                FeatureSpec::continuous("t").ranked(1),
                FeatureSpec::categorical("c", &["a", "b", "c", "d"]),
            ])
            .unwrap(),
        );
        let rows = vec![vec![10.0, 0.0], vec![30.0, 2.0], vec![20.0, 3.0]];
        let d = Dataset::new(rows, vec![0, 1, 0], schema).unwrap();
        let enc = Encoder::fit(&d).unwrap();
        (d, enc)
    }

    #[test]
    fn encode_examples() {
        let (_, enc) = fixture();
        assert_eq!(enc.width(), 5);
        assert_eq!(enc.encode_row(&[10.0, 2.0]).unwrap(), vec![0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(enc.encode_row(&[30.0, 0.0]).unwrap()[0], 1.0);
        // out-of-range test value is not clipped
        assert_eq!(enc.encode_row(&[40.0, 0.0]).unwrap()[0], 1.5);
        assert!(matches!(enc.encode_row(&[10.0, 4.0]), Err(Error::UnknownLevel { .. })));
    }

    #[test]
    fn declared_but_unseen_level_is_out_of_range() {
        let (_, enc) = fixture();
        assert!(enc.in_range(&[15.0, 0.0]));
        assert!(!enc.in_range(&[15.0, 1.0]));
        assert!(!enc.in_range(&[31.0, 0.0]));
    }

    #[test]
    fn snap_and_clip() {
        let (_, enc) = fixture();
        let mut x = vec![1.3, 0.2, 0.7, 0.7, 0.1];
        enc.layout.snap(&mut x);
        enc.layout.clip(&mut x);
        assert_eq!(x, vec![1.0, 0.0, 1.0, 0.0, 0.0]);
    }
}
