use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Encoder, Layout};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// An autoencoder output that already sat within `beta` of 50-50.
    AeOnly,
    /// A bisection midpoint.
    Bisected,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::AeOnly => "ae_only",
            Provenance::Bisected => "bisected",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "ae_only" => Some(Provenance::AeOnly),
            "bisected" => Some(Provenance::Bisected),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalInstance {
    pub x: Vec<f64>,
    pub f_n: f64,
    pub f_a: f64,
    pub provenance: Provenance,
}

impl CriticalInstance {
    pub fn gap(&self) -> f64 {
        (self.f_n - self.f_a).abs()
    }
}

/// Encoded points on (or within `beta` of) the classifier's decision boundary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CriticalSet {
    pub instances: Vec<CriticalInstance>,
}

impl CriticalSet {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn points(&self) -> Vec<&[f64]> {
        self.instances.iter().map(|c| c.x.as_slice()).collect()
    }

    pub fn width(&self) -> Option<usize> {
        self.instances.first().map(|c| c.x.len())
    }

    /// Per-column `[min, max]` over the members.
    pub fn column_bounds(&self) -> Result<Vec<(f64, f64)>> {
        let width = self.width().ok_or(Error::EmptyCriticalSet)?;
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); width];
        for c in &self.instances {
            for (b, &v) in bounds.iter_mut().zip(&c.x) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
        Ok(bounds)
    }

    /// True when every continuous coordinate of every member lies in the
    /// training range (`[0, 1]` encoded).
    pub fn within_training_range(&self, layout: &Layout) -> bool {
        self.instances
            .iter()
            .all(|c| layout.continuous_columns().all(|j| (0.0..=1.0).contains(&c.x[j])))
    }

    /// CSV with `enc_*` columns, decoded feature columns, `f_n`, `f_a` and
    /// `provenance`. Floats use the shortest round-trip representation.
    pub fn write_csv<W: Write>(&self, writer: W, encoder: &Encoder) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let width = encoder.width();
        let mut header: Vec<String> = (0..width).map(|j| format!("enc_{j}")).collect();
        header.extend(encoder.schema.features.iter().map(|f| f.name.clone()));
        header.extend(["f_n", "f_a", "provenance"].map(String::from));
        w.write_record(&header).map_err(csv_err)?;
        for c in &self.instances {
            let raw = encoder.decode_row(&c.x)?;
            let mut rec: Vec<String> = c.x.iter().map(|v| format!("{v:?}")).collect();
            rec.extend(
                raw.iter()
                    .enumerate()
                    .map(|(j, &v)| Dataset::format_value(&encoder.schema, j, v)),
            );
            rec.push(format!("{:?}", c.f_n));
            rec.push(format!("{:?}", c.f_a));
            rec.push(c.provenance.as_str().to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }

    /// Reads the `enc_*`, `f_n`, `f_a` and `provenance` columns back; decoded
    /// columns are ignored.
    pub fn read_csv<R: Read>(reader: R, width: usize) -> Result<CriticalSet> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers().map_err(csv_err)?.clone();
        let find = |name: &str| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Format(format!("critical set CSV lacks column {name:?}")))
        };
        let enc = (0..width).map(|j| find(&format!("enc_{j}"))).collect::<Result<Vec<_>>>()?;
        if find(&format!("enc_{width}")).is_ok() {
            return Err(Error::Format(format!("critical set CSV is wider than {width} columns")));
        }
        let (fn_col, fa_col, prov_col) = (find("f_n")?, find("f_a")?, find("provenance")?);
        let mut instances = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let num = |col: usize| -> Result<f64> {
                rec[col]
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("row {}: bad number {:?}", line + 1, &rec[col])))
            };
            let x = enc.iter().map(|&c| num(c)).collect::<Result<Vec<_>>>()?;
            let provenance = Provenance::parse(&rec[prov_col])
                .ok_or_else(|| Error::Format(format!("row {}: unknown provenance {:?}", line + 1, &rec[prov_col])))?;
            instances.push(CriticalInstance {
                x,
                f_n: num(fn_col)?,
                f_a: num(fa_col)?,
                provenance,
            });
        }
        Ok(CriticalSet { instances })
    }

    pub fn save(&self, path: impl AsRef<Path>, encoder: &Encoder) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file), encoder)
    }

    pub fn load(path: impl AsRef<Path>, width: usize) -> Result<CriticalSet> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file), width)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}
