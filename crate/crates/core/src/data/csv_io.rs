//! Dataset CSV format: header `bag_id,label,f1,...,fd`, one instance per row.
//!
//! Rows of a bag need not be contiguous; instance order within a bag follows
//! file order and bags are emitted in order of first appearance.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::bag::{Bag, Label, MilDataset};
use crate::error::{Error, Result};

pub fn load_dataset(path: impl AsRef<Path>) -> Result<MilDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file)
}

pub fn read_dataset<R: Read>(reader: R) -> Result<MilDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr
        .headers()
        .map_err(|e| Error::Parse {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    if header.len() < 3 || &header[0] != "bag_id" || &header[1] != "label" {
        return Err(Error::Parse {
            row: 1,
            message: "header must be `bag_id,label,f1,...,fd`".into(),
        });
    }
    let dim = header.len() - 2;

    struct Pending {
        label: Label,
        features: Vec<f64>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut pending: HashMap<String, Pending> = HashMap::new();

    for (k, record) in rdr.records().enumerate() {
        // line 1 is the header
        let row = k + 2;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                row,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(Error::Parse {
                row,
                message: "empty bag_id".into(),
            });
        }
        let label = record[1]
            .parse::<i64>()
            .ok()
            .and_then(Label::from_int)
            .ok_or_else(|| Error::Parse {
                row,
                message: format!("label must be -1 or +1, found `{}`", &record[1]),
            })?;

        let entry = pending.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            Pending {
                label,
                features: Vec::new(),
            }
        });
        if entry.label != label {
            return Err(Error::Consistency {
                bag: id,
                message: format!(
                    "conflicting labels {} and {} (row {row})",
                    entry.label, label
                ),
            });
        }
        for (j, field) in record.iter().skip(2).enumerate() {
            let value = field.parse::<f64>().map_err(|_| Error::Parse {
                row,
                message: format!("feature {} is not a number: `{field}`", j + 1),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row,
                    message: format!("feature {} is not finite: `{field}`", j + 1),
                });
            }
            entry.features.push(value);
        }
    }

    if order.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let bags = order
        .into_iter()
        .map(|id| {
            let p = pending.remove(&id).expect("every ordered id is pending");
            Bag::from_flat(id, p.label, dim, p.features)
        })
        .collect::<Result<Vec<_>>>()?;
    MilDataset::new(bags)
}

pub fn write_dataset(path: impl AsRef<Path>, dataset: &MilDataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset_to(file, dataset).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn write_dataset_to<W: Write>(writer: W, dataset: &MilDataset) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["bag_id".to_string(), "label".to_string()];
    header.extend((1..=dataset.dim()).map(|j| format!("f{j}")));
    wtr.write_record(&header).map_err(csv_io_error)?;

    let mut record = Vec::with_capacity(header.len());
    for bag in dataset.bags() {
        for inst in bag.instances() {
            record.clear();
            record.push(bag.id().to_string());
            record.push(bag.label().to_string());
            // `{}` on f64 prints the shortest string that parses back to the same value
            record.extend(inst.iter().map(|v| format!("{v}")));
            wtr.write_record(&record).map_err(csv_io_error)?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<dataset writer>", e))
}

fn csv_io_error(e: csv::Error) -> Error {
    Error::io("<dataset writer>", std::io::Error::other(e.to_string()))
}
