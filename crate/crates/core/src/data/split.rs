//! Stratified, repeated k-fold split plans keyed by bag id.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;

use super::bag::{Label, MilDataset};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng};

/// Explicit `(repetition, bag id) -> fold` assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    folds: usize,
    // one map per repetition
    assignment: Vec<BTreeMap<String, usize>>,
}

impl SplitPlan {
    pub fn from_assignment(folds: usize, assignment: Vec<BTreeMap<String, usize>>) -> Result<Self> {
        if folds == 0 {
            return Err(Error::config("a split plan needs at least one fold"));
        }
        if assignment.is_empty() {
            return Err(Error::config("a split plan needs at least one repetition"));
        }
        for (r, rep) in assignment.iter().enumerate() {
            if let Some((id, f)) = rep.iter().find(|(_, &f)| f >= folds) {
                return Err(Error::PlanMismatch(format!(
                    "repetition {r}: bag {id} assigned to fold {f} of {folds}"
                )));
            }
        }
        let first: Vec<&String> = assignment[0].keys().collect();
        if assignment.iter().any(|rep| !rep.keys().eq(first.iter().copied())) {
            return Err(Error::PlanMismatch(
                "repetitions cover different bag ids".into(),
            ));
        }
        Ok(SplitPlan { folds, assignment })
    }

    pub fn repeats(&self) -> usize {
        self.assignment.len()
    }

    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn fold_of(&self, repetition: usize, bag_id: &str) -> Option<usize> {
        self.assignment.get(repetition)?.get(bag_id).copied()
    }

    pub fn assignment(&self, repetition: usize) -> &BTreeMap<String, usize> {
        &self.assignment[repetition]
    }

    pub fn bag_ids(&self) -> impl Iterator<Item = &str> {
        self.assignment[0].keys().map(String::as_str)
    }

    /// Positions in `dataset` of the training and held-out bags for one `(repetition, fold)`.
    pub fn partition(
        &self,
        dataset: &MilDataset,
        repetition: usize,
        fold: usize,
    ) -> Result<(Vec<usize>, Vec<usize>)> {
        let rep = self.assignment.get(repetition).ok_or_else(|| {
            Error::PlanMismatch(format!("no repetition {repetition} in plan"))
        })?;
        if rep.len() != dataset.len() {
            return Err(Error::PlanMismatch(format!(
                "plan covers {} bags, dataset has {}",
                rep.len(),
                dataset.len()
            )));
        }
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, bag) in dataset.bags().iter().enumerate() {
            match rep.get(bag.id()) {
                Some(&f) if f == fold => test.push(i),
                Some(_) => train.push(i),
                None => {
                    return Err(Error::PlanMismatch(format!(
                        "bag {} is not in the plan",
                        bag.id()
                    )))
                }
            }
        }
        Ok((train, test))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut rows: Vec<(usize, usize, &str)> = self
            .assignment
            .iter()
            .enumerate()
            .flat_map(|(r, rep)| rep.iter().map(move |(id, &f)| (r, f, id.as_str())))
            .collect();
        rows.sort();
        let mut wtr = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::io("<split plan writer>", std::io::Error::other(e.to_string()));
        wtr.write_record(["repetition", "fold", "bag_id"]).map_err(io)?;
        for (r, f, id) in rows {
            wtr.write_record([r.to_string(), f.to_string(), id.to_string()])
                .map_err(io)?;
        }
        wtr.flush().map_err(|e| Error::io("<split plan writer>", e))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file)
    }

    /// Reads `repetition,fold,bag_id` rows; the fold count is one past the largest fold index.
    pub fn read_csv<R: Read>(reader: R) -> Result<SplitPlan> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| Error::Parse {
                row: 1,
                message: e.to_string(),
            })?
            .clone();
        if header.iter().collect::<Vec<_>>() != ["repetition", "fold", "bag_id"] {
            return Err(Error::Parse {
                row: 1,
                message: "header must be `repetition,fold,bag_id`".into(),
            });
        }
        let mut assignment: Vec<BTreeMap<String, usize>> = Vec::new();
        let mut max_fold = 0;
        for (k, rec) in rdr.records().enumerate() {
            let row = k + 2;
            let rec = rec.map_err(|e| Error::Parse {
                row,
                message: e.to_string(),
            })?;
            let parse = |s: &str, what: &str| {
                s.parse::<usize>().map_err(|_| Error::Parse {
                    row,
                    message: format!("{what} must be a non-negative integer, found `{s}`"),
                })
            };
            let r = parse(&rec[0], "repetition")?;
            let f = parse(&rec[1], "fold")?;
            if assignment.len() <= r {
                assignment.resize_with(r + 1, BTreeMap::new);
            }
            if assignment[r].insert(rec[2].to_string(), f).is_some() {
                return Err(Error::Parse {
                    row,
                    message: format!("bag {} assigned twice in repetition {r}", &rec[2]),
                });
            }
            max_fold = max_fold.max(f);
        }
        if assignment.is_empty() {
            return Err(Error::PlanMismatch("split plan has no rows".into()));
        }
        if let Some(r) = assignment.iter().position(BTreeMap::is_empty) {
            return Err(Error::PlanMismatch(format!("repetition {r} has no rows")));
        }
        SplitPlan::from_assignment(max_fold + 1, assignment)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SplitPlan> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        SplitPlan::read_csv(file)
    }
}

/// Stratified assignment: within each repetition, each class is shuffled and dealt
/// round-robin over the folds, the negative class continuing where the positive
/// class stopped so that total fold sizes differ by at most one.
///
/// Bag ids are sorted before shuffling, so the plan does not depend on the order of
/// bags in `dataset`.
pub fn make_splits(dataset: &MilDataset, folds: usize, repeats: usize, seed: u64) -> Result<SplitPlan> {
    if folds < 2 {
        return Err(Error::config("at least two folds are required"));
    }
    if repeats == 0 {
        return Err(Error::config("at least one repetition is required"));
    }
    let mut by_class: Vec<Vec<&str>> = Vec::with_capacity(2);
    for label in [Label::Positive, Label::Negative] {
        let mut ids: Vec<&str> = dataset
            .bags()
            .iter()
            .filter(|b| b.label() == label)
            .map(|b| b.id())
            .collect();
        if ids.len() < folds {
            return Err(Error::InfeasibleStratification {
                label: label.as_i8(),
                count: ids.len(),
                folds,
            });
        }
        ids.sort_unstable();
        by_class.push(ids);
    }

    let assignment = (0..repeats)
        .map(|r| {
            let mut rng = rng(derive_seed(seed, &[r as u64]));
            let mut rep = BTreeMap::new();
            let mut next = 0usize;
            for ids in &by_class {
                let mut ids = ids.clone();
                ids.shuffle(&mut rng);
                for id in ids {
                    rep.insert(id.to_string(), next % folds);
                    next += 1;
                }
            }
            rep
        })
        .collect();
    SplitPlan::from_assignment(folds, assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Bag;

    fn dataset(pos: usize, neg: usize) -> MilDataset {
        let bags = (0..pos + neg)
            .map(|i| {
                let label = if i < pos { Label::Positive } else { Label::Negative };
                Bag::new(format!("b{i:03}"), label, vec![vec![i as f64]]).unwrap()
            })
            .collect();
        MilDataset::new(bags).unwrap()
    }

    #[test]
    fn ten_per_class_ten_folds() {
        let ds = dataset(10, 10);
        let plan = make_splits(&ds, 10, 5, 3).unwrap();
        assert_eq!(plan.repeats(), 5);
        for r in 0..5 {
            for f in 0..10 {
                let (_, test) = plan.partition(&ds, r, f).unwrap();
                assert_eq!(test.len(), 2);
                let pos = test
                    .iter()
                    .filter(|&&i| ds.bags()[i].label() == Label::Positive)
                    .count();
                assert_eq!(pos, 1);
            }
        }
    }

    #[test]
    fn deterministic_and_repetitions_differ() {
        let ds = dataset(10, 10);
        let a = make_splits(&ds, 10, 2, 11).unwrap();
        let b = make_splits(&ds, 10, 2, 11).unwrap();
        assert_eq!(a, b);
        let differs = ds
            .bags()
            .iter()
            .any(|bag| a.fold_of(0, bag.id()) != a.fold_of(1, bag.id()));
        assert!(differs);
    }

    #[test]
    fn infeasible_stratification() {
        let ds = dataset(3, 10);
        let err = make_splits(&ds, 5, 1, 0).unwrap_err();
        assert!(matches!(
            err,
            Error::InfeasibleStratification { label: 1, count: 3, folds: 5 }
        ));
    }

    #[test]
    fn csv_round_trip() {
        let ds = dataset(6, 7);
        let plan = make_splits(&ds, 3, 2, 5).unwrap();
        let mut buf = Vec::new();
        plan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("repetition,fold,bag_id\n"));
        assert_eq!(SplitPlan::read_csv(buf.as_slice()).unwrap(), plan);
    }

    #[test]
    fn partition_rejects_foreign_dataset() {
        let plan = make_splits(&dataset(4, 4), 2, 1, 0).unwrap();
        assert!(matches!(
            plan.partition(&dataset(5, 4), 0, 0),
            Err(Error::PlanMismatch(_))
        ));
    }
}
