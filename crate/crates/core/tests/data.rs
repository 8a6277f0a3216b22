use std::collections::BTreeSet;

use milnet::data::{
    apply_standardizer, fit_standardizer, generate_synthetic, generate_synthetic_with_meta,
    load_dataset, make_splits, read_dataset, write_dataset, write_dataset_to, Bag, Label,
    MilDataset, SplitPlan, Standardizer, SynthSpec, SCALE_FLOOR,
};
use milnet::Error;
use proptest::prelude::*;

fn read(text: &str) -> milnet::Result<MilDataset> {
    read_dataset(text.as_bytes())
}

#[test]
fn load_groups_rows_by_bag() {
    let ds = read("bag_id,label,f1,f2\nA,1,0.5,1\nA,1,2,3\nB,-1,4,5\n").unwrap();
    assert_eq!(ds.len(), 2);
    assert_eq!(ds.dim(), 2);
    assert_eq!(ds.get("A").unwrap().len(), 2);
    assert_eq!(ds.get("B").unwrap().len(), 1);
    assert_eq!(ds.get("A").unwrap().instance(1), &[2.0, 3.0]);
}

#[test]
fn interleaved_rows_keep_file_order_within_bag() {
    let ds = read("bag_id,label,f1\nA,1,1\nB,-1,9\nA,1,2\n").unwrap();
    assert_eq!(ds.get("A").unwrap().features(), &[1.0, 2.0]);
}

#[test]
fn label_zero_is_rejected() {
    let err = read("bag_id,label,f1\nA,0,1\n").unwrap_err();
    assert!(err.to_string().contains("label must be -1 or +1"), "{err}");
}

#[test]
fn conflicting_labels_name_the_bag() {
    let err = read("bag_id,label,f1\nA,1,1\nA,-1,2\n").unwrap_err();
    match err {
        Error::Consistency { bag, .. } => assert_eq!(bag, "A"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn missing_and_nan_features_report_row() {
    for text in ["bag_id,label,f1,f2\nA,1,1,2\nA,1,,2\n", "bag_id,label,f1\nA,1,1\nB,1,NaN\n"] {
        match read(text).unwrap_err() {
            Error::Parse { row, .. } => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}

#[test]
fn zero_rows_is_empty_dataset() {
    assert!(matches!(read("bag_id,label,f1\n"), Err(Error::EmptyDataset)));
}

#[test]
fn missing_file_is_io_error() {
    let err = load_dataset("/nonexistent/dir/data.csv").unwrap_err();
    assert!(err.is_io());
}

#[test]
fn standardizer_examples() {
    let ds = read("bag_id,label,f1,f2\nA,1,0,5\nB,-1,2,5\nB,-1,1,5\n").unwrap();
    let s = fit_standardizer(&ds);
    assert_eq!(s.mean, vec![1.0, 5.0]);
    assert!((s.scale[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    assert_eq!(s.scale[1], SCALE_FLOOR);

    let two = read("bag_id,label,f1\nA,1,0\nB,-1,2\n").unwrap();
    let s = fit_standardizer(&two);
    assert_eq!((s.mean[0], s.scale[0]), (1.0, 1.0));
    let out = apply_standardizer(&s, &two).unwrap();
    assert_eq!(out.get("A").unwrap().features(), &[-1.0]);
    assert_eq!(out.get("B").unwrap().features(), &[1.0]);
    assert_eq!(out.get("A").unwrap().label(), Label::Positive);

    let same = apply_standardizer(&Standardizer::identity(1), &two).unwrap();
    assert_eq!(same, two);
}

#[test]
fn standardizer_dimension_mismatch() {
    let ds = read("bag_id,label,f1\nA,1,0\n").unwrap();
    assert!(matches!(
        apply_standardizer(&Standardizer::identity(3), &ds),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn standardize_then_refit_is_unit() {
    let ds = generate_synthetic(&SynthSpec::witness(4, 30, 11)).unwrap();
    let z = apply_standardizer(&fit_standardizer(&ds), &ds).unwrap();
    let again = fit_standardizer(&z);
    for (m, s) in again.mean.iter().zip(&again.scale) {
        assert!(m.abs() <= 1e-12, "mean {m}");
        assert!((s - 1.0).abs() <= 1e-12, "scale {s}");
    }
}

fn balanced(per_class: usize) -> MilDataset {
    let bags = (0..2 * per_class)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Positive } else { Label::Negative };
            Bag::new(format!("b{i:03}"), label, vec![vec![i as f64]]).unwrap()
        })
        .collect();
    MilDataset::new(bags).unwrap()
}

#[test]
fn twenty_bags_ten_folds_one_per_class() {
    let ds = balanced(10);
    let plan = make_splits(&ds, 10, 5, 3).unwrap();
    for rep in 0..5 {
        for fold in 0..10 {
            let (_, test) = plan.partition(&ds, rep, fold).unwrap();
            assert_eq!(test.len(), 2);
            let pos = test.iter().filter(|&&i| ds.bags()[i].label() == Label::Positive).count();
            assert_eq!(pos, 1);
        }
    }
    assert_eq!(plan, make_splits(&ds, 10, 5, 3).unwrap());
}

#[test]
fn repetitions_differ() {
    let ds = balanced(10);
    let plan = make_splits(&ds, 10, 2, 0).unwrap();
    assert!(plan.bag_ids().any(|id| plan.fold_of(0, id) != plan.fold_of(1, id)));
}

#[test]
fn infeasible_stratification() {
    let ds = balanced(3);
    assert!(matches!(
        make_splits(&ds, 5, 1, 0),
        Err(Error::InfeasibleStratification { .. })
    ));
}

#[test]
fn plan_csv_round_trip() {
    let ds = balanced(7);
    let plan = make_splits(&ds, 3, 2, 9).unwrap();
    let mut buf = Vec::new();
    plan.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("repetition,fold,bag_id\n"));
    assert_eq!(SplitPlan::read_csv(buf.as_slice()).unwrap(), plan);
}

#[test]
fn partition_rejects_foreign_dataset() {
    let plan = make_splits(&balanced(5), 5, 1, 0).unwrap();
    assert!(matches!(plan.partition(&balanced(6), 0, 0), Err(Error::PlanMismatch(_))));
}

#[test]
fn witness_generation() {
    let synth = generate_synthetic_with_meta(&SynthSpec::witness(5, 100, 1)).unwrap();
    assert_eq!(synth.dataset.len(), 200);
    assert_eq!(synth.dataset.dim(), 5);
    for (bag, meta) in synth.dataset.bags().iter().zip(&synth.meta) {
        assert!((5..=20).contains(&bag.len()));
        match bag.label() {
            Label::Positive => {
                let cap = ((0.2 * bag.len() as f64).ceil() as usize).max(1);
                assert!(!meta.witnesses.is_empty() && meta.witnesses.len() <= cap);
            }
            Label::Negative => assert!(meta.witnesses.is_empty()),
        }
    }
    let norm: f64 = synth.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((norm - 1.0).abs() < 1e-12);
}

#[test]
fn synthetic_is_deterministic() {
    for spec in [SynthSpec::witness(3, 20, 5), SynthSpec::distribution_shift(3, 20, 5)] {
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        write_dataset_to(&mut x, &a).unwrap();
        write_dataset_to(&mut y, &b).unwrap();
        assert_eq!(x, y);
    }
}

#[test]
fn invalid_synth_spec() {
    let mut spec = SynthSpec::witness(3, 10, 0);
    spec.separation = 0.0;
    assert!(generate_synthetic(&spec).is_err());
    let mut spec = SynthSpec::witness(3, 10, 0);
    spec.instances = (0, 4);
    assert!(generate_synthetic(&spec).is_err());
}

/// P(|X/n - p| <= 0.2) for X ~ Binomial(n, p), summed exactly over the pmf.
fn binomial_within(n: u64, p: f64, radius: f64) -> f64 {
    let mut total = 0.0;
    for k in 0..=n {
        if ((k as f64 / n as f64) - p).abs() <= radius + 1e-12 {
            let mut c = 1.0f64;
            for i in 0..k {
                c = c * (n - i) as f64 / (i + 1) as f64;
            }
            total += c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
        }
    }
    total
}

#[test]
fn distribution_shift_component_fractions() {
    let oracle = binomial_within(50, 0.8, 0.2);
    assert!(oracle > 0.99, "oracle {oracle}");

    let synth = generate_synthetic_with_meta(&SynthSpec::distribution_shift(4, 100, 3)).unwrap();
    let mut within = [0usize; 2];
    let mut counts = [0usize; 2];
    for (bag, meta) in synth.dataset.bags().iter().zip(&synth.meta) {
        assert_eq!(bag.len(), 50);
        let (slot, p) = match bag.label() {
            Label::Positive => (0, 0.8),
            Label::Negative => (1, 0.2),
        };
        counts[slot] += 1;
        if (meta.component_a_fraction() - p).abs() <= 0.2 + 1e-12 {
            within[slot] += 1;
        }
    }
    for slot in 0..2 {
        assert!(within[slot] as f64 >= 0.95 * counts[slot] as f64, "{within:?} of {counts:?}");
    }
}

fn dataset_strategy() -> impl Strategy<Value = MilDataset> {
    (1usize..4, 1usize..8).prop_flat_map(|(dim, bags)| {
        let finite = prop_oneof![
            -1e6f64..1e6,
            any::<f64>().prop_filter("finite", |v| v.is_finite()),
        ];
        let bag = (any::<bool>(), prop::collection::vec(prop::collection::vec(finite, dim), 1..5));
        prop::collection::vec(bag, bags).prop_map(|raw| {
            let bags = raw
                .into_iter()
                .enumerate()
                .map(|(i, (pos, inst))| {
                    let label = if pos { Label::Positive } else { Label::Negative };
                    Bag::new(format!("bag-{i}"), label, inst).unwrap()
                })
                .collect();
            MilDataset::new(bags).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn csv_round_trip(ds in dataset_strategy()) {
        let mut buf = Vec::new();
        write_dataset_to(&mut buf, &ds).unwrap();
        prop_assert_eq!(read_dataset(buf.as_slice()).unwrap(), ds);
    }

    #[test]
    fn splits_partition_and_balance(pos in 5usize..20, neg in 5usize..20, folds in 2usize..6, seed in any::<u64>()) {
        let bags = (0..pos + neg)
            .map(|i| {
                let label = if i < pos { Label::Positive } else { Label::Negative };
                Bag::new(format!("x{i}"), label, vec![vec![0.0]]).unwrap()
            })
            .collect();
        let ds = MilDataset::new(bags).unwrap();
        let plan = make_splits(&ds, folds, 2, seed).unwrap();
        for rep in 0..2 {
            let mut seen = BTreeSet::new();
            let mut sizes = Vec::new();
            for fold in 0..folds {
                let (train, test) = plan.partition(&ds, rep, fold).unwrap();
                prop_assert_eq!(train.len() + test.len(), ds.len());
                prop_assert!(test.iter().all(|i| !train.contains(i)));
                for &i in &test {
                    prop_assert!(seen.insert(i));
                }
                sizes.push(test.len());
                for (label, total) in [(Label::Positive, pos), (Label::Negative, neg)] {
                    let c = test.iter().filter(|&&i| ds.bags()[i].label() == label).count() as f64;
                    prop_assert!((c - total as f64 / folds as f64).abs() <= 1.0);
                }
            }
            prop_assert_eq!(seen.len(), ds.len());
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}

#[test]
fn write_and_load_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let ds = generate_synthetic(&SynthSpec::witness(2, 4, 0)).unwrap();
    write_dataset(&path, &ds).unwrap();
    assert_eq!(load_dataset(&path).unwrap(), ds);
}
