//! Oracles shared by the integration and acceptance targets.

use milnet::data::Label;
use milnet::evaluation::ScoredBag;
use rand::Rng;

pub fn scored(labels: &[i8], scores: &[f64]) -> Vec<ScoredBag> {
    labels
        .iter()
        .zip(scores)
        .enumerate()
        .map(|(i, (&l, &s))| ScoredBag::new(format!("b{i}"), Label::from_int(l as i64).unwrap(), s))
        .collect()
}

/// Sweeps every threshold, joins the operating points, and intersects the
/// polyline with TPR = 1 - FPR.
pub fn eer_oracle(labels: &[i8], scores: &[f64]) -> f64 {
    let pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let neg = labels.len() as f64 - pos;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut points = vec![(0.0, 0.0)];
    for t in thresholds {
        let tp = labels.iter().zip(scores).filter(|(&l, &s)| l == 1 && s >= t).count() as f64;
        let fp = labels.iter().zip(scores).filter(|(&l, &s)| l == -1 && s >= t).count() as f64;
        points.push((fp / neg, tp / pos));
    }
    let gap = |(f, t): (f64, f64)| t + f - 1.0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ga, gb) = (gap(a), gap(b));
        if ga == 0.0 {
            return a.0;
        }
        if ga < 0.0 && gb >= 0.0 {
            return a.0 + (b.0 - a.0) * (-ga) / (gb - ga);
        }
    }
    unreachable!("polyline ends at (1,1)")
}

pub fn random_set(r: &mut impl Rng) -> (Vec<i8>, Vec<f64>) {
    loop {
        let n = r.random_range(2..=12);
        let labels: Vec<i8> = (0..n).map(|_| if r.random_bool(0.5) { 1 } else { -1 }).collect();
        if labels.contains(&1) && labels.contains(&-1) {
            // few distinct values so ties are common
            let scores = (0..n).map(|_| r.random_range(-4i32..=4) as f64 * 0.5).collect();
            return (labels, scores);
        }
    }
}

