use crate::data::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredBag {
    pub id: String,
    pub label: Label,
    pub score: f64,
}

impl ScoredBag {
    pub fn new(id: impl Into<String>, label: Label, score: f64) -> ScoredBag {
        ScoredBag {
            id: id.into(),
            label,
            score,
        }
    }
}

/// Cumulative `(false positives, true positives)` after each distinct threshold,
/// sweeping scores from high to low and starting at `(0, 0)`.
fn counts(scored: &[ScoredBag]) -> Result<(Vec<(u64, u64)>, u64, u64)> {
    if let Some(b) = scored.iter().find(|b| !b.score.is_finite()) {
        return Err(Error::config(format!("bag {} has non-finite score {}", b.id, b.score)));
    }
    let positives = scored.iter().filter(|b| b.label == Label::Positive).count() as u64;
    let negatives = scored.len() as u64 - positives;
    if positives == 0 {
        return Err(Error::SingleClass(-1));
    }
    if negatives == 0 {
        return Err(Error::SingleClass(1));
    }
    let mut order: Vec<&ScoredBag> = scored.iter().collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score));

    let mut out = vec![(0, 0)];
    let (mut fp, mut tp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = order[i].score;
        while i < order.len() && order[i].score == s {
            match order[i].label {
                Label::Positive => tp += 1,
                Label::Negative => fp += 1,
            }
            i += 1;
        }
        out.push((fp, tp));
    }
    Ok((out, positives, negatives))
}

/// ROC polyline as `(FPR, TPR)` points, anchored at `(0, 0)` and `(1, 1)`.
pub fn roc_points(scored: &[ScoredBag]) -> Result<Vec<(f64, f64)>> {
    let (pts, p, n) = counts(scored)?;
    Ok(pts
        .into_iter()
        .map(|(fp, tp)| (fp as f64 / n as f64, tp as f64 / p as f64))
        .collect())
}

/// `num / den` rounded once; exact whenever both fit in 53 bits.
fn ratio(num: i128, den: i128) -> f64 {
    const EXACT: i128 = 1 << 53;
    if num.abs() <= EXACT && den.abs() <= EXACT {
        num as f64 / den as f64
    } else {
        (num as f64 / den as f64).clamp(0.0, 1.0)
    }
}

/// Equal error rate: the FPR where the linearly interpolated ROC crosses
/// `TPR = 1 - FPR`.
///
/// The crossing is located with integer counts, so the result depends only on the
/// ordering of scores.
pub fn eer(scored: &[ScoredBag]) -> Result<f64> {
    let (pts, p, n) = counts(scored)?;
    let (p, n) = (p as i128, n as i128);
    // h = tp * n + fp * p - p * n is monotone along the polyline, -pn at the
    // origin and +pn at (1, 1); its root is the anti-diagonal crossing.
    let h = |(fp, tp): (u64, u64)| tp as i128 * n + fp as i128 * p - p * n;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ha, hb) = (h(a), h(b));
        if ha == 0 {
            return Ok(ratio(a.0 as i128, n));
        }
        if ha < 0 && hb >= 0 {
            // EER = (fp_a * (hb - ha) - ha * (fp_b - fp_a)) / (n * (hb - ha)), one rounding
            let span = hb - ha;
            let num = a.0 as i128 * span - ha * (b.0 as i128 - a.0 as i128);
            return Ok(ratio(num, n * span));
        }
    }
    unreachable!("ROC polyline always reaches (1, 1)")
}
