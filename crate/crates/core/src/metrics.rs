//! Online evaluation metrics: Top-k precision against the Q oracle, the MSE
//! comparator between score maps, and the analytical-model comparison report
//! over the procedural test board.

use serde::Serialize;

use crate::annotation::ScoreMap;
use crate::cup::CupModel;
use crate::fixtures::{centered_vertical_candidate, standard_board};
use crate::geometry::SceneIndex;
use crate::policy::RankedGrasp;
use crate::seal::{evaluate_seal, evaluate_seal_8vertex};
use crate::{Error, Result};

/// Top-k precision over confidence-ordered grasps. Bucket sizes are
/// ceil(p * N), minimum 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrecisionReport {
    pub top1: f64,
    pub top1pct: f64,
    pub top5pct: f64,
    pub top10pct: f64,
    pub n_top1: usize,
    pub n_top1pct: usize,
    pub n_top5pct: usize,
    pub n_top10pct: usize,
}

pub fn bucket_size(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64).ceil() as usize).max(1).min(n)
}

/// Counts Q = 1 verdicts in the top-1 / top-1% / top-5% / top-10% buckets.
/// The oracle is invoked lazily, once per candidate in the largest bucket.
pub fn online_precision<F>(ranked: &[RankedGrasp], mut oracle: F) -> Result<PrecisionReport>
where
    F: FnMut(&RankedGrasp) -> Result<bool>,
{
    if ranked.is_empty() {
        return Err(Error::invalid("cannot score an empty ranking"));
    }
    let n = ranked.len();
    let n1 = 1usize;
    let n1p = bucket_size(0.01, n);
    let n5p = bucket_size(0.05, n);
    let n10p = bucket_size(0.10, n);
    let deepest = n10p.max(n5p).max(n1p).max(n1);
    let mut verdicts = Vec::with_capacity(deepest);
    for grasp in ranked.iter().take(deepest) {
        verdicts.push(oracle(grasp)?);
    }
    let precision =
        |k: usize| verdicts[..k].iter().filter(|&&q| q).count() as f64 / k as f64;
    Ok(PrecisionReport {
        top1: precision(n1),
        top1pct: precision(n1p),
        top5pct: precision(n5p),
        top10pct: precision(n10p),
        n_top1: n1,
        n_top1pct: n1p,
        n_top5pct: n5p,
        n_top10pct: n10p,
    })
}

/// Mean squared error between two score maps.
pub fn mse_score(predicted: &ScoreMap, truth: &ScoreMap) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predicted scores vs {} truth scores",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::invalid("cannot compare empty score maps"));
    }
    let n = predicted.len() as f64;
    Ok(predicted
        .scores
        .iter()
        .zip(&truth.scores)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n)
}

/// Verdict row of the analytical-model comparison.
#[derive(Debug, Clone, Serialize)]
pub struct ModelComparisonRow {
    pub pad: String,
    pub expected: bool,
    pub full_960: bool,
    pub perimeter_8: bool,
    pub disagreement: bool,
}

/// Full comparison over the procedural test board: both seal models against
/// every pad's analytic verdict, plus the disagreement list.
#[derive(Debug, Clone, Serialize)]
pub struct ModelComparisonReport {
    pub rows: Vec<ModelComparisonRow>,
    pub disagreements: Vec<String>,
    /// Pads where the full model matches the analytic verdict.
    pub full_correct: usize,
    /// Pads where the perimeter model matches the analytic verdict.
    pub perimeter_correct: usize,
}

impl ModelComparisonReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pad,expected,full_960,perimeter_8,disagreement\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.pad, row.expected, row.full_960, row.perimeter_8, row.disagreement
            ));
        }
        out
    }
}

/// Evaluates both seal models on every pad of the standard board with a
/// centered vertical candidate.
pub fn model_comparison_report(cup: &CupModel) -> Result<ModelComparisonReport> {
    let mut rows = Vec::new();
    let mut disagreements = Vec::new();
    let mut full_correct = 0;
    let mut perimeter_correct = 0;
    for pad in standard_board(cup) {
        pad.spec.validate(cup)?;
        let scene = pad.spec.make_scene()?;
        let index = SceneIndex::build(&scene);
        let cand = centered_vertical_candidate(1);
        let full = evaluate_seal(&index, cup, &cand).passed;
        let coarse = evaluate_seal_8vertex(&index, cup, &cand).passed;
        let expected = pad.expected_seal;
        if full == expected {
            full_correct += 1;
        }
        if coarse == expected {
            perimeter_correct += 1;
        }
        if full != coarse {
            disagreements.push(pad.name.to_string());
        }
        rows.push(ModelComparisonRow {
            pad: pad.name.to_string(),
            expected,
            full_960: full,
            perimeter_8: coarse,
            disagreement: full != coarse,
        });
    }
    Ok(ModelComparisonReport {
        rows,
        disagreements,
        full_correct,
        perimeter_correct,
    })
}
