//! Evaluation: accuracy, ROC-AUC, Fleiss' kappa, committee aggregation and
//! per-prediction emotion distributions.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::actor::{Emotion, EmotionRow, FaceTrack};
use crate::classify::{ClassifyError, FrameClassifier, LinearTrackModel};
use crate::game::Sign;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("empty input")]
    EmptyInput,
    #[error("both positive and negative labels are required")]
    DegenerateLabels,
    #[error("score at position {0} is not finite")]
    NonFiniteScore(usize),
    #[error("item {item} has {found} ratings, expected {expected}")]
    UnequalRaters { item: usize, expected: u64, found: u64 },
    #[error("at least two raters per item are required, found {0}")]
    TooFewRaters(u64),
    #[error("item {item} has {found} categories, expected {expected}")]
    RaggedCategories { item: usize, expected: usize, found: usize },
    #[error("chance agreement is 1 but observed agreement is not")]
    DegenerateChance,
    #[error("item {0} has no annotations")]
    MissingAnnotations(usize),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

/// Fraction of `(predicted, actual)` pairs that match.
pub fn accuracy(pairs: &[(Sign, Sign)]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let hits = pairs.iter().filter(|(p, a)| p == a).count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Accuracy over any comparable labels; the multi-class counterpart of [`accuracy`].
pub fn accuracy_of<T: PartialEq>(pairs: &[(T, T)]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let hits = pairs.iter().filter(|(p, a)| p == a).count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Area under the ROC curve of `(score, label)` pairs.
///
/// Mann-Whitney form: rank all scores, giving tied scores their average rank,
/// then `AUC = (R_pos - n_pos (n_pos + 1) / 2) / (n_pos n_neg)`. A tied
/// positive/negative pair contributes one half.
pub fn roc_auc(scored: &[(f64, Sign)]) -> Result<f64, MetricError> {
    if let Some(i) = scored.iter().position(|(s, _)| !s.is_finite()) {
        return Err(MetricError::NonFiniteScore(i));
    }
    let n_pos = scored.iter().filter(|(_, l)| *l == Sign::Plus).count();
    let n_neg = scored.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::DegenerateLabels);
    }

    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[a].0.total_cmp(&scored[b].0));

    let mut pos_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let score = scored[order[start]].0;
        let mut end = start + 1;
        // -0.0 and 0.0 are the same score.
        while end < order.len() && scored[order[end]].0 == score {
            end += 1;
        }
        // 1-based ranks start+1 ..= end share their mean.
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        let tied_pos = order[start..end].iter().filter(|&&i| scored[i].1 == Sign::Plus).count();
        pos_rank_sum += avg_rank * tied_pos as f64;
        start = end;
    }

    let n_pos_f = n_pos as f64;
    let u = pos_rank_sum - n_pos_f * (n_pos_f + 1.0) / 2.0;
    Ok(u / (n_pos_f * n_neg as f64))
}

/// Per-item category counts: `counts[i][j]` raters put item `i` in category `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingMatrix {
    counts: Vec<Vec<u64>>,
}

impl RatingMatrix {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self, MetricError> {
        let first = counts.first().ok_or(MetricError::EmptyInput)?;
        let categories = first.len();
        for (item, row) in counts.iter().enumerate() {
            if row.len() != categories {
                return Err(MetricError::RaggedCategories { item, expected: categories, found: row.len() });
            }
        }
        Ok(RatingMatrix { counts })
    }

    /// Builds counts from per-item category indices.
    pub fn from_assignments(categories: usize, items: &[Vec<usize>]) -> Result<Self, MetricError> {
        let counts = items
            .iter()
            .map(|ratings| {
                let mut row = vec![0u64; categories];
                for &c in ratings {
                    row[c] += 1;
                }
                row
            })
            .collect();
        Self::new(counts)
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }
}

/// Fleiss' kappa for a fixed number of raters per item.
///
/// `P_i = (sum_j n_ij^2 - n) / (n (n - 1))`, `P_e = sum_j p_j^2`,
/// `kappa = (mean P_i - P_e) / (1 - P_e)`. When every rating falls in one
/// category, chance agreement is 1 and kappa is defined as 1.
pub fn fleiss_kappa(m: &RatingMatrix) -> Result<f64, MetricError> {
    let rows = m.rows();
    let raters: u64 = rows[0].iter().sum();
    for (item, row) in rows.iter().enumerate() {
        let found: u64 = row.iter().sum();
        if found != raters {
            return Err(MetricError::UnequalRaters { item, expected: raters, found });
        }
    }
    if raters < 2 {
        return Err(MetricError::TooFewRaters(raters));
    }

    let n = raters as f64;
    let items = rows.len() as f64;
    let mean_agreement = rows
        .iter()
        .map(|row| {
            let sq: u64 = row.iter().map(|c| c * c).sum();
            (sq - raters) as f64 / (n * (n - 1.0))
        })
        .sum::<f64>()
        / items;

    let total = n * items;
    let categories = rows[0].len();
    let chance: f64 = (0..categories)
        .map(|j| {
            let p = rows.iter().map(|r| r[j]).sum::<u64>() as f64 / total;
            p * p
        })
        .sum();

    // Chance agreement is 1 exactly when a single category holds every rating.
    let single_category = (0..categories).filter(|&j| rows.iter().any(|r| r[j] > 0)).count() <= 1;
    if single_category {
        return if mean_agreement == 1.0 { Ok(1.0) } else { Err(MetricError::DegenerateChance) };
    }
    Ok((mean_agreement - chance) / (1.0 - chance))
}

/// One committee decision: the mean vote in `[-1, 1]` and its hard label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommitteeVote {
    pub score: f64,
    /// Sign of `score`; a tied committee votes `Minus`.
    pub label: Sign,
}

/// Combines several annotators' binary guesses per item by averaging them.
pub fn committee_aggregate(annotations: &[Vec<Sign>]) -> Result<Vec<CommitteeVote>, MetricError> {
    annotations
        .iter()
        .enumerate()
        .map(|(item, guesses)| {
            if guesses.is_empty() {
                return Err(MetricError::MissingAnnotations(item));
            }
            let sum: i64 = guesses.iter().map(|g| i64::from(g.as_i8())).sum();
            let score = sum as f64 / guesses.len() as f64;
            Ok(CommitteeVote { score, label: if sum > 0 { Sign::Plus } else { Sign::Minus } })
        })
        .collect()
}

/// Normalized frame-emotion histograms of tracks predicted good and bad.
#[derive(Debug, Clone, PartialEq)]
pub struct EmotionDistributionPair {
    pub good: EmotionRow,
    pub bad: EmotionRow,
    /// No track was predicted good; `good` is all zeros.
    pub good_empty: bool,
    /// No track was predicted bad; `bad` is all zeros.
    pub bad_empty: bool,
}

impl EmotionDistributionPair {
    pub fn row(&self, predicted: Sign) -> &EmotionRow {
        match predicted {
            Sign::Plus => &self.good,
            Sign::Minus => &self.bad,
        }
    }

    /// Summed mass of the given emotions in one row.
    pub fn mass(&self, predicted: Sign, emotions: &[Emotion]) -> f64 {
        let row = self.row(predicted);
        emotions.iter().map(|e| row[e.index()]).sum()
    }
}

/// Partitions tracks by the model's predicted label and histograms the
/// frame emotions assigned by `classifier` within each partition.
pub fn emotion_distributions<'a>(
    tracks: impl IntoIterator<Item = &'a FaceTrack>,
    model: &LinearTrackModel,
    classifier: &impl FrameClassifier,
) -> Result<EmotionDistributionPair, MetricError> {
    let mut good = [0u64; Emotion::COUNT];
    let mut bad = [0u64; Emotion::COUNT];
    let mut seen = false;
    for track in tracks {
        seen = true;
        let hist = match model.predict_label(track)? {
            Sign::Plus => &mut good,
            Sign::Minus => &mut bad,
        };
        for frame in track.frames.iter_rows() {
            hist[classifier.classify(frame).index()] += 1;
        }
    }
    if !seen {
        return Err(MetricError::EmptyInput);
    }
    let normalize = |h: [u64; Emotion::COUNT]| {
        let total: u64 = h.iter().sum();
        let mut row = [0.0; Emotion::COUNT];
        if total > 0 {
            for (r, c) in row.iter_mut().zip(h) {
                *r = c as f64 / total as f64;
            }
        }
        (row, total == 0)
    };
    let (good, good_empty) = normalize(good);
    let (bad, bad_empty) = normalize(bad);
    Ok(EmotionDistributionPair { good, bad, good_empty, bad_empty })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Sign::{Minus as N, Plus as P};

    /// Brute-force pairwise AUC.
    fn pairwise_auc(scored: &[(f64, Sign)]) -> f64 {
        let mut credit = 0.0;
        let mut pairs = 0.0;
        for &(sp, lp) in scored {
            for &(sn, ln) in scored {
                if lp == P && ln == N {
                    pairs += 1.0;
                    if sp > sn {
                        credit += 1.0;
                    } else if sp == sn {
                        credit += 0.5;
                    }
                }
            }
        }
        credit / pairs
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[(P, P), (N, N)]), Ok(1.0));
        assert_eq!(accuracy(&[(P, N), (N, P)]), Ok(0.0));
        assert_eq!(accuracy(&[(P, P), (N, N), (P, P), (P, N)]), Ok(0.75));
        assert_eq!(accuracy(&[]), Err(MetricError::EmptyInput));
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[(0.1, N), (0.2, N), (0.8, P), (0.9, P)]), Ok(1.0));
        assert_eq!(roc_auc(&[(0.3, N), (0.3, P), (0.3, P)]), Ok(0.5));
        let s = [(0.1, N), (0.4, N), (0.35, P), (0.8, P)];
        assert_eq!(pairwise_auc(&s), 0.75);
        assert_eq!(roc_auc(&s), Ok(0.75));
        assert_eq!(roc_auc(&[(0.1, P)]), Err(MetricError::DegenerateLabels));
        assert_eq!(roc_auc(&[(f64::NAN, P), (0.0, N)]), Err(MetricError::NonFiniteScore(0)));
    }

    #[test]
    fn auc_signed_zero_ties() {
        let s = [(-0.0, N), (0.0, P)];
        assert_eq!(roc_auc(&s), Ok(0.5));
    }

    #[test]
    fn kappa_hand_example() {
        // P_i = 1, 1/3, 1; mean 7/9; p = (1/2, 1/2), P_e = 1/2; kappa = 5/9.
        let m = RatingMatrix::new(vec![vec![4, 0], vec![2, 2], vec![0, 4]]).unwrap();
        assert!((fleiss_kappa(&m).unwrap() - 5.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_edge_cases() {
        let perfect = RatingMatrix::new(vec![vec![3, 0, 0], vec![0, 3, 0], vec![0, 0, 3]]).unwrap();
        assert_eq!(fleiss_kappa(&perfect), Ok(1.0));
        let single = RatingMatrix::new(vec![vec![5, 0], vec![5, 0]]).unwrap();
        assert_eq!(fleiss_kappa(&single), Ok(1.0));
        let unequal = RatingMatrix::new(vec![vec![2, 1], vec![1, 1]]).unwrap();
        assert!(matches!(fleiss_kappa(&unequal), Err(MetricError::UnequalRaters { item: 1, .. })));
        let one = RatingMatrix::new(vec![vec![1, 0]]).unwrap();
        assert_eq!(fleiss_kappa(&one), Err(MetricError::TooFewRaters(1)));
        assert_eq!(RatingMatrix::new(vec![]), Err(MetricError::EmptyInput));
    }

    #[test]
    fn committee_examples() {
        let votes = committee_aggregate(&[vec![P, P, P], vec![P, P, N], vec![P, N]]).unwrap();
        assert_eq!(votes[0].score, 1.0);
        assert!((votes[1].score - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(votes[1].label, P);
        assert_eq!(votes[2].score, 0.0);
        assert_eq!(votes[2].label, N);
        assert_eq!(committee_aggregate(&[vec![P], vec![]]), Err(MetricError::MissingAnnotations(1)));
    }

    #[test]
    fn single_annotator_committee_matches_annotator_accuracy() {
        let truth = [P, N, P, P, N];
        let guesses = [P, P, N, P, N];
        let votes = committee_aggregate(&guesses.iter().map(|g| vec![*g]).collect::<Vec<_>>()).unwrap();
        let committee: Vec<_> = votes.iter().zip(truth).map(|(v, t)| (v.label, t)).collect();
        let single: Vec<_> = guesses.iter().copied().zip(truth).collect();
        assert_eq!(accuracy(&committee), accuracy(&single));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn scored() -> impl Strategy<Value = Vec<(f64, Sign)>> {
            prop::collection::vec((0i32..20, any::<bool>()), 2..200)
                .prop_map(|v| v.into_iter().map(|(s, l)| (f64::from(s) / 4.0, if l { P } else { N })).collect())
        }

        proptest! {
            #[test]
            fn auc_matches_pairwise(s in scored()) {
                prop_assume!(s.iter().any(|x| x.1 == P) && s.iter().any(|x| x.1 == N));
                let fast = roc_auc(&s).unwrap();
                prop_assert!((fast - pairwise_auc(&s)).abs() < 1e-9);
                let transformed: Vec<_> = s.iter().map(|&(x, l)| (libm::exp(3.0 * x) - 7.0, l)).collect();
                prop_assert!((roc_auc(&transformed).unwrap() - fast).abs() < 1e-9);
                let flipped: Vec<_> = s.iter().map(|&(x, l)| (-x, -l)).collect();
                prop_assert!((roc_auc(&flipped).unwrap() - fast).abs() < 1e-9);
            }

            #[test]
            fn kappa_bounded_and_permutation_invariant(
                rows in prop::collection::vec(prop::collection::vec(0u64..5, 4), 1..30),
                rot in 0usize..4,
            ) {
                let raters = 6u64;
                // Top up the last category so every row has the same rater count.
                let rows: Vec<Vec<u64>> = rows.into_iter().map(|mut r| {
                    let mut total: u64 = r.iter().sum();
                    while total > raters {
                        let j = r.iter().position(|c| *c > 0).unwrap();
                        r[j] -= 1;
                        total -= 1;
                    }
                    r[3] += raters - total;
                    r
                }).collect();
                let permuted: Vec<Vec<u64>> = rows.iter().map(|r| {
                    let mut p = r.clone();
                    p.rotate_left(rot);
                    p
                }).collect();
                let k = fleiss_kappa(&RatingMatrix::new(rows).unwrap()).unwrap();
                let kp = fleiss_kappa(&RatingMatrix::new(permuted).unwrap()).unwrap();
                prop_assert!(k <= 1.0 + 1e-12);
                prop_assert!((k - kp).abs() < 1e-12);
            }
        }
    }
}
