//! Track-level valence prediction: per-frame emotion voting, and a linear
//! classifier over temporally pooled frame features trained with hinge loss.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use thiserror::Error;

use crate::actor::{Emotion, FaceTrack};
use crate::dataset::{LabeledTrackSet, Split};
use crate::game::Sign;
use crate::matrix::{dot, sq_dist, Matrix};
use crate::metrics::{roc_auc, MetricError};
use crate::seed::StreamRng;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("track has no frames")]
    EmptyTrack,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("positive, negative and ignored emotions must partition all seven emotions")]
    InvalidValenceMap,
}

/// Assigns an emotion to a single frame.
pub trait FrameClassifier {
    fn classify(&self, frame: &[f64]) -> Emotion;
}

/// Nearest-centroid frame classifier; ties go to the lowest emotion index.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestCentroid {
    centroids: Matrix,
}

impl NearestCentroid {
    pub fn new(centroids: Matrix) -> Result<Self, ClassifyError> {
        if centroids.rows() != Emotion::COUNT {
            return Err(ClassifyError::DimensionMismatch { expected: Emotion::COUNT, found: centroids.rows() });
        }
        Ok(NearestCentroid { centroids })
    }

    pub fn centroids(&self) -> &Matrix {
        &self.centroids
    }
}

impl FrameClassifier for NearestCentroid {
    fn classify(&self, frame: &[f64]) -> Emotion {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, c) in self.centroids.iter_rows().enumerate() {
            let d = sq_dist(frame, c);
            if d < best_dist {
                best = i;
                best_dist = d;
            }
        }
        Emotion::ALL[best]
    }
}

/// Which emotions vote for a good event, which for a bad one, and which abstain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValenceMap {
    votes: [Option<Sign>; Emotion::COUNT],
}

impl Default for ValenceMap {
    /// Happiness votes good; sadness, fear, anger and disgust vote bad;
    /// neutral and surprise abstain.
    fn default() -> Self {
        use Emotion::*;
        Self::from_sets(&[Happiness], &[Sadness, Fear, Anger, Disgust], &[Neutral, Surprise])
            .expect("default map is a partition")
    }
}

impl ValenceMap {
    pub fn from_sets(positive: &[Emotion], negative: &[Emotion], ignored: &[Emotion]) -> Result<Self, ClassifyError> {
        let mut seen = [false; Emotion::COUNT];
        let mut votes = [None; Emotion::COUNT];
        let groups = [(positive, Some(Sign::Plus)), (negative, Some(Sign::Minus)), (ignored, None)];
        for (set, vote) in groups {
            for e in set {
                if core::mem::replace(&mut seen[e.index()], true) {
                    return Err(ClassifyError::InvalidValenceMap);
                }
                votes[e.index()] = vote;
            }
        }
        if seen.iter().all(|s| *s) {
            Ok(ValenceMap { votes })
        } else {
            Err(ClassifyError::InvalidValenceMap)
        }
    }

    pub fn vote(&self, emotion: Emotion) -> Option<Sign> {
        self.votes[emotion.index()]
    }
}

/// `(n_pos - n_neg) / T` over the track's frames.
pub fn voting_score(
    track: &FaceTrack,
    classifier: &impl FrameClassifier,
    map: &ValenceMap,
) -> Result<f64, ClassifyError> {
    if track.is_empty() {
        return Err(ClassifyError::EmptyTrack);
    }
    let net: i64 =
        track.frames.iter_rows().filter_map(|f| map.vote(classifier.classify(f))).map(|s| i64::from(s.as_i8())).sum();
    Ok(net as f64 / track.len() as f64)
}

/// Majority decision of a voting score; a tie predicts a bad event.
pub fn voting_label(score: f64) -> Sign {
    Sign::of_score(score)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "lowercase"))]
pub enum PoolingMode {
    #[default]
    Average,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "lowercase"))]
pub enum Normalization {
    #[default]
    L1,
    None,
}

impl PoolingMode {
    pub fn name(self) -> &'static str {
        match self {
            PoolingMode::Average => "average",
            PoolingMode::Max => "max",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "average" => Some(PoolingMode::Average),
            "max" => Some(PoolingMode::Max),
            _ => None,
        }
    }
}

impl Normalization {
    pub fn name(self) -> &'static str {
        match self {
            Normalization::L1 => "l1",
            Normalization::None => "none",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "l1" => Some(Normalization::L1),
            "none" => Some(Normalization::None),
            _ => None,
        }
    }
}

impl fmt::Display for PoolingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pooled {
    pub values: Vec<f64>,
    /// L1 normalization was requested but the pooled vector was all zeros, so
    /// it was passed through unchanged.
    pub zero_norm: bool,
}

/// Maps one frame to the feature space the pooled classifier sees.
pub trait FrameEmbedder {
    fn embed(&self, frame: &[f64]) -> Vec<f64>;
}

/// Uses frame features as they are.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl FrameEmbedder for Identity {
    fn embed(&self, frame: &[f64]) -> Vec<f64> {
        frame.to_vec()
    }
}

fn pool_rows<'a>(
    mut rows: impl Iterator<Item = &'a [f64]>,
    count: usize,
    mode: PoolingMode,
    norm: Normalization,
) -> Result<Pooled, ClassifyError> {
    let first = rows.next().ok_or(ClassifyError::EmptyTrack)?;
    let mut acc = first.to_vec();
    for row in rows {
        if row.len() != acc.len() {
            return Err(ClassifyError::DimensionMismatch { expected: acc.len(), found: row.len() });
        }
        for (a, x) in acc.iter_mut().zip(row) {
            match mode {
                PoolingMode::Average => *a += x,
                PoolingMode::Max => *a = a.max(*x),
            }
        }
    }
    if mode == PoolingMode::Average {
        for a in acc.iter_mut() {
            *a /= count as f64;
        }
    }
    let mut zero_norm = false;
    if norm == Normalization::L1 {
        let l1: f64 = acc.iter().map(|v| libm::fabs(*v)).sum();
        if l1 > 0.0 {
            for a in acc.iter_mut() {
                *a /= l1;
            }
        } else {
            zero_norm = true;
        }
    }
    Ok(Pooled { values: acc, zero_norm })
}

/// Coordinate-wise mean or max over frames, optionally L1-normalized.
pub fn pool_track(track: &FaceTrack, mode: PoolingMode, norm: Normalization) -> Result<Pooled, ClassifyError> {
    pool_rows(track.frames.iter_rows(), track.len(), mode, norm)
}

/// Embeds each frame and pools the embeddings.
pub fn pool_embedded(
    track: &FaceTrack,
    embedder: &impl FrameEmbedder,
    mode: PoolingMode,
    norm: Normalization,
) -> Result<Pooled, ClassifyError> {
    let embedded: Vec<Vec<f64>> = track.frames.iter_rows().map(|f| embedder.embed(f)).collect();
    pool_rows(embedded.iter().map(Vec::as_slice), embedded.len(), mode, norm)
}

/// Linear classifier on pooled track features.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearTrackModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub pooling: PoolingMode,
    pub normalize: Normalization,
}

impl LinearTrackModel {
    pub fn zeros(dim: usize, pooling: PoolingMode, normalize: Normalization) -> Self {
        LinearTrackModel { weights: vec![0.0; dim], bias: 0.0, pooling, normalize }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }

    pub fn score_pooled(&self, pooled: &[f64]) -> Result<f64, ClassifyError> {
        if pooled.len() != self.weights.len() {
            return Err(ClassifyError::DimensionMismatch { expected: self.weights.len(), found: pooled.len() });
        }
        Ok(dot(&self.weights, pooled) + self.bias)
    }

    pub fn predict(&self, track: &FaceTrack) -> Result<f64, ClassifyError> {
        if track.frames.cols() != self.weights.len() {
            return Err(ClassifyError::DimensionMismatch { expected: self.weights.len(), found: track.frames.cols() });
        }
        let pooled = pool_track(track, self.pooling, self.normalize)?;
        self.score_pooled(&pooled.values)
    }

    /// Sign of the score; zero predicts a bad event.
    pub fn predict_label(&self, track: &FaceTrack) -> Result<Sign, ClassifyError> {
        self.predict(track).map(Sign::of_score)
    }
}

/// Value and subgradient of the regularized hinge loss at one example.
#[derive(Debug, Clone, PartialEq)]
pub struct HingeEval {
    pub value: f64,
    pub grad_weights: Vec<f64>,
    pub grad_bias: f64,
}

/// `max(0, 1 - y (w.z + b)) + (lambda / 2) |w|^2` and its subgradient.
/// At the kink the zero-loss branch is used.
pub fn hinge_objective(
    model: &LinearTrackModel,
    pooled: &[f64],
    y: Sign,
    l2_lambda: f64,
) -> Result<HingeEval, ClassifyError> {
    let score = model.score_pooled(pooled)?;
    let yf = y.as_f64();
    let slack = 1.0 - yf * score;
    let reg = 0.5 * l2_lambda * dot(&model.weights, &model.weights);
    let mut grad_weights: Vec<f64> = model.weights.iter().map(|w| l2_lambda * w).collect();
    let mut grad_bias = 0.0;
    let mut value = reg;
    if slack > 0.0 {
        value += slack;
        for (g, z) in grad_weights.iter_mut().zip(pooled) {
            *g -= yf * z;
        }
        grad_bias = -yf;
    }
    Ok(HingeEval { value, grad_weights, grad_bias })
}

/// The bias takes steps 100 times smaller than the weights. Pooled L1-normalized
/// features have coordinates on the order of `1 / dim`, so an unscaled bias
/// step swamps the weight updates and leaves the model badly calibrated.
pub const BIAS_STEP_SCALE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2_lambda: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { learning_rate: 100.0, epochs: 100, l2_lambda: 1e-4, batch_size: 32, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("the {0} split is empty")]
    EmptySplit(Split),
    #[error("invalid training config field `{0}`")]
    Config(&'static str),
    #[error("loss became non-finite in epoch {epoch}")]
    DivergenceDetected { epoch: usize },
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("validation metric: {0}")]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters of the checkpoint with the best validation AUC.
    pub model: LinearTrackModel,
    pub best_epoch: usize,
    /// Epoch 0 is the initial model.
    pub log: Vec<EpochLog>,
}

fn pooled_split(
    dataset: &LabeledTrackSet,
    split: Split,
    model: &LinearTrackModel,
) -> Result<(Vec<Vec<f64>>, Vec<Sign>), TrainError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for track in dataset.split(split) {
        if track.frames.cols() != model.dim() {
            return Err(ClassifyError::DimensionMismatch { expected: model.dim(), found: track.frames.cols() }.into());
        }
        xs.push(pool_track(track, model.pooling, model.normalize)?.values);
        ys.push(track.label);
    }
    if xs.is_empty() {
        return Err(TrainError::EmptySplit(split));
    }
    Ok((xs, ys))
}

fn mean_objective(model: &LinearTrackModel, xs: &[Vec<f64>], ys: &[Sign], l2_lambda: f64) -> f64 {
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(z, y)| {
            let slack = 1.0 - y.as_f64() * (dot(&model.weights, z) + model.bias);
            slack.max(0.0)
        })
        .sum::<f64>()
        / xs.len() as f64;
    hinge + 0.5 * l2_lambda * dot(&model.weights, &model.weights)
}

fn auc_of(model: &LinearTrackModel, xs: &[Vec<f64>], ys: &[Sign]) -> Result<f64, MetricError> {
    let scored: Vec<(f64, Sign)> = xs.iter().zip(ys).map(|(z, y)| (dot(&model.weights, z) + model.bias, *y)).collect();
    roc_auc(&scored)
}

/// Mini-batch subgradient descent on the mean regularized hinge loss, with a
/// constant step (scaled by [`BIAS_STEP_SCALE`] for the bias).
///
/// The training order is reshuffled every epoch from a stream seeded only by
/// `config.seed`. After every epoch the validation AUC is measured, and the
/// checkpoint with the highest value (earliest on ties, the initial model
/// included) is returned.
pub fn train(
    dataset: &LabeledTrackSet,
    config: &TrainConfig,
    init: LinearTrackModel,
) -> Result<TrainOutcome, TrainError> {
    if !(config.learning_rate.is_finite() && config.learning_rate > 0.0) {
        return Err(TrainError::Config("learning_rate"));
    }
    if config.epochs == 0 {
        return Err(TrainError::Config("epochs"));
    }
    if !(config.l2_lambda.is_finite() && config.l2_lambda >= 0.0) {
        return Err(TrainError::Config("l2_lambda"));
    }
    if config.batch_size == 0 {
        return Err(TrainError::Config("batch_size"));
    }
    if !init.is_finite() {
        return Err(TrainError::DivergenceDetected { epoch: 0 });
    }

    let (train_x, train_y) = pooled_split(dataset, Split::Train, &init)?;
    let (val_x, val_y) = pooled_split(dataset, Split::Val, &init)?;

    let mut model = init;
    let mut log = Vec::with_capacity(config.epochs + 1);
    let initial_loss = mean_objective(&model, &train_x, &train_y, config.l2_lambda);
    if !initial_loss.is_finite() {
        return Err(TrainError::DivergenceDetected { epoch: 0 });
    }
    let initial_auc = auc_of(&model, &val_x, &val_y)?;
    log.push(EpochLog { epoch: 0, train_loss: initial_loss, val_auc: initial_auc });
    let mut best = (initial_auc, 0, model.clone());

    let mut rng = StreamRng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    let mut grad_w = vec![0.0; model.dim()];
    let lr = config.learning_rate;
    let lambda = config.l2_lambda;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let scale = 1.0 / batch.len() as f64;
            for (g, w) in grad_w.iter_mut().zip(&model.weights) {
                *g = lambda * w;
            }
            let mut grad_b = 0.0;
            for &i in batch {
                let z = &train_x[i];
                let y = train_y[i].as_f64();
                if 1.0 - y * (dot(&model.weights, z) + model.bias) > 0.0 {
                    for (g, zj) in grad_w.iter_mut().zip(z) {
                        *g -= scale * y * zj;
                    }
                    grad_b -= scale * y;
                }
            }
            for (w, g) in model.weights.iter_mut().zip(&grad_w) {
                *w -= lr * g;
            }
            model.bias -= lr * BIAS_STEP_SCALE * grad_b;
        }

        let train_loss = mean_objective(&model, &train_x, &train_y, lambda);
        if !train_loss.is_finite() || !model.is_finite() {
            return Err(TrainError::DivergenceDetected { epoch });
        }
        let val_auc = auc_of(&model, &val_x, &val_y)?;
        log.push(EpochLog { epoch, train_loss, val_auc });
        if val_auc > best.0 {
            best = (val_auc, epoch, model.clone());
        }
    }

    Ok(TrainOutcome { model: best.2, best_epoch: best.1, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actor::EventRef;
    use crate::dataset::LabeledTrack;
    use alloc::string::ToString;
    use alloc::vec::Vec;

    fn track(rows: &[&[f64]], label: Sign) -> FaceTrack {
        let cols = rows.first().map_or(0, |r| r.len());
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        FaceTrack {
            event_ref: EventRef { episode: "e".to_string(), round: 1 },
            frames: Matrix::from_rows(cols, &rows).unwrap(),
            true_emotions: None,
            label,
        }
    }

    /// One-hot "centroids" so each frame's emotion is its argmax coordinate.
    fn one_hot_classifier() -> NearestCentroid {
        let mut m = Matrix::zeros(7, 7);
        for i in 0..7 {
            m.row_mut(i)[i] = 1.0;
        }
        NearestCentroid::new(m).unwrap()
    }

    fn frame_of(e: Emotion) -> Vec<f64> {
        let mut f = vec![0.0; 7];
        f[e.index()] = 1.0;
        f
    }

    fn emotion_track(emotions: &[Emotion]) -> FaceTrack {
        let frames: Vec<Vec<f64>> = emotions.iter().map(|e| frame_of(*e)).collect();
        let refs: Vec<&[f64]> = frames.iter().map(Vec::as_slice).collect();
        track(&refs, Sign::Plus)
    }

    #[test]
    fn voting_examples() {
        use Emotion::*;
        let fec = one_hot_classifier();
        let map = ValenceMap::default();
        let all_happy = emotion_track(&[Happiness; 7]);
        assert_eq!(voting_score(&all_happy, &fec, &map), Ok(1.0));

        let mixed = emotion_track(&[Happiness, Sadness, Neutral, Happiness, Sadness, Neutral, Happiness]);
        let s = voting_score(&mixed, &fec, &map).unwrap();
        assert!((s - 1.0 / 7.0).abs() < 1e-15);
        assert_eq!(voting_label(s), Sign::Plus);

        let neutral = emotion_track(&[Neutral; 7]);
        let s = voting_score(&neutral, &fec, &map).unwrap();
        assert_eq!(s, 0.0);
        assert_eq!(voting_label(s), Sign::Minus);

        let empty = track(&[], Sign::Plus);
        assert_eq!(voting_score(&empty, &fec, &map), Err(ClassifyError::EmptyTrack));
    }

    #[test]
    fn adding_neutral_frames_keeps_strict_vote() {
        use Emotion::*;
        let fec = one_hot_classifier();
        let map = ValenceMap::default();
        let base = [Happiness, Happiness, Anger];
        let s0 = voting_score(&emotion_track(&base), &fec, &map).unwrap();
        let mut longer = base.to_vec();
        longer.extend([Neutral, Surprise]);
        let s1 = voting_score(&emotion_track(&longer), &fec, &map).unwrap();
        assert_eq!(s0 * 3.0, s1 * 5.0);
        assert_eq!(voting_label(s0), voting_label(s1));
    }

    #[test]
    fn nearest_centroid_ties_go_to_lowest_index() {
        let fec = NearestCentroid::new(Matrix::zeros(7, 3)).unwrap();
        assert_eq!(fec.classify(&[1.0, 2.0, 3.0]), Emotion::Anger);
    }

    #[test]
    fn valence_map_must_partition() {
        use Emotion::*;
        assert!(ValenceMap::from_sets(&[Happiness], &[Sadness], &[]).is_err());
        assert!(ValenceMap::from_sets(&[Happiness, Sadness], &[Sadness, Fear, Anger, Disgust], &[Neutral, Surprise])
            .is_err());
        let m = ValenceMap::default();
        assert_eq!(m.vote(Happiness), Some(Sign::Plus));
        assert_eq!(m.vote(Disgust), Some(Sign::Minus));
        assert_eq!(m.vote(Surprise), None);
    }

    #[test]
    fn pooling_examples() {
        let t = track(&[&[1.0, 3.0], &[3.0, 1.0]], Sign::Plus);
        let p = pool_track(&t, PoolingMode::Average, Normalization::L1).unwrap();
        assert_eq!(p.values, vec![0.5, 0.5]);
        let p = pool_track(&t, PoolingMode::Max, Normalization::None).unwrap();
        assert_eq!(p.values, vec![3.0, 3.0]);

        let constant = track(&[&[2.0, -6.0], &[2.0, -6.0], &[2.0, -6.0]], Sign::Plus);
        for mode in [PoolingMode::Average, PoolingMode::Max] {
            let p = pool_track(&constant, mode, Normalization::L1).unwrap();
            assert_eq!(p.values, vec![0.25, -0.75]);
        }

        let zero = track(&[&[0.0, 0.0]], Sign::Plus);
        let p = pool_track(&zero, PoolingMode::Average, Normalization::L1).unwrap();
        assert!(p.zero_norm);
        assert_eq!(p.values, vec![0.0, 0.0]);

        let embedded = pool_embedded(&t, &Identity, PoolingMode::Average, Normalization::L1).unwrap();
        assert_eq!(embedded, pool_track(&t, PoolingMode::Average, Normalization::L1).unwrap());
    }

    #[test]
    fn predict_examples() {
        let t = track(&[&[1.0, 3.0], &[3.0, 1.0]], Sign::Plus);
        let constant =
            LinearTrackModel { bias: 0.5, ..LinearTrackModel::zeros(2, PoolingMode::Average, Normalization::L1) };
        assert_eq!(constant.predict(&t), Ok(0.5));

        let model = LinearTrackModel {
            weights: vec![2.0, -1.0],
            bias: 0.25,
            pooling: PoolingMode::Average,
            normalize: Normalization::L1,
        };
        let direct = model.predict(&t).unwrap();
        let pooled = pool_track(&t, model.pooling, model.normalize).unwrap();
        assert_eq!(direct, dot(&model.weights, &pooled.values) + model.bias);

        let scaled = track(&[&[3.5, 10.5], &[10.5, 3.5]], Sign::Plus);
        assert!((model.predict(&scaled).unwrap() - direct).abs() < 1e-15);

        let wrong = track(&[&[1.0, 2.0, 3.0]], Sign::Plus);
        assert_eq!(model.predict(&wrong), Err(ClassifyError::DimensionMismatch { expected: 2, found: 3 }));
    }

    #[test]
    fn hinge_examples() {
        let model = LinearTrackModel {
            weights: vec![1.0, 0.0],
            bias: 0.0,
            pooling: PoolingMode::Average,
            normalize: Normalization::None,
        };
        let h = hinge_objective(&model, &[2.0, 5.0], Sign::Plus, 0.0).unwrap();
        assert_eq!(h.value, 0.0);
        assert_eq!(h.grad_weights, vec![0.0, 0.0]);
        assert_eq!(h.grad_bias, 0.0);

        let zero = LinearTrackModel::zeros(2, PoolingMode::Average, Normalization::None);
        let h = hinge_objective(&zero, &[2.0, -5.0], Sign::Minus, 0.0).unwrap();
        assert_eq!(h.value, 1.0);
        assert_eq!(h.grad_weights, vec![2.0, -5.0]);
        assert_eq!(h.grad_bias, 1.0);

        // Exactly on the margin: zero-loss branch.
        let h = hinge_objective(&model, &[1.0, 0.0], Sign::Plus, 0.0).unwrap();
        assert_eq!((h.value, h.grad_bias), (0.0, 0.0));
    }

    fn toy_set() -> LabeledTrackSet {
        let mk = |x: f64, y: f64, label, split| LabeledTrack { track: track(&[&[x, y], &[x, y]], label), split };
        use Sign::*;
        use Split::*;
        LabeledTrackSet {
            feature_dim: 2,
            frames_per_track: 2,
            tracks: vec![
                mk(2.0, 1.0, Plus, Train),
                mk(3.0, -1.0, Plus, Train),
                mk(2.5, 0.0, Plus, Train),
                mk(-2.0, 1.0, Minus, Train),
                mk(-3.0, 0.5, Minus, Train),
                mk(-1.5, -1.0, Minus, Train),
                mk(1.0, 0.0, Plus, Val),
                mk(-1.0, 0.0, Minus, Val),
            ],
        }
    }

    #[test]
    fn separable_toy_reaches_zero_loss() {
        let cfg = TrainConfig { learning_rate: 0.05, epochs: 200, l2_lambda: 0.0, batch_size: 2, seed: 1 };
        let init = LinearTrackModel::zeros(2, PoolingMode::Average, Normalization::None);
        let out = train(&toy_set(), &cfg, init.clone()).unwrap();
        assert_eq!(out.log.len(), 201);
        assert_eq!(out.log.last().unwrap().train_loss, 0.0);
        assert_eq!(out.log[0].val_auc, 0.5);
        assert_eq!(out.model.dim(), 2);
        let again = train(&toy_set(), &cfg, init).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn training_errors() {
        let init = LinearTrackModel::zeros(2, PoolingMode::Average, Normalization::None);
        let mut ds = toy_set();
        ds.tracks.retain(|t| t.split != Split::Val);
        assert_eq!(train(&ds, &TrainConfig::default(), init.clone()), Err(TrainError::EmptySplit(Split::Val)));
        let huge = TrainConfig { learning_rate: 1e308, epochs: 5, l2_lambda: 1.0, batch_size: 1, seed: 0 };
        assert!(matches!(train(&toy_set(), &huge, init.clone()), Err(TrainError::DivergenceDetected { .. })));
        let bad = TrainConfig { batch_size: 0, ..TrainConfig::default() };
        assert_eq!(train(&toy_set(), &bad, init), Err(TrainError::Config("batch_size")));
    }
}
