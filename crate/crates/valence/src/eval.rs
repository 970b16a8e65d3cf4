//! Train the pooling model, score both predictors on validation and test,
//! and render the evaluation report.

use std::fmt::Write as _;

use serde::Serialize;
use valence_core::actor::emotion_centroids;
use valence_core::classify::{train, voting_score, EpochLog, NearestCentroid, TrainError, ValenceMap};
use valence_core::metrics::{accuracy, emotion_distributions, roc_auc, EmotionDistributionPair, MetricError};
use valence_core::{ActorConfig, Emotion, LabeledTrackSet, LinearTrackModel, Sign, Split};

use crate::config::PipelineConfig;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("dataset has feature_dim {dataset} but the actor config has {config}")]
    DimensionMismatch { dataset: usize, config: usize },
    #[error("actor config: {0}")]
    Actor(#[from] valence_core::actor::ActorError),
    #[error("training: {0}")]
    Train(#[from] TrainError),
    #[error("{split} split: {source}")]
    Metric { split: Split, source: MetricError },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitScores {
    pub auc: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodScores {
    pub val: SplitScores,
    pub test: SplitScores,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub feature_dim: usize,
    pub frames_per_track: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub positive_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionReport {
    /// Split whose tracks were partitioned by predicted label.
    pub split: Split,
    pub emotions: Vec<&'static str>,
    pub good: Vec<f64>,
    pub bad: Vec<f64>,
    pub good_empty: bool,
    pub bad_empty: bool,
    pub good_tracks: usize,
    pub bad_tracks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingSummary {
    pub best_epoch: usize,
    pub epochs: usize,
    pub log: Vec<EpochLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub dataset: DatasetSummary,
    pub pooling: MethodScores,
    pub voting: MethodScores,
    pub distributions: DistributionReport,
    pub training: TrainingSummary,
}

pub struct Evaluation {
    pub model: LinearTrackModel,
    pub report: EvalReport,
    pub pair: EmotionDistributionPair,
}

/// Frame classifier built from the generator's emotion centroids.
pub fn frame_classifier(actor: &ActorConfig) -> Result<NearestCentroid, EvalError> {
    let centroids = emotion_centroids(actor)?;
    Ok(NearestCentroid::new(centroids).expect("seven centroids"))
}

/// AUC ranks raw scores; accuracy uses their sign, with zero predicting bad
/// for both methods.
fn scores(scored: &[(f64, Sign)], split: Split) -> Result<SplitScores, EvalError> {
    let wrap = |source| EvalError::Metric { split, source };
    let auc = roc_auc(scored).map_err(wrap)?;
    let pairs: Vec<(Sign, Sign)> = scored.iter().map(|&(s, y)| (Sign::of_score(s), y)).collect();
    Ok(SplitScores { auc, accuracy: accuracy(&pairs).map_err(wrap)? })
}

/// Trains on the train split, selects on val, and reports val and test.
pub fn train_and_evaluate(tracks: &LabeledTrackSet, config: &PipelineConfig) -> Result<Evaluation, EvalError> {
    if tracks.feature_dim != config.actor.feature_dim {
        return Err(EvalError::DimensionMismatch { dataset: tracks.feature_dim, config: config.actor.feature_dim });
    }
    let fec = frame_classifier(&config.actor)?;
    let map = ValenceMap::default();
    let init = LinearTrackModel::zeros(tracks.feature_dim, config.model.pooling, config.model.normalize);
    let outcome = train(tracks, &config.train, init)?;
    let model = outcome.model;

    let mut pooling = Vec::new();
    let mut voting = Vec::new();
    for split in [Split::Val, Split::Test] {
        let wrap = |source: valence_core::classify::ClassifyError| EvalError::Metric { split, source: source.into() };
        let mut p = Vec::new();
        let mut v = Vec::new();
        for t in tracks.split(split) {
            p.push((model.predict(t).map_err(wrap)?, t.label));
            v.push((voting_score(t, &fec, &map).map_err(wrap)?, t.label));
        }
        pooling.push(scores(&p, split)?);
        voting.push(scores(&v, split)?);
    }

    let test: Vec<_> = tracks.split(Split::Test).collect();
    let pair = emotion_distributions(test.iter().copied(), &model, &fec)
        .map_err(|source| EvalError::Metric { split: Split::Test, source })?;
    let good_tracks = test.iter().filter(|t| model.predict_label(t).is_ok_and(|s| s == Sign::Plus)).count();

    let total = tracks.tracks.len().max(1);
    let positives = tracks.tracks.iter().filter(|t| t.track.label == Sign::Plus).count();
    let [pv, pt]: [SplitScores; 2] = pooling.try_into().expect("two splits");
    let [vv, vt]: [SplitScores; 2] = voting.try_into().expect("two splits");
    let report = EvalReport {
        dataset: DatasetSummary {
            feature_dim: tracks.feature_dim,
            frames_per_track: tracks.frames_per_track,
            train: tracks.count(Split::Train),
            val: tracks.count(Split::Val),
            test: tracks.count(Split::Test),
            positive_rate: positives as f64 / total as f64,
        },
        pooling: MethodScores { val: pv, test: pt },
        voting: MethodScores { val: vv, test: vt },
        distributions: DistributionReport {
            split: Split::Test,
            emotions: Emotion::ALL.iter().map(|e| e.name()).collect(),
            good: pair.good.to_vec(),
            bad: pair.bad.to_vec(),
            good_empty: pair.good_empty,
            bad_empty: pair.bad_empty,
            good_tracks,
            bad_tracks: test.len() - good_tracks,
        },
        training: TrainingSummary { best_epoch: outcome.best_epoch, epochs: config.train.epochs, log: outcome.log },
    };
    Ok(Evaluation { model, report, pair })
}

impl EvalReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report is always representable")
    }

    /// Plot table of the two emotion distributions: `partition,emotion,mass`.
    pub fn distribution_csv(&self) -> String {
        let mut out = String::from("partition,emotion,mass\n");
        for (name, row) in [("good", &self.distributions.good), ("bad", &self.distributions.bad)] {
            for (e, m) in self.distributions.emotions.iter().zip(row) {
                let _ = writeln!(out, "{name},{e},{m}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use valence_core::{generate_dataset, SplitRatios};

    #[test]
    fn report_is_deterministic_and_complete() {
        let mut cfg = PipelineConfig::default();
        cfg.train.epochs = 5;
        let ds = generate_dataset(&cfg.simulator, 20, &cfg.actor, SplitRatios::default()).unwrap();
        let a = train_and_evaluate(&ds.tracks, &cfg).unwrap();
        let b = train_and_evaluate(&ds.tracks, &cfg).unwrap();
        assert_eq!(a.report.to_toml(), b.report.to_toml());
        let text = a.report.to_toml();
        for key in ["[pooling.val]", "[pooling.test]", "[voting.val]", "[voting.test]", "[distributions]"] {
            assert!(text.contains(key), "{key} missing from\n{text}");
        }
        let csv = a.report.distribution_csv();
        assert_eq!(csv.lines().count(), 15);
        assert!(csv.contains("good,happiness,"));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mut cfg = PipelineConfig::default();
        let ds = generate_dataset(&cfg.simulator, 5, &cfg.actor, SplitRatios::default()).unwrap();
        cfg.actor.feature_dim = 32;
        assert!(matches!(
            train_and_evaluate(&ds.tracks, &cfg),
            Err(EvalError::DimensionMismatch { dataset: 64, config: 32 })
        ));
    }
}
