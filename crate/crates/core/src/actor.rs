//! Synthetic reactor: maps event valence to a per-frame emotion sequence and
//! emotions to noisy feature vectors around fixed per-emotion centroids.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::game::{BoxEvent, Sign};
use crate::matrix::{dot, Matrix};
use crate::seed;

/// The six basic emotions plus neutral, in their canonical index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "lowercase"))]
pub enum Emotion {
    Anger = 0,
    Disgust = 1,
    Fear = 2,
    Happiness = 3,
    Sadness = 4,
    Surprise = 5,
    Neutral = 6,
}

impl Emotion {
    pub const COUNT: usize = 7;

    pub const ALL: [Emotion; 7] = [
        Emotion::Anger,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Happiness,
        Emotion::Sadness,
        Emotion::Surprise,
        Emotion::Neutral,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Emotion> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Happiness => "happiness",
            Emotion::Sadness => "sadness",
            Emotion::Surprise => "surprise",
            Emotion::Neutral => "neutral",
        }
    }

    pub fn from_name(name: &str) -> Option<Emotion> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Emotion probabilities indexed by `Emotion::index`.
pub type EmotionRow = [f64; Emotion::COUNT];

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct ActorConfig {
    pub emotion_given_good: EmotionRow,
    pub emotion_given_bad: EmotionRow,
    pub frames_per_track: usize,
    /// Probability that a frame keeps the previous frame's emotion.
    pub persistence: f64,
    pub feature_dim: usize,
    pub centroid_separation: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for ActorConfig {
    fn default() -> Self {
        // anger, disgust, fear, happiness, sadness, surprise, neutral
        ActorConfig {
            emotion_given_good: [0.03, 0.02, 0.02, 0.55, 0.03, 0.20, 0.15],
            emotion_given_bad: [0.15, 0.08, 0.10, 0.02, 0.25, 0.20, 0.20],
            frames_per_track: 7,
            persistence: 0.5,
            feature_dim: 64,
            centroid_separation: 1.0,
            noise_sigma: 0.7,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActorError {
    #[error("feature dimension {0} is smaller than the 7 emotion centroids")]
    DimensionTooSmall(usize),
    #[error("invalid actor config field `{field}`: {reason}")]
    Config { field: &'static str, reason: &'static str },
}

fn check_row(row: &EmotionRow, field: &'static str) -> Result<(), ActorError> {
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(ActorError::Config { field, reason: "probabilities must be finite and non-negative" });
    }
    let total: f64 = row.iter().sum();
    if libm::fabs(total - 1.0) > 1e-12 {
        return Err(ActorError::Config { field, reason: "probabilities must sum to 1" });
    }
    Ok(())
}

impl ActorConfig {
    pub fn validate(&self) -> Result<(), ActorError> {
        check_row(&self.emotion_given_good, "emotion_given_good")?;
        check_row(&self.emotion_given_bad, "emotion_given_bad")?;
        if self.frames_per_track == 0 {
            return Err(ActorError::Config { field: "frames_per_track", reason: "must be positive" });
        }
        if !(0.0..=1.0).contains(&self.persistence) {
            return Err(ActorError::Config { field: "persistence", reason: "must lie in [0, 1]" });
        }
        if self.feature_dim < Emotion::COUNT {
            return Err(ActorError::DimensionTooSmall(self.feature_dim));
        }
        if !self.centroid_separation.is_finite() || self.centroid_separation < 0.0 {
            return Err(ActorError::Config { field: "centroid_separation", reason: "must be finite and non-negative" });
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(ActorError::Config { field: "noise_sigma", reason: "must be finite and non-negative" });
        }
        Ok(())
    }

    pub fn row(&self, valence: Sign) -> &EmotionRow {
        match valence {
            Sign::Plus => &self.emotion_given_good,
            Sign::Minus => &self.emotion_given_bad,
        }
    }
}

/// Stream index reserved for the centroid directions.
const CENTROID_STREAM: u64 = u64::MAX;

/// Seven orthonormal directions scaled by the configured separation.
///
/// Directions come from modified Gram-Schmidt (applied twice) on a Gaussian
/// matrix drawn from a stream fixed by `config.seed`.
pub fn emotion_centroids(config: &ActorConfig) -> Result<Matrix, ActorError> {
    let d = config.feature_dim;
    if d < Emotion::COUNT {
        return Err(ActorError::DimensionTooSmall(d));
    }
    let mut rng = seed::stream(config.seed, CENTROID_STREAM);
    let mut basis = Matrix::zeros(Emotion::COUNT, d);
    for i in 0..Emotion::COUNT {
        for v in basis.row_mut(i).iter_mut() {
            *v = rng.sample(StandardNormal);
        }
    }
    for i in 0..Emotion::COUNT {
        for _pass in 0..2 {
            for j in 0..i {
                let proj = dot(basis.row(i), basis.row(j));
                let (done, rest) = split_rows(&mut basis, j, i);
                for (x, q) in rest.iter_mut().zip(done) {
                    *x -= proj * q;
                }
            }
        }
        let norm = libm::sqrt(dot(basis.row(i), basis.row(i)));
        for x in basis.row_mut(i) {
            *x /= norm;
        }
    }
    for i in 0..Emotion::COUNT {
        for x in basis.row_mut(i) {
            *x *= config.centroid_separation;
        }
    }
    Ok(basis)
}

/// Borrows row `j` immutably and row `i` mutably, `j < i`.
fn split_rows(m: &mut Matrix, j: usize, i: usize) -> (Vec<f64>, &mut [f64]) {
    let done = m.row(j).to_vec();
    (done, m.row_mut(i))
}

fn draw(row: &EmotionRow, rng: &mut impl Rng) -> Emotion {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return Emotion::ALL[i];
        }
    }
    // Rounding left `acc` just below 1; take the last emotion with mass.
    let last = row.iter().rposition(|p| *p > 0.0).unwrap_or(Emotion::COUNT - 1);
    Emotion::ALL[last]
}

/// First frame from the valence's row; later frames keep the previous
/// emotion with probability `persistence`, otherwise redraw from the row.
pub fn sample_emotion_sequence(valence: Sign, config: &ActorConfig, rng: &mut impl Rng) -> Vec<Emotion> {
    let row = config.row(valence);
    let mut out = Vec::with_capacity(config.frames_per_track);
    for t in 0..config.frames_per_track {
        let keep = t > 0 && rng.random::<f64>() < config.persistence;
        let e = if keep { out[t - 1] } else { draw(row, rng) };
        out.push(e);
    }
    out
}

/// Which event a track reacts to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EventRef {
    pub episode: String,
    pub round: u32,
}

/// `frames` is `frames_per_track x feature_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceTrack {
    pub event_ref: EventRef,
    pub frames: Matrix,
    pub true_emotions: Option<Vec<Emotion>>,
    pub label: Sign,
}

impl FaceTrack {
    pub fn len(&self) -> usize {
        self.frames.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.rows() == 0
    }
}

/// A validated config together with its centroids.
#[derive(Debug, Clone)]
pub struct Actor {
    config: ActorConfig,
    centroids: Matrix,
}

impl Actor {
    pub fn new(config: ActorConfig) -> Result<Self, ActorError> {
        config.validate()?;
        let centroids = emotion_centroids(&config)?;
        Ok(Actor { config, centroids })
    }

    pub fn config(&self) -> &ActorConfig {
        &self.config
    }

    pub fn centroids(&self) -> &Matrix {
        &self.centroids
    }

    /// Frame `t` is the centroid of emotion `t` plus i.i.d. Gaussian noise.
    pub fn emit_track(&self, event: &BoxEvent, episode: &str, rng: &mut impl Rng) -> FaceTrack {
        let emotions = sample_emotion_sequence(event.label, &self.config, rng);
        let mut frames = Matrix::zeros(emotions.len(), self.config.feature_dim);
        for (t, e) in emotions.iter().enumerate() {
            let centroid = self.centroids.row(e.index());
            for (x, c) in frames.row_mut(t).iter_mut().zip(centroid) {
                let z: f64 = rng.sample(StandardNormal);
                *x = c + self.config.noise_sigma * z;
            }
        }
        FaceTrack {
            event_ref: EventRef { episode: episode.into(), round: event.round },
            frames,
            true_emotions: Some(emotions),
            label: event.label,
        }
    }
}
