//! Labeled track datasets built from simulated episodes.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::actor::{Actor, ActorConfig, ActorError, FaceTrack};
use crate::episode::{replay_episode, Episode, ReplayError};
use crate::seed;
use crate::simulator::{simulate_episode, ConfigError, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "lowercase"))]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn from_name(name: &str) -> Option<Split> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Percentages of episodes assigned to train and validation; the rest is test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct SplitRatios {
    pub train_percent: u32,
    pub val_percent: u32,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios { train_percent: 60, val_percent: 20 }
    }
}

impl SplitRatios {
    /// Split of episode `index` out of `n`: the first `floor(n * train%)`
    /// episodes train, the next `floor(n * val%)` validate, the rest test.
    pub fn split_of(&self, index: usize, n: usize) -> Split {
        let n_train = n * self.train_percent as usize / 100;
        let n_val = n * self.val_percent as usize / 100;
        if index < n_train {
            Split::Train
        } else if index < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrack {
    pub track: FaceTrack,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrackSet {
    pub feature_dim: usize,
    pub frames_per_track: usize,
    pub tracks: Vec<LabeledTrack>,
}

impl LabeledTrackSet {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &FaceTrack> + '_ {
        self.tracks.iter().filter(move |t| t.split == split).map(|t| &t.track)
    }

    pub fn count(&self, split: Split) -> usize {
        self.tracks.iter().filter(|t| t.split == split).count()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("episode count must be at least 1")]
    NoEpisodes,
    #[error(transparent)]
    Sim(#[from] ConfigError),
    #[error(transparent)]
    Actor(#[from] ActorError),
    #[error("episode {episode}: {source}")]
    Replay { episode: usize, source: ReplayError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDataset {
    pub episodes: Vec<Episode>,
    pub tracks: LabeledTrackSet,
}

/// Id given to the `index`-th generated episode.
pub fn episode_id(index: usize) -> alloc::string::String {
    format!("ep{index:05}")
}

/// Simulates `n_episodes` episodes and emits one track per box event.
///
/// Episode `i` uses the simulator seed `mix(config.seed, i)` and the actor
/// stream `mix(actor.seed, i)`, so episodes are independent of each other and
/// of generation order.
pub fn generate_dataset(
    config: &SimConfig,
    n_episodes: usize,
    actor: &ActorConfig,
    ratios: SplitRatios,
) -> Result<GeneratedDataset, DatasetError> {
    if n_episodes == 0 {
        return Err(DatasetError::NoEpisodes);
    }
    config.validate()?;
    let actor = Actor::new(actor.clone())?;

    let mut episodes = Vec::with_capacity(n_episodes);
    let mut tracks = Vec::new();
    for i in 0..n_episodes {
        let mut episode = simulate_episode(&config.with_seed(seed::mix_seed(config.seed, i as u64)))?;
        episode.id = episode_id(i);
        let events =
            replay_episode(&episode, config.delta).map_err(|source| DatasetError::Replay { episode: i, source })?;
        let split = ratios.split_of(i, n_episodes);
        let mut rng = seed::stream(actor.config().seed, i as u64);
        for ev in &events {
            tracks.push(LabeledTrack { track: actor.emit_track(ev, &episode.id, &mut rng), split });
        }
        episodes.push(episode);
    }

    Ok(GeneratedDataset {
        episodes,
        tracks: LabeledTrackSet {
            feature_dim: actor.config().feature_dim,
            frames_per_track: actor.config().frames_per_track,
            tracks,
        },
    })
}
