//! Weak supervision of facial-reaction valence from game-show events.
//!
//! Game events are labeled by an exact rule on the prize set, synthetic face
//! tracks are generated per event, and two track classifiers (per-frame
//! emotion voting and a pooled linear model) are trained and evaluated.
//! Everything here is `no_std` with `alloc`; file formats, the annotation
//! service and the command line live in the `valence` crate.

#![no_std]

extern crate alloc;

pub mod actor;
pub mod classify;
pub mod dataset;
pub mod episode;
pub mod game;
pub mod matrix;
pub mod metrics;
pub mod seed;
pub mod simulator;

pub use actor::{Actor, ActorConfig, Emotion, EventRef, FaceTrack};
pub use classify::{LinearTrackModel, Normalization, PoolingMode, TrainConfig};
pub use dataset::{generate_dataset, LabeledTrackSet, Split, SplitRatios};
pub use episode::{replay_episode, validate_episode, Action, Episode};
pub use game::{BoxEvent, ExactMean, GameState, Money, PrizeSet, Sign};
pub use simulator::{simulate_episode, SimConfig};
